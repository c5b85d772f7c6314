//! System description: energies, real coupling operators, baths, Bohr
//! frequencies and their grouping into clusters.
//!
//! Level indices are zero-based everywhere in the code. A pair `(a, b)`
//! labels the Bohr frequency `E_a - E_b`; the matching component of a jump
//! operator is `|b><a|`, i.e. the transition out of `a` into `b`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, RMatrix, Result};

/// System operator coupled linearly to one bath.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub bath_id: String,
    /// Dimensionless, real symmetric, expressed in the energy eigenbasis.
    pub matrix: RMatrix,
}

impl CouplingSpec {
    pub fn new(bath_id: impl Into<String>, matrix: RMatrix) -> Self {
        Self {
            bath_id: bath_id.into(),
            matrix,
        }
    }
}

/// Bosonic bath with Ohmic spectral density `J(ω) = a ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub bath_id: String,
    pub temperature: f64,
    pub ohmic_a: f64,
}

impl BathSpec {
    pub fn new(bath_id: impl Into<String>, temperature: f64, ohmic_a: f64) -> Self {
        Self {
            bath_id: bath_id.into(),
            temperature,
            ohmic_a,
        }
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// Unvalidated system: eigenenergies plus one coupling operator per bath.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub energies: Vec<f64>,
    pub couplings: Vec<CouplingSpec>,
}

impl SystemModel {
    pub fn new(energies: Vec<f64>, couplings: Vec<CouplingSpec>) -> Self {
        Self {
            energies,
            couplings,
        }
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }
}

/// A model that passed [`validate_model`], with its baths resolved.
///
/// Baths keep the order they were supplied in; that order is the index
/// space of counting fields and rate tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedModel {
    model: SystemModel,
    baths: Vec<BathSpec>,
    bath_coupling: Vec<Option<usize>>,
}

impl CheckedModel {
    pub fn levels(&self) -> usize {
        self.model.levels()
    }

    pub fn energies(&self) -> &[f64] {
        &self.model.energies
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn bath_index(&self, id: &str) -> Option<usize> {
        self.baths.iter().position(|b| b.bath_id == id)
    }

    /// Coupling operator attached to bath `j`, if any.
    pub fn coupling(&self, j: usize) -> Option<&RMatrix> {
        self.bath_coupling[j].map(|c| &self.model.couplings[c].matrix)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.baths.iter().map(BathSpec::beta).collect()
    }

    /// Largest golden-rule scale `a_j T_j` over all baths.
    pub fn rate_scale(&self) -> f64 {
        self.baths
            .iter()
            .map(|b| b.ohmic_a * b.temperature)
            .fold(0.0, f64::max)
    }
}

/// Checks the model invariants and binds each coupling to its bath.
pub fn validate_model(model: SystemModel, baths: Vec<BathSpec>) -> Result<CheckedModel> {
    let n = model.levels();
    if n < 2 {
        return Err(Error::TooFewLevels(n));
    }
    if model.energies.iter().any(|e| !e.is_finite())
        || model.energies.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::UnsortedEnergies);
    }
    for (i, b) in baths.iter().enumerate() {
        if baths[..i].iter().any(|o| o.bath_id == b.bath_id) {
            return Err(Error::DuplicateBath(b.bath_id.clone()));
        }
        for (what, value) in [("temperature", b.temperature), ("ohmic_a", b.ohmic_a)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive {
                    bath: b.bath_id.clone(),
                    what,
                    value,
                });
            }
        }
    }

    let mut bath_coupling = vec![None; baths.len()];
    for (c, coupling) in model.couplings.iter().enumerate() {
        let m = &coupling.matrix;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::CouplingShape {
                bath: coupling.bath_id.clone(),
                rows: m.nrows(),
                cols: m.ncols(),
                levels: n,
            });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for k in (i + 1)..n {
                if (m[(i, k)] - m[(k, i)]).abs() > 1e-14 * scale || !m[(i, k)].is_finite() {
                    return Err(Error::NonSymmetricCoupling {
                        bath: coupling.bath_id.clone(),
                        row: i,
                        col: k,
                    });
                }
            }
        }
        let j = baths
            .iter()
            .position(|b| b.bath_id == coupling.bath_id)
            .ok_or_else(|| Error::UnknownBath(coupling.bath_id.clone()))?;
        if bath_coupling[j].replace(c).is_some() {
            return Err(Error::DuplicateBathCoupling(coupling.bath_id.clone()));
        }
    }

    Ok(CheckedModel {
        model,
        baths,
        bath_coupling,
    })
}

/// One distinct Bohr frequency with every level pair that produces it.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrFrequency {
    pub value: f64,
    /// Pairs `(a, b)` with `E_a - E_b == value` exactly.
    pub pairs: Vec<(usize, usize)>,
}

/// All `N²` ordered pairs grouped by exact frequency, sorted ascending.
pub fn bohr_frequencies(energies: &[f64]) -> Vec<BohrFrequency> {
    let mut by_value: BTreeMap<OrdF64, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, ea) in energies.iter().enumerate() {
        for (b, eb) in energies.iter().enumerate() {
            by_value.entry(OrdF64(ea - eb)).or_default().push((a, b));
        }
    }
    by_value
        .into_iter()
        .map(|(k, pairs)| BohrFrequency { value: k.0, pairs })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        // -0.0 and 0.0 must land in the same bucket
        let norm = |x: f64| if x == 0.0 { 0.0 } else { x };
        norm(self.0).total_cmp(&norm(other.0))
    }
}

/// A group of Bohr frequencies sharing one rate-evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub center: f64,
    pub members: Vec<BohrFrequency>,
}

impl Cluster {
    /// Largest distance of a member from the center.
    pub fn width(&self) -> f64 {
        self.members
            .iter()
            .map(|m| (m.value - self.center).abs())
            .fold(0.0, f64::max)
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().flat_map(|m| m.pairs.iter().copied())
    }
}

/// Partition of every level pair into clusters, closed under negation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    levels: usize,
    clusters: Vec<Cluster>,
    /// `lookup[a * levels + b]` = cluster holding pair `(a, b)`.
    lookup: Vec<usize>,
}

impl ClusterPartition {
    /// Builds and validates a partition from explicit clusters.
    pub fn from_clusters(levels: usize, mut clusters: Vec<Cluster>) -> Result<Self> {
        clusters.sort_by(|x, y| x.center.total_cmp(&y.center));
        let mut lookup = vec![usize::MAX; levels * levels];
        for (k, cluster) in clusters.iter().enumerate() {
            for (a, b) in cluster.pairs() {
                if a >= levels || b >= levels {
                    return Err(Error::InvalidPartition(format!(
                        "pair ({a},{b}) out of range"
                    )));
                }
                if lookup[a * levels + b] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "pair ({a},{b}) appears in two clusters"
                    )));
                }
                lookup[a * levels + b] = k;
            }
        }
        if let Some(missing) = lookup.iter().position(|&k| k == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "pair ({},{}) is not covered",
                missing / levels,
                missing % levels
            )));
        }
        let partition = Self {
            levels,
            clusters,
            lookup,
        };
        for (k, cluster) in partition.clusters.iter().enumerate() {
            let m = partition.mirror(k).ok_or_else(|| {
                Error::InvalidPartition(format!("no mirror cluster for center {}", cluster.center))
            })?;
            if cluster
                .pairs()
                .any(|(a, b)| partition.cluster_of(b, a) != m)
            {
                return Err(Error::InvalidPartition(format!(
                    "cluster at {} is not mirrored at {}",
                    cluster.center, -cluster.center
                )));
            }
        }
        Ok(partition)
    }

    /// Clusters built from groups of nearly degenerate levels.
    ///
    /// `groups[g]` lists the levels of group `g` and `reference[g]` is the
    /// common energy assigned to it; the pair `(a, b)` then falls in the
    /// cluster centred at `reference[g(a)] - reference[g(b)]`.
    pub fn from_level_groups(
        energies: &[f64],
        groups: &[Vec<usize>],
        reference: &[f64],
    ) -> Result<Self> {
        let n = energies.len();
        if groups.len() != reference.len() {
            return Err(Error::InvalidPartition(
                "one reference energy per level group is required".into(),
            ));
        }
        let mut group_of = vec![usize::MAX; n];
        for (g, levels) in groups.iter().enumerate() {
            for &l in levels {
                if l >= n || group_of[l] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "level {l} is missing or assigned twice"
                    )));
                }
                group_of[l] = g;
            }
        }
        if group_of.contains(&usize::MAX) {
            return Err(Error::InvalidPartition("every level needs a group".into()));
        }
        let mut by_center: BTreeMap<OrdF64, BTreeMap<OrdF64, Vec<(usize, usize)>>> =
            BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                let center = reference[group_of[a]] - reference[group_of[b]];
                by_center
                    .entry(OrdF64(center))
                    .or_default()
                    .entry(OrdF64(energies[a] - energies[b]))
                    .or_default()
                    .push((a, b));
            }
        }
        let clusters = by_center
            .into_iter()
            .map(|(c, members)| Cluster {
                center: c.0,
                members: members
                    .into_iter()
                    .map(|(v, pairs)| BohrFrequency { value: v.0, pairs })
                    .collect(),
            })
            .collect();
        Self::from_clusters(n, clusters)
    }

    /// Assigns every frequency to the nearest of the given centers.
    ///
    /// The center set must be closed under negation. Ties go to the center
    /// of smaller magnitude so that the assignment stays mirror symmetric.
    pub fn with_centers(levels: usize, freqs: &[BohrFrequency], centers: &[f64]) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidPartition("no cluster centers given".into()));
        }
        for c in centers {
            if !centers.iter().any(|d| *d == -c) {
                return Err(Error::InvalidPartition(format!(
                    "center {c} has no mirror center"
                )));
            }
        }
        let mut sorted: Vec<f64> = centers.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut clusters: Vec<Cluster> = sorted
            .iter()
            .map(|&center| Cluster {
                center,
                members: Vec::new(),
            })
            .collect();
        for f in freqs {
            let k = (0..clusters.len())
                .min_by(|&i, &j| {
                    let di = (f.value - clusters[i].center).abs();
                    let dj = (f.value - clusters[j].center).abs();
                    di.total_cmp(&dj).then(
                        clusters[i]
                            .center
                            .abs()
                            .total_cmp(&clusters[j].center.abs()),
                    )
                })
                .unwrap_or(0);
            clusters[k].members.push(f.clone());
        }
        clusters.retain(|c| !c.members.is_empty());
        Self::from_clusters(levels, clusters)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, a: usize, b: usize) -> usize {
        self.lookup[a * self.levels + b]
    }

    /// Index of the cluster holding the populations (center 0).
    pub fn zero_cluster(&self) -> usize {
        self.cluster_of(0, 0)
    }

    /// Index of the cluster centred at `-center(k)`.
    pub fn mirror(&self, k: usize) -> Option<usize> {
        let c = self.clusters[k].center;
        self.clusters.iter().position(|o| o.center == -c)
    }

    /// Largest member distance from its center over all clusters.
    pub fn width(&self) -> f64 {
        self.clusters.iter().map(Cluster::width).fold(0.0, f64::max)
    }

    /// Returns a copy with every center replaced by `f(center)`.
    ///
    /// `f` must be odd (`f(-x) == -f(x)`), otherwise the mirror check fails.
    pub fn map_centers(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let clusters = self
            .clusters
            .iter()
            .map(|c| Cluster {
                center: f(c.center),
                members: c.members.clone(),
            })
            .collect();
        Self::from_clusters(self.levels, clusters)
    }
}

/// Single-linkage clustering of Bohr frequencies with gap threshold `epsilon`.
///
/// Distinct values of `|ω|` are sorted and chained whenever consecutive
/// values differ by at most `epsilon`; each chain becomes a cluster at the
/// arithmetic mean of its values together with its negated mirror. The chain
/// containing zero becomes one symmetric cluster centred at zero.
pub fn cluster_frequencies(
    levels: usize,
    freqs: &[BohrFrequency],
    epsilon: f64,
) -> Result<ClusterPartition> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster width must be non-negative, got {epsilon}"
        )));
    }
    let mut magnitudes: Vec<f64> = freqs.iter().map(|f| f.value.abs()).collect();
    magnitudes.sort_by(f64::total_cmp);
    magnitudes.dedup();

    let mut chains: Vec<Vec<f64>> = Vec::new();
    for m in magnitudes {
        match chains.last_mut() {
            Some(chain) if m - chain[chain.len() - 1] <= epsilon => chain.push(m),
            _ => chains.push(vec![m]),
        }
    }

    let mut clusters = Vec::new();
    for chain in chains {
        let contains_zero = chain[0] == 0.0;
        let members_of = |sign: f64| -> Vec<BohrFrequency> {
            freqs
                .iter()
                .filter(|f| {
                    chain.iter().any(|&m| f.value.abs() == m)
                        && (contains_zero || f.value.signum() == sign)
                })
                .cloned()
                .collect()
        };
        if contains_zero {
            clusters.push(Cluster {
                center: 0.0,
                members: members_of(1.0),
            });
        } else {
            let center = chain.iter().sum::<f64>() / chain.len() as f64;
            clusters.push(Cluster {
                center,
                members: members_of(1.0),
            });
            clusters.push(Cluster {
                center: -center,
                members: members_of(-1.0),
            });
        }
    }
    ClusterPartition::from_clusters(levels, clusters)
}

/// Default cluster width: ten times the largest rate scale `a_j T_j`.
pub fn default_epsilon(baths: &[BathSpec]) -> f64 {
    10.0 * baths
        .iter()
        .map(|b| b.ohmic_a * b.temperature)
        .fold(0.0, f64::max)
}

/// Jump operators `S_{α ω̄}` of one coupling, one matrix per cluster.
///
/// The components sum back to `coupling` exactly.
pub fn jump_operators(coupling: &RMatrix, partition: &ClusterPartition) -> Vec<RMatrix> {
    let n = partition.levels();
    let mut out = vec![RMatrix::zeros(n, n); partition.len()];
    for a in 0..n {
        for b in 0..n {
            let v = coupling[(b, a)];
            if v != 0.0 {
                out[partition.cluster_of(a, b)][(b, a)] += v;
            }
        }
    }
    out
}
