//! Tilted Liouvillians `L(χ)` for the Unified, Secular and Redfield master
//! equations.
//!
//! Superoperators act on vectorised density matrices. The basis lists all
//! populations `(a, a)` first, then the retained coherences in
//! lexicographic order. The unitary part contributes `-i(E_a - E_b)` on the
//! diagonal of coherence `(a, b)`; no Lamb shift is included. A bath `j`
//! counts energy flowing into it: every sandwich term `γ A ρ B†` carrying
//! Bohr frequency `ω` is multiplied by `e^{-iωχ_j}`, anticommutator terms
//! are left undressed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{jump_operators, CheckedModel, ClusterPartition};
use crate::rates::{dress_rate, RateTable};
use crate::{CMatrix, CVector, Error, RMatrix, Result, C64};

/// Master equation flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Unified,
    Secular,
    Redfield,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Redfield, Method::Unified, Method::Secular];

    pub fn name(self) -> &'static str {
        match self {
            Method::Unified => "unified",
            Method::Secular => "secular",
            Method::Redfield => "redfield",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unified" | "uqme" => Some(Method::Unified),
            "secular" => Some(Method::Secular),
            "redfield" => Some(Method::Redfield),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One (possibly complex) counting field per bath.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingField(Vec<C64>);

impl CountingField {
    pub fn new(components: Vec<C64>) -> Self {
        Self(components)
    }

    pub fn zeros(baths: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); baths])
    }

    /// Field `chi` on bath `bath`, zero elsewhere.
    pub fn single(baths: usize, bath: usize, chi: C64) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); baths];
        v[bath] = chi;
        Self(v)
    }

    /// Real field `chi` on one bath.
    pub fn real(baths: usize, bath: usize, chi: f64) -> Self {
        Self::single(baths, bath, C64::new(chi, 0.0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[C64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> C64 {
        self.0[j]
    }

    /// The mirrored field `-χ - iβ` entering the fluctuation symmetry.
    pub fn mirrored(&self, betas: &[f64]) -> Self {
        Self(
            self.0
                .iter()
                .zip(betas)
                .map(|(c, b)| -c - C64::new(0.0, *b))
                .collect(),
        )
    }
}

/// Ordered list of the density-matrix entries a generator acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisOrdering {
    levels: usize,
    entries: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
}

impl BasisOrdering {
    /// Populations plus the given coherences, which must come in conjugate
    /// pairs. Order of `coherences` is irrelevant.
    pub fn new(levels: usize, coherences: &[(usize, usize)]) -> Result<Self> {
        let mut coh: Vec<(usize, usize)> = coherences.to_vec();
        coh.sort_unstable();
        coh.dedup();
        for &(a, b) in &coh {
            if a >= levels || b >= levels || a == b {
                return Err(Error::InvalidBasis(format!("({a},{b}) is not a coherence")));
            }
            if coh.binary_search(&(b, a)).is_err() {
                return Err(Error::InvalidBasis(format!(
                    "coherence ({a},{b}) retained without ({b},{a})"
                )));
            }
        }
        let mut entries: Vec<(usize, usize)> = (0..levels).map(|a| (a, a)).collect();
        entries.extend(coh);
        let mut index = vec![None; levels * levels];
        for (k, &(a, b)) in entries.iter().enumerate() {
            index[a * levels + b] = Some(k);
        }
        Ok(Self {
            levels,
            entries,
            index,
        })
    }

    /// All `N²` entries.
    pub fn full(levels: usize) -> Self {
        let coh: Vec<(usize, usize)> = (0..levels)
            .flat_map(|a| (0..levels).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect();
        Self::new(levels, &coh).expect("full basis is always valid")
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn coherences(&self) -> &[(usize, usize)] {
        &self.entries[self.levels..]
    }

    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        self.index[a * self.levels + b]
    }

    /// Row vector `w` with `w·ρ = Tr ρ`.
    pub fn trace_functional(&self) -> CVector {
        CVector::from_fn(self.dim(), |k, _| {
            if k < self.levels {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Populations plus the coherences whose Bohr frequency sits in the zero
/// cluster of `partition`.
pub fn reduced_basis(partition: &ClusterPartition) -> BasisOrdering {
    let n = partition.levels();
    let zero = partition.zero_cluster();
    let coh: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && partition.cluster_of(a, b) == zero)
        .collect();
    BasisOrdering::new(n, &coh).expect("zero cluster is mirror symmetric")
}

/// A tilted generator together with what it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGenerator {
    pub matrix: CMatrix,
    pub basis: BasisOrdering,
    pub method: Method,
    pub chi: CountingField,
}

/// How sandwich coefficients are formed during assembly.
#[derive(Debug, Clone, Copy)]
enum Tilt<'a> {
    /// `γ e^{-iωχ_j}` with the unitary part and anticommutators present.
    Field(&'a [C64]),
    /// `∂ⁿ/∂(iχ_j)ⁿ` at `χ = 0`: `(-ω)ⁿ γ` on bath `j` sandwiches only.
    Derivative(usize, i32),
}

impl Tilt<'_> {
    fn sandwich(self, bath: usize, omega: f64, rate: f64) -> C64 {
        match self {
            Tilt::Field(chi) => dress_rate(rate, omega, chi[bath]),
            Tilt::Derivative(j, n) if j == bath => {
                C64::new(libm::pow(-omega, n as f64) * rate, 0.0)
            }
            Tilt::Derivative(..) => C64::new(0.0, 0.0),
        }
    }

    fn anticommutator(self, rate: f64) -> f64 {
        match self {
            Tilt::Field(_) => rate,
            Tilt::Derivative(..) => 0.0,
        }
    }
}

struct Assembler<'a> {
    basis: &'a BasisOrdering,
    matrix: CMatrix,
}

impl<'a> Assembler<'a> {
    fn new(basis: &'a BasisOrdering) -> Self {
        let d = basis.dim();
        Self {
            basis,
            matrix: CMatrix::zeros(d, d),
        }
    }

    fn add(&mut self, row: (usize, usize), col: (usize, usize), v: C64) {
        if let (Some(r), Some(c)) = (
            self.basis.index_of(row.0, row.1),
            self.basis.index_of(col.0, col.1),
        ) {
            self.matrix[(r, c)] += v;
        }
    }

    fn unitary(&mut self, energies: &[f64]) {
        for (k, &(a, b)) in self.basis.entries().iter().enumerate() {
            self.matrix[(k, k)] += C64::new(0.0, -(energies[a] - energies[b]));
        }
    }

    /// `g A ρ B†` for real `A`, `B`.
    fn sandwich(&mut self, a_op: &RMatrix, b_op: &RMatrix, g: C64) {
        let n = self.basis.levels();
        for a in 0..n {
            for c in 0..n {
                let x = a_op[(a, c)];
                if x == 0.0 {
                    continue;
                }
                for b in 0..n {
                    for d in 0..n {
                        let y = b_op[(b, d)];
                        if y != 0.0 {
                            self.add((a, b), (c, d), g * (x * y));
                        }
                    }
                }
            }
        }
    }

    /// `-g/2 {M, ρ}` for real `M`.
    fn anticommutator(&mut self, m: &RMatrix, g: f64) {
        let n = self.basis.levels();
        let half = -0.5 * g;
        for a in 0..n {
            for c in 0..n {
                let x = m[(a, c)];
                if x == 0.0 {
                    continue;
                }
                let v = C64::new(half * x, 0.0);
                for b in 0..n {
                    // M ρ: (a,b) <- (c,b);  ρ M: (b,c) <- (b,a)
                    self.add((a, b), (c, b), v);
                    self.add((b, c), (b, a), v);
                }
            }
        }
    }
}

fn check_field(model: &CheckedModel, chi: &CountingField) -> Result<()> {
    if chi.len() != model.baths().len() {
        return Err(Error::CountingFieldLength {
            expected: model.baths().len(),
            got: chi.len(),
        });
    }
    Ok(())
}

fn assemble_clustered(
    model: &CheckedModel,
    partition: &ClusterPartition,
    rates: &RateTable,
    basis: &BasisOrdering,
    tilt: Tilt<'_>,
) -> CMatrix {
    let mut asm = Assembler::new(basis);
    if let Tilt::Field(_) = tilt {
        asm.unitary(model.energies());
    }
    for j in 0..model.baths().len() {
        let Some(s) = model.coupling(j) else { continue };
        for (k, jump) in jump_operators(s, partition).iter().enumerate() {
            if jump.iter().all(|x| *x == 0.0) {
                continue;
            }
            let w = partition.clusters()[k].center;
            let rate = rates.get(j, w);
            asm.sandwich(jump, jump, tilt.sandwich(j, w, rate));
            let g = tilt.anticommutator(rate);
            if g != 0.0 {
                asm.anticommutator(&(jump.transpose() * jump), g);
            }
        }
    }
    asm.matrix
}

fn assemble_redfield(
    model: &CheckedModel,
    partition: &ClusterPartition,
    rates: &RateTable,
    basis: &BasisOrdering,
    tilt: Tilt<'_>,
) -> CMatrix {
    let mut asm = Assembler::new(basis);
    if let Tilt::Field(_) = tilt {
        asm.unitary(model.energies());
    }
    for j in 0..model.baths().len() {
        let Some(s) = model.coupling(j) else { continue };
        let jumps: Vec<(f64, RMatrix)> = jump_operators(s, partition)
            .into_iter()
            .zip(partition.clusters())
            .filter(|(m, _)| m.iter().any(|x| *x != 0.0))
            .map(|(m, c)| (c.center, m))
            .collect();
        for (w1, a1) in &jumps {
            let g1 = rates.get(j, *w1);
            let d1 = tilt.sandwich(j, *w1, g1);
            for (w2, a2) in &jumps {
                let g2 = rates.get(j, *w2);
                let d2 = tilt.sandwich(j, *w2, g2);
                // each half of the Bloch-Redfield sandwich carries its own phase
                asm.sandwich(a1, a2, (d1 + d2) * 0.5);
                let g = tilt.anticommutator(0.5 * (g1 + g2));
                if g != 0.0 {
                    asm.anticommutator(&(a2.transpose() * a1), g);
                }
            }
        }
    }
    asm.matrix
}

/// Unified generator on the reduced basis of `partition`.
pub fn build_unified(
    model: &CheckedModel,
    partition: &ClusterPartition,
    rates: &RateTable,
    chi: &CountingField,
) -> Result<TiltedGenerator> {
    check_field(model, chi)?;
    let basis = reduced_basis(partition);
    let matrix = assemble_clustered(
        model,
        partition,
        rates,
        &basis,
        Tilt::Field(chi.components()),
    );
    Ok(TiltedGenerator {
        matrix,
        basis,
        method: Method::Unified,
        chi: chi.clone(),
    })
}

/// Secular generator: the unified construction on the singleton partition.
pub fn build_secular(
    model: &CheckedModel,
    singletons: &ClusterPartition,
    rates: &RateTable,
    chi: &CountingField,
) -> Result<TiltedGenerator> {
    let mut g = build_unified(model, singletons, rates, chi)?;
    g.method = Method::Secular;
    Ok(g)
}

/// Redfield generator restricted to `basis`, built from exact Bohr
/// frequencies (`singletons`).
pub fn build_redfield(
    model: &CheckedModel,
    singletons: &ClusterPartition,
    rates: &RateTable,
    basis: &BasisOrdering,
    chi: &CountingField,
) -> Result<TiltedGenerator> {
    check_field(model, chi)?;
    let matrix = assemble_redfield(
        model,
        singletons,
        rates,
        basis,
        Tilt::Field(chi.components()),
    );
    Ok(TiltedGenerator {
        matrix,
        basis: basis.clone(),
        method: Method::Redfield,
        chi: chi.clone(),
    })
}

/// `∂ⁿL/∂(iχ_j)ⁿ` at `χ = 0` (`n ≥ 1`) for the clustered construction.
pub fn clustered_derivative(
    model: &CheckedModel,
    partition: &ClusterPartition,
    rates: &RateTable,
    bath: usize,
    order: u8,
) -> CMatrix {
    let basis = reduced_basis(partition);
    assemble_clustered(
        model,
        partition,
        rates,
        &basis,
        Tilt::Derivative(bath, order as i32),
    )
}

/// `∂ⁿL/∂(iχ_j)ⁿ` at `χ = 0` (`n ≥ 1`) for the Redfield construction.
pub fn redfield_derivative(
    model: &CheckedModel,
    singletons: &ClusterPartition,
    rates: &RateTable,
    basis: &BasisOrdering,
    bath: usize,
    order: u8,
) -> CMatrix {
    assemble_redfield(
        model,
        singletons,
        rates,
        basis,
        Tilt::Derivative(bath, order as i32),
    )
}
