//! Spectral tools on tilted generators: certified eigenvalues, the scaled
//! cumulant generating function (dominant eigenvalue) with branch tracking,
//! steady states, propagation and the finite-time moment generating
//! function.

mod expm;
mod qr;

use alloc::vec::Vec;

pub use expm::expm;

use crate::generators::BasisOrdering;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Residual bound relative to `‖L‖_F` an eigenvalue must satisfy.
pub const CERTIFICATE_TOL: f64 = 1e-10;

/// Eigenvalues with an a-posteriori residual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Largest `min_x ‖(L - λ)x‖ / ‖x‖` estimate over all eigenvalues.
    pub residual: f64,
}

impl Spectrum {
    /// Eigenvalue with the largest real part.
    pub fn dominant(&self) -> C64 {
        dominant(&self.eigenvalues)
    }
}

/// Eigenvalues without certification.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    qr::eigenvalues(m)
}

/// Eigenvalues plus a residual certificate for each of them.
pub fn spectrum(m: &CMatrix) -> Result<Spectrum> {
    let eigenvalues = qr::eigenvalues(m)?;
    let bound = CERTIFICATE_TOL * m.norm().max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for &l in &eigenvalues {
        residual = residual.max(eigen_residual(m, l));
    }
    if !(residual <= bound) {
        return Err(Error::ResidualCertificate { residual, bound });
    }
    Ok(Spectrum {
        eigenvalues,
        residual,
    })
}

/// Residual `‖(L - λ)x‖ / ‖x‖` after inverse iteration at shift `λ`.
///
/// For a true eigenvalue this is at round-off level, also for defective
/// ones, because inverse iteration approaches the smallest singular
/// direction of `L - λ`.
pub fn eigen_residual(m: &CMatrix, lambda: C64) -> f64 {
    let n = m.nrows();
    let shifted = m - CMatrix::from_diagonal_element(n, n, lambda);
    let lu = shifted.clone().lu();
    let mut x = CVector::from_fn(n, |i, _| C64::new(1.0, 0.37 * i as f64 - 0.11));
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let Some(y) = lu.solve(&x) else {
            // exactly singular: λ is an eigenvalue to working precision
            return 0.0;
        };
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return 0.0;
        }
        x = y / C64::new(norm, 0.0);
        best = best.min((&shifted * &x).norm());
    }
    best
}

/// Eigenvalue with the largest real part (ties broken by smaller `|Im|`).
pub fn dominant(eigs: &[C64]) -> C64 {
    eigs.iter()
        .copied()
        .max_by(|a, b| {
            a.re.total_cmp(&b.re)
                .then(b.im.abs().total_cmp(&a.im.abs()))
        })
        .unwrap_or(C64::new(f64::NAN, f64::NAN))
}

/// Distance between the relaxation gap and zero: `-Re` of the second
/// eigenvalue after removing the one closest to zero.
pub fn spectral_gap(m: &CMatrix) -> Result<f64> {
    let mut eigs = qr::eigenvalues(m)?;
    if let Some(k) = (0..eigs.len()).min_by(|&i, &j| eigs[i].norm().total_cmp(&eigs[j].norm())) {
        eigs.swap_remove(k);
    }
    Ok(-dominant(&eigs).re)
}

/// Bottleneck-style distance between two eigenvalue multisets: greedy
/// nearest matching, largest matched distance. Sizes must agree, otherwise
/// the result is infinite.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pool: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    let mut order: Vec<C64> = a.to_vec();
    order.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    for x in order {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("pool is non-empty while elements remain");
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}

/// Flags raised while following an eigenvalue branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BranchFlag {
    /// A second eigenvalue was about as close as the matched one.
    pub ambiguous: bool,
    /// The tracked eigenvalue is not the one with largest real part.
    pub off_dominant: bool,
}

impl BranchFlag {
    pub fn is_clean(self) -> bool {
        !self.ambiguous && !self.off_dominant
    }

    /// Numeric code used in tabular output: 0 clean, bit 0 ambiguous,
    /// bit 1 off-dominant.
    pub fn code(self) -> u8 {
        self.ambiguous as u8 | (self.off_dominant as u8) << 1
    }
}

/// One point of a tracked CGF branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfPoint {
    pub value: C64,
    pub residual: f64,
    pub flag: BranchFlag,
}

/// Follows the eigenvalue that starts closest to zero along a sequence of
/// generators, matching each step to the nearest eigenvalue of the next.
#[derive(Debug, Clone, Default)]
pub struct BranchTracker {
    previous: Option<C64>,
}

impl BranchTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&mut self, m: &CMatrix) -> Result<CgfPoint> {
        let eigs = qr::eigenvalues(m)?;
        let (value, flag) = self.advance(&eigs, m.norm());
        Ok(CgfPoint {
            value,
            residual: eigen_residual(m, value),
            flag,
        })
    }

    /// Matches the next eigenvalue set; `scale` sets the tolerance under
    /// which two eigenvalues count as the same.
    pub fn advance(&mut self, eigs: &[C64], scale: f64) -> (C64, BranchFlag) {
        let target = self.previous.unwrap_or(C64::new(0.0, 0.0));
        let mut dist: Vec<(f64, C64)> = eigs.iter().map(|&e| ((e - target).norm(), e)).collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (d1, value) = dist[0];
        let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
        let ambiguous = dist
            .get(1)
            .is_some_and(|&(d2, e2)| (e2 - value).norm() > tol && d2 <= (2.0 * d1).max(tol));
        let top = dominant(eigs);
        let off_dominant = top.re - value.re > tol;
        self.previous = Some(value);
        (
            value,
            BranchFlag {
                ambiguous,
                off_dominant,
            },
        )
    }
}

/// Tracks the CGF branch along consecutive generators.
pub fn track_branch<I>(matrices: I) -> Result<Vec<CgfPoint>>
where
    I: IntoIterator<Item = Result<CMatrix>>,
{
    let mut tracker = BranchTracker::new();
    matrices.into_iter().map(|m| tracker.step(&m?)).collect()
}

/// Dominant eigenvalue of a single generator.
pub fn cgf_value(m: &CMatrix) -> Result<C64> {
    Ok(dominant(&qr::eigenvalues(m)?))
}

/// Unique normalised steady state of `L(0)`.
///
/// One population row of `L` is replaced by the trace functional and the
/// linear system solved with one step of iterative refinement. The kernel
/// dimension is checked against the spectrum first.
pub fn steady_state(l: &CMatrix, basis: &BasisOrdering) -> Result<CVector> {
    let n = l.nrows();
    let tol = CERTIFICATE_TOL * l.norm().max(f64::MIN_POSITIVE);
    let zeros = qr::eigenvalues(l)?
        .iter()
        .filter(|e| e.norm() <= tol.max(1e-13 * l.norm()))
        .count();
    if zeros != 1 {
        return Err(Error::DegenerateSteadyState(zeros));
    }
    let w = basis.trace_functional();
    let mut a = l.clone();
    a.set_row(0, &w.transpose());
    let mut rhs = CVector::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);
    let lu = a.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::Singular)?;
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

/// Maximally mixed state `I/N` in `basis`.
pub fn maximally_mixed(basis: &BasisOrdering) -> CVector {
    let p = 1.0 / basis.levels() as f64;
    CVector::from_fn(basis.dim(), |k, _| {
        if k < basis.levels() {
            C64::new(p, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `e^{Lt} ρ0`.
pub fn propagate(l: &CMatrix, rho0: &CVector, t: f64) -> Result<CVector> {
    let e = expm(&(l * C64::new(t, 0.0)))?;
    Ok(e * rho0)
}

/// Finite-time moment generating function `Z(χ, t) = w · e^{L(χ)t} ρ0`.
pub fn mgf(l: &CMatrix, basis: &BasisOrdering, rho0: &CVector, t: f64) -> Result<C64> {
    let rho = propagate(l, rho0, t)?;
    Ok(basis.trace_functional().dot(&rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli(k: f64, kt: f64) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(-kt, 0.0),
                C64::new(k, 0.0),
                C64::new(kt, 0.0),
                C64::new(-k, 0.0),
            ],
        )
    }

    #[test]
    fn certified_spectrum_of_rate_matrix() {
        let s = spectrum(&pauli(0.3, 0.1)).unwrap();
        let mut ev = s.eigenvalues.clone();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(-0.4, 0.0)).norm() < 1e-15);
        assert!(ev[1].norm() < 1e-15);
        assert!(s.residual < 1e-14);
        assert!(s.dominant().norm() < 1e-15);
    }

    #[test]
    fn wrong_eigenvalue_has_large_residual() {
        let m = pauli(0.3, 0.1);
        assert!(eigen_residual(&m, C64::new(-0.2, 0.0)) > 1e-3);
        assert!(eigen_residual(&m, C64::new(-0.4, 0.0)) < 1e-14);
    }

    #[test]
    fn gap_and_steady_state() {
        let m = pauli(0.3, 0.1);
        assert!((spectral_gap(&m).unwrap() - 0.4).abs() < 1e-14);
        let basis = BasisOrdering::new(2, &[]).unwrap();
        let rho = steady_state(&m, &basis).unwrap();
        assert!((rho[0] - C64::new(0.75, 0.0)).norm() < 1e-15);
        assert!((rho[1] - C64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_dark_states_rejected() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = C64::new(0.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        let basis = BasisOrdering::new(3, &[]).unwrap();
        assert_eq!(
            steady_state(&m, &basis),
            Err(Error::DegenerateSteadyState(2))
        );
    }

    #[test]
    fn multiset_distance_matches_up_to_order() {
        let a = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-2.0, 0.0)];
        let b = [C64::new(-2.0, 0.0), C64::new(1.0, 1e-9), C64::new(0.0, 1.0)];
        assert!((multiset_distance(&a, &b) - 1e-9).abs() < 1e-18);
        assert_eq!(multiset_distance(&a, &b[..2]), f64::INFINITY);
    }

    #[test]
    fn mgf_conserves_trace() {
        let m = pauli(0.3, 0.1);
        let basis = BasisOrdering::new(2, &[]).unwrap();
        let rho0 = maximally_mixed(&basis);
        let z = mgf(&m, &basis, &rho0, 25.0).unwrap();
        assert!((z - C64::new(1.0, 0.0)).norm() < 1e-13);
        let rho = propagate(&m, &rho0, 200.0).unwrap();
        assert!((rho[0] - C64::new(0.75, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tracker_follows_crossing_branch() {
        // eigenvalues s and -s cross at s = 0; starting near zero on the
        // upper branch, tracking must keep the smooth continuation
        let path: Vec<Result<CMatrix>> = [-0.2, -0.1, 0.05, 0.2]
            .iter()
            .map(|&s| {
                let mut m = CMatrix::zeros(2, 2);
                m[(0, 0)] = C64::new(s, 0.0);
                m[(1, 1)] = C64::new(-s - 1.0, 0.0);
                Ok(m)
            })
            .collect();
        let pts = track_branch(path).unwrap();
        let vals: Vec<f64> = pts.iter().map(|p| p.value.re).collect();
        assert_eq!(vals, vec![-0.2, -0.1, 0.05, 0.2]);
        assert!(pts.iter().all(|p| p.flag.is_clean()));
    }

    #[test]
    fn flag_codes() {
        let f = BranchFlag {
            ambiguous: true,
            off_dominant: true,
        };
        assert_eq!(f.code(), 3);
        assert_eq!(BranchFlag::default().code(), 0);
    }
}
