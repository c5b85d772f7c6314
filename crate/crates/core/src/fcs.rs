//! Full counting statistics on top of the tilted generators: cumulants,
//! fluctuation-symmetry scans, linear and next-order transport relations,
//! the thermodynamic uncertainty ratio and the V-model sweeps.
//!
//! Derivatives are taken with respect to `s = iχ`. Along that direction the
//! field `χ = -is` is imaginary and every generator is real, so the CGF is a
//! real function of `s` and the `n`-th cumulant is `dⁿG/dsⁿ` at zero.

use alloc::format;
use alloc::vec::Vec;

use crate::generators::{CountingField, Method};
use crate::spectral::{self, multiset_distance, steady_state, BranchFlag, BranchTracker, CgfPoint};
use crate::vmodel::{VParams, LEFT};
use crate::{CVector, Error, OpenSystem, Result, C64};

/// Finite-difference steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    /// Step in `s = iχ`.
    pub chi: f64,
    /// Step in `δβ`, relative to the mean inverse temperature.
    pub beta_rel: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            chi: 1e-3,
            beta_rel: 1e-4,
        }
    }
}

impl FdSteps {
    /// Default steps for a system whose transition energy scale is `nu`.
    pub fn for_scale(nu: f64) -> Self {
        Self {
            chi: 1e-3 / nu,
            ..Self::default()
        }
    }
}

/// Current cumulants of one bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    /// First cumulant from the CGF.
    pub mean: f64,
    /// Second cumulant (variance rate) from the CGF.
    pub variance: f64,
    pub third: Option<f64>,
    /// `w · ∂L/∂(iχ) · ρ_ss`, independent of the CGF route.
    pub mean_from_generator: f64,
    pub step: f64,
    /// Number of Richardson extrapolation steps applied.
    pub richardson: u8,
    pub flag: BranchFlag,
}

/// Cumulants up to `order` (1 to 3) by central differences of the CGF with
/// one Richardson step. The CGF is followed from `s = 0` outwards in both
/// directions; any branch flag raised on the way is reported.
pub fn cumulants(
    sys: &OpenSystem,
    method: Method,
    bath: usize,
    order: u8,
    h: f64,
) -> Result<CumulantSet> {
    if !(h > 0.0) || !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "cumulants need h > 0 and order in 1..=3, got h = {h}, order = {order}"
        )));
    }
    let reach: i32 = if order == 3 { 4 } else { 2 };
    let mut g = [0.0; 9];
    let mut flag = BranchFlag::default();
    for dir in [1, -1] {
        let mut tracker = BranchTracker::new();
        for k in 0..=reach {
            let s = (dir * k) as f64 * h;
            let chi = CountingField::single(sys.bath_count(), bath, C64::new(0.0, -s));
            let p = tracker.step(&sys.generator(method, &chi)?.matrix)?;
            flag.ambiguous |= p.flag.ambiguous;
            flag.off_dominant |= p.flag.off_dominant;
            g[(dir * k + 4) as usize] = p.value.re;
        }
    }
    let at = |k: i32| g[(k + 4) as usize];
    let rich = |fine: f64, coarse: f64| (4.0 * fine - coarse) / 3.0;

    let d1 = |m: i32| {
        let hm = m as f64 * h;
        (at(m) - at(-m)) / (2.0 * hm)
    };
    let d2 = |m: i32| {
        let hm = m as f64 * h;
        (at(m) - 2.0 * at(0) + at(-m)) / (hm * hm)
    };
    let d3 = |m: i32| {
        let hm = m as f64 * h;
        (at(2 * m) - 2.0 * at(m) + 2.0 * at(-m) - at(-2 * m)) / (2.0 * hm * hm * hm)
    };

    Ok(CumulantSet {
        mean: rich(d1(1), d1(2)),
        variance: rich(d2(1), d2(2)),
        third: (order == 3).then(|| rich(d3(1), d3(2))),
        mean_from_generator: mean_current(sys, method, bath)?,
        step: h,
        richardson: 1,
        flag,
    })
}

/// Mean energy current out of `bath` into the system: `w · ∂L/∂(iχ) · ρ_ss`.
pub fn mean_current(sys: &OpenSystem, method: Method, bath: usize) -> Result<f64> {
    let l0 = sys.liouvillian(method)?;
    let rho = steady_state(&l0.matrix, &l0.basis)?;
    let dl = sys.generator_derivative(method, bath, 1)?;
    Ok(l0.basis.trace_functional().dot(&(dl * rho)).re)
}

/// First two cumulants by perturbation theory around the steady state.
///
/// `c1 = w L1 ρ`, `c2 = w L2 ρ + 2 w L1 r` with `L0 r = (c1 - L1) ρ` and
/// `w·r = 0`. Used as a derivative-free cross-check of [`cumulants`].
pub fn perturbative_cumulants(sys: &OpenSystem, method: Method, bath: usize) -> Result<(f64, f64)> {
    let l0 = sys.liouvillian(method)?;
    let basis = &l0.basis;
    let rho = steady_state(&l0.matrix, basis)?;
    let w = basis.trace_functional();
    let l1 = sys.generator_derivative(method, bath, 1)?;
    let l2 = sys.generator_derivative(method, bath, 2)?;
    let c1 = w.dot(&(&l1 * &rho));
    let mut rhs: CVector = &rho * c1 - &l1 * &rho;
    rhs[0] = C64::new(0.0, 0.0);
    let mut a = l0.matrix.clone();
    a.set_row(0, &w.transpose());
    let r = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    let c2 = w.dot(&(&l2 * &rho)) + w.dot(&(&l1 * r)) * 2.0;
    Ok((c1.re, c2.re))
}

/// `G(χ)` against `G(-χ - iβ)` over a real grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub method: Method,
    pub chi: Vec<f64>,
    pub direct: Vec<CgfPoint>,
    pub mirrored: Vec<CgfPoint>,
    pub re_residual: Vec<f64>,
    pub im_residual: Vec<f64>,
    /// Distance between the full spectra of `L(χ)` and `L(-χ - iβ)`.
    pub spectrum_distance: Vec<f64>,
}

impl SymmetryReport {
    pub fn max_re(&self) -> f64 {
        self.re_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_im(&self) -> f64 {
        self.im_residual.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|G(χ) - G(-χ - iβ)|`.
    pub fn max_residual(&self) -> f64 {
        self.direct
            .iter()
            .zip(&self.mirrored)
            .map(|(a, b)| (a.value - b.value).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_spectrum_distance(&self) -> f64 {
        self.spectrum_distance.iter().copied().fold(0.0, f64::max)
    }

    /// Points where either branch was flagged.
    pub fn flagged(&self) -> usize {
        self.direct
            .iter()
            .zip(&self.mirrored)
            .filter(|(a, b)| !a.flag.is_clean() || !b.flag.is_clean())
            .count()
    }
}

/// Evaluates the CGF at `χ e_bath` and at the mirrored field on branches
/// tracked from `χ = 0`. The grid must start at zero.
pub fn fluctuation_symmetry_scan(
    sys: &OpenSystem,
    method: Method,
    bath: usize,
    grid: &[f64],
) -> Result<SymmetryReport> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter(
            "symmetry scans start at χ = 0".into(),
        ));
    }
    let betas = sys.betas();
    let nb = sys.bath_count();
    let mut direct_tracker = BranchTracker::new();
    let mut mirror_tracker = BranchTracker::new();
    let mut report = SymmetryReport {
        method,
        chi: grid.to_vec(),
        direct: Vec::with_capacity(grid.len()),
        mirrored: Vec::with_capacity(grid.len()),
        re_residual: Vec::with_capacity(grid.len()),
        im_residual: Vec::with_capacity(grid.len()),
        spectrum_distance: Vec::with_capacity(grid.len()),
    };
    for &x in grid {
        let field = CountingField::real(nb, bath, x);
        let l = sys.generator(method, &field)?.matrix;
        let m = sys.generator(method, &field.mirrored(&betas))?.matrix;
        let el = spectral::eigenvalues(&l)?;
        let em = spectral::eigenvalues(&m)?;
        let (gl, fl) = direct_tracker.advance(&el, l.norm());
        let (gm, fm) = mirror_tracker.advance(&em, m.norm());
        report.direct.push(CgfPoint {
            value: gl,
            residual: spectral::eigen_residual(&l, gl),
            flag: fl,
        });
        report.mirrored.push(CgfPoint {
            value: gm,
            residual: spectral::eigen_residual(&m, gm),
            flag: fm,
        });
        report.re_residual.push((gl.re - gm.re).abs());
        report.im_residual.push((gl.im - gm.im).abs());
        report.spectrum_distance.push(multiset_distance(&el, &em));
    }
    Ok(report)
}

/// `Z(χ, t)` and `Z(-χ - iβ, t)` from the maximally mixed initial state,
/// for which the symmetry holds at all times.
pub fn finite_time_symmetry(
    sys: &OpenSystem,
    method: Method,
    chi: &CountingField,
    t: f64,
) -> Result<(C64, C64)> {
    let direct = sys.generator(method, chi)?;
    let mirror = sys.generator(method, &chi.mirrored(&sys.betas()))?;
    let rho0 = spectral::maximally_mixed(&direct.basis);
    Ok((
        spectral::mgf(&direct.matrix, &direct.basis, &rho0, t)?,
        spectral::mgf(&mirror.matrix, &mirror.basis, &rho0, t)?,
    ))
}

/// A system whose two bath temperatures can be set freely; the counted bath
/// is the one listed first in `at_temperatures`.
pub trait TemperatureFamily {
    fn at_temperatures(&self, t_counted: f64, t_other: f64) -> Result<OpenSystem>;

    /// Index of the counted bath in the systems produced.
    fn counted_bath(&self) -> usize {
        LEFT
    }

    /// Default differentiation steps for this family.
    fn steps(&self) -> FdSteps {
        FdSteps::default()
    }
}

impl TemperatureFamily for VParams {
    fn at_temperatures(&self, t_counted: f64, t_other: f64) -> Result<OpenSystem> {
        self.with_temperatures(t_counted, t_other).system()
    }

    fn steps(&self) -> FdSteps {
        FdSteps::for_scale(self.nu)
    }
}

/// Temperatures `(T_counted, T_other)` at mean `t_bar` with
/// `β_other - β_counted = delta_beta`.
pub fn temperatures_for_delta_beta(t_bar: f64, delta_beta: f64) -> (f64, f64) {
    let q = delta_beta * t_bar * t_bar;
    let x = q / (1.0 + libm::sqrt(1.0 + delta_beta * delta_beta * t_bar * t_bar));
    (t_bar + x, t_bar - x)
}

/// Temperatures `T̄ ± δT/2`.
pub fn temperatures_for_delta_t(t_bar: f64, delta_t: f64) -> (f64, f64) {
    (t_bar + 0.5 * delta_t, t_bar - 0.5 * delta_t)
}

/// Left- and right-hand side of a transport relation with their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / |rhs|`, or 0 when both sides are below the resolution
    /// floor (the relation then reads `0 = 0`).
    pub gap: f64,
    pub floor: f64,
}

impl TransportCheck {
    fn new(lhs: f64, rhs: f64, floor: f64) -> Self {
        let gap = if lhs.abs().max(rhs.abs()) <= floor {
            0.0
        } else {
            (lhs - rhs).abs() / rhs.abs()
        };
        Self {
            lhs,
            rhs,
            gap,
            floor,
        }
    }

    /// Both sides vanish to within the resolution floor.
    pub fn is_trivial(&self) -> bool {
        self.lhs.abs().max(self.rhs.abs()) <= self.floor
    }
}

/// Resolution of second-order coefficients relative to the first-order one:
/// `|∂²J/∂δβ²|` below `1e-5 T̄ |∂J/∂δβ|` is treated as zero.
const SECOND_ORDER_FLOOR: f64 = 1e-5;

/// `(mean, variance)` at `δβ ∈ {-h, 0, h}` around `T̄`.
///
/// Both come from the perturbative route: the second δβ-derivative of the
/// mean and the first δβ-derivative of the variance amplify round-off by
/// `1/h_β²` and `1/h_β`, which the finite-difference cumulants cannot
/// afford.
fn beta_stencil(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    steps: FdSteps,
) -> Result<(f64, [(f64, f64); 3])> {
    if !(t_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("mean temperature {t_bar}")));
    }
    let h = steps.beta_rel / t_bar;
    let bath = family.counted_bath();
    let at = |db: f64| -> Result<(f64, f64)> {
        let (tc, to) = temperatures_for_delta_beta(t_bar, db);
        perturbative_cumulants(&family.at_temperatures(tc, to)?, method, bath)
    };
    Ok((h, [at(-h)?, at(0.0)?, at(h)?]))
}

/// Green-Kubo, `∂⟨J⟩/∂δβ = ½⟨⟨J²⟩⟩`, and the next-order relation,
/// `∂²⟨J⟩/∂δβ² = ∂⟨⟨J²⟩⟩/∂δβ`, at equilibrium around `T̄`, from one shared
/// stencil in `δβ = β_other - β_counted`.
pub fn transport_checks(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    steps: FdSteps,
) -> Result<(TransportCheck, TransportCheck)> {
    let (h, [(jm, vm), (j0, v0), (jp, vp)]) = beta_stencil(family, method, t_bar, steps)?;
    let gk = TransportCheck::new((jp - jm) / (2.0 * h), 0.5 * v0, 0.0);
    let floor = SECOND_ORDER_FLOOR * t_bar * gk.lhs.abs();
    let next = TransportCheck::new((jp - 2.0 * j0 + jm) / (h * h), (vp - vm) / (2.0 * h), floor);
    Ok((gk, next))
}

/// Green-Kubo relation alone; see [`transport_checks`].
pub fn green_kubo_check(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    steps: FdSteps,
) -> Result<TransportCheck> {
    Ok(transport_checks(family, method, t_bar, steps)?.0)
}

/// Next-order relation alone; see [`transport_checks`].
pub fn second_order_check(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    steps: FdSteps,
) -> Result<TransportCheck> {
    Ok(transport_checks(family, method, t_bar, steps)?.1)
}

/// One point of a TUR scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurPoint {
    pub delta_t: f64,
    pub method: Method,
    pub mean: f64,
    pub variance: f64,
    /// `δβ ⟨⟨J²⟩⟩ / ⟨J⟩`.
    pub ratio: f64,
}

/// TUR ratio over `δT` at fixed mean temperature; `δT ≤ 0` points are
/// skipped (the ratio is 0/0 there, see [`tur_limit`]).
pub fn tur_scan(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    grid: &[f64],
    steps: FdSteps,
) -> Result<Vec<TurPoint>> {
    grid.iter()
        .filter(|&&dt| dt > 0.0)
        .map(|&dt| tur_point(family, method, t_bar, dt, steps))
        .collect()
}

/// A single TUR point.
pub fn tur_point(
    family: &dyn TemperatureFamily,
    method: Method,
    t_bar: f64,
    delta_t: f64,
    steps: FdSteps,
) -> Result<TurPoint> {
    let (tc, to) = temperatures_for_delta_t(t_bar, delta_t);
    if !(to > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "δT = {delta_t} drives the cold bath to T = {to}"
        )));
    }
    let sys = family.at_temperatures(tc, to)?;
    let c = cumulants(&sys, method, family.counted_bath(), 2, steps.chi)?;
    let delta_beta = 1.0 / to - 1.0 / tc;
    let mean = c.mean_from_generator;
    Ok(TurPoint {
        delta_t,
        method,
        mean,
        variance: c.variance,
        ratio: delta_beta * c.variance / mean,
    })
}

/// `δT → 0` limit of the ratio by quadratic extrapolation through the three
/// smallest positive `δT` points.
pub fn tur_limit(points: &[TurPoint]) -> Option<f64> {
    let mut p: Vec<&TurPoint> = points.iter().filter(|p| p.delta_t > 0.0).collect();
    if p.len() < 3 {
        return None;
    }
    p.sort_by(|a, b| a.delta_t.total_cmp(&b.delta_t));
    let (x0, x1, x2) = (p[0].delta_t, p[1].delta_t, p[2].delta_t);
    let (y0, y1, y2) = (p[0].ratio, p[1].ratio, p[2].ratio);
    // Lagrange interpolant evaluated at 0
    let l0 = x1 * x2 / ((x0 - x1) * (x0 - x2));
    let l1 = x0 * x2 / ((x1 - x0) * (x1 - x2));
    let l2 = x0 * x1 / ((x2 - x0) * (x2 - x1));
    Some(y0 * l0 + y1 * l1 + y2 * l2)
}

/// Entropy production rate `(β_other - β_counted) ⟨J⟩` of a two-bath
/// steady state.
pub fn entropy_production(beta_counted: f64, beta_other: f64, mean: f64) -> f64 {
    (beta_other - beta_counted) * mean
}

/// Which GKLS equation reproduces the Redfield current.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closeness {
    Unified,
    Secular,
    Crossover,
}

impl Closeness {
    pub fn name(self) -> &'static str {
        match self {
            Closeness::Unified => "unified",
            Closeness::Secular => "secular",
            Closeness::Crossover => "crossover",
        }
    }
}

/// Classifies by the threshold `|J_A - J_red| ≤ 0.1 |J_sec - J_uni|`.
pub fn classify(j_redfield: f64, j_unified: f64, j_secular: f64) -> Closeness {
    let tol = 0.1 * (j_secular - j_unified).abs();
    let du = (j_unified - j_redfield).abs();
    let ds = (j_secular - j_redfield).abs();
    match (du <= tol, ds <= tol) {
        (true, false) => Closeness::Unified,
        (false, true) => Closeness::Secular,
        (true, true) if du < ds => Closeness::Unified,
        (true, true) if ds < du => Closeness::Secular,
        _ => Closeness::Crossover,
    }
}

/// Mean currents of the three methods at one splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverRow {
    pub delta: f64,
    pub j_redfield: f64,
    pub j_unified: f64,
    pub j_secular: f64,
    pub closeness: Closeness,
}

impl CrossoverRow {
    /// GKLS method with the smaller distance to Redfield.
    pub fn nearest(&self) -> Method {
        if (self.j_unified - self.j_redfield).abs() <= (self.j_secular - self.j_redfield).abs() {
            Method::Unified
        } else {
            Method::Secular
        }
    }
}

/// Mean left-bath current against `Δ` for all three methods.
pub fn crossover_scan(base: &VParams, deltas: &[f64]) -> Result<Vec<CrossoverRow>> {
    deltas.iter().map(|&d| crossover_point(base, d)).collect()
}

pub fn crossover_point(base: &VParams, delta: f64) -> Result<CrossoverRow> {
    let sys = base.with_delta(delta).system()?;
    let j = |m| mean_current(&sys, m, LEFT);
    let (jr, ju, js) = (
        j(Method::Redfield)?,
        j(Method::Unified)?,
        j(Method::Secular)?,
    );
    Ok(CrossoverRow {
        delta,
        j_redfield: jr,
        j_unified: ju,
        j_secular: js,
        closeness: classify(jr, ju, js),
    })
}

/// Steady-state `ρ23` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencePoint {
    pub alpha: f64,
    pub delta: f64,
    pub method: Method,
    pub rho23: C64,
}

/// Steady-state coherence between the excited levels over an `(α, Δ)` grid,
/// `α` outermost.
pub fn coherence_map(
    base: &VParams,
    alphas: &[f64],
    deltas: &[f64],
    method: Method,
) -> Result<Vec<CoherencePoint>> {
    let mut out = Vec::with_capacity(alphas.len() * deltas.len());
    for &alpha in alphas {
        for &delta in deltas {
            out.push(coherence_point(base, alpha, delta, method)?);
        }
    }
    Ok(out)
}

pub fn coherence_point(
    base: &VParams,
    alpha: f64,
    delta: f64,
    method: Method,
) -> Result<CoherencePoint> {
    if method == Method::Secular {
        return Err(Error::InvalidParameter(
            "the secular steady state carries no coherences".into(),
        ));
    }
    let sys = base.with_alpha(alpha).with_delta(delta).system()?;
    let l = sys.liouvillian(method)?;
    let rho = steady_state(&l.matrix, &l.basis)?;
    let rho23 = l
        .basis
        .index_of(1, 2)
        .map_or(C64::new(0.0, 0.0), |k| rho[k]);
    Ok(CoherencePoint {
        alpha,
        delta,
        method,
        rho23,
    })
}
