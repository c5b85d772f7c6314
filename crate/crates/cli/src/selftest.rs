//! Invariant suite behind `qfcs selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use qfcs_core::generators::CountingField;
use qfcs_core::spectral::{self, cgf_value, eigenvalues, multiset_distance, spectral_gap};
use qfcs_core::vmodel::{closed_form_generator, Preset, VParams, LEFT, RIGHT};
use qfcs_core::{CMatrix, Method, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_params(rng: &mut StdRng) -> VParams {
    let nu = rng.random_range(0.5..2.0);
    VParams {
        nu,
        delta: rng.random_range(0.0..0.9 * nu),
        alpha: rng.random_range(-1.5..1.5),
        a: rng.random_range(1e-3..0.1),
        t_left: rng.random_range(0.2..10.0),
        t_right: rng.random_range(0.2..10.0),
    }
}

fn random_chi(rng: &mut StdRng, nu: f64) -> C64 {
    C64::new(rng.random_range(-PI..PI) / nu, rng.random_range(-1.0..1.0))
}

fn field(chi_l: C64, chi_r: C64) -> CountingField {
    let mut v = vec![C64::new(0.0, 0.0); 2];
    v[LEFT] = chi_l;
    v[RIGHT] = chi_r;
    CountingField::new(v)
}

type Draw = (VParams, C64, C64);

fn draws(n: usize) -> Vec<Draw> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    (0..n)
        .map(|_| {
            let p = random_params(&mut rng);
            let cl = random_chi(&mut rng, p.nu);
            let cr = random_chi(&mut rng, p.nu);
            (p, cl, cr)
        })
        .collect()
}

fn oracle(draws: &[Draw], inject_fault: bool) -> Check {
    let mut worst: f64 = 0.0;
    for &(p, cl, cr) in draws {
        let sys = p.system().expect("valid draw");
        let built = sys
            .generator(Method::Unified, &field(cl, cr))
            .expect("generator")
            .matrix;
        let mut closed = closed_form_generator(&p, cl, cr);
        if inject_fault {
            closed[(0, 1)] = -closed[(0, 1)];
        }
        worst = worst.max(max_abs(&(&built - &closed)) / max_abs(&closed));
    }
    Check {
        name: "oracle equality",
        pass: worst <= 1e-14,
        detail: format!("unified vs closed form, max relative gap {worst:.2e} (≤1e-14)"),
    }
}

fn symmetry(draws: &[Draw]) -> Check {
    let mut worst: f64 = 0.0;
    for &(p, cl, cr) in draws {
        let sys = p.system().expect("valid draw");
        let chi = field(cl, cr);
        let mirror = chi.mirrored(&sys.betas());
        for m in [Method::Unified, Method::Secular] {
            let l = sys.generator(m, &chi).expect("generator").matrix;
            let t = sys
                .generator(m, &mirror)
                .expect("generator")
                .matrix
                .transpose();
            worst = worst.max(max_abs(&(&l - &t)) / max_abs(&l));
        }
    }
    Check {
        name: "generator symmetry",
        pass: worst <= 1e-12,
        detail: format!("L(χ) vs L(-χ-iβ)ᵀ for unified and secular, max gap {worst:.2e} (≤1e-12)"),
    }
}

fn trace(draws: &[Draw]) -> Check {
    let mut worst: f64 = 0.0;
    for &(p, ..) in draws {
        let sys = p.system().expect("valid draw");
        for m in Method::ALL {
            let l = sys.liouvillian(m).expect("generator");
            let w = l.basis.trace_functional();
            let row = w.transpose() * &l.matrix;
            worst = worst.max(row.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Check {
        name: "trace preservation",
        pass: worst <= 1e-12,
        detail: format!("max |w·L(0)| {worst:.2e} over all methods (≤1e-12)"),
    }
}

fn detailed_balance(draws: &[Draw]) -> Check {
    let mut worst: f64 = 0.0;
    for &(p, ..) in draws {
        let sys = p.system().expect("valid draw");
        worst = worst.max(sys.rates().detailed_balance_error());
    }
    Check {
        name: "detailed balance",
        pass: worst <= 1e-12,
        detail: format!("max relative violation {worst:.2e} (≤1e-12)"),
    }
}

/// Shifting every counting field by the same amount leaves the spectrum of
/// an energy-conserving generator unchanged.
fn gauge(draws: &[Draw]) -> Check {
    let mut worst: f64 = 0.0;
    for &(p, cl, cr) in draws {
        let sys = p.system().expect("valid draw");
        let shift = C64::new(0.37 / p.nu, 0.0);
        for m in [Method::Unified, Method::Secular] {
            let l = sys.generator(m, &field(cl, cr)).expect("generator").matrix;
            let s = sys
                .generator(m, &field(cl + shift, cr + shift))
                .expect("generator")
                .matrix;
            let (Ok(a), Ok(b)) = (eigenvalues(&l), eigenvalues(&s)) else {
                return Check {
                    name: "gauge invariance",
                    pass: false,
                    detail: "eigenvalue solver failed".into(),
                };
            };
            worst = worst.max(multiset_distance(&a, &b) / max_abs(&l));
        }
    }
    Check {
        name: "gauge invariance",
        pass: worst <= 1e-10,
        detail: format!(
            "spectrum shift under χ_j → χ_j + c, unified and secular, {worst:.2e} (≤1e-10)"
        ),
    }
}

/// `ln Z(χ, t) / t → G(χ)` with an `O(1/t)` remainder.
fn long_time(points: usize) -> Check {
    let sys = Preset::Fig2.params().system().expect("preset");
    let l0 = sys.liouvillian(Method::Unified).expect("generator");
    let run = || -> qfcs_core::Result<(f64, f64, f64)> {
        let gap = spectral_gap(&l0.matrix)?;
        let t = 50.0 / gap;
        let rho0 = spectral::maximally_mixed(&l0.basis);
        let mut worst_scaled: f64 = 0.0;
        let mut ratio_lo = f64::INFINITY;
        let mut ratio_hi: f64 = 0.0;
        for k in 1..=points {
            let x = 2.0 * PI * k as f64 / (points + 1) as f64;
            let l = sys.tilted(Method::Unified, LEFT, x)?;
            let g = cgf_value(&l.matrix)?;
            let err = |t: f64| -> qfcs_core::Result<f64> {
                let z = spectral::mgf(&l.matrix, &l.basis, &rho0, t)?;
                Ok(phase_error(g, z.ln() / t, t))
            };
            let (e1, e2) = (err(t)?, err(2.0 * t)?);
            worst_scaled = worst_scaled.max(e1 * t);
            ratio_lo = ratio_lo.min(e1 / e2);
            ratio_hi = ratio_hi.max(e1 / e2);
        }
        Ok((worst_scaled, ratio_lo, ratio_hi))
    };
    match run() {
        Ok((scaled, lo, hi)) => Check {
            name: "long-time CGF",
            pass: scaled <= 10.0 && lo >= 1.9 && hi <= 2.1,
            detail: format!(
                "t·|G - ln Z/t| ≤ {scaled:.3} (≤10) at t = 50/gap; error ratio t→2t in [{lo:.3}, {hi:.3}] (≈2)"
            ),
        },
        Err(e) => Check {
            name: "long-time CGF",
            pass: false,
            detail: format!("{e}"),
        },
    }
}

/// `|G - L|` with the imaginary part of `L = ln Z / t` taken modulo `2π/t`.
fn phase_error(g: C64, lz: C64, t: f64) -> f64 {
    let period = 2.0 * PI / t;
    let mut im = (g.im - lz.im) % period;
    if im > 0.5 * period {
        im -= period;
    } else if im < -0.5 * period {
        im += period;
    }
    (g.re - lz.re).hypot(im)
}

/// `G(χ) = G(-χ-iβ)` along tracked branches at the preset splittings.
fn fluctuation_symmetry(points: usize) -> Check {
    let grid: Vec<f64> = (0..points)
        .map(|k| 2.0 * PI * k as f64 / (points - 1) as f64)
        .collect();
    let mut worst: f64 = 0.0;
    for delta in [0.01, 0.03, 0.1, 0.3, 0.9] {
        let sys = Preset::Fig2
            .params()
            .with_delta(delta)
            .system()
            .expect("preset");
        for m in [Method::Unified, Method::Secular] {
            match qfcs_core::fcs::fluctuation_symmetry_scan(&sys, m, LEFT, &grid) {
                Ok(r) => worst = worst.max(r.max_residual()),
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    Check {
        name: "fluctuation symmetry",
        pass: worst <= 1e-9,
        detail: format!("max |G(χ) - G(-χ-iβ)| {worst:.2e} on {points} χ points (≤1e-9)"),
    }
}

/// Runs the suite and prints one line per check; true when all pass.
pub fn run(quick: bool, inject_fault: bool) -> bool {
    let start = Instant::now();
    let sample = draws(if quick { 10 } else { 100 });
    let mut checks = vec![
        oracle(&sample, inject_fault),
        symmetry(&sample),
        trace(&sample),
        detailed_balance(&sample),
        gauge(&sample),
        long_time(if quick { 3 } else { 20 }),
    ];
    if !quick {
        checks.push(fluctuation_symmetry(200));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    for c in &checks {
        println!(
            "{} {:<22} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!(
        "{passed} of {} checks passed in {:.2} s",
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    passed == checks.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_is_detected() {
        let d = draws(2);
        assert!(oracle(&d, false).pass);
        assert!(!oracle(&d, true).pass);
    }

    #[test]
    fn phase_error_wraps() {
        let t = 10.0;
        let g = C64::new(0.1, 0.2);
        let shifted = C64::new(0.1, 0.2 + 2.0 * PI / t);
        assert!(phase_error(g, shifted, t) < 1e-12);
    }
}
