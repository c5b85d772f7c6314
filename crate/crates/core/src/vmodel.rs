//! The three-level V system: ground state `|1>` and two excited states at
//! `ν - Δ` and `ν`, coupled to a left and a right bosonic bath through
//!
//! ```text
//! S_L = |1><2| + |1><3| + h.c.        S_R = |1><2| + α|1><3| + h.c.
//! ```
//!
//! Besides building the model for the generic machinery, this module keeps
//! a hand-written copy of the unified tilted generator in the basis
//! `(11, 22, 33, 23, 32)`. It shares no code with the generic builder and
//! serves as an independent oracle for it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{
    validate_model, BathSpec, CheckedModel, ClusterPartition, CouplingSpec, SystemModel,
};
use crate::rates::golden_rule_rate;
use crate::{CMatrix, Error, OpenSystem, RMatrix, Result, C64};

/// Index of the left (counted, hot) bath.
pub const LEFT: usize = 0;
/// Index of the right bath.
pub const RIGHT: usize = 1;

/// Parameters of the V system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VParams {
    pub nu: f64,
    pub delta: f64,
    pub alpha: f64,
    pub a: f64,
    pub t_left: f64,
    pub t_right: f64,
}

/// Transition rates at `±ν`: `k = γ(ν)` (decay) and `kt = γ(-ν)` (excitation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VRates {
    pub k_left: f64,
    pub kt_left: f64,
    pub k_right: f64,
    pub kt_right: f64,
}

impl VParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu", self.nu);
        }
        if !(self.delta >= 0.0 && self.delta < self.nu) {
            return bad("delta (need 0 <= delta < nu)", self.delta);
        }
        if !self.alpha.is_finite() {
            return bad("alpha", self.alpha);
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a", self.a);
        }
        for (name, t) in [("t_left", self.t_left), ("t_right", self.t_right)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(name, t);
            }
        }
        Ok(())
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn with_temperatures(self, t_left: f64, t_right: f64) -> Self {
        Self {
            t_left,
            t_right,
            ..self
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        vec![0.0, self.nu - self.delta, self.nu]
    }

    pub fn coupling_left(&self) -> RMatrix {
        RMatrix::from_row_slice(3, 3, &[0., 1., 1., 1., 0., 0., 1., 0., 0.])
    }

    pub fn coupling_right(&self) -> RMatrix {
        let a = self.alpha;
        RMatrix::from_row_slice(3, 3, &[0., 1., a, 1., 0., 0., a, 0., 0.])
    }

    pub fn baths(&self) -> Vec<BathSpec> {
        vec![
            BathSpec::new("L", self.t_left, self.a),
            BathSpec::new("R", self.t_right, self.a),
        ]
    }

    pub fn model(&self) -> Result<CheckedModel> {
        self.validate()?;
        let model = SystemModel::new(
            self.energies(),
            vec![
                CouplingSpec::new("L", self.coupling_left()),
                CouplingSpec::new("R", self.coupling_right()),
            ],
        );
        validate_model(model, self.baths())
    }

    /// Clusters `{-ν, 0, ν}`: the excited doublet is treated as one level
    /// at energy `ν`, whatever the splitting.
    pub fn partition(&self) -> Result<ClusterPartition> {
        ClusterPartition::from_level_groups(
            &self.energies(),
            &[vec![0], vec![1, 2]],
            &[0.0, self.nu],
        )
    }

    /// Model, baths and default partition; Redfield keeps the `23`/`32`
    /// coherences.
    pub fn system(&self) -> Result<OpenSystem> {
        OpenSystem::new(self.model()?, self.partition()?)
    }

    pub fn rates(&self) -> VRates {
        let [l, r]: [BathSpec; 2] = self.baths().try_into().expect("two baths");
        VRates {
            k_left: golden_rule_rate(self.nu, &l),
            kt_left: golden_rule_rate(-self.nu, &l),
            k_right: golden_rule_rate(self.nu, &r),
            kt_right: golden_rule_rate(-self.nu, &r),
        }
    }
}

/// Builds the V system for the given parameters.
pub fn v_system(params: &VParams) -> Result<OpenSystem> {
    params.system()
}

/// Closed-form unified generator in the basis `(11, 22, 33, 23, 32)` with
/// counting fields on both baths.
pub fn closed_form_generator(p: &VParams, chi_left: C64, chi_right: C64) -> CMatrix {
    let VRates {
        k_left: kl,
        kt_left: ktl,
        k_right: kr,
        kt_right: ktr,
    } = p.rates();
    let a = p.alpha;
    let a2 = a * a;
    let i = C64::new(0.0, 1.0);
    let re = |x: f64| C64::new(x, 0.0);
    let nu = p.nu;
    // energy leaves the system into bath j: e^{-iχ_j ν}; enters: e^{+iχ_j ν}
    let out_l = (-i * chi_left * nu).exp() * kl;
    let out_r = (-i * chi_right * nu).exp() * kr;
    let in_l = (i * chi_left * nu).exp() * ktl;
    let in_r = (i * chi_right * nu).exp() * ktr;
    let half = re(-0.5 * (kl + a * kr));
    let z = re(0.0);
    let rows = [
        [
            re(-2.0 * ktl - (a2 + 1.0) * ktr),
            out_l + out_r,
            out_l + out_r * a2,
            out_l + out_r * a,
            out_l + out_r * a,
        ],
        [in_l + in_r, re(-kl - kr), z, half, half],
        [in_l + in_r * a2, z, re(-kl - a2 * kr), half, half],
        [
            in_l + in_r * a,
            half,
            half,
            i * p.delta + re(-kl - 0.5 * (a2 + 1.0) * kr),
            z,
        ],
        [
            in_l + in_r * a,
            half,
            half,
            z,
            -i * p.delta + re(-kl - 0.5 * (a2 + 1.0) * kr),
        ],
    ];
    CMatrix::from_fn(5, 5, |r, c| rows[r][c])
}

/// Checks `L^T(-χ - iβ) = L(χ)` on the closed-form generator; returns the
/// largest elementwise gap relative to the largest entry.
pub fn closed_form_symmetry_witness(p: &VParams, chi_left: C64, chi_right: C64) -> f64 {
    let l = closed_form_generator(p, chi_left, chi_right);
    let shift = |chi: C64, t: f64| -chi - C64::new(0.0, 1.0 / t);
    let m = closed_form_generator(p, shift(chi_left, p.t_left), shift(chi_right, p.t_right));
    let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gap = (l - m.transpose())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    gap / scale
}

/// Named parameter sets matching the figures of the reference study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// CGF symmetry: `T_L = 4`, `T_R = 3.99`, `α = 0.5`, `Δ = 0.03`.
    Fig2,
    /// Transport coefficients against `α` at `Δ = 0.03`.
    Fig4a,
    /// Transport coefficients against `α` at `Δ = 0.3`.
    Fig4b,
    /// Mean current against `Δ` at `α = -0.5`.
    Fig5,
    /// Steady-state coherence map over `α` and `Δ`.
    Fig6,
    /// TUR ratio against `δT` at `α = -0.5`, `T̄ = 4`.
    Fig7a,
    /// TUR ratio against `δT` at `α = 0.5`, `T̄ = 4`.
    Fig7b,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig2,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7a,
        Preset::Fig7b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7a => "fig7a",
            Preset::Fig7b => "fig7b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn params(self) -> VParams {
        let base = VParams {
            nu: 1.0,
            delta: 0.03,
            alpha: 0.5,
            a: 0.01,
            t_left: 4.0,
            t_right: 3.99,
        };
        match self {
            Preset::Fig2 | Preset::Fig4a | Preset::Fig6 => base,
            Preset::Fig4b => base.with_delta(0.3),
            Preset::Fig5 => base.with_alpha(-0.5),
            // δT is swept around T̄ = 4; the stored pair is the δT = 0.01 point
            Preset::Fig7a => base.with_alpha(-0.5).with_temperatures(4.005, 3.995),
            Preset::Fig7b => base.with_temperatures(4.005, 3.995),
        }
    }

    /// Mean temperature the preset is built around.
    pub fn mean_temperature(self) -> f64 {
        let p = self.params();
        0.5 * (p.t_left + p.t_right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2() -> VParams {
        Preset::Fig2.params()
    }

    #[test]
    fn reference_rates() {
        let p = fig2().with_temperatures(4.0, 4.0);
        let r = p.rates();
        assert_relative_eq!(r.k_left, 0.045_208_1, epsilon = 1e-7);
        assert_relative_eq!(r.kt_left, 0.035_208_1, epsilon = 1e-7);
        assert_relative_eq!(r.kt_left / r.k_left, libm::exp(-0.25), max_relative = 1e-15);
    }

    #[test]
    fn closed_form_entries() {
        let p = fig2();
        let r = p.rates();
        let l = closed_form_generator(&p, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        assert_relative_eq!(
            l[(0, 0)].re,
            -2.0 * 0.035_208_1 - 1.25 * r.kt_right,
            epsilon = 2e-7
        );
        let d = l[(3, 3)];
        assert_eq!(d.im, p.delta);
        assert_relative_eq!(d.re, -r.k_left - 0.625 * r.k_right, max_relative = 1e-15);
        for c in 0..5 {
            let s: C64 = (0..3).map(|r| l[(r, c)]).sum();
            assert!(s.norm() < 1e-17, "column {c}: {s}");
        }
    }

    #[test]
    fn witness_holds_for_closed_form() {
        let p = VParams {
            nu: 1.3,
            delta: 0.2,
            alpha: -0.7,
            a: 0.02,
            t_left: 2.0,
            t_right: 0.7,
        };
        assert!(closed_form_symmetry_witness(&p, C64::new(0.7, 0.0), C64::new(0.0, 0.0)) < 1e-14);
        assert!(
            closed_form_symmetry_witness(
                &p.with_alpha(0.0),
                C64::new(0.7, 0.2),
                C64::new(-0.3, 0.0)
            ) < 1e-14
        );
    }

    #[test]
    fn validation() {
        assert!(fig2().validate().is_ok());
        assert!(fig2().with_delta(1.0).validate().is_err());
        assert!(fig2().with_delta(-0.1).validate().is_err());
        assert!(VParams { a: 0.0, ..fig2() }.validate().is_err());
        assert!(fig2().with_temperatures(4.0, -1.0).system().is_err());
    }

    #[test]
    fn presets_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()), Some(p));
            assert!(p.params().validate().is_ok());
        }
        assert_eq!(Preset::Fig5.params().alpha, -0.5);
        assert_eq!(Preset::Fig4b.params().delta, 0.3);
        assert_relative_eq!(Preset::Fig7a.mean_temperature(), 4.0, epsilon = 1e-15);
    }
}
