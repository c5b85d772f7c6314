//! Golden-rule rates for Ohmic bosonic baths.
//!
//! `γ(ω) = J(ω) (n(ω) + 1)` for `ω > 0` (emission into the bath),
//! `γ(ω) = J(|ω|) n(|ω|)` for `ω < 0` (absorption), and the limit
//! `γ(0) = a T`. Detailed balance `γ(-ω) = e^{-βω} γ(ω)` holds exactly in
//! exact arithmetic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::model::BathSpec;
use crate::{Error, Result, C64};

/// Bose-Einstein occupation `1 / (e^{ω/T} - 1)`, defined for `ω > 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "occupation needs ω > 0 and T > 0, got ω = {omega}, T = {temperature}"
        )));
    }
    Ok(1.0 / libm::expm1(omega / temperature))
}

/// Ohmic spectral density `a ω` (zero for `ω ≤ 0`).
pub fn ohmic_spectral_density(omega: f64, a: f64) -> f64 {
    if omega > 0.0 {
        a * omega
    } else {
        0.0
    }
}

/// Golden-rule rate of `bath` at Bohr frequency `omega`.
pub fn golden_rule_rate(omega: f64, bath: &BathSpec) -> f64 {
    let t = bath.temperature;
    let a = bath.ohmic_a;
    if omega == 0.0 {
        return a * t;
    }
    let w = omega.abs();
    let n = 1.0 / libm::expm1(w / t);
    if omega > 0.0 {
        a * w * (n + 1.0)
    } else {
        a * w * n
    }
}

/// Multiplies `rate` by the counting phase `e^{-i ω χ}`.
pub fn dress_rate(rate: f64, omega: f64, chi: C64) -> C64 {
    let phase = C64::new(0.0, -omega) * chi;
    phase.exp() * rate
}

/// A rate together with the counting phase it picks up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedRate {
    pub bath: usize,
    pub omega: f64,
    pub rate: f64,
    pub chi: C64,
}

impl DressedRate {
    pub fn value(&self) -> C64 {
        dress_rate(self.rate, self.omega, self.chi)
    }
}

/// Rates per bath at a fixed set of frequencies, computed once.
///
/// Lookups of frequencies outside the table are evaluated on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    baths: Vec<BathSpec>,
    entries: BTreeMap<(usize, u64), f64>,
}

impl RateTable {
    pub fn new(baths: &[BathSpec], omegas: impl IntoIterator<Item = f64>) -> Self {
        let mut entries = BTreeMap::new();
        let omegas: Vec<f64> = omegas.into_iter().collect();
        for (j, bath) in baths.iter().enumerate() {
            for &w in &omegas {
                entries.insert((j, key(w)), golden_rule_rate(w, bath));
            }
        }
        Self {
            baths: baths.to_vec(),
            entries,
        }
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn get(&self, bath: usize, omega: f64) -> f64 {
        match self.entries.get(&(bath, key(omega))) {
            Some(&r) => r,
            None => golden_rule_rate(omega, &self.baths[bath]),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest relative violation of `γ(-ω) = e^{-βω} γ(ω)` in the table.
    pub fn detailed_balance_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(j, k), &up) in &self.entries {
            let w = f64::from_bits(k);
            if w <= 0.0 {
                continue;
            }
            let down = self.get(j, -w);
            let expect = libm::exp(-w / self.baths[j].temperature) * up;
            if expect > 0.0 {
                worst = worst.max((down - expect).abs() / expect);
            }
        }
        worst
    }
}

fn key(omega: f64) -> u64 {
    if omega == 0.0 {
        0
    } else {
        omega.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bath(t: f64) -> BathSpec {
        BathSpec::new("L", t, 0.01)
    }

    #[test]
    fn occupation_reference_values() {
        assert_relative_eq!(
            bose_occupation(1.0, 4.0).unwrap(),
            3.520_811_664_187_798,
            epsilon = 1e-14
        );
        assert_relative_eq!(bose_occupation(1.0, 3.99).unwrap(), 3.5108, epsilon = 1e-4);
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(1.0, 0.0).is_err());
    }

    #[test]
    fn rates_reference_values() {
        let b = bath(4.0);
        assert_relative_eq!(golden_rule_rate(1.0, &b), 0.045_208_1, epsilon = 1e-7);
        assert_relative_eq!(golden_rule_rate(-1.0, &b), 0.035_208_1, epsilon = 1e-7);
        assert_eq!(golden_rule_rate(0.0, &b), 0.04);
        assert_eq!(golden_rule_rate(0.0, &bath(1e-3)), 1e-5);
    }

    #[test]
    fn rates_continuous_at_zero() {
        let b = bath(4.0);
        for w in [1e-6, -1e-6] {
            assert_relative_eq!(golden_rule_rate(w, &b), 0.04, epsilon = 1e-8);
        }
    }

    #[test]
    fn cold_bath_limits() {
        let b = bath(1e-3);
        assert_eq!(golden_rule_rate(-1.0, &b), 0.0);
        assert_relative_eq!(golden_rule_rate(1.0, &b), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn dressing_phase() {
        let r = dress_rate(2.0, 1.0, C64::new(core::f64::consts::PI, 0.0));
        assert_relative_eq!(r.re, -2.0, epsilon = 1e-15);
        assert!(r.im.abs() < 1e-15);
        // imaginary field gives a real exponential tilt
        let r = dress_rate(1.0, 0.5, C64::new(0.0, -2.0));
        assert_relative_eq!(r.re, libm::exp(-1.0), epsilon = 1e-15);
        let d = DressedRate {
            bath: 0,
            omega: 0.5,
            rate: 1.0,
            chi: C64::new(0.0, -2.0),
        };
        assert_eq!(d.value(), r);
    }

    #[test]
    fn table_lookup_and_balance() {
        let baths = [bath(4.0), BathSpec::new("R", 2.0, 0.02)];
        let t = RateTable::new(&baths, [-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(t.len(), 10);
        assert_eq!(t.get(1, 0.5), golden_rule_rate(0.5, &baths[1]));
        assert_eq!(t.get(0, 2.0), golden_rule_rate(2.0, &baths[0]));
        assert_eq!(t.get(0, -0.0), 0.04);
        assert!(t.detailed_balance_error() < 1e-12);
    }

    proptest! {
        #[test]
        fn detailed_balance(w in 1e-4f64..50.0, t in 0.05f64..100.0, a in 1e-4f64..1.0) {
            let b = BathSpec::new("x", t, a);
            let up = golden_rule_rate(w, &b);
            let down = golden_rule_rate(-w, &b);
            let expect = libm::exp(-w / t) * up;
            prop_assert!(down >= 0.0 && up > 0.0);
            if expect > 1e-300 {
                prop_assert!((down - expect).abs() <= 1e-12 * expect);
            }
        }
    }
}
