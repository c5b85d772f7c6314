//! Matrix exponential by Padé approximation with scaling and squaring
//! (Higham's 2005 degree selection, degrees 3 to 13).

use crate::{CMatrix, Error, Result, C64};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled_identity(n: usize, x: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, C64::new(x, 0.0))
}

/// `e^A` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm of a non-square matrix");
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow(norm));
    }
    if n == 0 {
        return Ok(a.clone());
    }

    let a2 = a * a;
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            // U = A Σ b_{2k+1} A^{2k},  V = Σ b_{2k} A^{2k}
            let mut pow = scaled_identity(n, 1.0);
            let mut u = CMatrix::zeros(n, n);
            let mut v = CMatrix::zeros(n, n);
            for k in 0..=(m / 2) {
                v += &pow * C64::new(b[2 * k], 0.0);
                u += &pow * C64::new(b[2 * k + 1], 0.0);
                pow = &pow * &a2;
            }
            let u = a * u;
            return pade_solve(&u, &v, 0);
        }
    }

    let s = if norm > THETA_13 {
        libm::ceil(libm::log2(norm / THETA_13)) as i32
    } else {
        0
    };
    let scale = C64::new(libm::ldexp(1.0, -s), 0.0);
    let a1 = a * scale;
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |x: f64| C64::new(x, 0.0);
    let b = &B13;
    let id = scaled_identity(n, 1.0);
    let u_inner = &a6 * (&a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]))
        + &a6 * c(b[7])
        + &a4 * c(b[5])
        + &a2 * c(b[3])
        + &id * c(b[1]);
    let u = &a1 * u_inner;
    let v = &a6 * (&a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]))
        + &a6 * c(b[6])
        + &a4 * c(b[4])
        + &a2 * c(b[2])
        + &id * c(b[0]);
    pade_solve(&u, &v, s.max(0) as u32)
}

fn pade_solve(u: &CMatrix, v: &CMatrix, squarings: u32) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    let mut r = q.lu().solve(&p).ok_or(Error::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ExpOverflow(one_norm(&r)));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut term = scaled_identity(n, 1.0);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * a * C64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    fn sample(n: usize, scale: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            C64::new(
                scale * libm::sin((2 * i + 5 * j) as f64 + 1.0),
                scale * 0.5 * libm::cos((i + 3 * j) as f64),
            )
        })
    }

    #[test]
    fn matches_taylor_for_every_degree() {
        for scale in [1e-3, 0.05, 0.2, 0.4, 1.0] {
            let a = sample(5, scale);
            let e = expm(&a).unwrap();
            let t = taylor(&a);
            assert!((e - &t).norm() <= 1e-13 * t.norm(), "scale {scale}");
        }
    }

    #[test]
    fn scaling_and_squaring_inverse() {
        let a = sample(6, 3.0);
        let e = expm(&a).unwrap();
        let f = expm(&(-&a)).unwrap();
        let id = scaled_identity(6, 1.0);
        assert!((e * f - id).norm() < 1e-9);
    }

    #[test]
    fn diagonal_and_nilpotent() {
        let d = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![
            C64::new(-30.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(1.5, -1.0),
        ]));
        let e = expm(&d).unwrap();
        for i in 0..3 {
            let expect = d[(i, i)].exp();
            assert!((e[(i, i)] - expect).norm() <= 1e-12 * expect.norm().max(1e-300));
        }
        let mut nil = CMatrix::zeros(3, 3);
        nil[(0, 1)] = C64::new(2.0, 0.0);
        nil[(1, 2)] = C64::new(3.0, 0.0);
        let e = expm(&nil).unwrap();
        assert!((e[(0, 2)] - C64::new(3.0, 0.0)).norm() < 1e-14);
        assert!((e[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn overflow_is_an_error() {
        let a = scaled_identity(2, 1e4);
        assert!(matches!(expm(&a), Err(Error::ExpOverflow(_))));
        let a = scaled_identity(2, f64::NAN);
        assert!(expm(&a).is_err());
    }
}
