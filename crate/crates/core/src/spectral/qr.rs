//! Eigenvalues of a dense complex matrix: balancing, Householder reduction
//! to Hessenberg form, then single-shift QR with Wilkinson shifts and
//! deflation.

use alloc::vec::Vec;

use crate::{CMatrix, Error, Result, C64};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues of `m`, in deflation order.
///
/// On non-convergence returns [`Error::NoConvergence`] holding the
/// eigenvalues that did deflate.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigenvalues of a non-square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(h)
}

/// Parlett-Reinsch balancing with powers of two; similarity preserving.
fn balance(a: &mut CMatrix) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut CMatrix) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += a[(i, k)].norm_sqr();
        }
        let norm = libm::sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        // v = x + e^{i arg x0} |x| e1, reflect with I - 2 v v† / |v|²
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * norm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // left: rows k+1.., all columns
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (p, vi) in v.iter().enumerate() {
                s += vi.conj() * a[(k + 1 + p, j)];
            }
            s *= tau;
            for (p, vi) in v.iter().enumerate() {
                a[(k + 1 + p, j)] -= vi * s;
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (p, vi) in v.iter().enumerate() {
                s += a[(i, k + 1 + p)] * vi;
            }
            s *= tau;
            for (p, vi) in v.iter().enumerate() {
                a[(i, k + 1 + p)] -= s * vi.conj();
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

fn hessenberg_qr(mut h: CMatrix) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut found: Vec<C64> = Vec::with_capacity(n);
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = f64::MIN_POSITIVE.max(f64::EPSILON * scale * 1e-3);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;

    loop {
        if hi == 0 {
            found.push(h[(0, 0)]);
            break;
        }
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * diag || sub <= tiny {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            found.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        total += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE || total > MAX_SWEEPS_PER_EIGENVALUE * n {
            return Err(Error::NoConvergence {
                size: n,
                found: found.len(),
                partial: found,
            });
        }

        let mu = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rot: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = libm::hypot(x.norm(), y.norm());
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let p = h[(k, j)];
                let q = h[(k + 1, j)];
                h[(k, j)] = c.conj() * p + s.conj() * q;
                h[(k + 1, j)] = -s * p + c * q;
            }
            rot.push((c, s));
        }
        for (off, (c, s)) in rot.into_iter().enumerate() {
            let k = lo + off;
            let top = (k + 2).min(hi);
            for i in lo..=top {
                let p = h[(i, k)];
                let q = h[(i, k + 1)];
                h[(i, k)] = c * p + s * q;
                h[(i, k + 1)] = -s.conj() * p + c.conj() * q;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(found)
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
