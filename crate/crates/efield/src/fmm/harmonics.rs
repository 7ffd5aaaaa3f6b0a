//! Solid harmonics and translation operators for the 1/|x-y| kernel.
//!
//! Regular and irregular solid harmonics in the factorial-scaled form
//!
//!   R_l^m(r) = r^l  P_l^m(cos t) e^{i m p} / (l+m)!
//!   S_l^m(r) = (l-m)! P_l^m(cos t) e^{i m p} / r^{l+1}
//!
//! (Condon-Shortley phase included in P_l^m). This scaling makes every
//! translation identity coefficient-free:
//!
//!   1/|x-y|        = sum_{l,m} R_l^m(y) conj(S_l^m(x))          for |y| < |x|
//!   R_l^m(u+v)     = sum_{j<=l} R_j^k(u) R_{l-j}^{m-k}(v)        (exact)
//!   S-shift        = conj(S) contraction with alternating sign   (see `m2l`)
//!
//! Coefficient vectors hold degrees 0..=lmax flattened by [`idx`]. Both
//! harmonics obey F_l^{-m} = (-1)^m conj(F_l^m), and under r -> -r pick up
//! (-1)^l; the parity is what makes a truncated multipole interaction exactly
//! symmetric under exchanging source and target.

use nalgebra::{Vector3};
use num_complex::Complex64;

/// Coefficient count through degree `lmax`.
pub const fn ncoeff(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Flat index of degree `l`, order `m` (|m| <= l).
#[inline]
pub fn idx(l: usize, m: i32) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m as i64) as usize
}

#[inline]
fn coeff(table: &[Complex64], l: i32, m: i32) -> Complex64 {
    if l < 0 || m.abs() > l {
        Complex64::ZERO
    } else {
        table[idx(l as usize, m)]
    }
}

fn fill_negative_orders(lmax: usize, out: &mut [Complex64]) {
    for l in 1..=lmax {
        for m in 1..=l {
            let c = out[idx(l, m as i32)].conj();
            out[idx(l, -(m as i32))] = if m % 2 == 0 { c } else { -c };
        }
    }
}

/// Writes R_l^m(v) for all l <= lmax into `out[..ncoeff(lmax)]`.
pub fn regular_into(lmax: usize, v: Vector3<f64>, out: &mut [Complex64]) {
    debug_assert!(out.len() >= ncoeff(lmax));
    let zeta = Complex64::new(v.x, v.y);
    let z = v.z;
    let r2 = v.norm_squared();
    out[0] = Complex64::new(1.0, 0.0);
    for m in 1..=lmax {
        out[idx(m, m as i32)] = out[idx(m - 1, m as i32 - 1)] * zeta * (-0.5 / m as f64);
    }
    for m in 0..lmax {
        out[idx(m + 1, m as i32)] = out[idx(m, m as i32)] * z;
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let a = out[idx(l - 1, m as i32)] * (z * (2 * l - 1) as f64);
            let b = out[idx(l - 2, m as i32)] * r2;
            out[idx(l, m as i32)] = (a - b) / ((l + m) * (l - m)) as f64;
        }
    }
    fill_negative_orders(lmax, out);
}

/// Writes S_l^m(v) for all l <= lmax into `out[..ncoeff(lmax)]`. Requires
/// v != 0; callers guarantee separation.
pub fn irregular_into(lmax: usize, v: Vector3<f64>, out: &mut [Complex64]) {
    debug_assert!(out.len() >= ncoeff(lmax));
    let r2 = v.norm_squared();
    debug_assert!(r2 > 0.0);
    let inv_r2 = 1.0 / r2;
    let zeta = Complex64::new(v.x, v.y);
    let z = v.z;
    out[0] = Complex64::new(inv_r2.sqrt(), 0.0);
    for m in 1..=lmax {
        out[idx(m, m as i32)] =
            out[idx(m - 1, m as i32 - 1)] * zeta * (-((2 * m - 1) as f64) * inv_r2);
    }
    for m in 0..lmax {
        out[idx(m + 1, m as i32)] = out[idx(m, m as i32)] * (z * (2 * m + 1) as f64 * inv_r2);
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let a = out[idx(l - 1, m as i32)] * (z * (2 * l - 1) as f64);
            let b = out[idx(l - 2, m as i32)] * (((l - 1) * (l - 1) - m * m) as f64);
            out[idx(l, m as i32)] = (a - b) * inv_r2;
        }
    }
    fill_negative_orders(lmax, out);
}

/// Shifts a multipole expansion about a to one about b and accumulates into
/// `out`. `edge_r` is R(a - b) through degree `lmax`. Exact per coefficient:
/// the shifted degree-l term only consumes source degrees <= l.
pub fn m2m(child: &[Complex64], edge_r: &[Complex64], lmax: usize, out: &mut [Complex64]) {
    for l in 0..=lmax {
        for m in -(l as i32)..=l as i32 {
            let mut acc = Complex64::ZERO;
            for j in 0..=l {
                let rem = (l - j) as i32;
                let lo = (-(j as i32)).max(m - rem);
                let hi = (j as i32).min(m + rem);
                for k in lo..=hi {
                    acc += child[idx(j, k)] * edge_r[idx(l - j, m - k)];
                }
            }
            out[idx(l, m)] += acc;
        }
    }
}

/// Converts a multipole about a source center into a local expansion about a
/// target center, accumulating into `out`. `s_d` is S(d) through degree
/// 2 lmax, where d = target center - source center.
pub fn m2l(mult: &[Complex64], s_d: &[Complex64], lmax: usize, out: &mut [Complex64]) {
    for j in 0..=lmax {
        let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
        for k in -(j as i32)..=j as i32 {
            let mut acc = Complex64::ZERO;
            for l in 0..=lmax {
                for m in -(l as i32)..=l as i32 {
                    acc += mult[idx(l, m)] * s_d[idx(l + j, m + k)].conj();
                }
            }
            out[idx(j, k)] += acc * sign;
        }
    }
}

/// Shifts a local expansion about b to one about c and accumulates into
/// `out`. `edge_r` is R(c - b) through degree `lmax`. Exact on the truncated
/// series: degree-j output only consumes degrees >= j.
pub fn l2l(parent: &[Complex64], edge_r: &[Complex64], lmax: usize, out: &mut [Complex64]) {
    for j in 0..=lmax {
        for k in -(j as i32)..=j as i32 {
            let mut acc = Complex64::ZERO;
            for l in j..=lmax {
                let rem = (l - j) as i32;
                let lo = (-(l as i32)).max(k - rem);
                let hi = (l as i32).min(k + rem);
                for m in lo..=hi {
                    acc += parent[idx(l, m)] * edge_r[idx(l - j, m - k)];
                }
            }
            out[idx(j, k)] += acc;
        }
    }
}

/// Potential of a multipole expansion at a point outside its radius;
/// `s_x` is S(x - center) through the expansion degree.
pub fn multipole_potential(mult: &[Complex64], s_x: &[Complex64], lmax: usize) -> f64 {
    let mut acc = Complex64::ZERO;
    for i in 0..ncoeff(lmax) {
        acc += mult[i] * s_x[i].conj();
    }
    acc.re
}

/// Potential of a local expansion; `r_x` is R(x - center) through the
/// expansion degree.
pub fn local_potential(local: &[Complex64], r_x: &[Complex64], lmax: usize) -> f64 {
    let mut acc = Complex64::ZERO;
    for i in 0..ncoeff(lmax) {
        acc += local[i] * r_x[i];
    }
    acc.re
}

/// Gradient of a local expansion's potential, from the closed derivative
/// rules d/dz R_l^m = R_{l-1}^m, (d/dx + i d/dy) R_l^m = R_{l-1}^{m+1},
/// (d/dx - i d/dy) R_l^m = -R_{l-1}^{m-1}.
pub fn local_gradient(local: &[Complex64], r_x: &[Complex64], lmax: usize) -> Vector3<f64> {
    let mut gx = Complex64::ZERO;
    let mut gy = Complex64::ZERO;
    let mut gz = Complex64::ZERO;
    for l in 1..=lmax as i32 {
        for m in -l..=l {
            let c = local[idx(l as usize, m)];
            let rp = coeff(r_x, l - 1, m + 1);
            let rm = coeff(r_x, l - 1, m - 1);
            gx += c * (rp - rm) * 0.5;
            gy += c * (rp + rm) * Complex64::new(0.0, -0.5);
            gz += c * coeff(r_x, l - 1, m);
        }
    }
    Vector3::new(gx.re, gy.re, gz.re)
}
