//! Gauss-Legendre rules on [0, 1].

use std::sync::OnceLock;

use super::QuadratureError;

pub const MAX_GAUSS_ORDER: usize = 30;

/// An n-point Gauss-Legendre rule on [0, 1]; exact for polynomials of degree
/// 2n - 1. Points are sorted ascending.
#[derive(Debug, Clone)]
pub struct GaussRule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre P_n(x) and P'_n(x) via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_rule(n: usize) -> GaussRule1d {
    if n == 1 {
        return GaussRule1d {
            points: vec![0.5],
            weights: vec![1.0],
        };
    }
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess for the i-th root (descending in x).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        // Map [-1, 1] -> [0, 1].
        points.push(0.5 * (x + 1.0));
        weights.push(0.5 * w);
    }
    points.reverse();
    weights.reverse();
    GaussRule1d { points, weights }
}

static RULES: [OnceLock<GaussRule1d>; MAX_GAUSS_ORDER] =
    [const { OnceLock::new() }; MAX_GAUSS_ORDER];

pub fn gauss_rule(n: usize) -> Result<&'static GaussRule1d, QuadratureError> {
    if n == 0 || n > MAX_GAUSS_ORDER {
        return Err(QuadratureError::UnsupportedOrder { order: n });
    }
    Ok(RULES[n - 1].get_or_init(|| build_rule(n)))
}

/// Like [`gauss_rule`] but panics on unsupported orders; for internal call
/// sites whose orders are validated at configuration time.
pub fn gauss_1d(n: usize) -> &'static GaussRule1d {
    gauss_rule(n).expect("gauss order validated by caller")
}
