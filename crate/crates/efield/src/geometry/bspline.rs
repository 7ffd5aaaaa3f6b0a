//! Tensor-product B-spline / NURBS patches.
//!
//! Rational patches are evaluated through homogeneous 4D control points and a
//! perspective division, so the polynomial and rational cases share one code
//! path. Derivatives of rational surfaces follow from differentiating
//! A(u,v) = w(u,v) S(u,v) and solving for the S derivatives.

use super::{GeometryError, ParamRect, PatchFrame};
use nalgebra::{Point3, Vector3, Vector4};

/// Index of the knot span containing `u`, clamped to valid spans so that the
/// right end of the domain evaluates in the last span.
pub fn find_span(knots: &[f64], degree: usize, n_ctrl: usize, u: f64) -> usize {
    if u >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    if u <= knots[degree] {
        return degree;
    }
    let mut lo = degree;
    let mut hi = n_ctrl;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Nonzero basis functions and derivatives at `u`.
///
/// Returns `ders[k][j]` = k-th derivative of basis function `span - degree + j`
/// for `k = 0..=n_ders`, `j = 0..=degree`.
pub fn ders_basis_funs(span: usize, u: f64, degree: usize, n_ders: usize, knots: &[f64]) -> Vec<Vec<f64>> {
    let p = degree;
    let n = n_ders.min(p);
    let mut ders = vec![vec![0.0; p + 1]; n_ders + 1];
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    if n == 0 {
        return ders;
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let mut s1 = 0usize;
        let mut s2 = 1usize;
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as i64 - k as i64;
            let pk = p as i64 - k as i64;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as i64 - 1 <= pk { k - 1 } else { p - r };
            for j in j1..=j2 {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][(rk + j as i64) as usize];
                d += a[s2][j] * ndu[(rk + j as i64) as usize][pk as usize];
            }
            if r as i64 <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                d += a[s2][k] * ndu[r][pk as usize];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

/// Tensor-product B-spline patch, possibly rational.
///
/// Control points are stored row-major over (i, j) with i (the u index)
/// fastest: `ctrl[j * n_ctrl_u + i]`, already in homogeneous form
/// (x w, y w, z w, w).
#[derive(Debug, Clone)]
pub struct BSplinePatch {
    pub degree_u: usize,
    pub degree_v: usize,
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub n_ctrl_u: usize,
    pub n_ctrl_v: usize,
    ctrl: Vec<Vector4<f64>>,
}

impl BSplinePatch {
    pub fn new(
        degree_u: usize,
        degree_v: usize,
        knots_u: Vec<f64>,
        knots_v: Vec<f64>,
        control_points: Vec<Point3<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, GeometryError> {
        let n_ctrl_u = knots_u.len().checked_sub(degree_u + 1).ok_or_else(|| {
            GeometryError::InvalidPatch("u knot vector shorter than degree + 1".into())
        })?;
        let n_ctrl_v = knots_v.len().checked_sub(degree_v + 1).ok_or_else(|| {
            GeometryError::InvalidPatch("v knot vector shorter than degree + 1".into())
        })?;
        if n_ctrl_u <= degree_u || n_ctrl_v <= degree_v {
            return Err(GeometryError::InvalidPatch(
                "control net too small for requested degree".into(),
            ));
        }
        if control_points.len() != n_ctrl_u * n_ctrl_v {
            return Err(GeometryError::InvalidPatch(format!(
                "expected {} control points, got {}",
                n_ctrl_u * n_ctrl_v,
                control_points.len()
            )));
        }
        for ks in [&knots_u, &knots_v] {
            if ks.windows(2).any(|w| w[1] < w[0]) {
                return Err(GeometryError::InvalidPatch("knot vector not non-decreasing".into()));
            }
        }
        if let Some(ws) = &weights {
            if ws.len() != control_points.len() {
                return Err(GeometryError::InvalidPatch("weight count != control point count".into()));
            }
            if ws.iter().any(|&w| !(w > 0.0)) {
                return Err(GeometryError::InvalidPatch("weights must be strictly positive".into()));
            }
        }
        let ctrl = control_points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let w = weights.as_ref().map_or(1.0, |ws| ws[k]);
                Vector4::new(p.x * w, p.y * w, p.z * w, w)
            })
            .collect();
        Ok(Self {
            degree_u,
            degree_v,
            knots_u,
            knots_v,
            n_ctrl_u,
            n_ctrl_v,
            ctrl,
        })
    }

    pub fn domain(&self) -> ParamRect {
        ParamRect {
            u_min: self.knots_u[self.degree_u],
            u_max: self.knots_u[self.n_ctrl_u],
            v_min: self.knots_v[self.degree_v],
            v_max: self.knots_v[self.n_ctrl_v],
        }
    }

    pub fn control_net_diameter(&self) -> f64 {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for c in &self.ctrl {
            let p = Vector3::new(c.x / c.w, c.y / c.w, c.z / c.w);
            min = min.inf(&p);
            max = max.sup(&p);
        }
        (max - min).norm()
    }

    /// Homogeneous derivatives A_kl = d^{k+l} A / du^k dv^l for k + l <= 2.
    fn homogeneous_derivs(&self, u: f64, v: f64) -> [[Vector4<f64>; 3]; 3] {
        let su = find_span(&self.knots_u, self.degree_u, self.n_ctrl_u, u);
        let sv = find_span(&self.knots_v, self.degree_v, self.n_ctrl_v, v);
        let bu = ders_basis_funs(su, u, self.degree_u, 2, &self.knots_u);
        let bv = ders_basis_funs(sv, v, self.degree_v, 2, &self.knots_v);
        let mut a = [[Vector4::zeros(); 3]; 3];
        for l in 0..=self.degree_v.min(2) {
            for k in 0..=self.degree_u.min(2) {
                let mut acc = Vector4::zeros();
                for j in 0..=self.degree_v {
                    let row = sv - self.degree_v + j;
                    let mut inner = Vector4::zeros();
                    for i in 0..=self.degree_u {
                        let col = su - self.degree_u + i;
                        inner += self.ctrl[row * self.n_ctrl_u + col] * bu[k][i];
                    }
                    acc += inner * bv[l][j];
                }
                a[k][l] = acc;
            }
        }
        a
    }

    pub fn frame(&self, u: f64, v: f64) -> PatchFrame {
        let a = self.homogeneous_derivs(u, v);
        let w = a[0][0].w;
        let s = a[0][0].xyz() / w;
        let su = (a[1][0].xyz() - s * a[1][0].w) / w;
        let sv = (a[0][1].xyz() - s * a[0][1].w) / w;
        let suu = (a[2][0].xyz() - su * (2.0 * a[1][0].w) - s * a[2][0].w) / w;
        let svv = (a[0][2].xyz() - sv * (2.0 * a[0][1].w) - s * a[0][2].w) / w;
        let suv = (a[1][1].xyz() - sv * a[1][0].w - su * a[0][1].w - s * a[1][1].w) / w;
        PatchFrame {
            point: Point3::from(s),
            du: su,
            dv: sv,
            duu: suu,
            duv: suv,
            dvv: svv,
        }
    }

    /// Basis values in u at `u` (for tests of the partition property).
    pub fn basis_u(&self, u: f64) -> Vec<f64> {
        let span = find_span(&self.knots_u, self.degree_u, self.n_ctrl_u, u);
        ders_basis_funs(span, u, self.degree_u, 0, &self.knots_u)[0].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open_knots(degree: usize, n_ctrl: usize) -> Vec<f64> {
        let interior = n_ctrl - degree - 1;
        let mut ks = vec![0.0; degree + 1];
        for i in 0..interior {
            ks.push((i + 1) as f64 / (interior + 1) as f64);
        }
        ks.extend(std::iter::repeat(1.0).take(degree + 1));
        ks
    }

    #[test]
    fn basis_partition_of_unity_cubic() {
        let degree = 3;
        let n_ctrl = 8;
        let knots = open_knots(degree, n_ctrl);
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            let span = find_span(&knots, degree, n_ctrl, u);
            let vals = ders_basis_funs(span, u, degree, 0, &knots);
            let sum: f64 = vals[0].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!(vals[0].iter().all(|&b| b >= -1e-15));
        }
    }

    proptest! {
        #[test]
        fn basis_partition_of_unity_property(u in 0.0f64..=1.0, degree in 1usize..=4, extra in 0usize..=5) {
            let n_ctrl = degree + 1 + extra;
            let knots = open_knots(degree, n_ctrl);
            let span = find_span(&knots, degree, n_ctrl, u);
            let vals = ders_basis_funs(span, u, degree, 0, &knots);
            let sum: f64 = vals[0].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-14);
            prop_assert!(vals[0].iter().all(|&b| b >= -1e-15));
            // Derivatives of the partition of unity vanish.
            let d1 = ders_basis_funs(span, u, degree, 1, &knots);
            let dsum: f64 = d1[1].iter().sum();
            prop_assert!(dsum.abs() < 1e-11);
        }
    }

    #[test]
    fn find_span_endpoints() {
        let knots = open_knots(2, 5);
        assert_eq!(find_span(&knots, 2, 5, 0.0), 2);
        assert_eq!(find_span(&knots, 2, 5, 1.0), 4);
    }
}
