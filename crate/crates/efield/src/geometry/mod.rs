//! Parametric surface patches and closest-point projection.
//!
//! Patches come in two families: tensor-product B-splines (optionally rational,
//! evaluated homogeneously) and analytic primitives (sphere, cylinder, plane).
//! Both expose the same interface: evaluation, first and second derivatives,
//! and closest-point projection. Analytic kinds exist so that solver tests can
//! run on exact geometry instead of fitted splines.

mod analytic;
mod bspline;
mod project;

pub use analytic::{Cylinder, Plane, Sphere};
pub use bspline::BSplinePatch;
pub use project::{closest_point, ProjectionResult};

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("parameter ({u}, {v}) outside patch domain u in [{u_min}, {u_max}], v in [{v_min}, {v_max}]")]
    OutOfDomain {
        u: f64,
        v: f64,
        u_min: f64,
        u_max: f64,
        v_min: f64,
        v_max: f64,
    },
    #[error("degenerate parameterization at ({u}, {v}): tangents are parallel")]
    DegenerateParameterization { u: f64, v: f64 },
    #[error("invalid patch definition: {0}")]
    InvalidPatch(String),
}

/// Rectangular parameter domain of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRect {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl ParamRect {
    pub const UNIT: ParamRect = ParamRect {
        u_min: 0.0,
        u_max: 1.0,
        v_min: 0.0,
        v_max: 1.0,
    };

    pub fn contains(&self, u: f64, v: f64) -> bool {
        // Small slack absorbs roundoff from parameter arithmetic.
        let eu = 1e-12 * (self.u_max - self.u_min).abs().max(1.0);
        let ev = 1e-12 * (self.v_max - self.v_min).abs().max(1.0);
        u >= self.u_min - eu && u <= self.u_max + eu && v >= self.v_min - ev && v <= self.v_max + ev
    }

    pub fn clamp(&self, u: f64, v: f64) -> (f64, f64) {
        (u.clamp(self.u_min, self.u_max), v.clamp(self.v_min, self.v_max))
    }
}

/// Point and derivatives of a patch at one parameter pair, through second order.
#[derive(Debug, Clone, Copy)]
pub struct PatchFrame {
    pub point: Point3<f64>,
    pub du: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub duu: Vector3<f64>,
    pub duv: Vector3<f64>,
    pub dvv: Vector3<f64>,
}

impl PatchFrame {
    /// Unit normal from the parametric tangents; errors where they are parallel.
    pub fn unit_normal(&self, u: f64, v: f64) -> Result<Vector3<f64>, GeometryError> {
        let c = self.du.cross(&self.dv);
        let scale = self.du.norm() * self.dv.norm();
        if c.norm() < 1e-14 * scale || scale == 0.0 {
            return Err(GeometryError::DegenerateParameterization { u, v });
        }
        Ok(c / c.norm())
    }
}

/// A parametric surface patch.
#[derive(Debug, Clone)]
pub enum SurfacePatch {
    BSpline(BSplinePatch),
    Sphere(Sphere),
    Cylinder(Cylinder),
    Plane(Plane),
}

impl SurfacePatch {
    pub fn domain(&self) -> ParamRect {
        match self {
            SurfacePatch::BSpline(p) => p.domain(),
            SurfacePatch::Sphere(p) => p.domain(),
            SurfacePatch::Cylinder(p) => p.domain(),
            SurfacePatch::Plane(p) => p.domain(),
        }
    }

    /// Surface point at (u, v).
    pub fn eval(&self, u: f64, v: f64) -> Result<Point3<f64>, GeometryError> {
        self.check_domain(u, v)?;
        Ok(self.frame_unchecked(u, v).point)
    }

    /// Point, tangents and unit normal, as needed by measure and projection code.
    pub fn derivatives(
        &self,
        u: f64,
        v: f64,
    ) -> Result<(Point3<f64>, Vector3<f64>, Vector3<f64>, Vector3<f64>), GeometryError> {
        let f = self.frame(u, v)?;
        let n = f.unit_normal(u, v)?;
        Ok((f.point, f.du, f.dv, n))
    }

    /// Full second-order frame.
    pub fn frame(&self, u: f64, v: f64) -> Result<PatchFrame, GeometryError> {
        self.check_domain(u, v)?;
        Ok(self.frame_unchecked(u, v))
    }

    fn check_domain(&self, u: f64, v: f64) -> Result<(), GeometryError> {
        let d = self.domain();
        if !d.contains(u, v) {
            return Err(GeometryError::OutOfDomain {
                u,
                v,
                u_min: d.u_min,
                u_max: d.u_max,
                v_min: d.v_min,
                v_max: d.v_max,
            });
        }
        Ok(())
    }

    pub(crate) fn frame_unchecked(&self, u: f64, v: f64) -> PatchFrame {
        match self {
            SurfacePatch::BSpline(p) => p.frame(u, v),
            SurfacePatch::Sphere(p) => p.frame(u, v),
            SurfacePatch::Cylinder(p) => p.frame(u, v),
            SurfacePatch::Plane(p) => p.frame(u, v),
        }
    }

    /// Cheap upper bound on the patch extent; used to scale tolerances.
    pub fn diameter(&self) -> f64 {
        match self {
            SurfacePatch::BSpline(p) => p.control_net_diameter(),
            SurfacePatch::Sphere(p) => 2.0 * p.radius,
            SurfacePatch::Cylinder(p) => {
                let len = p.v_range.1 - p.v_range.0;
                (4.0 * p.radius * p.radius + len * len).sqrt()
            }
            SurfacePatch::Plane(p) => (p.u_vec + p.v_vec).norm().max((p.u_vec - p.v_vec).norm()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bilinear_patch() -> SurfacePatch {
        SurfacePatch::BSpline(
            BSplinePatch::new(
                1,
                1,
                vec![0.0, 0.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![
                    Point3::new(0.0, 0.0, 0.0),
                    Point3::new(1.0, 0.0, 0.0),
                    Point3::new(0.0, 1.0, 0.0),
                    Point3::new(1.0, 1.0, 0.0),
                ],
                None,
            )
            .unwrap(),
        )
    }

    #[test]
    fn bilinear_center() {
        let p = bilinear_patch();
        let x = p.eval(0.5, 0.5).unwrap();
        assert_relative_eq!(x.x, 0.5, epsilon = 1e-15);
        assert_relative_eq!(x.y, 0.5, epsilon = 1e-15);
        assert_relative_eq!(x.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bilinear_equals_corner_interpolation() {
        let p = bilinear_patch();
        for &(u, v) in &[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8), (1.0, 1.0), (0.25, 0.0)] {
            let x = p.eval(u, v).unwrap();
            assert_relative_eq!(x.x, u, epsilon = 1e-15);
            assert_relative_eq!(x.y, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn sphere_north_pole_on_surface() {
        let p = SurfacePatch::Sphere(Sphere::new(Point3::origin(), 1.0));
        let x = p.eval(0.0, 0.0).unwrap();
        assert_eq!(x.coords.norm(), 1.0);
        assert_relative_eq!(x.z, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_normal_is_radial() {
        let p = SurfacePatch::Sphere(Sphere::new(Point3::new(1.0, -2.0, 0.5), 2.0));
        for &(u, v) in &[(0.4, 0.3), (1.9, 5.0), (2.7, 1.1)] {
            let (x, _, _, n) = p.derivatives(u, v).unwrap();
            let radial = (x - Point3::new(1.0, -2.0, 0.5)).normalize();
            assert!(n.dot(&radial).abs() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn sphere_pole_is_degenerate() {
        let p = SurfacePatch::Sphere(Sphere::new(Point3::origin(), 1.0));
        assert!(matches!(
            p.derivatives(0.0, 0.0),
            Err(GeometryError::DegenerateParameterization { .. })
        ));
    }

    #[test]
    fn plane_normal() {
        let p = SurfacePatch::Plane(Plane::new(
            Point3::origin(),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(0.0, 3.0, 0.0),
        ));
        let (_, _, _, n) = p.derivatives(0.5, 0.5).unwrap();
        assert_relative_eq!(n.z.abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn out_of_domain_rejected() {
        let p = bilinear_patch();
        assert!(matches!(p.eval(1.5, 0.5), Err(GeometryError::OutOfDomain { .. })));
    }

    /// Quadratic rational arc with middle weight 1/sqrt(2), swept along z:
    /// every u cross-section is an exact quarter circle of radius 1.
    #[test]
    fn quarter_circle_nurbs_mid_parameter() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let ctrl = vec![
            // v = 0 row (z = 0), then v = 1 row (z = 1); u runs along the arc.
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 0.0, 1.0),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(0.0, 1.0, 1.0),
        ];
        let weights = vec![1.0, w, 1.0, 1.0, w, 1.0];
        let p = SurfacePatch::BSpline(
            BSplinePatch::new(
                2,
                1,
                vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 1.0],
                ctrl,
                Some(weights),
            )
            .unwrap(),
        );
        for &(u, v) in &[(0.5, 0.25), (0.5, 0.9), (0.123, 0.5), (0.77, 0.0)] {
            let x = p.eval(u, v).unwrap();
            let r = (x.x * x.x + x.y * x.y).sqrt();
            assert!((r - 1.0).abs() < 1e-14, "radius off: {r}");
        }
    }

    #[test]
    fn bspline_tangents_match_finite_differences() {
        // Bi-quadratic patch with a non-trivial shape.
        let mut ctrl = Vec::new();
        for j in 0..3 {
            for i in 0..4 {
                let x = i as f64;
                let y = j as f64;
                ctrl.push(Point3::new(x, y, (0.7 * x - 0.4 * y).sin()));
            }
        }
        let p = SurfacePatch::BSpline(
            BSplinePatch::new(
                2,
                2,
                vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0],
                vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
                ctrl,
                None,
            )
            .unwrap(),
        );
        let h = 1e-5;
        for &(u, v) in &[(0.3, 0.4), (0.61, 0.52), (0.9, 0.13)] {
            let (_, du, dv, _) = p.derivatives(u, v).unwrap();
            let fd_u = (p.eval(u + h, v).unwrap() - p.eval(u - h, v).unwrap()) / (2.0 * h);
            let fd_v = (p.eval(u, v + h).unwrap() - p.eval(u, v - h).unwrap()) / (2.0 * h);
            assert!((du - fd_u).norm() <= 1e-8 * du.norm().max(1.0));
            assert!((dv - fd_v).norm() <= 1e-8 * dv.norm().max(1.0));
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let ctrl = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 0.0, 2.0),
            Point3::new(1.0, 1.0, 2.0),
            Point3::new(0.0, 1.0, 2.0),
        ];
        let weights = vec![1.0, w, 1.0, 1.0, w, 1.0];
        let p = SurfacePatch::BSpline(
            BSplinePatch::new(
                2,
                1,
                vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 1.0],
                ctrl,
                Some(weights),
            )
            .unwrap(),
        );
        let h = 1e-4;
        let (u, v) = (0.37, 0.42);
        let f = p.frame(u, v).unwrap();
        let fuu = (p.eval(u + h, v).unwrap().coords - 2.0 * p.eval(u, v).unwrap().coords
            + p.eval(u - h, v).unwrap().coords)
            / (h * h);
        let fuv = (p.eval(u + h, v + h).unwrap().coords - p.eval(u + h, v - h).unwrap().coords
            - p.eval(u - h, v + h).unwrap().coords
            + p.eval(u - h, v - h).unwrap().coords)
            / (4.0 * h * h);
        assert!((f.duu - fuu).norm() < 1e-5 * f.duu.norm().max(1.0));
        assert!((f.duv - fuv).norm() < 1e-5 * f.duv.norm().max(1.0));
    }
}
