//! Analytic surface patches: sphere, cylinder, plane.
//!
//! These provide exact geometry (and exact closest-point projections) so that
//! solver validation is not polluted by spline fitting error.

use super::{GeometryError, ParamRect, PatchFrame};
use nalgebra::{Point3, Vector3};
use std::f64::consts::{PI, TAU};

/// Sphere parameterized by polar angle u in [0, pi] from the +z pole and
/// azimuth v in [0, 2 pi]. The parametric normal points outward.
#[derive(Debug, Clone)]
pub struct Sphere {
    pub center: Point3<f64>,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "sphere radius must be positive");
        Self { center, radius }
    }

    pub fn domain(&self) -> ParamRect {
        ParamRect {
            u_min: 0.0,
            u_max: PI,
            v_min: 0.0,
            v_max: TAU,
        }
    }

    pub fn frame(&self, u: f64, v: f64) -> PatchFrame {
        let r = self.radius;
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let radial = Vector3::new(su * cv, su * sv, cu);
        let d_u = Vector3::new(cu * cv, cu * sv, -su);
        let d_v = Vector3::new(-su * sv, su * cv, 0.0);
        PatchFrame {
            point: self.center + radial * r,
            du: d_u * r,
            dv: d_v * r,
            duu: -radial * r,
            duv: Vector3::new(-cu * sv, cu * cv, 0.0) * r,
            dvv: Vector3::new(-su * cv, -su * sv, 0.0) * r,
        }
    }

    /// Exact projection: the foot lies on the ray from the center through x.
    pub fn project(&self, x: &Point3<f64>) -> (f64, f64, Point3<f64>, f64) {
        let d = x - self.center;
        let n = d.norm();
        if n < 1e-300 {
            // Center point: every surface point is closest; pick the equator seam.
            let foot = self.center + Vector3::new(self.radius, 0.0, 0.0);
            return (PI / 2.0, 0.0, foot, self.radius);
        }
        let dir = d / n;
        let u = dir.z.clamp(-1.0, 1.0).acos();
        let v = dir.y.atan2(dir.x).rem_euclid(TAU);
        let foot = self.center + dir * self.radius;
        (u, v, foot, (n - self.radius).abs())
    }
}

/// Cylinder barrel parameterized by angle u in [0, 2 pi] and axial coordinate
/// v in `v_range`. The parametric normal points away from the axis.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub center: Point3<f64>,
    pub axis: Vector3<f64>,
    pub radius: f64,
    pub v_range: (f64, f64),
    e1: Vector3<f64>,
    e2: Vector3<f64>,
}

impl Cylinder {
    pub fn new(
        center: Point3<f64>,
        axis: Vector3<f64>,
        radius: f64,
        v_range: (f64, f64),
    ) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::InvalidPatch("cylinder radius must be positive".into()));
        }
        let n = axis.norm();
        if n < 1e-14 {
            return Err(GeometryError::InvalidPatch("cylinder axis must be nonzero".into()));
        }
        if v_range.1 <= v_range.0 {
            return Err(GeometryError::InvalidPatch("cylinder axial range must be increasing".into()));
        }
        let axis = axis / n;
        // Any stable orthonormal pair completing the axis.
        let helper = if axis.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = (helper - axis * helper.dot(&axis)).normalize();
        let e2 = axis.cross(&e1);
        Ok(Self {
            center,
            axis,
            radius,
            v_range,
            e1,
            e2,
        })
    }

    pub fn domain(&self) -> ParamRect {
        ParamRect {
            u_min: 0.0,
            u_max: TAU,
            v_min: self.v_range.0,
            v_max: self.v_range.1,
        }
    }

    pub fn frame(&self, u: f64, v: f64) -> PatchFrame {
        let (su, cu) = u.sin_cos();
        let radial = self.e1 * cu + self.e2 * su;
        let tangent = -self.e1 * su + self.e2 * cu;
        PatchFrame {
            point: self.center + radial * self.radius + self.axis * v,
            du: tangent * self.radius,
            dv: self.axis,
            duu: -radial * self.radius,
            duv: Vector3::zeros(),
            dvv: Vector3::zeros(),
        }
    }

    pub fn project(&self, x: &Point3<f64>) -> (f64, f64, Point3<f64>, f64) {
        let d = x - self.center;
        let v = d.dot(&self.axis).clamp(self.v_range.0, self.v_range.1);
        let radial = d - self.axis * d.dot(&self.axis);
        let u = if radial.norm() < 1e-300 {
            0.0
        } else {
            radial.dot(&self.e2).atan2(radial.dot(&self.e1)).rem_euclid(TAU)
        };
        let f = self.frame(u, v);
        let dist = (x - f.point).norm();
        (u, v, f.point, dist)
    }
}

/// Parallelogram patch: origin + u * u_vec + v * v_vec over the unit square.
#[derive(Debug, Clone)]
pub struct Plane {
    pub origin: Point3<f64>,
    pub u_vec: Vector3<f64>,
    pub v_vec: Vector3<f64>,
}

impl Plane {
    pub fn new(origin: Point3<f64>, u_vec: Vector3<f64>, v_vec: Vector3<f64>) -> Self {
        assert!(
            u_vec.cross(&v_vec).norm() > 1e-14 * u_vec.norm() * v_vec.norm(),
            "plane edge vectors must be independent"
        );
        Self { origin, u_vec, v_vec }
    }

    pub fn domain(&self) -> ParamRect {
        ParamRect::UNIT
    }

    pub fn frame(&self, u: f64, v: f64) -> PatchFrame {
        PatchFrame {
            point: self.origin + self.u_vec * u + self.v_vec * v,
            du: self.u_vec,
            dv: self.v_vec,
            duu: Vector3::zeros(),
            duv: Vector3::zeros(),
            dvv: Vector3::zeros(),
        }
    }

    /// Box-constrained quadratic minimization by coordinate descent; exact for
    /// orthogonal edge vectors and convergent in general.
    pub fn project(&self, x: &Point3<f64>) -> (f64, f64, Point3<f64>, f64) {
        let d = x - self.origin;
        let uu = self.u_vec.dot(&self.u_vec);
        let vv = self.v_vec.dot(&self.v_vec);
        let uv = self.u_vec.dot(&self.v_vec);
        let bu = d.dot(&self.u_vec);
        let bv = d.dot(&self.v_vec);
        let mut u = (bu / uu).clamp(0.0, 1.0);
        let mut v = (bv / vv).clamp(0.0, 1.0);
        for _ in 0..32 {
            let nu = ((bu - uv * v) / uu).clamp(0.0, 1.0);
            let nv = ((bv - uv * nu) / vv).clamp(0.0, 1.0);
            if (nu - u).abs() < 1e-16 && (nv - v).abs() < 1e-16 {
                u = nu;
                v = nv;
                break;
            }
            u = nu;
            v = nv;
        }
        let foot = self.origin + self.u_vec * u + self.v_vec * v;
        (u, v, foot, (x - foot).norm())
    }
}
