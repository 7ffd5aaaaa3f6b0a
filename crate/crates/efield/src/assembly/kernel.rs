//! Closed-form kernels of the boundary integral operators.

use nalgebra::{Point3, Vector3};

use super::AssemblyError;

const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Which fundamental-solution kernel an operator block integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// U(x, y) = 1 / (4 pi |x - y|).
    SingleLayer,
    /// grad_x U(x, y) . n(x) = -(x - y) . n(x) / (4 pi |x - y|^3).
    AdjointDoubleLayer,
}

/// Kernel value at a separated point pair; `n_x` is the oriented unit normal
/// at the observation point x (ignored by the single layer). Coincident
/// points are a caller bug: singular pairs must be transformed to regular
/// integrands before any kernel evaluation.
pub fn eval_kernel(
    kind: KernelKind,
    x: &Point3<f64>,
    y: &Point3<f64>,
    n_x: &Vector3<f64>,
) -> Result<f64, AssemblyError> {
    let d = x - y;
    let r = d.norm();
    if r < 1e-300 {
        return Err(AssemblyError::KernelSingularity { x: *x });
    }
    Ok(match kind {
        KernelKind::SingleLayer => INV_4PI / r,
        KernelKind::AdjointDoubleLayer => -d.dot(n_x) * INV_4PI / (r * r * r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_matches_the_closed_form() {
        let x = Point3::new(0.3, -0.2, 0.9);
        let n = Vector3::new(0.0, 0.0, 1.0);
        let y1 = Point3::new(0.3, -0.2, -0.1);
        let v = eval_kernel(KernelKind::SingleLayer, &x, &y1, &n).unwrap();
        assert!((v - INV_4PI).abs() < 1e-16);
        let y2 = Point3::new(0.3, -0.2, 2.9);
        let v = eval_kernel(KernelKind::SingleLayer, &x, &y2, &n).unwrap();
        assert!((v - 0.5 * INV_4PI).abs() < 1e-16);
    }

    #[test]
    fn adjoint_kernel_matches_the_radial_derivative() {
        // x on the unit sphere, y at the origin, outward normal: d/dr 1/(4 pi r).
        let x = Point3::new(1.0, 0.0, 0.0);
        let y = Point3::origin();
        let n = Vector3::new(1.0, 0.0, 0.0);
        let v = eval_kernel(KernelKind::AdjointDoubleLayer, &x, &y, &n).unwrap();
        assert!((v + INV_4PI).abs() < 1e-16);
    }

    #[test]
    fn coincident_points_error() {
        let x = Point3::new(1.0, 2.0, 3.0);
        let n = Vector3::new(1.0, 0.0, 0.0);
        assert!(eval_kernel(KernelKind::SingleLayer, &x, &x, &n).is_err());
    }
}
