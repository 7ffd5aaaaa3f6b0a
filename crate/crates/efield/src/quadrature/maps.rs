//! Affine placements of reference frames inside reference elements, and the
//! plain tensor rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::gauss::gauss_rule;
use super::{ProductRule, QuadratureError, SubPairRule};
use crate::mesh::ElementShape;

/// (u, v) -> origin + u * du + v * dv.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap2 {
    pub origin: [f64; 2],
    pub du: [f64; 2],
    pub dv: [f64; 2],
}

impl AffineMap2 {
    pub fn identity() -> Self {
        AffineMap2 {
            origin: [0.0, 0.0],
            du: [1.0, 0.0],
            dv: [0.0, 1.0],
        }
    }

    pub fn apply(&self, u: f64, v: f64) -> [f64; 2] {
        [
            self.origin[0] + u * self.du[0] + v * self.dv[0],
            self.origin[1] + u * self.du[1] + v * self.dv[1],
        ]
    }

    fn linear(&self, d: [f64; 2]) -> [f64; 2] {
        [
            d[0] * self.du[0] + d[1] * self.dv[0],
            d[0] * self.du[1] + d[1] * self.dv[1],
        ]
    }

    /// |det| of the linear part: the area scale factor.
    pub fn jacobian(&self) -> f64 {
        (self.du[0] * self.dv[1] - self.du[1] * self.dv[0]).abs()
    }

    /// The composition `outer` after `self`.
    pub fn then(&self, outer: &AffineMap2) -> AffineMap2 {
        AffineMap2 {
            origin: outer.apply(self.origin[0], self.origin[1]),
            du: outer.linear(self.du),
            dv: outer.linear(self.dv),
        }
    }

    /// The affine map sending the reference corners of `shape` onto `pts`
    /// (in corner order). Quads must supply an affine-consistent 4th corner.
    pub fn from_corner_points(shape: ElementShape, pts: &[[f64; 2]]) -> Self {
        debug_assert_eq!(pts.len(), shape.corner_count());
        let origin = pts[0];
        let du = [pts[1][0] - origin[0], pts[1][1] - origin[1]];
        let last = shape.corner_count() - 1;
        let dv = [pts[last][0] - origin[0], pts[last][1] - origin[1]];
        if shape == ElementShape::Quad {
            debug_assert!(
                (pts[2][0] - (origin[0] + du[0] + dv[0])).abs() < 1e-12
                    && (pts[2][1] - (origin[1] + du[1] + dv[1])).abs() < 1e-12,
                "quad corners are not an affine image of the reference square"
            );
        }
        AffineMap2 { origin, du, dv }
    }

    fn relabel(shape: ElementShape, perm: &[usize]) -> Self {
        let pts: Vec<[f64; 2]> = perm
            .iter()
            .map(|&k| {
                let (u, v) = shape.corner_ref(k);
                [u, v]
            })
            .collect();
        Self::from_corner_points(shape, &pts)
    }
}

/// Self-map of the reference element carrying the canonical shared edge
/// (edge 0, traversed forward) onto local edge `e`. With `flip`, the
/// canonical edge parameter runs against the local edge direction.
pub fn edge_relabel(shape: ElementShape, e: usize, flip: bool) -> AffineMap2 {
    match shape {
        ElementShape::Quad => {
            let perm: Vec<usize> = if flip {
                [1, 0, 3, 2].iter().map(|k| (k + e) % 4).collect()
            } else {
                (0..4).map(|k| (k + e) % 4).collect()
            };
            AffineMap2::relabel(shape, &perm)
        }
        ElementShape::Triangle => {
            let (c0, c1) = shape.edge_corners(e);
            let rest = 3 - c0 - c1;
            let perm = if flip { [c1, c0, rest] } else { [c0, c1, rest] };
            AffineMap2::relabel(shape, &perm)
        }
    }
}

/// Self-map of the reference element carrying the canonical shared corner
/// (corner 0) onto local corner `k`.
pub fn corner_relabel(shape: ElementShape, k: usize) -> AffineMap2 {
    match shape {
        ElementShape::Quad => {
            let perm: Vec<usize> = (0..4).map(|c| (c + k) % 4).collect();
            AffineMap2::relabel(shape, &perm)
        }
        ElementShape::Triangle => {
            let perm: Vec<usize> = (0..3).map(|c| (c + k) % 3).collect();
            AffineMap2::relabel(shape, &perm)
        }
    }
}

/// The four congruent children of the reference square.
pub fn quad_children() -> [AffineMap2; 4] {
    let mk = |ou: f64, ov: f64| AffineMap2 {
        origin: [ou, ov],
        du: [0.5, 0.0],
        dv: [0.0, 0.5],
    };
    [mk(0.0, 0.0), mk(0.5, 0.0), mk(0.0, 0.5), mk(0.5, 0.5)]
}

/// The four congruent children of the reference triangle (corner triangles
/// plus the inverted middle one).
pub fn tri_children() -> [AffineMap2; 4] {
    let t = ElementShape::Triangle;
    let c0 = [0.0, 0.0];
    let c1 = [1.0, 0.0];
    let c2 = [0.0, 1.0];
    let m01 = [0.5, 0.0];
    let m12 = [0.5, 0.5];
    let m02 = [0.0, 0.5];
    [
        AffineMap2::from_corner_points(t, &[c0, m01, m02]),
        AffineMap2::from_corner_points(t, &[m01, c1, m12]),
        AffineMap2::from_corner_points(t, &[m02, m12, c2]),
        AffineMap2::from_corner_points(t, &[m01, m12, m02]),
    ]
}

type TensorKey = (ElementShape, usize);
type TensorPairKey = (ElementShape, ElementShape, usize);

fn tensor_cache() -> &'static Mutex<HashMap<TensorKey, Arc<Vec<[f64; 3]>>>> {
    static CACHE: OnceLock<Mutex<HashMap<TensorKey, Arc<Vec<[f64; 3]>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn tensor_pair_cache() -> &'static Mutex<HashMap<TensorPairKey, Arc<Vec<[f64; 5]>>>> {
    static CACHE: OnceLock<Mutex<HashMap<TensorPairKey, Arc<Vec<[f64; 5]>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// n x n tensor Gauss points (u, v, w) on one reference element; triangles
/// use the square collapsed along v. Weights sum to the reference area.
pub fn tensor_points(
    shape: ElementShape,
    n: usize,
) -> Result<Arc<Vec<[f64; 3]>>, QuadratureError> {
    if let Some(pts) = tensor_cache().lock().unwrap().get(&(shape, n)) {
        return Ok(pts.clone());
    }
    let g = gauss_rule(n)?;
    let mut pts = Vec::with_capacity(n * n);
    for (&xi, &wx) in g.points.iter().zip(&g.weights) {
        for (&eta, &we) in g.points.iter().zip(&g.weights) {
            match shape {
                ElementShape::Quad => pts.push([xi, eta, wx * we]),
                ElementShape::Triangle => pts.push([xi, eta * (1.0 - xi), wx * we * (1.0 - xi)]),
            }
        }
    }
    let pts = Arc::new(pts);
    tensor_cache()
        .lock()
        .unwrap()
        .insert((shape, n), pts.clone());
    Ok(pts)
}

/// Product of two tensor rules as pair points (u_i, v_i, u_j, v_j, w).
pub fn tensor_pair_points(
    shape_i: ElementShape,
    shape_j: ElementShape,
    n: usize,
) -> Result<Arc<Vec<[f64; 5]>>, QuadratureError> {
    let key = (shape_i, shape_j, n);
    if let Some(pts) = tensor_pair_cache().lock().unwrap().get(&key) {
        return Ok(pts.clone());
    }
    let pi = tensor_points(shape_i, n)?;
    let pj = tensor_points(shape_j, n)?;
    let mut pts = Vec::with_capacity(pi.len() * pj.len());
    for a in pi.iter() {
        for b in pj.iter() {
            pts.push([a[0], a[1], b[0], b[1], a[2] * b[2]]);
        }
    }
    let pts = Arc::new(pts);
    tensor_pair_cache().lock().unwrap().insert(key, pts.clone());
    Ok(pts)
}

/// The plain product rule for a well-separated pair.
pub fn tensor_product_rule(
    shape_i: ElementShape,
    shape_j: ElementShape,
    n: usize,
) -> Result<ProductRule, QuadratureError> {
    Ok(ProductRule {
        parts: vec![SubPairRule {
            map_i: AffineMap2::identity(),
            map_j: AffineMap2::identity(),
            points: tensor_pair_points(shape_i, shape_j, n)?,
        }],
    })
}
