//! Reference elements and Lagrange shape functions.
//!
//! Quads live on the unit square [0,1]^2 with corners numbered
//! counter-clockwise from the origin; triangles on the unit simplex
//! {u, v >= 0, u + v <= 1} with corners (0,0), (1,0), (0,1). Nodes of an
//! order-p element sit on the uniform lattice, indexed with the u index
//! fastest (quads) or row-by-row with increasing v (triangles). Order 0 is a
//! single node at the element midpoint (used by density spaces only).

use super::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementShape {
    Quad,
    Triangle,
}

impl ElementShape {
    pub fn node_count(&self, order: usize) -> usize {
        match self {
            ElementShape::Quad => {
                if order == 0 {
                    1
                } else {
                    (order + 1) * (order + 1)
                }
            }
            ElementShape::Triangle => {
                if order == 0 {
                    1
                } else {
                    (order + 1) * (order + 2) / 2
                }
            }
        }
    }

    pub fn corner_count(&self) -> usize {
        match self {
            ElementShape::Quad => 4,
            ElementShape::Triangle => 3,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.corner_count()
    }

    pub fn reference_area(&self) -> f64 {
        match self {
            ElementShape::Quad => 1.0,
            ElementShape::Triangle => 0.5,
        }
    }

    pub fn corner_ref(&self, k: usize) -> (f64, f64) {
        match self {
            ElementShape::Quad => [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)][k],
            ElementShape::Triangle => [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)][k],
        }
    }

    /// Corner indices (into the numbered corners) bounding local edge `e`,
    /// in traversal order: edges run counter-clockwise around the element.
    pub fn edge_corners(&self, e: usize) -> (usize, usize) {
        match self {
            ElementShape::Quad => [(0, 1), (1, 2), (2, 3), (3, 0)][e],
            ElementShape::Triangle => [(0, 1), (1, 2), (2, 0)][e],
        }
    }

    /// Reference coordinates of the point at arc parameter `s` on edge `e`.
    pub fn edge_point(&self, e: usize, s: f64) -> (f64, f64) {
        let (c0, c1) = self.edge_corners(e);
        let a = self.corner_ref(c0);
        let b = self.corner_ref(c1);
        (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1))
    }

    /// Reference positions of all nodes of an order-`order` element, in the
    /// canonical storage order.
    pub fn node_ref_coords(&self, order: usize) -> Vec<(f64, f64)> {
        if order == 0 {
            return match self {
                ElementShape::Quad => vec![(0.5, 0.5)],
                ElementShape::Triangle => vec![(1.0 / 3.0, 1.0 / 3.0)],
            };
        }
        let p = order as f64;
        let mut out = Vec::with_capacity(self.node_count(order));
        match self {
            ElementShape::Quad => {
                for j in 0..=order {
                    for i in 0..=order {
                        out.push((i as f64 / p, j as f64 / p));
                    }
                }
            }
            ElementShape::Triangle => {
                for j in 0..=order {
                    for i in 0..=(order - j) {
                        out.push((i as f64 / p, j as f64 / p));
                    }
                }
            }
        }
        out
    }

    /// Node-storage indices of the corners, in corner order.
    pub fn corner_node_indices(&self, order: usize) -> Vec<usize> {
        assert!(order >= 1, "order-0 elements have no corner nodes");
        match self {
            ElementShape::Quad => vec![
                0,
                order,
                (order + 1) * (order + 1) - 1,
                order * (order + 1),
            ],
            ElementShape::Triangle => {
                let n = self.node_count(order);
                vec![0, order, n - 1]
            }
        }
    }

    /// Node-storage indices along edge `e` in traversal order (order+1 nodes).
    pub fn edge_node_indices(&self, order: usize, e: usize) -> Vec<usize> {
        assert!(order >= 1);
        let coords = self.node_ref_coords(order);
        let mut out = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let s = k as f64 / order as f64;
            let target = self.edge_point(e, s);
            let idx = coords
                .iter()
                .position(|c| (c.0 - target.0).abs() < 1e-12 && (c.1 - target.1).abs() < 1e-12)
                .expect("edge node must exist on the lattice");
            out.push(idx);
        }
        out
    }
}

/// 1D Lagrange basis on the uniform lattice {0, 1/p, ..., 1}, written into
/// `out[..=p]`. Allocation-free so geometry evaluation can run in tight loops.
pub(crate) fn lagrange_1d_into(p: usize, t: f64, out: &mut [f64]) {
    for (k, val) in out[..=p].iter_mut().enumerate() {
        *val = 1.0;
        for m in 0..=p {
            if m != k {
                *val *= (t - m as f64 / p as f64) / ((k as f64 - m as f64) / p as f64);
            }
        }
    }
}

pub(crate) fn lagrange_1d_deriv_into(p: usize, t: f64, out: &mut [f64]) {
    for (k, der) in out[..=p].iter_mut().enumerate() {
        let xk = k as f64 / p as f64;
        let mut sum = 0.0;
        for m in 0..=p {
            if m == k {
                continue;
            }
            let xm = m as f64 / p as f64;
            let mut prod = 1.0 / (xk - xm);
            for l in 0..=p {
                if l != k && l != m {
                    let xl = l as f64 / p as f64;
                    prod *= (t - xl) / (xk - xl);
                }
            }
            sum += prod;
        }
        *der = sum;
    }
}

fn lagrange_1d(p: usize, t: f64) -> Vec<f64> {
    let mut vals = vec![0.0; p + 1];
    lagrange_1d_into(p, t, &mut vals);
    vals
}

fn lagrange_1d_deriv(p: usize, t: f64) -> Vec<f64> {
    let mut ders = vec![0.0; p + 1];
    lagrange_1d_deriv_into(p, t, &mut ders);
    ders
}

/// Lagrange shape-function values at one reference point, in node order.
pub fn shape_functions(shape: ElementShape, order: usize, u: f64, v: f64) -> Vec<f64> {
    if order == 0 {
        return vec![1.0];
    }
    match shape {
        ElementShape::Quad => {
            let lu = lagrange_1d(order, u);
            let lv = lagrange_1d(order, v);
            let mut out = Vec::with_capacity((order + 1) * (order + 1));
            for bv in &lv {
                for bu in &lu {
                    out.push(bu * bv);
                }
            }
            out
        }
        ElementShape::Triangle => triangle_shapes(order, u, v).expect("triangle order validated upstream"),
    }
}

/// Reference-space gradients (d/du, d/dv) matching `shape_functions`.
pub fn shape_gradients(shape: ElementShape, order: usize, u: f64, v: f64) -> Vec<(f64, f64)> {
    if order == 0 {
        return vec![(0.0, 0.0)];
    }
    match shape {
        ElementShape::Quad => {
            let lu = lagrange_1d(order, u);
            let lv = lagrange_1d(order, v);
            let du = lagrange_1d_deriv(order, u);
            let dv = lagrange_1d_deriv(order, v);
            let mut out = Vec::with_capacity((order + 1) * (order + 1));
            for j in 0..=order {
                for i in 0..=order {
                    out.push((du[i] * lv[j], lu[i] * dv[j]));
                }
            }
            out
        }
        ElementShape::Triangle => triangle_gradients(order, u, v).expect("triangle order validated upstream"),
    }
}

fn triangle_shapes(order: usize, u: f64, v: f64) -> Result<Vec<f64>, MeshError> {
    let l0 = 1.0 - u - v;
    match order {
        1 => Ok(vec![l0, u, v]),
        2 => Ok(vec![
            l0 * (2.0 * l0 - 1.0),
            4.0 * l0 * u,
            u * (2.0 * u - 1.0),
            4.0 * l0 * v,
            4.0 * u * v,
            v * (2.0 * v - 1.0),
        ]),
        _ => Err(MeshError::UnsupportedTriangleOrder { order }),
    }
}

fn triangle_gradients(order: usize, u: f64, v: f64) -> Result<Vec<(f64, f64)>, MeshError> {
    let l0 = 1.0 - u - v;
    match order {
        1 => Ok(vec![(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)]),
        2 => Ok(vec![
            (1.0 - 4.0 * l0, 1.0 - 4.0 * l0),
            (4.0 * (l0 - u), -4.0 * u),
            (4.0 * u - 1.0, 0.0),
            (-4.0 * v, 4.0 * (l0 - v)),
            (4.0 * v, 4.0 * u),
            (0.0, 4.0 * v - 1.0),
        ]),
        _ => Err(MeshError::UnsupportedTriangleOrder { order }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn order_zero_is_constant_one() {
        assert_eq!(shape_functions(ElementShape::Quad, 0, 0.3, 0.9), vec![1.0]);
        assert_eq!(shape_functions(ElementShape::Triangle, 0, 0.1, 0.2), vec![1.0]);
    }

    #[test]
    fn quad_order1_cardinal_at_corners() {
        let vals = shape_functions(ElementShape::Quad, 1, 0.0, 0.0);
        assert_eq!(vals.len(), 4);
        assert!((vals[0] - 1.0).abs() < 1e-15);
        assert!(vals[1].abs() < 1e-15 && vals[2].abs() < 1e-15 && vals[3].abs() < 1e-15);
    }

    #[test]
    fn quad_order2_has_nine_values() {
        assert_eq!(shape_functions(ElementShape::Quad, 2, 0.4, 0.7).len(), 9);
    }

    #[test]
    fn cardinality_all_shapes() {
        for shape in [ElementShape::Quad, ElementShape::Triangle] {
            for order in 1..=2 {
                let coords = shape.node_ref_coords(order);
                for (k, &(u, v)) in coords.iter().enumerate() {
                    let vals = shape_functions(shape, order, u, v);
                    for (m, &val) in vals.iter().enumerate() {
                        let expect = if m == k { 1.0 } else { 0.0 };
                        assert!(
                            (val - expect).abs() < 1e-13,
                            "{shape:?} p={order} node {k} fn {m}: {val}"
                        );
                    }
                }
            }
        }
        for order in 3..=4 {
            let coords = ElementShape::Quad.node_ref_coords(order);
            for (k, &(u, v)) in coords.iter().enumerate() {
                let vals = shape_functions(ElementShape::Quad, order, u, v);
                assert!((vals[k] - 1.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity_quad(u in 0.0f64..=1.0, v in 0.0f64..=1.0, order in 0usize..=3) {
            let vals = shape_functions(ElementShape::Quad, order, u, v);
            let sum: f64 = vals.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
            let grads = shape_gradients(ElementShape::Quad, order, u, v);
            let (gu, gv) = grads.iter().fold((0.0, 0.0), |a, g| (a.0 + g.0, a.1 + g.1));
            prop_assert!(gu.abs() < 1e-11 && gv.abs() < 1e-11);
        }

        #[test]
        fn partition_of_unity_triangle(a in 0.0f64..=1.0, b in 0.0f64..=1.0, order in 0usize..=2) {
            // Map the square sample into the simplex.
            let (u, v) = if a + b <= 1.0 { (a, b) } else { (1.0 - a, 1.0 - b) };
            let vals = shape_functions(ElementShape::Triangle, order, u, v);
            let sum: f64 = vals.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
        }

        #[test]
        fn gradients_match_finite_differences(u in 0.05f64..=0.95, v in 0.05f64..=0.95, order in 1usize..=3) {
            let h = 1e-6;
            let g = shape_gradients(ElementShape::Quad, order, u, v);
            let fp = shape_functions(ElementShape::Quad, order, u + h, v);
            let fm = shape_functions(ElementShape::Quad, order, u - h, v);
            for (k, gk) in g.iter().enumerate() {
                let fd = (fp[k] - fm[k]) / (2.0 * h);
                prop_assert!((gk.0 - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn edge_node_indices_quad_p2() {
        // Order-2 quad nodes: 0..8 on the 3x3 lattice, u fastest.
        assert_eq!(ElementShape::Quad.edge_node_indices(2, 0), vec![0, 1, 2]);
        assert_eq!(ElementShape::Quad.edge_node_indices(2, 1), vec![2, 5, 8]);
        assert_eq!(ElementShape::Quad.edge_node_indices(2, 2), vec![8, 7, 6]);
        assert_eq!(ElementShape::Quad.edge_node_indices(2, 3), vec![6, 3, 0]);
    }

    #[test]
    fn corner_node_indices() {
        assert_eq!(ElementShape::Quad.corner_node_indices(2), vec![0, 2, 8, 6]);
        assert_eq!(ElementShape::Triangle.corner_node_indices(2), vec![0, 2, 5]);
    }
}
