//! Surface meshes of curved Lagrange elements.

use super::shape::{
    lagrange_1d_deriv_into, lagrange_1d_into, shape_functions, shape_gradients, ElementShape,
};
use super::MeshError;
use nalgebra::{Point3, Vector3};

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct MeshElement {
    pub shape: ElementShape,
    /// Geometric order p >= 1.
    pub order: usize,
    /// Node ids into the owning mesh, in the canonical Lagrange layout.
    pub nodes: Vec<NodeId>,
    /// Patch the element was meshed on, if any.
    pub patch: Option<usize>,
    /// Skeleton region the element discretizes.
    pub region: usize,
}

/// One conforming mesh, typically covering a single patch.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub nodes: Vec<Point3<f64>>,
    pub elements: Vec<MeshElement>,
    /// Multiplies the parametric normal so the mesh satisfies the region's
    /// orientation convention without re-ordering input nodes.
    pub normal_sign: f64,
}

impl SurfaceMesh {
    pub fn new(nodes: Vec<Point3<f64>>, elements: Vec<MeshElement>) -> Result<Self, MeshError> {
        let mesh = Self {
            nodes,
            elements,
            normal_sign: 1.0,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        for (e, el) in self.elements.iter().enumerate() {
            if el.order == 0 {
                return Err(MeshError::InvalidElement {
                    element: e,
                    reason: "geometric order must be >= 1".into(),
                });
            }
            if el.shape == ElementShape::Triangle && el.order > 2 {
                return Err(MeshError::UnsupportedTriangleOrder { order: el.order });
            }
            let expect = el.shape.node_count(el.order);
            if el.nodes.len() != expect {
                return Err(MeshError::InvalidElement {
                    element: e,
                    reason: format!("expected {} nodes, got {}", expect, el.nodes.len()),
                });
            }
            if let Some(&bad) = el.nodes.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(MeshError::InvalidElement {
                    element: e,
                    reason: format!("node id {bad} out of range"),
                });
            }
        }
        Ok(())
    }

    /// Geometry map of element `e` at reference coordinates: point, parametric
    /// tangents (d/du, d/dv of the Lagrange interpolant).
    ///
    /// Quadrature evaluates this in inner loops, so common orders avoid heap
    /// allocation entirely.
    pub fn element_map(&self, e: usize, u: f64, v: f64) -> (Point3<f64>, Vector3<f64>, Vector3<f64>) {
        const STACK_ORDER: usize = 7;
        let el = &self.elements[e];
        if el.shape == ElementShape::Quad && el.order >= 1 && el.order <= STACK_ORDER {
            let p = el.order;
            let mut lu = [0.0; STACK_ORDER + 1];
            let mut lv = [0.0; STACK_ORDER + 1];
            let mut du = [0.0; STACK_ORDER + 1];
            let mut dv = [0.0; STACK_ORDER + 1];
            lagrange_1d_into(p, u, &mut lu);
            lagrange_1d_into(p, v, &mut lv);
            lagrange_1d_deriv_into(p, u, &mut du);
            lagrange_1d_deriv_into(p, v, &mut dv);
            let mut pt = Vector3::zeros();
            let mut tu = Vector3::zeros();
            let mut tv = Vector3::zeros();
            let mut k = 0;
            for j in 0..=p {
                for i in 0..=p {
                    let x = self.nodes[el.nodes[k]].coords;
                    pt += x * (lu[i] * lv[j]);
                    tu += x * (du[i] * lv[j]);
                    tv += x * (lu[i] * dv[j]);
                    k += 1;
                }
            }
            return (Point3::from(pt), tu, tv);
        }
        if el.shape == ElementShape::Triangle && (el.order == 1 || el.order == 2) {
            return self.tri_map_inline(el, u, v);
        }
        let vals = shape_functions(el.shape, el.order, u, v);
        let grads = shape_gradients(el.shape, el.order, u, v);
        let mut p = Vector3::zeros();
        let mut tu = Vector3::zeros();
        let mut tv = Vector3::zeros();
        for (k, &nid) in el.nodes.iter().enumerate() {
            let x = self.nodes[nid].coords;
            p += x * vals[k];
            tu += x * grads[k].0;
            tv += x * grads[k].1;
        }
        (Point3::from(p), tu, tv)
    }

    fn tri_map_inline(
        &self,
        el: &MeshElement,
        u: f64,
        v: f64,
    ) -> (Point3<f64>, Vector3<f64>, Vector3<f64>) {
        let l0 = 1.0 - u - v;
        let mut vals = [0.0; 6];
        let mut grads = [(0.0, 0.0); 6];
        let m = if el.order == 1 {
            vals[..3].copy_from_slice(&[l0, u, v]);
            grads[..3].copy_from_slice(&[(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)]);
            3
        } else {
            vals = [
                l0 * (2.0 * l0 - 1.0),
                4.0 * l0 * u,
                u * (2.0 * u - 1.0),
                4.0 * l0 * v,
                4.0 * u * v,
                v * (2.0 * v - 1.0),
            ];
            let g = 1.0 - 4.0 * l0;
            grads = [
                (g, g),
                (4.0 * (l0 - u), -4.0 * u),
                (4.0 * u - 1.0, 0.0),
                (-4.0 * v, 4.0 * (l0 - v)),
                (4.0 * v, 4.0 * u),
                (0.0, 4.0 * v - 1.0),
            ];
            6
        };
        let mut p = Vector3::zeros();
        let mut tu = Vector3::zeros();
        let mut tv = Vector3::zeros();
        for k in 0..m {
            let x = self.nodes[el.nodes[k]].coords;
            p += x * vals[k];
            tu += x * grads[k].0;
            tv += x * grads[k].1;
        }
        (Point3::from(p), tu, tv)
    }

    /// Point, surface measure and oriented unit normal of element `e`.
    pub fn element_geometry(
        &self,
        e: usize,
        u: f64,
        v: f64,
    ) -> Result<(Point3<f64>, f64, Vector3<f64>), MeshError> {
        let (p, tu, tv) = self.element_map(e, u, v);
        let cross = tu.cross(&tv);
        let measure = cross.norm();
        if measure <= 1e-14 * tu.norm() * tv.norm() || measure == 0.0 {
            return Err(MeshError::DegenerateElement { element: e, u, v });
        }
        Ok((p, measure, cross * (self.normal_sign / measure)))
    }

    /// Diameter estimate: maximum pairwise node distance.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        let mut d2: f64 = 0.0;
        for (i, &a) in el.nodes.iter().enumerate() {
            for &b in &el.nodes[i + 1..] {
                d2 = d2.max((self.nodes[a] - self.nodes[b]).norm_squared());
            }
        }
        d2.sqrt()
    }

    pub fn element_centroid(&self, e: usize) -> Point3<f64> {
        let el = &self.elements[e];
        let mut c = Vector3::zeros();
        for &n in &el.nodes {
            c += self.nodes[n].coords;
        }
        Point3::from(c / el.nodes.len() as f64)
    }

    /// Corner node positions of element `e` in corner order.
    pub fn element_corners(&self, e: usize) -> Vec<Point3<f64>> {
        let el = &self.elements[e];
        el.shape
            .corner_node_indices(el.order)
            .into_iter()
            .map(|k| self.nodes[el.nodes[k]])
            .collect()
    }
}

/// Reference to one element across a set of meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementRef {
    pub mesh: usize,
    pub elem: usize,
}

/// A collection of per-patch meshes with flat global element indexing.
#[derive(Debug, Clone, Default)]
pub struct MeshSet {
    pub meshes: Vec<SurfaceMesh>,
    offsets: Vec<usize>,
    total: usize,
}

impl MeshSet {
    pub fn new(meshes: Vec<SurfaceMesh>) -> Self {
        let mut offsets = Vec::with_capacity(meshes.len());
        let mut total = 0;
        for m in &meshes {
            offsets.push(total);
            total += m.elements.len();
        }
        Self {
            meshes,
            offsets,
            total,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.total
    }

    pub fn flat(&self, r: ElementRef) -> usize {
        self.offsets[r.mesh] + r.elem
    }

    pub fn unflat(&self, idx: usize) -> ElementRef {
        let mesh = match self.offsets.binary_search(&idx) {
            Ok(m) => {
                // May land on an empty mesh boundary; walk to the owner.
                let mut m = m;
                while self.meshes[m].elements.is_empty() {
                    m += 1;
                }
                m
            }
            Err(ins) => ins - 1,
        };
        ElementRef {
            mesh,
            elem: idx - self.offsets[mesh],
        }
    }

    pub fn iter_elements(&self) -> impl Iterator<Item = ElementRef> + '_ {
        self.meshes.iter().enumerate().flat_map(|(m, mesh)| {
            (0..mesh.elements.len()).map(move |e| ElementRef { mesh: m, elem: e })
        })
    }

    pub fn element(&self, r: ElementRef) -> &MeshElement {
        &self.meshes[r.mesh].elements[r.elem]
    }

    pub fn mesh(&self, r: ElementRef) -> &SurfaceMesh {
        &self.meshes[r.mesh]
    }

    /// Bounding-box diagonal over all nodes of all meshes.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        let mut any = false;
        for m in &self.meshes {
            for n in &m.nodes {
                min = min.inf(&n.coords);
                max = max.sup(&n.coords);
                any = true;
            }
        }
        if any {
            (max - min).norm()
        } else {
            0.0
        }
    }
}
