//! Discontinuous element-wise polynomial space for the surface density.
//!
//! Densities are approximated per element with the same Lagrange families
//! the geometry uses, plus the piecewise-constant order 0. No continuity is
//! imposed across elements, so each element owns a contiguous block of
//! global coefficients in flat-element order.

use crate::mesh::lagrange_1d_into;
use crate::mesh::{ElementShape, MeshSet};

use super::AssemblyError;

/// Highest supported density order on quads; the allocation-free basis
/// evaluation uses fixed stack buffers of this size.
pub const MAX_QUAD_DENSITY_ORDER: usize = 7;
/// Triangles carry hand-written bases only up to quadratic.
pub const MAX_TRI_DENSITY_ORDER: usize = 2;

/// Density approximation space over a mesh set: polynomial order plus the
/// element-to-coefficient offset table.
#[derive(Debug, Clone)]
pub struct DensitySpace {
    order: usize,
    /// offsets[flat] .. offsets[flat + 1] are element `flat`'s coefficients.
    offsets: Vec<usize>,
}

impl DensitySpace {
    pub fn new(meshes: &MeshSet, order: usize) -> Result<Self, AssemblyError> {
        let mut offsets = Vec::with_capacity(meshes.n_elements() + 1);
        offsets.push(0);
        let mut total = 0usize;
        for r in meshes.iter_elements() {
            let elem = meshes.element(r);
            let cap = match elem.shape {
                ElementShape::Quad => MAX_QUAD_DENSITY_ORDER,
                ElementShape::Triangle => MAX_TRI_DENSITY_ORDER,
            };
            if order > cap {
                return Err(AssemblyError::Configuration(format!(
                    "density order {order} exceeds the maximum {cap} for {:?} elements",
                    elem.shape
                )));
            }
            total += elem.shape.node_count(order);
            offsets.push(total);
        }
        Ok(DensitySpace { order, offsets })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn n_elements(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Global coefficient range of flat element `flat`.
    pub fn element_dofs(&self, flat: usize) -> std::ops::Range<usize> {
        self.offsets[flat]..self.offsets[flat + 1]
    }

    pub fn local_count(&self, shape: ElementShape) -> usize {
        shape.node_count(self.order)
    }

    /// Basis values at a reference point, written to `out[..local_count]`.
    /// Matches [`shape_functions`] ordering exactly; allocation free.
    pub fn basis_into(&self, shape: ElementShape, u: f64, v: f64, out: &mut [f64]) {
        let p = self.order;
        if p == 0 {
            out[0] = 1.0;
            return;
        }
        match shape {
            ElementShape::Quad => {
                let mut lu = [0.0f64; MAX_QUAD_DENSITY_ORDER + 1];
                let mut lv = [0.0f64; MAX_QUAD_DENSITY_ORDER + 1];
                lagrange_1d_into(p, u, &mut lu);
                lagrange_1d_into(p, v, &mut lv);
                for j in 0..=p {
                    for i in 0..=p {
                        out[j * (p + 1) + i] = lu[i] * lv[j];
                    }
                }
            }
            ElementShape::Triangle => {
                let l0 = 1.0 - u - v;
                match p {
                    1 => {
                        out[0] = l0;
                        out[1] = u;
                        out[2] = v;
                    }
                    2 => {
                        out[0] = l0 * (2.0 * l0 - 1.0);
                        out[1] = 4.0 * l0 * u;
                        out[2] = u * (2.0 * u - 1.0);
                        out[3] = 4.0 * l0 * v;
                        out[4] = 4.0 * u * v;
                        out[5] = v * (2.0 * v - 1.0);
                    }
                    _ => unreachable!("validated in DensitySpace::new"),
                }
            }
        }
    }
}
