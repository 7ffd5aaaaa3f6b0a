//! Quadrature for Galerkin double integrals over element pairs.
//!
//! The machinery has three layers:
//! * [`gauss_rule`] / [`gauss_1d`]: 1D Gauss-Legendre rules on [0,1],
//! * pair classification ([`classify_pair`]) deciding how two elements touch,
//! * product rules over pairs: tensor rules for separated pairs, recursive
//!   near-field subdivision ([`nearfield_subdivide`]) for close pairs, and
//!   regularizing coordinate transforms ([`singular_rule`], [`pair_rule`]) for
//!   pairs sharing a vertex, an edge, or all of their points. Non-conforming
//!   contacts are first cut into sub-element pairs that touch conformingly
//!   ([`subdivide_nonconforming`]).
//!
//! All rules live in reference coordinates: a rule point carries
//! (u_i, v_i, u_j, v_j, w) and the weight already includes every reference-
//! space Jacobian, but never the surface measure of the element maps. The
//! integrator multiplies in the two surface measures and the kernel.

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{ElementRef, MeshError};

mod gauss;
mod maps;
mod nearfield;
mod pairs;
mod singular;

pub use gauss::{gauss_1d, gauss_rule, GaussRule1d};
pub use maps::{
    corner_relabel, edge_relabel, quad_children, tensor_pair_points, tensor_points,
    tensor_product_rule, tri_children, AffineMap2,
};
pub use nearfield::{nearfield_subdivide, nearfield_subdivide_from};
pub use pairs::{classify_pair, primary_record, subdivide_nonconforming, SubPair};
pub use singular::{pair_rule, singular_rule};

/// Gauss order for separated (regular) pairs and single-element integrals.
pub const DEFAULT_REGULAR_ORDER: usize = 4;
/// Gauss order per coordinate of the regularizing singular transforms.
pub const DEFAULT_SINGULAR_ORDER: usize = 6;
/// Pairs closer than this multiple of the larger element diameter are
/// integrated with recursive near-field subdivision.
pub const DEFAULT_NEAR_RATIO: f64 = 1.5;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported 1d Gauss order {order}; supported range is 1..=30")]
    UnsupportedOrder { order: usize },
    #[error("pair class {class:?} has no singular rule")]
    NotSingular { class: PairClass },
    #[error("mixed quad/triangle pair must go through pair_rule, not singular_rule")]
    MixedShapes,
    #[error(
        "near-field subdivision of elements {i:?} and {j:?} did not separate \
         them within {depth} levels (distance {dist:.3e}); the elements touch \
         or nearly touch without an interface record"
    )]
    NearContact {
        i: ElementRef,
        j: ElementRef,
        depth: usize,
        dist: f64,
    },
    #[error("near-field rule requested for an element paired with itself: {elem:?}")]
    IdenticalPair { elem: ElementRef },
    #[error("interface data invalid: {0}")]
    InterfaceData(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// How two elements (or sub-elements) touch. Edge and corner indices are
/// local to the element the feature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    /// The same element twice (the Galerkin diagonal).
    Identical,
    /// The elements share a whole edge. `reversed` records whether element
    /// j traverses the shared edge opposite to element i.
    EdgeAdjacent {
        edge_i: usize,
        edge_j: usize,
        reversed: bool,
    },
    /// The elements share exactly one corner.
    VertexAdjacent { corner_i: usize, corner_j: usize },
    /// The elements are disjoint.
    Regular,
    /// The elements touch along a partial edge overlap or a hanging vertex;
    /// integrate via [`subdivide_nonconforming`].
    Nonconforming,
}

impl PairClass {
    /// The same contact seen from the swapped pair (j, i).
    pub fn swapped(&self) -> PairClass {
        match *self {
            PairClass::EdgeAdjacent {
                edge_i,
                edge_j,
                reversed,
            } => PairClass::EdgeAdjacent {
                edge_i: edge_j,
                edge_j: edge_i,
                reversed,
            },
            PairClass::VertexAdjacent { corner_i, corner_j } => PairClass::VertexAdjacent {
                corner_i: corner_j,
                corner_j: corner_i,
            },
            other => other,
        }
    }
}

/// One summand of a product rule: a point set in local coordinates plus the
/// affine placements of the local frames inside the two parent elements.
#[derive(Debug, Clone)]
pub struct SubPairRule {
    pub map_i: AffineMap2,
    pub map_j: AffineMap2,
    /// (u_i, v_i, u_j, v_j, w) in the local frames; weights include all
    /// local reference Jacobians.
    pub points: Arc<Vec<[f64; 5]>>,
}

impl SubPairRule {
    /// Points in the parent reference frames, with the affine Jacobians
    /// folded into the weights.
    pub fn parent_points(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        let jw = self.map_i.jacobian() * self.map_j.jacobian();
        self.points.iter().map(move |p| {
            let xi = self.map_i.apply(p[0], p[1]);
            let xj = self.map_j.apply(p[2], p[3]);
            [xi[0], xi[1], xj[0], xj[1], p[4] * jw]
        })
    }

    pub fn composed(&self, outer_i: &AffineMap2, outer_j: &AffineMap2) -> SubPairRule {
        SubPairRule {
            map_i: self.map_i.then(outer_i),
            map_j: self.map_j.then(outer_j),
            points: self.points.clone(),
        }
    }
}

/// A quadrature rule for one element pair, as a sum over sub-pair rules.
#[derive(Debug, Clone, Default)]
pub struct ProductRule {
    pub parts: Vec<SubPairRule>,
}

impl ProductRule {
    pub fn parent_points(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        self.parts.iter().flat_map(|p| p.parent_points())
    }

    pub fn n_points(&self) -> usize {
        self.parts.iter().map(|p| p.points.len()).sum()
    }

    /// Push every part through further affine placements (sub-element of a
    /// larger parent on either side).
    pub fn composed(&self, outer_i: &AffineMap2, outer_j: &AffineMap2) -> ProductRule {
        ProductRule {
            parts: self
                .parts
                .iter()
                .map(|p| p.composed(outer_i, outer_j))
                .collect(),
        }
    }
}
