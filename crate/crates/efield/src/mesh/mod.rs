//! Surface meshes and the domain/region skeleton they discretize.
//!
//! A problem's geometry arrives as independent per-patch meshes of linear or
//! higher-order Lagrange elements. This module supplies the reference-element
//! machinery, the mesh containers, the skeleton of volume domains and oriented
//! surface regions, geometric detection of non-conforming mesh joins, and
//! order elevation onto exact surface patches.

mod elevate;
mod element;
mod interface;
mod shape;
mod skeleton;

pub use elevate::elevate_order;
pub use element::{ElementRef, MeshElement, MeshSet, NodeId, SurfaceMesh};
pub use interface::{
    detect_interfaces, naked_edge_list, EdgeRef, InterfaceRecord, InterfaceSet, JoinKind,
    JoinTolerances,
};
pub use shape::{shape_functions, shape_gradients, ElementShape};
pub(crate) use shape::lagrange_1d_into;
pub use skeleton::{
    build_skeleton, lambda_param, Domain, DomainClass, DomainSpec, Region, RegionClass,
    RegionSpec, Skeleton,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle elements support order at most 2, got {order}")]
    UnsupportedTriangleOrder { order: usize },
    #[error("invalid element {element}: {reason}")]
    InvalidElement { element: usize, reason: String },
    #[error("element {element} has degenerate geometry at ({u}, {v})")]
    DegenerateElement { element: usize, u: f64, v: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("interface data error: {0}")]
    InterfaceData(String),
    #[error("node {node} could not be placed on the patch (residual {distance:.3e})")]
    ProjectionFailure { node: usize, distance: f64 },
}

/// Verify that every solid (volume-carrying) non-air domain is bounded by a
/// closed surface: within the meshes of its bounding regions, each naked edge
/// must be fully covered by joins to other naked edges of the same collection.
pub fn validate_closed_domains(
    skeleton: &Skeleton,
    meshes: &MeshSet,
    interfaces: &InterfaceSet,
) -> Result<(), MeshError> {
    let naked = naked_edge_list(meshes);
    for d in skeleton.domains() {
        if d.id == 0 {
            continue;
        }
        let bounding: Vec<&Region> = skeleton
            .regions()
            .iter()
            .filter(|r| r.toward == d.id || r.away == d.id)
            .collect();
        if bounding.is_empty() {
            // Screen conductors have no volume and nothing to close.
            continue;
        }
        let mesh_ids: std::collections::BTreeSet<usize> =
            bounding.iter().flat_map(|r| r.meshes.iter().copied()).collect();

        for er in naked.iter().filter(|er| mesh_ids.contains(&er.elem.mesh)) {
            // Sub-intervals of this edge covered by joins within the collection.
            let mut spans: Vec<(f64, f64)> = Vec::new();
            for rec in &interfaces.records {
                let (self_range, other) = if rec.a == *er {
                    match rec.kind {
                        JoinKind::EdgeOverlap { a_range, .. } => (a_range, rec.b),
                        _ => continue,
                    }
                } else if rec.b == *er {
                    match rec.kind {
                        JoinKind::EdgeOverlap { b_range, .. } => (b_range, rec.a),
                        _ => continue,
                    }
                } else {
                    continue;
                };
                if mesh_ids.contains(&other.elem.mesh) {
                    spans.push(self_range);
                }
            }
            spans.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut covered = 0.0;
            let mut reach: f64 = 0.0;
            for (lo, hi) in spans {
                let lo = lo.max(reach);
                if hi > lo {
                    covered += hi - lo;
                    reach = hi;
                }
            }
            if covered < 1.0 - 1e-6 {
                return Err(MeshError::Topology(format!(
                    "domain {} is not bounded by a closed surface: mesh {} \
                     element {} edge {} is open (covered fraction {:.3})",
                    d.id, er.elem.mesh, er.elem.elem, er.edge, covered
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod closure_tests {
    use super::*;
    use nalgebra::Point3;

    /// Axis-aligned unit-cube face meshes, one 1-element mesh per face.
    fn cube_face_meshes(n_faces: usize) -> MeshSet {
        let corners = |f: usize| -> [Point3<f64>; 4] {
            let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
            match f {
                0 => [p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.)],
                1 => [p(0., 0., 1.), p(1., 0., 1.), p(1., 1., 1.), p(0., 1., 1.)],
                2 => [p(0., 0., 0.), p(1., 0., 0.), p(1., 0., 1.), p(0., 0., 1.)],
                3 => [p(0., 1., 0.), p(1., 1., 0.), p(1., 1., 1.), p(0., 1., 1.)],
                4 => [p(0., 0., 0.), p(0., 1., 0.), p(0., 1., 1.), p(0., 0., 1.)],
                _ => [p(1., 0., 0.), p(1., 1., 0.), p(1., 1., 1.), p(1., 0., 1.)],
            }
        };
        let meshes: Vec<SurfaceMesh> = (0..n_faces)
            .map(|f| {
                let q = corners(f);
                SurfaceMesh::new(
                    q.to_vec(),
                    vec![MeshElement {
                        shape: ElementShape::Quad,
                        order: 1,
                        // Corner lists above are cyclic; storage is lattice order.
                        nodes: vec![0, 1, 3, 2],
                        patch: None,
                        region: 1,
                    }],
                )
                .unwrap()
            })
            .collect();
        MeshSet::new(meshes)
    }

    fn cube_skeleton(n_faces: usize) -> Skeleton {
        build_skeleton(
            &[
                DomainSpec { id: 0, class: DomainClass::Air },
                DomainSpec { id: 1, class: DomainClass::Electrode { voltage: 1.0 } },
            ],
            &[RegionSpec {
                id: 1,
                sides: (1, 0),
                screen_conductor: None,
                meshes: (0..n_faces).collect(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn closed_cube_passes() {
        let set = cube_face_meshes(6);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let ifs = detect_interfaces(&set, tol).unwrap();
        validate_closed_domains(&cube_skeleton(6), &set, &ifs).unwrap();
    }

    #[test]
    fn cube_with_missing_face_fails() {
        let set = cube_face_meshes(5);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let ifs = detect_interfaces(&set, tol).unwrap();
        let err = validate_closed_domains(&cube_skeleton(5), &set, &ifs).unwrap_err();
        assert!(format!("{err}").contains("domain 1"), "{err}");
    }
}
