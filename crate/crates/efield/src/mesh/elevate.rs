//! Geometric order elevation: raise linear meshes to order-p Lagrange
//! elements whose nodes lie exactly on the underlying surface patch.
//!
//! Edge nodes are seeded by linear interpolation between the corner nodes and
//! pinned to the patch by closest-point projection; interior nodes are seeded
//! by transfinite (Coons) interpolation of the projected boundary lattice and
//! projected likewise. Strongly curved edges get a few re-seeding rounds with
//! arc-length re-parameterization so the nodes spread evenly along the curve.

use super::element::{MeshElement, NodeId, SurfaceMesh};
use super::shape::ElementShape;
use super::MeshError;
use crate::geometry::{closest_point, SurfacePatch};
use nalgebra::Point3;
use std::collections::HashMap;

const MAX_RESEED_ROUNDS: usize = 5;

fn project(patch: &SurfacePatch, x: &Point3<f64>) -> Point3<f64> {
    closest_point(patch, x, None).point
}

/// Positions at arc parameters k/n (k = 1..n-1) along the polyline `chain`.
fn arc_resample(chain: &[Point3<f64>], n: usize) -> Vec<Point3<f64>> {
    let mut cum = vec![0.0];
    for w in chain.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n - 1);
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        let seg = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
            Ok(s) => s.min(chain.len() - 2),
            Err(s) => (s - 1).min(chain.len() - 2),
        };
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len > 0.0 { (target - cum[seg]) / seg_len } else { 0.0 };
        out.push(chain[seg] + (chain[seg + 1] - chain[seg]) * t);
    }
    out
}

pub fn elevate_order(
    mesh: &SurfaceMesh,
    patch: &SurfacePatch,
    p: usize,
) -> Result<SurfaceMesh, MeshError> {
    if p < 2 {
        return Err(MeshError::Configuration(format!(
            "order elevation requires p >= 2, got {p}"
        )));
    }
    if mesh.elements.iter().any(|el| el.order != 1) {
        return Err(MeshError::Configuration(
            "order elevation expects a linear input mesh".into(),
        ));
    }
    if p > 2 && mesh.elements.iter().any(|el| el.shape == ElementShape::Triangle) {
        return Err(MeshError::UnsupportedTriangleOrder { order: p });
    }
    let diameter = patch.diameter();
    let pin_tol = 1e-12 * diameter;

    // Corner nodes keep their ids, pinned onto the patch.
    let mut nodes: Vec<Point3<f64>> = Vec::with_capacity(mesh.nodes.len());
    for (i, x) in mesh.nodes.iter().enumerate() {
        let proj = closest_point(patch, x, None);
        if proj.distance > 0.1 * diameter {
            return Err(MeshError::ProjectionFailure {
                node: i,
                distance: proj.distance,
            });
        }
        nodes.push(proj.point);
    }

    // Shared-edge nodes are created once, keyed by the sorted corner pair and
    // stored in low-to-high id direction, so neighbors stay conforming.
    let mut edge_nodes: HashMap<(NodeId, NodeId), Vec<NodeId>> = HashMap::new();
    for el in &mesh.elements {
        let corners = el.shape.corner_node_indices(1);
        for e in 0..el.shape.edge_count() {
            let (c0, c1) = el.shape.edge_corners(e);
            let (n0, n1) = (el.nodes[corners[c0]], el.nodes[corners[c1]]);
            let key = (n0.min(n1), n0.max(n1));
            if edge_nodes.contains_key(&key) {
                continue;
            }
            let (lo, hi) = (nodes[key.0], nodes[key.1]);
            let mut ids = Vec::with_capacity(p - 1);
            for k in 1..p {
                let t = k as f64 / p as f64;
                let seed = lo + (hi - lo) * t;
                ids.push(nodes.len());
                nodes.push(project(patch, &Point3::from(seed)));
            }
            edge_nodes.insert(key, ids);
        }
    }

    // Re-seed curved edges by arc length until the nodes stop moving.
    let mut rounds = 0;
    loop {
        let mut moved: f64 = 0.0;
        for (key, ids) in &edge_nodes {
            let mut chain = Vec::with_capacity(p + 1);
            chain.push(nodes[key.0]);
            chain.extend(ids.iter().map(|&i| nodes[i]));
            chain.push(nodes[key.1]);
            for (k, seed) in arc_resample(&chain, p).into_iter().enumerate() {
                let new = project(patch, &seed);
                moved = moved.max((new - nodes[ids[k]]).norm());
                nodes[ids[k]] = new;
            }
        }
        rounds += 1;
        if moved <= pin_tol {
            break;
        }
        if rounds >= MAX_RESEED_ROUNDS {
            log::warn!(
                "edge re-seeding did not settle after {MAX_RESEED_ROUNDS} rounds \
                 (last movement {moved:.3e}); the patch is strongly curved relative \
                 to the mesh size"
            );
            break;
        }
    }

    // Build elements: lattice layout, interior nodes per element via Coons
    // seeding of the projected boundary.
    let mut elements = Vec::with_capacity(mesh.elements.len());
    for el in &mesh.elements {
        let corners = el.shape.corner_node_indices(1);
        let corner_ids: Vec<NodeId> = corners.iter().map(|&c| el.nodes[c]).collect();

        // Edge node ids in this element's traversal direction.
        let mut edge_ids: Vec<Vec<NodeId>> = Vec::new();
        for e in 0..el.shape.edge_count() {
            let (c0, c1) = el.shape.edge_corners(e);
            let (n0, n1) = (corner_ids[c0], corner_ids[c1]);
            let key = (n0.min(n1), n0.max(n1));
            let mut ids = edge_nodes[&key].clone();
            if n0 > n1 {
                ids.reverse();
            }
            edge_ids.push(ids);
        }

        let node_count = el.shape.node_count(p);
        let mut elem_nodes = vec![usize::MAX; node_count];
        let elevated_corners = el.shape.corner_node_indices(p);
        for (c, &id) in corner_ids.iter().enumerate() {
            elem_nodes[elevated_corners[c]] = id;
        }
        for (e, ids) in edge_ids.iter().enumerate() {
            let lattice = el.shape.edge_node_indices(p, e);
            // lattice runs corner, interior.., corner along the edge direction.
            for (k, &id) in ids.iter().enumerate() {
                elem_nodes[lattice[k + 1]] = id;
            }
        }

        match el.shape {
            ElementShape::Triangle => {
                // p == 2 has no interior nodes; guarded above for p > 2.
            }
            ElementShape::Quad => {
                // Coons seed: boundary lattice rows/columns blended bilinearly.
                let at = |i: usize, j: usize| nodes[elem_nodes[j * (p + 1) + i]];
                let mut interior = Vec::new();
                for j in 1..p {
                    for i in 1..p {
                        let (u, v) = (i as f64 / p as f64, j as f64 / p as f64);
                        let bottom = at(i, 0).coords;
                        let top = at(i, p).coords;
                        let left = at(0, j).coords;
                        let right = at(p, j).coords;
                        let c00 = at(0, 0).coords;
                        let c10 = at(p, 0).coords;
                        let c11 = at(p, p).coords;
                        let c01 = at(0, p).coords;
                        let seed = bottom * (1.0 - v) + top * v + left * (1.0 - u) + right * u
                            - (c00 * (1.0 - u) * (1.0 - v)
                                + c10 * u * (1.0 - v)
                                + c11 * u * v
                                + c01 * (1.0 - u) * v);
                        interior.push((j * (p + 1) + i, Point3::from(seed)));
                    }
                }
                for (slot, seed) in interior {
                    elem_nodes[slot] = nodes.len();
                    nodes.push(project(patch, &seed));
                }
            }
        }

        debug_assert!(elem_nodes.iter().all(|&id| id != usize::MAX));
        elements.push(MeshElement {
            shape: el.shape,
            order: p,
            nodes: elem_nodes,
            patch: el.patch,
            region: el.region,
        });
    }

    // Every node must sit on the patch to rounding accuracy.
    for (i, x) in nodes.iter().enumerate() {
        let res = closest_point(patch, x, None);
        if !(res.distance <= pin_tol) {
            return Err(MeshError::ProjectionFailure {
                node: i,
                distance: res.distance,
            });
        }
    }

    let mut out = SurfaceMesh::new(nodes, elements)?;
    out.normal_sign = mesh.normal_sign;
    Ok(out)
}
