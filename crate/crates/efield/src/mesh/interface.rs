//! Detection of mesh-to-mesh joins along naked element edges.
//!
//! Meshes discretizing adjacent regions are produced independently per patch,
//! so they meet non-conformingly: an element edge of one mesh may coincide
//! with parts of several edges of another. We recover that incidence
//! geometrically, by matching naked edges (edges used by exactly one element)
//! across meshes within a join tolerance.

use super::element::{ElementRef, MeshSet, NodeId};
use super::MeshError;
use nalgebra::Point3;

/// One naked edge: element side `edge` of `elem`, parameterized by s in [0,1]
/// along the reference edge direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeRef {
    pub elem: ElementRef,
    pub edge: usize,
}

/// How two naked edges meet.
#[derive(Debug, Clone, PartialEq)]
pub enum JoinKind {
    /// The edges overlap along a common curve segment. Each range gives the
    /// sub-interval of that edge's [0,1] parameter covered by the overlap;
    /// interior range endpoints are the projected hanging-vertex parameters.
    EdgeOverlap { a_range: (f64, f64), b_range: (f64, f64) },
    /// Endpoint `b_end` (0 or 1) of edge b lies in the interior of edge a at
    /// parameter `a_param` (a hanging vertex without tangential overlap).
    VertexOnEdge { a_param: f64, b_end: usize },
    /// The edges only share one endpoint each.
    CornerTouch { a_end: usize, b_end: usize },
}

#[derive(Debug, Clone)]
pub struct InterfaceRecord {
    pub a: EdgeRef,
    pub b: EdgeRef,
    pub kind: JoinKind,
    /// Largest observed gap between the matched portions.
    pub join_distance: f64,
    /// Join-group id; all records whose edges form one connected contact
    /// chain share the group.
    pub group: usize,
}

#[derive(Debug, Clone)]
pub struct InterfaceSet {
    pub records: Vec<InterfaceRecord>,
    /// Ambiguous near-misses: pairs within the search tolerance but outside
    /// the join tolerance, reported for diagnostics and never joined.
    pub ambiguities: Vec<(EdgeRef, EdgeRef, f64)>,
    /// Groups whose overlapping edges involve three or more meshes: the
    /// contact line joins several manifold sheets.
    pub nonmanifold_groups: Vec<Vec<EdgeRef>>,
}

#[derive(Debug, Clone, Copy)]
pub struct JoinTolerances {
    /// Edges closer than this are considered joined.
    pub join: f64,
    /// Pairs closer than this but farther than `join` are reported as
    /// ambiguous rather than silently dropped.
    pub search: f64,
}

impl JoinTolerances {
    pub fn from_bbox_diagonal(diag: f64) -> Self {
        let join = 1e-8 * diag.max(f64::MIN_POSITIVE);
        JoinTolerances { join, search: 10.0 * join }
    }
}

struct NakedEdge {
    edge: EdgeRef,
    /// Geometric samples at edge parameters 0, 1/4, 1/2, 3/4, 1.
    samples: [Point3<f64>; 5],
    length: f64,
}

const EDGE_SAMPLES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn naked_edges(meshes: &MeshSet) -> Vec<NakedEdge> {
    let mut out = Vec::new();
    for (mi, mesh) in meshes.meshes.iter().enumerate() {
        // Key an edge by its sorted corner node pair; interior edges appear
        // in exactly two elements of the same mesh.
        let mut use_count: std::collections::HashMap<(NodeId, NodeId), u32> =
            std::collections::HashMap::new();
        let edge_nodes = |el: &super::element::MeshElement, e: usize| -> (NodeId, NodeId) {
            let corners = el.shape.corner_node_indices(el.order);
            let (c0, c1) = el.shape.edge_corners(e);
            let (n0, n1) = (el.nodes[corners[c0]], el.nodes[corners[c1]]);
            (n0.min(n1), n0.max(n1))
        };
        for el in &mesh.elements {
            for e in 0..el.shape.edge_count() {
                *use_count.entry(edge_nodes(el, e)).or_insert(0) += 1;
            }
        }
        for (ei, el) in mesh.elements.iter().enumerate() {
            for e in 0..el.shape.edge_count() {
                if use_count[&edge_nodes(el, e)] != 1 {
                    continue;
                }
                let er = EdgeRef { elem: ElementRef { mesh: mi, elem: ei }, edge: e };
                let mut samples = [Point3::origin(); 5];
                for (k, s) in EDGE_SAMPLES.iter().enumerate() {
                    let (u, v) = el.shape.edge_point(e, *s);
                    samples[k] = mesh.element_map(ei, u, v).0;
                }
                let length = (samples[4] - samples[0]).norm();
                out.push(NakedEdge { edge: er, samples, length });
            }
        }
    }
    out
}

/// Naked edges (element sides used by exactly one element) of all meshes.
pub fn naked_edge_list(meshes: &MeshSet) -> Vec<EdgeRef> {
    naked_edges(meshes).into_iter().map(|n| n.edge).collect()
}

/// Closest point on segment [p, q] to x, as (parameter in [0,1], distance).
fn segment_project(p: &Point3<f64>, q: &Point3<f64>, x: &Point3<f64>) -> (f64, f64) {
    let d = q - p;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (0.0, (x - p).norm());
    }
    let t = ((x - p).dot(&d) / len2).clamp(0.0, 1.0);
    let foot = p + d * t;
    (t, (x - foot).norm())
}

/// Point on the (curved) edge at parameter s, evaluated through the element map.
fn edge_eval(meshes: &MeshSet, e: &EdgeRef, s: f64) -> Point3<f64> {
    let mesh = meshes.mesh(e.elem);
    let el = &mesh.elements[e.elem.elem];
    let (u, v) = el.shape.edge_point(e.edge, s);
    mesh.element_map(e.elem.elem, u, v).0
}

/// Parameter on the 4-segment chord polyline of `ne` closest to x, with the
/// distance achieved.
fn polyline_project(ne: &NakedEdge, x: &Point3<f64>) -> (f64, f64) {
    let mut best = (0.0_f64, f64::INFINITY);
    for k in 0..4 {
        let (t, d) = segment_project(&ne.samples[k], &ne.samples[k + 1], x);
        if d < best.1 {
            best = (EDGE_SAMPLES[k] + t * 0.25, d);
        }
    }
    best
}

pub fn detect_interfaces(meshes: &MeshSet, tol: JoinTolerances) -> Result<InterfaceSet, MeshError> {
    if !(tol.join > 0.0) || tol.search < tol.join {
        return Err(MeshError::Configuration(
            "join tolerances must satisfy 0 < join <= search".into(),
        ));
    }
    let edges = naked_edges(meshes);

    let mut raw: Vec<(usize, usize, JoinKind, f64)> = Vec::new();
    let mut ambiguities: Vec<(EdgeRef, EdgeRef, f64)> = Vec::new();
    for i in 0..edges.len() {
        for j in (i + 1)..edges.len() {
            let (a, b) = (&edges[i], &edges[j]);
            if a.edge.elem.mesh == b.edge.elem.mesh {
                continue;
            }
            // Midpoint prune: edges can only touch if their midpoints lie
            // within the sum of half-lengths plus the search band.
            let reach = 0.5 * (a.length + b.length) + tol.search + 0.25 * (a.length + b.length);
            if (a.samples[2] - b.samples[2]).norm() > reach {
                continue;
            }
            match classify_edge_pair(meshes, a, b, &tol)? {
                PairResult::Join { kind, dist, swap } => {
                    if swap {
                        raw.push((j, i, kind, dist));
                    } else {
                        raw.push((i, j, kind, dist));
                    }
                }
                PairResult::Ambiguous(dist) => ambiguities.push((a.edge, b.edge, dist)),
                PairResult::Separate => {}
            }
        }
    }

    if raw.is_empty() && !ambiguities.is_empty() {
        let (a, b, d) = &ambiguities[0];
        return Err(MeshError::InterfaceData(format!(
            "no edges joined but {} candidate pair(s) lie between the join and \
             search tolerances (closest: mesh {} element {} edge {} to mesh {} \
             element {} edge {} at distance {:.3e}; join tolerance {:.3e}); \
             adjust the join tolerance or the meshes",
            ambiguities.len(),
            a.elem.mesh, a.elem.elem, a.edge,
            b.elem.mesh, b.elem.elem, b.edge,
            d, tol.join
        )));
    }

    // Union-find over naked-edge indices groups connected overlap chains.
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j, kind, _) in &raw {
        if matches!(kind, JoinKind::EdgeOverlap { .. }) {
            let (ri, rj) = (find(&mut parent, *i), find(&mut parent, *j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }

    let mut group_of = vec![usize::MAX; edges.len()];
    let mut next_group = 0;
    let mut records = Vec::with_capacity(raw.len());
    for (i, j, kind, dist) in raw {
        let root = find(&mut parent, i);
        if group_of[root] == usize::MAX {
            group_of[root] = next_group;
            next_group += 1;
        }
        records.push(InterfaceRecord {
            a: edges[i].edge,
            b: edges[j].edge,
            kind,
            join_distance: dist,
            group: group_of[root],
        });
    }

    // A contact group spanning three or more meshes joins several manifold
    // sheets along one line. Counting meshes rather than edges keeps long
    // two-mesh refinement chains (many collinear edges) manifold.
    let mut members: std::collections::BTreeMap<usize, std::collections::BTreeSet<EdgeRef>> =
        std::collections::BTreeMap::new();
    for r in &records {
        if matches!(r.kind, JoinKind::EdgeOverlap { .. }) {
            let e = members.entry(r.group).or_default();
            e.insert(r.a);
            e.insert(r.b);
        }
    }
    let nonmanifold_groups: Vec<Vec<EdgeRef>> = members
        .values()
        .filter(|s| {
            let meshes_in: std::collections::BTreeSet<usize> =
                s.iter().map(|e| e.elem.mesh).collect();
            meshes_in.len() >= 3
        })
        .map(|s| s.iter().copied().collect())
        .collect();

    records.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    Ok(InterfaceSet { records, ambiguities, nonmanifold_groups })
}

enum PairResult {
    /// `swap` = true means the kind describes the pair with roles reversed
    /// (the caller should store (b, a)).
    Join { kind: JoinKind, dist: f64, swap: bool },
    Ambiguous(f64),
    Separate,
}

/// Geometric classification of one naked-edge pair: project each endpoint on
/// the opposing edge, build the covered parameter interval, then verify
/// midpoint coincidence for genuine overlaps.
fn classify_edge_pair(
    meshes: &MeshSet,
    a: &NakedEdge,
    b: &NakedEdge,
    tol: &JoinTolerances,
) -> Result<PairResult, MeshError> {
    let (tb0_on_a, d_b0) = polyline_project(a, &b.samples[0]);
    let (tb1_on_a, d_b1) = polyline_project(a, &b.samples[4]);
    let (ta0_on_b, d_a0) = polyline_project(b, &a.samples[0]);
    let (ta1_on_b, d_a1) = polyline_project(b, &a.samples[4]);

    let b0_in = d_b0 <= tol.join;
    let b1_in = d_b1 <= tol.join;
    let a0_in = d_a0 <= tol.join;
    let a1_in = d_a1 <= tol.join;

    let min_d = d_b0.min(d_b1).min(d_a0).min(d_a1);
    if !(b0_in || b1_in || a0_in || a1_in) {
        return Ok(if min_d > tol.join && min_d <= tol.search {
            PairResult::Ambiguous(min_d)
        } else {
            PairResult::Separate
        });
    }

    let snap = |t: f64| {
        if t.abs() < 1e-9 {
            0.0
        } else if (t - 1.0).abs() < 1e-9 {
            1.0
        } else {
            t
        }
    };

    // Interval of a's parameter covered by the contact.
    let mut a_lo = f64::INFINITY;
    let mut a_hi = f64::NEG_INFINITY;
    {
        let mut acc = |t: f64| {
            a_lo = a_lo.min(t);
            a_hi = a_hi.max(t);
        };
        if b0_in {
            acc(snap(tb0_on_a.clamp(0.0, 1.0)));
        }
        if b1_in {
            acc(snap(tb1_on_a.clamp(0.0, 1.0)));
        }
        if a0_in {
            acc(0.0);
        }
        if a1_in {
            acc(1.0);
        }
    }

    if a_hi - a_lo < 1e-9 {
        // Point contact. Decide which endpoints are involved.
        let t = snap(a_lo);
        let a_is_end = t == 0.0 || t == 1.0;
        let b_touches = b0_in || b1_in;
        if b_touches {
            let (b_end, b_dist, t_on_a) = if b0_in && (!b1_in || d_b0 <= d_b1) {
                (0, d_b0, tb0_on_a)
            } else {
                (1, d_b1, tb1_on_a)
            };
            if a_is_end {
                return Ok(PairResult::Join {
                    kind: JoinKind::CornerTouch { a_end: t as usize, b_end },
                    dist: b_dist,
                    swap: false,
                });
            }
            return Ok(PairResult::Join {
                kind: JoinKind::VertexOnEdge { a_param: snap(t_on_a.clamp(0.0, 1.0)), b_end },
                dist: b_dist,
                swap: false,
            });
        }
        // Only an endpoint of a touches b's interior: same kind, roles swapped.
        let (a_end, a_dist, t_on_b) = if a0_in && (!a1_in || d_a0 <= d_a1) {
            (0, d_a0, ta0_on_b)
        } else {
            (1, d_a1, ta1_on_b)
        };
        return Ok(PairResult::Join {
            kind: JoinKind::VertexOnEdge { a_param: snap(t_on_b.clamp(0.0, 1.0)), b_end: a_end },
            dist: a_dist,
            swap: true,
        });
    }

    // Candidate segment overlap; verify coincidence at the overlap midpoint
    // on the true (possibly curved) edge geometry.
    let mid_a = 0.5 * (a_lo + a_hi);
    let pa = edge_eval(meshes, &a.edge, mid_a);
    let (mid_b0, _) = polyline_project(b, &pa);
    let mut mid_b = mid_b0.clamp(0.0, 1.0);
    let mut mid_gap = f64::INFINITY;
    let mut step = 0.1;
    for _ in 0..4 {
        let mut best = (mid_b, (edge_eval(meshes, &b.edge, mid_b) - pa).norm());
        for k in -2..=2i32 {
            let t = (mid_b + k as f64 * step).clamp(0.0, 1.0);
            let d = (edge_eval(meshes, &b.edge, t) - pa).norm();
            if d < best.1 {
                best = (t, d);
            }
        }
        mid_b = best.0;
        mid_gap = best.1;
        step *= 0.25;
    }
    if mid_gap > tol.join {
        return Ok(if mid_gap <= tol.search {
            PairResult::Ambiguous(mid_gap)
        } else {
            PairResult::Separate
        });
    }

    // Overlapping edges must run along a common tangent; near-perpendicular
    // contact within tolerance means crossing edges, which the region
    // decomposition cannot represent.
    let h = 1e-4;
    let ta_dir = edge_eval(meshes, &a.edge, (mid_a + h).min(1.0))
        - edge_eval(meshes, &a.edge, (mid_a - h).max(0.0));
    let tb_dir = edge_eval(meshes, &b.edge, (mid_b + h).min(1.0))
        - edge_eval(meshes, &b.edge, (mid_b - h).max(0.0));
    let denom = ta_dir.norm() * tb_dir.norm();
    if denom > 0.0 && ta_dir.dot(&tb_dir).abs() / denom < 0.5 {
        return Err(MeshError::Topology(format!(
            "edges of mesh {} element {} and mesh {} element {} overlap with \
             crossing orientations",
            a.edge.elem.mesh, a.edge.elem.elem, b.edge.elem.mesh, b.edge.elem.elem
        )));
    }

    // b's parameter range covered by the overlap.
    let mut b_ends: Vec<f64> = Vec::new();
    if b0_in {
        b_ends.push(0.0);
    }
    if b1_in {
        b_ends.push(1.0);
    }
    if a0_in {
        b_ends.push(snap(ta0_on_b.clamp(0.0, 1.0)));
    }
    if a1_in {
        b_ends.push(snap(ta1_on_b.clamp(0.0, 1.0)));
    }
    let b_lo = b_ends.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_hi = b_ends.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut dist = mid_gap;
    for (inside, d) in [(b0_in, d_b0), (b1_in, d_b1), (a0_in, d_a0), (a1_in, d_a1)] {
        if inside {
            dist = dist.max(d);
        }
    }

    Ok(PairResult::Join {
        kind: JoinKind::EdgeOverlap { a_range: (a_lo, a_hi), b_range: (b_lo, b_hi) },
        dist,
        swap: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::element::{MeshElement, SurfaceMesh};
    use crate::mesh::shape::ElementShape;
    use nalgebra::Point3;

    fn quad_mesh(quads: &[[Point3<f64>; 4]]) -> SurfaceMesh {
        let mut nodes = Vec::new();
        let mut elements = Vec::new();
        for q in quads {
            let base = nodes.len();
            nodes.extend_from_slice(q);
            elements.push(MeshElement {
                shape: ElementShape::Quad,
                order: 1,
                // Corners arrive counter-clockwise; storage is lattice order.
                nodes: vec![base, base + 1, base + 3, base + 2],
                patch: None,
                region: 0,
            });
        }
        SurfaceMesh::new(nodes, elements).unwrap()
    }

    fn p(x: f64, y: f64) -> Point3<f64> {
        Point3::new(x, y, 0.0)
    }

    #[test]
    fn conforming_unit_squares_share_one_edge() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 0.), p(2., 0.), p(2., 1.), p(1., 1.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let found = detect_interfaces(&set, tol).unwrap();
        let overlaps: Vec<_> = found
            .records
            .iter()
            .filter(|r| matches!(r.kind, JoinKind::EdgeOverlap { .. }))
            .collect();
        assert_eq!(overlaps.len(), 1);
        if let JoinKind::EdgeOverlap { a_range, b_range } = overlaps[0].kind {
            assert_eq!(a_range, (0.0, 1.0));
            assert_eq!(b_range, (0.0, 1.0));
        }
        assert!(found.nonmanifold_groups.is_empty());
    }

    #[test]
    fn two_to_one_refinement_produces_hanging_vertex() {
        // Left: one unit square. Right: two half-height squares. The shared
        // line carries a hanging vertex at mid-height of the long edge.
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[
            [p(1., 0.), p(2., 0.), p(2., 0.5), p(1., 0.5)],
            [p(1., 0.5), p(2., 0.5), p(2., 1.), p(1., 1.)],
        ]);
        let set = MeshSet::new(vec![m0, m1]);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let found = detect_interfaces(&set, tol).unwrap();
        let overlaps: Vec<_> = found
            .records
            .iter()
            .filter_map(|r| match r.kind {
                JoinKind::EdgeOverlap { a_range, b_range } => Some((r, a_range, b_range)),
                _ => None,
            })
            .collect();
        assert_eq!(overlaps.len(), 2, "{:?}", found.records);
        // The long edge is covered half by each short edge, meeting at the
        // hanging parameter 0.5.
        let mut halves: Vec<(f64, f64)> = overlaps
            .iter()
            .map(|(r, a_range, b_range)| {
                if r.a.elem.mesh == 0 {
                    *a_range
                } else {
                    *b_range
                }
            })
            .collect();
        halves.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((halves[0].0 - 0.0).abs() < 1e-9 && (halves[0].1 - 0.5).abs() < 1e-9);
        assert!((halves[1].0 - 0.5).abs() < 1e-9 && (halves[1].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detection_is_symmetric_under_mesh_order() {
        let ma = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let mb = quad_mesh(&[
            [p(1., 0.), p(2., 0.), p(2., 0.5), p(1., 0.5)],
            [p(1., 0.5), p(2., 0.5), p(2., 1.), p(1., 1.)],
        ]);
        let s1 = MeshSet::new(vec![ma.clone(), mb.clone()]);
        let s2 = MeshSet::new(vec![mb, ma]);
        let t1 = JoinTolerances::from_bbox_diagonal(s1.bbox_diagonal());
        let f1 = detect_interfaces(&s1, t1).unwrap();
        let f2 = detect_interfaces(&s2, t1).unwrap();
        assert_eq!(f1.records.len(), f2.records.len());
        let sig = |f: &InterfaceSet, swap: bool| -> Vec<(usize, usize, String)> {
            let mut v: Vec<_> = f
                .records
                .iter()
                .map(|r| {
                    let (ma, mb) = (r.a.elem.mesh, r.b.elem.mesh);
                    let (ma, mb) = if swap { (1 - ma, 1 - mb) } else { (ma, mb) };
                    (ma.min(mb), ma.max(mb), format!("{:?}", std::mem::discriminant(&r.kind)))
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(sig(&f1, false), sig(&f2, true));
    }

    #[test]
    fn gap_within_search_band_is_ambiguous() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        // Gap of 5 * join: too far to join, close enough to flag.
        let tol = JoinTolerances { join: 1e-6, search: 1e-5 };
        let g = 5e-6;
        let m1 = quad_mesh(&[[p(1. + g, 0.), p(2., 0.), p(2., 1.), p(1. + g, 1.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let err = detect_interfaces(&set, tol).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("join"), "{msg}");
    }

    #[test]
    fn three_sheets_on_a_line_are_nonmanifold() {
        // Two coplanar squares plus one perpendicular square, all sharing the
        // segment x=1, y in [0,1], z=0.
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 0.), p(2., 0.), p(2., 1.), p(1., 1.)]]);
        let m2 = {
            let q = [
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(1.0, 1.0, 1.0),
                Point3::new(1.0, 0.0, 1.0),
            ];
            quad_mesh(&[q])
        };
        let set = MeshSet::new(vec![m0, m1, m2]);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let found = detect_interfaces(&set, tol).unwrap();
        assert_eq!(found.nonmanifold_groups.len(), 1);
        let meshes_in: std::collections::BTreeSet<usize> = found.nonmanifold_groups[0]
            .iter()
            .map(|e| e.elem.mesh)
            .collect();
        assert_eq!(meshes_in.len(), 3);
    }

    #[test]
    fn corner_touch_detected() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 1.), p(2., 1.), p(2., 2.), p(1., 2.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        let found = detect_interfaces(&set, tol).unwrap();
        assert!(
            found
                .records
                .iter()
                .any(|r| matches!(r.kind, JoinKind::CornerTouch { .. })),
            "{:?}",
            found.records
        );
        assert!(!found
            .records
            .iter()
            .any(|r| matches!(r.kind, JoinKind::EdgeOverlap { .. })));
    }
}
