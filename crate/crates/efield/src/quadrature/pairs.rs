//! Classification of element pairs by how their closures meet, and
//! subdivision of non-conforming pairs into classified sub-pairs.
//!
//! Same-mesh adjacency is exact (shared corner node ids). Cross-mesh
//! adjacency comes from the detected interface records; a pair whose edges
//! only partially overlap is cut, in reference coordinates, along the
//! overlap endpoints so that every sub-pair meets conformingly (shared
//! sub-edge, shared corner) or not at all.

use nalgebra::Point3;

use super::maps::{edge_relabel, AffineMap2};
use super::{PairClass, QuadratureError};
use crate::mesh::{
    EdgeRef, ElementRef, ElementShape, InterfaceRecord, InterfaceSet, JoinKind, MeshSet, NodeId,
};

/// Parameter snap tolerance; matches the interface detector's snapping.
const PARAM_EPS: f64 = 1e-9;

/// One classified sub-domain pair of a non-conforming element pair. The maps
/// send the unit reference element onto the sub-domains; the features named
/// in `class` live in the map domains.
#[derive(Debug, Clone, Copy)]
pub struct SubPair {
    pub map_i: AffineMap2,
    pub map_j: AffineMap2,
    pub class: PairClass,
}

impl SubPair {
    pub fn swapped(&self) -> SubPair {
        SubPair {
            map_i: self.map_j,
            map_j: self.map_i,
            class: self.class.swapped(),
        }
    }
}

fn resolve_corner(shape: ElementShape, edge: usize, end: usize) -> usize {
    let (c0, c1) = shape.edge_corners(edge);
    if end == 0 {
        c0
    } else {
        c1
    }
}

fn edge_pt(meshes: &MeshSet, elem: ElementRef, edge: usize, s: f64) -> Point3<f64> {
    let mesh = meshes.mesh(elem);
    let el = meshes.element(elem);
    let (u, v) = el.shape.edge_point(edge, s);
    mesh.element_map(elem.elem, u, v).0
}

/// All interface records joining this element pair, with a flag telling
/// whether the record's (a, b) roles are (rj, ri) instead of (ri, rj).
fn matching_records<'a>(
    interfaces: &'a InterfaceSet,
    ri: ElementRef,
    rj: ElementRef,
) -> Vec<(&'a InterfaceRecord, bool)> {
    let mut out = Vec::new();
    for rec in &interfaces.records {
        if rec.a.elem == ri && rec.b.elem == rj {
            out.push((rec, false));
        } else if rec.a.elem == rj && rec.b.elem == ri {
            out.push((rec, true));
        }
    }
    out
}

/// The single record through which a cross-mesh pair should be integrated:
/// overlaps dominate hanging vertices, which dominate corner touches. The
/// flag is true when the record's roles are reversed relative to (ri, rj).
pub fn primary_record<'a>(
    interfaces: &'a InterfaceSet,
    ri: ElementRef,
    rj: ElementRef,
) -> Option<(&'a InterfaceRecord, bool)> {
    let rank = |k: &JoinKind| match k {
        JoinKind::EdgeOverlap { .. } => 0,
        JoinKind::VertexOnEdge { .. } => 1,
        JoinKind::CornerTouch { .. } => 2,
    };
    matching_records(interfaces, ri, rj)
        .into_iter()
        .min_by_key(|(rec, _)| rank(&rec.kind))
}

fn corner_nodes(meshes: &MeshSet, r: ElementRef) -> Vec<NodeId> {
    let el = meshes.element(r);
    el.shape
        .corner_node_indices(el.order)
        .into_iter()
        .map(|k| el.nodes[k])
        .collect()
}

fn classify_same_mesh(
    meshes: &MeshSet,
    ri: ElementRef,
    rj: ElementRef,
) -> Result<PairClass, QuadratureError> {
    let ci = corner_nodes(meshes, ri);
    let cj = corner_nodes(meshes, rj);
    let mut shared: Vec<(usize, usize)> = Vec::new();
    for (a, na) in ci.iter().enumerate() {
        for (b, nb) in cj.iter().enumerate() {
            if na == nb {
                shared.push((a, b));
            }
        }
    }
    match shared.len() {
        0 => Ok(PairClass::Regular),
        1 => Ok(PairClass::VertexAdjacent {
            corner_i: shared[0].0,
            corner_j: shared[0].1,
        }),
        2 => {
            let nodes = {
                let (x, y) = (ci[shared[0].0], ci[shared[1].0]);
                (x.min(y), x.max(y))
            };
            let find_edge = |shape: ElementShape, ids: &[NodeId]| -> Option<usize> {
                (0..shape.edge_count()).find(|&e| {
                    let (c0, c1) = shape.edge_corners(e);
                    let (x, y) = (ids[c0], ids[c1]);
                    (x.min(y), x.max(y)) == nodes
                })
            };
            let shape_i = meshes.element(ri).shape;
            let shape_j = meshes.element(rj).shape;
            let (edge_i, edge_j) = match (find_edge(shape_i, &ci), find_edge(shape_j, &cj)) {
                (Some(ei), Some(ej)) => (ei, ej),
                _ => {
                    return Err(QuadratureError::InterfaceData(format!(
                        "elements {ri:?} and {rj:?} share two corners that do not \
                         form an edge of both"
                    )))
                }
            };
            // Same start node means both traverse the shared edge the same way.
            let reversed = ci[shape_i.edge_corners(edge_i).0] != cj[shape_j.edge_corners(edge_j).0];
            Ok(PairClass::EdgeAdjacent {
                edge_i,
                edge_j,
                reversed,
            })
        }
        n => Err(QuadratureError::InterfaceData(format!(
            "elements {ri:?} and {rj:?} share {n} corners"
        ))),
    }
}

fn range_is_full(lo: f64, hi: f64) -> bool {
    lo <= PARAM_EPS && hi >= 1.0 - PARAM_EPS
}

/// True when b's edge parameter decreases along the overlap as a's increases,
/// decided by comparing the physical overlap endpoints.
fn overlap_reversed(
    meshes: &MeshSet,
    rec: &InterfaceRecord,
    a_range: (f64, f64),
    b_range: (f64, f64),
) -> bool {
    let pa_lo = edge_pt(meshes, rec.a.elem, rec.a.edge, a_range.0);
    let pa_hi = edge_pt(meshes, rec.a.elem, rec.a.edge, a_range.1);
    let pb_lo = edge_pt(meshes, rec.b.elem, rec.b.edge, b_range.0);
    let pb_hi = edge_pt(meshes, rec.b.elem, rec.b.edge, b_range.1);
    let same = (pa_lo - pb_lo).norm_squared() + (pa_hi - pb_hi).norm_squared();
    let rev = (pa_lo - pb_hi).norm_squared() + (pa_hi - pb_lo).norm_squared();
    rev < same
}

fn classify_cross_mesh(
    meshes: &MeshSet,
    ri: ElementRef,
    rj: ElementRef,
    interfaces: &InterfaceSet,
) -> Result<PairClass, QuadratureError> {
    let matches = matching_records(interfaces, ri, rj);
    if matches.is_empty() {
        return Ok(PairClass::Regular);
    }

    let overlaps: Vec<_> = matches
        .iter()
        .filter(|(r, _)| matches!(r.kind, JoinKind::EdgeOverlap { .. }))
        .collect();
    if overlaps.len() > 1 {
        return Err(QuadratureError::InterfaceData(format!(
            "elements {ri:?} and {rj:?} join along {} distinct edge overlaps",
            overlaps.len()
        )));
    }
    if let Some(&&(rec, swapped)) = overlaps.first() {
        let JoinKind::EdgeOverlap { a_range, b_range } = rec.kind else {
            unreachable!()
        };
        if range_is_full(a_range.0, a_range.1) && range_is_full(b_range.0, b_range.1) {
            let reversed = overlap_reversed(meshes, rec, a_range, b_range);
            let class = PairClass::EdgeAdjacent {
                edge_i: rec.a.edge,
                edge_j: rec.b.edge,
                reversed,
            };
            return Ok(if swapped { class.swapped() } else { class });
        }
        return Ok(PairClass::Nonconforming);
    }

    let vertex_hits: Vec<_> = matches
        .iter()
        .filter(|(r, _)| matches!(r.kind, JoinKind::VertexOnEdge { .. }))
        .collect();
    let corner_hits: Vec<_> = matches
        .iter()
        .filter(|(r, _)| matches!(r.kind, JoinKind::CornerTouch { .. }))
        .collect();

    if !vertex_hits.is_empty() {
        if !corner_hits.is_empty() {
            return Err(QuadratureError::InterfaceData(format!(
                "elements {ri:?} and {rj:?} meet at several distinct points"
            )));
        }
        // The touching corner belongs to two naked edges, so duplicate
        // records for one physical contact are expected; distinct contacts
        // are not integrable as a single pair.
        let mut signature: Option<(bool, EdgeRef, f64, usize)> = None;
        for &&(rec, swapped) in &vertex_hits {
            let JoinKind::VertexOnEdge { a_param, b_end } = rec.kind else {
                unreachable!()
            };
            let corner = resolve_corner(meshes.element(rec.b.elem).shape, rec.b.edge, b_end);
            match &signature {
                None => signature = Some((swapped, rec.a, a_param, corner)),
                Some((sw, a, p, c)) => {
                    if *sw != swapped
                        || *a != rec.a
                        || (*p - a_param).abs() > PARAM_EPS
                        || *c != corner
                    {
                        return Err(QuadratureError::InterfaceData(format!(
                            "elements {ri:?} and {rj:?} meet at several distinct points"
                        )));
                    }
                }
            }
        }
        return Ok(PairClass::Nonconforming);
    }

    if !corner_hits.is_empty() {
        let mut resolved: Option<(usize, usize)> = None;
        for &&(rec, swapped) in &corner_hits {
            let JoinKind::CornerTouch { a_end, b_end } = rec.kind else {
                unreachable!()
            };
            let ca = resolve_corner(meshes.element(rec.a.elem).shape, rec.a.edge, a_end);
            let cb = resolve_corner(meshes.element(rec.b.elem).shape, rec.b.edge, b_end);
            let pair = if swapped { (cb, ca) } else { (ca, cb) };
            match resolved {
                None => resolved = Some(pair),
                Some(p) if p == pair => {}
                Some(p) => {
                    return Err(QuadratureError::InterfaceData(format!(
                        "elements {ri:?} and {rj:?} touch at distinct corners \
                         {p:?} and {pair:?}"
                    )))
                }
            }
        }
        let (corner_i, corner_j) = resolved.unwrap();
        return Ok(PairClass::VertexAdjacent { corner_i, corner_j });
    }

    Ok(PairClass::Regular)
}

/// How the closures of two elements meet. Same-mesh pairs are classified by
/// shared corner nodes; cross-mesh pairs by the interface records. Partial
/// edge overlaps and hanging vertices classify as `Nonconforming` and must
/// be subdivided before integration.
pub fn classify_pair(
    meshes: &MeshSet,
    ri: ElementRef,
    rj: ElementRef,
    interfaces: &InterfaceSet,
) -> Result<PairClass, QuadratureError> {
    if ri == rj {
        return Ok(PairClass::Identical);
    }
    if ri.mesh == rj.mesh {
        return classify_same_mesh(meshes, ri, rj);
    }
    classify_cross_mesh(meshes, ri, rj, interfaces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StripRole {
    /// Parameters before the contact interval; ends at it (domain corner 1).
    Before,
    /// The contact interval itself (domain edge 0).
    Mid,
    /// Parameters after the contact interval; starts at it (domain corner 0).
    After,
}

/// Map of the unit reference element onto the strip of parameters [s0, s1]
/// along local edge 0, within the same shape. Triangle strips fan to the
/// apex opposite edge 0.
fn strip_map(shape: ElementShape, s0: f64, s1: f64) -> AffineMap2 {
    match shape {
        ElementShape::Quad => AffineMap2::from_corner_points(
            shape,
            &[[s0, 0.0], [s1, 0.0], [s1, 1.0], [s0, 1.0]],
        ),
        ElementShape::Triangle => {
            AffineMap2::from_corner_points(shape, &[[s0, 0.0], [s1, 0.0], [0.0, 1.0]])
        }
    }
}

/// Strips of the element's reference domain induced by the contact interval
/// [lo, hi] of edge-`edge` parameters, composed onto actual reference
/// coordinates. Empty side strips are dropped.
fn edge_strips(
    shape: ElementShape,
    edge: usize,
    lo: f64,
    hi: f64,
) -> Vec<(AffineMap2, StripRole)> {
    let frame = edge_relabel(shape, edge, false);
    let mut out = Vec::with_capacity(3);
    if lo > PARAM_EPS {
        out.push((strip_map(shape, 0.0, lo).then(&frame), StripRole::Before));
    }
    out.push((strip_map(shape, lo, hi).then(&frame), StripRole::Mid));
    if hi < 1.0 - PARAM_EPS {
        out.push((strip_map(shape, hi, 1.0).then(&frame), StripRole::After));
    }
    out
}

/// Sub-pair class for one strip pair. In strip domain coordinates the
/// contact interval is edge 0, its start corner 0 and its end corner 1;
/// `reversed` says whether b's parameter runs against a's along the contact.
fn strip_class(role_a: StripRole, role_b: StripRole, reversed: bool) -> PairClass {
    use StripRole::*;
    let vertex = |ci: usize, cj: usize| PairClass::VertexAdjacent {
        corner_i: ci,
        corner_j: cj,
    };
    match (role_a, role_b) {
        (Mid, Mid) => PairClass::EdgeAdjacent {
            edge_i: 0,
            edge_j: 0,
            reversed,
        },
        (Mid, Before) => vertex(if reversed { 1 } else { 0 }, 1),
        (Mid, After) => vertex(if reversed { 0 } else { 1 }, 0),
        (Before, Mid) => vertex(1, if reversed { 1 } else { 0 }),
        (After, Mid) => vertex(0, if reversed { 0 } else { 1 }),
        (Before, Before) if !reversed => vertex(1, 1),
        (After, After) if !reversed => vertex(0, 0),
        (Before, After) if reversed => vertex(1, 0),
        (After, Before) if reversed => vertex(0, 1),
        _ => PairClass::Regular,
    }
}

/// Cuts the element pair joined by `rec` into classified sub-pairs covering
/// the full pair domain. Roles follow the record: `map_i` belongs to
/// `rec.a.elem`, `map_j` to `rec.b.elem`; swap the sub-pairs for the
/// opposite role order.
pub fn subdivide_nonconforming(
    meshes: &MeshSet,
    rec: &InterfaceRecord,
) -> Result<Vec<SubPair>, QuadratureError> {
    let shape_a = meshes.element(rec.a.elem).shape;
    let shape_b = meshes.element(rec.b.elem).shape;
    match rec.kind {
        JoinKind::EdgeOverlap { a_range, b_range } => {
            let (alo, ahi) = (a_range.0.clamp(0.0, 1.0), a_range.1.clamp(0.0, 1.0));
            let (blo, bhi) = (b_range.0.clamp(0.0, 1.0), b_range.1.clamp(0.0, 1.0));
            if ahi - alo < PARAM_EPS || bhi - blo < PARAM_EPS {
                return Err(QuadratureError::InterfaceData(format!(
                    "degenerate overlap range on {:?} / {:?}",
                    rec.a, rec.b
                )));
            }
            let reversed = overlap_reversed(meshes, rec, (alo, ahi), (blo, bhi));
            let strips_a = edge_strips(shape_a, rec.a.edge, alo, ahi);
            let strips_b = edge_strips(shape_b, rec.b.edge, blo, bhi);
            let mut out = Vec::with_capacity(strips_a.len() * strips_b.len());
            for (map_i, role_a) in &strips_a {
                for (map_j, role_b) in &strips_b {
                    out.push(SubPair {
                        map_i: *map_i,
                        map_j: *map_j,
                        class: strip_class(*role_a, *role_b, reversed),
                    });
                }
            }
            Ok(out)
        }
        JoinKind::VertexOnEdge { a_param, b_end } => {
            if !(PARAM_EPS..=1.0 - PARAM_EPS).contains(&a_param) {
                return Err(QuadratureError::InterfaceData(format!(
                    "hanging vertex parameter {a_param} on {:?} is not interior",
                    rec.a
                )));
            }
            let corner_j = resolve_corner(shape_b, rec.b.edge, b_end);
            let frame = edge_relabel(shape_a, rec.a.edge, false);
            Ok(vec![
                SubPair {
                    map_i: strip_map(shape_a, 0.0, a_param).then(&frame),
                    map_j: AffineMap2::identity(),
                    class: PairClass::VertexAdjacent {
                        corner_i: 1,
                        corner_j,
                    },
                },
                SubPair {
                    map_i: strip_map(shape_a, a_param, 1.0).then(&frame),
                    map_j: AffineMap2::identity(),
                    class: PairClass::VertexAdjacent {
                        corner_i: 0,
                        corner_j,
                    },
                },
            ])
        }
        JoinKind::CornerTouch { a_end, b_end } => Ok(vec![SubPair {
            map_i: AffineMap2::identity(),
            map_j: AffineMap2::identity(),
            class: PairClass::VertexAdjacent {
                corner_i: resolve_corner(shape_a, rec.a.edge, a_end),
                corner_j: resolve_corner(shape_b, rec.b.edge, b_end),
            },
        }]),
    }
}

#[cfg(test)]
mod tests {
    use super::super::singular::pair_rule;
    use super::super::testutil::pair_integral;
    use super::*;
    use crate::mesh::{
        detect_interfaces, JoinTolerances, MeshElement, SurfaceMesh,
    };
    use nalgebra::Point3;

    fn p(x: f64, y: f64) -> Point3<f64> {
        Point3::new(x, y, 0.0)
    }

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

    fn no_interfaces() -> InterfaceSet {
        InterfaceSet {
            records: Vec::new(),
            ambiguities: Vec::new(),
            nonmanifold_groups: Vec::new(),
        }
    }

    fn detect(set: &MeshSet) -> InterfaceSet {
        let tol = JoinTolerances::from_bbox_diagonal(set.bbox_diagonal());
        detect_interfaces(set, tol).unwrap()
    }

    fn r(mesh: usize, elem: usize) -> ElementRef {
        ElementRef { mesh, elem }
    }

    #[test]
    fn same_mesh_neighbors_classify_by_shared_nodes() {
        // Two unit quads sharing the segment x = 1 through common node ids.
        let nodes = vec![p(0., 0.), p(1., 0.), p(2., 0.), p(0., 1.), p(1., 1.), p(2., 1.)];
        // Corner ids counter-clockwise, stored lattice-ordered.
        let el = |ids: [usize; 4]| MeshElement {
            shape: ElementShape::Quad,
            order: 1,
            nodes: vec![ids[0], ids[1], ids[3], ids[2]],
            patch: None,
            region: 0,
        };
        let mesh = SurfaceMesh::new(nodes, vec![el([0, 1, 4, 3]), el([1, 2, 5, 4])]).unwrap();
        let set = MeshSet::new(vec![mesh]);
        let ifs = no_interfaces();

        assert_eq!(
            classify_pair(&set, r(0, 0), r(0, 0), &ifs).unwrap(),
            PairClass::Identical
        );
        let class = classify_pair(&set, r(0, 0), r(0, 1), &ifs).unwrap();
        assert_eq!(
            class,
            PairClass::EdgeAdjacent {
                edge_i: 1,
                edge_j: 3,
                reversed: true
            }
        );
        assert_eq!(
            classify_pair(&set, r(0, 1), r(0, 0), &ifs).unwrap(),
            class.swapped()
        );
    }

    #[test]
    fn conforming_cross_mesh_pair_is_edge_adjacent() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 0.), p(2., 0.), p(2., 1.), p(1., 1.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        let class = classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap();
        assert_eq!(
            class,
            PairClass::EdgeAdjacent {
                edge_i: 1,
                edge_j: 3,
                reversed: true
            }
        );
    }

    #[test]
    fn cross_mesh_corner_touch_is_vertex_adjacent() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 1.), p(2., 1.), p(2., 2.), p(1., 2.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        // Duplicate corner-touch records (two naked edges end at the shared
        // vertex on each side) must collapse into one classification.
        let class = classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap();
        assert_eq!(
            class,
            PairClass::VertexAdjacent {
                corner_i: 2,
                corner_j: 0
            }
        );
        assert_eq!(
            classify_pair(&set, r(1, 0), r(0, 0), &ifs).unwrap(),
            class.swapped()
        );
    }

    #[test]
    fn separated_cross_mesh_pair_is_regular() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(3., 0.), p(4., 0.), p(4., 1.), p(3., 1.)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        assert_eq!(
            classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap(),
            PairClass::Regular
        );
    }

    fn two_to_one() -> (MeshSet, InterfaceSet) {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[
            [p(1., 0.), p(2., 0.), p(2., 0.5), p(1., 0.5)],
            [p(1., 0.5), p(2., 0.5), p(2., 1.), p(1., 1.)],
        ]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        (set, ifs)
    }

    #[test]
    fn hanging_refinement_subdivides_into_edge_and_vertex_pairs() {
        let (set, ifs) = two_to_one();
        assert_eq!(
            classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap(),
            PairClass::Nonconforming
        );
        let (rec, swapped) = primary_record(&ifs, r(0, 0), r(1, 0)).unwrap();
        assert!(matches!(rec.kind, JoinKind::EdgeOverlap { .. }));
        let mut subs = subdivide_nonconforming(&set, rec).unwrap();
        if swapped {
            subs = subs.iter().map(SubPair::swapped).collect();
        }
        assert_eq!(subs.len(), 2);
        let edges = subs
            .iter()
            .filter(|s| matches!(s.class, PairClass::EdgeAdjacent { .. }))
            .count();
        let verts = subs
            .iter()
            .filter(|s| matches!(s.class, PairClass::VertexAdjacent { .. }))
            .count();
        assert_eq!((edges, verts), (1, 1), "{subs:?}");
        // Sub-domains of the long element partition it; the short element is
        // kept whole in every sub-pair.
        let ja: f64 = subs.iter().map(|s| s.map_i.jacobian()).sum();
        assert!((ja - 1.0).abs() < 1e-12 || (ja - 2.0).abs() < 1e-12, "{ja}");
    }

    #[test]
    fn subdivided_pair_integral_matches_a_conforming_split() {
        // Integral of 1/|x-y| over (whole unit square) x (right lower half
        // square), once via non-conforming subdivision and once by splitting
        // the unit square into two conforming halves.
        let (set, ifs) = two_to_one();
        let (rec, swapped) = primary_record(&ifs, r(0, 0), r(1, 0)).unwrap();
        let subs = subdivide_nonconforming(&set, rec).unwrap();
        let kernel = |x: &Point3<f64>, y: &Point3<f64>| 1.0 / (x - y).norm();
        let mut via_subdivision = 0.0;
        for s in &subs {
            let (s, mi, mj) = if swapped {
                (s.swapped(), set.mesh(r(0, 0)), set.mesh(r(1, 0)))
            } else {
                (*s, set.mesh(r(0, 0)), set.mesh(r(1, 0)))
            };
            let rule = pair_rule(&s.class, ElementShape::Quad, ElementShape::Quad, 8)
                .unwrap()
                .composed(&s.map_i, &s.map_j);
            via_subdivision += pair_integral(&rule, mi, 0, mj, 0, kernel);
        }

        let halves = quad_mesh(&[
            [p(0., 0.), p(1., 0.), p(1., 0.5), p(0., 0.5)],
            [p(0., 0.5), p(1., 0.5), p(1., 1.), p(0., 1.)],
        ]);
        let target = quad_mesh(&[[p(1., 0.), p(2., 0.), p(2., 0.5), p(1., 0.5)]]);
        let split_set = MeshSet::new(vec![halves, target]);
        let split_ifs = detect(&split_set);
        let mut via_split = 0.0;
        for e in 0..2 {
            let class = classify_pair(&split_set, r(0, e), r(1, 0), &split_ifs).unwrap();
            let rule = pair_rule(&class, ElementShape::Quad, ElementShape::Quad, 8).unwrap();
            via_split += pair_integral(
                &rule,
                split_set.mesh(r(0, e)),
                e,
                split_set.mesh(r(1, 0)),
                0,
                kernel,
            );
        }
        assert!(
            (via_subdivision - via_split).abs() < 1e-7,
            "{via_subdivision} vs {via_split}"
        );
    }

    #[test]
    fn partial_overlap_on_both_sides_produces_four_sub_pairs() {
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(1., 0.5), p(2., 0.5), p(2., 1.5), p(1., 1.5)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        assert_eq!(
            classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap(),
            PairClass::Nonconforming
        );
        let (rec, _) = primary_record(&ifs, r(0, 0), r(1, 0)).unwrap();
        let subs = subdivide_nonconforming(&set, rec).unwrap();
        assert_eq!(subs.len(), 4, "{subs:?}");
        let count = |pred: fn(&PairClass) -> bool| subs.iter().filter(|s| pred(&s.class)).count();
        assert_eq!(count(|c| matches!(c, PairClass::EdgeAdjacent { .. })), 1);
        assert_eq!(count(|c| matches!(c, PairClass::VertexAdjacent { .. })), 2);
        assert_eq!(count(|c| matches!(c, PairClass::Regular)), 1);
        // The sub-domains tile the full pair domain.
        let total: f64 = subs.iter().map(|s| s.map_i.jacobian() * s.map_j.jacobian()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn hanging_vertex_without_overlap_subdivides_into_two_vertex_pairs() {
        // A diamond whose bottom corner rests on the interior of the square's
        // top edge.
        let m0 = quad_mesh(&[[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]);
        let m1 = quad_mesh(&[[p(0.5, 1.), p(1., 1.5), p(0.5, 2.), p(0., 1.5)]]);
        let set = MeshSet::new(vec![m0, m1]);
        let ifs = detect(&set);
        assert_eq!(
            classify_pair(&set, r(0, 0), r(1, 0), &ifs).unwrap(),
            PairClass::Nonconforming
        );
        let (rec, _) = primary_record(&ifs, r(0, 0), r(1, 0)).unwrap();
        assert!(matches!(rec.kind, JoinKind::VertexOnEdge { .. }), "{rec:?}");
        let subs = subdivide_nonconforming(&set, rec).unwrap();
        assert_eq!(subs.len(), 2, "{subs:?}");
        for s in &subs {
            assert!(matches!(s.class, PairClass::VertexAdjacent { corner_j, .. }
                if corner_j == 0));
        }
        let ja: f64 = subs.iter().map(|s| s.map_i.jacobian()).sum();
        assert!((ja - 1.0).abs() < 1e-12, "{ja}");
    }
}
