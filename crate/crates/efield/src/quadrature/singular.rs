//! Regularizing product rules for element pairs whose closures intersect.
//!
//! The kernel 1/|x-y| is integrable but singular wherever the two elements
//! touch. For each contact class the pair domain is cut into pieces on which
//! a Duffy-type change of variables turns the integrand into a smooth
//! function of four coordinates, integrated with a tensor Gauss rule. The
//! rules are built in a canonical frame (shared edge = local edge 0 of both
//! elements with equal parameters; shared corner = local corner 0) and mapped
//! onto the actual local features by unit-Jacobian relabeling maps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::gauss::{gauss_rule, GaussRule1d};
use super::maps::{corner_relabel, edge_relabel, AffineMap2};
use super::{PairClass, ProductRule, QuadratureError, SubPairRule};
use crate::mesh::ElementShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Family {
    Identical,
    Edge,
    Vertex,
}

/// Points of the identical-pair rule for two copies of the unit square.
///
/// With z = y - x the difference domain splits into sign quadrants; in each,
/// |z| is pulled to a corner by one of two Duffy orderings, leaving the
/// x-domain a coordinate rectangle of size (1-a)(1-b).
fn quad_identical(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(8 * n * n * n * n);
    for (&w, &ww) in g.points.iter().zip(&g.weights) {
        for (&mu, &wm) in g.points.iter().zip(&g.weights) {
            for (&xi, &wx) in g.points.iter().zip(&g.weights) {
                for (&eta, &we) in g.points.iter().zip(&g.weights) {
                    let gw = ww * wm * wx * we;
                    for ord in 0..2 {
                        let (a, b) = if ord == 0 { (w, w * mu) } else { (w * mu, w) };
                        let wt = gw * w * (1.0 - a) * (1.0 - b);
                        for s in [1.0, -1.0] {
                            for t in [1.0, -1.0] {
                                let x1 = xi * (1.0 - a) + if s < 0.0 { a } else { 0.0 };
                                let x2 = eta * (1.0 - b) + if t < 0.0 { b } else { 0.0 };
                                out.push([x1, x2, x1 + s * a, x2 + t * b, wt]);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Edge-adjacent unit squares in the canonical frame: shared edge is v = 0 of
/// both elements with equal edge parameters. The singular directions
/// (|u_j - u_i|, v_i, v_j) form a 3D corner handled by three Duffy orderings,
/// doubled over the sign of u_j - u_i.
fn quad_edge(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(6 * n * n * n * n);
    for (&w, &ww) in g.points.iter().zip(&g.weights) {
        for (&lam, &wl) in g.points.iter().zip(&g.weights) {
            for (&mu, &wm) in g.points.iter().zip(&g.weights) {
                for (&xi, &wx) in g.points.iter().zip(&g.weights) {
                    let gw = ww * wl * wm * wx;
                    for ord in 0..3 {
                        let (a, v1, v2) = match ord {
                            0 => (w, w * lam, w * mu),
                            1 => (w * lam, w, w * mu),
                            _ => (w * lam, w * mu, w),
                        };
                        let wt = gw * w * w * (1.0 - a);
                        for s in [1.0, -1.0] {
                            let u1 = xi * (1.0 - a) + if s < 0.0 { a } else { 0.0 };
                            out.push([u1, v1, u1 + s * a, v2, wt]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Vertex-adjacent unit squares: all four coordinates vanish at the shared
/// corner, a plain 4D corner Duffy split by the largest coordinate.
fn quad_vertex(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(4 * n * n * n * n);
    for (&w, &ww) in g.points.iter().zip(&g.weights) {
        for (&lam, &wl) in g.points.iter().zip(&g.weights) {
            for (&mu, &wm) in g.points.iter().zip(&g.weights) {
                for (&nu, &wn) in g.points.iter().zip(&g.weights) {
                    let wt = ww * wl * wm * wn * w * w * w;
                    let o = [w * lam, w * mu, w * nu];
                    for k in 0..4 {
                        let mut c = [0.0; 4];
                        let mut rest = o.iter();
                        for (pos, slot) in c.iter_mut().enumerate() {
                            *slot = if pos == k { w } else { *rest.next().unwrap() };
                        }
                        out.push([c[0], c[1], c[2], c[3], wt]);
                    }
                }
            }
        }
    }
    out
}

/// Identical-pair rule for the reference triangle. The difference z = y - x
/// ranges over a hexagon; its half with z2 >= 0 is fanned into three sectors
/// from the origin, and within each sector the x-domain is a translated copy
/// of (1-t) times the reference triangle. Each fan is split at its midpoint:
/// the physical direction-norm factor |Az|/t of an affinely distorted element
/// has complex zeros that any one fan can approach, and halving the s-range
/// keeps them outside each subinterval's convergence ellipse for reasonable
/// element quality. The z2 <= 0 half is the swapped image.
fn tri_identical(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(12 * n * n * n * n);
    for (&s, &ws) in g.points.iter().zip(&g.weights) {
        for (&t, &wt_) in g.points.iter().zip(&g.weights) {
            for (&xi, &wx) in g.points.iter().zip(&g.weights) {
                for (&eta, &we) in g.points.iter().zip(&g.weights) {
                    let chi = [xi, eta * (1.0 - xi)];
                    let wt =
                        0.5 * ws * wt_ * wx * we * t * (1.0 - t) * (1.0 - t) * (1.0 - xi);
                    for sh in [0.5 * s, 0.5 + 0.5 * s] {
                        let sectors = [
                            // (offset, z)
                            ([0.0, 0.0], [t * (1.0 - sh), t * sh]),
                            ([t * sh, 0.0], [-t * sh, t]),
                            ([t, 0.0], [-t, t * (1.0 - sh)]),
                        ];
                        for (off, z) in sectors {
                            let x1 = off[0] + (1.0 - t) * chi[0];
                            let x2 = off[1] + (1.0 - t) * chi[1];
                            let y1 = x1 + z[0];
                            let y2 = x2 + z[1];
                            out.push([x1, x2, y1, y2, wt]);
                            out.push([y1, y2, x1, x2, wt]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Edge-adjacent reference triangles in the canonical frame (shared edge
/// v = 0, equal parameters). With d = u_j - u_i, the half d >= 0 splits into
/// four Duffy pieces whose radial variable is rescaled so the u_i-extent
/// becomes exactly 1 - w; the half d <= 0 is the swapped image.
fn tri_edge(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(8 * n * n * n * n);
    for (&q0, &w0) in g.points.iter().zip(&g.weights) {
        for (&q1, &w1) in g.points.iter().zip(&g.weights) {
            for (&q2, &w2) in g.points.iter().zip(&g.weights) {
                for (&xi, &w3) in g.points.iter().zip(&g.weights) {
                    let gw = w0 * w1 * w2 * w3;
                    // (a, v1, v2, weight) per piece; u1 spans [0, 1 - q0].
                    let mut pieces: [(f64, f64, f64, f64); 4] =
                        [(0.0, 0.0, 0.0, 0.0); 4];
                    {
                        // |d| largest: a = w, v1 = w*lam, v2 = w*mu with
                        // w = q0 / (1 + mu).
                        let (lam, mu) = (q1, q2);
                        let w = q0 / (1.0 + mu);
                        pieces[0] = (
                            w,
                            w * lam,
                            w * mu,
                            q0 * q0 / (1.0 + mu).powi(3) * (1.0 - q0),
                        );
                        // v1 largest, lam + mu <= 1: simplex parameterized by
                        // lam = alpha, mu = beta * (1 - alpha).
                        let (alpha, beta) = (q1, q2);
                        let (lam, mu) = (alpha, beta * (1.0 - alpha));
                        pieces[1] = (
                            q0 * lam,
                            q0,
                            q0 * mu,
                            q0 * q0 * (1.0 - alpha) * (1.0 - q0),
                        );
                        // v1 largest, lam + mu > 1: lam = 1 - alpha*beta,
                        // mu = 1 - alpha*(1-beta), w = q0 / (lam + mu).
                        let (lam, mu) = (1.0 - alpha * beta, 1.0 - alpha * (1.0 - beta));
                        let sum = lam + mu;
                        let w = q0 / sum;
                        pieces[2] = (
                            w * lam,
                            w,
                            w * mu,
                            q0 * q0 * alpha / sum.powi(3) * (1.0 - q0),
                        );
                        // v2 largest: mirror of the first piece.
                        let (lam, mu) = (q1, q2);
                        let w = q0 / (1.0 + lam);
                        pieces[3] = (
                            w * lam,
                            w * mu,
                            w,
                            q0 * q0 / (1.0 + lam).powi(3) * (1.0 - q0),
                        );
                    }
                    for (a, v1, v2, jw) in pieces {
                        let u1 = xi * (1.0 - q0);
                        let u2 = u1 + a;
                        let wt = gw * jw;
                        out.push([u1, v1, u2, v2, wt]);
                        out.push([u2, v2, u1, v1, wt]);
                    }
                }
            }
        }
    }
    out
}

/// Vertex-adjacent reference triangles: both elements in radial coordinates
/// around the shared corner, the two radii pulled to a corner by Duffy.
fn tri_vertex(g: &GaussRule1d) -> Vec<[f64; 5]> {
    let n = g.points.len();
    let mut out = Vec::with_capacity(2 * n * n * n * n);
    for (&rho, &w0) in g.points.iter().zip(&g.weights) {
        for (&mu, &w1) in g.points.iter().zip(&g.weights) {
            for (&b1, &w2) in g.points.iter().zip(&g.weights) {
                for (&b2, &w3) in g.points.iter().zip(&g.weights) {
                    let wt = w0 * w1 * w2 * w3 * rho * rho * rho * mu;
                    for (r1, r2) in [(rho, rho * mu), (rho * mu, rho)] {
                        out.push([
                            r1 * (1.0 - b1),
                            r1 * b1,
                            r2 * (1.0 - b2),
                            r2 * b2,
                            wt,
                        ]);
                    }
                }
            }
        }
    }
    out
}

type CanonicalKey = (ElementShape, Family, usize);

fn canonical_cache() -> &'static Mutex<HashMap<CanonicalKey, Arc<Vec<[f64; 5]>>>> {
    static CACHE: OnceLock<Mutex<HashMap<CanonicalKey, Arc<Vec<[f64; 5]>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn canonical_points(
    shape: ElementShape,
    family: Family,
    n: usize,
) -> Result<Arc<Vec<[f64; 5]>>, QuadratureError> {
    let key = (shape, family, n);
    if let Some(pts) = canonical_cache().lock().unwrap().get(&key) {
        return Ok(pts.clone());
    }
    let g = gauss_rule(n)?;
    let pts = Arc::new(match (shape, family) {
        (ElementShape::Quad, Family::Identical) => quad_identical(g),
        (ElementShape::Quad, Family::Edge) => quad_edge(g),
        (ElementShape::Quad, Family::Vertex) => quad_vertex(g),
        (ElementShape::Triangle, Family::Identical) => tri_identical(g),
        (ElementShape::Triangle, Family::Edge) => tri_edge(g),
        (ElementShape::Triangle, Family::Vertex) => tri_vertex(g),
    });
    canonical_cache().lock().unwrap().insert(key, pts.clone());
    Ok(pts)
}

/// The singular rule for a touching pair of equal-shaped elements. `n` is the
/// Gauss order per transformed coordinate. Local features in `class` are
/// mapped onto the canonical frame internally.
pub fn singular_rule(
    class: &PairClass,
    shape_i: ElementShape,
    shape_j: ElementShape,
    n: usize,
) -> Result<ProductRule, QuadratureError> {
    if shape_i != shape_j {
        return Err(QuadratureError::MixedShapes);
    }
    let shape = shape_i;
    let (family, map_i, map_j) = match *class {
        PairClass::Identical => (
            Family::Identical,
            AffineMap2::identity(),
            AffineMap2::identity(),
        ),
        PairClass::EdgeAdjacent {
            edge_i,
            edge_j,
            reversed,
        } => (
            Family::Edge,
            edge_relabel(shape, edge_i, false),
            edge_relabel(shape, edge_j, reversed),
        ),
        PairClass::VertexAdjacent { corner_i, corner_j } => (
            Family::Vertex,
            corner_relabel(shape, corner_i),
            corner_relabel(shape, corner_j),
        ),
        PairClass::Regular | PairClass::Nonconforming => {
            return Err(QuadratureError::NotSingular { class: *class })
        }
    };
    Ok(ProductRule {
        parts: vec![SubPairRule {
            map_i,
            map_j,
            points: canonical_points(shape, family, n)?,
        }],
    })
}

/// The two triangles of the reference square split along the diagonal from
/// corner `e`: the first contains local edge `e` as its edge 0, the second
/// has the corner `e` as its corner 0.
fn quad_split(e: usize) -> (AffineMap2, AffineMap2) {
    let q = ElementShape::Quad;
    let c = |k: usize| -> [f64; 2] {
        let (u, v) = q.corner_ref(k % 4);
        [u, v]
    };
    let t = ElementShape::Triangle;
    (
        AffineMap2::from_corner_points(t, &[c(e), c(e + 1), c(e + 2)]),
        AffineMap2::from_corner_points(t, &[c(e), c(e + 2), c(e + 3)]),
    )
}

/// Singular rule for any touching pair, including mixed quad/triangle pairs.
/// Mixed pairs are handled by cutting the quad along a diagonal through the
/// shared feature and summing triangle-pair rules.
pub fn pair_rule(
    class: &PairClass,
    shape_i: ElementShape,
    shape_j: ElementShape,
    n: usize,
) -> Result<ProductRule, QuadratureError> {
    if shape_i == shape_j {
        return singular_rule(class, shape_i, shape_j, n);
    }
    let tri = ElementShape::Triangle;
    if shape_i != tri {
        // Every canonical point set is symmetric under exchanging its two
        // points, so swapping the maps of the triangle-first rule transposes
        // it exactly; role swap then costs no accuracy.
        let inner = pair_rule(&class.swapped(), shape_j, shape_i, n)?;
        return Ok(ProductRule {
            parts: inner
                .parts
                .into_iter()
                .map(|p| SubPairRule {
                    map_i: p.map_j,
                    map_j: p.map_i,
                    points: p.points,
                })
                .collect(),
        });
    }
    match *class {
        PairClass::EdgeAdjacent {
            edge_i,
            edge_j,
            reversed,
        } => {
            // The shared corner of the far split triangle sits at the start
            // of the quad's edge, which is the start (or, reversed, the end)
            // of the triangle element's edge.
            let (c0, c1) = tri.edge_corners(edge_i);
            let far_corner = if reversed { c1 } else { c0 };
            let (qa, qb) = quad_split(edge_j);
            Ok(ProductRule {
                parts: vec![
                    SubPairRule {
                        map_i: edge_relabel(tri, edge_i, false),
                        map_j: edge_relabel(tri, 0, reversed).then(&qa),
                        points: canonical_points(tri, Family::Edge, n)?,
                    },
                    SubPairRule {
                        map_i: corner_relabel(tri, far_corner),
                        map_j: qb,
                        points: canonical_points(tri, Family::Vertex, n)?,
                    },
                ],
            })
        }
        PairClass::VertexAdjacent { corner_i, corner_j } => {
            let vertex_pts = canonical_points(tri, Family::Vertex, n)?;
            let (qa, qb) = quad_split(corner_j);
            let map_i = corner_relabel(tri, corner_i);
            Ok(ProductRule {
                parts: vec![
                    SubPairRule {
                        map_i,
                        map_j: qa,
                        points: vertex_pts.clone(),
                    },
                    SubPairRule {
                        map_i,
                        map_j: qb,
                        points: vertex_pts,
                    },
                ],
            })
        }
        PairClass::Identical => Err(QuadratureError::MixedShapes),
        PairClass::Regular | PairClass::Nonconforming => {
            Err(QuadratureError::NotSingular { class: *class })
        }
    }
}
