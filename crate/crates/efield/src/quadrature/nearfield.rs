//! Adaptive product quadrature for disjoint element pairs that are too close
//! for a single tensor rule.
//!
//! The pair domain is bisected in reference coordinates until every
//! subdomain pair satisfies a separation criterion, then each pair gets a
//! plain tensor Gauss rule. Geometry is probed through the element maps, so
//! curved elements are handled the same way as flat ones.

use nalgebra::Point3;

use super::maps::{quad_children, tensor_pair_points, tri_children, AffineMap2};
use super::{ProductRule, QuadratureError, SubPairRule};
use crate::mesh::{ElementRef, ElementShape, MeshSet};

const MAX_DEPTH: usize = 10;

/// Reference sample grid used to estimate subdomain extent and separation:
/// a 3x3 lattice, collapsed onto the triangle for triangular elements.
fn sample_grid(shape: ElementShape) -> [(f64, f64); 9] {
    let mut out = [(0.0, 0.0); 9];
    let s = [0.0, 0.5, 1.0];
    let mut k = 0;
    for &a in &s {
        for &b in &s {
            out[k] = match shape {
                ElementShape::Quad => (a, b),
                ElementShape::Triangle => (a, b * (1.0 - a)),
            };
            k += 1;
        }
    }
    out
}

fn samples(
    meshes: &MeshSet,
    r: ElementRef,
    map: &AffineMap2,
    grid: &[(f64, f64); 9],
) -> [Point3<f64>; 9] {
    let mesh = meshes.mesh(r);
    let mut out = [Point3::origin(); 9];
    for (p, &(u, v)) in out.iter_mut().zip(grid) {
        let [uu, vv] = map.apply(u, v);
        *p = mesh.element_map(r.elem, uu, vv).0;
    }
    out
}

fn max_pairwise(pts: &[Point3<f64>; 9]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn min_cross(a: &[Point3<f64>; 9], b: &[Point3<f64>; 9]) -> f64 {
    let mut d = f64::INFINITY;
    for p in a {
        for q in b {
            d = d.min((p - q).norm());
        }
    }
    d
}

fn children_of(shape: ElementShape) -> [AffineMap2; 4] {
    match shape {
        ElementShape::Quad => quad_children(),
        ElementShape::Triangle => tri_children(),
    }
}

/// Builds a composite tensor rule for a disjoint pair, bisecting until every
/// subdomain pair has sampled separation at least `ratio` times the larger
/// sampled subdomain diameter. `n` is the Gauss order per coordinate on each
/// subdomain pair. Each side may be quartered at most `MAX_DEPTH` times;
/// exhausting that budget means the elements touch or overlap. Fails on such
/// near contact or if `ri == rj`.
pub fn nearfield_subdivide(
    meshes: &MeshSet,
    ri: ElementRef,
    rj: ElementRef,
    ratio: f64,
    n: usize,
) -> Result<ProductRule, QuadratureError> {
    nearfield_subdivide_from(
        meshes,
        ri,
        rj,
        AffineMap2::identity(),
        AffineMap2::identity(),
        ratio,
        n,
    )
}

/// [`nearfield_subdivide`] restricted to the sub-domains `root_i`/`root_j`
/// of the two elements. Non-conforming contacts are cut into conforming
/// sub-pairs first, and their disjoint sub-pairs can still be nearly
/// touching, so the recursion must run inside the cut domains.
pub fn nearfield_subdivide_from(
    meshes: &MeshSet,
    ri: ElementRef,
    rj: ElementRef,
    root_i: AffineMap2,
    root_j: AffineMap2,
    ratio: f64,
    n: usize,
) -> Result<ProductRule, QuadratureError> {
    if ri == rj {
        return Err(QuadratureError::IdenticalPair { elem: ri });
    }
    let shape_i = meshes.element(ri).shape;
    let shape_j = meshes.element(rj).shape;
    let grid_i = sample_grid(shape_i);
    let grid_j = sample_grid(shape_j);
    let points = tensor_pair_points(shape_i, shape_j, n)?;

    let mut parts = Vec::new();
    let mut stack = vec![(root_i, root_j, 0usize, 0usize)];
    while let Some((map_i, map_j, depth_i, depth_j)) = stack.pop() {
        let si = samples(meshes, ri, &map_i, &grid_i);
        let sj = samples(meshes, rj, &map_j, &grid_j);
        let di = max_pairwise(&si);
        let dj = max_pairwise(&sj);
        let dist = min_cross(&si, &sj);
        if dist >= ratio * di.max(dj) {
            parts.push(SubPairRule {
                map_i,
                map_j,
                points: points.clone(),
            });
            continue;
        }
        // Split the side with the larger sampled diameter; ties go to the
        // element with the lower id, so a swapped pair produces the mirrored
        // subdivision and transposed Galerkin blocks match bit-for-bit.
        let split_i = if di != dj {
            di > dj
        } else {
            (ri.mesh, ri.elem) <= (rj.mesh, rj.elem)
        };
        if split_i {
            if depth_i >= MAX_DEPTH {
                return Err(QuadratureError::NearContact {
                    i: ri,
                    j: rj,
                    depth: depth_i,
                    dist,
                });
            }
            for child in children_of(shape_i) {
                stack.push((child.then(&map_i), map_j, depth_i + 1, depth_j));
            }
        } else {
            if depth_j >= MAX_DEPTH {
                return Err(QuadratureError::NearContact {
                    i: ri,
                    j: rj,
                    depth: depth_j,
                    dist,
                });
            }
            for child in children_of(shape_j) {
                stack.push((map_i, child.then(&map_j), depth_i, depth_j + 1));
            }
        }
    }
    Ok(ProductRule { parts })
}
