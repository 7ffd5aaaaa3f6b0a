//! Adaptive octree over element centroids.
//!
//! The root cube covers the supplied bounding box (every mesh node, hence
//! every quadrature point). Nodes split into their non-empty octants until a
//! node holds at most `leaf_capacity` elements or `max_depth` is reached;
//! each element is assigned to exactly one leaf by centroid. Construction is
//! sequential and the node order depends only on the input order, so two
//! builds over the same data are identical.

use nalgebra::Point3;

/// One cube of the tree. Children index into [`Octree::nodes`]; empty octants
/// are never materialized.
#[derive(Debug, Clone)]
pub struct OctreeNode {
    pub center: Point3<f64>,
    /// Half the cube side.
    pub half: f64,
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Element ids held by this node; non-empty on leaves only.
    pub elems: Vec<usize>,
}

impl OctreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Octree {
    pub nodes: Vec<OctreeNode>,
    /// Leaf node owning each element.
    pub leaf_of: Vec<usize>,
    /// Node ids grouped by level (ascending within a level), root first.
    pub levels: Vec<Vec<usize>>,
}

impl Octree {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].is_leaf())
    }
}

/// Builds the tree. `bbox` must contain every centroid; the root cube is the
/// smallest axis-aligned cube centered on the box that covers it, slightly
/// inflated so boundary points are interior. Elements whose centroids
/// coincide can never be separated; such a group larger than the capacity
/// ends as an over-full leaf at `max_depth` (reported via `log::warn`).
pub fn build_octree(
    centroids: &[Point3<f64>],
    bbox: (Point3<f64>, Point3<f64>),
    leaf_capacity: usize,
    max_depth: usize,
) -> Octree {
    assert!(leaf_capacity >= 1);
    let (lo, hi) = bbox;
    let center = Point3::from((lo.coords + hi.coords) * 0.5);
    let extent = (hi - lo).amax().max(0.0);
    let scale = extent.max(center.coords.amax()).max(1.0);
    let half = 0.5 * extent + 1e-12 * scale;

    let mut nodes = vec![OctreeNode {
        center,
        half,
        level: 0,
        parent: None,
        children: Vec::new(),
        elems: (0..centroids.len()).collect(),
    }];

    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        if nodes[n].elems.len() <= leaf_capacity {
            continue;
        }
        if nodes[n].level >= max_depth {
            log::warn!(
                "octree leaf at depth {} holds {} elements (capacity {}); \
                 centroids too close to separate",
                nodes[n].level,
                nodes[n].elems.len(),
                leaf_capacity
            );
            continue;
        }
        let elems = std::mem::take(&mut nodes[n].elems);
        let c = nodes[n].center;
        let mut buckets: [Vec<usize>; 8] = Default::default();
        for e in elems {
            let d = centroids[e] - c;
            let oct = (d.x >= 0.0) as usize | ((d.y >= 0.0) as usize) << 1 | ((d.z >= 0.0) as usize) << 2;
            buckets[oct].push(e);
        }
        let ch = nodes[n].half * 0.5;
        let level = nodes[n].level + 1;
        for (oct, bucket) in buckets.into_iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let sgn = |bit: usize| if oct >> bit & 1 == 1 { 1.0 } else { -1.0 };
            let child = OctreeNode {
                center: c + nalgebra::Vector3::new(sgn(0), sgn(1), sgn(2)) * ch,
                half: ch,
                level,
                parent: Some(n),
                children: Vec::new(),
                elems: bucket,
            };
            let id = nodes.len();
            nodes.push(child);
            nodes[n].children.push(id);
            stack.push(id);
        }
    }

    let mut leaf_of = vec![usize::MAX; centroids.len()];
    let depth = nodes.iter().map(|n| n.level).max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth + 1];
    for (id, node) in nodes.iter().enumerate() {
        levels[node.level].push(id);
        for &e in &node.elems {
            leaf_of[e] = id;
        }
    }

    Octree {
        nodes,
        leaf_of,
        levels,
    }
}
