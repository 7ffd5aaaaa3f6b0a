//! Matrix-free multipole-accelerated boundary operators.
//!
//! The Galerkin matrices of the single-layer and adjoint-double-layer kernels
//! are split over a dual-tree partition of element pairs: near pairs keep the
//! exact singularity-aware quadrature blocks, far pairs go through truncated
//! multipole expansions. A far node pair must pass two tests:
//!
//! * separation `d >= theta (rho_a + rho_b)` with rho covering every
//!   quadrature point of the node, so both expansions converge at a
//!   geometric rate of at most 1/(2 theta - 1);
//! * a node-aggregate form of the assembler's tensor-quadrature criterion,
//!   so every far element pair is one the dense path also integrates with
//!   the plain product rule. The accelerated and dense matrices then differ
//!   by expansion truncation alone, and pairs needing singular or subdivided
//!   rules (which never satisfy that criterion) cannot reach the far list.
//!
//! Both kernels share one set of multipoles: the adjoint double layer is the
//! target-side normal derivative of the single-layer potential, evaluated
//! from the local expansion's gradient.
//!
//! All stages are deterministic: interaction lists are sorted, reductions run
//! in fixed order, and parallel phases write disjoint slices keyed by element
//! or tree node.

use std::sync::Arc;

use nalgebra::{DMatrix, Point3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use super::harmonics::{
    irregular_into, l2l, local_gradient, local_potential, m2l, m2m, ncoeff, regular_into,
};
use super::octree::{build_octree, Octree};
use super::{FmmConfig, FmmError};
use crate::assembly::{Assembler, BlockSystem, KernelKind, OperatorApply};

const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Exact near-field row of one target element: source elements (ascending)
/// with their V and K' Galerkin blocks.
struct NearRow {
    cols: Arc<Vec<usize>>,
    v: Vec<DMatrix<f64>>,
    k: Vec<DMatrix<f64>>,
}

/// Build-time and structure counters, logged once per build.
#[derive(Debug, Clone, Copy)]
pub struct FmmStats {
    pub n_elements: usize,
    pub n_nodes: usize,
    pub n_levels: usize,
    pub n_leaves: usize,
    /// Ordered near node pairs (includes self pairs).
    pub near_node_pairs: usize,
    /// Ordered far node pairs.
    pub far_node_pairs: usize,
    /// Stored near-block matrix entries per kernel.
    pub near_entries: usize,
}

/// Geometry, tree, interaction lists and near-field blocks shared by the two
/// kernel operators of one problem. Owns copies of the quadrature data so the
/// operators are free of borrow lifetimes.
pub struct FmmParts {
    order: usize,
    n_dofs: usize,
    dof_off: Vec<usize>,
    pt_off: Vec<usize>,
    basis_off: Vec<usize>,
    pts: Vec<Point3<f64>>,
    nrm: Vec<Vector3<f64>>,
    jw: Vec<f64>,
    basis: Vec<f64>,
    tree: Octree,
    /// R(center - parent center) per non-root node, degree `order`; feeds
    /// both the upward multipole shift and the downward local shift.
    r_edge: Vec<Vec<Complex64>>,
    /// Far partner nodes per node, ascending; closed under pair swap.
    far: Vec<Vec<usize>>,
    near_rows: Vec<NearRow>,
    stats: FmmStats,
}

impl FmmParts {
    pub fn build(asm: &Assembler, config: &FmmConfig) -> Result<Arc<FmmParts>, FmmError> {
        config.validate()?;
        let order = config.expansion_order;
        let meshes = asm.meshes();
        let ne = meshes.n_elements();
        if ne == 0 {
            return Err(FmmError::Configuration("mesh set has no elements".into()));
        }

        // Flatten the per-element quadrature caches.
        let mut dof_off = Vec::with_capacity(ne + 1);
        let mut pt_off = Vec::with_capacity(ne + 1);
        let mut basis_off = Vec::with_capacity(ne + 1);
        dof_off.push(0);
        pt_off.push(0);
        basis_off.push(0);
        let mut pts = Vec::new();
        let mut nrm = Vec::new();
        let mut jw = Vec::new();
        let mut basis = Vec::new();
        for f in 0..ne {
            let cache = asm.cache(f);
            pts.extend_from_slice(&cache.x);
            nrm.extend_from_slice(&cache.n);
            jw.extend_from_slice(&cache.jw);
            basis.extend_from_slice(&cache.basis);
            dof_off.push(asm.space().element_dofs(f).end);
            pt_off.push(pts.len());
            basis_off.push(basis.len());
        }
        let n_dofs = *dof_off.last().unwrap();

        // Root cube over the mesh nodes covers every quadrature point of
        // every (curved) element, not just the centroids.
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for mesh in &meshes.meshes {
            for p in &mesh.nodes {
                lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
                hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
            }
        }
        for p in &pts {
            lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        let centroids: Vec<Point3<f64>> = (0..ne).map(|f| asm.cache(f).centroid).collect();
        let tree = build_octree(&centroids, (lo, hi), config.leaf_capacity, config.max_depth);
        let nn = tree.nodes.len();

        // Per-node aggregates, exact over descendants: expansion radius from
        // quadrature points, centroid radius and max element diameter for the
        // tensor-rule criterion.
        let mut rho_pts = vec![0.0f64; nn];
        let mut rho_cent = vec![0.0f64; nn];
        let mut dmax = vec![0.0f64; nn];
        for f in 0..ne {
            let mut n = tree.leaf_of[f];
            loop {
                let c = tree.nodes[n].center;
                for p in &pts[pt_off[f]..pt_off[f + 1]] {
                    rho_pts[n] = rho_pts[n].max((p - c).norm());
                }
                rho_cent[n] = rho_cent[n].max((centroids[f] - c).norm());
                dmax[n] = dmax[n].max(asm.cache(f).diam);
                match tree.nodes[n].parent {
                    Some(p) => n = p,
                    None => break,
                }
            }
        }
        let rho: Vec<f64> = (0..nn)
            .map(|n| rho_pts[n].max(tree.nodes[n].half * 3.0f64.sqrt()))
            .collect();

        // Dual-tree traversal. The split choice is symmetric in (a, b), so
        // the lists come out closed under swapping the pair; with the parity
        // of the harmonics this makes the accelerated single-layer matrix
        // exactly symmetric, truncation included.
        let near_ratio = asm.config().near_ratio;
        let mut far: Vec<Vec<usize>> = vec![Vec::new(); nn];
        let mut near: Vec<Vec<usize>> = vec![Vec::new(); nn];
        let mut near_node_pairs = 0usize;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let d = (tree.nodes[a].center - tree.nodes[b].center).norm();
            let separated = d >= config.theta * (rho[a] + rho[b]);
            let tensor_ok = d - rho_cent[a] - rho_cent[b]
                >= near_ratio * dmax[a].max(dmax[b]) + 0.55 * (dmax[a] + dmax[b]);
            if separated && tensor_ok {
                far[a].push(b);
                continue;
            }
            let leaf_a = tree.nodes[a].is_leaf();
            let leaf_b = tree.nodes[b].is_leaf();
            if leaf_a && leaf_b {
                near[a].push(b);
                near_node_pairs += 1;
                continue;
            }
            let split_a = if leaf_b {
                true
            } else if leaf_a {
                false
            } else if tree.nodes[a].half != tree.nodes[b].half {
                tree.nodes[a].half > tree.nodes[b].half
            } else {
                a <= b
            };
            if split_a {
                for &c in &tree.nodes[a].children {
                    stack.push((c, b));
                }
            } else {
                for &c in &tree.nodes[b].children {
                    stack.push((a, c));
                }
            }
        }
        for list in far.iter_mut().chain(near.iter_mut()) {
            list.sort_unstable();
        }
        let far_node_pairs = far.iter().map(Vec::len).sum();

        // Shift tables along tree edges.
        let r_edge: Vec<Vec<Complex64>> = (0..nn)
            .map(|n| match tree.nodes[n].parent {
                Some(p) => {
                    let mut t = vec![Complex64::ZERO; ncoeff(order)];
                    regular_into(order, tree.nodes[n].center - tree.nodes[p].center, &mut t);
                    t
                }
                None => Vec::new(),
            })
            .collect();

        // Near-field source columns per leaf, then exact blocks per element.
        let mut leaf_cols: Vec<Option<Arc<Vec<usize>>>> = vec![None; nn];
        for leaf in tree.leaves() {
            let mut cols: Vec<usize> = near[leaf]
                .iter()
                .flat_map(|&b| tree.nodes[b].elems.iter().copied())
                .collect();
            cols.sort_unstable();
            leaf_cols[leaf] = Some(Arc::new(cols));
        }
        let near_rows: Vec<NearRow> = (0..ne)
            .into_par_iter()
            .map(|i| {
                let cols = leaf_cols[tree.leaf_of[i]]
                    .as_ref()
                    .expect("element leaf has a column list")
                    .clone();
                let nli = dof_off[i + 1] - dof_off[i];
                let mut v = Vec::with_capacity(cols.len());
                let mut k = Vec::with_capacity(cols.len());
                for &j in cols.iter() {
                    let nlj = dof_off[j + 1] - dof_off[j];
                    let mut vb = DMatrix::zeros(nli, nlj);
                    let mut kb = DMatrix::zeros(nli, nlj);
                    asm.pair_blocks_into(i, j, vb.as_mut_slice(), kb.as_mut_slice())?;
                    v.push(vb);
                    k.push(kb);
                }
                Ok(NearRow { cols, v, k })
            })
            .collect::<Result<_, crate::assembly::AssemblyError>>()?;
        let near_entries = near_rows
            .iter()
            .map(|r| r.v.iter().map(|m| m.len()).sum::<usize>())
            .sum();

        let stats = FmmStats {
            n_elements: ne,
            n_nodes: nn,
            n_levels: tree.n_levels(),
            n_leaves: tree.leaves().count(),
            near_node_pairs,
            far_node_pairs,
            near_entries,
        };
        log::debug!(
            "fmm build: {} elements, {} nodes / {} levels / {} leaves, \
             {} near + {} far node pairs, {} near entries per kernel",
            stats.n_elements,
            stats.n_nodes,
            stats.n_levels,
            stats.n_leaves,
            stats.near_node_pairs,
            stats.far_node_pairs,
            stats.near_entries
        );

        Ok(Arc::new(FmmParts {
            order,
            n_dofs,
            dof_off,
            pt_off,
            basis_off,
            pts,
            nrm,
            jw,
            basis,
            tree,
            r_edge,
            far,
            near_rows,
            stats,
        }))
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_elements(&self) -> usize {
        self.dof_off.len() - 1
    }

    pub fn stats(&self) -> FmmStats {
        self.stats
    }

    pub fn has_far_pairs(&self) -> bool {
        self.stats.far_node_pairs > 0
    }

    /// Splits a global dof vector into per-element slices.
    fn split_elems<'y>(&self, y: &'y mut [f64]) -> Vec<&'y mut [f64]> {
        let mut out = Vec::with_capacity(self.n_elements());
        let mut rest = y;
        for f in 0..self.n_elements() {
            let w = self.dof_off[f + 1] - self.dof_off[f];
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(w);
            out.push(head);
            rest = tail;
        }
        out
    }

    fn apply(&self, kind: KernelKind, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_dofs);
        assert_eq!(y.len(), self.n_dofs);
        y.fill(0.0);
        self.apply_near(kind, x, y);
        if self.stats.far_node_pairs > 0 {
            self.apply_far(kind, x, y);
        }
    }

    fn apply_near(&self, kind: KernelKind, x: &[f64], y: &mut [f64]) {
        self.split_elems(y)
            .into_par_iter()
            .enumerate()
            .for_each(|(i, yb)| {
                let row = &self.near_rows[i];
                let blocks = match kind {
                    KernelKind::SingleLayer => &row.v,
                    KernelKind::AdjointDoubleLayer => &row.k,
                };
                for (c, &j) in row.cols.iter().enumerate() {
                    let xb = &x[self.dof_off[j]..self.dof_off[j + 1]];
                    let m = &blocks[c];
                    for (q, &xq) in xb.iter().enumerate() {
                        if xq == 0.0 {
                            continue;
                        }
                        for (p, yp) in yb.iter_mut().enumerate() {
                            *yp += m[(p, q)] * xq;
                        }
                    }
                }
            });
    }

    fn apply_far(&self, kind: KernelKind, x: &[f64], y: &mut [f64]) {
        let order = self.order;
        let nc = ncoeff(order);
        let nn = self.tree.nodes.len();

        // Point charges: quadrature weight times the density value.
        let n_pts = self.pts.len();
        let mut charges = vec![0.0f64; n_pts];
        {
            let mut rest = charges.as_mut_slice();
            let mut slices = Vec::with_capacity(self.n_elements());
            for f in 0..self.n_elements() {
                let w = self.pt_off[f + 1] - self.pt_off[f];
                let (head, tail) = std::mem::take(&mut rest).split_at_mut(w);
                slices.push(head);
                rest = tail;
            }
            slices.into_par_iter().enumerate().for_each(|(f, qs)| {
                let xb = &x[self.dof_off[f]..self.dof_off[f + 1]];
                let nl = xb.len();
                let bas = &self.basis[self.basis_off[f]..self.basis_off[f + 1]];
                let jw = &self.jw[self.pt_off[f]..self.pt_off[f + 1]];
                for (s, q) in qs.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (p, &xp) in xb.iter().enumerate() {
                        acc += bas[s * nl + p] * xp;
                    }
                    *q = jw[s] * acc;
                }
            });
        }

        // Upward pass: leaf expansions, then exact shifts to parents.
        let mut mult = vec![Complex64::ZERO; nn * nc];
        for level in (0..self.tree.n_levels()).rev() {
            let done: Vec<(usize, Vec<Complex64>)> = self.tree.levels[level]
                .par_iter()
                .map(|&n| {
                    let node = &self.tree.nodes[n];
                    let mut m = vec![Complex64::ZERO; nc];
                    if node.is_leaf() {
                        let mut buf = vec![Complex64::ZERO; nc];
                        for &f in &node.elems {
                            for s in self.pt_off[f]..self.pt_off[f + 1] {
                                regular_into(order, self.pts[s] - node.center, &mut buf);
                                let q = charges[s];
                                for (mi, bi) in m.iter_mut().zip(buf.iter()) {
                                    *mi += bi * q;
                                }
                            }
                        }
                    } else {
                        for &c in &node.children {
                            m2m(&mult[c * nc..(c + 1) * nc], &self.r_edge[c], order, &mut m);
                        }
                    }
                    (n, m)
                })
                .collect();
            for (n, m) in done {
                mult[n * nc..(n + 1) * nc].copy_from_slice(&m);
            }
        }

        // Downward pass: far interactions plus the parent's shifted local.
        let mut loc = vec![Complex64::ZERO; nn * nc];
        for level in 0..self.tree.n_levels() {
            let done: Vec<(usize, Vec<Complex64>)> = self.tree.levels[level]
                .par_iter()
                .map(|&n| {
                    let node = &self.tree.nodes[n];
                    let mut l = vec![Complex64::ZERO; nc];
                    let mut s_d = vec![Complex64::ZERO; ncoeff(2 * order)];
                    for &src in &self.far[n] {
                        let d = node.center - self.tree.nodes[src].center;
                        irregular_into(2 * order, d, &mut s_d);
                        m2l(&mult[src * nc..(src + 1) * nc], &s_d, order, &mut l);
                    }
                    if let Some(p) = node.parent {
                        l2l(&loc[p * nc..(p + 1) * nc], &self.r_edge[n], order, &mut l);
                    }
                    (n, l)
                })
                .collect();
            for (n, l) in done {
                loc[n * nc..(n + 1) * nc].copy_from_slice(&l);
            }
        }

        // Evaluation: integrate the local expansion against the test basis.
        self.split_elems(y)
            .into_par_iter()
            .enumerate()
            .for_each(|(f, yb)| {
                let leaf = self.tree.leaf_of[f];
                let l = &loc[leaf * nc..(leaf + 1) * nc];
                let center = self.tree.nodes[leaf].center;
                let nl = yb.len();
                let bas = &self.basis[self.basis_off[f]..self.basis_off[f + 1]];
                let mut buf = vec![Complex64::ZERO; nc];
                for s in self.pt_off[f]..self.pt_off[f + 1] {
                    regular_into(order, self.pts[s] - center, &mut buf);
                    let val = match kind {
                        KernelKind::SingleLayer => local_potential(l, &buf, order),
                        KernelKind::AdjointDoubleLayer => {
                            self.nrm[s].dot(&local_gradient(l, &buf, order))
                        }
                    };
                    let w = INV_4PI * self.jw[s] * val;
                    let sl = s - self.pt_off[f];
                    for (p, yp) in yb.iter_mut().enumerate() {
                        *yp += w * bas[sl * nl + p];
                    }
                }
            });
    }

    fn diag(&self, kind: KernelKind) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.n_dofs);
        for (i, row) in self.near_rows.iter().enumerate() {
            let c = row
                .cols
                .binary_search(&i)
                .expect("self pair is always a near pair");
            let m = match kind {
                KernelKind::SingleLayer => &row.v[c],
                KernelKind::AdjointDoubleLayer => &row.k[c],
            };
            for p in 0..m.nrows() {
                d.push(m[(p, p)]);
            }
        }
        d
    }
}

/// One kernel's matrix-free operator over shared [`FmmParts`].
pub struct FmmOperator {
    kind: KernelKind,
    parts: Arc<FmmParts>,
}

impl FmmOperator {
    pub fn new(kind: KernelKind, parts: Arc<FmmParts>) -> Self {
        FmmOperator { kind, parts }
    }

    pub fn parts(&self) -> &Arc<FmmParts> {
        &self.parts
    }
}

impl OperatorApply for FmmOperator {
    fn dim(&self) -> usize {
        self.parts.n_dofs
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.parts.apply(self.kind, x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.parts.diag(self.kind)
    }
}

/// Builds the multipole-accelerated operator for one kernel.
pub fn fmm_operator(
    asm: &Assembler,
    kind: KernelKind,
    config: &FmmConfig,
) -> Result<FmmOperator, FmmError> {
    Ok(FmmOperator::new(kind, FmmParts::build(asm, config)?))
}

/// Builds the full block system with both kernel operators sharing one tree
/// and one set of near-field blocks.
pub fn build_fmm_system(
    asm: &Assembler,
    eps0: f64,
    config: &FmmConfig,
) -> Result<BlockSystem, FmmError> {
    let parts = FmmParts::build(asm, config)?;
    let v = Arc::new(FmmOperator::new(KernelKind::SingleLayer, parts.clone()));
    let k = Arc::new(FmmOperator::new(KernelKind::AdjointDoubleLayer, parts));
    Ok(BlockSystem::from_operators(asm, v, k, eps0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{make_assembler, AssemblyConfig, DenseOperator};
    use crate::fixtures::{floating_sphere, sphere_electrode, ProblemFixture};

    fn assembler(fx: &ProblemFixture, density_order: usize) -> Assembler<'_> {
        make_assembler(
            &fx.meshes,
            &fx.skeleton,
            &fx.interfaces,
            density_order,
            AssemblyConfig::default(),
        )
        .expect("assembler")
    }

    fn dense_ops(asm: &Assembler) -> (DenseOperator, DenseOperator) {
        let (v, k) = asm.assemble_kernel_matrices().expect("dense matrices");
        (DenseOperator::new(v), DenseOperator::new(k))
    }

    /// Deterministic pseudo-random vector with entries in [-1, 1].
    fn test_vector(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).max(1);
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        num / den
    }

    fn apply(op: &dyn OperatorApply, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; op.dim()];
        op.apply_into(x, &mut y);
        y
    }

    #[test]
    fn single_leaf_tree_degenerates_to_the_dense_operator() {
        // 24 elements fit one leaf of capacity 32: no far field at all, so
        // the operator must reproduce dense assembly to rounding, twice.
        let fx = sphere_electrode(2, 1, 1.0);
        let asm = assembler(&fx, 1);
        let config = FmmConfig::default();
        let parts = FmmParts::build(&asm, &config).expect("parts");
        assert_eq!(parts.stats().n_leaves, 1);
        assert!(!parts.has_far_pairs());

        let (vd, kd) = dense_ops(&asm);
        let x = test_vector(parts.n_dofs(), 7);
        for (kind, dense) in [
            (KernelKind::SingleLayer, &vd),
            (KernelKind::AdjointDoubleLayer, &kd),
        ] {
            let op = FmmOperator::new(kind, parts.clone());
            let y1 = apply(&op, &x);
            let y2 = apply(&op, &x);
            assert_eq!(y1, y2);
            assert!(rel_err(&y1, &apply(dense, &x)) <= 1e-13);
        }
    }

    #[test]
    fn accelerated_apply_matches_dense_assembly() {
        let fx = sphere_electrode(5, 1, 1.0);
        let asm = assembler(&fx, 1);
        let config = FmmConfig {
            leaf_capacity: 8,
            ..FmmConfig::default()
        };
        let parts = FmmParts::build(&asm, &config).expect("parts");
        assert!(parts.has_far_pairs());

        let (vd, kd) = dense_ops(&asm);
        let x = test_vector(parts.n_dofs(), 11);
        for (kind, dense) in [
            (KernelKind::SingleLayer, &vd),
            (KernelKind::AdjointDoubleLayer, &kd),
        ] {
            let op = FmmOperator::new(kind, parts.clone());
            let err = rel_err(&apply(&op, &x), &apply(dense, &x));
            assert!(err <= 1e-6, "{kind:?}: {err}");
        }
    }

    #[test]
    fn truncation_error_decays_with_expansion_order() {
        let fx = sphere_electrode(4, 1, 1.0);
        let asm = assembler(&fx, 0);
        let (vd, _) = dense_ops(&asm);
        let x = test_vector(vd.dim(), 3);
        let y_dense = apply(&vd, &x);

        let mut errs = Vec::new();
        for order in [4usize, 6, 8, 10] {
            let config = FmmConfig {
                leaf_capacity: 4,
                expansion_order: order,
                ..FmmConfig::default()
            };
            let op = fmm_operator(&asm, KernelKind::SingleLayer, &config).expect("operator");
            assert!(op.parts().has_far_pairs());
            errs.push(rel_err(&apply(&op, &x), &y_dense));
        }
        for w in errs.windows(2) {
            assert!(w[1] <= 2.0 * w[0], "errors not decaying: {errs:?}");
        }
        assert!(errs.last().unwrap() <= &1e-6, "{errs:?}");
        assert!(errs.last().unwrap() < errs.first().unwrap(), "{errs:?}");
    }

    #[test]
    fn accelerated_single_layer_is_symmetric() {
        // Swap-closed far lists plus the parity of the expansions keep even
        // the truncated operator exactly symmetric; the bound is far below
        // the truncation error.
        let fx = sphere_electrode(4, 1, 1.0);
        let asm = assembler(&fx, 0);
        let config = FmmConfig {
            leaf_capacity: 4,
            expansion_order: 6,
            ..FmmConfig::default()
        };
        let op = fmm_operator(&asm, KernelKind::SingleLayer, &config).expect("operator");
        assert!(op.parts().has_far_pairs());
        let x = test_vector(op.dim(), 17);
        let y = test_vector(op.dim(), 29);
        let ax = apply(&op, &x);
        let ay = apply(&op, &y);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let norm = |a: &[f64]| dot(a, a).sqrt();
        let a_est = (norm(&ax) / norm(&x)).max(norm(&ay) / norm(&y));
        let asym = (dot(&x, &ay) - dot(&y, &ax)).abs();
        assert!(asym <= 1e-8 * norm(&x) * norm(&y) * a_est);
    }

    #[test]
    fn interaction_lists_cover_every_pair_exactly_once() {
        let fx = sphere_electrode(2, 1, 1.0);
        let asm = assembler(&fx, 0);
        let config = FmmConfig {
            leaf_capacity: 4,
            expansion_order: 4,
            ..FmmConfig::default()
        };
        let parts = FmmParts::build(&asm, &config).expect("parts");
        let tree = &parts.tree;
        let ne = parts.n_elements();

        // Element sets per node.
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for f in 0..ne {
            let mut n = tree.leaf_of[f];
            loop {
                members[n].push(f);
                match tree.nodes[n].parent {
                    Some(p) => n = p,
                    None => break,
                }
            }
        }

        let mut cover = vec![0u32; ne * ne];
        for n in 0..tree.nodes.len() {
            for &src in &parts.far[n] {
                for &i in &members[n] {
                    for &j in &members[src] {
                        cover[i * ne + j] += 1;
                    }
                }
            }
        }
        for (i, row) in parts.near_rows.iter().enumerate() {
            for &j in row.cols.iter() {
                cover[i * ne + j] += 1;
            }
        }
        assert!(cover.iter().all(|&c| c == 1));

        // Far lists are mirror images of each other.
        for n in 0..tree.nodes.len() {
            for &src in &parts.far[n] {
                assert!(parts.far[src].binary_search(&n).is_ok());
            }
        }
    }

    #[test]
    fn diagonal_matches_the_dense_diagonal() {
        let fx = sphere_electrode(3, 1, 1.0);
        let asm = assembler(&fx, 1);
        let config = FmmConfig {
            leaf_capacity: 8,
            ..FmmConfig::default()
        };
        let parts = FmmParts::build(&asm, &config).expect("parts");
        let (vd, kd) = dense_ops(&asm);
        for (kind, dense) in [
            (KernelKind::SingleLayer, &vd),
            (KernelKind::AdjointDoubleLayer, &kd),
        ] {
            let op = FmmOperator::new(kind, parts.clone());
            let dd = dense.diagonal();
            let fd = op.diagonal();
            for (a, b) in fd.iter().zip(&dd) {
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn accelerated_system_matches_the_dense_system() {
        let fx = floating_sphere(2, 1, 2.0);
        let asm = assembler(&fx, 0);
        let dense = crate::assembly::build_block_system(&asm, 1.0).expect("dense system");
        let config = FmmConfig {
            leaf_capacity: 4,
            ..FmmConfig::default()
        };
        let fast = build_fmm_system(&asm, 1.0, &config).expect("fmm system");
        assert_eq!(fast.dim(), dense.dim());

        let x = nalgebra::DVector::from_vec(test_vector(dense.dim(), 5));
        let yd = dense.apply(&x);
        let yf = fast.apply(&x);
        assert!(rel_err(yf.as_slice(), yd.as_slice()) <= 1e-6);
        // Right-hand sides involve no kernel at all.
        assert_eq!(fast.rhs(), dense.rhs());
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let fx = sphere_electrode(1, 1, 1.0);
        let asm = assembler(&fx, 0);
        for config in [
            FmmConfig {
                expansion_order: 1,
                ..FmmConfig::default()
            },
            FmmConfig {
                leaf_capacity: 0,
                ..FmmConfig::default()
            },
            FmmConfig {
                theta: 1.0,
                ..FmmConfig::default()
            },
        ] {
            match fmm_operator(&asm, KernelKind::SingleLayer, &config) {
                Err(FmmError::Configuration(_)) => {}
                Err(other) => panic!("expected configuration error, got {other}"),
                Ok(_) => panic!("expected configuration error, got an operator"),
            }
        }
    }
}
