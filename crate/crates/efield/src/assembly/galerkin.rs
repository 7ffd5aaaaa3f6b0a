//! Galerkin double integrals of the boundary operators over element pairs.
//!
//! Every pair goes through one pipeline: geometric short-circuit for well
//! separated pairs (cached tensor rules), adaptive subdivision for close
//! pairs, variable transforms for touching pairs, and interface-driven
//! cutting for non-conforming contacts. Both kernels are integrated in one
//! sweep since they share all geometry evaluations.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use rayon::prelude::*;

use crate::mesh::{InterfaceSet, MeshSet, Skeleton};
use crate::quadrature::{
    classify_pair, nearfield_subdivide, nearfield_subdivide_from, pair_rule, primary_record,
    subdivide_nonconforming, tensor_points, PairClass, DEFAULT_NEAR_RATIO, DEFAULT_REGULAR_ORDER,
    DEFAULT_SINGULAR_ORDER,
};

use super::space::DensitySpace;
use super::AssemblyError;

const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);
/// Largest per-element dof count (quad at the maximum density order).
pub(crate) const MAX_LOCAL: usize = 64;

/// Quadrature orders and the near-field threshold used by one assembly.
#[derive(Debug, Clone, Copy)]
pub struct AssemblyConfig {
    /// Gauss points per direction for separated pairs, element caches, and
    /// mass matrices.
    pub regular_order: usize,
    /// Gauss points per direction inside singular variable transforms.
    pub singular_order: usize,
    /// A pair is near when closer than `near_ratio` times the larger
    /// element diameter; such pairs are integrated on subdivided panels.
    pub near_ratio: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            regular_order: DEFAULT_REGULAR_ORDER,
            singular_order: DEFAULT_SINGULAR_ORDER,
            near_ratio: DEFAULT_NEAR_RATIO,
        }
    }
}

/// Geometry, weights and density basis values of one element at its regular
/// tensor rule, precomputed once and shared by all separated pairs.
#[derive(Debug, Clone)]
pub struct ElemCache {
    /// Mapped quadrature points.
    pub x: Vec<Point3<f64>>,
    /// Oriented unit normals at the points.
    pub n: Vec<Vector3<f64>>,
    /// Quadrature weight times surface measure at the points.
    pub jw: Vec<f64>,
    /// Density basis values, point-major: `basis[p * n_loc + l]`.
    pub basis: Vec<f64>,
    pub centroid: Point3<f64>,
    pub diam: f64,
    pub area: f64,
}

/// Assembles Galerkin blocks of the single-layer and adjoint-double-layer
/// operators, element mass matrices, and basis integrals over a validated
/// mesh-set / skeleton / interface triple.
pub struct Assembler<'a> {
    meshes: &'a MeshSet,
    skeleton: &'a Skeleton,
    interfaces: &'a InterfaceSet,
    space: DensitySpace,
    config: AssemblyConfig,
    caches: Vec<ElemCache>,
    /// Region id per flat element.
    elem_region: Vec<usize>,
    /// Flat index pairs (min, max) of cross-mesh elements with an interface
    /// record; all other cross-mesh pairs are disjoint.
    contact_pairs: HashSet<(usize, usize)>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        meshes: &'a MeshSet,
        skeleton: &'a Skeleton,
        interfaces: &'a InterfaceSet,
        space: DensitySpace,
        config: AssemblyConfig,
    ) -> Result<Self, AssemblyError> {
        if config.regular_order < space.order() + 1 {
            return Err(AssemblyError::Configuration(format!(
                "regular quadrature order {} cannot integrate order-{} density products; need at least {}",
                config.regular_order,
                space.order(),
                space.order() + 1
            )));
        }
        if space.n_elements() != meshes.n_elements() {
            return Err(AssemblyError::Configuration(
                "density space was built over a different mesh set".into(),
            ));
        }

        // Each mesh must be claimed by exactly one region, and elements must
        // agree with the claim.
        let mut mesh_region: Vec<Option<usize>> = vec![None; meshes.meshes.len()];
        for region in skeleton.regions() {
            for &m in &region.meshes {
                if m >= mesh_region.len() {
                    return Err(AssemblyError::Configuration(format!(
                        "region {} references mesh {m} but only {} meshes exist",
                        region.id,
                        mesh_region.len()
                    )));
                }
                if let Some(other) = mesh_region[m] {
                    return Err(AssemblyError::Configuration(format!(
                        "mesh {m} is claimed by regions {other} and {}",
                        region.id
                    )));
                }
                mesh_region[m] = Some(region.id);
            }
        }
        let mut elem_region = Vec::with_capacity(meshes.n_elements());
        for r in meshes.iter_elements() {
            let owner = mesh_region[r.mesh].ok_or_else(|| {
                AssemblyError::Configuration(format!("mesh {} belongs to no region", r.mesh))
            })?;
            let elem = meshes.element(r);
            if elem.region != owner {
                return Err(AssemblyError::Configuration(format!(
                    "element {} of mesh {} is tagged region {} but the mesh belongs to region {owner}",
                    r.elem, r.mesh, elem.region
                )));
            }
            elem_region.push(owner);
        }

        let mut contact_pairs = HashSet::new();
        for rec in &interfaces.records {
            let a = meshes.flat(rec.a.elem);
            let b = meshes.flat(rec.b.elem);
            contact_pairs.insert((a.min(b), a.max(b)));
        }

        let caches = build_caches(meshes, &space, config.regular_order)?;
        Ok(Assembler {
            meshes,
            skeleton,
            interfaces,
            space,
            config,
            caches,
            elem_region,
            contact_pairs,
        })
    }

    pub fn meshes(&self) -> &MeshSet {
        self.meshes
    }

    pub fn skeleton(&self) -> &Skeleton {
        self.skeleton
    }

    pub fn space(&self) -> &DensitySpace {
        &self.space
    }

    pub fn config(&self) -> &AssemblyConfig {
        &self.config
    }

    pub fn cache(&self, flat: usize) -> &ElemCache {
        &self.caches[flat]
    }

    pub fn region_of(&self, flat: usize) -> usize {
        self.elem_region[flat]
    }

    /// Conservative disjointness test: centroid separation so large that the
    /// near-field criterion holds for every point of either element. Element
    /// points lie within 0.5 diam of the centroid up to curvature bulge, so
    /// 0.55 (d_i + d_j) bounds the worst-case point approach.
    pub fn well_separated(&self, fi: usize, fj: usize) -> bool {
        let ci = &self.caches[fi];
        let cj = &self.caches[fj];
        let d = (ci.centroid - cj.centroid).norm();
        d >= self.config.near_ratio * ci.diam.max(cj.diam) + 0.55 * (ci.diam + cj.diam)
    }

    /// V and K blocks of one ordered element pair, written column-major into
    /// `v` and `k` (`n_loc_i` rows by `n_loc_j` columns). The adjoint kernel
    /// normal is taken on element `fi` (the row element).
    pub fn pair_blocks_into(
        &self,
        fi: usize,
        fj: usize,
        v: &mut [f64],
        k: &mut [f64],
    ) -> Result<(), AssemblyError> {
        v.fill(0.0);
        k.fill(0.0);
        let ri = self.meshes.unflat(fi);
        let rj = self.meshes.unflat(fj);

        if fi != fj && self.well_separated(fi, fj) {
            self.accumulate_tensor(fi, fj, v, k);
            return Ok(());
        }
        let skip_records =
            ri.mesh != rj.mesh && !self.contact_pairs.contains(&(fi.min(fj), fi.max(fj)));
        let class = if skip_records {
            PairClass::Regular
        } else {
            classify_pair(self.meshes, ri, rj, self.interfaces)?
        };

        let shape_i = self.meshes.element(ri).shape;
        let shape_j = self.meshes.element(rj).shape;
        match class {
            PairClass::Regular => {
                let rule = nearfield_subdivide(
                    self.meshes,
                    ri,
                    rj,
                    self.config.near_ratio,
                    self.config.regular_order,
                )?;
                self.accumulate_rule(fi, fj, rule.parent_points(), v, k)?;
            }
            PairClass::Nonconforming => {
                let (rec, swapped) = primary_record(self.interfaces, ri, rj).ok_or_else(|| {
                    AssemblyError::Configuration(format!(
                        "pair ({ri:?}, {rj:?}) classified non-conforming without a record"
                    ))
                })?;
                for sub in subdivide_nonconforming(self.meshes, rec)? {
                    let sub = if swapped { sub.swapped() } else { sub };
                    match sub.class {
                        PairClass::Regular => {
                            let rule = nearfield_subdivide_from(
                                self.meshes,
                                ri,
                                rj,
                                sub.map_i,
                                sub.map_j,
                                self.config.near_ratio,
                                self.config.regular_order,
                            )?;
                            self.accumulate_rule(fi, fj, rule.parent_points(), v, k)?;
                        }
                        ref singular => {
                            let rule = pair_rule(
                                singular,
                                shape_i,
                                shape_j,
                                self.config.singular_order,
                            )?
                            .composed(&sub.map_i, &sub.map_j);
                            self.accumulate_rule(fi, fj, rule.parent_points(), v, k)?;
                        }
                    }
                }
            }
            ref touching => {
                let rule = pair_rule(touching, shape_i, shape_j, self.config.singular_order)?;
                self.accumulate_rule(fi, fj, rule.parent_points(), v, k)?;
            }
        }
        Ok(())
    }

    /// [`Self::pair_blocks_into`] into freshly allocated matrices.
    pub fn pair_blocks(
        &self,
        fi: usize,
        fj: usize,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), AssemblyError> {
        let nli = self.space.element_dofs(fi).len();
        let nlj = self.space.element_dofs(fj).len();
        let mut v = DMatrix::zeros(nli, nlj);
        let mut k = DMatrix::zeros(nli, nlj);
        self.pair_blocks_into(fi, fj, v.as_mut_slice(), k.as_mut_slice())?;
        Ok((v, k))
    }

    fn accumulate_tensor(&self, fi: usize, fj: usize, v: &mut [f64], k: &mut [f64]) {
        let ci = &self.caches[fi];
        let cj = &self.caches[fj];
        let nli = self.space.element_dofs(fi).len();
        let nlj = self.space.element_dofs(fj).len();
        let mut sv = [0.0f64; MAX_LOCAL];
        let mut sk = [0.0f64; MAX_LOCAL];
        for pi in 0..ci.jw.len() {
            sv[..nlj].fill(0.0);
            sk[..nlj].fill(0.0);
            let xi = ci.x[pi];
            let ni = ci.n[pi];
            for pj in 0..cj.jw.len() {
                let d = xi - cj.x[pj];
                let r2 = d.norm_squared();
                let r = r2.sqrt();
                let tv = cj.jw[pj] * INV_4PI / r;
                let tk = -d.dot(&ni) * INV_4PI / (r2 * r) * cj.jw[pj];
                let bj = &cj.basis[pj * nlj..(pj + 1) * nlj];
                for q in 0..nlj {
                    sv[q] += tv * bj[q];
                    sk[q] += tk * bj[q];
                }
            }
            let wi = ci.jw[pi];
            let bi = &ci.basis[pi * nli..(pi + 1) * nli];
            for q in 0..nlj {
                let (fv, fk) = (sv[q], sk[q]);
                for p in 0..nli {
                    v[q * nli + p] += wi * bi[p] * fv;
                    k[q * nli + p] += wi * bi[p] * fk;
                }
            }
        }
    }

    fn accumulate_rule(
        &self,
        fi: usize,
        fj: usize,
        points: impl Iterator<Item = [f64; 5]>,
        v: &mut [f64],
        k: &mut [f64],
    ) -> Result<(), AssemblyError> {
        let ri = self.meshes.unflat(fi);
        let rj = self.meshes.unflat(fj);
        let mesh_i = self.meshes.mesh(ri);
        let mesh_j = self.meshes.mesh(rj);
        let shape_i = self.meshes.element(ri).shape;
        let shape_j = self.meshes.element(rj).shape;
        let nli = self.space.element_dofs(fi).len();
        let nlj = self.space.element_dofs(fj).len();
        let mut bi = [0.0f64; MAX_LOCAL];
        let mut bj = [0.0f64; MAX_LOCAL];
        for [ui, vi, uj, vj, w] in points {
            let (xi, ji, ni) = mesh_i.element_geometry(ri.elem, ui, vi)?;
            let (xj, jj, _) = mesh_j.element_geometry(rj.elem, uj, vj)?;
            let d = xi - xj;
            let r2 = d.norm_squared();
            let r = r2.sqrt();
            if r < 1e-300 {
                return Err(AssemblyError::KernelSingularity { x: xi });
            }
            let c = w * ji * jj;
            let kv = c * INV_4PI / r;
            let kk = -d.dot(&ni) * c * INV_4PI / (r2 * r);
            self.space.basis_into(shape_i, ui, vi, &mut bi);
            self.space.basis_into(shape_j, uj, vj, &mut bj);
            for q in 0..nlj {
                let (bv, bk) = (bj[q] * kv, bj[q] * kk);
                for p in 0..nli {
                    v[q * nli + p] += bv * bi[p];
                    k[q * nli + p] += bk * bi[p];
                }
            }
        }
        Ok(())
    }

    /// Dense single-layer and adjoint-double-layer matrices over all density
    /// dofs, in flat-element dof order. Parallel over column elements; each
    /// entry is written by exactly one task in a fixed summation order.
    pub fn assemble_kernel_matrices(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), AssemblyError> {
        let n = self.space.n_dofs();
        let ne = self.meshes.n_elements();
        let mut v_data = vec![0.0f64; n * n];
        let mut k_data = vec![0.0f64; n * n];
        {
            let mut v_rest = v_data.as_mut_slice();
            let mut k_rest = k_data.as_mut_slice();
            let mut tasks: Vec<(usize, &mut [f64], &mut [f64])> = Vec::with_capacity(ne);
            for fj in 0..ne {
                let w = self.space.element_dofs(fj).len() * n;
                let (vh, vt) = std::mem::take(&mut v_rest).split_at_mut(w);
                let (kh, kt) = std::mem::take(&mut k_rest).split_at_mut(w);
                v_rest = vt;
                k_rest = kt;
                tasks.push((fj, vh, kh));
            }
            tasks
                .into_par_iter()
                .try_for_each(|(fj, vcol, kcol)| -> Result<(), AssemblyError> {
                    let nlj = self.space.element_dofs(fj).len();
                    let mut vb = vec![0.0f64; MAX_LOCAL * nlj];
                    let mut kb = vec![0.0f64; MAX_LOCAL * nlj];
                    for fi in 0..ne {
                        let rows = self.space.element_dofs(fi);
                        let nli = rows.len();
                        self.pair_blocks_into(
                            fi,
                            fj,
                            &mut vb[..nli * nlj],
                            &mut kb[..nli * nlj],
                        )?;
                        for q in 0..nlj {
                            let dst = q * n + rows.start;
                            vcol[dst..dst + nli].copy_from_slice(&vb[q * nli..(q + 1) * nli]);
                            kcol[dst..dst + nli].copy_from_slice(&kb[q * nli..(q + 1) * nli]);
                        }
                    }
                    Ok(())
                })?;
        }
        Ok((
            DMatrix::from_vec(n, n, v_data),
            DMatrix::from_vec(n, n, k_data),
        ))
    }

    /// Flat indices of the elements discretizing region `a`, ascending.
    pub fn region_elements(&self, a: usize) -> Result<Vec<usize>, AssemblyError> {
        self.skeleton.region(a)?;
        Ok((0..self.meshes.n_elements())
            .filter(|&f| self.elem_region[f] == a)
            .collect())
    }

    /// One Galerkin operator block between two regions, rows spanning the
    /// dofs of region `region_a`'s elements in flat order.
    pub fn assemble_operator_block(
        &self,
        kind: super::KernelKind,
        region_a: usize,
        region_b: usize,
    ) -> Result<DMatrix<f64>, AssemblyError> {
        let rows = self.region_elements(region_a)?;
        let cols = self.region_elements(region_b)?;
        let row_count: usize = rows.iter().map(|&f| self.space.element_dofs(f).len()).sum();
        let col_count: usize = cols.iter().map(|&f| self.space.element_dofs(f).len()).sum();
        let mut out = DMatrix::zeros(row_count, col_count);
        let mut vb = vec![0.0f64; MAX_LOCAL * MAX_LOCAL];
        let mut kb = vec![0.0f64; MAX_LOCAL * MAX_LOCAL];
        let mut c0 = 0;
        for &fj in &cols {
            let nlj = self.space.element_dofs(fj).len();
            let mut r0 = 0;
            for &fi in &rows {
                let nli = self.space.element_dofs(fi).len();
                self.pair_blocks_into(fi, fj, &mut vb[..nli * nlj], &mut kb[..nli * nlj])?;
                let src = match kind {
                    super::KernelKind::SingleLayer => &vb,
                    super::KernelKind::AdjointDoubleLayer => &kb,
                };
                for q in 0..nlj {
                    for p in 0..nli {
                        out[(r0 + p, c0 + q)] = src[q * nli + p];
                    }
                }
                r0 += nli;
            }
            c0 += nlj;
        }
        Ok(out)
    }

    /// Element mass matrices in flat order, each over the element's local
    /// density basis, integrated with the cached regular rule.
    pub fn assemble_mass(&self) -> Vec<DMatrix<f64>> {
        (0..self.meshes.n_elements())
            .map(|f| {
                let c = &self.caches[f];
                let nl = self.space.element_dofs(f).len();
                let mut m = DMatrix::zeros(nl, nl);
                for p in 0..c.jw.len() {
                    let w = c.jw[p];
                    let b = &c.basis[p * nl..(p + 1) * nl];
                    for q in 0..nl {
                        let wq = w * b[q];
                        for pp in 0..nl {
                            m[(pp, q)] += wq * b[pp];
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Integral of every density basis function over its element, in global
    /// dof order; equals the mass column sums exactly (same rule, partition
    /// of unity).
    pub fn phi_int(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.space.n_dofs());
        for f in 0..self.meshes.n_elements() {
            let c = &self.caches[f];
            let dofs = self.space.element_dofs(f);
            let nl = dofs.len();
            for p in 0..c.jw.len() {
                let w = c.jw[p];
                let b = &c.basis[p * nl..(p + 1) * nl];
                for (l, g) in dofs.clone().enumerate() {
                    out[g] += w * b[l];
                }
            }
        }
        out
    }

    /// Element areas under the cached regular rule, flat order.
    pub fn element_areas(&self) -> Vec<f64> {
        self.caches.iter().map(|c| c.area).collect()
    }
}

fn build_caches(
    meshes: &MeshSet,
    space: &DensitySpace,
    regular_order: usize,
) -> Result<Vec<ElemCache>, AssemblyError> {
    let mut caches = Vec::with_capacity(meshes.n_elements());
    let mut basis_buf = [0.0f64; MAX_LOCAL];
    for r in meshes.iter_elements() {
        let mesh = meshes.mesh(r);
        let elem = meshes.element(r);
        let pts = tensor_points(elem.shape, regular_order)?;
        let nl = space.local_count(elem.shape);
        let mut cache = ElemCache {
            x: Vec::with_capacity(pts.len()),
            n: Vec::with_capacity(pts.len()),
            jw: Vec::with_capacity(pts.len()),
            basis: Vec::with_capacity(pts.len() * nl),
            centroid: mesh.element_centroid(r.elem),
            diam: mesh.element_diameter(r.elem),
            area: 0.0,
        };
        for &[u, v, w] in pts.iter() {
            let (x, measure, n) = mesh.element_geometry(r.elem, u, v)?;
            cache.x.push(x);
            cache.n.push(n);
            cache.jw.push(w * measure);
            cache.area += w * measure;
            space.basis_into(elem.shape, u, v, &mut basis_buf);
            cache.basis.extend_from_slice(&basis_buf[..nl]);
        }
        caches.push(cache);
    }
    Ok(caches)
}

/// Density space over `meshes` with every element's region tag validated
/// against the skeleton; the common construction entry used by the solver
/// pipeline.
pub fn make_assembler<'a>(
    meshes: &'a MeshSet,
    skeleton: &'a Skeleton,
    interfaces: &'a InterfaceSet,
    density_order: usize,
    config: AssemblyConfig,
) -> Result<Assembler<'a>, AssemblyError> {
    let space = DensitySpace::new(meshes, density_order)?;
    Assembler::new(meshes, skeleton, interfaces, space, config)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::KernelKind;
    use crate::fixtures::{concentric_spheres, sphere_electrode, two_patch_square, ProblemFixture};
    use crate::mesh::{shape_functions, ElementShape};

    /// Frozen adaptive-oracle value of the raw double integral of 1/|x-y|
    /// over the unit square against itself (no 1/(4 pi) factor).
    const QUAD_IDENT: f64 = 2.9732095982473787;

    fn assembler(p: &ProblemFixture, order: usize) -> Assembler<'_> {
        make_assembler(
            &p.meshes,
            &p.skeleton,
            &p.interfaces,
            order,
            AssemblyConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_flat_element_matches_the_frozen_oracle() {
        let p = crate::fixtures::empty_plates(1, 1, 0.5, 0.5, 1.0, 0.0);
        let asm = assembler(&p, 0);
        let v = asm.assemble_operator_block(KernelKind::SingleLayer, 1, 1).unwrap();
        assert_eq!(v.shape(), (1, 1));
        let oracle = QUAD_IDENT / (4.0 * std::f64::consts::PI);
        assert!((v[(0, 0)] - oracle).abs() < 1e-8 * oracle, "{}", v[(0, 0)]);
    }

    #[test]
    fn mass_blocks_integrate_areas_exactly() {
        let p = crate::fixtures::empty_plates(1, 1, 0.5, 0.5, 1.0, 0.0);
        let asm = assembler(&p, 0);
        let mass = asm.assemble_mass();
        assert!((mass[0][(0, 0)] - 1.0).abs() < 1e-14, "unit square area");

        // Curved sphere, affine density: column sums equal basis integrals.
        let p = sphere_electrode(2, 2, 1.0);
        let asm = assembler(&p, 1);
        let mass = asm.assemble_mass();
        let phi = asm.phi_int();
        let areas = asm.element_areas();
        for (f, m) in mass.iter().enumerate() {
            let dofs = asm.space().element_dofs(f);
            let mut block_total = 0.0;
            for (lj, g) in dofs.clone().enumerate() {
                let col: f64 = (0..m.nrows()).map(|i| m[(i, lj)]).sum();
                assert!((col - phi[g]).abs() < 1e-12, "column sum vs basis integral");
                block_total += col;
            }
            assert!((block_total - areas[f]).abs() < 1e-12 * areas[f].max(1.0));
        }
    }

    #[test]
    fn single_layer_matrix_is_symmetric_positive_definite() {
        let p = sphere_electrode(2, 2, 1.0);
        let asm = assembler(&p, 1);
        let (v, _) = asm.assemble_kernel_matrices().unwrap();
        assert_eq!(v.nrows(), 96);
        let scale = v.amax();
        let mut max_asym: f64 = 0.0;
        for i in 0..v.nrows() {
            for j in 0..i {
                max_asym = max_asym.max((v[(i, j)] - v[(j, i)]).abs());
            }
        }
        assert!(max_asym < 1e-10 * scale, "asymmetry {max_asym:e} vs scale {scale:e}");
        let sym = (v.clone() + v.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let min = eig.eigenvalues.min();
        assert!(min > 0.0, "smallest eigenvalue {min:e}");
    }

    #[test]
    fn adjoint_operator_satisfies_the_closed_surface_identity() {
        // Outward normal: K' applied to a constant density equals -1/2 on a
        // smooth closed surface; Galerkin rows integrate that against phi_i.
        let p = sphere_electrode(2, 2, 1.0);
        let asm = assembler(&p, 0);
        let (_, k) = asm.assemble_kernel_matrices().unwrap();
        let phi = asm.phi_int();
        let ones = DVector::from_element(k.ncols(), 1.0);
        let k1 = &k * &ones;
        let err = (&k1 + &phi * 0.5).norm() / (phi.norm() * 0.5);
        assert!(err < 1e-2, "outward identity error {err:e}");

        // The enclosure of the spherical capacitor has an inward normal, so
        // the sign flips.
        let p = concentric_spheres(2, 2, 2, 1.0, 0.0);
        let asm = assembler(&p, 0);
        let k22 = asm
            .assemble_operator_block(KernelKind::AdjointDoubleLayer, 2, 2)
            .unwrap();
        let h: Vec<f64> = {
            let phi = asm.phi_int();
            asm.region_elements(2)
                .unwrap()
                .iter()
                .flat_map(|&f| asm.space().element_dofs(f))
                .map(|g| phi[g])
                .collect()
        };
        let ones = DVector::from_element(k22.ncols(), 1.0);
        let k1 = &k22 * &ones;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &hi) in h.iter().enumerate() {
            num += (k1[i] - 0.5 * hi) * (k1[i] - 0.5 * hi);
            den += (0.5 * hi) * (0.5 * hi);
        }
        assert!(num.sqrt() < 1e-2 * den.sqrt(), "inward identity error");
    }

    #[test]
    fn separated_pair_blocks_match_a_direct_tensor_oracle() {
        // Two unit plates twenty diameters apart: the cached tensor path.
        let p = crate::fixtures::empty_plates(1, 1, 10.0, 0.5, 1.0, 0.0);
        let asm = assembler(&p, 1);
        let (fi, fj) = (0usize, 1usize);
        assert!(asm.well_separated(fi, fj));
        let (v, k) = asm.pair_blocks(fi, fj).unwrap();

        let pts = tensor_points(ElementShape::Quad, asm.config().regular_order).unwrap();
        let ri = p.meshes.unflat(fi);
        let rj = p.meshes.unflat(fj);
        let (nli, nlj) = (4, 4);
        let mut v_ref = DMatrix::zeros(nli, nlj);
        let mut k_ref = DMatrix::zeros(nli, nlj);
        for &[ui, vi, wi] in pts.iter() {
            let (xi, ji, ni) = p.meshes.mesh(ri).element_geometry(ri.elem, ui, vi).unwrap();
            let bi = shape_functions(ElementShape::Quad, 1, ui, vi);
            for &[uj, vj, wj] in pts.iter() {
                let (xj, jj, _) = p.meshes.mesh(rj).element_geometry(rj.elem, uj, vj).unwrap();
                let bj = shape_functions(ElementShape::Quad, 1, uj, vj);
                let kv =
                    crate::assembly::eval_kernel(KernelKind::SingleLayer, &xi, &xj, &ni).unwrap();
                let kk =
                    crate::assembly::eval_kernel(KernelKind::AdjointDoubleLayer, &xi, &xj, &ni)
                        .unwrap();
                let c = wi * ji * wj * jj;
                for q in 0..nlj {
                    for pp in 0..nli {
                        v_ref[(pp, q)] += c * kv * bi[pp] * bj[q];
                        k_ref[(pp, q)] += c * kk * bi[pp] * bj[q];
                    }
                }
            }
        }
        assert!((v.clone() - &v_ref).amax() < 1e-13 * v_ref.amax());
        assert!((k.clone() - &k_ref).amax() < 1e-12 * k_ref.amax().max(1e-6));
    }

    #[test]
    fn pair_blocks_of_the_symmetric_kernel_transpose_exactly() {
        // Non-conforming seam: integrating (i, j) and (j, i) must agree
        // through the swapped cut geometry.
        let p = two_patch_square(2, 4, 1);
        let asm = assembler(&p, 0);
        let ne = p.meshes.n_elements();
        let mut checked = 0;
        for fi in 0..ne {
            for fj in 0..ne {
                let ri = p.meshes.unflat(fi);
                let rj = p.meshes.unflat(fj);
                if ri.mesh == rj.mesh {
                    continue;
                }
                let class = classify_pair(&p.meshes, ri, rj, &p.interfaces).unwrap();
                if !matches!(class, PairClass::Nonconforming) {
                    continue;
                }
                let (vij, _) = asm.pair_blocks(fi, fj).unwrap();
                let (vji, _) = asm.pair_blocks(fj, fi).unwrap();
                assert!(
                    (vij.clone() - vji.transpose()).amax() < 1e-12 * vij.amax().max(1e-12),
                    "pair ({fi}, {fj})"
                );
                checked += 1;
            }
        }
        assert!(checked >= 4, "expected non-conforming pairs, saw {checked}");
    }

    #[test]
    fn stored_matrices_equal_the_pair_loop_application() {
        let p = concentric_spheres(2, 2, 1, 1.0, 0.0);
        let asm = assembler(&p, 1);
        let n = asm.space().n_dofs();
        assert!(n <= 300);
        let (v, k) = asm.assemble_kernel_matrices().unwrap();
        let x = DVector::from_fn(n, |i, _| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5);
        let yv = &v * &x;
        let yk = &k * &x;

        let mut zv = DVector::zeros(n);
        let mut zk = DVector::zeros(n);
        let ne = p.meshes.n_elements();
        for fj in 0..ne {
            let cols = asm.space().element_dofs(fj);
            for fi in 0..ne {
                let rows = asm.space().element_dofs(fi);
                let (bv, bk) = asm.pair_blocks(fi, fj).unwrap();
                for (lq, q) in cols.clone().enumerate() {
                    for (lp, pp) in rows.clone().enumerate() {
                        zv[pp] += bv[(lp, lq)] * x[q];
                        zk[pp] += bk[(lp, lq)] * x[q];
                    }
                }
            }
        }
        assert!((zv - &yv).norm() < 1e-13 * yv.norm());
        assert!((zk - &yk).norm() < 1e-13 * yk.norm().max(1e-12));
    }

    #[test]
    fn region_validation_rejects_mismatched_tags() {
        let p = sphere_electrode(2, 1, 1.0);
        let mut meshes = p.meshes.clone();
        meshes.meshes[0].elements[3].region = 77;
        let err = make_assembler(
            &meshes,
            &p.skeleton,
            &p.interfaces,
            0,
            AssemblyConfig::default(),
        )
        .err()
        .expect("mismatched region tag must fail");
        assert!(matches!(err, AssemblyError::Configuration(_)));
    }

    #[test]
    fn curved_sphere_blocks_keep_galerkin_symmetry_for_mixed_orders() {
        // Density order 2 on curved quadratic geometry exercises the basis
        // tables at every rule type.
        let p = sphere_electrode(1, 2, 1.0);
        let asm = assembler(&p, 2);
        let (v, _) = asm.assemble_kernel_matrices().unwrap();
        assert_eq!(v.nrows(), 6 * 9);
        let mut max_asym: f64 = 0.0;
        for i in 0..v.nrows() {
            for j in 0..i {
                max_asym = max_asym.max((v[(i, j)] - v[(j, i)]).abs());
            }
        }
        assert!(max_asym < 1e-10 * v.amax());
    }
}
