//! Block system of the mixed formulation: Dirichlet rows on conductor
//! regions, transmission rows on dielectric interfaces, and one total-charge
//! constraint per floating conductor.
//!
//! Unknowns are ordered (sigma_D, sigma_E, sigma_F, alpha). Density dofs
//! keep a second, element-major "global" numbering shared by the dense and
//! FMM operator paths; `SystemLayout` holds the permutation between the two.

use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::mesh::{DomainClass, ElementRef, RegionClass};

use super::galerkin::Assembler;
use super::AssemblyError;

/// Matrix-free linear operator over the density dofs in global order.
pub trait OperatorApply: Send + Sync {
    fn dim(&self) -> usize;
    /// y = A x; both slices have length `dim`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Stored dense matrix behind the operator interface.
pub struct DenseOperator {
    m: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        DenseOperator { m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl OperatorApply for DenseOperator {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.m.nrows();
        y.fill(0.0);
        let data = self.m.as_slice();
        for (j, &xj) in x.iter().enumerate() {
            let col = &data[j * n..(j + 1) * n];
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.m.nrows()).map(|i| self.m[(i, i)]).collect()
    }
}

/// Block-diagonal matrix over element dof blocks (the Galerkin mass matrix
/// of the discontinuous density space).
#[derive(Debug, Clone)]
pub struct BlockDiagonal {
    blocks: Vec<DMatrix<f64>>,
    /// Start dof of each block; one past the end appended.
    offsets: Vec<usize>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut total = 0;
        for b in &blocks {
            assert_eq!(b.nrows(), b.ncols());
            offsets.push(total);
            total += b.nrows();
        }
        offsets.push(total);
        BlockDiagonal { blocks, offsets }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (b, block) in self.blocks.iter().enumerate() {
            let r = self.block_range(b);
            let xs = &x[r.clone()];
            let ys = &mut y[r];
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, &xj) in xs.iter().enumerate() {
                    acc += block[(i, j)] * xj;
                }
                *yi = acc;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            for i in 0..b.nrows() {
                d.push(b[(i, i)]);
            }
        }
        d
    }
}

/// Dof bookkeeping: global (element-major) density numbering, the row/column
/// permutation into class order (D, E, F), and the floating-potential tail.
#[derive(Debug, Clone)]
pub struct SystemLayout {
    pub n_density: usize,
    pub n_d: usize,
    pub n_e: usize,
    pub n_f: usize,
    /// Floating conductor domain ids, ascending; the alpha unknowns.
    pub float_ids: Vec<usize>,
    /// Region id of each global density dof.
    pub dof_region: Vec<usize>,
    /// Global dof -> class-ordered row/column.
    pub to_class: Vec<usize>,
    /// Class-ordered row/column -> global dof.
    pub from_class: Vec<usize>,
}

impl SystemLayout {
    pub fn n_float(&self) -> usize {
        self.float_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.n_density + self.float_ids.len()
    }

    pub fn class_of_row(&self, row: usize) -> RegionClass {
        if row < self.n_d {
            RegionClass::Dielectric
        } else if row < self.n_d + self.n_e {
            RegionClass::Electrode
        } else {
            RegionClass::Floating
        }
    }

    pub fn build(assembler: &Assembler) -> Result<SystemLayout, AssemblyError> {
        let skeleton = assembler.skeleton();
        let space = assembler.space();
        let n = space.n_dofs();
        if n == 0 {
            return Err(AssemblyError::IllPosed("no density dofs".into()));
        }
        let mut dof_region = vec![usize::MAX; n];
        let mut dof_class = vec![RegionClass::Dielectric; n];
        for f in 0..assembler.meshes().n_elements() {
            let a = assembler.region_of(f);
            let class = skeleton.region(a)?.class;
            for g in space.element_dofs(f) {
                dof_region[g] = a;
                dof_class[g] = class;
            }
        }
        let count = |c: RegionClass| dof_class.iter().filter(|&&x| x == c).count();
        let (n_d, n_e, n_f) = (
            count(RegionClass::Dielectric),
            count(RegionClass::Electrode),
            count(RegionClass::Floating),
        );
        if n_e == 0 && n_f == 0 {
            return Err(AssemblyError::IllPosed(
                "only transmission regions present; no conductor provides excitation".into(),
            ));
        }
        let mut to_class = vec![0usize; n];
        let mut from_class = vec![0usize; n];
        let mut next = [0usize, n_d, n_d + n_e];
        for g in 0..n {
            let slot = match dof_class[g] {
                RegionClass::Dielectric => 0,
                RegionClass::Electrode => 1,
                RegionClass::Floating => 2,
            };
            let row = next[slot];
            next[slot] += 1;
            to_class[g] = row;
            from_class[row] = g;
        }
        Ok(SystemLayout {
            n_density: n,
            n_d,
            n_e,
            n_f,
            float_ids: skeleton.floating_conductors(),
            dof_region,
            to_class,
            from_class,
        })
    }
}

/// One contiguous dof span of a charge constraint row: the row adds
/// `weight_k * sum(K sigma)` and `weight_m * sum(M sigma)` over the span.
#[derive(Debug, Clone)]
pub struct ChargeTerm {
    pub dofs: Range<usize>,
    pub weight_k: f64,
    pub weight_m: f64,
}

/// Total-charge constraint of one floating conductor: the sign-weighted
/// dielectric flux through all its bounding regions equals -Q / eps0.
#[derive(Debug, Clone)]
pub struct ChargeRow {
    pub conductor: usize,
    /// Prescribed total charge in coulombs.
    pub charge: f64,
    pub terms: Vec<ChargeTerm>,
}

/// Per-conductor Galerkin vectors: basis integrals h, Dirichlet data g, and
/// the charge functional f with f . sigma = -Q / eps0.
#[derive(Debug, Clone)]
pub struct ConductorVectors {
    pub conductor: usize,
    pub h: DVector<f64>,
    /// voltage * h for electrodes, absent for floating conductors.
    pub g: Option<DVector<f64>>,
    pub f: DVector<f64>,
}

/// The assembled mixed system behind a matrix-free interface.
pub struct BlockSystem {
    pub layout: SystemLayout,
    pub v: Arc<dyn OperatorApply>,
    pub k: Arc<dyn OperatorApply>,
    pub mass: BlockDiagonal,
    /// Basis integrals per global dof.
    pub phi_int: DVector<f64>,
    /// Transmission parameter per global dof; meaningful on D dofs only.
    pub lambda_dof: Vec<f64>,
    /// Prescribed conductor potential per global dof; nonzero on E dofs.
    pub g_dof: Vec<f64>,
    /// Index into `layout.float_ids` per global dof; set on F dofs.
    pub float_of_dof: Vec<Option<usize>>,
    pub charge_rows: Vec<ChargeRow>,
    /// Vacuum permittivity used to scale prescribed charges.
    pub eps0: f64,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Builds the per-dof coefficient tables and charge rows and wraps the
    /// given kernel operators. The operators act in global dof order.
    pub fn from_operators(
        assembler: &Assembler,
        v: Arc<dyn OperatorApply>,
        k: Arc<dyn OperatorApply>,
        eps0: f64,
    ) -> Result<BlockSystem, AssemblyError> {
        let layout = SystemLayout::build(assembler)?;
        if v.dim() != layout.n_density || k.dim() != layout.n_density {
            return Err(AssemblyError::Configuration(format!(
                "operator dimension {} / {} does not match the {} density dofs",
                v.dim(),
                k.dim(),
                layout.n_density
            )));
        }
        if !(eps0 > 0.0) {
            return Err(AssemblyError::Configuration(
                "vacuum permittivity must be positive".into(),
            ));
        }
        let skeleton = assembler.skeleton();
        let space = assembler.space();
        let n = layout.n_density;

        let mut lambda_dof = vec![0.0; n];
        let mut g_dof = vec![0.0; n];
        let mut float_of_dof = vec![None; n];
        for f in 0..assembler.meshes().n_elements() {
            let region = skeleton.region(assembler.region_of(f))?;
            match region.class {
                RegionClass::Dielectric => {
                    let lambda = region.lambda.ok_or_else(|| {
                        AssemblyError::Configuration(format!(
                            "transmission region {} carries no lambda parameter",
                            region.id
                        ))
                    })?;
                    for g in space.element_dofs(f) {
                        lambda_dof[g] = lambda;
                    }
                }
                RegionClass::Electrode => {
                    let c = region.conductor.expect("electrode region has a conductor");
                    let voltage = match skeleton.domain(c)?.class {
                        DomainClass::Electrode { voltage } => voltage,
                        _ => unreachable!("electrode region bound to non-electrode domain"),
                    };
                    for g in space.element_dofs(f) {
                        g_dof[g] = voltage;
                    }
                }
                RegionClass::Floating => {
                    let c = region.conductor.expect("floating region has a conductor");
                    let idx = layout
                        .float_ids
                        .binary_search(&c)
                        .map_err(|_| {
                            AssemblyError::Configuration(format!(
                                "floating conductor {c} missing from the skeleton listing"
                            ))
                        })?;
                    for g in space.element_dofs(f) {
                        float_of_dof[g] = Some(idx);
                    }
                }
            }
        }

        let mut charge_rows = Vec::with_capacity(layout.float_ids.len());
        for &c in &layout.float_ids {
            let charge = match skeleton.domain(c)?.class {
                DomainClass::Floating { charge } => charge,
                _ => unreachable!("float_ids lists only floating domains"),
            };
            charge_rows.push(ChargeRow {
                conductor: c,
                charge,
                terms: charge_terms(assembler, c)?,
            });
        }

        Ok(BlockSystem {
            layout,
            v,
            k,
            mass: BlockDiagonal::new(assembler.assemble_mass()),
            phi_int: assembler.phi_int(),
            lambda_dof,
            g_dof,
            float_of_dof,
            charge_rows,
            eps0,
        })
    }

    /// Applies the class-ordered system operator.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim());
        let nd = self.layout.n_density;
        let mut sigma = vec![0.0; nd];
        for g in 0..nd {
            sigma[g] = x[self.layout.to_class[g]];
        }
        let mut vs = vec![0.0; nd];
        let mut ks = vec![0.0; nd];
        let mut ms = vec![0.0; nd];
        self.v.apply_into(&sigma, &mut vs);
        self.k.apply_into(&sigma, &mut ks);
        self.mass.apply_into(&sigma, &mut ms);

        let mut y = DVector::zeros(self.dim());
        let (d_end, e_end) = (self.layout.n_d, self.layout.n_d + self.layout.n_e);
        for g in 0..nd {
            let row = self.layout.to_class[g];
            y[row] = if row < d_end {
                ks[g] - self.lambda_dof[g] * ms[g]
            } else if row < e_end {
                vs[g]
            } else {
                let f = self.float_of_dof[g].expect("F row dof belongs to a floating conductor");
                vs[g] - x[nd + f] * self.phi_int[g]
            };
        }
        for (fi, row) in self.charge_rows.iter().enumerate() {
            let mut acc = 0.0;
            for t in &row.terms {
                let mut sk = 0.0;
                let mut sm = 0.0;
                for g in t.dofs.clone() {
                    sk += ks[g];
                    sm += ms[g];
                }
                acc += t.weight_k * sk + t.weight_m * sm;
            }
            y[nd + fi] = acc;
        }
        y
    }

    /// Right-hand side (0, g_E, 0, -Q/eps0) in class order.
    pub fn rhs(&self) -> DVector<f64> {
        let nd = self.layout.n_density;
        let mut b = DVector::zeros(self.dim());
        let (d_end, e_end) = (self.layout.n_d, self.layout.n_d + self.layout.n_e);
        for g in 0..nd {
            let row = self.layout.to_class[g];
            if row >= d_end && row < e_end {
                b[row] = self.g_dof[g] * self.phi_int[g];
            }
        }
        for (fi, row) in self.charge_rows.iter().enumerate() {
            b[nd + fi] = -row.charge / self.eps0;
        }
        b
    }

    /// True operator diagonal in class order; charge rows have no diagonal
    /// coupling (the alpha column is zero there) and yield exact zeros.
    pub fn diagonal(&self) -> DVector<f64> {
        let vd = self.v.diagonal();
        let kd = self.k.diagonal();
        let md = self.mass.diagonal();
        let nd = self.layout.n_density;
        let mut d = DVector::zeros(self.dim());
        let d_end = self.layout.n_d;
        for g in 0..nd {
            let row = self.layout.to_class[g];
            d[row] = if row < d_end {
                kd[g] - self.lambda_dof[g] * md[g]
            } else {
                vd[g]
            };
        }
        d
    }

    /// Euclidean norm of floating conductor `fi`'s coupling column (its h
    /// vector restricted to the conductor's own Dirichlet rows).
    pub fn hf_column_norm(&self, fi: usize) -> f64 {
        let mut acc = 0.0;
        for g in 0..self.layout.n_density {
            if self.float_of_dof[g] == Some(fi) {
                acc += self.phi_int[g] * self.phi_int[g];
            }
        }
        acc.sqrt()
    }

    /// Dense representation via unit-vector applications; intended for
    /// debugging dumps and small oracle comparisons.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e);
            m.column_mut(j).copy_from(&col);
            e[j] = 0.0;
        }
        m
    }

    /// Writes dims, ordering, the dense matrix (row-major) and the rhs.
    pub fn dump<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let m = self.dense_matrix();
        let b = self.rhs();
        writeln!(
            out,
            "efield-system N {} blocks {} {} {} {} ordering sigma_D sigma_E sigma_F alpha row-major",
            self.dim(),
            self.layout.n_d,
            self.layout.n_e,
            self.layout.n_f,
            self.layout.n_float(),
        )?;
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        writeln!(out, "rhs")?;
        for i in 0..b.len() {
            writeln!(out, "{:.17e}", b[i])?;
        }
        Ok(())
    }
}

/// Charge-functional weights of conductor `c` per bounding region: volume
/// regions take the outer-side trace with the skeleton's orientation sign;
/// screens carry both traces, whose operator parts cancel and whose jump
/// terms add to the plain density integral.
fn charge_terms(assembler: &Assembler, c: usize) -> Result<Vec<ChargeTerm>, AssemblyError> {
    let skeleton = assembler.skeleton();
    let meshes = assembler.meshes();
    let space = assembler.space();
    let regions = skeleton.regions_of(c);
    if regions.is_empty() {
        return Err(AssemblyError::Configuration(format!(
            "conductor {c} has no bounding regions"
        )));
    }
    let mut terms = Vec::new();
    for a in regions {
        let region = skeleton.region(a)?;
        let (weight_k, weight_m) = if region.screen == Some(c) {
            (0.0, -skeleton.eps_r(region.toward)?)
        } else {
            let sign = skeleton.sign(c, a)?;
            let eps = skeleton.eps_r(skeleton.opp(c, a)?)?;
            (sign * eps, -0.5 * eps)
        };
        for &m in &region.meshes {
            let count = meshes.meshes[m].elements.len();
            if count == 0 {
                continue;
            }
            let first = meshes.flat(ElementRef { mesh: m, elem: 0 });
            let dofs =
                space.element_dofs(first).start..space.element_dofs(first + count - 1).end;
            terms.push(ChargeTerm {
                dofs,
                weight_k,
                weight_m,
            });
        }
    }
    Ok(terms)
}

/// Per-conductor h, g, f vectors over the global density dofs. Mass column
/// sums equal the basis integrals (partition of unity under one shared
/// rule), so the -1/2 M and jump contributions reduce to `phi_int` spans;
/// the K part takes explicit column sums of the assembled adjoint operator.
pub fn assemble_vectors(
    assembler: &Assembler,
    k_matrix: &DMatrix<f64>,
) -> Result<Vec<ConductorVectors>, AssemblyError> {
    let skeleton = assembler.skeleton();
    let space = assembler.space();
    let n = space.n_dofs();
    if k_matrix.nrows() != n || k_matrix.ncols() != n {
        return Err(AssemblyError::Configuration(format!(
            "adjoint operator is {}x{} but the space has {n} dofs",
            k_matrix.nrows(),
            k_matrix.ncols()
        )));
    }
    let phi_int = assembler.phi_int();
    let mut out = Vec::new();
    for c in skeleton.conductors() {
        let voltage = match skeleton.domain(c)?.class {
            DomainClass::Electrode { voltage } => Some(voltage),
            _ => None,
        };
        let mut h = DVector::zeros(n);
        let mut f = DVector::zeros(n);
        for t in charge_terms(assembler, c)? {
            for g in t.dofs.clone() {
                h[g] = phi_int[g];
                f[g] += t.weight_m * phi_int[g];
            }
            for j in 0..n {
                let mut acc = 0.0;
                for i in t.dofs.clone() {
                    acc += k_matrix[(i, j)];
                }
                f[j] += t.weight_k * acc;
            }
        }
        out.push(ConductorVectors {
            conductor: c,
            g: voltage.map(|v| &h * v),
            h,
            f,
        });
    }
    Ok(out)
}

/// Assembles the dense operators and wraps everything into the block system.
pub fn build_block_system(assembler: &Assembler, eps0: f64) -> Result<BlockSystem, AssemblyError> {
    let (v, k) = assembler.assemble_kernel_matrices()?;
    BlockSystem::from_operators(
        assembler,
        Arc::new(DenseOperator::new(v)),
        Arc::new(DenseOperator::new(k)),
        eps0,
    )
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::assembly::{make_assembler, AssemblyConfig};
    use crate::fixtures::{
        constellation, dielectric_sphere_in_plates, empty_plates, floating_shell,
        floating_sphere, lone_dielectric, sphere_electrode, ProblemFixture,
    };

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

    fn dense_system(asm: &Assembler, eps0: f64) -> (BlockSystem, DMatrix<f64>, DMatrix<f64>) {
        let (vm, km) = asm.assemble_kernel_matrices().unwrap();
        let sys = BlockSystem::from_operators(
            asm,
            Arc::new(DenseOperator::new(vm.clone())),
            Arc::new(DenseOperator::new(km.clone())),
            eps0,
        )
        .unwrap();
        (sys, vm, km)
    }

    /// Class-ordered solution back to global (element-major) density order.
    fn global_order(sys: &BlockSystem, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(sys.layout.n_density, |g, _| x[sys.layout.to_class[g]])
    }

    fn solve(sys: &BlockSystem) -> DVector<f64> {
        sys.dense_matrix().lu().solve(&sys.rhs()).unwrap()
    }

    #[test]
    fn single_electrode_reduces_to_the_plain_dirichlet_system() {
        let p = sphere_electrode(2, 2, 1.0);
        let asm = assembler(&p, 0);
        let (sys, vm, km) = dense_system(&asm, 1.0);
        assert_eq!(
            (sys.layout.n_d, sys.layout.n_e, sys.layout.n_f, sys.layout.n_float()),
            (0, 24, 0, 0)
        );

        // Every row is a Dirichlet row, so the system IS the single-layer
        // matrix and the right side is the scaled basis integral vector.
        let m = sys.dense_matrix();
        assert!((&m - &vm).amax() <= 1e-15 * vm.amax());
        assert!((sys.rhs() - asm.phi_int()).amax() < 1e-15);

        // A unit sphere at 1 volt holds charge 4 pi when eps0 = 1; the
        // exact density is the constant 1.
        let x = solve(&sys);
        let sigma = global_order(&sys, &x);
        let vecs = assemble_vectors(&asm, &km).unwrap();
        let q = -vecs[0].f.dot(&sigma);
        let exact = 4.0 * PI;
        assert!((q - exact).abs() < 0.05 * exact, "charge {q} vs {exact}");
        for g in 0..sigma.len() {
            assert!((sigma[g] - 1.0).abs() < 0.1, "density {} at dof {g}", sigma[g]);
        }
    }

    #[test]
    fn charged_floating_sphere_finds_its_own_potential() {
        let p = floating_sphere(2, 1, 2.0);
        let asm = assembler(&p, 0);
        let (sys, _, _) = dense_system(&asm, 1.0);
        assert_eq!(sys.dim(), 25);
        assert_eq!(sys.layout.float_ids, vec![1]);

        let b = sys.rhs();
        assert_eq!(b[24], -2.0);
        assert!(b.rows(0, 24).amax() == 0.0);

        // alpha = Q / (4 pi eps0 R) for an isolated sphere.
        let x = solve(&sys);
        let exact = 2.0 / (4.0 * PI);
        assert!((x[24] - exact).abs() < 0.1 * exact, "alpha {} vs {exact}", x[24]);
    }

    #[test]
    fn floating_shell_sits_at_a_third_of_the_drive() {
        let p = floating_shell(2, 1);
        let asm = assembler(&p, 0);
        let (sys, _, km) = dense_system(&asm, 1.0);
        assert_eq!(
            (sys.layout.n_d, sys.layout.n_e, sys.layout.n_f, sys.layout.n_float()),
            (0, 48, 24, 1)
        );
        assert_eq!(sys.dim(), 73);

        // The alpha column couples only to the shell's own Dirichlet rows.
        let m = sys.dense_matrix();
        let phi = asm.phi_int();
        for g in 0..sys.layout.n_density {
            let expect = match sys.float_of_dof[g] {
                Some(0) => -phi[g],
                _ => 0.0,
            };
            assert_eq!(m[(sys.layout.to_class[g], 72)], expect);
        }

        // Analytic potential (4/3)/r - 1/3 between shell and enclosure:
        // the shell floats at 1/3 volt and the drive carries 16 pi / 3.
        let x = m.lu().solve(&sys.rhs()).unwrap();
        let alpha = x[72];
        assert!((alpha - 1.0 / 3.0).abs() < 0.1 / 3.0, "alpha {alpha}");

        let sigma = global_order(&sys, &x);
        let vecs = assemble_vectors(&asm, &km).unwrap();
        assert_eq!(vecs[0].conductor, 1);
        let q_drive = -vecs[0].f.dot(&sigma);
        let exact = 16.0 * PI / 3.0;
        assert!((q_drive - exact).abs() < 0.1 * exact, "drive charge {q_drive}");

        // The solved shell really is neutral.
        let q_shell = -vecs[1].f.dot(&sigma);
        assert!(
            q_shell.abs() < 1e-10 * vecs[1].f.norm() * sigma.norm(),
            "shell charge {q_shell}"
        );
    }

    #[test]
    fn every_region_class_assembles_into_one_system() {
        let p = constellation(2, 1, 4.0);
        let asm = assembler(&p, 0);
        let (sys, _, km) = dense_system(&asm, 1.0);
        assert_eq!(
            (sys.layout.n_d, sys.layout.n_e, sys.layout.n_f, sys.layout.n_float()),
            (24, 48, 24, 1)
        );
        assert_eq!(sys.dim(), 97);

        // Ball surface: air outside, permittivity 4 inside.
        let lam = (1.0 + 4.0) / (2.0 * (1.0 - 4.0));
        for g in 0..24 {
            assert_eq!(sys.lambda_dof[sys.layout.from_class[g]], lam);
        }

        let m = sys.dense_matrix();
        let d = sys.diagonal();
        for i in 0..sys.dim() {
            assert!((d[i] - m[(i, i)]).abs() <= 1e-14 * m[(i, i)].abs());
        }

        // Opposite electrodes at opposite voltages: charges cancel and the
        // floater (on the mirror plane) stays near ground.
        let x = m.lu().solve(&sys.rhs()).unwrap();
        let sigma = global_order(&sys, &x);
        let vecs = assemble_vectors(&asm, &km).unwrap();
        assert_eq!(vecs.len(), 3);
        let q_anode = -vecs[0].f.dot(&sigma);
        let q_cathode = -vecs[1].f.dot(&sigma);
        assert!(q_anode > 0.0, "anode charge {q_anode}");
        assert!(
            (q_anode + q_cathode).abs() < 0.05 * q_anode.abs(),
            "{q_anode} vs {q_cathode}"
        );
        assert!(x[96].abs() < 0.05, "floating potential {}", x[96]);
    }

    #[test]
    fn transmission_rows_combine_adjoint_and_mass_blocks() {
        let p = dielectric_sphere_in_plates(1, 1, 1, 2.0, 2.0, 4.0, 1.0, -1.0);
        let asm = assembler(&p, 1);
        let (sys, vm, km) = dense_system(&asm, 8.8541878128e-12);
        let n = sys.layout.n_density;
        assert_eq!((sys.layout.n_d, sys.layout.n_e, sys.layout.n_f), (24, 8, 0));

        let blocks = asm.assemble_mass();
        let mut mass = DMatrix::zeros(n, n);
        for (f, b) in blocks.iter().enumerate() {
            let dofs = asm.space().element_dofs(f);
            mass.view_mut((dofs.start, dofs.start), (b.nrows(), b.ncols())).copy_from(b);
        }

        let m = sys.dense_matrix();
        let scale = vm.amax().max(km.amax());
        let lam = (1.0 + 2.0) / (2.0 * (1.0 - 2.0));
        for g in 0..n {
            let r = sys.layout.to_class[g];
            for g2 in 0..n {
                let c = sys.layout.to_class[g2];
                let expect = if r < sys.layout.n_d {
                    km[(g, g2)] - lam * mass[(g, g2)]
                } else {
                    vm[(g, g2)]
                };
                assert!((m[(r, c)] - expect).abs() <= 1e-14 * scale);
            }
        }

        // Right side: scaled voltages on electrode rows, zero elsewhere.
        let b = sys.rhs();
        let phi = asm.phi_int();
        for g in 0..n {
            let r = sys.layout.to_class[g];
            let volt = if r < 24 {
                0.0
            } else if r < 28 {
                1.0
            } else {
                -1.0
            };
            assert!((b[r] - volt * phi[g]).abs() < 1e-15);
        }
    }

    #[test]
    fn conductor_vectors_scale_with_voltage() {
        let p = empty_plates(1, 1, 0.5, 0.5, 2.0, 0.0);
        let asm = assembler(&p, 0);
        let (_, km) = asm.assemble_kernel_matrices().unwrap();
        let vecs = assemble_vectors(&asm, &km).unwrap();
        assert_eq!(vecs.len(), 2);

        // Unit-area screen at 2 volts: h is the plate area indicator, g
        // scales it, and f drops the cancelled adjoint part.
        let top = &vecs[0];
        assert_eq!(top.conductor, 1);
        assert!((top.h[0] - 1.0).abs() < 1e-13 && top.h[1] == 0.0);
        let g = top.g.as_ref().unwrap();
        assert!((g[0] - 2.0).abs() < 1e-13 && g[1] == 0.0);
        assert!((top.f[0] + 1.0).abs() < 1e-13 && top.f[1] == 0.0);

        let bottom = &vecs[1];
        assert_eq!(bottom.conductor, 2);
        assert_eq!(bottom.g.as_ref().unwrap().amax(), 0.0);
        assert!((bottom.f[1] + 1.0).abs() < 1e-13 && bottom.f[0] == 0.0);
    }

    #[test]
    fn charge_row_application_matches_the_functional() {
        let p = floating_sphere(2, 1, 3.0);
        let asm = assembler(&p, 1);
        let (sys, _, km) = dense_system(&asm, 1.0);
        let n = sys.dim();
        assert_eq!(n, 97);

        let x = DVector::from_fn(n, |i, _| 0.3 + 0.7 * ((i * 2654435761 % 1000) as f64 / 1e3));
        let y = sys.apply(&x);
        let sigma = global_order(&sys, &x);
        let vecs = assemble_vectors(&asm, &km).unwrap();
        assert!(vecs[0].g.is_none());
        let expect = vecs[0].f.dot(&sigma);
        let scale = vecs[0].f.norm() * sigma.norm();
        assert!((y[96] - expect).abs() <= 1e-12 * scale, "{} vs {expect}", y[96]);
    }

    #[test]
    fn purely_dielectric_problems_are_rejected() {
        let p = lone_dielectric(1, 1, 4.0);
        let asm = assembler(&p, 0);
        match SystemLayout::build(&asm) {
            Err(AssemblyError::IllPosed(msg)) => {
                assert!(msg.contains("no conductor"), "{msg}")
            }
            other => panic!("expected an ill-posed error, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_operators_and_permittivities_are_rejected() {
        let p = empty_plates(1, 1, 0.5, 0.5, 1.0, 0.0);
        let asm = assembler(&p, 0);
        let id = |n| Arc::new(DenseOperator::new(DMatrix::identity(n, n)));
        assert!(matches!(
            BlockSystem::from_operators(&asm, id(5), id(2), 1.0),
            Err(AssemblyError::Configuration(_))
        ));
        assert!(matches!(
            BlockSystem::from_operators(&asm, id(2), id(2), 0.0),
            Err(AssemblyError::Configuration(_))
        ));
        assert!(BlockSystem::from_operators(&asm, id(2), id(2), 1.0).is_ok());
    }

    #[test]
    fn dump_writes_a_parseable_snapshot() {
        let p = empty_plates(1, 1, 0.5, 0.5, 1.0, 0.0);
        let asm = assembler(&p, 0);
        let sys = build_block_system(&asm, 1.0).unwrap();
        let mut buf = Vec::new();
        sys.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "efield-system N 2 blocks 0 2 0 0 ordering sigma_D sigma_E sigma_F alpha row-major"
        );
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3], "rhs");

        // 17 significant digits round-trip the doubles exactly.
        let m = sys.dense_matrix();
        let row0: Vec<f64> = lines[1].split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(row0, vec![m[(0, 0)], m[(0, 1)]]);
        let b0: f64 = lines[4].parse().unwrap();
        assert_eq!(b0, sys.rhs()[0]);
    }
}
