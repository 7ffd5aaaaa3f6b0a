//! Restarted GMRES with Givens rotations and Jacobi preconditioning.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use super::SolverError;
use crate::assembly::BlockSystem;

#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Convergence threshold on the relative preconditioned residual.
    pub tol: f64,
    /// Krylov subspace size per restart cycle.
    pub restart: usize,
    /// Total inner-iteration budget across restarts.
    pub max_iters: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-8,
            restart: 200,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative preconditioned residual at exit, recomputed from the true
    /// residual, not the Givens recurrence.
    pub residual: f64,
    pub restarts: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub n_applies: usize,
}

/// Diagonal scaling M^-1 x = x / d.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv: DVector<f64>,
}

impl JacobiPreconditioner {
    pub fn from_diagonal(diag: &DVector<f64>) -> Result<Self, SolverError> {
        for (i, &d) in diag.iter().enumerate() {
            if d == 0.0 || !d.is_finite() {
                return Err(SolverError::Configuration(format!(
                    "Jacobi preconditioner has entry {d} at row {i}"
                )));
            }
        }
        Ok(JacobiPreconditioner {
            inv: diag.map(|d| 1.0 / d),
        })
    }

    pub fn dim(&self) -> usize {
        self.inv.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.inv)
    }
}

/// Jacobi preconditioner of the block system. Density rows use the stored
/// operator diagonal; a floating conductor's charge row has an exactly zero
/// diagonal, so it is scaled by the norm of its coupling column (the only
/// entries tying alpha to the rest of the system).
pub fn jacobi_preconditioner(system: &BlockSystem) -> Result<JacobiPreconditioner, SolverError> {
    let mut d = system.diagonal();
    let nd = system.layout.n_density;
    for i in 0..system.layout.n_float() {
        d[nd + i] = system.hf_column_norm(i);
    }
    for (row, &val) in d.iter().enumerate() {
        if val == 0.0 || !val.is_finite() {
            return Err(SolverError::Configuration(format!(
                "Jacobi preconditioner: unusable diagonal {val} in a {:?} row (row {row})",
                system.layout.class_of_row(row)
            )));
        }
    }
    JacobiPreconditioner::from_diagonal(&d)
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let t = a.hypot(b);
        (a / t, b / t)
    }
}

/// Left-preconditioned restarted GMRES. Converges when the relative
/// preconditioned residual drops below `cfg.tol`; a non-converged run is
/// returned with `converged = false` rather than as an error. An Arnoldi
/// breakdown is an error only if the closed subspace does not already
/// contain the solution.
pub fn gmres<A>(
    mut apply: A,
    rhs: &DVector<f64>,
    pre: Option<&JacobiPreconditioner>,
    cfg: &GmresConfig,
) -> Result<(DVector<f64>, SolveReport), SolverError>
where
    A: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = rhs.len();
    let start = Instant::now();
    let mut report = SolveReport {
        iterations: 0,
        residual: 0.0,
        restarts: 0,
        converged: false,
        wall_time: Duration::ZERO,
        n_applies: 0,
    };
    let prec = |v: DVector<f64>| match pre {
        Some(p) => p.apply(&v),
        None => v,
    };

    let pb = prec(rhs.clone());
    let denom = pb.norm();
    let mut x = DVector::zeros(n);
    if denom == 0.0 {
        report.converged = true;
        report.wall_time = start.elapsed();
        return Ok((x, report));
    }

    let m = cfg.restart.max(1);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut cs = vec![0.0f64; m];
    let mut sn = vec![0.0f64; m];
    let mut g = DVector::<f64>::zeros(m + 1);
    let mut vs: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
    let mut first_sweep = true;
    let mut hard_breakdown = false;

    loop {
        let r = if first_sweep {
            pb.clone()
        } else {
            let ax = apply(&x);
            report.n_applies += 1;
            prec(rhs - ax)
        };
        first_sweep = false;
        let beta = r.norm();
        report.residual = beta / denom;
        if report.residual <= cfg.tol {
            report.converged = true;
            break;
        }
        if hard_breakdown {
            return Err(SolverError::Breakdown {
                iterations: report.iterations,
                residual: report.residual,
            });
        }
        if report.iterations >= cfg.max_iters {
            break;
        }
        if !vs.is_empty() {
            report.restarts += 1;
        }

        vs.clear();
        vs.push(r / beta);
        g.fill(0.0);
        g[0] = beta;
        let mut cols = 0;
        for j in 0..m {
            let av = apply(&vs[j]);
            report.n_applies += 1;
            let mut w = prec(av);
            for i in 0..=j {
                let hij = w.dot(&vs[i]);
                h[(i, j)] = hij;
                w.axpy(-hij, &vs[i], 1.0);
            }
            let hnext = w.norm();
            report.iterations += 1;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let (c, s) = givens(h[(j, j)], hnext);
            cs[j] = c;
            sn[j] = s;
            h[(j, j)] = c * h[(j, j)] + s * hnext;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cols = j + 1;
            let inner_res = g[j + 1].abs() / denom;
            let breakdown = hnext <= 1e-14 * beta;
            if breakdown && inner_res > cfg.tol {
                // The Krylov space closed early; the outer loop verifies the
                // true residual before declaring failure.
                hard_breakdown = true;
            }
            if inner_res <= cfg.tol || breakdown || report.iterations >= cfg.max_iters {
                break;
            }
            vs.push(w / hnext);
        }

        // y = H^-1 g by back substitution, then x += V y.
        let mut y = vec![0.0f64; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in (i + 1)..cols {
                acc -= h[(i, k)] * y[k];
            }
            if h[(i, i)] == 0.0 {
                return Err(SolverError::Breakdown {
                    iterations: report.iterations,
                    residual: report.residual,
                });
            }
            y[i] = acc / h[(i, i)];
        }
        for (i, &yi) in y.iter().enumerate() {
            x.axpy(yi, &vs[i], 1.0);
        }
    }

    report.wall_time = start.elapsed();
    Ok((x, report))
}

/// Solves the block system with its Jacobi preconditioner. The returned
/// vector is in system (class) ordering; see [`super::split_unknowns`].
pub fn solve_system(
    system: &BlockSystem,
    cfg: &GmresConfig,
) -> Result<(DVector<f64>, SolveReport), SolverError> {
    let pre = jacobi_preconditioner(system)?;
    let rhs = system.rhs();
    gmres(|v| system.apply(v), &rhs, Some(&pre), cfg)
}
