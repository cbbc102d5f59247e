//! Discretize-first solver: the nonlinear equation is reduced on the coarse
//! grid by singularity subtraction to a `p`-dimensional system
//! `F(x) = 0`, which finite-dimensional Newton then solves, one dense linear
//! system `(I - A - B) x = a` per step.

use crate::diagnostics::{IterationRecord, ResidualEvaluator, STALL_EPS};
use crate::kernels::TruncatedKernel;
use crate::linalg::{lu_solve, sup_norm, DenseMatrix, GridFunction};
use crate::problem::{Discretization, LineIntegralSource, ProblemInstance};
use crate::quadrature::fine_singular_integral;
use crate::{SolverError, StopReason};

use std::sync::Arc;

/// Result of a discretize-first Newton run.
#[derive(Clone, Debug)]
pub struct ClassicalState {
    /// Final grid iterate.
    pub iterate: GridFunction,
    /// Last completed Newton step index.
    pub k: usize,
    /// One record per iterate including the initial one (`k + 1` entries).
    pub history: Vec<IterationRecord>,
    /// Sup norms of the discrete residual `F(x_k)`, one per record. These
    /// track the finite-dimensional system; the `history` residuals instead
    /// measure the underlying equation and are the ones tabulated.
    pub fn_norms: Vec<f64>,
    /// Why the iteration stopped.
    pub stop: StopReason,
}

/// The matrix entry shared verbatim with the linearize-first scheme:
/// `w_j g_delta(|t_i - t_j|) dN/du(t_i, t_j, u_j)`. Keeping the expression
/// in one shape in both modules makes the two assembled matrices agree
/// bitwise when fed the same grid vector.
#[inline]
fn kernel_block(
    weight_j: f64,
    gd: &TruncatedKernel,
    t_i: f64,
    t_j: f64,
    du_at_j: f64,
) -> f64 {
    weight_j * gd.eval_truncated((t_i - t_j).abs()) * du_at_j
}

/// Compensation line integrals `f(t_i)` for every node, from the source the
/// discretization selects. Falls back to the fine rule when a closed form is
/// requested but the kernel has no primitive.
pub fn line_integral_values(problem: &ProblemInstance, disc: &Discretization) -> Vec<f64> {
    let want_closed = disc.line_integral_source == LineIntegralSource::ClosedForm
        && problem.kernel.has_primitive();
    disc.rule
        .nodes
        .iter()
        .map(|&t| {
            if want_closed {
                problem.line_integral(t).unwrap()
            } else {
                fine_singular_integral(
                    &problem.kernel,
                    &|_| 1.0,
                    &disc.fine,
                    problem.a,
                    problem.b,
                    t,
                )
            }
        })
        .collect()
}

/// Grid-independent data reused across Newton steps.
struct Workspace<'a> {
    problem: &'a ProblemInstance,
    disc: &'a Discretization,
    gd: TruncatedKernel,
    /// `g_mat[i][j] = w_j g_delta(|t_i - t_j|)`
    g_mat: DenseMatrix,
    /// row sums of `g_mat`
    s_row: Vec<f64>,
    /// compensation integrals `f(t_i)`
    f_vals: Vec<f64>,
    /// forcing values `y(t_i)`
    y_vals: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn build(problem: &'a ProblemInstance, disc: &'a Discretization) -> Self {
        let gd = TruncatedKernel::new(problem.kernel.clone(), disc.delta_n);
        let nodes = &disc.rule.nodes;
        let weights = &disc.rule.weights;
        let p = nodes.len();
        let mut g_mat = DenseMatrix::zeros(p);
        let mut s_row = vec![0.0; p];
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..p {
                let v = weights[j] * gd.eval_truncated((nodes[i] - nodes[j]).abs());
                g_mat[(i, j)] = v;
                acc += v;
            }
            s_row[i] = acc;
        }
        let f_vals = line_integral_values(problem, disc);
        let y_vals = nodes.iter().map(|&t| problem.forcing_value(t)).collect();
        Self {
            problem,
            disc,
            gd,
            g_mat,
            s_row,
            f_vals,
            y_vals,
        }
    }

    fn check_grid(&self, x: &GridFunction) -> Result<(), SolverError> {
        let expected = self.disc.rule.p();
        if x.len() != expected {
            return Err(SolverError::GridMismatch {
                expected,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `F(x)(i) = x_i - sum_j G_ij N(t_i,t_j,x_j) + N(t_i,t_i,x_i)(S_i - f_i) - y_i`
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let nodes = &self.disc.rule.nodes;
        let nl = &self.problem.nonlinearity;
        let p = nodes.len();
        let mut out = vec![0.0; p];
        for i in 0..p {
            let ti = nodes[i];
            let mut sum = 0.0;
            for j in 0..p {
                sum += self.g_mat[(i, j)] * nl.n(ti, nodes[j], x[j]);
            }
            out[i] = x[i] - sum + nl.n(ti, ti, x[i]) * (self.s_row[i] - self.f_vals[i])
                - self.y_vals[i];
        }
        out
    }

    /// Newton system `(I - A - B) x_next = a` around `x`.
    fn newton_system(&self, x: &[f64]) -> (DenseMatrix, Vec<f64>) {
        let nodes = &self.disc.rule.nodes;
        let weights = &self.disc.rule.weights;
        let nl = &self.problem.nonlinearity;
        let p = nodes.len();
        let mut m = DenseMatrix::zeros(p);
        let mut rhs = vec![0.0; p];
        for i in 0..p {
            let ti = nodes[i];
            let fi_minus_si = self.f_vals[i] - self.s_row[i];
            let mut coupling = 0.0;
            for j in 0..p {
                let tj = nodes[j];
                let a_ij = kernel_block(weights[j], &self.gd, ti, tj, nl.du(ti, tj, x[j]));
                m[(i, j)] = -a_ij;
                coupling += self.g_mat[(i, j)] * (nl.n(ti, tj, x[j]) - nl.du(ti, tj, x[j]) * x[j]);
            }
            // diagonal: identity minus the subtraction block B
            let b_ii = nl.du(ti, ti, x[i]) * fi_minus_si;
            m[(i, i)] += 1.0 - b_ii;
            rhs[i] = self.y_vals[i]
                + (nl.n(ti, ti, x[i]) - x[i] * nl.du(ti, ti, x[i])) * fi_minus_si
                + coupling;
        }
        m.assert_finite();
        (m, rhs)
    }
}

/// Discrete residual `F(x)` of the subtracted scheme on the rule's grid.
pub fn assemble_residual(
    x: &GridFunction,
    problem: &ProblemInstance,
    disc: &Discretization,
) -> Result<Vec<f64>, SolverError> {
    let ws = Workspace::build(problem, disc);
    ws.check_grid(x)?;
    Ok(ws.residual(x.values()))
}

/// Newton matrix `I - A - B` and right-hand side `a` around the iterate `x`.
/// The solution of `(I - A - B) x_next = a` is the next Newton iterate.
pub fn assemble_newton_system(
    x: &GridFunction,
    problem: &ProblemInstance,
    disc: &Discretization,
) -> Result<(DenseMatrix, Vec<f64>), SolverError> {
    let ws = Workspace::build(problem, disc);
    ws.check_grid(x)?;
    Ok(ws.newton_system(x.values()))
}

/// The coupling matrix `A(i,j) = w_j g_delta(|t_i - t_j|) dN/du(t_i,t_j,x_j)`
/// alone. Given the same grid vector this is bitwise equal to the
/// linearize-first scheme's coupling matrix.
pub fn coupling_matrix(
    x: &GridFunction,
    problem: &ProblemInstance,
    disc: &Discretization,
) -> Result<DenseMatrix, SolverError> {
    let p = disc.rule.p();
    if x.len() != p {
        return Err(SolverError::GridMismatch {
            expected: p,
            got: x.len(),
        });
    }
    let gd = TruncatedKernel::new(problem.kernel.clone(), disc.delta_n);
    let nl = &problem.nonlinearity;
    let nodes = &disc.rule.nodes;
    let weights = &disc.rule.weights;
    let mut m = DenseMatrix::zeros(p);
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = kernel_block(
                weights[j],
                &gd,
                nodes[i],
                nodes[j],
                nl.du(nodes[i], nodes[j], x.values()[j]),
            );
        }
    }
    Ok(m)
}

/// Runs discretize-first Newton from `x0` until the residual converges,
/// stalls, or `k_max` is reached. Residuals in the returned history measure
/// the underlying equation through the fine quadrature (the piecewise-linear
/// extension of each grid iterate is plugged into the full operator).
pub fn solve_classical(
    problem: &ProblemInstance,
    disc: &Discretization,
    x0: &GridFunction,
) -> Result<ClassicalState, SolverError> {
    let ws = Workspace::build(problem, disc);
    ws.check_grid(x0)?;
    let evaluator = ResidualEvaluator::new(problem, disc);
    let nodes: Arc<[f64]> = x0.shared_nodes();

    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut fn_norms = Vec::new();
    let extension = |g: &GridFunction| {
        let g = g.clone();
        move |s: f64| g.eval_linear(s)
    };
    history.push(evaluator.record(0, &x, &extension(&x), None));
    fn_norms.push(sup_norm(&ws.residual(x.values())));

    let mut stop = StopReason::MaxIterations;
    let mut k = 0;
    while k < disc.k_max {
        k += 1;
        let (m, rhs) = ws.newton_system(x.values());
        let next = lu_solve(&m, &rhs)
            .map_err(|source| SolverError::SingularSystem {
                iteration: k,
                source,
            })?;
        x = GridFunction::new(Arc::clone(&nodes), next);
        let prev_log = history.last().map(|r| r.log10_r);
        let record = evaluator.record(k, &x, &extension(&x), prev_log);
        let r = record.r;
        let delta = record.delta_log10_r;
        history.push(record);
        fn_norms.push(sup_norm(&ws.residual(x.values())));
        if r > 1e6 {
            return Err(SolverError::Divergence {
                iteration: k,
                residual: r,
            });
        }
        if r <= disc.residual_tol {
            stop = StopReason::Converged;
            break;
        }
        if let Some(d) = delta {
            if d.abs() < STALL_EPS {
                stop = StopReason::Stalled;
                break;
            }
        }
    }

    Ok(ClassicalState {
        iterate: x,
        k,
        history,
        fn_norms,
        stop,
    })
}
