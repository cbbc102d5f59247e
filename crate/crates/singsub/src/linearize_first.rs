//! Linearize-first solver: Newton runs in function space and each linear
//! problem is discretized by singularity subtraction into `(I - C - D) w = b`.
//! The solved grid vector extends back to a genuine function of `s` through a
//! natural interpolation formula, obtained by reading the approximate linear
//! equation pointwise in `s`; that function feeds the integrals of the next
//! step, so iterates never degrade to mere grid vectors.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::diagnostics::{IterationRecord, ResidualEvaluator, STALL_EPS};
use crate::kernels::{RealFn, TruncatedKernel};
use crate::linalg::{lu_solve, DenseMatrix, GridFunction};
use crate::problem::{Discretization, ProblemInstance};
use crate::SolverError;

/// Same matrix entry as the discretize-first scheme's coupling block:
/// `w_j g_delta(|t_i - t_j|) dN/du(t_i, t_j, u_j)`. The expression is kept
/// textually identical in both modules so both coupling matrices agree
/// bitwise on shared grid vectors.
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

/// Immutable per-solve context shared by every iterate of one run.
struct SolveShared {
    problem: ProblemInstance,
    nodes: Arc<[f64]>,
    weights: Vec<f64>,
    /// Scheme-width truncation, used in all coarse sums.
    gd: TruncatedKernel,
    /// Fine-width truncation, used in all fine integrals.
    g_mu: TruncatedKernel,
    tau: Vec<f64>,
    rho: f64,
}

impl SolveShared {
    fn build(problem: &ProblemInstance, disc: &Discretization) -> Self {
        let big_p = disc.fine.big_p;
        let rho = (problem.b - problem.a) / big_p as f64;
        let tau = (1..=big_p)
            .map(|l| problem.a + (l as f64 - 0.5) * rho)
            .collect();
        Self {
            problem: problem.clone(),
            nodes: Arc::from(disc.rule.nodes.as_slice()),
            weights: disc.rule.weights.clone(),
            gd: TruncatedKernel::new(problem.kernel.clone(), disc.delta_n),
            g_mu: TruncatedKernel::new(problem.kernel.clone(), disc.fine.mu),
            tau,
            rho,
        }
    }
}

/// A continuous iterate: either the user-supplied start function or a frozen
/// interpolation state. Evaluations are memoized per point in both cases.
#[derive(Clone)]
enum PhiEval {
    Initial {
        f: RealFn,
        memo: Arc<Mutex<HashMap<u64, f64>>>,
    },
    Interp(Arc<InterpState>),
}

impl PhiEval {
    fn eval(&self, s: f64) -> Result<f64, SolverError> {
        match self {
            PhiEval::Initial { f, memo } => {
                if let Some(v) = memo.lock().unwrap().get(&s.to_bits()) {
                    return Ok(*v);
                }
                let v = f(s);
                memo.lock().unwrap().insert(s.to_bits(), v);
                Ok(v)
            }
            PhiEval::Interp(state) => state.value_at(s),
        }
    }
}

/// Everything needed to evaluate one frozen iterate anywhere on `[a, b]`.
struct InterpState {
    shared: Arc<SolveShared>,
    /// The previous iterate, entering through the integrals.
    prev: PhiEval,
    /// Grid values of the previous iterate.
    wk: Vec<f64>,
    /// Grid values of this iterate (the solved linear system).
    wnext: Vec<f64>,
    /// Step index of this iterate, for error reporting.
    iteration: usize,
    /// Point memo, pre-seeded with the grid so nodes reproduce `wnext`
    /// exactly.
    memo: Mutex<HashMap<u64, f64>>,
    /// Smallest interpolation denominator magnitude seen so far.
    den_min: Mutex<f64>,
}

impl InterpState {
    fn value_at(&self, s: f64) -> Result<f64, SolverError> {
        if let Some(v) = self.memo.lock().unwrap().get(&s.to_bits()) {
            return Ok(*v);
        }
        let ops = StepOps {
            sh: &self.shared,
            prev: &self.prev,
            wk: &self.wk,
        };
        let (num, den) = interp_parts(&ops, &self.wnext, s)?;
        {
            let mut dm = self.den_min.lock().unwrap();
            if den.abs() < *dm {
                *dm = den.abs();
            }
        }
        if den.abs() <= 0.5 {
            return Err(SolverError::InterpolationDegenerate {
                s,
                denominator: den,
                iteration: self.iteration,
            });
        }
        let v = num / den;
        self.memo.lock().unwrap().insert(s.to_bits(), v);
        Ok(v)
    }
}

/// The pointwise pieces of one linearization step around `(prev, wk)`.
struct StepOps<'a> {
    sh: &'a SolveShared,
    prev: &'a PhiEval,
    wk: &'a [f64],
}

impl StepOps<'_> {
    /// `Q(s) = sum_j w_j g_delta(|s - t_j|) dN/du(s, t_j, wk_j)`
    fn q_of(&self, s: f64) -> f64 {
        let sh = self.sh;
        let nl = &sh.problem.nonlinearity;
        let mut acc = 0.0;
        for (j, &tj) in sh.nodes.iter().enumerate() {
            acc += sh.weights[j]
                * sh.gd.eval_truncated((s - tj).abs())
                * nl.du(s, tj, self.wk[j]);
        }
        acc
    }

    /// `I(s) = int g(|s - t|) dN/du(s, t, phi(t)) dt` by the fine rule, with
    /// the singularity subtracted when the kernel line integral is closed
    /// form.
    fn i_of(&self, s: f64, phi_s: f64) -> Result<f64, SolverError> {
        let sh = self.sh;
        let nl = &sh.problem.nonlinearity;
        match sh.problem.line_integral(s) {
            Some(fs) => {
                let nus = nl.du(s, s, phi_s);
                let mut acc = 0.0;
                for &tau in &sh.tau {
                    let v = nl.du(s, tau, self.prev.eval(tau)?);
                    acc += sh.rho * sh.g_mu.eval_truncated((s - tau).abs()) * (v - nus);
                }
                Ok(acc + nus * fs)
            }
            None => {
                let mut acc = 0.0;
                for &tau in &sh.tau {
                    let v = nl.du(s, tau, self.prev.eval(tau)?);
                    acc += sh.rho * sh.g_mu.eval_truncated((s - tau).abs()) * v;
                }
                Ok(acc)
            }
        }
    }

    /// `K(phi)(s) = int g(|s - t|) N(s, t, phi(t)) dt` by the same rule.
    fn k_of(&self, s: f64, phi_s: f64) -> Result<f64, SolverError> {
        let sh = self.sh;
        let nl = &sh.problem.nonlinearity;
        match sh.problem.line_integral(s) {
            Some(fs) => {
                let ns = nl.n(s, s, phi_s);
                let mut acc = 0.0;
                for &tau in &sh.tau {
                    let v = nl.n(s, tau, self.prev.eval(tau)?);
                    acc += sh.rho * sh.g_mu.eval_truncated((s - tau).abs()) * (v - ns);
                }
                Ok(acc + ns * fs)
            }
            None => {
                let mut acc = 0.0;
                for &tau in &sh.tau {
                    let v = nl.n(s, tau, self.prev.eval(tau)?);
                    acc += sh.rho * sh.g_mu.eval_truncated((s - tau).abs()) * v;
                }
                Ok(acc)
            }
        }
    }

    /// `z(s) = K(phi)(s) - (T phi)(s) + y(s)`: the affine part of the
    /// linearized equation read pointwise at `s`.
    fn z_of(&self, s: f64, phi_s: f64, i_s: f64) -> Result<f64, SolverError> {
        let sh = self.sh;
        let nl = &sh.problem.nonlinearity;
        let mut t_phi = 0.0;
        for (j, &tj) in sh.nodes.iter().enumerate() {
            t_phi += sh.weights[j]
                * sh.gd.eval_truncated((s - tj).abs())
                * nl.du(s, tj, self.wk[j])
                * (self.wk[j] - phi_s);
        }
        t_phi += phi_s * i_s;
        Ok(self.k_of(s, phi_s)? - t_phi + sh.problem.forcing_value(s))
    }
}

/// Numerator and denominator of the natural interpolation formula at `s`.
fn interp_parts(
    ops: &StepOps<'_>,
    wnext: &[f64],
    s: f64,
) -> Result<(f64, f64), SolverError> {
    let sh = ops.sh;
    let nl = &sh.problem.nonlinearity;
    let phi_s = ops.prev.eval(s)?;
    let i_s = ops.i_of(s, phi_s)?;
    let q_s = ops.q_of(s);
    let z_s = ops.z_of(s, phi_s, i_s)?;
    let mut num = 0.0;
    for (j, &tj) in sh.nodes.iter().enumerate() {
        num += kernel_block(sh.weights[j], &sh.gd, s, tj, nl.du(s, tj, ops.wk[j])) * wnext[j];
    }
    num += z_s;
    Ok((num, 1.0 - i_s + q_s))
}

/// One continuous Newton iterate: grid values plus the natural-interpolation
/// evaluator that extends them to all of `[a, b]`.
#[derive(Clone)]
pub struct NkIterate {
    grid_values: GridFunction,
    k: usize,
    eval: PhiEval,
    shared: Arc<SolveShared>,
}

impl NkIterate {
    /// Wraps the user-supplied start function as iterate zero.
    pub fn initial(problem: &ProblemInstance, disc: &Discretization, phi0: RealFn) -> Self {
        let shared = Arc::new(SolveShared::build(problem, disc));
        let values: Vec<f64> = shared.nodes.iter().map(|&t| phi0(t)).collect();
        NkIterate {
            grid_values: GridFunction::new(Arc::clone(&shared.nodes), values),
            k: 0,
            eval: PhiEval::Initial {
                f: phi0,
                memo: Arc::new(Mutex::new(HashMap::new())),
            },
            shared,
        }
    }

    pub fn grid_values(&self) -> &GridFunction {
        &self.grid_values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Evaluates the iterate anywhere on the problem interval. At grid nodes
    /// this reproduces the grid values exactly; elsewhere the natural
    /// interpolation formula applies, guarded by its denominator bound.
    pub fn eval_at(&self, s: f64) -> Result<f64, SolverError> {
        self.eval.eval(s)
    }

    /// Smallest interpolation denominator magnitude observed so far; `None`
    /// for the initial iterate or before any off-grid evaluation.
    pub fn den_min(&self) -> Option<f64> {
        match &self.eval {
            PhiEval::Initial { .. } => None,
            PhiEval::Interp(state) => {
                let v = *state.den_min.lock().unwrap();
                v.is_finite().then_some(v)
            }
        }
    }
}

impl std::fmt::Debug for NkIterate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NkIterate")
            .field("k", &self.k)
            .field("p", &self.grid_values.len())
            .field("den_min", &self.den_min())
            .finish()
    }
}

fn assemble(ops: &StepOps<'_>) -> Result<(DenseMatrix, Vec<f64>), SolverError> {
    let sh = ops.sh;
    let nl = &sh.problem.nonlinearity;
    let p = sh.nodes.len();
    let mut m = DenseMatrix::zeros(p);
    let mut b = vec![0.0; p];
    for i in 0..p {
        let ti = sh.nodes[i];
        let mut row_sum = 0.0;
        for (j, &tj) in sh.nodes.iter().enumerate() {
            let c_ij = kernel_block(sh.weights[j], &sh.gd, ti, tj, nl.du(ti, tj, ops.wk[j]));
            m[(i, j)] = -c_ij;
            row_sum += c_ij;
        }
        let i_i = ops.i_of(ti, ops.wk[i])?;
        // diagonal: identity minus D(i,i) = I(t_i) - sum_l C(i,l)
        m[(i, i)] += 1.0 - (i_i - row_sum);
        b[i] = ops.z_of(ti, ops.wk[i], i_i)?;
    }
    m.assert_finite();
    Ok((m, b))
}

/// The linear system `(I - C - D) w = b` of one linearization step around the
/// given iterate.
pub fn assemble_nk_system(w_k: &NkIterate) -> Result<(DenseMatrix, Vec<f64>), SolverError> {
    let ops = StepOps {
        sh: &w_k.shared,
        prev: &w_k.eval,
        wk: w_k.grid_values.values(),
    };
    assemble(&ops)
}

/// The coupling matrix `C(i,j) = w_j g_delta(|t_i - t_j|) dN/du(t_i,t_j,w_j)`
/// alone, assembled from plain grid values. Given the same grid vector this
/// is bitwise equal to the discretize-first scheme's coupling matrix.
pub fn coupling_matrix(
    w: &GridFunction,
    problem: &ProblemInstance,
    disc: &Discretization,
) -> Result<DenseMatrix, SolverError> {
    let p = disc.rule.p();
    if w.len() != p {
        return Err(SolverError::GridMismatch {
            expected: p,
            got: w.len(),
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
                nl.du(nodes[i], nodes[j], w.values()[j]),
            );
        }
    }
    Ok(m)
}

/// Evaluates the natural interpolation formula for the grid vector `w_next`
/// of the step taken from `w_k`, directly from its definition (no memo, no
/// node shortcut); at a node this reproduces the linear-system row, so it
/// returns `w_next[i]` up to solver roundoff.
pub fn natural_interpolate(
    w_next: &[f64],
    w_k: &NkIterate,
    s: f64,
) -> Result<f64, SolverError> {
    let p = w_k.grid_values.len();
    if w_next.len() != p {
        return Err(SolverError::GridMismatch {
            expected: p,
            got: w_next.len(),
        });
    }
    let ops = StepOps {
        sh: &w_k.shared,
        prev: &w_k.eval,
        wk: w_k.grid_values.values(),
    };
    let (num, den) = interp_parts(&ops, w_next, s)?;
    if den.abs() <= 0.5 {
        return Err(SolverError::InterpolationDegenerate {
            s,
            denominator: den,
            iteration: w_k.k + 1,
        });
    }
    Ok(num / den)
}

/// Takes one linearization step: assemble, solve, and wrap the solution with
/// its natural-interpolation evaluator.
pub fn advance(w_k: &NkIterate) -> Result<NkIterate, SolverError> {
    let shared = Arc::clone(&w_k.shared);
    let (m, b) = assemble_nk_system(w_k)?;
    let iteration = w_k.k + 1;
    let wnext = lu_solve(&m, &b).map_err(|source| SolverError::SingularSystem {
        iteration,
        source,
    })?;
    let mut memo = HashMap::with_capacity(shared.nodes.len());
    for (i, &t) in shared.nodes.iter().enumerate() {
        memo.insert(t.to_bits(), wnext[i]);
    }
    let state = InterpState {
        shared: Arc::clone(&shared),
        prev: w_k.eval.clone(),
        wk: w_k.grid_values.values().to_vec(),
        wnext: wnext.clone(),
        iteration,
        memo: Mutex::new(memo),
        den_min: Mutex::new(f64::INFINITY),
    };
    Ok(NkIterate {
        grid_values: GridFunction::new(Arc::clone(&shared.nodes), wnext),
        k: iteration,
        eval: PhiEval::Interp(Arc::new(state)),
        shared,
    })
}

/// Runs the linearize-first iteration from `phi0` until the residual
/// converges, stalls, or `k_max` is reached. Each record's residual measures
/// the underlying equation with the iterate's own continuous extension.
pub fn solve_linearize_first(
    problem: &ProblemInstance,
    disc: &Discretization,
    phi0: RealFn,
) -> Result<(Vec<IterationRecord>, NkIterate), SolverError> {
    let evaluator = ResidualEvaluator::new(problem, disc);
    let mut cur = NkIterate::initial(problem, disc, phi0);
    let mut records = Vec::new();
    let first = evaluator.try_record(0, cur.grid_values(), &|s| cur.eval_at(s), None)?;
    records.push(first);

    let mut k = 0;
    while k < disc.k_max {
        k += 1;
        cur = advance(&cur)?;
        let prev_log = records.last().map(|r| r.log10_r);
        let record = evaluator.try_record(k, cur.grid_values(), &|s| cur.eval_at(s), prev_log)?;
        let r = record.r;
        let delta = record.delta_log10_r;
        records.push(record);
        if r > 1e6 {
            return Err(SolverError::Divergence {
                iteration: k,
                residual: r,
            });
        }
        if r <= disc.residual_tol {
            break;
        }
        if let Some(d) = delta {
            if d.abs() < STALL_EPS {
                break;
            }
        }
    }
    Ok((records, cur))
}
