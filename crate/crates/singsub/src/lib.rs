//! Solvers for nonlinear Fredholm integral equations of the second kind with
//! weakly singular convolution kernels,
//!
//! ```text
//! phi(s) - int_a^b g(|s - t|) N(s, t, phi(t)) dt = y(s),    s in [a, b],
//! ```
//!
//! where `g` is unbounded but integrable at the origin (for example
//! `1/(2 sqrt r)` or `-2 log sin(pi r)`) and `N` is a smooth, possibly
//! nonlinear Urysohn factor.
//!
//! Both discretizations are built on the same two ingredients: a composite
//! quadrature rule whose weights cannot concentrate on small subintervals
//! (see [`quadrature::verify_hypothesis_h`]) and *singularity subtraction*,
//! which rewrites the operator so the quadratured integrand vanishes at the
//! singular point and compensates with the exactly known line integral
//! `f(s) = int_a^b g(|s - t|) dt`.
//!
//! Two solution strategies are provided:
//!
//! * [`classical`]: discretize the nonlinear equation first into a dense
//!   system of dimension `p`, then run finite-dimensional Newton.
//! * [`linearize_first`]: run Newton in function space and discretize each
//!   linear problem, recovering a genuine function of `s` at every step
//!   through a natural interpolation formula.
//!
//! The [`problem`] module registers two ready-made example equations with
//! known constant solutions; [`diagnostics`] computes the relative residual
//! and error tables used to compare the two approaches, and [`cli`] drives
//! parameter sweeps and CSV output. The `examples/` directory of this crate
//! has one runnable program per capability; start with
//! `cargo run --example example2_linearize_first`.

pub mod classical;
pub mod cli;
pub mod diagnostics;
pub mod kernels;
pub mod linalg;
pub mod linearize_first;
pub mod problem;
pub mod quadrature;

pub use classical::{solve_classical, ClassicalState};
pub use diagnostics::{
    build_table, grid_relative_error, grid_relative_residual, plot_series, write_csv,
    write_series_csv, IterationRecord, ResidualEvaluator, STALL_EPS,
};
pub use kernels::{
    clausen2, exact_line_integral, Nonlinearity, RealFn, SingularKernel, SymmetryClass,
    TruncatedKernel, UrysohnFn,
};
pub use linalg::{lu_solve, sup_norm, DenseMatrix, GridFunction, LinalgError};
pub use linearize_first::{natural_interpolate, solve_linearize_first, NkIterate};
pub use problem::{
    build_named, manufacture_forcing, register_example, register_problem, registered_names,
    Discretization, Forcing, ForcingMode, LineIntegralSource, ProblemInstance,
};
pub use quadrature::{
    fine_singular_integral, fine_singular_integral_subtracted, left_endpoint_rule, midpoint_rule,
    simpson_rule, trapezoid_rule, verify_hypothesis_h, verify_hypothesis_h_seeded,
    FineQuadratureSpec, HypothesisReport, QuadratureRule,
};

/// Why an iteration loop stopped after its last recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The relative residual fell to the requested tolerance.
    Converged,
    /// The residual stopped improving (quadrature-error plateau).
    Stalled,
    /// The iteration budget ran out first.
    MaxIterations,
}

/// Errors shared by both solver drivers.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    /// The Newton matrix of the given iteration could not be factorized.
    #[error("singular linear system at iteration {iteration}: {source}")]
    SingularSystem {
        iteration: usize,
        #[source]
        source: linalg::LinalgError,
    },
    /// The relative residual grew past the divergence guard.
    #[error("iteration {iteration} diverged: relative residual reached {residual:.3e}")]
    Divergence { iteration: usize, residual: f64 },
    /// The natural interpolation denominator dropped to 1/2 or below, so the
    /// pointwise recovery formula is no longer well posed.
    #[error(
        "natural interpolation denominator {denominator:.6} at s = {s} \
         (iteration {iteration}) violates the 1/2 lower bound"
    )]
    InterpolationDegenerate {
        s: f64,
        denominator: f64,
        iteration: usize,
    },
    /// Forcing-term manufacturing was requested without a known solution.
    #[error("manufacturing a forcing term requires a known exact solution")]
    MissingExactSolution,
    /// A grid function was used with a rule of different dimension.
    #[error("grid mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },
}
