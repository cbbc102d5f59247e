//! Residual and error measurement against the underlying equation, iteration
//! records, and their table / CSV / plot-series renderings.
//!
//! The residual reported everywhere is the *grid-valued relative residual*
//! `r = sup_i |F(cand)(t_i)| / sup_i |F(0)(t_i)|` with
//! `F(x)(s) = x(s) - K(x)(s) - y(s)` and `K` evaluated by the fine
//! quadrature, so candidates from both solution strategies are judged by one
//! common, scheme-independent yardstick.

use std::io::Write;
use std::path::Path;

use crate::kernels::TruncatedKernel;
use crate::linalg::{sup_norm, GridFunction};
use crate::problem::{Discretization, ProblemInstance};
use crate::quadrature::QuadratureRule;
use crate::SolverError;

/// Stall threshold: when one iteration moves `log10 r` by less than this,
/// the iteration has hit its accuracy plateau and stops.
pub const STALL_EPS: f64 = 0.05;

/// One row of a convergence table.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    /// Grid-valued relative residual.
    pub r: f64,
    pub log10_r: f64,
    /// Change against the previous row; absent on the first row.
    pub delta_log10_r: Option<f64>,
    /// Grid-valued relative error; needs a known solution.
    pub e: Option<f64>,
    pub e_over_r: Option<f64>,
    pub r_over_e: Option<f64>,
}

impl IterationRecord {
    pub fn new(k: usize, r: f64, prev_log10_r: Option<f64>, e: Option<f64>) -> Self {
        let log10_r = r.log10();
        let delta_log10_r = prev_log10_r.map(|p| log10_r - p);
        let (e_over_r, r_over_e) = match e {
            Some(ev) if ev > 0.0 && r > 0.0 => (Some(ev / r), Some(r / ev)),
            _ => (None, None),
        };
        Self {
            k,
            r,
            log10_r,
            delta_log10_r,
            e,
            e_over_r,
            r_over_e,
        }
    }
}

/// Fixed per-problem data for residual evaluation: forcing and line-integral
/// values on the grid, the fine rule's nodes, and the normalization `|F(0)|`.
pub struct ResidualEvaluator<'a> {
    problem: &'a ProblemInstance,
    grid: Vec<f64>,
    y_vals: Vec<f64>,
    /// Closed-form line integrals at the grid nodes; `None` when the kernel
    /// has no primitive, in which case the plain (unsubtracted) fine sum is
    /// used for `K`.
    f_vals: Option<Vec<f64>>,
    g_mu: TruncatedKernel,
    tau: Vec<f64>,
    rho: f64,
    f0: f64,
    exact_vals: Option<Vec<f64>>,
    exact_norm: Option<f64>,
}

impl<'a> ResidualEvaluator<'a> {
    pub fn new(problem: &'a ProblemInstance, disc: &Discretization) -> Self {
        let grid = disc.rule.nodes.clone();
        let y_vals: Vec<f64> = grid.iter().map(|&t| problem.forcing_value(t)).collect();
        let f_vals = if problem.kernel.has_primitive() {
            Some(grid.iter().map(|&t| problem.line_integral(t).unwrap()).collect())
        } else {
            None
        };
        let g_mu = TruncatedKernel::new(problem.kernel.clone(), disc.fine.mu);
        let big_p = disc.fine.big_p;
        let rho = (problem.b - problem.a) / big_p as f64;
        let tau: Vec<f64> = (1..=big_p)
            .map(|l| problem.a + (l as f64 - 0.5) * rho)
            .collect();
        let exact_vals: Option<Vec<f64>> = problem
            .exact_solution
            .as_ref()
            .map(|phi| grid.iter().map(|&t| phi(t)).collect());
        let exact_norm = exact_vals.as_ref().map(|v| sup_norm(v));
        let mut this = Self {
            problem,
            grid,
            y_vals,
            f_vals,
            g_mu,
            tau,
            rho,
            f0: 1.0,
            exact_vals,
            exact_norm,
        };
        let f0 = this
            .try_residual_sup(&|_| Ok(0.0))
            .expect("the null candidate cannot fail");
        assert!(
            f0 > 0.0,
            "residual normalization |F(0)| vanished; the problem is degenerate"
        );
        this.f0 = f0;
        this
    }

    /// Sup over the grid of `|F(0)|`, the normalization denominator.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Sup over the grid of `|cand - K(cand) - y|` for a candidate that may
    /// fail to evaluate (interpolated iterates carry a denominator guard).
    pub fn try_residual_sup(
        &self,
        cand: &dyn Fn(f64) -> Result<f64, SolverError>,
    ) -> Result<f64, SolverError> {
        let nl = &self.problem.nonlinearity;
        let mut sup = 0.0f64;
        for (i, &s) in self.grid.iter().enumerate() {
            let cs = cand(s)?;
            let k_val = match &self.f_vals {
                Some(f) => {
                    // subtracted evaluation: the integrand vanishes at t = s
                    let ns = nl.n(s, s, cs);
                    let mut acc = 0.0;
                    for &tau in &self.tau {
                        let w = nl.n(s, tau, cand(tau)?);
                        acc += self.rho * self.g_mu.eval_truncated((s - tau).abs()) * (w - ns);
                    }
                    acc + ns * f[i]
                }
                None => {
                    let mut acc = 0.0;
                    for &tau in &self.tau {
                        let w = nl.n(s, tau, cand(tau)?);
                        acc += self.rho * self.g_mu.eval_truncated((s - tau).abs()) * w;
                    }
                    acc
                }
            };
            sup = sup.max((cs - k_val - self.y_vals[i]).abs());
        }
        Ok(sup)
    }

    /// Relative residual of an infallible candidate.
    pub fn relative_residual(&self, cand: &dyn Fn(f64) -> f64) -> f64 {
        self.try_residual_sup(&|s| Ok(cand(s)))
            .expect("infallible candidate") / self.f0
    }

    /// Grid-valued relative error of grid values against the known solution.
    pub fn relative_error(&self, grid_values: &GridFunction) -> Option<f64> {
        let exact = self.exact_vals.as_ref()?;
        let norm = self.exact_norm?;
        assert!(norm > 0.0, "known solution vanishes on the grid");
        let worst = grid_values
            .values()
            .iter()
            .zip(exact)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Some(worst / norm)
    }

    /// Builds the full record for iterate `k`.
    pub fn record(
        &self,
        k: usize,
        grid_values: &GridFunction,
        cand: &dyn Fn(f64) -> f64,
        prev_log10_r: Option<f64>,
    ) -> IterationRecord {
        self.try_record(k, grid_values, &|s| Ok(cand(s)), prev_log10_r)
            .expect("infallible candidate")
    }

    /// Record builder for candidates whose evaluation can fail.
    pub fn try_record(
        &self,
        k: usize,
        grid_values: &GridFunction,
        cand: &dyn Fn(f64) -> Result<f64, SolverError>,
        prev_log10_r: Option<f64>,
    ) -> Result<IterationRecord, SolverError> {
        let r = self.try_residual_sup(cand)? / self.f0;
        let e = self.relative_error(grid_values);
        Ok(IterationRecord::new(k, r, prev_log10_r, e))
    }
}

/// Relative residual of an arbitrary candidate function; convenience wrapper
/// that builds a one-shot evaluator.
pub fn grid_relative_residual(
    candidate: &dyn Fn(f64) -> f64,
    problem: &ProblemInstance,
    disc: &Discretization,
) -> f64 {
    ResidualEvaluator::new(problem, disc).relative_residual(candidate)
}

/// Sup-norm relative error of a candidate against a known solution over the
/// rule's nodes.
pub fn grid_relative_error(
    candidate: &dyn Fn(f64) -> f64,
    exact: &dyn Fn(f64) -> f64,
    rule: &QuadratureRule,
) -> f64 {
    let norm = rule.nodes.iter().fold(0.0f64, |m, &t| m.max(exact(t).abs()));
    assert!(norm > 0.0, "known solution vanishes on the grid");
    rule.nodes
        .iter()
        .fold(0.0f64, |m, &t| m.max((candidate(t) - exact(t)).abs()))
        / norm
}

fn sig1(x: f64) -> String {
    format!("{x:.0e}")
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

/// Ratios are order one in a healthy run; fall back to scientific notation
/// when one side plateaus and the ratio explodes or vanishes.
fn ratio(v: f64) -> String {
    if v >= 1e3 || (v > 0.0 && v < 5e-2) {
        format!("{v:.0e}")
    } else {
        format!("{v:.1}")
    }
}

/// Fixed-width text table with columns
/// `k | r | log10 r | dlog10 r | e | e/r | r/e`; residuals and errors are
/// shown with a one-significant-digit mantissa, logs to one decimal, and
/// blank cells where a quantity is undefined. Raw precision lives in the CSV.
pub fn build_table(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3} {:>8} {:>9} {:>10} {:>8} {:>8} {:>8}\n",
        "k", "r", "log10 r", "dlog10 r", "e", "e/r", "r/e"
    ));
    for rec in records {
        out.push_str(&format!(
            "{:>3} {:>8} {:>9.1} {:>10} {:>8} {:>8} {:>8}\n",
            rec.k,
            sig1(rec.r),
            rec.log10_r,
            opt(rec.delta_log10_r, |d| format!("{d:.1}")),
            opt(rec.e, sig1),
            opt(rec.e_over_r, ratio),
            opt(rec.r_over_e, ratio),
        ));
    }
    out
}

/// The polyline data behind a residual-per-iteration figure.
pub fn plot_series(records: &[IterationRecord]) -> Vec<(usize, f64)> {
    records.iter().map(|r| (r.k, r.log10_r)).collect()
}

fn csv_float(x: f64) -> String {
    format!("{x:e}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_float).unwrap_or_else(|| "NA".into())
}

/// Writes records as CSV with full-precision floats and `NA` for absent
/// optional columns.
pub fn write_csv(path: &Path, records: &[IterationRecord]) -> std::io::Result<()> {
    let mut out = String::from("k,r,log10_r,delta_log10_r,e,e_over_r,r_over_e\n");
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            rec.k,
            csv_float(rec.r),
            csv_float(rec.log10_r),
            csv_opt(rec.delta_log10_r),
            csv_opt(rec.e),
            csv_opt(rec.e_over_r),
            csv_opt(rec.r_over_e),
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())
}

/// Writes the plot series as a two-column CSV.
pub fn write_series_csv(path: &Path, records: &[IterationRecord]) -> std::io::Result<()> {
    let mut out = String::from("k,log10_r\n");
    for (k, v) in plot_series(records) {
        out.push_str(&format!("{},{}\n", k, csv_float(v)));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())
}
