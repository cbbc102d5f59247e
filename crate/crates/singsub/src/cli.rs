//! Experiment driver: solves registered problems over sweeps of grid sizes
//! and approaches, prints iteration tables, and writes the CSV artifacts.
//! The thin `singsub-cli` binary is a flag parser over [`RunConfig`] and
//! [`run`]; the same entry points back the runnable examples.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use crate::diagnostics::{build_table, write_csv, write_series_csv, IterationRecord};
use crate::linalg::GridFunction;
use crate::problem::{build_named, Discretization, ForcingMode, ProblemInstance};
use crate::quadrature::{
    left_endpoint_rule, midpoint_rule, verify_hypothesis_h_seeded, FineQuadratureSpec,
    DEFAULT_HYPOTHESIS_SEED,
};
use crate::{solve_classical, solve_linearize_first, SolverError};

/// Which solver(s) a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    Classical,
    LinearizeFirst,
    Both,
}

impl Approach {
    fn kinds(self) -> &'static [ApproachKind] {
        match self {
            Approach::Classical => &[ApproachKind::Classical],
            Approach::LinearizeFirst => &[ApproachKind::LinearizeFirst],
            Approach::Both => &[ApproachKind::Classical, ApproachKind::LinearizeFirst],
        }
    }
}

impl FromStr for Approach {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "classical" => Ok(Approach::Classical),
            "linearize-first" => Ok(Approach::LinearizeFirst),
            "both" => Ok(Approach::Both),
            other => Err(ConfigError::new(format!(
                "unknown approach {other:?} (expected classical, linearize-first, or both)"
            ))),
        }
    }
}

/// One concrete solver choice inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproachKind {
    Classical,
    LinearizeFirst,
}

impl ApproachKind {
    /// Token used in output file names and table headings.
    pub fn token(self) -> &'static str {
        match self {
            ApproachKind::Classical => "classical",
            ApproachKind::LinearizeFirst => "linearize-first",
        }
    }
}

/// Where the `p` coarse nodes sit inside each width-`h` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodePlacement {
    /// Nodes at the left cell edges `a + (j-1) h`, matching the reference
    /// tables.
    #[default]
    LeftEndpoint,
    /// Nodes at the cell centers `a + (j-1/2) h`.
    Midpoint,
}

impl FromStr for NodePlacement {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            // "paper" is accepted as a compatibility alias for the default
            // left-endpoint placement
            "left-endpoint" | "paper" => Ok(NodePlacement::LeftEndpoint),
            "midpoint" => Ok(NodePlacement::Midpoint),
            other => Err(ConfigError::new(format!(
                "unknown node placement {other:?} (expected left-endpoint, paper, or midpoint)"
            ))),
        }
    }
}

/// A declarative description of one experiment sweep.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Registry name of the problem to solve, e.g. `example1`.
    pub problem: String,
    pub approach: Approach,
    /// Coarse grid sizes to sweep; empty means the problem's registered size.
    pub pn: Vec<usize>,
    /// Truncation width override.
    pub delta: Option<f64>,
    /// Fine-rule cell count override.
    pub fine_p: Option<usize>,
    /// Fine-rule truncation width override.
    pub fine_mu: Option<f64>,
    /// Iteration budget override.
    pub k_max: Option<usize>,
    pub nodes: NodePlacement,
    /// Directory for CSV artifacts; `None` prints tables only.
    pub out_dir: Option<PathBuf>,
    /// Seed for the pre-flight weight-concentration check.
    pub seed: u64,
    /// Sampled intervals in the pre-flight weight-concentration check.
    pub hypothesis_trials: usize,
}

impl RunConfig {
    /// A config for one of the built-in example problems, with registry
    /// defaults everywhere else.
    pub fn example(id: u8) -> Self {
        Self::named(format!("example{id}"))
    }

    /// A config for any registered problem name.
    pub fn named(problem: impl Into<String>) -> Self {
        RunConfig {
            problem: problem.into(),
            approach: Approach::Both,
            pn: Vec::new(),
            delta: None,
            fine_p: None,
            fine_mu: None,
            k_max: None,
            nodes: NodePlacement::default(),
            out_dir: None,
            seed: DEFAULT_HYPOTHESIS_SEED,
            hypothesis_trials: 20_000,
        }
    }
}

/// A configuration or usage problem, reported before any solve starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Anything that can end a run unsuccessfully.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or config file; callers should exit with a usage status.
    #[error("{0}")]
    Config(#[from] ConfigError),
    /// The solver failed; the message carries the iteration index.
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Applies one `key = value` setting to a config. Keys mirror the long
/// command-line flags: `example`, `problem`, `approach`, `pn`, `delta`,
/// `fine-p`, `fine-mu`, `kmax`, `nodes`, `out`, `seed`, `trials`.
pub fn apply_key_value(
    config: &mut RunConfig,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "example" => {
            let id: u8 = parse_number(key, value)?;
            config.problem = format!("example{id}");
        }
        "problem" => config.problem = value.to_string(),
        "approach" => config.approach = value.parse()?,
        "pn" => config.pn = parse_pn_list(value)?,
        "delta" => config.delta = Some(parse_positive(key, value)?),
        "fine-p" => config.fine_p = Some(parse_number(key, value)?),
        "fine-mu" => config.fine_mu = Some(parse_positive(key, value)?),
        "kmax" => config.k_max = Some(parse_number(key, value)?),
        "nodes" => config.nodes = value.parse()?,
        "out" => config.out_dir = Some(PathBuf::from(value)),
        "seed" => config.seed = parse_number(key, value)?,
        "trials" => config.hypothesis_trials = parse_number(key, value)?,
        other => {
            return Err(ConfigError::new(format!("unknown config key {other:?}")));
        }
    }
    Ok(())
}

/// Parses a flat `key = value` config file. Blank lines and lines starting
/// with `#` or `;` are ignored; later keys override earlier ones. Settings
/// from command-line flags should be applied after (flags win).
pub fn parse_config_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = RunConfig::named("example1");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(format!(
                "{}:{}: expected `key = value`, got {line:?}",
                path.display(),
                lineno + 1
            ))
            .into());
        };
        apply_key_value(&mut config, key.trim(), value.trim())
            .map_err(|e| ConfigError::new(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
    }
    Ok(config)
}

/// Parses a comma-separated list of grid sizes, e.g. `50,100,200`.
pub fn parse_pn_list(value: &str) -> Result<Vec<usize>, ConfigError> {
    let mut out = Vec::new();
    for part in value.split(',') {
        let p: usize = parse_number("pn", part.trim())?;
        if p == 0 {
            return Err(ConfigError::new("grid sizes must be at least 1"));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(ConfigError::new("empty grid-size list"));
    }
    Ok(out)
}

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::new(format!("bad value {value:?} for {key}: {e}")))
}

fn parse_positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_number(key, value)?;
    if !(x > 0.0) {
        return Err(ConfigError::new(format!("{key} must be positive, got {value}")));
    }
    Ok(x)
}

/// Results of one (problem, approach, p) cell of a sweep.
#[derive(Debug)]
pub struct RunTable {
    pub problem: String,
    pub approach: ApproachKind,
    pub p: usize,
    pub records: Vec<IterationRecord>,
    pub csv_path: Option<PathBuf>,
    pub series_path: Option<PathBuf>,
    pub elapsed_seconds: f64,
}

/// Everything a completed run produced, for callers that inspect results
/// programmatically instead of reading the printed tables.
#[derive(Debug)]
pub struct RunOutcome {
    pub tables: Vec<RunTable>,
}

fn build_cell_discretization(
    base: &Discretization,
    config: &RunConfig,
    a: f64,
    b: f64,
    p: usize,
) -> Discretization {
    let rule = match config.nodes {
        NodePlacement::LeftEndpoint => left_endpoint_rule(a, b, p + 1),
        NodePlacement::Midpoint => midpoint_rule(a, b, p + 1),
    };
    let fine = FineQuadratureSpec::new(
        config.fine_p.unwrap_or(base.fine.big_p),
        config.fine_mu.unwrap_or(base.fine.mu),
    );
    let mut disc = Discretization::new(rule, config.delta.unwrap_or(base.delta_n), fine);
    disc.k_max = config.k_max.unwrap_or(base.k_max);
    disc.residual_tol = base.residual_tol;
    disc.line_integral_source = base.line_integral_source;
    disc
}

fn solve_cell(
    problem: &ProblemInstance,
    disc: &Discretization,
    kind: ApproachKind,
) -> Result<Vec<IterationRecord>, SolverError> {
    match kind {
        ApproachKind::Classical => {
            let nodes: Arc<[f64]> = Arc::from(disc.rule.nodes.as_slice());
            let x0 = GridFunction::new(nodes, vec![0.0; disc.rule.p()]);
            solve_classical(problem, disc, &x0).map(|state| state.history)
        }
        ApproachKind::LinearizeFirst => {
            solve_linearize_first(problem, disc, Arc::new(|_| 0.0))
                .map(|(records, _)| records)
        }
    }
}

/// Runs the configured sweep: for every grid size and approach, solve, print
/// the iteration table, and (with an output directory) write
/// `<problem>_<approach>_p<p>.csv` plus a `.._series.csv` of
/// `(k, log10 r)` plot data. Returns all records for programmatic use.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let (base_problem, base_disc) = build_named(&config.problem).ok_or_else(|| {
        ConfigError::new(format!(
            "unknown problem {:?} (registered: {})",
            config.problem,
            crate::problem::registered_names().join(", ")
        ))
    })?;
    if let Some(d) = config.delta {
        debug_assert!(d > 0.0);
    }

    let pn = if config.pn.is_empty() {
        vec![base_disc.rule.p()]
    } else {
        config.pn.clone()
    };

    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let mut tables = Vec::new();
    for &p in &pn {
        let disc = build_cell_discretization(&base_disc, config, base_problem.a, base_problem.b, p);

        // fine-rule overrides change manufactured forcing terms, so rebuild
        let fine_changed = disc.fine != base_disc.fine;
        let problem = if fine_changed
            && base_problem.forcing_mode() == ForcingMode::ManufacturedViaFineQuadrature
        {
            base_problem.with_manufactured_forcing(disc.fine)?
        } else {
            base_problem.clone()
        };

        for warning in disc.warnings() {
            eprintln!("warning: {warning}");
        }
        let report = verify_hypothesis_h_seeded(&disc.rule, config.hypothesis_trials, config.seed);
        println!(
            "weight-concentration check p={p}: max ratio {:.3} ({})",
            report.max_ratio,
            if report.passes { "pass" } else { "FAIL" }
        );
        if !report.passes {
            eprintln!(
                "warning: rule violates the weight-concentration bound; \
                 convergence guarantees do not apply"
            );
        }

        for &kind in config.approach.kinds() {
            let started = Instant::now();
            let records = solve_cell(&problem, &disc, kind)?;
            let elapsed_seconds = started.elapsed().as_secs_f64();

            println!();
            println!("{} / {} / p = {p}", problem.name, kind.token());
            println!("{}", build_table(&records));
            println!("elapsed {elapsed_seconds:.3} s");

            let (csv_path, series_path) = if let Some(dir) = &config.out_dir {
                let stem = format!("{}_{}_p{p}", problem.name, kind.token());
                let csv = dir.join(format!("{stem}.csv"));
                let series = dir.join(format!("{stem}_series.csv"));
                write_csv(&csv, &records).map_err(|source| CliError::Io {
                    path: csv.clone(),
                    source,
                })?;
                write_series_csv(&series, &records).map_err(|source| CliError::Io {
                    path: series.clone(),
                    source,
                })?;
                (Some(csv), Some(series))
            } else {
                (None, None)
            };

            tables.push(RunTable {
                problem: problem.name.clone(),
                approach: kind,
                p,
                records,
                csv_path,
                series_path,
                elapsed_seconds,
            });
        }
    }
    Ok(RunOutcome { tables })
}
