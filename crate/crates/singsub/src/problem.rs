//! Complete equation instances (interval, kernel, nonlinearity, forcing term,
//! optional known solution), discretization parameter bundles, and a registry
//! of ready-made example problems selectable by name.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::kernels::{
    exact_line_integral, Nonlinearity, RealFn, SingularKernel, SymmetryClass,
};
use crate::quadrature::{
    fine_singular_integral, left_endpoint_rule, FineQuadratureSpec, QuadratureRule,
};
use crate::SolverError;

/// How the forcing term `y` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingMode {
    /// `y` is given directly as a closed-form function.
    ClosedForm,
    /// `y := phi - K(phi)` is manufactured from the known solution, with
    /// `K(phi)` evaluated by the fine quadrature.
    ManufacturedViaFineQuadrature,
}

/// Forcing term manufactured from a known solution; evaluations are memoized
/// per point (keyed by the bit pattern of `s`) because they dominate runtime
/// and must reuse bit-identical values.
pub struct ManufacturedForcing {
    kernel: SingularKernel,
    nonlinearity: Nonlinearity,
    exact: RealFn,
    fine: FineQuadratureSpec,
    a: f64,
    b: f64,
    cache: Mutex<HashMap<u64, f64>>,
}

impl ManufacturedForcing {
    pub fn new(
        kernel: SingularKernel,
        nonlinearity: Nonlinearity,
        exact: RealFn,
        fine: FineQuadratureSpec,
        a: f64,
        b: f64,
    ) -> Self {
        Self {
            kernel,
            nonlinearity,
            exact,
            fine,
            a,
            b,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let key = s.to_bits();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let n = &self.nonlinearity;
        let exact = &self.exact;
        let integrand = |t: f64| n.n(s, t, exact(t));
        let k_phi = fine_singular_integral(&self.kernel, &integrand, &self.fine, self.a, self.b, s);
        let v = exact(s) - k_phi;
        self.cache.lock().unwrap().insert(key, v);
        v
    }

    pub fn fine_spec(&self) -> &FineQuadratureSpec {
        &self.fine
    }
}

/// The forcing term of an instance, either closed form or manufactured.
#[derive(Clone)]
pub enum Forcing {
    ClosedForm(RealFn),
    Manufactured(Arc<ManufacturedForcing>),
}

/// One complete equation
/// `phi(s) - int_a^b g(|s - t|) N(s, t, phi(t)) dt = y(s)` on `[a, b]`.
#[derive(Clone)]
pub struct ProblemInstance {
    /// Registry key; also used to name output files.
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub kernel: SingularKernel,
    pub nonlinearity: Nonlinearity,
    forcing: Forcing,
    pub exact_solution: Option<RealFn>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        a: f64,
        b: f64,
        kernel: SingularKernel,
        nonlinearity: Nonlinearity,
        forcing: Forcing,
        exact_solution: Option<RealFn>,
    ) -> Self {
        assert!(a < b, "empty interval [{a}, {b}]");
        assert!(
            (kernel.interval_length() - (b - a)).abs() <= 1e-12 * (1.0 + (b - a).abs()),
            "kernel interval length must match b - a"
        );
        Self {
            name: name.into(),
            a,
            b,
            kernel,
            nonlinearity,
            forcing,
            exact_solution,
        }
    }

    /// `y(s)`, dispatching on the forcing representation.
    pub fn forcing_value(&self, s: f64) -> f64 {
        match &self.forcing {
            Forcing::ClosedForm(f) => f(s),
            Forcing::Manufactured(m) => m.value(s),
        }
    }

    pub fn forcing_mode(&self) -> ForcingMode {
        match &self.forcing {
            Forcing::ClosedForm(_) => ForcingMode::ClosedForm,
            Forcing::Manufactured(_) => ForcingMode::ManufacturedViaFineQuadrature,
        }
    }

    /// Closed-form line integral `f(s) = int_a^b g(|s - t|) dt` when the
    /// kernel has a primitive.
    pub fn line_integral(&self, s: f64) -> Option<f64> {
        exact_line_integral(&self.kernel, self.a, self.b, s)
    }

    /// Rebuilds this instance with a forcing term manufactured from its
    /// known solution at the given fine-quadrature resolution. Needed when
    /// the fine parameters are overridden after registration, since the
    /// manufactured values bake the resolution in.
    pub fn with_manufactured_forcing(
        &self,
        fine: FineQuadratureSpec,
    ) -> Result<ProblemInstance, SolverError> {
        let exact = self
            .exact_solution
            .clone()
            .ok_or(SolverError::MissingExactSolution)?;
        let mut out = self.clone();
        out.forcing = Forcing::Manufactured(Arc::new(ManufacturedForcing::new(
            self.kernel.clone(),
            self.nonlinearity.clone(),
            exact,
            fine,
            self.a,
            self.b,
        )));
        Ok(out)
    }
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("forcing_mode", &self.forcing_mode())
            .field("has_exact_solution", &self.exact_solution.is_some())
            .finish()
    }
}

/// Builds the forcing function `y(s) = phi(s) - K(phi)(s)` from the instance's
/// known solution, evaluated through the discretization's fine quadrature and
/// memoized per point.
pub fn manufacture_forcing(
    problem: &ProblemInstance,
    disc: &Discretization,
) -> Result<RealFn, SolverError> {
    let exact = problem
        .exact_solution
        .clone()
        .ok_or(SolverError::MissingExactSolution)?;
    let m = Arc::new(ManufacturedForcing::new(
        problem.kernel.clone(),
        problem.nonlinearity.clone(),
        exact,
        disc.fine,
        problem.a,
        problem.b,
    ));
    Ok(Arc::new(move |s| m.value(s)))
}

/// Where the classical scheme takes the compensation integral
/// `f(t_i) = int_a^b g(|t_i - t|) dt` from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineIntegralSource {
    /// Plain fine-quadrature evaluation. This is the default: it reproduces
    /// the reference residual plateaus, which bake in the quadrature error of
    /// this very integral.
    FineQuadrature,
    /// The kernel primitive's closed form, when available.
    ClosedForm,
}

/// Discretization parameters shared by both solution strategies.
#[derive(Clone, Debug)]
pub struct Discretization {
    /// The scheme's own coarse rule.
    pub rule: QuadratureRule,
    /// Truncation width of the scheme's kernel approximant.
    pub delta_n: f64,
    /// High-resolution rule for integrals needing accuracy beyond the scheme.
    pub fine: FineQuadratureSpec,
    /// Iteration cap.
    pub k_max: usize,
    /// Stop once the relative residual falls to this level.
    pub residual_tol: f64,
    /// Source of the classical scheme's compensation line integral.
    pub line_integral_source: LineIntegralSource,
}

impl Discretization {
    pub fn new(rule: QuadratureRule, delta_n: f64, fine: FineQuadratureSpec) -> Self {
        assert!(delta_n > 0.0, "truncation width must be positive");
        assert!(rule.p() >= 1, "rule needs at least one node");
        Self {
            rule,
            delta_n,
            fine,
            k_max: 12,
            residual_tol: 1e-12,
            line_integral_source: LineIntegralSource::FineQuadrature,
        }
    }

    /// Non-fatal parameter diagnostics: the fine truncation should be much
    /// smaller than the scheme's, and the scheme's truncation is expected
    /// inside a wide band `[1e-6 h, h]` around the mesh width.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.fine.mu >= self.delta_n {
            out.push(format!(
                "fine truncation width mu = {:e} is not below the scheme's delta_n = {:e}; \
                 the fine rule will not out-resolve the scheme",
                self.fine.mu, self.delta_n
            ));
        }
        let h = self.rule.mesh_h;
        let (alpha1, beta1) = (1e-6, 1.0);
        if self.delta_n < alpha1 * h || self.delta_n > beta1 * h {
            out.push(format!(
                "delta_n = {:e} lies outside the expected band [{:e}, {:e}] \
                 around the mesh width h = {:e}",
                self.delta_n,
                alpha1 * h,
                beta1 * h,
                h
            ));
        }
        out
    }
}

fn example1_kernel() -> SingularKernel {
    SingularKernel::new(
        Arc::new(|r: f64| 0.5 / r.sqrt()),
        Some(Arc::new(|r: f64| r.sqrt())),
        SymmetryClass::Decreasing,
        1.0,
    )
}

fn example1_nonlinearity() -> Nonlinearity {
    use std::f64::consts::TAU;
    Nonlinearity::new(
        Arc::new(|s: f64, t: f64, u: f64| (TAU * u).cos() / (1.0 + s + t + u.powi(4))),
        Arc::new(|s: f64, t: f64, u: f64| {
            let d = 1.0 + s + t + u.powi(4);
            (-TAU * (TAU * u).sin() * d - 4.0 * u.powi(3) * (TAU * u).cos()) / (d * d)
        }),
    )
}

fn example1() -> (ProblemInstance, Discretization) {
    let fine = FineQuadratureSpec::new(500, 2e-6);
    let exact: RealFn = Arc::new(|_| 7.0);
    let kernel = example1_kernel();
    let nonlinearity = example1_nonlinearity();
    let forcing = Forcing::Manufactured(Arc::new(ManufacturedForcing::new(
        kernel.clone(),
        nonlinearity.clone(),
        exact.clone(),
        fine,
        0.0,
        1.0,
    )));
    let problem = ProblemInstance::new(
        "example1",
        0.0,
        1.0,
        kernel,
        nonlinearity,
        forcing,
        Some(exact),
    );
    let disc = Discretization::new(left_endpoint_rule(0.0, 1.0, 51), 2e-5, fine);
    (problem, disc)
}

fn example2_kernel() -> SingularKernel {
    use std::f64::consts::{LN_2, PI, TAU};
    SingularKernel::new(
        Arc::new(|r: f64| LN_2 - (1.0 - (TAU * r).cos()).ln()),
        Some(Arc::new(|r: f64| {
            2.0 * LN_2 * r + crate::kernels::clausen2(TAU * r) / PI
        })),
        SymmetryClass::SymmetricDecreasing,
        1.0,
    )
}

fn example2() -> (ProblemInstance, Discretization) {
    use std::f64::consts::LN_2;
    let kernel = example2_kernel();
    let nonlinearity = Nonlinearity::new(
        Arc::new(|_s: f64, _t: f64, u: f64| u / LN_2 + u.powi(3)),
        Arc::new(|_s: f64, _t: f64, u: f64| 1.0 / LN_2 + 3.0 * u * u),
    );
    let problem = ProblemInstance::new(
        "example2",
        0.0,
        1.0,
        kernel,
        nonlinearity,
        Forcing::ClosedForm(Arc::new(|_| 0.5 + 0.25 * LN_2)),
        Some(Arc::new(|_| -0.5)),
    );
    let disc = Discretization::new(left_endpoint_rule(0.0, 1.0, 101), 1e-6, FineQuadratureSpec::new(1000, 1e-7));
    (problem, disc)
}

type ProblemFactory = Arc<dyn Fn() -> (ProblemInstance, Discretization) + Send + Sync>;

fn registry() -> &'static Mutex<HashMap<String, ProblemFactory>> {
    static REGISTRY: OnceLock<Mutex<HashMap<String, ProblemFactory>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map: HashMap<String, ProblemFactory> = HashMap::new();
        map.insert("example1".into(), Arc::new(example1));
        map.insert("example2".into(), Arc::new(example2));
        Mutex::new(map)
    })
}

/// Registers a problem factory under a name so drivers can select it; the
/// built-in names are `example1` and `example2`.
pub fn register_problem(
    name: impl Into<String>,
    factory: impl Fn() -> (ProblemInstance, Discretization) + Send + Sync + 'static,
) {
    registry()
        .lock()
        .unwrap()
        .insert(name.into(), Arc::new(factory));
}

/// Builds the problem registered under `name`, if any.
pub fn build_named(name: &str) -> Option<(ProblemInstance, Discretization)> {
    let factory = registry().lock().unwrap().get(name).cloned();
    factory.map(|f| f())
}

/// Sorted list of registered problem names.
pub fn registered_names() -> Vec<String> {
    let mut names: Vec<String> = registry().lock().unwrap().keys().cloned().collect();
    names.sort();
    names
}

/// The two built-in example problems with their reference parameters.
///
/// Example 1: `g(r) = 1/(2 sqrt r)`, `N(s,t,u) = cos(2 pi u)/(1+s+t+u^4)`,
/// solution `phi = 7`, forcing manufactured; 50-node grid, `delta = 2e-5`,
/// fine rule `P = 500`, `mu = 2e-6`.
///
/// Example 2: `g(r) = log 2 - log(1 - cos 2 pi r)` (singular at both ends),
/// `N(u) = u/log 2 + u^3`, solution `phi = -0.5`, closed-form forcing
/// `y = 0.5 + 0.25 log 2`; 100-node grid, `delta = 1e-6`, fine rule
/// `P = 1000`, `mu = 1e-7`.
pub fn register_example(id: u8) -> (ProblemInstance, Discretization) {
    match id {
        1 => example1(),
        2 => example2(),
        _ => panic!("unknown example id {id}; only 1 and 2 are built in"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::LN_2;

    #[test]
    fn example_registrations_carry_the_reference_parameters() {
        let (p1, d1) = register_example(1);
        assert_eq!(d1.delta_n, 2e-5);
        assert_eq!(d1.rule.p(), 50);
        assert_relative_eq!(d1.rule.nodes[1], 0.02);
        assert_eq!(d1.fine.big_p, 500);
        assert_eq!(d1.fine.mu, 2e-6);
        assert_eq!(
            p1.forcing_mode(),
            ForcingMode::ManufacturedViaFineQuadrature
        );
        assert_eq!(p1.exact_solution.as_ref().unwrap()(0.3), 7.0);

        let (p2, d2) = register_example(2);
        assert_eq!(d2.delta_n, 1e-6);
        assert_eq!(d2.rule.p(), 100);
        assert_eq!(p2.forcing_mode(), ForcingMode::ClosedForm);
        assert_relative_eq!(p2.forcing_value(0.42), 0.5 + 0.25 * LN_2);
        assert_relative_eq!(p2.line_integral(0.3).unwrap(), 2.0 * LN_2, epsilon = 1e-13);
    }

    #[test]
    #[should_panic(expected = "unknown example id")]
    fn unknown_example_ids_are_rejected() {
        register_example(9);
    }

    #[test]
    fn example2_reduces_to_a_scalar_identity_on_constants() {
        // for constant candidates c the equation reads c - 2log2 N(c) = y;
        // the known solution c = -0.5 must satisfy it to near machine level
        let (p2, _) = register_example(2);
        let c = -0.5;
        let lhs = c - 2.0 * LN_2 * p2.nonlinearity.n(0.0, 0.0, c);
        assert_abs_diff_eq!(lhs, p2.forcing_value(0.0), epsilon = 1e-14);
    }

    #[test]
    fn manufactured_forcing_matches_frozen_values() {
        let (p1, _) = register_example(1);
        assert_relative_eq!(
            p1.forcing_value(0.0),
            6.999_589_369_126_936,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            p1.forcing_value(0.5),
            6.999_422_737_444_612,
            max_relative = 1e-13
        );
    }

    #[test]
    fn manufactured_forcing_is_memoized_bit_identically() {
        let (p1, _) = register_example(1);
        let v1 = p1.forcing_value(0.123_456_789);
        let v2 = p1.forcing_value(0.123_456_789);
        assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn null_solutions_with_vanishing_nonlinearity_manufacture_zero_forcing() {
        let kernel = example1_kernel();
        let n = Nonlinearity::new(
            Arc::new(|_, _, u: f64| u * u),
            Arc::new(|_, _, u: f64| 2.0 * u),
        );
        let problem = ProblemInstance::new(
            "null-case",
            0.0,
            1.0,
            kernel,
            n,
            Forcing::ClosedForm(Arc::new(|_| 0.0)),
            Some(Arc::new(|_| 0.0)),
        );
        let (_, disc) = register_example(1);
        let y = manufacture_forcing(&problem, &disc).unwrap();
        for s in [0.0, 0.4, 1.0] {
            assert_eq!(y(s), 0.0);
        }
    }

    #[test]
    fn manufacturing_without_a_known_solution_fails() {
        let (p2, d2) = register_example(2);
        let mut stripped = p2.clone();
        stripped.exact_solution = None;
        let err = manufacture_forcing(&stripped, &d2).err().unwrap();
        assert!(matches!(err, crate::SolverError::MissingExactSolution));
    }

    #[test]
    fn remanufacturing_at_higher_resolution_shifts_the_forcing() {
        let (p1, _) = register_example(1);
        let refined = p1
            .with_manufactured_forcing(FineQuadratureSpec::new(2000, 2e-7))
            .unwrap();
        let coarse = p1.forcing_value(0.25);
        let fine = refined.forcing_value(0.25);
        assert!(coarse != fine);
        assert_abs_diff_eq!(coarse, fine, epsilon = 1e-3);
    }

    #[test]
    fn reference_parameters_raise_no_warnings() {
        for id in [1, 2] {
            let (_, d) = register_example(id);
            assert!(d.warnings().is_empty(), "unexpected: {:?}", d.warnings());
        }
    }

    #[test]
    fn out_of_band_parameters_warn() {
        let (_, mut d) = register_example(2);
        d.fine.mu = d.delta_n; // fine rule no finer than the scheme
        let w = d.warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("mu"));

        let (_, mut d) = register_example(1);
        d.delta_n = 0.5; // far above the mesh width
        let w = d.warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("band"));
    }

    #[test]
    fn custom_problems_register_and_build_by_name() {
        register_problem("custom-smoke", || {
            let (p, d) = register_example(2);
            (
                ProblemInstance::new(
                    "custom-smoke",
                    p.a,
                    p.b,
                    p.kernel.clone(),
                    p.nonlinearity.clone(),
                    Forcing::ClosedForm(Arc::new(|_| 1.0)),
                    None,
                ),
                d,
            )
        });
        let (p, _) = build_named("custom-smoke").unwrap();
        assert_eq!(p.name, "custom-smoke");
        assert_eq!(p.forcing_value(0.2), 1.0);
        assert!(build_named("missing-name").is_none());
        assert!(registered_names().contains(&"example1".to_string()));
    }
}
