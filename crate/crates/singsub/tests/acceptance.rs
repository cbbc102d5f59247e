//! Acceptance gate for the solver library: one test per numbered criterion,
//! each printing a single `criterion N ... PASS/FAIL` line with the measured
//! quantities. Reference trajectories and tolerances are stated inline.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use singsub::{
    classical, exact_line_integral, fine_singular_integral, left_endpoint_rule, linearize_first,
    midpoint_rule, register_example, simpson_rule, solve_classical, solve_linearize_first,
    trapezoid_rule, verify_hypothesis_h, Discretization, FineQuadratureSpec, Forcing,
    GridFunction, IterationRecord, NkIterate, Nonlinearity, ProblemInstance, SingularKernel,
    SymmetryClass,
};

fn check(label: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("{label} {status}: {detail}");
    assert!(ok, "{label} FAIL: {detail}");
}

fn zero_grid(disc: &Discretization) -> GridFunction {
    GridFunction::new(
        Arc::from(disc.rule.nodes.as_slice()),
        vec![0.0; disc.rule.p()],
    )
}

fn null_start() -> singsub::RealFn {
    Arc::new(|_| 0.0)
}

/// Measured `log10 r` at `k = 1..=5`, `None` where the solver stopped early.
fn residual_logs(records: &[IterationRecord]) -> [Option<f64>; 5] {
    let mut out = [None; 5];
    for rec in records {
        if (1..=5).contains(&rec.k) {
            out[rec.k - 1] = Some(rec.log10_r);
        }
    }
    out
}

fn fmt_logs(logs: &[Option<f64>; 5]) -> String {
    logs.iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(v) => format!("k={} {:.2}", i + 1, v),
            None => format!("k={} absent", i + 1),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Every measured value must exist and sit within `tol` of its target.
fn within_band(logs: &[Option<f64>; 5], targets: &[f64; 5], tol: f64) -> bool {
    logs.iter()
        .zip(targets)
        .all(|(v, t)| v.is_some_and(|v| (v - t).abs() <= tol))
}

#[test]
fn example2_linearize_first_matches_reference_trajectories() {
    let (problem, disc) = register_example(2);
    let started = Instant::now();
    let (records, _) = solve_linearize_first(&problem, &disc, null_start()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let r_targets = [-0.2, -1.1, -2.7, -6.0, -12.0];
    let e_targets = [3e-1f64, 5e-2, 1e-3, 1e-6, 6e-13].map(f64::log10);
    let r_logs = residual_logs(&records);
    let mut e_logs = [None; 5];
    for rec in &records {
        if (1..=5).contains(&rec.k) {
            e_logs[rec.k - 1] = rec.e.filter(|&e| e > 0.0).map(f64::log10);
        }
    }

    let ok = within_band(&r_logs, &r_targets, 0.3)
        && within_band(&e_logs, &e_targets, 0.3)
        && elapsed < 5.0;
    check(
        "criterion 1 (example 2, linearize-first, p=100)",
        ok,
        format!(
            "log10 r [{}]; log10 e [{}]; targets r {:?} and e {:?} with tolerance 0.3; {:.2} s",
            fmt_logs(&r_logs),
            fmt_logs(&e_logs),
            r_targets,
            e_targets.map(|t| (t * 1e4).round() / 1e4),
            elapsed
        ),
    );
}

#[test]
fn example2_classical_reaches_quadrature_plateau() {
    let (problem, base) = register_example(2);
    let disc = Discretization::new(
        left_endpoint_rule(problem.a, problem.b, 1001),
        base.delta_n,
        base.fine,
    );
    let started = Instant::now();
    let state = solve_classical(&problem, &disc, &zero_grid(&disc)).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let targets = [-0.2, -1.0, -2.4, -2.7, -2.7];
    let logs = residual_logs(&state.history);
    let ok = within_band(&logs, &targets, 0.3) && elapsed < 60.0;
    check(
        "criterion 2 (example 2, classical, p=1000)",
        ok,
        format!(
            "log10 r [{}]; targets {:?} with tolerance 0.3 including the plateau; {:.2} s",
            fmt_logs(&logs),
            targets,
            elapsed
        ),
    );
}

#[test]
fn example1_linearize_first_residual_trajectory() {
    let (problem, disc) = register_example(1);
    let started = Instant::now();
    let (records, _) = solve_linearize_first(&problem, &disc, null_start()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let targets = [-0.6, -2.9, -7.0, -8.0, -8.0];
    let logs = residual_logs(&records);
    let ok = within_band(&logs, &targets, 0.5) && elapsed < 60.0;
    check(
        "criterion 3 (example 1, linearize-first, p=50, fine P=500 mu=2e-6)",
        ok,
        format!(
            "log10 r [{}]; targets {:?} with tolerance 0.5 and a plateau near -8; {:.2} s",
            fmt_logs(&logs),
            targets,
            elapsed
        ),
    );
}

#[test]
fn example1_classical_residual_trajectory() {
    let (problem, base) = register_example(1);
    let disc = Discretization::new(
        left_endpoint_rule(problem.a, problem.b, 201),
        base.delta_n,
        base.fine,
    );
    let started = Instant::now();
    let state = solve_classical(&problem, &disc, &zero_grid(&disc)).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let targets = [-0.3, -1.6, -3.9, -4.2, -4.2];
    let logs = residual_logs(&state.history);
    let ok = within_band(&logs, &targets, 0.5) && elapsed < 60.0;
    check(
        "criterion 4 (example 1, classical, p=200)",
        ok,
        format!(
            "log10 r [{}]; targets {:?} with tolerance 0.5; {:.2} s",
            fmt_logs(&logs),
            targets,
            elapsed
        ),
    );
}

#[test]
fn example2_grid_iterates_match_scalar_newton_oracle() {
    let (problem, disc) = register_example(2);

    // constant functions are invariant here, so the grid iteration collapses
    // to scalar Newton on psi(c) = -c - 2 log2 c^3 - y; run that recurrence
    // independently as the oracle
    let ln2 = std::f64::consts::LN_2;
    let y = 0.5 + 0.25 * ln2;
    let psi = |c: f64| -c - 2.0 * ln2 * c.powi(3) - y;
    let dpsi = |c: f64| -1.0 - 6.0 * ln2 * c * c;
    let mut c = 0.0;
    let mut oracle = [0.0; 5];
    for slot in &mut oracle {
        c -= psi(c) / dpsi(c);
        *slot = c;
    }
    // guard against transcription slips in the oracle itself
    assert!((oracle[0] - -0.673_286_795_139_986).abs() < 1e-12);
    assert!((oracle[4] - -0.500_000_000_000_269).abs() < 1e-12);

    let mut it = NkIterate::initial(&problem, &disc, null_start());
    let mut worst = 0.0f64;
    for &target in &oracle {
        it = linearize_first::advance(&it).unwrap();
        let dev = it
            .grid_values()
            .values()
            .iter()
            .map(|v| (v - target).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    check(
        "criterion 5 (example 2 iterates vs scalar Newton)",
        worst <= 1e-8,
        format!("max_i |w(i) - c_k| = {worst:.3e} over k=1..5, tolerance 1e-8"),
    );
}

#[test]
fn classical_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for instance in 0..5 {
        let alpha: f64 = rng.random_range(-1.0..1.0);
        let omega: f64 = rng.random_range(0.5..2.0);
        let q: f64 = rng.random_range(-0.5..0.5);
        let c: f64 = rng.random_range(-1.0..1.0);
        let kernel = SingularKernel::new(
            Arc::new(|r: f64| 0.5 / r.sqrt()),
            Some(Arc::new(|r: f64| r.sqrt())),
            SymmetryClass::Decreasing,
            1.0,
        );
        let nl = Nonlinearity::new(
            Arc::new(move |s: f64, t: f64, u: f64| {
                alpha * (omega * u).sin() + q * u * u + c * (s + t).cos() * u
            }),
            Arc::new(move |s: f64, t: f64, u: f64| {
                alpha * omega * (omega * u).cos() + 2.0 * q * u + c * (s + t).cos()
            }),
        );
        let forcing_level: f64 = rng.random_range(-1.0..1.0);
        let problem = ProblemInstance::new(
            format!("jacobian-check-{instance}"),
            0.0,
            1.0,
            kernel,
            nl,
            Forcing::ClosedForm(Arc::new(move |_| forcing_level)),
            None,
        );
        let disc = Discretization::new(
            left_endpoint_rule(0.0, 1.0, 6),
            1e-3,
            FineQuadratureSpec::new(64, 1e-4),
        );
        let nodes: Arc<[f64]> = Arc::from(disc.rule.nodes.as_slice());
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();

        let xg = GridFunction::new(Arc::clone(&nodes), x.clone());
        let (m, _) = classical::assemble_newton_system(&xg, &problem, &disc).unwrap();
        for j in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += eps;
            xm[j] -= eps;
            let fp = classical::assemble_residual(
                &GridFunction::new(Arc::clone(&nodes), xp),
                &problem,
                &disc,
            )
            .unwrap();
            let fm = classical::assemble_residual(
                &GridFunction::new(Arc::clone(&nodes), xm),
                &problem,
                &disc,
            )
            .unwrap();
            for i in 0..5 {
                // the Newton matrix is I - A - B, i.e. the Jacobian of the
                // discrete residual
                let fd = (fp[i] - fm[i]) / (2.0 * eps);
                worst = worst.max((m[(i, j)] - fd).abs());
            }
        }
    }
    check(
        "criterion 6 (Jacobian vs central differences, 5 random p=5 instances)",
        worst <= 1e-5,
        format!("worst componentwise deviation {worst:.3e} at eps = 1e-6, tolerance 1e-5"),
    );
}

#[test]
fn shared_kernel_block_bitwise_identical_across_schemes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    for id in [1u8, 2] {
        let (problem, disc) = register_example(id);
        let p = disc.rule.p();
        let nodes: Arc<[f64]> = Arc::from(disc.rule.nodes.as_slice());
        for _ in 0..100 {
            let values: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let w = GridFunction::new(Arc::clone(&nodes), values);
            let a = classical::coupling_matrix(&w, &problem, &disc).unwrap();
            let c = linearize_first::coupling_matrix(&w, &problem, &disc).unwrap();
            for i in 0..p {
                for j in 0..p {
                    compared += 1;
                    if a[(i, j)].to_bits() != c[(i, j)].to_bits() {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    check(
        "criterion 7 (coupling matrices bitwise equal)",
        mismatches == 0,
        format!(
            "{compared} entries over 100 random vectors per example, {mismatches} bitwise mismatches"
        ),
    );
}

#[test]
fn shipped_rules_satisfy_weight_concentration_bound() {
    let rules = [
        ("midpoint p=100", midpoint_rule(0.0, 1.0, 101)),
        ("left-endpoint p=50", left_endpoint_rule(0.0, 1.0, 51)),
        ("left-endpoint p=100", left_endpoint_rule(0.0, 1.0, 101)),
        ("left-endpoint p=1000", left_endpoint_rule(0.0, 1.0, 1001)),
        ("trapezoid p=101", trapezoid_rule(0.0, 1.0, 101)),
        ("simpson p=101", simpson_rule(0.0, 1.0, 101)),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (name, rule) in &rules {
        let report = verify_hypothesis_h(rule, 100_000);
        ok &= report.passes;
        details.push(format!("{name} ratio {:.3}", report.max_ratio));
    }
    check(
        "criterion 8 (weight concentration at gamma=2, 1e5 intervals per rule)",
        ok,
        details.join("; "),
    );
}

#[test]
fn fine_rule_agrees_with_closed_form_line_integral() {
    let (problem, _) = register_example(1);
    let coarse = FineQuadratureSpec::new(500, 2e-6);
    let refined = FineQuadratureSpec::new(2000, 2e-7);
    let mut worst = (0.0f64, 0.0f64); // (error, s)
    let mut decreases = true;
    for m in 0..20 {
        let s = m as f64 / 20.0;
        let exact = exact_line_integral(&problem.kernel, 0.0, 1.0, s).unwrap();
        let one = |_: f64| 1.0;
        let e_coarse =
            (fine_singular_integral(&problem.kernel, &one, &coarse, 0.0, 1.0, s) - exact).abs();
        let e_refined =
            (fine_singular_integral(&problem.kernel, &one, &refined, 0.0, 1.0, s) - exact).abs();
        if e_refined >= e_coarse {
            decreases = false;
        }
        if e_coarse > worst.0 {
            worst = (e_coarse, s);
        }
    }
    check(
        "criterion 9b (error strictly decreases at P=2000, mu=2e-7)",
        decreases,
        "refinement reduced the error at all 20 sample points".to_string(),
    );
    check(
        "criterion 9a (fine vs closed form at P=500, mu=2e-6)",
        worst.0 <= 5e-3,
        format!(
            "worst |fine - exact| = {:.3e} at s = {} over 20 sample points, tolerance 5e-3",
            worst.0, worst.1
        ),
    );
}

#[test]
fn initial_iterate_normalization_is_exact() {
    let mut ok = true;
    let mut details = Vec::new();
    for id in [1u8, 2] {
        let (problem, mut disc) = register_example(id);
        disc.k_max = 0;
        let state = solve_classical(&problem, &disc, &zero_grid(&disc)).unwrap();
        let (records, _) = solve_linearize_first(&problem, &disc, null_start()).unwrap();
        for (scheme, history) in [("classical", &state.history), ("linearize-first", &records)] {
            let rec = &history[0];
            let exact = rec.r == 1.0 && rec.e == Some(1.0) && history.len() == 1;
            ok &= exact;
            details.push(format!(
                "example {id} {scheme}: r = {}, e = {:?}",
                rec.r, rec.e
            ));
        }
    }
    check(
        "criterion 10 (k=0 self-normalization, r = e = 1 exactly)",
        ok,
        details.join("; "),
    );
}
