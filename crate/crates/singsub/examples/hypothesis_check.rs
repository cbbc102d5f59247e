//! Checks the weight-concentration bound that underpins the convergence
//! theory: over any span [c, d) at least one cell wide, a rule's weights
//! must sum to at most gamma * (d - c) with gamma = 2.
//!
//! All shipped uniform rules satisfy the bound comfortably. The last rule is
//! a deliberately broken one: uniform nodes but one giant weight, which the
//! checker catches through its deterministic node-span sweep.

use singsub::{
    left_endpoint_rule, midpoint_rule, simpson_rule, trapezoid_rule, verify_hypothesis_h,
    QuadratureRule,
};

fn main() {
    let concentrated = {
        let nodes: Vec<f64> = (0..10).map(|j| (j as f64 + 0.5) / 10.0).collect();
        let mut weights = vec![0.1; 10];
        weights[5] = 3.0;
        QuadratureRule::new(0.0, 1.0, nodes, weights, 2.0, 0.1)
    };
    let rules = [
        ("midpoint, p = 100", midpoint_rule(0.0, 1.0, 101)),
        ("left endpoint, p = 100", left_endpoint_rule(0.0, 1.0, 101)),
        ("trapezoid, p = 101", trapezoid_rule(0.0, 1.0, 101)),
        ("Simpson, p = 101", simpson_rule(0.0, 1.0, 101)),
        ("concentrated (broken on purpose)", concentrated),
    ];

    println!("{:<34} {:>10} {:>8}", "rule", "max ratio", "verdict");
    for (name, rule) in &rules {
        let report = verify_hypothesis_h(rule, 100_000);
        println!(
            "{:<34} {:>10.3} {:>8}",
            name,
            report.max_ratio,
            if report.passes { "ok" } else { "violated" }
        );
    }
}
