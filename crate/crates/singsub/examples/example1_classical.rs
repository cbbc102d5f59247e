//! Solves the square-root-kernel equation (built-in example 1) with the
//! discretize-first scheme and prints its convergence table.
//!
//! The run stops on its own when the residual stalls at the discrete
//! system's quadrature plateau; the stop reason is printed after the table.

use std::sync::Arc;

use singsub::{build_table, register_example, solve_classical, GridFunction};

fn main() {
    let (problem, disc) = register_example(1);
    let p = disc.rule.p();
    let x0 = GridFunction::new(Arc::from(disc.rule.nodes.as_slice()), vec![0.0; p]);
    let state = solve_classical(&problem, &disc, &x0).expect("the registered problem converges");

    println!("{} via discretize-first, p = {p}", problem.name);
    println!("{}", build_table(&state.history));
    println!("stopped after step {}: {:?}", state.k, state.stop);
    println!(
        "grid iterate at the first node: {:.12} (exact solution is 7)",
        state.iterate.values()[0]
    );
}
