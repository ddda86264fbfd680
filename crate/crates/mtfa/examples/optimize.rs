//! Forty Nelder–Mead evaluations over the tied pair M1 = M2 of example 1.

use mtfa::optimizer::{optimize, Scenario};

fn main() -> mtfa::Result<()> {
    let mut scenario = Scenario::example1();
    scenario.trials = 1;
    let o = optimize(&scenario, 40, 2, 0)?;
    println!("objective {:.4e} -> {:.4e} in {} evaluations", o.search.initial_objective(), o.search.best_objective, o.search.trace.len());
    println!("M1 = {}", o.matrices.mwd.m1.matrix());
    Ok(())
}
