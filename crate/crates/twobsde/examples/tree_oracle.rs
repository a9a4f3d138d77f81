//! Exact path-tree dynamic programming at small step counts.
//!
//! Solves the first example problem implicitly and explicitly for
//! n = 2..8 and prints the gap between the two iterations, which shrinks
//! linearly in Δt.
//!
//! ```bash
//! cargo run --example tree_oracle
//! ```

use twobsde::increments::IncrementFamily;
use twobsde::math::ls_slope;
use twobsde::models::ModelConfig;
use twobsde::tree::{solve_tree, TreeMode};
use twobsde::types::TimeGrid;

fn main() {
    let model = ModelConfig::f1_default();
    let cs = model.control_set().expect("control set");
    let gen = model.generator();
    let term = model.terminal();

    println!("n dt y0_implicit y0_explicit gap");
    let (mut log_dt, mut log_gap) = (Vec::new(), Vec::new());
    for n in 2..=8 {
        let grid = TimeGrid::new(model.horizon, n).expect("grid");
        let dt = grid.dt();
        let dx = (2.0 * cs.a_hi() * dt).sqrt();
        let fam = IncrementFamily::trinomial(cs.a_hi(), dt, dx).expect("cfl");
        let yi = solve_tree(&gen, &term, &cs, &fam, &grid, model.x0, TreeMode::Implicit)
            .expect("implicit solve")
            .y0;
        let ye = solve_tree(&gen, &term, &cs, &fam, &grid, model.x0, TreeMode::Explicit)
            .expect("explicit solve")
            .y0;
        let gap = (yi - ye).abs();
        println!("{n} {dt:.4} {yi:.8} {ye:.8} {gap:.3e}");
        log_dt.push(dt.ln());
        log_gap.push(gap.ln());
    }
    println!(
        "log-log slope of the gap against dt: {:.3} (theory: 1)",
        ls_slope(&log_dt, &log_gap)
    );
}
