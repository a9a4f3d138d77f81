//! Simulation-regression solve with second-order weights.
//!
//! Runs the first example problem over a handful of seeds and reports the
//! Monte-Carlo scatter next to the lattice reference value.  Path counts
//! here are desk scale; pass `--release` and raise `PATHS` to reproduce
//! the full experiment (2e5 paths at dt = 0.02).
//!
//! ```bash
//! cargo run --release --example probabilistic_regression
//! ```

use twobsde::fd::{fd_solve, LatticeConfig};
use twobsde::models::ModelConfig;
use twobsde::proba::{proba_solve, ProbaConfig};
use twobsde::types::TimeGrid;

const PATHS: usize = 20_000;

fn main() {
    let model = ModelConfig::f1_default();
    let cs = model.control_set().expect("control set");
    let time = TimeGrid::new(model.horizon, 50).expect("grid"); // dt = 0.02

    let reference = fd_solve(
        &model.generator(),
        &model.terminal(),
        &cs,
        &time,
        model.x0,
        &LatticeConfig::for_model(&model),
    )
    .expect("lattice reference");
    println!("lattice reference y0 = {:.6}\n", reference.y0);

    println!("seed paths y0 |y0 - fd| rank cond runtime_s");
    let mut values = Vec::new();
    for seed in 1..=5u64 {
        let cfg = ProbaConfig {
            n_paths: PATHS,
            seed,
            degree: 2,
            threads: 1,
        };
        let res = proba_solve(
            &model.generator(),
            &model.terminal(),
            &cs,
            &time,
            model.x0,
            &cfg,
        )
        .expect("regression solve");
        println!(
            "{seed} {PATHS} {:.6} {:.2e} {} {:.1e} {:.2}",
            res.y0,
            (res.y0 - reference.y0).abs(),
            res.diagnostic("basis_rank_min").unwrap_or(f64::NAN),
            res.diagnostic("gram_condition_max").unwrap_or(f64::NAN),
            res.runtime_s
        );
        values.push(res.y0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64)
        .sqrt();
    println!("\ncross-seed mean = {mean:.6}, std = {std:.2e}");
}
