//! Reproduce the two comparison figures: `y0` against the time step for
//! the lattice, splitting, and regression solvers on both example
//! problems.  Writes `figure1.csv`/`figure2.csv` plus gnuplot-ready
//! `.dat` files into the working directory.
//!
//! ```bash
//! cargo run --release --example figure_sweep
//! gnuplot -e "set key right; plot for [i=0:2] 'figure1.dat' index i using 1:2 with linespoints title columnheader(1)"
//! ```

use twobsde::harness::{gnuplot_blocks, run_sweep, sweep_csv, SweepSpec};
use twobsde::models::ModelConfig;
use twobsde::types::Scheme;

fn main() {
    let jobs = [
        (
            "figure1",
            ModelConfig::f1_default(),
            vec![
                Scheme::FiniteDifference,
                Scheme::PdeSplitting,
                Scheme::Probabilistic,
            ],
        ),
        (
            "figure2",
            ModelConfig::f2_figure2(),
            // the regression scheme needs a z-independent driver
            vec![Scheme::FiniteDifference, Scheme::PdeSplitting],
        ),
    ];
    for (name, model, schemes) in jobs {
        let mut spec = SweepSpec::new(model, vec![0.1, 0.05, 0.04, 0.025, 0.02, 0.01], schemes);
        spec.seeds = vec![1, 2, 3];
        spec.paths = 50_000;
        let rows = run_sweep(&spec).expect("sweep");
        std::fs::write(format!("{name}.csv"), sweep_csv(&rows)).expect("write csv");
        std::fs::write(format!("{name}.dat"), gnuplot_blocks(&rows)).expect("write dat");
        println!("{name}: {} rows -> {name}.csv, {name}.dat", rows.len());
        for row in &rows {
            println!("  {}", row.to_csv());
        }
    }
}
