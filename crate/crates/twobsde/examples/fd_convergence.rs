//! Lattice-solver convergence on both example problems.
//!
//! The space step is coupled to the time step by `Δx = √(2·a_hi·Δt)`
//! (the tightest CFL-admissible choice), so refining Δt refines the whole
//! lattice.  The fair values are close to 0.146 for the game driver and
//! close to 0.129 for the robust-utility driver with b = 0.04.
//!
//! ```bash
//! cargo run --release --example fd_convergence
//! ```

use twobsde::fd::{fd_solve, LatticeConfig};
use twobsde::models::ModelConfig;
use twobsde::types::TimeGrid;

fn main() {
    for (label, model) in [
        ("f1", ModelConfig::f1_default()),
        ("f2 (b = 0.04)", ModelConfig::f2_figure2()),
    ] {
        let cs = model.control_set().expect("control set");
        let lattice = LatticeConfig::for_model(&model);
        println!("model {label}:");
        println!("  dt dx y0 margin runtime_s");
        for n in [10usize, 20, 40, 50, 100] {
            let time = TimeGrid::new(model.horizon, n).expect("grid");
            let res = fd_solve(
                &model.generator(),
                &model.terminal(),
                &cs,
                &time,
                model.x0,
                &lattice,
            )
            .expect("solve");
            println!(
                "  {:.4} {:.4} {:.6} {:.3} {:.2}",
                time.dt(),
                res.diagnostic("dx").unwrap_or(f64::NAN),
                res.y0,
                res.diagnostic("monotonicity_margin").unwrap_or(f64::NAN),
                res.runtime_s
            );
        }
        println!();
    }
}
