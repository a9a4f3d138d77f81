//! Moment tables for the three increment families.
//!
//! Every family must satisfy mean zero, variance `a·Δt`, and the `2+δ`
//! moment bound for each control on the grid.  The trinomial table is
//! exact by construction; the other two are checked by quadrature.
//!
//! ```bash
//! cargo run --example increment_moments
//! ```

use twobsde::increments::{validate_moments, IncrementFamily};
use twobsde::types::ControlSet;

fn main() {
    let cs = ControlSet::new(0.04, 0.09, 6).expect("control set");
    let dt = 0.02;
    let dx = (2.0 * cs.a_hi() * dt).sqrt();

    let families = [
        IncrementFamily::trinomial(cs.a_hi(), dt, dx).expect("cfl"),
        IncrementFamily::gaussian(cs.a_hi(), dt).expect("gaussian"),
        IncrementFamily::ftw(cs.a_lo(), cs.a_hi(), dt).expect("ftw"),
    ];

    for fam in families {
        let report = validate_moments(&fam, &cs, 1e-10).expect("admissible grid");
        println!("# family: {} (delta = {}, C = {:.4})", fam.kind().name(), fam.delta(), fam.moment_bound_c());
        print!("{}", report.to_csv());
        println!(
            "# all pass: {}\n",
            if report.all_pass() { "yes" } else { "NO" }
        );
    }
}
