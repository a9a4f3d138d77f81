//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use twobsde::fd::{fd_step, ValueGrid};
use twobsde::increments::{ftw_density, ftw_eta, IncrementFamily};
use twobsde::models::{self, ModelConfig};
use twobsde::proba::gamma_weight;
use twobsde::types::{make_control_grid, ControlSet};

proptest! {
    #[test]
    fn control_grid_spans_and_ascends(
        a_lo in 1e-4f64..1.0,
        width in 0.0f64..2.0,
        size in 2usize..40,
    ) {
        let a_hi = a_lo + width;
        let cs = ControlSet::new(a_lo, a_hi, size).unwrap();
        let grid = make_control_grid(&cs);
        prop_assert_eq!(grid.len(), size);
        prop_assert_eq!(grid[0], a_lo);
        prop_assert_eq!(grid[size - 1], a_hi);
        prop_assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trinomial_sampler_stays_on_support(
        a in 0.01f64..0.09,
        u in 1e-9f64..1.0,
    ) {
        let dt = 0.02_f64;
        let dx = (2.0 * 0.09 * dt).sqrt();
        let fam = IncrementFamily::trinomial(0.09, dt, dx).unwrap();
        let h = fam.sample(a, u);
        prop_assert!(h == 0.0 || h == dx || h == -dx);
        // identical inputs give identical outputs
        prop_assert_eq!(h, fam.sample(a, u));
    }

    #[test]
    fn tilted_density_nonnegative_on_domain(
        ratio in 1.0f64..3.0,
        x in -0.5f64..0.5,
    ) {
        let (a0, dt) = (0.04, 0.02);
        let a = ratio * a0;
        let rho = ftw_density(a, a0, dt, x).unwrap();
        prop_assert!(rho >= 0.0, "rho({x}) = {rho}");
        prop_assert!(ftw_eta(a, a0, dt, x) >= -1e-15);
    }

    #[test]
    fn spread_terminal_is_a_clamp(
        m in -3.0f64..3.0,
        k1 in -1.0f64..0.0,
        width in 0.0f64..1.5,
    ) {
        let k2 = k1 + width;
        let xi = models::asian_spread_terminal(k1, k2);
        prop_assert!((xi.eval(0.0, m) - m.clamp(k1, k2)).abs() < 1e-12);
    }

    #[test]
    fn game_driver_is_homogeneous_of_degree_one(
        y in -2.0f64..2.0,
        scale in 0.0f64..3.0,
        a in 0.04f64..0.09,
    ) {
        let f = models::f1_generator(-1.0, 1.0, 0.09);
        let fy = f.eval(0.0, 0.0, 0.0, y, 0.0, a);
        let fsy = f.eval(0.0, 0.0, 0.0, scale * y, 0.0, a);
        prop_assert!((fsy - scale * fy).abs() <= 1e-12 * (1.0 + fy.abs()));
    }

    #[test]
    fn gamma_weight_scales_like_a_chi_square(
        z in -5.0f64..5.0,
        dt in 1e-3f64..0.1,
        a0 in 0.01f64..0.1,
    ) {
        // with dw = z·sqrt(dt) the weight is (z² - 1)/(dt·a0)
        let w = gamma_weight(z * dt.sqrt(), dt, a0);
        let expect = (z * z - 1.0) / (dt * a0);
        prop_assert!((w - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn lattice_step_preserves_random_constants(c in -5.0f64..5.0) {
        let cs = ControlSet::new(0.04, 0.09, 3).unwrap();
        let dt = 0.05;
        let dx = (2.0 * cs.a_hi() * dt).sqrt();
        let mut next = ValueGrid::new(-0.2, dx, 5, -0.01, dx * dt, 7);
        next.fill_with(|_, _| c);
        let gen = ModelConfig::zero_default().generator();
        let out = fd_step(&next, 0.0, &gen, &cs, dt, next.m_min, 1).unwrap();
        for v in out.values() {
            prop_assert_eq!(*v, c);
        }
    }
}
