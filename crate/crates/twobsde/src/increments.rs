//! One-step martingale increment families `H(a, u)` and validators for
//! their moment contract.
//!
//! Every admissible family must satisfy, for each control `a` in the
//! control set and some `δ > 0`, `C`:
//!
//! ```text
//! E[H(a, U)] = 0,     Var(H(a, U)) = a·Δt,     E|H(a, U)|^{2+δ} ≤ C·Δt^{1+δ/2}.
//! ```
//!
//! Three families are provided:
//!
//! * `Gaussian` — `H(a, u) = √(a·Δt)·Φ⁻¹(u)`; the moment contract holds
//!   exactly.
//! * `Trinomial` — support `{-Δx, 0, Δx}` with `P[H = ±Δx] = p_a/2` where
//!   `p_a := a·Δt/Δx²` is the CFL parameter (`p_a ≤ 1/2` required).  The
//!   halved branch mass is what makes `Var = p_a·Δx² = a·Δt` hold exactly
//!   and makes the induced lattice recursion carry the `½·a·Δt·D²`
//!   diffusion coefficient of the finite-difference scheme.
//! * `FtwDensity` — a Gaussian base law `N(0, a0·Δt)` tilted by the
//!   quadratic weight `η(a, x)`; the base diffusion plus the second-order
//!   correction used by the probabilistic scheme.
//!
//! All samplers are pure functions of `(a, u)`; callers own their random
//! streams.

use crate::error::{Result, SolverError};
use crate::math::{normal_pdf, normal_quantile, simpson_symmetric};
use crate::types::ControlSet;

const TWO_OVER_SQRT_2PI: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// CFL slack: `p_a = 1/2` is admissible, so tolerate roundoff from the
/// `Δx = √(2·a_hi·Δt)` coupling.
const CFL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncrementKind {
    Gaussian,
    Trinomial { dx: f64 },
    FtwDensity { a0: f64 },
}

impl IncrementKind {
    pub fn name(&self) -> &'static str {
        match self {
            IncrementKind::Gaussian => "gaussian",
            IncrementKind::Trinomial { .. } => "trinomial",
            IncrementKind::FtwDensity { .. } => "ftw-density",
        }
    }
}

/// Attainable values of the increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Bounded { max_abs: f64 },
    Unbounded,
}

/// An increment family with its declared `(δ, C)` moment-bound certificate.
#[derive(Debug, Clone, Copy)]
pub struct IncrementFamily {
    kind: IncrementKind,
    dt: f64,
    a_max: f64,
    delta: f64,
    /// The certified bound `C·Δt^{1+δ/2}` itself, i.e. `E|H(a_max)|^{2+δ}`
    /// in closed form; every smaller control sits below it.
    moment_bound: f64,
}

impl IncrementFamily {
    /// Gaussian increments `√(a·Δt)·Φ⁻¹(u)` for controls up to `a_max`.
    pub fn gaussian(a_max: f64, dt: f64) -> Result<Self> {
        check_positive("a", a_max)?;
        check_positive("dt", dt)?;
        // E|H(a)|^3 = (a·dt)^{3/2} · 2·sqrt(2/pi), largest at a_max
        let moment_bound = 2.0 * TWO_OVER_SQRT_2PI * (a_max * dt).powf(1.5);
        Ok(Self {
            kind: IncrementKind::Gaussian,
            dt,
            a_max,
            delta: 1.0,
            moment_bound,
        })
    }

    /// Trinomial increments on `{-Δx, 0, Δx}`.  Requires the CFL condition
    /// `p_a = a·Δt/Δx² ≤ 1/2` at the largest control.
    pub fn trinomial(a_max: f64, dt: f64, dx: f64) -> Result<Self> {
        check_positive("a", a_max)?;
        check_positive("dt", dt)?;
        check_positive("dx", dx)?;
        let p_a = a_max * dt / (dx * dx);
        if p_a > 0.5 + CFL_SLACK {
            return Err(SolverError::CflViolation {
                a: a_max,
                dt,
                dx,
                p_a,
            });
        }
        // E|H(a)|^3 = p_a·Δx³ = a·Δt·Δx; with Δx = c·√Δt this is the
        // required C·Δt^{3/2} with C = a_max·c
        let moment_bound = a_max * dt * dx;
        Ok(Self {
            kind: IncrementKind::Trinomial { dx },
            dt,
            a_max,
            delta: 1.0,
            moment_bound,
        })
    }

    /// Gaussian base law `N(0, a0·Δt)` tilted by the weight `η(a, ·)`.
    /// Valid for controls in `[a0, 3·a0]` (the weight stays nonnegative).
    pub fn ftw(a0: f64, a_max: f64, dt: f64) -> Result<Self> {
        check_positive("a0", a0)?;
        check_positive("dt", dt)?;
        if a_max < a0 || a_max > 3.0 * a0 {
            return Err(SolverError::DomainViolation { a: a_max, a0 });
        }
        // E|H(a)|^3 = 2·sqrt(2/pi)·(a0·dt)^{3/2}·(1 + 3(a-a0)/(2a0)),
        // increasing in a
        let moment_bound = 2.0
            * TWO_OVER_SQRT_2PI
            * (a0 * dt).powf(1.5)
            * (1.0 + 1.5 * (a_max - a0) / a0);
        Ok(Self {
            kind: IncrementKind::FtwDensity { a0 },
            dt,
            a_max,
            delta: 1.0,
            moment_bound,
        })
    }

    pub fn kind(&self) -> IncrementKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// The declared `δ` of the `2+δ` moment bound.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The certified bound `C·Δt^{1+δ/2}` on `E|H(a,·)|^{2+δ}`.
    pub fn moment_bound(&self) -> f64 {
        self.moment_bound
    }

    /// The declared constant `C` of the `2+δ` moment bound.
    pub fn moment_bound_c(&self) -> f64 {
        self.moment_bound / self.dt.powf(1.0 + 0.5 * self.delta)
    }

    pub fn support(&self) -> Support {
        match self.kind {
            IncrementKind::Trinomial { dx } => Support::Bounded { max_abs: dx },
            _ => Support::Unbounded,
        }
    }

    /// CFL parameter `p_a = a·Δt/Δx²` (trinomial only).
    pub fn cfl_parameter(&self, a: f64) -> Option<f64> {
        match self.kind {
            IncrementKind::Trinomial { dx } => Some(a * self.dt / (dx * dx)),
            _ => None,
        }
    }

    /// Probability of each of the `±Δx` branches, `p_a/2` (trinomial only).
    pub fn branch_prob(&self, a: f64) -> Option<f64> {
        self.cfl_parameter(a).map(|p| 0.5 * p)
    }

    /// Draw `H(a, u)` from a uniform variate `u ∈ (0, 1)`.
    ///
    /// Deterministic in `(a, u)`.  Panics if `(a, u)` violates the family's
    /// domain; the validators catch such configurations up front.
    pub fn sample(&self, a: f64, u: f64) -> f64 {
        assert!(a > 0.0, "control must be positive, got {a}");
        assert!(u > 0.0 && u < 1.0, "uniform variate must be in (0,1), got {u}");
        match self.kind {
            IncrementKind::Gaussian => (a * self.dt).sqrt() * normal_quantile(u),
            IncrementKind::Trinomial { dx } => {
                let q = 0.5 * a * self.dt / (dx * dx);
                assert!(2.0 * q <= 0.5 + CFL_SLACK, "CFL violated at a = {a}");
                if u < q {
                    -dx
                } else if u < 2.0 * q {
                    dx
                } else {
                    0.0
                }
            }
            IncrementKind::FtwDensity { a0 } => {
                assert!(
                    a >= a0 && a <= 3.0 * a0 + 1e-15,
                    "control a = {a} outside the density domain [{a0}, {}]",
                    3.0 * a0
                );
                ftw_quantile(a, a0, self.dt, u)
            }
        }
    }

    /// Exact mean (trinomial) or quadrature mean (continuous families).
    pub fn mean(&self, a: f64) -> f64 {
        match self.kind {
            IncrementKind::Trinomial { .. } => 0.0,
            _ => self.quad_moment(a, 1),
        }
    }

    /// Exact variance (trinomial closed form) or quadrature second moment.
    pub fn variance(&self, a: f64) -> f64 {
        match self.kind {
            // 2·(p_a/2)·Δx² = a·Δt, algebraically.
            IncrementKind::Trinomial { .. } => a * self.dt,
            _ => self.quad_moment(a, 2),
        }
    }

    /// `E|H(a,·)|^{2+δ}` with the family's `δ`.
    pub fn abs_moment(&self, a: f64) -> f64 {
        match self.kind {
            // 2·(p_a/2)·Δx³ = p_a·Δx³ = a·Δt·Δx.
            IncrementKind::Trinomial { dx } => a * self.dt * dx,
            _ => self.quad_moment(a, 3),
        }
    }

    fn quad_moment(&self, a: f64, order: u32) -> f64 {
        let (density, sigma): (Box<dyn Fn(f64) -> f64>, f64) = match self.kind {
            IncrementKind::Gaussian => {
                let s = (a * self.dt).sqrt();
                (Box::new(move |x: f64| normal_pdf(x / s) / s), s)
            }
            IncrementKind::FtwDensity { a0 } => {
                let dt = self.dt;
                (
                    Box::new(move |x: f64| ftw_density_unchecked(a, a0, dt, x)),
                    (3.0 * a0 * self.dt).sqrt(),
                )
            }
            IncrementKind::Trinomial { .. } => unreachable!("trinomial moments are closed form"),
        };
        let half = 14.0 * sigma;
        match order {
            1 => simpson_symmetric(|x| x * density(x), half, 16384),
            2 => simpson_symmetric(|x| x * x * density(x), half, 16384),
            3 => simpson_symmetric(|x| x.abs().powi(3) * density(x), half, 16384),
            _ => unreachable!(),
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidParameter { name, value })
    }
}

/// Quadratic tilt `η(a, x) = 1 - (a - a0)/(2·a0) + (a - a0)·x²/(2·a0²·Δt)`.
///
/// Nonnegative on all of ℝ iff `a ≤ 3·a0`; the binding point is `x = 0`.
pub fn ftw_eta(a: f64, a0: f64, dt: f64, x: f64) -> f64 {
    let r = a - a0;
    1.0 - 0.5 * r / a0 + 0.5 * r * x * x / (a0 * a0 * dt)
}

/// Density of the tilted increment law: `N(0, a0·Δt)` density times
/// `η(a, x)`.  Integrates to one and has second moment `a·Δt`.
pub fn ftw_density(a: f64, a0: f64, dt: f64, x: f64) -> Result<f64> {
    check_positive("a0", a0)?;
    check_positive("dt", dt)?;
    if a < a0 || a > 3.0 * a0 {
        return Err(SolverError::DomainViolation { a, a0 });
    }
    Ok(ftw_density_unchecked(a, a0, dt, x))
}

fn ftw_density_unchecked(a: f64, a0: f64, dt: f64, x: f64) -> f64 {
    let sigma = (a0 * dt).sqrt();
    normal_pdf(x / sigma) / sigma * ftw_eta(a, a0, dt, x)
}

/// Closed-form CDF of the tilted law:
/// `F(x) = Φ(x/σ) - β·σ²·(x/σ)·φ(x/σ)` with `β = (a - a0)/(2·a0²·Δt)`.
fn ftw_cdf(a: f64, a0: f64, dt: f64, x: f64) -> f64 {
    let sigma = (a0 * dt).sqrt();
    let beta_s2 = 0.5 * (a - a0) / a0;
    let u = x / sigma;
    crate::math::normal_cdf(u) - beta_s2 * u * normal_pdf(u)
}

/// Inverse CDF of the tilted law by safeguarded Newton iteration.
fn ftw_quantile(a: f64, a0: f64, dt: f64, p: f64) -> f64 {
    let sigma = (a0 * dt).sqrt();
    let mut lo = sigma * (normal_quantile(p) - 8.0);
    let mut hi = sigma * (normal_quantile(p) + 8.0);
    while ftw_cdf(a, a0, dt, lo) > p {
        lo -= 8.0 * sigma;
    }
    while ftw_cdf(a, a0, dt, hi) < p {
        hi += 8.0 * sigma;
    }
    let mut x = sigma * normal_quantile(p);
    x = x.clamp(lo, hi);
    for _ in 0..200 {
        let f = ftw_cdf(a, a0, dt, x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if f.abs() <= 1e-15 {
            break;
        }
        let d = ftw_density_unchecked(a, a0, dt, x);
        let step = if d > 1e-300 { f / d } else { 0.0 };
        let mut next = x - step;
        if !(next > lo && next < hi) || step == 0.0 {
            next = 0.5 * (lo + hi); // bisect when Newton leaves the bracket
        }
        if (next - x).abs() <= 1e-16 * sigma.max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// One row of the moment table for a single control.
#[derive(Debug, Clone, Copy)]
pub struct MomentRow {
    pub a: f64,
    pub mean: f64,
    pub variance: f64,
    pub var_target: f64,
    pub abs_moment: f64,
    pub bound: f64,
    pub pass: bool,
}

impl MomentRow {
    /// Largest moment residual: how far this control is from the contract.
    pub fn residual(&self) -> f64 {
        let var_res = (self.variance - self.var_target).abs();
        let bound_res = (self.abs_moment - self.bound).max(0.0);
        self.mean.abs().max(var_res).max(bound_res)
    }
}

/// Moment table over the control grid, with the tolerance it was checked at.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub family: &'static str,
    pub rows: Vec<MomentRow>,
    pub tol: f64,
}

impl MomentReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Worst failing row, if any.
    pub fn first_failure(&self) -> Option<&MomentRow> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,mean,var,var_target,moment_2plus_delta,bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.a, r.mean, r.variance, r.var_target, r.abs_moment, r.bound, r.pass
            ));
        }
        out
    }
}

/// Check the moment contract for every control on the grid.
///
/// Analytic moments are used for the trinomial family (residuals are
/// exactly zero by construction); quadrature for the continuous families.
/// `δ`, `C` and `Δt` are the family's declared values.  A trinomial grid
/// control violating the CFL condition is a hard error, not a failing row.
pub fn validate_moments(fam: &IncrementFamily, cs: &ControlSet, tol: f64) -> Result<MomentReport> {
    moment_rows(fam, cs, tol, 1.0)
}

/// `var_target_scale` perturbs the variance target; only the fault-injection
/// tests use anything other than 1.
fn moment_rows(
    fam: &IncrementFamily,
    cs: &ControlSet,
    tol: f64,
    var_target_scale: f64,
) -> Result<MomentReport> {
    let mut rows = Vec::with_capacity(cs.grid_size());
    for a in cs.grid() {
        if let Some(p_a) = fam.cfl_parameter(a) {
            if p_a > 0.5 + CFL_SLACK {
                let IncrementKind::Trinomial { dx } = fam.kind() else {
                    unreachable!()
                };
                return Err(SolverError::CflViolation {
                    a,
                    dt: fam.dt(),
                    dx,
                    p_a,
                });
            }
        }
        if let IncrementKind::FtwDensity { a0 } = fam.kind() {
            if a < a0 || a > 3.0 * a0 {
                return Err(SolverError::DomainViolation { a, a0 });
            }
        }
        let mean = fam.mean(a);
        let variance = fam.variance(a);
        let var_target = a * fam.dt() * var_target_scale;
        let abs_moment = fam.abs_moment(a);
        let bound = fam.moment_bound();
        let pass = mean.abs() <= tol
            && (variance - var_target).abs() <= tol
            && abs_moment <= bound + tol;
        rows.push(MomentRow {
            a,
            mean,
            variance,
            var_target,
            abs_moment,
            bound,
            pass,
        });
    }
    Ok(MomentReport {
        family: fam.kind().name(),
        rows,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const A_SET: (f64, f64) = (0.04, 0.09);
    const DT: f64 = 0.02;

    fn control_set() -> ControlSet {
        ControlSet::new(A_SET.0, A_SET.1, 6).unwrap()
    }

    #[test]
    fn gaussian_median_is_zero() {
        let fam = IncrementFamily::gaussian(1.0, 1.0).unwrap();
        assert_eq!(fam.sample(1.0, 0.5), 0.0);
    }

    #[test]
    fn gaussian_variance_matches_contract() {
        let fam = IncrementFamily::gaussian(0.04, DT).unwrap();
        assert!((fam.variance(0.04) - 8.0e-4).abs() < 1e-12);
    }

    #[test]
    fn gaussian_third_absolute_moment() {
        // E|N(0,1)|^3 = 2·sqrt(2/pi)
        let fam = IncrementFamily::gaussian(1.0, 1.0).unwrap();
        let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((fam.abs_moment(1.0) - exact).abs() < 1e-10);
        assert!((exact - 1.5957691216057308).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(IncrementFamily::gaussian(-1.0, 0.02).is_err());
        assert!(IncrementFamily::gaussian(0.04, 0.0).is_err());
    }

    #[test]
    fn trinomial_cfl_parameter_example() {
        let fam = IncrementFamily::trinomial(0.04, DT, 0.06).unwrap();
        let p = fam.cfl_parameter(0.04).unwrap();
        assert!((p - 2.0 / 9.0).abs() < 1e-15, "p_a = {p}");
        // branch mass is half the CFL parameter
        assert!((fam.branch_prob(0.04).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn trinomial_variance_is_exact() {
        let fam = IncrementFamily::trinomial(0.04, DT, 0.06).unwrap();
        assert_eq!(fam.variance(0.04), 0.04 * DT);
        assert_eq!(fam.mean(0.04), 0.0);
    }

    #[test]
    fn trinomial_cfl_violation() {
        let err = IncrementFamily::trinomial(0.09, DT, 0.04).unwrap_err();
        match err {
            SolverError::CflViolation { p_a, .. } => {
                assert!((p_a - 1.125).abs() < 1e-12, "p_a = {p_a}")
            }
            other => panic!("expected CflViolation, got {other:?}"),
        }
    }

    #[test]
    fn trinomial_tight_coupling_is_admissible() {
        // dx = sqrt(2·a·dt) puts p_a exactly at 1/2
        let dx = (2.0 * A_SET.1 * DT).sqrt();
        let fam = IncrementFamily::trinomial(A_SET.1, DT, dx).unwrap();
        let p = fam.cfl_parameter(A_SET.1).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(matches!(fam.support(), Support::Bounded { .. }));
    }

    #[test]
    fn ftw_density_at_base_control_is_plain_gaussian() {
        // a = a0 means no tilt: η ≡ 1.
        let (a0, dt) = (0.04, DT);
        for &x in &[0.0, 0.01, -0.03] {
            assert!((ftw_eta(a0, a0, dt, x) - 1.0).abs() < 1e-15);
            let sigma = (a0 * dt).sqrt();
            let gauss = normal_pdf(x / sigma) / sigma;
            assert!((ftw_density(a0, a0, dt, x).unwrap() - gauss).abs() < 1e-12);
        }
    }

    #[test]
    fn ftw_density_integrates_to_one() {
        let (a, a0, dt) = (0.06, 0.04, DT);
        let sigma = (3.0 * a0 * dt).sqrt();
        let integral = simpson_symmetric(
            |x| ftw_density(a, a0, dt, x).unwrap(),
            14.0 * sigma,
            4096,
        );
        assert!((integral - 1.0).abs() < 1e-10, "integral = {integral}");
    }

    #[test]
    fn ftw_second_moment_is_a_dt() {
        let (a, a0, dt) = (0.06, 0.04, DT);
        let sigma = (3.0 * a0 * dt).sqrt();
        let second = simpson_symmetric(
            |x| x * x * ftw_density(a, a0, dt, x).unwrap(),
            14.0 * sigma,
            4096,
        );
        assert!((second - a * dt).abs() < 1e-10, "second = {second}");
    }

    #[test]
    fn ftw_weight_nonnegative_iff_a_le_3a0() {
        let (a0, dt) = (0.04, DT);
        // binding point is x = 0
        assert!(ftw_eta(3.0 * a0, a0, dt, 0.0).abs() < 1e-15);
        assert!(ftw_eta(2.9 * a0, a0, dt, 0.0) > 0.0);
        assert!(ftw_eta(3.1 * a0, a0, dt, 0.0) < 0.0);
        assert!(ftw_density(0.13, a0, dt, 0.0).is_err());
        assert!(matches!(
            ftw_density(0.03, a0, dt, 0.0).unwrap_err(),
            SolverError::DomainViolation { .. }
        ));
    }

    #[test]
    fn ftw_quantile_inverts_cdf() {
        let (a, a0, dt) = (0.09, 0.04, DT);
        for &p in &[1e-4, 0.1, 0.5, 0.73, 0.9999] {
            let x = ftw_quantile(a, a0, dt, p);
            assert!((ftw_cdf(a, a0, dt, x) - p).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn validate_moments_trinomial_zero_residual() {
        let dx = (2.0 * A_SET.1 * DT).sqrt();
        let fam = IncrementFamily::trinomial(A_SET.1, DT, dx).unwrap();
        let report = validate_moments(&fam, &control_set(), 0.0).unwrap();
        assert!(report.all_pass(), "{report:?}");
        for row in &report.rows {
            assert_eq!(row.residual(), 0.0);
        }
    }

    #[test]
    fn validate_moments_gaussian_and_ftw_under_quadrature() {
        let cs = control_set();
        let g = IncrementFamily::gaussian(A_SET.1, DT).unwrap();
        assert!(validate_moments(&g, &cs, 1e-10).unwrap().all_pass());
        let f = IncrementFamily::ftw(A_SET.0, A_SET.1, DT).unwrap();
        assert!(validate_moments(&f, &cs, 1e-10).unwrap().all_pass());
    }

    #[test]
    fn validate_moments_propagates_cfl_violation() {
        // family admissible for its own a_max, but the control set reaches higher
        let fam = IncrementFamily::trinomial(0.04, DT, 0.04).unwrap();
        let cs = ControlSet::new(0.04, 0.09, 2).unwrap();
        assert!(matches!(
            validate_moments(&fam, &cs, 1e-10).unwrap_err(),
            SolverError::CflViolation { .. }
        ));
    }

    #[test]
    fn injected_variance_bug_fails_with_named_residual() {
        let dx = (2.0 * A_SET.1 * DT).sqrt();
        let fam = IncrementFamily::trinomial(A_SET.1, DT, dx).unwrap();
        let report = moment_rows(&fam, &control_set(), 1e-10, 1.01).unwrap();
        assert!(!report.all_pass());
        let bad = report.first_failure().unwrap();
        assert!((bad.residual() - 0.01 * bad.a * DT).abs() < 1e-15);
    }

    #[test]
    fn sampler_determinism_and_mc_sanity() {
        let dx = (2.0 * A_SET.1 * DT).sqrt();
        let families = [
            IncrementFamily::gaussian(A_SET.1, DT).unwrap(),
            IncrementFamily::trinomial(A_SET.1, DT, dx).unwrap(),
            IncrementFamily::ftw(A_SET.0, A_SET.1, DT).unwrap(),
        ];
        let n = 1_000_000usize;
        for fam in &families {
            for a in control_set().grid() {
                if matches!(fam.kind(), IncrementKind::FtwDensity { .. }) && a > 3.0 * A_SET.0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(2024);
                let mut sum = 0.0;
                let mut sum2 = 0.0;
                for _ in 0..n {
                    let u: f64 = crate::math::u64_to_open01(rng.gen::<u64>());
                    let h = fam.sample(a, u);
                    assert_eq!(h, fam.sample(a, u), "sampler must be deterministic");
                    sum += h;
                    sum2 += h * h;
                }
                let mean = sum / n as f64;
                let var = sum2 / n as f64 - mean * mean;
                let target = a * DT;
                assert!(
                    mean.abs() <= 4.0 * (target / n as f64).sqrt(),
                    "{} a={a}: mean {mean}",
                    fam.kind().name()
                );
                assert!(
                    (var - target).abs() <= 0.01 * target,
                    "{} a={a}: var {var} target {target}",
                    fam.kind().name()
                );
            }
        }
    }

    #[test]
    fn moment_csv_has_expected_header() {
        let fam = IncrementFamily::gaussian(A_SET.1, DT).unwrap();
        let report = validate_moments(&fam, &control_set(), 1e-10).unwrap();
        assert!(report
            .to_csv()
            .starts_with("a,mean,var,var_target,moment_2plus_delta,bound,pass\n"));
    }
}
