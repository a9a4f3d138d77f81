//! Domain types shared by all solvers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolverError};

/// Per-step Markovian state: spatial coordinate `x` and the running
/// time-integral `m = ∫ x dt` that carries the path dependence of the
/// Asian-style terminal conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteState {
    pub x: f64,
    pub m: f64,
}

impl DiscreteState {
    pub fn new(x: f64, m: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(SolverError::InvalidParameter { name: "x", value: x });
        }
        if !m.is_finite() {
            return Err(SolverError::InvalidParameter { name: "m", value: m });
        }
        Ok(Self { x, m })
    }
}

/// Compact interval `[a_lo, a_hi]` of squared-volatility values together
/// with the size of the finite search grid used to approximate the
/// supremum over controls.
///
/// Ellipticity (`a_lo > 0`) is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSet {
    a_lo: f64,
    a_hi: f64,
    grid_size: usize,
}

impl ControlSet {
    pub fn new(a_lo: f64, a_hi: f64, grid_size: usize) -> Result<Self> {
        if !(a_lo > 0.0 && a_hi >= a_lo && a_hi.is_finite()) {
            return Err(SolverError::InvalidControlSet { a_lo, a_hi });
        }
        if grid_size == 0 || (grid_size < 2 && a_lo < a_hi) {
            return Err(SolverError::ControlGridTooSmall {
                a_lo,
                a_hi,
                grid_size,
            });
        }
        Ok(Self {
            a_lo,
            a_hi,
            grid_size,
        })
    }

    /// Singleton control set `{a}`.
    pub fn singleton(a: f64) -> Result<Self> {
        Self::new(a, a, 1)
    }

    pub fn a_lo(&self) -> f64 {
        self.a_lo
    }

    pub fn a_hi(&self) -> f64 {
        self.a_hi
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// The ascending search grid: `grid_size` equally spaced points with
    /// both endpoints included.
    pub fn grid(&self) -> Vec<f64> {
        make_control_grid(self)
    }
}

/// Equally spaced control grid spanning the set, endpoints included.
pub fn make_control_grid(cs: &ControlSet) -> Vec<f64> {
    if cs.grid_size == 1 {
        return vec![cs.a_lo];
    }
    let step = (cs.a_hi - cs.a_lo) / (cs.grid_size - 1) as f64;
    (0..cs.grid_size)
        .map(|i| {
            if i + 1 == cs.grid_size {
                cs.a_hi
            } else {
                cs.a_lo + step * i as f64
            }
        })
        .collect()
}

/// Driver of the backward equation, evaluated along the discrete scheme as
/// `f(t, x, m, y, z, a)`.  The declared Lipschitz constants gate the
/// implicit fixed point (`lip_y·Δt < 1`) and the monotonicity margin
/// (`lip_z·Δx ≤ a_lo`).
#[derive(Clone)]
pub struct Generator {
    eval: Arc<dyn Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync>,
    pub lip_y: f64,
    pub lip_z: f64,
    pub depends_on_z: bool,
}

impl Generator {
    pub fn new(
        eval: impl Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        lip_y: f64,
        lip_z: f64,
        depends_on_z: bool,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            lip_y,
            lip_z,
            depends_on_z,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, m: f64, y: f64, z: f64, a: f64) -> f64 {
        (self.eval)(t, x, m, y, z, a)
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("lip_y", &self.lip_y)
            .field("lip_z", &self.lip_z)
            .field("depends_on_z", &self.depends_on_z)
            .finish()
    }
}

/// Terminal condition `ξ(x, m)`, Lipschitz with constant `lip` on the
/// solver's working domain.
#[derive(Clone)]
pub struct TerminalCondition {
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub lip: f64,
}

impl TerminalCondition {
    pub fn new(eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, lip: f64) -> Self {
        Self {
            eval: Arc::new(eval),
            lip,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, m: f64) -> f64 {
        (self.eval)(x, m)
    }
}

impl fmt::Debug for TerminalCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TerminalCondition")
            .field("lip", &self.lip)
            .finish()
    }
}

/// Uniform discretization of `[0, T]` into `n` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SolverError::InvalidParameter {
                name: "horizon",
                value: horizon,
            });
        }
        if n == 0 {
            return Err(SolverError::InvalidParameter {
                name: "n",
                value: 0.0,
            });
        }
        Ok(Self { horizon, n })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Node `t_k = k·Δt`.
    pub fn t(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n);
        self.dt() * k as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |k| self.t(k))
    }
}

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    TreeDp,
    FiniteDifference,
    Probabilistic,
    PdeSplitting,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::TreeDp => "tree",
            Scheme::FiniteDifference => "fd",
            Scheme::Probabilistic => "proba",
            Scheme::PdeSplitting => "pde",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one solve: the root value `Y0`, provenance, and a sorted
/// diagnostics map (monotonicity margin, lattice geometry, regression
/// condition numbers, ...).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub y0: f64,
    pub scheme: Scheme,
    pub n_steps: usize,
    pub runtime_s: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SolveResult {
    pub fn new(y0: f64, scheme: Scheme, n_steps: usize, runtime_s: f64) -> Self {
        debug_assert!(y0.is_finite());
        debug_assert!(runtime_s >= 0.0);
        Self {
            y0,
            scheme,
            n_steps,
            runtime_s,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_grid_endpoints_only() {
        let cs = ControlSet::new(0.04, 0.09, 2).unwrap();
        assert_eq!(make_control_grid(&cs), vec![0.04, 0.09]);
    }

    #[test]
    fn control_grid_uniform_spacing() {
        let cs = ControlSet::new(0.04, 0.09, 6).unwrap();
        let grid = make_control_grid(&cs);
        let expect = [0.04, 0.05, 0.06, 0.07, 0.08, 0.09];
        assert_eq!(grid.len(), 6);
        for (g, e) in grid.iter().zip(expect.iter()) {
            assert!((g - e).abs() < 1e-15, "grid {g} vs {e}");
        }
        assert_eq!(grid[0], 0.04);
        assert_eq!(grid[5], 0.09);
    }

    #[test]
    fn control_grid_singleton() {
        let cs = ControlSet::new(0.05, 0.05, 1).unwrap();
        assert_eq!(make_control_grid(&cs), vec![0.05]);
    }

    #[test]
    fn control_grid_rejects_too_small() {
        let err = ControlSet::new(0.04, 0.09, 1).unwrap_err();
        assert!(matches!(err, SolverError::ControlGridTooSmall { .. }));
    }

    #[test]
    fn control_set_requires_ellipticity() {
        assert!(ControlSet::new(0.0, 0.09, 4).is_err());
        assert!(ControlSet::new(-0.01, 0.09, 4).is_err());
        assert!(ControlSet::new(0.09, 0.04, 4).is_err());
    }

    #[test]
    fn control_grid_is_ascending_and_spans() {
        for size in 2..20 {
            let cs = ControlSet::new(0.013, 0.21, size).unwrap();
            let g = make_control_grid(&cs);
            assert_eq!(g.len(), size);
            assert_eq!(g[0], 0.013);
            assert_eq!(g[size - 1], 0.21);
            assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn discrete_state_rejects_non_finite() {
        assert!(DiscreteState::new(f64::NAN, 0.0).is_err());
        assert!(DiscreteState::new(0.0, f64::INFINITY).is_err());
        assert!(DiscreteState::new(0.2, -0.1).is_ok());
    }

    #[test]
    fn time_grid_uniform_nodes() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.dt(), 0.25);
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes.len(), 5);
        assert_eq!(nodes[0], 0.0);
        assert!((nodes[4] - 1.0).abs() < 1e-15);
    }
}
