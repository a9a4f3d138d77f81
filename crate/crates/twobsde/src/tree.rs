//! Exact dynamic programming on the full trinomial path tree.
//!
//! The tree keeps entire paths (no state reduction), so it is the ground
//! truth the lattice and regression solvers are validated against.  It is
//! capped at [`MAX_TREE_STEPS`] steps — `3^n` leaves — and exists to
//! validate, not to scale.
//!
//! Two backward iterations are provided.  The implicit step solves the
//! scalar fixed point
//!
//! ```text
//! y = E[v_next] - f(t, x, m, y, z, a)·Δt,     z = E[v_next·ΔM] / (a·Δt),
//! ```
//!
//! by Picard iteration (a contraction while `lip_y·Δt < 1`), while the
//! explicit step substitutes `E[v_next]` for `y` inside `f`.  Both take a
//! per-node supremum over the control grid.

use crate::error::{Result, SolverError};
use crate::increments::{IncrementFamily, IncrementKind, Support};
use crate::types::{ControlSet, Generator, Scheme, SolveResult, TerminalCondition, TimeGrid};

/// Hard cap on tree depth; the tree has `3^n` leaves.
pub const MAX_TREE_STEPS: usize = 12;

const PICARD_TOL: f64 = 1e-12;
const PICARD_MAX_ITER: usize = 100;

/// A node of the path tree: time index `k`, the realized path
/// `x_0, ..., x_k`, and the left-endpoint integral `m = Σ_{i<k} x_i·Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNode {
    pub k: usize,
    pub path: Vec<f64>,
    pub m: f64,
}

impl PathNode {
    pub fn root(x0: f64) -> Self {
        Self {
            k: 0,
            path: vec![x0],
            m: 0.0,
        }
    }

    pub fn x(&self) -> f64 {
        *self.path.last().expect("path never empty")
    }

    /// Extend the path by one increment, updating `m` by the left-endpoint
    /// rule `m' = m + x·Δt`.
    pub fn child(&self, increment: f64, dt: f64) -> Self {
        let mut path = self.path.clone();
        path.push(self.x() + increment);
        Self {
            k: self.k + 1,
            path,
            m: self.m + self.x() * dt,
        }
    }

    /// Every consecutive increment lies in the family's support.
    pub fn is_admissible(&self, fam: &IncrementFamily) -> bool {
        let IncrementKind::Trinomial { dx } = fam.kind() else {
            return false;
        };
        self.path.windows(2).all(|w| {
            let inc = w[1] - w[0];
            inc.abs() < 1e-12 || (inc.abs() - dx).abs() < 1e-12
        })
    }
}

/// Next-step values under the three trinomial moves from one node.
#[derive(Debug, Clone, Copy)]
pub struct StepChildren {
    pub up: f64,
    pub mid: f64,
    pub down: f64,
}

/// Output of one backward step at a fixed control.
#[derive(Debug, Clone, Copy)]
pub struct StepOutput {
    pub y: f64,
    pub z: f64,
    /// `E[(ΔN)²]` where `ΔN = v_next - E[v_next] - z·ΔM` is the discrete
    /// orthogonal remainder; diagnostic for the a-priori bounds.
    pub dn_second_moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    Implicit,
    Explicit,
}

impl TreeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TreeMode::Implicit => "implicit",
            TreeMode::Explicit => "explicit",
        }
    }
}

fn trinomial_dx(fam: &IncrementFamily, solver: &'static str) -> Result<f64> {
    match fam.kind() {
        IncrementKind::Trinomial { dx } => Ok(dx),
        other => Err(SolverError::UnsupportedFamily {
            family: other.name(),
            solver,
        }),
    }
}

fn check_cfl(fam: &IncrementFamily, a: f64, dt: f64, dx: f64) -> Result<f64> {
    let p_a = fam.cfl_parameter(a).expect("trinomial family");
    if p_a > 0.5 + 1e-12 {
        return Err(SolverError::CflViolation { a, dt, dx, p_a });
    }
    Ok(0.5 * p_a)
}

/// Conditional expectation and covariation estimator from the three
/// children: `E = q·up + q·down + (1-2q)·mid`, `z = E[v·ΔM]/(a·Δt)`.
fn expectation_and_z(next: StepChildren, q: f64, dx: f64, a: f64, dt: f64) -> (f64, f64) {
    let e = q * next.up + q * next.down + (1.0 - 2.0 * q) * next.mid;
    let z = (q * next.up * dx - q * next.down * dx) / (a * dt);
    (e, z)
}

fn dn_second_moment(next: StepChildren, e: f64, z: f64, q: f64, dx: f64) -> f64 {
    let du = next.up - e - z * dx;
    let dm = next.mid - e;
    let dd = next.down - e + z * dx;
    q * du * du + (1.0 - 2.0 * q) * dm * dm + q * dd * dd
}

fn implicit_value(t: f64, x: f64, m: f64, e: f64, z: f64, a: f64, gen: &Generator, dt: f64) -> f64 {
    let mut y = e;
    for _ in 0..PICARD_MAX_ITER {
        let next = e - gen.eval(t, x, m, y, z, a) * dt;
        if (next - y).abs() <= PICARD_TOL {
            return next;
        }
        y = next;
    }
    y
}

/// One implicit backward step at node `node` under control `a`.
pub fn implicit_step(
    next: StepChildren,
    node: &PathNode,
    a: f64,
    gen: &Generator,
    fam: &IncrementFamily,
    dt: f64,
) -> Result<StepOutput> {
    let product = gen.lip_y * dt;
    if product >= 1.0 {
        return Err(SolverError::NoContraction { product });
    }
    let dx = trinomial_dx(fam, "implicit_step")?;
    let q = check_cfl(fam, a, dt, dx)?;
    let (e, z) = expectation_and_z(next, q, dx, a, dt);
    let t = node.k as f64 * dt;
    let y = implicit_value(t, node.x(), node.m, e, z, a, gen, dt);
    Ok(StepOutput {
        y,
        z,
        dn_second_moment: dn_second_moment(next, e, z, q, dx),
    })
}

/// One explicit backward step: no fixed point, `f` sees `E[v_next]`.
pub fn explicit_step(
    next: StepChildren,
    node: &PathNode,
    a: f64,
    gen: &Generator,
    fam: &IncrementFamily,
    dt: f64,
) -> Result<StepOutput> {
    let dx = trinomial_dx(fam, "explicit_step")?;
    let q = check_cfl(fam, a, dt, dx)?;
    let (e, z) = expectation_and_z(next, q, dx, a, dt);
    let t = node.k as f64 * dt;
    let y = e - gen.eval(t, node.x(), node.m, e, z, a) * dt;
    Ok(StepOutput {
        y,
        z,
        dn_second_moment: dn_second_moment(next, e, z, q, dx),
    })
}

/// Monotonicity margin of the one-step scheme: the minimum over grid
/// controls and support points of the weight `1 + L_z·a⁻¹·ΔM`, i.e.
/// `1 - lip_z·max|H|/a_lo` for bounded support.  A nonnegative margin
/// certifies that the backward step is monotone; `1` when the generator
/// does not depend on `z`.  Negative margins are a valid (failing) answer.
pub fn check_monotonicity(gen: &Generator, cs: &ControlSet, fam: &IncrementFamily) -> f64 {
    if !gen.depends_on_z || gen.lip_z == 0.0 {
        return 1.0;
    }
    match fam.support() {
        Support::Bounded { max_abs } => 1.0 - gen.lip_z * max_abs / cs.a_lo(),
        Support::Unbounded => f64::NEG_INFINITY,
    }
}

/// Full tree solution: values and the optimizing control index per node.
#[derive(Debug, Clone)]
pub struct TreeSolution {
    pub result: SolveResult,
    /// `values[k][node]` for `k = 0..=n`; level `k` has `3^k` nodes.
    pub values: Vec<Vec<f64>>,
    /// `policy[k][node]` = index into the control grid, for `k = 0..n`.
    pub policy: Vec<Vec<u16>>,
    /// `(x, m)` states per level, matching the value layout.
    pub states: Vec<Vec<(f64, f64)>>,
}

/// Backward induction over the whole path tree with a per-node supremum
/// over the control grid; `y0` is the root value.
pub fn solve_tree(
    gen: &Generator,
    term: &TerminalCondition,
    cs: &ControlSet,
    fam: &IncrementFamily,
    grid: &TimeGrid,
    x0: f64,
    mode: TreeMode,
) -> Result<SolveResult> {
    solve_tree_detailed(gen, term, cs, fam, grid, x0, mode).map(|s| s.result)
}

pub fn solve_tree_detailed(
    gen: &Generator,
    term: &TerminalCondition,
    cs: &ControlSet,
    fam: &IncrementFamily,
    grid: &TimeGrid,
    x0: f64,
    mode: TreeMode,
) -> Result<TreeSolution> {
    let start = std::time::Instant::now();
    let n = grid.n();
    if n > MAX_TREE_STEPS {
        return Err(SolverError::TreeTooLarge {
            n,
            max: MAX_TREE_STEPS,
        });
    }
    let dt = grid.dt();
    if (fam.dt() - dt).abs() > 1e-12 * dt {
        return Err(SolverError::InvalidParameter {
            name: "family dt mismatch",
            value: fam.dt(),
        });
    }
    let dx = trinomial_dx(fam, "solve_tree")?;
    if mode == TreeMode::Implicit && gen.lip_y * dt >= 1.0 {
        return Err(SolverError::NoContraction {
            product: gen.lip_y * dt,
        });
    }
    let controls = cs.grid();
    let qs: Vec<f64> = controls
        .iter()
        .map(|&a| check_cfl(fam, a, dt, dx))
        .collect::<Result<_>>()?;

    // Forward pass: (x, m) per node, children at index 3i + {0: +dx, 1: 0, 2: -dx}.
    let mut states: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n + 1);
    states.push(vec![(x0, 0.0)]);
    for k in 0..n {
        let prev = &states[k];
        let mut level = Vec::with_capacity(prev.len() * 3);
        for &(x, m) in prev {
            let m_next = m + x * dt;
            level.push((x + dx, m_next));
            level.push((x, m_next));
            level.push((x - dx, m_next));
        }
        states.push(level);
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    values[n] = states[n].iter().map(|&(x, m)| term.eval(x, m)).collect();
    let sup_terminal = values[n].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    let mut policy: Vec<Vec<u16>> = vec![Vec::new(); n];
    let mut max_abs_y = sup_terminal;
    let mut sup_abs_f = 0.0f64;
    let mut dn2_max = 0.0f64;

    for k in (0..n).rev() {
        let t = k as f64 * dt;
        let next = &values[k + 1];
        let mut level = vec![0.0; states[k].len()];
        let mut level_policy = vec![0u16; states[k].len()];
        for (idx, &(x, m)) in states[k].iter().enumerate() {
            let children = StepChildren {
                up: next[3 * idx],
                mid: next[3 * idx + 1],
                down: next[3 * idx + 2],
            };
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0u16;
            let mut best_e = 0.0;
            let mut best_z = 0.0;
            let mut best_q = 0.0;
            for (i, (&a, &q)) in controls.iter().zip(&qs).enumerate() {
                let (e, z) = expectation_and_z(children, q, dx, a, dt);
                let y = match mode {
                    TreeMode::Implicit => implicit_value(t, x, m, e, z, a, gen, dt),
                    TreeMode::Explicit => e - gen.eval(t, x, m, e, z, a) * dt,
                };
                sup_abs_f = sup_abs_f.max(gen.eval(t, x, m, y, z, a).abs());
                if y > best {
                    best = y;
                    best_i = i as u16;
                    best_e = e;
                    best_z = z;
                    best_q = q;
                }
            }
            dn2_max = dn2_max.max(dn_second_moment(children, best_e, best_z, best_q, dx));
            max_abs_y = max_abs_y.max(best.abs());
            level[idx] = best;
            level_policy[idx] = best_i;
        }
        values[k] = level;
        policy[k] = level_policy;
    }

    let y0 = values[0][0];
    let result = SolveResult::new(y0, Scheme::TreeDp, n, start.elapsed().as_secs_f64())
        .with_diagnostic("dx", dx)
        .with_diagnostic("dt", dt)
        .with_diagnostic(
            "monotonicity_margin",
            check_monotonicity(gen, cs, fam),
        )
        .with_diagnostic("max_abs_y", max_abs_y)
        .with_diagnostic("sup_terminal", sup_terminal)
        .with_diagnostic("sup_abs_f", sup_abs_f)
        .with_diagnostic("dn_second_moment_max", dn2_max);
    Ok(TreeSolution {
        result,
        values,
        policy,
        states,
    })
}
