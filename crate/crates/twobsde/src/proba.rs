//! Regression Monte Carlo with second-order weights.
//!
//! Forward pass: simulate the ensemble under the base diffusion
//! `dX = σ0·dW`, `σ0 = √a0`, `a0 = a_lo`, carrying `m` by the left-endpoint
//! rule.  Backward pass, per step:
//!
//! ```text
//! E_k[Y]  ≈ OLS fit of Y on monomials of (x_k, m_k),
//! Γ_k     ≈ OLS fit of (Y - E_k[Y])·w on the same basis,
//!           w = (ΔW² - Δt) / (Δt²·a0),
//! Y_new   = E_k[Y] + Δt·G(t_k, x_k, m_k, E_k[Y], Γ_k),
//! ```
//!
//! where the per-step Hamiltonian maximizes the correction relative to the
//! base diffusion over the control grid:
//!
//! ```text
//! G(t, x, m, y, γ) = max_a { ½·(a - a0)·γ - f(t, x, m, y + ½·(a - a0)·γ·Δt, 0, a) }.
//! ```
//!
//! Centering the Γ regressand on the fitted continuation mirrors the
//! centered increment in the covariation estimator of the implicit scheme;
//! the conditional expectation is unchanged (the weight is conditionally
//! mean-zero) and constants are then reproduced exactly.
//!
//! The scheme requires a z-independent generator; `f2` is served by the
//! lattice solver instead.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolverError};
use crate::math::{normal_quantile, u64_to_open01};
use crate::parallel::{for_each_chunk_mut, map_chunks};
use crate::types::{ControlSet, Generator, Scheme, SolveResult, TerminalCondition, TimeGrid};

/// Fixed chunk size for deterministic parallel reductions.
const CHUNK: usize = 8192;

/// Relative eigenvalue cutoff of the pseudo-inverse Gram solve.
const RCOND: f64 = 1e-10;

/// Bivariate monomials in `(x, m)` up to a total degree, ordered by degree
/// so that every prefix is itself a valid lower-degree basis.  The
/// constant function is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressionBasis {
    degree: usize,
}

impl RegressionBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(SolverError::InvalidParameter {
                name: "degree",
                value: 0.0,
            });
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Evaluate all features at `(x, m)` into `out` (length `self.len()`).
    #[inline]
    pub fn eval_into(&self, x: f64, m: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let mut idx = 0;
        for deg in 0..=self.degree {
            // x^(deg-i)·m^i for i = 0..=deg
            for i in 0..=deg {
                out[idx] = x.powi((deg - i) as i32) * m.powi(i as i32);
                idx += 1;
            }
        }
    }
}

/// Second-order weight `(ΔW² - Δt)/(Δt²·a0)`: conditionally mean-zero,
/// extracts a discrete second derivative from simulated payoffs.
#[inline]
pub fn gamma_weight(dw: f64, dt: f64, a0: f64) -> f64 {
    debug_assert!(dt > 0.0 && a0 > 0.0);
    (dw * dw - dt) / (dt * dt * a0)
}

/// Per-step Hamiltonian of the probabilistic scheme: the maximum over the
/// control grid of the second-order correction beyond the base diffusion
/// `a0 = a_lo` minus the generator at the corrected level.
pub fn g_function(
    t: f64,
    x: f64,
    m: f64,
    y: f64,
    gamma: f64,
    gen: &Generator,
    cs: &ControlSet,
    dt: f64,
) -> Result<f64> {
    if gen.depends_on_z {
        return Err(SolverError::ZDependentGenerator);
    }
    let a0 = cs.a_lo();
    let mut best = f64::NEG_INFINITY;
    for a in cs.grid() {
        let corr = a - a0;
        let y_a = y + 0.5 * corr * gamma * dt;
        let cand = 0.5 * corr * gamma - gen.eval(t, x, m, y_a, 0.0, a);
        if cand > best {
            best = cand;
        }
    }
    Ok(best)
}

/// Forward-simulated ensemble under the base diffusion: per time step,
/// the per-path states `(x, m)` and the Brownian increment into the next
/// step.  Path `p` draws from an independent counter-based stream
/// `(seed, p)`, so any path subset can be generated on any worker.
#[derive(Debug, Clone)]
pub struct SimulatedEnsemble {
    pub n_paths: usize,
    pub seed: u64,
    pub n_steps: usize,
    /// `xs[k][p]`, `ms[k][p]` for `k = 0..=n`.
    xs: Vec<Vec<f64>>,
    ms: Vec<Vec<f64>>,
    /// `dws[k][p]` is `ΔW` from `t_k` to `t_{k+1}`, `k = 0..n`.
    dws: Vec<Vec<f64>>,
}

impl SimulatedEnsemble {
    pub fn x(&self, k: usize) -> &[f64] {
        &self.xs[k]
    }

    pub fn m(&self, k: usize) -> &[f64] {
        &self.ms[k]
    }

    pub fn dw(&self, k: usize) -> &[f64] {
        &self.dws[k]
    }
}

pub fn simulate_ensemble(
    time: &TimeGrid,
    x0: f64,
    a0: f64,
    n_paths: usize,
    seed: u64,
    threads: usize,
) -> SimulatedEnsemble {
    let n = time.n();
    let dt = time.dt();
    let sqrt_dt = dt.sqrt();
    let sigma0 = a0.sqrt();
    let n_chunks = n_paths.div_ceil(CHUNK);

    struct ChunkStates {
        xs: Vec<Vec<f64>>,
        ms: Vec<Vec<f64>>,
        dws: Vec<Vec<f64>>,
    }

    let chunks: Vec<ChunkStates> = map_chunks(n_chunks, threads, |ci| {
        let lo = ci * CHUNK;
        let hi = ((ci + 1) * CHUNK).min(n_paths);
        let len = hi - lo;
        let mut xs = vec![vec![0.0; len]; n + 1];
        let mut ms = vec![vec![0.0; len]; n + 1];
        let mut dws = vec![vec![0.0; len]; n];
        for p in 0..len {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + (lo + p) as u64);
            let mut x = x0;
            let mut m = 0.0;
            xs[0][p] = x;
            ms[0][p] = m;
            for k in 0..n {
                let u = u64_to_open01(rng.gen::<u64>());
                let dw = sqrt_dt * normal_quantile(u);
                dws[k][p] = dw;
                m += x * dt;
                x += sigma0 * dw;
                xs[k + 1][p] = x;
                ms[k + 1][p] = m;
            }
        }
        ChunkStates { xs, ms, dws }
    });

    let mut xs = vec![vec![0.0; n_paths]; n + 1];
    let mut ms = vec![vec![0.0; n_paths]; n + 1];
    let mut dws = vec![vec![0.0; n_paths]; n];
    for (ci, c) in chunks.iter().enumerate() {
        let lo = ci * CHUNK;
        for k in 0..=n {
            xs[k][lo..lo + c.xs[k].len()].copy_from_slice(&c.xs[k]);
            ms[k][lo..lo + c.ms[k].len()].copy_from_slice(&c.ms[k]);
        }
        for k in 0..n {
            dws[k][lo..lo + c.dws[k].len()].copy_from_slice(&c.dws[k]);
        }
    }
    SimulatedEnsemble {
        n_paths,
        seed,
        n_steps: n,
        xs,
        ms,
        dws,
    }
}

struct FitOutcome {
    coeffs: DVector<f64>,
    rank: usize,
    condition: f64,
}

/// Least-squares fit through the Gram pseudo-inverse: eigenvalues below
/// `RCOND·λ_max` are dropped, which handles degenerate states (for
/// example `m` is constant across paths at the first step) by silently
/// reducing to the spanned sub-basis.
fn pseudo_solve(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> FitOutcome {
    let eig = gram.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cut = lam_max * RCOND;
    let mut rank = 0;
    let mut inv = DVector::zeros(eig.eigenvalues.len());
    let mut lam_min = f64::INFINITY;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cut {
            inv[i] = 1.0 / lam;
            rank += 1;
            lam_min = lam_min.min(lam);
        }
    }
    let vt_rhs = eig.eigenvectors.transpose() * rhs;
    let coeffs = &eig.eigenvectors * vt_rhs.component_mul(&inv);
    FitOutcome {
        coeffs,
        rank,
        condition: if rank > 0 { lam_max / lam_min } else { f64::INFINITY },
    }
}

/// Gram matrix `ΦᵀΦ` and right-hand side `Φᵀr`, reduced over fixed chunks
/// in chunk order.
fn assemble_gram_and_rhs(
    basis: &RegressionBasis,
    xs: &[f64],
    ms: &[f64],
    r: &[f64],
    threads: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let p = basis.len();
    let n_chunks = xs.len().div_ceil(CHUNK);
    let partials = map_chunks(n_chunks, threads, |ci| {
        let lo = ci * CHUNK;
        let hi = ((ci + 1) * CHUNK).min(xs.len());
        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut phi = vec![0.0; p];
        for i in lo..hi {
            basis.eval_into(xs[i], ms[i], &mut phi);
            for a in 0..p {
                let pa = phi[a];
                rhs[a] += pa * r[i];
                for b in a..p {
                    gram[a * p + b] += pa * phi[b];
                }
            }
        }
        (gram, rhs)
    });
    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    for (g, rr) in partials {
        for a in 0..p {
            rhs[a] += rr[a];
            for b in a..p {
                gram[(a, b)] += g[a * p + b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    (gram, rhs)
}

/// Chunk-ordered mean and standard deviation.
fn chunked_moments(v: &[f64], threads: usize) -> (f64, f64) {
    let n_chunks = v.len().div_ceil(CHUNK);
    let partials = map_chunks(n_chunks, threads, |ci| {
        let lo = ci * CHUNK;
        let hi = ((ci + 1) * CHUNK).min(v.len());
        let mut s = 0.0;
        let mut s2 = 0.0;
        for &x in &v[lo..hi] {
            s += x;
            s2 += x * x;
        }
        (s, s2)
    });
    let (mut s, mut s2) = (0.0, 0.0);
    for (a, b) in partials {
        s += a;
        s2 += b;
    }
    let n = v.len() as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Standardize a regression coordinate.  A degenerate coordinate (zero
/// spread across paths, e.g. `m` at the first step) maps to the zero
/// feature and drops out of the fit through the rank cutoff.
fn standardized(v: &[f64], threads: usize) -> Vec<f64> {
    let (mean, sd) = chunked_moments(v, threads);
    let degenerate = sd <= 1e-14 * (mean.abs() + 1.0);
    let mut out = vec![0.0; v.len()];
    for_each_chunk_mut(&mut out, CHUNK, threads, |start, chunk| {
        for (i, t) in chunk.iter_mut().enumerate() {
            *t = if degenerate {
                0.0
            } else {
                (v[start + i] - mean) / sd
            };
        }
    });
    out
}

/// `Φᵀr` alone, for a second regression sharing the Gram matrix.
fn assemble_rhs(
    basis: &RegressionBasis,
    xs: &[f64],
    ms: &[f64],
    r: &[f64],
    threads: usize,
) -> DVector<f64> {
    let p = basis.len();
    let n_chunks = xs.len().div_ceil(CHUNK);
    let partials = map_chunks(n_chunks, threads, |ci| {
        let lo = ci * CHUNK;
        let hi = ((ci + 1) * CHUNK).min(xs.len());
        let mut rhs = vec![0.0; p];
        let mut phi = vec![0.0; p];
        for i in lo..hi {
            basis.eval_into(xs[i], ms[i], &mut phi);
            for a in 0..p {
                rhs[a] += phi[a] * r[i];
            }
        }
        rhs
    });
    let mut rhs = DVector::zeros(p);
    for rr in partials {
        for a in 0..p {
            rhs[a] += rr[a];
        }
    }
    rhs
}

#[derive(Debug, Clone, Copy)]
pub struct ProbaConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub degree: usize,
    pub threads: usize,
}

impl Default for ProbaConfig {
    fn default() -> Self {
        Self {
            n_paths: 200_000,
            seed: 42,
            degree: 2,
            threads: 1,
        }
    }
}

/// Full simulation-regression solve; `y0` is the cross-path value at the
/// (degenerate) initial state.
pub fn proba_solve(
    gen: &Generator,
    term: &TerminalCondition,
    cs: &ControlSet,
    time: &TimeGrid,
    x0: f64,
    cfg: &ProbaConfig,
) -> Result<SolveResult> {
    let start = std::time::Instant::now();
    if gen.depends_on_z {
        return Err(SolverError::ZDependentGenerator);
    }
    let basis = RegressionBasis::new(cfg.degree)?;
    if cfg.n_paths < 10 * basis.len() {
        return Err(SolverError::Config(format!(
            "need n_paths >= 10 x basis size ({}), got {}",
            10 * basis.len(),
            cfg.n_paths
        )));
    }
    let a0 = cs.a_lo();
    if cs.a_hi() > 3.0 * a0 {
        return Err(SolverError::DomainViolation {
            a: cs.a_hi(),
            a0,
        });
    }
    let n = time.n();
    let dt = time.dt();
    let t_end = time.horizon();
    let ens = simulate_ensemble(time, x0, a0, cfg.n_paths, cfg.seed, cfg.threads);

    let mut y: Vec<f64> = vec![0.0; cfg.n_paths];
    for_each_chunk_mut(&mut y, CHUNK, cfg.threads, |start_idx, chunk| {
        let xt = ens.x(n);
        let mt = ens.m(n);
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = term.eval(xt[start_idx + i], mt[start_idx + i]);
        }
    });

    // Truncation bound from the observed terminal sup-norm and the
    // generator's size at the origin; the a-priori estimate keeps the
    // regressed continuation values in this band.
    let xi_sup = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let f0_sup = cs
        .grid()
        .iter()
        .map(|&a| gen.eval(0.0, x0, 0.0, 0.0, 0.0, a).abs())
        .fold(0.0f64, f64::max);
    let bound = (xi_sup + f0_sup * t_end) * (gen.lip_y * t_end).exp();

    let controls = cs.grid();
    let mut min_rank = basis.len();
    let mut cond_max: f64 = 0.0;
    let mut gw_mean_se_max: f64 = 0.0;

    let mut ce = vec![0.0; cfg.n_paths];
    let mut gm = vec![0.0; cfg.n_paths];
    let mut y0 = f64::NAN;

    for k in (0..n).rev() {
        let t_k = time.t(k);
        let dwk = ens.dw(k);

        // weight diagnostics: sample mean within 4 standard errors of zero
        let (mut s1, mut s2) = (0.0, 0.0);
        for &dw in dwk {
            let w = gamma_weight(dw, dt, a0);
            s1 += w;
            s2 += w * w;
        }
        let w_mean = s1 / cfg.n_paths as f64;
        let w_se =
            ((s2 / cfg.n_paths as f64 - w_mean * w_mean) / cfg.n_paths as f64).sqrt();
        if w_se > 0.0 {
            gw_mean_se_max = gw_mean_se_max.max(w_mean.abs() / w_se);
        }

        if k == 0 {
            // the state is degenerate at t = 0: conditional expectations
            // collapse to plain cross-path averages
            let n_chunks = cfg.n_paths.div_ceil(CHUNK);
            let partials = map_chunks(n_chunks, cfg.threads, |ci| {
                let lo = ci * CHUNK;
                let hi = ((ci + 1) * CHUNK).min(cfg.n_paths);
                let mut s = 0.0;
                for i in lo..hi {
                    s += y[i];
                }
                s
            });
            let mean_y: f64 = partials.iter().sum::<f64>() / cfg.n_paths as f64;
            let partials_g = map_chunks(n_chunks, cfg.threads, |ci| {
                let lo = ci * CHUNK;
                let hi = ((ci + 1) * CHUNK).min(cfg.n_paths);
                let mut s = 0.0;
                for i in lo..hi {
                    s += (y[i] - mean_y) * gamma_weight(dwk[i], dt, a0);
                }
                s
            });
            let gamma0: f64 = partials_g.iter().sum::<f64>() / cfg.n_paths as f64;
            let ce0 = mean_y.clamp(-bound, bound);
            y0 = ce0 + dt * g_function(t_k, x0, 0.0, ce0, gamma0, gen, cs, dt)?;
            break;
        }

        let xk = ens.x(k);
        let mk = ens.m(k);
        // regressions run on standardized coordinates, which keeps the
        // Gram matrix well conditioned at every step
        let xt = standardized(xk, cfg.threads);
        let mt = standardized(mk, cfg.threads);

        // continuation regression
        let (gram, rhs_y) = assemble_gram_and_rhs(&basis, &xt, &mt, &y, cfg.threads);
        let fit_y = pseudo_solve(&gram, &rhs_y);
        min_rank = min_rank.min(fit_y.rank);
        cond_max = cond_max.max(fit_y.condition);
        {
            let coeffs = &fit_y.coeffs;
            for_each_chunk_mut(&mut ce, CHUNK, cfg.threads, |start_idx, chunk| {
                let mut phi = vec![0.0; basis.len()];
                for (i, v) in chunk.iter_mut().enumerate() {
                    let p = start_idx + i;
                    basis.eval_into(xt[p], mt[p], &mut phi);
                    let mut acc = 0.0;
                    for (c, f) in coeffs.iter().zip(&phi) {
                        acc += c * f;
                    }
                    *v = acc.clamp(-bound, bound);
                }
            });
        }

        // second-order weight regression on the centered residuals,
        // sharing the Gram matrix with the continuation fit
        let resid_w: Vec<f64> = (0..cfg.n_paths)
            .map(|i| (y[i] - ce[i]) * gamma_weight(dwk[i], dt, a0))
            .collect();
        let rhs_g = assemble_rhs(&basis, &xt, &mt, &resid_w, cfg.threads);
        let fit_g = pseudo_solve(&gram, &rhs_g);
        cond_max = cond_max.max(fit_g.condition);
        {
            let coeffs = &fit_g.coeffs;
            for_each_chunk_mut(&mut gm, CHUNK, cfg.threads, |start_idx, chunk| {
                let mut phi = vec![0.0; basis.len()];
                for (i, v) in chunk.iter_mut().enumerate() {
                    let p = start_idx + i;
                    basis.eval_into(xt[p], mt[p], &mut phi);
                    let mut acc = 0.0;
                    for (c, f) in coeffs.iter().zip(&phi) {
                        acc += c * f;
                    }
                    *v = acc;
                }
            });
        }

        // per-path Hamiltonian update
        for_each_chunk_mut(&mut y, CHUNK, cfg.threads, |start_idx, chunk| {
            for (i, v) in chunk.iter_mut().enumerate() {
                let p = start_idx + i;
                let (cep, gmp) = (ce[p], gm[p]);
                let mut best = f64::NEG_INFINITY;
                for &a in &controls {
                    let corr = a - a0;
                    let y_a = cep + 0.5 * corr * gmp * dt;
                    let cand = 0.5 * corr * gmp - gen.eval(t_k, xk[p], mk[p], y_a, 0.0, a);
                    if cand > best {
                        best = cand;
                    }
                }
                *v = cep + dt * best;
            }
        });
    }

    debug_assert!(y0.is_finite());
    Ok(
        SolveResult::new(y0, Scheme::Probabilistic, n, start.elapsed().as_secs_f64())
            .with_diagnostic("paths", cfg.n_paths as f64)
            .with_diagnostic("seed", cfg.seed as f64)
            .with_diagnostic("basis_size", basis.len() as f64)
            .with_diagnostic("basis_rank_min", min_rank as f64)
            .with_diagnostic("gram_condition_max", cond_max)
            .with_diagnostic("gw_mean_max_se", gw_mean_se_max)
            .with_diagnostic("truncation_bound", bound),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, ModelConfig};
    use crate::types::TerminalCondition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f1_setup() -> (Generator, TerminalCondition, ControlSet) {
        let m = ModelConfig::f1_default();
        (m.generator(), m.terminal(), m.control_set().unwrap())
    }

    #[test]
    fn basis_sizes_and_prefix_structure() {
        let b1 = RegressionBasis::new(1).unwrap();
        let b2 = RegressionBasis::new(2).unwrap();
        assert_eq!(b1.len(), 3);
        assert_eq!(b2.len(), 6);
        let mut f1v = vec![0.0; 3];
        let mut f2v = vec![0.0; 6];
        b1.eval_into(0.3, -0.7, &mut f1v);
        b2.eval_into(0.3, -0.7, &mut f2v);
        assert_eq!(&f2v[..3], &f1v[..]); // degree-1 prefix
        assert_eq!(f2v[0], 1.0); // constant included
        assert!((f2v[3] - 0.09).abs() < 1e-15); // x²
        assert!((f2v[4] + 0.21).abs() < 1e-15); // x·m
        assert!((f2v[5] - 0.49).abs() < 1e-15); // m²
        assert!(RegressionBasis::new(0).is_err());
    }

    #[test]
    fn gamma_weight_examples() {
        let dt = 0.02_f64;
        assert_eq!(gamma_weight(dt.sqrt(), dt, 0.04), 0.0);
        assert!((gamma_weight(0.0, dt, 0.04) - (-1250.0)).abs() < 1e-9);
    }

    #[test]
    fn gamma_weight_is_mean_zero_under_brownian_increments() {
        let dt = 0.02_f64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 400_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let dw = dt.sqrt() * normal_quantile(u64_to_open01(rng.gen::<u64>()));
            let w = gamma_weight(dw, dt, 0.04);
            sum += w;
            sum2 += w * w;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean} vs 4se {}", 4.0 * se);
    }

    #[test]
    fn g_function_with_zero_generator() {
        let gen = models::zero_generator();
        let cs = ControlSet::new(0.04, 0.09, 2).unwrap();
        let dt = 0.02_f64;
        // γ = 0: sup of zero
        assert_eq!(
            g_function(0.0, 0.2, 0.0, 0.3, 0.0, &gen, &cs, dt).unwrap(),
            0.0
        );
        // γ > 0: top control wins, correction ½·(a_hi - a0)·γ
        let g_pos = g_function(0.0, 0.2, 0.0, 0.3, 2.0, &gen, &cs, dt).unwrap();
        assert!((g_pos - 0.5 * 0.05 * 2.0).abs() < 1e-15);
        // γ < 0: the base control a0 is optimal and contributes nothing
        let g_neg = g_function(0.0, 0.2, 0.0, 0.3, -2.0, &gen, &cs, dt).unwrap();
        assert_eq!(g_neg, 0.0);
    }

    #[test]
    fn g_function_dominates_every_grid_control() {
        let m = ModelConfig::f1_default();
        let gen = m.generator();
        let cs = m.control_set().unwrap();
        let dt = 0.02_f64;
        let a0 = cs.a_lo();
        for &gamma in &[-3.0, -0.5, 0.0, 0.4, 2.5] {
            for &y in &[-0.3, 0.0, 0.25] {
                let g = g_function(0.1, 0.2, 0.05, y, gamma, &gen, &cs, dt).unwrap();
                for a in cs.grid() {
                    let corr = a - a0;
                    let y_a = y + 0.5 * corr * gamma * dt;
                    let cand = 0.5 * corr * gamma - gen.eval(0.1, 0.2, 0.05, y_a, 0.0, a);
                    assert!(g >= cand - 1e-15);
                }
            }
        }
    }

    #[test]
    fn g_function_rejects_z_dependent_generators() {
        let gen = models::f2_generator(0.0, 0.09, 2.0);
        let cs = ControlSet::new(0.04, 0.09, 2).unwrap();
        assert!(matches!(
            g_function(0.0, 0.0, 0.0, 0.0, 0.0, &gen, &cs, 0.02),
            Err(SolverError::ZDependentGenerator)
        ));
        let time = TimeGrid::new(1.0, 10).unwrap();
        let term = models::asian_spread_terminal(-0.2, 0.2);
        assert!(matches!(
            proba_solve(&gen, &term, &cs, &time, 0.2, &ProbaConfig::default()),
            Err(SolverError::ZDependentGenerator)
        ));
    }

    #[test]
    fn ensemble_carries_base_diffusion_and_left_endpoint_m() {
        let time = TimeGrid::new(0.1, 5).unwrap();
        let ens = simulate_ensemble(&time, 0.2, 0.04, 300, 7, 1);
        let dt = time.dt();
        let s0 = 0.04f64.sqrt();
        for p in [0usize, 137, 299] {
            let mut m = 0.0;
            let mut x = 0.2;
            for k in 0..5 {
                assert!((ens.x(k)[p] - x).abs() < 1e-14);
                assert!((ens.m(k)[p] - m).abs() < 1e-14);
                m += x * dt;
                x += s0 * ens.dw(k)[p];
            }
        }
    }

    #[test]
    fn seed_determinism_and_thread_invariance() {
        let (gen, term, cs) = f1_setup();
        let time = TimeGrid::new(1.0, 10).unwrap();
        let cfg = ProbaConfig {
            n_paths: 4000,
            seed: 99,
            degree: 2,
            threads: 1,
        };
        let a = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg).unwrap().y0;
        let b = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg).unwrap().y0;
        assert_eq!(a.to_bits(), b.to_bits());
        let cfg4 = ProbaConfig { threads: 4, ..cfg };
        let c = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg4).unwrap().y0;
        assert_eq!(a.to_bits(), c.to_bits());
        let cfg_other_seed = ProbaConfig { seed: 100, ..cfg };
        let d = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg_other_seed)
            .unwrap()
            .y0;
        assert_ne!(a.to_bits(), d.to_bits());
    }

    #[test]
    fn constant_terminal_is_reproduced_exactly() {
        let gen = models::zero_generator();
        let term = models::constant_terminal(0.5);
        let cs = ControlSet::new(0.04, 0.09, 6).unwrap();
        let time = TimeGrid::new(1.0, 20).unwrap();
        let cfg = ProbaConfig {
            n_paths: 20_000,
            seed: 5,
            degree: 2,
            threads: 1,
        };
        let res = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg).unwrap();
        assert!(
            (res.y0 - 0.5).abs() <= 1e-10,
            "constant drifted: {}",
            res.y0
        );
    }

    #[test]
    fn singleton_control_matches_gaussian_closed_form() {
        // {a0}, f = 0, ξ = clamp(|x|, 0, 10): y0 -> sqrt(a0·2T/π)
        let gen = models::zero_generator();
        let term = models::abs_capped_terminal(10.0);
        let cs = ControlSet::singleton(0.04).unwrap();
        let time = TimeGrid::new(1.0, 25).unwrap();
        let cfg = ProbaConfig {
            n_paths: 100_000,
            seed: 11,
            degree: 2,
            threads: 1,
        };
        let res = proba_solve(&gen, &term, &cs, &time, 0.0, &cfg).unwrap();
        let exact = (0.04f64 * 2.0 / std::f64::consts::PI).sqrt();
        // three Monte-Carlo standard errors of the terminal-mean estimator
        let se = 0.5 * (0.04f64 / 100_000.0).sqrt();
        assert!(
            (res.y0 - exact).abs() <= 3.0 * se.max(1e-3),
            "y0 {} vs {exact}",
            res.y0
        );
    }

    #[test]
    fn weight_mean_diagnostic_stays_within_four_se() {
        let (gen, term, cs) = f1_setup();
        let time = TimeGrid::new(1.0, 20).unwrap();
        let cfg = ProbaConfig {
            n_paths: 20_000,
            seed: 1,
            degree: 2,
            threads: 1,
        };
        let res = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg).unwrap();
        assert!(res.diagnostic("gw_mean_max_se").unwrap() < 4.0);
    }

    #[test]
    fn degenerate_states_reduce_rank_not_correctness() {
        // at k = 1 the m-coordinate is constant across paths, so the Gram
        // matrix is rank deficient; the pseudo-inverse must keep the fit on
        // the spanned monomials instead of collapsing to the mean
        let (gen, term, cs) = f1_setup();
        let time = TimeGrid::new(1.0, 4).unwrap();
        let cfg = ProbaConfig {
            n_paths: 5000,
            seed: 3,
            degree: 2,
            threads: 1,
        };
        let res = proba_solve(&gen, &term, &cs, &time, 0.2, &cfg).unwrap();
        let rank = res.diagnostic("basis_rank_min").unwrap();
        assert!(rank < 6.0, "expected a degraded rank, got {rank}");
        assert!(rank >= 3.0, "fit collapsed too far: rank {rank}");
        assert!(res.y0.is_finite());
    }

    #[test]
    fn cross_seed_error_shrinks_like_inverse_sqrt_paths() {
        // std of y0 over 20 seeds against path count: log-log slope -0.5 ± 0.1
        let (gen, term, cs) = f1_setup();
        let time = TimeGrid::new(1.0, 10).unwrap();
        let mut log_n = Vec::new();
        let mut log_sd = Vec::new();
        for n_paths in [1000usize, 10_000, 100_000] {
            let values: Vec<f64> = (1..=20u64)
                .map(|seed| {
                    proba_solve(
                        &gen,
                        &term,
                        &cs,
                        &time,
                        0.2,
                        &ProbaConfig {
                            n_paths,
                            seed,
                            degree: 2,
                            threads: 1,
                        },
                    )
                    .unwrap()
                    .y0
                })
                .collect();
            let mean = values.iter().sum::<f64>() / 20.0;
            let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 19.0).sqrt();
            log_n.push((n_paths as f64).ln());
            log_sd.push(sd.ln());
        }
        let slope = crate::math::ls_slope(&log_n, &log_sd);
        assert!(
            (slope - (-0.5)).abs() <= 0.1,
            "Monte-Carlo error slope {slope}"
        );
    }

    #[test]
    fn pseudo_solve_matches_exact_on_full_rank() {
        let gram = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let rhs = DVector::from_row_slice(&[1.0, 2.0]);
        let fit = pseudo_solve(&gram, &rhs);
        assert_eq!(fit.rank, 2);
        let sol = gram.clone() * &fit.coeffs;
        assert!((sol - rhs).norm() < 1e-12);
    }

    #[test]
    fn path_count_floor_is_enforced() {
        let (gen, term, cs) = f1_setup();
        let time = TimeGrid::new(1.0, 5).unwrap();
        let cfg = ProbaConfig {
            n_paths: 50,
            seed: 1,
            degree: 2,
            threads: 1,
        };
        assert!(matches!(
            proba_solve(&gen, &term, &cs, &time, 0.2, &cfg),
            Err(SolverError::Config(_))
        ));
    }

    #[test]
    fn base_control_bound_is_enforced() {
        // a_hi > 3·a_lo violates the density-domain constraint
        let (gen, term, _) = f1_setup();
        let cs = ControlSet::new(0.04, 0.13, 4).unwrap();
        let time = TimeGrid::new(1.0, 5).unwrap();
        assert!(matches!(
            proba_solve(&gen, &term, &cs, &time, 0.2, &ProbaConfig::default()),
            Err(SolverError::DomainViolation { .. })
        ));
    }
}
