//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical precondition
//! violation, 4 validation failure.  `TWOBSDE_THREADS` sets the worker
//! count (results are bit-identical for any value).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twobsde::config::FileConfig;
use twobsde::error::SolverError;
use twobsde::fd::{fd_solve, LatticeConfig};
use twobsde::harness::{
    gnuplot_blocks, run_sweep, run_validation, sweep_csv, validation_report, SweepRow, SweepSpec,
    SWEEP_CSV_HEADER,
};
use twobsde::increments::{validate_moments, IncrementFamily};
use twobsde::models::ModelConfig;
use twobsde::parallel::threads_from_env;
use twobsde::pde::{pde_split_solve, SplitStepPlan};
use twobsde::proba::{proba_solve, ProbaConfig};
use twobsde::tree::solve_tree_detailed;
use twobsde::types::{Scheme, SolveResult, TimeGrid};

#[derive(Parser)]
#[command(
    name = "twobsde",
    about = "Solvers for second-order BSDEs under volatility uncertainty",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-difference solve on the (x, m) lattice.
    SolveFd {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the result CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulation-regression solve.
    SolveProba {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Splitting solve of the equivalent degenerate PDE.
    SolvePde {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact path-tree solve (small step counts only).
    SolveTree {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also dump every tree node (k, node, x, m, value, control).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Convergence sweep over the configured dt list and schemes.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Where to write the per-scheme gnuplot data blocks.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Per-control moment tables for all increment families.
    ValidateIncrements {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Full validation suite; nonzero exit on any failure.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SolverError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn load(config: &Option<PathBuf>) -> Result<FileConfig, SolverError> {
    match config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default_run()),
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), SolverError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| SolverError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| SolverError::Config(e.to_string()))
        }
    }
}

/// Result row in the sweep schema plus a sorted diagnostics column.
fn result_csv(res: &SolveResult, dt: f64, paths: Option<usize>, seed: Option<u64>) -> String {
    let row = SweepRow {
        scheme: res.scheme,
        dt,
        dx: res.diagnostic("dx"),
        paths,
        seed,
        y0: res.y0,
        runtime_s: res.runtime_s,
        monotonicity_margin: res.diagnostic("monotonicity_margin"),
    };
    let diags = res
        .diagnostics
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    format!("{SWEEP_CSV_HEADER},diagnostics\n{},{diags}\n", row.to_csv())
}

fn run(cli: Cli) -> Result<ExitCode, SolverError> {
    let threads = threads_from_env();
    match cli.command {
        Command::SolveFd { config, output } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let time = TimeGrid::new(model.horizon, cfg.fd.n)?;
            let lattice = lattice_from(&cfg, &model, threads);
            let res = fd_solve(
                &model.generator(),
                &model.terminal(),
                &model.control_set()?,
                &time,
                model.x0,
                &lattice,
            )?;
            emit(&output, &result_csv(&res, time.dt(), None, None))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveProba {
            config,
            output,
            paths,
            seed,
            degree,
        } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let time = TimeGrid::new(model.horizon, cfg.proba.n)?;
            let pc = ProbaConfig {
                n_paths: paths.unwrap_or(cfg.proba.paths),
                seed: seed.unwrap_or(cfg.proba.seed),
                degree: degree.unwrap_or(cfg.proba.degree),
                threads,
            };
            let res = proba_solve(
                &model.generator(),
                &model.terminal(),
                &model.control_set()?,
                &time,
                model.x0,
                &pc,
            )?;
            emit(
                &output,
                &result_csv(&res, time.dt(), Some(pc.n_paths), Some(pc.seed)),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolvePde { config, output } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let time = TimeGrid::new(model.horizon, cfg.pde.n)?;
            let lattice = lattice_from(&cfg, &model, threads);
            let res = pde_split_solve(
                &model.generator(),
                &model.terminal(),
                &model.control_set()?,
                &time,
                model.x0,
                &lattice,
                SplitStepPlan {
                    order: cfg.split_order()?,
                },
            )?;
            emit(&output, &result_csv(&res, time.dt(), None, None))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveTree {
            config,
            output,
            dump,
        } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let time = TimeGrid::new(model.horizon, cfg.tree.n)?;
            let cs = model.control_set()?;
            let dx = (2.0 * cs.a_hi() * time.dt()).sqrt();
            let fam = IncrementFamily::trinomial(cs.a_hi(), time.dt(), dx)?;
            let sol = solve_tree_detailed(
                &model.generator(),
                &model.terminal(),
                &cs,
                &fam,
                &time,
                model.x0,
                cfg.tree_mode()?,
            )?;
            emit(&output, &result_csv(&sol.result, time.dt(), None, None))?;
            if let Some(path) = dump {
                dump_tree(&path, &sol)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            output,
            plot_data,
        } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let sweep = cfg.sweep.clone().ok_or_else(|| {
                SolverError::Config("config has no [sweep] section".to_string())
            })?;
            let mut schemes = Vec::new();
            for s in &sweep.schemes {
                schemes.push(match s.as_str() {
                    "fd" => Scheme::FiniteDifference,
                    "proba" => Scheme::Probabilistic,
                    "pde" => Scheme::PdeSplitting,
                    "tree" => Scheme::TreeDp,
                    other => {
                        return Err(SolverError::Config(format!(
                            "unknown scheme '{other}' (expected fd|proba|pde|tree)"
                        )))
                    }
                });
            }
            let mut spec = SweepSpec::new(model, sweep.dt.clone(), schemes);
            spec.seeds = sweep.seeds.clone();
            spec.paths = sweep.paths.unwrap_or(cfg.proba.paths);
            spec.degree = sweep.degree.unwrap_or(cfg.proba.degree);
            spec.tree_mode = cfg.tree_mode()?;
            spec.split_order = cfg.split_order()?;
            spec.threads = threads;
            let rows = run_sweep(&spec)?;
            emit(&output, &sweep_csv(&rows))?;
            match (&plot_data, &output) {
                (Some(path), _) => emit(&Some(path.clone()), &gnuplot_blocks(&rows))?,
                (None, Some(csv_path)) => {
                    let path = csv_path.with_extension("dat");
                    emit(&Some(path), &gnuplot_blocks(&rows))?;
                }
                (None, None) => {}
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateIncrements { config, output } => {
            let cfg = load(&config)?;
            let model = cfg.model_config()?;
            let cs = model.control_set()?;
            let dt = model.horizon / cfg.fd.n as f64;
            let dx = (2.0 * cs.a_hi() * dt).sqrt();
            let mut text = String::new();
            let mut all_pass = true;
            let fams = [
                IncrementFamily::trinomial(cs.a_hi(), dt, dx)?,
                IncrementFamily::gaussian(cs.a_hi(), dt)?,
                IncrementFamily::ftw(cs.a_lo(), cs.a_hi(), dt)?,
            ];
            for fam in fams {
                let report = validate_moments(&fam, &cs, 1e-10)?;
                text.push_str(&format!("# family: {}\n", report.family));
                text.push_str(&report.to_csv());
                all_pass &= report.all_pass();
            }
            emit(&output, &text)?;
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
        Command::Validate => {
            let checks = run_validation();
            print!("{}", validation_report(&checks));
            if checks.iter().all(|c| c.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn lattice_from(cfg: &FileConfig, model: &ModelConfig, threads: usize) -> LatticeConfig {
    let mut lattice = LatticeConfig::for_model(model).with_threads(threads);
    if let Some(v) = cfg.fd.x_half_span_stds {
        lattice.x_half_span_stds = v;
    }
    lattice.dx_override = cfg.fd.dx;
    lattice.dm_override = cfg.fd.dm;
    lattice.m_half_span_override = cfg.fd.m_half_span;
    lattice
}

fn dump_tree(path: &Path, sol: &twobsde::tree::TreeSolution) -> Result<(), SolverError> {
    let mut text = String::from("k,node,x,m,value,control_index\n");
    for (k, level) in sol.values.iter().enumerate() {
        for (idx, &v) in level.iter().enumerate() {
            let (x, m) = sol.states[k][idx];
            let control = sol
                .policy
                .get(k)
                .and_then(|p| p.get(idx))
                .map(|c| c.to_string())
                .unwrap_or_default();
            text.push_str(&format!("{k},{idx},{x},{m},{v},{control}\n"));
        }
    }
    std::fs::write(path, text)
        .map_err(|e| SolverError::Config(format!("cannot write {}: {e}", path.display())))
}
