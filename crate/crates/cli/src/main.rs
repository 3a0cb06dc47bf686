use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use splitadmm::model::{Algorithm, Mode};
use splitadmm::solvers::Status;
use splitadmm_cli::bench::{self, RunSpec};
use splitadmm_cli::check::{self, CHECK_ITERS};
use splitadmm_cli::instance::{BpSpec, LvggmsSpec, ProblemSpec, RpcaSpec};
use splitadmm_cli::matfile::write_atomic;
use splitadmm_cli::solve::{self, trace_csv, Outcome};
use splitadmm_cli::{exit, Instance, Preset, SolveOptions};

#[derive(Parser)]
#[command(name = "splitadmm", version, about = "Splitting ADMM solvers: instances, runs, benchmark grids, checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance with its ground truth.
    Gen {
        #[command(subcommand)]
        problem: GenProblem,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "instance", global = true)]
        out: PathBuf,
    },
    /// Solve one instance and print the summary row.
    Solve {
        /// Instance directory (or its instance.txt).
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        /// Per-iteration trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a grid described by a TOML spec and print the summary table.
    Bench {
        spec: PathBuf,
        /// Output directory; overrides the spec's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a fixed number of iterations and check bounds and identities.
    Check {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = CHECK_ITERS)]
        max_iter: usize,
        /// CSV of the bound check (K, gap, bound, violated).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenProblem {
    Bp(BpSpec),
    Lvggms(LvggmsSpec),
    Rpca(RpcaSpec),
}

#[derive(Args)]
struct SolverArgs {
    /// multadmm, psadmm or dsadmm.
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    /// Number of column groups (BP only); defaults to one per column.
    #[arg(long)]
    m: Option<usize>,
    /// Defaults to exact when every block has an exact update.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Penalty; overrides the preset.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Preset::Standard)]
    preset: Preset,
    #[arg(long, default_value_t = 1.01)]
    tau_safety: f64,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Exact,
    Inexact,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Text,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: splitadmm::error::Error| e.to_string())
}

impl SolverArgs {
    fn options(&self, tol: f64, max_iter: usize) -> SolveOptions {
        SolveOptions {
            algorithm: self.algo,
            m: self.m,
            mode: self.mode.map(|m| match m {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Inexact => Mode::Inexact,
            }),
            beta: self.beta,
            preset: self.preset,
            tau_safety: self.tau_safety,
            tol,
            max_iter,
        }
    }
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Converged => exit::CONVERGED,
        Status::MaxIter => exit::MAX_ITER,
        Status::NumericFailure => exit::NUMERIC_FAILURE,
    }
}

fn summary(out: &Outcome, format: Format) -> String {
    let err = out.error.map_or_else(String::new, |e| format!("{e:e}"));
    let status = match out.status {
        Status::Converged => "converged",
        Status::MaxIter => "max-iter",
        Status::NumericFailure => "numeric-failure",
    };
    match format {
        Format::Csv => format!(
            "algorithm,m,mode,beta,status,iter,obj,time,error\n{},{},{:?},{:e},{status},{},{:e},{:.6},{err}\n",
            out.algorithm, out.m, out.mode, out.beta, out.iterations, out.objective, out.time
        ),
        Format::Text => format!(
            "{:<10} {:>6} {:>9} {:>10} {:>15} {:>9} {:>10}\n{:<10} {:>6} {:>9} {:>10} {:>15.6e} {:>9.3} {:>10}\n",
            "algorithm",
            "m",
            "mode",
            "Iter",
            "Obj",
            "Time",
            "Error",
            out.algorithm.name(),
            out.m,
            format!("{:?}", out.mode).to_lowercase(),
            format!("{}{}", out.iterations, if out.status == Status::Converged { "" } else { "~" }),
            out.objective,
            out.time,
            out.error.map_or_else(|| "-".into(), |e| format!("{e:.3e}")),
        ),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen { problem, seed, out } => {
            let spec = match problem {
                GenProblem::Bp(s) => ProblemSpec::Bp(s),
                GenProblem::Lvggms(s) => ProblemSpec::Lvggms(s),
                GenProblem::Rpca(s) => ProblemSpec::Rpca(s),
            };
            let inst = spec.generate(seed)?;
            inst.save(&out, Some(seed))?;
            println!("{} seed={seed} -> {}", inst.digest(), out.display());
            Ok(exit::CONVERGED)
        }
        Command::Solve { instance, solver, tol, max_iter, out, format } => {
            let inst = Instance::load(&instance)?;
            let outcome = solve::solve(&inst, &solver.options(tol, max_iter))?;
            if let Some(path) = out {
                write_atomic(&path, trace_csv(&outcome.trace)?.as_bytes())?;
            }
            print!("{}", summary(&outcome, format));
            Ok(status_code(outcome.status))
        }
        Command::Bench { spec, out, format } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let run_spec = RunSpec::from_toml(&text).with_context(|| format!("parsing {}", spec.display()))?;
            let rows = bench::run_grid(&run_spec)?;
            if let Some(dir) = out.or(run_spec.out.clone()) {
                bench::write_outputs(&dir, &rows)?;
            }
            match format {
                Format::Csv => print!("{}", bench::summary_csv(&rows)?),
                Format::Text => print!("{}", bench::summary_text(&rows)),
            }
            Ok(exit::CONVERGED)
        }
        Command::Check { instance, solver, max_iter, out } => {
            let inst = Instance::load(&instance)?;
            let report = check::check(&inst, &solver.options(1e-3, max_iter))?;
            if let (Some(path), Some(bound)) = (out, &report.bound) {
                write_atomic(&path, bound.to_csv().as_bytes())?;
            }
            print!("{}", report.text());
            Ok(if report.clean() { exit::CONVERGED } else { exit::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::CONVERGED });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FAILURE)
        }
    }
}
