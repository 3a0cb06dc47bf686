//! Benchmark grids: every (algorithm, m, tolerance) cell over seeded
//! repetitions, averaged into one summary row per cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use splitadmm::model::{Algorithm, Mode};
use splitadmm::solvers::Status;

use crate::instance::{Instance, ProblemSpec};
use crate::matfile::write_atomic;
use crate::solve::{solve, Preset, SolveOptions};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub algo: String,
    pub m: Option<usize>,
    pub mode: Option<String>,
    pub beta: Option<f64>,
    pub tau_safety: Option<f64>,
}

/// A benchmark grid, read from TOML.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub cells: Vec<CellSpec>,
    #[serde(default = "default_tolerances")]
    pub tolerances: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Repetition `r` uses seed `seed + r`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub preset: Preset,
    pub out: Option<PathBuf>,
}

fn default_tolerances() -> Vec<f64> {
    vec![1e-3]
}

fn one() -> usize {
    1
}

fn default_max_iter() -> usize {
    2000
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(Mode::Exact),
        "inexact" => Ok(Mode::Inexact),
        other => anyhow::bail!("unknown mode '{other}' (expected exact or inexact)"),
    }
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.repetitions >= 1, "repetitions must be at least 1");
        ensure!(!self.cells.is_empty(), "the grid has no cells");
        ensure!(!self.tolerances.is_empty(), "the grid has no tolerances");
        ensure!(self.tolerances.iter().all(|t| *t > 0.0), "tolerances must be positive");
        for c in &self.cells {
            c.options(self, 1.0)?;
        }
        Ok(())
    }
}

impl CellSpec {
    fn options(&self, spec: &RunSpec, tol: f64) -> Result<SolveOptions> {
        let algorithm: Algorithm = self.algo.parse()?;
        Ok(SolveOptions {
            algorithm,
            m: self.m,
            mode: self.mode.as_deref().map(parse_mode).transpose()?,
            beta: self.beta,
            preset: spec.preset,
            tau_safety: self.tau_safety.unwrap_or(1.01),
            tol,
            max_iter: spec.max_iter,
        })
    }
}

/// One repetition of one cell.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub seed: u64,
    pub iterations: usize,
    pub objective: f64,
    pub time: f64,
    pub error: Option<f64>,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub m: usize,
    pub tol: f64,
    pub runs: Vec<RunRow>,
}

impl SummaryRow {
    fn mean(&self, f: impl Fn(&RunRow) -> f64) -> f64 {
        self.runs.iter().map(f).sum::<f64>() / self.runs.len() as f64
    }

    pub fn iterations(&self) -> f64 {
        self.mean(|r| r.iterations as f64)
    }

    pub fn objective(&self) -> f64 {
        self.mean(|r| r.objective)
    }

    pub fn time(&self) -> f64 {
        self.mean(|r| r.time)
    }

    /// Mean error, or `None` when any run has no ground truth.
    pub fn error(&self) -> Option<f64> {
        let errs: Option<Vec<f64>> = self.runs.iter().map(|r| r.error).collect();
        errs.map(|e| e.iter().sum::<f64>() / e.len() as f64)
    }

    pub fn converged(&self) -> usize {
        self.runs.iter().filter(|r| r.status == Status::Converged).count()
    }

    /// `~` when some repetition did not converge.
    pub fn marker(&self) -> &'static str {
        if self.converged() == self.runs.len() {
            ""
        } else {
            "~"
        }
    }

    fn label(&self) -> String {
        format!("{}-m{}-tol{:e}", self.algorithm, self.m, self.tol)
    }
}

/// Worker count from `SPLITADMM_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SPLITADMM_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

pub fn run_grid(spec: &RunSpec) -> Result<Vec<SummaryRow>> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    pool.install(|| {
        let seeds: Vec<u64> = (0..spec.repetitions as u64).map(|r| spec.seed + r).collect();
        let instances: Vec<Instance> = seeds.par_iter().map(|&s| spec.problem.generate(s)).collect::<Result<_>>()?;
        let mut jobs = Vec::new();
        for (c, cell) in spec.cells.iter().enumerate() {
            for &tol in &spec.tolerances {
                for rep in 0..seeds.len() {
                    jobs.push((c, cell.options(spec, tol)?, rep));
                }
            }
        }
        let results: Vec<(usize, usize, RunRow)> = jobs
            .par_iter()
            .map(|(c, opts, rep)| {
                let out = solve(&instances[*rep], opts)
                    .with_context(|| format!("{} on seed {}", opts.algorithm, seeds[*rep]))?;
                let row = RunRow {
                    seed: seeds[*rep],
                    iterations: out.iterations,
                    objective: out.objective,
                    time: out.time,
                    error: out.error,
                    status: out.status,
                };
                Ok((*c, out.m, row))
            })
            .collect::<Result<_>>()?;
        let mut rows: Vec<SummaryRow> = Vec::new();
        for (job, (c, m, run)) in jobs.iter().zip(results) {
            let tol = job.1.tol;
            match rows.last_mut() {
                Some(last) if last.runs.len() < seeds.len() => last.runs.push(run),
                _ => rows.push(SummaryRow { algorithm: spec.cells[c].algo.parse()?, m, tol, runs: vec![run] }),
            }
        }
        Ok(rows)
    })
}

fn opt_e(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:e}"))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "m", "tol", "iter", "obj", "time", "error", "converged", "runs", "marker"])?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.m.to_string(),
            format!("{:e}", r.tol),
            format!("{:e}", r.iterations()),
            format!("{:e}", r.objective()),
            format!("{:.6}", r.time()),
            opt_e(r.error()),
            r.converged().to_string(),
            r.runs.len().to_string(),
            r.marker().to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_text(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<10} {:>6} {:>8} {:>10} {:>15} {:>9} {:>10}\n",
        "algorithm", "m", "tol", "Iter", "Obj", "Time", "Error"
    );
    for r in rows {
        let iter = format!("{:.1}{}", r.iterations(), r.marker());
        let err = r.error().map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"));
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>8.0e} {:>10} {:>15.6e} {:>9.3} {:>10}",
            r.algorithm.name(),
            r.m,
            r.tol,
            iter,
            r.objective(),
            r.time(),
            err
        );
    }
    out
}

fn cell_csv(row: &SummaryRow) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "iter", "obj", "time", "error", "status"])?;
    for r in &row.runs {
        w.write_record([
            r.seed.to_string(),
            r.iterations.to_string(),
            format!("{:e}", r.objective),
            format!("{:.6}", r.time),
            opt_e(r.error),
            format!("{:?}", r.status),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// `summary.csv`, `summary.txt` and one `cells/<label>.csv` per cell.
pub fn write_outputs(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let cells = dir.join("cells");
    fs::create_dir_all(&cells).with_context(|| format!("creating {}", cells.display()))?;
    for r in rows {
        write_atomic(&cells.join(format!("{}.csv", r.label())), cell_csv(r)?.as_bytes())?;
    }
    write_atomic(&dir.join("summary.csv"), summary_csv(rows)?.as_bytes())?;
    write_atomic(&dir.join("summary.txt"), summary_text(rows).as_bytes())
}
