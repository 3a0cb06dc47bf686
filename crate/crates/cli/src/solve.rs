//! One solver run on a loaded instance, with its per-iteration trace.

use std::time::Instant;

use anyhow::{bail, Result};
use serde::Deserialize;
use splitadmm::diagnostics;
use splitadmm::model::{Algorithm, IterateState, Mode, SeparableProblem, SolverConfig};
use splitadmm::problems::{bp, lvggms, rpca};
use splitadmm::solvers::{self, IterRecord, Status, StoppingRule};

use crate::instance::Instance;

/// Which table of penalty defaults to use when `--beta` is not given.
#[derive(clap::ValueEnum, Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Fixed values tuned on large instances.
    #[default]
    Standard,
    /// Values rescaled to the instance size; better on small instances.
    Scaled,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub algorithm: Algorithm,
    /// Number of BP column groups; other problems have a fixed block count.
    pub m: Option<usize>,
    pub mode: Option<Mode>,
    pub beta: Option<f64>,
    pub preset: Preset,
    pub tau_safety: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolveOptions {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            m: None,
            mode: None,
            beta: None,
            preset: Preset::Standard,
            tau_safety: 1.01,
            tol: 1e-3,
            max_iter: 2000,
        }
    }
}

pub fn beta_preset(inst: &Instance, algorithm: Algorithm, preset: Preset) -> f64 {
    match (inst, preset) {
        (Instance::Bp(b), Preset::Standard) => bp::standard_beta(algorithm, b),
        (Instance::Bp(b), Preset::Scaled) => bp::scaled_beta(algorithm, b),
        (Instance::Lvggms { .. }, Preset::Standard) => lvggms::standard_beta(algorithm),
        (Instance::Lvggms { .. }, Preset::Scaled) => lvggms::scaled_beta(algorithm),
        (Instance::Rpca(r), Preset::Standard) => rpca::standard_beta(algorithm, &r.m),
        (Instance::Rpca(r), Preset::Scaled) => rpca::scaled_beta(algorithm, &r.m),
    }
}

/// The separable problem, the number of blocks, and whether every block has
/// an exact update.
pub fn build(inst: &Instance, m: Option<usize>) -> Result<(SeparableProblem, usize, bool)> {
    Ok(match inst {
        Instance::Bp(b) => {
            let m = m.unwrap_or(b.p());
            (bp::bp_build(b, m)?, m, m == b.p())
        }
        Instance::Lvggms { inst, .. } => {
            reject_m(m, 3)?;
            (lvggms::lvggms_build(inst)?, 3, true)
        }
        Instance::Rpca(r) => {
            reject_m(m, 3)?;
            (rpca::rpca_build(r)?, 3, true)
        }
    })
}

fn reject_m(m: Option<usize>, fixed: usize) -> Result<()> {
    match m {
        Some(m) if m != fixed => bail!("this problem has exactly {fixed} blocks; --m {m} does not apply"),
        _ => Ok(()),
    }
}

pub fn config(inst: &Instance, opts: &SolveOptions, exact_capable: bool) -> SolverConfig {
    let mode = opts.mode.unwrap_or(if exact_capable { Mode::Exact } else { Mode::Inexact });
    let beta = opts.beta.unwrap_or_else(|| beta_preset(inst, opts.algorithm, opts.preset));
    let stop = match inst {
        Instance::Bp(b) => match &b.x_planted {
            Some(x) => StoppingRule::RelativeError { tol: opts.tol, reference: x.clone() },
            None => StoppingRule::Residual { tol: opts.tol },
        },
        Instance::Lvggms { .. } => StoppingRule::Lvggms { tol: opts.tol },
        Instance::Rpca(_) => StoppingRule::Rpca { tol: opts.tol },
    };
    SolverConfig::new(opts.algorithm, mode, beta)
        .with_tau_safety(opts.tau_safety)
        .with_max_iter(opts.max_iter)
        .with_stop(stop)
}

/// Error against the planted solution: all of `x` for BP, the low-rank
/// block for RPCA. LVGGMS has none.
fn truth_error(inst: &Instance, state: &IterateState, rec: &IterRecord) -> Option<f64> {
    match inst {
        Instance::Bp(_) => rec.rel_error,
        Instance::Rpca(r) => {
            r.planted.as_ref().map(|(l, _)| diagnostics::relative_error_guarded(&state.x[0], l.as_slice()))
        }
        Instance::Lvggms { .. } => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub residual: f64,
    pub rel_error: Option<f64>,
    pub elapsed: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub m: usize,
    pub mode: Mode,
    pub beta: f64,
    pub status: Status,
    pub iterations: usize,
    pub objective: f64,
    pub time: f64,
    pub error: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub state: IterateState,
}

pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<Outcome> {
    let (problem, m, exact_capable) = build(inst, opts.m)?;
    let cfg = config(inst, opts, exact_capable);
    if cfg.mode == Mode::Exact && !exact_capable {
        bail!("{m} column groups have no exact update; use --mode inexact or one group per column");
    }
    let start = Instant::now();
    let mut trace = Vec::new();
    let mut obs = |s: &IterateState, r: &IterRecord| {
        trace.push(TraceRow {
            k: r.k,
            objective: r.objective,
            residual: r.residual,
            rel_error: truth_error(inst, s, r),
            elapsed: start.elapsed().as_secs_f64(),
        });
    };
    let (state, report) = solvers::run(&problem, &cfg, Some(&mut obs))?;
    let time = start.elapsed().as_secs_f64();
    let last = report.last();
    let error = match inst {
        Instance::Bp(_) => last.rel_error,
        _ => trace.last().and_then(|t| t.rel_error),
    };
    Ok(Outcome {
        algorithm: opts.algorithm,
        m,
        mode: cfg.mode,
        beta: cfg.beta,
        status: report.status,
        iterations: report.iterations(),
        objective: last.objective,
        time,
        error,
        trace,
        state,
    })
}

pub fn trace_csv(trace: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "objective", "residual", "rel_error", "elapsed"])?;
    for t in trace {
        w.write_record([
            t.k.to_string(),
            format!("{:e}", t.objective),
            format!("{:e}", t.residual),
            t.rel_error.map_or_else(String::new, |e| format!("{e:e}")),
            format!("{:.6}", t.elapsed),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
