//! The three ADMM iterations and the driver loop around them.
//!
//! Each step function advances an [`IterateState`] by one iteration in place,
//! following the update order of its method:
//!
//! * multi-block: `x_1, …, x_m` (Gauss-Seidel), then `λ`;
//! * primal split: `y`, then all `x_i`, then the multipliers `λ_i`;
//! * dual split: `λ`, then all `x_i`, then the copies `λ_i`, then `t_i`.

use std::sync::Arc;
use std::time::Instant;

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::model::{
    objective, primal_residual, Algorithm, Block, IterateState, LinearOp, Mode, SeparableProblem, SolverConfig,
    Stacked, SumZeroIndicator,
};
use crate::numkern;
use crate::prox;

/// When to stop iterating.
///
/// Every rule except [`StoppingRule::Never`] also requires the relative
/// primal residual `‖Σ A_i x_i − b‖ / max(1, ‖b‖)` to be within the same
/// tolerance.
#[derive(Clone, Debug, PartialEq)]
pub enum StoppingRule {
    /// Run to the iteration cap.
    Never,
    /// Relative primal residual only.
    Residual { tol: f64 },
    /// `‖x − x_ref‖ / ‖x_ref‖` against a known solution, with the blocks
    /// laid end to end.
    RelativeError { tol: f64, reference: Vec<f64> },
    /// Largest relative change of `(R, S, L)` or relative infeasibility; see
    /// [`diagnostics::lvggms_metric`].
    Lvggms { tol: f64 },
    /// Largest relative change of `(L, S)` or of the objective; see
    /// [`diagnostics::rpca_metric`].
    Rpca { tol: f64 },
}

impl StoppingRule {
    pub fn tolerance(&self) -> Option<f64> {
        match self {
            StoppingRule::Never => None,
            StoppingRule::Residual { tol }
            | StoppingRule::RelativeError { tol, .. }
            | StoppingRule::Lvggms { tol }
            | StoppingRule::Rpca { tol } => Some(*tol),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.tolerance() {
            Some(tol) if !(tol > 0.0) => Err(Error::Argument(format!("tolerance must be positive, got {tol}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    NumericFailure,
}

/// Metrics for one iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub objective: f64,
    /// `‖Σ A_i x_i − b‖`.
    pub residual: f64,
    /// `residual / max(1, ‖b‖)`.
    pub rel_residual: f64,
    /// Relative error against the stopping rule's reference, when it has one.
    pub rel_error: Option<f64>,
    /// Value the stopping rule compared against its tolerance.
    pub stop_metric: Option<f64>,
    /// Seconds since the solve started.
    pub elapsed: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub algorithm: Algorithm,
    pub mode: Mode,
    /// One record per iterate, starting with `k = 0`.
    pub records: Vec<IterRecord>,
    /// Copies of every iterate (including `k = 0`) when requested.
    pub iterates: Vec<IterateState>,
    pub status: Status,
    /// The proximal weights actually used (empty in exact mode).
    pub tau: Vec<f64>,
    pub elapsed: f64,
}

impl ConvergenceReport {
    /// Index of the last completed iteration.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("report always holds the initial record")
    }
}

fn lambda_mut(state: &mut IterateState) -> Result<&mut Vec<f64>> {
    state.lambda.as_mut().ok_or_else(|| Error::Argument("state has no global multiplier".into()))
}

fn copies_mut(field: &mut Option<Vec<Vec<f64>>>, what: &str) -> Result<Vec<Vec<f64>>> {
    field.take().ok_or_else(|| Error::Argument(format!("state has no {what}")))
}

fn check_tau(config: &SolverConfig, problem: &SeparableProblem) -> Result<()> {
    if config.mode == Mode::Inexact && config.tau.len() != problem.m() {
        return Err(Error::Argument("inexact mode needs one τ per block; see SolverConfig::with_default_tau".into()));
    }
    Ok(())
}

/// One proximal-gradient step on `f(x) + (ρ/2)‖A x − target‖²` with weight
/// `τ`: `prox_{f/τ}(x − (ρ/τ) Aᵀ(A x − target))`.
fn linearized_step(block: &Block, x: &[f64], target: &[f64], rho: f64, tau: f64) -> Result<Vec<f64>> {
    let ax = block.op.apply(x);
    let r: Vec<f64> = ax.iter().zip(target).map(|(a, t)| a - t).collect();
    let g = block.op.apply_t(&r);
    let step = rho / tau;
    let anchor: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
    block.objective.prox(&anchor, 1.0 / tau)
}

/// Blocks with fewer than this many members get their partial sums formed
/// directly rather than by downdating a running total.
const DIRECT_SUM_BLOCKS: usize = 4;

/// One Gauss-Seidel sweep over all blocks followed by the multiplier update.
pub fn alg1_step(problem: &SeparableProblem, state: &mut IterateState, config: &SolverConfig) -> Result<()> {
    if config.mode != Mode::Exact {
        return Err(Error::Argument("the multi-block method has no inexact mode".into()));
    }
    let beta = config.beta;
    let b = problem.rhs();
    let m = problem.m();
    let mut ax: Vec<Vec<f64>> = problem.blocks().iter().zip(&state.x).map(|(blk, x)| blk.op.apply(x)).collect();
    let mut total = vec![0.0; problem.ell()];
    for v in &ax {
        numkern_axpy(&mut total, 1.0, v);
    }
    let lambda = lambda_mut(state)?.clone();
    let shifted: Vec<f64> = b.iter().zip(&lambda).map(|(bi, li)| bi + li / beta).collect();
    for i in 0..m {
        let blk = problem.block(i);
        let others: Vec<f64> = if m < DIRECT_SUM_BLOCKS {
            let mut s = vec![0.0; problem.ell()];
            for (j, v) in ax.iter().enumerate() {
                if j != i {
                    numkern_axpy(&mut s, 1.0, v);
                }
            }
            s
        } else {
            total.iter().zip(&ax[i]).map(|(t, a)| t - a).collect()
        };
        let target: Vec<f64> = shifted.iter().zip(&others).map(|(s, o)| s - o).collect();
        let xi = blk.objective.coupled_argmin(&blk.op, &target, beta)?;
        let new_ax = blk.op.apply(&xi);
        for ((t, new), old) in total.iter_mut().zip(&new_ax).zip(&ax[i]) {
            *t += new - old;
        }
        ax[i] = new_ax;
        state.x[i] = xi;
    }
    let mut sum = vec![0.0; problem.ell()];
    for v in &ax {
        numkern_axpy(&mut sum, 1.0, v);
    }
    let lambda = lambda_mut(state)?;
    for ((l, s), bi) in lambda.iter_mut().zip(&sum).zip(b) {
        *l -= beta * (s - bi);
    }
    state.k += 1;
    Ok(())
}

fn numkern_axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// One primal-splitting iteration: `y` by projection onto `{Σ y_i = 0}`, the
/// block updates, then the multipliers `λ_i`.
pub fn psadmm_step(problem: &SeparableProblem, state: &mut IterateState, config: &SolverConfig) -> Result<()> {
    check_tau(config, problem)?;
    let beta = config.beta;
    let m = problem.m();
    let b_share: Vec<f64> = problem.rhs().iter().map(|v| v / m as f64).collect();
    let mut lam = copies_mut(&mut state.lambda_copies, "primal-split multipliers")?;

    let anchors: Vec<Vec<f64>> = problem
        .blocks()
        .iter()
        .zip(&state.x)
        .zip(&lam)
        .map(|((blk, x), l)| {
            blk.op.apply(x).iter().zip(&b_share).zip(l).map(|((a, bs), li)| a - bs - li / beta).collect()
        })
        .collect();
    let y = prox::project_sum_zero(&anchors)?;

    for (i, blk) in problem.blocks().iter().enumerate() {
        let target: Vec<f64> =
            b_share.iter().zip(&y[i]).zip(&lam[i]).map(|((bs, yi), li)| bs + yi + li / beta).collect();
        let xi = match config.mode {
            Mode::Exact => blk.objective.coupled_argmin(&blk.op, &target, beta),
            Mode::Inexact => linearized_step(blk, &state.x[i], &target, beta, config.tau[i]),
        };
        let xi = match xi {
            Ok(v) => v,
            Err(e) => {
                state.lambda_copies = Some(lam);
                return Err(e);
            }
        };
        let ax = blk.op.apply(&xi);
        for (((l, a), bs), yi) in lam[i].iter_mut().zip(&ax).zip(&b_share).zip(&y[i]) {
            *l -= beta * (a - bs - yi);
        }
        state.x[i] = xi;
    }
    state.y = Some(y);
    state.lambda_copies = Some(lam);
    state.k += 1;
    Ok(())
}

/// One dual-splitting iteration: the consensus multiplier `λ` in closed
/// form, the block updates, the copies `λ_i`, then `t_i`.
pub fn dsadmm_step(problem: &SeparableProblem, state: &mut IterateState, config: &SolverConfig) -> Result<()> {
    check_tau(config, problem)?;
    let beta = config.beta;
    let m = problem.m() as f64;
    let mut copies = copies_mut(&mut state.lambda_copies, "dual copies")?;
    let mut t = match copies_mut(&mut state.t, "dual-split multipliers") {
        Ok(t) => t,
        Err(e) => {
            state.lambda_copies = Some(copies);
            return Err(e);
        }
    };

    let mut lambda: Vec<f64> = problem.rhs().to_vec();
    for (ti, li) in t.iter().zip(&copies) {
        for ((acc, tv), lv) in lambda.iter_mut().zip(ti).zip(li) {
            *acc += tv + beta * lv;
        }
    }
    lambda.iter_mut().for_each(|v| *v /= m * beta);

    let mut result = Ok(());
    for (i, blk) in problem.blocks().iter().enumerate() {
        let target: Vec<f64> = lambda.iter().zip(&t[i]).map(|(l, tv)| beta * l - tv).collect();
        let xi = match config.mode {
            Mode::Exact => blk.objective.coupled_argmin(&blk.op, &target, 1.0 / beta),
            Mode::Inexact => linearized_step(blk, &state.x[i], &target, 1.0 / beta, config.tau[i]),
        };
        let xi = match xi {
            Ok(v) => v,
            Err(e) => {
                result = Err(e);
                break;
            }
        };
        let ax = blk.op.apply(&xi);
        for (((c, l), tv), a) in copies[i].iter_mut().zip(&lambda).zip(&t[i]).zip(&ax) {
            *c = l - tv / beta - a / beta;
        }
        for ((tv, l), c) in t[i].iter_mut().zip(&lambda).zip(&copies[i]) {
            *tv -= beta * (l - c);
        }
        state.x[i] = xi;
    }
    state.lambda_copies = Some(copies);
    state.t = Some(t);
    result?;
    *lambda_mut(state)? = lambda;
    state.k += 1;
    Ok(())
}

/// Dispatches to the step function of `config.algorithm`.
pub fn step(problem: &SeparableProblem, state: &mut IterateState, config: &SolverConfig) -> Result<()> {
    match config.algorithm {
        Algorithm::MultiBlock => alg1_step(problem, state, config),
        Algorithm::PrimalSplit => psadmm_step(problem, state, config),
        Algorithm::DualSplit => dsadmm_step(problem, state, config),
    }
}

/// Returns a copy of `config` ready to run: `τ` filled in for the inexact
/// modes and everything validated.
pub fn prepare(problem: &SeparableProblem, config: &SolverConfig) -> Result<SolverConfig> {
    let mut cfg = config.clone();
    if cfg.mode == Mode::Inexact && cfg.tau.is_empty() && cfg.algorithm != Algorithm::MultiBlock {
        cfg = cfg.with_default_tau(problem)?;
    }
    cfg.validate(problem)?;
    Ok(cfg)
}

pub type Observer<'a> = &'a mut dyn FnMut(&IterateState, &IterRecord);

/// Runs from the all-zero state.
pub fn run(
    problem: &SeparableProblem,
    config: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<(IterateState, ConvergenceReport)> {
    run_from(problem, config, IterateState::zeros(problem, config.algorithm), observer)
}

/// Runs from a given state until the stopping rule fires, the iteration
/// cap is hit, or an iterate stops being finite.
///
/// Errors are reserved for invalid configurations and blocks that cannot
/// perform the requested update; numeric trouble ends the run with
/// [`Status::NumericFailure`] and the partial report.
pub fn run_from(
    problem: &SeparableProblem,
    config: &SolverConfig,
    initial: IterateState,
    mut observer: Option<Observer<'_>>,
) -> Result<(IterateState, ConvergenceReport)> {
    let cfg = prepare(problem, config)?;
    problem.check_conformal(&initial.x)?;
    let start = Instant::now();
    let b_scale = numkern::norm2(problem.rhs()).max(1.0);
    let tol = cfg.stop.tolerance();

    let mut state = initial;
    let measure = |state: &IterateState, prev: Option<(&IterateState, f64)>| -> Result<IterRecord> {
        let obj = objective(problem, &state.x)?;
        let residual = primal_residual(problem, &state.x)?;
        let rel_error = match &cfg.stop {
            StoppingRule::RelativeError { reference, .. } => {
                let x = state.x_flat();
                if x.len() != reference.len() {
                    return Err(Error::Dimension("reference solution length".into()));
                }
                Some(diagnostics::relative_error_guarded(&x, reference))
            }
            _ => None,
        };
        let stop_metric = match (&cfg.stop, prev) {
            (StoppingRule::Never, _) => None,
            (StoppingRule::Residual { .. }, _) => Some(residual / b_scale),
            (StoppingRule::RelativeError { .. }, _) => rel_error,
            (StoppingRule::Lvggms { .. }, Some((p, _))) => Some(diagnostics::lvggms_metric(&p.x, &state.x)),
            (StoppingRule::Rpca { .. }, Some((p, f_prev))) => {
                Some(diagnostics::rpca_metric(&p.x, &state.x, f_prev, obj))
            }
            (_, None) => None,
        };
        Ok(IterRecord {
            k: state.k,
            objective: obj,
            residual,
            rel_residual: residual / b_scale,
            rel_error,
            stop_metric,
            elapsed: start.elapsed().as_secs_f64(),
        })
    };

    let first = measure(&state, None)?;
    if let Some(obs) = observer.as_deref_mut() {
        obs(&state, &first);
    }
    let mut records = vec![first];
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(state.clone());
    }
    let mut status = Status::MaxIter;

    for _ in 0..cfg.max_iter {
        let prev = state.clone();
        step(problem, &mut state, &cfg)?;
        if !state.is_finite() {
            records.push(IterRecord {
                k: state.k,
                objective: f64::NAN,
                residual: f64::NAN,
                rel_residual: f64::NAN,
                rel_error: None,
                stop_metric: None,
                elapsed: start.elapsed().as_secs_f64(),
            });
            status = Status::NumericFailure;
            break;
        }
        let f_prev = records.last().map_or(f64::NAN, |r| r.objective);
        let rec = measure(&state, Some((&prev, f_prev)))?;
        if !rec.objective.is_finite() && !rec.objective.is_infinite() {
            records.push(rec);
            status = Status::NumericFailure;
            break;
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs(&state, &rec);
        }
        let done = match (tol, rec.stop_metric) {
            (Some(tol), Some(metric)) => metric <= tol && rec.rel_residual <= tol,
            _ => false,
        };
        records.push(rec);
        if cfg.record_iterates {
            iterates.push(state.clone());
        }
        if done {
            status = Status::Converged;
            break;
        }
    }

    let report = ConvergenceReport {
        algorithm: cfg.algorithm,
        mode: cfg.mode,
        records,
        iterates,
        status,
        tau: if cfg.mode == Mode::Inexact { cfg.tau.clone() } else { Vec::new() },
        elapsed: start.elapsed().as_secs_f64(),
    };
    Ok((state, report))
}

/// `x̃^K = (1/K) Σ_{k=1}^K x^k` from a report that recorded its iterates.
pub fn ergodic_average(report: &ConvergenceReport, k: usize) -> Result<Vec<Vec<f64>>> {
    let available = report.iterates.len().saturating_sub(1);
    if k == 0 || k > available {
        return Err(Error::Argument(format!("ergodic average over {k} iterates, but {available} were recorded")));
    }
    let mut avg: Vec<Vec<f64>> = report.iterates[1].x.iter().map(|v| vec![0.0; v.len()]).collect();
    for it in &report.iterates[1..=k] {
        for (a, x) in avg.iter_mut().zip(&it.x) {
            numkern_axpy(a, 1.0, x);
        }
    }
    let inv = 1.0 / k as f64;
    avg.iter_mut().flatten().for_each(|v| *v *= inv);
    Ok(avg)
}

/// The two-block problem behind the primal split: variables `(y, x)` with
/// `−y_i + A_i x_i = b/m` for every `i`, and `Σ y_i = 0` folded into the
/// first block.
///
/// Running the multi-block method on it reproduces the exact primal split.
pub fn reformulate_primal_split(problem: &SeparableProblem) -> Result<SeparableProblem> {
    let m = problem.m();
    let ell = problem.ell();
    let rhs: Vec<f64> = (0..m).flat_map(|_| problem.rhs().iter().map(move |v| v / m as f64)).collect();
    let y_block = Block::new(SumZeroIndicator { copies: m, len: ell }, LinearOp::Scaled { scale: -1.0, dim: m * ell });
    let x_block = Block {
        objective: Arc::new(Stacked(problem.blocks().iter().map(|b| b.objective.clone()).collect())),
        op: LinearOp::BlockDiag(problem.blocks().iter().map(|b| b.op.clone()).collect()),
    };
    SeparableProblem::new(vec![y_block, x_block], rhs)
}
