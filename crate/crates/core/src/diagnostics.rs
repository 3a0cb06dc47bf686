//! Stopping metrics and runtime checks of the convergence guarantees.
//!
//! The bound checks compare the objective gap of the ergodic average
//! `x̃^K` with `C²/(2K)`, where the constant depends on the method:
//!
//! * primal split: `C² = Σ_i ‖λ_i⁰‖²/β + ‖x_i* − x_i⁰‖² + β‖y_i* − A_i x_i⁰ + b/m‖²`
//! * dual split: `C² = (β/2)Σ‖λ_i⁰‖² + (1/2β)Σ‖t_i* − t_i⁰‖² + ½Σ‖x_i* − x_i⁰‖²_P`,
//!   with `P = 0` in exact mode and `P = τ_i I − A_iᵀA_i/β` in inexact mode.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{objective, IterateState, Mode, SeparableProblem};
use crate::numkern::norm2;
use crate::solvers::ConvergenceReport;

/// Relative slack on the bound checks.
pub const BOUND_SLACK: f64 = 1e-8;

/// Relative slack on the Lyapunov monotonicity check.
pub const LYAPUNOV_SLACK: f64 = 1e-12;

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn guard(d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        d
    }
}

/// `‖x − x_ref‖ / ‖x_ref‖`.
pub fn relative_error(x: &[f64], x_ref: &[f64]) -> Result<f64> {
    if x.len() != x_ref.len() {
        return Err(Error::Dimension(format!("{} vs {} entries", x.len(), x_ref.len())));
    }
    let denom = norm2(x_ref);
    if denom == 0.0 {
        return Err(Error::Argument("relative error against a zero reference".into()));
    }
    Ok(diff_norm(x, x_ref) / denom)
}

/// As [`relative_error`] but with denominator 1 for a zero reference.
pub fn relative_error_guarded(x: &[f64], x_ref: &[f64]) -> f64 {
    diff_norm(x, x_ref) / guard(norm2(x_ref))
}

/// LVGGMS stopping metric on consecutive `(R, S, L)` iterates: the largest
/// of the three relative changes and
/// `‖R − S + L‖ / max{1, ‖R^k‖, ‖S^k‖, ‖L^k‖}`.
///
/// Zero norms in the change denominators are replaced by 1.
pub fn lvggms_metric(prev: &[Vec<f64>], curr: &[Vec<f64>]) -> f64 {
    assert_eq!(prev.len(), 3, "expected (R, S, L) blocks");
    assert_eq!(curr.len(), 3, "expected (R, S, L) blocks");
    let change = |i: usize| diff_norm(&curr[i], &prev[i]) / guard(norm2(&prev[i]));
    let infeas: f64 =
        curr[0].iter().zip(&curr[1]).zip(&curr[2]).map(|((r, s), l)| (r - s + l).powi(2)).sum::<f64>().sqrt();
    let scale = prev.iter().map(|v| norm2(v)).fold(1.0, f64::max);
    change(0).max(change(1)).max(change(2)).max(infeas / scale)
}

pub fn lvggms_stop(prev: &[Vec<f64>], curr: &[Vec<f64>], eps: f64) -> bool {
    lvggms_metric(prev, curr) <= eps
}

/// RPCA stopping metric on consecutive `(L, S, Z)` iterates and their
/// objective values: the largest of `‖ΔL‖/(1 + ‖L^k‖)`, `‖ΔS‖/(1 + ‖S^k‖)`
/// and `|Δf|/|f^k|`, the last falling back to `|Δf|` when `f^k = 0`.
pub fn rpca_metric(prev: &[Vec<f64>], curr: &[Vec<f64>], f_prev: f64, f_curr: f64) -> f64 {
    assert!(prev.len() >= 2 && curr.len() >= 2, "expected (L, S, …) blocks");
    let change = |i: usize| diff_norm(&curr[i], &prev[i]) / (1.0 + norm2(&prev[i]));
    let obj = (f_curr - f_prev).abs() / guard(f_prev.abs());
    change(0).max(change(1)).max(obj)
}

pub fn rpca_stop(prev: &[Vec<f64>], curr: &[Vec<f64>], f_prev: f64, f_curr: f64, eps: f64) -> bool {
    rpca_metric(prev, curr, f_prev, f_curr) <= eps
}

/// Outcome of an ergodic bound check.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheckResult {
    /// The constant `C²` of the bound `C²/(2K)`.
    pub constant: f64,
    pub ks: Vec<usize>,
    pub gaps: Vec<f64>,
    pub bounds: Vec<f64>,
    /// `(K, gap, bound)` for every `K` with `gap > bound + slack`.
    pub violations: Vec<(usize, f64, f64)>,
}

impl BoundCheckResult {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// Rows `K,gap,bound,violated` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,gap,bound,violated\n");
        for ((k, g), b) in self.ks.iter().zip(&self.gaps).zip(&self.bounds) {
            let violated = self.violations.iter().any(|v| v.0 == *k);
            let _ = writeln!(out, "{k},{g:.17e},{b:.17e},{violated}");
        }
        out
    }
}

fn check_reference(problem: &SeparableProblem, x_star: &[Vec<f64>]) -> Result<()> {
    if x_star.is_empty() {
        return Err(Error::Argument("bound check needs a reference solution".into()));
    }
    problem.check_conformal(x_star)
}

fn initial_state(report: &ConvergenceReport) -> Result<&IterateState> {
    report.iterates.first().ok_or_else(|| Error::Argument("bound check needs a report with recorded iterates".into()))
}

fn ergodic_gaps(
    report: &ConvergenceReport,
    problem: &SeparableProblem,
    theta_star: f64,
    constant: f64,
) -> Result<BoundCheckResult> {
    let slack = BOUND_SLACK * (1.0 + theta_star.abs());
    let mut sums: Vec<Vec<f64>> = problem.block_dims().into_iter().map(|n| vec![0.0; n]).collect();
    let mut result =
        BoundCheckResult { constant, ks: Vec::new(), gaps: Vec::new(), bounds: Vec::new(), violations: Vec::new() };
    for (idx, it) in report.iterates.iter().enumerate().skip(1) {
        for (s, x) in sums.iter_mut().zip(&it.x) {
            for (a, v) in s.iter_mut().zip(x) {
                *a += v;
            }
        }
        let k = idx as f64;
        let avg: Vec<Vec<f64>> = sums.iter().map(|s| s.iter().map(|v| v / k).collect()).collect();
        let gap = objective(problem, &avg)? - theta_star;
        let bound = constant / (2.0 * k);
        if !(gap <= bound + slack) {
            result.violations.push((idx, gap, bound));
        }
        result.ks.push(idx);
        result.gaps.push(gap);
        result.bounds.push(bound);
    }
    Ok(result)
}

/// `C²` for the primal split, with `y_i* = A_i x_i* − b/m`.
///
/// The distance `x_i* − x_i⁰` is measured plainly in exact mode and in the
/// `τ_i I − β A_iᵀA_i` norm in inexact mode. The plain norm does not bound
/// the weighted one once `τ_i > 1`, and runs with large `τ_i` do cross the
/// resulting curve.
pub fn primal_bound_constant(
    problem: &SeparableProblem,
    x_star: &[Vec<f64>],
    initial: &IterateState,
    beta: f64,
    mode: Mode,
    tau: &[f64],
) -> Result<f64> {
    check_reference(problem, x_star)?;
    problem.check_conformal(&initial.x)?;
    let lambda0 = initial
        .lambda_copies
        .as_ref()
        .ok_or_else(|| Error::Argument("initial state has no primal-split multipliers".into()))?;
    if mode == Mode::Inexact && tau.len() != problem.m() {
        return Err(Error::Argument("inexact bound needs one τ per block".into()));
    }
    let mut c = 0.0;
    for (i, blk) in problem.blocks().iter().enumerate() {
        let d: Vec<f64> = x_star[i].iter().zip(&initial.x[i]).map(|(a, b)| a - b).collect();
        // y_i* − A_i x_i⁰ + b/m = A_i (x_i* − x_i⁰).
        let ad = norm2(&blk.op.apply(&d)).powi(2);
        let dist = match mode {
            Mode::Exact => norm2(&d).powi(2),
            Mode::Inexact => tau[i] * norm2(&d).powi(2) - beta * ad,
        };
        c += norm2(&lambda0[i]).powi(2) / beta + dist + beta * ad;
    }
    Ok(c)
}

/// Checks the primal-split ergodic bound at every recorded `K`. The report
/// must hold its iterates; the first one is taken as the starting point.
pub fn check_primal_bound(
    report: &ConvergenceReport,
    problem: &SeparableProblem,
    x_star: &[Vec<f64>],
    beta: f64,
) -> Result<BoundCheckResult> {
    let initial = initial_state(report)?;
    let constant = primal_bound_constant(problem, x_star, initial, beta, report.mode, &report.tau)?;
    ergodic_gaps(report, problem, objective(problem, x_star)?, constant)
}

/// `C²` for the dual split, with `t_i* = −A_i x_i*`.
pub fn dual_bound_constant(
    problem: &SeparableProblem,
    x_star: &[Vec<f64>],
    initial: &IterateState,
    beta: f64,
    mode: Mode,
    tau: &[f64],
) -> Result<f64> {
    check_reference(problem, x_star)?;
    problem.check_conformal(&initial.x)?;
    let missing = || Error::Argument("initial state has no dual-split copies".into());
    let copies0 = initial.lambda_copies.as_ref().ok_or_else(missing)?;
    let t0 = initial.t.as_ref().ok_or_else(missing)?;
    if mode == Mode::Inexact && tau.len() != problem.m() {
        return Err(Error::Argument("inexact bound needs one τ per block".into()));
    }
    let mut c = 0.0;
    for (i, blk) in problem.blocks().iter().enumerate() {
        let t_star: Vec<f64> = blk.op.apply(&x_star[i]).iter().map(|v| -v).collect();
        c += 0.5 * beta * norm2(&copies0[i]).powi(2);
        c += diff_norm(&t_star, &t0[i]).powi(2) / (2.0 * beta);
        if mode == Mode::Inexact {
            let d: Vec<f64> = x_star[i].iter().zip(&initial.x[i]).map(|(a, b)| a - b).collect();
            let weighted = tau[i] * norm2(&d).powi(2) - norm2(&blk.op.apply(&d)).powi(2) / beta;
            c += 0.5 * weighted;
        }
    }
    Ok(c)
}

/// Checks the dual-split ergodic bound at every recorded `K`.
pub fn check_dual_bound(
    report: &ConvergenceReport,
    problem: &SeparableProblem,
    x_star: &[Vec<f64>],
    beta: f64,
) -> Result<BoundCheckResult> {
    let initial = initial_state(report)?;
    let constant = dual_bound_constant(problem, x_star, initial, beta, report.mode, &report.tau)?;
    ergodic_gaps(report, problem, objective(problem, x_star)?, constant)
}

/// `V^k = Σ τ_i‖x_i^k − x_i*‖² + β Σ‖λ_i^k − λ*‖²` over the recorded
/// iterates of a dual-split run.
pub fn dsadmm_lyapunov_trace(
    report: &ConvergenceReport,
    x_star: &[Vec<f64>],
    lambda_star: &[f64],
    tau: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    if report.iterates.is_empty() {
        return Err(Error::Argument("Lyapunov trace needs recorded iterates".into()));
    }
    report
        .iterates
        .iter()
        .map(|it| {
            let copies =
                it.lambda_copies.as_ref().ok_or_else(|| Error::Argument("iterate has no dual copies".into()))?;
            if it.x.len() != x_star.len() || tau.len() != x_star.len() {
                return Err(Error::Dimension("reference, τ and iterate block counts differ".into()));
            }
            let xs: f64 = it.x.iter().zip(x_star).zip(tau).map(|((x, s), t)| t * diff_norm(x, s).powi(2)).sum();
            let ls: f64 = copies.iter().map(|c| diff_norm(c, lambda_star).powi(2)).sum();
            Ok(xs + beta * ls)
        })
        .collect()
}

/// Steps `k` with `V^k > V^{k−1} + slack·(1 + V⁰)`.
pub fn lyapunov_increases(trace: &[f64], slack: f64) -> Vec<usize> {
    let Some(&v0) = trace.first() else {
        return Vec::new();
    };
    let tol = slack * (1.0 + v0);
    trace.windows(2).enumerate().filter(|(_, w)| w[1] > w[0] + tol).map(|(k, _)| k + 1).collect()
}

/// `max_i ‖t_i + A_i x_i‖ / max(1, ‖A_i x_i‖)`; zero when the dual-split
/// multipliers equal `−A_i x_i`.
pub fn t_identity_deviation(problem: &SeparableProblem, state: &IterateState) -> Result<f64> {
    let t = state.t.as_ref().ok_or_else(|| Error::Argument("state has no dual-split multipliers".into()))?;
    problem.check_conformal(&state.x)?;
    Ok(problem
        .blocks()
        .iter()
        .zip(&state.x)
        .zip(t)
        .map(|((blk, x), ti)| {
            let ax = blk.op.apply(x);
            let dev: f64 = ax.iter().zip(ti).map(|(a, t)| (a + t).powi(2)).sum::<f64>().sqrt();
            dev / norm2(&ax).max(1.0)
        })
        .fold(0.0, f64::max))
}

/// `‖Σ y_i‖ / (1 + max_i ‖y_i‖)`; zero on the sum-zero hyperplane.
pub fn sum_zero_deviation(state: &IterateState) -> Result<f64> {
    let y = state.y.as_ref().ok_or_else(|| Error::Argument("state has no splitting variables".into()))?;
    let Some(first) = y.first() else {
        return Ok(0.0);
    };
    let mut sum = vec![0.0; first.len()];
    for yi in y {
        for (s, v) in sum.iter_mut().zip(yi) {
            *s += v;
        }
    }
    let scale = 1.0 + y.iter().map(|v| norm2(v)).fold(0.0, f64::max);
    Ok(norm2(&sum) / scale)
}
