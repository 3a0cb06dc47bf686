//! Measurement routines shared by the acceptance target and the focused
//! integration tests. Each returns numbers; the callers decide pass/fail.

use splitadmm::datagen::{gen_bp, gen_lvggms, gen_rpca, PortableRng, RpcaParams};
use splitadmm::diagnostics::{self, BoundCheckResult};
use splitadmm::model::{Algorithm, IterateState, Mode, SeparableProblem, SolverConfig};
use splitadmm::numkern::DenseMatrix;
use splitadmm::problems::{bp, lvggms, rpca};
use splitadmm::solvers::{self, ConvergenceReport, IterRecord, Status, StoppingRule};

/// Largest feasibility defects seen along a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Track {
    /// `Σ y_i` deviation (primal split only).
    pub sum_zero: f64,
    /// `t_i + A_i x_i` deviation over `k ≥ 1` (dual split only).
    pub t_identity: f64,
    /// Converged runs whose final relative residual exceeded the tolerance.
    pub residual_breaches: usize,
}

impl Track {
    pub fn merge(&mut self, other: Track) {
        self.sum_zero = self.sum_zero.max(other.sum_zero);
        self.t_identity = self.t_identity.max(other.t_identity);
        self.residual_breaches += other.residual_breaches;
    }
}

/// Runs a solve while measuring the feasibility invariants at every iterate.
pub fn run_tracked(problem: &SeparableProblem, cfg: &SolverConfig) -> (IterateState, ConvergenceReport, Track) {
    let mut track = Track::default();
    let alg = cfg.algorithm;
    let mut obs = |s: &IterateState, r: &IterRecord| {
        if r.k == 0 {
            return;
        }
        match alg {
            Algorithm::PrimalSplit => {
                track.sum_zero = track.sum_zero.max(diagnostics::sum_zero_deviation(s).unwrap());
            }
            Algorithm::DualSplit => {
                track.t_identity = track.t_identity.max(diagnostics::t_identity_deviation(problem, s).unwrap());
            }
            Algorithm::MultiBlock => {}
        }
    };
    let (state, report) = solvers::run(problem, cfg, Some(&mut obs)).unwrap();
    if report.status == Status::Converged {
        let tol = cfg.stop.tolerance().unwrap();
        if report.last().rel_residual > tol {
            track.residual_breaches += 1;
        }
    }
    (state, report, track)
}

pub fn split(x: &[f64], p: usize, m: usize) -> Vec<Vec<f64>> {
    bp::partition(p, m).unwrap().into_iter().map(|r| x[r].to_vec()).collect()
}

/// One run of the ergodic-bound protocol.
pub struct BoundRun {
    pub label: String,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub bound: BoundCheckResult,
    /// Steps at which the Lyapunov sequence increased (inexact dual split).
    pub lyapunov_increases: Option<usize>,
    pub track: Track,
}

impl BoundRun {
    pub fn worst_ratio(&self) -> f64 {
        self.bound.gaps.iter().zip(&self.bound.bounds).map(|(g, b)| g / b).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const BOUND_ITERS: usize = 300;

/// BP `n = 20, p = 60`, 6% sparsity: both splitting methods over 300
/// iterations, exact and inexact on the coordinate split and inexact on
/// two blocks, with the standard penalties.
pub fn bound_runs(seed: u64) -> Vec<BoundRun> {
    let inst = gen_bp(20, 60, 0.06, &mut PortableRng::new(seed)).unwrap();
    let (x_ref, lambda_ref) = bp::reference_solution(&inst, 1e-13, 500_000).unwrap();
    let mut out = Vec::new();
    for m in [60, 2] {
        let problem = bp::bp_build(&inst, m).unwrap();
        let x_star = split(&x_ref, 60, m);
        for alg in [Algorithm::PrimalSplit, Algorithm::DualSplit] {
            for mode in [Mode::Exact, Mode::Inexact] {
                if mode == Mode::Exact && m != 60 {
                    continue;
                }
                let beta = bp::standard_beta(alg, &inst);
                let cfg = SolverConfig::new(alg, mode, beta).with_max_iter(BOUND_ITERS).record_iterates(true);
                let (_, report, track) = run_tracked(&problem, &cfg);
                let bound = match alg {
                    Algorithm::PrimalSplit => diagnostics::check_primal_bound(&report, &problem, &x_star, beta),
                    _ => diagnostics::check_dual_bound(&report, &problem, &x_star, beta),
                }
                .unwrap();
                let lyapunov_increases = (alg == Algorithm::DualSplit && mode == Mode::Inexact).then(|| {
                    let trace =
                        diagnostics::dsadmm_lyapunov_trace(&report, &x_star, &lambda_ref, &report.tau, beta).unwrap();
                    diagnostics::lyapunov_increases(&trace, diagnostics::LYAPUNOV_SLACK).len()
                });
                out.push(BoundRun {
                    label: format!("seed {seed} {alg} m={m} {mode:?}"),
                    algorithm: alg,
                    mode,
                    bound,
                    lyapunov_increases,
                    track,
                });
            }
        }
    }
    out
}

/// Largest scaled difference between the multi-block method on the
/// two-block reformulation and the exact primal split, over `iters`
/// iterations of a BP coordinate split `n = 10, p = 30`.
pub fn reformulation_gap(seed: u64, iters: usize) -> f64 {
    let inst = gen_bp(10, 30, 0.1, &mut PortableRng::new(seed)).unwrap();
    let problem = bp::bp_build(&inst, 30).unwrap();
    let two_block = solvers::reformulate_primal_split(&problem).unwrap();
    let beta = bp::standard_beta(Algorithm::PrimalSplit, &inst);
    let ps_cfg = SolverConfig::new(Algorithm::PrimalSplit, Mode::Exact, beta);
    let mb_cfg = SolverConfig::new(Algorithm::MultiBlock, Mode::Exact, beta);
    let mut ps = IterateState::zeros(&problem, Algorithm::PrimalSplit);
    let mut mb = IterateState::zeros(&two_block, Algorithm::MultiBlock);
    let mut worst = 0.0f64;
    let gap = |a: &[f64], b: &[f64]| {
        let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
    };
    for _ in 0..iters {
        solvers::step(&problem, &mut ps, &ps_cfg).unwrap();
        solvers::step(&two_block, &mut mb, &mb_cfg).unwrap();
        worst = worst.max(gap(&ps.x_flat(), &mb.x[1]));
        worst = worst.max(gap(&ps.y.as_ref().unwrap().concat(), &mb.x[0]));
        worst = worst.max(gap(&ps.lambda_copies.as_ref().unwrap().concat(), mb.lambda.as_ref().unwrap()));
    }
    worst
}

/// One cell of the BP iteration table.
pub struct TableCell {
    pub algorithm: Algorithm,
    pub m: usize,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub track: Track,
}

impl TableCell {
    pub fn mean(&self) -> f64 {
        self.iterations.iter().sum::<usize>() as f64 / self.iterations.len() as f64
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }
}

pub const TABLE_CELLS: [(Algorithm, usize); 7] = [
    (Algorithm::MultiBlock, 200),
    (Algorithm::PrimalSplit, 2),
    (Algorithm::PrimalSplit, 5),
    (Algorithm::PrimalSplit, 50),
    (Algorithm::DualSplit, 2),
    (Algorithm::DualSplit, 5),
    (Algorithm::DualSplit, 50),
];

/// BP `n = 60, p = 200`, 6% sparsity, relative error `1e-5` against a
/// high-accuracy reference, 2000-iteration cap, size-aware penalties.
pub fn bp_table(seeds: std::ops::Range<u64>) -> Vec<TableCell> {
    let mut cells: Vec<TableCell> = TABLE_CELLS
        .iter()
        .map(|&(algorithm, m)| TableCell {
            algorithm,
            m,
            iterations: Vec::new(),
            converged: Vec::new(),
            track: Track::default(),
        })
        .collect();
    for seed in seeds {
        let inst = gen_bp(60, 200, 0.06, &mut PortableRng::new(seed)).unwrap();
        let (x_ref, _) = bp::reference_solution(&inst, 1e-13, 500_000).unwrap();
        for cell in cells.iter_mut() {
            let mode = if cell.algorithm == Algorithm::MultiBlock { Mode::Exact } else { Mode::Inexact };
            let problem = bp::bp_build(&inst, cell.m).unwrap();
            let cfg = SolverConfig::new(cell.algorithm, mode, bp::scaled_beta(cell.algorithm, &inst))
                .with_max_iter(2000)
                .with_stop(StoppingRule::RelativeError { tol: 1e-5, reference: x_ref.clone() });
            let (_, report, track) = run_tracked(&problem, &cfg);
            cell.iterations.push(report.iterations());
            cell.converged.push(report.status == Status::Converged);
            cell.track.merge(track);
        }
    }
    cells
}

pub struct SolveSummary {
    pub algorithm: Algorithm,
    pub status: Status,
    pub iterations: usize,
    pub objective: f64,
    pub track: Track,
    pub state: IterateState,
}

pub const LVGGMS_SEED: u64 = 0;
pub const LVGGMS_BETA: [(Algorithm, f64); 3] =
    [(Algorithm::MultiBlock, 0.1), (Algorithm::PrimalSplit, 0.01), (Algorithm::DualSplit, 100.0)];

/// Synthetic LVGGMS `p = 30, r = 3, α = (0.005, 0.05)`, stopping rule at
/// `1e-5`, all three methods.
pub fn lvggms_runs() -> Vec<SolveSummary> {
    let data = gen_lvggms(30, 3, 0.005, 0.05, &mut PortableRng::new(LVGGMS_SEED)).unwrap();
    let problem = lvggms::lvggms_build(&data.instance).unwrap();
    LVGGMS_BETA
        .iter()
        .map(|&(alg, beta)| {
            let cfg = SolverConfig::new(alg, Mode::Exact, beta)
                .with_max_iter(5000)
                .with_stop(StoppingRule::Lvggms { tol: 1e-5 });
            let (state, report, track) = run_tracked(&problem, &cfg);
            SolveSummary {
                algorithm: alg,
                status: report.status,
                iterations: report.iterations(),
                objective: report.last().objective,
                track,
                state,
            }
        })
        .collect()
}

pub const RPCA_SEED: u64 = 0;
pub const RPCA_TOL: f64 = 1e-3;

/// Synthetic RPCA `60×60`, rank 4, 5% spikes, 80% sampling, `δ = 1e-2`:
/// recovered rank and planted relative error for each method.
pub fn rpca_runs() -> Vec<(SolveSummary, usize, f64)> {
    let inst = gen_rpca(&RpcaParams::default(), &mut PortableRng::new(RPCA_SEED)).unwrap();
    let (l_star, _) = inst.planted.clone().unwrap();
    let problem = rpca::rpca_build(&inst).unwrap();
    Algorithm::ALL
        .iter()
        .map(|&alg| {
            let cfg = SolverConfig::new(alg, Mode::Exact, rpca::scaled_beta(alg, &inst.m))
                .with_max_iter(2000)
                .with_stop(StoppingRule::Rpca { tol: RPCA_TOL });
            let (state, report, track) = run_tracked(&problem, &cfg);
            let l = DenseMatrix::from_row_major(60, 60, state.x[0].clone()).unwrap();
            let rank = rpca::rank_of(&l).unwrap();
            let err = diagnostics::relative_error(l.as_slice(), l_star.as_slice()).unwrap();
            let summary = SolveSummary {
                algorithm: alg,
                status: report.status,
                iterations: report.iterations(),
                objective: report.last().objective,
                track,
                state,
            };
            (summary, rank, err)
        })
        .collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
