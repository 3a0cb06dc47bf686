//! Robust PCA with partial observations:
//! `min ‖L‖_* + τ_w‖S‖₁` subject to `L + S + Z = M`, `‖P_Ω(Z)‖_F ≤ δ`.
//!
//! Blocks are `(L, S, Z)`, each an `ℓ×n` matrix stored row-major and
//! coupled by the identity.

use crate::error::{Error, Result};
use crate::model::{
    Algorithm, Block, IterateState, L1Norm, LinearOp, MaskedBallIndicator, NuclearNorm, SeparableProblem,
};
use crate::numkern::{self, DenseMatrix};
use crate::prox::{self, MaskedBall};

/// Singular values at or below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-6;

/// Entries with magnitude above this count as nonzero.
pub const NNZ_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct RpcaInstance {
    pub m: DenseMatrix,
    pub tau_w: f64,
    pub ball: MaskedBall,
    /// Planted `(L*, S*)`, when known.
    pub planted: Option<(DenseMatrix, DenseMatrix)>,
}

impl RpcaInstance {
    pub fn new(m: DenseMatrix, tau_w: f64, ball: MaskedBall) -> Result<Self> {
        let inst = Self { m, tau_w, ball, planted: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.shape()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_w > 0.0) {
            return Err(Error::Argument(format!("sparsity weight must be positive, got {}", self.tau_w)));
        }
        self.ball.check_bounds(self.m.rows(), self.m.cols())
    }
}

pub fn rpca_build(inst: &RpcaInstance) -> Result<SeparableProblem> {
    inst.validate()?;
    let (rows, cols) = inst.shape();
    let n = rows * cols;
    SeparableProblem::new(
        vec![
            Block::new(NuclearNorm { rows, cols, weight: 1.0 }, LinearOp::identity(n)),
            Block::new(L1Norm { weight: inst.tau_w, dim: n }, LinearOp::identity(n)),
            Block::new(MaskedBallIndicator::new(rows, cols, inst.ball.clone())?, LinearOp::identity(n)),
        ],
        inst.m.as_slice().to_vec(),
    )
}

/// Penalty presets `0.002/‖M‖₁`, `0.004/‖M‖₁` and `2‖M‖₁` for the three
/// methods, with `‖M‖₁` the entrywise `ℓ₁` norm.
pub fn standard_beta(algorithm: Algorithm, m: &DenseMatrix) -> f64 {
    let n1 = numkern::norm1(m.as_slice()).max(f64::MIN_POSITIVE);
    match algorithm {
        Algorithm::MultiBlock => 0.002 / n1,
        Algorithm::PrimalSplit => 0.004 / n1,
        Algorithm::DualSplit => 2.0 * n1,
    }
}

/// Penalty scaled to the data: `β = ℓn/(4‖M‖₁)` for the multi-block and
/// primal-split methods and its reciprocal for the dual split, whose
/// thresholds scale with `β` instead of `1/β`.
pub fn scaled_beta(algorithm: Algorithm, m: &DenseMatrix) -> f64 {
    let n1 = numkern::norm1(m.as_slice());
    let base = if n1 > 0.0 { (m.rows() * m.cols()) as f64 / (4.0 * n1) } else { 1.0 };
    match algorithm {
        Algorithm::DualSplit => 1.0 / base,
        _ => base,
    }
}

/// Number of singular values above `RANK_THRESHOLD·σ_max`.
pub fn rank_of(l: &DenseMatrix) -> Result<usize> {
    let s = numkern::svd(l)?.singulars;
    let Some(&top) = s.first() else {
        return Ok(0);
    };
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > RANK_THRESHOLD * top).count())
}

/// Number of entries with `|s| > NNZ_THRESHOLD`.
pub fn nnz(s: &DenseMatrix) -> usize {
    s.as_slice().iter().filter(|v| v.abs() > NNZ_THRESHOLD).count()
}

/// One iteration written directly in terms of matrix updates. Produces the
/// same iterates as [`crate::solvers::step`] on [`rpca_build`] in exact
/// mode.
pub fn closed_form_step(inst: &RpcaInstance, algorithm: Algorithm, state: &mut IterateState, beta: f64) -> Result<()> {
    let (rows, cols) = inst.shape();
    let mat = |v: &[f64]| DenseMatrix::from_row_major(rows, cols, v.to_vec());
    let m = &inst.m;
    let tau = inst.tau_w;
    match algorithm {
        Algorithm::MultiBlock => {
            let lam = mat(state.lambda.as_ref().ok_or_else(|| Error::Argument("missing λ".into()))?)?;
            let base = &(m + &lam.scale(1.0 / beta));
            let s = mat(&state.x[1])?;
            let z = mat(&state.x[2])?;
            let l = prox::svt(&(&(base - &s) - &z), 1.0 / beta)?;
            let s = prox::matrix_shrink(&(&(base - &l) - &z), tau / beta)?;
            let z = prox::project_masked_fro_ball(&(&(base - &l) - &s), &inst.ball)?;
            let lam = &lam - &(&(&(&l + &s) + &z) - m).scale(beta);
            state.x = vec![l.into_vec(), s.into_vec(), z.into_vec()];
            state.lambda = Some(lam.into_vec());
        }
        Algorithm::PrimalSplit => {
            let lam = state.lambda_copies.clone().ok_or_else(|| Error::Argument("missing λ_i".into()))?;
            let third = m.scale(1.0 / 3.0);
            let anchors: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    state.x[i].iter().zip(third.as_slice()).zip(&lam[i]).map(|((x, c), l)| x - c - l / beta).collect()
                })
                .collect();
            let y = prox::project_sum_zero(&anchors)?;
            let target =
                |i: usize| -> Result<DenseMatrix> { Ok(&(&third + &mat(&y[i])?) + &mat(&lam[i])?.scale(1.0 / beta)) };
            let l = prox::svt(&target(0)?, 1.0 / beta)?;
            let s = prox::matrix_shrink(&target(1)?, tau / beta)?;
            let z = prox::project_masked_fro_ball(&target(2)?, &inst.ball)?;
            let x = [l.into_vec(), s.into_vec(), z.into_vec()];
            let lam_new = (0..3)
                .map(|i| {
                    (0..rows * cols).map(|j| lam[i][j] - beta * (x[i][j] - third.as_slice()[j] - y[i][j])).collect()
                })
                .collect();
            state.x = x.to_vec();
            state.y = Some(y);
            state.lambda_copies = Some(lam_new);
        }
        Algorithm::DualSplit => {
            let copies = state.lambda_copies.clone().ok_or_else(|| Error::Argument("missing λ_i".into()))?;
            let t = state.t.clone().ok_or_else(|| Error::Argument("missing t_i".into()))?;
            let n = rows * cols;
            let lam: Vec<f64> = (0..n)
                .map(|j| (m.as_slice()[j] + (0..3).map(|i| t[i][j] + beta * copies[i][j]).sum::<f64>()) / (3.0 * beta))
                .collect();
            let anchor = |i: usize| mat(&lam.iter().zip(&t[i]).map(|(l, tv)| beta * l - tv).collect::<Vec<_>>());
            let l = prox::svt(&anchor(0)?, beta)?;
            let s = prox::matrix_shrink(&anchor(1)?, tau * beta)?;
            let z = prox::project_masked_fro_ball(&anchor(2)?, &inst.ball)?;
            let x = [l.into_vec(), s.into_vec(), z.into_vec()];
            let mut new_copies = copies.clone();
            let mut new_t = t.clone();
            for i in 0..3 {
                for j in 0..n {
                    new_copies[i][j] = lam[j] - t[i][j] / beta - x[i][j] / beta;
                    new_t[i][j] = t[i][j] - beta * (lam[j] - new_copies[i][j]);
                }
            }
            state.x = x.to_vec();
            state.lambda = Some(lam);
            state.lambda_copies = Some(new_copies);
            state.t = Some(new_t);
        }
    }
    state.k += 1;
    Ok(())
}
