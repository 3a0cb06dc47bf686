//! Latent-variable graphical model selection:
//! `min ⟨R, Σ̂⟩ − log det R + α₁‖S‖₁ + α₂ Tr(L)` subject to `R − S + L = 0`,
//! `L ⪰ 0`.
//!
//! Blocks are `(R, S, L)`, each a `p×p` matrix stored row-major, coupled by
//! `I`, `−I`, `I`.

use crate::error::{Error, Result};
use crate::model::{Algorithm, Block, IterateState, L1Norm, LinearOp, LogDetLoss, PsdTrace, SeparableProblem};
use crate::numkern::{self, DenseMatrix};
use crate::prox;

/// How the `L` block is updated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LUpdate {
    /// Eigenvalue soft-thresholding clamped at zero; the exact prox of
    /// `α₂Tr(L) + 𝓘(L ⪰ 0)`.
    #[default]
    PsdClamp,
    /// Singular value thresholding of the (symmetric) anchor.
    LiteralSvt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LvggmsInstance {
    pub sigma_hat: DenseMatrix,
    pub alpha1: f64,
    pub alpha2: f64,
    pub l_update: LUpdate,
}

impl LvggmsInstance {
    pub fn new(sigma_hat: DenseMatrix, alpha1: f64, alpha2: f64) -> Result<Self> {
        let inst = Self { sigma_hat, alpha1, alpha2, l_update: LUpdate::default() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn p(&self) -> usize {
        self.sigma_hat.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma_hat.is_square() {
            return Err(Error::Argument("sample covariance must be square".into()));
        }
        let defect = self.sigma_hat.symmetry_defect();
        if defect > numkern::SYMMETRY_TOLERANCE {
            return Err(Error::Argument(format!("sample covariance is not symmetric (defect {defect:.3e})")));
        }
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0) {
            return Err(Error::Argument("regularization weights must be positive".into()));
        }
        Ok(())
    }
}

pub fn lvggms_build(inst: &LvggmsInstance) -> Result<SeparableProblem> {
    inst.validate()?;
    let p = inst.p();
    let n = p * p;
    SeparableProblem::new(
        vec![
            Block::new(LogDetLoss { sigma_hat: inst.sigma_hat.symmetrized() }, LinearOp::identity(n)),
            Block::new(L1Norm { weight: inst.alpha1, dim: n }, LinearOp::Scaled { scale: -1.0, dim: n }),
            Block::new(
                PsdTrace { p, weight: inst.alpha2, literal_svt: inst.l_update == LUpdate::LiteralSvt },
                LinearOp::identity(n),
            ),
        ],
        vec![0.0; n],
    )
}

/// `⟨R, Σ̂⟩ − log det R + α₁‖S‖₁ + α₂Tr(L)`, evaluated term by term.
pub fn lvggms_objective(inst: &LvggmsInstance, r: &DenseMatrix, s: &DenseMatrix, l: &DenseMatrix) -> f64 {
    let logdet = r.symmetrized().spd_log_det().map_or(f64::INFINITY, |v| -v);
    r.dot(&inst.sigma_hat) + logdet + inst.alpha1 * numkern::norm1(s.as_slice()) + inst.alpha2 * l.trace()
}

/// Penalty presets: `0.1` for the multi-block method, `0.01` for both
/// splitting methods.
pub fn standard_beta(algorithm: Algorithm) -> f64 {
    match algorithm {
        Algorithm::MultiBlock => 0.1,
        Algorithm::PrimalSplit | Algorithm::DualSplit => 0.01,
    }
}

/// `0.1`, `0.01` and `100`: the standard values with the dual split's
/// penalty inverted, since its block thresholds scale with `β` here. With
/// these the two splitting methods produce identical iterates.
pub fn scaled_beta(algorithm: Algorithm) -> f64 {
    match algorithm {
        Algorithm::DualSplit => 1.0 / standard_beta(algorithm),
        _ => standard_beta(algorithm),
    }
}

fn mat(p: usize, v: &[f64]) -> Result<DenseMatrix> {
    DenseMatrix::from_row_major(p, p, v.to_vec())
}

fn l_prox(inst: &LvggmsInstance, k: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    match inst.l_update {
        LUpdate::PsdClamp => prox::psd_trace_prox(&k.symmetrized(), mu),
        LUpdate::LiteralSvt => prox::svt(k, mu),
    }
}

/// One iteration written directly in terms of matrix updates, independent
/// of the generic block machinery. Produces the same iterates as
/// [`crate::solvers::step`] on [`lvggms_build`] in exact mode.
pub fn closed_form_step(
    inst: &LvggmsInstance,
    algorithm: Algorithm,
    state: &mut IterateState,
    beta: f64,
) -> Result<()> {
    let p = inst.p();
    let sig = &inst.sigma_hat.symmetrized();
    let (a1, a2) = (inst.alpha1, inst.alpha2);
    match algorithm {
        Algorithm::MultiBlock => {
            let lam = mat(p, state.lambda.as_ref().ok_or_else(|| Error::Argument("missing λ".into()))?)?;
            let lb = lam.scale(1.0 / beta);
            let s = mat(p, &state.x[1])?;
            let l = mat(p, &state.x[2])?;
            let r = prox::logdet_quad_prox(sig, &(&(&s - &l) + &lb).symmetrized(), beta)?;
            let s = prox::matrix_shrink(&(&(&r + &l) - &lb), a1 / beta)?;
            let l = l_prox(inst, &(&(&s - &r) + &lb), a2 / beta)?;
            let lam = &lam - &(&(&r - &s) + &l).scale(beta);
            state.x = vec![r.into_vec(), s.into_vec(), l.into_vec()];
            state.lambda = Some(lam.into_vec());
        }
        Algorithm::PrimalSplit => {
            let lam = state.lambda_copies.clone().ok_or_else(|| Error::Argument("missing λ_i".into()))?;
            let signs = [1.0, -1.0, 1.0];
            let anchors: Vec<Vec<f64>> = (0..3)
                .map(|i| state.x[i].iter().zip(&lam[i]).map(|(x, l)| signs[i] * x - l / beta).collect())
                .collect();
            let y = prox::project_sum_zero(&anchors)?;
            let shifted = |i: usize| -> Result<DenseMatrix> {
                mat(p, &y[i].iter().zip(&lam[i]).map(|(y, l)| y + l / beta).collect::<Vec<_>>())
            };
            let r = prox::logdet_quad_prox(sig, &shifted(0)?.symmetrized(), beta)?;
            let s = prox::matrix_shrink(&-&shifted(1)?, a1 / beta)?;
            let l = l_prox(inst, &shifted(2)?, a2 / beta)?;
            let x = [r.into_vec(), s.into_vec(), l.into_vec()];
            let lam_new: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    lam[i].iter().zip(&x[i]).zip(&y[i]).map(|((l, xv), yv)| l - beta * (signs[i] * xv - yv)).collect()
                })
                .collect();
            state.x = x.to_vec();
            state.y = Some(y);
            state.lambda_copies = Some(lam_new);
        }
        Algorithm::DualSplit => {
            let copies = state.lambda_copies.clone().ok_or_else(|| Error::Argument("missing λ_i".into()))?;
            let t = state.t.clone().ok_or_else(|| Error::Argument("missing t_i".into()))?;
            let n = p * p;
            let lam: Vec<f64> =
                (0..n).map(|j| (0..3).map(|i| t[i][j] + beta * copies[i][j]).sum::<f64>() / (3.0 * beta)).collect();
            let anchor = |i: usize| -> Result<DenseMatrix> {
                mat(p, &lam.iter().zip(&t[i]).map(|(l, tv)| beta * l - tv).collect::<Vec<_>>())
            };
            // argmin ⟨R,Σ̂⟩ − log det R + (1/2β)‖R − (βλ − t₁)‖².
            let r = prox::logdet_quad_prox(sig, &anchor(0)?.symmetrized(), 1.0 / beta)?;
            let s = prox::matrix_shrink(&-&anchor(1)?, a1 * beta)?;
            let l = l_prox(inst, &anchor(2)?, a2 * beta)?;
            let x = [r.into_vec(), s.into_vec(), l.into_vec()];
            let signs = [1.0, -1.0, 1.0];
            let mut new_copies = copies.clone();
            let mut new_t = t.clone();
            for i in 0..3 {
                for j in 0..n {
                    new_copies[i][j] = lam[j] - t[i][j] / beta - signs[i] * x[i][j] / beta;
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
