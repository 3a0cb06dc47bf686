//! Basis pursuit: `min ‖x‖₁` subject to `A x = b`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{Algorithm, Block, IterateState, L1Norm, LinearOp, Mode, SeparableProblem, SolverConfig};
use crate::numkern::{self, DenseMatrix};
use crate::prox::shrink_scalar;
use crate::solvers;

#[derive(Clone, Debug, PartialEq)]
pub struct BpInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    /// The sparse vector `b` was generated from, when known.
    pub x_planted: Option<Vec<f64>>,
}

impl BpInstance {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Dimension(format!("A has {} rows, b has {}", a.rows(), b.len())));
        }
        Ok(Self { a, b, x_planted: None })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn p(&self) -> usize {
        self.a.cols()
    }
}

/// Splits `0..p` into `m` contiguous groups whose sizes differ by at most
/// one, larger groups first: `p = 10, m = 3` gives sizes `(4, 3, 3)`.
pub fn partition(p: usize, m: usize) -> Result<Vec<Range<usize>>> {
    if m == 0 || m > p {
        return Err(Error::Argument(format!("cannot split {p} columns into {m} groups")));
    }
    let (base, extra) = (p / m, p % m);
    let mut start = 0;
    Ok((0..m)
        .map(|g| {
            let len = base + usize::from(g < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// One `ℓ₁` block per column group, coupled through the matching columns
/// of `A`.
pub fn bp_build(inst: &BpInstance, m: usize) -> Result<SeparableProblem> {
    let blocks = partition(inst.p(), m)?
        .into_iter()
        .map(|r| Block::new(L1Norm { weight: 1.0, dim: r.len() }, LinearOp::Dense(inst.a.select_columns(r))))
        .collect();
    SeparableProblem::new(blocks, inst.b.clone())
}

/// Coordinate update of the multi-block method with scalar blocks:
/// `argmin |x_i| + (β/2)‖a_i x_i − c‖²` with `c = b + λ/β − Σ_{j≠i} a_j x_j`,
/// which is `shrink(a_iᵀc / a_iᵀa_i, 1/(β a_iᵀa_i))`.
///
/// `x` holds the current value of every coordinate.
pub fn bp_alg1_coordinate_update(inst: &BpInstance, x: &[f64], lambda: &[f64], i: usize, beta: f64) -> Result<f64> {
    if x.len() != inst.p() || lambda.len() != inst.n() {
        return Err(Error::Dimension("coordinate update needs full x and λ".into()));
    }
    let col = inst.a.column(i);
    let aa = numkern::dot(&col, &col);
    if aa == 0.0 {
        return Err(Error::Argument(format!("column {i} is zero")));
    }
    let ax = inst.a.matvec(x);
    let c: Vec<f64> = (0..inst.n()).map(|r| inst.b[r] + lambda[r] / beta - (ax[r] - col[r] * x[i])).collect();
    Ok(shrink_scalar(numkern::dot(&col, &c) / aa, 1.0 / (beta * aa)))
}

/// Penalty presets: `400/‖b‖₁` for the multi-block and primal-split methods
/// and `10` for the dual split.
pub fn standard_beta(algorithm: Algorithm, inst: &BpInstance) -> f64 {
    match algorithm {
        Algorithm::DualSplit => 10.0,
        _ => {
            let n1 = numkern::norm1(&inst.b);
            if n1 > 0.0 {
                400.0 / n1
            } else {
                1.0
            }
        }
    }
}

/// Size-aware presets: `4n/(3‖b‖₁)` for the multi-block and primal-split
/// methods, which is `400/‖b‖₁` at `n = 300`, and `10` for the dual split.
///
/// The fixed numerator of [`standard_beta`] makes the primal methods too
/// stiff on small instances.
pub fn scaled_beta(algorithm: Algorithm, inst: &BpInstance) -> f64 {
    match algorithm {
        Algorithm::DualSplit => 10.0,
        _ => standard_beta(algorithm, inst) * inst.n() as f64 / 300.0,
    }
}

/// High-accuracy primal-dual pair `(x*, λ*)` from the multi-block method on
/// the coordinate split. Iterates until the relative residual and the
/// relative step are both below `tol`, or `max_iter` sweeps.
pub fn reference_solution(inst: &BpInstance, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let problem = bp_build(inst, inst.p())?;
    let cfg = SolverConfig::new(Algorithm::MultiBlock, Mode::Exact, standard_beta(Algorithm::MultiBlock, inst));
    let mut state = IterateState::zeros(&problem, Algorithm::MultiBlock);
    let b_scale = numkern::norm2(&inst.b).max(1.0);
    for _ in 0..max_iter {
        let prev = state.x_flat();
        solvers::alg1_step(&problem, &mut state, &cfg)?;
        let x = state.x_flat();
        let step: f64 = x.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let res = crate::model::primal_residual(&problem, &state.x)?;
        if res / b_scale <= tol && step <= tol * numkern::norm2(&x).max(1.0) {
            break;
        }
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("reference solve"));
    }
    let lambda = state.lambda.take().unwrap_or_default();
    Ok((state.x_flat(), lambda))
}
