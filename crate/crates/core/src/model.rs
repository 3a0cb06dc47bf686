//! Problem and iterate data shared by all three solvers.
//!
//! A [`SeparableProblem`] describes `min Σ f_i(x_i)` subject to
//! `Σ A_i x_i = b`. Matrix-valued blocks are stored as row-major vectors, so
//! an `ℓ×n` matrix variable is a block of length `ℓn` and its coupling to the
//! constraint is a scaled identity.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkern::{self, DenseMatrix};
use crate::prox::{self, MaskedBall};
use crate::solvers::StoppingRule;

/// Relative tolerance for the power iteration behind default `τ_i`.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Feasibility slack used when evaluating indicator functions.
const INDICATOR_SLACK: f64 = 1e-9;

/// Coupling operator `A_i`.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOp {
    /// `c·I` on vectors of length `dim`.
    Scaled {
        scale: f64,
        dim: usize,
    },
    Dense(DenseMatrix),
    /// Block-diagonal operator; parts act on consecutive slices.
    BlockDiag(Vec<LinearOp>),
}

impl LinearOp {
    pub fn identity(dim: usize) -> Self {
        LinearOp::Scaled { scale: 1.0, dim }
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearOp::Scaled { dim, .. } => *dim,
            LinearOp::Dense(a) => a.rows(),
            LinearOp::BlockDiag(parts) => parts.iter().map(LinearOp::rows).sum(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearOp::Scaled { dim, .. } => *dim,
            LinearOp::Dense(a) => a.cols(),
            LinearOp::BlockDiag(parts) => parts.iter().map(LinearOp::cols).sum(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols());
        match self {
            LinearOp::Scaled { scale, .. } => x.iter().map(|v| scale * v).collect(),
            LinearOp::Dense(a) => a.matvec(x),
            LinearOp::BlockDiag(parts) => {
                let mut out = Vec::with_capacity(self.rows());
                let mut offset = 0;
                for part in parts {
                    let n = part.cols();
                    out.extend(part.apply(&x[offset..offset + n]));
                    offset += n;
                }
                out
            }
        }
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows());
        match self {
            LinearOp::Scaled { scale, .. } => y.iter().map(|v| scale * v).collect(),
            LinearOp::Dense(a) => a.matvec_t(y),
            LinearOp::BlockDiag(parts) => {
                let mut out = Vec::with_capacity(self.cols());
                let mut offset = 0;
                for part in parts {
                    let r = part.rows();
                    out.extend(part.apply_t(&y[offset..offset + r]));
                    offset += r;
                }
                out
            }
        }
    }

    /// `ρ(AᵀA)`, exact for scaled identities and estimated by power
    /// iteration for dense parts.
    pub fn gram_spectral_radius(&self) -> Result<f64> {
        match self {
            LinearOp::Scaled { scale, .. } => Ok(scale * scale),
            LinearOp::Dense(a) => numkern::spectral_radius_gram(a, SPECTRAL_TOLERANCE),
            LinearOp::BlockDiag(parts) => {
                parts.iter().try_fold(0.0f64, |acc, p| Ok(acc.max(p.gram_spectral_radius()?)))
            }
        }
    }

    /// The scale `c` if this operator is `c·I` with `c ≠ 0`.
    pub fn as_scaled_identity(&self) -> Option<f64> {
        match self {
            LinearOp::Scaled { scale, .. } if *scale != 0.0 => Some(*scale),
            LinearOp::Dense(a) if a.is_square() => {
                let c = a[(0, 0)];
                let n = a.rows();
                let is_ci = c != 0.0 && (0..n).all(|i| (0..n).all(|j| a[(i, j)] == if i == j { c } else { 0.0 }));
                is_ci.then_some(c)
            }
            _ => None,
        }
    }
}

/// What a block can do with the coupled subproblem
/// `argmin f(x) + (ρ/2)‖A x − t‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Capability {
    /// Solved exactly, either through the prox (when `A = cI`) or through a
    /// block-specific closed form.
    ExactProx,
    /// Only the prox of `f` itself is available; use the inexact mode.
    ProximalGradientOnly,
}

/// One separable term `f_i`, including any constraint set folded in as an
/// indicator.
pub trait BlockObjective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `f(x)`, or `+∞` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_x weight·f(x) + ½‖x − anchor‖²`.
    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>>;

    fn capability(&self, op: &LinearOp) -> Capability {
        if op.as_scaled_identity().is_some() {
            Capability::ExactProx
        } else {
            Capability::ProximalGradientOnly
        }
    }

    /// `argmin_x f(x) + (ρ/2)‖op·x − target‖²`.
    fn coupled_argmin(&self, op: &LinearOp, target: &[f64], rho: f64) -> Result<Vec<f64>> {
        match op.as_scaled_identity() {
            Some(c) => {
                let anchor: Vec<f64> = target.iter().map(|t| t / c).collect();
                self.prox(&anchor, 1.0 / (rho * c * c))
            }
            None => Err(Error::Capability(format!(
                "{self:?} has no exact solution against a general coupling; use the inexact mode"
            ))),
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: expected length {want}, got {got}")));
    }
    Ok(())
}

/// `weight·‖x‖₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Norm {
    pub weight: f64,
    pub dim: usize,
}

impl BlockObjective for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weight * numkern::norm1(x)
    }

    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>> {
        check_len("l1 prox", anchor.len(), self.dim)?;
        prox::shrinkage(anchor, weight * self.weight)
    }

    fn capability(&self, op: &LinearOp) -> Capability {
        match op {
            LinearOp::Dense(a) if a.cols() == 1 => Capability::ExactProx,
            _ if op.as_scaled_identity().is_some() => Capability::ExactProx,
            _ => Capability::ProximalGradientOnly,
        }
    }

    fn coupled_argmin(&self, op: &LinearOp, target: &[f64], rho: f64) -> Result<Vec<f64>> {
        if let LinearOp::Dense(a) = op {
            if a.cols() == 1 && self.dim == 1 {
                let col = a.as_slice();
                let aa = numkern::dot(col, col);
                if aa == 0.0 {
                    return Err(Error::Argument("coupling column is zero".into()));
                }
                let at = numkern::dot(col, target);
                return Ok(vec![prox::shrink_scalar(at / aa, self.weight / (rho * aa))]);
            }
        }
        match op.as_scaled_identity() {
            Some(c) => {
                let anchor: Vec<f64> = target.iter().map(|t| t / c).collect();
                self.prox(&anchor, 1.0 / (rho * c * c))
            }
            None => Err(Error::Capability(
                "l1 block with a multi-column coupling has no closed form; use the inexact mode".into(),
            )),
        }
    }
}

/// `weight·‖X‖_*` for a `rows×cols` matrix variable.
#[derive(Clone, Debug, PartialEq)]
pub struct NuclearNorm {
    pub rows: usize,
    pub cols: usize,
    pub weight: f64,
}

impl BlockObjective for NuclearNorm {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Ok(m) = DenseMatrix::from_row_major(self.rows, self.cols, x.to_vec()) else {
            return f64::INFINITY;
        };
        match numkern::svd(&m) {
            Ok(dec) => self.weight * dec.singulars.iter().sum::<f64>(),
            Err(_) => f64::NAN,
        }
    }

    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>> {
        let k = DenseMatrix::from_row_major(self.rows, self.cols, anchor.to_vec())?;
        Ok(prox::svt(&k, weight * self.weight)?.into_vec())
    }
}

/// `weight·Tr(L) + 𝓘(L ⪰ 0)` on a `p×p` matrix variable.
///
/// With `literal_svt` set, the prox is singular value thresholding and the
/// value is `weight·‖L‖_*`, which agrees with the default on PSD matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdTrace {
    pub p: usize,
    pub weight: f64,
    pub literal_svt: bool,
}

impl BlockObjective for PsdTrace {
    fn dim(&self) -> usize {
        self.p * self.p
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Ok(m) = DenseMatrix::from_row_major(self.p, self.p, x.to_vec()) else {
            return f64::INFINITY;
        };
        if self.literal_svt {
            return match numkern::svd(&m) {
                Ok(dec) => self.weight * dec.singulars.iter().sum::<f64>(),
                Err(_) => f64::NAN,
            };
        }
        match numkern::sym_eig(&m) {
            Ok(eig) => {
                let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                if eig.eigenvalues.iter().any(|&v| v < -INDICATOR_SLACK * scale) {
                    f64::INFINITY
                } else {
                    self.weight * m.trace()
                }
            }
            Err(Error::NotSymmetric(_)) => f64::INFINITY,
            Err(_) => f64::NAN,
        }
    }

    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>> {
        let k = DenseMatrix::from_row_major(self.p, self.p, anchor.to_vec())?;
        let out = if self.literal_svt {
            prox::svt(&k, weight * self.weight)?
        } else {
            prox::psd_trace_prox(&k.symmetrized(), weight * self.weight)?
        };
        Ok(out.into_vec())
    }
}

/// `⟨R, Σ̂⟩ − log det R` on positive definite `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDetLoss {
    pub sigma_hat: DenseMatrix,
}

impl BlockObjective for LogDetLoss {
    fn dim(&self) -> usize {
        self.sigma_hat.rows() * self.sigma_hat.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.sigma_hat.rows();
        let Ok(r) = DenseMatrix::from_row_major(p, p, x.to_vec()) else {
            return f64::INFINITY;
        };
        if r.symmetry_defect() > numkern::SYMMETRY_TOLERANCE {
            return f64::INFINITY;
        }
        match r.symmetrized().spd_log_det() {
            Some(ld) => r.dot(&self.sigma_hat) - ld,
            None => f64::INFINITY,
        }
    }

    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>> {
        if !(weight > 0.0) {
            return Err(Error::Argument(format!("log-det prox needs a positive weight, got {weight}")));
        }
        let p = self.sigma_hat.rows();
        let c = DenseMatrix::from_row_major(p, p, anchor.to_vec())?.symmetrized();
        Ok(prox::logdet_quad_prox(&self.sigma_hat, &c, 1.0 / weight)?.into_vec())
    }
}

/// Indicator of a [`MaskedBall`] on a `rows×cols` matrix variable.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedBallIndicator {
    pub rows: usize,
    pub cols: usize,
    pub ball: MaskedBall,
}

impl MaskedBallIndicator {
    pub fn new(rows: usize, cols: usize, ball: MaskedBall) -> Result<Self> {
        ball.check_bounds(rows, cols)?;
        Ok(Self { rows, cols, ball })
    }
}

impl BlockObjective for MaskedBallIndicator {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.ball.radius();
        if self.ball.masked_norm(x, self.cols) <= r * (1.0 + INDICATOR_SLACK) + INDICATOR_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, anchor: &[f64], _weight: f64) -> Result<Vec<f64>> {
        check_len("masked ball projection", anchor.len(), self.dim())?;
        let mut z = anchor.to_vec();
        prox::project_masked_in_place(&mut z, self.cols, &self.ball);
        Ok(z)
    }
}

/// Indicator of `{(y_1, …, y_m) : Σ y_i = 0}` with each `y_i` of length
/// `len`, stored back to back.
#[derive(Clone, Debug, PartialEq)]
pub struct SumZeroIndicator {
    pub copies: usize,
    pub len: usize,
}

impl SumZeroIndicator {
    fn split(&self, y: &[f64]) -> Vec<Vec<f64>> {
        y.chunks(self.len.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl BlockObjective for SumZeroIndicator {
    fn dim(&self) -> usize {
        self.copies * self.len
    }

    fn value(&self, y: &[f64]) -> f64 {
        let parts = self.split(y);
        let scale = 1.0 + parts.iter().map(|p| numkern::norm2(p)).fold(0.0, f64::max);
        let feasible = (0..self.len).all(|j| {
            let s: f64 = parts.iter().map(|p| p[j]).sum();
            s.abs() <= INDICATOR_SLACK * scale
        });
        if feasible {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, anchor: &[f64], _weight: f64) -> Result<Vec<f64>> {
        check_len("sum-zero projection", anchor.len(), self.dim())?;
        Ok(prox::project_sum_zero(&self.split(anchor))?.concat())
    }
}

/// Several independent objectives acting on consecutive slices.
#[derive(Clone, Debug)]
pub struct Stacked(pub Vec<Arc<dyn BlockObjective>>);

impl Stacked {
    fn for_each_part<F>(&self, x: &[f64], mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(usize, &dyn BlockObjective, &[f64]) -> Result<Vec<f64>>,
    {
        check_len("stacked block", x.len(), self.dim())?;
        let mut out = Vec::with_capacity(x.len());
        let mut offset = 0;
        for (i, part) in self.0.iter().enumerate() {
            let n = part.dim();
            out.extend(f(i, part.as_ref(), &x[offset..offset + n])?);
            offset += n;
        }
        Ok(out)
    }
}

impl BlockObjective for Stacked {
    fn dim(&self) -> usize {
        self.0.iter().map(|p| p.dim()).sum()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut offset = 0;
        let mut total = 0.0;
        for part in &self.0 {
            let n = part.dim();
            total += part.value(&x[offset..offset + n]);
            offset += n;
        }
        total
    }

    fn prox(&self, anchor: &[f64], weight: f64) -> Result<Vec<f64>> {
        self.for_each_part(anchor, |_, part, a| part.prox(a, weight))
    }

    fn capability(&self, op: &LinearOp) -> Capability {
        match op {
            LinearOp::BlockDiag(ops) if ops.len() == self.0.len() => {
                if self.0.iter().zip(ops).all(|(p, o)| p.capability(o) == Capability::ExactProx) {
                    Capability::ExactProx
                } else {
                    Capability::ProximalGradientOnly
                }
            }
            _ if op.as_scaled_identity().is_some() => Capability::ExactProx,
            _ => Capability::ProximalGradientOnly,
        }
    }

    fn coupled_argmin(&self, op: &LinearOp, target: &[f64], rho: f64) -> Result<Vec<f64>> {
        match op {
            LinearOp::BlockDiag(ops) if ops.len() == self.0.len() => {
                check_len("stacked target", target.len(), op.rows())?;
                let mut out = Vec::with_capacity(self.dim());
                let mut offset = 0;
                for (part, part_op) in self.0.iter().zip(ops) {
                    let r = part_op.rows();
                    out.extend(part.coupled_argmin(part_op, &target[offset..offset + r], rho)?);
                    offset += r;
                }
                Ok(out)
            }
            _ => match op.as_scaled_identity() {
                Some(c) => {
                    let anchor: Vec<f64> = target.iter().map(|t| t / c).collect();
                    self.prox(&anchor, 1.0 / (rho * c * c))
                }
                None => Err(Error::Capability("stacked block needs a matching block-diagonal coupling".into())),
            },
        }
    }
}

/// One term of the separable sum with its coupling operator.
#[derive(Clone, Debug)]
pub struct Block {
    pub objective: Arc<dyn BlockObjective>,
    pub op: LinearOp,
}

impl Block {
    pub fn new(objective: impl BlockObjective + 'static, op: LinearOp) -> Self {
        Self { objective: Arc::new(objective), op }
    }
}

/// `min Σ f_i(x_i)` subject to `Σ A_i x_i = b`.
#[derive(Clone, Debug)]
pub struct SeparableProblem {
    blocks: Vec<Block>,
    rhs: Vec<f64>,
}

impl SeparableProblem {
    pub fn new(blocks: Vec<Block>, rhs: Vec<f64>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Argument("a problem needs at least one block".into()));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.op.rows() != rhs.len() {
                return Err(Error::Dimension(format!(
                    "block {i}: coupling has {} rows, right-hand side has {}",
                    b.op.rows(),
                    rhs.len()
                )));
            }
            if b.op.cols() != b.objective.dim() {
                return Err(Error::Dimension(format!(
                    "block {i}: coupling has {} columns, variable has {}",
                    b.op.cols(),
                    b.objective.dim()
                )));
            }
        }
        Ok(Self { blocks, rhs })
    }

    /// Number of blocks `m`.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Constraint dimension `ℓ`.
    pub fn ell(&self) -> usize {
        self.rhs.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Block {
        &self.blocks[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.objective.dim()).collect()
    }

    /// `ρ(A_iᵀA_i)` for every block.
    pub fn gram_spectral_radii(&self) -> Result<Vec<f64>> {
        self.blocks.iter().map(|b| b.op.gram_spectral_radius()).collect()
    }

    pub fn check_conformal(&self, x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.m() {
            return Err(Error::Dimension(format!("expected {} blocks, got {}", self.m(), x.len())));
        }
        for (i, (xi, b)) in x.iter().zip(&self.blocks).enumerate() {
            check_len(&format!("block {i}"), xi.len(), b.objective.dim())?;
        }
        Ok(())
    }

    /// `Σ A_i x_i`.
    pub fn coupled_sum(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_conformal(x)?;
        let mut sum = vec![0.0; self.ell()];
        for (xi, b) in x.iter().zip(&self.blocks) {
            for (s, v) in sum.iter_mut().zip(b.op.apply(xi)) {
                *s += v;
            }
        }
        Ok(sum)
    }
}

/// `θ(x) = Σ f_i(x_i)`.
pub fn objective(problem: &SeparableProblem, x: &[Vec<f64>]) -> Result<f64> {
    problem.check_conformal(x)?;
    Ok(x.iter().zip(problem.blocks()).map(|(xi, b)| b.objective.value(xi)).sum())
}

/// `‖Σ A_i x_i − b‖₂`.
pub fn primal_residual(problem: &SeparableProblem, x: &[Vec<f64>]) -> Result<f64> {
    let sum = problem.coupled_sum(x)?;
    Ok(sum.iter().zip(problem.rhs()).map(|(s, b)| (s - b).powi(2)).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Gauss-Seidel ADMM over all `m` blocks.
    MultiBlock,
    /// Two-block ADMM on the reformulation with `y_i = A_i x_i − b/m`.
    PrimalSplit,
    /// Two-block ADMM on the dual with replicated multipliers.
    DualSplit,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::MultiBlock, Algorithm::PrimalSplit, Algorithm::DualSplit];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MultiBlock => "multadmm",
            Algorithm::PrimalSplit => "psadmm",
            Algorithm::DualSplit => "dsadmm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multadmm" | "multi" | "alg1" | "1" => Ok(Algorithm::MultiBlock),
            "psadmm" | "primal" | "alg2" | "2" => Ok(Algorithm::PrimalSplit),
            "dsadmm" | "dual" | "alg3" | "3" => Ok(Algorithm::DualSplit),
            other => Err(Error::Argument(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Each block subproblem solved to optimality.
    Exact,
    /// One proximal-gradient step per block with weight `τ_i`.
    Inexact,
}

/// Solver parameters. Build with [`SolverConfig::new`] and the `with_*`
/// setters.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub beta: f64,
    /// Per-block proximal weights. Empty means "derive from the bound".
    pub tau: Vec<f64>,
    pub tau_safety: f64,
    pub max_iter: usize,
    pub stop: StoppingRule,
    pub seed: u64,
    /// Accept `τ_i` at or below the convergence bound.
    pub allow_unsafe_tau: bool,
    /// Keep a copy of every iterate in the report.
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, mode: Mode, beta: f64) -> Self {
        Self {
            algorithm,
            mode,
            beta,
            tau: Vec::new(),
            tau_safety: 1.01,
            max_iter: 2000,
            stop: StoppingRule::Never,
            seed: 0,
            allow_unsafe_tau: false,
            record_iterates: false,
        }
    }

    pub fn with_tau(mut self, tau: Vec<f64>) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_tau_safety(mut self, safety: f64) -> Self {
        self.tau_safety = safety;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop(mut self, stop: StoppingRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn allow_unsafe_tau(mut self, allow: bool) -> Self {
        self.allow_unsafe_tau = allow;
        self
    }

    pub fn record_iterates(mut self, record: bool) -> Self {
        self.record_iterates = record;
        self
    }

    /// Lower bounds on `τ_i` for the inexact modes: `β·ρ(A_iᵀA_i)` for the
    /// primal split and `ρ(A_iᵀA_i)/β` for the dual split.
    pub fn tau_bounds(&self, problem: &SeparableProblem) -> Result<Vec<f64>> {
        let radii = problem.gram_spectral_radii()?;
        Ok(match self.algorithm {
            Algorithm::DualSplit => radii.iter().map(|r| r / self.beta).collect(),
            _ => radii.iter().map(|r| r * self.beta).collect(),
        })
    }

    /// Fills `tau` with `tau_safety × bound` (or 1 for a zero bound).
    pub fn with_default_tau(mut self, problem: &SeparableProblem) -> Result<Self> {
        self.tau =
            self.tau_bounds(problem)?.into_iter().map(|b| if b > 0.0 { self.tau_safety * b } else { 1.0 }).collect();
        Ok(self)
    }

    pub fn validate(&self, problem: &SeparableProblem) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Argument(format!("β must be positive, got {}", self.beta)));
        }
        self.stop.validate()?;
        if self.mode == Mode::Exact {
            return Ok(());
        }
        if self.algorithm == Algorithm::MultiBlock {
            return Err(Error::Argument("the multi-block method has no inexact mode".into()));
        }
        if !(self.tau_safety > 0.0) {
            return Err(Error::Argument(format!("τ safety must be positive, got {}", self.tau_safety)));
        }
        if self.tau.is_empty() {
            return Ok(());
        }
        if self.tau.len() != problem.m() {
            return Err(Error::Dimension(format!("{} proximal weights for {} blocks", self.tau.len(), problem.m())));
        }
        if self.allow_unsafe_tau {
            return Ok(());
        }
        let bounds = self.tau_bounds(problem)?;
        for (i, (t, b)) in self.tau.iter().zip(&bounds).enumerate() {
            if !(t > b) {
                return Err(Error::Argument(format!("τ_{i} = {t} does not exceed the convergence bound {b}")));
            }
        }
        Ok(())
    }
}

/// Solver state. Which optional fields are populated depends on the
/// algorithm: `lambda` for the multi-block and dual-split methods, `y` and
/// `lambda_copies` (the multipliers `λ_i`) for the primal split,
/// `lambda_copies` (the copies `λ_i`) and `t` for the dual split.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<Vec<f64>>>,
    pub lambda: Option<Vec<f64>>,
    pub lambda_copies: Option<Vec<Vec<f64>>>,
    pub t: Option<Vec<Vec<f64>>>,
    pub k: usize,
}

impl IterateState {
    /// All-zero start. `y` stays unset until the first primal-split step.
    pub fn zeros(problem: &SeparableProblem, algorithm: Algorithm) -> Self {
        let x = problem.block_dims().into_iter().map(|n| vec![0.0; n]).collect();
        let copies = || Some(vec![vec![0.0; problem.ell()]; problem.m()]);
        match algorithm {
            Algorithm::MultiBlock => {
                Self { x, y: None, lambda: Some(vec![0.0; problem.ell()]), lambda_copies: None, t: None, k: 0 }
            }
            Algorithm::PrimalSplit => Self { x, y: None, lambda: None, lambda_copies: copies(), t: None, k: 0 },
            Algorithm::DualSplit => {
                Self { x, y: None, lambda: Some(vec![0.0; problem.ell()]), lambda_copies: copies(), t: copies(), k: 0 }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        let all = |v: &Vec<Vec<f64>>| v.iter().flatten().all(|x| x.is_finite());
        all(&self.x)
            && self.y.as_ref().is_none_or(all)
            && self.lambda.as_ref().is_none_or(|l| l.iter().all(|x| x.is_finite()))
            && self.lambda_copies.as_ref().is_none_or(all)
            && self.t.as_ref().is_none_or(all)
    }

    /// Block iterates laid end to end.
    pub fn x_flat(&self) -> Vec<f64> {
        self.x.concat()
    }
}
