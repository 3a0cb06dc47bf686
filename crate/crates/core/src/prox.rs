//! Closed-form proximal operators and projections.
//!
//! Every operator here solves `argmin_x w·g(x) + ½‖x − c‖²` for a specific
//! `g`, either exactly or (for the masked ball and the sum-zero hyperplane)
//! as a Euclidean projection.

use crate::error::{Error, Result};
use crate::numkern::{self, DenseMatrix};

fn check_weight(name: &str, w: f64) -> Result<()> {
    if w.is_nan() || w < 0.0 {
        return Err(Error::Argument(format!("{name} must be nonnegative, got {w}")));
    }
    Ok(())
}

/// Scalar soft-thresholding `sgn(c)·max(|c| − τ, 0)`.
///
/// The kink `|c| = τ` maps to exactly zero.
#[inline]
pub fn shrink_scalar(c: f64, tau: f64) -> f64 {
    let mag = c.abs() - tau;
    if mag > 0.0 {
        mag.copysign(c)
    } else {
        0.0
    }
}

/// Componentwise shrinkage, the proximal map of `τ‖·‖₁`.
pub fn shrinkage(c: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_weight("shrinkage threshold", tau)?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("shrinkage input"));
    }
    Ok(c.iter().map(|&v| shrink_scalar(v, tau)).collect())
}

/// Entrywise shrinkage of a matrix, the proximal map of `μ‖S‖₁`.
pub fn matrix_shrink(t: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    check_weight("matrix shrinkage threshold", mu)?;
    Ok(t.map(|v| shrink_scalar(v, mu)))
}

/// Singular value thresholding, the proximal map of `μ‖L‖_*`.
pub fn svt(k: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    check_weight("singular value threshold", mu)?;
    if mu == 0.0 {
        return Ok(k.clone());
    }
    let dec = numkern::svd(k)?;
    Ok(dec.reconstruct_with(|s| (s - mu).max(0.0)))
}

/// Proximal map of `μ·Tr(L) + 𝓘(L ⪰ 0)`: eigenvalues shifted down by `μ`
/// and clamped at zero.
pub fn psd_trace_prox(k: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    check_weight("trace weight", mu)?;
    let eig = numkern::sym_eig(k)?;
    Ok(eig.reconstruct_with(|s| (s - mu).max(0.0)))
}

/// Minimizer of `⟨R, Σ̂⟩ − log det R + (β/2)‖R − C‖²_F`.
///
/// With `(1/β)Σ̂ − C = U diag(σ) Uᵀ` the minimizer is `U diag(γ) Uᵀ`,
/// `γ_i = (−σ_i + √(σ_i² + 4/β)) / 2`, which is positive definite.
pub fn logdet_quad_prox(sigma_hat: &DenseMatrix, anchor: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Argument(format!("penalty must be positive, got {beta}")));
    }
    if sigma_hat.shape() != anchor.shape() {
        return Err(Error::Dimension(format!("covariance {:?} vs anchor {:?}", sigma_hat.shape(), anchor.shape())));
    }
    let shifted = &sigma_hat.scale(1.0 / beta) - anchor;
    let eig = numkern::sym_eig(&shifted)?;
    let four_over_beta = 4.0 / beta;
    Ok(eig.reconstruct_with(|s| {
        // Stable form of (−s + √(s² + 4/β)) / 2 for large positive s.
        let root = (s * s + four_over_beta).sqrt();
        if s > 0.0 {
            (four_over_beta / 2.0) / (s + root)
        } else {
            (root - s) / 2.0
        }
    }))
}

/// Euclidean projection of `(u_1, …, u_m)` onto `{y : Σ y_i = 0}`, which is
/// `u_i − mean(u)`.
pub fn project_sum_zero(u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = u.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if u.iter().any(|v| v.len() != len) {
        return Err(Error::Dimension("sum-zero projection needs equally long vectors".into()));
    }
    let m = u.len() as f64;
    let mut mean = vec![0.0; len];
    for v in u {
        for (acc, x) in mean.iter_mut().zip(v) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= m);
    Ok(u.iter().map(|v| v.iter().zip(&mean).map(|(x, c)| x - c).collect()).collect())
}

/// The set `{Z : ‖P_Ω(Z)‖_F ≤ δ}` where `P_Ω` keeps the entries listed in
/// the mask and zeroes the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedBall {
    mask: Vec<(usize, usize)>,
    radius: f64,
}

impl MaskedBall {
    /// Duplicate mask entries are dropped; the mask is kept sorted.
    pub fn new(mut mask: Vec<(usize, usize)>, radius: f64) -> Result<Self> {
        check_weight("ball radius", radius)?;
        mask.sort_unstable();
        mask.dedup();
        Ok(Self { mask, radius })
    }

    /// Ball whose mask covers every entry of a `rows×cols` matrix.
    pub fn full(rows: usize, cols: usize, radius: f64) -> Result<Self> {
        let mask = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        Self::new(mask, radius)
    }

    pub fn mask(&self) -> &[(usize, usize)] {
        &self.mask
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn check_bounds(&self, rows: usize, cols: usize) -> Result<()> {
        match self.mask.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            Some(&(i, j)) => Err(Error::Argument(format!("mask entry ({i}, {j}) outside a {rows}x{cols} matrix"))),
            None => Ok(()),
        }
    }

    /// `‖P_Ω(z)‖_F` for a row-major matrix with `cols` columns.
    pub fn masked_norm(&self, z: &[f64], cols: usize) -> f64 {
        self.mask.iter().map(|&(i, j)| z[i * cols + j].powi(2)).sum::<f64>().sqrt()
    }
}

/// Euclidean projection onto a [`MaskedBall`]. Entries off the mask pass
/// through; entries on the mask are scaled radially.
pub fn project_masked_fro_ball(n: &DenseMatrix, ball: &MaskedBall) -> Result<DenseMatrix> {
    ball.check_bounds(n.rows(), n.cols())?;
    let mut out = n.clone();
    project_masked_in_place(out.as_mut_slice(), n.cols(), ball);
    Ok(out)
}

pub(crate) fn project_masked_in_place(z: &mut [f64], cols: usize, ball: &MaskedBall) {
    let norm = ball.masked_norm(z, cols);
    if norm <= ball.radius || norm == 0.0 {
        return;
    }
    let scale = ball.radius / norm;
    for &(i, j) in &ball.mask {
        z[i * cols + j] *= scale;
    }
}
