//! Seeded synthetic instances for the three problems.
//!
//! All randomness flows through [`PortableRng`], a xoshiro256++ stream
//! seeded by SplitMix64 with uniforms taken from the top 53 bits and normals
//! from the Box-Muller transform, so a seed yields the same instance on
//! every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::numkern::DenseMatrix;
use crate::problems::{BpInstance, LvggmsInstance, RpcaInstance};
use crate::prox::MaskedBall;

#[derive(Clone, Debug)]
pub struct PortableRng {
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed), spare_normal: None }
    }

    /// Independent stream `index`: this generator advanced by
    /// `index + 1` jumps of `2¹²⁸` steps.
    pub fn substream(&self, index: u64) -> Self {
        let mut inner = self.inner.clone();
        for _ in 0..=index {
            inner.jump();
        }
        Self { inner, spare_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform on `0..n` by rejection, `n > 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// `±1` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// `k` distinct indices from `0..n` in draw order (partial
    /// Fisher-Yates).
    pub fn choose(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot choose {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.normal())
    }
}

/// Gaussian `A`, a planted `x*` with `⌈sparsity·p⌉` Gaussian nonzeros at
/// uniform positions, and `b = A x*`.
pub fn gen_bp(n: usize, p: usize, sparsity: f64, rng: &mut PortableRng) -> Result<BpInstance> {
    if n == 0 || p == 0 || n > p {
        return Err(Error::Argument(format!("need 0 < n ≤ p, got n={n}, p={p}")));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Argument(format!("sparsity must lie in [0, 1], got {sparsity}")));
    }
    let a = rng.normal_matrix(n, p);
    let k = ((sparsity * p as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut x = vec![0.0; p];
    for idx in rng.choose(p, k) {
        x[idx] = rng.normal();
    }
    let b = a.matvec(&x);
    Ok(BpInstance { a, b, x_planted: Some(x) })
}

/// Ground truth behind a generated graphical-model instance.
#[derive(Clone, Debug)]
pub struct LvggmsData {
    pub instance: LvggmsInstance,
    /// `Θ = UUᵀ` over observed and latent variables, regularized if needed.
    pub theta: DenseMatrix,
    /// Observed block `Θ_X`.
    pub theta_x: DenseMatrix,
    /// Low-rank term `Θ_{XY} Θ_Y⁻¹ Θ_{YX}`.
    pub low_rank: DenseMatrix,
    /// Marginal concentration `Θ_X − Θ_{XY} Θ_Y⁻¹ Θ_{YX}`.
    pub marginal_concentration: DenseMatrix,
    /// Observed block of `Θ⁻¹`.
    pub sigma_x: DenseMatrix,
}

/// Smallest eigenvalue of `UUᵀ` below which `1e-6·I` is added.
const GRAM_EIGEN_FLOOR: f64 = 1e-10;
const GRAM_SHIFT: f64 = 1e-6;
const GENERATION_ATTEMPTS: u64 = 8;

/// `Θ` and its derived blocks `[Θ_X, low rank, Schur complement, Σ_X]`.
fn lvggms_attempt(p: usize, r: usize, rng: &mut PortableRng) -> Result<(DenseMatrix, [DenseMatrix; 4])> {
    let q = p + r;
    let nonzeros = ((q * q) as f64 * 0.1).round() as usize;
    let mut u = DenseMatrix::zeros(q, q);
    for idx in rng.choose(q * q, nonzeros) {
        u.as_mut_slice()[idx] = rng.sign();
    }
    let mut theta = u.matmul(&u.transpose());
    let min_eig = crate::numkern::sym_eig(&theta)?.eigenvalues.last().copied().unwrap_or(0.0);
    if min_eig < GRAM_EIGEN_FLOOR {
        theta = &theta + &DenseMatrix::identity(q).scale(GRAM_SHIFT);
    }
    let sub = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        let c0 = cols.start;
        let r0 = rows.start;
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| theta[(r0 + i, c0 + j)])
    };
    let theta_x = sub(0..p, 0..p);
    let theta_xy = sub(0..p, p..q);
    let theta_y = sub(p..q, p..q);
    let theta_y_inv = theta_y.spd_inverse().map_err(|_| Error::Generation("latent block is not invertible".into()))?;
    let low_rank = theta_xy.matmul(&theta_y_inv).matmul(&theta_xy.transpose()).symmetrized();
    let marginal = (&theta_x - &low_rank).symmetrized();
    let sigma_full =
        theta.spd_inverse().map_err(|_| Error::Generation("concentration matrix is not invertible".into()))?;
    let sigma_x = DenseMatrix::from_fn(p, p, |i, j| sigma_full[(i, j)]).symmetrized();
    Ok((theta, [theta_x, low_rank, marginal, sigma_x]))
}

/// Sparse `U` of size `(p+r)×(p+r)` with 10% of its entries `±1`,
/// `Θ = UUᵀ`, and a sample covariance from `N = 5p` draws of
/// `N(0, (Θ_X − Θ_{XY}Θ_Y⁻¹Θ_{YX})⁻¹)`.
///
/// A draw whose blocks cannot be inverted is retried on a fresh substream.
pub fn gen_lvggms(p: usize, r: usize, alpha1: f64, alpha2: f64, rng: &mut PortableRng) -> Result<LvggmsData> {
    if p == 0 || r >= p {
        return Err(Error::Argument(format!("need 0 ≤ r < p, got p={p}, r={r}")));
    }
    let mut last_err = None;
    for attempt in 0..GENERATION_ATTEMPTS {
        let mut stream = if attempt == 0 { rng.clone() } else { rng.substream(attempt) };
        let (theta, [theta_x, low_rank, marginal, sigma_x]) = match lvggms_attempt(p, r, &mut stream) {
            Ok(v) => v,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let cov = match marginal.spd_inverse() {
            Ok(c) => c.symmetrized(),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let chol = match cov.cholesky_lower() {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let n = 5 * p;
        let mut sigma_hat = DenseMatrix::zeros(p, p);
        for _ in 0..n {
            let z: Vec<f64> = (0..p).map(|_| stream.normal()).collect();
            let y = chol.matvec(&z);
            for i in 0..p {
                for j in 0..p {
                    sigma_hat[(i, j)] += y[i] * y[j];
                }
            }
        }
        let sigma_hat = sigma_hat.scale(1.0 / n as f64).symmetrized();
        *rng = stream;
        return Ok(LvggmsData {
            instance: LvggmsInstance::new(sigma_hat, alpha1, alpha2)?,
            theta,
            theta_x,
            low_rank,
            marginal_concentration: marginal,
            sigma_x,
        });
    }
    Err(last_err.unwrap_or_else(|| Error::Generation("no attempts made".into())))
}

/// Parameters of [`gen_rpca`].
#[derive(Clone, Debug, PartialEq)]
pub struct RpcaParams {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Fraction of entries carrying a sparse spike.
    pub sparse_frac: f64,
    /// Fraction of entries observed.
    pub sampling_ratio: f64,
    /// Standard deviation of Gaussian noise on observed entries.
    pub noise: f64,
    /// Magnitude of the sparse spikes.
    pub spike: f64,
    /// Defaults to `1/√rows`.
    pub tau_w: Option<f64>,
    pub delta: f64,
}

impl Default for RpcaParams {
    fn default() -> Self {
        Self {
            rows: 60,
            cols: 60,
            rank: 4,
            sparse_frac: 0.05,
            sampling_ratio: 0.8,
            noise: 0.0,
            spike: 5.0,
            tau_w: None,
            delta: 1e-2,
        }
    }
}

/// `L* = PQᵀ` with Gaussian factors, `S*` with `round(sparse_frac·ℓn)`
/// spikes `±spike` at uniform positions, a uniform mask `Ω` of
/// `⌈sr·ℓn⌉` entries, and `M = P_Ω(L* + S* + noise)`.
pub fn gen_rpca(params: &RpcaParams, rng: &mut PortableRng) -> Result<RpcaInstance> {
    let RpcaParams { rows, cols, rank, sparse_frac, sampling_ratio, noise, spike, tau_w, delta } = *params;
    if rows == 0 || cols == 0 {
        return Err(Error::Argument("empty matrix".into()));
    }
    if rank > rows.min(cols) {
        return Err(Error::Argument(format!("rank {rank} exceeds min({rows}, {cols})")));
    }
    if !(sampling_ratio > 0.0 && sampling_ratio <= 1.0) {
        return Err(Error::Argument(format!("sampling ratio must lie in (0, 1], got {sampling_ratio}")));
    }
    if !(0.0..=1.0).contains(&sparse_frac) || noise < 0.0 {
        return Err(Error::Argument("sparse fraction must lie in [0, 1] and noise be nonnegative".into()));
    }
    let total = rows * cols;
    let pf = rng.normal_matrix(rows, rank);
    let qf = rng.normal_matrix(cols, rank);
    let l_star = pf.matmul(&qf.transpose());
    let mut s_star = DenseMatrix::zeros(rows, cols);
    let spikes = (sparse_frac * total as f64).round() as usize;
    for idx in rng.choose(total, spikes) {
        s_star.as_mut_slice()[idx] = spike * rng.sign();
    }
    let observed = ((sampling_ratio * total as f64) - 1e-9).ceil() as usize;
    let mut mask_idx = rng.choose(total, observed);
    mask_idx.sort_unstable();
    let mut m = DenseMatrix::zeros(rows, cols);
    for &idx in &mask_idx {
        let e = if noise > 0.0 { noise * rng.normal() } else { 0.0 };
        m.as_mut_slice()[idx] = l_star.as_slice()[idx] + s_star.as_slice()[idx] + e;
    }
    let mask = mask_idx.iter().map(|&idx| (idx / cols, idx % cols)).collect();
    let ball = MaskedBall::new(mask, delta)?;
    let tau_w = tau_w.unwrap_or(1.0 / (rows as f64).sqrt());
    let mut inst = RpcaInstance::new(m, tau_w, ball)?;
    inst.planted = Some((l_star, s_star));
    Ok(inst)
}
