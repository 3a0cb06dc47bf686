//! Independent reference implementations used to check the library.
//!
//! Nothing here calls the library's factorizations; eigenvalues come from a
//! cyclic Jacobi sweep and linear systems from Gaussian elimination.

#![allow(dead_code)]

pub mod checks;

use splitadmm::datagen::PortableRng;
use splitadmm::numkern::DenseMatrix;

pub fn rand_matrix(rng: &mut PortableRng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

pub fn rand_sym(rng: &mut PortableRng, n: usize) -> DenseMatrix {
    rand_matrix(rng, n, n).symmetrized()
}

pub fn rand_vec(rng: &mut PortableRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn mat_dist(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    dist(a.as_slice(), b.as_slice())
}

/// Cyclic Jacobi on a symmetric matrix. Returns eigenvalues and the
/// eigenvectors as columns of a row-major `n×n` array.
pub fn jacobi_eig(m: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].powi(2))
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i].powi(2)).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `V diag(f(λ)) Vᵀ` from a Jacobi decomposition.
pub fn spectral_map(m: &DenseMatrix, f: impl Fn(f64) -> f64) -> DenseMatrix {
    let (vals, v) = jacobi_eig(m);
    let n = vals.len();
    DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[i][k] * f(vals[k]) * v[j][k]).sum())
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    let scale = a.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))?;
        if aug[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        aug.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = aug[r][col] / aug[col][col];
                for c in col..=n {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| aug[i][n] / aug[i][i]).collect())
}

pub fn invert(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let e: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == j))).collect();
        let col = solve(a, &e)?;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Some(out)
}

/// `argmin τ|x| + ½(x − c)²` by bisection on the subdifferential.
pub fn shrink_oracle(c: f64, tau: f64) -> f64 {
    let (mut lo, mut hi) = (-c.abs() - tau - 1.0, c.abs() + tau + 1.0);
    for _ in 0..200 {
        let x = 0.5 * (lo + hi);
        let (left, right) = if x > 0.0 {
            (tau + x - c, tau + x - c)
        } else if x < 0.0 {
            (-tau + x - c, -tau + x - c)
        } else {
            (-tau - c, tau - c)
        };
        if right < 0.0 {
            lo = x;
        } else if left > 0.0 {
            hi = x;
        } else {
            return x;
        }
    }
    0.5 * (lo + hi)
}

/// Singular value thresholding through a Jacobi decomposition of `KᵀK`:
/// `K V diag(max(1 − μ/σ, 0)) Vᵀ`.
pub fn svt_oracle(k: &DenseMatrix, mu: f64) -> DenseMatrix {
    let gram = k.transpose().matmul(k);
    let (vals, v) = jacobi_eig(&gram);
    let n = vals.len();
    let factor: Vec<f64> = vals
        .iter()
        .map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > mu {
                1.0 - mu / s
            } else {
                0.0
            }
        })
        .collect();
    let w = DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|q| v[i][q] * factor[q] * v[j][q]).sum());
    k.matmul(&w)
}

/// `μ‖L‖_* + ½‖L − K‖²`, nuclear norm from the Jacobi spectrum of `LᵀL`.
pub fn svt_objective(l: &DenseMatrix, k: &DenseMatrix, mu: f64) -> f64 {
    let (vals, _) = jacobi_eig(&l.transpose().matmul(l));
    let nuc: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    mu * nuc + 0.5 * mat_dist(l, k).powi(2)
}

/// Projected gradient with step ½ for `min μTr(L) + ½‖L − K‖²`, `L ⪰ 0`.
pub fn psd_trace_oracle(k: &DenseMatrix, mu: f64) -> DenseMatrix {
    let n = k.rows();
    let k = k.symmetrized();
    let mut l = DenseMatrix::zeros(n, n);
    for _ in 0..80 {
        let grad = &(&l - &k) + &DenseMatrix::identity(n).scale(mu);
        let step = &l - &grad.scale(0.5);
        l = spectral_map(&step.symmetrized(), |v| v.max(0.0));
    }
    l
}

/// `‖Σ̂ − R⁻¹ + β(R − C)‖_F` with the inverse from Gaussian elimination.
pub fn logdet_stationarity(sigma: &DenseMatrix, c: &DenseMatrix, beta: f64, r: &DenseMatrix) -> f64 {
    let inv = invert(r).expect("R must be invertible");
    (&(sigma - &inv) + &(r - c).scale(beta)).frobenius_norm()
}

/// Scalar `argmin σx − ln x + (β/2)(x − c)²` over `x > 0` by safeguarded
/// Newton on `σ − 1/x + β(x − c) = 0`.
pub fn logdet_scalar_oracle(sigma: f64, c: f64, beta: f64) -> f64 {
    let g = |x: f64| sigma - 1.0 / x + beta * (x - c);
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx > 0.0 {
            hi = x
        } else {
            lo = x
        }
        let newton = x - gx / (1.0 / (x * x) + beta);
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    x
}

/// Euclidean projection onto `{Σ y_i = 0}` from the KKT system
/// `[I Eᵀ; E 0][y; ν] = [u; 0]`.
pub fn sum_zero_kkt(u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = u.len();
    let l = u[0].len();
    let n = m * l + l;
    let mut kkt = DenseMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for i in 0..m {
        for j in 0..l {
            let r = i * l + j;
            kkt[(r, r)] = 1.0;
            kkt[(r, m * l + j)] = 1.0;
            kkt[(m * l + j, r)] = 1.0;
            rhs[r] = u[i][j];
        }
    }
    let sol = solve(&kkt, &rhs).expect("KKT system is nonsingular");
    (0..m).map(|i| sol[i * l..(i + 1) * l].to_vec()).collect()
}

/// Projection onto `{Z : ‖P_Ω(Z)‖ ≤ δ}` by bisection on the multiplier `ν`
/// in `Z_Ω = N_Ω / (1 + ν)`.
pub fn masked_ball_oracle(n: &DenseMatrix, mask: &[(usize, usize)], delta: f64) -> DenseMatrix {
    let norm: f64 = mask.iter().map(|&(i, j)| n[(i, j)].powi(2)).sum::<f64>().sqrt();
    let mut out = n.clone();
    if norm <= delta {
        return out;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while norm / (1.0 + hi) > delta {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm / (1.0 + mid) > delta {
            lo = mid
        } else {
            hi = mid
        }
    }
    for &(i, j) in mask {
        out[(i, j)] = n[(i, j)] / (1.0 + hi);
    }
    out
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Optimal value of `min ‖x‖₁ s.t. A x = b` for full-row-rank `A` by
/// enumerating the basic solutions of the equivalent LP.
pub fn bp_lp_oracle(a: &DenseMatrix, b: &[f64]) -> f64 {
    let (n, p) = a.shape();
    let mut best = f64::INFINITY;
    for s in subsets(p, n) {
        let sub = DenseMatrix::from_fn(n, n, |i, j| a[(i, s[j])]);
        if let Some(x) = solve(&sub, b) {
            best = best.min(x.iter().map(|v| v.abs()).sum());
        }
    }
    best
}

/// Worst oracle discrepancy of one prox operator over a batch of random
/// inputs.
pub struct OracleRow {
    pub name: &'static str,
    pub worst: f64,
}

fn size(rng: &mut PortableRng) -> usize {
    1 + rng.below(10)
}

/// Runs every prox operator against its oracle on `trials` random inputs of
/// size at most `10×10`. Discrepancies are Frobenius distances divided by
/// `max(1, ‖input‖)`.
pub fn prox_suite(seed: u64, trials: usize) -> Vec<OracleRow> {
    use splitadmm::prox;
    let mut rng = PortableRng::new(seed);
    let mut rows = Vec::new();
    let mut record = |name: &'static str, worst: f64| rows.push(OracleRow { name, worst });

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = size(&mut rng);
        let c = rand_vec(&mut rng, n);
        let tau = rng.uniform() * 2.0;
        let got = prox::shrinkage(&c, tau).unwrap();
        let want: Vec<f64> = c.iter().map(|&v| shrink_oracle(v, tau)).collect();
        worst = worst.max(dist(&got, &want));
    }
    record("shrinkage", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (r, c) = (size(&mut rng), size(&mut rng));
        let t = rand_matrix(&mut rng, r, c);
        let mu = rng.uniform() * 2.0;
        let got = prox::matrix_shrink(&t, mu).unwrap();
        let want = t.map(|v| shrink_oracle(v, mu));
        worst = worst.max(mat_dist(&got, &want) / t.frobenius_norm().max(1.0));
    }
    record("matrix_shrink", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (r, c) = (size(&mut rng), size(&mut rng));
        let k = rand_matrix(&mut rng, r, c);
        let mu = rng.uniform() * 2.0;
        let got = prox::svt(&k, mu).unwrap();
        let want = svt_oracle(&k, mu);
        worst = worst.max(mat_dist(&got, &want) / k.frobenius_norm().max(1.0));
    }
    record("svt", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = size(&mut rng);
        let k = rand_sym(&mut rng, n);
        let mu = rng.uniform();
        let got = prox::psd_trace_prox(&k, mu).unwrap();
        let want = psd_trace_oracle(&k, mu);
        worst = worst.max(mat_dist(&got, &want) / k.frobenius_norm().max(1.0));
    }
    record("psd_trace_prox", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = size(&mut rng);
        let g = rand_matrix(&mut rng, n + 2, n);
        let sigma = g.transpose().matmul(&g).scale(1.0 / (n + 2) as f64).symmetrized();
        let c = rand_sym(&mut rng, n);
        let beta = 0.1 + 10.0 * rng.uniform();
        let got = prox::logdet_quad_prox(&sigma, &c, beta).unwrap();
        let err = if n == 1 {
            (got[(0, 0)] - logdet_scalar_oracle(sigma[(0, 0)], c[(0, 0)], beta)).abs()
        } else {
            logdet_stationarity(&sigma, &c, beta, &got) / (1.0 + sigma.frobenius_norm())
        };
        let pd = jacobi_eig(&got).0.iter().all(|&v| v > 0.0);
        worst = worst.max(if pd { err } else { f64::INFINITY });
    }
    record("logdet_quad_prox", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let m = 1 + rng.below(6);
        let l = size(&mut rng);
        let u: Vec<Vec<f64>> = (0..m).map(|_| rand_vec(&mut rng, l)).collect();
        let got = prox::project_sum_zero(&u).unwrap();
        let want = sum_zero_kkt(&u);
        let d = got.iter().zip(&want).map(|(a, b)| dist(a, b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    record("project_sum_zero", worst);

    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (r, c) = (size(&mut rng), size(&mut rng));
        let nmat = rand_matrix(&mut rng, r, c);
        let count = 1 + rng.below(r * c);
        let mask: Vec<(usize, usize)> = rng.choose(r * c, count).into_iter().map(|i| (i / c, i % c)).collect();
        let delta = rng.uniform() * 3.0;
        let ball = prox::MaskedBall::new(mask.clone(), delta).unwrap();
        let got = prox::project_masked_fro_ball(&nmat, &ball).unwrap();
        let want = masked_ball_oracle(&nmat, &mask, delta);
        worst = worst.max(mat_dist(&got, &want) / nmat.frobenius_norm().max(1.0));
    }
    record("project_masked_fro_ball", worst);

    rows
}
