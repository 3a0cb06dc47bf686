//! Problem instances on disk: a directory holding `instance.txt` (kind,
//! seed and scalar parameters, one `key value` per line) and one matrix
//! file per array.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use splitadmm::datagen::{gen_bp, gen_lvggms, gen_rpca, PortableRng, RpcaParams};
use splitadmm::numkern::DenseMatrix;
use splitadmm::problems::bp::BpInstance;
use splitadmm::problems::lvggms::LvggmsInstance;
use splitadmm::problems::rpca::{self, RpcaInstance};
use splitadmm::prox::MaskedBall;

use crate::matfile::{self, Kind};

pub const MANIFEST: &str = "instance.txt";

#[derive(Args, Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BpSpec {
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    /// Fraction of nonzeros in the planted solution.
    #[arg(long, default_value_t = 0.06)]
    pub sparsity: f64,
}

impl Default for BpSpec {
    fn default() -> Self {
        Self { n: 60, p: 200, sparsity: 0.06 }
    }
}

#[derive(Args, Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LvggmsSpec {
    /// Observed variables.
    #[arg(long, default_value_t = 30)]
    pub p: usize,
    /// Latent variables.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 0.005)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha2: f64,
}

impl Default for LvggmsSpec {
    fn default() -> Self {
        Self { p: 30, r: 3, alpha1: 0.005, alpha2: 0.05 }
    }
}

#[derive(Args, Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RpcaSpec {
    #[arg(long, default_value_t = 60)]
    pub rows: usize,
    #[arg(long, default_value_t = 60)]
    pub cols: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.05)]
    pub sparse_frac: f64,
    #[arg(long, default_value_t = 0.8)]
    pub sampling_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 5.0)]
    pub spike: f64,
    /// Defaults to 1/sqrt(rows).
    #[arg(long)]
    pub tau_w: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub delta: f64,
}

impl Default for RpcaSpec {
    fn default() -> Self {
        let p = RpcaParams::default();
        Self {
            rows: p.rows,
            cols: p.cols,
            rank: p.rank,
            sparse_frac: p.sparse_frac,
            sampling_ratio: p.sampling_ratio,
            noise: p.noise,
            spike: p.spike,
            tau_w: p.tau_w,
            delta: p.delta,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    Bp(BpSpec),
    Lvggms(LvggmsSpec),
    Rpca(RpcaSpec),
}

impl ProblemSpec {
    pub fn generate(&self, seed: u64) -> Result<Instance> {
        let mut rng = PortableRng::new(seed);
        Ok(match self {
            ProblemSpec::Bp(s) => Instance::Bp(gen_bp(s.n, s.p, s.sparsity, &mut rng)?),
            ProblemSpec::Lvggms(s) => {
                let data = gen_lvggms(s.p, s.r, s.alpha1, s.alpha2, &mut rng)?;
                Instance::Lvggms { inst: data.instance, truth: Some((data.theta_x, data.low_rank)) }
            }
            ProblemSpec::Rpca(s) => {
                let params = RpcaParams {
                    rows: s.rows,
                    cols: s.cols,
                    rank: s.rank,
                    sparse_frac: s.sparse_frac,
                    sampling_ratio: s.sampling_ratio,
                    noise: s.noise,
                    spike: s.spike,
                    tau_w: s.tau_w,
                    delta: s.delta,
                };
                Instance::Rpca(gen_rpca(&params, &mut rng)?)
            }
        })
    }
}

#[derive(Clone, Debug)]
pub enum Instance {
    Bp(BpInstance),
    /// Sample covariance problem with the planted `(S*, L*)` when known.
    Lvggms {
        inst: LvggmsInstance,
        truth: Option<(DenseMatrix, DenseMatrix)>,
    },
    Rpca(RpcaInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Bp(_) => "bp",
            Instance::Lvggms { .. } => "lvggms",
            Instance::Rpca(_) => "rpca",
        }
    }

    /// One line describing dimensions and ground truth.
    pub fn digest(&self) -> String {
        match self {
            Instance::Bp(b) => {
                let nnz = b.x_planted.as_ref().map(|x| x.iter().filter(|v| **v != 0.0).count());
                format!("bp n={} p={} nnz(x_true)={}", b.n(), b.p(), opt(nnz))
            }
            Instance::Lvggms { inst, truth } => {
                let (s_nnz, l_rank) = match truth {
                    Some((s, l)) => (Some(rpca::nnz(s)), rpca::rank_of(l).ok()),
                    None => (None, None),
                };
                format!(
                    "lvggms p={} alpha1={} alpha2={} nnz(S_true)={} rank(L_true)={}",
                    inst.p(),
                    inst.alpha1,
                    inst.alpha2,
                    opt(s_nnz),
                    opt(l_rank)
                )
            }
            Instance::Rpca(r) => {
                let (rows, cols) = r.shape();
                let (l_rank, s_nnz) = match &r.planted {
                    Some((l, s)) => (rpca::rank_of(l).ok(), Some(rpca::nnz(s))),
                    None => (None, None),
                };
                format!(
                    "rpca {rows}x{cols} observed={} tau_w={} delta={} rank(L_true)={} nnz(S_true)={}",
                    r.ball.mask().len(),
                    r.tau_w,
                    r.ball.radius(),
                    opt(l_rank),
                    opt(s_nnz)
                )
            }
        }
    }

    pub fn save(&self, dir: &Path, seed: Option<u64>) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut manifest = format!("kind {}\n", self.kind());
        if let Some(seed) = seed {
            let _ = writeln!(manifest, "seed {seed}");
        }
        let put = |name: &str, m: &DenseMatrix, kind: Kind| matfile::write(&dir.join(format!("{name}.mat")), m, kind);
        match self {
            Instance::Bp(b) => {
                put("a", &b.a, Kind::Dense)?;
                put("b", &DenseMatrix::column_vector(&b.b), Kind::Dense)?;
                if let Some(x) = &b.x_planted {
                    put("x_true", &DenseMatrix::column_vector(x), Kind::Dense)?;
                }
            }
            Instance::Lvggms { inst, truth } => {
                let _ = writeln!(manifest, "alpha1 {:e}\nalpha2 {:e}", inst.alpha1, inst.alpha2);
                put("sigma_hat", &inst.sigma_hat, Kind::Dense)?;
                if let Some((s, l)) = truth {
                    put("s_true", s, Kind::Dense)?;
                    put("l_true", l, Kind::Dense)?;
                }
            }
            Instance::Rpca(r) => {
                let _ = writeln!(manifest, "tau_w {:e}\ndelta {:e}", r.tau_w, r.ball.radius());
                let (rows, cols) = r.shape();
                let mut mask = DenseMatrix::zeros(rows, cols);
                for &(i, j) in r.ball.mask() {
                    mask[(i, j)] = 1.0;
                }
                put("m", &r.m, Kind::Dense)?;
                put("mask", &mask, Kind::Mask)?;
                if let Some((l, s)) = &r.planted {
                    put("l_true", l, Kind::Dense)?;
                    put("s_true", s, Kind::Dense)?;
                }
            }
        }
        matfile::write_atomic(&dir.join(MANIFEST), manifest.as_bytes())
    }

    /// Accepts the instance directory or its manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let dir: PathBuf =
            if path.is_dir() { path.to_path_buf() } else { path.parent().unwrap_or(Path::new(".")).to_path_buf() };
        let manifest_path = dir.join(MANIFEST);
        let text =
            fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
        let mut fields = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once(' ').with_context(|| format!("bad manifest line '{line}'"))?;
            fields.insert(k.to_string(), v.trim().to_string());
        }
        let scalar = |name: &str| -> Result<f64> {
            let v = fields.get(name).with_context(|| format!("manifest has no '{name}'"))?;
            v.parse().with_context(|| format!("bad value for '{name}': {v}"))
        };
        let get = |name: &str| matfile::read(&dir.join(format!("{name}.mat"))).map(|(m, _)| m);
        let get_opt = |name: &str| -> Result<Option<DenseMatrix>> {
            let p = dir.join(format!("{name}.mat"));
            if p.exists() {
                Ok(Some(matfile::read(&p)?.0))
            } else {
                Ok(None)
            }
        };
        let kind = fields.get("kind").map(String::as_str).unwrap_or("");
        Ok(match kind {
            "bp" => {
                let mut b = BpInstance::new(get("a")?, get("b")?.into_vec())?;
                b.x_planted = get_opt("x_true")?.map(DenseMatrix::into_vec);
                Instance::Bp(b)
            }
            "lvggms" => {
                let inst = LvggmsInstance::new(get("sigma_hat")?, scalar("alpha1")?, scalar("alpha2")?)?;
                let truth = match (get_opt("s_true")?, get_opt("l_true")?) {
                    (Some(s), Some(l)) => Some((s, l)),
                    _ => None,
                };
                Instance::Lvggms { inst, truth }
            }
            "rpca" => {
                let (mask_m, kind) = matfile::read(&dir.join("mask.mat"))?;
                if kind != Kind::Mask {
                    bail!("mask.mat must have kind mask");
                }
                let mask = (0..mask_m.rows())
                    .flat_map(|i| (0..mask_m.cols()).map(move |j| (i, j)))
                    .filter(|&(i, j)| mask_m[(i, j)] == 1.0)
                    .collect();
                let ball = MaskedBall::new(mask, scalar("delta")?)?;
                let mut r = RpcaInstance::new(get("m")?, scalar("tau_w")?, ball)?;
                r.planted = match (get_opt("l_true")?, get_opt("s_true")?) {
                    (Some(l), Some(s)) => Some((l, s)),
                    _ => None,
                };
                Instance::Rpca(r)
            }
            other => bail!("unknown instance kind '{other}' in {}", manifest_path.display()),
        })
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}
