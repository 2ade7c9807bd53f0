//! Synthetic replicate-contaminated functional data.
//!
//! Subjects come in three equal groups with fixed mean shapes. Each true
//! curve is its group mean plus a zero-mean Gaussian-process deviation, and
//! each of the `J` replicates adds an independent Gaussian-process error.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalDataset, Memberships, TimeGrid};

pub const DEFAULT_GRID_SIZE: usize = 200;
pub const DEFAULT_REPLICATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovStructure {
    /// `sigma^2 exp(-(s - t)^2 / (2 rho^2))`. Also accepted as `ar1`.
    #[serde(rename = "sqexp", alias = "ar1")]
    SquaredExponential,
    #[serde(rename = "independent")]
    Independent,
    #[serde(rename = "compound", alias = "cs")]
    CompoundSymmetry,
}

impl CovStructure {
    pub fn name(self) -> &'static str {
        match self {
            CovStructure::SquaredExponential => "sqexp",
            CovStructure::Independent => "independent",
            CovStructure::CompoundSymmetry => "compound",
        }
    }
}

impl std::str::FromStr for CovStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqexp" | "ar1" => Ok(CovStructure::SquaredExponential),
            "independent" => Ok(CovStructure::Independent),
            "compound" | "cs" => Ok(CovStructure::CompoundSymmetry),
            other => Err(Error::Invalid(format!("unknown covariance structure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub structure: CovStructure,
    pub sigma: f64,
    #[serde(default)]
    pub rho: f64,
}

impl CovarianceSpec {
    pub fn new(structure: CovStructure, sigma: f64, rho: f64) -> Result<Self> {
        let spec = Self {
            structure,
            sigma,
            rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        match self.structure {
            CovStructure::CompoundSymmetry if !(0.0..1.0).contains(&self.rho) => Err(
                Error::Invalid(format!("compound symmetry needs rho in [0, 1), got {}", self.rho)),
            ),
            CovStructure::SquaredExponential if !(self.rho > 0.0) => Err(Error::Invalid(
                format!("squared-exponential needs rho > 0, got {}", self.rho),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    #[serde(rename = "J", alias = "j", default = "default_replicates")]
    pub replicates: usize,
    #[serde(rename = "T", alias = "t", default = "default_grid_size")]
    pub grid_size: usize,
    pub x_cov: CovarianceSpec,
    pub u_cov: CovarianceSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

impl ScenarioConfig {
    /// Same structure and `rho` for the true-curve and error processes, with
    /// the default `J` and `T`.
    pub fn new(
        n: usize,
        structure: CovStructure,
        sigma_x: f64,
        sigma_u: f64,
        rho: f64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            n,
            replicates: DEFAULT_REPLICATES,
            grid_size: DEFAULT_GRID_SIZE,
            x_cov: CovarianceSpec::new(structure, sigma_x, rho)?,
            u_cov: CovarianceSpec::new(structure, sigma_u, rho)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n % 3 != 0 {
            return Err(Error::Invalid(format!(
                "n must be a positive multiple of 3, got {}",
                self.n
            )));
        }
        if self.replicates < 1 {
            return Err(Error::Invalid("J must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Invalid("T must be at least 2".into()));
        }
        self.x_cov.validate()?;
        self.u_cov.validate()
    }
}

/// Group mean curves. `group` is 1, 2 or 3.
pub fn mean_function(group: usize, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Range(format!("time {t} is outside [0, 1]")));
    }
    match group {
        1 => Ok((2.0 * PI * t).sin()),
        2 => {
            let u = 16.0 * (t - 0.5);
            Ok((PI * u / 2.0).sin() / (1.0 + (2.0 * u * u) * ((8.0 * (t - 0.5)).sin() + 1.0)))
        }
        3 => Ok(1.0 - 2.0 * (-6.0 * t).exp()),
        g => Err(Error::Invalid(format!("group must be 1, 2 or 3, got {g}"))),
    }
}

pub fn build_covariance(spec: &CovarianceSpec, grid: &TimeGrid) -> DMatrix<f64> {
    let pts = grid.points();
    let var = spec.sigma * spec.sigma;
    DMatrix::from_fn(pts.len(), pts.len(), |a, b| match spec.structure {
        CovStructure::SquaredExponential => {
            let d = pts[a] - pts[b];
            var * (-(d * d) / (2.0 * spec.rho * spec.rho)).exp()
        }
        CovStructure::Independent => {
            if a == b {
                var
            } else {
                0.0
            }
        }
        CovStructure::CompoundSymmetry => {
            if a == b {
                var
            } else {
                var * spec.rho
            }
        }
    })
}

/// A Cholesky factor ready for repeated Gaussian draws.
#[derive(Debug, Clone)]
pub struct GpSampler {
    // None for an all-zero covariance
    factor: Option<DMatrix<f64>>,
    dim: usize,
    jitter: f64,
}

impl GpSampler {
    /// Factorizes `cov + jitter * I`, escalating the jitter from `1e-10` to
    /// `1e-6` times the largest variance.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if cov.ncols() != dim {
            return Err(Error::Invalid("covariance must be square".into()));
        }
        let scale = cov.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
        if scale == 0.0 && cov.iter().all(|v| *v == 0.0) {
            return Ok(Self {
                factor: None,
                dim,
                jitter: 0.0,
            });
        }
        let mut jitter = 1e-10 * scale;
        while jitter <= 1e-6 * scale * (1.0 + 1e-9) {
            let mut shifted = cov.clone();
            for k in 0..dim {
                shifted[(k, k)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(Self {
                    factor: Some(chol.l()),
                    dim,
                    jitter,
                });
            }
            jitter *= 10.0;
        }
        Err(Error::Cholesky { jitter: jitter / 10.0 })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `mean + L z` with `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, mean: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let mut out = mean.clone();
        if let Some(l) = &self.factor {
            let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            for a in 0..self.dim {
                let mut acc = 0.0;
                for (b, zb) in z.iter().enumerate().take(a + 1) {
                    acc += l[(a, b)] * zb;
                }
                out[a] += acc;
            }
        }
        out
    }
}

pub fn sample_gp<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if mean.len() != cov.nrows() {
        return Err(Error::LengthMismatch {
            expected: cov.nrows(),
            actual: mean.len(),
        });
    }
    Ok(GpSampler::new(cov)?.sample(mean, rng))
}

/// splitmix64 finalizer; combines a base seed with a stream index.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one subject of one dataset.
pub fn subject_rng(seed: u64, subject: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subject as u64);
    rng
}

pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<FunctionalDataset> {
    cfg.validate()?;
    let grid = TimeGrid::uniform(cfg.grid_size)?;
    let t_len = grid.len();
    let x_sampler = GpSampler::new(&build_covariance(&cfg.x_cov, &grid))?;
    let u_sampler = GpSampler::new(&build_covariance(&cfg.u_cov, &grid))?;
    let group_size = cfg.n / 3;

    let means: Vec<DVector<f64>> = (1..=3)
        .map(|g| {
            DVector::from_iterator(
                t_len,
                grid.points().iter().map(|&t| mean_function(g, t).expect("valid group and time")),
            )
        })
        .collect::<Vec<_>>();
    let zero = DVector::zeros(t_len);

    let mut w = Vec::with_capacity(cfg.n * cfg.replicates * t_len);
    let mut true_x = DMatrix::zeros(cfg.n, t_len);
    let mut labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let group = i / group_size + 1;
        let mut rng = subject_rng(cfg.seed, i);
        let x = x_sampler.sample(&means[group - 1], &mut rng);
        for _ in 0..cfg.replicates {
            let u = u_sampler.sample(&zero, &mut rng);
            w.extend(x.iter().zip(u.iter()).map(|(a, b)| a + b));
        }
        true_x.set_row(i, &x.transpose());
        labels.push(group);
    }
    FunctionalDataset::new(
        grid,
        cfg.n,
        cfg.replicates,
        w,
        Some(true_x),
        Some(Memberships::new(labels)?),
    )
}
