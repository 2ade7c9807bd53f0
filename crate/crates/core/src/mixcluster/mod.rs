//! Model-based clustering of coefficient vectors with Gaussian mixtures.
//!
//! Component covariances follow the volume/shape/orientation decomposition
//! `Sigma_c = lambda_c D_c A_c D_c'`. Six families are supported: spherical
//! (`EII`, `VII`), diagonal (`EEI`, `VVI`) and unconstrained (`EEE`, `VVV`),
//! where the first letters say whether volume and shape are Equal across
//! components or Vary, and `I` means axis-aligned orientation.
//!
//! Parameters are fitted by EM from a hard starting partition and models are
//! compared by `BIC = 2 log L - m log n` (larger is better).

mod init;

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{matrix_rows, Memberships};
use crate::simgen::mix_seed;

pub use init::{kmeans_plus_plus, lloyd, ward_partition, ward_tree, WardTree};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovFamily {
    EII,
    VII,
    EEI,
    VVI,
    EEE,
    VVV,
}

impl CovFamily {
    pub const ALL: [CovFamily; 6] = [
        CovFamily::EII,
        CovFamily::VII,
        CovFamily::EEI,
        CovFamily::VVI,
        CovFamily::EEE,
        CovFamily::VVV,
    ];

    pub fn code(self) -> &'static str {
        match self {
            CovFamily::EII => "EII",
            CovFamily::VII => "VII",
            CovFamily::EEI => "EEI",
            CovFamily::VVI => "VVI",
            CovFamily::EEE => "EEE",
            CovFamily::VVV => "VVV",
        }
    }

    /// Covariance parameters for `c` components in dimension `k`.
    fn cov_params(self, c: usize, k: usize) -> usize {
        match self {
            CovFamily::EII => 1,
            CovFamily::VII => c,
            CovFamily::EEI => k,
            CovFamily::VVI => c * k,
            CovFamily::EEE => k * (k + 1) / 2,
            CovFamily::VVV => c * k * (k + 1) / 2,
        }
    }

    fn is_full(self) -> bool {
        matches!(self, CovFamily::EEE | CovFamily::VVV)
    }

    fn is_pooled(self) -> bool {
        matches!(self, CovFamily::EII | CovFamily::EEI | CovFamily::EEE)
    }
}

impl fmt::Display for CovFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for CovFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CovFamily::ALL
            .into_iter()
            .find(|f| f.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown covariance family `{s}`")))
    }
}

/// Number of free parameters `m` used in the BIC penalty.
pub fn param_count(family: CovFamily, n_components: usize, dim: usize) -> usize {
    (n_components - 1) + n_components * dim + family.cov_params(n_components, dim)
}

/// `2 loglik - m ln n`; larger is better.
pub fn bic(loglik: f64, n_params: usize, n_obs: usize) -> f64 {
    2.0 * loglik - n_params as f64 * (n_obs as f64).ln()
}

/// Mixture parameters: weights, `C x K` means and one `K x K` covariance per
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: DMatrix<f64>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl MixtureParams {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub family: CovFamily,
    pub params: MixtureParams,
    /// `n x C` posterior membership probabilities.
    pub resp: DMatrix<f64>,
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after every E-step of the final EM run.
    pub loglik_trace: Vec<f64>,
    /// Components removed because their weight vanished.
    pub dropped_components: usize,
    /// The eigenvalue floor was active, or a full covariance had fewer than
    /// `K + 1` effective observations, at the final M-step.
    pub ill_conditioned: bool,
}

impl GmmFit {
    pub fn n_components(&self) -> usize {
        self.params.n_components()
    }
}

/// Serializable view of a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmFitExport {
    pub family: CovFamily,
    #[serde(rename = "C")]
    pub n_components: usize,
    pub pi: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<Vec<f64>>>,
    pub resp: Vec<Vec<f64>>,
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    pub dropped_components: usize,
    pub ill_conditioned: bool,
    pub labels: Vec<usize>,
}

impl From<&GmmFit> for GmmFitExport {
    fn from(fit: &GmmFit) -> Self {
        Self {
            family: fit.family,
            n_components: fit.n_components(),
            pi: fit.params.weights.clone(),
            mu: matrix_rows(&fit.params.means),
            sigma: fit.params.covariances.iter().map(matrix_rows).collect(),
            resp: matrix_rows(&fit.resp),
            loglik: fit.loglik,
            bic: fit.bic,
            n_params: fit.n_params,
            iterations: fit.iterations,
            converged: fit.converged,
            dropped_components: fit.dropped_components,
            ill_conditioned: fit.ill_conditioned,
            labels: hard_assign(fit).labels().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once the log-likelihood gain falls below `rel_tol * |loglik|`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Start from a hard partition with exactly `C` clusters.
    Hard(Memberships),
    /// k-means++ seeding from the given seed, refined by Lloyd iterations.
    Random(u64),
}

/// Row-major copy of an `n x K` data matrix.
struct Points {
    n: usize,
    k: usize,
    flat: Vec<f64>,
}

impl Points {
    fn new(data: &DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("mixture data must be finite".into()));
        }
        let (n, k) = data.shape();
        if n == 0 || k == 0 {
            return Err(Error::Invalid("mixture data is empty".into()));
        }
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(4.0 * max_abs * max_abs * k as f64).is_finite() {
            return Err(Error::Numerical(format!(
                "squared distances overflow for values of magnitude {max_abs:e}"
            )));
        }
        let mut flat = Vec::with_capacity(n * k);
        for i in 0..n {
            flat.extend(data.row(i).iter());
        }
        Ok(Self { n, k, flat })
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.flat[i * self.k..(i + 1) * self.k]
    }
}

/// Eigenvalue floor `1e-8 tr(S) / K` from the overall sample covariance.
fn variance_floor(points: &Points) -> f64 {
    let (n, k) = (points.n as f64, points.k);
    let mut trace = 0.0;
    for d in 0..k {
        let mean = (0..points.n).map(|i| points.row(i)[d]).sum::<f64>() / n;
        trace += (0..points.n).map(|i| (points.row(i)[d] - mean).powi(2)).sum::<f64>() / n;
    }
    let floor = 1e-8 * trace / k as f64;
    if floor > 0.0 {
        floor
    } else {
        1e-12
    }
}

/// Log-density evaluator for one component.
enum Density {
    Spherical { var: f64 },
    Diagonal { inv_var: Vec<f64>, log_det: f64 },
    Full { chol: Vec<f64>, log_det: f64 },
}

impl Density {
    fn new(cov: &DMatrix<f64>, family: CovFamily) -> Result<Self> {
        let k = cov.nrows();
        match family {
            CovFamily::EII | CovFamily::VII => {
                let var = cov[(0, 0)];
                if !(var > 0.0) {
                    return Err(Error::Numerical("non-positive spherical variance".into()));
                }
                Ok(Density::Spherical { var })
            }
            CovFamily::EEI | CovFamily::VVI => {
                let diag: Vec<f64> = cov.diagonal().iter().copied().collect();
                if diag.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Numerical("non-positive diagonal variance".into()));
                }
                Ok(Density::Diagonal {
                    log_det: diag.iter().map(|v| v.ln()).sum(),
                    inv_var: diag.iter().map(|v| 1.0 / v).collect(),
                })
            }
            CovFamily::EEE | CovFamily::VVV => {
                let chol = nalgebra::Cholesky::new(cov.clone())
                    .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
                let l = chol.l();
                let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let mut flat = Vec::with_capacity(k * k);
                for a in 0..k {
                    for b in 0..k {
                        flat.push(l[(a, b)]);
                    }
                }
                Ok(Density::Full {
                    chol: flat,
                    log_det,
                })
            }
        }
    }

    /// `log N(x | mean, Sigma)`; `scratch` must have length `K`.
    fn log_pdf(&self, x: &[f64], mean: &[f64], scratch: &mut [f64]) -> f64 {
        let k = x.len();
        match self {
            Density::Spherical { var } => {
                let d2: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                -0.5 * (k as f64 * (LN_2PI + var.ln()) + d2 / var)
            }
            Density::Diagonal { inv_var, log_det } => {
                let d2: f64 = x
                    .iter()
                    .zip(mean)
                    .zip(inv_var)
                    .map(|((a, b), w)| (a - b) * (a - b) * w)
                    .sum();
                -0.5 * (k as f64 * LN_2PI + log_det + d2)
            }
            Density::Full { chol, log_det } => {
                let mut d2 = 0.0;
                for a in 0..k {
                    let row = &chol[a * k..a * k + a];
                    let mut acc = x[a] - mean[a];
                    for (b, l) in row.iter().enumerate() {
                        acc -= l * scratch[b];
                    }
                    let v = acc / chol[a * k + a];
                    scratch[a] = v;
                    d2 += v * v;
                }
                -0.5 * (k as f64 * LN_2PI + log_det + d2)
            }
        }
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn e_step_points(
    params: &MixtureParams,
    family: CovFamily,
    points: &Points,
) -> Result<(DMatrix<f64>, f64)> {
    let c = params.n_components();
    let densities = params
        .covariances
        .iter()
        .map(|cov| Density::new(cov, family))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<Vec<f64>> =
        (0..c).map(|j| params.means.row(j).iter().copied().collect()).collect();
    let log_w: Vec<f64> = params.weights.iter().map(|w| w.ln()).collect();

    let mut resp = DMatrix::zeros(points.n, c);
    let mut loglik = 0.0;
    let mut scratch = vec![0.0; points.k];
    let mut terms = vec![0.0; c];
    for i in 0..points.n {
        let x = points.row(i);
        for j in 0..c {
            terms[j] = log_w[j] + densities[j].log_pdf(x, &means[j], &mut scratch);
        }
        let total = log_sum_exp(&terms);
        if !total.is_finite() {
            return Err(Error::DensityUnderflow { row: i });
        }
        loglik += total;
        for j in 0..c {
            resp[(i, j)] = (terms[j] - total).exp();
        }
    }
    Ok((resp, loglik))
}

/// Posterior membership probabilities and the observed-data log-likelihood.
pub fn e_step(
    params: &MixtureParams,
    family: CovFamily,
    data: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    if data.ncols() != params.dim() {
        return Err(Error::LengthMismatch {
            expected: params.dim(),
            actual: data.ncols(),
        });
    }
    e_step_points(params, family, &Points::new(data)?)
}

struct MStep {
    params: MixtureParams,
    ill_conditioned: bool,
}

fn clamp_full(cov: &mut DMatrix<f64>, floor: f64) -> bool {
    let sym = (&*cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|e| *e >= floor) {
        *cov = sym;
        return false;
    }
    let clamped = eig.eigenvalues.map(|e| e.max(floor));
    *cov = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    *cov = (&*cov + cov.transpose()) * 0.5;
    true
}

fn m_step_points(
    resp: &DMatrix<f64>,
    points: &Points,
    family: CovFamily,
    floor: f64,
) -> MStep {
    let (n, k) = (points.n, points.k);
    let c = resp.ncols();
    let nk: Vec<f64> = (0..c).map(|j| resp.column(j).sum()).collect();
    let mut means = DMatrix::zeros(c, k);
    for j in 0..c {
        for i in 0..n {
            let w = resp[(i, j)];
            if w != 0.0 {
                for (d, x) in points.row(i).iter().enumerate() {
                    means[(j, d)] += w * x;
                }
            }
        }
        for d in 0..k {
            means[(j, d)] /= nk[j];
        }
    }

    // Weighted scatter per component; only what the family needs.
    let mut scatter: Vec<DMatrix<f64>> = Vec::with_capacity(c);
    let mut diff = vec![0.0; k];
    for j in 0..c {
        let mut s = DMatrix::zeros(k, k);
        for i in 0..n {
            let w = resp[(i, j)];
            if w == 0.0 {
                continue;
            }
            for d in 0..k {
                diff[d] = points.row(i)[d] - means[(j, d)];
            }
            if family.is_full() {
                for a in 0..k {
                    let wa = w * diff[a];
                    for b in 0..=a {
                        s[(a, b)] += wa * diff[b];
                    }
                }
            } else {
                for d in 0..k {
                    s[(d, d)] += w * diff[d] * diff[d];
                }
            }
        }
        if family.is_full() {
            for a in 0..k {
                for b in 0..a {
                    s[(b, a)] = s[(a, b)];
                }
            }
        }
        scatter.push(s);
    }

    let mut ill = false;
    let covariances: Vec<DMatrix<f64>> = match family {
        CovFamily::EII => {
            let tr: f64 = scatter.iter().map(|s| s.trace()).sum();
            let mut v = tr / (n as f64 * k as f64);
            if v < floor {
                v = floor;
                ill = true;
            }
            vec![DMatrix::identity(k, k) * v; c]
        }
        CovFamily::VII => scatter
            .iter()
            .zip(&nk)
            .map(|(s, nj)| {
                let mut v = s.trace() / (nj * k as f64);
                if !(v >= floor) {
                    v = floor;
                    ill = true;
                }
                DMatrix::identity(k, k) * v
            })
            .collect(),
        CovFamily::EEI => {
            let mut diag = DVector::zeros(k);
            for s in &scatter {
                diag += s.diagonal();
            }
            diag /= n as f64;
            for v in diag.iter_mut() {
                if *v < floor {
                    *v = floor;
                    ill = true;
                }
            }
            vec![DMatrix::from_diagonal(&diag); c]
        }
        CovFamily::VVI => scatter
            .iter()
            .zip(&nk)
            .map(|(s, nj)| {
                let mut diag = s.diagonal() / *nj;
                for v in diag.iter_mut() {
                    if !(*v >= floor) {
                        *v = floor;
                        ill = true;
                    }
                }
                DMatrix::from_diagonal(&diag)
            })
            .collect(),
        CovFamily::EEE => {
            let mut pooled = DMatrix::zeros(k, k);
            for s in &scatter {
                pooled += s;
            }
            pooled /= n as f64;
            ill |= clamp_full(&mut pooled, floor);
            vec![pooled; c]
        }
        CovFamily::VVV => scatter
            .iter()
            .zip(&nk)
            .map(|(s, nj)| {
                let mut cov = s / *nj;
                ill |= clamp_full(&mut cov, floor);
                ill |= *nj < (k + 1) as f64;
                cov
            })
            .collect(),
    };
    debug_assert!(family.is_pooled() || covariances.len() == c);

    MStep {
        params: MixtureParams {
            weights: nk.iter().map(|v| v / n as f64).collect(),
            means,
            covariances,
        },
        ill_conditioned: ill,
    }
}

/// Family-constrained maximizer of the expected complete-data
/// log-likelihood. Eigenvalues are floored at `1e-8 tr(S) / K`, with `S` the
/// overall sample covariance of `data`.
pub fn m_step(resp: &DMatrix<f64>, data: &DMatrix<f64>, family: CovFamily) -> Result<MixtureParams> {
    if resp.nrows() != data.nrows() {
        return Err(Error::LengthMismatch {
            expected: data.nrows(),
            actual: resp.nrows(),
        });
    }
    let points = Points::new(data)?;
    if let Some(i) = (0..resp.nrows()).find(|&i| (resp.row(i).sum() - 1.0).abs() > 1e-8) {
        return Err(Error::Invalid(format!("responsibility row {i} does not sum to 1")));
    }
    if let Some(j) = (0..resp.ncols()).find(|&j| resp.column(j).sum() <= 0.0) {
        return Err(Error::Numerical(format!("component {} has zero weight", j + 1)));
    }
    Ok(m_step_points(resp, &points, family, variance_floor(&points)).params)
}

fn one_hot(members: &Memberships) -> DMatrix<f64> {
    let mut resp = DMatrix::zeros(members.len(), members.n_clusters());
    for (i, &l) in members.labels().iter().enumerate() {
        resp[(i, l - 1)] = 1.0;
    }
    resp
}

fn drop_column(resp: &DMatrix<f64>, col: usize) -> DMatrix<f64> {
    let mut out = resp.clone().remove_column(col);
    let c = out.ncols();
    for i in 0..out.nrows() {
        let s = out.row(i).sum();
        if s > 1e-300 {
            for j in 0..c {
                out[(i, j)] /= s;
            }
        } else {
            for j in 0..c {
                out[(i, j)] = 1.0 / c as f64;
            }
        }
    }
    out
}

/// Runs EM for a fixed number of components and covariance family.
pub fn em_fit(
    data: &DMatrix<f64>,
    n_components: usize,
    family: CovFamily,
    init: &Init,
    opts: &EmOptions,
) -> Result<GmmFit> {
    let points = Points::new(data)?;
    if n_components == 0 {
        return Err(Error::Invalid("need at least one component".into()));
    }
    if points.n <= n_components {
        return Err(Error::Invalid(format!(
            "need more observations ({}) than components ({n_components})",
            points.n
        )));
    }
    let start = match init {
        Init::Hard(m) => {
            if m.len() != points.n {
                return Err(Error::LengthMismatch {
                    expected: points.n,
                    actual: m.len(),
                });
            }
            if m.n_clusters() != n_components {
                return Err(Error::Invalid(format!(
                    "initial partition has {} clusters, expected {n_components}",
                    m.n_clusters()
                )));
            }
            m.clone()
        }
        Init::Random(seed) => {
            let centers = kmeans_plus_plus(data, n_components, *seed);
            lloyd(data, centers, 100)
        }
    };
    let floor = variance_floor(&points);
    run_em(&points, one_hot(&start), family, opts, floor, 0)
}

fn run_em(
    points: &Points,
    mut resp: DMatrix<f64>,
    family: CovFamily,
    opts: &EmOptions,
    floor: f64,
    dropped: usize,
) -> Result<GmmFit> {
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (params, resp, loglik, ill) = loop {
        let weights: Vec<f64> = (0..resp.ncols()).map(|j| resp.column(j).sum()).collect();
        if resp.ncols() > 1 {
            if let Some(j) = weights.iter().position(|w| *w < 1.0) {
                log::debug!("dropping vanished component {} of {}", j + 1, resp.ncols());
                let reduced = drop_column(&resp, j);
                return run_em(points, reduced, family, opts, floor, dropped + 1);
            }
        }
        let step = m_step_points(&resp, points, family, floor);
        let (new_resp, ll) = e_step_points(&step.params, family, points)?;
        iterations += 1;
        let prev = trace.last().copied();
        trace.push(ll);
        resp = new_resp;
        if let Some(prev) = prev {
            if ll - prev < opts.rel_tol * ll.abs() {
                converged = true;
            }
        }
        if converged || iterations >= opts.max_iter {
            break (step.params, resp, ll, step.ill_conditioned);
        }
    };
    if ill {
        log::debug!("{family} fit with {} components is ill-conditioned", params.n_components());
    }
    let c = params.n_components();
    let n_params = param_count(family, c, points.k);
    Ok(GmmFit {
        family,
        params,
        resp,
        loglik,
        bic: bic(loglik, n_params, points.n),
        n_params,
        iterations,
        converged,
        loglik_trace: trace,
        dropped_components: dropped,
        ill_conditioned: ill,
    })
}

/// `argmax_c tau_ic` per row (ties to the lower component), with empty
/// components squeezed out of the label range.
pub fn hard_assign(fit: &GmmFit) -> Memberships {
    let raw: Vec<usize> = fit
        .resp
        .row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, &v)| if v > bv { (j, v) } else { (bj, bv) })
                .0
        })
        .collect();
    let c = fit.n_components();
    let mut used = vec![false; c];
    for &j in &raw {
        used[j] = true;
    }
    let mut remap = vec![0; c];
    let mut next = 0;
    for j in 0..c {
        if used[j] {
            next += 1;
            remap[j] = next;
        }
    }
    Memberships::new(raw.into_iter().map(|j| remap[j]).collect()).expect("labels are compact")
}

/// Volume, orientation and shape of a covariance: `Sigma = lambda D A D'`
/// with `det A = 1` and the shape entries sorted decreasingly.
pub fn decompose(cov: &DMatrix<f64>) -> (f64, DMatrix<f64>, DVector<f64>) {
    let k = cov.nrows();
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = DVector::from_iterator(k, order.iter().map(|&j| eig.eigenvalues[j]));
    let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let volume = (values.iter().map(|v| v.ln()).sum::<f64>() / k as f64).exp();
    (volume, vectors, values / volume)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOptions {
    pub c_range: Vec<usize>,
    pub families: Vec<CovFamily>,
    /// Random restarts per `C`, on top of the deterministic hierarchical
    /// start.
    pub restarts: usize,
    pub seed: u64,
    pub em: EmOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            c_range: (1..=9).collect(),
            families: CovFamily::ALL.to_vec(),
            restarts: 5,
            seed: 0,
            em: EmOptions::default(),
        }
    }
}

/// One row of the BIC table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(rename = "C")]
    pub n_components: usize,
    /// Components actually present after vanished ones were dropped.
    pub fitted_components: usize,
    pub family: CovFamily,
    /// `"hier"` or `"random:<r>"`.
    pub init: String,
    pub loglik: Option<f64>,
    /// `None` when the fit failed or is ill-conditioned; such fits do not
    /// compete.
    pub bic: Option<f64>,
    pub n_params: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ModelSelection {
    pub best: GmmFit,
    pub candidates: Vec<Candidate>,
}

fn better(a: &GmmFit, b: &GmmFit) -> bool {
    if a.bic != b.bic {
        return a.bic > b.bic;
    }
    if a.n_params != b.n_params {
        return a.n_params < b.n_params;
    }
    a.n_components() < b.n_components()
}

/// Fits every `(C, family, start)` combination and keeps the best BIC.
/// Ties go to fewer parameters, then fewer components, then the earlier
/// candidate.
pub fn select_model(data: &DMatrix<f64>, opts: &SelectionOptions) -> Result<ModelSelection> {
    if opts.c_range.is_empty() || opts.families.is_empty() {
        return Err(Error::Invalid("component range and family set must be non-empty".into()));
    }
    let n = data.nrows();
    let mut c_values: Vec<usize> = opts.c_range.iter().copied().filter(|&c| c >= 1 && c < n).collect();
    c_values.sort_unstable();
    c_values.dedup();
    if c_values.is_empty() {
        return Err(Error::Invalid(format!(
            "no admissible component count below n = {n} in {:?}",
            opts.c_range
        )));
    }
    let points = Points::new(data)?;

    let tree = ward_tree(data);
    let starts: Vec<(usize, String, Memberships)> = c_values
        .par_iter()
        .flat_map_iter(|&c| {
            let mut v = Vec::new();
            let hier = ward_partition(&tree, c);
            let centers = init::centroids(data, &hier);
            v.push((c, "hier".to_string(), lloyd(data, centers, 100)));
            if c > 1 {
                for r in 0..opts.restarts {
                    let seed = mix_seed(opts.seed, (c * 1_000 + r) as u64);
                    let centers = kmeans_plus_plus(data, c, seed);
                    v.push((c, format!("random:{r}"), lloyd(data, centers, 100)));
                }
            }
            v
        })
        .collect();

    let floor = variance_floor(&points);
    let jobs: Vec<(usize, CovFamily)> = (0..starts.len())
        .flat_map(|s| opts.families.iter().map(move |&f| (s, f)))
        .collect();
    let results: Vec<(Candidate, Option<GmmFit>)> = jobs
        .par_iter()
        .map(|&(s, family)| {
            let (c, label, start) = &starts[s];
            let fit = if start.n_clusters() == *c {
                run_em(&points, one_hot(start), family, &opts.em, floor, 0)
            } else {
                Err(Error::Numerical(format!("start `{label}` produced empty clusters")))
            };
            match fit {
                Ok(fit) => (
                    Candidate {
                        n_components: *c,
                        fitted_components: fit.n_components(),
                        family,
                        init: label.clone(),
                        loglik: Some(fit.loglik),
                        bic: (!fit.ill_conditioned).then_some(fit.bic),
                        n_params: fit.n_params,
                        converged: fit.converged,
                        error: None,
                    },
                    Some(fit),
                ),
                Err(e) => (
                    Candidate {
                        n_components: *c,
                        fitted_components: 0,
                        family,
                        init: label.clone(),
                        loglik: None,
                        bic: None,
                        n_params: param_count(family, *c, points.k),
                        converged: false,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best: Option<&GmmFit> = None;
    let mut fallback: Option<&GmmFit> = None;
    for (_, fit) in &results {
        let Some(fit) = fit else { continue };
        let slot = if fit.ill_conditioned { &mut fallback } else { &mut best };
        if slot.is_none_or(|b| better(fit, b)) {
            *slot = Some(fit);
        }
    }
    let Some(chosen) = best.or(fallback) else {
        return Err(Error::AllFitsFailed(
            results.iter().filter_map(|(c, _)| c.error.clone()).collect(),
        ));
    };
    if best.is_none() {
        log::warn!("every candidate fit is ill-conditioned; keeping the best of them");
    }
    let best = chosen.clone();
    Ok(ModelSelection {
        best,
        candidates: results.into_iter().map(|(c, _)| c).collect(),
    })
}
