//! Measurement-error correction by a clustered random-intercept model fitted
//! separately at every grid point.
//!
//! At a fixed time `t`, replicate `j` of subject `i` in cluster `c` is
//! modelled as
//!
//! ```text
//! w_cij = alpha_c + b_ci + u_cij,   b_ci ~ N(0, sigma_c^2),   u_cij ~ N(0, sigma^2)
//! ```
//!
//! The variance components come from the one-way ANOVA moment equations
//! (truncated at zero), which coincide with REML for balanced data whenever
//! the truncation is inactive. The residual variance is pooled over clusters;
//! the random-intercept variance is estimated per cluster. The predicted true
//! value is the BLUP `alpha_c + kappa (wbar_ci - alpha_c)` with shrinkage
//! `kappa = sigma_c^2 / (sigma_c^2 + sigma^2 / J_i)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{CorrectedCurves, FunctionalDataset, Memberships};

/// Variance components and cluster intercepts at one grid index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseFit {
    pub t_index: usize,
    /// Fixed intercept per cluster, indexed by `label - 1`.
    pub alpha: Vec<f64>,
    /// Random-intercept variance per cluster.
    pub sigma_c_sq: Vec<f64>,
    /// Pooled within-subject (measurement error) variance.
    pub sigma_sq: f64,
}

/// Mean and observed-replicate count of each subject; `NaN` entries skipped.
fn subject_summaries(w_slice: &DMatrix<f64>) -> Result<Vec<(f64, usize)>> {
    w_slice
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let (sum, count) = row
                .iter()
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            if count == 0 {
                Err(Error::Invalid(format!("subject {} has no observed replicate", i + 1)))
            } else {
                Ok((sum / count as f64, count))
            }
        })
        .collect()
}

/// Fits the random-intercept model to the `n x J` replicate values at one
/// grid index. `NaN` marks a missing replicate.
pub fn fit_pointwise(
    w_slice: &DMatrix<f64>,
    members: &Memberships,
    t_index: usize,
) -> Result<PointwiseFit> {
    if w_slice.nrows() != members.len() {
        return Err(Error::LengthMismatch {
            expected: members.len(),
            actual: w_slice.nrows(),
        });
    }
    let groups = members.groups();
    if let Some((c, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(Error::DegenerateCluster {
            cluster: c + 1,
            size: g.len(),
        });
    }
    let summaries = subject_summaries(w_slice)?;

    let mut ss_within = 0.0;
    let mut df_within = 0usize;
    for (row, &(mean, count)) in w_slice.row_iter().zip(&summaries) {
        ss_within += row.iter().filter(|v| !v.is_nan()).map(|v| (v - mean).powi(2)).sum::<f64>();
        df_within += count - 1;
    }
    if df_within == 0 {
        return Err(Error::Unidentifiable);
    }
    let sigma_sq = ss_within / df_within as f64;

    let mut alpha = Vec::with_capacity(groups.len());
    let mut sigma_c_sq = Vec::with_capacity(groups.len());
    for g in &groups {
        let n_c = g.len() as f64;
        let a = g.iter().map(|&i| summaries[i].0).sum::<f64>() / n_c;
        let spread = g.iter().map(|&i| (summaries[i].0 - a).powi(2)).sum::<f64>() / (n_c - 1.0);
        // E[spread] = sigma_c^2 + sigma^2 * mean(1 / J_i)
        let inv_j = g.iter().map(|&i| 1.0 / summaries[i].1 as f64).sum::<f64>() / n_c;
        alpha.push(a);
        sigma_c_sq.push((spread - sigma_sq * inv_j).max(0.0));
    }

    Ok(PointwiseFit {
        t_index,
        alpha,
        sigma_c_sq,
        sigma_sq,
    })
}

/// Shrinkage factor applied to a subject's deviation from its cluster mean.
pub fn shrinkage(fit: &PointwiseFit, cluster: usize, n_replicates: usize) -> f64 {
    let between = fit.sigma_c_sq[cluster - 1];
    let denom = between + fit.sigma_sq / n_replicates as f64;
    if denom > 0.0 {
        between / denom
    } else {
        0.0
    }
}

/// Best linear unbiased prediction of the subject's true value.
pub fn blup(subject_mean: f64, fit: &PointwiseFit, cluster: usize, n_replicates: usize) -> f64 {
    let alpha = fit.alpha[cluster - 1];
    alpha + shrinkage(fit, cluster, n_replicates) * (subject_mean - alpha)
}

fn slice_at(data: &FunctionalDataset, t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(data.n_subjects(), data.n_replicates(), |i, j| data.value(i, j, t))
}

/// Fits every grid index independently.
pub fn fit_all_points(data: &FunctionalDataset, members: &Memberships) -> Result<Vec<PointwiseFit>> {
    if members.len() != data.n_subjects() {
        return Err(Error::LengthMismatch {
            expected: data.n_subjects(),
            actual: members.len(),
        });
    }
    (0..data.n_times())
        .into_par_iter()
        .map(|t| {
            fit_pointwise(&slice_at(data, t), members, t).map_err(|e| Error::AtGridIndex {
                t_index: t,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Predicted true curves given a working partition of the subjects.
pub fn correct_curves(data: &FunctionalDataset, members: &Memberships) -> Result<CorrectedCurves> {
    let fits = fit_all_points(data, members)?;
    let labels = members.labels();
    let mut x_hat = DMatrix::zeros(data.n_subjects(), data.n_times());
    for (t, fit) in fits.iter().enumerate() {
        for i in 0..data.n_subjects() {
            let (sum, count) = data
                .replicates_at(i, t)
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            x_hat[(i, t)] = blup(sum / count as f64, fit, labels[i], count);
        }
    }
    CorrectedCurves::new(data.grid().clone(), x_hat)
}
