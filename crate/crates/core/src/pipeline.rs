//! The two-stage iterative clustering procedure and its comparison
//! baselines.
//!
//! Starting from an initial partition (clustering of one replicate or of the
//! replicate means), each outer iteration
//!
//! 1. corrects the curves with the pointwise clustered mixed model under the
//!    current partition,
//! 2. smooths the corrected curves into spline coefficients,
//! 3. re-clusters the coefficients by BIC-selected Gaussian mixtures,
//!
//! and stops once the partition no longer changes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{partitions_equal, CorrectedCurves, FunctionalDataset, Memberships, TimeGrid};
use crate::mecorrect::correct_curves;
use crate::mixcluster::{hard_assign, select_model, Candidate, GmmFit, SelectionOptions};
use crate::smooth::{coefficients_for_rows, default_n_basis, CoefficientMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// Cluster the first replicate.
    Naive,
    /// Cluster the per-subject replicate means.
    Average,
    /// Use a supplied partition.
    Given(Memberships),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Cluster the true curves.
    Oracle,
    /// Cluster the first replicate.
    Naive,
    /// Cluster the replicate means.
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub init_mode: InitMode,
    /// Number of spline basis functions; derived from `n` and `T` if unset.
    pub n_basis: Option<usize>,
    pub selection: SelectionOptions,
    pub max_outer_iter: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            init_mode: InitMode::Average,
            n_basis: None,
            selection: SelectionOptions::default(),
            max_outer_iter: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub members: Memberships,
    pub fit: GmmFit,
    /// The curves that were smoothed in the final pass.
    pub corrected: CorrectedCurves,
    pub coefficients: CoefficientMatrix,
    /// BIC table of the final model selection.
    pub candidates: Vec<Candidate>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Membership changes recorded after each outer iteration.
    pub history: Vec<usize>,
}

fn n_basis_for(opts: &PipelineOptions, n: usize, grid: &TimeGrid) -> usize {
    opts.n_basis.unwrap_or_else(|| default_n_basis(n, grid.len()))
}

/// Smooths the rows of `curves`, selects a mixture and hard-assigns.
pub fn cluster_curves(
    curves: &DMatrix<f64>,
    grid: &TimeGrid,
    opts: &PipelineOptions,
) -> Result<ClusteringResult> {
    let coef = coefficients_for_rows(curves, grid, n_basis_for(opts, curves.nrows(), grid))?;
    let sel = select_model(&coef.gamma, &opts.selection)?;
    let members = hard_assign(&sel.best);
    Ok(ClusteringResult {
        members,
        fit: sel.best,
        corrected: CorrectedCurves::new(grid.clone(), curves.clone())?,
        coefficients: coef,
        candidates: sel.candidates,
        outer_iterations: 0,
        converged: true,
        history: Vec::new(),
    })
}

/// Single-pass clustering without measurement-error correction.
pub fn baseline(
    data: &FunctionalDataset,
    kind: Baseline,
    opts: &PipelineOptions,
) -> Result<ClusteringResult> {
    let curves = match kind {
        Baseline::Oracle => data
            .true_x()
            .cloned()
            .ok_or_else(|| Error::Invalid("oracle baseline needs true curves".into()))?,
        Baseline::Naive => data.replicate_curves(0),
        Baseline::Average => data.replicate_means(),
    };
    cluster_curves(&curves, data.grid(), opts)
}

/// The starting partition for the outer loop.
pub fn initial_clusters(data: &FunctionalDataset, opts: &PipelineOptions) -> Result<Memberships> {
    match &opts.init_mode {
        InitMode::Naive => Ok(baseline(data, Baseline::Naive, opts)?.members),
        InitMode::Average => Ok(baseline(data, Baseline::Average, opts)?.members),
        InitMode::Given(m) => {
            if m.len() != data.n_subjects() {
                return Err(Error::LengthMismatch {
                    expected: data.n_subjects(),
                    actual: m.len(),
                });
            }
            Ok(m.clone())
        }
    }
}

/// Subjects outside the best one-to-one label matching (greedy on the
/// contingency table). Zero iff the partitions are equal.
pub fn membership_changes(prev: &Memberships, next: &Memberships) -> usize {
    let (r, c) = (prev.n_clusters(), next.n_clusters());
    let mut table = vec![0usize; r * c];
    for (&a, &b) in prev.labels().iter().zip(next.labels()) {
        table[(a - 1) * c + (b - 1)] += 1;
    }
    let mut cells: Vec<(usize, usize, usize)> = (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| (table[i * c + j], i, j))
        .filter(|(v, _, _)| *v > 0)
        .collect();
    cells.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let (mut used_r, mut used_c) = (vec![false; r], vec![false; c]);
    let mut matched = 0;
    for (v, i, j) in cells {
        if !used_r[i] && !used_c[j] {
            used_r[i] = true;
            used_c[j] = true;
            matched += v;
        }
    }
    prev.len() - matched
}

/// Merges clusters with fewer than two subjects into the cluster whose
/// coefficient centroid is nearest, until none remain.
pub fn repair_degenerate(members: &Memberships, gamma: &DMatrix<f64>) -> Memberships {
    let mut labels = members.labels().to_vec();
    loop {
        let current = Memberships::from_raw(&labels).expect("non-empty");
        let sizes = current.sizes();
        if current.n_clusters() < 2 {
            return current;
        }
        let Some(small) = sizes.iter().position(|&s| s < 2) else {
            return current;
        };
        let centers: Vec<Vec<f64>> = current
            .groups()
            .iter()
            .map(|g| {
                (0..gamma.ncols())
                    .map(|d| g.iter().map(|&i| gamma[(i, d)]).sum::<f64>() / g.len() as f64)
                    .collect()
            })
            .collect();
        let target = (0..centers.len())
            .filter(|&j| j != small)
            .min_by(|&a, &b| {
                let da: f64 = centers[a].iter().zip(&centers[small]).map(|(x, y)| (x - y).powi(2)).sum();
                let db: f64 = centers[b].iter().zip(&centers[small]).map(|(x, y)| (x - y).powi(2)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        log::debug!("merging singleton cluster {} into {}", small + 1, target + 1);
        labels = current
            .labels()
            .iter()
            .map(|&l| if l == small + 1 { target + 1 } else { l })
            .collect();
    }
}

/// Runs the outer loop from an already computed initial clustering (whose
/// coefficients are used to repair singleton clusters).
pub fn run_pcme_me_from(
    data: &FunctionalDataset,
    initial: &ClusteringResult,
    opts: &PipelineOptions,
) -> Result<ClusteringResult> {
    if data.n_replicates() < 2 {
        return Err(Error::Unidentifiable);
    }
    if opts.max_outer_iter < 1 {
        return Err(Error::Invalid("max_outer_iter must be at least 1".into()));
    }
    let mut members = initial.members.clone();
    let mut gamma = initial.coefficients.gamma.clone();
    let mut history = Vec::new();
    let mut last: Option<ClusteringResult> = None;
    let mut converged = false;
    for iteration in 1..=opts.max_outer_iter {
        let wrap = |e: Error| Error::AtIteration {
            iteration,
            source: Box::new(e),
        };
        let working = repair_degenerate(&members, &gamma);
        let corrected = correct_curves(data, &working).map_err(wrap)?;
        let pass = cluster_curves(&corrected.x_hat, data.grid(), opts).map_err(wrap)?;
        let changes = membership_changes(&members, &pass.members);
        history.push(changes);
        converged = partitions_equal(&members, &pass.members)?;
        members = pass.members.clone();
        gamma = pass.coefficients.gamma.clone();
        last = Some(pass);
        if converged {
            break;
        }
    }
    let mut result = last.expect("at least one outer iteration");
    result.outer_iterations = history.len();
    result.history = history;
    result.converged = converged;
    Ok(result)
}

/// Iterated correction and re-clustering until memberships stabilize or
/// `max_outer_iter` passes have run.
pub fn run_pcme_me(data: &FunctionalDataset, opts: &PipelineOptions) -> Result<ClusteringResult> {
    let initial = match &opts.init_mode {
        InitMode::Naive => baseline(data, Baseline::Naive, opts)?,
        InitMode::Average => baseline(data, Baseline::Average, opts)?,
        InitMode::Given(_) => {
            // the mean-curve coefficients are only needed to repair singletons
            let members = initial_clusters(data, opts)?;
            let mut r = baseline(data, Baseline::Average, opts)?;
            r.members = members;
            r
        }
    };
    run_pcme_me_from(data, &initial, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn change_counts() {
        let a = Memberships::new(vec![1, 1, 2, 2, 3]).unwrap();
        let b = Memberships::new(vec![2, 2, 1, 1, 3]).unwrap();
        assert_eq!(membership_changes(&a, &b), 0);
        let c = Memberships::new(vec![1, 1, 1, 2, 2]).unwrap();
        assert_eq!(membership_changes(&a, &c), 2);
        let d = Memberships::single(5);
        assert_eq!(membership_changes(&a, &d), 3);
    }

    #[test]
    fn singleton_is_merged_into_nearest() {
        let gamma = DMatrix::from_row_slice(5, 1, &[0.0, 0.1, 5.0, 5.1, 4.0]);
        let m = Memberships::new(vec![1, 1, 2, 2, 3]).unwrap();
        let fixed = repair_degenerate(&m, &gamma);
        assert_eq!(fixed.labels(), [1, 1, 2, 2, 2]);

        let lone = Memberships::new(vec![1, 1, 1, 1, 2]).unwrap();
        assert_eq!(repair_degenerate(&lone, &gamma).n_clusters(), 1);
    }
}
