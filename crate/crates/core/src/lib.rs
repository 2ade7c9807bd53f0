//! Clustering of functional data observed with measurement error.
//!
//! Replicated noisy curves `W_ij(t) = X_i(t) + U_ij(t)` are clustered in two
//! stages. A pointwise random-intercept model, fitted within the current
//! clusters, replaces each subject's curve by its best linear unbiased
//! predictor. The corrected curves are then smoothed by penalized B-splines
//! and their coefficients clustered by Gaussian mixtures with the number of
//! components and covariance family chosen by BIC. The two stages alternate
//! until memberships stop changing.
//!
//! ```
//! use fdaclust::simgen::{generate_dataset, CovStructure, ScenarioConfig};
//! use fdaclust::pipeline::{run_pcme_me, PipelineOptions};
//! use fdaclust::metrics::evaluate;
//!
//! let cfg = ScenarioConfig::new(30, CovStructure::Independent, 1.0, 1.0, 0.0, 1).unwrap();
//! let data = generate_dataset(&cfg).unwrap();
//! let mut opts = PipelineOptions::default();
//! opts.selection.c_range = vec![1, 2, 3, 4];
//! opts.selection.restarts = 1;
//! let result = run_pcme_me(&data, &opts).unwrap();
//! let agreement = evaluate(data.true_labels().unwrap(), &result.members).unwrap();
//! assert!(agreement.rand > 0.5);
//! ```

pub mod bench;
pub mod error;
pub mod fdata;
pub mod mecorrect;
pub mod metrics;
pub mod mixcluster;
pub mod pipeline;
pub mod simgen;
pub mod smooth;

pub use error::{Error, ErrorClass, Result};
pub use fdata::{CorrectedCurves, FunctionalDataset, Memberships, TimeGrid};
pub use mixcluster::{CovFamily, GmmFit};
pub use pipeline::{ClusteringResult, PipelineOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/correction.md")]
    mod correction {}
    #[doc = include_str!("../../../book/src/smoothing.md")]
    mod smoothing {}
    #[doc = include_str!("../../../book/src/mixtures.md")]
    mod mixtures {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/bench.md")]
    mod bench {}
}
