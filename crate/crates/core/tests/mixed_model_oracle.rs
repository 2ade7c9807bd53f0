//! The closed-form variance components and predictions agree with direct
//! numerical maximization of the restricted likelihood of the clustered
//! random-intercept model.

mod common;

use common::reml::{direct_predictions, draw_instance, reml_optimum};
use fdaclust::mecorrect::{blup, fit_pointwise};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_matches_numerical_restricted_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 20 {
        let inst = draw_instance(&mut rng);
        let fit = fit_pointwise(&inst.w, &inst.members, 0).unwrap();
        if fit.sigma_c_sq.iter().any(|v| *v < 0.05) {
            // boundary solutions are not stationary points of the likelihood
            continue;
        }
        let (sigma_sq, sigma_c_sq) = reml_optimum(&inst);
        assert!(
            (fit.sigma_sq - sigma_sq).abs() / sigma_sq < 0.02,
            "sigma^2 {} vs {}",
            fit.sigma_sq,
            sigma_sq
        );
        for (g, s) in sigma_c_sq.iter().enumerate() {
            assert!(
                (fit.sigma_c_sq[g] - s).abs() / s < 0.02,
                "sigma_c^2 {} vs {s}",
                fit.sigma_c_sq[g]
            );
        }
        let direct = direct_predictions(&inst, sigma_sq, &sigma_c_sq);
        let j = inst.w.ncols();
        for (i, &label) in inst.members.labels().iter().enumerate() {
            let closed = blup(inst.w.row(i).mean(), &fit, label, j);
            assert!((direct[i] - closed).abs() < 1e-3, "prediction {closed} vs {}", direct[i]);
        }
        checked += 1;
    }
}

#[test]
fn residual_variance_matches_within_mean_square_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = draw_instance(&mut rng);
    let fit = fit_pointwise(&inst.w, &inst.members, 0).unwrap();
    let (n, j) = inst.w.shape();
    let ss: f64 = (0..n)
        .map(|i| {
            let row = inst.w.row(i);
            let m = row.mean();
            row.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    assert!((fit.sigma_sq - ss / (n * (j - 1)) as f64).abs() < 1e-12);
}
