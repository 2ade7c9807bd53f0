use fdaclust::metrics::evaluate;
use fdaclust::pipeline::{baseline, run_pcme_me, Baseline, InitMode, PipelineOptions};
use fdaclust::simgen::{generate_dataset, CovStructure, ScenarioConfig};
use fdaclust::{Error, FunctionalDataset, Memberships};

fn quick_options() -> PipelineOptions {
    let mut opts = PipelineOptions::default();
    opts.selection.c_range = vec![1, 2, 3, 4];
    opts.selection.restarts = 1;
    opts
}

fn dataset(n: usize, sigma_u: f64, seed: u64) -> FunctionalDataset {
    let cfg = ScenarioConfig::new(n, CovStructure::SquaredExponential, 1.0, sigma_u, 0.5, seed).unwrap();
    generate_dataset(&cfg).unwrap()
}

fn strip_truth(data: &FunctionalDataset) -> FunctionalDataset {
    let t = data.n_times();
    let mut w = Vec::with_capacity(data.n_subjects() * data.n_replicates() * t);
    for i in 0..data.n_subjects() {
        for j in 0..data.n_replicates() {
            w.extend((0..t).map(|k| data.value(i, j, k)));
        }
    }
    FunctionalDataset::new(data.grid().clone(), data.n_subjects(), data.n_replicates(), w, None, None).unwrap()
}

fn single_replicate(data: &FunctionalDataset) -> FunctionalDataset {
    let t = data.n_times();
    let w: Vec<f64> = (0..data.n_subjects()).flat_map(|i| (0..t).map(move |k| data.value(i, 0, k))).collect();
    FunctionalDataset::new(data.grid().clone(), data.n_subjects(), 1, w, None, None).unwrap()
}

#[test]
fn one_replicate_makes_naive_and_average_agree() {
    let data = single_replicate(&dataset(30, 0.5, 1));
    let opts = quick_options();
    let naive = baseline(&data, Baseline::Naive, &opts).unwrap();
    let avg = baseline(&data, Baseline::Average, &opts).unwrap();
    assert_eq!(naive.members, avg.members);
    assert_eq!(naive.coefficients.gamma, avg.coefficients.gamma);
    assert!(matches!(run_pcme_me(&data, &opts), Err(Error::Unidentifiable)));
}

#[test]
fn noiseless_groups_are_recovered() {
    let cfg = ScenarioConfig::new(30, CovStructure::Independent, 1e-3, 1e-3, 0.0, 8).unwrap();
    let data = generate_dataset(&cfg).unwrap();
    let result = run_pcme_me(&data, &quick_options()).unwrap();
    assert_eq!(result.members.n_clusters(), 3);
    let e = evaluate(data.true_labels().unwrap(), &result.members).unwrap();
    assert_eq!(e.ari, 1.0);
    assert!(result.converged);
}

#[test]
fn fixed_point_start_converges_at_once() {
    let data = dataset(30, 0.3, 2);
    let mut opts = quick_options();
    let first = run_pcme_me(&data, &opts).unwrap();
    assert!(first.converged);
    opts.init_mode = InitMode::Given(first.members.clone());
    let again = run_pcme_me(&data, &opts).unwrap();
    assert_eq!(again.outer_iterations, 1);
    assert_eq!(again.history, vec![0]);
    assert_eq!(again.members, first.members);
}

#[test]
fn history_tracks_each_outer_pass() {
    let data = dataset(30, 2.0, 5);
    let mut opts = quick_options();
    opts.max_outer_iter = 1;
    let capped = run_pcme_me(&data, &opts).unwrap();
    assert_eq!(capped.outer_iterations, 1);
    assert_eq!(capped.history.len(), 1);
    assert_eq!(capped.converged, capped.history[0] == 0);

    opts.max_outer_iter = 20;
    let full = run_pcme_me(&data, &opts).unwrap();
    assert_eq!(full.history.len(), full.outer_iterations);
    assert!(full.outer_iterations <= 20);
    if full.converged {
        assert_eq!(full.history.last(), Some(&0));
    }
}

#[test]
fn given_start_is_checked_and_used() {
    let data = dataset(30, 0.5, 4);
    let mut opts = quick_options();
    opts.init_mode = InitMode::Given(Memberships::single(29));
    assert!(matches!(run_pcme_me(&data, &opts), Err(Error::LengthMismatch { expected: 30, actual: 29 })));

    let truth = data.true_labels().unwrap().clone();
    opts.init_mode = InitMode::Given(truth.clone());
    opts.max_outer_iter = 1;
    let r = run_pcme_me(&data, &opts).unwrap();
    assert_eq!(r.corrected.n_subjects(), 30);
}

#[test]
fn oracle_needs_true_curves() {
    let data = strip_truth(&dataset(12, 0.5, 6));
    assert!(matches!(baseline(&data, Baseline::Oracle, &quick_options()), Err(Error::Invalid(_))));
}

#[test]
fn vanishing_error_matches_the_oracle() {
    let data = dataset(30, 1e-9, 9);
    let opts = quick_options();
    let oracle = baseline(&data, Baseline::Oracle, &opts).unwrap();
    let pcme = run_pcme_me(&data, &opts).unwrap();
    assert_eq!(pcme.members.canonical(), oracle.members.canonical());
}

#[test]
fn subject_order_does_not_change_the_partition() {
    let data = dataset(30, 0.5, 12);
    let opts = quick_options();
    let base = run_pcme_me(&data, &opts).unwrap();
    // reverse the subject order
    let (n, j, t) = (data.n_subjects(), data.n_replicates(), data.n_times());
    let mut w = Vec::with_capacity(n * j * t);
    for i in (0..n).rev() {
        for r in 0..j {
            w.extend((0..t).map(|k| data.value(i, r, k)));
        }
    }
    let rev = FunctionalDataset::new(data.grid().clone(), n, j, w, None, None).unwrap();
    let flipped = run_pcme_me(&rev, &opts).unwrap();
    let back: Vec<usize> = flipped.members.labels().iter().rev().copied().collect();
    let e = evaluate(&base.members, &Memberships::new(back).unwrap()).unwrap();
    assert!(e.ari > 0.9, "ARI between orders {}", e.ari);
}
