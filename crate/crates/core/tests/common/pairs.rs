use fdaclust::metrics::PairCounts;
use fdaclust::Memberships;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Pair table by enumerating every pair of subjects.
pub fn brute_force(truth: &[usize], pred: &[usize]) -> PairCounts {
    let mut pc = PairCounts { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for a in 0..truth.len() {
        for b in a + 1..truth.len() {
            match (truth[a] == truth[b], pred[a] == pred[b]) {
                (true, true) => pc.tp += 1,
                (false, true) => pc.fp += 1,
                (true, false) => pc.fn_ += 1,
                (false, false) => pc.tn += 1,
            }
        }
    }
    pc
}

/// Hubert-Arabie adjusted Rand from the pair table alone.
pub fn ari_from_pairs(pc: &PairCounts) -> f64 {
    let (a, b, c, d) = (pc.tp as f64, pc.fp as f64, pc.fn_ as f64, pc.tn as f64);
    let num = 2.0 * (a * d - b * c);
    let den = (a + c) * (c + d) + (a + b) * (b + d);
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Memberships {
    let raw: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    Memberships::from_raw(&raw).unwrap()
}
