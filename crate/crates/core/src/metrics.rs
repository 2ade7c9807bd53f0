//! External clustering agreement: pair counts, Rand, adjusted Rand,
//! Jaccard, and the average number of clusters across replications.
//!
//! All pair quantities come from the contingency table of the two
//! partitions, never from enumerating the `n (n - 1) / 2` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::Memberships;

/// Classification of all unordered subject pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    /// Same cluster in both partitions.
    pub tp: u64,
    /// Different clusters in truth, same cluster in prediction.
    pub fp: u64,
    /// Same cluster in truth, different clusters in prediction.
    pub fn_: u64,
    /// Different clusters in both.
    pub tn: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn choose2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

struct Contingency {
    n: u64,
    /// sum over cells of C(n_ij, 2)
    cells: u64,
    /// sum over truth clusters of C(a_i, 2)
    rows: u64,
    /// sum over predicted clusters of C(b_j, 2)
    cols: u64,
}

fn contingency(truth: &Memberships, pred: &Memberships) -> Result<Contingency> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let (r, c) = (truth.n_clusters(), pred.n_clusters());
    let mut table = vec![0u64; r * c];
    for (&a, &b) in truth.labels().iter().zip(pred.labels()) {
        table[(a - 1) * c + (b - 1)] += 1;
    }
    let rows = (0..r).map(|i| choose2(table[i * c..(i + 1) * c].iter().sum())).sum();
    let cols = (0..c).map(|j| choose2((0..r).map(|i| table[i * c + j]).sum())).sum();
    Ok(Contingency {
        n: truth.len() as u64,
        cells: table.iter().map(|&v| choose2(v)).sum(),
        rows,
        cols,
    })
}

pub fn pair_counts(truth: &Memberships, pred: &Memberships) -> Result<PairCounts> {
    let t = contingency(truth, pred)?;
    let total = choose2(t.n);
    let tp = t.cells;
    let fp = t.cols - tp;
    let fn_ = t.rows - tp;
    Ok(PairCounts {
        tp,
        fp,
        fn_,
        tn: total - tp - fp - fn_,
    })
}

/// `(TP + TN) / (number of pairs)`.
pub fn rand_index(pc: &PairCounts) -> Result<f64> {
    let total = pc.total();
    if total == 0 {
        return Err(Error::Invalid("Rand index needs at least two subjects".into()));
    }
    Ok((pc.tp + pc.tn) as f64 / total as f64)
}

/// `TP / (TP + FN + FP)`; defined as 1 when both partitions are all
/// singletons.
pub fn jaccard_index(pc: &PairCounts) -> f64 {
    let denom = pc.tp + pc.fn_ + pc.fp;
    if denom == 0 {
        1.0
    } else {
        pc.tp as f64 / denom as f64
    }
}

/// Hubert-Arabie adjusted Rand index. Two identical trivial partitions
/// (where the index is 0/0) score 1.
pub fn adjusted_rand(truth: &Memberships, pred: &Memberships) -> Result<f64> {
    let t = contingency(truth, pred)?;
    if t.n < 2 {
        return Err(Error::Invalid("adjusted Rand needs at least two subjects".into()));
    }
    let pairs = choose2(t.n) as f64;
    let (rows, cols) = (t.rows as f64, t.cols as f64);
    let expected = rows * cols / pairs;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((t.cells as f64 - expected) / (max - expected))
}

/// Mean of the per-replication cluster counts.
pub fn average_group_size(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::Invalid("no cluster counts to average".into()));
    }
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}

/// All three indices plus cluster counts, as printed by `fdaclust evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub rand: f64,
    pub ari: f64,
    pub jaccard: f64,
    pub c_truth: usize,
    pub c_pred: usize,
}

pub fn evaluate(truth: &Memberships, pred: &Memberships) -> Result<Agreement> {
    let pc = pair_counts(truth, pred)?;
    Ok(Agreement {
        rand: rand_index(&pc)?,
        ari: adjusted_rand(truth, pred)?,
        jaccard: jaccard_index(&pc),
        c_truth: truth.n_clusters(),
        c_pred: pred.n_clusters(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(labels: &[usize]) -> Memberships {
        Memberships::new(labels.to_vec()).unwrap()
    }

    #[test]
    fn perfect_agreement() {
        let a = m(&[1, 1, 2]);
        let pc = pair_counts(&a, &a).unwrap();
        assert_eq!(pc, PairCounts { tp: 1, fp: 0, fn_: 0, tn: 2 });
        assert_eq!(rand_index(&pc).unwrap(), 1.0);
        assert_eq!(jaccard_index(&pc), 1.0);
        assert_eq!(adjusted_rand(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn five_point_example() {
        let truth = m(&[1, 1, 1, 2, 2]);
        let pred = m(&[1, 1, 2, 2, 2]);
        let pc = pair_counts(&truth, &pred).unwrap();
        assert_eq!(pc, PairCounts { tp: 2, fp: 2, fn_: 2, tn: 4 });
        assert_eq!(rand_index(&pc).unwrap(), 0.6);
        assert!((jaccard_index(&pc) - 1.0 / 3.0).abs() < 1e-15);
        assert!((adjusted_rand(&truth, &pred).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn lumped_versus_singletons() {
        let n = 6;
        let truth = m(&(1..=n).collect::<Vec<_>>());
        let pred = Memberships::single(n);
        let pc = pair_counts(&truth, &pred).unwrap();
        assert_eq!(pc, PairCounts { tp: 0, fp: 15, fn_: 0, tn: 0 });
        assert_eq!(rand_index(&pc).unwrap(), 0.0);
        assert_eq!(jaccard_index(&pc), 0.0);
    }

    #[test]
    fn conventions_for_degenerate_partitions() {
        let singles = m(&[1, 2, 3, 4]);
        let pc = pair_counts(&singles, &singles).unwrap();
        assert_eq!(jaccard_index(&pc), 1.0);
        assert_eq!(adjusted_rand(&singles, &singles).unwrap(), 1.0);
        let one = Memberships::single(4);
        assert_eq!(adjusted_rand(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert!(pair_counts(&m(&[1, 2]), &m(&[1])).is_err());
        let one = m(&[1]);
        assert!(rand_index(&pair_counts(&one, &one).unwrap()).is_err());
        assert!(adjusted_rand(&one, &one).is_err());
        assert!(average_group_size(&[]).is_err());
    }

    #[test]
    fn group_size_mean() {
        assert_eq!(average_group_size(&[3, 3, 3]).unwrap(), 3.0);
        assert_eq!(average_group_size(&[2, 4]).unwrap(), 3.0);
    }
}
