//! Hard starting partitions for EM: Ward hierarchical clustering (via the
//! nearest-neighbour chain algorithm), k-means++ seeding and Lloyd
//! refinement.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fdata::Memberships;

/// Ward dendrogram: merges of point representatives sorted by height.
#[derive(Debug, Clone)]
pub struct WardTree {
    n: usize,
    merges: Vec<(usize, usize, f64)>,
}

impl WardTree {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.2)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows(data: &DMatrix<f64>) -> Vec<Vec<f64>> {
    data.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Ward linkage on squared Euclidean distances.
pub fn ward_tree(data: &DMatrix<f64>) -> WardTree {
    let pts = rows(data);
    let n = pts.len();
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..a {
            let d = sq_dist(&pts[a], &pts[b]);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();

    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|a| *a).unwrap());
        }
        let (a, b) = loop {
            let a = *chain.last().unwrap();
            let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist[a * n + p]);
            for c in 0..n {
                if active[c] && c != a && dist[a * n + c] < best_d {
                    best_d = dist[a * n + c];
                    best = Some(c);
                }
            }
            let b = best.expect("at least two active clusters");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                break (a, b);
            }
            chain.push(b);
        };
        let (keep, gone) = (a.min(b), a.max(b));
        let d_ab = dist[a * n + b];
        let (na, nb) = (size[keep] as f64, size[gone] as f64);
        for c in 0..n {
            if !active[c] || c == keep || c == gone {
                continue;
            }
            let nc = size[c] as f64;
            let d = ((na + nc) * dist[keep * n + c] + (nb + nc) * dist[gone * n + c] - nc * d_ab)
                / (na + nb + nc);
            dist[keep * n + c] = d;
            dist[c * n + keep] = d;
        }
        active[gone] = false;
        size[keep] += size[gone];
        merges.push((keep, gone, d_ab));
    }
    // Ward heights are monotone, so a stable sort by height yields a valid
    // merge order.
    merges.sort_by(|x, y| x.2.partial_cmp(&y.2).unwrap());
    WardTree { n, merges }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cuts the dendrogram into `c` clusters.
pub fn ward_partition(tree: &WardTree, c: usize) -> Memberships {
    let n = tree.n;
    let c = c.clamp(1, n);
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b, _) in tree.merges.iter().take(n - c) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Memberships::from_raw(&roots).expect("non-empty")
}

pub(crate) fn centroids(data: &DMatrix<f64>, members: &Memberships) -> DMatrix<f64> {
    let k = data.ncols();
    let mut centers = DMatrix::zeros(members.n_clusters(), k);
    let sizes = members.sizes();
    for (i, &l) in members.labels().iter().enumerate() {
        for d in 0..k {
            centers[(l - 1, d)] += data[(i, d)];
        }
    }
    for (j, s) in sizes.iter().enumerate() {
        for d in 0..k {
            centers[(j, d)] /= *s as f64;
        }
    }
    centers
}

/// k-means++ seeding: `c x K` initial centers.
pub fn kmeans_plus_plus(data: &DMatrix<f64>, c: usize, seed: u64) -> DMatrix<f64> {
    let pts = rows(data);
    let n = pts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, &pts[chosen[0]])).collect();
    while chosen.len() < c {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, p) in pts.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &pts[next]));
        }
    }
    DMatrix::from_fn(c, data.ncols(), |j, d| pts[chosen[j]][d])
}

/// Lloyd iterations from the given centers. Clusters that empty out are
/// reseeded at the point farthest from its center, so the result always has
/// exactly `centers.nrows()` clusters when `n` allows it.
pub fn lloyd(data: &DMatrix<f64>, mut centers: DMatrix<f64>, max_iter: usize) -> Memberships {
    let pts = rows(data);
    let n = pts.len();
    let c = centers.nrows().min(n);
    let k = data.ncols();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let cen = rows(&centers);
        let mut changed = false;
        let mut far = (0usize, -1.0f64);
        for (i, p) in pts.iter().enumerate() {
            let (j, d) = (0..c)
                .map(|j| (j, sq_dist(p, &cen[j])))
                .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
            if assign[i] != j {
                assign[i] = j;
                changed = true;
            }
            if d > far.1 {
                far = (i, d);
            }
        }
        let mut counts = vec![0usize; c];
        for &j in &assign {
            counts[j] += 1;
        }
        if let Some(empty) = counts.iter().position(|&s| s == 0) {
            let old = assign[far.0];
            if counts[old] > 1 {
                assign[far.0] = empty;
                counts[old] -= 1;
                counts[empty] = 1;
                changed = true;
            }
        }
        let mut next = DMatrix::zeros(c, k);
        for (i, p) in pts.iter().enumerate() {
            for d in 0..k {
                next[(assign[i], d)] += p[d];
            }
        }
        for j in 0..c {
            if counts[j] > 0 {
                for d in 0..k {
                    next[(j, d)] /= counts[j] as f64;
                }
            } else {
                for d in 0..k {
                    next[(j, d)] = centers[(j, d)];
                }
            }
        }
        centers = next;
        if !changed {
            break;
        }
    }
    Memberships::from_raw(&assign).expect("non-empty")
}
