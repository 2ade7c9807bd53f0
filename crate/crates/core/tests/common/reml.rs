//! Restricted likelihood of the clustered random-intercept model, evaluated
//! block by block and maximized by Nelder-Mead.

use fdaclust::Memberships;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub w: DMatrix<f64>,
    pub members: Memberships,
}

pub fn draw_instance(rng: &mut ChaCha8Rng) -> Instance {
    let c = rng.random_range(1..=3usize);
    let j = rng.random_range(2..=6usize);
    let sizes: Vec<usize> = (0..c).map(|_| rng.random_range(6..=14)).collect();
    let sigma_sq: f64 = rng.random_range(0.3..2.0);
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (g, &size) in sizes.iter().enumerate() {
        let alpha: f64 = rng.random_range(-3.0..3.0);
        let sigma_c_sq: f64 = rng.random_range(1.0..4.0);
        for _ in 0..size {
            let z: f64 = rng.sample(StandardNormal);
            let b = sigma_c_sq.sqrt() * z;
            for _ in 0..j {
                let e: f64 = rng.sample(StandardNormal);
                rows.push(alpha + b + sigma_sq.sqrt() * e);
            }
            labels.push(g + 1);
        }
    }
    let n = labels.len();
    Instance {
        w: DMatrix::from_row_slice(n, j, &rows),
        members: Memberships::new(labels).unwrap(),
    }
}

/// Restricted log-likelihood (up to a constant) and the GLS intercepts,
/// evaluated block by block with a dense Cholesky per subject.
pub fn reml(inst: &Instance, sigma_sq: f64, sigma_c_sq: &[f64]) -> (f64, Vec<f64>, Vec<DMatrix<f64>>) {
    let (n, j) = inst.w.shape();
    let c = inst.members.n_clusters();
    let labels = inst.members.labels();
    let mut log_det_v = 0.0;
    let mut xtvx = vec![0.0; c];
    let mut xtvy = vec![0.0; c];
    let mut inverses = Vec::with_capacity(n);
    for i in 0..n {
        let g = labels[i] - 1;
        let v = DMatrix::from_fn(j, j, |a, b| sigma_c_sq[g] + if a == b { sigma_sq } else { 0.0 });
        let chol = Cholesky::new(v).unwrap();
        log_det_v += 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inv = chol.inverse();
        let ones = DVector::from_element(j, 1.0);
        let y = inst.w.row(i).transpose();
        xtvx[g] += (ones.transpose() * &inv * &ones)[0];
        xtvy[g] += (ones.transpose() * &inv * &y)[0];
        inverses.push(inv);
    }
    let alpha: Vec<f64> = (0..c).map(|g| xtvy[g] / xtvx[g]).collect();
    let mut quad = 0.0;
    for i in 0..n {
        let g = labels[i] - 1;
        let r = inst.w.row(i).transpose().add_scalar(-alpha[g]);
        quad += (r.transpose() * &inverses[i] * &r)[0];
    }
    let log_det_x = xtvx.iter().map(|v| v.ln()).sum::<f64>();
    (-0.5 * (log_det_v + log_det_x + quad), alpha, inverses)
}

pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64]) -> Vec<f64> {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for k in 0..d {
        let mut p = start.to_vec();
        p[k] += 0.5;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..20_000 {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[d] - values[0]).abs() < 1e-13 {
            break;
        }
        let centroid: Vec<f64> =
            (0..d).map(|k| simplex[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect()
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let contracted = if fr < values[d] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[d].min(fr) {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for p in simplex.iter_mut().skip(1) {
                    for k in 0..d {
                        p[k] = best[k] + 0.5 * (p[k] - best[k]);
                    }
                }
                values = simplex.iter().map(|p| f(p)).collect();
            }
        }
    }
    simplex[0].clone()
}

/// Numerically maximizes the restricted likelihood; returns
/// `(sigma^2, sigma_c^2)`.
pub fn reml_optimum(inst: &Instance) -> (f64, Vec<f64>) {
    let c = inst.members.n_clusters();
    let objective = |theta: &[f64]| {
        let s: Vec<f64> = theta[1..].iter().map(|v| v.exp()).collect();
        -reml(inst, theta[0].exp(), &s).0
    };
    let theta = nelder_mead(objective, &vec![0.0; c + 1]);
    // restart from the optimum to escape a collapsed simplex
    let theta = nelder_mead(objective, &theta);
    (theta[0].exp(), theta[1..].iter().map(|v| v.exp()).collect())
}

/// Direct GLS prediction of every subject's random intercept plus mean.
pub fn direct_predictions(inst: &Instance, sigma_sq: f64, sigma_c_sq: &[f64]) -> Vec<f64> {
    let (_, alpha, inverses) = reml(inst, sigma_sq, sigma_c_sq);
    let j = inst.w.ncols();
    let ones = DVector::from_element(j, 1.0);
    inst.members
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let g = label - 1;
            let y = inst.w.row(i).transpose();
            alpha[g] + sigma_c_sq[g] * (ones.transpose() * &inverses[i] * y.add_scalar(-alpha[g]))[0]
        })
        .collect()
}
