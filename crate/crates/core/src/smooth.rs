//! Penalized B-spline representation of curves.
//!
//! Each curve `y` observed on the grid is summarized by the coefficients
//! `gamma` minimizing `|y - B gamma|^2 + lambda |D2 gamma|^2`, where `B` is
//! a clamped B-spline basis evaluated on the grid and `D2` takes second
//! divided differences of the coefficients at their Greville abscissae,
//! rescaled so that evenly spaced rows read `(1, -2, 1)`. On a clamped basis
//! the abscissae bunch up near the ends; plain differences would then
//! penalize straight lines there. With divided differences the penalty
//! leaves straight lines untouched, so large `lambda` shrinks every fit
//! toward its least-squares line.
//!
//! `lambda` is chosen by generalized cross-validation on a fixed log grid.
//! The clustering path uses one shared `lambda` (the lower median of the
//! per-curve choices) so that coefficient rows stay comparable.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdata::{CorrectedCurves, TimeGrid};

pub const DEFAULT_DEGREE: usize = 3;
pub const LAMBDA_GRID_LEN: usize = 40;

/// Clamped B-spline basis with equally spaced interior knots on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    degree: usize,
    knots: Vec<f64>,
    grid: TimeGrid,
    /// `T x K` evaluation matrix.
    matrix: DMatrix<f64>,
}

impl SplineBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Values of all `K` basis functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let k = self.n_basis();
        let mut row = vec![0.0; k];
        let span = find_span(&self.knots, self.degree, k, x);
        let local = basis_funs(&self.knots, self.degree, span, x);
        for (r, v) in local.iter().enumerate() {
            row[span - self.degree + r] = *v;
        }
        row
    }

    /// Coefficient positions at which `sum_k xi_k B_k(t) = t`.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.n_basis())
            .map(|k| {
                if p == 0 {
                    0.5 * (self.knots[k] + self.knots[k + 1])
                } else {
                    self.knots[k + 1..=k + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Second-difference penalty `D2' D2`, with differences of adjacent
    /// coefficients divided by their Greville spacing and rescaled so that
    /// interior rows are the plain `(1, -2, 1)` stencil.
    pub fn penalty(&self) -> DMatrix<f64> {
        second_difference_penalty(&self.greville())
    }
}

/// Knot span index `s` with `knots[s] <= x < knots[s + 1]`; the right end of
/// the domain belongs to the last non-empty span.
fn find_span(knots: &[f64], degree: usize, n_basis: usize, x: f64) -> usize {
    if x >= knots[n_basis] {
        return n_basis - 1;
    }
    if x <= knots[degree] {
        return degree;
    }
    let (mut lo, mut hi) = (degree, n_basis);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// The `degree + 1` non-zero basis values on `span`, by the triangular
/// de Boor scheme.
fn basis_funs(knots: &[f64], degree: usize, span: usize, x: f64) -> Vec<f64> {
    let mut n = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

pub fn make_basis(grid: &TimeGrid, n_basis: usize, degree: usize) -> Result<SplineBasis> {
    if n_basis < degree + 1 {
        return Err(Error::Invalid(format!(
            "degree {degree} spline needs at least {} basis functions, got {n_basis}",
            degree + 1
        )));
    }
    let interior = n_basis - degree - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..=interior).map(|k| k as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));

    let pts = grid.points();
    let mut matrix = DMatrix::zeros(pts.len(), n_basis);
    for (row, &x) in pts.iter().enumerate() {
        let span = find_span(&knots, degree, n_basis, x);
        for (r, v) in basis_funs(&knots, degree, span, x).into_iter().enumerate() {
            matrix[(row, span - degree + r)] = v;
        }
    }
    Ok(SplineBasis {
        degree,
        knots,
        grid: grid.clone(),
        matrix,
    })
}

// Rows annihilate coefficient sequences affine in `xi`, i.e. straight lines.
fn second_difference_penalty(xi: &[f64]) -> DMatrix<f64> {
    let k = xi.len();
    if k < 3 {
        return DMatrix::zeros(k, k);
    }
    let gaps: Vec<f64> = xi.windows(2).map(|w| w[1] - w[0]).collect();
    let h = gaps[gaps.len() / 2];
    let mut d = DMatrix::zeros(k - 2, k);
    for r in 0..k - 2 {
        let (a, b) = (h / gaps[r], h / gaps[r + 1]);
        d[(r, r)] = a;
        d[(r, r + 1)] = -(a + b);
        d[(r, r + 2)] = b;
    }
    d.transpose() * d
}

/// Number of basis functions used for `n` subjects on a grid of `t_len`
/// points: `clamp(ceil(1.5 n^(1/5)) + 4, 6, min(15, T - 2))`.
pub fn default_n_basis(n_subjects: usize, t_len: usize) -> usize {
    let raw = (1.5 * (n_subjects as f64).powf(0.2)).ceil() as usize + 4;
    let hi = 15.min(t_len.saturating_sub(2)).max(DEFAULT_DEGREE + 1);
    raw.clamp(6.min(hi), hi)
}

/// The log-spaced candidate values `1e-6 ..= 1e6`.
pub fn lambda_grid() -> Vec<f64> {
    (0..LAMBDA_GRID_LEN)
        .map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / (LAMBDA_GRID_LEN - 1) as f64))
        .collect()
}

fn check_curve(curve: &[f64], basis: &SplineBasis) -> Result<()> {
    if curve.len() != basis.matrix.nrows() {
        return Err(Error::LengthMismatch {
            expected: basis.matrix.nrows(),
            actual: curve.len(),
        });
    }
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("curve values must be finite".into()));
    }
    Ok(())
}

/// Penalized least-squares coefficients for one curve.
pub fn penalized_fit(curve: &[f64], basis: &SplineBasis, lambda: f64) -> Result<DVector<f64>> {
    check_curve(curve, basis)?;
    let solver = PenalizedSolver::new(basis, lambda)?;
    Ok(solver.solve(curve))
}

/// Cholesky factor of `B'B + lambda P`, reusable across curves.
pub struct PenalizedSolver<'a> {
    basis: &'a SplineBasis,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> PenalizedSolver<'a> {
    pub fn new(basis: &'a SplineBasis, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let b = &basis.matrix;
        let system = b.transpose() * b + basis.penalty() * lambda;
        let chol = Cholesky::new(system).ok_or_else(|| {
            Error::RankDeficient(format!(
                "K = {} basis functions on T = {} points with lambda = {lambda}",
                b.ncols(),
                b.nrows()
            ))
        })?;
        Ok(Self { basis, chol })
    }

    pub fn solve(&self, curve: &[f64]) -> DVector<f64> {
        let y = DVector::from_column_slice(curve);
        self.chol.solve(&(self.basis.matrix.transpose() * y))
    }
}

/// Demmler-Reinsch form of the smoother: with `B'B = L L'` and
/// `L^-1 P L^-T = U diag(s) U'`, the fit at `lambda` shrinks the
/// coordinates `z = (B L^-T U)' y` by `1 / (1 + lambda s_k)`.
struct SpectralSmoother {
    eigenvalues: DVector<f64>,
    // B L^-T U, orthonormal columns
    projection: DMatrix<f64>,
}

impl SpectralSmoother {
    fn new(basis: &SplineBasis) -> Option<Self> {
        let b = &basis.matrix;
        if b.ncols() > b.nrows() {
            return None;
        }
        let chol = Cholesky::new(b.transpose() * b)?;
        let l = chol.l();
        let l_inv = l.clone().try_inverse()?;
        let m = &l_inv * basis.penalty() * l_inv.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let eigenvalues = eig.eigenvalues.map(|s| s.max(0.0));
        let projection = b * l_inv.transpose() * eig.eigenvectors;
        Some(Self {
            eigenvalues,
            projection,
        })
    }

    fn gcv_scores(&self, y: &DVector<f64>, lambdas: &[f64]) -> Vec<f64> {
        let t_len = y.len() as f64;
        let z = self.projection.transpose() * y;
        let total = y.norm_squared();
        let z_sq = z.norm_squared();
        lambdas
            .iter()
            .map(|&lambda| {
                let mut trace = 0.0;
                let mut rss = (total - z_sq).max(0.0);
                for (zk, sk) in z.iter().zip(self.eigenvalues.iter()) {
                    let f = 1.0 / (1.0 + lambda * sk);
                    trace += f;
                    rss += zk * zk * (1.0 - f) * (1.0 - f);
                }
                t_len * rss / (t_len - trace).powi(2)
            })
            .collect()
    }
}

fn direct_gcv_scores(y: &DVector<f64>, basis: &SplineBasis, lambdas: &[f64]) -> Vec<f64> {
    let b = &basis.matrix;
    let gram = b.transpose() * b;
    let penalty = basis.penalty();
    let t_len = y.len() as f64;
    lambdas
        .iter()
        .map(|&lambda| {
            let Some(chol) = Cholesky::new(&gram + &penalty * lambda) else {
                return f64::INFINITY;
            };
            let gamma = chol.solve(&(b.transpose() * y));
            let rss = (y - b * gamma).norm_squared();
            let trace = chol.solve(&gram).trace();
            t_len * rss / (t_len - trace).powi(2)
        })
        .collect()
}

fn argmin_first(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// GCV-optimal `lambda` for one curve over [`lambda_grid`].
pub fn select_lambda(curve: &[f64], basis: &SplineBasis) -> Result<f64> {
    check_curve(curve, basis)?;
    let lambdas = lambda_grid();
    let y = DVector::from_column_slice(curve);
    let scores = match SpectralSmoother::new(basis) {
        Some(s) => s.gcv_scores(&y, &lambdas),
        None => direct_gcv_scores(&y, basis, &lambdas),
    };
    Ok(lambdas[argmin_first(&scores)])
}

/// GCV score of every candidate `lambda` for one curve.
pub fn gcv_profile(curve: &[f64], basis: &SplineBasis) -> Result<Vec<(f64, f64)>> {
    check_curve(curve, basis)?;
    let lambdas = lambda_grid();
    let y = DVector::from_column_slice(curve);
    let scores = match SpectralSmoother::new(basis) {
        Some(s) => s.gcv_scores(&y, &lambdas),
        None => direct_gcv_scores(&y, basis, &lambdas),
    };
    Ok(lambdas.into_iter().zip(scores).collect())
}

/// Spline coefficients of every subject, `n x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub gamma: DMatrix<f64>,
    pub basis: SplineBasis,
    pub lambda: f64,
}

impl CoefficientMatrix {
    /// Curves reconstructed from the coefficients on the basis grid, `n x T`.
    pub fn fitted_curves(&self) -> DMatrix<f64> {
        &self.gamma * self.basis.matrix.transpose()
    }
}

/// Coefficients for every row of `curves` (`n x T`) with one shared `lambda`.
pub fn coefficients_for_rows(
    curves: &DMatrix<f64>,
    grid: &TimeGrid,
    n_basis: usize,
) -> Result<CoefficientMatrix> {
    if curves.ncols() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: curves.ncols(),
        });
    }
    if curves.nrows() == 0 {
        return Err(Error::Invalid("no curves to smooth".into()));
    }
    let basis = make_basis(grid, n_basis, DEFAULT_DEGREE)?;
    let lambdas = lambda_grid();
    let spectral = SpectralSmoother::new(&basis);
    let rows: Vec<DVector<f64>> = curves.row_iter().map(|r| r.transpose()).collect();
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Invalid("curve values must be finite".into()));
    }
    let mut chosen: Vec<f64> = rows
        .par_iter()
        .map(|y| {
            let scores = match &spectral {
                Some(s) => s.gcv_scores(y, &lambdas),
                None => direct_gcv_scores(y, &basis, &lambdas),
            };
            lambdas[argmin_first(&scores)]
        })
        .collect();
    chosen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // lower median, always one of the grid values
    let lambda = chosen[(chosen.len() - 1) / 2];

    let solver = PenalizedSolver::new(&basis, lambda)?;
    let mut gamma = DMatrix::zeros(rows.len(), n_basis);
    for (i, y) in rows.iter().enumerate() {
        gamma.set_row(i, &solver.solve(y.as_slice()).transpose());
    }
    Ok(CoefficientMatrix {
        gamma,
        basis,
        lambda,
    })
}

pub fn coefficients(curves: &CorrectedCurves, n_basis: usize) -> Result<CoefficientMatrix> {
    coefficients_for_rows(&curves.x_hat, &curves.grid, n_basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cox-de Boor recursion, evaluated straight from the definition.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64, last: usize) -> f64 {
        if p == 0 {
            let (a, b) = (knots[i], knots[i + 1]);
            // close the last non-empty interval on the right
            return if (a <= x && x < b) || (x == b && i == last && a < b) { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x, last);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x, last);
        }
        v
    }

    fn line_fit(ts: &[f64], ys: &[f64]) -> Vec<f64> {
        let n = ts.len() as f64;
        let mt = ts.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
        let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
        let slope = sxy / sxx;
        ts.iter().map(|t| my + slope * (t - mt)).collect()
    }

    fn wiggly(ts: &[f64]) -> Vec<f64> {
        ts.iter().map(|t| (7.0 * t).sin() + 0.3 * (23.0 * t).cos() + t * t).collect()
    }

    #[test]
    fn degree_zero_indicator_basis() {
        let grid = TimeGrid::uniform(5).unwrap();
        let b = make_basis(&grid, 2, 0).unwrap();
        let m = b.matrix();
        assert_eq!(m.column(0).as_slice(), [1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.column(1).as_slice(), [0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn partition_of_unity() {
        for t_len in [2, 7, 50, 101] {
            let grid = TimeGrid::uniform(t_len).unwrap();
            for degree in 0..=3 {
                for k in degree + 1..=12 {
                    let b = make_basis(&grid, k, degree).unwrap();
                    for row in b.matrix().row_iter() {
                        assert!((row.sum() - 1.0).abs() < 1e-10);
                    }
                }
            }
        }
        assert!(make_basis(&TimeGrid::uniform(5).unwrap(), 3, 3).is_err());
    }

    #[test]
    fn matches_recursive_definition_and_is_banded() {
        let grid = TimeGrid::uniform(50).unwrap();
        let b = make_basis(&grid, 8, 3).unwrap();
        let knots = b.knots();
        for (row, &x) in grid.points().iter().enumerate() {
            for k in 0..8 {
                let direct = cox_de_boor(knots, k, 3, x, 7);
                assert!((b.matrix()[(row, k)] - direct).abs() < 1e-12, "x={x} k={k}");
            }
        }
        for k in 0..8 {
            let (lo, hi) = (knots[k], knots[k + 4]);
            for (row, &x) in grid.points().iter().enumerate() {
                if x < lo || x > hi {
                    assert_eq!(b.matrix()[(row, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_penalty_reproduces_span() {
        let grid = TimeGrid::uniform(50).unwrap();
        let b = make_basis(&grid, 8, 3).unwrap();
        let truth = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.7, 0.9]);
        let y = b.matrix() * &truth;
        let g = penalized_fit(y.as_slice(), &b, 0.0).unwrap();
        assert!((b.matrix() * &g - &y).norm() < 1e-8);
        assert!((g - truth).amax() < 1e-8);
    }

    #[test]
    fn constants_are_penalty_free() {
        let grid = TimeGrid::uniform(30).unwrap();
        let b = make_basis(&grid, 9, 3).unwrap();
        for lambda in [0.0, 1.0, 1e4] {
            let g = penalized_fit(&[3.0; 30], &b, lambda).unwrap();
            assert!(g.iter().all(|v| (v - 3.0).abs() < 1e-9), "{lambda}: {g}");
        }
    }

    #[test]
    fn penalty_null_space_is_straight_lines() {
        let grid = TimeGrid::uniform(40).unwrap();
        let b = make_basis(&grid, 9, 3).unwrap();
        let xi = DVector::from_vec(b.greville());
        // sum_k xi_k B_k(t) = t
        let line = b.matrix() * &xi;
        for (v, t) in line.iter().zip(grid.points()) {
            assert!((v - t).abs() < 1e-12);
        }
        let p = b.penalty();
        assert!((&p * &xi).norm() < 1e-10);
        assert!((&p * DVector::from_element(9, 1.0)).norm() < 1e-10);
        // interior rows keep the plain (1, -2, 1) stencil
        assert!((p[(4, 4)] - 6.0).abs() < 1e-12);
        assert!((p[(4, 3)] + 4.0).abs() < 1e-12);
        assert!((p[(4, 2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_penalty_gives_straight_line() {
        let grid = TimeGrid::uniform(50).unwrap();
        let b = make_basis(&grid, 8, 3).unwrap();
        let y = wiggly(grid.points());
        let g = penalized_fit(&y, &b, 1e8).unwrap();
        let fitted = b.matrix() * g;
        let line = line_fit(grid.points(), &y);
        for (f, l) in fitted.iter().zip(&line) {
            assert!((f - l).abs() < 1e-3, "{} vs {}", f, l);
        }
    }

    #[test]
    fn rank_deficient_without_penalty() {
        let grid = TimeGrid::uniform(5).unwrap();
        let b = make_basis(&grid, 8, 3).unwrap();
        assert!(matches!(penalized_fit(&[0.0; 5], &b, 0.0), Err(Error::RankDeficient(_))));
        assert!(penalized_fit(&[0.0; 5], &b, 1.0).is_ok());
    }

    #[test]
    fn fit_zeroes_objective_gradient() {
        let grid = TimeGrid::uniform(40).unwrap();
        let b = make_basis(&grid, 10, 3).unwrap();
        let y = wiggly(grid.points());
        let lambda = 0.7;
        let g = penalized_fit(&y, &b, lambda).unwrap();
        let yv = DVector::from_vec(y);
        let p = b.penalty();
        let objective = |gamma: &DVector<f64>| {
            (&yv - b.matrix() * gamma).norm_squared() + lambda * (gamma.transpose() * &p * gamma)[0]
        };
        let h = 1e-6;
        let grad = DVector::from_fn(g.len(), |k, _| {
            let mut up = g.clone();
            let mut dn = g.clone();
            up[k] += h;
            dn[k] -= h;
            (objective(&up) - objective(&dn)) / (2.0 * h)
        });
        assert!(grad.norm() < 1e-6 * (1.0 + g.norm()), "{}", grad.norm());
    }

    #[test]
    fn gcv_is_finite_when_k_equals_t() {
        let grid = TimeGrid::uniform(8).unwrap();
        let b = make_basis(&grid, 8, 3).unwrap();
        let y = wiggly(grid.points());
        let profile = gcv_profile(&y, &b).unwrap();
        assert!(profile.iter().all(|(_, s)| s.is_finite()));
    }

    #[test]
    fn spectral_and_direct_gcv_agree() {
        let grid = TimeGrid::uniform(25).unwrap();
        let b = make_basis(&grid, 9, 3).unwrap();
        let y = DVector::from_vec(wiggly(grid.points()));
        let lambdas = lambda_grid();
        let fast = SpectralSmoother::new(&b).unwrap().gcv_scores(&y, &lambdas);
        let slow = direct_gcv_scores(&y, &b, &lambdas);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() <= 1e-6 * s.abs(), "{f} vs {s}");
        }
    }

    #[test]
    fn default_basis_count() {
        assert_eq!(default_n_basis(30, 50), 7);
        assert_eq!(default_n_basis(90, 50), 8);
        assert_eq!(default_n_basis(300, 50), 9);
        assert_eq!(default_n_basis(3000, 50), 12);
        assert_eq!(default_n_basis(300, 10), 8);
    }

    #[test]
    fn identical_curves_identical_rows() {
        let grid = TimeGrid::uniform(20).unwrap();
        let y = wiggly(grid.points());
        let curves = DMatrix::from_fn(4, 20, |_, t| y[t]);
        let coef = coefficients_for_rows(&curves, &grid, 8).unwrap();
        for i in 1..4 {
            assert_eq!(coef.gamma.row(i), coef.gamma.row(0));
        }
    }
}
