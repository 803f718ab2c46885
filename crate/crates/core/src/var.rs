//! Vector autoregression layer.
//!
//! The coefficient matrix `A` is integrated out under a matrix-normal prior
//! `A | Σ ~ MN(A0, Σ, Ψ)` with `Ψ = η⁻¹ I_k`, leaving the Gaussian marginal
//! likelihood of `Y` given `Σ`. Everything downstream only needs the Schur
//! complement `S_{y|x}` and the window length.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dim_err, param_err, Result};
use crate::linalg::{symmetrize, Cholesky};

/// Endogenous series `y` (T×n) and market indicators `m` (T×m).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    y: DMatrix<f64>,
    m: DMatrix<f64>,
    dates: Vec<String>,
    labels: Vec<String>,
    standardized: bool,
}

impl TimeSeriesPanel {
    pub fn new(
        y: DMatrix<f64>,
        m: DMatrix<f64>,
        dates: Vec<String>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let t = y.nrows();
        if t == 0 || y.ncols() == 0 {
            return Err(dim_err!("panel needs at least one row and one series"));
        }
        if m.nrows() != t && m.ncols() > 0 {
            return Err(dim_err!("market matrix has {} rows, expected {}", m.nrows(), t));
        }
        if dates.len() != t {
            return Err(dim_err!("{} dates for {} rows", dates.len(), t));
        }
        if labels.len() != y.ncols() {
            return Err(dim_err!("{} labels for {} series", labels.len(), y.ncols()));
        }
        if y.iter().chain(m.iter()).any(|v| !v.is_finite()) {
            return Err(param_err!("panel contains missing or non-finite values"));
        }
        let m = if m.ncols() == 0 { DMatrix::zeros(t, 0) } else { m };
        Ok(Self { y, m, dates, labels, standardized: false })
    }

    /// Panel with no market block, integer dates and `y1..yn` labels.
    pub fn from_matrix(y: DMatrix<f64>) -> Result<Self> {
        let dates = (0..y.nrows()).map(|t| format!("{t}")).collect();
        let labels = (1..=y.ncols()).map(|i| format!("y{i}")).collect();
        Self::new(y, DMatrix::zeros(0, 0), dates, labels)
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }
    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }
    pub fn dates(&self) -> &[String] {
        &self.dates
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn is_standardized(&self) -> bool {
        self.standardized
    }
    pub fn len(&self) -> usize {
        self.y.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.y.nrows() == 0
    }
    pub fn n_series(&self) -> usize {
        self.y.ncols()
    }
    pub fn n_market(&self) -> usize {
        self.m.ncols()
    }

    /// Rows `start..end` as a new panel.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(dim_err!("window {start}..{end} outside 0..{}", self.len()));
        }
        let len = end - start;
        Ok(Self {
            y: self.y.rows(start, len).into_owned(),
            m: self.m.rows(start, len).into_owned(),
            dates: self.dates[start..end].to_vec(),
            labels: self.labels.clone(),
            standardized: false,
        })
    }

    /// Every column of `y` and `m` rescaled to zero mean and unit
    /// (population) variance. Constant columns are only centered.
    pub fn standardize(&self) -> Self {
        let mut out = self.clone();
        standardize_columns(&mut out.y);
        standardize_columns(&mut out.m);
        out.standardized = true;
        out
    }
}

fn standardize_columns(x: &mut DMatrix<f64>) {
    let t = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / t;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / t).sqrt();
        if sd > 0.0 {
            col /= sd;
        } else {
            log::warn!("constant column left unscaled during standardization");
        }
    }
}

/// Whether the mean equation carries a first-order lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LagMode {
    /// `Y_t = E_t`; no covariates.
    Lag0,
    /// `Y_t = A (Y_{t-1}, M_{t-1})' + E_t`.
    Lag1,
}

/// Response rows and design matrix for the chosen lag structure.
///
/// Lag-1 drops the first observation: `X_t = (Y_{t-1}, M_{t-1})`, `k = n + m`.
/// Lag-0 returns an empty `T×0` design.
pub fn build_lagged_design(
    panel: &TimeSeriesPanel,
    lag_mode: LagMode,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let t = panel.len();
    match lag_mode {
        LagMode::Lag0 => Ok((panel.y.clone(), DMatrix::zeros(t, 0))),
        LagMode::Lag1 => {
            if t < 2 {
                return Err(dim_err!("lag-1 design needs T >= 2, got {t}"));
            }
            let (n, m) = (panel.n_series(), panel.n_market());
            let y_eff = panel.y.rows(1, t - 1).into_owned();
            let mut x = DMatrix::zeros(t - 1, n + m);
            x.columns_mut(0, n).copy_from(&panel.y.rows(0, t - 1));
            if m > 0 {
                x.columns_mut(n, m).copy_from(&panel.m.rows(0, t - 1));
            }
            Ok((y_eff, x))
        }
    }
}

/// Conjugate-update statistics of the VAR given a ridge precision `η`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    pub s_xx: DMatrix<f64>,
    pub s_yx: DMatrix<f64>,
    pub s_yy: DMatrix<f64>,
    pub s_y_given_x: DMatrix<f64>,
    pub t_eff: usize,
    pub k: usize,
    pub eta: f64,
    log_det_s_xx: f64,
}

impl SufficientStats {
    pub fn n(&self) -> usize {
        self.s_yy.nrows()
    }

    pub fn log_det_s_xx(&self) -> f64 {
        self.log_det_s_xx
    }
}

/// `S_xx = X'X + ηI`, `S_yx = Y'X + A0 η`, `S_yy = Y'Y + A0 η A0'` and
/// `S_{y|x} = S_yy - S_yx S_xx⁻¹ S_yx'`.
///
/// `prior_mean_a` defaults to zero. The Schur complement goes through a
/// Cholesky factor of `S_xx`; a singular `S_xx` surfaces as
/// [`Conditioning`](crate::Error::Conditioning) with the offending pivot.
pub fn compute_suffstats(
    y_eff: &DMatrix<f64>,
    x: &DMatrix<f64>,
    prior_mean_a: Option<&DMatrix<f64>>,
    eta: f64,
) -> Result<SufficientStats> {
    let (t_eff, n) = y_eff.shape();
    let k = x.ncols();
    if x.nrows() != t_eff {
        return Err(dim_err!("design has {} rows, response has {}", x.nrows(), t_eff));
    }
    let mut s_yy = y_eff.tr_mul(y_eff);
    if k == 0 {
        symmetrize(&mut s_yy);
        return Ok(SufficientStats {
            s_xx: DMatrix::zeros(0, 0),
            s_yx: DMatrix::zeros(n, 0),
            s_y_given_x: s_yy.clone(),
            s_yy,
            t_eff,
            k,
            eta,
            log_det_s_xx: 0.0,
        });
    }
    if !(eta > 0.0) {
        return Err(param_err!("ridge precision must be positive when k > 0, got {eta}"));
    }
    let mut s_xx = x.tr_mul(x);
    for i in 0..k {
        s_xx[(i, i)] += eta;
    }
    let mut s_yx = y_eff.tr_mul(x);
    if let Some(a0) = prior_mean_a {
        if a0.shape() != (n, k) {
            return Err(dim_err!("prior mean is {:?}, expected ({n}, {k})", a0.shape()));
        }
        s_yx += a0 * eta;
        s_yy += a0 * a0.transpose() * eta;
    }
    let chol = Cholesky::new(&s_xx)?;
    // R = L⁻¹ S_yx', so S_yx S_xx⁻¹ S_yx' = R'R.
    let mut r = s_yx.transpose();
    for mut col in r.column_iter_mut() {
        let mut v = DVector::from_column_slice(col.as_slice());
        chol.solve_lower_mut(&mut v);
        col.copy_from(&v);
    }
    let mut s_y_given_x = &s_yy - r.tr_mul(&r);
    symmetrize(&mut s_y_given_x);
    symmetrize(&mut s_yy);
    Ok(SufficientStats {
        log_det_s_xx: chol.log_det(),
        s_xx,
        s_yx,
        s_yy,
        s_y_given_x,
        t_eff,
        k,
        eta,
    })
}

/// Log marginal likelihood `log P(Y | Σ)` with all constants:
///
/// `-(nT/2) log 2π - (n/2) log|Ψ| - (n/2) log|S_xx| - (T/2) log|Σ| - ½ tr(Σ⁻¹ S_{y|x})`.
pub fn log_marginal_likelihood(stats: &SufficientStats, sigma: &DMatrix<f64>) -> Result<f64> {
    let n = stats.n();
    if sigma.shape() != (n, n) {
        return Err(dim_err!("sigma is {:?}, expected ({n}, {n})", sigma.shape()));
    }
    let chol = Cholesky::with_jitter(sigma)?;
    let t = stats.t_eff as f64;
    let nf = n as f64;
    let trace = chol.solve_matrix(&stats.s_y_given_x).trace();
    let mut ll = -0.5 * nf * t * (2.0 * PI).ln() - 0.5 * t * chol.log_det() - 0.5 * trace;
    if stats.k > 0 {
        // log|Ψ| = -k log η
        let log_det_psi = -(stats.k as f64) * stats.eta.ln();
        ll -= 0.5 * nf * log_det_psi + 0.5 * nf * stats.log_det_s_xx;
    }
    Ok(ll)
}

/// Posterior mean of the coefficients, `S_yx S_xx⁻¹` (n×k).
pub fn posterior_mean_a(stats: &SufficientStats) -> Result<DMatrix<f64>> {
    if stats.k == 0 {
        return Ok(DMatrix::zeros(stats.n(), 0));
    }
    let chol = Cholesky::new(&stats.s_xx)?;
    Ok(chol.solve_matrix(&stats.s_yx.transpose()).transpose())
}

/// Outcome of the ridge grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeChoice {
    pub c0: f64,
    pub eta: f64,
    pub msfe_curve: Vec<(f64, f64)>,
    /// False when no first difference fell below the tolerance and the grid
    /// midpoint was used instead.
    pub converged: bool,
}

/// Default grid for `c0`: 21 log-spaced points from 0.1 to 10.
pub fn default_ridge_grid() -> Vec<f64> {
    (0..=20).map(|i| 10f64.powf(-1.0 + 0.1 * i as f64)).collect()
}

/// Chooses `η = c0 k` by holdout forecasting.
///
/// Fits the ridge posterior mean on the first `split` fraction of rows for
/// each grid value, scores the remaining rows by mean squared one-step
/// forecast error (averaged over rows and series), and returns the smallest
/// `c0` whose successive MSFE difference is below `tol` in absolute value.
pub fn select_ridge(
    panel: &TimeSeriesPanel,
    lag_mode: LagMode,
    grid: &[f64],
    split: f64,
    tol: f64,
) -> Result<RidgeChoice> {
    if grid.is_empty() {
        return Err(param_err!("ridge grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|&c| !(c > 0.0)) {
        return Err(param_err!("ridge grid must be positive and strictly ascending"));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(param_err!("split must lie in (0, 1), got {split}"));
    }
    let (y_eff, x) = build_lagged_design(panel, lag_mode)?;
    let k = x.ncols();
    if k == 0 {
        return Err(param_err!("ridge selection needs covariates; lag-0 has none"));
    }
    let t_eff = y_eff.nrows();
    let n_train = (split * t_eff as f64).floor() as usize;
    if n_train == 0 || n_train >= t_eff {
        return Err(dim_err!(
            "split {split} of {t_eff} rows leaves an empty estimation or holdout block"
        ));
    }
    let x_train = x.rows(0, n_train).into_owned();
    let y_train = y_eff.rows(0, n_train).into_owned();
    let x_test = x.rows(n_train, t_eff - n_train).into_owned();
    let y_test = y_eff.rows(n_train, t_eff - n_train).into_owned();

    let xtx = x_train.tr_mul(&x_train);
    let xty = x_train.tr_mul(&y_train);
    let mut curve = Vec::with_capacity(grid.len());
    for &c0 in grid {
        let eta = c0 * k as f64;
        let mut lhs = xtx.clone();
        for i in 0..k {
            lhs[(i, i)] += eta;
        }
        let coef = Cholesky::with_jitter(&lhs)?.solve_matrix(&xty);
        let resid = &y_test - &x_test * coef;
        curve.push((c0, resid.norm_squared() / resid.len() as f64));
    }
    let hit = curve.windows(2).position(|w| (w[1].1 - w[0].1).abs() < tol);
    let (c0, converged) = match (grid.len(), hit) {
        (1, _) => (grid[0], true),
        (_, Some(i)) => (grid[i], true),
        (_, None) => (grid[grid.len() / 2], false),
    };
    Ok(RidgeChoice { c0, eta: c0 * k as f64, msfe_curve: curve, converged })
}

/// Regression coefficients and residual variances implied by `Σ` for the
/// given parent sets: `B_{i,π_i} = Σ_{i,π_i} Σ_{π_i,π_i}⁻¹` and
/// `Q_ii = Σ_ii - Σ_{i,π_i} Σ_{π_i,π_i}⁻¹ Σ_{π_i,i}`.
pub fn structural_decomposition(
    sigma: &DMatrix<f64>,
    parents: &[Vec<usize>],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = sigma.nrows();
    if sigma.ncols() != n || parents.len() != n {
        return Err(dim_err!("need a square sigma and one parent set per node"));
    }
    let mut b = DMatrix::zeros(n, n);
    let mut q = DVector::zeros(n);
    for (i, pa) in parents.iter().enumerate() {
        if pa.iter().any(|&p| p >= n || p == i) {
            return Err(param_err!("invalid parent set for node {i}"));
        }
        if pa.is_empty() {
            q[i] = sigma[(i, i)];
            continue;
        }
        let s_pp = DMatrix::from_fn(pa.len(), pa.len(), |r, c| sigma[(pa[r], pa[c])]);
        let s_pi = DVector::from_fn(pa.len(), |r, _| sigma[(pa[r], i)]);
        let coef = Cholesky::new(&s_pp)?.solve(&s_pi);
        for (r, &p) in pa.iter().enumerate() {
            b[(i, p)] = coef[r];
        }
        q[i] = sigma[(i, i)] - s_pi.dot(&coef);
    }
    Ok((b, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rng::RngStream;
    use alloc::vec;

    fn panel(y: DMatrix<f64>, m: DMatrix<f64>) -> TimeSeriesPanel {
        let t = y.nrows();
        let n = y.ncols();
        TimeSeriesPanel::new(
            y,
            m,
            (0..t).map(|i| format!("{i}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn lag1_dimensions() {
        let y = DMatrix::from_row_slice(3, 2, &[1., 2., 3., 4., 5., 6.]);
        let m = DMatrix::from_row_slice(3, 1, &[7., 8., 9.]);
        let (ye, x) = build_lagged_design(&panel(y, m), LagMode::Lag1).unwrap();
        assert_eq!(ye.shape(), (2, 2));
        assert_eq!(x.shape(), (2, 3));
        assert_eq!(x.row(0).iter().copied().collect::<Vec<_>>(), vec![1., 2., 7.]);
        assert_eq!(ye.row(1).iter().copied().collect::<Vec<_>>(), vec![5., 6.]);
    }

    #[test]
    fn lag1_needs_two_rows() {
        let p = panel(DMatrix::from_element(1, 2, 1.0), DMatrix::zeros(0, 0));
        assert!(matches!(build_lagged_design(&p, LagMode::Lag1), Err(Error::Dimension(_))));
        let (_, x) = build_lagged_design(&p, LagMode::Lag0).unwrap();
        assert_eq!(x.ncols(), 0);
    }

    #[test]
    fn lag1_constant_rows() {
        let y = DMatrix::from_fn(5, 3, |_, j| j as f64 + 0.5);
        let (_, x) = build_lagged_design(&panel(y, DMatrix::zeros(0, 0)), LagMode::Lag1).unwrap();
        for r in 1..x.nrows() {
            assert_eq!(x.row(r), x.row(0));
        }
    }

    #[test]
    fn lag0_stats_are_gram_matrix() {
        let mut rng = RngStream::new(1, 0);
        let y = DMatrix::from_fn(6, 3, |_, _| rng.normal());
        let s = compute_suffstats(&y, &DMatrix::zeros(6, 0), None, 1.0).unwrap();
        assert_eq!(s.k, 0);
        assert_eq!(s.s_y_given_x, y.tr_mul(&y));
    }

    #[test]
    fn scalar_hand_example() {
        let y = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let s = compute_suffstats(&y, &x, None, 1.0).unwrap();
        assert!((s.s_xx[(0, 0)] - 3.0).abs() < 1e-15);
        assert!((s.s_yx[(0, 0)] - 3.0).abs() < 1e-15);
        assert!((s.s_yy[(0, 0)] - 5.0).abs() < 1e-15);
        assert!((s.s_y_given_x[(0, 0)] - 2.0).abs() < 1e-14);
        let a = posterior_mean_a(&s).unwrap();
        assert!((a[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schur_identity_and_shrinkage() {
        let mut rng = RngStream::new(2, 0);
        let y = DMatrix::from_fn(20, 3, |_, _| rng.normal());
        let x = DMatrix::from_fn(20, 4, |_, _| rng.normal());
        let s = compute_suffstats(&y, &x, None, 0.7).unwrap();
        let direct = &s.s_yy - &s.s_yx * s.s_xx.clone().try_inverse().unwrap() * s.s_yx.transpose();
        assert!((&direct - &s.s_y_given_x).norm() / direct.norm() < 1e-10);

        let big = compute_suffstats(&y, &x, None, 1e12).unwrap();
        assert!((&big.s_y_given_x - y.tr_mul(&y)).norm() / y.norm_squared() < 1e-9);
        assert!(posterior_mean_a(&big).unwrap().amax() < 1e-9);
    }

    #[test]
    fn posterior_mean_is_ridge() {
        let mut rng = RngStream::new(8, 0);
        let y = DMatrix::from_fn(30, 2, |_, _| rng.normal());
        let x = DMatrix::from_fn(30, 3, |_, _| rng.normal());
        let eta = 1.3 * 3.0;
        let s = compute_suffstats(&y, &x, None, eta).unwrap();
        let mut lhs = x.tr_mul(&x);
        for i in 0..3 {
            lhs[(i, i)] += eta;
        }
        let ridge = lhs.try_inverse().unwrap() * x.tr_mul(&y);
        let a = posterior_mean_a(&s).unwrap();
        assert!((a.transpose() - &ridge).norm() / ridge.norm() < 1e-10);
    }

    #[test]
    fn singular_sxx_reports_pivot() {
        let y = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = compute_suffstats(&y, &x, None, 1e-300).unwrap_err();
        assert!(matches!(err, Error::Conditioning { index: 1, .. }), "{err:?}");
    }

    #[test]
    fn scalar_marginal_likelihood() {
        // n = 1, T = 2, Σ = 1, S = 2, k = 0: -log(2π) - 1
        let y = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let s = compute_suffstats(&y, &DMatrix::zeros(2, 0), None, 1.0).unwrap();
        let ll = log_marginal_likelihood(&s, &DMatrix::identity(1, 1)).unwrap();
        assert!((ll - (-(2.0 * PI).ln() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn marginal_likelihood_scaling() {
        let mut rng = RngStream::new(3, 0);
        let y = DMatrix::from_fn(7, 2, |_, _| rng.normal());
        let x = DMatrix::from_fn(7, 1, |_, _| rng.normal());
        let s = compute_suffstats(&y, &x, None, 2.0).unwrap();
        let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
        let c = 2.5;
        let l1 = log_marginal_likelihood(&s, &sigma).unwrap();
        let l2 = log_marginal_likelihood(&s, &(&sigma * c)).unwrap();
        let tr = (sigma.clone().try_inverse().unwrap() * &s.s_y_given_x).trace();
        let expect = -(7.0 * 2.0 / 2.0) * c.ln() - 0.5 * tr * (1.0 / c - 1.0);
        assert!((l2 - l1 - expect).abs() < 1e-10);
        assert!(log_marginal_likelihood(&s, &DMatrix::from_row_slice(2, 2, &[1., 2., 2., 1.])).is_err());
    }

    #[test]
    fn ridge_grid_edge_cases() {
        let mut rng = RngStream::new(4, 0);
        let y = DMatrix::from_fn(40, 2, |_, _| rng.normal());
        let p = panel(y, DMatrix::zeros(0, 0));
        let one = select_ridge(&p, LagMode::Lag1, &[0.7], 0.8, 0.01).unwrap();
        assert_eq!(one.c0, 0.7);
        assert!(select_ridge(&p, LagMode::Lag1, &[], 0.8, 0.01).is_err());
        assert!(select_ridge(&p, LagMode::Lag1, &[2.0, 1.0], 0.8, 0.01).is_err());
        assert!(select_ridge(&p, LagMode::Lag0, &[1.0], 0.8, 0.01).is_err());
        assert!(select_ridge(&p, LagMode::Lag1, &[1.0, 2.0], 0.01, 0.01).is_err());
    }

    #[test]
    fn ridge_flat_curve_picks_smallest() {
        // pure noise, long sample: forecasts barely move with the penalty
        let mut rng = RngStream::new(5, 0);
        let y = DMatrix::from_fn(2000, 2, |_, _| rng.normal());
        let p = panel(y, DMatrix::zeros(0, 0));
        let grid = default_ridge_grid();
        let choice = select_ridge(&p, LagMode::Lag1, &grid, 0.8, 0.01).unwrap();
        assert_eq!(choice.c0, grid[0]);
        assert!(choice.converged);
        assert_eq!(choice.msfe_curve.len(), grid.len());
    }

    #[test]
    fn ridge_midpoint_fallback() {
        // a zero tolerance can never fire
        let mut rng = RngStream::new(6, 0);
        let y = DMatrix::from_fn(60, 2, |_, _| rng.normal());
        let p = panel(y, DMatrix::zeros(0, 0));
        let grid = [0.1, 1.0, 10.0, 100.0, 1000.0];
        let choice = select_ridge(&p, LagMode::Lag1, &grid, 0.8, 0.0).unwrap();
        assert!(!choice.converged);
        assert_eq!(choice.c0, 10.0);
    }

    #[test]
    fn structural_two_by_two() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let (b, q) = structural_decomposition(&sigma, &[vec![1], vec![0]]).unwrap();
        assert!((b[(0, 1)] - 0.5).abs() < 1e-15 && (b[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((q[0] - 0.75).abs() < 1e-15 && (q[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn structural_diagonal_sigma() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let parents = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let (b, q) = structural_decomposition(&sigma, &parents).unwrap();
        assert!(b.amax() < 1e-15);
        assert_eq!(q, DVector::from_vec(vec![1.0, 2.0, 3.0]));
    }

    #[test]
    fn structural_rejects_bad_parents() {
        let sigma = DMatrix::identity(2, 2);
        assert!(structural_decomposition(&sigma, &[vec![0], vec![]]).is_err());
        assert!(structural_decomposition(&sigma, &[vec![5], vec![]]).is_err());
    }
}
