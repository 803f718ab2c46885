//! Full Gibbs cycle, chain driver, convergence diagnostic and posterior
//! summaries.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Vector2};
#[allow(unused_imports)]
use num_traits::Float;

use crate::cgm::{sssl_edge_prior, update_graph, update_sigma, CovGraphState, SigmaUpdate, SpikeSlab, SweepOrder, PROB_EPS};
use crate::error::{dim_err, param_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::Cholesky;
use crate::lpm::{link_probability, update_lambda, update_theta, update_u, update_z, LatentState, LpmHyper};
use crate::metrics::{clustering_coefficient, network_density, orthogonal_alignment};
use crate::rng::{RngStream, DEFAULT_SEED};
use crate::var::{
    build_lagged_design, compute_suffstats, default_ridge_grid, select_ridge, LagMode, RidgeChoice,
    SufficientStats, TimeSeriesPanel,
};

/// Prior on edge inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgePrior {
    /// Link probabilities from the latent position model.
    Latent,
    /// Fixed inclusion probability; `None` means `2 / (n - 1)`.
    Constant(Option<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    pub lag_mode: LagMode,
    pub v0: f64,
    pub h: f64,
    pub edge_prior: EdgePrior,
    pub theta0: f64,
    pub tau_theta_sq: f64,
    /// Defaults to `n` when unset.
    pub tau_lambda_sq: Option<f64>,
    pub ridge_grid: Vec<f64>,
    pub ridge_split: f64,
    pub ridge_tol: f64,
    pub seed: u64,
    /// Stored θ, Λ and U samples are every `thin`-th retained sweep.
    pub thin: usize,
    pub standardize: bool,
    pub sweep_order: SweepOrder,
    pub sigma_update: SigmaUpdate,
    pub u_draws: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            burn_in: 3_000,
            n_chains: 2,
            lag_mode: LagMode::Lag1,
            v0: 0.02,
            h: 50.0,
            edge_prior: EdgePrior::Latent,
            theta0: -0.5,
            tau_theta_sq: 100.0,
            tau_lambda_sq: None,
            ridge_grid: default_ridge_grid(),
            ridge_split: 0.8,
            ridge_tol: 0.01,
            seed: DEFAULT_SEED,
            thin: 10,
            standardize: true,
            sweep_order: SweepOrder::Fixed,
            sigma_update: SigmaUpdate::Recompute,
            u_draws: 2,
        }
    }
}

impl FitConfig {
    pub fn bcglpm(lag_mode: LagMode) -> Self {
        Self { lag_mode, ..Self::default() }
    }

    /// Constant-prior baseline on the lag-0 likelihood.
    pub fn sssl() -> Self {
        Self { lag_mode: LagMode::Lag0, edge_prior: EdgePrior::Constant(None), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.burn_in >= self.n_iter {
            return Err(param_err!(
                "need 0 <= burn_in < n_iter, got burn_in = {}, n_iter = {}",
                self.burn_in,
                self.n_iter
            ));
        }
        if self.n_chains == 0 {
            return Err(param_err!("n_chains must be at least 1"));
        }
        if self.thin == 0 {
            return Err(param_err!("thin must be at least 1"));
        }
        SpikeSlab::new(self.v0, self.h)?;
        LpmHyper::new(self.theta0, self.tau_theta_sq, self.tau_lambda_sq.unwrap_or(1.0))?;
        if let EdgePrior::Constant(Some(p)) = self.edge_prior {
            if !(p > 0.0 && p < 1.0) {
                return Err(param_err!("constant edge prior must lie in (0, 1), got {p}"));
            }
        }
        Ok(())
    }

    pub fn spike(&self) -> Result<SpikeSlab> {
        SpikeSlab::new(self.v0, self.h)
    }

    pub fn hyper(&self, n: usize) -> Result<LpmHyper> {
        LpmHyper::new(self.theta0, self.tau_theta_sq, self.tau_lambda_sq.unwrap_or(n as f64))
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions { order: self.sweep_order, sigma_update: self.sigma_update, u_draws: self.u_draws }
    }

    pub fn uses_latent(&self) -> bool {
        matches!(self.edge_prior, EdgePrior::Latent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub order: SweepOrder,
    pub sigma_update: SigmaUpdate,
    /// Random-column `U` updates per sweep.
    pub u_draws: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { order: SweepOrder::Fixed, sigma_update: SigmaUpdate::Recompute, u_draws: 2 }
    }
}

/// Counters accumulated over sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepDiagnostics {
    pub b_clamps: usize,
    pub u_corrections: usize,
}

impl core::ops::AddAssign for SweepDiagnostics {
    fn add_assign(&mut self, o: Self) {
        self.b_clamps += o.b_clamps;
        self.u_corrections += o.u_corrections;
    }
}

/// One full cycle: Σ, then G with Z integrated out, then Z, θ, Λ and U.
pub fn gibbs_sweep(
    cov: &mut CovGraphState,
    latent: &mut LatentState,
    stats: &SufficientStats,
    spike: &SpikeSlab,
    hyper: &LpmHyper,
    opts: &SweepOptions,
    rng: &mut RngStream,
) -> Result<SweepDiagnostics> {
    if latent.n() != cov.n() {
        return Err(dim_err!("latent state has n = {}, covariance n = {}", latent.n(), cov.n()));
    }
    let mut diag = SweepDiagnostics {
        b_clamps: update_sigma(cov, stats, spike, opts.order, opts.sigma_update, rng)?,
        u_corrections: 0,
    };
    let gamma = link_probability(latent.theta, &latent.lambda, &latent.u);
    update_graph(cov, spike, &gamma, rng)?;
    update_z(latent, &cov.graph, rng)?;
    update_theta(latent, hyper, rng);
    update_lambda(latent, hyper, rng);
    for _ in 0..opts.u_draws {
        diag.u_corrections += update_u(latent, rng)? as usize;
    }
    Ok(diag)
}

/// Σ and G only, under fixed prior inclusion probabilities.
pub fn sssl_sweep(
    cov: &mut CovGraphState,
    stats: &SufficientStats,
    spike: &SpikeSlab,
    edge_probs: &DMatrix<f64>,
    opts: &SweepOptions,
    rng: &mut RngStream,
) -> Result<SweepDiagnostics> {
    let b_clamps = update_sigma(cov, stats, spike, opts.order, opts.sigma_update, rng)?;
    update_graph(cov, spike, edge_probs, rng)?;
    Ok(SweepDiagnostics { b_clamps, u_corrections: 0 })
}

/// `-2 log L`: `T log|Σ| + tr(S_{y|x} Σ⁻¹)` plus, with a latent block,
/// `½ Σ_{i≠j} (E_z - UΛU')²_ij`.
pub fn score(cov: &CovGraphState, latent: Option<&LatentState>, stats: &SufficientStats) -> Result<f64> {
    let n = cov.n();
    if stats.n() != n {
        return Err(dim_err!("state has n = {n}, statistics have n = {}", stats.n()));
    }
    let chol = Cholesky::new(&cov.sigma)?;
    let mut s = stats.t_eff as f64 * chol.log_det() + chol.solve_matrix(&stats.s_y_given_x).trace();
    if let Some(lat) = latent {
        if lat.n() != n {
            return Err(dim_err!("latent state has n = {}, covariance n = {n}", lat.n()));
        }
        let (u, l) = (&lat.u, lat.lambda);
        let mut sq = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let fit = l[0] * u[(i, 0)] * u[(j, 0)] + l[1] * u[(i, 1)] * u[(j, 1)];
                let r = lat.z[(i, j)] - lat.theta - fit;
                sq += r * r;
            }
        }
        // each unordered pair appears twice in the i ≠ j sum
        s += sq;
    }
    Ok(s)
}

/// Minimum chain length accepted by [`psrf`].
pub const PSRF_MIN_LEN: usize = 100;

/// Potential scale reduction factor `sqrt((W + B/N) / W)` with `W` the mean
/// within-chain variance and `B/N` the variance of the chain means.
pub fn psrf(traces: &[&[f64]]) -> Result<f64> {
    let m = traces.len();
    if m < 2 {
        return Err(Error::DiagnosticUnavailable("PSRF needs at least two chains".into()));
    }
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(param_err!("chains have unequal lengths"));
    }
    if len < PSRF_MIN_LEN {
        return Err(Error::DiagnosticUnavailable(alloc::format!(
            "PSRF needs at least {PSRF_MIN_LEN} draws per chain, got {len}"
        )));
    }
    if traces.iter().any(|t| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("non-finite value in trace".into()));
    }
    let nf = len as f64;
    let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / nf).collect();
    let w = traces
        .iter()
        .zip(&means)
        .map(|(t, mu)| t.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b_over_n = means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m as f64 - 1.0);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(((w + b_over_n) / w).sqrt())
}

/// Everything recorded by one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub chain: usize,
    /// Score of every sweep, burn-in included.
    pub scores: Vec<f64>,
    /// Post-burn-in inclusion counts, symmetric with zero diagonal.
    pub edge_counts: DMatrix<u32>,
    pub retained: usize,
    /// Network density of every retained sweep.
    pub density_samples: Vec<f64>,
    pub theta_samples: Vec<f64>,
    pub lambda_samples: Vec<Vector2<f64>>,
    pub u_samples: Vec<DMatrix<f64>>,
    pub u_last: Option<DMatrix<f64>>,
    /// Mean of the thinned `U` samples, each rotated onto `u_last`.
    pub u_mean_aligned: Option<DMatrix<f64>>,
    pub diagnostics: SweepDiagnostics,
}

impl ChainTrace {
    pub fn post_burn_in_scores(&self, burn_in: usize) -> &[f64] {
        &self.scores[burn_in.min(self.scores.len())..]
    }
}

/// Statistics and VAR hyperparameters for one data set.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub stats: SufficientStats,
    pub ridge: Option<RidgeChoice>,
}

/// Standardizes if configured, selects the ridge precision for lag-1 fits
/// and forms the sufficient statistics.
pub fn prepare(panel: &TimeSeriesPanel, config: &FitConfig) -> Result<PreparedData> {
    config.validate()?;
    let std_panel;
    let panel = if config.standardize {
        std_panel = panel.standardize();
        &std_panel
    } else {
        panel
    };
    if panel.n_series() < 2 {
        return Err(param_err!("need at least two series, got {}", panel.n_series()));
    }
    let (y_eff, x) = build_lagged_design(panel, config.lag_mode)?;
    let ridge = if x.ncols() > 0 {
        Some(select_ridge(panel, config.lag_mode, &config.ridge_grid, config.ridge_split, config.ridge_tol)?)
    } else {
        None
    };
    let eta = ridge.as_ref().map_or(1.0, |r| r.eta);
    let stats = compute_suffstats(&y_eff, &x, None, eta)?;
    Ok(PreparedData { stats, ridge })
}

/// Per-sweep view handed to a chain observer.
pub struct SweepView<'a> {
    pub sweep: usize,
    pub cov: &'a CovGraphState,
    pub latent: Option<&'a LatentState>,
    pub score: f64,
}

/// Runs one chain on stream `chain` of `config.seed`.
pub fn run_chain(stats: &SufficientStats, config: &FitConfig, chain: usize) -> Result<ChainTrace> {
    run_chain_observed(stats, config, chain, |_| Ok(()))
}

/// As [`run_chain`], calling `observer` after every sweep.
pub fn run_chain_observed<F>(
    stats: &SufficientStats,
    config: &FitConfig,
    chain: usize,
    mut observer: F,
) -> Result<ChainTrace>
where
    F: FnMut(&SweepView<'_>) -> Result<()>,
{
    config.validate()?;
    let n = stats.n();
    if n < 2 {
        return Err(param_err!("need at least two series, got {n}"));
    }
    let spike = config.spike()?;
    let hyper = config.hyper(n)?;
    let opts = config.sweep_options();
    let mut rng = RngStream::new(config.seed, chain as u64);

    let mut cov = CovGraphState::initial(n);
    let mut latent = match config.edge_prior {
        EdgePrior::Latent => Some(LatentState::initial(&cov.graph, &hyper, &mut rng)?),
        EdgePrior::Constant(_) => None,
    };
    let constant_prior = match config.edge_prior {
        EdgePrior::Latent => None,
        EdgePrior::Constant(None) => Some(sssl_edge_prior(n)?),
        EdgePrior::Constant(Some(p)) => {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            Some(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { p }))
        }
    };

    let retained = config.n_iter - config.burn_in;
    let mut trace = ChainTrace {
        chain,
        scores: Vec::with_capacity(config.n_iter),
        edge_counts: DMatrix::zeros(n, n),
        retained,
        density_samples: Vec::with_capacity(retained),
        theta_samples: Vec::new(),
        lambda_samples: Vec::new(),
        u_samples: Vec::new(),
        u_last: None,
        u_mean_aligned: None,
        diagnostics: SweepDiagnostics::default(),
    };

    for sweep in 0..config.n_iter {
        trace.diagnostics += match (&mut latent, &constant_prior) {
            (Some(lat), _) => gibbs_sweep(&mut cov, lat, stats, &spike, &hyper, &opts, &mut rng)?,
            (None, Some(p)) => sssl_sweep(&mut cov, stats, &spike, p, &opts, &mut rng)?,
            (None, None) => unreachable!("edge prior is either latent or constant"),
        };
        if cfg!(debug_assertions) || (sweep + 1) % 100 == 0 {
            cov.check()?;
        }
        let s = score(&cov, latent.as_ref(), stats)?;
        if !s.is_finite() {
            return Err(Error::Numerical(alloc::format!("non-finite score at sweep {sweep}")));
        }
        trace.scores.push(s);
        observer(&SweepView { sweep, cov: &cov, latent: latent.as_ref(), score: s })?;

        if sweep < config.burn_in {
            continue;
        }
        for (i, j) in cov.graph.edges() {
            trace.edge_counts[(i, j)] += 1;
            trace.edge_counts[(j, i)] += 1;
        }
        trace.density_samples.push(network_density(&cov.graph)?);
        if (sweep - config.burn_in) % config.thin == 0 {
            if let Some(lat) = &latent {
                trace.theta_samples.push(lat.theta);
                trace.lambda_samples.push(lat.lambda);
                trace.u_samples.push(lat.u.clone());
            }
        }
    }

    if let Some(lat) = &latent {
        let target = lat.u.clone();
        trace.u_mean_aligned = Some(aligned_mean(&target, trace.u_samples.iter())?);
        trace.u_last = Some(target);
    }
    Ok(trace)
}

/// Mean of `samples`, each first rotated or reflected onto `target`.
fn aligned_mean<'a, I>(target: &DMatrix<f64>, samples: I) -> Result<DMatrix<f64>>
where
    I: Iterator<Item = &'a DMatrix<f64>>,
{
    let mut sum = DMatrix::zeros(target.nrows(), 2);
    let mut count = 0usize;
    for u in samples {
        let h = orthogonal_alignment(target, u)?;
        sum += u * h;
        count += 1;
    }
    if count == 0 {
        return Ok(target.clone());
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub edge_prob: DMatrix<f64>,
    /// Edges with posterior inclusion probability above one half.
    pub median_graph: Graph,
    pub theta_mean: Option<f64>,
    pub lambda_mean: Option<Vector2<f64>>,
    pub u_hat: Option<DMatrix<f64>>,
    /// `None` with a single chain or a short retained trace.
    pub psrf: Option<f64>,
    pub density_posterior_mean: f64,
    pub density: f64,
    pub gcc: f64,
    pub retained: usize,
    pub n_chains: usize,
    pub ridge: Option<RidgeChoice>,
}

/// Pools chains into posterior summaries. `u_hat` aligns every thinned `U`
/// sample to the last sample of the first chain.
pub fn summarize(traces: &[ChainTrace], burn_in: usize, ridge: Option<RidgeChoice>) -> Result<PosteriorSummary> {
    let first = traces.first().ok_or_else(|| param_err!("no chains to summarize"))?;
    let n = first.edge_counts.nrows();
    let total: usize = traces.iter().map(|t| t.retained).sum();
    if total == 0 {
        return Err(param_err!("no retained sweeps"));
    }
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for t in traces {
        if t.edge_counts.nrows() != n {
            return Err(dim_err!("chains disagree on n"));
        }
        counts += t.edge_counts.map(|c| c as f64);
    }
    let edge_prob = counts / total as f64;
    let median_graph = Graph::from_threshold(&edge_prob, 0.5);

    let density_posterior_mean = traces.iter().flat_map(|t| t.density_samples.iter()).sum::<f64>()
        / traces.iter().map(|t| t.density_samples.len()).sum::<usize>().max(1) as f64;

    let thetas: Vec<f64> = traces.iter().flat_map(|t| t.theta_samples.iter().copied()).collect();
    let theta_mean = (!thetas.is_empty()).then(|| thetas.iter().sum::<f64>() / thetas.len() as f64);
    let lambdas: Vec<Vector2<f64>> = traces.iter().flat_map(|t| t.lambda_samples.iter().copied()).collect();
    let lambda_mean = (!lambdas.is_empty())
        .then(|| lambdas.iter().fold(Vector2::zeros(), |a, l| a + l) / lambdas.len() as f64);
    let u_hat = match &first.u_last {
        Some(target) => Some(aligned_mean(target, traces.iter().flat_map(|t| t.u_samples.iter()))?),
        None => None,
    };

    let psrf = if traces.len() >= 2 {
        let post: Vec<&[f64]> = traces.iter().map(|t| t.post_burn_in_scores(burn_in)).collect();
        match psrf(&post) {
            Ok(v) => Some(v),
            Err(Error::DiagnosticUnavailable(msg)) => {
                log::info!("PSRF unavailable: {msg}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(PosteriorSummary {
        density: network_density(&median_graph)?,
        gcc: clustering_coefficient(&median_graph),
        edge_prob,
        median_graph,
        theta_mean,
        lambda_mean,
        u_hat,
        psrf,
        density_posterior_mean,
        retained: total,
        n_chains: traces.len(),
        ridge,
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub summary: PosteriorSummary,
    pub traces: Vec<ChainTrace>,
}

/// Prepares the data and runs all chains one after another.
pub fn fit(panel: &TimeSeriesPanel, config: &FitConfig) -> Result<FitResult> {
    let prepared = prepare(panel, config)?;
    let traces = (0..config.n_chains)
        .map(|c| run_chain(&prepared.stats, config, c))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&traces, config.burn_in, prepared.ridge)?;
    Ok(FitResult { summary, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lag0_stats(n: usize, t: usize, seed: u64) -> SufficientStats {
        let mut rng = RngStream::new(seed, 9);
        let y = DMatrix::from_fn(t, n, |_, _| rng.normal());
        compute_suffstats(&y, &DMatrix::zeros(t, 0), None, 1.0).unwrap()
    }

    #[test]
    fn score_plug_in() {
        let mut stats = lag0_stats(2, 10, 1);
        stats.s_y_given_x = DMatrix::identity(2, 2);
        let cov = CovGraphState::initial(2);
        let mut rng = RngStream::new(3, 0);
        let mut lat = LatentState::initial(&Graph::empty(2), &LpmHyper::default_for(2), &mut rng).unwrap();
        lat.lambda = Vector2::new(0.7, -0.2);
        let fit = lat.eigen_part();
        lat.z = fit.map(|v| v + lat.theta);
        assert!((score(&cov, Some(&lat), &stats).unwrap() - 2.0).abs() < 1e-12);
        assert!((score(&cov, None, &stats).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psrf_edge_cases() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(psrf(&[&a, &a]).unwrap(), 1.0);
        let b: Vec<f64> = a.iter().map(|v| v + 100.0).collect();
        assert!(psrf(&[&a, &b]).unwrap() > 1.2);
        assert!(matches!(psrf(&[&a]), Err(Error::DiagnosticUnavailable(_))));
        assert!(matches!(psrf(&[&a[..50], &a[..50]]), Err(Error::DiagnosticUnavailable(_))));
        assert!(psrf(&[&a[..150], &a]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { burn_in: 10, n_iter: 10, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { n_chains: 0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { h: 1.0, ..FitConfig::default() }.validate().is_err());
        let c = FitConfig { edge_prior: EdgePrior::Constant(Some(1.5)), ..FitConfig::sssl() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn short_chain_bookkeeping() {
        let stats = lag0_stats(5, 50, 4);
        let cfg = FitConfig { n_iter: 40, burn_in: 10, thin: 7, n_chains: 1, ..FitConfig::bcglpm(LagMode::Lag0) };
        let tr = run_chain(&stats, &cfg, 0).unwrap();
        assert_eq!(tr.scores.len(), 40);
        assert_eq!(tr.density_samples.len(), 30);
        assert_eq!(tr.theta_samples.len(), 5);
        assert_eq!(tr.edge_counts, tr.edge_counts.transpose());
        assert!(tr.edge_counts.iter().all(|&c| c as usize <= tr.retained));
        let s = summarize(&[tr], cfg.burn_in, None).unwrap();
        assert_eq!(s.psrf, None);
        assert!(s.edge_prob.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!((0..5).map(|i| s.edge_prob[(i, i)]).sum::<f64>(), 0.0);
        let u = s.u_hat.unwrap();
        assert_eq!(u.shape(), (5, 2));
    }

    #[test]
    fn sssl_chain_has_no_latent_output() {
        let stats = lag0_stats(4, 40, 5);
        let cfg = FitConfig { n_iter: 20, burn_in: 5, ..FitConfig::sssl() };
        let tr = run_chain(&stats, &cfg, 1).unwrap();
        assert!(tr.u_last.is_none() && tr.theta_samples.is_empty());
        let s = summarize(&vec![tr.clone(), tr], 5, None).unwrap();
        assert!(s.u_hat.is_none() && s.theta_mean.is_none());
        // 15 retained draws per chain is below the PSRF minimum
        assert!(s.psrf.is_none());
    }
}
