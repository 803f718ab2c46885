//! Run settings from flags and config files.
//!
//! Every field is optional so that flags and a TOML or JSON file can be
//! layered: values present in the file replace values given as flags, and
//! anything still unset takes the library default.

use std::path::Path;

use bcglpm_core::cgm::{SigmaUpdate, SweepOrder};
use bcglpm_core::mcmc::{EdgePrior, FitConfig};
use bcglpm_core::LagMode;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Latent-position prior, no lags.
    Bcglpm0,
    /// Latent-position prior with a lag-1 VAR mean.
    Bcglpm1,
    /// Constant edge prior, no lags.
    Sssl,
}

impl Mode {
    pub fn uses_latent(self) -> bool {
        self != Mode::Sssl
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OrderArg {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaArg {
    Recompute,
    TrackInverse,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub n_chains: Option<usize>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub tau_theta_sq: Option<f64>,
    #[arg(long)]
    pub tau_lambda_sq: Option<f64>,
    /// Constant edge prior for `sssl`; defaults to 2/(n-1).
    #[arg(long)]
    pub edge_prob: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ridge_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub ridge_split: Option<f64>,
    #[arg(long)]
    pub ridge_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long, value_enum)]
    pub sweep_order: Option<OrderArg>,
    #[arg(long, value_enum)]
    pub sigma_update: Option<SigmaArg>,
    #[arg(long)]
    pub u_draws: Option<usize>,
    /// Input columns used as market indicators.
    #[arg(long, value_delimiter = ',')]
    pub market: Option<Vec<String>>,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long)]
    pub log_rv: Option<bool>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top; mode, n_iter, burn_in, n_chains, v0, h, theta0, tau_theta_sq,
            tau_lambda_sq, edge_prob, ridge_grid, ridge_split, ridge_tol, seed, thin, standardize,
            sweep_order, sigma_update, u_draws, market, window_len, step, log_rv, jobs)
    }

    /// Reads JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn resolve(&self, default_mode: Mode) -> Result<RunConfig> {
        let mode = self.mode.unwrap_or(default_mode);
        let base = match mode {
            Mode::Bcglpm0 => FitConfig::bcglpm(LagMode::Lag0),
            Mode::Bcglpm1 => FitConfig::bcglpm(LagMode::Lag1),
            Mode::Sssl => FitConfig::sssl(),
        };
        if mode.uses_latent() && self.edge_prob.is_some() {
            return Err(AppError::Config("edge_prob applies only to sssl mode".into()));
        }
        let fit = FitConfig {
            n_iter: self.n_iter.unwrap_or(base.n_iter),
            burn_in: self.burn_in.unwrap_or(base.burn_in),
            n_chains: self.n_chains.unwrap_or(base.n_chains),
            v0: self.v0.unwrap_or(base.v0),
            h: self.h.unwrap_or(base.h),
            edge_prior: match mode {
                Mode::Sssl => EdgePrior::Constant(self.edge_prob),
                _ => EdgePrior::Latent,
            },
            theta0: self.theta0.unwrap_or(base.theta0),
            tau_theta_sq: self.tau_theta_sq.unwrap_or(base.tau_theta_sq),
            tau_lambda_sq: self.tau_lambda_sq.or(base.tau_lambda_sq),
            ridge_grid: self.ridge_grid.clone().unwrap_or(base.ridge_grid.clone()),
            ridge_split: self.ridge_split.unwrap_or(base.ridge_split),
            ridge_tol: self.ridge_tol.unwrap_or(base.ridge_tol),
            seed: self.seed.unwrap_or(base.seed),
            thin: self.thin.unwrap_or(base.thin),
            standardize: self.standardize.unwrap_or(base.standardize),
            sweep_order: match self.sweep_order {
                Some(OrderArg::Random) => SweepOrder::RandomPermutation,
                Some(OrderArg::Fixed) => SweepOrder::Fixed,
                None => base.sweep_order,
            },
            sigma_update: match self.sigma_update {
                Some(SigmaArg::TrackInverse) => SigmaUpdate::TrackInverse,
                Some(SigmaArg::Recompute) => SigmaUpdate::Recompute,
                None => base.sigma_update,
            },
            u_draws: self.u_draws.unwrap_or(base.u_draws),
            lag_mode: base.lag_mode,
        };
        fit.validate()?;
        let run = RunConfig {
            mode,
            fit,
            market: self.market.clone().unwrap_or_default(),
            window_len: self.window_len.unwrap_or(252),
            step: self.step.unwrap_or(21),
            log_rv: self.log_rv.unwrap_or(true),
            jobs: self.jobs.unwrap_or(1),
        };
        if run.jobs == 0 {
            return Err(AppError::Config("jobs must be at least 1".into()));
        }
        Ok(run)
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub fit: FitConfig,
    pub market: Vec<String>,
    pub window_len: usize,
    pub step: usize,
    pub log_rv: bool,
    pub jobs: usize,
}

impl RunConfig {
    pub fn echo(&self) -> serde_json::Value {
        let f = &self.fit;
        json!({
            "mode": self.mode,
            "n_iter": f.n_iter,
            "burn_in": f.burn_in,
            "n_chains": f.n_chains,
            "v0": f.v0,
            "h": f.h,
            "edge_prob": match f.edge_prior { EdgePrior::Constant(p) => p, EdgePrior::Latent => None },
            "theta0": f.theta0,
            "tau_theta_sq": f.tau_theta_sq,
            "tau_lambda_sq": f.tau_lambda_sq,
            "ridge_grid": f.ridge_grid,
            "ridge_split": f.ridge_split,
            "ridge_tol": f.ridge_tol,
            "seed": f.seed,
            "thin": f.thin,
            "standardize": f.standardize,
            "sweep_order": match f.sweep_order { SweepOrder::Fixed => "fixed", SweepOrder::RandomPermutation => "random" },
            "sigma_update": match f.sigma_update { SigmaUpdate::Recompute => "recompute", SigmaUpdate::TrackInverse => "track-inverse" },
            "u_draws": f.u_draws,
            "market": self.market,
            "window_len": self.window_len,
            "step": self.step,
            "log_rv": self.log_rv,
            "jobs": self.jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_win() {
        let flags = Settings { n_iter: Some(50), seed: Some(1), ..Settings::default() };
        let file: Settings = toml::from_str("seed = 9\nmode = \"sssl\"\n").unwrap();
        let merged = flags.overlay(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.n_iter, Some(50));
        assert_eq!(merged.mode, Some(Mode::Sssl));
    }

    #[test]
    fn json_and_unknown_keys() {
        let s: Settings = serde_json::from_str(r#"{"sigma_update": "track-inverse", "jobs": 3}"#).unwrap();
        assert_eq!(s.sigma_update, Some(SigmaArg::TrackInverse));
        assert!(toml::from_str::<Settings>("nonsense = 1").is_err());
    }

    #[test]
    fn resolve_validates() {
        let s = Settings { n_iter: Some(10), burn_in: Some(10), ..Settings::default() };
        assert!(s.resolve(Mode::Bcglpm0).is_err());
        let s = Settings { edge_prob: Some(0.1), ..Settings::default() };
        assert!(s.resolve(Mode::Bcglpm1).is_err());
        let r = s.resolve(Mode::Sssl).unwrap();
        assert_eq!(r.fit.edge_prior, EdgePrior::Constant(Some(0.1)));
        assert_eq!((r.window_len, r.step, r.log_rv), (252, 21, true));
    }
}
