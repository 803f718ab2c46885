//! Fitting drivers and their file outputs.

use std::path::{Path, PathBuf};

use bcglpm_core::dgp::PlantedInstance;
use bcglpm_core::mcmc::{prepare, run_chain, summarize, FitConfig, FitResult, PosteriorSummary};
use bcglpm_core::metrics::{procrustes_series, standardize_series, StandardizedSeries};
use bcglpm_core::rng::mix_seed;
use bcglpm_core::TimeSeriesPanel;
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::formats::{fmt_f64, write_edges, write_json, write_latent, write_panel, write_trace, write_truth};

/// As [`bcglpm_core::fit`] with the chains spread over the current rayon pool.
pub fn fit_parallel(panel: &TimeSeriesPanel, config: &FitConfig) -> Result<FitResult> {
    let prepared = prepare(panel, config)?;
    let traces = (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let tr = run_chain(&prepared.stats, config, c)?;
            log::debug!("chain {c}: {} sweeps, {:?}", tr.scores.len(), tr.diagnostics);
            Ok(tr)
        })
        .collect::<bcglpm_core::Result<Vec<_>>>()?;
    let summary = summarize(&traces, config.burn_in, prepared.ridge)?;
    Ok(FitResult { summary, traces })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(AppError::io(dir))
}

/// Writes `edges.csv`, `latent.csv` (latent modes only), `summary.json` and
/// `trace.csv`; further chains go to `trace_chain<k>.csv`.
pub fn emit_outputs(dir: &Path, result: &FitResult, run: &RunConfig, labels: &[String]) -> Result<()> {
    create_dir(dir)?;
    let s = &result.summary;
    write_edges(&dir.join("edges.csv"), s)?;
    if let Some(u) = &s.u_hat {
        write_latent(&dir.join("latent.csv"), u, labels)?;
    }
    write_json(&dir.join("summary.json"), &summary_json(s, run))?;
    for (k, tr) in result.traces.iter().enumerate() {
        let name = if k == 0 { "trace.csv".to_string() } else { format!("trace_chain{k}.csv") };
        write_trace(&dir.join(name), tr)?;
    }
    Ok(())
}

fn summary_json(s: &PosteriorSummary, run: &RunConfig) -> serde_json::Value {
    json!({
        "theta_mean": s.theta_mean,
        "lambda_mean": s.lambda_mean.map(|l| [l[0], l[1]]),
        "psrf": s.psrf,
        "density": s.density,
        "density_posterior_mean": s.density_posterior_mean,
        "gcc": s.gcc,
        "edges": s.median_graph.edge_count(),
        "retained": s.retained,
        "n_chains": s.n_chains,
        "ridge": s.ridge.as_ref().map(|r| json!({"c0": r.c0, "eta": r.eta, "converged": r.converged})),
        "seed": run.fit.seed,
        "config": run.echo(),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Row ranges of equally spaced windows of fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub window_len: usize,
    pub step: usize,
    pub ranges: Vec<(usize, usize)>,
}

impl WindowPlan {
    /// `floor((t - len) / step) + 1` windows starting at row 0.
    pub fn new(t: usize, window_len: usize, step: usize) -> Result<Self> {
        if window_len == 0 || step == 0 {
            return Err(AppError::Config("window length and step must be positive".into()));
        }
        if window_len > t {
            return Err(AppError::Config(format!("window length {window_len} exceeds the {t} available rows")));
        }
        let count = (t - window_len) / step + 1;
        let ranges = (0..count).map(|w| (w * step, w * step + window_len)).collect();
        Ok(Self { window_len, step, ranges })
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct WindowOutcome {
    pub index: usize,
    pub start_date: String,
    pub end_date: String,
    pub summary: PosteriorSummary,
}

#[derive(Debug, Clone)]
pub struct RollingReport {
    pub windows: Vec<WindowOutcome>,
    pub standardized: Option<StandardizedSeries>,
    pub procrustes: Option<Vec<f64>>,
}

pub fn window_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("window_{index:04}"))
}

/// Fits every window of `plan`, at most `run.jobs` at a time, then writes
/// the density, standardized density, clustering and Procrustes series.
/// Window `w` uses seed `mix_seed(seed, w)`.
pub fn rolling_fit(panel: &TimeSeriesPanel, plan: &WindowPlan, run: &RunConfig, out: &Path) -> Result<RollingReport> {
    create_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.jobs)
        .build()
        .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    let windows = pool.install(|| {
        plan.ranges
            .par_iter()
            .enumerate()
            .map(|(w, &(start, end))| fit_window(panel, run, out, w, start, end))
            .collect::<Result<Vec<_>>>()
    })?;
    write_series(out, &windows, run)
}

fn fit_window(
    panel: &TimeSeriesPanel,
    run: &RunConfig,
    out: &Path,
    w: usize,
    start: usize,
    end: usize,
) -> Result<WindowOutcome> {
    let wrap = |e: AppError| AppError::Window { window: w, source: Box::new(e) };
    let sub = panel.window(start, end).map_err(|e| wrap(e.into()))?;
    let mut win_run = run.clone();
    win_run.fit.seed = mix_seed(run.fit.seed, w as u64);
    log::info!("window {w}: rows {start}..{end}");
    let result = fit_parallel(&sub, &win_run.fit).map_err(wrap)?;
    emit_outputs(&window_dir(out, w), &result, &win_run, panel.labels()).map_err(wrap)?;
    Ok(WindowOutcome {
        index: w,
        start_date: sub.dates()[0].clone(),
        end_date: sub.dates()[sub.len() - 1].clone(),
        summary: result.summary,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(AppError::csv(path))?;
    w.write_record(header).map_err(AppError::csv(path))?;
    for r in rows {
        w.write_record(&r).map_err(AppError::csv(path))?;
    }
    w.flush().map_err(AppError::io(path))
}

fn write_series(out: &Path, windows: &[WindowOutcome], run: &RunConfig) -> Result<RollingReport> {
    let label = |w: &WindowOutcome| vec![w.index.to_string(), w.start_date.clone(), w.end_date.clone()];
    write_rows(
        &out.join("density.csv"),
        &["window", "start_date", "end_date", "density", "density_posterior_mean"],
        windows
            .iter()
            .map(|w| {
                let mut r = label(w);
                r.push(fmt_f64(w.summary.density));
                r.push(fmt_f64(w.summary.density_posterior_mean));
                r
            })
            .collect(),
    )?;
    write_rows(
        &out.join("gcc.csv"),
        &["window", "start_date", "end_date", "gcc"],
        windows
            .iter()
            .map(|w| {
                let mut r = label(w);
                r.push(fmt_f64(w.summary.gcc));
                r
            })
            .collect(),
    )?;

    let densities: Vec<f64> = windows.iter().map(|w| w.summary.density).collect();
    let standardized = match standardize_series(&densities) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("standardized density unavailable: {e}");
            None
        }
    };
    let z_rows = standardized
        .as_ref()
        .map(|s| {
            windows
                .iter()
                .zip(&s.z)
                .enumerate()
                .map(|(k, (w, z))| {
                    let crossing = match s.crossings.iter().find(|c| c.index == k) {
                        Some(c) if c.upward => "up",
                        Some(_) => "down",
                        None => "",
                    };
                    let mut r = label(w);
                    r.push(fmt_f64(*z));
                    r.push(crossing.to_string());
                    r
                })
                .collect()
        })
        .unwrap_or_default();
    write_rows(
        &out.join("standardized_density.csv"),
        &["window", "start_date", "end_date", "z", "crossing"],
        z_rows,
    )?;

    let procrustes = if run.mode.uses_latent() {
        let us: Vec<_> = windows.iter().filter_map(|w| w.summary.u_hat.clone()).collect();
        let d = if us.len() >= 2 { procrustes_series(&us)? } else { Vec::new() };
        write_rows(
            &out.join("procrustes.csv"),
            &["window", "start_date", "end_date", "d"],
            windows
                .iter()
                .skip(1)
                .zip(&d)
                .map(|(w, d)| {
                    let mut r = label(w);
                    r.push(fmt_f64(*d));
                    r
                })
                .collect(),
        )?;
        Some(d)
    } else {
        None
    };
    Ok(RollingReport { windows: windows.to_vec(), standardized, procrustes })
}

/// Writes `data.csv`, `truth.csv` and `manifest.json` for one instance.
pub fn write_instance(dir: &Path, inst: &PlantedInstance) -> Result<()> {
    create_dir(dir)?;
    write_panel(&dir.join("data.csv"), &inst.to_panel()?)?;
    write_truth(&dir.join("truth.csv"), &inst.true_graph)?;
    let s = &inst.spec;
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "n": s.n,
            "t": s.t,
            "setup": format!("{:?}", s.setup).to_lowercase(),
            "edge_prob": s.edge_prob,
            "coef_range": [s.coef_range.0, s.coef_range.1],
            "seed": s.seed,
            "discard": s.discard,
            "delta": inst.delta,
            "true_edges": inst.true_graph.edge_count(),
            "a_true": inst.a_true.as_ref().map(|a| a.iter().copied().collect::<Vec<_>>()),
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )
}
