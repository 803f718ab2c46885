//! Synthetic panels with a planted covariance graph.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{param_err, Result};
use crate::graph::Graph;
use crate::linalg::Cholesky;
use crate::rng::{mix_seed, RngStream};
use crate::var::{LagMode, TimeSeriesPanel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    pub t: usize,
    pub setup: LagMode,
    pub edge_prob: f64,
    /// Magnitudes of planted coefficients are uniform on this range; signs
    /// are fair coin flips.
    pub coef_range: (f64, f64),
    pub seed: u64,
    /// Lag-1 only: leading rows generated and dropped.
    pub discard: usize,
}

impl DgpSpec {
    pub fn new(n: usize, t: usize, setup: LagMode, seed: u64) -> Self {
        Self { n, t, setup, edge_prob: 0.2, coef_range: (0.3, 0.9), seed, discard: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.t < 1 {
            return Err(param_err!("need n >= 2 and T >= 1, got n = {}, T = {}", self.n, self.t));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob < 1.0) {
            return Err(param_err!("edge probability must lie in (0, 1), got {}", self.edge_prob));
        }
        let (lo, hi) = self.coef_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(param_err!("bad coefficient range ({lo}, {hi})"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub spec: DgpSpec,
    /// T×n observations.
    pub data: DMatrix<f64>,
    pub true_graph: Graph,
    pub sigma_true: DMatrix<f64>,
    /// Diagonal of the lag-1 coefficient matrix.
    pub a_true: Option<DVector<f64>>,
    pub delta: f64,
}

impl PlantedInstance {
    pub fn to_panel(&self) -> Result<TimeSeriesPanel> {
        TimeSeriesPanel::from_matrix(self.data.clone())
    }
}

/// Diagonal shift `δ = (n min - max) / (1 - n)` applied to `B_G`. The
/// shifted matrix has smallest eigenvalue `(max - min) / (n - 1)`.
pub fn delta_shift(min_eig: f64, max_eig: f64, n: usize) -> f64 {
    let nf = n as f64;
    (nf * min_eig - max_eig) / (1.0 - nf)
}

fn signed_uniform(range: (f64, f64), rng: &mut RngStream) -> f64 {
    let mag = range.0 + (range.1 - range.0) * rng.uniform();
    if rng.bernoulli(0.5) {
        mag
    } else {
        -mag
    }
}

/// Planted graph, covariance `Σ_G = B_G + δI` and a draw of the series.
pub fn generate(spec: &DgpSpec) -> Result<PlantedInstance> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = RngStream::new(spec.seed, 0);
    let (graph, sigma, delta) = loop {
        let mut g = Graph::empty(n);
        let mut b = DMatrix::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.bernoulli(spec.edge_prob) {
                    g.set_edge(i, j, true);
                    let beta = signed_uniform(spec.coef_range, &mut rng);
                    b[(i, j)] = beta;
                    b[(j, i)] = beta;
                }
            }
        }
        let eig = SymmetricEigen::new(b.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if hi - lo <= 1e-9 * hi.abs().max(1.0) {
            log::debug!("equal eigenvalues in B_G, redrawing");
            continue;
        }
        let delta = delta_shift(lo, hi, n);
        for i in 0..n {
            b[(i, i)] += delta;
        }
        break (g, b, delta);
    };
    let chol = Cholesky::new(&sigma)?;
    let a_true = match spec.setup {
        LagMode::Lag0 => None,
        LagMode::Lag1 => Some(DVector::from_fn(n, |_, _| signed_uniform(spec.coef_range, &mut rng))),
    };

    let rows = spec.t + if a_true.is_some() { spec.discard } else { 0 };
    let mut data = DMatrix::zeros(rows, n);
    let mut prev = DVector::from_fn(n, |_, _| rng.normal());
    for t in 0..rows {
        let row = match (&a_true, t) {
            (Some(_), 0) => prev.clone(),
            (Some(a), _) => a.component_mul(&prev) + innovation(&chol, &mut rng),
            (None, _) => innovation(&chol, &mut rng),
        };
        data.set_row(t, &row.transpose());
        prev = row;
    }
    if rows > spec.t {
        data = data.rows(rows - spec.t, spec.t).into_owned();
    }
    Ok(PlantedInstance { spec: *spec, data, true_graph: graph, sigma_true: sigma, a_true, delta })
}

fn innovation(chol: &Cholesky, rng: &mut RngStream) -> DVector<f64> {
    let z = DVector::from_fn(chol.dim(), |_, _| rng.normal());
    chol.l() * z
}

/// Every (n, multiplier, setup, replication) cell with `T = multiplier · n`
/// and a seed derived from `seed` and the cell position.
pub fn benchmark_grid(
    n_list: &[usize],
    t_multipliers: &[usize],
    setups: &[LagMode],
    reps: usize,
    seed: u64,
) -> Vec<DgpSpec> {
    let mut out = Vec::with_capacity(n_list.len() * t_multipliers.len() * setups.len() * reps);
    for &n in n_list {
        for &mult in t_multipliers {
            for &setup in setups {
                for _ in 0..reps {
                    let cell = mix_seed(seed, out.len() as u64);
                    out.push(DgpSpec::new(n, mult * n, setup, cell));
                }
            }
        }
    }
    out
}
