//! Covariance graph block: column-wise Gibbs updates of Σ under the
//! spike-and-slab prior, and independent Bernoulli updates of the graph.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dim_err, param_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::{column_without, full_index, minor, Cholesky};
use crate::rng::RngStream;
use crate::samplers::{sample_gig, GigParams};
use crate::var::SufficientStats;

/// Probabilities are kept this far from 0 and 1.
pub const PROB_EPS: f64 = 1e-12;

/// Spike (`v0`) and slab (`v1 = h v0`) standard deviations for off-diagonal
/// covariances. Diagonal entries get an exponential prior with rate ½.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeSlab {
    v0: f64,
    v1: f64,
}

impl SpikeSlab {
    pub fn new(v0: f64, h: f64) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(param_err!("spike sd v0 must be positive, got {v0}"));
        }
        if !(h > 1.0) || !h.is_finite() {
            return Err(param_err!("slab multiplier h must exceed 1, got {h}"));
        }
        Ok(Self { v0, v1: h * v0 })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }
    pub fn v1(&self) -> f64 {
        self.v1
    }
    pub fn h(&self) -> f64 {
        self.v1 / self.v0
    }

    /// Prior variance of an off-diagonal entry.
    #[inline]
    pub fn variance(&self, edge: bool) -> f64 {
        if edge {
            self.v1 * self.v1
        } else {
            self.v0 * self.v0
        }
    }

    /// `V` with unit diagonal and `v0²`/`v1²` off the diagonal per `graph`.
    pub fn v_matrix(&self, graph: &Graph) -> DMatrix<f64> {
        let n = graph.n();
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { self.variance(graph.has_edge(i, j)) })
    }
}

/// Current covariance and graph of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CovGraphState {
    pub sigma: DMatrix<f64>,
    pub graph: Graph,
}

impl CovGraphState {
    /// `Σ = I`, empty graph.
    pub fn initial(n: usize) -> Self {
        Self { sigma: DMatrix::identity(n, n), graph: Graph::empty(n) }
    }

    pub fn n(&self) -> usize {
        self.sigma.nrows()
    }

    /// Verifies `Σ` is symmetric positive definite and the graph is
    /// symmetric with an empty diagonal.
    pub fn check(&self) -> Result<()> {
        let n = self.n();
        for j in 0..n {
            for i in (j + 1)..n {
                if self.sigma[(i, j)] != self.sigma[(j, i)] {
                    return Err(Error::Numerical(alloc::format!("sigma asymmetric at ({i}, {j})")));
                }
            }
        }
        Cholesky::new(&self.sigma)?;
        if !self.graph.is_consistent() || self.graph.n() != n {
            return Err(Error::Numerical("graph not symmetric with empty diagonal".into()));
        }
        Ok(())
    }
}

/// How `Σ₋ᵢ⁻¹` is obtained for each column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaUpdate {
    /// Factorize `Σ₋ᵢ` afresh for every column.
    #[default]
    Recompute,
    /// Invert `Σ` once per sweep and carry `Σ⁻¹` through the columns with
    /// block updates.
    TrackInverse,
}

/// Column visiting order within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Fixed,
    RandomPermutation,
}

/// Diagnostics from one column update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnDraw {
    pub gamma: f64,
    /// The GIG scale parameter underflowed and was clamped.
    pub b_clamped: bool,
}

/// Resamples row/column `i` of `Σ` from its full conditional.
pub fn update_sigma_column(
    state: &mut CovGraphState,
    stats: &SufficientStats,
    spike: &SpikeSlab,
    i: usize,
    rng: &mut RngStream,
) -> Result<ColumnDraw> {
    check_dims(state, stats)?;
    let n = state.n();
    if i >= n {
        return Err(dim_err!("column {i} out of range for n = {n}"));
    }
    if n == 1 {
        return update_scalar(state, stats, rng);
    }
    let sinv = Cholesky::with_jitter(&minor(&state.sigma, i))?.inverse();
    let (draw, _) = draw_column(state, &sinv, stats, spike, i, rng)?;
    Ok(draw)
}

/// One pass of column updates over all of `Σ`. Returns the number of GIG
/// clamps that occurred.
pub fn update_sigma(
    state: &mut CovGraphState,
    stats: &SufficientStats,
    spike: &SpikeSlab,
    order: SweepOrder,
    mode: SigmaUpdate,
    rng: &mut RngStream,
) -> Result<usize> {
    check_dims(state, stats)?;
    let n = state.n();
    let cols: Vec<usize> = match order {
        SweepOrder::Fixed => (0..n).collect(),
        SweepOrder::RandomPermutation => {
            let mut v: Vec<usize> = (0..n).collect();
            for k in (1..n).rev() {
                v.swap(k, rng.index(k + 1));
            }
            v
        }
    };
    if n == 1 {
        return update_scalar(state, stats, rng).map(|d| d.b_clamped as usize);
    }
    let mut clamps = 0;
    match mode {
        SigmaUpdate::Recompute => {
            for &i in &cols {
                clamps += update_sigma_column(state, stats, spike, i, rng)?.b_clamped as usize;
            }
        }
        SigmaUpdate::TrackInverse => {
            let mut omega = Cholesky::with_jitter(&state.sigma)?.inverse();
            for &i in &cols {
                // Σ₋ᵢ⁻¹ = Ω₋ᵢ - ω ω' / ω_ii
                let w = column_without(&omega, i);
                let wii = omega[(i, i)];
                let mut sinv = minor(&omega, i);
                sinv.ger(-1.0 / wii, &w, &w, 1.0);
                let (draw, g) = draw_column(state, &sinv, stats, spike, i, rng)?;
                clamps += draw.b_clamped as usize;
                // Block inverse of the updated Σ.
                let gamma = draw.gamma;
                sinv.ger(1.0 / gamma, &g, &g, 1.0);
                for r in 0..n - 1 {
                    let fr = full_index(r, i);
                    for c in 0..n - 1 {
                        omega[(fr, full_index(c, i))] = sinv[(r, c)];
                    }
                    omega[(fr, i)] = -g[r] / gamma;
                    omega[(i, fr)] = -g[r] / gamma;
                }
                omega[(i, i)] = 1.0 / gamma;
            }
        }
    }
    Ok(clamps)
}

fn check_dims(state: &CovGraphState, stats: &SufficientStats) -> Result<()> {
    if stats.n() != state.n() {
        return Err(dim_err!("state has n = {}, statistics have n = {}", state.n(), stats.n()));
    }
    Ok(())
}

/// n = 1: Σ = γ ~ GIG(1 - T/2, 1, s).
fn update_scalar(
    state: &mut CovGraphState,
    stats: &SufficientStats,
    rng: &mut RngStream,
) -> Result<ColumnDraw> {
    let s = stats.s_y_given_x[(0, 0)];
    let (b, b_clamped) = clamp_b(s, s);
    let gamma = sample_gig(&GigParams::new(1.0 - 0.5 * stats.t_eff as f64, 1.0, b)?, rng);
    state.sigma[(0, 0)] = gamma;
    Ok(ColumnDraw { gamma, b_clamped })
}

fn clamp_b(b: f64, s_ii: f64) -> (f64, bool) {
    let floor = (f64::EPSILON * s_ii.abs()).max(f64::MIN_POSITIVE);
    if b > floor && b.is_finite() {
        (b, false)
    } else {
        log::warn!("GIG scale {b:e} not positive after cancellation; clamped to {floor:e}");
        (floor, true)
    }
}

/// Draws `γ | μ` then `μ | γ` for column `i` given `Σ₋ᵢ⁻¹`, writes the new
/// column into `state.sigma`, and returns `Σ₋ᵢ⁻¹ μ` for inverse tracking.
fn draw_column(
    state: &mut CovGraphState,
    sinv: &DMatrix<f64>,
    stats: &SufficientStats,
    spike: &SpikeSlab,
    i: usize,
    rng: &mut RngStream,
) -> Result<(ColumnDraw, DVector<f64>)> {
    let n = state.n();
    let m = n - 1;
    let s = &stats.s_y_given_x;
    let s_minor = minor(s, i);
    let s_col = column_without(s, i);
    let s_ii = s[(i, i)];
    let v_ii = 1.0;

    let mu_old = column_without(&state.sigma, i);
    let c = sinv * &s_col;
    let p = sinv * (&s_minor * sinv);

    // γ | μ ~ GIG(1 - T/2, v_ii, μ'Pμ - 2c'μ + s_ii)
    let p_mu = &p * &mu_old;
    let (b, b_clamped) = clamp_b(mu_old.dot(&p_mu) - 2.0 * c.dot(&mu_old) + s_ii, s_ii);
    let gig = GigParams::new(1.0 - 0.5 * stats.t_eff as f64, v_ii, b)?;
    let gamma = sample_gig(&gig, rng);

    // μ | γ ~ N(W⁻¹ c / γ, W⁻¹), W = P/γ + v_ii Σ₋ᵢ⁻¹ + D_v⁻¹
    let mut w = p;
    let inv_gamma = 1.0 / gamma;
    for col in 0..m {
        for row in 0..m {
            w[(row, col)] = w[(row, col)] * inv_gamma + v_ii * sinv[(row, col)];
        }
        let edge = state.graph.has_edge(i, full_index(col, i));
        w[(col, col)] += 1.0 / spike.variance(edge);
    }
    let chol = Cholesky::with_jitter(&w)?;
    let mut mu = chol.solve(&c);
    mu *= inv_gamma;
    let mut noise = DVector::from_fn(m, |_, _| rng.normal());
    chol.solve_upper_mut(&mut noise);
    mu += noise;

    let g = sinv * &mu;
    let sigma_ii = gamma + mu.dot(&g);
    for r in 0..m {
        let fr = full_index(r, i);
        state.sigma[(fr, i)] = mu[r];
        state.sigma[(i, fr)] = mu[r];
    }
    state.sigma[(i, i)] = sigma_ii;
    Ok((ColumnDraw { gamma, b_clamped }, g))
}

/// Posterior probability that edge (i, j) is present given `σ_ij` and its
/// prior inclusion probability, evaluated in log space.
pub fn edge_inclusion_probability(sigma_ij: f64, prior: f64, spike: &SpikeSlab) -> f64 {
    let prior = prior.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let s2 = sigma_ij * sigma_ij;
    let log_slab = prior.ln() - spike.v1.ln() - s2 / (2.0 * spike.v1 * spike.v1);
    let log_spike = (1.0 - prior).ln() - spike.v0.ln() - s2 / (2.0 * spike.v0 * spike.v0);
    let p = 1.0 / (1.0 + (log_spike - log_slab).exp());
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Resamples every edge independently given `Σ` and prior link probabilities.
pub fn update_graph(
    state: &mut CovGraphState,
    spike: &SpikeSlab,
    edge_probs: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<()> {
    let n = state.n();
    if edge_probs.shape() != (n, n) {
        return Err(dim_err!("edge prior is {:?}, expected ({n}, {n})", edge_probs.shape()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let p = edge_inclusion_probability(state.sigma[(i, j)], edge_probs[(i, j)], spike);
            let on = rng.bernoulli(p);
            state.graph.set_edge(i, j, on);
        }
    }
    Ok(())
}

/// Constant prior inclusion probability `2 / (n - 1)`, clamped into (0, 1).
pub fn sssl_edge_prior(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(param_err!("constant edge prior needs n >= 2, got {n}"));
    }
    let p = (2.0 / (n as f64 - 1.0)).clamp(PROB_EPS, 1.0 - PROB_EPS);
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { p }))
}
