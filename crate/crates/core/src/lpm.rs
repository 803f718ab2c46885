//! Latent position (eigenmodel) block.
//!
//! Links follow a probit model `G_ij = 1(Z_ij > 0)` with
//! `Z_ij = θ + (U Λ U')_ij + ξ_ij`, `U` an n×2 matrix with orthonormal
//! columns and `Λ = diag(λ1, λ2)`. `E_z` below is `Z - θ` off the diagonal
//! and zero on it; self-pairs never enter any sum.

use nalgebra::{DMatrix, DVector, Vector2};
#[allow(unused_imports)]
use num_traits::Float;

use crate::cgm::PROB_EPS;
use crate::error::{dim_err, param_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::Householder;
use crate::rng::RngStream;
use crate::samplers::{sample_truncnorm, sample_vector_bingham, Truncation};
use crate::special::norm_cdf;

/// Re-orthonormalize `U` when `‖U'U - I‖` exceeds this.
pub const ORTHONORMAL_DRIFT: f64 = 1e-8;

/// Prior constants of the latent block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpmHyper {
    pub theta0: f64,
    pub tau_theta_sq: f64,
    pub tau_lambda_sq: f64,
}

impl LpmHyper {
    pub fn new(theta0: f64, tau_theta_sq: f64, tau_lambda_sq: f64) -> Result<Self> {
        if !(tau_theta_sq > 0.0) || !(tau_lambda_sq > 0.0) || !theta0.is_finite() {
            return Err(param_err!("latent prior variances must be positive"));
        }
        Ok(Self { theta0, tau_theta_sq, tau_lambda_sq })
    }

    /// `θ0 = -0.5`, `τθ² = 100`, `τλ² = n`.
    pub fn default_for(n: usize) -> Self {
        Self { theta0: -0.5, tau_theta_sq: 100.0, tau_lambda_sq: n as f64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub z: DMatrix<f64>,
    pub theta: f64,
    pub lambda: Vector2<f64>,
    pub u: DMatrix<f64>,
}

impl LatentState {
    /// `θ = θ0`, `Λ = 0`, `U` uniform on the Stiefel manifold, `Z` filled
    /// with draws consistent with `graph`.
    pub fn initial(graph: &Graph, hyper: &LpmHyper, rng: &mut RngStream) -> Result<Self> {
        let n = graph.n();
        if n < 2 {
            return Err(param_err!("latent positions need n >= 2 nodes, got {n}"));
        }
        let mut st = Self {
            z: DMatrix::zeros(n, n),
            theta: hyper.theta0,
            lambda: Vector2::zeros(),
            u: random_stiefel(n, rng),
        };
        update_z(&mut st, graph, rng)?;
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    /// `U Λ U'`.
    pub fn eigen_part(&self) -> DMatrix<f64> {
        let ul = DMatrix::from_fn(self.n(), 2, |i, r| self.u[(i, r)] * self.lambda[r]);
        ul * self.u.transpose()
    }

    /// `E_z = Z - θ` with zero diagonal.
    pub fn e_z(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.z[(i, j)] - self.theta })
    }

    pub fn orthonormality_error(&self) -> f64 {
        (self.u.tr_mul(&self.u) - DMatrix::<f64>::identity(2, 2)).norm()
    }

    /// True when every off-diagonal `z_ij` has the sign dictated by `graph`
    /// and `Z` is symmetric.
    pub fn consistent_with(&self, graph: &Graph) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            ((i + 1)..n).all(|j| {
                let z = self.z[(i, j)];
                z == self.z[(j, i)] && if graph.has_edge(i, j) { z > 0.0 } else { z < 0.0 }
            })
        })
    }
}

/// n×2 matrix with orthonormal columns, uniform on the Stiefel manifold.
pub fn random_stiefel(n: usize, rng: &mut RngStream) -> DMatrix<f64> {
    loop {
        let mut u = DMatrix::from_fn(n, 2, |_, _| rng.normal());
        if orthonormalize(&mut u).is_ok() {
            return u;
        }
    }
}

/// Modified Gram-Schmidt on the two columns.
fn orthonormalize(u: &mut DMatrix<f64>) -> Result<()> {
    let n0 = u.column(0).norm();
    if !(n0 > 0.0) {
        return Err(Error::Numerical("rank-deficient latent coordinates".into()));
    }
    u.column_mut(0).unscale_mut(n0);
    let proj = u.column(0).dot(&u.column(1));
    let c0 = u.column(0).into_owned();
    u.column_mut(1).axpy(-proj, &c0, 1.0);
    let n1 = u.column(1).norm();
    if !(n1 > 1e-12) {
        return Err(Error::Numerical("rank-deficient latent coordinates".into()));
    }
    u.column_mut(1).unscale_mut(n1);
    Ok(())
}

/// `Γ_ij = Φ(θ + (U Λ U')_ij)`, clamped into `[ε, 1 - ε]`; diagonal is zero.
pub fn link_probability(theta: f64, lambda: &Vector2<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let eta = theta + lambda[0] * u[(i, 0)] * u[(j, 0)] + lambda[1] * u[(i, 1)] * u[(j, 1)];
            let p = norm_cdf(eta).clamp(PROB_EPS, 1.0 - PROB_EPS);
            g[(i, j)] = p;
            g[(j, i)] = p;
        }
    }
    g
}

/// `z_ij ~ N(θ + (UΛU')_ij, 1)` truncated to the side given by `G_ij`.
pub fn update_z(state: &mut LatentState, graph: &Graph, rng: &mut RngStream) -> Result<()> {
    let n = state.n();
    if graph.n() != n {
        return Err(dim_err!("graph has {} nodes, latent state {}", graph.n(), n));
    }
    let (u, l) = (&state.u, state.lambda);
    for i in 0..n {
        for j in (i + 1)..n {
            let mean = state.theta + l[0] * u[(i, 0)] * u[(j, 0)] + l[1] * u[(i, 1)] * u[(j, 1)];
            let side = if graph.has_edge(i, j) { Truncation::Positive } else { Truncation::Negative };
            let z = sample_truncnorm(mean, side, rng);
            state.z[(i, j)] = z;
            state.z[(j, i)] = z;
        }
    }
    Ok(())
}

/// Posterior variance of θ: `2τθ² / (2 + n(n-1)τθ²)`.
pub fn theta_posterior_variance(n: usize, hyper: &LpmHyper) -> f64 {
    let t = hyper.tau_theta_sq;
    2.0 * t / (2.0 + (n * (n - 1)) as f64 * t)
}

/// Conditional mean and variance of θ given `Z`, `U`, `Λ`.
pub fn theta_conditional(state: &LatentState, hyper: &LpmHyper) -> (f64, f64) {
    let n = state.n();
    let (u, l) = (&state.u, state.lambda);
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += state.z[(i, j)] - l[0] * u[(i, 0)] * u[(j, 0)] - l[1] * u[(i, 1)] * u[(j, 1)];
        }
    }
    let v = theta_posterior_variance(n, hyper);
    (v * (sum + hyper.theta0 / hyper.tau_theta_sq), v)
}

pub fn update_theta(state: &mut LatentState, hyper: &LpmHyper, rng: &mut RngStream) {
    let (mean, var) = theta_conditional(state, hyper);
    state.theta = mean + var.sqrt() * rng.normal();
}

/// Posterior variance of each λ_r: `2τλ² / (2 + τλ²)`.
pub fn lambda_posterior_variance(hyper: &LpmHyper) -> f64 {
    2.0 * hyper.tau_lambda_sq / (2.0 + hyper.tau_lambda_sq)
}

/// Conditional means of (λ1, λ2): `τλ²/(2 + τλ²) · U_r' E_z U_r`.
pub fn lambda_conditional_mean(state: &LatentState, hyper: &LpmHyper) -> Vector2<f64> {
    let ez = state.e_z();
    let shrink = hyper.tau_lambda_sq / (2.0 + hyper.tau_lambda_sq);
    Vector2::from_fn(|r, _| {
        let ur = state.u.column(r);
        shrink * ur.dot(&(&ez * ur))
    })
}

pub fn update_lambda(state: &mut LatentState, hyper: &LpmHyper, rng: &mut RngStream) {
    let mean = lambda_conditional_mean(state, hyper);
    let sd = lambda_posterior_variance(hyper).sqrt();
    for r in 0..2 {
        state.lambda[r] = mean[r] + sd * rng.normal();
    }
}

/// Gibbs update of one column of `U`, chosen uniformly at random.
///
/// The column is redrawn from its matrix Bingham-von Mises-Fisher conditional
/// restricted to the orthogonal complement of the other column. Returns true
/// if numerical drift forced a re-orthonormalization.
pub fn update_u(state: &mut LatentState, rng: &mut RngStream) -> Result<bool> {
    let r = rng.index(2);
    let other = state.u.column(1 - r).into_owned();
    let basis = Householder::annihilating(&other)?;
    let half_ez = state.e_z() * 0.5;
    let h_tilde = basis.project_symmetric(&half_ez) * state.lambda[r];
    let x = sample_vector_bingham(&h_tilde, rng);
    let col: DVector<f64> = basis.from_complement(&x);
    state.u.set_column(r, &col);
    if state.orthonormality_error() > ORTHONORMAL_DRIFT {
        orthonormalize(&mut state.u)?;
        return Ok(true);
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize, seed: u64) -> (LatentState, Graph, RngStream) {
        let mut rng = RngStream::new(seed, 0);
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge(i, j, rng.bernoulli(0.3));
            }
        }
        let st = LatentState::initial(&g, &LpmHyper::default_for(n), &mut rng).unwrap();
        (st, g, rng)
    }

    #[test]
    fn link_probability_values() {
        let u = random_stiefel(4, &mut RngStream::new(1, 0));
        let half = link_probability(0.0, &Vector2::zeros(), &u);
        assert!((half[(0, 3)] - 0.5).abs() < 1e-15);
        let g = link_probability(-0.5, &Vector2::zeros(), &u);
        assert!((g[(1, 2)] - 0.308_537_538_725_986_9).abs() < 1e-14);
        let g = link_probability(0.3, &Vector2::new(2.0, -1.0), &u);
        assert_eq!(g, g.transpose());
        assert_eq!(g[(2, 2)], 0.0);
    }

    #[test]
    fn theta_variance_plug_in() {
        let h = LpmHyper::new(-0.5, 100.0, 2.0).unwrap();
        assert!((theta_posterior_variance(2, &h) - 200.0 / 202.0).abs() < 1e-15);
        let h = LpmHyper::new(0.0, 1.0, 100.0).unwrap();
        assert!((lambda_posterior_variance(&h) - 200.0 / 102.0).abs() < 1e-15);
    }

    #[test]
    fn theta_collapses_to_prior_mean() {
        let (st, _, _) = state(6, 3);
        let h = LpmHyper::new(-0.5, 1e-12, 6.0).unwrap();
        let (mean, var) = theta_conditional(&st, &h);
        assert!((mean + 0.5).abs() < 1e-9 && var < 1e-11);
    }

    #[test]
    fn theta_zero_when_residuals_cancel() {
        let (mut st, _, _) = state(5, 4);
        st.lambda = Vector2::zeros();
        // antisymmetric upper-triangle residuals summing to zero
        let mut sign = 1.0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                st.z[(i, j)] = sign;
                st.z[(j, i)] = sign;
                sign = -sign;
            }
        }
        let h = LpmHyper::new(0.0, 100.0, 5.0).unwrap();
        assert!(theta_conditional(&st, &h).0.abs() < 1e-15);
    }

    #[test]
    fn lambda_mean_zero_when_ez_zero() {
        let (mut st, _, _) = state(5, 5);
        st.z = DMatrix::from_element(5, 5, st.theta);
        let m = lambda_conditional_mean(&st, &LpmHyper::default_for(5));
        assert!(m.norm() < 1e-15);
    }

    #[test]
    fn z_signs_follow_graph() {
        let (mut st, g, mut rng) = state(8, 6);
        st.lambda = Vector2::new(3.0, -2.0);
        for _ in 0..20 {
            update_z(&mut st, &g, &mut rng).unwrap();
            assert!(st.consistent_with(&g));
        }
    }

    #[test]
    fn deep_tail_z_is_finite() {
        let (mut st, _, mut rng) = state(3, 7);
        let g = Graph::complete(3);
        st.theta = -8.0;
        st.lambda = Vector2::zeros();
        for _ in 0..100 {
            update_z(&mut st, &g, &mut rng).unwrap();
            assert!(st.z.iter().all(|v| v.is_finite()));
            assert!(st.consistent_with(&g));
        }
    }

    #[test]
    fn u_stays_orthonormal() {
        let (mut st, g, mut rng) = state(12, 8);
        let h = LpmHyper::default_for(12);
        for _ in 0..200 {
            update_z(&mut st, &g, &mut rng).unwrap();
            update_theta(&mut st, &h, &mut rng);
            update_lambda(&mut st, &h, &mut rng);
            update_u(&mut st, &mut rng).unwrap();
            assert!(st.orthonormality_error() < 1e-10);
        }
    }

    #[test]
    fn initial_requires_two_nodes() {
        let mut rng = RngStream::new(1, 0);
        assert!(LatentState::initial(&Graph::empty(1), &LpmHyper::default_for(1), &mut rng).is_err());
        let mut st = LatentState::initial(&Graph::empty(2), &LpmHyper::default_for(2), &mut rng).unwrap();
        update_u(&mut st, &mut rng).unwrap();
        assert!(st.orthonormality_error() < 1e-12);
    }
}
