//! Random variate generators needed by the Gibbs sweep.
//!
//! * [`sample_gig`]: generalized inverse Gaussian, via the ratio-of-uniforms
//!   family of Hörmann & Leydold (2014), which is uniformly efficient over the
//!   whole parameter range, including the large-|q| regime of long windows.
//! * [`sample_truncnorm`]: unit-variance normal restricted to a half line.
//! * [`sample_vector_bingham`]: unit vector with density ∝ exp(x'Hx), using
//!   the angular central Gaussian envelope of Kent, Ganeiber & Mardia (2018).

use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{param_err, Result};
use crate::rng::RngStream;
use crate::special::{norm_cdf, norm_ppf};

/// Parameters of GIG(q, a, b) with density ∝ x^{q-1} exp(-(a x + b / x) / 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    q: f64,
    a: f64,
    b: f64,
}

impl GigParams {
    pub fn new(q: f64, a: f64, b: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(param_err!("GIG order must be finite, got {q}"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(param_err!("GIG requires a > 0, got {a}"));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(param_err!("GIG requires b > 0, got {b}"));
        }
        Ok(Self { q, a, b })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Draws from GIG(q, a, b). Always strictly positive.
pub fn sample_gig(params: &GigParams, rng: &mut RngStream) -> f64 {
    // Reduce to the two-parameter form x^{λ-1} exp(-ω (x + 1/x) / 2), λ ≥ 0,
    // scaled by α = sqrt(b/a); negative orders are handled by inversion.
    let lambda = params.q.abs();
    let omega = (params.a * params.b).sqrt();
    let alpha = (params.b / params.a).sqrt();

    let x = if lambda > 2.0 || omega > 3.0 {
        gig_rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        gig_rou_noshift(lambda, omega, rng)
    } else {
        gig_concave(lambda, omega, rng)
    };
    if params.q < 0.0 {
        alpha / x
    } else {
        alpha * x
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn gig_rou_noshift(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.uniform();
        let v = rng.uniform();
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // Roots of the cubic bounding the shifted region (Cardano, trigonometric form).
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.uniform() * (uplus - uminus);
        let v = rng.uniform();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a piecewise constant/power/exponential hat, for λ < 1 and
/// small ω where the density is not T-concave after the ROU transform.
fn gig_concave(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let area0 = k0 * x0;
    let (k1, area1, k2, area2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        area1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        area2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        area1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        area2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = area0 + area1 + area2;
    loop {
        let mut v = total * rng.uniform();
        let (x, hx);
        if v <= area0 {
            x = x0 * v / area0;
            hx = k0;
        } else {
            v -= area0;
            if v <= area1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= area1;
                let a = if x0 > 2.0 / omega { x0 } else { 2.0 / omega };
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = rng.uniform() * hx;
        if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Side of zero a truncated normal draw is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Positive,
    Negative,
}

/// Beyond this many standard deviations into the tail the inverse-CDF route
/// loses precision and the exponential-proposal rejection takes over.
const TAIL_SWITCH: f64 = 5.0;

/// Draws from N(mean, 1) restricted to (0, ∞) or (-∞, 0).
pub fn sample_truncnorm(mean: f64, side: Truncation, rng: &mut RngStream) -> f64 {
    match side {
        Truncation::Positive => positive_truncnorm(mean, rng),
        Truncation::Negative => -positive_truncnorm(-mean, rng),
    }
}

fn positive_truncnorm(mean: f64, rng: &mut RngStream) -> f64 {
    // X = mean + W, W standard normal restricted to W > -mean.
    let lower = -mean;
    if lower > TAIL_SWITCH {
        // Robert (1995) translated-exponential proposal with optimal rate.
        let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
        loop {
            let w = lower - rng.uniform().ln() / rate;
            let d = w - rate;
            if rng.uniform().ln() <= -0.5 * d * d {
                let x = mean + w;
                if x > 0.0 {
                    return x;
                }
            }
        }
    }
    // -W is a normal restricted above at mean; invert its CDF.
    let mass = norm_cdf(mean);
    loop {
        let x = mean - norm_ppf(rng.uniform() * mass);
        if x > 0.0 && x.is_finite() {
            return x;
        }
    }
}

/// Draws a unit vector with density ∝ exp(x' H x) on the sphere.
///
/// `h` must be symmetric. The draw is exact: an angular central Gaussian
/// proposal whose acceptance ratio is bounded in closed form.
pub fn sample_vector_bingham(h: &DMatrix<f64>, rng: &mut RngStream) -> DVector<f64> {
    let d = h.nrows();
    if d == 1 {
        let s = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        return DVector::from_element(1, s);
    }
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.max();
    // exp(x'Hx) ∝ exp(-x'Ax) on the sphere with A = top·I - H ⪰ 0.
    let conc: DVector<f64> = eig.eigenvalues.map(|e| (top - e).max(0.0));
    let y = sample_bingham_diagonal(&conc, rng);
    let mut x = &eig.eigenvectors * y;
    let norm = x.norm();
    x /= norm;
    x
}

/// Bingham draw in the eigenbasis: density ∝ exp(-Σ conc_i y_i²), conc_i ≥ 0.
fn sample_bingham_diagonal(conc: &DVector<f64>, rng: &mut RngStream) -> DVector<f64> {
    let d = conc.len();
    let q = d as f64;
    let b = acg_rate(conc);
    let omega: DVector<f64> = conc.map(|c| 1.0 + 2.0 * c / b);
    let scale: DVector<f64> = omega.map(|w| 1.0 / w.sqrt());
    let log_bound = -0.5 * (q - b) + 0.5 * q * (q / b).ln();
    let mut y = DVector::<f64>::zeros(d);
    loop {
        for i in 0..d {
            y[i] = rng.normal() * scale[i];
        }
        let norm = y.norm();
        if !(norm > 0.0) {
            continue;
        }
        y /= norm;
        let t: f64 = (0..d).map(|i| omega[i] * y[i] * y[i]).sum();
        let log_ratio = -0.5 * b * (t - 1.0) + 0.5 * q * t.ln() - log_bound;
        if rng.uniform().ln() <= log_ratio {
            return y;
        }
    }
}

/// Root in (0, d] of Σ 1 / (b + 2 c_i) = 1.
fn acg_rate(conc: &DVector<f64>) -> f64 {
    let d = conc.len() as f64;
    let f = |b: f64| conc.iter().map(|c| 1.0 / (b + 2.0 * c)).sum::<f64>() - 1.0;
    if f(d) >= 0.0 {
        return d;
    }
    let (mut lo, mut hi) = (0.0, d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
