#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn oracle_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Modified Bessel function of the second kind via
/// `K_ν(x) = ∫₀^∞ exp(-x cosh t) cosh(ν t) dt`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    let t_max = ((800.0 / x).max(2.0)).acosh() + 1.0;
    simpson(|t| (-x * t.cosh() + nu.abs() * t).exp() * 0.5 * (1.0 + (-2.0 * nu.abs() * t).exp()), 0.0, t_max, 200_000)
}

/// Tabulated CDF built by cumulative trapezoid integration of a log density
/// on a uniform grid, with linear interpolation between nodes.
pub struct GridCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    /// `log_density` is in terms of `u`, and `to_x` maps the grid variable
    /// to the support, monotone increasing.
    pub fn new<F, G>(log_density: F, to_x: G, lo: f64, hi: f64, n: usize) -> Self
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let h = (hi - lo) / n as f64;
        let us: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
        let logs: Vec<f64> = us.iter().map(|&u| log_density(u)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
        }
        let total = cdf[n];
        for c in &mut cdf {
            *c /= total;
        }
        Self { xs: us.iter().map(|&u| to_x(u)).collect(), cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let w = (x - x0) / (x1 - x0);
        self.cdf[k - 1] * (1.0 - w) + self.cdf[k] * w
    }
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(mut sample: Vec<f64>, cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value of the KS statistic at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn ks_critical_01_two(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.6276 * ((n + m) / (n * m)).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
