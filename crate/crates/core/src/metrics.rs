//! Network summaries and graph-recovery scores.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2, RowVector2, SVD};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dim_err, param_err, Error, Result};
use crate::graph::{pair_count, Graph};

/// Confusion counts over the `n(n-1)/2` unordered pairs, plus accuracy and
/// AUC, both in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub acc: f64,
    pub auc: f64,
}

/// Scores `edge_prob` against `truth`. The point estimate keeps pairs with
/// probability above one half; AUC ranks every pair by its probability.
pub fn recovery_metrics(edge_prob: &DMatrix<f64>, truth: &Graph) -> Result<RecoveryReport> {
    let n = truth.n();
    if edge_prob.shape() != (n, n) {
        return Err(dim_err!("edge probabilities are {:?}, truth has n = {n}", edge_prob.shape()));
    }
    let mut scores = Vec::with_capacity(pair_count(n));
    let mut labels = Vec::with_capacity(pair_count(n));
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = edge_prob[(i, j)];
            let t = truth.has_edge(i, j);
            match (p > 0.5, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
            scores.push(p);
            labels.push(t);
        }
    }
    let total = (tp + fp + tn + fn_) as f64;
    let acc = if total > 0.0 { 100.0 * (tp + tn) as f64 / total } else { 0.0 };
    let auc = auc_percent(&scores, &labels)?;
    Ok(RecoveryReport { tp, fp, tn, fn_, acc, auc })
}

/// Area under the ROC curve in percent, via the Mann-Whitney rank sum.
/// Tied scores contribute one half.
pub fn auc_percent(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(dim_err!("{} scores for {} labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(param_err!("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("AUC needs both present and absent edges in the truth".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        // ranks k+1..=end share their average
        let avg = 0.5 * ((k + 1) + end) as f64;
        rank_sum += avg * order[k..end].iter().filter(|&&i| labels[i]).count() as f64;
        k = end;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok(100.0 * (rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Edges divided by `n(n-1)/2`.
pub fn network_density(graph: &Graph) -> Result<f64> {
    let n = graph.n();
    if n < 2 {
        return Err(param_err!("density needs at least two nodes, got {n}"));
    }
    Ok(graph.edge_count() as f64 / pair_count(n) as f64)
}

/// Sign change between consecutive standardized values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroCrossing {
    /// Index of the first value on the new side.
    pub index: usize,
    pub upward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSeries {
    pub z: Vec<f64>,
    pub crossings: Vec<ZeroCrossing>,
}

impl StandardizedSeries {
    /// Maximal runs of strictly positive values as inclusive index ranges.
    pub fn positive_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &v) in self.z.iter().enumerate() {
            match (v > 0.0, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.z.len() - 1));
        }
        runs
    }
}

/// Z-scores over the whole series, using the population standard deviation.
pub fn standardize_series(values: &[f64]) -> Result<StandardizedSeries> {
    if values.len() < 2 {
        return Err(param_err!("standardizing needs at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Undefined("series has zero variance".into()));
    }
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    let crossings = z
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] > 0.0) != (w[1] > 0.0))
        .map(|(i, w)| ZeroCrossing { index: i + 1, upward: w[1] > 0.0 })
        .collect();
    Ok(StandardizedSeries { z, crossings })
}

/// Number of triangles in the graph.
pub fn triangle_count(graph: &Graph) -> usize {
    let n = graph.n();
    let mut count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if !graph.has_edge(i, j) {
                continue;
            }
            for k in (j + 1)..n {
                if graph.has_edge(i, k) && graph.has_edge(j, k) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Transitivity: `3 × triangles / connected triples`, where connected triples
/// are all paths of length two (closed or not). Zero when there are none.
pub fn clustering_coefficient(graph: &Graph) -> f64 {
    let triples: usize = (0..graph.n())
        .map(|v| {
            let d = graph.degree(v);
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triples == 0 {
        return 0.0;
    }
    3.0 * triangle_count(graph) as f64 / triples as f64
}

/// Similarity transform `ρ · source · h + c` best matching the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcrustesResult {
    pub rho: f64,
    pub h: Matrix2<f64>,
    pub c: RowVector2<f64>,
    /// Residual sum of squares over the centered target sum of squares.
    pub d: f64,
}

impl ProcrustesResult {
    pub fn apply(&self, source: &DMatrix<f64>) -> DMatrix<f64> {
        let moved = source * self.h * self.rho;
        DMatrix::from_fn(source.nrows(), 2, |i, k| moved[(i, k)] + self.c[k])
    }
}

fn centered(x: &DMatrix<f64>) -> (DMatrix<f64>, RowVector2<f64>) {
    let mean = RowVector2::new(x.column(0).mean(), x.column(1).mean());
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= mean;
    }
    (c, mean)
}

fn check_config(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if x.ncols() != 2 || x.nrows() == 0 {
        return Err(dim_err!("{what} must be n×2 with n > 0, got {:?}", x.shape()));
    }
    Ok(())
}

/// Orthogonal `h` (rotation or reflection) maximizing `tr(h' source' target)`.
pub fn orthogonal_alignment(target: &DMatrix<f64>, source: &DMatrix<f64>) -> Result<Matrix2<f64>> {
    check_config(target, "target")?;
    check_config(source, "source")?;
    if target.nrows() != source.nrows() {
        return Err(dim_err!("target has {} rows, source {}", target.nrows(), source.nrows()));
    }
    let cross = source.tr_mul(target);
    let m = Matrix2::new(cross[(0, 0)], cross[(0, 1)], cross[(1, 0)], cross[(1, 1)]);
    Ok(polar_factor(&m).0)
}

/// `(U V', tr S)` for the SVD `m = U S V'`.
fn polar_factor(m: &Matrix2<f64>) -> (Matrix2<f64>, f64) {
    let svd = SVD::new(*m, true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u * v_t, svd.singular_values.sum()),
        _ => (Matrix2::identity(), 0.0),
    }
}

/// Least-squares similarity transform of `source` onto `target`, allowing
/// translation, uniform scaling, rotation and reflection.
pub fn procrustes(target: &DMatrix<f64>, source: &DMatrix<f64>) -> Result<ProcrustesResult> {
    check_config(target, "target")?;
    check_config(source, "source")?;
    if target.nrows() != source.nrows() {
        return Err(dim_err!("target has {} rows, source {}", target.nrows(), source.nrows()));
    }
    let (xc, x_mean) = centered(target);
    let (yc, y_mean) = centered(source);
    let ssx = xc.norm_squared();
    if !(ssx > 1e-300) {
        return Err(Error::Undefined("target configuration has all rows identical".into()));
    }
    let ssy = yc.norm_squared();
    let cross = yc.tr_mul(&xc);
    let m = Matrix2::new(cross[(0, 0)], cross[(0, 1)], cross[(1, 0)], cross[(1, 1)]);
    let (h, trace_s) = if ssy > 0.0 { polar_factor(&m) } else { (Matrix2::identity(), 0.0) };
    let rho = if ssy > 0.0 { trace_s / ssy } else { 0.0 };
    let c = x_mean - y_mean * h * rho;
    let resid = if ssy > 0.0 { ssx - trace_s * trace_s / ssy } else { ssx };
    let d = (resid / ssx).clamp(0.0, 1.0);
    Ok(ProcrustesResult { rho, h, c, d })
}

/// Procrustes distances between consecutive configurations.
pub fn procrustes_series(configs: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    if configs.len() < 2 {
        return Err(param_err!("need at least two configurations"));
    }
    configs.windows(2).map(|w| procrustes(&w[0], &w[1]).map(|r| r.d)).collect()
}
