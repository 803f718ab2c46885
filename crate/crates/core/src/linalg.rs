//! Dense symmetric linear algebra used throughout the sampler.
//!
//! SPD inverses always go through [`Cholesky`]; nothing forms an explicit
//! inverse from a general LU.

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Lower Cholesky factor `L` with `A = L L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric matrix, reading only the lower triangle.
    ///
    /// Fails with [`Error::Conditioning`] reporting the first pivot that is
    /// not positive or is lost in rounding relative to its diagonal entry.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(alloc::format!(
                "cholesky of non-square {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let tol = 4.0 * n as f64 * f64::EPSILON;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                l[(i, j)] = a[(i, j)];
            }
            for k in 0..j {
                let ljk = l[(j, k)];
                if ljk != 0.0 {
                    for i in j..n {
                        let lik = l[(i, k)];
                        l[(i, j)] -= lik * ljk;
                    }
                }
            }
            let pivot = l[(j, j)];
            if !(pivot > tol * a[(j, j)].abs()) || !pivot.is_finite() {
                return Err(Error::Conditioning { pivot, index: j });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            let inv = 1.0 / d;
            for i in (j + 1)..n {
                l[(i, j)] *= inv;
            }
        }
        Ok(Self { l })
    }

    /// Factorizes `a`; on failure retries once with `1e-10 * trace / n` added
    /// to the diagonal.
    pub fn with_jitter(a: &DMatrix<f64>) -> Result<Self> {
        match Self::new(a) {
            Ok(c) => Ok(c),
            Err(Error::Conditioning { .. }) => {
                let n = a.nrows().max(1);
                let jitter = 1e-10 * a.trace().abs() / n as f64;
                log::warn!("factorization failed; retrying with diagonal jitter {jitter:e}");
                let mut b = a.clone();
                for i in 0..a.nrows() {
                    b[(i, i)] += jitter;
                }
                Self::new(&b)
            }
            Err(e) => Err(e),
        }
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.l[(i, i)] * self.l[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_mut(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        for j in 0..n {
            let yj = b[j] / self.l[(j, j)];
            b[j] = yj;
            for i in (j + 1)..n {
                b[i] -= self.l[(i, j)] * yj;
            }
        }
    }

    /// Solves `L' x = y` in place.
    pub fn solve_upper_mut(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        for j in (0..n).rev() {
            let mut s = b[j];
            for i in (j + 1)..n {
                s -= self.l[(i, j)] * b[i];
            }
            b[j] = s / self.l[(j, j)];
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_lower_mut(&mut x);
        self.solve_upper_mut(&mut x);
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            let mut v = DVector::from_column_slice(col.as_slice());
            self.solve_lower_mut(&mut v);
            self.solve_upper_mut(&mut v);
            col.copy_from(&v);
        }
        x
    }

    /// `L^{-1}`, lower triangular.
    pub fn l_inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::<f64>::zeros(n, n);
        for c in 0..n {
            inv[(c, c)] = 1.0 / self.l[(c, c)];
            for i in (c + 1)..n {
                let mut s = 0.0;
                for k in c..i {
                    s -= self.l[(i, k)] * inv[(k, c)];
                }
                inv[(i, c)] = s / self.l[(i, i)];
            }
        }
        inv
    }

    /// `A^{-1} = L^{-T} L^{-1}`, exactly symmetric.
    pub fn inverse(&self) -> DMatrix<f64> {
        let li = self.l_inverse();
        let mut inv = li.tr_mul(&li);
        symmetrize(&mut inv);
        inv
    }
}

/// Averages `a` with its transpose in place.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// `a` with row and column `k` removed.
pub fn minor(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n - 1, n - 1, |i, j| {
        let ii = if i < k { i } else { i + 1 };
        let jj = if j < k { j } else { j + 1 };
        a[(ii, jj)]
    })
}

/// Column `k` of `a` with entry `k` removed.
pub fn column_without(a: &DMatrix<f64>, k: usize) -> DVector<f64> {
    let n = a.nrows();
    DVector::from_fn(n - 1, |i, _| a[(if i < k { i } else { i + 1 }, k)])
}

/// Maps an index of the reduced `(n-1)` system back to the full index.
#[inline]
pub fn full_index(i: usize, k: usize) -> usize {
    if i < k {
        i
    } else {
        i + 1
    }
}

/// Householder reflector `H = I - beta v v'` with `H u ∝ e_0`.
///
/// Columns `1..n` of `H` form an orthonormal basis of the orthogonal
/// complement of `u`.
#[derive(Debug, Clone)]
pub struct Householder {
    v: DVector<f64>,
    beta: f64,
}

impl Householder {
    pub fn annihilating(u: &DVector<f64>) -> Result<Self> {
        let norm = u.norm();
        if !(norm > 0.0) {
            return Err(Error::Numerical("null space of a zero vector".into()));
        }
        let mut v = u.clone();
        let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += s * norm;
        let vv = v.norm_squared();
        Ok(Self { v, beta: 2.0 / vv })
    }

    /// `H x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let c = self.beta * self.v.dot(x);
        x - &self.v * c
    }

    /// Coordinates of `x` in the complement basis: `(H x)[1..]`.
    pub fn to_complement(&self, x: &DVector<f64>) -> DVector<f64> {
        let hx = self.apply(x);
        hx.rows(1, hx.len() - 1).into_owned()
    }

    /// Embeds complement coordinates back: `H [0; y]`.
    pub fn from_complement(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::<f64>::zeros(y.len() + 1);
        x.rows_mut(1, y.len()).copy_from(y);
        self.apply(&x)
    }

    /// `N' A N` for symmetric `A`, where `N = H[:, 1..]`.
    pub fn project_symmetric(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let w = a * &self.v;
        let vw = self.v.dot(&w);
        let b = self.beta;
        DMatrix::from_fn(n - 1, n - 1, |i, j| {
            let (i, j) = (i + 1, j + 1);
            a[(i, j)] - b * self.v[i] * w[j] - b * w[i] * self.v[j]
                + b * b * vw * self.v[i] * self.v[j]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_spd(n: usize, rng: &mut RngStream) -> DMatrix<f64> {
        let x = DMatrix::from_fn(n + 3, n, |_, _| rng.normal());
        x.tr_mul(&x) + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn cholesky_inverse_and_logdet() {
        let mut rng = RngStream::new(3, 0);
        let a = random_spd(7, &mut rng);
        let c = Cholesky::new(&a).unwrap();
        let rec = c.l() * c.l().transpose();
        assert!((rec - &a).norm() < 1e-10);
        let inv = c.inverse();
        assert!((&a * &inv - DMatrix::identity(7, 7)).norm() < 1e-10);
        let det = a.clone().determinant();
        assert!((c.log_det() - det.ln()).abs() < 1e-10);
        let b = DVector::from_fn(7, |i, _| i as f64 - 2.0);
        assert!((&a * c.solve(&b) - &b).norm() < 1e-10);
    }

    #[test]
    fn cholesky_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match Cholesky::new(&a) {
            Err(Error::Conditioning { pivot, index }) => {
                assert_eq!(index, 1);
                assert!((pivot + 3.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn householder_complement_is_orthonormal() {
        let mut rng = RngStream::new(5, 0);
        let u = DVector::from_fn(6, |_, _| rng.normal()).normalize();
        let h = Householder::annihilating(&u).unwrap();
        let n = DMatrix::from_fn(6, 5, |i, j| {
            let mut e = DVector::zeros(5);
            e[j] = 1.0;
            h.from_complement(&e)[i]
        });
        assert!((n.tr_mul(&n) - DMatrix::identity(5, 5)).norm() < 1e-12);
        assert!((n.transpose() * &u).norm() < 1e-12);
        let a = random_spd(6, &mut rng);
        let direct = n.transpose() * &a * &n;
        assert!((h.project_symmetric(&a) - direct).norm() < 1e-10);
    }
}
