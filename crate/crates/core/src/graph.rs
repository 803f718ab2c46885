use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Undirected simple graph stored as a dense symmetric adjacency matrix.
///
/// Symmetry and the empty diagonal are maintained by construction: the only
/// mutator is [`Graph::set_edge`], which writes both triangles and ignores
/// self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { n, adj: vec![false; n * n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.set_edge(i, j, true);
        }
        g
    }

    /// Edges wherever `|m_ij| > threshold` for i ≠ j, reading the upper triangle.
    pub fn from_threshold(m: &DMatrix<f64>, threshold: f64) -> Self {
        let n = m.nrows();
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge(i, j, m[(i, j)] > threshold);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    #[inline]
    pub fn set_edge(&mut self, i: usize, j: usize, on: bool) {
        if i == j {
            return;
        }
        self.adj[i * self.n + j] = on;
        self.adj[j * self.n + i] = on;
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| self.has_edge(i, j))
    }

    /// Checks the stored matrix really is symmetric with an empty diagonal.
    pub fn is_consistent(&self) -> bool {
        (0..self.n).all(|i| {
            !self.has_edge(i, i) && ((i + 1)..self.n).all(|j| self.has_edge(i, j) == self.has_edge(j, i))
        })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }
}

/// Number of unordered off-diagonal pairs.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_edge_is_symmetric_and_ignores_loops() {
        let mut g = Graph::empty(4);
        g.set_edge(2, 1, true);
        g.set_edge(3, 3, true);
        assert!(g.has_edge(1, 2) && g.has_edge(2, 1));
        assert!(!g.has_edge(3, 3));
        assert!(g.is_consistent());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(1, 2)]);
        assert_eq!(Graph::complete(5).edge_count(), pair_count(5));
    }
}
