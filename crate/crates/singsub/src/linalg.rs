//! Dense linear algebra shared by both solvers: row-major matrices, an LU
//! solve with partial pivoting, the sup norm, and grid functions with a
//! piecewise-linear off-grid extension.

use std::sync::Arc;

/// Failure of a dense factorization.
#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    /// No usable pivot was found while eliminating the given row: the matrix
    /// is singular to working precision.
    #[error("no usable pivot in elimination step {row}: matrix is numerically singular")]
    SingularMatrix { row: usize },
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(order: usize) -> Self {
        assert!(order > 0, "matrix order must be positive");
        Self {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest absolute entry; zero only for the zero matrix.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Panics if any entry is NaN or infinite; called after assembly.
    pub fn assert_finite(&self) {
        assert!(
            self.entries.iter().all(|x| x.is_finite()),
            "matrix holds non-finite entries after assembly"
        );
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order, "vector length must match the order");
        let mut out = vec![0.0; self.order];
        for i in 0..self.order {
            let row = &self.entries[i * self.order..(i + 1) * self.order];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.order + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.order + j]
    }
}

/// Maximum absolute value of a nonempty slice.
pub fn sup_norm(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "sup norm of an empty vector is undefined");
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Solves `m x = rhs` by LU factorization with partial pivoting.
///
/// A pivot below `1e-14` times the largest entry of `m` is treated as
/// numerically singular. In debug builds the back-substituted residual is
/// checked against `1e-10 (1 + sup|rhs|)`.
pub fn lu_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = m.order;
    assert_eq!(rhs.len(), n, "rhs length must match the matrix order");
    let pivot_floor = 1e-14 * m.max_abs_entry();
    let mut a = m.entries.clone();
    let mut x = rhs.to_vec();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for r in col + 1..n {
            let mag = a[r * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag <= pivot_floor {
            return Err(LinalgError::SingularMatrix { row: col });
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for j in col + 1..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }

    #[cfg(debug_assertions)]
    {
        let residual = m
            .mul_vec(&x)
            .iter()
            .zip(rhs)
            .fold(0.0f64, |acc, (mx, r)| acc.max((mx - r).abs()));
        assert!(
            residual <= 1e-10 * (1.0 + sup_norm(rhs)),
            "solve residual {residual:.3e} exceeds the accuracy contract"
        );
    }

    Ok(x)
}

/// A function known through its values on a fixed, strictly increasing node
/// set, with piecewise-linear evaluation between nodes and constant extension
/// beyond the first and last node.
#[derive(Clone, Debug)]
pub struct GridFunction {
    nodes: Arc<[f64]>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Arc<[f64]>, values: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), values.len(), "one value per node");
        assert!(!nodes.is_empty(), "a grid function needs at least one node");
        Self { nodes, values }
    }

    pub fn constant(nodes: Arc<[f64]>, value: f64) -> Self {
        let n = nodes.len();
        Self::new(nodes, vec![value; n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn shared_nodes(&self) -> Arc<[f64]> {
        Arc::clone(&self.nodes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Largest absolute nodewise difference against another grid function on
    /// the same node count.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.len(), other.len(), "grids must have equal dimension");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Piecewise-linear evaluation at an arbitrary point. Outside the node
    /// range the nearest end value is returned, which keeps the extension
    /// bounded by the grid sup norm.
    pub fn eval_linear(&self, s: f64) -> f64 {
        let nodes = &self.nodes;
        if s <= nodes[0] {
            return self.values[0];
        }
        if s >= nodes[nodes.len() - 1] {
            return self.values[nodes.len() - 1];
        }
        // first index with node > s; the segment [hi-1, hi] brackets s
        let hi = nodes.partition_point(|&t| t <= s);
        let (t0, t1) = (nodes[hi - 1], nodes[hi]);
        let (v0, v1) = (self.values[hi - 1], self.values[hi]);
        let lambda = (s - t0) / (t1 - t0);
        v0 + lambda * (v1 - v0)
    }
}
