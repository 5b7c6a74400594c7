use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form, both triangles stored.
///
/// Column indices are sorted within each row and exact zeros are dropped when
/// the matrix is built from triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicates are summed in a fixed order: by row, then column, then
    /// insertion order. The caller is responsible for supplying a symmetric
    /// set of triplets; only structural consistency is checked in debug builds.
    pub fn assemble(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(row, col, _) in triplets {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfRange { row, col, n });
            }
        }
        // Stable sort keeps insertion order among duplicates.
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(order.len());
        let mut values = Vec::with_capacity(order.len());
        let mut k = 0;
        while k < order.len() {
            let (row, col, _) = triplets[order[k]];
            let mut sum = 0.0;
            while k < order.len() && triplets[order[k]].0 == row && triplets[order[k]].1 == col {
                sum += triplets[order[k]].2;
                k += 1;
            }
            if sum != 0.0 {
                col_idx.push(col);
                values.push(sum);
                row_ptr[row + 1] += 1;
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let m = SparseSym { n, row_ptr, col_idx, values };
        debug_assert!(m.is_structurally_symmetric());
        Ok(m)
    }

    pub fn zeros(n: usize) -> Self {
        SparseSym { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseSym { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> SparseSym {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut row_ptr = vec![0usize; keep.len() + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> =
                self.row(i).filter(|&(j, _)| new_index[j] != usize::MAX).map(|(j, v)| (new_index[j], v)).collect();
            entries.sort_by_key(|e| e.0);
            for (j, v) in entries {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr[k + 1] = col_idx.len();
        }
        SparseSym { n: keep.len(), row_ptr, col_idx, values }
    }

    /// Symmetric permutation `B = P A Pᵀ` where `B[k][l] = A[perm[k]][perm[l]]`.
    pub fn permute(&self, perm: &[usize]) -> SparseSym {
        self.submatrix(perm)
    }

    /// `self + scale * other`, both on the same index set.
    pub fn add_scaled(&self, other: &SparseSym, scale: f64) -> Result<SparseSym> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, scale * v)));
        }
        SparseSym::assemble(self.n, &triplets)
    }

    fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, _)| {
                let range = self.row_ptr[j]..self.row_ptr[j + 1];
                self.col_idx[range].binary_search(&i).is_ok()
            })
        })
    }
}
