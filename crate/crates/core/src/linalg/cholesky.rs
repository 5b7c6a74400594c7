//! Up-looking sparse Cholesky factorization with a reverse Cuthill–McKee
//! ordering.
//!
//! The symbolic phase computes the elimination tree and the row patterns of
//! the factor by tree reachability; the numeric phase then fills `L` one row
//! at a time. Everything is sequential and branch-free with respect to
//! floating-point values, so identical inputs give bitwise-identical factors.

use std::collections::VecDeque;

use super::sparse::SparseSym;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// `A = Pᵀ L Lᵀ P` for a symmetric positive definite `A`.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    /// `L` in compressed columns; the diagonal is the first entry of each column.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    min_pivot: f64,
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Smallest diagonal entry of `L` squared.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        // L y = P b
        for j in 0..self.n {
            let start = self.col_ptr[j];
            x[j] /= self.values[start];
            let xj = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                x[self.row_idx[p]] -= self.values[p] * xj;
            }
        }
        // Lᵀ z = y
        for j in (0..self.n).rev() {
            let start = self.col_ptr[j];
            let mut s = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * x[self.row_idx[p]];
            }
            x[j] = s / self.values[start];
        }
        let mut out = vec![0.0; self.n];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        Ok(out)
    }
}

pub fn factorize(a: &SparseSym) -> Result<Factorization> {
    let n = a.dim();
    let perm = reverse_cuthill_mckee(a);
    let c = a.permute(&perm);

    let parent = elimination_tree(&c);

    // Column counts of L from the row patterns.
    let mut counts = vec![1usize; n];
    let mut stack = vec![0usize; n];
    let mut mark = vec![NONE; n];
    for k in 0..n {
        let top = row_pattern(&c, k, &parent, &mut stack, &mut mark);
        for &i in &stack[top..] {
            counts[i] += 1;
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        col_ptr[j + 1] = col_ptr[j] + counts[j];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    let mut next = col_ptr[..n].to_vec();

    let mut x = vec![0.0; n];
    mark.iter_mut().for_each(|m| *m = NONE);
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let top = row_pattern(&c, k, &parent, &mut stack, &mut mark);
        for (i, v) in c.row(k) {
            if i <= k {
                x[i] = v;
            }
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &stack[top..] {
            let lki = x[i] / values[col_ptr[i]];
            x[i] = 0.0;
            for p in col_ptr[i] + 1..next[i] {
                x[row_idx[p]] -= values[p] * lki;
            }
            d -= lki * lki;
            let p = next[i];
            next[i] += 1;
            row_idx[p] = k;
            values[p] = lki;
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { column: perm[k], pivot: d });
        }
        min_pivot = min_pivot.min(d);
        let p = next[k];
        next[k] += 1;
        row_idx[p] = k;
        values[p] = d.sqrt();
    }
    Ok(Factorization { n, perm, col_ptr, row_idx, values, min_pivot })
}

fn elimination_tree(c: &SparseSym) -> Vec<usize> {
    let n = c.dim();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for (i0, _) in c.row(k) {
            let mut i = i0;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..]` in topological order. Returns `top`.
fn row_pattern(c: &SparseSym, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = c.dim();
    let mut top = n;
    mark[k] = k;
    let mut path = Vec::new();
    for (i0, _) in c.row(k) {
        if i0 > k {
            continue;
        }
        let mut i = i0;
        while mark[i] != k {
            path.push(i);
            mark[i] = k;
            i = parent[i];
        }
        while let Some(i) = path.pop() {
            top -= 1;
            stack[top] = i;
        }
    }
    top
}

/// Reverse Cuthill–McKee ordering. Each connected component starts from a
/// pseudo-peripheral vertex; neighbours are visited by increasing degree,
/// ties broken by index.
pub fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|e| e.0).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &SparseSym, start: usize) -> Vec<usize> {
    let mut level = vec![NONE; a.dim()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for (j, _) in a.row(v) {
            if level[j] == NONE {
                level[j] = level[v] + 1;
                queue.push_back(j);
            }
        }
    }
    level
}

fn pseudo_peripheral(a: &SparseSym, seed: usize, degree: &[usize]) -> usize {
    let eccentricity = |level: &[usize]| level.iter().filter(|&&l| l != NONE).max().copied().unwrap_or(0);
    let mut v = seed;
    let mut level = bfs_levels(a, v);
    let mut ecc = eccentricity(&level);
    loop {
        let u = (0..a.dim()).filter(|&i| level[i] == ecc).min_by_key(|&i| (degree[i], i)).unwrap_or(v);
        let u_level = bfs_levels(a, u);
        let u_ecc = eccentricity(&u_level);
        if u_ecc <= ecc {
            return v;
        }
        v = u;
        level = u_level;
        ecc = u_ecc;
    }
}
