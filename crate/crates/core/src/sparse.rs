//! Symmetric sparse matrices in row-compressed form. Only the upper
//! triangle (including the diagonal) is stored, which keeps the stored
//! operator exactly symmetric.

use std::collections::BTreeMap;
use std::io::{self, Write};

/// Accumulates element contributions. Insertion order does not affect the
/// final layout, and the per-entry accumulation order is the caller's call
/// order, so assembly stays bit-reproducible.
#[derive(Debug, Clone)]
pub struct SymBuilder {
    n: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SymBuilder {
    pub fn new(n: usize) -> Self {
        SymBuilder {
            n,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        *self.rows[i].entry(j).or_insert(0.0) += v;
    }

    pub fn build(self) -> SparseMatrixSym {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &self.rows {
            for (&j, &v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrixSym {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Symmetric sparse matrix; row-compressed upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrixSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrixSym {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stored_entries(&self) -> usize {
        self.values.len()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = SymBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    /// y = A x (full symmetric product).
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.values[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// x' A x
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// x' A y
    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Infinity norm (maximum absolute row sum), a cheap operator-norm bound.
    pub fn max_abs_row_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.values[k].abs();
                sums[i] += v;
                if j != i {
                    sums[j] += v;
                }
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// self + alpha * other, pattern union.
    pub fn add_scaled(&self, other: &SparseMatrixSym, alpha: f64) -> SparseMatrixSym {
        assert_eq!(self.n, other.n);
        let mut b = SymBuilder::new(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                b.add(i, self.col_idx[k], self.values[k]);
            }
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                b.add(i, other.col_idx[k], alpha * other.values[k]);
            }
        }
        b.build()
    }

    /// Row/column restriction to the DOFs flagged in `keep` (used for
    /// per-class operator blocks). Returns the submatrix and the map from
    /// sub-index to original index.
    pub fn restrict(&self, keep: &[bool]) -> (SparseMatrixSym, Vec<usize>) {
        assert_eq!(keep.len(), self.n);
        let map: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut inv = vec![usize::MAX; self.n];
        for (sub, &orig) in map.iter().enumerate() {
            inv[orig] = sub;
        }
        let mut b = SymBuilder::new(map.len());
        for i in 0..self.n {
            if !keep[i] {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if keep[j] {
                    b.add(inv[i], inv[j], self.values[k]);
                }
            }
        }
        (b.build(), map)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                a[i][j] = self.values[k];
                a[j][i] = self.values[k];
            }
        }
        a
    }

    /// MatrixMarket coordinate format, symmetric kind (lower triangle,
    /// 1-based indices).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.values.len())?;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                // stored (i, j) with j >= i; emit as (j+1, i+1) to keep the
                // conventional lower-triangular listing
                writeln!(w, "{} {} {:.16e}", self.col_idx[k] + 1, i + 1, self.values[k])?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
