use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Compressed-row sparse matrix of `f64`.
///
/// Column indices are strictly increasing within each row, so duplicate
/// entries never appear after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidMatrix("row_offsets must start at 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMatrix(
                "row_offsets must be non-decreasing".into(),
            ));
        }
        let nnz = row_offsets[n_rows];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidMatrix(format!(
                "expected {nnz} stored entries, got {} indices and {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..n_rows {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices of row {r} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column index {c} out of range in row {r} (n_cols = {n_cols})"
                    )));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are summed;
    /// explicit zeros are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            col_indices.push(c);
            values.push(v);
            row_offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Converts a dense row-major matrix, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            check_len("dense row", n_cols, row.len())?;
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `r` as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in order, so each transposed row stays sorted
        for (r, c, v) in self.triplets() {
            let slot = next[c];
            col_indices[slot] = r;
            values[slot] = v;
            next[c] += 1;
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Returns `self + diag(shift)` for a square matrix.
    pub fn add_diagonal(&self, shift: &[f64]) -> Result<Self> {
        if self.n_rows != self.n_cols {
            return Err(Error::InvalidMatrix(
                "add_diagonal needs a square matrix".into(),
            ));
        }
        check_len("add_diagonal", self.n_rows, shift.len())?;
        let diag = (0..self.n_rows).map(|i| (i, i, shift[i]));
        Self::from_triplets(self.n_rows, self.n_cols, self.triplets().chain(diag))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len("matrix add (rows)", self.n_rows, other.n_rows)?;
        check_len("matrix add (cols)", self.n_cols, other.n_cols)?;
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets().chain(other.triplets()),
        )
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        check_len("vstack (cols)", self.n_cols, other.n_cols)?;
        let shifted = other.triplets().map(|(r, c, v)| (r + self.n_rows, c, v));
        Self::from_triplets(
            self.n_rows + other.n_rows,
            self.n_cols,
            self.triplets().chain(shifted),
        )
    }

    /// Largest `|M_ij - M_ji|` over all entries; `None` for non-square matrices.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if self.n_rows != self.n_cols {
            return None;
        }
        let t = self.transpose();
        let worst = self
            .triplets()
            .chain(t.triplets())
            .map(|(r, c, _)| (self.get(r, c) - t.get(r, c)).abs())
            .fold(0.0, f64::max);
        Some(worst)
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        match self.max_asymmetry() {
            None => Err(Error::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                self.n_rows, self.n_cols
            ))),
            Some(a) if a > tol => Err(Error::NotSymmetric { max_asymmetry: a }),
            Some(_) => Ok(()),
        }
    }

    /// Row sums `M·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v).sum())
            .collect()
    }

    /// Squared column norms, i.e. the diagonal of `MᵀM`.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for (&c, &v) in self.col_indices.iter().zip(&self.values) {
            out[c] += v * v;
        }
        out
    }

    /// `out = M·v` without dimension checks; callers guarantee the lengths.
    pub(crate) fn mul_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            *o = self.col_indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &a)| a * v[c])
                .sum();
        }
    }

    /// `out += alpha · Mᵀ·v` without dimension checks.
    pub(crate) fn mul_transpose_acc(&self, alpha: f64, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            let s = alpha * vr;
            for (c, a) in self.row(r) {
                out[c] += a * s;
            }
        }
    }
}

/// Computes `M·v`.
pub fn spmv(m: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("spmv", m.n_cols, v.len())?;
    let mut out = vec![0.0; m.n_rows];
    m.mul_into(v, &mut out);
    Ok(out)
}

/// Computes `Mᵀ·v` without forming the transpose.
pub fn spmv_transpose(m: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("spmv_transpose", m.n_rows, v.len())?;
    let mut out = vec![0.0; m.n_cols];
    m.mul_transpose_acc(1.0, v, &mut out);
    Ok(out)
}

/// Applies `(I_K ⊗ L)·v` block by block.
pub fn kron_identity_apply(k: usize, l: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("kron_identity_apply", k * l.n_cols, v.len())?;
    let mut out = vec![0.0; k * l.n_rows];
    kron_identity_into(k, l, v, &mut out);
    Ok(out)
}

pub(crate) fn kron_identity_into(k: usize, l: &SparseMatrix, v: &[f64], out: &mut [f64]) {
    for block in 0..k {
        let src = &v[block * l.n_cols..(block + 1) * l.n_cols];
        let dst = &mut out[block * l.n_rows..(block + 1) * l.n_rows];
        l.mul_into(src, dst);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
