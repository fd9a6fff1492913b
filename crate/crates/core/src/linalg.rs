//! Dense and sparse kernels shared by every solver.
//!
//! Matrices are row-major `f64`. Bases are stored `d × k` with `k` small, so
//! column operations stride through memory; at the sizes this crate targets
//! (`k ≤ 32`) that is cheaper than keeping a transposed copy around.

use std::ops::Deref;

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::DataBlock;

/// Columns whose residual norm falls below this fraction of `‖A‖_F` are
/// treated as numerically dependent by [`thin_qr`].
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// `d × k` matrix whose columns are the first `k` standard basis vectors.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i * cols + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_vec",
                left: rows * cols,
                right: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_rows",
                    left: cols,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_columns",
                    left: rows,
                    right: c.len(),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    pub fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                left: self.cols,
                right: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &ail) in a.iter().enumerate() {
                if ail == 0.0 {
                    continue;
                }
                for (oj, &blj) in o.iter_mut().zip(other.row(l)) {
                    *oj += ail * blj;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context: "t_matmul",
                left: self.rows,
                right: other.rows,
            });
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (oj, &bj) in o.iter_mut().zip(b) {
                    *oj += ai * bj;
                }
            }
        }
        Ok(out)
    }

    pub fn scale_in_place(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "add_scaled",
                left: self.rows * self.cols,
                right: other.rows * other.cols,
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `‖selfᵀself − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.t_matmul(self).expect("square gram");
        let mut worst = 0.0f64;
        for i in 0..self.cols {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }
}

/// A real vector guaranteed to hold only what [`normalize`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize(v: &[f64]) -> Result<DenseVector> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(DenseVector(v.iter().map(|x| x / n).collect()))
}

/// Sparse sample: `(column, value)` pairs with strictly increasing columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn new(entries: Vec<(usize, f64)>, n_cols: usize) -> Result<Self> {
        for (pos, &(c, v)) in entries.iter().enumerate() {
            if c >= n_cols {
                return Err(Error::invalid(format!(
                    "column index {c} out of range for {n_cols} columns"
                )));
            }
            if pos > 0 && entries[pos - 1].0 >= c {
                return Err(Error::invalid(format!(
                    "column indices not strictly increasing at {c}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value at column {c}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cols];
        for &(c, v) in &self.entries {
            out[c] = v;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    n_cols: usize,
    rows: Vec<SparseRow>,
}

impl SparseBlock {
    pub fn new(n_cols: usize, rows: Vec<SparseRow>) -> Result<Self> {
        for r in &rows {
            if let Some(&(c, _)) = r.entries.last() {
                if c >= n_cols {
                    return Err(Error::invalid(format!(
                        "column index {c} out of range for {n_cols} columns"
                    )));
                }
            }
        }
        Ok(Self { n_cols, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows.len(), self.n_cols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in &r.entries {
                m.set(i, c, v);
            }
        }
        m
    }
}

/// Borrowed view of one sample, dense or sparse.
#[derive(Debug, Clone, Copy)]
pub enum RowView<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [(usize, f64)]),
}

impl RowView<'_> {
    pub fn norm_sq(&self) -> f64 {
        match self {
            RowView::Dense(x) => dot(x, x),
            RowView::Sparse(e) => e.iter().map(|(_, v)| v * v).sum(),
        }
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        match self {
            RowView::Dense(x) => dot(x, v),
            RowView::Sparse(e) => e.iter().map(|&(c, x)| x * v[c]).sum(),
        }
    }

    /// `out[j] = xᵀ basis[:, j]`.
    pub fn project(&self, basis: &DenseMatrix, out: &mut [f64]) {
        let k = basis.ncols();
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            RowView::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    for (o, &b) in out.iter_mut().zip(&basis.data[i * k..(i + 1) * k]) {
                        *o += xi * b;
                    }
                }
            }
            RowView::Sparse(e) => {
                for &(i, xi) in e.iter() {
                    for (o, &b) in out.iter_mut().zip(&basis.data[i * k..(i + 1) * k]) {
                        *o += xi * b;
                    }
                }
            }
        }
    }

    /// `acc[i, :] += scale · x_i · coeffs`, i.e. `acc += scale · x coeffsᵀ`.
    pub fn add_outer(&self, coeffs: &[f64], scale: f64, acc: &mut DenseMatrix) {
        let k = acc.ncols();
        match self {
            RowView::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let s = scale * xi;
                    for (a, &c) in acc.data[i * k..(i + 1) * k].iter_mut().zip(coeffs) {
                        *a += s * c;
                    }
                }
            }
            RowView::Sparse(e) => {
                for &(i, xi) in e.iter() {
                    let s = scale * xi;
                    for (a, &c) in acc.data[i * k..(i + 1) * k].iter_mut().zip(coeffs) {
                        *a += s * c;
                    }
                }
            }
        }
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        match self {
            RowView::Dense(x) => x.to_vec(),
            RowView::Sparse(e) => {
                let mut out = vec![0.0; n_cols];
                for &(c, v) in e.iter() {
                    out[c] = v;
                }
                out
            }
        }
    }
}

/// `acc += scale · Σ x (xᵀ V)` over the given rows. Dimensions are the
/// caller's responsibility.
pub fn gram_accumulate<'a>(
    rows: impl IntoIterator<Item = RowView<'a>>,
    v: &DenseMatrix,
    scale: f64,
    acc: &mut DenseMatrix,
) {
    let mut proj = vec![0.0; v.ncols()];
    for row in rows {
        row.project(v, &mut proj);
        row.add_outer(&proj, scale, acc);
    }
}

/// `scale · Xᵀ(X V)` without forming `XᵀX`.
pub fn gram_apply(block: &DataBlock, v: &DenseMatrix, scale: f64) -> Result<DenseMatrix> {
    if block.dim() != v.nrows() {
        return Err(Error::DimensionMismatch {
            context: "gram_apply (block columns vs basis rows)",
            left: block.dim(),
            right: v.nrows(),
        });
    }
    if !scale.is_finite() {
        return Err(Error::invalid("gram_apply scale must be finite"));
    }
    let mut out = DenseMatrix::zeros(v.nrows(), v.ncols());
    gram_accumulate(block.rows(), v, scale, &mut out);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    /// Columns that were numerically dependent and replaced by fresh random
    /// directions.
    pub reseeded: Vec<usize>,
}

/// Thin QR by modified Gram–Schmidt with one reorthogonalization pass.
/// `R` has a non-negative diagonal; it is strictly positive unless a column
/// was reseeded.
pub fn thin_qr(a: &DenseMatrix, rng: &mut RngState) -> Result<ThinQr> {
    let mut q = a.clone();
    let (r, reseeded) = orthonormalize_in_place(&mut q, rng)?;
    Ok(ThinQr { q, r, reseeded })
}

/// In-place variant of [`thin_qr`]: overwrites `a` with `Q` and returns
/// `(R, reseeded columns)`.
pub fn orthonormalize_in_place(
    a: &mut DenseMatrix,
    rng: &mut RngState,
) -> Result<(DenseMatrix, Vec<usize>)> {
    let (d, k) = (a.nrows(), a.ncols());
    if k > d {
        return Err(Error::invalid(format!(
            "thin QR needs rows >= cols, got {d}x{k}"
        )));
    }
    let threshold = RANK_TOL * a.frobenius_norm();
    let mut r = DenseMatrix::zeros(k, k);
    let mut reseeded = Vec::new();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let c = column_dot(a, i, j);
                column_axpy(a, -c, i, j);
                r.data[i * k + j] += c;
            }
        }
        let nrm = column_norm(a, j);
        if nrm <= threshold || nrm == 0.0 {
            fill_random_orthogonal(a, j, rng);
            for i in 0..j {
                r.data[i * k + j] = 0.0;
            }
            r.data[j * k + j] = nrm;
            reseeded.push(j);
        } else {
            for row in 0..d {
                a.data[row * k + j] /= nrm;
            }
            r.data[j * k + j] = nrm;
        }
    }
    Ok((r, reseeded))
}

fn column_dot(a: &DenseMatrix, i: usize, j: usize) -> f64 {
    let k = a.cols;
    (0..a.rows).map(|r| a.data[r * k + i] * a.data[r * k + j]).sum()
}

fn column_norm(a: &DenseMatrix, j: usize) -> f64 {
    column_dot(a, j, j).sqrt()
}

/// `a[:, dst] += s · a[:, src]`.
fn column_axpy(a: &mut DenseMatrix, s: f64, src: usize, dst: usize) {
    let k = a.cols;
    for r in 0..a.rows {
        a.data[r * k + dst] += s * a.data[r * k + src];
    }
}

fn fill_random_orthogonal(a: &mut DenseMatrix, j: usize, rng: &mut RngState) {
    let k = a.cols;
    loop {
        for r in 0..a.rows {
            a.data[r * k + j] = rng.standard_normal();
        }
        for _ in 0..2 {
            for i in 0..j {
                let c = column_dot(a, i, j);
                column_axpy(a, -c, i, j);
            }
        }
        let nrm = column_norm(a, j);
        if nrm > 1e-8 {
            for r in 0..a.rows {
                a.data[r * k + j] /= nrm;
            }
            return;
        }
    }
}

/// Non-negative weights `λ_1..λ_k` attached to the columns of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalWeights {
    lambda: Vec<f64>,
}

impl DiagonalWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some(bad) = lambda.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("invalid diagonal weight {bad}")));
        }
        Ok(Self { lambda })
    }

    pub fn ones(k: usize) -> Self {
        Self {
            lambda: vec![1.0; k],
        }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn is_non_increasing(&self) -> bool {
        self.lambda.windows(2).all(|w| w[0] >= w[1])
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        self.lambda.swap(a, b);
    }
}

/// Euclidean norm of every column.
pub fn column_norms(a: &DenseMatrix) -> DiagonalWeights {
    let mut acc = vec![0.0; a.ncols()];
    for i in 0..a.nrows() {
        for (s, v) in acc.iter_mut().zip(a.row(i)) {
            *s += v * v;
        }
    }
    DiagonalWeights {
        lambda: acc.into_iter().map(f64::sqrt).collect(),
    }
}
