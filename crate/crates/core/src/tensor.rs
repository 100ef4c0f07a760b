//! Dense matrix kernel with the block Kronecker product.
//!
//! [`Mat`] is a small row-major matrix of finite `f64` values. Besides the
//! usual products it provides:
//!
//! * [`block_kron`]: partitions the left operand into consecutive column
//!   blocks `A_i` whose width equals the row count of the right operand and
//!   returns `[A_1 B, ..., A_κ B]`. When the widths agree this is the plain
//!   matrix product.
//! * [`kron`]: the standard Kronecker product.
//! * [`vec`] and [`reshape_t`]: column-major vectorization and reshaping.
//!   Both are column-major regardless of the row-major storage.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("{op}: dimension mismatch ({lhs} vs {rhs})")]
    DimensionMismatch {
        op: &'static str,
        lhs: usize,
        rhs: usize,
    },
    #[error("{op}: non-finite entry at ({row}, {col})")]
    NonFinite {
        op: &'static str,
        row: usize,
        col: usize,
    },
    #[error("{op}: {rows}x{cols} has no entries")]
    Empty {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(TensorError::Empty {
                op: "Mat::new",
                rows,
                cols,
            });
        }
        if data.len() != rows * cols {
            return Err(TensorError::DimensionMismatch {
                op: "Mat::new",
                lhs: rows * cols,
                rhs: data.len(),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite("Mat::new")?;
        Ok(m)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(TensorError::DimensionMismatch {
                    op: "Mat::from_rows",
                    lhs: c,
                    rhs: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    /// Column vector.
    pub fn col(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Row vector.
    pub fn row(values: &[f64]) -> Result<Self> {
        Self::new(1, values.len(), values.to_vec())
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(TensorError::Empty {
                op: "Mat::diag",
                rows: 0,
                cols: 0,
            });
        }
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m.check_finite("Mat::diag")?;
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, op: &'static str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(TensorError::NonFinite {
                op,
                row: i / self.cols,
                col: i % self.cols,
            }),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * s).collect(),
        )
    }

    pub fn add(&self, other: &Mat) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Mat, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows {
            return Err(TensorError::DimensionMismatch {
                op,
                lhs: self.rows,
                rhs: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(TensorError::DimensionMismatch {
                op,
                lhs: self.cols,
                rhs: other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Mat) -> Result<Self> {
        if self.cols != other.rows {
            return Err(TensorError::DimensionMismatch {
                op: "matmul",
                lhs: self.cols,
                rhs: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product on a plain slice.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(TensorError::DimensionMismatch {
                op: "mul_vec",
                lhs: self.cols,
                rhs: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| dot(self.row_slice(r), x))
            .collect())
    }

    /// Largest absolute entry difference; `f64::INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Columns `start..start + width` as a new matrix.
    pub fn column_block(&self, start: usize, width: usize) -> Self {
        let mut out = Self::zeros(self.rows, width);
        for r in 0..self.rows {
            out.data[r * width..(r + 1) * width]
                .copy_from_slice(&self.data[r * self.cols + start..r * self.cols + start + width]);
        }
        out
    }

    /// Stacks matrices vertically.
    pub fn vstack(parts: &[Mat]) -> Result<Self> {
        let cols = parts.first().map_or(0, Mat::cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(TensorError::DimensionMismatch {
                    op: "vstack",
                    lhs: cols,
                    rhs: p.cols,
                });
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Self::new(rows, cols, data)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row_slice(r))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Block Kronecker product `a ⊠ b`.
///
/// `a` is `m×n`, `b` is `p×q` with `n = κp`. The result is `m×κq`, built
/// from the products `A_i b` of the consecutive `m×p` column blocks of `a`.
pub fn block_kron(a: &Mat, b: &Mat) -> Result<Mat> {
    a.check_finite("block_kron")?;
    b.check_finite("block_kron")?;
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    if n % p != 0 {
        return Err(TensorError::DimensionMismatch {
            op: "block_kron",
            lhs: n,
            rhs: p,
        });
    }
    let kappa = n / p;
    let mut out = Mat::zeros(m, kappa * q);
    for i in 0..m {
        let a_row = a.row_slice(i);
        let out_row = &mut out.data[i * kappa * q..(i + 1) * kappa * q];
        for blk in 0..kappa {
            let a_blk = &a_row[blk * p..(blk + 1) * p];
            let o = &mut out_row[blk * q..(blk + 1) * q];
            for (l, &alpha) in a_blk.iter().enumerate() {
                if alpha == 0.0 {
                    continue;
                }
                for (oc, bv) in o.iter_mut().zip(b.row_slice(l)) {
                    *oc += alpha * bv;
                }
            }
        }
    }
    Ok(out)
}

/// Standard Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat, b: &Mat) -> Result<Mat> {
    a.check_finite("kron")?;
    b.check_finite("kron")?;
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = Mat::zeros(m * p, n * q);
    let width = n * q;
    for i in 0..m {
        for j in 0..n {
            let s = a.get(i, j);
            for k in 0..p {
                let row = i * p + k;
                let dst = &mut out.data[row * width + j * q..row * width + (j + 1) * q];
                for (d, bv) in dst.iter_mut().zip(b.row_slice(k)) {
                    *d = s * bv;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of plain vectors.
pub fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

/// Column-major vectorization into an `mn×1` column.
pub fn vec(a: &Mat) -> Mat {
    let (m, n) = a.shape();
    let mut data = Vec::with_capacity(m * n);
    for c in 0..n {
        for r in 0..m {
            data.push(a.get(r, c));
        }
    }
    Mat::from_raw(m * n, 1, data)
}

/// Reshaping transformation: column-major reshape of `a` into `λ` rows.
pub fn reshape_t(lambda: usize, a: &Mat) -> Result<Mat> {
    let total = a.rows * a.cols;
    if lambda == 0 || !total.is_multiple_of(lambda) {
        return Err(TensorError::DimensionMismatch {
            op: "reshape_t",
            lhs: total,
            rhs: lambda,
        });
    }
    let kappa = total / lambda;
    let flat = vec(a);
    let mut out = Mat::zeros(lambda, kappa);
    for (idx, v) in flat.data.iter().enumerate() {
        out.data[(idx % lambda) * kappa + idx / lambda] = *v;
    }
    Ok(out)
}

/// Reshaping transformation evaluated literally as
/// `(vec(I_κ)ᵀ ⊗ I_λ) ⊠ vec(a)`.
///
/// Quadratic in the element count; kept as a cross-check for [`reshape_t`].
pub fn reshape_t_by_definition(lambda: usize, a: &Mat) -> Result<Mat> {
    let total = a.rows * a.cols;
    if lambda == 0 || !total.is_multiple_of(lambda) {
        return Err(TensorError::DimensionMismatch {
            op: "reshape_t",
            lhs: total,
            rhs: lambda,
        });
    }
    let kappa = total / lambda;
    let selector = kron(&vec(&Mat::identity(kappa)).transpose(), &Mat::identity(lambda))?;
    block_kron(&selector, &vec(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn block_kron_expands_column_blocks() {
        let a = m(&[&[1.0, 2.0, 3.0, 4.0]]);
        let b = m(&[&[1.0], &[1.0]]);
        assert_eq!(block_kron(&a, &b).unwrap(), m(&[&[3.0, 7.0]]));
    }

    #[test]
    fn block_kron_of_identities_is_identity() {
        let i2 = Mat::identity(2);
        assert_eq!(block_kron(&i2, &i2).unwrap(), i2);
    }

    #[test]
    fn block_kron_with_inverse_is_identity() {
        let a = m(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let inv = m(&[&[0.6, -0.2], &[-0.2, 0.4]]);
        assert!(block_kron(&a, &inv).unwrap().max_abs_diff(&Mat::identity(2)) < 1e-15);
        assert!(block_kron(&inv, &a).unwrap().max_abs_diff(&Mat::identity(2)) < 1e-15);
    }

    #[test]
    fn block_kron_rejects_non_multiple_width() {
        let a = Mat::zeros(2, 5);
        let b = Mat::zeros(2, 2);
        assert_eq!(
            block_kron(&a, &b),
            Err(TensorError::DimensionMismatch {
                op: "block_kron",
                lhs: 5,
                rhs: 2
            })
        );
    }

    #[test]
    fn operators_reject_non_finite() {
        assert!(Mat::new(1, 2, vec![1.0, f64::NAN]).is_err());
        let mut a = Mat::zeros(1, 2);
        a.set(0, 1, f64::INFINITY);
        assert!(matches!(
            block_kron(&a, &Mat::zeros(2, 1)),
            Err(TensorError::NonFinite { row: 0, col: 1, .. })
        ));
        assert!(kron(&Mat::identity(2), &a).is_err());
    }

    #[test]
    fn kron_examples() {
        let a = m(&[&[1.0], &[2.0]]);
        let b = m(&[&[3.0], &[4.0]]);
        assert_eq!(kron(&a, &b).unwrap(), m(&[&[3.0], &[4.0], &[6.0], &[8.0]]));
        assert_eq!(
            kron(&Mat::identity(2), &Mat::identity(3)).unwrap(),
            Mat::identity(6)
        );
        let x = m(&[&[1.5], &[-2.0], &[0.25]]);
        assert_eq!(kron(&x, &m(&[&[1.0]])).unwrap(), x);
    }

    #[test]
    fn vec_is_column_major() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(vec(&a), m(&[&[1.0], &[3.0], &[2.0], &[4.0]]));
        assert_eq!(
            vec(&m(&[&[1.0, 2.0, 3.0]])),
            m(&[&[1.0], &[2.0], &[3.0]])
        );
        assert_eq!(
            vec(&Mat::identity(2)),
            m(&[&[1.0], &[0.0], &[0.0], &[1.0]])
        );
    }

    #[test]
    fn reshape_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            reshape_t(4, &a).unwrap(),
            m(&[&[1.0], &[3.0], &[2.0], &[4.0]])
        );
        assert_eq!(reshape_t(1, &a).unwrap(), m(&[&[1.0, 3.0, 2.0, 4.0]]));
        assert_eq!(reshape_t(2, &a).unwrap(), a);
        assert_eq!(reshape_t_by_definition(4, &a).unwrap(), reshape_t(4, &a).unwrap());
        assert_eq!(reshape_t_by_definition(1, &a).unwrap(), reshape_t(1, &a).unwrap());
        assert!(reshape_t(3, &a).is_err());
        assert!(reshape_t_by_definition(3, &a).is_err());
    }
}
