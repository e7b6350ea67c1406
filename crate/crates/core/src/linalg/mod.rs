//! Small dense linear algebra: a row-major matrix type, the Frobenius
//! pairing, thin QR with a positive diagonal, symmetric eigenvalues and a
//! one-sided Jacobi SVD.
//!
//! Everything here is sized for frames of a few columns. There is no
//! blocking and no BLAS.

mod eigen;
mod qr;
mod svd;

pub use eigen::{sym_eigen, sym_eigenvalues_2x2, sym_eigenvalues_3x3, SymEigen};
pub use qr::{qr_positive, QrFactors};
pub use svd::{svd, SingularSpectrum, Svd};

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major: `data[i * cols + j]` is entry `(i, j)`.
///
/// Used for frequency matrices Ξ (n×k), Stiefel frames, Gram matrices and
/// orthogonal factors alike.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Checked constructor: shape must match the data and every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain(format!("empty matrix shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Domain(format!(
                "data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Domain("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Rectangular-diagonal `rows × values.len()` matrix with `values` on the
    /// main diagonal and zeros elsewhere.
    ///
    /// # Panics
    /// Panics if `values.len() > rows`.
    pub fn rect_diag(rows: usize, values: &[f64]) -> Self {
        assert!(values.len() <= rows, "rect_diag needs cols <= rows");
        Self::from_fn(rows, values.len(), |i, j| if i == j { values[j] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self · other`.
    ///
    /// # Panics
    /// Panics on inner-dimension mismatch.
    pub fn dot(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matrix product of {}x{} and {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_dot(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_dot row mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(l, i)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn sym(&self) -> Matrix {
        debug_assert_eq!(self.rows, self.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Skew part `(M − Mᵀ)/2` of a square matrix.
    pub fn skew(&self) -> Matrix {
        debug_assert_eq!(self.rows, self.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] - self[(j, i)]))
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "elementwise shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>12.6e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Frobenius pairing `Tr(Xᵀ Ξ) = Σᵢⱼ Xᵢⱼ Ξᵢⱼ`.
pub fn frobenius_pairing(x: &Matrix, xi: &Matrix) -> Result<f64> {
    if x.shape() != xi.shape() {
        return Err(Error::Dimension {
            expected: x.shape(),
            got: xi.shape(),
        });
    }
    Ok(x.data.iter().zip(&xi.data).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pairing_of_identity_frame_with_diagonal_is_trace() {
        let y = Matrix::rect_diag(5, &[1.0, 1.0, 1.0]);
        let xi = Matrix::rect_diag(5, &[3.0, 2.0, 0.5]);
        assert_eq!(frobenius_pairing(&y, &xi).unwrap(), 5.5);
    }

    #[test]
    fn pairing_with_zero_frequency() {
        let x = Matrix::from_fn(4, 2, |i, j| (i * 7 + j) as f64 - 3.3);
        assert_eq!(frobenius_pairing(&x, &Matrix::zeros(4, 2)).unwrap(), 0.0);
    }

    #[test]
    fn pairing_matches_double_loop() {
        let x = Matrix::new(3, 2, vec![0.3, -1.2, 2.5, 0.7, -0.4, 1.9]).unwrap();
        let xi = Matrix::new(3, 2, vec![1.1, 0.2, -0.6, 3.0, 2.2, -1.4]).unwrap();
        let mut expected = 0.0;
        for i in 0..3 {
            for j in 0..2 {
                expected += x[(i, j)] * xi[(i, j)];
            }
        }
        assert!((frobenius_pairing(&x, &xi).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn pairing_rejects_shape_mismatch() {
        let err = frobenius_pairing(&Matrix::zeros(3, 2), &Matrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn checked_constructor_rejects_nan() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn t_dot_matches_transpose_dot() {
        let a = Matrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let b = Matrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.25);
        assert_eq!(a.t_dot(&b), a.transpose().dot(&b));
    }

    fn mat32() -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-5.0f64..5.0, 6).prop_map(|v| Matrix::new(3, 2, v).unwrap())
    }

    proptest! {
        #[test]
        fn pairing_is_bilinear(x in mat32(), y in mat32(), xi in mat32(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let combo = &x.scale(a) + &y.scale(b);
            let lhs = frobenius_pairing(&combo, &xi).unwrap();
            let rhs = a * frobenius_pairing(&x, &xi).unwrap() + b * frobenius_pairing(&y, &xi).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
