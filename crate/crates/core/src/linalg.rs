//! Dense complex matrices.
//!
//! [`ComplexMatrix`] is a small row-major container used for every model
//! matrix, every decoded block and every dense leaf of an operator tree.
//! Factorizations (SVD, LU inverse) are delegated to `nalgebra`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Thin singular value decomposition `M = W diag(sigma) V†`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub w: ComplexMatrix,
    /// Nonnegative, descending.
    pub sigma: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from row-major complex entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Build from nested real rows. All rows must have equal length.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::from_vec(nrows, ncols, data)
    }

    pub fn column_vector(entries: &[f64]) -> Result<Self> {
        Self::from_vec(
            entries.len(),
            1,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// True if every imaginary part is below `tol` in magnitude.
    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn real_part(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(&self, rhs: &ComplexMatrix, op: &str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn try_add(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, "subtract", |a, b| a - b)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &ComplexMatrix) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// Square root of the sum of squared entry moduli.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self.svd()?.sigma.first().copied().unwrap_or(0.0))
    }

    /// Copy of the top-left `rows x cols` sub-block.
    pub fn crop(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows > self.rows || cols > self.cols || rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "cannot crop {}x{} to {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| self[(i, j)]))
    }

    /// Embed into the top-left corner of a `rows x cols` zero matrix.
    pub fn embed(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::Dimension(format!(
                "cannot embed {}x{} into {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        Ok(out)
    }

    /// `‖M†M − I‖_max`; zero for an exactly unitary matrix.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Singular value decomposition with descending singular values.
    ///
    /// `W` is `rows x k` and `V†` is `k x cols` with `k = min(rows, cols)`.
    pub fn svd(&self) -> Result<Svd> {
        if !self.is_finite() {
            return Err(Error::Domain("SVD of a non-finite matrix".into()));
        }
        let svd = self
            .to_nalgebra()
            .try_svd(true, true, 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let u = svd
            .u
            .ok_or_else(|| Error::Numerical("SVD returned no U".into()))?;
        let vt = svd
            .v_t
            .ok_or_else(|| Error::Numerical("SVD returned no V†".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let k = order.len();
        let w = Self::from_fn(self.rows, k, |i, j| u[(i, order[j])]);
        let v_adjoint = Self::from_fn(k, self.cols, |i, j| vt[(order[i], j)]);
        let sigma = order
            .iter()
            .map(|&i| svd.singular_values[i].max(0.0))
            .collect();
        Ok(Svd {
            w,
            sigma,
            v_adjoint,
        })
    }

    /// Inverse of a square matrix via LU.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let inv = self
            .to_nalgebra()
            .try_inverse()
            .ok_or_else(|| Error::Singular("LU factorization found a zero pivot".into()))?;
        let out = Self::from_nalgebra(&inv);
        if !out.is_finite() {
            return Err(Error::Singular("inverse has non-finite entries".into()));
        }
        Ok(out)
    }

    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition_number(&self) -> Result<f64> {
        let svd = self.svd()?;
        let max = svd.sigma.first().copied().unwrap_or(0.0);
        let min = svd.sigma.last().copied().unwrap_or(0.0);
        Ok(if min <= 0.0 { f64::INFINITY } else { max / min })
    }
}

impl Svd {
    /// `W diag(f(σ)) V†`.
    pub fn transform(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let k = self.sigma.len();
        let rows = self.w.rows();
        let cols = self.v_adjoint.cols();
        ComplexMatrix::from_fn(rows, cols, |i, j| {
            (0..k)
                .map(|l| self.w[(i, l)] * f(self.sigma[l]) * self.v_adjoint[(l, j)])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.transform(|s| s)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs)
            .expect("shape mismatch in matrix addition")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs)
            .expect("shape mismatch in matrix subtraction")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                if z.im.abs() < 1e-14 {
                    write!(f, "{:>12.6} ", z.re)?;
                } else {
                    write!(f, "{:>12.6}{:+.6}i ", z.re, z.im)?;
                }
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| {
                    if z.im.abs() < 1e-12 {
                        format!("{:.6}", z.re)
                    } else {
                        format!("{:.6}{:+.6}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Extend `columns` (orthonormal, each of length `dim`) to a full unitary
/// basis by Gram–Schmidt against the standard basis. Returned columns are
/// the given ones followed by the completion.
pub(crate) fn complete_orthonormal(columns: &[Vec<C64>], dim: usize) -> Result<Vec<Vec<C64>>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for c in columns {
        if c.len() != dim {
            return Err(Error::Dimension(format!(
                "column of length {} in dimension {dim}",
                c.len()
            )));
        }
        basis.push(c.clone());
    }
    let project_out = |v: &mut Vec<C64>, basis: &[Vec<C64>]| {
        for b in basis {
            let overlap: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
    };
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![ZERO; dim];
        v[e] = ONE;
        // Two passes keep the completion orthogonal to working precision.
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|z| *z /= norm);
            basis.push(v);
        }
    }
    if basis.len() != dim {
        return Err(Error::Numerical(
            "orthonormal completion failed: input columns not independent".into(),
        ));
    }
    Ok(basis)
}

/// Square matrix whose columns are `columns`.
pub(crate) fn from_columns(columns: &[Vec<C64>]) -> ComplexMatrix {
    let n = columns.len();
    ComplexMatrix::from_fn(n, n, |i, j| columns[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a_example() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, -1.0], [1.0, 1.0]]).unwrap()
    }

    #[test]
    fn svd_of_diagonal() {
        let svd = ComplexMatrix::diag(&[13.0, 4.0]).svd().unwrap();
        assert!((svd.sigma[0] - 13.0).abs() < 1e-12);
        assert!((svd.sigma[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_rotation_like_matrix() {
        // A Aᵀ = 2I
        let a = a_example();
        let svd = a.svd().unwrap();
        for s in &svd.sigma {
            assert!((s - 2f64.sqrt()).abs() < 1e-12);
        }
        let err = (&svd.reconstruct() - &a).frobenius_norm();
        assert!(err <= 1e-10 * a.frobenius_norm());
        assert!(svd.w.unitarity_residual() < 1e-10);
        assert!(svd.v_adjoint.unitarity_residual() < 1e-10);
    }

    #[test]
    fn svd_of_zero() {
        let svd = ComplexMatrix::zeros(2, 2).svd().unwrap();
        assert_eq!(svd.sigma, vec![0.0, 0.0]);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(m.svd(), Err(Error::Domain(_))));
    }

    #[test]
    fn svd_descending_for_complex_input() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            C64::new((i * 3 + j) as f64, (i as f64) - (j as f64))
        });
        let svd = m.svd().unwrap();
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        let err = (&svd.reconstruct() - &m).frobenius_norm();
        assert!(err <= 1e-10 * m.frobenius_norm());
    }

    #[test]
    fn frobenius_examples() {
        assert!((a_example().frobenius_norm() - 2.0).abs() < 1e-15);
        assert!((ComplexMatrix::identity(2).frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert!((ComplexMatrix::diag(&[2.0, 1.0]).frobenius_norm() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_singular_matrix_fails() {
        let m = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::Singular(_))));
    }

    #[test]
    fn completion_is_unitary() {
        let s = 0.5f64.sqrt();
        let cols = vec![vec![C64::new(s, 0.0), ZERO, C64::new(0.0, s), ZERO]];
        let full = complete_orthonormal(&cols, 4).unwrap();
        let u = from_columns(&full);
        assert!(u.unitarity_residual() < 1e-12);
        assert_eq!(u[(2, 0)], C64::new(0.0, s));
    }

    #[test]
    fn from_real_rows_rejects_ragged() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(
            ComplexMatrix::from_real_rows(&rows),
            Err(Error::Dimension(_))
        ));
    }
}
