//! Linear Kalman filter model and the dense reference step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// `x_k = A x_{k−1} + B u_{k−1} + w`, `z_k = H x_k + v`, with `Cov(w) = Q`
/// and `Cov(v) = R`.
#[derive(Clone, Debug)]
pub struct KalmanModel {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub h: ComplexMatrix,
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Estimate `x̂_k` (as an `n x 1` matrix) and covariance `P_k`.
#[derive(Clone, Debug, Serialize)]
pub struct FilterState {
    pub x_hat: ComplexMatrix,
    pub p: ComplexMatrix,
    pub k: usize,
}

/// Intermediate quantities of one classical step.
#[derive(Clone, Debug)]
pub struct ClassicalStep {
    pub x_minus: ComplexMatrix,
    pub p_minus: ComplexMatrix,
    /// Innovation covariance `H P⁻ Hᵀ + R`.
    pub a_temp: ComplexMatrix,
    pub gain: ComplexMatrix,
    pub state: FilterState,
}

fn check_covariance(m: &ComplexMatrix, name: &str) -> Result<()> {
    let scale = m.max_abs().max(1.0);
    if (&m.adjoint() - m).max_abs() > 1e-9 * scale {
        return Err(Error::Domain(format!("{name} is not symmetric")));
    }
    let min = m
        .to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::Domain(format!(
            "{name} is not positive semidefinite (eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn expect_shape(m: &ComplexMatrix, name: &str, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {}x{}",
            m.rows(),
            m.cols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

impl KalmanModel {
    pub fn new(
        a: ComplexMatrix,
        b: ComplexMatrix,
        h: ComplexMatrix,
        q: ComplexMatrix,
        r: ComplexMatrix,
    ) -> Result<Self> {
        let n = a.rows();
        expect_shape(&a, "A", (n, n))?;
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows, expected {n}",
                b.rows()
            )));
        }
        if h.cols() != n {
            return Err(Error::Dimension(format!(
                "H has {} columns, expected {n}",
                h.cols()
            )));
        }
        let m = h.rows();
        expect_shape(&q, "Q", (n, n))?;
        expect_shape(&r, "R", (m, m))?;
        check_covariance(&q, "Q")?;
        check_covariance(&r, "R")?;
        Ok(KalmanModel { a, b, h, q, r })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Control dimension.
    pub fn c(&self) -> usize {
        self.b.cols()
    }

    /// Measurement dimension.
    pub fn m(&self) -> usize {
        self.h.rows()
    }
}

impl FilterState {
    pub fn new(x_hat: ComplexMatrix, p: ComplexMatrix, k: usize) -> Result<Self> {
        if x_hat.cols() != 1 {
            return Err(Error::Dimension(format!(
                "state estimate must be a column, got {}x{}",
                x_hat.rows(),
                x_hat.cols()
            )));
        }
        expect_shape(&p, "P", (x_hat.rows(), x_hat.rows()))?;
        Ok(FilterState { x_hat, p, k })
    }

    /// Real parts of `x̂`.
    pub fn x_real(&self) -> Vec<f64> {
        self.x_hat.column(0).iter().map(|z| z.re).collect()
    }

    /// Real parts of the diagonal of `P`.
    pub fn p_diag(&self) -> Vec<f64> {
        (0..self.p.rows()).map(|i| self.p[(i, i)].re).collect()
    }
}

fn column(v: &[f64], name: &str, len: usize) -> Result<ComplexMatrix> {
    if v.len() != len {
        return Err(Error::Dimension(format!(
            "{name} has {} entries, expected {len}",
            v.len()
        )));
    }
    ComplexMatrix::column_vector(v)
}

/// Inverse of an innovation covariance, refusing numerically singular input.
pub(crate) fn checked_inverse(m: &ComplexMatrix, name: &str) -> Result<ComplexMatrix> {
    let sigma = m.svd()?.sigma;
    let (max, min) = (sigma[0], sigma[sigma.len() - 1]);
    if max == 0.0 || min <= 1e-12 * max {
        return Err(Error::Singular(format!(
            "{name} is singular (singular values {max:e} .. {min:e})"
        )));
    }
    m.inverse()
}

/// One predict/update cycle with dense linear algebra.
pub fn classical_step(
    model: &KalmanModel,
    state: &FilterState,
    u: &[f64],
    z: &[f64],
) -> Result<FilterState> {
    Ok(classical_step_detailed(model, state, u, z)?.state)
}

pub fn classical_step_detailed(
    model: &KalmanModel,
    state: &FilterState,
    u: &[f64],
    z: &[f64],
) -> Result<ClassicalStep> {
    if state.x_hat.rows() != model.n() {
        return Err(Error::Dimension(format!(
            "state has {} entries, model has {}",
            state.x_hat.rows(),
            model.n()
        )));
    }
    let u = column(u, "control", model.c())?;
    let z = column(z, "measurement", model.m())?;
    let (a, b, h) = (&model.a, &model.b, &model.h);

    let x_minus = a.matmul(&state.x_hat)?.try_add(&b.matmul(&u)?)?;
    let p_minus = a
        .matmul(&state.p)?
        .matmul(&a.adjoint())?
        .try_add(&model.q)?;
    let p_ht = p_minus.matmul(&h.adjoint())?;
    let a_temp = h.matmul(&p_ht)?.try_add(&model.r)?;
    let gain = p_ht.matmul(&checked_inverse(&a_temp, "innovation covariance")?)?;
    let innovation = z.try_sub(&h.matmul(&x_minus)?)?;
    let x_hat = x_minus.try_add(&gain.matmul(&innovation)?)?;
    let p = p_minus.try_sub(&gain.matmul(h)?.matmul(&p_minus)?)?;
    // Remove the rounding asymmetry of the product form.
    let p = p.try_add(&p.adjoint())?.scale(C64::new(0.5, 0.0));
    Ok(ClassicalStep {
        x_minus,
        p_minus,
        a_temp,
        gain,
        state: FilterState {
            x_hat,
            p,
            k: state.k + 1,
        },
    })
}
