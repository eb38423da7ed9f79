#![allow(dead_code)]

use qkf::kalman::{FilterState, KalmanModel};
use qkf::{ComplexMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn real_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), 0.0)
    })
}

pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// `L Lᵀ + shift I`, symmetric positive definite.
pub fn spd(rng: &mut impl Rng, n: usize, shift: f64) -> ComplexMatrix {
    let l = real_matrix(rng, n, n);
    let m = l.matmul(&l.adjoint()).unwrap();
    m.try_add(&ComplexMatrix::identity(n).scale_real(shift))
        .unwrap()
}

pub fn column(v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::column_vector(v).unwrap()
}

pub fn example_model() -> KalmanModel {
    KalmanModel::new(
        ComplexMatrix::from_real_rows(&[[1.0, -1.0], [1.0, 1.0]]).unwrap(),
        column(&[1.0, 1.0]),
        ComplexMatrix::diag(&[2.0, 1.0]),
        ComplexMatrix::identity(2),
        ComplexMatrix::identity(2),
    )
    .unwrap()
}

pub fn example_state() -> FilterState {
    FilterState::new(column(&[2.0, 1.0]), ComplexMatrix::identity(2), 0).unwrap()
}

/// Random model with `‖A‖₂ ≤ 0.95`, full-rank `H` and well-conditioned
/// noise covariances.
pub fn stable_model(rng: &mut impl Rng, n: usize, m: usize) -> KalmanModel {
    let a = real_matrix(rng, n, n);
    let a = a.scale_real(0.95 / a.spectral_norm().unwrap().max(1e-12));
    let mut h = real_matrix(rng, m, n);
    for i in 0..m.min(n) {
        h[(i, i)] += C64::new(1.5, 0.0);
    }
    KalmanModel::new(
        a,
        real_matrix(rng, n, 1),
        h,
        spd(rng, n, 0.5).scale_real(0.5),
        spd(rng, m, 1.0).scale_real(0.5),
    )
    .unwrap()
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> FilterState {
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    FilterState::new(column(&x), spd(rng, n, 0.5), 0).unwrap()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}
