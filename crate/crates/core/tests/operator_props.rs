mod common;

use common::{complex_matrix, rng};
use proptest::prelude::*;
use qkf::{encode_matrix_on, ComplexMatrix, ExecMode, QOperator, StateVector, C64};
use rand::Rng;

fn random_unitary(seed: u64, k: usize) -> ComplexMatrix {
    let m = complex_matrix(&mut rng(seed), 1 << k, 1 << k);
    let svd = m.svd().unwrap();
    svd.w.matmul(&svd.v_adjoint).unwrap()
}

fn local(seed: u64, n: usize, k: usize, r: &mut impl Rng) -> QOperator {
    let k = k.min(n);
    let mut wires: Vec<usize> = (0..n).collect();
    for j in 0..k {
        let t = r.random_range(j..n);
        wires.swap(j, t);
    }
    wires.truncate(k);
    QOperator::extend(QOperator::dense(random_unitary(seed, k)).unwrap(), n, wires).unwrap()
}

/// A random tree over `n` qubits built from every node kind.
fn random_tree(seed: u64, n: usize, depth: usize) -> QOperator {
    let mut r = rng(seed);
    let mut factors = Vec::new();
    for i in 0..depth as u64 {
        let op = match r.random_range(0..4) {
            0 => {
                let k = r.random_range(1..=2);
                local(seed ^ i, n, k, &mut r)
            }
            1 => {
                let w = r.random_range(0..n);
                QOperator::projector_phase(r.random_range(-3.0..3.0), n, vec![w]).unwrap()
            }
            2 => {
                let a = local(seed ^ 77 ^ i, n - 1, 2, &mut r);
                let b = QOperator::projector_phase(0.4, n - 1, vec![0]).unwrap();
                QOperator::select(a, b).unwrap()
            }
            _ => local(seed ^ 99 ^ i, n, 3, &mut r).adjoint(),
        };
        factors.push(op);
    }
    QOperator::product(factors).unwrap()
}

fn random_state(seed: u64, n: usize) -> StateVector {
    let mut r = rng(seed);
    let amps = (0..1usize << n)
        .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    StateVector::from_amplitudes(amps)
        .unwrap()
        .normalized()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn apply_matches_dense_matrix(seed in any::<u64>(), n in 2usize..=5, depth in 1usize..6) {
        let op = random_tree(seed, n, depth);
        let psi = random_state(seed ^ 9, n);
        let got = op.apply(&psi).unwrap();
        let want = op.to_dense().unwrap().matvec(psi.amplitudes()).unwrap();
        let err = got
            .amplitudes()
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
        prop_assert!((got.norm() - 1.0).abs() < 1e-10);
        prop_assert!(op.unitarity_residual(2, seed).unwrap() <= 1e-10);
    }

    #[test]
    fn adjoint_inverts(seed in any::<u64>(), n in 2usize..=5) {
        let op = random_tree(seed, n, 4);
        let psi = random_state(seed ^ 3, n);
        let back = op.adjoint().apply(&op.apply(&psi).unwrap()).unwrap();
        prop_assert!(back.distance(&psi) < 1e-12);
    }
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    // Large enough that the parallel path splits the state.
    let n = 15;
    let op = random_tree(42, n, 8);
    let psi = random_state(7, n);
    let a = op.apply_with(&psi, ExecMode::Sequential).unwrap();
    let b = op.apply_with(&psi, ExecMode::Parallel).unwrap();
    assert_eq!(a.amplitudes(), b.amplitudes());
}

#[test]
fn re_encoding_is_idempotent() {
    let mut r = rng(11);
    for s in 1..=3 {
        let side = 1 << s;
        let m = complex_matrix(&mut r, side, side - 1);
        let be = encode_matrix_on(&m, s).unwrap();
        let once = qkf::decode(&be).unwrap();
        let twice = qkf::decode(&encode_matrix_on(&once, s).unwrap()).unwrap();
        assert!((&once - &twice).max_abs() < 1e-9);
    }
}
