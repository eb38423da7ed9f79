use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qkf::config::{parse_config, EXAMPLE_CONFIG};
use qkf::kalman::{encode_operand, q_step, EncodedModel, NormLedger};
use qkf::sampling::sample_counts;
use qkf::{ComplexMatrix, ExecMode, QOperator, StateVector, C64};

/// The 14-qubit state encoding of the bundled single-step example.
fn example_state_op() -> QOperator {
    let cfg = parse_config(EXAMPLE_CONFIG).unwrap();
    let model = cfg.model().unwrap();
    let init = cfg.init().unwrap();
    let opts = cfg.options();
    let enc = EncodedModel::new(&model).unwrap();
    let mut ledger = NormLedger::new();
    let e = |m: &ComplexMatrix, l: &str| encode_operand(m, enc.s, l).unwrap();
    let u = ComplexMatrix::column_vector(&cfg.controls[0]).unwrap();
    let z = ComplexMatrix::column_vector(&cfg.measurements[0]).unwrap();
    let st = q_step(
        &mut ledger,
        &enc,
        &e(&init.x_hat, "X"),
        &e(&init.p, "P"),
        &e(&u, "U"),
        &e(&z, "Z"),
        opts.kappa,
        opts.eps_prime,
        opts.degree_cap,
    )
    .unwrap();
    st.x.op().clone()
}

/// Alternating Hadamard layers and phase rotations on `n` qubits.
fn layered(n: usize, layers: usize) -> QOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let had = QOperator::dense(ComplexMatrix::from_real_rows(&[[h, h], [h, -h]]).unwrap()).unwrap();
    let mut ops = Vec::new();
    for l in 0..layers {
        for w in 0..n {
            ops.push(QOperator::extend(had.clone(), n, vec![w]).unwrap());
        }
        ops.push(QOperator::projector_phase(0.1 * (l + 1) as f64, n, vec![0, n - 1]).unwrap());
    }
    QOperator::product(ops).unwrap()
}

fn bench_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    group.sample_size(10);
    let cases = [
        ("example_state_14q", example_state_op()),
        ("layered_18q", layered(18, 4)),
        ("layered_20q", layered(20, 2)),
    ];
    for (name, op) in &cases {
        let psi = StateVector::zero(op.qubits());
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            group.bench_with_input(
                BenchmarkId::new(*name, format!("{mode:?}")),
                &psi,
                |b, psi| b.iter(|| op.apply_with(black_box(psi), mode).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    // Iterations run under rayon only with the `parallel` feature.
    let amps: Vec<C64> = (0..1 << 14)
        .map(|i| C64::new(((i % 7) as f64 + 1.0).sqrt(), 0.0))
        .collect();
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let amps: Vec<C64> = amps.into_iter().map(|z| z / norm).collect();
    let mut group = c.benchmark_group("sampling");
    group.sample_size(10);
    group.bench_function("16384x100", |b| {
        b.iter(|| sample_counts(black_box(&amps), 16384, 100, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_apply, bench_sampling);
criterion_main!(benches);
