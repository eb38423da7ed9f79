//! The Kalman filter carried out on block encodings.
//!
//! Each step builds encodings of the prior state and covariance, reads out
//! the innovation covariance `A_temp = H P⁻ Hᵀ + R`, re-encodes and inverts
//! it, forms the gain and the posterior, and finally reads the posterior
//! back out (exactly or by sampling) so the next step can start from fresh
//! `s`-ancilla encodings.

use serde::Serialize;

use super::classical::{FilterState, KalmanModel};
use super::ledger::NormLedger;
use crate::arith::{be_add, be_adjoint, be_multiply, be_negate};
use crate::encoding::{
    decode, decode_columns, encode_data_structure, encode_matrix_on, encode_zero, pad_to_square,
    qubits_for, BlockEncoding,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::operator::OpStats;
use crate::qsvt::{be_invert_detailed, InversionInfo, InvertOptions, DEFAULT_DEGREE_CAP};
use crate::sampling::{
    derive_seed, estimate_entries, exact_amplitudes, sample_counts, SampleReport,
};

/// How the condition bound handed to the inversion is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum KappaPolicy {
    /// `margin ×` the measured condition number of `A_temp`; if the
    /// re-encoded block still has a singular value below `1/κ`, the bound is
    /// re-measured on the block itself (`margin × α'/σ_min`).
    Margin(f64),
    /// Use exactly this bound; out-of-range singular values are an error.
    Fixed(f64),
}

/// Shot-sampling parameters for the loop-boundary readout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub shots: u64,
    pub iterations: u64,
    pub seed: u64,
    /// Total shots allowed over the whole run.
    pub budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ReadoutMode {
    Exact,
    Sampled(SamplingPlan),
}

#[derive(Clone, Copy, Debug)]
pub struct QuantumOptions {
    pub kappa: KappaPolicy,
    pub eps_prime: f64,
    pub degree_cap: usize,
    pub readout: ReadoutMode,
}

impl Default for QuantumOptions {
    fn default() -> Self {
        QuantumOptions {
            kappa: KappaPolicy::Margin(1.1),
            eps_prime: 0.01,
            degree_cap: DEFAULT_DEGREE_CAP,
            readout: ReadoutMode::Exact,
        }
    }
}

/// What the gain computation measured and chose.
#[derive(Clone, Debug, Serialize)]
pub struct GainInfo {
    /// Decoded innovation covariance (logical shape).
    pub a_temp: ComplexMatrix,
    pub kappa_measured: f64,
    pub kappa_used: f64,
    /// Whether the bound was re-measured on the re-encoded block.
    pub kappa_rescaled: bool,
    /// `α'/α` of the re-encoding.
    pub gamma: f64,
    pub inversion: InversionInfo,
}

/// Encodings produced by one quantum step.
#[derive(Clone, Debug)]
pub struct QuantumStep {
    pub x_minus: BlockEncoding,
    pub p_minus: BlockEncoding,
    pub gain: BlockEncoding,
    pub x: BlockEncoding,
    pub p: BlockEncoding,
    pub gain_info: GainInfo,
}

/// Sampled readout of one column of an encoding.
#[derive(Clone, Debug, Serialize)]
pub struct ColumnSample {
    pub target: String,
    pub column: usize,
    pub alpha: f64,
    pub report: SampleReport,
    /// Signed estimates of the logical rows of this column.
    pub estimates: Vec<f64>,
    pub std_errs: Vec<f64>,
    /// Exact values the estimates target.
    pub exact: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub gain: GainInfo,
    pub x_stats: OpStats,
    pub p_stats: OpStats,
    /// Exact decodes at the loop boundary (also in sampled mode).
    pub x_exact: Vec<f64>,
    pub p_exact: ComplexMatrix,
    pub samples: Vec<ColumnSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterRun {
    pub system_qubits: usize,
    pub states: Vec<FilterState>,
    pub steps: Vec<StepRecord>,
    pub ledger: NormLedger,
    /// Step at which the shot budget ran out, if it did.
    pub exhausted_at: Option<usize>,
}

/// Encodings of the model matrices, shared by every step.
#[derive(Clone, Debug)]
pub struct EncodedModel {
    pub s: usize,
    pub a: BlockEncoding,
    pub b: BlockEncoding,
    pub h: BlockEncoding,
    pub q: BlockEncoding,
    pub r: BlockEncoding,
}

/// System register size that fits every model dimension.
pub fn system_qubits_for(model: &KalmanModel) -> usize {
    qubits_for(model.n().max(model.m()).max(model.c()))
}

/// Data-structure encoding on `s` qubits, or the one-ancilla zero
/// encoding when `m` vanishes.
pub fn encode_operand(m: &ComplexMatrix, s: usize, label: &str) -> Result<BlockEncoding> {
    let be = if m.frobenius_norm() == 0.0 {
        pad_to_square(m, s)?;
        encode_zero(s)?.with_shape(m.shape())
    } else {
        encode_matrix_on(m, s)?
    };
    Ok(be.with_label(label))
}

impl EncodedModel {
    pub fn new(model: &KalmanModel) -> Result<Self> {
        let s = system_qubits_for(model);
        Ok(EncodedModel {
            s,
            a: encode_operand(&model.a, s, "A")?,
            b: encode_operand(&model.b, s, "B")?,
            h: encode_operand(&model.h, s, "H")?,
            q: encode_operand(&model.q, s, "Q")?,
            r: encode_operand(&model.r, s, "R")?,
        })
    }
}

fn labelled(be: BlockEncoding, label: &str, ledger: &mut NormLedger) -> BlockEncoding {
    ledger.record(label, &be);
    be.with_label(label)
}

/// `A X̂ + B U`.
pub fn q_predict_state(
    ledger: &mut NormLedger,
    be_a: &BlockEncoding,
    be_x: &BlockEncoding,
    be_b: &BlockEncoding,
    be_u: &BlockEncoding,
) -> Result<BlockEncoding> {
    let ax = labelled(be_multiply(be_a, be_x)?, "alpha_31", ledger);
    let bu = labelled(be_multiply(be_b, be_u)?, "alpha_32", ledger);
    Ok(labelled(be_add(&ax, &bu)?, "alpha_x_minus", ledger))
}

/// `A P Aᵀ + Q`.
pub fn q_predict_cov(
    ledger: &mut NormLedger,
    be_a: &BlockEncoding,
    be_p: &BlockEncoding,
    be_q: &BlockEncoding,
) -> Result<BlockEncoding> {
    let apa = be_multiply(&be_multiply(be_a, be_p)?, &be_adjoint(be_a)?)?;
    let apa = labelled(apa, "alpha_41", ledger);
    Ok(labelled(be_add(&apa, be_q)?, "alpha_p_minus", ledger))
}

/// `P⁻ Hᵀ (H P⁻ Hᵀ + R)⁻¹`, inverting a fresh encoding of the decoded
/// innovation covariance.
pub fn q_gain(
    ledger: &mut NormLedger,
    be_p_minus: &BlockEncoding,
    be_h: &BlockEncoding,
    be_r: &BlockEncoding,
    policy: KappaPolicy,
    eps_prime: f64,
    degree_cap: usize,
) -> Result<(BlockEncoding, GainInfo)> {
    let p_ht = labelled(
        be_multiply(be_p_minus, &be_adjoint(be_h)?)?,
        "alpha_51",
        ledger,
    );
    let h_p_ht = labelled(be_multiply(be_h, &p_ht)?, "alpha_52", ledger);
    let a_temp_be = labelled(be_add(&h_p_ht, be_r)?, "alpha_53", ledger);

    let a_temp = decode(&a_temp_be)?;
    let s = a_temp_be.system_qubits();
    let mut padded = pad_to_square(&a_temp, s)?;
    let sigma = a_temp.svd()?.sigma;
    let (max, min) = (sigma[0], sigma[sigma.len() - 1]);
    if max == 0.0 || min <= 1e-12 * max {
        return Err(Error::Singular(format!(
            "innovation covariance is singular (singular values {max:e} .. {min:e})"
        )));
    }
    // Give the padding the largest singular value so it neither shrinks the
    // smallest one nor changes the condition number.
    for i in a_temp.rows()..padded.rows() {
        padded[(i, i)] = C64::new(max, 0.0);
    }
    let re = encode_data_structure(&padded)?.with_shape(a_temp.shape());
    let re = labelled(re, "alpha_53_prime", ledger);
    let gamma = re.alpha() / a_temp_be.alpha();

    let kappa_measured = max / min;
    let block_min = min / re.alpha();
    let (kappa_used, kappa_rescaled) = match policy {
        KappaPolicy::Margin(m) => {
            if !(m.is_finite() && m >= 1.0) {
                return Err(Error::Domain(format!(
                    "kappa margin must be at least 1, got {m}"
                )));
            }
            let k = m * kappa_measured;
            if block_min < 1.0 / k {
                (m / block_min, true)
            } else {
                (k, false)
            }
        }
        KappaPolicy::Fixed(k) => (k, false),
    };
    let opts = InvertOptions {
        kappa: kappa_used,
        eps_prime,
        degree_cap,
    };
    let inv = be_invert_detailed(&re, &opts)?;
    let inv_be = labelled(inv.be, "alpha_54", ledger);
    let gain = labelled(be_multiply(&p_ht, &inv_be)?, "alpha_k", ledger);
    Ok((
        gain,
        GainInfo {
            a_temp,
            kappa_measured,
            kappa_used,
            kappa_rescaled,
            gamma,
            inversion: inv.info,
        },
    ))
}

/// `X̂⁻ + K (Z − H X̂⁻)`.
pub fn q_update_state(
    ledger: &mut NormLedger,
    be_x_minus: &BlockEncoding,
    be_k: &BlockEncoding,
    be_h: &BlockEncoding,
    be_z: &BlockEncoding,
) -> Result<BlockEncoding> {
    let neg_hx = labelled(
        be_negate(&be_multiply(be_h, be_x_minus)?)?,
        "alpha_61",
        ledger,
    );
    let innovation = labelled(be_add(be_z, &neg_hx)?, "alpha_62", ledger);
    let correction = labelled(be_multiply(be_k, &innovation)?, "alpha_63", ledger);
    Ok(labelled(
        be_add(be_x_minus, &correction)?,
        "alpha_x",
        ledger,
    ))
}

/// `P⁻ − K H P⁻`.
pub fn q_update_cov(
    ledger: &mut NormLedger,
    be_p_minus: &BlockEncoding,
    be_k: &BlockEncoding,
    be_h: &BlockEncoding,
) -> Result<BlockEncoding> {
    let khp = be_multiply(&be_multiply(be_k, be_h)?, be_p_minus)?;
    let khp = labelled(khp, "alpha_71", ledger);
    Ok(labelled(
        be_add(be_p_minus, &be_negate(&khp)?)?,
        "alpha_p",
        ledger,
    ))
}

/// Steps 3–7 for one filter iteration on the given encodings.
#[allow(clippy::too_many_arguments)]
pub fn q_step(
    ledger: &mut NormLedger,
    model: &EncodedModel,
    be_x: &BlockEncoding,
    be_p: &BlockEncoding,
    be_u: &BlockEncoding,
    be_z: &BlockEncoding,
    policy: KappaPolicy,
    eps_prime: f64,
    degree_cap: usize,
) -> Result<QuantumStep> {
    let x_minus = q_predict_state(ledger, &model.a, be_x, &model.b, be_u)?;
    let p_minus = q_predict_cov(ledger, &model.a, be_p, &model.q)?;
    let (gain, gain_info) = q_gain(
        ledger, &p_minus, &model.h, &model.r, policy, eps_prime, degree_cap,
    )?;
    let x = q_update_state(ledger, &x_minus, &gain, &model.h, be_z)?;
    let p = q_update_cov(ledger, &p_minus, &gain, &model.h)?;
    Ok(QuantumStep {
        x_minus,
        p_minus,
        gain,
        x,
        p,
        gain_info,
    })
}

fn real_column(m: &ComplexMatrix, j: usize) -> Vec<f64> {
    m.column(j).iter().map(|z| z.re).collect()
}

struct Sampler {
    plan: SamplingPlan,
    used: u64,
}

impl Sampler {
    fn cost(&self) -> u64 {
        self.plan.shots * self.plan.iterations
    }

    fn affordable(&self, columns: usize) -> bool {
        self.plan
            .budget
            .is_none_or(|b| self.used + self.cost() * columns as u64 <= b)
    }

    /// Estimate the first `cols` logical columns of `be`.
    fn read(
        &mut self,
        be: &BlockEncoding,
        cols: usize,
        target: &str,
        tag: u64,
    ) -> Result<(ComplexMatrix, Vec<ColumnSample>)> {
        let rows = be.shape().0;
        let mut est = ComplexMatrix::zeros(rows, cols);
        let mut samples = Vec::with_capacity(cols);
        for j in 0..cols {
            let amps = exact_amplitudes(be, j)?;
            let seed = derive_seed(self.plan.seed, (tag << 16) | j as u64);
            let report = sample_counts(&amps, self.plan.shots, self.plan.iterations, seed)?;
            self.used += self.cost();
            let targets: Vec<usize> = (0..rows).collect();
            let entries = estimate_entries(&report, be.alpha(), &targets, Some(&amps));
            for (i, e) in entries.iter().enumerate() {
                est[(i, j)] = C64::new(e.value(), 0.0);
            }
            samples.push(ColumnSample {
                target: target.to_string(),
                column: j,
                alpha: be.alpha(),
                report,
                estimates: entries.iter().map(|e| e.value()).collect(),
                std_errs: entries.iter().map(|e| e.std_err).collect(),
                exact: targets.iter().map(|&i| be.alpha() * amps[i].re).collect(),
            });
        }
        Ok((est, samples))
    }
}

fn vector_arg<'a>(list: &'a [Vec<f64>], k: usize, name: &str, len: usize) -> Result<&'a [f64]> {
    let v = list.get(k).ok_or_else(|| {
        Error::Dimension(format!(
            "{name} list has {} entries, step {} needs one more",
            list.len(),
            k + 1
        ))
    })?;
    if v.len() != len {
        return Err(Error::Dimension(format!(
            "{name}[{k}] has {} entries, expected {len}",
            v.len()
        )));
    }
    Ok(v)
}

/// Run `steps` iterations from `init`. Controls `u_{k−1}` and measurements
/// `z_k` are taken from `controls[k−1]` and `measurements[k−1]`.
pub fn q_filter_run(
    model: &KalmanModel,
    init: &FilterState,
    controls: &[Vec<f64>],
    measurements: &[Vec<f64>],
    steps: usize,
    opts: &QuantumOptions,
) -> Result<FilterRun> {
    if init.x_hat.rows() != model.n() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, model has {}",
            init.x_hat.rows(),
            model.n()
        )));
    }
    if controls.len() < steps || measurements.len() < steps {
        return Err(Error::Dimension(format!(
            "{steps} steps need {steps} controls and measurements, got {} and {}",
            controls.len(),
            measurements.len()
        )));
    }
    let enc = EncodedModel::new(model)?;
    let s = enc.s;
    let n = model.n();
    let mut ledger = NormLedger::new();
    let mut run = FilterRun {
        system_qubits: s,
        states: vec![init.clone()],
        steps: Vec::new(),
        ledger: NormLedger::new(),
        exhausted_at: None,
    };
    let mut sampler = match opts.readout {
        ReadoutMode::Sampled(plan) => {
            if plan.shots == 0 || plan.iterations == 0 {
                return Err(Error::Domain(
                    "shots and iterations must be positive".into(),
                ));
            }
            Some(Sampler { plan, used: 0 })
        }
        ReadoutMode::Exact => None,
    };

    let mut be_x = encode_operand(&init.x_hat, s, "X")?;
    let mut be_p = encode_operand(&init.p, s, "P")?;
    for k in 1..=steps {
        let step_result = (|| -> Result<Option<StepRecord>> {
            ledger.begin_step(k);
            let u = vector_arg(controls, k - 1, "controls", model.c())?;
            let z = vector_arg(measurements, k - 1, "measurements", model.m())?;
            let be_u = encode_operand(&ComplexMatrix::column_vector(u)?, s, "U")?;
            let be_z = encode_operand(&ComplexMatrix::column_vector(z)?, s, "Z")?;
            let st = q_step(
                &mut ledger,
                &enc,
                &be_x,
                &be_p,
                &be_u,
                &be_z,
                opts.kappa,
                opts.eps_prime,
                opts.degree_cap,
            )?;
            let x_exact = decode_columns(&st.x, 1)?;
            let p_exact = decode_columns(&st.p, n)?;
            let (x_read, p_read, samples) = match sampler.as_mut() {
                None => (x_exact.clone(), p_exact.clone(), Vec::new()),
                Some(smp) => {
                    if !smp.affordable(1 + n) {
                        return Ok(None);
                    }
                    let (x_est, mut xs) = smp.read(&st.x, 1, "x_hat", (k as u64) << 8)?;
                    let (p_est, ps) = smp.read(&st.p, n, "P", ((k as u64) << 8) | 1)?;
                    xs.extend(ps);
                    (x_est, p_est, xs)
                }
            };
            run.states
                .push(FilterState::new(x_read.clone(), p_read.clone(), k)?);
            be_x = encode_operand(&x_read, s, "X")?;
            be_p = encode_operand(&p_read, s, "P")?;
            Ok(Some(StepRecord {
                k,
                gain: st.gain_info,
                x_stats: st.x.op().stats(),
                p_stats: st.p.op().stats(),
                x_exact: real_column(&x_exact, 0),
                p_exact,
                samples,
            }))
        })();
        match step_result.map_err(|e| e.at_step(k))? {
            Some(rec) => run.steps.push(rec),
            None => {
                run.exhausted_at = Some(k);
                break;
            }
        }
    }
    run.ledger = ledger;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_operand_uses_dilation() {
        let be = encode_operand(&ComplexMatrix::zeros(2, 1), 1, "B").unwrap();
        assert_eq!(be.shape(), (2, 1));
        assert!(decode(&be).unwrap().max_abs() < 1e-15);
        assert!(encode_operand(&ComplexMatrix::zeros(3, 1), 1, "B").is_err());
    }

    #[test]
    fn run_checks_list_lengths() {
        let model = KalmanModel::new(
            ComplexMatrix::identity(2),
            ComplexMatrix::column_vector(&[1.0, 0.0]).unwrap(),
            ComplexMatrix::identity(2),
            ComplexMatrix::identity(2),
            ComplexMatrix::identity(2),
        )
        .unwrap();
        let init = FilterState::new(
            ComplexMatrix::column_vector(&[1.0, 1.0]).unwrap(),
            ComplexMatrix::identity(2),
            0,
        )
        .unwrap();
        let opts = QuantumOptions::default();
        assert!(matches!(
            q_filter_run(&model, &init, &[], &[], 1, &opts),
            Err(Error::Dimension(_))
        ));
        let run = q_filter_run(&model, &init, &[], &[], 0, &opts).unwrap();
        assert_eq!(run.states.len(), 1);
        let bad = q_filter_run(
            &model,
            &init,
            &[vec![1.0, 2.0]],
            &[vec![0.0, 0.0]],
            1,
            &opts,
        );
        match bad {
            Err(e) => assert!(matches!(e, Error::AtStep { step: 1, .. }) && e.exit_code() == 3),
            Ok(_) => panic!("control of the wrong length accepted"),
        }
    }
}
