//! Simulated measurement of block-encoded states.
//!
//! Shots are drawn from `|amplitude|²` with Walker's alias method. Each
//! sampling iteration owns an independent ChaCha8 stream: the generator is
//! seeded with the run seed and the stream id is set to the iteration
//! number, so iteration `i` draws the same shots no matter which thread runs
//! it or in what order. Per-iteration histograms are merged by integer
//! addition, which makes the pooled counts independent of merge order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::operator::StateVector;

/// Name of the generator recorded in reports.
pub const RNG_NAME: &str = "ChaCha8 (seed_from_u64, stream = iteration)";

/// Pooled histogram of a sampling run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub shots: u64,
    pub iterations: u64,
    pub seed: u64,
    /// Nonzero counts as `(basis index, count)`, ascending by index.
    pub counts: Vec<(usize, u64)>,
}

/// Sign attached to a sampled magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Positive,
    Negative,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryEstimate {
    pub index: usize,
    pub count: u64,
    /// `α · sqrt(count / total)`.
    pub magnitude: f64,
    /// Delta-method standard error of `magnitude`.
    pub std_err: f64,
    pub sign: Sign,
    /// Set when the index was never observed; `magnitude` is then 0 and
    /// `std_err` is the one-count resolution `α/√N`.
    pub unobserved: bool,
}

impl SampleReport {
    pub fn total(&self) -> u64 {
        self.shots * self.iterations
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|k| self.counts[k].1)
            .unwrap_or(0)
    }

    /// `basis_index,count` with a header row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["basis_index", "count"]).map_err(csv_err)?;
        for &(i, c) in &self.counts {
            w.write_record([i.to_string(), c.to_string()])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

impl EntryEstimate {
    /// Magnitude with the known sign applied (unsigned when unknown).
    pub fn value(&self) -> f64 {
        match self.sign {
            Sign::Negative => -self.magnitude,
            _ => self.magnitude,
        }
    }
}

/// All amplitudes of `U |0^a⟩|j⟩`.
pub fn exact_amplitudes(be: &BlockEncoding, column: usize) -> Result<Vec<C64>> {
    if column >= 1 << be.system_qubits() {
        return Err(Error::Dimension(format!(
            "column {column} outside a {}-qubit system",
            be.system_qubits()
        )));
    }
    let psi = StateVector::basis(be.total_qubits(), column)?;
    Ok(be.op().apply(&psi)?.into_amplitudes())
}

/// Derive an independent seed for a labelled sub-experiment (SplitMix64
/// finalizer of `base + tag`).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw `shots` samples in each of `iterations` independent iterations and
/// pool the counts.
pub fn sample_counts(amps: &[C64], shots: u64, iterations: u64, seed: u64) -> Result<SampleReport> {
    if shots == 0 || iterations == 0 {
        return Err(Error::Domain(
            "shots and iterations must be positive".into(),
        ));
    }
    let probs: Vec<f64> = amps.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!(
            "amplitudes are not normalized (norm² = {total})"
        )));
    }
    // The alias table only needs the support; map back afterwards.
    let support: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    let weights: Vec<f64> = support.iter().map(|&i| probs[i]).collect();
    let dist = WeightedAliasIndex::new(weights)
        .map_err(|e| Error::Numerical(format!("alias table: {e}")))?;

    let one = |it: u64| -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(it);
        let mut hist = vec![0u64; support.len()];
        for _ in 0..shots {
            hist[dist.sample(&mut rng)] += 1;
        }
        hist
    };
    let add = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    #[cfg(feature = "parallel")]
    let pooled = (0..iterations)
        .into_par_iter()
        .map(one)
        .reduce(|| vec![0u64; support.len()], add);
    #[cfg(not(feature = "parallel"))]
    let pooled = (0..iterations)
        .map(one)
        .fold(vec![0u64; support.len()], add);

    let counts = support
        .iter()
        .zip(pooled)
        .filter(|&(_, c)| c > 0)
        .map(|(&i, c)| (i, c))
        .collect();
    Ok(SampleReport {
        shots,
        iterations,
        seed,
        counts,
    })
}

fn estimate(index: usize, count: u64, total: f64, alpha: f64, sign: Sign) -> EntryEstimate {
    let p = count as f64 / total;
    let unobserved = count == 0;
    let std_err = if unobserved {
        alpha / total.sqrt()
    } else {
        alpha * ((1.0 - p).max(0.0) / (4.0 * total)).sqrt()
    };
    EntryEstimate {
        index,
        count,
        magnitude: alpha * p.sqrt(),
        std_err,
        sign,
        unobserved,
    }
}

/// Sign of a real-valued amplitude (unknown when it is not real).
pub fn sign_of(z: C64) -> Sign {
    if z.im.abs() > 1e-9 * z.norm().max(1e-300) && z.im.abs() > 1e-12 {
        Sign::Unknown
    } else if z.re < 0.0 {
        Sign::Negative
    } else {
        Sign::Positive
    }
}

/// `α · sqrt(count/N)` at each target index. Signs are taken from
/// `exact` when given, else reported as unknown.
pub fn estimate_entries(
    report: &SampleReport,
    alpha: f64,
    targets: &[usize],
    exact: Option<&[C64]>,
) -> Vec<EntryEstimate> {
    let total = report.total() as f64;
    targets
        .iter()
        .map(|&i| {
            let sign = exact
                .and_then(|a| a.get(i))
                .map_or(Sign::Unknown, |&z| sign_of(z));
            estimate(i, report.count(i), total, alpha, sign)
        })
        .collect()
}

/// Estimates computed from the exact probabilities, i.e. the infinite-shot
/// limit of [`estimate_entries`].
pub fn estimate_from_amplitudes(amps: &[C64], alpha: f64, targets: &[usize]) -> Vec<EntryEstimate> {
    targets
        .iter()
        .map(|&i| {
            let z = amps[i];
            EntryEstimate {
                index: i,
                count: 0,
                magnitude: alpha * z.norm(),
                std_err: 0.0,
                sign: sign_of(z),
                unobserved: false,
            }
        })
        .collect()
}
