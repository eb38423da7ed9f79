//! Run reports and their CSV exports.

use serde::Serialize;

use crate::config::{Readout, RunConfig};
use crate::error::{Error, Result};
use crate::kalman::{classical_step, q_filter_run, FilterState, LedgerEntry, NormLedger};
use crate::linalg::ComplexMatrix;
use crate::operator::OpStats;
use crate::sampling::{SampleReport, RNG_NAME};

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x_quantum: Vec<f64>,
    pub x_classical: Vec<f64>,
    pub p_quantum: Vec<Vec<f64>>,
    pub p_classical: Vec<Vec<f64>>,
    /// `max_i |x_quantum[i] − x_classical[i]|`.
    pub x_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QsvtRow {
    pub step: usize,
    pub kappa_measured: f64,
    pub kappa_used: f64,
    pub kappa_rescaled: bool,
    pub gamma: f64,
    pub degree: usize,
    pub scale: f64,
    pub eps_prime: f64,
    pub solver_residual: f64,
    pub solver_iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OperationRow {
    pub step: usize,
    pub x_hat: OpStats,
    pub p: OpStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnSummary {
    pub step: usize,
    pub target: String,
    pub column: usize,
    pub alpha: f64,
    pub estimates: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub exact: Vec<f64>,
    /// `max_i |estimate − exact|`.
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplingSummary {
    pub rng: String,
    pub seed: u64,
    pub shots: u64,
    pub iterations: u64,
    pub shots_used: u64,
    /// Largest spread over the state estimates.
    pub x_hat_spread: f64,
    /// Whether that spread is at most 0.01.
    pub x_hat_within_0_01: bool,
    pub columns: Vec<ColumnSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub step: usize,
    pub target: String,
    pub column: usize,
    pub report: SampleReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub steps_requested: usize,
    pub system_qubits: usize,
    pub readout: Readout,
    pub trajectory: Vec<TrajectoryRow>,
    pub ledger: Vec<LedgerEntry>,
    pub qsvt: Vec<QsvtRow>,
    pub operations: Vec<OperationRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSummary>,
    /// Step at which the shot budget ran out.
    pub exhausted_at: Option<usize>,
    #[serde(skip)]
    pub histograms: Vec<Histogram>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsvKind {
    Trajectory,
    Ledger,
    Histogram,
}

fn real_rows(m: &ComplexMatrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| z.re).collect())
        .collect()
}

/// Run the block-encoded filter and the classical reference side by side.
pub fn run_report(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = cfg.model()?;
    let init = cfg.init()?;
    let opts = cfg.options();
    let run = q_filter_run(
        &model,
        &init,
        &cfg.controls,
        &cfg.measurements,
        cfg.steps,
        &opts,
    )?;

    let mut classical: Vec<FilterState> = vec![init];
    for k in 1..run.states.len() {
        let next = classical_step(
            &model,
            &classical[k - 1],
            &cfg.controls[k - 1],
            &cfg.measurements[k - 1],
        )
        .map_err(|e| e.at_step(k))?;
        classical.push(next);
    }

    let trajectory = run
        .states
        .iter()
        .zip(&classical)
        .map(|(q, c)| {
            let (xq, xc) = (q.x_real(), c.x_real());
            let x_deviation = xq
                .iter()
                .zip(&xc)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            TrajectoryRow {
                step: q.k,
                x_quantum: xq,
                x_classical: xc,
                p_quantum: real_rows(&q.p),
                p_classical: real_rows(&c.p),
                x_deviation,
            }
        })
        .collect();

    let qsvt = run
        .steps
        .iter()
        .map(|s| QsvtRow {
            step: s.k,
            kappa_measured: s.gain.kappa_measured,
            kappa_used: s.gain.kappa_used,
            kappa_rescaled: s.gain.kappa_rescaled,
            gamma: s.gain.gamma,
            degree: s.gain.inversion.degree,
            scale: s.gain.inversion.scale,
            eps_prime: s.gain.inversion.eps_prime,
            solver_residual: s.gain.inversion.solver_residual,
            solver_iterations: s.gain.inversion.solver_iterations,
        })
        .collect();
    let operations = run
        .steps
        .iter()
        .map(|s| OperationRow {
            step: s.k,
            x_hat: s.x_stats,
            p: s.p_stats,
        })
        .collect();

    let mut histograms = Vec::new();
    let mut columns = Vec::new();
    for step in &run.steps {
        for c in &step.samples {
            let spread = c
                .estimates
                .iter()
                .zip(&c.exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            columns.push(ColumnSummary {
                step: step.k,
                target: c.target.clone(),
                column: c.column,
                alpha: c.alpha,
                estimates: c.estimates.clone(),
                std_errs: c.std_errs.clone(),
                exact: c.exact.clone(),
                spread,
            });
            histograms.push(Histogram {
                step: step.k,
                target: c.target.clone(),
                column: c.column,
                report: c.report.clone(),
            });
        }
    }
    let sampling = (cfg.readout_mode == Readout::Sampled).then(|| {
        let x_hat_spread = columns
            .iter()
            .filter(|c| c.target == "x_hat")
            .map(|c| c.spread)
            .fold(0.0, f64::max);
        SamplingSummary {
            rng: RNG_NAME.to_string(),
            seed: cfg.seed,
            shots: cfg.shots,
            iterations: cfg.iterations,
            shots_used: histograms.iter().map(|h| h.report.total()).sum(),
            x_hat_spread,
            x_hat_within_0_01: x_hat_spread <= 0.01,
            columns,
        }
    });

    Ok(RunReport {
        steps_requested: cfg.steps,
        system_qubits: run.system_qubits,
        readout: cfg.readout_mode,
        trajectory,
        ledger: run.ledger.entries,
        qsvt,
        operations,
        sampling,
        exhausted_at: run.exhausted_at,
        histograms,
    })
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Histogram of the most recent state readout.
    pub fn last_state_histogram(&self) -> Option<&Histogram> {
        self.histograms.iter().rev().find(|h| h.target == "x_hat")
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn trajectory_csv(report: &RunReport) -> Result<String> {
    let n = report.trajectory.first().map_or(0, |r| r.x_quantum.len());
    let mut header = vec!["step".to_string()];
    for prefix in ["x_hat_q", "x_hat_c", "P_q_diag", "P_c_diag"] {
        header.extend((0..n).map(|i| format!("{prefix}{i}")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_io)?;
    for row in &report.trajectory {
        let mut rec = vec![row.step.to_string()];
        let diag = |p: &Vec<Vec<f64>>| (0..n).map(|i| p[i][i]).collect::<Vec<_>>();
        for v in [
            &row.x_quantum,
            &row.x_classical,
            &diag(&row.p_quantum),
            &diag(&row.p_classical),
        ] {
            rec.extend(v.iter().map(|x| format!("{x:.12}")));
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Headered CSV for one export kind. The histogram export is the last state
/// readout and only exists for sampled runs.
pub fn emit_csv(report: &RunReport, kind: CsvKind) -> Result<String> {
    match kind {
        CsvKind::Trajectory => trajectory_csv(report),
        CsvKind::Ledger => NormLedger::from_entries(report.ledger.clone()).to_csv(),
        CsvKind::Histogram => report
            .last_state_histogram()
            .ok_or_else(|| Error::Precondition("no histogram: the run used exact readout".into()))?
            .report
            .to_csv(),
    }
}
