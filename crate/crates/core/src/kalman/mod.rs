//! Classical and block-encoded Kalman filtering.

pub mod classical;
pub mod ledger;
pub mod quantum;

pub use classical::{
    classical_step, classical_step_detailed, ClassicalStep, FilterState, KalmanModel,
};
pub use ledger::{LedgerEntry, NormLedger};
pub use quantum::{
    encode_operand, q_filter_run, q_gain, q_predict_cov, q_predict_state, q_step, q_update_cov,
    q_update_state, system_qubits_for, ColumnSample, EncodedModel, FilterRun, GainInfo,
    KappaPolicy, QuantumOptions, QuantumStep, ReadoutMode, SamplingPlan, StepRecord,
};
