//! Statevector simulation of block-encoded linear algebra.
//!
//! The crate builds block encodings of small dense matrices, combines them
//! with sums, products and adjoints, inverts them with a quantum singular
//! value transformation, and runs a Kalman filter entirely on encoded
//! matrices. Everything is checked against a classical filter.

pub mod arith;
pub mod config;
pub mod encoding;
pub mod error;
pub mod kalman;
pub mod kernel;
pub mod linalg;
pub mod operator;
pub mod qsvt;
pub mod report;
pub mod sampling;

pub use arith::{be_add, be_adjoint, be_multiply, be_negate, be_sub, LcuCombiner};
pub use encoding::{
    decode, decode_columns, encode_data_structure, encode_matrix, encode_matrix_on,
    encode_svd_dilation, encode_zero, pad_to_square, qubits_for, validate, BlockEncoding,
    ValidationReport,
};
pub use error::{Error, Result};
pub use kernel::ExecMode;
pub use linalg::{ComplexMatrix, Svd, C64};
pub use operator::{OpNode, OpStats, QOperator, StateVector, DENSE_THRESHOLD};
