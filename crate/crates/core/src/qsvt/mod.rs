//! Polynomial approximation of `1/x`, phase factors, and the circuit that
//! applies a polynomial to the singular values of a block encoding.

pub mod circuit;
pub mod phases;
pub mod poly;

pub use circuit::{
    be_invert, be_invert_detailed, qsvt_apply, Inversion, InversionInfo, InvertOptions,
};
pub use phases::{
    node_residual, qsp_response, solve_phase_factors, solve_phase_factors_with, Convention,
    PhaseFactors,
};
pub use poly::{
    degree_ladder, eval_cheb, inverse_poly, inverse_poly_capped, ChebPoly, DEFAULT_DEGREE_CAP,
};
