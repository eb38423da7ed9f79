//! Block encodings: construction, decoding and validation.
//!
//! A [`BlockEncoding`] holds a unitary `U` on `a + s` qubits and a scale `α`
//! such that `α (⟨0^a| ⊗ I) U (|0^a⟩ ⊗ I)` approximates a matrix to within
//! `ε` in spectral norm. Ancilla wires come first (most significant), so
//! the encoded block is the top-left `2^s x 2^s` corner of `U`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal, from_columns, ComplexMatrix, C64, ONE, ZERO};
use crate::operator::QOperator;

/// Samples used by [`validate`] for the operator unitarity check.
const UNITARITY_SAMPLES: usize = 16;

#[derive(Clone, Debug)]
pub struct BlockEncoding {
    op: QOperator,
    alpha: f64,
    ancillas: usize,
    system_qubits: usize,
    eps: f64,
    /// Logical (pre-padding) shape of the encoded matrix.
    shape: (usize, usize),
    label: String,
}

/// Outcome of [`validate`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    /// `‖expected − decode(be)‖₂`.
    pub deviation: f64,
    /// Largest `‖U†U v − v‖₂` over random states.
    pub unitarity_residual: f64,
    pub eps: f64,
    /// `deviation ≤ eps + 1e-9`.
    pub within_bound: bool,
}

impl BlockEncoding {
    /// Assemble an encoding from its parts. `op` must act on
    /// `ancillas + system_qubits` qubits and `shape` must fit in `2^s`.
    pub fn new(
        op: QOperator,
        alpha: f64,
        ancillas: usize,
        system_qubits: usize,
        eps: f64,
        shape: (usize, usize),
    ) -> Result<Self> {
        if op.qubits() != ancillas + system_qubits {
            return Err(Error::Dimension(format!(
                "operator on {} qubits cannot carry {ancillas} ancillas and {system_qubits} system qubits",
                op.qubits()
            )));
        }
        if system_qubits == 0 {
            return Err(Error::Dimension(
                "at least one system qubit is required".into(),
            ));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::Domain(format!(
                "eps must be nonnegative and finite, got {eps}"
            )));
        }
        let side = 1 << system_qubits;
        if shape.0 == 0 || shape.1 == 0 || shape.0 > side || shape.1 > side {
            return Err(Error::Dimension(format!(
                "shape {}x{} does not fit {system_qubits} system qubits",
                shape.0, shape.1
            )));
        }
        Ok(BlockEncoding {
            op,
            alpha,
            ancillas,
            system_qubits,
            eps,
            shape,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn with_shape(mut self, shape: (usize, usize)) -> Self {
        self.shape = shape;
        self
    }

    pub fn op(&self) -> &QOperator {
        &self.op
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn system_qubits(&self) -> usize {
        self.system_qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.ancillas + self.system_qubits
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Unscaled `2^s x 2^s` block `⟨0^a|U|0^a⟩`.
    pub fn block(&self) -> Result<ComplexMatrix> {
        let idx: Vec<usize> = (0..1 << self.system_qubits).collect();
        self.op.materialize_block(&idx, &idx)
    }

    /// Unscaled first `cols` columns of the block (all `2^s` rows).
    pub fn block_columns(&self, cols: usize) -> Result<ComplexMatrix> {
        let rows: Vec<usize> = (0..1 << self.system_qubits).collect();
        let cols: Vec<usize> = (0..cols).collect();
        self.op.materialize_block(&rows, &cols)
    }
}

/// Smallest `s ≥ 1` with `2^s ≥ n`.
pub fn qubits_for(n: usize) -> usize {
    (n.max(2) - 1).ilog2() as usize + 1
}

/// Place `m` in the top-left corner of a `2^s x 2^s` zero matrix.
pub fn pad_to_square(m: &ComplexMatrix, s: usize) -> Result<ComplexMatrix> {
    let side = 1usize
        .checked_shl(s as u32)
        .ok_or_else(|| Error::Dimension(format!("{s} qubits is too many")))?;
    if m.rows() > side || m.cols() > side {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not fit in {side}x{side}",
            m.rows(),
            m.cols()
        )));
    }
    m.embed(side, side)
}

/// Encoding with `α = ‖M‖_F` and `s` ancillas built from a row-norm state
/// preparation and per-row state preparations.
///
/// `M` must be square with side `2^s`. The operator is `U_R† (N ⊗ I)` where
/// `N|0⟩ = Σ_i (‖M_i‖/‖M‖_F)|i⟩` and `U_R|0⟩|r⟩ = |r⟩ Σ_j (M̄_rj/‖M_r‖)|j⟩`,
/// which gives `⟨0,r|U|0,c⟩ = M_rc/‖M‖_F`.
pub fn encode_data_structure(m: &ComplexMatrix) -> Result<BlockEncoding> {
    if !m.is_square() || !m.rows().is_power_of_two() || m.rows() < 2 {
        return Err(Error::Dimension(format!(
            "data-structure encoding needs a 2^s x 2^s matrix with s >= 1, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::Domain("matrix entries must be finite".into()));
    }
    let side = m.rows();
    let s = side.trailing_zeros() as usize;
    let frob = m.frobenius_norm();
    if frob == 0.0 {
        return Err(Error::Degenerate("cannot encode the zero matrix".into()));
    }

    let weights: Vec<C64> = (0..side)
        .map(|i| C64::new(m.row_norm(i) / frob, 0.0))
        .collect();
    let n = from_columns(&complete_orthonormal(&[weights], side)?);

    let full = side * side;
    let rows: Vec<Vec<C64>> = (0..side)
        .map(|r| {
            let mut col = vec![ZERO; full];
            let norm = m.row_norm(r);
            if norm == 0.0 {
                col[r * side] = ONE;
            } else {
                for j in 0..side {
                    col[r * side + j] = m[(r, j)].conj() / norm;
                }
            }
            col
        })
        .collect();
    let u_r = from_columns(&complete_orthonormal(&rows, full)?);

    let row_weights = QOperator::extend(QOperator::dense(n)?, 2 * s, (0..s).collect())?;
    let op = QOperator::product(vec![QOperator::dense(u_r)?.adjoint(), row_weights])?;
    BlockEncoding::new(op, frob, s, s, 0.0, (side, side))
}

/// Pad `m` to the smallest power-of-two square (at least 2x2) and encode it,
/// remembering the original shape for [`decode`].
pub fn encode_matrix(m: &ComplexMatrix) -> Result<BlockEncoding> {
    encode_matrix_on(m, qubits_for(m.rows().max(m.cols())))
}

/// As [`encode_matrix`] with an explicit system register size.
pub fn encode_matrix_on(m: &ComplexMatrix, s: usize) -> Result<BlockEncoding> {
    let padded = pad_to_square(m, s)?;
    Ok(encode_data_structure(&padded)?.with_shape(m.shape()))
}

/// One-ancilla encoding of a contraction `block` (spectral norm ≤ 1) with
/// scale `alpha`, so that the encoding decodes to `alpha · block`.
///
/// With `block = W Σ V†` the unitary is
/// `(W ⊕ I) · [[Σ, √(I−Σ²)], [√(I−Σ²), −Σ]] · (V† ⊕ I)`.
pub fn encode_svd_dilation(block: &ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    if !block.is_square() || !block.rows().is_power_of_two() || block.rows() < 2 {
        return Err(Error::Dimension(format!(
            "dilation needs a 2^s x 2^s matrix with s >= 1, got {}x{}",
            block.rows(),
            block.cols()
        )));
    }
    let side = block.rows();
    let s = side.trailing_zeros() as usize;
    let svd = block.svd()?;
    let top = svd.sigma.first().copied().unwrap_or(0.0);
    if top > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "spectral norm {top} exceeds 1; rescale and carry the factor in alpha"
        )));
    }
    let sigma: Vec<f64> = svd.sigma.iter().map(|x| x.min(1.0)).collect();

    let outer = |m: &ComplexMatrix| {
        ComplexMatrix::from_fn(2 * side, 2 * side, |i, j| match (i < side, j < side) {
            (true, true) => m[(i, j)],
            (false, false) if i == j => ONE,
            _ => ZERO,
        })
    };
    let middle = ComplexMatrix::from_fn(2 * side, 2 * side, |i, j| {
        let (bi, bj) = (i / side, j / side);
        let (ri, rj) = (i % side, j % side);
        if ri != rj {
            return ZERO;
        }
        let x = sigma[ri];
        let c = (1.0 - x * x).max(0.0).sqrt();
        C64::new(
            match (bi, bj) {
                (0, 0) => x,
                (1, 1) => -x,
                _ => c,
            },
            0.0,
        )
    });
    let op = QOperator::product(vec![
        QOperator::dense(outer(&svd.w))?,
        QOperator::dense(middle)?,
        QOperator::dense(outer(&svd.v_adjoint))?,
    ])?;
    BlockEncoding::new(op, alpha, 1, s, 0.0, (side, side))
}

/// Encoding of the `2^s x 2^s` zero matrix with `α = 1` and one ancilla.
pub fn encode_zero(s: usize) -> Result<BlockEncoding> {
    encode_svd_dilation(&ComplexMatrix::zeros(1 << s, 1 << s), 1.0)
}

/// `α ⟨0^a|U|0^a⟩`, cropped to the encoding's logical shape.
pub fn decode(be: &BlockEncoding) -> Result<ComplexMatrix> {
    let (r, c) = be.shape();
    be.block()?.scale_real(be.alpha()).crop(r, c)
}

/// Like [`decode`] but only materializes the first `cols` columns.
pub fn decode_columns(be: &BlockEncoding, cols: usize) -> Result<ComplexMatrix> {
    let (r, c) = be.shape();
    let cols = cols.min(c);
    be.block_columns(cols)?.scale_real(be.alpha()).crop(r, cols)
}

/// Compare a decoded encoding against the matrix it claims to hold.
pub fn validate(be: &BlockEncoding, expected: &ComplexMatrix) -> Result<ValidationReport> {
    let decoded = decode(be)?;
    let deviation = expected.try_sub(&decoded)?.spectral_norm()?;
    let unitarity_residual = be.op().unitarity_residual(UNITARITY_SAMPLES, 0x5eed)?;
    Ok(ValidationReport {
        deviation,
        unitarity_residual,
        eps: be.eps(),
        within_bound: deviation <= be.eps() + 1e-9,
    })
}
