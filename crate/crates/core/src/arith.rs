//! Sums, products, adjoints and negations of block encodings.

use crate::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::operator::QOperator;

/// One-qubit state preparation for a weighted pair of unitaries.
///
/// `V = [[√α, √β], [√β, −√α]] / √(α+β)`, real symmetric and self-inverse.
#[derive(Clone, Debug)]
pub struct LcuCombiner {
    pub alpha: f64,
    pub beta: f64,
    pub v: QOperator,
}

impl LcuCombiner {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "LCU weights must be positive and finite, got {alpha} and {beta}"
            )));
        }
        let norm = (alpha + beta).sqrt();
        let (a, b) = (alpha.sqrt() / norm, beta.sqrt() / norm);
        let v = QOperator::dense(ComplexMatrix::from_real_rows(&[[a, b], [b, -a]])?)?;
        Ok(LcuCombiner { alpha, beta, v })
    }
}

fn same_system(a: &BlockEncoding, b: &BlockEncoding, what: &str) -> Result<usize> {
    if a.system_qubits() != b.system_qubits() {
        return Err(Error::Dimension(format!(
            "{what}: encodings on {} and {} system qubits",
            a.system_qubits(),
            b.system_qubits()
        )));
    }
    Ok(a.system_qubits())
}

/// Encoding of `A + B` by a linear combination of unitaries.
///
/// Layout: wire 0 is the combiner qubit, then `max(a_A, a_B)` shared
/// ancilla wires, then the system. A narrower encoding uses the ancilla
/// wires nearest the system and leaves the rest idle.
pub fn be_add(x: &BlockEncoding, y: &BlockEncoding) -> Result<BlockEncoding> {
    let s = same_system(x, y, "addition")?;
    let a = x.ancillas().max(y.ancillas());
    let inner = a + s;
    let place = |be: &BlockEncoding| {
        let wires = (a - be.ancillas()..inner).collect();
        QOperator::extend(be.op().clone(), inner, wires)
    };
    let lcu = LcuCombiner::new(x.alpha(), y.alpha())?;
    let total = inner + 1;
    let v = QOperator::extend(lcu.v.clone(), total, vec![0])?;
    let select = QOperator::select(place(x)?, place(y)?)?;
    let op = QOperator::product(vec![v.adjoint(), select, v])?;
    let shape = (x.shape().0.max(y.shape().0), x.shape().1.max(y.shape().1));
    Ok(BlockEncoding::new(
        op,
        x.alpha() + y.alpha(),
        a + 1,
        s,
        x.eps() + y.eps(),
        shape,
    )?
    .with_label(format!("({} + {})", x.label(), y.label())))
}

/// Encoding of `A B`: `A`'s ancillas first, then `B`'s, then the system.
pub fn be_multiply(x: &BlockEncoding, y: &BlockEncoding) -> Result<BlockEncoding> {
    let s = same_system(x, y, "multiplication")?;
    if x.shape().1 != y.shape().0 {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            x.shape().0,
            x.shape().1,
            y.shape().0,
            y.shape().1
        )));
    }
    let (ax, ay) = (x.ancillas(), y.ancillas());
    let total = ax + ay + s;
    let sys = ax + ay..total;
    let wx = (0..ax).chain(sys.clone()).collect();
    let wy = (ax..ax + ay).chain(sys).collect();
    let op = QOperator::product(vec![
        QOperator::extend(x.op().clone(), total, wx)?,
        QOperator::extend(y.op().clone(), total, wy)?,
    ])?;
    let eps = x.alpha() * y.eps() + y.alpha() * x.eps();
    Ok(BlockEncoding::new(
        op,
        x.alpha() * y.alpha(),
        ax + ay,
        s,
        eps,
        (x.shape().0, y.shape().1),
    )?
    .with_label(format!("{} {}", x.label(), y.label())))
}

/// Encoding of `A†` from the adjoint unitary.
pub fn be_adjoint(x: &BlockEncoding) -> Result<BlockEncoding> {
    let (r, c) = x.shape();
    Ok(BlockEncoding::new(
        x.op().adjoint(),
        x.alpha(),
        x.ancillas(),
        x.system_qubits(),
        x.eps(),
        (c, r),
    )?
    .with_label(format!("{}^H", x.label())))
}

/// Encoding of `−A` by a global `−1` phase.
pub fn be_negate(x: &BlockEncoding) -> Result<BlockEncoding> {
    let minus = QOperator::dense(ComplexMatrix::identity(2).scale_real(-1.0))?;
    let n = x.total_qubits();
    let op = QOperator::product(vec![QOperator::extend(minus, n, vec![0])?, x.op().clone()])?;
    Ok(BlockEncoding::new(
        op,
        x.alpha(),
        x.ancillas(),
        x.system_qubits(),
        x.eps(),
        x.shape(),
    )?
    .with_label(format!("-{}", x.label())))
}

/// `A − B` as `A + (−B)`.
pub fn be_sub(x: &BlockEncoding, y: &BlockEncoding) -> Result<BlockEncoding> {
    be_add(x, &be_negate(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{decode, encode_data_structure, encode_matrix, encode_zero};

    fn real(rows: &[[f64; 2]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn a() -> ComplexMatrix {
        real(&[[1.0, -1.0], [1.0, 1.0]])
    }

    fn close(x: &ComplexMatrix, y: &ComplexMatrix, tol: f64) -> bool {
        (x - y).max_abs() <= tol
    }

    #[test]
    fn combiner_first_column() {
        let c = LcuCombiner::new(2.0, 3.0).unwrap();
        let d = c.v.to_dense().unwrap();
        assert!((d[(0, 0)].re - (2.0f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!((d[(1, 0)].re - (3.0f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!(LcuCombiner::new(0.0, 1.0).is_err());
    }

    #[test]
    fn prior_state_example() {
        let ax = be_multiply(
            &encode_data_structure(&a()).unwrap(),
            &encode_matrix(&ComplexMatrix::column_vector(&[2.0, 1.0]).unwrap()).unwrap(),
        )
        .unwrap();
        let r5 = 5f64.sqrt();
        assert!((ax.alpha() - 2.0 * r5).abs() < 1e-12);
        assert_eq!(ax.ancillas(), 2);
        let blk = ax.block().unwrap();
        assert!((blk[(0, 0)].re - 1.0 / (2.0 * r5)).abs() < 1e-12);
        assert!((blk[(1, 0)].re - 3.0 / (2.0 * r5)).abs() < 1e-12);

        let bu = be_multiply(
            &encode_matrix(&ComplexMatrix::column_vector(&[1.0, 1.0]).unwrap()).unwrap(),
            &encode_matrix(&ComplexMatrix::column_vector(&[1.0]).unwrap()).unwrap(),
        )
        .unwrap();
        let x = be_add(&ax, &bu).unwrap();
        assert!((x.alpha() - (2.0 * r5 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(x.ancillas(), 3);
        let d = decode(&x).unwrap();
        assert_eq!(d.shape(), (2, 1));
        assert!((d[(0, 0)].re - 2.0).abs() < 1e-10 && (d[(1, 0)].re - 4.0).abs() < 1e-10);
    }

    #[test]
    fn adding_zero_is_identity() {
        let m = encode_data_structure(&a()).unwrap();
        let sum = be_add(&m, &encode_zero(1).unwrap()).unwrap();
        assert!(close(&decode(&sum).unwrap(), &a(), 1e-10));
    }

    #[test]
    fn narrower_operand_gets_idle_ancillas() {
        // 1 ancilla + 3 ancillas: result has 4 ancillas plus the combiner.
        let narrow = encode_data_structure(&a()).unwrap();
        let wide = be_multiply(&be_multiply(&narrow, &narrow).unwrap(), &narrow).unwrap();
        let sum = be_add(&narrow, &wide).unwrap();
        assert_eq!(sum.ancillas(), 4);
        let expected = &a() + &(&(&a() * &a()) * &a());
        assert!(close(&decode(&sum).unwrap(), &expected, 1e-10));
        let swapped = be_add(&wide, &narrow).unwrap();
        assert!(close(&decode(&swapped).unwrap(), &expected, 1e-10));
    }

    #[test]
    fn adjoint_and_negate() {
        let be = encode_data_structure(&a()).unwrap();
        let adj = be_adjoint(&be).unwrap();
        assert!(close(
            &decode(&adj).unwrap(),
            &real(&[[1.0, 1.0], [-1.0, 1.0]]),
            1e-12
        ));
        assert!(close(
            &decode(&be_adjoint(&adj).unwrap()).unwrap(),
            &a(),
            1e-12
        ));
        let neg = be_negate(&be).unwrap();
        assert!(close(&decode(&neg).unwrap(), &a().scale_real(-1.0), 1e-12));
        assert!(close(
            &decode(&be_negate(&neg).unwrap()).unwrap(),
            &a(),
            1e-12
        ));
        assert!(
            decode(&be_negate(&encode_zero(1).unwrap()).unwrap())
                .unwrap()
                .max_abs()
                < 1e-15
        );
    }

    #[test]
    fn mismatched_systems_are_rejected() {
        let small = encode_data_structure(&a()).unwrap();
        let big = encode_data_structure(&ComplexMatrix::identity(4)).unwrap();
        assert!(matches!(be_add(&small, &big), Err(Error::Dimension(_))));
        assert!(matches!(
            be_multiply(&small, &big),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn error_bounds_compose() {
        let x =
            BlockEncoding::new(QOperator::identity(2).unwrap(), 2.0, 1, 1, 0.1, (2, 2)).unwrap();
        let y =
            BlockEncoding::new(QOperator::identity(2).unwrap(), 3.0, 1, 1, 0.2, (2, 2)).unwrap();
        assert!((be_add(&x, &y).unwrap().eps() - 0.3).abs() < 1e-15);
        assert!((be_multiply(&x, &y).unwrap().eps() - (2.0 * 0.2 + 3.0 * 0.1)).abs() < 1e-15);
    }
}
