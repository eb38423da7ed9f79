//! Lazy unitary operator trees and statevector application.
//!
//! A [`QOperator`] is an immutable, reference-counted tree. Applying it to a
//! state flattens the tree into a list of primitive gates on global wires
//! (cached per operator) and runs them through the kernels in
//! [`crate::kernel`]. Small subtrees whose gate list costs more than their
//! dense matrix are materialized once and applied as a single dense gate.
//!
//! Wire 0 is the most significant bit of the basis index, so ancilla
//! registers prepended to a system register occupy the low wire numbers.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::kernel::{apply_gate, DenseGate, ExecMode, Gate, PhaseGate};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

/// Above this many qubits an operator is never materialized as a matrix.
pub const DENSE_THRESHOLD: usize = 10;

/// Largest subtree that may be fused into a single dense gate.
const FUSE_MAX: usize = 6;

/// Tolerance for the unitarity check on dense leaves.
const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum OpNode {
    Dense(Arc<ComplexMatrix>),
    /// Matrix product `ops[0] · ops[1] · …`; the last factor acts first.
    Product(Vec<QOperator>),
    Adjoint(QOperator),
    /// `|0⟩⟨0| ⊗ first + |1⟩⟨1| ⊗ second`, control on wire 0.
    Select(QOperator, QOperator),
    /// Child wire `i` is placed on wire `wires[i]`; identity elsewhere.
    Extend {
        child: QOperator,
        wires: Vec<usize>,
    },
    /// `e^{iφ(2Π−I)}` with `Π` the all-zero projector on `wires`.
    ProjectorPhase {
        angle: f64,
        wires: Vec<usize>,
    },
}

struct Inner {
    node: OpNode,
    qubits: usize,
    plan: OnceLock<Plan>,
    gates: OnceLock<Arc<Vec<Gate>>>,
}

struct Plan {
    fused: Option<Arc<Vec<C64>>>,
    /// Approximate work per amplitude when applied.
    cost: f64,
}

/// Immutable unitary on a fixed number of qubits. Cloning is cheap.
#[derive(Clone)]
pub struct QOperator(Arc<Inner>);

/// Amplitudes of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<C64>,
}

/// Gate-level summary of an operator's flattened circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct OpStats {
    pub qubits: usize,
    pub gate_count: usize,
    pub dense_gates: usize,
    pub phase_gates: usize,
    /// Layers when gates sharing a wire must be sequential.
    pub depth: usize,
}

fn qubits_of_dim(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

fn check_wires(wires: &[usize], total: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; total];
    for &w in wires {
        if w >= total {
            return Err(Error::Dimension(format!(
                "{what}: wire {w} outside a {total}-qubit register"
            )));
        }
        if std::mem::replace(&mut seen[w], true) {
            return Err(Error::Dimension(format!("{what}: wire {w} repeated")));
        }
    }
    Ok(())
}

impl QOperator {
    fn from_node(node: OpNode, qubits: usize) -> Self {
        QOperator(Arc::new(Inner {
            node,
            qubits,
            plan: OnceLock::new(),
            gates: OnceLock::new(),
        }))
    }

    /// Dense leaf. The matrix must be square, of power-of-two size and
    /// unitary to 1e-10.
    pub fn dense(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "dense operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let qubits = qubits_of_dim(matrix.rows()).ok_or_else(|| {
            Error::Dimension(format!("dimension {} is not a power of two", matrix.rows()))
        })?;
        if qubits == 0 {
            return Err(Error::Dimension(
                "dense operator needs at least one qubit".into(),
            ));
        }
        let residual = matrix.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::Precondition(format!(
                "matrix is not unitary (residual {residual:e})"
            )));
        }
        Ok(Self::from_node(OpNode::Dense(Arc::new(matrix)), qubits))
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        Self::dense(ComplexMatrix::identity(1 << qubits))
    }

    /// `ops[0] · ops[1] · …` (the last factor acts first on a state).
    pub fn product(ops: Vec<QOperator>) -> Result<Self> {
        let qubits = ops
            .first()
            .ok_or_else(|| Error::Dimension("empty product".into()))?
            .qubits();
        if let Some(bad) = ops.iter().find(|o| o.qubits() != qubits) {
            return Err(Error::Dimension(format!(
                "product factors on {} and {} qubits",
                qubits,
                bad.qubits()
            )));
        }
        if ops.len() == 1 {
            return Ok(ops.into_iter().next().unwrap());
        }
        Ok(Self::from_node(OpNode::Product(ops), qubits))
    }

    pub fn adjoint(&self) -> Self {
        if let OpNode::Adjoint(inner) = &self.0.node {
            return inner.clone();
        }
        Self::from_node(OpNode::Adjoint(self.clone()), self.qubits())
    }

    /// Control on wire 0: `first` when it is 0, `second` when it is 1.
    pub fn select(first: QOperator, second: QOperator) -> Result<Self> {
        if first.qubits() != second.qubits() {
            return Err(Error::Dimension(format!(
                "select branches on {} and {} qubits",
                first.qubits(),
                second.qubits()
            )));
        }
        let qubits = first.qubits() + 1;
        Ok(Self::from_node(OpNode::Select(first, second), qubits))
    }

    /// Embed `child` in a `total`-qubit register; child wire `i` lands on
    /// `wires[i]`.
    pub fn extend(child: QOperator, total: usize, wires: Vec<usize>) -> Result<Self> {
        if wires.len() != child.qubits() {
            return Err(Error::Dimension(format!(
                "extend: {} wires for a {}-qubit operator",
                wires.len(),
                child.qubits()
            )));
        }
        check_wires(&wires, total, "extend")?;
        if total == child.qubits() && wires.iter().enumerate().all(|(i, &w)| i == w) {
            return Ok(child);
        }
        Ok(Self::from_node(OpNode::Extend { child, wires }, total))
    }

    /// `e^{iφ(2Π−I)}` on a `total`-qubit register, `Π` projecting `wires`
    /// onto all-zero.
    pub fn projector_phase(angle: f64, total: usize, wires: Vec<usize>) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::Domain("projector phase angle must be finite".into()));
        }
        if wires.is_empty() {
            return Err(Error::Dimension(
                "projector phase needs at least one wire".into(),
            ));
        }
        check_wires(&wires, total, "projector phase")?;
        Ok(Self::from_node(
            OpNode::ProjectorPhase { angle, wires },
            total,
        ))
    }

    pub fn qubits(&self) -> usize {
        self.0.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    pub fn node(&self) -> &OpNode {
        &self.0.node
    }

    fn plan(&self) -> &Plan {
        self.0.plan.get_or_init(|| {
            let cost = match &self.0.node {
                OpNode::Dense(m) => {
                    return Plan {
                        fused: None,
                        cost: m.rows() as f64,
                    }
                }
                OpNode::ProjectorPhase { .. } => {
                    return Plan {
                        fused: None,
                        cost: 1.0,
                    }
                }
                OpNode::Product(ops) => ops.iter().map(|o| o.plan().cost).sum(),
                OpNode::Adjoint(c) | OpNode::Extend { child: c, .. } => c.plan().cost,
                OpNode::Select(a, b) => a.plan().cost + b.plan().cost,
            };
            let dense_cost = self.dim() as f64;
            if self.qubits() <= FUSE_MAX && dense_cost < cost {
                let m = self.matrix_by_columns(true);
                Plan {
                    fused: Some(Arc::new(m.as_slice().to_vec())),
                    cost: dense_cost,
                }
            } else {
                Plan { fused: None, cost }
            }
        })
    }

    /// Build the gate list of this operator with fused subtrees
    /// substituted, mapping local wires through `map`.
    fn emit(
        &self,
        map: &[usize],
        controls: &mut Vec<(usize, bool)>,
        dagger: bool,
        fuse: bool,
        out: &mut Vec<Gate>,
    ) {
        if fuse {
            if let Some(m) = &self.plan().fused {
                out.push(dense_gate(m, self.dim(), dagger, map, controls));
                return;
            }
        }
        self.emit_node(map, controls, dagger, fuse, out);
    }

    /// `emit` without substituting this node's own fused matrix.
    fn emit_node(
        &self,
        map: &[usize],
        controls: &mut Vec<(usize, bool)>,
        dagger: bool,
        fuse: bool,
        out: &mut Vec<Gate>,
    ) {
        match &self.0.node {
            OpNode::Dense(m) => {
                out.push(dense_gate(m.as_slice(), m.rows(), dagger, map, controls));
            }
            OpNode::Product(ops) => {
                // (L0 L1 … Lk) acts Lk first; its adjoint acts L0† first.
                if dagger {
                    for op in ops {
                        op.emit(map, controls, true, fuse, out);
                    }
                } else {
                    for op in ops.iter().rev() {
                        op.emit(map, controls, false, fuse, out);
                    }
                }
            }
            OpNode::Adjoint(c) => c.emit(map, controls, !dagger, fuse, out),
            OpNode::Select(a, b) => {
                let ctl = map[0];
                for (branch, value) in [(a, false), (b, true)] {
                    controls.push((ctl, value));
                    branch.emit(&map[1..], controls, dagger, fuse, out);
                    controls.pop();
                }
            }
            OpNode::Extend { child, wires } => {
                let inner: Vec<usize> = wires.iter().map(|&w| map[w]).collect();
                child.emit(&inner, controls, dagger, fuse, out);
            }
            OpNode::ProjectorPhase { angle, wires } => {
                out.push(Gate::Phase(PhaseGate {
                    angle: if dagger { -angle } else { *angle },
                    wires: wires.iter().map(|&w| map[w]).collect(),
                    controls: controls.clone(),
                }));
            }
        }
    }

    fn gate_list(&self, fuse: bool) -> Vec<Gate> {
        let map: Vec<usize> = (0..self.qubits()).collect();
        let mut out = Vec::new();
        self.emit(&map, &mut Vec::new(), false, fuse, &mut out);
        out
    }

    fn gates(&self) -> &Arc<Vec<Gate>> {
        self.0.gates.get_or_init(|| Arc::new(self.gate_list(true)))
    }

    /// Dense matrix by applying the (optionally fused) children to every
    /// basis state. Only used at small sizes.
    fn matrix_by_columns(&self, fuse_children: bool) -> ComplexMatrix {
        let n = self.qubits();
        let dim = 1 << n;
        let map: Vec<usize> = (0..n).collect();
        if let OpNode::Dense(m) = &self.0.node {
            return (**m).clone();
        }
        let mut gates = Vec::new();
        self.emit_node(&map, &mut Vec::new(), false, fuse_children, &mut gates);
        let mut m = ComplexMatrix::zeros(dim, dim);
        let mut col = vec![ZERO; dim];
        for c in 0..dim {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[c] = ONE;
            for g in &gates {
                apply_gate(&mut col, n, g, ExecMode::Sequential);
            }
            for (r, z) in col.iter().enumerate() {
                m[(r, c)] = *z;
            }
        }
        m
    }

    /// Apply to a state using the default execution mode.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply_with(psi, ExecMode::default())
    }

    pub fn apply_with(&self, psi: &StateVector, mode: ExecMode) -> Result<StateVector> {
        let mut out = psi.clone();
        self.apply_in_place(&mut out, mode)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, psi: &mut StateVector, mode: ExecMode) -> Result<()> {
        if psi.qubits != self.qubits() {
            return Err(Error::Dimension(format!(
                "{}-qubit operator applied to a {}-qubit state",
                self.qubits(),
                psi.qubits
            )));
        }
        for g in self.gates().iter() {
            apply_gate(&mut psi.amps, psi.qubits, g, mode);
        }
        Ok(())
    }

    /// Entries `⟨row_i|U|col_j⟩`, one application per column.
    pub fn materialize_block(&self, rows: &[usize], cols: &[usize]) -> Result<ComplexMatrix> {
        self.materialize_block_with(rows, cols, ExecMode::default())
    }

    pub fn materialize_block_with(
        &self,
        rows: &[usize],
        cols: &[usize],
        mode: ExecMode,
    ) -> Result<ComplexMatrix> {
        let dim = self.dim();
        if let Some(&bad) = rows.iter().chain(cols).find(|&&i| i >= dim) {
            return Err(Error::Dimension(format!(
                "basis index {bad} outside a {}-qubit register",
                self.qubits()
            )));
        }
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Dimension("empty index set".into()));
        }
        let mut out = ComplexMatrix::zeros(rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            let mut psi = StateVector::basis(self.qubits(), c)?;
            self.apply_in_place(&mut psi, mode)?;
            for (i, &r) in rows.iter().enumerate() {
                out[(i, j)] = psi.amps[r];
            }
        }
        Ok(out)
    }

    /// Full matrix; refused above [`DENSE_THRESHOLD`] qubits.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        if self.qubits() > DENSE_THRESHOLD {
            return Err(Error::Precondition(format!(
                "refusing to materialize a {}-qubit operator (threshold {DENSE_THRESHOLD})",
                self.qubits()
            )));
        }
        let all: Vec<usize> = (0..self.dim()).collect();
        self.materialize_block_with(&all, &all, ExecMode::Sequential)
    }

    /// Counts over the unfused circuit: every leaf and phase is one gate.
    pub fn stats(&self) -> OpStats {
        let gates = self.gate_list(false);
        let mut level = vec![0usize; self.qubits()];
        let mut dense = 0;
        let mut phase = 0;
        for g in &gates {
            match g {
                Gate::Dense(_) => dense += 1,
                Gate::Phase(_) => phase += 1,
            }
            let layer = g.wires().map(|w| level[w]).max().unwrap_or(0) + 1;
            for w in g.wires().collect::<Vec<_>>() {
                level[w] = layer;
            }
        }
        OpStats {
            qubits: self.qubits(),
            gate_count: gates.len(),
            dense_gates: dense,
            phase_gates: phase,
            depth: level.into_iter().max().unwrap_or(0),
        }
    }

    /// `max ‖U†U v − v‖₂` over `samples` pseudo-random states.
    pub fn unitarity_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let adj = self.adjoint();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let amps = (0..self.dim())
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let psi = StateVector::from_amplitudes(amps)?.normalized()?;
            let back = adj.apply(&self.apply(&psi)?)?;
            worst = worst.max(back.distance(&psi));
        }
        Ok(worst)
    }
}

fn dense_gate(
    m: &[C64],
    dim: usize,
    dagger: bool,
    map: &[usize],
    controls: &[(usize, bool)],
) -> Gate {
    let matrix = if dagger {
        let mut t = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                t[r * dim + c] = m[c * dim + r].conj();
            }
        }
        t
    } else {
        m.to_vec()
    };
    Gate::Dense(DenseGate {
        matrix: Arc::new(matrix),
        targets: map.to_vec(),
        controls: controls.to_vec(),
    })
}

impl fmt::Debug for QOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.0.node {
            OpNode::Dense(_) => "Dense",
            OpNode::Product(_) => "Product",
            OpNode::Adjoint(_) => "Adjoint",
            OpNode::Select(..) => "Select",
            OpNode::Extend { .. } => "Extend",
            OpNode::ProjectorPhase { .. } => "ProjectorPhase",
        };
        write!(f, "QOperator({kind}, {} qubits)", self.qubits())
    }
}

impl StateVector {
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << qubits];
        amps[0] = ONE;
        StateVector { qubits, amps }
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << qubits {
            return Err(Error::Dimension(format!(
                "basis index {index} outside a {qubits}-qubit register"
            )));
        }
        let mut amps = vec![ZERO; 1 << qubits];
        amps[index] = ONE;
        Ok(StateVector { qubits, amps })
    }

    /// Wrap raw amplitudes. The length must be a power of two; the vector
    /// is not required to be normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_of_dim(amps.len())
            .ok_or_else(|| Error::Dimension(format!("{} amplitudes", amps.len())))?;
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("amplitudes must be finite".into()));
        }
        Ok(StateVector { qubits, amps })
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero vector".into()));
        }
        self.amps.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `|a⟩ ⊗ |b⟩` with `self` on the high wires.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        StateVector {
            qubits: self.qubits + other.qubits,
            amps,
        }
    }
}
