//! Statevector kernels for the two primitive gate kinds.
//!
//! Gates address qubits by wire number; wire 0 is the most significant bit
//! of the basis index. Every kernel writes each amplitude from the same
//! inputs in the same order regardless of [`ExecMode`], so sequential and
//! parallel execution produce bit-identical states.

use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::linalg::{C64, ZERO};

/// How gate kernels iterate over the statevector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Data-parallel over aligned chunks. Falls back to sequential when
    /// the `parallel` feature is off.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Smallest slice handed to one rayon task.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 1 << 12;

/// Dense `2^k x 2^k` matrix acting on `targets`, optionally controlled.
#[derive(Clone, Debug)]
pub(crate) struct DenseGate {
    /// Row-major, already conjugate-transposed if the gate is an adjoint.
    pub matrix: Arc<Vec<C64>>,
    /// `targets[0]` is the most significant bit of the matrix index.
    pub targets: Vec<usize>,
    /// `(wire, required value)`.
    pub controls: Vec<(usize, bool)>,
}

/// `e^{iθ}` on amplitudes whose `wires` are all zero, `e^{-iθ}` elsewhere.
#[derive(Clone, Debug)]
pub(crate) struct PhaseGate {
    pub angle: f64,
    pub wires: Vec<usize>,
    pub controls: Vec<(usize, bool)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Gate {
    Dense(DenseGate),
    Phase(PhaseGate),
}

impl Gate {
    /// Every wire the gate touches, targets and controls alike.
    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        let (a, b): (&[usize], &[(usize, bool)]) = match self {
            Gate::Dense(g) => (&g.targets, &g.controls),
            Gate::Phase(g) => (&g.wires, &g.controls),
        };
        a.iter().copied().chain(b.iter().map(|&(w, _)| w))
    }
}

fn control_mask(n: usize, controls: &[(usize, bool)]) -> (usize, usize) {
    let mut mask = 0;
    let mut value = 0;
    for &(w, v) in controls {
        let bit = 1 << (n - 1 - w);
        mask |= bit;
        if v {
            value |= bit;
        }
    }
    (mask, value)
}

struct PreparedDense<'a> {
    matrix: &'a [C64],
    dim: usize,
    /// Index offset of each matrix basis state relative to a group base.
    offsets: Vec<usize>,
    /// Target bit positions, ascending.
    bits: Vec<usize>,
    cmask: usize,
    cval: usize,
}

impl<'a> PreparedDense<'a> {
    fn new(n: usize, g: &'a DenseGate) -> Self {
        let k = g.targets.len();
        let dim = 1 << k;
        let offsets = (0..dim)
            .map(|r| {
                g.targets
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| r >> (k - 1 - i) & 1 == 1)
                    .map(|(_, &w)| 1usize << (n - 1 - w))
                    .sum()
            })
            .collect();
        let mut bits: Vec<usize> = g.targets.iter().map(|&w| n - 1 - w).collect();
        bits.sort_unstable();
        let (cmask, cval) = control_mask(n, &g.controls);
        PreparedDense {
            matrix: &g.matrix,
            dim,
            offsets,
            bits,
            cmask,
            cval,
        }
    }

    /// Slice length that keeps every group inside one chunk.
    #[cfg(feature = "parallel")]
    fn span(&self) -> usize {
        2 << self.bits.last().copied().unwrap_or(0)
    }

    /// Apply to `slice`, whose first element has global index `start`.
    fn run(&self, slice: &mut [C64], start: usize) {
        let dim = self.dim;
        let groups = slice.len() >> self.bits.len();
        let mut input = vec![ZERO; dim];
        for j in 0..groups {
            let mut base = j;
            for &b in &self.bits {
                let low = base & ((1 << b) - 1);
                base = ((base >> b) << (b + 1)) | low;
            }
            if (start + base) & self.cmask != self.cval {
                continue;
            }
            for (x, &off) in input.iter_mut().zip(&self.offsets) {
                *x = slice[base + off];
            }
            for (r, &off) in self.offsets.iter().enumerate() {
                let row = &self.matrix[r * dim..(r + 1) * dim];
                slice[base + off] = row.iter().zip(&input).map(|(m, x)| m * x).sum();
            }
        }
    }
}

fn run_phase(slice: &mut [C64], start: usize, wmask: usize, cmask: usize, cval: usize, phase: C64) {
    let inv = phase.conj();
    for (i, a) in slice.iter_mut().enumerate() {
        let g = start + i;
        if g & cmask != cval {
            continue;
        }
        *a *= if g & wmask == 0 { phase } else { inv };
    }
}

/// Apply one gate to an `n`-qubit state in place.
pub(crate) fn apply_gate(state: &mut [C64], n: usize, gate: &Gate, mode: ExecMode) {
    debug_assert_eq!(state.len(), 1 << n);
    match gate {
        Gate::Dense(g) => {
            let p = PreparedDense::new(n, g);
            match mode {
                #[cfg(feature = "parallel")]
                ExecMode::Parallel if state.len() > MIN_CHUNK => {
                    let chunk = p.span().max(MIN_CHUNK).min(state.len());
                    state
                        .par_chunks_mut(chunk)
                        .enumerate()
                        .for_each(|(c, s)| p.run(s, c * chunk));
                }
                _ => p.run(state, 0),
            }
        }
        Gate::Phase(g) => {
            let wmask = g.wires.iter().map(|&w| 1usize << (n - 1 - w)).sum();
            let (cmask, cval) = control_mask(n, &g.controls);
            let phase = C64::from_polar(1.0, g.angle);
            match mode {
                #[cfg(feature = "parallel")]
                ExecMode::Parallel if state.len() > MIN_CHUNK => {
                    state
                        .par_chunks_mut(MIN_CHUNK)
                        .enumerate()
                        .for_each(|(c, s)| run_phase(s, c * MIN_CHUNK, wmask, cmask, cval, phase));
                }
                _ => run_phase(state, 0, wmask, cmask, cval, phase),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn x_gate() -> Arc<Vec<C64>> {
        Arc::new(vec![ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn x_on_wire_zero_flips_msb() {
        let mut s = vec![ZERO; 4];
        s[0] = ONE;
        let g = Gate::Dense(DenseGate {
            matrix: x_gate(),
            targets: vec![0],
            controls: vec![],
        });
        apply_gate(&mut s, 2, &g, ExecMode::Sequential);
        assert_eq!(s[2], ONE);
    }

    #[test]
    fn controlled_x_respects_control_value() {
        // CNOT with control wire 0 = 1, target wire 1.
        let g = Gate::Dense(DenseGate {
            matrix: x_gate(),
            targets: vec![1],
            controls: vec![(0, true)],
        });
        for (input, expected) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            let mut s = vec![ZERO; 4];
            s[input] = ONE;
            apply_gate(&mut s, 2, &g, ExecMode::Sequential);
            assert_eq!(s[expected], ONE, "input {input}");
        }
    }

    #[test]
    fn phase_gate_signs() {
        let mut s = vec![ONE; 4];
        let g = Gate::Phase(PhaseGate {
            angle: std::f64::consts::FRAC_PI_2,
            wires: vec![0],
            controls: vec![],
        });
        apply_gate(&mut s, 2, &g, ExecMode::Sequential);
        let i = C64::new(0.0, 1.0);
        assert!((s[0] - i).norm() < 1e-15 && (s[1] - i).norm() < 1e-15);
        assert!((s[2] + i).norm() < 1e-15 && (s[3] + i).norm() < 1e-15);
    }

    #[test]
    fn modes_agree_bitwise_on_large_state() {
        let n = 14;
        let mut a: Vec<C64> = (0..1 << n)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut b = a.clone();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = Arc::new(vec![
            C64::new(h, 0.0),
            C64::new(0.0, h),
            C64::new(0.0, h),
            C64::new(h, 0.0),
        ]);
        for w in [0, 5, 13] {
            let g = Gate::Dense(DenseGate {
                matrix: m.clone(),
                targets: vec![w],
                controls: vec![(if w == 0 { 1 } else { 0 }, true)],
            });
            apply_gate(&mut a, n, &g, ExecMode::Sequential);
            apply_gate(&mut b, n, &g, ExecMode::Parallel);
        }
        assert_eq!(a, b);
    }
}
