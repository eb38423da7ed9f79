//! Quantum signal processing phase factors.
//!
//! Convention: for `x ∈ [−1, 1]`,
//!
//! ```text
//! U_Φ(x) = e^{iφ_0 Z} Π_{j=1}^{d} W(x) e^{iφ_j Z},   W(x) = [[x, i√(1−x²)], [i√(1−x²), x]]
//! ```
//!
//! and the polynomial realized by `Φ` is `Re ⟨0|U_Φ(x)|0⟩`. Phases are kept
//! symmetric (`φ_j = φ_{d−j}`) and fitted by damped Gauss–Newton on the
//! positive Chebyshev nodes, starting from `(π/4, 0, …, 0, π/4)`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::poly::ChebPoly;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Margin kept below 1 for the target polynomial.
const TARGET_MARGIN: f64 = 1e-8;
/// Stop once every node residual is below this.
const RESIDUAL_GOAL: f64 = 1e-13;
/// Residual above which the fit is reported as a failure.
const RESIDUAL_FAIL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// Which single-qubit signal operator the angles are defined against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Convention {
    /// `W(x)` signal with `e^{iφZ}` rotations.
    Wx,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseFactors {
    pub angles: Vec<f64>,
    pub convention: Convention,
    /// Factor applied to the target before fitting (`≤ 1`); the realized
    /// polynomial is `target_scale · p`.
    pub target_scale: f64,
    /// Largest `|Re⟨0|U_Φ|0⟩ − target_scale·p|` over the fitting nodes.
    pub residual: f64,
    pub iterations: usize,
}

impl PhaseFactors {
    /// Wrap raw angles; the degree is `angles.len() − 1`.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Domain("at least one angle is required".into()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("angles must be finite".into()));
        }
        Ok(PhaseFactors {
            angles,
            convention: Convention::Wx,
            target_scale: 1.0,
            residual: 0.0,
            iterations: 0,
        })
    }

    pub fn degree(&self) -> usize {
        self.angles.len() - 1
    }

    /// One angle in radians per line.
    pub fn to_text(&self) -> String {
        self.angles.iter().map(|a| format!("{a}\n")).collect()
    }
}

impl fmt::Display for PhaseFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PhaseFactors {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let angles = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|e| Error::Domain(format!("angle on line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_angles(angles)
    }
}

type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rz(phi: f64) -> M2 {
    let z = C64::new(0.0, 0.0);
    [
        [C64::from_polar(1.0, phi), z],
        [z, C64::from_polar(1.0, -phi)],
    ]
}

fn signal(x: f64) -> M2 {
    let s = C64::new(0.0, (1.0 - x * x).max(0.0).sqrt());
    let x = C64::new(x, 0.0);
    [[x, s], [s, x]]
}

/// `⟨0|U_Φ(x)|0⟩`.
pub fn qsp_response(phi: &PhaseFactors, x: f64) -> C64 {
    response(&phi.angles, x)
}

fn response(angles: &[f64], x: f64) -> C64 {
    let w = signal(x);
    let mut u = rz(angles[0]);
    for &a in &angles[1..] {
        u = mul(&mul(&u, &w), &rz(a));
    }
    u[0][0]
}

/// Response and its gradient with respect to each angle.
fn response_and_gradient(angles: &[f64], x: f64) -> (C64, Vec<C64>) {
    let d = angles.len() - 1;
    let w = signal(x);
    let rots: Vec<M2> = angles.iter().map(|&a| rz(a)).collect();
    // prefix[j] = R_0 W R_1 W … R_{j-1} W (everything left of R_j)
    let id = rz(0.0);
    let mut prefix = vec![id; d + 1];
    for j in 1..=d {
        prefix[j] = mul(&mul(&prefix[j - 1], &rots[j - 1]), &w);
    }
    // suffix[j] = W R_{j+1} … W R_d (everything right of R_j)
    let mut suffix = vec![id; d + 1];
    for j in (0..d).rev() {
        suffix[j] = mul(&mul(&w, &rots[j + 1]), &suffix[j + 1]);
    }
    let full = mul(&mul(&prefix[d], &rots[d]), &suffix[d]);
    let i = C64::new(0.0, 1.0);
    let grad = (0..=d)
        .map(|j| {
            // d/dφ e^{iφZ} = iZ e^{iφZ}
            let mut dr = rots[j];
            dr[0][0] *= i;
            dr[1][1] *= -i;
            mul(&mul(&prefix[j], &dr), &suffix[j])[0][0]
        })
        .collect();
    (full[0][0], grad)
}

fn expand_symmetric(half: &[f64], d: usize) -> Vec<f64> {
    (0..=d).map(|j| half[j.min(d - j)]).collect()
}

/// Largest node residual of `Re⟨0|U_Φ|0⟩` against `scale · p` over the
/// `d+1` Chebyshev nodes `cos((2k−1)π/(2(d+1)))`.
pub fn node_residual(phi: &PhaseFactors, poly: &ChebPoly) -> f64 {
    let m = phi.degree() + 1;
    (1..=m)
        .map(|k| {
            let x = ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos();
            (qsp_response(phi, x).re - phi.target_scale * poly.eval_unchecked(x)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn solve_phase_factors(poly: &ChebPoly) -> Result<PhaseFactors> {
    solve_phase_factors_with(poly, DEFAULT_MAX_ITERATIONS)
}

/// Fit symmetric phases to an odd polynomial with `|p| ≤ 1`.
pub fn solve_phase_factors_with(poly: &ChebPoly, max_iterations: usize) -> Result<PhaseFactors> {
    let d = poly.degree();
    if d.is_multiple_of(2) {
        return Err(Error::UnsupportedParity(d));
    }
    let sup = poly.sup_abs();
    if sup > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "polynomial reaches |p| = {sup}, above 1"
        )));
    }
    let target_scale = if sup > 1.0 - TARGET_MARGIN {
        (1.0 - TARGET_MARGIN) / sup
    } else {
        1.0
    };

    let half_len = d.div_ceil(2);
    let nodes: Vec<f64> = (1..=half_len)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (4 * half_len) as f64).cos())
        .collect();
    let targets: Vec<f64> = nodes
        .iter()
        .map(|&x| target_scale * poly.eval_unchecked(x))
        .collect();

    let residuals = |half: &[f64]| -> (DVector<f64>, DMatrix<f64>) {
        let full = expand_symmetric(half, d);
        let mut r = DVector::zeros(half_len);
        let mut jac = DMatrix::zeros(half_len, half_len);
        for (k, &x) in nodes.iter().enumerate() {
            let (val, grad) = response_and_gradient(&full, x);
            r[k] = val.re - targets[k];
            for (j, g) in grad.iter().enumerate() {
                jac[(k, j.min(d - j))] += g.re;
            }
        }
        (r, jac)
    };

    let mut half = vec![0.0; half_len];
    half[0] = FRAC_PI_4;
    let (mut r, mut jac) = residuals(&half);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < max_iterations && r.amax() > RESIDUAL_GOAL {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut damped = jtj.clone();
        for i in 0..half_len {
            damped[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
        }
        let Some(step) = damped.lu().solve(&(-g)) else {
            lambda *= 10.0;
            continue;
        };
        let trial: Vec<f64> = half.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        let (tr, tj) = residuals(&trial);
        let trial_cost = tr.norm_squared();
        if trial_cost < cost {
            half = trial;
            r = tr;
            jac = tj;
            cost = trial_cost;
            lambda = (lambda / 3.0).max(1e-15);
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    let residual = r.amax();
    if residual.is_nan() || residual > RESIDUAL_FAIL {
        return Err(Error::SolverFailure {
            iterations,
            residual,
        });
    }
    let mut phi = PhaseFactors::from_angles(expand_symmetric(&half, d))?;
    phi.target_scale = target_scale;
    phi.residual = residual;
    phi.iterations = iterations;
    Ok(phi)
}
