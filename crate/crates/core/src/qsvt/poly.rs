//! Odd Chebyshev approximations of `1/x`.
//!
//! The construction expands `(1 − (1 − x²)^b)/x`, which agrees with
//! `1/x` to within `ε` on `[1/κ, 1]` once `b = ⌊κ² ln(κ/ε)⌋`, in Chebyshev
//! polynomials and truncates the expansion after `j0 = ⌊√(b ln(4b/ε))⌋`
//! odd terms:
//!
//! ```text
//! g(x) = 4 Σ_{j=0}^{j0} (−1)^j [ Σ_{i=j+1}^{b} C(2b, b+i) / 2^{2b} ] T_{2j+1}(x)
//! ```
//!
//! The result is rescaled by `S = max_{[−1,1]} |g|` so that `|p| ≤ 1`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Degree cap used when none is given.
pub const DEFAULT_DEGREE_CAP: usize = 501;

#[derive(Clone, Debug, Serialize)]
pub struct ChebPoly {
    /// `coeffs[k]` multiplies `T_k`; even entries are zero.
    pub(crate) coeffs: Vec<f64>,
    /// Condition bound the polynomial was built for (0 when not built by
    /// [`inverse_poly`]).
    pub kappa: f64,
    /// `S` such that `p ≈ (1/S)(1/x)` on `[1/κ, 1]`.
    pub scale: f64,
    /// Requested accuracy.
    pub eps_target: f64,
    /// Achieved `sup_{[1/κ,1]} |p(x) − 1/(S x)|`.
    pub eps_prime: f64,
    /// Exponent `b` of the smoothed target (0 when not applicable).
    pub b: usize,
}

impl ChebPoly {
    /// Polynomial from odd coefficients `[c_1, c_3, …]` with unit scale.
    pub fn from_odd_coeffs(odd: &[f64]) -> Result<Self> {
        if odd.is_empty() {
            return Err(Error::Domain("at least one coefficient is required".into()));
        }
        if odd.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        let mut coeffs = vec![0.0; 2 * odd.len()];
        for (j, &c) in odd.iter().enumerate() {
            coeffs[2 * j + 1] = c;
        }
        Ok(ChebPoly {
            coeffs,
            kappa: 0.0,
            scale: 1.0,
            eps_target: 0.0,
            eps_prime: 0.0,
            b: 0,
        })
    }

    /// `T_d` for odd `d`.
    pub fn chebyshev(d: usize) -> Result<Self> {
        if d.is_multiple_of(2) {
            return Err(Error::UnsupportedParity(d));
        }
        let mut odd = vec![0.0; d / 2 + 1];
        odd[d / 2] = 1.0;
        Self::from_odd_coeffs(&odd)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// All Chebyshev coefficients, `coeffs()[k]` for `T_k`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `[c_1, c_3, …, c_d]`.
    pub fn odd_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().skip(1).step_by(2).copied().collect()
    }

    /// `β = S/κ`.
    pub fn beta(&self) -> f64 {
        if self.kappa > 0.0 {
            self.scale / self.kappa
        } else {
            f64::NAN
        }
    }

    /// Evaluate without the domain check.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, x)
    }

    /// `max |p|` on `[−1, 1]`, located on a grid and refined.
    pub fn sup_abs(&self) -> f64 {
        // Odd polynomial: |p| is even, so [0, 1] suffices.
        let f = |x: f64| self.eval_unchecked(x).abs();
        maximize(f, 0.0, 1.0, grid_points(self.degree()))
    }
}

/// `Σ c_k T_k(x)` by Clenshaw's recurrence. Requires `|x| ≤ 1`.
pub fn eval_cheb(poly: &ChebPoly, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("{x} is outside [-1, 1]")));
    }
    Ok(poly.eval_unchecked(x.clamp(-1.0, 1.0)))
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

fn grid_points(degree: usize) -> usize {
    (100 * degree).max(20_000)
}

/// Maximum of `f` on `[lo, hi]`: dense grid, then golden-section search in
/// the bracket around the best grid point.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let h = (hi - lo) / points as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=points {
        let v = f(lo + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let x = lo + h * best_i as f64;
    let (mut a, mut b) = ((x - h).max(lo), (x + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f((a + b) / 2.0))
}

/// `b` and `j0` of the construction, clamped so every kept term is nonzero.
fn construction_sizes(kappa: f64, eps: f64) -> (usize, usize) {
    let b = ((kappa * kappa * (kappa / eps).ln()).floor() as usize).max(1);
    let j0 = ((b as f64) * (4.0 * b as f64 / eps).ln()).sqrt().floor() as usize;
    (b, j0.min(b - 1))
}

/// Unscaled coefficients `[c_1, c_3, …, c_{2j0+1}]` of `g`.
fn raw_coeffs(b: usize, j0: usize) -> Vec<f64> {
    // Binomial(2b, 1/2) pmf at b+i for i = 0..=b, built from the centre.
    let ln_centre: f64 = (1..=b)
        .map(|k| ((b + k) as f64 / k as f64).ln())
        .sum::<f64>()
        - 2.0 * b as f64 * std::f64::consts::LN_2;
    let mut pmf = vec![0.0; b + 1];
    pmf[0] = ln_centre.exp();
    for i in 0..b {
        pmf[i + 1] = pmf[i] * (b - i) as f64 / (b + i + 1) as f64;
    }
    // tail[j] = Σ_{i=j+1}^{b} pmf[i], summed from the small end.
    let mut tail = vec![0.0; b + 1];
    for j in (0..b).rev() {
        tail[j] = tail[j + 1] + pmf[j + 1];
    }
    (0..=j0)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            4.0 * sign * tail[j]
        })
        .collect()
}

/// Odd polynomial `p` with `|p| ≤ 1` on `[−1, 1]` and
/// `|p(x) − 1/(S x)| ≤ ε` on `[1/κ, 1]`, using [`DEFAULT_DEGREE_CAP`].
pub fn inverse_poly(kappa: f64, eps_prime: f64) -> Result<ChebPoly> {
    inverse_poly_capped(kappa, eps_prime, DEFAULT_DEGREE_CAP)
}

pub fn inverse_poly_capped(kappa: f64, eps_prime: f64, degree_cap: usize) -> Result<ChebPoly> {
    if !(kappa.is_finite() && kappa > 1.0) {
        return Err(Error::Domain(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(Error::Domain(format!(
            "eps' must lie in (0, 1), got {eps_prime}"
        )));
    }
    let (b, j0) = construction_sizes(kappa, eps_prime);
    let degree = 2 * j0 + 1;
    if degree > degree_cap {
        return Err(Error::Approximation(format!(
            "kappa {kappa} and eps' {eps_prime} need degree {degree}, above the cap {degree_cap}"
        )));
    }
    let mut poly = ChebPoly::from_odd_coeffs(&raw_coeffs(b, j0))?;
    let scale = poly.sup_abs();
    poly.coeffs.iter_mut().for_each(|c| *c /= scale);
    poly.kappa = kappa;
    poly.scale = scale;
    poly.eps_target = eps_prime;
    poly.b = b;
    let points = grid_points(degree);
    poly.eps_prime = maximize(
        |x| (poly.eval_unchecked(x) - 1.0 / (scale * x)).abs(),
        1.0 / kappa,
        1.0,
        points,
    );
    if poly.eps_prime > eps_prime {
        return Err(Error::Approximation(format!(
            "degree-{degree} polynomial reaches only {:.3e} (wanted {eps_prime:e})",
            poly.eps_prime
        )));
    }
    Ok(poly)
}

/// The construction's degree ladder for fixed `κ`: one polynomial per
/// requested accuracy, as `(degree, achieved ε′)` sorted by degree.
pub fn degree_ladder(kappa: f64, eps_values: &[f64]) -> Result<Vec<(usize, f64)>> {
    let mut out = eps_values
        .iter()
        .map(|&e| inverse_poly_capped(kappa, e, usize::MAX).map(|p| (p.degree(), p.eps_prime)))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terms() {
        let t1 = ChebPoly::from_odd_coeffs(&[1.0]).unwrap();
        assert_eq!(eval_cheb(&t1, 0.3).unwrap(), 0.3);
        let t3 = ChebPoly::from_odd_coeffs(&[0.0, 1.0]).unwrap();
        assert!((eval_cheb(&t3, 0.5).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(t3.degree(), 3);
    }

    #[test]
    fn domain_is_checked() {
        let t1 = ChebPoly::from_odd_coeffs(&[1.0]).unwrap();
        assert!(matches!(eval_cheb(&t1, 1.5), Err(Error::Domain(_))));
        assert!(matches!(inverse_poly(1.0, 0.01), Err(Error::Domain(_))));
        assert!(matches!(inverse_poly(3.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn degree_cap_is_enforced() {
        assert!(matches!(
            inverse_poly_capped(3.5, 0.01, 31),
            Err(Error::Approximation(_))
        ));
        assert!(matches!(
            inverse_poly(100.0, 1e-6),
            Err(Error::Approximation(_))
        ));
    }

    #[test]
    fn small_kappa_keeps_all_terms_nonzero() {
        let p = inverse_poly(1.2, 0.1).unwrap();
        assert!(p.odd_coeffs().iter().all(|&c| c != 0.0));
        assert!(p.eps_prime <= 0.1);
    }
}
