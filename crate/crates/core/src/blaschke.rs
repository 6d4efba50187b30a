//! Finite Blaschke products `T(z) = ρ ∏ (z - ζᵢ) / (1 - conj(ζᵢ) z)`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::numeric::golden_max;

/// Distance below which a point is treated as sitting on a pole.
pub const POLE_TOLERANCE: f64 = 1e-14;
/// Accepted deviation of `|ρ|` from one.
pub const ROTATION_TOLERANCE: f64 = 1e-14;
/// Default angular grid used by [`BlaschkeProduct::circle_max`].
pub const CIRCLE_GRID: usize = 1024;

const NEWTON_TARGET: f64 = 1e-12;
const NEWTON_ACCEPT: f64 = 1e-10;
const NEWTON_CAP: usize = 60;
const GOLDEN_ITERATIONS: usize = 100;

/// A finite Blaschke product of degree at least two.
///
/// Zeros are kept in the order they were supplied. Two products that differ by
/// a permutation of their zeros are the same map; compare them through
/// [`BlaschkeProduct::same_map`] rather than by their zero lists.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    rho: Complex64,
    zeros: Vec<Complex64>,
}

/// Result of Martin's sufficient expansion test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartinCheck {
    pub sum: f64,
    pub expanding: bool,
}

/// Expansion and admissibility summary of one product at a radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    pub martin_sum: f64,
    pub martin_expanding: bool,
    pub circle_max_at_r: f64,
    /// Closed-form bound `M`; only defined when the product fixes the origin.
    pub bound_m: Option<f64>,
    pub admissible_at_r: bool,
}

impl BlaschkeProduct {
    pub fn new(rho: Complex64, zeros: Vec<Complex64>) -> Result<Self> {
        if !(rho.re.is_finite() && rho.im.is_finite()) || (rho.norm() - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(LabError::InvalidProduct(format!(
                "rotation factor {rho} does not have unit modulus"
            )));
        }
        if zeros.len() < 2 {
            return Err(LabError::InvalidProduct(format!(
                "degree {} < 2 is not uniformly expanding",
                zeros.len()
            )));
        }
        if let Some(z) = zeros
            .iter()
            .find(|z| !(z.norm() < 1.0) || !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LabError::InvalidProduct(format!(
                "zero {z} is not inside the open unit disk"
            )));
        }
        Ok(Self { rho, zeros })
    }

    /// Product with `ρ = 1`.
    pub fn monic(zeros: Vec<Complex64>) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), zeros)
    }

    /// Monic product with real zeros, mostly for tests and examples.
    pub fn monic_real(zeros: &[f64]) -> Result<Self> {
        Self::monic(zeros.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn rho(&self) -> Complex64 {
        self.rho
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    /// True when one of the zeros is exactly the origin.
    pub fn fixes_origin(&self) -> bool {
        self.zeros.iter().any(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// Zeros other than one copy of the origin, for origin-fixing products.
    pub fn tail_zeros(&self) -> Option<Vec<Complex64>> {
        let at = self.zeros.iter().position(|z| *z == Complex64::new(0.0, 0.0))?;
        let mut tail = self.zeros.clone();
        tail.remove(at);
        Some(tail)
    }

    /// Compares two products as functions: same rotation and same multiset of zeros.
    pub fn same_map(&self, other: &Self, tol: f64) -> bool {
        if self.degree() != other.degree() || (self.rho - other.rho).norm() > tol {
            return false;
        }
        let mut used = vec![false; other.degree()];
        self.zeros.iter().all(|z| {
            let hit = other
                .zeros
                .iter()
                .enumerate()
                .find(|(i, w)| !used[*i] && (*z - **w).norm() <= tol)
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    used[i] = true;
                    true
                }
                None => false,
            }
        })
    }

    fn check_pole(&self, z: Complex64) -> Result<()> {
        for zeta in &self.zeros {
            // the pole of (z - ζ)/(1 - conj(ζ) z) sits at 1/conj(ζ); it is at infinity for ζ = 0
            if zeta.norm() == 0.0 {
                continue;
            }
            let pole = 1.0 / zeta.conj();
            if (z - pole).norm() < POLE_TOLERANCE {
                return Err(LabError::PoleHit { z, pole });
            }
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(LabError::DomainError(format!("non-finite point {z}")));
        }
        Ok(())
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        Ok(self.eval_unchecked(z))
    }

    /// Evaluation without the pole check, for points known to lie in the closed disk.
    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .fold(self.rho, |acc, zeta| acc * (z - zeta) / (1.0 - zeta.conj() * z))
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        Ok(self.derivative_unchecked(z))
    }

    pub(crate) fn derivative_unchecked(&self, z: Complex64) -> Complex64 {
        // product rule with prefix/suffix products of the Möbius factors b_i
        let n = self.zeros.len();
        let factors: Vec<Complex64> = self
            .zeros
            .iter()
            .map(|zeta| (z - zeta) / (1.0 - zeta.conj() * z))
            .collect();
        let mut suffix = vec![Complex64::new(1.0, 0.0); n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * factors[i];
        }
        let mut prefix = Complex64::new(1.0, 0.0);
        let mut total = Complex64::new(0.0, 0.0);
        for (i, zeta) in self.zeros.iter().enumerate() {
            let denom = 1.0 - zeta.conj() * z;
            let db = (1.0 - zeta.norm_sqr()) / (denom * denom);
            total += prefix * db * suffix[i + 1];
            prefix *= factors[i];
        }
        self.rho * total
    }

    /// Coefficients (ascending powers of `w`) of `ρ∏(w - ζᵢ) - z∏(1 - conj(ζᵢ) w)`.
    fn preimage_polynomial(&self, z: Complex64) -> Vec<Complex64> {
        let mut numer = vec![self.rho];
        let mut denom = vec![z];
        for zeta in &self.zeros {
            numer = poly_mul_linear(&numer, -*zeta, Complex64::new(1.0, 0.0));
            denom = poly_mul_linear(&denom, Complex64::new(1.0, 0.0), -zeta.conj());
        }
        numer.iter().zip(&denom).map(|(a, b)| a - b).collect()
    }

    /// All `n` solutions `w` of `T(w) = z`, found as companion-matrix eigenvalues
    /// and polished by Newton's method.
    pub fn preimages(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let coeffs = self.preimage_polynomial(z);
        let lead = coeffs[coeffs.len() - 1];
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if lead.norm() <= 1e-13 * scale {
            return Err(LabError::RootFindFailure {
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        let seeds = companion_roots(&coeffs)?;
        seeds.into_iter().map(|w| self.polish(&coeffs, w, z)).collect()
    }

    fn polish(&self, coeffs: &[Complex64], mut w: Complex64, z: Complex64) -> Result<Complex64> {
        let mut residual = (self.eval_unchecked(w) - z).norm();
        let mut iterations = 0;
        while iterations < NEWTON_CAP {
            let (p, dp) = horner_with_derivative(coeffs, w);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = w - step;
            let r = (self.eval_unchecked(candidate) - z).norm();
            iterations += 1;
            if !(r <= residual) && residual <= NEWTON_TARGET {
                break;
            }
            w = candidate;
            residual = r;
            if residual <= NEWTON_TARGET && step.norm() <= 4.0 * f64::EPSILON * (1.0 + w.norm()) {
                break;
            }
        }
        if residual.is_finite() && residual < NEWTON_ACCEPT {
            Ok(w)
        } else {
            Err(LabError::RootFindFailure { residual, iterations })
        }
    }

    /// `r_T(R) = max_{|z| = R} |T(z)|`, from a uniform angular grid refined by
    /// golden-section search around the grid maximiser.
    pub fn circle_max(&self, radius: f64, samples: usize) -> f64 {
        let samples = samples.max(3);
        circle_sup(|z| self.eval_unchecked(z).norm(), radius, samples)
    }

    /// Minimum of `|T'|` over a uniform grid on the unit circle.
    pub fn min_circle_derivative(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let z = Complex64::from_polar(1.0, TAU * k as f64 / samples as f64);
                self.derivative_unchecked(z).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Martin's sufficient condition `Σ (1 - |ζᵢ|)/(1 + |ζᵢ|) > 1`.
    pub fn expansion_check_martin(&self) -> MartinCheck {
        let sum: f64 = self
            .zeros
            .iter()
            .map(|z| {
                let m = z.norm();
                (1.0 - m) / (1.0 + m)
            })
            .sum();
        MartinCheck {
            sum,
            expanding: sum > 1.0,
        }
    }

    /// Expanding on the circle, either by Martin's test or by a dense grid check of `|T'| > 1`.
    pub fn is_expanding(&self) -> bool {
        self.expansion_check_martin().expanding || self.min_circle_derivative(4096) > 1.0
    }

    pub fn expansion_report(&self, radius: f64, samples: usize) -> ExpansionReport {
        let martin = self.expansion_check_martin();
        let circle_max_at_r = self.circle_max(radius, samples);
        let bound_m = self.tail_zeros().map(|tail| {
            let moduli: Vec<f64> = tail.iter().map(|z| z.norm()).collect();
            admissibility_bound(&moduli, radius)
        });
        ExpansionReport {
            martin_sum: martin.sum,
            martin_expanding: martin.expanding,
            circle_max_at_r,
            bound_m,
            admissible_at_r: circle_max_at_r < radius,
        }
    }
}

/// `M(|ζ₂|, …, |ζₙ|) = R ∏ (R + |ζᵢ|) / (R|ζᵢ| + 1)`, the bound on `r_T(R)` for
/// products fixing the origin.
pub fn admissibility_bound(moduli: &[f64], radius: f64) -> f64 {
    moduli
        .iter()
        .fold(radius, |acc, &m| acc * (radius + m) / (radius * m + 1.0))
}

/// Maximum of a smooth function of `z` over the circle `|z| = radius`.
pub(crate) fn circle_sup<F: Fn(Complex64) -> f64>(f: F, radius: f64, samples: usize) -> f64 {
    let step = TAU / samples as f64;
    let at = |theta: f64| f(Complex64::from_polar(radius, theta));
    let (mut best_k, mut best) = (0usize, f64::NEG_INFINITY);
    for k in 0..samples {
        let v = at(step * k as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let centre = step * best_k as f64;
    let (_, refined) = golden_max(at, centre - step, centre + step, GOLDEN_ITERATIONS);
    best.max(refined)
}

fn poly_mul_linear(p: &[Complex64], c0: Complex64, c1: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); p.len() + 1];
    for (i, a) in p.iter().enumerate() {
        out[i] += a * c0;
        out[i + 1] += a * c1;
    }
    out
}

fn horner_with_derivative(coeffs: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * w + p;
        p = p * w + c;
    }
    (p, dp)
}

/// Roots of the polynomial with ascending coefficients `coeffs` as eigenvalues
/// of its companion matrix.
pub(crate) fn companion_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    if n == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    companion
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or(LabError::RootFindFailure {
            residual: f64::INFINITY,
            iterations: 0,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> BlaschkeProduct {
        BlaschkeProduct::monic_real(&[0.0, 0.5]).unwrap()
    }

    fn square() -> BlaschkeProduct {
        BlaschkeProduct::monic_real(&[0.0, 0.0]).unwrap()
    }

    #[test]
    fn rejects_invalid_products() {
        assert!(BlaschkeProduct::monic_real(&[0.5]).is_err());
        assert!(BlaschkeProduct::monic_real(&[0.0, 1.0]).is_err());
        assert!(BlaschkeProduct::new(c(1.0, 1e-6), vec![c(0.0, 0.0); 2]).is_err());
        assert!(BlaschkeProduct::new(Complex64::from_polar(1.0, 0.7), vec![c(0.0, 0.0); 2]).is_ok());
    }

    #[test]
    fn evaluate_examples() {
        let t = half();
        assert_eq!(t.evaluate(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((t.evaluate(c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(t.evaluate(c(0.5, 0.0)).unwrap().norm(), 0.0);
    }

    #[test]
    fn evaluate_reports_pole_hit() {
        let t = half();
        let err = t.evaluate(c(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, LabError::PoleHit { .. }));
        assert!(t.derivative(c(2.0, 0.0)).is_err());
        assert!(t.evaluate(c(2.0 + 1e-9, 0.0)).is_ok());
    }

    #[test]
    fn derivative_examples() {
        assert!((half().derivative(c(0.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((square().derivative(c(0.3, 0.0)).unwrap() - c(0.6, 0.0)).norm() < 1e-15);
        let t = BlaschkeProduct::new(
            Complex64::from_polar(1.0, 1.1),
            vec![c(0.0, 0.0), c(0.3, -0.2), c(-0.6, 0.1)],
        )
        .unwrap();
        let expected = 0.3f64.hypot(0.2) * 0.6f64.hypot(0.1);
        assert!((t.derivative(c(0.0, 0.0)).unwrap().norm() - expected).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let t = BlaschkeProduct::new(
            Complex64::from_polar(1.0, 0.4),
            vec![c(0.1, 0.2), c(-0.5, 0.3), c(0.7, -0.1)],
        )
        .unwrap();
        let h = 1e-6;
        for z in [c(0.2, 0.1), c(-0.9, 0.3), Complex64::from_polar(1.0, 2.0), c(1.5, -0.5)] {
            let fd = (t.evaluate(z + h).unwrap() - t.evaluate(z - h).unwrap()) / (2.0 * h);
            let exact = t.derivative(z).unwrap();
            assert!((fd - exact).norm() <= 1e-6 * exact.norm(), "{z}: {fd} vs {exact}");
        }
    }

    #[test]
    fn preimages_of_squaring() {
        let mut roots = square().preimages(c(1.0, 0.0)).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - c(1.0, 0.0)).norm() < 1e-12);

        let roots = square().preimages(c(0.0, 1.0)).unwrap();
        for target in [
            Complex64::from_polar(1.0, PI / 4.0),
            Complex64::from_polar(1.0, 5.0 * PI / 4.0),
        ] {
            assert!(roots.iter().any(|w| (w - target).norm() < 1e-12));
        }
    }

    #[test]
    fn preimages_lie_on_circle_and_reevaluate() {
        let t = half();
        let roots = t.preimages(c(1.0, 0.0)).unwrap();
        assert_eq!(roots.len(), 2);
        for w in roots {
            assert!((w.norm() - 1.0).abs() < 1e-10);
            assert!((t.evaluate(w).unwrap() - 1.0).norm() < 1e-10);
        }
        // off the circle, inside the annulus
        let z = Complex64::from_polar(1.6, 0.3);
        for w in t.preimages(z).unwrap() {
            assert!((t.evaluate(w).unwrap() - z).norm() < 1e-10);
        }
    }

    #[test]
    fn circle_max_examples() {
        assert!((square().circle_max(0.5, 1024) - 0.25).abs() < 1e-15);
        let value = half().circle_max(0.5, 1024);
        assert!(value <= 0.4 + 1e-12);
        // maximum of |z (z - 0.5)/(1 - 0.5 z)| on |z| = 0.5 is attained at z = -0.5
        assert!((value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn admissibility_bound_examples() {
        assert!((admissibility_bound(&[0.0], 0.5) - 0.25).abs() < 1e-15);
        assert!((admissibility_bound(&[0.5], 0.5) - 0.4).abs() < 1e-15);
        let expected = 0.5 * (1.4f64 / 1.45).powi(2);
        assert!((admissibility_bound(&[0.9, 0.9], 0.5) - expected).abs() < 1e-15);
        // 0.5 · (1.4 / 1.45)² = 0.466112…
        assert!((admissibility_bound(&[0.9, 0.9], 0.5) - 0.466112).abs() < 1e-6);
    }

    #[test]
    fn martin_examples() {
        let m = square().expansion_check_martin();
        assert_eq!(m.sum, 2.0);
        assert!(m.expanding);
        let m = half().expansion_check_martin();
        assert!((m.sum - 4.0 / 3.0).abs() < 1e-15 && m.expanding);
        let m = BlaschkeProduct::monic_real(&[0.99, 0.99, 0.99])
            .unwrap()
            .expansion_check_martin();
        assert!((m.sum - 3.0 * 0.01 / 1.99).abs() < 1e-15);
        assert!((m.sum - 0.01508).abs() < 1e-5);
        assert!(!m.expanding);
    }

    #[test]
    fn expansion_report_is_consistent() {
        let report = half().expansion_report(0.5, 1024);
        assert!(report.circle_max_at_r <= report.bound_m.unwrap() + 1e-12);
        assert!(report.admissible_at_r);
        let general = BlaschkeProduct::monic_real(&[0.1, 0.2]).unwrap();
        assert!(general.expansion_report(0.5, 1024).bound_m.is_none());
    }

    #[test]
    fn same_map_ignores_zero_order() {
        let a = BlaschkeProduct::monic(vec![c(0.0, 0.0), c(0.2, 0.1), c(-0.4, 0.0)]).unwrap();
        let b = BlaschkeProduct::monic(vec![c(-0.4, 0.0), c(0.0, 0.0), c(0.2, 0.1)]).unwrap();
        assert!(a.same_map(&b, 1e-15));
        for z in [c(0.3, 0.2), c(-0.7, 0.1)] {
            assert!((a.evaluate(z).unwrap() - b.evaluate(z).unwrap()).norm() < 1e-15);
        }
        let d = BlaschkeProduct::monic(vec![c(-0.4, 0.0), c(0.0, 0.0), c(0.2, 0.2)]).unwrap();
        assert!(!a.same_map(&d, 1e-12));
    }
}
