//! The diffeomorphism `Φ(z) = z / √(1 - |z|²)` from the unit disk onto the
//! plane and the structure it induces on monic quadratic origin-fixing
//! cocycles: addition, scaling, the metrics `d`, `d′`, `d″` and the
//! λ-perturbation family.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::blaschke::{circle_sup, BlaschkeProduct, CIRCLE_GRID};
use crate::cocycle::{presets, BasePoint, BlaschkeCocycle, CoefficientField, DomainKind, Smoothness};
use crate::error::{LabError, Result};
use crate::numeric::golden_max;

/// Points closer than this to the unit circle are rejected by [`phi`].
pub const BOUNDARY_GUARD: f64 = 1e-12;
/// Default base-point grid for essential suprema.
pub const METRIC_GRID: usize = 1 << 14;
/// Inner circle grid used by `d′`.
pub const DPRIME_CIRCLE_GRID: usize = 256;
/// Last disk index in the `d″` series; the omitted tail is at most `2^{-64}`.
pub const DDPRIME_TERMS: usize = 64;

const REFINE_ITERATIONS: usize = 100;

#[inline]
pub(crate) fn phi_raw(z: Complex64) -> Complex64 {
    z / (1.0 - z.norm_sqr()).sqrt()
}

pub fn phi(z: Complex64) -> Result<Complex64> {
    let modulus = z.norm();
    if !(modulus < 1.0 - BOUNDARY_GUARD) {
        return Err(LabError::BoundaryBlowup { modulus });
    }
    Ok(phi_raw(z))
}

pub fn phi_inverse(z: Complex64) -> Complex64 {
    z / (1.0 + z.norm_sqr()).sqrt()
}

/// `det DΦ(x, y) = 1 / (1 - x² - y²)²`.
pub fn phi_jacobian_det(x: f64, y: f64) -> Result<f64> {
    let modulus = x.hypot(y);
    if !(modulus < 1.0 - BOUNDARY_GUARD) {
        return Err(LabError::BoundaryBlowup { modulus });
    }
    let s = 1.0 - x * x - y * y;
    Ok(1.0 / (s * s))
}

/// `Φ_n`, componentwise.
pub fn broadcast_phi(v: &[Complex64]) -> Result<Vec<Complex64>> {
    v.iter().map(|z| phi(*z)).collect()
}

pub fn broadcast_phi_inverse(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| phi_inverse(*z)).collect()
}

/// A disk point together with its image under `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiPoint {
    pub disk_value: Complex64,
    pub plane_value: Complex64,
}

impl PhiPoint {
    pub fn from_disk(z: Complex64) -> Result<Self> {
        Ok(Self {
            disk_value: z,
            plane_value: phi(z)?,
        })
    }

    pub fn from_plane(w: Complex64) -> Self {
        Self {
            disk_value: phi_inverse(w),
            plane_value: w,
        }
    }
}

fn check_quadratic(c: &BlaschkeCocycle, role: &str) -> Result<()> {
    let f = c.field();
    if !(f.fixes_origin() && f.is_monic() && f.blocks().len() == 1 && f.blocks()[0].degree() == 2) {
        return Err(LabError::ClassMismatch(format!(
            "{role} ({}) is not a monic quadratic origin-fixing cocycle",
            f.label()
        )));
    }
    Ok(())
}

fn check_pair(a: &BlaschkeCocycle, b: &BlaschkeCocycle) -> Result<()> {
    check_quadratic(a, "left operand")?;
    check_quadratic(b, "right operand")?;
    if a.driving() != b.driving() {
        return Err(LabError::ClassMismatch(
            "operands are driven by different base systems".into(),
        ));
    }
    Ok(())
}

/// `ζ₂` of a monic quadratic origin-fixing cocycle, using the closure extension.
fn zeta2(c: &BlaschkeCocycle, p: &BasePoint) -> Complex64 {
    c.field().blocks()[0].tail_at(p)[0]
}

fn combined_smoothness(a: &CoefficientField, b: &CoefficientField) -> Smoothness {
    a.smoothness().min(b.smoothness())
}

/// `T_ξ + T_χ` with coefficient `Φ⁻¹(Φ(ξ₂,ω) + Φ(χ₂,ω))`.
pub fn add_cocycles(a: &BlaschkeCocycle, b: &BlaschkeCocycle) -> Result<BlaschkeCocycle> {
    check_pair(a, b)?;
    let (ca, cb) = (a.clone(), b.clone());
    let field = CoefficientField::origin_fixing(2, move |p| {
        vec![phi_inverse(phi_raw(zeta2(&ca, p)) + phi_raw(zeta2(&cb, p)))]
    })
    .with_smoothness(combined_smoothness(a.field(), b.field()))
    .with_label(format!("({}) + ({})", a.field().label(), b.field().label()));
    BlaschkeCocycle::new(*a.driving(), field)
}

/// `α T_ξ` with coefficient `Φ⁻¹(α Φ(ξ₂,ω))`.
pub fn scale_cocycle(alpha: Complex64, a: &BlaschkeCocycle) -> Result<BlaschkeCocycle> {
    check_quadratic(a, "operand")?;
    let ca = a.clone();
    let field = CoefficientField::origin_fixing(2, move |p| vec![phi_inverse(alpha * phi_raw(zeta2(&ca, p)))])
        .with_smoothness(a.field().smoothness())
        .with_label(format!("{alpha} · ({})", a.field().label()));
    BlaschkeCocycle::new(*a.driving(), field)
}

/// Grid-and-refine estimate of an essential supremum over the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub witness: Option<BasePoint>,
    /// False when some input field is only measurable, in which case the
    /// value estimates the essential supremum from the grid.
    pub exact: bool,
}

/// Supremum of `f` over a base grid, refined by golden-section search around
/// the grid maximiser on the circle.
fn base_sup<F>(c: &BlaschkeCocycle, grid: usize, exact: bool, f: F) -> SupEstimate
where
    F: Fn(&BasePoint) -> f64 + Sync,
{
    let points = match c.driving().kind() {
        DomainKind::Circle => c.driving().grid(grid),
        DomainKind::Disk2d => c.driving().grid(((grid as f64).sqrt().ceil() as usize).max(8)),
    };
    let values: Vec<f64> = points.par_iter().map(&f).collect();
    let (j, &v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let mut best = SupEstimate {
        value: v,
        witness: Some(points[j]),
        exact,
    };
    if let BasePoint::Circle(t) = points[j] {
        let h = 1.0 / grid as f64;
        let g = |s: f64| f(&BasePoint::Circle(s.rem_euclid(1.0)));
        let (s, refined) = golden_max(g, t - h, t + h, REFINE_ITERATIONS);
        if refined > best.value {
            best.value = refined;
            best.witness = Some(BasePoint::Circle(s.rem_euclid(1.0)));
        }
    }
    best
}

/// `d(T_φ, T_χ) = esssup_ω |Φ(φ₂,ω) - Φ(χ₂,ω)|` on the default grid.
pub fn metric_d(a: &BlaschkeCocycle, b: &BlaschkeCocycle) -> Result<SupEstimate> {
    metric_d_with_grid(a, b, METRIC_GRID)
}

pub fn metric_d_with_grid(a: &BlaschkeCocycle, b: &BlaschkeCocycle, grid: usize) -> Result<SupEstimate> {
    check_pair(a, b)?;
    let exact = combined_smoothness(a.field(), b.field()) == Smoothness::C1;
    Ok(base_sup(a, grid, exact, |p| {
        (phi_raw(zeta2(a, p)) - phi_raw(zeta2(b, p))).norm()
    }))
}

/// `d′(T, S) = esssup_ω max_{|z|=1} |T_ω(z) - S_ω(z)|`.
pub fn metric_dprime(a: &BlaschkeCocycle, b: &BlaschkeCocycle) -> Result<SupEstimate> {
    metric_dprime_with_grid(a, b, METRIC_GRID)
}

pub fn metric_dprime_with_grid(a: &BlaschkeCocycle, b: &BlaschkeCocycle, grid: usize) -> Result<SupEstimate> {
    if a.driving() != b.driving() {
        return Err(LabError::ClassMismatch(
            "operands are driven by different base systems".into(),
        ));
    }
    let exact = combined_smoothness(a.field(), b.field()) == Smoothness::C1;
    // both fields are evaluated through their blocks so the closing endpoint is usable
    let fiber = |c: &BlaschkeCocycle, p: &BasePoint| -> Option<BlaschkeProduct> {
        let block = match p {
            BasePoint::Circle(t) => c.field().blocks().iter().find(|b| b.start() <= *t && *t <= b.end())?,
            BasePoint::Disk(_) => c.field().blocks().first()?,
        };
        BlaschkeProduct::new(c.field().rho_at(p), block.zeros_at(p)).ok()
    };
    let est = base_sup(a, grid, exact, |p| match (fiber(a, p), fiber(b, p)) {
        (Some(t), Some(s)) => sup_difference(&t, &s, 1.0, DPRIME_CIRCLE_GRID),
        _ => f64::NAN,
    });
    if !est.value.is_finite() {
        return Err(LabError::InvalidField(
            "a fiber could not be formed on the metric grid".into(),
        ));
    }
    Ok(est)
}

fn sup_difference(t: &BlaschkeProduct, s: &BlaschkeProduct, radius: f64, samples: usize) -> f64 {
    circle_sup(|z| (t.eval_unchecked(z) - s.eval_unchecked(z)).norm(), radius, samples)
}

/// `d″` between two autonomous products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Bound on the omitted tail `Σ_{n>64} 2^{-n} sup |T - S| ≤ 2^{-64}`.
    pub tail_bound: f64,
}

/// `d″(T, S) = Σ_{n≥2} 2^{-n} sup_{D_{1-1/n}} |T - S|`, truncated after `n = 64`.
///
/// `T - S` is holomorphic on the unit disk, so each supremum is a maximum over
/// the circle of radius `1 - 1/n`.
pub fn metric_ddprime(t: &BlaschkeProduct, s: &BlaschkeProduct) -> SeriesEstimate {
    let value = (2..=DDPRIME_TERMS)
        .map(|n| {
            let r = 1.0 - 1.0 / n as f64;
            0.5f64.powi(n as i32) * sup_difference(t, s, r, CIRCLE_GRID)
        })
        .sum();
    SeriesEstimate {
        value,
        tail_bound: 0.5f64.powi(DDPRIME_TERMS as i32),
    }
}

/// `C_k = 1 / (|1 - |φ₂,k|| · |1 - |φ₂||)` for a pair of quadratic coefficients.
pub fn uniformity_constant(phi_k: Complex64, phi: Complex64) -> f64 {
    1.0 / ((1.0 - phi_k.norm()).abs() * (1.0 - phi.norm()).abs())
}

/// `ζᵢ^λ = Φ⁻¹(Φ(ζᵢ) + Φ(λ))` for every `i ≥ 2`, leaving `ζ₁ = 0`.
pub fn perturb_zeros(zeros: &[Complex64], lambda: Complex64) -> Vec<Complex64> {
    let shift = phi_raw(lambda);
    let mut out = Vec::with_capacity(zeros.len());
    out.push(zeros[0]);
    out.extend(zeros[1..].iter().map(|z| phi_inverse(phi_raw(*z) + shift)));
    out
}

/// The λ-perturbation of an origin-fixing cocycle, applied on every degree block.
pub fn perturb(cocycle: &BlaschkeCocycle, lambda: Complex64) -> Result<BlaschkeCocycle> {
    phi(lambda)?;
    if !cocycle.fixes_origin() {
        return Err(LabError::ClassMismatch(
            "perturbation is defined for origin-fixing cocycles".into(),
        ));
    }
    if lambda == Complex64::new(0.0, 0.0) {
        return Ok(cocycle.clone());
    }
    let label = format!("{} perturbed by λ = {lambda}", cocycle.field().label());
    Ok(cocycle.with_mapped_zeros(label, move |z| perturb_zeros(z, lambda)))
}

/// Constant monic quadratic origin-fixing cocycle over the golden rotation.
pub fn constant_quadratic(zeta2: Complex64) -> Result<BlaschkeCocycle> {
    BlaschkeCocycle::new(
        crate::cocycle::DrivingSystem::golden_rotation(),
        presets::constant(&[zeta2]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((phi(c(0.6, 0.0)).unwrap() - c(0.75, 0.0)).norm() < 1e-15);
        assert!((phi(c(0.0, 0.6)).unwrap() - c(0.0, 0.75)).norm() < 1e-15);
        assert!(matches!(phi(c(1.0, 0.0)), Err(LabError::BoundaryBlowup { .. })));
        assert!((phi_inverse(c(0.75, 0.0)) - c(0.6, 0.0)).norm() < 1e-15);
        assert!((phi_inverse(c(1.5, 0.0)).re - 1.5 / 3.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(phi_jacobian_det(0.0, 0.0).unwrap(), 1.0);
        assert!((phi_jacobian_det(0.6, 0.0).unwrap() - 2.44140625).abs() < 1e-12);
        assert!((phi_jacobian_det(0.3, 0.4).unwrap() - 1.0 / 0.5625).abs() < 1e-12);
    }

    #[test]
    fn arithmetic_examples() {
        let a = constant_quadratic(c(0.6, 0.0)).unwrap();
        let zero = constant_quadratic(c(0.0, 0.0)).unwrap();
        let p = BasePoint::Circle(0.2);
        let sum = add_cocycles(&a, &a).unwrap();
        assert!((zeta2(&sum, &p).re - 1.5 / 3.25f64.sqrt()).abs() < 1e-15);
        assert!((zeta2(&add_cocycles(&a, &zero).unwrap(), &p) - c(0.6, 0.0)).norm() < 1e-15);
        assert_eq!(zeta2(&scale_cocycle(c(0.0, 0.0), &a).unwrap(), &p), c(0.0, 0.0));
        let two = scale_cocycle(c(2.0, 0.0), &a).unwrap();
        assert!((zeta2(&two, &p).re - 1.5 / 3.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn class_mismatch_is_reported() {
        let cubic = BlaschkeCocycle::new(
            crate::cocycle::DrivingSystem::golden_rotation(),
            presets::constant(&[c(0.2, 0.0), c(0.3, 0.0)]),
        )
        .unwrap();
        let a = constant_quadratic(c(0.6, 0.0)).unwrap();
        assert!(matches!(add_cocycles(&a, &cubic), Err(LabError::ClassMismatch(_))));
        assert!(matches!(
            scale_cocycle(c(1.0, 0.0), &cubic),
            Err(LabError::ClassMismatch(_))
        ));
    }

    #[test]
    fn metric_examples() {
        let a = constant_quadratic(c(0.6, 0.0)).unwrap();
        let zero = constant_quadratic(c(0.0, 0.0)).unwrap();
        assert_eq!(metric_d_with_grid(&a, &a, 64).unwrap().value, 0.0);
        assert!((metric_d_with_grid(&a, &zero, 64).unwrap().value - 0.75).abs() < 1e-15);
        let t = BlaschkeProduct::monic_real(&[0.0, 0.5]).unwrap();
        let s = BlaschkeProduct::new(c(-1.0, 0.0), vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!((sup_difference(&t, &s, 1.0, 1024) - 2.0).abs() < 1e-12);
        assert_eq!(metric_ddprime(&t, &t).value, 0.0);
    }

    #[test]
    fn perturbation_examples() {
        let a = constant_quadratic(c(0.6, 0.0)).unwrap();
        let p = BasePoint::Circle(0.0);
        let same = perturb(&a, c(0.0, 0.0)).unwrap();
        assert_eq!(same.fiber_map(&p).unwrap(), a.fiber_map(&p).unwrap());
        let moved = perturb(&a, c(0.6, 0.0)).unwrap();
        assert!((moved.fiber_map(&p).unwrap().zeros()[1].re - 1.5 / 3.25f64.sqrt()).abs() < 1e-15);
        assert!(matches!(perturb(&a, c(1.0, 0.0)), Err(LabError::BoundaryBlowup { .. })));
    }
}
