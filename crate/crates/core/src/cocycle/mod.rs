//! Blaschke product cocycles over a driving system.
//!
//! A [`BlaschkeCocycle`] pairs a [`DrivingSystem`] `σ` with a
//! [`CoefficientField`] `ω ↦ (n_ω, ρ_ω, ζ_ω)` and provides fiber maps, orbit
//! composition, admissibility certificates, the pullback random fixed point
//! `x_ω`, the Lyapunov integral `Λ` and the stability classifier.

mod driving;
mod field;
mod stability;

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::blaschke::{admissibility_bound, BlaschkeProduct, CIRCLE_GRID};
use crate::error::{LabError, Result};

pub use driving::{BasePoint, DomainKind, DrivingSystem, GOLDEN_ROTATION};
pub use field::{presets, CoefficientField, DegreeBlock, RhoField, RhoMap, Smoothness, ZeroMap};
pub use stability::{
    EssinfEstimate, LambdaMethod, LyapunovIntegral, Stability, StabilityVerdict, DEFAULT_INSTABILITY_TOLERANCE,
    DEFAULT_STABILITY_GRID,
};

/// Radii tried, in order, when certifying admissibility.
pub const RADIUS_LADDER: [f64; 7] = [0.5, 0.3, 0.7, 0.2, 0.8, 0.1, 0.9];
/// Base-point grid used for the cached certificate.
pub const CERTIFICATE_GRID: usize = 1024;

/// How the contraction radius `r` in a certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// Closed-form bound `M(ζ₂*, …, ζₙ*)` for origin-fixing fields.
    ClosedForm,
    /// Supremum over the grid of the numerical `r_{T_ω}(R)`.
    Numerical,
}

/// Outcome of an admissibility check at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// The radius `R`.
    pub radius: f64,
    /// The certified `r` with `T_ω(D_R) ⊂ D_r` for every sampled `ω`.
    pub bound: f64,
    pub admissible: bool,
    pub method: BoundMethod,
}

impl Certificate {
    /// `log(r / R)`, the upper bound on `Λ` carried by an admissible certificate.
    pub fn log_ratio(&self) -> f64 {
        (self.bound / self.radius).ln()
    }
}

/// Converged pullback point `x_ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullbackPoint {
    pub point: Complex64,
    /// Number of backward fibers composed.
    pub steps: usize,
    /// Last successive-iterate gap.
    pub gap: f64,
    /// Certified radius `r` bounding `|x_ω|`.
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct BlaschkeCocycle {
    driving: DrivingSystem,
    field: CoefficientField,
    certificate: OnceLock<std::result::Result<Certificate, LabError>>,
}

impl BlaschkeCocycle {
    /// Builds a cocycle after checking the field against the driving system on
    /// a sample of base points.
    pub fn new(driving: DrivingSystem, field: CoefficientField) -> Result<Self> {
        if driving.kind() == DomainKind::Circle {
            field.check_partition()?;
        } else if field.blocks().len() != 1 {
            return Err(LabError::InvalidField(
                "fields over a disk base must have a single degree block".into(),
            ));
        }
        let cocycle = Self {
            driving,
            field,
            certificate: OnceLock::new(),
        };
        for p in cocycle.driving.grid(64) {
            cocycle.fiber_map(&p)?;
        }
        Ok(cocycle)
    }

    /// Constant cocycle over the golden rotation.
    pub fn autonomous(bp: &BlaschkeProduct) -> Self {
        let zeros = bp.zeros().to_vec();
        let field = presets::constant_general(&zeros).with_rho(RhoField::Constant(bp.rho()));
        Self {
            driving: DrivingSystem::golden_rotation(),
            field,
            certificate: OnceLock::new(),
        }
    }

    pub fn driving(&self) -> &DrivingSystem {
        &self.driving
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn fixes_origin(&self) -> bool {
        self.field.fixes_origin()
    }

    pub fn fiber_map(&self, p: &BasePoint) -> Result<BlaschkeProduct> {
        if !self.driving.contains(p) {
            return Err(LabError::DomainError(format!("{p} is not in the base space")));
        }
        let zeros = self.field.zeros_at(p)?;
        BlaschkeProduct::new(self.field.rho_at(p), zeros)
    }

    /// `T_ω^{(n)}(z) = T_{σ^{n-1}ω} ∘ ⋯ ∘ T_ω (z)`.
    pub fn iterate(&self, p: &BasePoint, z: Complex64, steps: usize) -> Result<Complex64> {
        let mut w = z;
        let mut q = *p;
        for _ in 0..steps {
            w = self.fiber_map(&q)?.evaluate(w)?;
            q = self.driving.forward(&q)?;
        }
        Ok(w)
    }

    /// Checks `sup_ω r_{T_ω}(R) < R` over `grid` base points.
    ///
    /// Origin-fixing fields use the closed-form bound with the per-coordinate
    /// suprema `ζᵢ*` taken separately on each degree block (including the
    /// block's closing endpoint). Other fields fall back to the numerical
    /// circle maximum of every sampled fiber.
    pub fn admissible(&self, radius: f64, grid: usize) -> Result<Certificate> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(LabError::DomainError(format!("radius {radius} must lie in (0, 1)")));
        }
        let grid = grid.max(2);
        let (bound, method) = if self.fixes_origin() {
            let mut worst: f64 = 0.0;
            for block in self.field.blocks() {
                let points = self.block_points(block, grid);
                let mut sup = vec![0.0f64; block.degree() - 1];
                for p in &points {
                    for (s, z) in sup.iter_mut().zip(block.tail_at(p)) {
                        *s = s.max(z.norm());
                    }
                }
                if sup.iter().any(|s| !(*s < 1.0)) {
                    return Err(LabError::InvalidField(
                        "coefficient field leaves the open unit disk".into(),
                    ));
                }
                worst = worst.max(admissibility_bound(&sup, radius));
            }
            (worst, BoundMethod::ClosedForm)
        } else {
            let sups: Result<Vec<f64>> = self
                .driving
                .grid(grid)
                .par_iter()
                .map(|p| Ok(self.fiber_map(p)?.circle_max(radius, CIRCLE_GRID)))
                .collect();
            (sups?.into_iter().fold(0.0, f64::max), BoundMethod::Numerical)
        };
        Ok(Certificate {
            radius,
            bound,
            admissible: bound < radius,
            method,
        })
    }

    /// Points of `block` used for scans: a uniform grid over its closure on
    /// the circle, or the Cartesian grid over the disk.
    pub(crate) fn block_points(&self, block: &DegreeBlock, grid: usize) -> Vec<BasePoint> {
        match self.driving.kind() {
            DomainKind::Circle => {
                let len = block.end() - block.start();
                let n = ((grid as f64 * len).ceil() as usize).max(16);
                (0..=n)
                    .map(|j| BasePoint::Circle(block.start() + len * j as f64 / n as f64))
                    .collect()
            }
            DomainKind::Disk2d => {
                let side = (grid as f64).sqrt().ceil() as usize;
                self.driving.grid(side.max(8))
            }
        }
    }

    /// Best certificate over [`RADIUS_LADDER`] (smallest `r/R`), cached.
    pub fn certificate(&self) -> Result<Certificate> {
        self.certificate
            .get_or_init(|| {
                let mut best: Option<Certificate> = None;
                let mut closest: Option<Certificate> = None;
                for &radius in &RADIUS_LADDER {
                    let c = self.admissible(radius, CERTIFICATE_GRID)?;
                    if c.admissible {
                        if best.is_none_or(|b| c.bound / c.radius < b.bound / b.radius) {
                            best = Some(c);
                        }
                    } else if closest.is_none_or(|b| c.bound / c.radius < b.bound / b.radius) {
                        closest = Some(c);
                    }
                }
                best.ok_or_else(|| {
                    let c = closest.expect("ladder is non-empty");
                    LabError::NotAdmissible {
                        radius: c.radius,
                        bound: c.bound,
                    }
                })
            })
            .clone()
    }

    /// `x_ω = lim_n T^{(n)}_{σ^{-n}ω}(0)`.
    ///
    /// The n-th iterate composes the fibers over `σ^{-n}ω, …, σ^{-1}ω`
    /// starting from the origin; iteration stops once two successive iterates
    /// are closer than `tol`.
    pub fn pullback_fixed_point(&self, p: &BasePoint, tol: f64, cap: usize) -> Result<PullbackPoint> {
        let cert = self.certificate()?;
        if !(tol > 0.0) {
            return Err(LabError::DomainError(format!("tolerance {tol} must be positive")));
        }
        if !self.driving.contains(p) {
            return Err(LabError::DomainError(format!("{p} is not in the base space")));
        }
        let zero = Complex64::new(0.0, 0.0);
        if self.fixes_origin() {
            return Ok(PullbackPoint {
                point: zero,
                steps: 1,
                gap: 0.0,
                radius: cert.bound,
            });
        }
        // fibers[k] is the map over σ^{-(k+1)}ω
        let mut fibers: Vec<BlaschkeProduct> = Vec::new();
        let mut q = *p;
        let mut previous = zero;
        let mut gap = f64::INFINITY;
        for n in 1..=cap.max(1) {
            q = self.driving.backward(&q)?;
            fibers.push(self.fiber_map(&q)?);
            let mut w = zero;
            for f in fibers.iter().rev() {
                w = f.evaluate(w)?;
            }
            gap = (w - previous).norm();
            previous = w;
            if gap < tol {
                return Ok(PullbackPoint {
                    point: w,
                    steps: n,
                    gap,
                    radius: cert.bound,
                });
            }
        }
        Err(LabError::NoConvergence { gap, steps: cap })
    }

    /// Successive pullback gaps `|x_n - x_{n-1}|` for `n = 1..=steps`.
    pub fn pullback_gaps(&self, p: &BasePoint, steps: usize) -> Result<Vec<f64>> {
        let zero = Complex64::new(0.0, 0.0);
        let mut fibers: Vec<BlaschkeProduct> = Vec::new();
        let mut q = *p;
        let mut previous = zero;
        let mut gaps = Vec::with_capacity(steps);
        for _ in 0..steps {
            q = self.driving.backward(&q)?;
            fibers.push(self.fiber_map(&q)?);
            let mut w = zero;
            for f in fibers.iter().rev() {
                w = f.evaluate(w)?;
            }
            gaps.push((w - previous).norm());
            previous = w;
        }
        Ok(gaps)
    }

    /// Same base and rotation factors with every zero list transformed by `f`.
    pub(crate) fn with_mapped_zeros<F>(&self, label: String, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + Clone + 'static,
    {
        Self {
            driving: self.driving,
            field: self.field.map_zeros(label, f),
            certificate: OnceLock::new(),
        }
    }
}
