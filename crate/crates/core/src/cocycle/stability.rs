use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::driving::{BasePoint, DomainKind};
use super::field::{DegreeBlock, Smoothness};
use super::BlaschkeCocycle;
use crate::error::{LabError, Result};
use crate::numeric::{batch_means_standard_error, golden_min, Welford};

/// Essential infima at or below this value are classified as unstable.
pub const DEFAULT_INSTABILITY_TOLERANCE: f64 = 1e-9;
/// Default number of base points scanned by the classifier.
pub const DEFAULT_STABILITY_GRID: usize = 1 << 14;

/// Derivatives below `e^{-700}` are treated as exact zeros.
const UNDERFLOW_LOG: f64 = -700.0;
const PULLBACK_TOL: f64 = 1e-14;
const PULLBACK_CAP: usize = 2000;
const ORBIT_BATCHES: usize = 20;
const REFINE_ITERATIONS: usize = 200;

/// How `Λ = ∫ log|T'_ω(x_ω)| dP` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMethod {
    /// Deterministic quadrature nodes of the invariant measure.
    Quadrature,
    /// Birkhoff average along the forward orbit of `start`.
    Orbit { start: BasePoint },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovIntegral {
    /// `Λ`, or `f64::NEG_INFINITY` when some evaluated derivative underflows.
    pub value: f64,
    pub standard_error: f64,
    pub evaluations: usize,
    /// `log(r/R)` from the admissibility certificate; `value` never exceeds it.
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Grid-and-refine estimate of `essinf_ω |∏_{i≥2} ζ_{i,ω}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssinfEstimate {
    pub value: f64,
    pub witness: Option<BasePoint>,
    /// True when the field is C¹ under a full-support measure, so the refined
    /// minimum converges to the essential infimum.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub classification: Stability,
    pub essinf_estimate: f64,
    pub witness_omega: Option<BasePoint>,
    pub exact: bool,
    pub tolerance: f64,
}

fn rounding_floor(value: f64, evaluations: usize) -> f64 {
    f64::EPSILON * evaluations as f64 * (1.0 + value.abs())
}

impl BlaschkeCocycle {
    /// `log|T'_ω(x_ω)|`, or `None` below the underflow threshold.
    fn log_derivative_at(&self, p: &BasePoint, x: Complex64) -> Result<Option<f64>> {
        let d = self.fiber_map(p)?.derivative(x)?.norm();
        let l = d.ln();
        Ok(if l < UNDERFLOW_LOG { None } else { Some(l) })
    }

    fn quadrature_sum(&self, nodes: usize) -> Result<Option<f64>> {
        let terms: Result<Vec<Option<f64>>> = self
            .driving
            .quadrature(nodes)
            .par_iter()
            .map(|(p, w)| {
                let x = self.pullback_fixed_point(p, PULLBACK_TOL, PULLBACK_CAP)?.point;
                Ok(self.log_derivative_at(p, x)?.map(|l| w * l))
            })
            .collect();
        let terms = terms?;
        if terms.iter().any(Option::is_none) {
            return Ok(None);
        }
        Ok(Some(terms.into_iter().flatten().sum()))
    }

    /// The Lyapunov integral `Λ = ∫ log|T'_ω(x_ω)| dP`.
    ///
    /// Quadrature reports `|Q_N - Q_{N/2}|` as its error bar, the orbit average
    /// a batch-means standard error; both are floored at the accumulated
    /// rounding error.
    pub fn lyapunov_lambda(&self, method: LambdaMethod, budget: usize) -> Result<LyapunovIntegral> {
        let cert = self.certificate()?;
        let upper_bound = cert.log_ratio();
        let budget = budget.max(2 * ORBIT_BATCHES);
        let sentinel = LyapunovIntegral {
            value: f64::NEG_INFINITY,
            standard_error: 0.0,
            evaluations: budget,
            upper_bound,
        };
        match method {
            LambdaMethod::Quadrature => {
                let Some(full) = self.quadrature_sum(budget)? else {
                    return Ok(sentinel);
                };
                let Some(half) = self.quadrature_sum(budget / 2)? else {
                    return Ok(sentinel);
                };
                Ok(LyapunovIntegral {
                    value: full,
                    standard_error: (full - half).abs().max(rounding_floor(full, budget)),
                    evaluations: budget,
                    upper_bound,
                })
            }
            LambdaMethod::Orbit { start } => {
                let mut x = self.pullback_fixed_point(&start, PULLBACK_TOL, PULLBACK_CAP)?.point;
                let mut q = start;
                let mut series = Vec::with_capacity(budget);
                let mut acc = Welford::default();
                for _ in 0..budget {
                    let fiber = self.fiber_map(&q)?;
                    let d = fiber.derivative(x)?.norm().ln();
                    if d < UNDERFLOW_LOG {
                        return Ok(sentinel);
                    }
                    series.push(d);
                    acc.push(d);
                    x = fiber.evaluate(x)?;
                    q = self.driving.forward(&q)?;
                }
                let value = acc.mean();
                let se = batch_means_standard_error(&series, ORBIT_BATCHES);
                Ok(LyapunovIntegral {
                    value,
                    standard_error: se.max(rounding_floor(value, budget)),
                    evaluations: budget,
                    upper_bound,
                })
            }
        }
    }

    /// The stability integrand on one degree block: `|∏_{i≥2} ζ_{i,ω}|` for
    /// origin-fixing fields, `|T'_ω(x_ω)|` otherwise.
    fn stability_integrand(&self, block: &DegreeBlock, p: &BasePoint) -> Result<f64> {
        if block.is_origin_fixing() {
            return Ok(block.tail_at(p).iter().product::<Complex64>().norm());
        }
        let x = self.pullback_fixed_point(p, PULLBACK_TOL, PULLBACK_CAP)?.point;
        Ok(self.fiber_map(p)?.derivative(x)?.norm())
    }

    /// Minimum of the stability integrand over a uniform grid of about `grid`
    /// base points, refined locally around the grid minimiser of every block.
    ///
    /// Each degree block is scanned on its closure, so the C¹ extension of the
    /// field to the right endpoint takes part in the minimum.
    pub fn essinf_product(&self, grid: usize) -> Result<EssinfEstimate> {
        let exact = self.driving.full_support() && self.field.smoothness() == Smoothness::C1;
        let mut best = EssinfEstimate {
            value: f64::INFINITY,
            witness: None,
            exact,
        };
        for block in self.field.blocks() {
            let mut points = self.block_points(block, grid.max(2));
            if !block.is_origin_fixing() {
                points.retain(|p| self.driving.contains(p));
            }
            let values: Result<Vec<f64>> = points.par_iter().map(|p| self.stability_integrand(block, p)).collect();
            let values = values?;
            let Some((j, &v)) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
                continue;
            };
            let (witness, value) = match self.driving.kind() {
                DomainKind::Circle => self.refine_circle(block, &points, j, v)?,
                DomainKind::Disk2d => {
                    let side = ((grid.max(2) as f64).sqrt().ceil() as usize).max(8);
                    self.refine_disk(block, points[j], v, side)
                }
            };
            if value < best.value {
                best.value = value;
                best.witness = Some(witness);
            }
        }
        if !best.value.is_finite() {
            return Err(LabError::InvalidField("no base point could be scanned".into()));
        }
        Ok(best)
    }

    fn refine_circle(&self, block: &DegreeBlock, points: &[BasePoint], j: usize, v: f64) -> Result<(BasePoint, f64)> {
        let lo = points[j.saturating_sub(1)].angle().unwrap_or(block.start());
        let hi = points[(j + 1).min(points.len() - 1)].angle().unwrap_or(block.end());
        let origin_fixing = block.is_origin_fixing();
        let f = |t: f64| {
            let p = BasePoint::Circle(t);
            if !origin_fixing && !self.driving.contains(&p) {
                return f64::INFINITY;
            }
            self.stability_integrand(block, &p).unwrap_or(f64::INFINITY)
        };
        let (t, refined) = golden_min(f, lo, hi, REFINE_ITERATIONS);
        Ok(if refined < v {
            (BasePoint::Circle(t), refined)
        } else {
            (points[j], v)
        })
    }

    /// Newton on the complex tail product followed by a compass search, both
    /// confined to the closed disk.
    fn refine_disk(&self, block: &DegreeBlock, start: BasePoint, v: f64, side: usize) -> (BasePoint, f64) {
        let radius = match self.driving {
            super::DrivingSystem::StaticDisk { radius } => radius,
            _ => return (start, v),
        };
        if !block.is_origin_fixing() {
            return (start, v);
        }
        let product = |x: f64, y: f64| -> Complex64 { block.tail_at(&BasePoint::Disk([x, y])).iter().product() };
        let inside = |x: f64, y: f64| x.hypot(y) <= radius;
        let [mut bx, mut by] = start.planar().unwrap_or([0.0, 0.0]);
        let mut best = v;

        let (mut x, mut y) = (bx, by);
        for _ in 0..30 {
            let g = product(x, y);
            let h = 1e-7;
            let gx = (product(x + h, y) - product(x - h, y)) / (2.0 * h);
            let gy = (product(x, y + h) - product(x, y - h)) / (2.0 * h);
            // solve [gx gy] (dx, dy)ᵀ = -g as a real 2×2 system
            let det = gx.re * gy.im - gy.re * gx.im;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (-g.re * gy.im + g.im * gy.re) / det;
            let dy = (-gx.re * g.im + gx.im * g.re) / det;
            x += dx;
            y += dy;
            if !x.is_finite() || !y.is_finite() || !inside(x, y) {
                break;
            }
            let m = product(x, y).norm();
            if m < best {
                best = m;
                bx = x;
                by = y;
            }
            if dx.hypot(dy) < 1e-16 {
                break;
            }
        }

        let mut step = 2.0 * radius / (side - 1) as f64;
        while step > 1e-15 {
            let mut moved = false;
            for (ex, ey) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let (cx, cy) = (bx + ex * step, by + ey * step);
                if !inside(cx, cy) {
                    continue;
                }
                let m = product(cx, cy).norm();
                if m < best {
                    best = m;
                    bx = cx;
                    by = cy;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        (BasePoint::Disk([bx, by]), best)
    }

    /// Stable iff the essential infimum of the stability integrand exceeds
    /// `tolerance`.
    pub fn classify_stability(&self, grid: usize, tolerance: f64) -> Result<StabilityVerdict> {
        let est = self.essinf_product(grid)?;
        Ok(StabilityVerdict {
            classification: if est.value > tolerance {
                Stability::Stable
            } else {
                Stability::Unstable
            },
            essinf_estimate: est.value,
            witness_omega: est.witness,
            exact: est.exact,
            tolerance,
        })
    }
}
