use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driving::BasePoint;
use crate::error::{LabError, Result};

/// Map from a base point to the zeros of the fiber map.
pub type ZeroMap = Arc<dyn Fn(&BasePoint) -> Vec<Complex64> + Send + Sync>;
/// Map from a base point to the rotation factor of the fiber map.
pub type RhoMap = Arc<dyn Fn(&BasePoint) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Measurable,
    C1,
}

/// Rotation factor field `ω ↦ ρ_ω`.
#[derive(Clone)]
pub enum RhoField {
    Unit,
    Constant(Complex64),
    Map(RhoMap),
}

impl RhoField {
    pub fn at(&self, p: &BasePoint) -> Complex64 {
        match self {
            RhoField::Unit => Complex64::new(1.0, 0.0),
            RhoField::Constant(c) => *c,
            RhoField::Map(f) => f(p),
        }
    }
}

/// A maximal interval `[start, end)` of the circle on which the degree is constant.
///
/// The zero map is the extension of the field to the closed interval, so it is
/// also evaluated at `end`. On the disk a field has a single block and the
/// interval is ignored.
#[derive(Clone)]
pub struct DegreeBlock {
    start: f64,
    end: f64,
    degree: usize,
    origin_fixing: bool,
    zeros: ZeroMap,
}

impl DegreeBlock {
    /// Block whose zero map returns the full list `(ζ₁, …, ζ_m)`.
    pub fn general<F>(start: f64, end: f64, degree: usize, zeros: F) -> Self
    where
        F: Fn(&BasePoint) -> Vec<Complex64> + Send + Sync + 'static,
    {
        Self {
            start,
            end,
            degree,
            origin_fixing: false,
            zeros: Arc::new(zeros),
        }
    }

    /// Origin-fixing block: `tail` returns `(ζ₂, …, ζ_m)` and `ζ₁ = 0` is prepended.
    pub fn origin_fixing<F>(start: f64, end: f64, degree: usize, tail: F) -> Self
    where
        F: Fn(&BasePoint) -> Vec<Complex64> + Send + Sync + 'static,
    {
        let zeros: ZeroMap = Arc::new(move |p: &BasePoint| {
            let mut z = Vec::with_capacity(degree);
            z.push(Complex64::new(0.0, 0.0));
            z.extend(tail(p));
            z
        });
        Self {
            start,
            end,
            degree,
            origin_fixing: true,
            zeros,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_origin_fixing(&self) -> bool {
        self.origin_fixing
    }

    /// Zeros of the closure extension at `p`.
    pub fn zeros_at(&self, p: &BasePoint) -> Vec<Complex64> {
        (self.zeros)(p)
    }

    /// `(ζ₂, …, ζ_m)` at `p` for an origin-fixing block.
    pub fn tail_at(&self, p: &BasePoint) -> Vec<Complex64> {
        let mut z = self.zeros_at(p);
        z.remove(0);
        z
    }

    fn covers(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

/// Measurable coefficient field `ω ↦ (n_ω, ρ_ω, ζ_ω)`.
#[derive(Clone)]
pub struct CoefficientField {
    blocks: Vec<DegreeBlock>,
    rho: RhoField,
    smoothness: Smoothness,
    label: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("label", &self.label)
            .field(
                "blocks",
                &self
                    .blocks
                    .iter()
                    .map(|b| (b.start, b.end, b.degree))
                    .collect::<Vec<_>>(),
            )
            .field("smoothness", &self.smoothness)
            .field("fixes_origin", &self.fixes_origin())
            .finish()
    }
}

impl CoefficientField {
    /// Single-block origin-fixing field of constant degree.
    pub fn origin_fixing<F>(degree: usize, tail: F) -> Self
    where
        F: Fn(&BasePoint) -> Vec<Complex64> + Send + Sync + 'static,
    {
        Self::piecewise(vec![DegreeBlock::origin_fixing(0.0, 1.0, degree, tail)])
    }

    /// Single-block field whose map returns every zero, including `ζ₁`.
    pub fn general<F>(degree: usize, zeros: F) -> Self
    where
        F: Fn(&BasePoint) -> Vec<Complex64> + Send + Sync + 'static,
    {
        Self::piecewise(vec![DegreeBlock::general(0.0, 1.0, degree, zeros)])
    }

    pub fn piecewise(blocks: Vec<DegreeBlock>) -> Self {
        Self {
            blocks,
            rho: RhoField::Unit,
            smoothness: Smoothness::C1,
            label: String::from("custom"),
        }
    }

    pub fn with_rho(mut self, rho: RhoField) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn rho_field(&self) -> &RhoField {
        &self.rho
    }

    pub fn blocks(&self) -> &[DegreeBlock] {
        &self.blocks
    }

    pub fn fixes_origin(&self) -> bool {
        self.blocks.iter().all(|b| b.origin_fixing)
    }

    pub fn is_monic(&self) -> bool {
        matches!(self.rho, RhoField::Unit)
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.iter().map(|b| b.degree).max().unwrap_or(0)
    }

    /// Checks that the blocks tile `[0, 1)` in order.
    pub(crate) fn check_partition(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(LabError::InvalidField("field has no degree blocks".into()));
        }
        let mut cursor = 0.0;
        for b in &self.blocks {
            if b.degree < 2 {
                return Err(LabError::InvalidField(format!("degree {} < 2", b.degree)));
            }
            if (b.start - cursor).abs() > 1e-15 || !(b.end > b.start) {
                return Err(LabError::InvalidField(format!(
                    "degree blocks must tile [0, 1); found [{}, {}) after {}",
                    b.start, b.end, cursor
                )));
            }
            cursor = b.end;
        }
        if (cursor - 1.0).abs() > 1e-15 {
            return Err(LabError::InvalidField(format!("degree blocks end at {cursor}, not 1")));
        }
        Ok(())
    }

    pub fn block_for(&self, p: &BasePoint) -> Result<&DegreeBlock> {
        match p {
            BasePoint::Disk(_) => self.blocks.first(),
            BasePoint::Circle(t) => self.blocks.iter().find(|b| b.covers(*t)),
        }
        .ok_or_else(|| LabError::DomainError(format!("no degree block covers {p}")))
    }

    pub fn degree_at(&self, p: &BasePoint) -> Result<usize> {
        Ok(self.block_for(p)?.degree)
    }

    pub fn rho_at(&self, p: &BasePoint) -> Complex64 {
        self.rho.at(p)
    }

    pub fn zeros_at(&self, p: &BasePoint) -> Result<Vec<Complex64>> {
        let block = self.block_for(p)?;
        let zeros = block.zeros_at(p);
        if zeros.len() != block.degree {
            return Err(LabError::InvalidField(format!(
                "zero map returned {} zeros for degree {} at {p}",
                zeros.len(),
                block.degree
            )));
        }
        Ok(zeros)
    }

    /// Rebuilds every block with a transformed zero list, keeping degrees,
    /// intervals, rotation factors and labels.
    pub(crate) fn map_zeros<F>(&self, label: String, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + Clone + 'static,
    {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let inner = b.zeros.clone();
                let g = f.clone();
                DegreeBlock {
                    start: b.start,
                    end: b.end,
                    degree: b.degree,
                    origin_fixing: b.origin_fixing,
                    zeros: Arc::new(move |p: &BasePoint| g(&inner(p))),
                }
            })
            .collect();
        Self {
            blocks,
            rho: self.rho.clone(),
            smoothness: self.smoothness,
            label,
        }
    }
}

/// Named coefficient fields used by the examples, the runner and the tests.
pub mod presets {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Origin-fixing field with constant tail zeros `(ζ₂, …, ζₙ)`.
    pub fn constant(tail: &[Complex64]) -> CoefficientField {
        let tail = tail.to_vec();
        let degree = tail.len() + 1;
        CoefficientField::origin_fixing(degree, move |_| tail.clone()).with_label("constant")
    }

    /// Constant field with every zero given explicitly (need not fix the origin).
    pub fn constant_general(zeros: &[Complex64]) -> CoefficientField {
        let zeros = zeros.to_vec();
        let degree = zeros.len();
        let fixes = zeros.first().is_some_and(|z| *z == c(0.0, 0.0));
        if fixes {
            let tail = zeros[1..].to_vec();
            return CoefficientField::origin_fixing(degree, move |_| tail.clone()).with_label("constant");
        }
        CoefficientField::general(degree, move |_| zeros.clone()).with_label("constant_general")
    }

    /// `ζ₂,ω = a · e^{2πiω}` over the circle.
    pub fn rotating(radius: f64) -> CoefficientField {
        CoefficientField::origin_fixing(2, move |p| {
            let t = p.angle().unwrap_or(0.0);
            vec![Complex64::from_polar(radius, TAU * t)]
        })
        .with_label("rotating")
    }

    /// `ζ₂,ω = mean + amplitude · cos(2πω)` over the circle.
    pub fn cosine(mean: f64, amplitude: f64) -> CoefficientField {
        CoefficientField::origin_fixing(2, move |p| {
            let t = p.angle().unwrap_or(0.0);
            vec![c(mean + amplitude * (TAU * t).cos(), 0.0)]
        })
        .with_label("cosine")
    }

    /// `ζ₂,ω = 0` for `ω ∈ [0, ¼)` and `value` elsewhere. Only measurable.
    pub fn quarter_zero(value: Complex64) -> CoefficientField {
        CoefficientField::origin_fixing(2, move |p| {
            let t = p.angle().unwrap_or(0.0);
            if t < 0.25 {
                vec![c(0.0, 0.0)]
            } else {
                vec![value]
            }
        })
        .with_smoothness(Smoothness::Measurable)
        .with_label("quarter_zero")
    }

    /// `ζ₂,ω = ω` over a disk base, reading `ω = (x, y)` as `x + iy`.
    pub fn disk_identity() -> CoefficientField {
        CoefficientField::origin_fixing(2, |p| {
            let [x, y] = p.planar().unwrap_or([0.0, 0.0]);
            vec![c(x, y)]
        })
        .with_label("disk_identity")
    }

    /// Varying degree with constant origin-fixing tails on consecutive intervals.
    ///
    /// `blocks` holds `(end, tail)` pairs; the first block starts at zero.
    pub fn piecewise_constant(blocks: &[(f64, Vec<Complex64>)]) -> CoefficientField {
        let mut start = 0.0;
        let mut out = Vec::with_capacity(blocks.len());
        for (end, tail) in blocks {
            let tail = tail.clone();
            let degree = tail.len() + 1;
            out.push(DegreeBlock::origin_fixing(start, *end, degree, move |_| tail.clone()));
            start = *end;
        }
        CoefficientField::piecewise(out).with_label("piecewise_constant")
    }

    /// The two-block field: `Ω₂ = [0, ½)` with `ζ₂ = 0.3`, `Ω₃ = [½, 1)` with `(ζ₂, ζ₃) = (0.4, 0.5)`.
    pub fn two_block() -> CoefficientField {
        piecewise_constant(&[(0.5, vec![c(0.3, 0.0)]), (1.0, vec![c(0.4, 0.0), c(0.5, 0.0)])]).with_label("two_block")
    }

    /// Origin-fixing field sampled on an increasing `ω`-grid in `[0, 1)` and
    /// interpolated linearly, wrapping from the last sample back to the first.
    pub fn table(omegas: Vec<f64>, tails: Vec<Vec<Complex64>>) -> Result<CoefficientField> {
        if omegas.len() < 2 || omegas.len() != tails.len() {
            return Err(LabError::InvalidField(
                "table needs at least two rows and one tail per ω".into(),
            ));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) || omegas[0] < 0.0 || omegas[omegas.len() - 1] >= 1.0 {
            return Err(LabError::InvalidField(
                "table ω-grid must be increasing inside [0, 1)".into(),
            ));
        }
        let width = tails[0].len();
        if width == 0 || tails.iter().any(|t| t.len() != width) {
            return Err(LabError::InvalidField(
                "table rows must all carry the same number of zeros".into(),
            ));
        }
        let degree = width + 1;
        let field = CoefficientField::origin_fixing(degree, move |p| {
            let t = p.angle().unwrap_or(0.0);
            let n = omegas.len();
            // locate the interval [ω_j, ω_{j+1}) on the periodic grid
            let j = match omegas.iter().rposition(|&w| w <= t) {
                Some(j) => j,
                None => n - 1,
            };
            let k = (j + 1) % n;
            let (a, mut b) = (omegas[j], omegas[k]);
            let mut s = t;
            if k == 0 {
                b += 1.0;
                if s < a {
                    s += 1.0;
                }
            }
            let frac = if b > a { (s - a) / (b - a) } else { 0.0 };
            tails[j]
                .iter()
                .zip(&tails[k])
                .map(|(u, v)| u + (v - u) * frac)
                .collect()
        });
        Ok(field.with_smoothness(Smoothness::Measurable).with_label("table"))
    }
}
