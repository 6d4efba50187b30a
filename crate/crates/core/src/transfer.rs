//! Truncated transfer operators of Blaschke fiber maps and Lyapunov exponents
//! of the operator cocycle.
//!
//! Each expanding fiber `T` acts on functions holomorphic near the unit circle
//! by `(Lf)(z) = Σ_{T(w) = z} f(w) / T'(w)`. Matrices are taken in the Laurent
//! basis `z^k`, `k ∈ [-K, K]`, with coefficients extracted by the discrete
//! contour integral over `N` roots of unity.

use std::f64::consts::TAU;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::blaschke::BlaschkeProduct;
use crate::cocycle::{BasePoint, BlaschkeCocycle};
use crate::error::{LabError, Result};
use crate::numeric::Welford;

/// Tolerance of the build-time self-check against pointwise evaluation.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Exponents closer than this are reported as one degenerate block.
pub const DEGENERACY_TOLERANCE: f64 = 5e-3;
pub const DEFAULT_BURNIN: usize = 50;

const FRAME_SEED: u64 = 0x6c61_7572_656e_7421;
const MATRIX_CACHE: usize = 8;
const CHOP: f64 = 1e-14;

/// Laurent basis `z^{-K}, …, z^K` and the number of circle samples used to
/// extract coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LaurentTruncation {
    cutoff: usize,
    samples: usize,
}

impl LaurentTruncation {
    /// Cutoff `K ≥ 8` with `N = (4K + 4)` rounded up to a power of two.
    pub fn new(cutoff: usize) -> Result<Self> {
        Self::with_samples(cutoff, (4 * cutoff + 4).next_power_of_two())
    }

    pub fn with_samples(cutoff: usize, samples: usize) -> Result<Self> {
        if cutoff < 8 {
            return Err(LabError::DomainError(format!("Laurent cutoff {cutoff} < 8")));
        }
        if samples < 4 * cutoff + 4 {
            return Err(LabError::DomainError(format!(
                "{samples} circle samples are too few for cutoff {cutoff}; need at least {}",
                4 * cutoff + 4
            )));
        }
        Ok(Self { cutoff, samples })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn dimension(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Position of the coefficient of `z^k` in a coefficient vector.
    pub fn index(&self, k: i64) -> Option<usize> {
        let kk = self.cutoff as i64;
        (-kk..=kk).contains(&k).then(|| (k + kk) as usize)
    }

    /// Exponent carried by position `i`.
    pub fn power(&self, i: usize) -> i64 {
        i as i64 - self.cutoff as i64
    }

    /// Coefficient vector of the monomial `z^k`.
    pub fn monomial(&self, k: i64) -> Result<Vec<Complex64>> {
        let i = self
            .index(k)
            .ok_or_else(|| LabError::DomainError(format!("z^{k} is outside the truncation |k| ≤ {}", self.cutoff)))?;
        let mut v = vec![Complex64::new(0.0, 0.0); self.dimension()];
        v[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Evaluates the Laurent polynomial with coefficient vector `coeffs` at `z`.
    pub fn evaluate(&self, coeffs: &[Complex64], z: Complex64) -> Complex64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * z.powi(self.power(i) as i32))
            .sum()
    }
}

/// Matrix of one fiber's transfer operator in the truncated Laurent basis.
///
/// Entry `(j, k)` is the coefficient of `z^j` in `L(z^k)`, both indices shifted
/// by `K`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    source_fiber: BlaschkeProduct,
    truncation: LaurentTruncation,
}

/// `(Lf)(z)` by direct summation over the preimages of `z`.
pub fn transfer_pointwise<F: Fn(Complex64) -> Complex64>(
    bp: &BlaschkeProduct,
    f: F,
    z: Complex64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for w in bp.preimages(z)? {
        acc += f(w) / bp.derivative(w)?;
    }
    Ok(acc)
}

fn check_expanding(bp: &BlaschkeProduct) -> Result<()> {
    if bp.is_expanding() {
        Ok(())
    } else {
        Err(LabError::NotExpanding {
            min_derivative: bp.min_circle_derivative(4096),
        })
    }
}

/// Builds the truncated matrix of `L` for an expanding product.
///
/// Preimages of the `N` sample points are solved once; each column then sums
/// `w^k / T'(w)` over them and is transformed by one FFT. The result is
/// checked against pointwise evaluation of `L` on a fixed Laurent polynomial
/// before it is returned.
pub fn build_matrix(bp: &BlaschkeProduct, trunc: LaurentTruncation) -> Result<OperatorMatrix> {
    check_expanding(bp)?;
    let n = trunc.samples();
    let kk = trunc.cutoff() as i64;
    let dim = trunc.dimension();

    let nodes: Result<Vec<Vec<(Complex64, Complex64)>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let z = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
            bp.preimages(z)?
                .into_iter()
                .map(|w| Ok((w, 1.0 / bp.derivative(w)?)))
                .collect()
        })
        .collect();
    let nodes = nodes?;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            let k = col as i32 - kk as i32;
            let mut buffer: Vec<Complex64> = nodes
                .iter()
                .map(|pre| pre.iter().map(|(w, inv)| w.powi(k) * inv).sum())
                .collect();
            fft.process(&mut buffer);
            (0..dim)
                .map(|row| {
                    let m = row as i64 - kk;
                    let v = buffer[m.rem_euclid(n as i64) as usize] / n as f64;
                    if v.norm() < CHOP {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();

    let entries = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
    let matrix = OperatorMatrix {
        entries,
        source_fiber: bp.clone(),
        truncation: trunc,
    };
    matrix.self_check()?;
    Ok(matrix)
}

impl OperatorMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn source_fiber(&self) -> &BlaschkeProduct {
        &self.source_fiber
    }

    pub fn truncation(&self) -> LaurentTruncation {
        self.truncation
    }

    /// Coefficient of `z^j` in `L(z^k)`.
    pub fn coefficient(&self, j: i64, k: i64) -> Option<Complex64> {
        Some(self.entries[(self.truncation.index(j)?, self.truncation.index(k)?)])
    }

    pub fn apply(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = self.truncation.dimension();
        if coeffs.len() != dim {
            return Err(LabError::DimensionMismatch {
                expected: dim,
                found: coeffs.len(),
            });
        }
        let v = DVector::from_column_slice(coeffs);
        Ok((&self.entries * v).iter().copied().collect())
    }

    /// Compares the matrix image of `Σ_{|k|≤3} c_k z^k` with direct evaluation
    /// of `L` at points between the sample nodes.
    fn self_check(&self) -> Result<()> {
        let trunc = self.truncation;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); trunc.dimension()];
        for k in -3i64..=3 {
            let c = Complex64::new(1.0 / (1.0 + k.abs() as f64), 0.25 * k as f64);
            coeffs[trunc.index(k).expect("cutoff ≥ 8")] = c;
        }
        let image = self.apply(&coeffs)?;
        let f = |w: Complex64| trunc.evaluate(&coeffs, w);
        let mut worst: f64 = 0.0;
        for j in 0..16 {
            let z = Complex64::from_polar(1.0, TAU * (j as f64 + 0.37) / 16.0);
            let direct = transfer_pointwise(&self.source_fiber, f, z)?;
            let via_matrix = trunc.evaluate(&image, z);
            worst = worst.max((direct - via_matrix).norm() / (1.0 + direct.norm()));
        }
        if worst > RESIDUAL_TOLERANCE {
            return Err(LabError::NumericalBreakdown(format!(
                "matrix self-check residual {worst:e} exceeds {RESIDUAL_TOLERANCE:e}; increase the cutoff"
            )));
        }
        Ok(())
    }
}

/// Lyapunov exponents of the operator cocycle estimated by QR iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// Exponents in descending order.
    pub exponents: Vec<f64>,
    pub steps_used: usize,
    /// Variance of each running mean, in the same order as `exponents`.
    pub running_variance: Vec<f64>,
}

impl ExponentEstimate {
    pub fn degenerate_blocks(&self) -> Vec<Range<usize>> {
        degenerate_blocks(&self.exponents, DEGENERACY_TOLERANCE)
    }
}

fn initial_frame(dim: usize, m: usize) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(FRAME_SEED);
    let raw = DMatrix::from_fn(dim, m, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    raw.qr().q()
}

/// Pushes an orthonormal `m`-frame through the fiber matrices along the orbit
/// of `start`, re-orthonormalising after every step, and averages the logs of
/// the triangular diagonal once `burnin` steps have passed.
///
/// Matrices are rebuilt only when the fiber map changes; a small cache keeps
/// the most recent distinct fibers.
pub fn qr_lyapunov(
    cocycle: &BlaschkeCocycle,
    start: &BasePoint,
    trunc: LaurentTruncation,
    m: usize,
    steps: usize,
    burnin: usize,
) -> Result<ExponentEstimate> {
    let dim = trunc.dimension();
    if m == 0 || m > dim {
        return Err(LabError::DimensionMismatch {
            expected: dim,
            found: m,
        });
    }
    let mut cache: Vec<OperatorMatrix> = Vec::new();
    let mut frame = initial_frame(dim, m);
    let mut stats = vec![Welford::default(); m];
    let mut omega = *start;
    for step in 0..burnin + steps {
        let fiber = cocycle.fiber_map(&omega)?;
        let pos = cache.iter().position(|c| c.source_fiber.same_map(&fiber, 0.0));
        let matrix = match pos {
            Some(i) => &cache[i],
            None => {
                if cache.len() == MATRIX_CACHE {
                    cache.remove(0);
                }
                cache.push(build_matrix(&fiber, trunc)?);
                cache.last().expect("just pushed")
            }
        };
        let image = &matrix.entries * &frame;
        let qr = image.qr();
        let r = qr.r();
        if step >= burnin {
            for (i, s) in stats.iter_mut().enumerate() {
                let d = r[(i, i)].norm();
                if !(d.is_finite() && d >= f64::MIN_POSITIVE) {
                    return Err(LabError::NumericalBreakdown(format!(
                        "diagonal entry {i} of the QR factor is {d:e} at step {step}"
                    )));
                }
                s.push(d.ln());
            }
        }
        frame = qr.q();
        omega = cocycle.driving().forward(&omega)?;
    }
    let mut pairs: Vec<(f64, f64)> = stats.iter().map(|s| (s.mean(), s.variance_of_mean())).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ExponentEstimate {
        exponents: pairs.iter().map(|p| p.0).collect(),
        steps_used: steps,
        running_variance: pairs.iter().map(|p| p.1).collect(),
    })
}

/// `(0, Λ, Λ, 2Λ, 2Λ, …)` truncated to `count`; `Λ = -∞` gives `(0, -∞, …)`.
pub fn analytic_spectrum(lambda: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i == 0 {
                0.0
            } else if lambda == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                i.div_ceil(2) as f64 * lambda
            }
        })
        .collect()
}

/// Moduli of the eigenvalues of the truncated matrix, in descending order.
pub fn autonomous_eigenvalues(bp: &BlaschkeProduct, trunc: LaurentTruncation) -> Result<Vec<f64>> {
    let matrix = build_matrix(bp, trunc)?;
    let eig = matrix
        .entries
        .clone()
        .eigenvalues()
        .ok_or_else(|| LabError::NumericalBreakdown("Schur decomposition did not converge".into()))?;
    let mut moduli: Vec<f64> = eig.iter().map(|e| e.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli)
}

/// Groups consecutive entries of a descending list that lie within `tol` of
/// the first entry of their group.
pub fn degenerate_blocks(exponents: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=exponents.len() {
        let split = i == exponents.len() || {
            let (a, b) = (exponents[start], exponents[i]);
            !(a == b || (a - b).abs() <= tol)
        };
        if split {
            blocks.push(start..i);
            start = i;
        }
    }
    blocks
}
