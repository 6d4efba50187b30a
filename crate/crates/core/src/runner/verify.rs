//! Quick invariant suites behind the `verify` experiment.
//!
//! Each suite is a scaled-down version of a property the library is expected
//! to satisfy; the full-size versions live in the integration tests.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::ExperimentConfig;
use super::{Outcome, Table};
use crate::blaschke::{admissibility_bound, BlaschkeProduct};
use crate::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, LambdaMethod, Stability};
use crate::phi::{constant_quadratic, metric_ddprime, metric_dprime, perturb, phi, phi_inverse, phi_jacobian_det};
use crate::prevalence::probe_scan;
use crate::transfer::{analytic_spectrum, build_matrix, qr_lyapunov, LaurentTruncation};

type SuiteResult = crate::Result<(bool, String)>;

fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>())
}

fn random_origin_fixing(rng: &mut ChaCha8Rng) -> crate::Result<BlaschkeProduct> {
    let n = rng.random_range(2..=5);
    let mut zeros = vec![Complex64::new(0.0, 0.0)];
    zeros.extend((1..n).map(|_| disk_point(rng, 0.95)));
    BlaschkeProduct::monic(zeros)
}

fn blaschke_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_circle = 0.0f64;
    let mut worst_preimage = 0.0f64;
    let mut worst_bound = f64::NEG_INFINITY;
    for _ in 0..100 {
        let bp = random_origin_fixing(&mut rng)?;
        let z = Complex64::from_polar(1.0, TAU * rng.random::<f64>());
        worst_circle = worst_circle.max((bp.evaluate(z)?.norm() - 1.0).abs());
        for w in bp.preimages(z)? {
            worst_preimage = worst_preimage.max((bp.evaluate(w)? - z).norm());
        }
        let moduli: Vec<f64> = bp.zeros()[1..].iter().map(|z| z.norm()).collect();
        for r in [0.3, 0.5, 0.7] {
            let m = admissibility_bound(&moduli, r);
            worst_bound = worst_bound.max(bp.circle_max(r, 512) - m).max(m - r);
        }
    }
    Ok((
        worst_circle < 1e-12 && worst_preimage < 1e-10 && worst_bound < 1e-12,
        format!(
            "|T| on circle {worst_circle:.1e}, preimage residual {worst_preimage:.1e}, bound slack {worst_bound:.1e}"
        ),
    ))
}

fn transfer_suite() -> SuiteResult {
    let trunc = LaurentTruncation::new(12)?;
    let bp = BlaschkeProduct::monic_real(&[0.0, 0.5])?;
    let matrix = build_matrix(&bp, trunc)?;
    let v = trunc.monomial(-1)?;
    let lv = matrix.apply(&v)?;
    let residual = lv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    Ok((residual < 1e-8, format!("‖L(1/z) - 1/z‖ = {residual:.1e}")))
}

fn spectrum_suite() -> SuiteResult {
    let cocycle = constant_quadratic(Complex64::new(0.5, 0.0))?;
    let trunc = LaurentTruncation::new(12)?;
    let est = qr_lyapunov(&cocycle, &BasePoint::Circle(0.0), trunc, 5, 400, 20)?;
    let analytic = analytic_spectrum(0.5f64.ln(), 5);
    let gap = est
        .exponents
        .iter()
        .zip(&analytic)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((gap < 1e-2, format!("max |exponent - analytic| = {gap:.1e}")))
}

fn stability_suite() -> SuiteResult {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::cosine(0.5, 0.4))?;
    let v = cocycle.classify_stability(4096, 1e-9)?;
    let omega = 0.25;
    let zeta = cocycle.field().zeros_at(&BasePoint::Circle(omega))?[1];
    let flipped = perturb(&cocycle, -zeta)?.classify_stability(4096, 1e-9)?;
    let lambda = cocycle.lyapunov_lambda(LambdaMethod::Quadrature, 1024)?;
    let ok = v.classification == Stability::Stable
        && (v.essinf_estimate - 0.1).abs() < 1e-6
        && flipped.classification == Stability::Unstable
        && lambda.value <= lambda.upper_bound;
    Ok((
        ok,
        format!(
            "essinf {:.9} ({:?}), after λ = -ζ₂(¼): {:?}",
            v.essinf_estimate, v.classification, flipped.classification
        ),
    ))
}

fn phi_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut round_trip = 0.0f64;
    let mut jacobian = 0.0f64;
    let h = 1e-6;
    for _ in 0..1000 {
        let z = disk_point(&mut rng, 0.95);
        round_trip = round_trip.max((phi_inverse(phi(z)?) - z).norm());
        let (x, y) = (z.re, z.im);
        let dx = (phi(Complex64::new(x + h, y))? - phi(Complex64::new(x - h, y))?) / (2.0 * h);
        let dy = (phi(Complex64::new(x, y + h))? - phi(Complex64::new(x, y - h))?) / (2.0 * h);
        let fd = dx.re * dy.im - dx.im * dy.re;
        let exact = phi_jacobian_det(x, y)?;
        jacobian = jacobian.max(((fd - exact) / exact).abs());
    }
    Ok((
        round_trip < 1e-13 && jacobian < 1e-6,
        format!("round trip {round_trip:.1e}, Jacobian relative error {jacobian:.1e}"),
    ))
}

fn metric_suite() -> SuiteResult {
    let limit = constant_quadratic(Complex64::new(0.5, 0.0))?;
    let limit_map = BlaschkeProduct::monic_real(&[0.0, 0.5])?;
    let mut ordered = true;
    let mut last = f64::INFINITY;
    let mut shrinking = true;
    for k in [4usize, 8, 16, 32, 64] {
        let z = 0.5 + 1.0 / k as f64;
        let seq = constant_quadratic(Complex64::new(z, 0.0))?;
        let dp = metric_dprime(&seq, &limit)?.value;
        let dpp = metric_ddprime(&BlaschkeProduct::monic_real(&[0.0, z])?, &limit_map).value;
        ordered &= dpp <= dp;
        shrinking &= dp < last;
        last = dp;
    }
    Ok((
        ordered && shrinking,
        format!("d′ at k = 64: {last:.2e}; d″ ≤ d′ throughout: {ordered}"),
    ))
}

fn probe_suite(seed: u64) -> SuiteResult {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::two_block())?;
    let probe = probe_scan(&cocycle, 128, seed)?;
    let expected: Vec<(usize, usize)> = {
        let mut v: Vec<_> = [-0.3, -0.4, -0.5]
            .iter()
            .filter_map(|x| probe.cell_of(Complex64::new(*x, 0.0)))
            .collect();
        v.sort_unstable();
        v
    };
    let mut found = probe.unstable_list();
    found.sort_unstable();
    Ok((found == expected, format!("unstable cells {found:?}")))
}

pub(crate) fn run_suites(config: &ExperimentConfig) -> Outcome {
    let seed = config.seed;
    let suites: Vec<(&str, SuiteResult)> = vec![
        ("blaschke", blaschke_suite(seed)),
        ("transfer", transfer_suite()),
        ("spectrum", spectrum_suite()),
        ("stability", stability_suite()),
        ("phi", phi_suite(seed)),
        ("metrics", metric_suite()),
        ("probe", probe_suite(seed)),
    ];
    let mut table = Table::new("verify", &["suite", "passed", "detail"]);
    let mut summary = Vec::new();
    let mut results = BTreeMap::new();
    let mut all = true;
    for (name, r) in suites {
        let (ok, detail) = match r {
            Ok(v) => v,
            Err(e) => (false, format!("{}: {e}", e.class())),
        };
        all &= ok;
        summary.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
        table.push([name.to_string(), ok.to_string(), detail.clone()]);
        results.insert(name.to_string(), json!({ "passed": ok, "detail": detail }));
    }
    Outcome {
        tolerances: [
            ("circle_modulus", 1e-12),
            ("preimage_residual", 1e-10),
            ("fixed_vector_residual", 1e-8),
            ("spectrum_gap", 1e-2),
            ("phi_round_trip", 1e-13),
            ("jacobian_relative", 1e-6),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect(),
        results: json!(results),
        summary,
        tables: vec![table],
        passed: all,
    }
}
