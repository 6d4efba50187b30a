//! Acceptance run: each criterion prints one `PASS` or `FAIL` line with the
//! measured quantities, and the process fails if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, Stability};
use blaschke_lab::phi::{
    constant_quadratic, metric_d, metric_ddprime, metric_dprime, perturb, phi, phi_inverse, phi_jacobian_det,
};
use blaschke_lab::prevalence::{
    estimate_with_set, probe_scan, scaling_with_set, unstable_lambda_set, DEFAULT_CURVE_GRID, DEFAULT_PLANAR_GRID,
};
use blaschke_lab::transfer::{autonomous_eigenvalues, build_matrix, qr_lyapunov};
use blaschke_lab::{BlaschkeProduct, Complex64, LaurentTruncation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Check);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `(0, Λ, Λ, 2Λ, 2Λ)` written out by hand.
fn expected_spectrum(lambda: f64) -> [f64; 5] {
    [0.0, lambda, lambda, 2.0 * lambda, 2.0 * lambda]
}

fn disk_sample(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>())
}

fn random_origin_fixing(rng: &mut ChaCha8Rng) -> BlaschkeProduct {
    let n = rng.random_range(2..=6);
    let mut zeros = vec![Complex64::new(0.0, 0.0)];
    zeros.extend((1..n).map(|_| disk_sample(rng, 0.98)));
    BlaschkeProduct::monic(zeros).unwrap()
}

/// Direct evaluation of `ρ ∏ (z - ζ)/(1 - ζ̄z)`.
fn blaschke_value(zeros: &[Complex64], z: Complex64) -> Complex64 {
    zeros
        .iter()
        .map(|a| (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z))
        .product()
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn spectrum_match() -> Check {
    let clock = Instant::now();
    let estimate = single_threaded(|| {
        let bp = BlaschkeProduct::monic_real(&[0.0, 0.5]).unwrap();
        let cocycle = BlaschkeCocycle::autonomous(&bp);
        qr_lyapunov(
            &cocycle,
            &BasePoint::Circle(0.0),
            LaurentTruncation::new(30).unwrap(),
            5,
            2000,
            50,
        )
    })
    .map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    let gap = estimate
        .exponents
        .iter()
        .zip(expected_spectrum(0.5f64.ln()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((
        gap < 1e-2 && secs < 60.0,
        format!("max gap {gap:.2e}, {secs:.2}s on one thread"),
    ))
}

fn eigen_cross_oracle() -> Check {
    let bp = BlaschkeProduct::monic_real(&[0.0, 0.5]).map_err(err)?;
    let trunc = LaurentTruncation::new(30).map_err(err)?;
    let qr = qr_lyapunov(
        &BlaschkeCocycle::autonomous(&bp),
        &BasePoint::Circle(0.0),
        trunc,
        5,
        2000,
        50,
    )
    .map_err(err)?;
    let eig = autonomous_eigenvalues(&bp, trunc).map_err(err)?;
    let gap = qr
        .exponents
        .iter()
        .zip(&eig[..5])
        .map(|(e, m)| (e - m.ln()).abs())
        .fold(0.0, f64::max);
    Ok((gap < 5e-3, format!("max |QR - log|eig|| = {gap:.2e}")))
}

fn exponent_zero_span() -> Check {
    let trunc = LaurentTruncation::new(30).map_err(err)?;
    let v = trunc.monomial(-1).map_err(err)?;
    let mut fibers = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        fibers.push(random_origin_fixing(&mut rng));
    }
    for field in [presets::rotating(0.5), presets::cosine(0.5, 0.4), presets::two_block()] {
        let c = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), field).map_err(err)?;
        for k in 0..20 {
            fibers.push(c.fiber_map(&BasePoint::Circle(k as f64 / 20.0)).map_err(err)?);
        }
    }
    let mut worst = 0.0f64;
    let mut tested = 0;
    for bp in &fibers {
        // the truncated matrix is only meaningful for expanding fibers
        let Ok(m) = build_matrix(bp, trunc) else { continue };
        let lv = m.apply(&v).map_err(err)?;
        let r = lv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
        tested += 1;
    }
    Ok((
        worst < 1e-8 && tested >= 60,
        format!("{tested} fiber matrices, worst residual {worst:.2e}"),
    ))
}

fn admissibility_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    for _ in 0..1000 {
        let bp = random_origin_fixing(&mut rng);
        let moduli: Vec<f64> = bp.zeros()[1..].iter().map(|z| z.norm()).collect();
        for r in [0.3, 0.5, 0.7] {
            let m = r * moduli.iter().map(|a| (r + a) / (r * a + 1.0)).product::<f64>();
            let direct = (0..4096)
                .map(|j| blaschke_value(bp.zeros(), Complex64::from_polar(r, TAU * j as f64 / 4096.0)).norm())
                .fold(0.0, f64::max);
            let library = bp.circle_max(r, 4096);
            worst_excess = worst_excess.max(library - m).max(direct - m);
            worst_ratio = worst_ratio.max(m / r);
        }
    }
    Ok((
        worst_excess <= 1e-12 && worst_ratio < 1.0,
        format!("max(circle_max - M) = {worst_excess:.2e}, max M/R = {worst_ratio:.6}"),
    ))
}

fn phi_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut round_trip = 0.0f64;
    let mut jacobian = 0.0f64;
    for _ in 0..10_000 {
        let z = disk_sample(&mut rng, 1.0);
        let w = phi(z).map_err(err)?;
        round_trip = round_trip.max((phi_inverse(w) - z).norm());
        // central differences of the map itself, step scaled to the distance to the boundary
        let h = 1e-5 * (1.0 - z.norm_sqr());
        let f = |x: f64, y: f64| {
            let v = Complex64::new(x, y);
            v / (1.0 - v.norm_sqr()).sqrt()
        };
        let dx = (f(z.re + h, z.im) - f(z.re - h, z.im)) / (2.0 * h);
        let dy = (f(z.re, z.im + h) - f(z.re, z.im - h)) / (2.0 * h);
        let fd = dx.re * dy.im - dx.im * dy.re;
        let exact = phi_jacobian_det(z.re, z.im).map_err(err)?;
        jacobian = jacobian.max(((fd - exact) / exact).abs());
    }
    Ok((
        round_trip < 1e-13 && jacobian < 1e-6,
        format!("round trip {round_trip:.2e}, Jacobian relative {jacobian:.2e} over 10⁴ samples"),
    ))
}

fn stability_flip() -> Check {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::cosine(0.5, 0.4)).map_err(err)?;
    let v = cocycle.classify_stability(1 << 14, 1e-9).map_err(err)?;
    let base_ok = v.classification == Stability::Stable && (v.essinf_estimate - 0.1).abs() <= 1e-6;
    let mut flipped = 0;
    let grid = 64;
    for k in 0..grid {
        let omega = k as f64 / grid as f64;
        let zeta2 = 0.5 + 0.4 * (TAU * omega).cos();
        let moved = perturb(&cocycle, Complex64::new(-zeta2, 0.0)).map_err(err)?;
        if moved.classify_stability(4096, 1e-9).map_err(err)?.classification == Stability::Unstable {
            flipped += 1;
        }
    }
    Ok((
        base_ok && flipped == grid,
        format!(
            "{:?} with essinf {:.9}; {flipped}/{grid} perturbations unstable",
            v.classification, v.essinf_estimate
        ),
    ))
}

fn prevalence_1d() -> Check {
    let clock = Instant::now();
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5)).map_err(err)?;
    let set = unstable_lambda_set(&cocycle, DEFAULT_CURVE_GRID).map_err(err)?;
    let fit = scaling_with_set(&set, &[0.04, 0.02, 0.01, 0.005], 100_000, 2024).map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    // independent fit over the raw estimates
    let pts: Vec<(f64, f64)> = fit.measures.iter().map(|m| (m.epsilon.ln(), m.estimate.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok((
        (slope - 1.0).abs() <= 0.1 && (slope - fit.slope).abs() < 1e-12 && secs < 120.0,
        format!("slope {slope:.4}, {secs:.1}s"),
    ))
}

fn nonprevalence_2d() -> Check {
    let cocycle =
        BlaschkeCocycle::new(DrivingSystem::static_disk(0.3).map_err(err)?, presets::disk_identity()).map_err(err)?;
    let set = unstable_lambda_set(&cocycle, DEFAULT_PLANAR_GRID).map_err(err)?;
    let area = estimate_with_set(&set, 0.0, 100_000, 42).map_err(err)?;
    let exact = PI * 0.09;
    let rel = (area.estimate - exact).abs() / exact;
    Ok((
        rel <= 0.05,
        format!("area {:.5} vs {exact:.5}, relative {:.2}%", area.estimate, 100.0 * rel),
    ))
}

fn collapse_direction() -> Check {
    let cocycle = BlaschkeCocycle::new(
        DrivingSystem::golden_rotation(),
        presets::quarter_zero(Complex64::new(0.5, 0.0)),
    )
    .map_err(err)?;
    let trunc = LaurentTruncation::new(8).map_err(err)?;
    let mut seconds = Vec::new();
    for steps in [500, 1000, 2000, 4000] {
        let est = qr_lyapunov(&cocycle, &BasePoint::Circle(0.3), trunc, 2, steps, 0).map_err(err)?;
        seconds.push(est.exponents[1]);
    }
    let below = seconds.last().copied().unwrap_or(0.0) < -5.0;
    let decreasing = seconds.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = seconds.iter().map(|s| format!("{s:.4}")).collect();
    Ok((
        below && decreasing,
        format!("second exponent at 500/1000/2000/4000 steps: {}", shown.join(", ")),
    ))
}

fn metric_relations() -> Check {
    let limit = constant_quadratic(Complex64::new(0.5, 0.0)).map_err(err)?;
    let limit_map = BlaschkeProduct::monic_real(&[0.0, 0.5]).map_err(err)?;
    let phi_real = |x: f64| x / (1.0 - x * x).sqrt();
    let ks: Vec<usize> = (3..=10).chain([16, 32, 64, 128, 256, 512, 1024]).collect();
    let mut ordered = true;
    let mut oracle_gap = 0.0f64;
    let mut prev = [f64::INFINITY; 3];
    let mut monotone = true;
    let mut last = [0.0; 3];
    for &k in &ks {
        let z = 0.5 + 1.0 / k as f64;
        let seq = constant_quadratic(Complex64::new(z, 0.0)).map_err(err)?;
        let d = metric_d(&seq, &limit).map_err(err)?.value;
        let dp = metric_dprime(&seq, &limit).map_err(err)?.value;
        let dpp = metric_ddprime(&BlaschkeProduct::monic_real(&[0.0, z]).map_err(err)?, &limit_map).value;
        oracle_gap = oracle_gap.max((d - (phi_real(z) - phi_real(0.5))).abs());
        ordered &= dpp <= dp;
        let now = [d, dp, dpp];
        monotone &= now.iter().zip(&prev).all(|(a, b)| a < b);
        prev = now;
        last = now;
    }
    // all three are O(1/k); at k = 1024 they must be within a few multiples of 1/k
    let small = last.iter().all(|v| *v < 4.0 / 1024.0);
    Ok((
        ordered && monotone && small && oracle_gap < 1e-12,
        format!(
            "at k = 1024: d = {:.2e}, d′ = {:.2e}, d″ = {:.2e}; d″ ≤ d′ for all k: {ordered}",
            last[0], last[1], last[2]
        ),
    ))
}

fn varying_degree_union() -> Check {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::two_block()).map_err(err)?;
    let res = 512;
    let probe = probe_scan(&cocycle, res, 11).map_err(err)?;
    let w = 2.0 / res as f64;
    let mut expected: Vec<(usize, usize)> = [-0.3f64, -0.4, -0.5]
        .iter()
        .map(|x| (((x + 1.0) / w).floor() as usize, ((0.0f64 + 1.0) / w).floor() as usize))
        .collect();
    expected.sort_unstable();
    let mut found = probe.unstable_list();
    found.sort_unstable();
    Ok((found == expected, format!("flagged {found:?}, expected {expected:?}")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("spectrum match", spectrum_match),
        ("eigen/QR cross-oracle", eigen_cross_oracle),
        ("exponent-0 span", exponent_zero_span),
        ("admissibility bound", admissibility_bound),
        ("Φ suite", phi_suite),
        ("stability flip", stability_flip),
        ("prevalence, 1-D", prevalence_1d),
        ("non-prevalence witness, 2-D", nonprevalence_2d),
        ("collapse direction", collapse_direction),
        ("metric relations", metric_relations),
        ("varying-degree union", varying_degree_union),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
