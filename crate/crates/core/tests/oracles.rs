//! Library results checked against values computed independently here.

use std::f64::consts::PI;

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, LambdaMethod};
use blaschke_lab::phi::{constant_quadratic, metric_d};
use blaschke_lab::prevalence::{estimate_with_set, probe_scan_with_set, unstable_lambda_set, DEFAULT_CURVE_GRID};
use blaschke_lab::transfer::{autonomous_eigenvalues, build_matrix, transfer_pointwise};
use blaschke_lab::{admissibility_bound, BlaschkeProduct, Complex64, LaurentTruncation};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn squaring_map_transfer_of_constants_vanishes() {
    // preimages ±√z with T'(w) = 2w: 1/(2√z) - 1/(2√z) = 0
    let sq = BlaschkeProduct::monic(vec![c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    for t in [0.1, 1.3, 4.0] {
        let z = Complex64::from_polar(1.0, t);
        assert!(transfer_pointwise(&sq, |_| c(1.0, 0.0), z).unwrap().norm() < 1e-15);
        let inv = transfer_pointwise(&sq, |w| 1.0 / w, z).unwrap();
        assert!((inv - 1.0 / z).norm() < 1e-15);
    }
    let trunc = LaurentTruncation::new(10).unwrap();
    let m = build_matrix(&sq, trunc).unwrap();
    let l1 = m.apply(&trunc.monomial(0).unwrap()).unwrap();
    assert!(l1.iter().all(|v| v.norm() < 1e-14));
}

#[test]
fn eigenvalues_of_quadratic_fiber() {
    // T(z) = z (z - a)/(1 - a z): the matrix is block triangular with
    // diagonal 1, (-a)^p on z^{-p-1} and (-a)^{k} on z^{k}
    let a: f64 = 0.5;
    let bp = BlaschkeProduct::monic_real(&[0.0, a]).unwrap();
    let eig = autonomous_eigenvalues(&bp, LaurentTruncation::new(24).unwrap()).unwrap();
    let mut expected = vec![1.0];
    for p in 1..=4 {
        expected.push(a.powi(p));
        expected.push(a.powi(p));
    }
    for (e, x) in eig.iter().zip(&expected) {
        assert!((e - x).abs() < 1e-10, "{e} vs {x}");
    }
}

#[test]
fn admissibility_bound_closed_form() {
    let r: f64 = 0.5;
    let m = r * ((r + 0.9) / (r * 0.9 + 1.0)).powi(2);
    assert!((admissibility_bound(&[0.9, 0.9], r) - m).abs() < 1e-15);
    assert!((m - 0.466112).abs() < 1e-6);
}

#[test]
fn lyapunov_integral_of_cosine_field() {
    // ∫ log|a + b cos 2πω| dω = log((a + sqrt(a² - b²)) / 2) for a > |b|
    for (a, b) in [(0.5, 0.4), (0.6, 0.2), (0.3, 0.25)] {
        let field = presets::cosine(a, b);
        let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), field).unwrap();
        let exact = ((a + (a * a - b * b).sqrt()) / 2.0).ln();
        let q = cocycle.lyapunov_lambda(LambdaMethod::Quadrature, 4096).unwrap();
        assert!((q.value - exact).abs() < 1e-9, "{} vs {exact}", q.value);
        assert!(q.value <= q.upper_bound);
        let orbit = cocycle
            .lyapunov_lambda(
                LambdaMethod::Orbit {
                    start: BasePoint::Circle(0.1),
                },
                100_000,
            )
            .unwrap();
        assert!((orbit.value - exact).abs() < 5.0 * orbit.standard_error.max(1e-4));
    }
}

#[test]
fn pullback_point_of_autonomous_product() {
    let bp = BlaschkeProduct::monic(vec![c(0.2, 0.1), c(-0.1, 0.05)]).unwrap();
    let mut z = c(0.0, 0.0);
    for _ in 0..200 {
        let w: Complex64 = bp
            .zeros()
            .iter()
            .map(|a| (z - a) / (c(1.0, 0.0) - a.conj() * z))
            .product();
        z = w;
    }
    let cocycle = BlaschkeCocycle::autonomous(&bp);
    let x = cocycle
        .pullback_fixed_point(&BasePoint::Circle(0.4), 1e-15, 500)
        .unwrap();
    assert!((x.point - z).norm() < 1e-13);
}

#[test]
fn metric_d_of_constant_fields() {
    let phi = |z: Complex64| z / (1.0 - z.norm_sqr()).sqrt();
    for (a, b) in [(c(0.5, 0.0), c(0.6, 0.0)), (c(0.1, 0.7), c(-0.3, 0.2))] {
        let d = metric_d(&constant_quadratic(a).unwrap(), &constant_quadratic(b).unwrap()).unwrap();
        assert!((d.value - (phi(a) - phi(b)).norm()).abs() < 1e-12);
    }
}

#[test]
fn tube_around_circle_has_annulus_area() {
    // unstable set of ζ₂,ω = 0.5 e^{2πiω} is the circle |λ| = 0.5
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5)).unwrap();
    let set = unstable_lambda_set(&cocycle, DEFAULT_CURVE_GRID).unwrap();
    for eps in [0.05, 0.01] {
        let m = estimate_with_set(&set, eps, 100_000, 9).unwrap();
        let exact = 2.0 * PI * eps;
        assert!(
            (m.estimate - exact).abs() < 4.0 * m.standard_error,
            "{} vs {exact}",
            m.estimate
        );
    }
}

#[test]
fn probe_of_circle_matches_cell_geometry() {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5)).unwrap();
    let set = unstable_lambda_set(&cocycle, DEFAULT_CURVE_GRID).unwrap();
    // odd resolution: no grid vertex lies on the circle
    let res = 127;
    let probe = probe_scan_with_set(&set, res, 1).unwrap();
    let w = 2.0 / res as f64;
    let mut mismatched = 0;
    let mut expected_count = 0;
    for j in 0..res {
        for i in 0..res {
            if !probe.in_disk(i, j) {
                continue;
            }
            let (x0, y0) = (-1.0 + i as f64 * w, -1.0 + j as f64 * w);
            let nx = 0.0f64.clamp(x0, x0 + w);
            let ny = 0.0f64.clamp(y0, y0 + w);
            let near = nx.hypot(ny);
            let far = [x0, x0 + w]
                .iter()
                .flat_map(|x| [y0, y0 + w].map(|y| x.hypot(y)))
                .fold(0.0, f64::max);
            if (near - 0.5).abs() < 1e-12 || (far - 0.5).abs() < 1e-12 {
                continue;
            }
            let crosses = near < 0.5 && far > 0.5;
            expected_count += usize::from(crosses);
            if crosses != probe.is_unstable(i, j) {
                mismatched += 1;
            }
        }
    }
    assert_eq!(mismatched, 0, "{mismatched} of {expected_count} cells differ");
}

#[test]
fn two_block_probe_at_odd_resolution() {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::two_block()).unwrap();
    let res = 333;
    let probe = blaschke_lab::prevalence::probe_scan(&cocycle, res, 5).unwrap();
    let w = 2.0 / res as f64;
    let mut expected: Vec<(usize, usize)> = [-0.3f64, -0.4, -0.5]
        .iter()
        .map(|x| (((x + 1.0) / w).floor() as usize, (1.0 / w).floor() as usize))
        .collect();
    expected.sort_unstable();
    let mut found = probe.unstable_list();
    found.sort_unstable();
    assert_eq!(found, expected);
}
