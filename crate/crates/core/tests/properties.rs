use std::f64::consts::TAU;

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, Stability};
use blaschke_lab::phi::{add_cocycles, constant_quadratic, perturb, perturb_zeros, phi, phi_inverse, scale_cocycle};
use blaschke_lab::prevalence::monte_carlo_parameters;
use blaschke_lab::transfer::{analytic_spectrum, build_matrix, degenerate_blocks, transfer_pointwise};
use blaschke_lab::{admissibility_bound, BlaschkeProduct, Complex64, LaurentTruncation};
use proptest::prelude::*;

fn disk_point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn origin_fixing(max_tail: usize) -> impl Strategy<Value = BlaschkeProduct> {
    prop::collection::vec(disk_point(0.95), 1..=max_tail).prop_map(|tail| {
        let mut zeros = vec![Complex64::new(0.0, 0.0)];
        zeros.extend(tail);
        BlaschkeProduct::monic(zeros).unwrap()
    })
}

fn general_product() -> impl Strategy<Value = BlaschkeProduct> {
    (prop::collection::vec(disk_point(0.95), 2..=5), 0.0..TAU)
        .prop_map(|(zeros, t)| BlaschkeProduct::new(Complex64::from_polar(1.0, t), zeros).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn circle_is_invariant(bp in general_product(), t in 0.0..TAU) {
        let w = bp.evaluate(Complex64::from_polar(1.0, t)).unwrap();
        prop_assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_maps_into_disk(bp in general_product(), z in disk_point(0.999)) {
        prop_assert!(bp.evaluate(z).unwrap().norm() < 1.0 + 1e-12);
    }

    #[test]
    fn preimages_map_back(bp in general_product(), t in 0.0..TAU) {
        let z = Complex64::from_polar(1.0, t);
        let pre = bp.preimages(z).unwrap();
        prop_assert_eq!(pre.len(), bp.degree());
        for w in pre {
            prop_assert!((bp.evaluate(w).unwrap() - z).norm() < 1e-9);
        }
    }

    #[test]
    fn contraction_bound_holds(bp in origin_fixing(4), r in 0.05..0.95f64) {
        let moduli: Vec<f64> = bp.zeros()[1..].iter().map(|z| z.norm()).collect();
        let m = admissibility_bound(&moduli, r);
        prop_assert!(bp.circle_max(r, 1024) <= m + 1e-12);
        prop_assert!(m < r);
    }

    #[test]
    fn inverse_z_is_fixed(bp in origin_fixing(3)) {
        let trunc = LaurentTruncation::new(16).unwrap();
        if let Ok(m) = build_matrix(&bp, trunc) {
            let v = trunc.monomial(-1).unwrap();
            let lv = m.apply(&v).unwrap();
            let r: f64 = lv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r < 1e-8, "residual {r}");
        }
    }

    /// The matrix reproduces the preimage sum on the unit circle for `1/z²`.
    #[test]
    fn matrix_matches_pointwise_transfer(bp in origin_fixing(2), t in 0.0..TAU) {
        prop_assume!(bp.min_circle_derivative(1024) > 1.5);
        let trunc = LaurentTruncation::new(24).unwrap();
        let m = build_matrix(&bp, trunc).unwrap();
        let lf = m.apply(&trunc.monomial(-2).unwrap()).unwrap();
        let z = Complex64::from_polar(1.0, t);
        let exact = transfer_pointwise(&bp, |w| 1.0 / (w * w), z).unwrap();
        prop_assert!((trunc.evaluate(&lf, z) - exact).norm() < 1e-8);
    }

    #[test]
    fn phi_round_trips(z in disk_point(0.999_999)) {
        prop_assert!((phi_inverse(phi(z).unwrap()) - z).norm() < 1e-13);
    }

    #[test]
    fn phi_inverse_lands_in_disk(re in -1e6..1e6f64, im in -1e6..1e6f64) {
        prop_assert!(phi_inverse(Complex64::new(re, im)).norm() < 1.0);
    }

    #[test]
    fn addition_commutes(a in disk_point(0.9), b in disk_point(0.9), t in 0.0..1.0f64) {
        let (ca, cb) = (constant_quadratic(a).unwrap(), constant_quadratic(b).unwrap());
        let p = BasePoint::Circle(t);
        let ab = add_cocycles(&ca, &cb).unwrap().field().zeros_at(&p).unwrap()[1];
        let ba = add_cocycles(&cb, &ca).unwrap().field().zeros_at(&p).unwrap()[1];
        prop_assert!((ab - ba).norm() < 1e-15);
        let expected = phi_inverse(phi(a).unwrap() + phi(b).unwrap());
        prop_assert!((ab - expected).norm() < 1e-14);
    }

    #[test]
    fn scaling_by_one_is_identity(a in disk_point(0.9)) {
        let c = constant_quadratic(a).unwrap();
        let s = scale_cocycle(Complex64::new(1.0, 0.0), &c).unwrap();
        let p = BasePoint::Circle(0.0);
        prop_assert!((s.field().zeros_at(&p).unwrap()[1] - a).norm() < 1e-14);
    }

    /// Perturbations compose by adding their parameters in Φ-coordinates.
    #[test]
    fn perturbations_compose(z in disk_point(0.8), l1 in disk_point(0.6), l2 in disk_point(0.6)) {
        let zeros = [Complex64::new(0.0, 0.0), z];
        let twice = perturb_zeros(&perturb_zeros(&zeros, l1), l2);
        let joint = phi_inverse(phi(l1).unwrap() + phi(l2).unwrap());
        let once = perturb_zeros(&zeros, joint);
        prop_assert!((twice[1] - once[1]).norm() < 1e-12);
        prop_assert_eq!(twice[0], Complex64::new(0.0, 0.0));
    }

    /// `λ = -ζ₂,ω₀` destabilises the rotating field at any ω₀.
    #[test]
    fn opposite_perturbation_destabilises(t in 0.0..1.0f64) {
        let c = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5)).unwrap();
        let zeta = c.field().zeros_at(&BasePoint::Circle(t)).unwrap()[1];
        let v = perturb(&c, -zeta).unwrap().classify_stability(2048, 1e-9).unwrap();
        prop_assert_eq!(v.classification, Stability::Unstable);
    }

    /// For constant fields the essinf is the product of tail moduli.
    #[test]
    fn constant_field_essinf(tail in prop::collection::vec(disk_point(0.95), 1..4)) {
        prop_assume!(tail.iter().all(|z| z.norm() > 1e-3));
        let c = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::constant(&tail)).unwrap();
        let v = c.classify_stability(256, 1e-9).unwrap();
        let expected: f64 = tail.iter().map(|z| z.norm()).product();
        prop_assert!((v.essinf_estimate - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn spectrum_pairs_are_degenerate(lambda in -5.0..-0.01f64, count in 1usize..12) {
        let s = analytic_spectrum(lambda, count);
        prop_assert_eq!(s[0], 0.0);
        let blocks = degenerate_blocks(&s, 1e-12);
        prop_assert_eq!(blocks.iter().map(|b| b.len()).sum::<usize>(), count);
        for b in &blocks[1..] {
            prop_assert!(b.len() <= 2);
        }
    }

    #[test]
    fn monte_carlo_sample_is_reproducible(seed in any::<u64>(), n in 1usize..20_000) {
        let a = monte_carlo_parameters(n, seed);
        prop_assert_eq!(&a, &monte_carlo_parameters(n, seed));
        prop_assert!(a.iter().all(|z| z.norm() < 1.0));
    }
}
