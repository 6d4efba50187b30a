//! A stable cocycle and the perturbation that makes it unstable.

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, LambdaMethod};
use blaschke_lab::phi::{metric_d, perturb};

fn main() -> blaschke_lab::Result<()> {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::cosine(0.5, 0.4))?;
    let verdict = cocycle.classify_stability(1 << 14, 1e-9)?;
    let lambda = cocycle.lyapunov_lambda(LambdaMethod::Quadrature, 4096)?;
    println!(
        "ζ₂,ω = 0.5 + 0.4 cos 2πω: {:?}, essinf = {:.9}, Λ = {:.6} (≤ {:.6})",
        verdict.classification, verdict.essinf_estimate, lambda.value, lambda.upper_bound
    );

    for omega in [0.0, 0.25, 0.5, 0.8] {
        let zeta = cocycle.field().zeros_at(&BasePoint::Circle(omega))?[1];
        let moved = perturb(&cocycle, -zeta)?;
        let v = moved.classify_stability(1 << 14, 1e-9)?;
        let d = metric_d(&cocycle, &moved)?;
        println!(
            "λ = -ζ₂({omega}) = {:.4}: {:?} at {}, d = {:.4}",
            -zeta,
            v.classification,
            v.witness_omega.map(|p| p.to_string()).unwrap_or_default(),
            d.value
        );
    }
    Ok(())
}
