//! The random fixed point `x_ω` of a cocycle that does not fix the origin,
//! found by composing fibers along the backward orbit.

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem};
use blaschke_lab::Complex64;

fn main() -> blaschke_lab::Result<()> {
    // ζ_ω = (0.15 e^{2πiω}, -0.1): both zeros away from the origin
    let field = blaschke_lab::CoefficientField::general(2, |p: &BasePoint| {
        let t = p.angle().unwrap_or(0.0);
        vec![
            Complex64::from_polar(0.15, std::f64::consts::TAU * t),
            Complex64::new(-0.1, 0.0),
        ]
    })
    .with_label("rotating pair");
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), field)?;

    let cert = cocycle.certificate()?;
    println!(
        "admissible at R = {}: r = {:.6} ({:?})",
        cert.radius, cert.bound, cert.method
    );

    let omega = BasePoint::Circle(0.1);
    let x = cocycle.pullback_fixed_point(&omega, 1e-14, 2000)?;
    println!(
        "x_ω = {:.12} after {} fibers (last gap {:.1e})",
        x.point, x.steps, x.gap
    );

    // equivariance: T_ω(x_ω) = x_{σω}
    let next = cocycle.driving().forward(&omega)?;
    let image = cocycle.fiber_map(&omega)?.evaluate(x.point)?;
    let x_next = cocycle.pullback_fixed_point(&next, 1e-14, 2000)?.point;
    println!("|T_ω(x_ω) - x_σω| = {:.1e}", (image - x_next).norm());

    println!("geometric contraction of successive gaps:");
    for (n, g) in cocycle.pullback_gaps(&omega, 12)?.iter().enumerate() {
        println!("  {n:>2}  {g:.3e}");
    }

    let fixing = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5))?;
    let origin = fixing.pullback_fixed_point(&omega, 1e-14, 2000)?;
    println!("origin-fixing cocycle: x_ω = {}", origin.point);
    Ok(())
}
