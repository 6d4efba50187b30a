//! When `ζ₂,ω = 0` on a quarter of the circle the fiber derivative at the fixed
//! point vanishes there and the non-trivial exponents drop to `-∞`. The QR
//! estimate of the second exponent keeps falling as the run gets longer.

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, LambdaMethod};
use blaschke_lab::transfer::qr_lyapunov;
use blaschke_lab::{Complex64, LaurentTruncation};

fn main() -> blaschke_lab::Result<()> {
    let cocycle = BlaschkeCocycle::new(
        DrivingSystem::golden_rotation(),
        presets::quarter_zero(Complex64::new(0.5, 0.0)),
    )?;
    let lambda = cocycle.lyapunov_lambda(LambdaMethod::Quadrature, 4096)?;
    println!("Λ = {}", lambda.value);
    println!("{:?}", cocycle.classify_stability(4096, 1e-9)?.classification);

    // a short truncation and a 2-frame let the collapse show before rounding
    // noise re-seeds the collapsed directions
    let trunc = LaurentTruncation::new(8)?;
    for steps in [500, 1000, 2000, 4000] {
        let est = qr_lyapunov(&cocycle, &BasePoint::Circle(0.3), trunc, 2, steps, 0)?;
        println!("{steps:>5} steps: second exponent {:.4}", est.exponents[1]);
    }
    Ok(())
}
