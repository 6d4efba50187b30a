//! Lyapunov exponents of the transfer-operator cocycle.
//!
//! The QR estimate, the eigenvalues of the truncated matrix and the closed
//! form `{0} ∪ {nΛ, twice each}` should all agree.

use blaschke_lab::cocycle::{presets, BasePoint, BlaschkeCocycle, DrivingSystem, LambdaMethod};
use blaschke_lab::transfer::{analytic_spectrum, autonomous_eigenvalues, build_matrix, qr_lyapunov};
use blaschke_lab::{BlaschkeProduct, LaurentTruncation};

fn main() -> blaschke_lab::Result<()> {
    let trunc = LaurentTruncation::new(30)?;

    let bp = BlaschkeProduct::monic_real(&[0.0, 0.5])?;
    let autonomous = BlaschkeCocycle::autonomous(&bp);
    let qr = qr_lyapunov(&autonomous, &BasePoint::Circle(0.0), trunc, 5, 2000, 50)?;
    let eig = autonomous_eigenvalues(&bp, trunc)?;
    let exact = analytic_spectrum(0.5f64.ln(), 5);
    println!("autonomous ζ = (0, 0.5)");
    println!("{:>4} {:>12} {:>12} {:>12}", "i", "QR", "log|eig|", "analytic");
    for i in 0..5 {
        println!(
            "{i:>4} {:>12.8} {:>12.8} {:>12.8}",
            qr.exponents[i],
            eig[i].ln(),
            exact[i]
        );
    }
    println!("degenerate blocks: {:?}", qr.degenerate_blocks());

    // 1/z spans the exponent-0 direction
    let matrix = build_matrix(&bp, trunc)?;
    let v = trunc.monomial(-1)?;
    let lv = matrix.apply(&v)?;
    let residual: f64 = lv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    println!("‖L(1/z) - 1/z‖ = {residual:.1e}");

    // a genuinely random cocycle
    let rotating = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::cosine(0.5, 0.3))?;
    let lambda = rotating.lyapunov_lambda(LambdaMethod::Quadrature, 4096)?;
    let qr = qr_lyapunov(
        &rotating,
        &BasePoint::Circle(0.2),
        LaurentTruncation::new(16)?,
        5,
        2000,
        50,
    )?;
    println!("\nζ₂,ω = 0.5 + 0.3 cos 2πω, Λ = {:.6}", lambda.value);
    for (e, a) in qr.exponents.iter().zip(analytic_spectrum(lambda.value, 5)) {
        println!("  {e:>12.6}  vs {a:>12.6}");
    }
    Ok(())
}
