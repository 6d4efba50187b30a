//! Linear structure on monic quadratic cocycles through `Φ(z) = z / sqrt(1 - |z|²)`.

use blaschke_lab::phi::{
    add_cocycles, constant_quadratic, metric_d, metric_ddprime, metric_dprime, phi, phi_inverse, phi_jacobian_det,
    scale_cocycle,
};
use blaschke_lab::{BlaschkeProduct, Complex64};

fn main() -> blaschke_lab::Result<()> {
    let z = Complex64::new(0.6, -0.3);
    let w = phi(z)?;
    println!("Φ({z}) = {w:.6}, Φ⁻¹ back = {:.15}", phi_inverse(w));
    println!("det DΦ at {z} = {:.6}", phi_jacobian_det(z.re, z.im)?);

    let a = constant_quadratic(Complex64::new(0.3, 0.0))?;
    let b = constant_quadratic(Complex64::new(0.0, 0.4))?;
    let sum = add_cocycles(&a, &b)?;
    let half = scale_cocycle(Complex64::new(0.5, 0.0), &sum)?;
    let p = blaschke_lab::cocycle::BasePoint::Circle(0.0);
    println!("ζ₂ of a + b: {:.6}", sum.field().zeros_at(&p)?[1]);
    println!("ζ₂ of ½(a + b): {:.6}", half.field().zeros_at(&p)?[1]);

    println!("\nζ₂,k = 0.5 + 1/k against the limit 0.5:");
    println!("{:>5} {:>10} {:>10} {:>10}", "k", "d", "d′", "d″");
    let limit = constant_quadratic(Complex64::new(0.5, 0.0))?;
    let limit_map = BlaschkeProduct::monic_real(&[0.0, 0.5])?;
    for k in [3, 6, 12, 24, 48, 96] {
        let zk = 0.5 + 1.0 / k as f64;
        let seq = constant_quadratic(Complex64::new(zk, 0.0))?;
        let d = metric_d(&seq, &limit)?.value;
        let dp = metric_dprime(&seq, &limit)?.value;
        let dpp = metric_ddprime(&BlaschkeProduct::monic_real(&[0.0, zk])?, &limit_map).value;
        println!("{k:>5} {d:>10.5} {dp:>10.5} {dpp:>10.5}");
    }
    Ok(())
}
