//! Evaluating a single finite Blaschke product: values, derivatives,
//! preimages, expansion on the circle and the contraction bound inside the disk.

use blaschke_lab::{admissibility_bound, BlaschkeProduct, Complex64};

fn main() -> blaschke_lab::Result<()> {
    let bp = BlaschkeProduct::monic(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(0.5, 0.2),
        Complex64::new(-0.3, 0.4),
    ])?;

    let z = Complex64::from_polar(1.0, 0.7);
    let w = bp.evaluate(z)?;
    println!("T(z) = {w:.6}, |T(z)| = {:.15}", w.norm());
    println!("T'(z) = {:.6}", bp.derivative(z)?);

    for (k, p) in bp.preimages(z)?.iter().enumerate() {
        let back = bp.evaluate(*p)?;
        println!("preimage {k}: {p:.6}  residual {:.1e}", (back - z).norm());
    }

    let martin = bp.expansion_check_martin();
    println!(
        "Martin sum {:.4} (expanding by Martin: {})",
        martin.sum, martin.expanding
    );
    println!("min |T'| on the circle: {:.4}", bp.min_circle_derivative(4096));

    let moduli: Vec<f64> = bp.zeros()[1..].iter().map(|z| z.norm()).collect();
    for r in [0.3, 0.5, 0.7] {
        let report = bp.expansion_report(r, 2048);
        println!(
            "R = {r}: max_|z|=R |T| = {:.6} <= M = {:.6} < R",
            report.circle_max_at_r,
            admissibility_bound(&moduli, r)
        );
    }
    Ok(())
}
