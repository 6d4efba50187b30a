//! A field whose degree changes along the circle: degree 2 on `[0, ½)` with
//! `ζ₂ = 0.3`, degree 3 on `[½, 1)` with `(ζ₂, ζ₃) = (0.4, 0.5)`.
//! Only the three points `-0.3, -0.4, -0.5` destabilise it.

use blaschke_lab::cocycle::{presets, BlaschkeCocycle, DrivingSystem};
use blaschke_lab::phi::perturb;
use blaschke_lab::prevalence::probe_scan;
use blaschke_lab::Complex64;

fn main() -> blaschke_lab::Result<()> {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::two_block())?;
    println!("base: {:?}", cocycle.classify_stability(4096, 1e-9)?.classification);
    for lam in [-0.3, -0.4, -0.5, -0.45] {
        let v = perturb(&cocycle, Complex64::new(lam, 0.0))?.classify_stability(4096, 1e-9)?;
        println!("λ = {lam}: {:?}", v.classification);
    }

    let probe = probe_scan(&cocycle, 512, 1)?;
    println!("unstable cells at 512²: {:?}", probe.unstable_list());
    for (i, j) in probe.unstable_list() {
        let (lam, omega) = probe.witness(i, j).expect("flagged cells carry a witness");
        println!("  ({i}, {j}) ∋ λ = {lam:.4} from {omega}");
    }
    Ok(())
}
