//! Over the circle the unstable perturbations form a curve: its ε-tubes shrink
//! linearly in ε and a fine grid flags a vanishing fraction of cells.

use blaschke_lab::cocycle::{presets, BlaschkeCocycle, DrivingSystem};
use blaschke_lab::prevalence::{probe_scan_with_set, scaling_with_set, unstable_lambda_set, DEFAULT_CURVE_GRID};

fn main() -> blaschke_lab::Result<()> {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::golden_rotation(), presets::rotating(0.5))?;
    let set = unstable_lambda_set(&cocycle, DEFAULT_CURVE_GRID)?;
    println!(
        "unstable set: {} points, max gap {:.2e}",
        set.points().len(),
        set.max_gap()
    );

    let fit = scaling_with_set(&set, &[0.04, 0.02, 0.01, 0.005], 100_000, 7)?;
    for m in &fit.measures {
        println!(
            "ε = {:<6} area ≈ {:.5} ± {:.5}",
            m.epsilon, m.estimate, m.standard_error
        );
    }
    println!("slope {:.3} (a curve has tube area ~ 2·length·ε)", fit.slope);

    for res in [64, 128, 256, 512] {
        let probe = probe_scan_with_set(&set, res, 7)?;
        println!("{res:>4}²: unstable fraction {:.5}", probe.fraction);
    }
    Ok(())
}
