//! Over a two-dimensional base the unstable set can have positive area.
//! With `ζ₂,ω = ω` on `B_0.3(0)` it is the whole disk `-B_0.3(0)`.

use blaschke_lab::cocycle::{presets, BlaschkeCocycle, DrivingSystem};
use blaschke_lab::prevalence::{estimate_with_set, probe_scan_with_set, unstable_lambda_set, DEFAULT_PLANAR_GRID};

fn main() -> blaschke_lab::Result<()> {
    let cocycle = BlaschkeCocycle::new(DrivingSystem::static_disk(0.3)?, presets::disk_identity())?;
    let set = unstable_lambda_set(&cocycle, DEFAULT_PLANAR_GRID)?;
    let area = estimate_with_set(&set, 0.0, 100_000, 42)?;
    let exact = std::f64::consts::PI * 0.09;
    println!(
        "area ≈ {:.5} ± {:.5} (π·0.09 = {exact:.5}, relative gap {:+.2}%)",
        area.estimate,
        area.standard_error,
        100.0 * (area.estimate / exact - 1.0)
    );

    let probe = probe_scan_with_set(&set, 256, 42)?;
    println!(
        "probe 256²: fraction {:.4} × π = {:.4}; spot checks {}/{}",
        probe.fraction,
        probe.fraction * std::f64::consts::PI,
        probe.spot_checks_passed,
        probe.spot_checks
    );
    Ok(())
}
