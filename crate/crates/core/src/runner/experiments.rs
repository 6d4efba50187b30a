use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::config::ExperimentConfig;
use super::{Context, Outcome, RunError, Table};
use crate::cocycle::{
    BasePoint, BlaschkeCocycle, LambdaMethod, Smoothness, StabilityVerdict, DEFAULT_INSTABILITY_TOLERANCE,
};
use crate::phi::{metric_d, perturb as perturb_cocycle};
use crate::prevalence::{
    default_grid, estimate_with_set, probe_scan_with_set, scaling_with_set, unstable_lambda_set, MeasureEstimate,
    ProbeMap,
};
use crate::transfer::{analytic_spectrum, qr_lyapunov, LaurentTruncation, DEGENERACY_TOLERANCE};

const PROFILE_POINTS: usize = 256;
const PULLBACK_TOL: f64 = 1e-14;
const PULLBACK_CAP: usize = 2000;

fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn coords(p: &BasePoint) -> [f64; 2] {
    match p {
        BasePoint::Circle(t) => [*t, 0.0],
        BasePoint::Disk(xy) => *xy,
    }
}

fn build(config: &ExperimentConfig) -> Result<BlaschkeCocycle, RunError> {
    config.build_cocycle().ctx("cocycle", "build_cocycle")
}

fn start_point(config: &ExperimentConfig, cocycle: &BlaschkeCocycle) -> BasePoint {
    let s = config.spectrum.start;
    match cocycle.driving() {
        crate::cocycle::DrivingSystem::CircleRotation { .. } => BasePoint::Circle(s),
        crate::cocycle::DrivingSystem::StaticDisk { radius } => BasePoint::Disk([s * radius, 0.0]),
    }
}

pub(crate) fn spectrum(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let s = &config.spectrum;
    let cocycle = build(config)?;
    let cert = cocycle.certificate().ctx("cocycle", "certificate")?;
    let lambda = cocycle
        .lyapunov_lambda(LambdaMethod::Quadrature, s.lambda_nodes)
        .ctx("cocycle", "lyapunov_lambda")?;
    let trunc = LaurentTruncation::new(s.cutoff).ctx("transfer", "truncation")?;
    let start = start_point(config, &cocycle);
    let estimate =
        qr_lyapunov(&cocycle, &start, trunc, s.exponents, s.steps, s.burnin).ctx("transfer", "qr_lyapunov")?;
    let analytic = analytic_spectrum(lambda.value, s.exponents);

    let mut table = Table::new("exponents", &["index", "estimate", "analytic", "abs_gap", "variance"]);
    let mut max_gap = 0.0f64;
    let mut summary = vec![format!("Λ = {:.6} (± {:.1e})", lambda.value, lambda.standard_error)];
    for (i, (e, a)) in estimate.exponents.iter().zip(&analytic).enumerate() {
        let gap = if a.is_finite() { (e - a).abs() } else { f64::INFINITY };
        if a.is_finite() {
            max_gap = max_gap.max(gap);
        }
        table.push([
            i.to_string(),
            e.to_string(),
            a.to_string(),
            gap.to_string(),
            estimate.running_variance[i].to_string(),
        ]);
        summary.push(format!(
            "  exponent {i}: {e:>12.6}   analytic {a:>12.6}   gap {gap:.2e}"
        ));
    }
    let blocks: Vec<[usize; 2]> = estimate.degenerate_blocks().iter().map(|r| [r.start, r.end]).collect();
    Ok(Outcome {
        tolerances: tolerances(&[("degeneracy", DEGENERACY_TOLERANCE)]),
        results: json!({
            "label": cocycle.field().label(),
            "certificate": cert,
            "lambda": lambda,
            "truncation": trunc,
            "start": start,
            "steps_used": estimate.steps_used,
            "exponents": estimate.exponents,
            "analytic": analytic,
            "max_abs_gap_finite": max_gap,
            "degenerate_blocks": blocks,
        }),
        summary,
        tables: vec![table],
        passed: true,
    })
}

fn verdict_line(name: &str, v: &StabilityVerdict) -> String {
    let w = v.witness_omega.map(|p| p.to_string()).unwrap_or_else(|| "none".into());
    format!(
        "{name}: {:?} (essinf ≈ {:.9}, witness {w}{})",
        v.classification,
        v.essinf_estimate,
        if v.exact { "" } else { ", grid estimate" }
    )
}

pub(crate) fn stability(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let st = &config.stability;
    let cocycle = build(config)?;
    let verdict = cocycle
        .classify_stability(st.grid, st.tolerance)
        .ctx("cocycle", "classify_stability")?;
    let lambda = cocycle
        .lyapunov_lambda(LambdaMethod::Quadrature, config.spectrum.lambda_nodes)
        .ctx("cocycle", "lyapunov_lambda")?;
    let profile: Vec<(BasePoint, f64)> = cocycle
        .driving()
        .grid(PROFILE_POINTS)
        .into_par_iter()
        .map(|p| {
            let x = cocycle.pullback_fixed_point(&p, PULLBACK_TOL, PULLBACK_CAP)?.point;
            Ok((p, cocycle.fiber_map(&p)?.derivative(x)?.norm()))
        })
        .collect::<crate::Result<_>>()
        .ctx("cocycle", "pullback_fixed_point")?;
    let mut table = Table::new("profile", &["omega_x", "omega_y", "abs_derivative"]);
    for (p, d) in &profile {
        let [x, y] = coords(p);
        table.push([x, y, *d]);
    }
    let mut summary = vec![verdict_line("classification", &verdict)];
    summary.push(format!("Λ = {:.6} (± {:.1e})", lambda.value, lambda.standard_error));
    if cocycle.field().smoothness() != Smoothness::C1 {
        summary.push("field is only measurable: the essinf is a grid estimate".into());
    }
    Ok(Outcome {
        tolerances: tolerances(&[("instability", st.tolerance)]),
        results: json!({
            "label": cocycle.field().label(),
            "verdict": verdict,
            "lambda": lambda,
            "smoothness": cocycle.field().smoothness(),
        }),
        summary,
        tables: vec![table],
        passed: true,
    })
}

pub(crate) fn perturb(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let st = &config.stability;
    let base = build(config)?;
    let lambda = match config.perturb.lambda {
        Some([re, im]) => Complex64::new(re, im),
        None => {
            let p = match base.driving() {
                crate::cocycle::DrivingSystem::CircleRotation { .. } => BasePoint::Circle(config.perturb.omega),
                crate::cocycle::DrivingSystem::StaticDisk { radius } => {
                    BasePoint::Disk([config.perturb.omega * radius, 0.0])
                }
            };
            let zeros = base.field().zeros_at(&p).ctx("cocycle", "zeros_at")?;
            -zeros[1]
        }
    };
    let perturbed = perturb_cocycle(&base, lambda).ctx("phi", "perturb")?;
    let distance = metric_d(&base, &perturbed).ctx("phi", "metric_d")?;

    let mut table = Table::new(
        "perturb",
        &[
            "cocycle",
            "classification",
            "essinf",
            "witness_x",
            "witness_y",
            "lambda_integral",
        ],
    );
    let mut summary = vec![format!(
        "λ = {:.6}{:+.6}i, d(base, perturbed) = {:.6}",
        lambda.re, lambda.im, distance.value
    )];
    let mut rows = Vec::new();
    for (name, c) in [("base", &base), ("perturbed", &perturbed)] {
        let v = c
            .classify_stability(st.grid, st.tolerance)
            .ctx("cocycle", "classify_stability")?;
        let l = c
            .lyapunov_lambda(LambdaMethod::Quadrature, config.spectrum.lambda_nodes)
            .ctx("cocycle", "lyapunov_lambda")?;
        let [wx, wy] = v.witness_omega.map(|p| coords(&p)).unwrap_or([f64::NAN; 2]);
        table.push([
            name.to_string(),
            format!("{:?}", v.classification),
            v.essinf_estimate.to_string(),
            wx.to_string(),
            wy.to_string(),
            l.value.to_string(),
        ]);
        summary.push(verdict_line(name, &v));
        rows.push(json!({ "cocycle": name, "verdict": v, "lambda": l }));
    }
    Ok(Outcome {
        tolerances: tolerances(&[("instability", st.tolerance)]),
        results: json!({
            "perturbation": [lambda.re, lambda.im],
            "metric_d": distance,
            "cocycles": rows,
        }),
        summary,
        tables: vec![table],
        passed: true,
    })
}

fn probe_table(probe: &ProbeMap) -> Table {
    let mut t = Table::new("probe", &["i", "j", "lambda_re", "lambda_im", "unstable"]);
    for j in 0..probe.resolution {
        for i in 0..probe.resolution {
            if !probe.in_disk(i, j) {
                continue;
            }
            let c = probe.cell_center(i, j);
            t.push([
                i.to_string(),
                j.to_string(),
                format!("{:.17e}", c.re),
                format!("{:.17e}", c.im),
                u8::from(probe.is_unstable(i, j)).to_string(),
            ]);
        }
    }
    t
}

fn measure_row(t: &mut Table, m: &MeasureEstimate) {
    t.push([
        m.epsilon.to_string(),
        m.estimate.to_string(),
        m.standard_error.to_string(),
        m.hits.to_string(),
        m.sample_count.to_string(),
    ]);
}

pub(crate) fn prevalence(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let pv = &config.prevalence;
    let cocycle = build(config)?;
    let grid = pv.grid.unwrap_or_else(|| default_grid(&cocycle));
    let set = unstable_lambda_set(&cocycle, grid).ctx("prevalence", "unstable_lambda_set")?;
    let mut measures = Table::new(
        "measures",
        &["epsilon", "estimate", "standard_error", "hits", "samples"],
    );
    let mut summary = Vec::new();
    let mut notes = Vec::new();
    let c1 = cocycle.field().smoothness() == Smoothness::C1;
    if !c1 {
        notes.push("coefficient field is only measurable: no verdict on the measure of the exact set".to_string());
    }

    let mut area = None;
    let mut fit = None;
    if set.dimension_of_base() == 1 {
        let f =
            scaling_with_set(&set, &pv.epsilons, pv.samples, config.seed).ctx("prevalence", "scaling_experiment")?;
        for m in &f.measures {
            measure_row(&mut measures, m);
        }
        summary.push(format!("fitted slope {:.4}, intercept {:.4}", f.slope, f.intercept));
        fit = Some(f);
    } else {
        let a = estimate_with_set(&set, 0.0, pv.samples, config.seed).ctx("prevalence", "estimate_unstable_measure")?;
        measure_row(&mut measures, &a);
        for &e in &pv.epsilons {
            let m =
                estimate_with_set(&set, e, pv.samples, config.seed).ctx("prevalence", "estimate_unstable_measure")?;
            measure_row(&mut measures, &m);
        }
        summary.push(format!(
            "unstable area (ε = 0) ≈ {:.5} ± {:.5}",
            a.estimate, a.standard_error
        ));
        notes.push("positive area here rules out a probe; it does not by itself prove non-prevalence".to_string());
        area = Some(a);
    }
    let probe = probe_scan_with_set(&set, pv.probe_resolution, config.seed).ctx("prevalence", "probe_scan")?;
    summary.push(format!(
        "probe {r}×{r}: {} of {} disk cells unstable (fraction {:.5}); spot checks {}/{}",
        probe.unstable_cells,
        probe.disk_cells,
        probe.fraction,
        probe.spot_checks_passed,
        probe.spot_checks,
        r = probe.resolution
    ));
    let spot_ok = probe.spot_checks_passed == probe.spot_checks;
    summary.extend(notes.iter().cloned());
    Ok(Outcome {
        tolerances: tolerances(&[
            ("instability", DEFAULT_INSTABILITY_TOLERANCE),
            ("max_gap", set.max_gap()),
        ]),
        results: json!({
            "label": cocycle.field().label(),
            "base_dimension": set.dimension_of_base(),
            "set_points": set.points().len(),
            "branches": set.branch_count(),
            "grid": grid,
            "fit": fit,
            "area": area,
            "probe": probe,
            "notes": notes,
        }),
        summary,
        tables: vec![measures, probe_table(&probe)],
        passed: spot_ok,
    })
}
