//! Experiment configuration files.
//!
//! Configurations are TOML documents with a few flat sections. Every key is
//! optional except where an experiment needs it; unknown keys are rejected.
//!
//! ```toml
//! experiment = "spectrum"      # spectrum | stability | prevalence | perturb | verify
//! seed = 7
//!
//! [cocycle]
//! preset = "constant"          # see `Preset`
//! zeros = [[0.5, 0.0]]         # ζ₂, …, ζₙ as [re, im] pairs
//!
//! [driving]
//! kind = "circle_rotation"     # or "static_disk" with `radius`
//!
//! [spectrum]
//! cutoff = 30
//! steps = 2000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::{presets, BlaschkeCocycle, CoefficientField, DrivingSystem, RhoField, GOLDEN_ROTATION};
use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectrum,
    Stability,
    Prevalence,
    Perturb,
    Verify,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Stability => "stability",
            Experiment::Prevalence => "prevalence",
            Experiment::Perturb => "perturb",
            Experiment::Verify => "verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named coefficient fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Constant origin-fixing tail `zeros`.
    Constant,
    /// `ζ₂,ω = radius · e^{2πiω}`.
    Rotating,
    /// `ζ₂,ω = mean + amplitude · cos 2πω`.
    Cosine,
    /// `ζ₂,ω = 0` on `[0, ¼)`, `value` elsewhere.
    QuarterZero,
    /// `ζ₂,ω = ω` over a disk base.
    DiskIdentity,
    /// Constant tails on consecutive intervals, from `blocks`.
    Piecewise,
    /// The degree 2 | 3 field with constants 0.3 | (0.4, 0.5).
    TwoBlock,
    /// Linear interpolation of a CSV table `omega,re_2,im_2,…`.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub end: f64,
    pub zeros: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSection {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Constant rotation factor `ρ` as `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingKind {
    CircleRotation,
    StaticDisk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingSection {
    pub kind: DrivingKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_disk_radius")]
    pub radius: f64,
}

fn default_alpha() -> f64 {
    GOLDEN_ROTATION
}
fn default_disk_radius() -> f64 {
    0.3
}

impl Default for DrivingSection {
    fn default() -> Self {
        Self {
            kind: DrivingKind::CircleRotation,
            alpha: default_alpha(),
            radius: default_disk_radius(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub cutoff: usize,
    pub steps: usize,
    pub burnin: usize,
    pub exponents: usize,
    pub start: f64,
    /// Quadrature nodes for `Λ`.
    pub lambda_nodes: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            cutoff: 30,
            steps: 2000,
            burnin: 50,
            exponents: 5,
            start: 0.0,
            lambda_nodes: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub grid: usize,
    pub tolerance: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            grid: 1 << 14,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrevalenceSection {
    pub epsilons: Vec<f64>,
    pub samples: usize,
    /// Base grid for the unstable set; defaults depend on the base.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    pub probe_resolution: usize,
}

impl Default for PrevalenceSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.04, 0.02, 0.01, 0.005],
            samples: 100_000,
            grid: None,
            probe_resolution: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbSection {
    /// `λ` as `[re, im]`; defaults to minus the field value at `omega`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    pub omega: f64,
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self {
            lambda: None,
            omega: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cocycle")]
    pub cocycle: CocycleSection,
    #[serde(default)]
    pub driving: DrivingSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub prevalence: PrevalenceSection,
    #[serde(default)]
    pub perturb: PerturbSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_cocycle() -> CocycleSection {
    CocycleSection {
        preset: Preset::Constant,
        zeros: Some(vec![[0.5, 0.0]]),
        radius: None,
        mean: None,
        amplitude: None,
        value: None,
        blocks: None,
        table: None,
        rho: None,
    }
}

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    /// Dotted key, e.g. `cocycle.zeros[0]`; empty for syntax errors.
    pub key: String,
    /// 1-based line in the source text, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (Some(l), false) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "`{}`: {}", self.key, self.message),
            (None, true) => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(ConfigIssue),
    #[error("validation failed:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn class(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "ParseError",
            ConfigError::Validation(_) => "ValidationError",
        }
    }

    pub fn issues(&self) -> Vec<ConfigIssue> {
        match self {
            ConfigError::Parse(i) => vec![i.clone()],
            ConfigError::Validation(v) => v.clone(),
        }
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `key` is assigned inside `[section]` (or at top level).
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        if current == section && lhs.trim() == key {
            return Some(n + 1);
        }
    }
    None
}

struct Issues<'a> {
    text: &'a str,
    list: Vec<ConfigIssue>,
}

impl Issues<'_> {
    fn push(&mut self, section: &str, key: &str, suffix: &str, message: String) {
        let dotted = if section.is_empty() {
            format!("{key}{suffix}")
        } else {
            format!("{section}.{key}{suffix}")
        };
        self.list.push(ConfigIssue {
            key: dotted,
            line: line_of(self.text, section, key),
            message,
        });
    }

    fn range_f(&mut self, section: &str, key: &str, v: f64, lo: f64, hi: f64, open: bool) {
        let ok = if open { v > lo && v < hi } else { v >= lo && v <= hi };
        if !ok || !v.is_finite() {
            let (l, r) = if open { ('(', ')') } else { ('[', ']') };
            self.push(section, key, "", format!("{v} is outside {l}{lo}, {hi}{r}"));
        }
    }

    fn range_u(&mut self, section: &str, key: &str, v: usize, lo: usize, hi: usize) {
        if v < lo || v > hi {
            self.push(section, key, "", format!("{v} is outside [{lo}, {hi}]"));
        }
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        ConfigError::Parse(ConfigIssue {
            key: String::new(),
            line: e.span().map(|s| line_at(text, s.start)),
            message: e.message().trim().to_string(),
        })
    })?;
    let issues = validate(&config, text);
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(issues))
    }
}

fn check_zero_list(issues: &mut Issues<'_>, section: &str, key: &str, zeros: &[[f64; 2]]) {
    if zeros.is_empty() {
        issues.push(section, key, "", "at least one zero (ζ₂) is required".into());
    }
    for (i, [re, im]) in zeros.iter().enumerate() {
        let m = re.hypot(*im);
        if !(m < 1.0) {
            issues.push(
                section,
                key,
                &format!("[{i}]"),
                format!("|ζ{}| = {m} must be below 1", i + 2),
            );
        }
    }
}

fn validate(c: &ExperimentConfig, text: &str) -> Vec<ConfigIssue> {
    let mut is = Issues { text, list: Vec::new() };
    let co = &c.cocycle;
    let need = |is: &mut Issues<'_>, present: bool, key: &str| {
        if !present {
            is.push("cocycle", key, "", format!("required by preset {:?}", co.preset));
        }
    };
    match co.preset {
        Preset::Constant => {
            need(&mut is, co.zeros.is_some(), "zeros");
            if let Some(z) = &co.zeros {
                check_zero_list(&mut is, "cocycle", "zeros", z);
            }
        }
        Preset::Rotating => {
            need(&mut is, co.radius.is_some(), "radius");
            if let Some(r) = co.radius {
                is.range_f("cocycle", "radius", r, 0.0, 1.0, false);
                if r >= 1.0 {
                    // reported above
                }
            }
        }
        Preset::Cosine => {
            need(&mut is, co.mean.is_some(), "mean");
            need(&mut is, co.amplitude.is_some(), "amplitude");
            if let (Some(m), Some(a)) = (co.mean, co.amplitude) {
                if !(m.abs() + a.abs() < 1.0) {
                    is.push(
                        "cocycle",
                        "amplitude",
                        "",
                        format!("|mean| + |amplitude| = {} must be below 1", m.abs() + a.abs()),
                    );
                }
            }
        }
        Preset::QuarterZero => {
            need(&mut is, co.value.is_some(), "value");
            if let Some(v) = co.value {
                check_zero_list(&mut is, "cocycle", "value", &[v]);
            }
        }
        Preset::DiskIdentity => {
            if c.driving.kind != DrivingKind::StaticDisk {
                is.push(
                    "driving",
                    "kind",
                    "",
                    "preset disk_identity needs kind = \"static_disk\"".into(),
                );
            }
        }
        Preset::Piecewise => {
            need(&mut is, co.blocks.is_some(), "blocks");
            if let Some(blocks) = &co.blocks {
                let mut last = 0.0;
                for (k, b) in blocks.iter().enumerate() {
                    if !(b.end > last && b.end <= 1.0) {
                        is.push(
                            "cocycle",
                            "blocks",
                            &format!("[{k}].end"),
                            format!("{} must increase and stay in (0, 1]", b.end),
                        );
                    }
                    last = b.end;
                    check_zero_list(&mut is, "cocycle", "blocks", &b.zeros);
                }
                if (last - 1.0).abs() > 1e-15 {
                    is.push("cocycle", "blocks", "", "the last block must end at 1".into());
                }
            }
        }
        Preset::TwoBlock => {}
        Preset::Table => need(&mut is, co.table.is_some(), "table"),
    }
    if co.preset != Preset::DiskIdentity && c.driving.kind == DrivingKind::StaticDisk {
        is.push(
            "driving",
            "kind",
            "",
            format!("preset {:?} is defined over the circle", co.preset),
        );
    }
    if let Some([re, im]) = co.rho {
        if (re.hypot(im) - 1.0).abs() > 1e-14 {
            is.push("cocycle", "rho", "", format!("|ρ| = {} must be 1", re.hypot(im)));
        }
    }
    is.range_f("driving", "alpha", c.driving.alpha, 0.0, 1.0, true);
    is.range_f("driving", "radius", c.driving.radius, 0.0, 1.0, true);

    let s = &c.spectrum;
    is.range_u("spectrum", "cutoff", s.cutoff, 8, 256);
    is.range_u("spectrum", "steps", s.steps, 1, 10_000_000);
    is.range_u("spectrum", "burnin", s.burnin, 0, 1_000_000);
    is.range_u("spectrum", "exponents", s.exponents, 1, 2 * s.cutoff + 1);
    is.range_f("spectrum", "start", s.start, 0.0, 1.0, false);
    if s.start >= 1.0 {
        is.push("spectrum", "start", "", "must lie in [0, 1)".into());
    }
    is.range_u("spectrum", "lambda_nodes", s.lambda_nodes, 16, 1 << 24);

    is.range_u("stability", "grid", c.stability.grid, 16, 1 << 24);
    is.range_f("stability", "tolerance", c.stability.tolerance, 0.0, 1.0, true);

    let p = &c.prevalence;
    if p.epsilons.is_empty() {
        is.push("prevalence", "epsilons", "", "at least one epsilon is required".into());
    }
    for (k, e) in p.epsilons.iter().enumerate() {
        if !(*e > 0.0 && *e < 1.0) {
            is.push(
                "prevalence",
                "epsilons",
                &format!("[{k}]"),
                format!("{e} is outside (0, 1)"),
            );
        }
    }
    if p.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        is.push(
            "prevalence",
            "epsilons",
            "",
            "epsilons must be strictly descending".into(),
        );
    }
    is.range_u("prevalence", "samples", p.samples, 10_000, 1_000_000_000);
    if let Some(g) = p.grid {
        is.range_u("prevalence", "grid", g, 16, 1 << 24);
    }
    is.range_u("prevalence", "probe_resolution", p.probe_resolution, 2, 4096);

    if let Some([re, im]) = c.perturb.lambda {
        if !(re.hypot(im) < 1.0 - 1e-12) {
            is.push(
                "perturb",
                "lambda",
                "",
                format!("|λ| = {} must be below 1", re.hypot(im)),
            );
        }
    }
    is.range_f("perturb", "omega", c.perturb.omega, 0.0, 1.0, false);
    is.list
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn read_table(path: &Path) -> Result<CoefficientField, LabError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| LabError::InvalidField(format!("cannot read table {}: {e}", path.display())))?;
    let mut omegas = Vec::new();
    let mut tails = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| LabError::InvalidField(format!("table row {}: {e}", n + 1)))?;
        let values: Vec<f64> = row
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| LabError::InvalidField(format!("table row {}: {e}", n + 1)))?;
        if values.len() < 3 || values.len().is_multiple_of(2) {
            return Err(LabError::InvalidField(format!(
                "table row {} needs omega followed by re/im pairs",
                n + 1
            )));
        }
        omegas.push(values[0]);
        tails.push(values[1..].chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    presets::table(omegas, tails)
}

impl ExperimentConfig {
    /// Configuration used when a subcommand runs without a file.
    pub fn default_for(experiment: Experiment) -> Self {
        let mut cocycle = default_cocycle();
        match experiment {
            Experiment::Stability | Experiment::Perturb => {
                cocycle = CocycleSection {
                    preset: Preset::Cosine,
                    zeros: None,
                    mean: Some(0.5),
                    amplitude: Some(0.4),
                    ..cocycle
                };
            }
            Experiment::Prevalence => {
                cocycle = CocycleSection {
                    preset: Preset::Rotating,
                    zeros: None,
                    radius: Some(0.5),
                    ..cocycle
                };
            }
            Experiment::Spectrum | Experiment::Verify => {}
        }
        Self {
            experiment,
            seed: 0,
            cocycle,
            driving: DrivingSection::default(),
            spectrum: SpectrumSection::default(),
            stability: StabilitySection::default(),
            prevalence: PrevalenceSection::default(),
            perturb: PerturbSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Resolves a relative table path against the configuration's directory
    /// and checks that the file exists.
    pub fn resolve_paths(&mut self, base: &Path) -> Result<(), ConfigError> {
        if let Some(t) = &self.cocycle.table {
            let path = if t.is_relative() { base.join(t) } else { t.clone() };
            if !path.is_file() {
                return Err(ConfigError::Validation(vec![ConfigIssue {
                    key: "cocycle.table".into(),
                    line: None,
                    message: format!("{} is not a readable file", path.display()),
                }]));
            }
            self.cocycle.table = Some(path);
        }
        Ok(())
    }

    pub fn driving_system(&self) -> Result<DrivingSystem, LabError> {
        match self.driving.kind {
            DrivingKind::CircleRotation => DrivingSystem::circle_rotation(self.driving.alpha),
            DrivingKind::StaticDisk => DrivingSystem::static_disk(self.driving.radius),
        }
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField, LabError> {
        let co = &self.cocycle;
        let missing = |k: &str| LabError::InvalidField(format!("cocycle.{k} is required"));
        let mut field = match co.preset {
            Preset::Constant => {
                let z: Vec<Complex64> = co
                    .zeros
                    .as_ref()
                    .ok_or_else(|| missing("zeros"))?
                    .iter()
                    .map(|v| complex(*v))
                    .collect();
                presets::constant(&z)
            }
            Preset::Rotating => presets::rotating(co.radius.ok_or_else(|| missing("radius"))?),
            Preset::Cosine => presets::cosine(
                co.mean.ok_or_else(|| missing("mean"))?,
                co.amplitude.ok_or_else(|| missing("amplitude"))?,
            ),
            Preset::QuarterZero => presets::quarter_zero(complex(co.value.ok_or_else(|| missing("value"))?)),
            Preset::DiskIdentity => presets::disk_identity(),
            Preset::Piecewise => {
                let blocks: Vec<(f64, Vec<Complex64>)> = co
                    .blocks
                    .as_ref()
                    .ok_or_else(|| missing("blocks"))?
                    .iter()
                    .map(|b| (b.end, b.zeros.iter().map(|v| complex(*v)).collect()))
                    .collect();
                presets::piecewise_constant(&blocks)
            }
            Preset::TwoBlock => presets::two_block(),
            Preset::Table => read_table(co.table.as_ref().ok_or_else(|| missing("table"))?)?,
        };
        if let Some(rho) = co.rho {
            field = field.with_rho(RhoField::Constant(complex(rho)));
        }
        Ok(field)
    }

    pub fn build_cocycle(&self) -> Result<BlaschkeCocycle, LabError> {
        BlaschkeCocycle::new(self.driving_system()?, self.coefficient_field()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spectrum_config_takes_defaults() {
        let c = parse_config("experiment = \"spectrum\"\n").unwrap();
        assert_eq!(c.spectrum.cutoff, 30);
        assert_eq!(c.spectrum.steps, 2000);
        assert_eq!(c.spectrum.burnin, 50);
        assert_eq!(c.cocycle.preset, Preset::Constant);
    }

    #[test]
    fn zero_outside_disk_names_the_key() {
        let text = "experiment = \"spectrum\"\n\n[cocycle]\npreset = \"constant\"\nzeros = [[1.0, 0.0]]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.class(), "ValidationError");
        let issues = err.issues();
        assert_eq!(issues[0].key, "cocycle.zeros[0]");
        assert_eq!(issues[0].line, Some(5));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text =
            "experiment = \"spectrum\"\n[cocycle]\npreset = \"constant\"\nzeros = [[0.5, 0.0]]\nzeta_3_extra = 0.1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("zeta_3_extra"), "{err}");
        assert_eq!(err.issues()[0].line, Some(5));
    }

    #[test]
    fn several_problems_are_reported_together() {
        let text = "experiment = \"prevalence\"\n[prevalence]\nsamples = 10\nepsilons = [0.01, 0.02]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.issues().len(), 2);
    }

    #[test]
    fn defaults_build_valid_cocycles() {
        for e in [
            Experiment::Spectrum,
            Experiment::Stability,
            Experiment::Prevalence,
            Experiment::Perturb,
        ] {
            let c = ExperimentConfig::default_for(e);
            assert!(validate(&c, "").is_empty());
            c.build_cocycle().unwrap();
        }
    }
}
