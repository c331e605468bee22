//! Experiment orchestration: JSON configs, seeded suite runs, CSV and JSON
//! artifacts, and consolidated reports over result files.
//!
//! Every artifact is written to a temporary file and renamed into place.
//! Suite outputs depend only on the config and seed, never on `--jobs`.

use crate::bands::{
    build_bands, shrink_and_rebuild, verify_band_properties, AdmissibleSampler, ShrinkOptions,
};
use crate::curve::{CurveSpec, PhiSpec};
use crate::error::Error;
use crate::extremizers::{
    duality_identities, epsilon_family_check, inv_p_d, inv_q_d, multibump_pd_le_v,
    multibump_u_le_qd, multibump_u_le_v, scaling_family_weak_norm, FamilyOptions, FamilyRow, Index,
    ScalingFit,
};
use crate::jacobian::{
    build_regions, estimate_sector_constant, factorization_residual, real_jacobian_check,
    RegionParams,
};
use crate::lorentz::{comparability_envelope, indicator_norm, numeric_lorentz_norm, StepProfile};
use crate::measure::{
    rwt_ratio, unit_ball_volume, Atom, ExponentTuple, IndicatorSet, McOptions, Operator,
    TrilinearOptions,
};
use crate::rng::SampleRng;
use crate::{ComplexCurve, RealPoint};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::Rational64 as Q;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "AVGLAB_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "avglab",
    version,
    about = "Averaging operators along complex curves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one verification suite and write its artifacts.
    Run(RunArgs),
    /// Consolidate summary files into a markdown and JSON report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the suite's internal parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; falls back to the config, then `AVGLAB_OUT_DIR`, then `results`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Main sample count of the suite.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Dimension of a monomial curve `phi(z) = z^N`.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub experiment_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Glob of summary files, e.g. `results/*.summary.json`.
    pub pattern: String,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum,
)]
pub enum Suite {
    #[serde(rename = "jacobian")]
    #[value(name = "jacobian")]
    Jacobian,
    #[serde(rename = "regions")]
    #[value(name = "regions")]
    Regions,
    #[serde(rename = "bands")]
    #[value(name = "bands")]
    Bands,
    #[serde(rename = "pairing")]
    #[value(name = "pairing")]
    Pairing,
    #[serde(rename = "trilinear")]
    #[value(name = "trilinear")]
    Trilinear,
    #[serde(rename = "lorentz")]
    #[value(name = "lorentz")]
    Lorentz,
    #[serde(rename = "appendixB")]
    #[value(name = "appendixB")]
    AppendixB,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Jacobian => "jacobian",
            Suite::Regions => "regions",
            Suite::Bands => "bands",
            Suite::Pairing => "pairing",
            Suite::Trilinear => "trilinear",
            Suite::Lorentz => "lorentz",
            Suite::AppendixB => "appendixB",
        }
    }

    fn default_samples(&self) -> usize {
        match self {
            Suite::Jacobian | Suite::Bands | Suite::Lorentz => 1000,
            Suite::Regions => 10_000,
            Suite::Pairing => 100_000,
            Suite::Trilinear | Suite::AppendixB => 20_000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample counts shared by the suites. `samples` defaults per suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub samples: Option<usize>,
    pub probes: usize,
    pub nodes: usize,
    pub volume_samples: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: None,
            probes: 8,
            nodes: 64,
            volume_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobianParams {
    pub fd_step: f64,
    pub factorization_tol: f64,
    pub holomorphy_tol: f64,
}

impl Default for JacobianParams {
    fn default() -> Self {
        JacobianParams {
            fd_step: 1e-5,
            factorization_tol: 1e-9,
            holomorphy_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsParams {
    pub construction: RegionParams,
    /// Largest allowed `running_min(n/10) / running_min(n)`.
    pub decade_tol: f64,
}

impl Default for RegionsParams {
    fn default() -> Self {
        RegionsParams {
            construction: RegionParams::default(),
            decade_tol: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsParams {
    /// Torsion degree used by the band radii.
    pub k: u32,
    pub max_tries: usize,
    pub shrink: ShrinkOptions,
    /// Fraction of configurations on which each property must hold.
    pub required_fraction: f64,
}

impl Default for BandsParams {
    fn default() -> Self {
        BandsParams {
            k: 1,
            max_tries: 5000,
            shrink: ShrinkOptions::default(),
            required_fraction: 1.0,
        }
    }
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingParams {
    pub radii: Vec<f64>,
    /// Relative spread allowed in the restricted-weak-type ratio.
    pub flatness_tol: f64,
    pub slope_tol: f64,
    pub duality_instances: usize,
    pub duality_samples: usize,
    pub duality_z: f64,
}

impl Default for PairingParams {
    fn default() -> Self {
        PairingParams {
            radii: dyadic(1, 5),
            flatness_tol: 0.10,
            slope_tol: 0.15,
            duality_instances: 20,
            duality_samples: 50_000,
            duality_z: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrilinearParams {
    pub radii: Vec<f64>,
    /// `(r1, r2, s1, s2)`; defaults to the shipped tuple for the dimension.
    pub exponents: Option<ExponentTuple>,
    /// Largest allowed max/min ratio over the family.
    pub stability_factor: f64,
}

impl Default for TrilinearParams {
    fn default() -> Self {
        TrilinearParams {
            radii: dyadic(1, 3),
            exponents: None,
            stability_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzParams {
    pub exponents: Vec<(f64, f64)>,
    pub volumes: Vec<f64>,
    pub quadrature_nodes: usize,
    pub closed_form_tol: f64,
    pub max_layers: usize,
}

impl Default for LorentzParams {
    fn default() -> Self {
        LorentzParams {
            exponents: vec![(1.5, 1.0), (1.5, 2.0), (2.0, 3.0), (3.0, 1.5)],
            volumes: vec![1e-3, 0.7, 42.0],
            quadrature_nodes: 100_000,
            closed_form_tol: 1e-6,
            max_layers: 10,
        }
    }
}

/// Exponents are written as strings: `"3"`, `"3/2"`, or `"inf"` for `u`, `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixBParams {
    pub radii: Vec<f64>,
    pub weak_q: String,
    pub eps: Vec<f64>,
    /// Exponents of the necessary-condition slack; default `(p_d, q_d)`.
    pub eps_p: Option<String>,
    pub eps_q: Option<String>,
    pub multibump_m: Vec<usize>,
    pub multibump_eps: f64,
    pub u: String,
    pub v: String,
    /// Relative tolerance on the scaling slopes.
    pub slope_rel_tol: f64,
    /// Absolute tolerance on the multibump norm slope.
    pub multibump_slope_tol: f64,
    pub ratio_window: (f64, f64),
    pub min_r2: f64,
}

impl Default for AppendixBParams {
    fn default() -> Self {
        AppendixBParams {
            radii: dyadic(1, 5),
            weak_q: "3".into(),
            eps: dyadic(3, 7),
            eps_p: None,
            eps_q: None,
            multibump_m: vec![2, 4, 8],
            multibump_eps: 0.125,
            u: "3/2".into(),
            v: "3/2".into(),
            slope_rel_tol: 0.05,
            multibump_slope_tol: 0.05,
            ratio_window: (0.25, 4.0),
            min_r2: 0.99,
        }
    }
}

/// A validated experiment. Only the section of the selected suite may appear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default)]
    pub experiment_id: Option<String>,
    #[serde(default = "default_curve")]
    pub curve: CurveSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<JacobianParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<BandsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trilinear: Option<TrilinearParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lorentz: Option<LorentzParams>,
    #[serde(default, rename = "appendixB", skip_serializing_if = "Option::is_none")]
    pub appendix_b: Option<AppendixBParams>,
}

fn default_curve() -> CurveSpec {
    CurveSpec {
        d: 2,
        phi: PhiSpec::Monomial(2),
    }
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> Self {
        ExperimentConfig {
            suite,
            experiment_id: None,
            curve: default_curve(),
            seed: 0,
            budget: Budget::default(),
            out_dir: None,
            jacobian: None,
            regions: None,
            bands: None,
            pairing: None,
            trilinear: None,
            lorentz: None,
            appendix_b: None,
        }
    }

    /// Parses and validates a config; the error carries line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            // serde_json reports "... at line L column C"
            CliError::Config(e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let present = [
            (Suite::Jacobian, self.jacobian.is_some()),
            (Suite::Regions, self.regions.is_some()),
            (Suite::Bands, self.bands.is_some()),
            (Suite::Pairing, self.pairing.is_some()),
            (Suite::Trilinear, self.trilinear.is_some()),
            (Suite::Lorentz, self.lorentz.is_some()),
            (Suite::AppendixB, self.appendix_b.is_some()),
        ];
        for (s, here) in present {
            if here && s != self.suite {
                return Err(CliError::Config(format!(
                    "section `{s}` given for suite `{}`",
                    self.suite
                )));
            }
        }
        if let Some(id) = &self.experiment_id {
            if id.is_empty() || id.contains(['/', '\\']) {
                return Err(CliError::Config(format!("bad experiment_id {id:?}")));
            }
        }
        if self.samples() == 0 {
            return Err(CliError::Config("budget.samples must be positive".into()));
        }
        self.curve
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.budget.samples.unwrap_or(self.suite.default_samples())
    }

    pub fn id(&self) -> String {
        self.experiment_id.clone().unwrap_or_else(|| {
            let phi = match &self.curve.phi {
                PhiSpec::Monomial(n) => format!("N{n}"),
                PhiSpec::Coeffs(c) => format!("poly{}", c.len().saturating_sub(1)),
            };
            format!("{}-d{}-{phi}-s{}", self.suite, self.curve.d, self.seed)
        })
    }

    fn families(&self) -> FamilyOptions {
        FamilyOptions {
            probes: self.budget.probes,
            nodes: self.budget.nodes,
            volume_samples: self.budget.volume_samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidCurve(_) | Error::InvalidArgument(_) | Error::BadExponents(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// How a measured value is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - target| <= tolerance`.
    Within,
    /// `|measured / target - 1| <= tolerance`.
    Relative,
    /// `measured < target`.
    Below,
    /// `measured > target`.
    Above,
    /// `target / tolerance <= measured <= target * tolerance`.
    Factor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// `None` when the measurement is not finite.
    pub measured: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Assertion {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        relation: Relation,
        target: f64,
        tolerance: f64,
    ) -> Self {
        let m = measured;
        let pass = m.is_finite()
            && match relation {
                Relation::Within => (m - target).abs() <= tolerance,
                Relation::Relative => (m / target - 1.0).abs() <= tolerance,
                Relation::Below => m < target,
                Relation::Above => m > target,
                Relation::Factor => m >= target / tolerance && m <= target * tolerance,
            };
        Assertion {
            name: name.into(),
            measured: m.is_finite().then_some(m),
            target,
            tolerance,
            relation,
            pass,
        }
    }

    pub fn line(&self) -> String {
        let m = self
            .measured
            .map_or("non-finite".to_string(), |m| format!("{m:.6e}"));
        let rel = match self.relation {
            Relation::Within => format!("{:.6e} +/- {:.3e}", self.target, self.tolerance),
            Relation::Relative => format!("{:.6e} +/- {:.3e} rel", self.target, self.tolerance),
            Relation::Below => format!("< {:.6e}", self.target),
            Relation::Above => format!("> {:.6e}", self.target),
            Relation::Factor => format!("{:.6e} within x{}", self.target, self.tolerance),
        };
        format!(
            "{} {}: measured {m}, target {rel}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub experiment_id: String,
    pub suite: Suite,
    pub seed: u64,
    /// Milliseconds since the Unix epoch at completion.
    pub timestamp_ms: u64,
    pub pass: bool,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<String>,
    pub config: ExperimentConfig,
}

/// A named CSV file produced by a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<Artifact>,
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn csv_bytes<R: Serialize>(header: Option<&[&str]>, rows: &[R]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h).expect("in-memory csv");
    }
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn family_csv(name: &str, rows: &[FamilyRow]) -> Artifact {
    Artifact {
        name: name.into(),
        contents: csv_bytes(Some(&["parameter", "measured", "predicted", "ratio"]), rows),
    }
}

/// Rows predicting `value(x_0) (x / x_0)^slope` from the first point.
fn rows_against(xs: &[f64], values: &[f64], slope: f64) -> Vec<FamilyRow> {
    xs.iter()
        .zip(values)
        .map(|(x, v)| FamilyRow::new(*x, *v, values[0] * (x / xs[0]).powf(slope)))
        .collect()
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(0.0, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn parse_rational(s: &str) -> Result<Q, CliError> {
    s.trim()
        .parse::<Q>()
        .ok()
        .filter(|q| *q > Q::from_integer(0))
        .ok_or_else(|| CliError::Config(format!("bad exponent {s:?}")))
}

fn parse_index(s: &str) -> Result<Index, CliError> {
    if matches!(s.trim(), "inf" | "infinity") {
        Ok(Index::Infinite)
    } else {
        parse_rational(s).map(Index::Finite)
    }
}

fn unit_disk(rng: &mut SampleRng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| rng.in_disk(Complex64::new(0.0, 0.0), 1.0))
        .collect()
}

fn run_jacobian(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    let p = cfg.jacobian.clone().unwrap_or_default();
    #[derive(Serialize)]
    struct Row {
        sample: usize,
        factorization_residual: f64,
        holomorphy_residual: f64,
    }
    let rows: Vec<Row> = (0..cfg.samples())
        .into_par_iter()
        .map(|i| {
            let zs = unit_disk(&mut SampleRng::new(cfg.seed, i as u64), curve.d());
            Ok(Row {
                sample: i,
                factorization_residual: factorization_residual(curve, &zs)?,
                holomorphy_residual: real_jacobian_check(curve, &zs, p.fd_step)?,
            })
        })
        .collect::<crate::Result<_>>()?;
    let max = |f: fn(&Row) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(SuiteOutput {
        assertions: vec![
            Assertion::new(
                "max_factorization_residual",
                max(|r| r.factorization_residual),
                Relation::Below,
                p.factorization_tol,
                0.0,
            ),
            Assertion::new(
                "max_holomorphy_residual",
                max(|r| r.holomorphy_residual),
                Relation::Below,
                p.holomorphy_tol,
                0.0,
            ),
        ],
        artifacts: vec![Artifact {
            name: "residuals.csv".into(),
            contents: csv_bytes(None, &rows),
        }],
    })
}

fn run_regions(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    let p = cfg.regions.clone().unwrap_or_default();
    let regions = build_regions(curve, &p.construction)?;
    #[derive(Serialize)]
    struct Row {
        region: usize,
        sample_count: usize,
        running_min: f64,
    }
    let mut rows = Vec::new();
    let mut worst_min = f64::INFINITY;
    let mut worst_decade = 0.0f64;
    for (i, region) in regions.iter().enumerate() {
        let seed = SampleRng::derive_seed(cfg.seed, i as u64);
        let rep = estimate_sector_constant(curve, region, cfg.samples(), seed)?;
        worst_min = worst_min.min(rep.min_ratio);
        worst_decade = worst_decade.max(rep.decade_stability());
        rows.extend(rep.convergence_series.iter().map(|(n, m)| Row {
            region: i,
            sample_count: *n,
            running_min: *m,
        }));
    }
    Ok(SuiteOutput {
        assertions: vec![
            Assertion::new(
                "min_ratio_over_regions",
                worst_min,
                Relation::Above,
                0.0,
                0.0,
            ),
            Assertion::new(
                "max_decade_stability",
                worst_decade,
                Relation::Within,
                1.0,
                p.decade_tol - 1.0,
            ),
        ],
        artifacts: vec![Artifact {
            name: "convergence.csv".into(),
            contents: csv_bytes(None, &rows),
        }],
    })
}

fn run_bands(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    let p = cfg.bands.clone().unwrap_or_default();
    let d = curve.d();
    let sampler = AdmissibleSampler::new(d, p.k);
    #[derive(Serialize)]
    struct Row {
        config: usize,
        partition: bool,
        free_is_minimum: bool,
        size_at_most_d: bool,
        cross_band_separated: bool,
        quasi_bound_bracket: bool,
        bound_within_delta_prime: bool,
        shrink_resolved: Option<bool>,
    }
    let all: std::collections::BTreeSet<usize> = (1..=2 * d).collect();
    let rows: Vec<Row> = (0..cfg.samples())
        .into_par_iter()
        .map(|i| {
            let config = sampler
                .sample(&mut SampleRng::new(cfg.seed, i as u64), p.max_tries)
                .ok_or(Error::IterationLimit {
                    iterations: p.max_tries,
                })?;
            let params = sampler.params_for(&config)?;
            let s = build_bands(&config, &params);
            let r = verify_band_properties(&s, &config, &params)?;
            let shrink_resolved = (!r.bound_within_delta_prime).then(|| {
                shrink_and_rebuild(&config, &params, &p.shrink)
                    .and_then(|(q, s2)| verify_band_properties(&s2, &config, &q))
                    .map(|r2| r2.bound_within_delta_prime)
                    .unwrap_or(false)
            });
            Ok(Row {
                config: i,
                partition: r.partition && s.is_partition_of(&all),
                free_is_minimum: r.free_is_minimum,
                size_at_most_d: r.size_at_most_d,
                cross_band_separated: r.cross_band_separated,
                quasi_bound_bracket: r.quasi_bound_bracket,
                bound_within_delta_prime: r.bound_within_delta_prime,
                shrink_resolved,
            })
        })
        .collect::<crate::Result<_>>()?;
    let n = rows.len() as f64;
    let frac = |f: fn(&Row) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / n;
    let need = p.required_fraction;
    let at_least = |name: &str, v: f64| Assertion::new(name, v, Relation::Within, 1.0, 1.0 - need);
    let unresolved = rows
        .iter()
        .filter(|r| r.shrink_resolved == Some(false))
        .count();
    Ok(SuiteOutput {
        assertions: vec![
            at_least("partition_fraction", frac(|r| r.partition)),
            at_least("free_minimal_fraction", frac(|r| r.free_is_minimum)),
            at_least("size_at_most_d_fraction", frac(|r| r.size_at_most_d)),
            at_least(
                "cross_band_separated_fraction",
                frac(|r| r.cross_band_separated),
            ),
            at_least(
                "quasi_bound_bracket_fraction",
                frac(|r| r.quasi_bound_bracket),
            ),
            Assertion::new(
                "unresolved_after_shrink",
                unresolved as f64,
                Relation::Within,
                0.0,
                0.0,
            ),
        ],
        artifacts: vec![Artifact {
            name: "bands.csv".into(),
            contents: csv_bytes(None, &rows),
        }],
    })
}

fn origin_set(curve: &ComplexCurve, atom: Atom, r: f64) -> crate::Result<IndicatorSet> {
    IndicatorSet::single(curve, atom.dilated(r))
}

fn require_moment(curve: &ComplexCurve) -> Result<(), CliError> {
    if curve.is_moment_curve() {
        Ok(())
    } else {
        Err(CliError::Config(
            "this suite needs the moment curve phi(z) = z^d".into(),
        ))
    }
}

fn run_pairing(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    require_moment(curve)?;
    let p = cfg.pairing.clone().unwrap_or_default();
    let d = curve.d();
    let op = Operator::on_disk(curve);
    let zero = RealPoint::zeros(d);
    let vol_n = origin_set(curve, Atom::neighborhood(zero.clone(), 1.0), 1.0)?
        .volume(McOptions::new(cfg.budget.volume_samples, cfg.seed))
        .value;
    let homogeneity = (d * (d + 1)) as i32;
    let mut values = Vec::new();
    let mut ratios = Vec::new();
    let mut log = Vec::new();
    for (i, &r) in p.radii.iter().enumerate() {
        let e = origin_set(curve, Atom::neighborhood(zero.clone(), 1.0), r)?;
        let f = origin_set(curve, Atom::ball(zero.clone(), 1.0), r)?;
        let mc = McOptions::new(cfg.samples(), SampleRng::derive_seed(cfg.seed, i as u64));
        let est = op.pairing(&e, &f, mc)?;
        let vol_f = unit_ball_volume(2 * d) * r.powi(homogeneity);
        ratios.push(rwt_ratio(est.value, vol_n * r.powi(homogeneity), vol_f, d)?);
        values.push(est.value);
        log.push((format!("{}-r{r}", cfg.id()), est));
    }
    let expected = (homogeneity + 2) as f64;
    let fit = ScalingFit::fit(&p.radii, &values)?;
    let mut worst_z = 0.0f64;
    for i in 0..p.duality_instances as u64 {
        let mut rng = SampleRng::new(SampleRng::derive_seed(cfg.seed, 0xd0a1), i);
        let r = rng.range(0.3, 1.0);
        let atom = |rng: &mut SampleRng| {
            let c = RealPoint((0..2 * d).map(|_| rng.range(-0.3, 0.3)).collect());
            if rng.uniform() < 0.5 {
                Atom::ball(c, rng.range(0.4, 1.0)).dilated(r)
            } else {
                Atom::neighborhood(c, rng.range(0.3, 0.8)).dilated(r)
            }
        };
        let e = IndicatorSet::single(curve, atom(&mut rng))?;
        let f = IndicatorSet::single(curve, atom(&mut rng))?;
        let seed = SampleRng::derive_seed(cfg.seed, 0xd0a2 + 2 * i);
        let a = op.pairing(&e, &f, McOptions::new(p.duality_samples, seed))?;
        let b = op.pairing_star(&f, &e, McOptions::new(p.duality_samples, seed + 1))?;
        worst_z = worst_z.max(a.z_score(&b).abs());
    }
    #[derive(Serialize)]
    struct LogRow<'a> {
        experiment_id: &'a str,
        value: f64,
        std_error: f64,
        n_samples: usize,
        seed: u64,
    }
    let log_rows: Vec<LogRow> = log
        .iter()
        .map(|(id, e)| LogRow {
            experiment_id: id,
            value: e.value,
            std_error: e.std_error,
            n_samples: e.n_samples,
            seed: e.seed,
        })
        .collect();
    Ok(SuiteOutput {
        assertions: vec![
            Assertion::new(
                "rwt_ratio_spread",
                spread(&ratios) - 1.0,
                Relation::Below,
                p.flatness_tol,
                0.0,
            ),
            Assertion::new(
                "pairing_slope",
                fit.slope,
                Relation::Within,
                expected,
                p.slope_tol,
            ),
            Assertion::new(
                "duality_max_abs_z",
                worst_z,
                Relation::Below,
                p.duality_z,
                0.0,
            ),
        ],
        artifacts: vec![
            family_csv(
                "pairing_family.csv",
                &rows_against(&p.radii, &values, expected),
            ),
            Artifact {
                name: "pairing_log.csv".into(),
                contents: csv_bytes(None, &log_rows),
            },
        ],
    })
}

fn run_trilinear(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    require_moment(curve)?;
    let p = cfg.trilinear.clone().unwrap_or_default();
    let d = curve.d();
    let tuple = match p.exponents {
        Some(t) => t,
        None => ExponentTuple::default_for(d).ok_or_else(|| {
            CliError::Config(format!(
                "no default exponent tuple for d = {d}; set trilinear.exponents"
            ))
        })?,
    };
    tuple.validate(d)?;
    let op = Operator::on_disk(curve);
    let opts = TrilinearOptions {
        probes: cfg.budget.probes,
        nodes: cfg.budget.nodes,
        volume: McOptions::new(cfg.samples(), cfg.seed),
        seed: SampleRng::derive_seed(cfg.seed, 1),
    };
    let zero = RealPoint::zeros(d);
    let mut assertions = Vec::new();
    let mut e_ratios = Vec::new();
    let mut f_ratios = Vec::new();
    for &r in &p.radii {
        let e = origin_set(curve, Atom::neighborhood(zero.clone(), 1.0), r)?;
        let g = origin_set(curve, Atom::ball(zero.clone(), 1.0), r)?;
        let core = origin_set(curve, Atom::neighborhood(zero.clone(), 0.5), r)?;
        let alpha = curve
            .disk_measure(r)
            .ok_or_else(|| CliError::Config("the disk measure needs a monomial curve".into()))?;
        for (form, result) in [
            (
                "e",
                op.trilinear_ratio_e(&e, &e, &g, (alpha, alpha), opts)
                    .map(|x| x.ratio),
            ),
            (
                "f",
                op.trilinear_ratio_f(&g, &g, &core, tuple, opts)
                    .map(|x| x.ratio),
            ),
        ] {
            match result {
                Ok(v) => {
                    if form == "e" {
                        e_ratios.push(v)
                    } else {
                        f_ratios.push(v)
                    }
                }
                Err(Error::HypothesisViolated(m)) => {
                    assertions.push(Assertion::new(
                        format!("hypothesis_{form}_r{r}: {m}"),
                        f64::NAN,
                        Relation::Within,
                        0.0,
                        0.0,
                    ));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut artifacts = Vec::new();
    for (form, ratios) in [("e", &e_ratios), ("f", &f_ratios)] {
        if ratios.len() == p.radii.len() {
            assertions.push(Assertion::new(
                format!("{form}_form_ratio_spread"),
                spread(ratios),
                Relation::Factor,
                1.0,
                p.stability_factor,
            ));
            artifacts.push(family_csv(
                &format!("trilinear_{form}.csv"),
                &rows_against(&p.radii, ratios, 0.0),
            ));
        }
    }
    Ok(SuiteOutput {
        assertions,
        artifacts,
    })
}

fn run_lorentz(cfg: &ExperimentConfig) -> Result<SuiteOutput, CliError> {
    let p = cfg.lorentz.clone().unwrap_or_default();
    if p.exponents.iter().any(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
        return Err(CliError::Config(
            "Lorentz exponents must be positive".into(),
        ));
    }
    #[derive(Serialize)]
    struct Row {
        parameter: String,
        measured: f64,
        predicted: f64,
        ratio: f64,
    }
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &(ep, eu) in &p.exponents {
        for &vol in &p.volumes {
            let closed = (ep / eu).powf(1.0 / eu) * vol.powf(1.0 / ep);
            let numeric = numeric_lorentz_norm(
                &StepProfile::new(vec![(1.0, vol)]),
                ep,
                eu,
                p.quadrature_nodes,
            );
            let exact = indicator_norm(vol, ep, eu);
            worst = worst
                .max((numeric / closed - 1.0).abs())
                .max((exact / closed - 1.0).abs());
            rows.push(Row {
                parameter: format!("p={ep};u={eu};volume={vol}"),
                measured: numeric,
                predicted: closed,
                ratio: numeric / closed,
            });
        }
    }
    let mut assertions = vec![Assertion::new(
        "indicator_closed_form_max_rel_error",
        worst,
        Relation::Below,
        p.closed_form_tol,
        0.0,
    )];
    #[derive(Serialize)]
    struct Env {
        p: f64,
        u: f64,
        samples: usize,
        min_ratio: f64,
        max_ratio: f64,
    }
    let mut envs = Vec::new();
    for (i, &(ep, eu)) in p.exponents.iter().enumerate() {
        let env = comparability_envelope(
            ep,
            eu,
            cfg.samples(),
            p.max_layers,
            SampleRng::derive_seed(cfg.seed, i as u64),
        );
        let finite = env.max_ratio.is_finite() && env.min_ratio > 0.0;
        assertions.push(Assertion::new(
            format!("envelope_p{ep}_u{eu}_min_ratio"),
            if finite { env.min_ratio } else { f64::NAN },
            Relation::Above,
            0.0,
            0.0,
        ));
        envs.push(Env {
            p: ep,
            u: eu,
            samples: env.samples,
            min_ratio: env.min_ratio,
            max_ratio: env.max_ratio,
        });
    }
    Ok(SuiteOutput {
        assertions,
        artifacts: vec![
            Artifact {
                name: "indicator.csv".into(),
                contents: csv_bytes(None, &rows),
            },
            Artifact {
                name: "envelope.csv".into(),
                contents: csv_bytes(None, &envs),
            },
        ],
    })
}

fn run_appendix_b(cfg: &ExperimentConfig, curve: &ComplexCurve) -> Result<SuiteOutput, CliError> {
    require_moment(curve)?;
    let p = cfg.appendix_b.clone().unwrap_or_default();
    let d = curve.d();
    let mut opts = cfg.families();
    opts.volume_samples = cfg.samples();
    let weak_q = parse_rational(&p.weak_q)?;
    let eps_p = match &p.eps_p {
        Some(s) => parse_rational(s)?,
        None => inv_p_d(d).recip(),
    };
    let eps_q = match &p.eps_q {
        Some(s) => parse_rational(s)?,
        None => inv_q_d(d).recip(),
    };
    let (u, v) = (parse_index(&p.u)?, parse_index(&p.v)?);
    let rel = p.slope_rel_tol;
    let mut assertions = Vec::new();
    let mut artifacts = Vec::new();

    let weak = scaling_family_weak_norm(curve, &p.radii, weak_q, opts)?;
    assertions.push(Assertion::new(
        "weak_norm_slope",
        weak.fit.slope,
        Relation::Relative,
        to_f64(weak.expected_slope),
        rel,
    ));
    assertions.push(Assertion::new(
        "weak_norm_fit_r2",
        weak.fit.r2_fit,
        Relation::Above,
        p.min_r2,
        0.0,
    ));
    artifacts.push(family_csv("weak_norm.csv", &weak.rows));

    let eps = epsilon_family_check(curve, &p.eps, eps_p, eps_q, opts)?;
    assertions.push(Assertion::new(
        "eps_volume_slope",
        eps.volume.slope,
        Relation::Relative,
        to_f64(eps.expected_volume_slope),
        rel,
    ));
    assertions.push(Assertion::new(
        "eps_volume_fit_r2",
        eps.volume.r2_fit,
        Relation::Above,
        p.min_r2,
        0.0,
    ));
    assertions.push(Assertion::new(
        "eps_weak_norm_fit_r2",
        eps.weak_norm.r2_fit,
        Relation::Above,
        p.min_r2,
        0.0,
    ));
    artifacts.push(family_csv(
        "eps_volume.csv",
        &rows_against(
            &eps.volume.radii,
            &eps.volume.values,
            to_f64(eps.expected_volume_slope),
        ),
    ));

    let fits = multibump_u_le_v(d, &p.multibump_m, p.multibump_eps, u, v, opts)?;
    let expected = to_f64(fits.expected_norm_slope);
    assertions.push(Assertion::new(
        "multibump_norm_slope",
        fits.norm.slope,
        Relation::Within,
        expected,
        p.multibump_slope_tol,
    ));
    artifacts.push(family_csv(
        "multibump_norm.csv",
        &rows_against(&fits.norm.radii, &fits.norm.values, expected),
    ));

    let (lo, hi) = p.ratio_window;
    let window = (lo * hi).sqrt();
    let factor = (hi / lo).sqrt();
    let m = p.multibump_m.iter().copied().min().unwrap_or(2).max(2);
    let a = multibump_u_le_qd(d, m, u, opts)?;
    let b = multibump_pd_le_v(d, m, v, opts)?;
    let mut rows = Vec::new();
    for (name, rep) in [("u_le_qd", &a), ("pd_le_v", &b)] {
        assertions.push(Assertion::new(
            format!("{name}_norm_ratio"),
            rep.norm.ratio,
            Relation::Factor,
            window,
            factor,
        ));
        assertions.push(Assertion::new(
            format!("{name}_lower_ratio"),
            rep.lower.ratio,
            Relation::Factor,
            window,
            factor,
        ));
        rows.push(rep.norm.clone());
        rows.push(rep.lower.clone());
    }
    artifacts.push(family_csv("multibump_ratios.csv", &rows));

    let (identity, _) = duality_identities(d);
    assertions.push(Assertion::new(
        "duality_exponent_identity",
        if identity { 1.0 } else { 0.0 },
        Relation::Within,
        1.0,
        0.0,
    ));
    Ok(SuiteOutput {
        assertions,
        artifacts,
    })
}

/// Runs the configured suite without touching the file system.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteOutput, CliError> {
    let curve = cfg.curve.build()?;
    match cfg.suite {
        Suite::Jacobian => run_jacobian(cfg, &curve),
        Suite::Regions => run_regions(cfg, &curve),
        Suite::Bands => run_bands(cfg, &curve),
        Suite::Pairing => run_pairing(cfg, &curve),
        Suite::Trilinear => run_trilinear(cfg, &curve),
        Suite::Lorentz => run_lorentz(cfg),
        Suite::AppendixB => run_appendix_b(cfg, &curve),
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn resolve_out_dir(flag: Option<&PathBuf>, config: Option<&PathBuf>) -> PathBuf {
    flag.cloned()
        .or_else(|| config.cloned())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Builds the effective config from the flags and an optional config file.
pub fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {}", path.display(), strip(&e))))?
        }
        None => ExperimentConfig::new(
            args.suite
                .ok_or_else(|| CliError::Config("either --suite or --config is required".into()))?,
        ),
    };
    if let Some(s) = args.suite {
        if args.config.is_some() && s != cfg.suite {
            return Err(CliError::Config(format!(
                "--suite {s} conflicts with config suite {}",
                cfg.suite
            )));
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.samples {
        cfg.budget.samples = Some(n);
    }
    if args.d.is_some() || args.n.is_some() {
        let d = args.d.unwrap_or(cfg.curve.d);
        cfg.curve = CurveSpec {
            d,
            phi: PhiSpec::Monomial(args.n.unwrap_or(d as u32)),
        };
    }
    if let Some(id) = &args.experiment_id {
        cfg.experiment_id = Some(id.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strip(e: &CliError) -> String {
    match e {
        CliError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Runs a suite, writes `<id>.<artifact>` files and `<id>.summary.json`,
/// prints one line per assertion and returns the exit code.
pub fn run(args: &RunArgs) -> i32 {
    match run_inner(args) {
        Ok(summary) => {
            if summary.pass {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn run_inner(args: &RunArgs) -> Result<Summary, CliError> {
    let cfg = load_config(args)?;
    let out_dir = resolve_out_dir(args.out_dir.as_ref(), cfg.out_dir.as_ref());
    let output = match args.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be positive".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| run_suite(&cfg))?,
        None => run_suite(&cfg)?,
    };
    let id = cfg.id();
    let mut artifacts = Vec::new();
    for a in &output.artifacts {
        let name = format!("{id}.{}", a.name);
        write_atomic(&out_dir.join(&name), &a.contents)?;
        artifacts.push(name);
    }
    let summary = Summary {
        schema: SCHEMA_VERSION,
        experiment_id: id.clone(),
        suite: cfg.suite,
        seed: cfg.seed,
        timestamp_ms: now_ms(),
        pass: output.assertions.iter().all(|a| a.pass),
        assertions: output.assertions,
        artifacts,
        config: cfg,
    };
    for a in &summary.assertions {
        println!("{}", a.line());
    }
    let json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    write_atomic(&out_dir.join(format!("{id}.summary.json")), &json)?;
    Ok(summary)
}

/// An experiment id seen in more than one summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Duplicate {
    pub experiment_id: String,
    pub kept: String,
    pub superseded: Vec<String>,
    /// Whether the superseded files disagree with the kept one.
    pub conflicting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSection {
    pub suite: Suite,
    pub experiments: Vec<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub sections: Vec<SuiteSection>,
    pub duplicates: Vec<Duplicate>,
}

/// Collects summaries: one section per suite ordered by suite name; among
/// duplicate experiment ids the latest timestamp wins and the rest are flagged.
pub fn build_report(files: &[(String, Summary)]) -> Report {
    let mut by_id: BTreeMap<&str, Vec<&(String, Summary)>> = BTreeMap::new();
    for f in files {
        by_id.entry(f.1.experiment_id.as_str()).or_default().push(f);
    }
    let mut sections: BTreeMap<&str, SuiteSection> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for (id, mut group) in by_id {
        group.sort_by(|a, b| (a.1.timestamp_ms, &a.0).cmp(&(b.1.timestamp_ms, &b.0)));
        let kept = *group.last().expect("non-empty group");
        if group.len() > 1 {
            let rest = &group[..group.len() - 1];
            duplicates.push(Duplicate {
                experiment_id: id.to_string(),
                kept: kept.0.clone(),
                superseded: rest.iter().map(|f| f.0.clone()).collect(),
                conflicting: rest
                    .iter()
                    .any(|f| f.1.assertions != kept.1.assertions || f.1.config != kept.1.config),
            });
        }
        sections
            .entry(kept.1.suite.name())
            .or_insert_with(|| SuiteSection {
                suite: kept.1.suite,
                experiments: Vec::new(),
            })
            .experiments
            .push(kept.1.clone());
    }
    Report {
        schema: SCHEMA_VERSION,
        sections: sections.into_values().collect(),
        duplicates,
    }
}

fn fmt_num(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.6e}"))
}

pub fn report_markdown(r: &Report) -> String {
    let mut s = String::from("# avglab report\n");
    for sec in &r.sections {
        s += &format!("\n## {}\n\n", sec.suite);
        s += "| experiment | assertion | measured | relation | target | tolerance | result |\n";
        s += "|---|---|---|---|---|---|---|\n";
        for e in &sec.experiments {
            for a in &e.assertions {
                s += &format!(
                    "| {} | {} | {} | {:?} | {:.6e} | {:.3e} | {} |\n",
                    e.experiment_id,
                    a.name.replace('|', "\\|"),
                    fmt_num(a.measured),
                    a.relation,
                    a.target,
                    a.tolerance,
                    if a.pass { "PASS" } else { "FAIL" }
                );
            }
        }
    }
    if !r.duplicates.is_empty() {
        s += "\n## duplicate experiment ids\n\n";
        for d in &r.duplicates {
            s += &format!(
                "- `{}`: kept {} (latest), superseded {}{}\n",
                d.experiment_id,
                d.kept,
                d.superseded.join(", "),
                if d.conflicting {
                    "; CONFLICTING results"
                } else {
                    ""
                }
            );
        }
    }
    s
}

pub fn report(args: &ReportArgs) -> i32 {
    match report_inner(args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn report_inner(args: &ReportArgs) -> Result<(), CliError> {
    let paths: Vec<PathBuf> = glob::glob(&args.pattern)
        .map_err(|e| CliError::Config(format!("bad pattern: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "no files match {:?}",
            args.pattern
        )));
    }
    let mut files = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        let summary: Summary = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        if summary.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: unsupported schema {}",
                p.display(),
                summary.schema
            )));
        }
        files.push((p.display().to_string(), summary));
    }
    let r = build_report(&files);
    let md = report_markdown(&r);
    let out_dir = resolve_out_dir(args.out_dir.as_ref(), None);
    write_atomic(&out_dir.join("report.md"), md.as_bytes())?;
    write_atomic(
        &out_dir.join("report.json"),
        &serde_json::to_vec_pretty(&r).expect("report serializes"),
    )?;
    print!("{md}");
    Ok(())
}

/// Entry point shared by the binary: parses arguments and dispatches.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match &cli.command {
            Command::Run(a) => run(a),
            Command::Report(a) => report(a),
        },
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
