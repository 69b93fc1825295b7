//! Config-driven experiment runner.
//!
//! A [`ScenarioConfig`] plus its seed list fully determines every report body
//! written by [`run`]. Wall-clock timings only appear in the manifest, which
//! is not itself listed among the hashed outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::admission::{run_admission_stream, shuffled_candidates, AdmissionRecord, AdmissionSummary};
use crate::capacity::{capacity_report, min_frames, CodecProfile, TimingParams, C_AP1_11B, C_AP1_11G};
use crate::coloring::{
    color, cs_range_sweep, sector_cs_range_for, validate_assignment, CoTdmaParams, CsRangeRule, FrequencyPlan,
    SweepPoint, SweepRow, SweepSpec,
};
use crate::conflict::build_coloring_graph;
use crate::error::Error;
use crate::geometry::{FrequencyScheme, RadioParams, Topology};

/// Version stamped into every JSON report and the manifest.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Carrier-sense range (in `d_max`) that works well across `n`.
pub const TUNED_CS_RANGE_OVER_DMAX: f64 = 1.637;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(#[from] Error),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type ScenarioResult<T> = Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Topology,
    Admit,
    Color,
    Sweep,
    Capacity,
    Replicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Table2,
    Table4,
    Fig11_14,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(rename = "D")]
    pub dim: usize,
    /// Defaults to the single-cell capacity `C_AP_1` of the color section.
    pub stations_per_cell: Option<usize>,
    pub radio: RadioParams,
    pub frequency: FrequencyScheme,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self { dim: 5, stations_per_cell: None, radio: RadioParams::default(), frequency: FrequencyScheme::Single }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmitConfig {
    pub c_max: usize,
    /// Defaults to `radio.cs_range`.
    pub cs_range: Option<f64>,
    /// Only the first `candidates` arrivals are offered, if set.
    pub candidates: Option<usize>,
}

impl Default for AdmitConfig {
    fn default() -> Self {
        Self { c_max: 8, cs_range: None, candidates: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsSetting {
    /// Multiple of `d_max`.
    OverDmax(f64),
    /// Sector diameter for the configured `n`.
    Sector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorConfig {
    pub m: u32,
    pub n: u32,
    pub c_ap_1: u32,
    pub cs_range: CsSetting,
    pub fixed_plan: bool,
}

impl Default for ColorConfig {
    fn default() -> Self {
        Self {
            m: 3,
            n: 3,
            c_ap_1: C_AP1_11B,
            cs_range: CsSetting::OverDmax(TUNED_CS_RANGE_OVER_DMAX),
            fixed_plan: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<u32>,
    pub cs_range: CsRangeRule,
    pub trials: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: vec![1, 2, 3, 4, 6, 12],
            cs_range: CsRangeRule::Fixed(vec![1.0, 1.25, 1.5, TUNED_CS_RANGE_OVER_DMAX, 1.75, 2.0]),
            trials: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub codec: String,
    /// Custom codec payload in bytes; overrides `codec` together with `packets_per_second`.
    pub payload_bytes: Option<f64>,
    pub packets_per_second: Option<f64>,
    pub n: u32,
    /// Frames per beacon interval; the delay-budget minimum when unset.
    pub frames: Option<u32>,
    pub c_ap_1: u32,
    pub beacon_interval: f64,
    pub beacon_duration: f64,
    pub delay_budget: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        let t = TimingParams::default();
        Self {
            codec: "gsm_6_10".into(),
            payload_bytes: None,
            packets_per_second: None,
            n: 3,
            frames: None,
            c_ap_1: C_AP1_11B,
            beacon_interval: t.beacon_interval,
            beacon_duration: t.beacon_duration,
            delay_budget: t.delay_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicateConfig {
    pub table: Table,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        Self { table: Table::Table2 }
    }
}

/// Explicit seed list, or `base, base + 1, ..., base + count - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSpec {
    pub list: Option<Vec<u64>>,
    pub base: u64,
    pub count: u32,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self { list: None, base: 1, count: 1 }
    }
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match &self.list {
            Some(list) => list.clone(),
            None => (0..u64::from(self.count)).map(|i| self.base.wrapping_add(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub admit: AdmitConfig,
    #[serde(default)]
    pub color: ColorConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub capacity: CapacityConfig,
    #[serde(default)]
    pub replicate: ReplicateConfig,
}

impl ScenarioConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            format: OutputFormat::default(),
            seeds: SeedSpec::default(),
            topology: TopologyConfig::default(),
            admit: AdmitConfig::default(),
            color: ColorConfig::default(),
            sweep: SweepConfig::default(),
            capacity: CapacityConfig::default(),
            replicate: ReplicateConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> ScenarioResult<Self> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> ScenarioResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn stations_per_cell(&self) -> usize {
        self.topology.stations_per_cell.unwrap_or(self.color.c_ap_1 as usize)
    }

    pub fn validate(&self) -> ScenarioResult<()> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.topology.dim < 1 {
            return bad("topology.D must be >= 1".into());
        }
        if let Err(e) = self.topology.radio.validate() {
            return bad(e.to_string());
        }
        if self.seeds.seeds().is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.admit.c_max < 1 {
            return bad("admit.c_max must be >= 1".into());
        }
        if self.color.m < 1 || self.color.n < 1 {
            return bad("color.m and color.n must be >= 1".into());
        }
        if self.sweep.trials < 1 {
            return bad("sweep.trials must be >= 1".into());
        }
        if self.sweep.n_values.is_empty() || self.sweep.n_values.contains(&0) {
            return bad("sweep.n_values must be non-empty and positive".into());
        }
        if self.capacity.n < 1 || self.capacity.frames == Some(0) {
            return bad("capacity.n and capacity.frames must be >= 1".into());
        }
        Ok(())
    }
}

/// One output file of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub kind: FileKind,
    pub seed: Option<u64>,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    TopologyJson,
    AdmissionCsv,
    AdmissionJson,
    AdmissionSummaryJson,
    AssignmentJson,
    ColorSummaryJson,
    SweepCsv,
    SweepJson,
    SweepSummaryJson,
    CapacityJson,
    ComparisonCsv,
    ComparisonJson,
    RunSummaryJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    pub per_seed_ms: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub files: Vec<ManifestFile>,
    pub timings: Timings,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    /// Checks that every listed file exists, matches its hash and parses as
    /// its declared kind.
    pub fn verify(&self, dir: &Path) -> ScenarioResult<()> {
        for f in &self.files {
            let path = dir.join(&f.path);
            let bytes = fs::read(&path)?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(ScenarioError::Io(format!("{} does not match its recorded hash", f.path)));
            }
            let text = String::from_utf8(bytes).map_err(|e| ScenarioError::Io(e.to_string()))?;
            validate_file(f.kind, &text).map_err(|e| ScenarioError::Io(format!("{}: {e}", f.path)))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> ScenarioResult<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| ScenarioError::Io(e.to_string()))
    }
}

fn check_csv_rows<T: for<'de> Deserialize<'de>>(text: &str, header: &str) -> Result<(), String> {
    if !text.is_empty() && text.lines().next() != Some(header) {
        return Err(format!("expected header `{header}`"));
    }
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    for row in rd.deserialize::<T>() {
        row.map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn check_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(), String> {
    serde_json::from_str::<T>(text).map(|_| ()).map_err(|e| e.to_string())
}

pub const ADMISSION_CSV_HEADER: &str = "request_index,station_id,cell_id,decision,admitted_total,max_m_after";
pub const SWEEP_CSV_HEADER: &str = "n,cs_range_over_dmax,trial,colored,total,coverage";
pub const COMPARISON_CSV_HEADER: &str = "experiment,quantity,published,measured,deviation";

/// Validates file contents against the schema of `kind`.
pub fn validate_file(kind: FileKind, text: &str) -> Result<(), String> {
    match kind {
        FileKind::TopologyJson => check_json::<Topology>(text),
        FileKind::AdmissionCsv => check_csv_rows::<AdmissionRecord>(text, ADMISSION_CSV_HEADER),
        FileKind::AdmissionJson => check_json::<Vec<AdmissionRecord>>(text),
        FileKind::AdmissionSummaryJson => check_json::<Versioned<AdmissionSummary>>(text),
        FileKind::AssignmentJson => check_json::<crate::coloring::AssignmentExport>(text),
        FileKind::ColorSummaryJson => check_json::<Versioned<ColorRunSummary>>(text),
        FileKind::SweepCsv => check_csv_rows::<SweepRow>(text, SWEEP_CSV_HEADER),
        FileKind::SweepJson => check_json::<Vec<SweepRow>>(text),
        FileKind::SweepSummaryJson => check_json::<Versioned<Vec<SweepPoint>>>(text),
        FileKind::CapacityJson => check_json::<Versioned<crate::capacity::CapacityReport>>(text),
        FileKind::ComparisonCsv => check_csv_rows::<ComparisonRow>(text, COMPARISON_CSV_HEADER),
        FileKind::ComparisonJson => check_json::<Versioned<Vec<ComparisonRow>>>(text),
        FileKind::RunSummaryJson => check_json::<Versioned<RunSummary>>(text),
    }
}

/// A JSON body tagged with the schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Versioned<T> {
    pub schema_version: u32,
    pub data: T,
}

impl<T> Versioned<T> {
    pub fn new(data: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRunSummary {
    pub seed: u64,
    pub n: u32,
    pub k: u32,
    pub cs_range: f64,
    pub colored: usize,
    pub total: usize,
    pub coverage: f64,
    pub violations: usize,
}

/// Cross-seed aggregate written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub label: String,
}

/// Published value next to the measured mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub experiment: String,
    pub quantity: String,
    pub published: Option<f64>,
    pub measured: f64,
    pub deviation: Option<f64>,
}

impl ComparisonRow {
    fn new(experiment: &str, quantity: String, published: Option<f64>, measured: f64) -> Self {
        Self {
            experiment: experiment.into(),
            quantity,
            published,
            measured,
            deviation: published.map(|p| measured - p),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<ManifestFile>,
}

impl Writer<'_> {
    fn put(&mut self, name: String, kind: FileKind, seed: Option<u64>, body: &str) -> ScenarioResult<()> {
        fs::write(self.dir.join(&name), body)?;
        self.files.push(ManifestFile { path: name, kind, seed, sha256: sha256_hex(body.as_bytes()) });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: String, kind: FileKind, seed: Option<u64>, data: T) -> ScenarioResult<()> {
        let body = serde_json::to_string_pretty(&Versioned::new(data)).expect("report serializes");
        self.put(name, kind, seed, &body)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
}

fn build_topology(cfg: &ScenarioConfig, seed: u64) -> ScenarioResult<Topology> {
    Ok(Topology::build(cfg.topology.dim, cfg.topology.radio, cfg.stations_per_cell(), seed)?
        .assign_frequencies(&cfg.topology.frequency)?)
}

/// Executes the configured mode over every seed and writes reports plus a
/// manifest into `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> ScenarioResult<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let seeds = cfg.seeds.seeds();
    let mut w = Writer { dir: out_dir, files: Vec::new() };
    let mut per_seed_ms = Vec::new();

    match cfg.mode {
        Mode::Topology => {
            for &seed in &seeds {
                let t0 = Instant::now();
                let topo = build_topology(cfg, seed)?;
                w.put(format!("topology_seed{seed}.json"), FileKind::TopologyJson, Some(seed), &topo.to_json())?;
                per_seed_ms.push((seed, t0.elapsed().as_secs_f64() * 1e3));
            }
        }
        Mode::Admit => run_admit(cfg, &seeds, &mut w, &mut per_seed_ms)?,
        Mode::Color => run_color(cfg, &seeds, &mut w, &mut per_seed_ms)?,
        Mode::Sweep => {
            let mut means = Vec::new();
            for &seed in &seeds {
                let t0 = Instant::now();
                let spec = sweep_spec(cfg, seed);
                let report = cs_range_sweep(&spec)?;
                match cfg.format {
                    OutputFormat::Csv => {
                        w.put(format!("sweep_seed{seed}.csv"), FileKind::SweepCsv, Some(seed), &report.to_csv_string())?
                    }
                    OutputFormat::Json => w.put(
                        format!("sweep_seed{seed}.json"),
                        FileKind::SweepJson,
                        Some(seed),
                        &serde_json::to_string_pretty(&report.rows).expect("rows serialize"),
                    )?,
                }
                let summary = report.summary();
                means.push(mean(&summary.iter().map(|p| p.mean_coverage).collect::<Vec<_>>()));
                w.json(format!("sweep_seed{seed}_summary.json"), FileKind::SweepSummaryJson, Some(seed), summary)?;
                per_seed_ms.push((seed, t0.elapsed().as_secs_f64() * 1e3));
            }
            write_run_summary(&mut w, cfg, &seeds, means, "coverage over sweep points")?;
        }
        Mode::Capacity => {
            let c = &cfg.capacity;
            let codec = match (c.payload_bytes, c.packets_per_second) {
                (Some(p), Some(r)) => CodecProfile::custom("custom", p, r)?,
                (None, None) => CodecProfile::by_name(&c.codec)
                    .ok_or_else(|| ScenarioError::Config(format!("unknown codec `{}`", c.codec)))?,
                _ => {
                    return Err(ScenarioError::Config("custom codec needs payload_bytes and packets_per_second".into()))
                }
            };
            let frames = match c.frames {
                Some(f) => f,
                None => min_frames(c.beacon_interval, c.delay_budget, c.beacon_duration)?,
            };
            let timing = TimingParams {
                beacon_interval: c.beacon_interval,
                beacon_duration: c.beacon_duration,
                delay_budget: c.delay_budget,
                frames,
                slots_per_frame: c.n,
            };
            let report = capacity_report(&codec, &timing, c.c_ap_1)?;
            w.json("capacity.json".into(), FileKind::CapacityJson, None, report)?;
        }
        Mode::Replicate => {
            let rows = replicate_table(cfg.replicate.table, &seeds, &cfg.topology.radio)?;
            let name = table_name(cfg.replicate.table);
            w.put(format!("replicate_{name}.csv"), FileKind::ComparisonCsv, None, &to_csv(&rows))?;
            w.json(format!("replicate_{name}.json"), FileKind::ComparisonJson, None, rows)?;
        }
    }

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        mode: cfg.mode,
        seeds,
        files: w.files,
        timings: Timings { total_ms: started.elapsed().as_secs_f64() * 1e3, per_seed_ms },
    };
    fs::write(out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    fs::write(out_dir.join("config.json"), cfg.to_json())?;
    Ok(manifest)
}

fn write_run_summary(
    w: &mut Writer<'_>,
    cfg: &ScenarioConfig,
    seeds: &[u64],
    values: Vec<f64>,
    label: &str,
) -> ScenarioResult<()> {
    let summary =
        RunSummary { mode: cfg.mode, seeds: seeds.to_vec(), mean: mean(&values), values, label: label.into() };
    w.json("summary.json".into(), FileKind::RunSummaryJson, None, summary)
}

struct AdmitOutcome {
    seed: u64,
    csv: String,
    records: Vec<AdmissionRecord>,
    summary: AdmissionSummary,
    ms: f64,
}

fn admit_one(cfg: &ScenarioConfig, seed: u64) -> ScenarioResult<AdmitOutcome> {
    let t0 = Instant::now();
    let topo = build_topology(cfg, seed)?;
    let mut order = shuffled_candidates(&topo, seed);
    if let Some(limit) = cfg.admit.candidates {
        order.truncate(limit);
    }
    let cs = cfg.admit.cs_range.unwrap_or(cfg.topology.radio.cs_range);
    let report = run_admission_stream(&topo, cs, &order, cfg.admit.c_max)?;
    Ok(AdmitOutcome {
        seed,
        csv: report.to_csv_string(),
        records: report.records.clone(),
        summary: report.summary(),
        ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

fn run_admit(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    w: &mut Writer<'_>,
    per_seed_ms: &mut Vec<(u64, f64)>,
) -> ScenarioResult<()> {
    let outcomes: Vec<ScenarioResult<AdmitOutcome>> = seeds.par_iter().map(|&s| admit_one(cfg, s)).collect();
    let mut totals = Vec::new();
    for o in outcomes {
        let o = o?;
        match cfg.format {
            OutputFormat::Csv => {
                w.put(format!("admit_seed{}.csv", o.seed), FileKind::AdmissionCsv, Some(o.seed), &o.csv)?
            }
            OutputFormat::Json => w.put(
                format!("admit_seed{}.json", o.seed),
                FileKind::AdmissionJson,
                Some(o.seed),
                &serde_json::to_string_pretty(&o.records).expect("records serialize"),
            )?,
        }
        totals.push(o.summary.admitted_total as f64);
        w.json(format!("admit_seed{}_summary.json", o.seed), FileKind::AdmissionSummaryJson, Some(o.seed), o.summary)?;
        per_seed_ms.push((o.seed, o.ms));
    }
    write_run_summary(w, cfg, seeds, totals, "admitted sessions")
}

fn color_cs_range(cfg: &ScenarioConfig) -> ScenarioResult<f64> {
    let d = cfg.topology.radio.d_max;
    Ok(match cfg.color.cs_range {
        CsSetting::OverDmax(x) => x * d,
        CsSetting::Sector => sector_cs_range_for(cfg.color.n, cfg.color.c_ap_1, d)?,
    })
}

fn run_color(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    w: &mut Writer<'_>,
    per_seed_ms: &mut Vec<(u64, f64)>,
) -> ScenarioResult<()> {
    let cs = color_cs_range(cfg)?;
    let outcomes: Vec<ScenarioResult<(u64, String, ColorRunSummary, f64)>> = seeds
        .par_iter()
        .map(|&seed| {
            let t0 = Instant::now();
            let topo = build_topology(cfg, seed)?;
            let graph = build_coloring_graph(&topo, cs);
            let plan = if cfg.color.fixed_plan { FrequencyPlan::from_topology(&topo) } else { FrequencyPlan::Free };
            let params = CoTdmaParams { m: cfg.color.m, n: cfg.color.n, c_ap_1: cfg.color.c_ap_1, plan };
            let res = color(&graph, &params)?;
            let violations = validate_assignment(&graph, &res.assignment, &params).len();
            let summary = ColorRunSummary {
                seed,
                n: params.n,
                k: params.k(),
                cs_range: cs,
                colored: res.colored_count,
                total: res.total,
                coverage: res.coverage,
                violations,
            };
            Ok((seed, res.assignment.to_json(&graph), summary, t0.elapsed().as_secs_f64() * 1e3))
        })
        .collect();
    let mut coverages = Vec::new();
    for o in outcomes {
        let (seed, assignment, summary, ms) = o?;
        w.put(format!("color_seed{seed}_assignment.json"), FileKind::AssignmentJson, Some(seed), &assignment)?;
        coverages.push(summary.coverage);
        w.json(format!("color_seed{seed}_summary.json"), FileKind::ColorSummaryJson, Some(seed), summary)?;
        per_seed_ms.push((seed, ms));
    }
    write_run_summary(w, cfg, seeds, coverages, "coverage")
}

fn sweep_spec(cfg: &ScenarioConfig, seed: u64) -> SweepSpec {
    SweepSpec {
        dim: cfg.topology.dim,
        radio: cfg.topology.radio,
        stations_per_cell: cfg.stations_per_cell(),
        scheme: cfg.topology.frequency.clone(),
        m: cfg.color.m,
        c_ap_1: cfg.color.c_ap_1,
        fixed_plan: cfg.color.fixed_plan,
        n_values: cfg.sweep.n_values.clone(),
        cs_range: cfg.sweep.cs_range.clone(),
        trials: cfg.sweep.trials,
        seed,
    }
}

pub fn table_name(table: Table) -> &'static str {
    match table {
        Table::Table2 => "table2",
        Table::Table4 => "table4",
        Table::Fig11_14 => "fig11_14",
    }
}

/// Mean admitted sessions over `seeds` on the 5x5 single-channel grid with
/// 12 candidates per cell.
pub fn table2_mean_admitted(seeds: &[u64], radio: &RadioParams, c_max: usize) -> ScenarioResult<Vec<f64>> {
    let mut cfg = ScenarioConfig::new(Mode::Admit);
    cfg.topology =
        TopologyConfig { dim: 5, stations_per_cell: Some(12), radio: *radio, frequency: FrequencyScheme::Single };
    cfg.admit = AdmitConfig { c_max, cs_range: None, candidates: None };
    let out: Vec<ScenarioResult<AdmitOutcome>> = seeds.par_iter().map(|&s| admit_one(&cfg, s)).collect();
    out.into_iter().map(|o| o.map(|o| o.summary.admitted_total as f64)).collect()
}

/// Coverage sweep on the 5x5 fixed three-channel grid with `c_ap_1`
/// stations per cell; one trial per seed.
pub fn coverage_sweep(
    seeds: &[u64],
    radio: &RadioParams,
    c_ap_1: u32,
    n_values: &[u32],
    cs_range: CsRangeRule,
) -> ScenarioResult<Vec<SweepPoint>> {
    let seed = seeds.first().copied().unwrap_or(1);
    let spec = SweepSpec {
        dim: 5,
        radio: *radio,
        stations_per_cell: c_ap_1 as usize,
        scheme: FrequencyScheme::ThreeChannel,
        m: 3,
        c_ap_1,
        fixed_plan: true,
        n_values: n_values.to_vec(),
        cs_range,
        trials: seeds.len() as u32,
        seed,
    };
    Ok(cs_range_sweep(&spec)?.summary())
}

const TABLE4_N_11B: [u32; 6] = [1, 2, 3, 4, 6, 12];
const TABLE4_N_11G: [u32; 6] = [1, 2, 3, 4, 6, 60];
const TABLE4_PUBLISHED_11B: [f64; 6] = [0.800, 0.986, 1.0, 1.0, 1.0, 1.0];
const TABLE4_PUBLISHED_11G: [f64; 6] = [0.698, 0.930, 0.996, 1.0, 1.0, 1.0];

/// Runs the canonical scenario behind a published table and lines up the
/// published numbers with the measured means.
pub fn replicate_table(table: Table, seeds: &[u64], radio: &RadioParams) -> ScenarioResult<Vec<ComparisonRow>> {
    if seeds.is_empty() {
        return Err(ScenarioError::Config("at least one seed is required".into()));
    }
    let mut rows = Vec::new();
    match table {
        Table::Table2 => {
            for (c_max, published) in [(8usize, 62.0), (12, 70.4)] {
                let admitted = table2_mean_admitted(seeds, radio, c_max)?;
                let m = mean(&admitted);
                rows.push(ComparisonRow::new("table2", format!("C_max={c_max} mean admitted"), Some(published), m));
                rows.push(ComparisonRow::new(
                    "table2",
                    format!("C_max={c_max} per-AP"),
                    Some(published / 25.0),
                    m / 25.0,
                ));
            }
        }
        Table::Table4 => {
            for (c_ap_1, ns, published) in
                [(C_AP1_11B, TABLE4_N_11B, TABLE4_PUBLISHED_11B), (C_AP1_11G, TABLE4_N_11G, TABLE4_PUBLISHED_11G)]
            {
                let pts =
                    coverage_sweep(seeds, radio, c_ap_1, &ns, CsRangeRule::Fixed(vec![TUNED_CS_RANGE_OVER_DMAX]))?;
                for (p, want) in pts.iter().zip(published) {
                    rows.push(ComparisonRow::new(
                        "table4",
                        format!("C_AP_1={c_ap_1} n={} coverage", p.n),
                        Some(want),
                        p.mean_coverage,
                    ));
                }
            }
        }
        Table::Fig11_14 => {
            for (c_ap_1, ns) in [(C_AP1_11B, TABLE4_N_11B), (C_AP1_11G, TABLE4_N_11G)] {
                let sector = coverage_sweep(seeds, radio, c_ap_1, &ns, CsRangeRule::Sector)?;
                for p in sector {
                    rows.push(ComparisonRow::new(
                        "sector",
                        format!("C_AP_1={c_ap_1} n={} cs={:.4}d coverage", p.n, p.cs_range_over_dmax),
                        None,
                        p.mean_coverage,
                    ));
                }
                let grid = vec![1.0, 1.25, 1.5, TUNED_CS_RANGE_OVER_DMAX, 1.75, 2.0];
                let fixed = coverage_sweep(seeds, radio, c_ap_1, &ns, CsRangeRule::Fixed(grid))?;
                for p in fixed {
                    rows.push(ComparisonRow::new(
                        "fixed_cs",
                        format!("C_AP_1={c_ap_1} n={} cs={:.4}d coverage", p.n, p.cs_range_over_dmax),
                        None,
                        p.mean_coverage,
                    ));
                }
            }
        }
    }
    Ok(rows)
}

/// Default output directory, overridable through `VOIPCELL_OUT_DIR`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("VOIPCELL_OUT_DIR").map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_expand() {
        let s = SeedSpec { list: None, base: 10, count: 3 };
        assert_eq!(s.seeds(), vec![10, 11, 12]);
        let s = SeedSpec { list: Some(vec![5, 1]), base: 0, count: 9 };
        assert_eq!(s.seeds(), vec![5, 1]);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let mut cfg = ScenarioConfig::new(Mode::Sweep);
        cfg.sweep.cs_range = CsRangeRule::Sector;
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let err = ScenarioConfig::from_json(r#"{"mode":"admit","bogus":1}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let minimal = ScenarioConfig::from_json(r#"{"mode":"capacity"}"#).unwrap();
        assert_eq!(minimal.capacity.c_ap_1, 12);
    }

    #[test]
    fn invalid_configs_exit_two() {
        let mut cfg = ScenarioConfig::new(Mode::Topology);
        cfg.topology.dim = 0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let mut cfg = ScenarioConfig::new(Mode::Topology);
        cfg.seeds.count = 0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn infeasible_capacity_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ScenarioConfig::new(Mode::Capacity);
        cfg.capacity.delay_budget = 0.2;
        let err = run(&cfg, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unwritable_output_exits_four() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("blocker");
        fs::write(&file, "x").unwrap();
        let cfg = ScenarioConfig::new(Mode::Capacity);
        let err = run(&cfg, &file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn validator_rejects_wrong_header() {
        assert!(validate_file(FileKind::SweepCsv, "a,b\n1,2\n").is_err());
        assert!(validate_file(FileKind::CapacityJson, "{}").is_err());
    }
}
