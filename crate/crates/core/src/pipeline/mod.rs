//! End-to-end driver: stage artifacts, `.partial` handling, summary and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use log::info;
use milp::mps::to_mps_string;
use milp::SolverConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ctm::{
    baseline_summary, build_network, cells_csv, curves_csv, nct_csv, shortest_path_baseline, sodta_summary, solve_sodta,
    CellNetwork, NetworkError, RouteError, SodtaError,
};
use crate::disruption::{build_area, SpatioTemporalArea};
use crate::mapping::{
    classes_csv, demand_map, derive_classes, parse_classes_csv, parse_demand_csv, parse_terminal_csv, terminal_csv,
    terminal_entries, DemandMatrix, MappingError,
};
use crate::model::{load_scenario, validate_scenario, Scenario, ScenarioError};
use crate::rescheduler::{
    accumulation_csv, build_stage1, prepare, solve_stage1, stage1_summary, station_summary_csv, timetable_csv, Stage1Error,
};

pub const TIMETABLE: &str = "timetable.csv";
pub const ACCUMULATION: &str = "accumulation.csv";
pub const STATIONS: &str = "stations.csv";
pub const TERMINAL: &str = "terminal_accumulation.csv";
pub const INDICATORS: &str = "indicators.csv";
pub const STAGE1_MPS: &str = "stage1.mps";
pub const STAGE1_SUMMARY: &str = "stage1_summary.txt";
pub const CLASSES: &str = "classes.csv";
pub const DEMAND: &str = "demand.csv";
pub const CURVES: &str = "curves.csv";
pub const NCT: &str = "nct.csv";
pub const CELLS: &str = "cells.csv";
pub const SODTA_SUMMARY: &str = "sodta_summary.txt";
pub const BASELINE: &str = "baseline.txt";
pub const SUMMARY: &str = "summary.txt";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    All,
    Reschedule,
    Map,
    Sodta,
    Baseline,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::All => "all",
            Stage::Reschedule => "reschedule",
            Stage::Map => "map",
            Stage::Sodta => "sodta",
            Stage::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("i/o: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{stage}: missing input artifact {path}")]
    MissingArtifact { stage: &'static str, path: PathBuf },
    #[error("reschedule: {0}")]
    Stage1(#[from] Stage1Error),
    #[error("map: {0}")]
    Mapping(#[from] MappingError),
    #[error("sodta: {0}")]
    Network(#[from] NetworkError),
    #[error("sodta: {0}")]
    Sodta(#[from] SodtaError),
    #[error("baseline: {0}")]
    Route(#[from] RouteError),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Scenario(ScenarioError::Parse { .. } | ScenarioError::Dangling { .. }) => 5,
            PipelineError::Scenario(ScenarioError::Io { .. }) | PipelineError::Io { .. } | PipelineError::MissingArtifact { .. } => 4,
            PipelineError::Stage1(_) => 2,
            PipelineError::Mapping(MappingError::Csv { .. }) => 4,
            PipelineError::Mapping(_) | PipelineError::Network(_) | PipelineError::Sodta(_) => 3,
            PipelineError::Route(RouteError::Syntax(_)) => 5,
            PipelineError::Route(_) => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub out_dir: PathBuf,
    pub stage: Stage,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub eps: Option<f64>,
    pub export_mps: bool,
    pub dump_indicators: bool,
    pub baseline_routes: BTreeMap<usize, Vec<usize>>,
}

impl RunOptions {
    pub fn new(scenario: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            scenario: scenario.into(),
            out_dir: out_dir.into(),
            stage: Stage::All,
            seed: None,
            threads: None,
            eps: None,
            export_mps: false,
            dump_indicators: false,
            baseline_routes: BTreeMap::new(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: String,
    stage: Stage,
    output_dir: String,
    solver: &'a SolverConfig,
    seed: u64,
    status: &'a str,
    started: String,
    finished: Option<String>,
    artifacts: BTreeMap<String, String>,
}

/// Files written by a stage carry `.partial` until [`Writer::commit`].
struct Writer<'a> {
    dir: &'a Path,
    pending: Vec<&'static str>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Writer { dir, pending: Vec::new() }
    }

    fn put(&mut self, name: &'static str, text: &str) -> Result<(), PipelineError> {
        let path = partial_path(self.dir, name);
        fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })?;
        self.pending.push(name);
        Ok(())
    }

    fn commit(&mut self) -> Result<(), PipelineError> {
        for name in self.pending.drain(..) {
            let from = partial_path(self.dir, name);
            let to = self.dir.join(name);
            fs::rename(&from, &to).map_err(|source| PipelineError::Io { path: to, source })?;
        }
        Ok(())
    }
}

fn partial_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{}.partial", name))
}

fn read_artifact(dir: &Path, name: &str, stage: &'static str) -> Result<String, PipelineError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact { stage, path });
    }
    fs::read_to_string(&path).map_err(|source| PipelineError::Io { path, source })
}

/// Loads, applies command-line overrides and validates.
pub fn load_checked(opts: &RunOptions) -> Result<Scenario, PipelineError> {
    let mut s = load_scenario(&opts.scenario)?;
    if let Some(seed) = opts.seed {
        s.solver.milp.seed = seed;
    }
    if let Some(t) = opts.threads {
        s.solver.milp.threads = t.max(1);
    }
    if let Some(eps) = opts.eps {
        s.solver.milp.eps = eps;
    }
    let report = validate_scenario(&s);
    if !report.is_empty() {
        return Err(PipelineError::Config(format!("scenario is invalid:\n{}", report).trim_end().to_string()));
    }
    Ok(s)
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub artifacts: BTreeMap<String, String>,
}

pub fn run_pipeline(opts: &RunOptions) -> Result<RunReport, PipelineError> {
    let scenario = load_checked(opts)?;
    let dir = opts.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let started = now();
    write_manifest(opts, &scenario, "running", &started, None, BTreeMap::new())?;
    let result = run_stages(opts, &scenario);
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("failed: {}", e),
    };
    if result.is_ok() {
        write_summary(dir)?;
    }
    let artifacts = checksums(dir)?;
    write_manifest(opts, &scenario, &status, &started, Some(now()), artifacts.clone())?;
    result.map(|()| RunReport { artifacts })
}

fn run_stages(opts: &RunOptions, s: &Scenario) -> Result<(), PipelineError> {
    let dir = opts.out_dir.as_path();
    let area = build_area(&s.disruption, &s.line).map_err(Stage1Error::from)?;
    let all = opts.stage == Stage::All;
    if all || opts.stage == Stage::Reschedule {
        stage_reschedule(opts, s, dir)?;
    }
    if !all && opts.stage == Stage::Reschedule {
        return Ok(());
    }
    let net = build_network(&s.road, &s.vehicle)?;
    if all || opts.stage == Stage::Map {
        stage_map(s, &area, &net, dir)?;
    }
    if all || opts.stage == Stage::Sodta {
        let demand = load_demand(s, &area, dir, "sodta")?;
        let mut w = Writer::new(dir);
        let sol = solve_sodta(&net, &demand, &s.solver.milp)?;
        info!("sodta: total travel time {:.3}, max NCT {:.2} min", sol.ttt(), sol.max_nct_minutes());
        w.put(CURVES, &curves_csv(&sol))?;
        w.put(NCT, &nct_csv(&sol))?;
        w.put(CELLS, &cells_csv(&sol))?;
        w.put(SODTA_SUMMARY, &sodta_summary(&sol))?;
        w.commit()?;
    }
    if all || opts.stage == Stage::Baseline {
        let demand = load_demand(s, &area, dir, "baseline")?;
        let mut w = Writer::new(dir);
        let base = shortest_path_baseline(&net, &demand, &opts.baseline_routes)?;
        w.put(BASELINE, &baseline_summary(&base))?;
        w.commit()?;
    }
    Ok(())
}

fn stage_reschedule(opts: &RunOptions, s: &Scenario, dir: &Path) -> Result<(), PipelineError> {
    let mut w = Writer::new(dir);
    let prep = prepare(s)?;
    if opts.dump_indicators {
        w.put(INDICATORS, &prep.indicators.to_csv(s))?;
    }
    let model = build_stage1(s, &prep.area, &prep.indicators).map_err(Stage1Error::from)?;
    if opts.export_mps {
        w.put(STAGE1_MPS, &to_mps_string(&model.model, "STAGE1"))?;
    }
    let sol = solve_stage1(&model, s, &prep, &s.solver.milp)?;
    w.put(TIMETABLE, &timetable_csv(&sol.timetable))?;
    w.put(ACCUMULATION, &accumulation_csv(&sol.accumulation, prep.area.terminals()))?;
    w.put(STATIONS, &station_summary_csv(&sol.accumulation, &s.line))?;
    w.put(TERMINAL, &terminal_csv(&terminal_entries(&sol.accumulation, s, &prep.area)))?;
    w.put(STAGE1_SUMMARY, &stage1_summary(&sol, s, &prep))?;
    w.commit()
}

fn stage_map(s: &Scenario, area: &SpatioTemporalArea, net: &CellNetwork, dir: &Path) -> Result<(), PipelineError> {
    let text = read_artifact(dir, TERMINAL, "map")?;
    let entries = parse_terminal_csv(&text, TERMINAL)?;
    let mut w = Writer::new(dir);
    let classes = derive_classes(&entries, area, net)?;
    let demand = demand_map(&entries, &classes, s.vehicle.capacity, s.vehicle.dispatch_period, area, s.road.time_step_s);
    w.put(CLASSES, &classes_csv(&classes))?;
    w.put(DEMAND, &demand.to_csv())?;
    w.commit()
}

fn load_demand(s: &Scenario, area: &SpatioTemporalArea, dir: &Path, stage: &'static str) -> Result<DemandMatrix, PipelineError> {
    let classes = parse_classes_csv(&read_artifact(dir, CLASSES, stage)?, CLASSES)?;
    Ok(parse_demand_csv(
        &read_artifact(dir, DEMAND, stage)?,
        DEMAND,
        &classes,
        s.vehicle.capacity,
        s.vehicle.dispatch_period,
        area,
        s.road.time_step_s,
    )?)
}

/// Concatenates the stage blocks present in `dir` and, when both travel times
/// are known, the system-optimal improvement over the fixed routes.
pub fn write_summary(dir: &Path) -> Result<(), PipelineError> {
    let mut out = String::new();
    let read = |name: &str| -> Option<String> { fs::read_to_string(dir.join(name)).ok() };
    let blocks: Vec<Option<String>> = [STAGE1_SUMMARY, SODTA_SUMMARY, BASELINE].iter().map(|n| read(n)).collect();
    for b in blocks.iter().flatten() {
        out.push_str(b);
        out.push('\n');
    }
    let ttt = |b: &Option<String>| -> Option<f64> {
        b.as_ref()?
            .lines()
            .find_map(|l| l.split_once("total travel time: "))
            .and_then(|(_, rest)| rest.split_whitespace().next()?.parse().ok())
    };
    if let (Some(so), Some(base)) = (ttt(&blocks[1]), ttt(&blocks[2])) {
        let pct = if base > 0.0 { 100.0 * (base - so) / base } else { 0.0 };
        out.push_str(&format!("[comparison]\nsystem-optimal travel time is {:.2}% below the fixed routes\n", pct));
    }
    if out.is_empty() {
        return Ok(());
    }
    let path = dir.join(SUMMARY);
    fs::write(&path, out).map_err(|source| PipelineError::Io { path, source })
}

/// SHA-256 of every finished artifact in `dir` except the manifest.
pub fn checksums(dir: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for e in entries.flatten() {
        let name = e.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !e.path().is_file() {
            continue;
        }
        let bytes = fs::read(e.path()).map_err(|source| PipelineError::Io { path: e.path(), source })?;
        let digest = Sha256::digest(&bytes);
        out.insert(name, digest.iter().map(|b| format!("{:02x}", b)).collect());
    }
    Ok(out)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn write_manifest(
    opts: &RunOptions,
    s: &Scenario,
    status: &str,
    started: &str,
    finished: Option<String>,
    artifacts: BTreeMap<String, String>,
) -> Result<(), PipelineError> {
    let m = Manifest {
        scenario: opts.scenario.display().to_string(),
        stage: opts.stage,
        output_dir: opts.out_dir.display().to_string(),
        solver: &s.solver.milp,
        seed: s.solver.milp.seed,
        status,
        started: started.to_string(),
        finished,
        artifacts,
    };
    let path = opts.out_dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })
}
