//! Experiment configuration and the `routes`, `assign` and `summary` commands.
//!
//! Every CSV file starts with a `# ` comment block holding the resolved configuration
//! as TOML, so a result can be reproduced from the file alone. Outputs carry no
//! timestamps or absolute paths and are byte-identical across repeated runs.

mod plots;
pub mod svg;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plots::{iteration_plot, route_overlay, summary_plots};

use crate::assign::{
    read_history_csv, run_sweep, write_history_csv, write_summary_csv, AnalyticEvaluator,
    AssignmentParams, AssignmentResult, Evaluator, LatencySpec, SimulationEvaluator, SummaryRow, SweepEntry,
};
use crate::geometry::{load_geometry, GeometryError, ScenarioFile, WalkingGeometry};
use crate::routes::{enumerate_routes, RouteError, RouteSet, RouteSetConfig};
use crate::simulate::SimulationConfig;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("run failure: {0}")]
    Run(String),
}

impl ExperimentError {
    /// 2 configuration, 3 scenario, 4 run failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Scenario(_) => 3,
            ExperimentError::Run(_) => 4,
        }
    }
}

impl From<GeometryError> for ExperimentError {
    fn from(e: GeometryError) -> Self {
        ExperimentError::Scenario(e.to_string())
    }
}

impl From<RouteError> for ExperimentError {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::Config(m) => ExperimentError::Config(m),
            e => ExperimentError::Scenario(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Run(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Demands used by default (ped/s).
pub const DEFAULT_DEMANDS: [f64; 11] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0];

/// One sweep: scenario or latency oracle, demand and seed lists, and the settings
/// of every stage. Relative paths are resolved against the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<PathBuf>,
    /// Latency file; when set, travel times come from affine latencies instead of
    /// the simulator and `scenario` is not needed.
    pub oracle: Option<PathBuf>,
    pub demands: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads for the sweep; all cores when absent.
    pub workers: Option<usize>,
    pub routes: RouteSetConfig,
    /// `demand` and `seed` here are replaced per run.
    pub simulation: SimulationConfig,
    pub assignment: AssignmentParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            oracle: None,
            demands: DEFAULT_DEMANDS.to_vec(),
            seeds: vec![1, 2, 3, 4, 5],
            out: None,
            workers: None,
            routes: RouteSetConfig::default(),
            simulation: SimulationConfig::default(),
            assignment: AssignmentParams::default(),
        }
    }
}

/// Command-line values that replace config entries when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub demands: Option<Vec<f64>>,
    pub oracle: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.scenario, &mut cfg.oracle, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
        if let Some(v) = &o.seeds {
            self.seeds = v.clone();
        }
        if let Some(v) = &o.demands {
            self.demands = v.clone();
        }
        if let Some(v) = &o.oracle {
            self.oracle = Some(v.clone());
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.demands.is_empty() || self.seeds.is_empty() {
            return bad("demand and seed lists must not be empty".into());
        }
        if let Some(d) = self.demands.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return bad(format!("demand {d} is not positive"));
        }
        if self.scenario.is_none() && self.oracle.is_none() {
            return bad("either scenario or oracle must be given".into());
        }
        self.routes.validate()?;
        if self.oracle.is_none() {
            // demand is checked per run
            let sim = SimulationConfig { demand: 1.0, ..self.simulation.clone() };
            sim.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        self.assignment
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// The config as written into output headers: without output location and
    /// worker count, which do not affect results.
    fn for_header(&self) -> Self {
        Self {
            out: None,
            workers: None,
            ..self.clone()
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }
}

fn create_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Builds the routes of a scenario and writes `routes.toml` and `routes.svg` to `out`.
pub fn cmd_routes(scenario: &Path, config: &RouteSetConfig, out: &Path) -> Result<RouteSet, ExperimentError> {
    let geometry = load_geometry(scenario)?;
    let set = enumerate_routes(&geometry, config)?;
    create_dir(out)?;
    write_file(&out.join("routes.toml"), set.export().as_bytes())?;
    write_file(&out.join("routes.svg"), route_overlay(&set).as_bytes())?;
    Ok(set)
}

#[derive(Serialize, Deserialize)]
struct RunInfo {
    demand: f64,
    seed: u64,
    iterations: usize,
    selected_iter: usize,
    terminated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct RunHeader<'a> {
    run: RunInfo,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_data: Option<&'a ScenarioFile>,
}

#[derive(Deserialize)]
struct HeaderProbe {
    run: RunInfo,
}

/// File stem of one run.
pub fn run_stem(demand: f64, seed: u64) -> String {
    format!("run_d{demand}_s{seed}")
}

/// Outcome of `assign`: finished runs and the failures, in demand-major order.
pub struct SweepReport {
    pub results: Vec<(f64, u64, AssignmentResult)>,
    pub failures: Vec<(f64, u64, String)>,
}

/// Runs the sweep of `config`. Each run's CSV and plot are written as soon as the
/// run finishes; failed runs keep their partial history. Returns `Run` if any run
/// failed, after all others have completed.
pub fn cmd_assign(config: &ExperimentConfig) -> Result<SweepReport, ExperimentError> {
    config.validate()?;
    let out = config.out_dir();
    let header_cfg = config.for_header();
    let mut geometry_file = None;
    let mut routes = None;
    let evaluator: Box<dyn Evaluator + '_> = if let Some(path) = &config.oracle {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let spec: LatencySpec = toml::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Box::new(AnalyticEvaluator::from_spec(spec).map_err(|e| ExperimentError::Config(e.to_string()))?)
    } else {
        let geometry: WalkingGeometry = load_geometry(config.scenario.as_ref().unwrap())?;
        geometry_file = Some(geometry.to_scenario());
        routes = Some(enumerate_routes(&geometry, &config.routes)?);
        Box::new(SimulationEvaluator {
            routes: routes.as_ref().unwrap(),
            config: config.simulation.clone(),
        })
    };
    create_dir(&out)?;
    if let Some(set) = &routes {
        write_file(&out.join("routes.toml"), set.export().as_bytes())?;
        write_file(&out.join("routes.svg"), route_overlay(set).as_bytes())?;
    }
    let write_errors = Mutex::new(Vec::new());
    let persist = |entry: &SweepEntry| {
        let (result, error) = match &entry.outcome {
            Ok(r) => (r.clone(), None),
            Err(f) if f.history.is_empty() => {
                log::error!("demand {} seed {}: {}", entry.demand, entry.seed, f);
                return;
            }
            Err(f) => (
                AssignmentResult {
                    history: f.history.clone(),
                    terminated: false,
                    selected: 0,
                    termination_threshold: config.assignment.termination_threshold,
                },
                Some(f.to_string()),
            ),
        };
        let header = RunHeader {
            run: RunInfo {
                demand: entry.demand,
                seed: entry.seed,
                iterations: result.history.len(),
                selected_iter: result.selected_iteration().iteration,
                terminated: result.terminated,
                error,
            },
            config: &header_cfg,
            scenario_data: geometry_file.as_ref(),
        };
        let header = toml::to_string(&header).expect("header serializes");
        let stem = run_stem(entry.demand, entry.seed);
        let mut csv = Vec::new();
        let written = write_history_csv(&mut csv, &header, &result)
            .map_err(|e| io_err(&out, e))
            .and_then(|_| write_file(&out.join(format!("{stem}.csv")), &csv))
            .and_then(|_| {
                let title = format!("demand {} ped/s, seed {}", entry.demand, entry.seed);
                write_file(&out.join(format!("{stem}.svg")), iteration_plot(&title, &result).as_bytes())
            });
        if let Err(e) = written {
            write_errors.lock().unwrap().push(e.to_string());
        }
        log::info!(
            "demand {} seed {}: {} iteration(s), terminated {}",
            entry.demand,
            entry.seed,
            result.history.len(),
            result.terminated
        );
    };
    let entries = crate::par::with_workers(config.workers.unwrap_or(0), || {
        run_sweep(evaluator.as_ref(), &config.demands, &config.seeds, &config.assignment, &persist)
    });
    let mut report = SweepReport {
        results: Vec::new(),
        failures: Vec::new(),
    };
    for e in entries {
        match e.outcome {
            Ok(r) => report.results.push((e.demand, e.seed, r)),
            Err(f) => report.failures.push((e.demand, e.seed, f.to_string())),
        }
    }
    let mut problems: Vec<String> = report
        .failures
        .iter()
        .map(|(d, s, m)| format!("demand {d} seed {s}: {m}"))
        .collect();
    problems.extend(write_errors.into_inner().unwrap());
    if !problems.is_empty() {
        return Err(ExperimentError::Run(problems.join("; ")));
    }
    Ok(report)
}

/// Parses the `# ` header block of a run file.
fn read_run_header(text: &str) -> Option<RunInfo> {
    let header: String = text
        .lines()
        .map_while(|l| l.strip_prefix('#'))
        .map(|l| l.strip_prefix(' ').unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n");
    toml::from_str::<HeaderProbe>(&header).ok().map(|h| h.run)
}

/// Selected iteration of a run file: the last if it terminated, otherwise the
/// first with the smallest spread.
fn selected_row(rows: &[crate::assign::HistoryRow]) -> Option<&crate::assign::HistoryRow> {
    let last = rows.last()?;
    if last.terminated {
        return Some(last);
    }
    rows.iter().reduce(|best, r| if r.spread < best.spread { r } else { best })
}

/// Summary of a results directory.
pub struct SummaryReport {
    pub rows: Vec<SummaryRow>,
    /// Expected (demand, seed) pairs without a run file.
    pub missing: Vec<(f64, u64)>,
    /// Run files that could not be read.
    pub unreadable: Vec<String>,
}

/// Aggregates the selected iteration of every run in `dir` into `summary.csv`,
/// `summary_ratios.svg` and `summary_times.svg` under `out`.
pub fn cmd_summary(dir: &Path, out: &Path) -> Result<SummaryReport, ExperimentError> {
    let entries = fs::read_dir(dir).map_err(|e| ExperimentError::Config(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("run_") && name.ends_with(".csv")
        })
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut unreadable = Vec::new();
    let mut expected: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut header_cfg: Option<String> = None;
    for path in &files {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let Ok(text) = fs::read_to_string(path) else {
            unreadable.push(name);
            continue;
        };
        let (Some(info), Ok(history)) = (read_run_header(&text), read_history_csv(text.as_bytes())) else {
            unreadable.push(name);
            continue;
        };
        if let Some(cfg) = config_of(&text) {
            for &d in &cfg.demands {
                for &s in &cfg.seeds {
                    expected.insert((d.to_bits(), s));
                }
            }
            header_cfg.get_or_insert_with(|| toml::to_string(&cfg).unwrap_or_default());
        }
        let Some(sel) = selected_row(&history) else {
            unreadable.push(name);
            continue;
        };
        rows.push(SummaryRow {
            demand: info.demand,
            seed: info.seed,
            selected_iter: sel.iter,
            p: sel.p.clone(),
            tt: sel.tt.clone(),
            spread: sel.spread,
        });
    }
    if rows.is_empty() {
        return Err(ExperimentError::Config(format!(
            "{}: no completed runs found",
            dir.display()
        )));
    }
    let n = rows[0].p.len();
    if let Some(r) = rows.iter().find(|r| r.p.len() != n) {
        return Err(ExperimentError::Run(format!(
            "runs disagree on the route count (demand {} seed {})",
            r.demand, r.seed
        )));
    }
    rows.sort_by(|a, b| a.demand.total_cmp(&b.demand).then(a.seed.cmp(&b.seed)));
    rows.dedup_by(|a, b| a.demand == b.demand && a.seed == b.seed);
    let present: BTreeSet<(u64, u64)> = rows.iter().map(|r| (r.demand.to_bits(), r.seed)).collect();
    let mut missing: Vec<(f64, u64)> = expected
        .difference(&present)
        .map(|&(d, s)| (f64::from_bits(d), s))
        .collect();
    missing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (d, s) in &missing {
        log::warn!("missing run: demand {d} seed {s}");
    }
    for name in &unreadable {
        log::warn!("unreadable run file: {name}");
    }
    let mut header = String::from("summary of selected iterations\n");
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|(d, s)| format!("d{d}/s{s}")).collect();
        header.push_str(&format!("missing runs: {}\n", list.join(" ")));
    }
    if let Some(cfg) = &header_cfg {
        header.push_str(cfg);
    }
    create_dir(out)?;
    let mut csv = Vec::new();
    write_summary_csv(&mut csv, &header, &rows).map_err(|e| io_err(out, e))?;
    write_file(&out.join("summary.csv"), &csv)?;
    let (ratios, times) = summary_plots(&rows);
    write_file(&out.join("summary_ratios.svg"), ratios.as_bytes())?;
    write_file(&out.join("summary_times.svg"), times.as_bytes())?;
    Ok(SummaryReport {
        rows,
        missing,
        unreadable,
    })
}

fn config_of(text: &str) -> Option<ExperimentConfig> {
    #[derive(Deserialize)]
    struct Probe {
        config: ExperimentConfig,
    }
    let header: String = text
        .lines()
        .map_while(|l| l.strip_prefix('#'))
        .map(|l| l.strip_prefix(' ').unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n");
    toml::from_str::<Probe>(&header).ok().map(|p| p.config)
}
