//! `run`, `sweep` and `validate` entry points and their CSV files.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_simulation, EngineError, SimulationResult, TaskRecord};
use crate::metagraph::{MetagraphError, Scheme};
use crate::metrics::{success_rate, weighted_average_delay};
use crate::oracle::{shortest_path_suite, theorem1_suite, write_report_lines, OracleReport};
use crate::scenario::{ConfigError, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metagraph(#[from] MetagraphError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub const TASK_HEADER: [&str; 14] = [
    "task_id",
    "src_row",
    "src_col",
    "dst_row",
    "dst_col",
    "gen_time_s",
    "scheme",
    "classification",
    "delay_s",
    "success",
    "t_trans_s",
    "t_prop_s",
    "t_comp_s",
    "t_wait_s",
];

pub const SUBTASK_HEADER: [&str; 15] = [
    "task_id",
    "subtask",
    "scheme",
    "classification",
    "target_row",
    "target_col",
    "length_s",
    "delay_s",
    "t_sgl_s",
    "t_isl_s",
    "t_prop_s",
    "t_comp_s",
    "t_wait_s",
    "hops",
    "path",
];

pub const SWEEP_HEADER: [&str; 6] = ["scheme", "param", "value", "seed", "wad_s", "success_rate"];

/// Per-task row. Delay components and classification are those of the
/// subtask that finished last; failed tasks report zero components.
fn task_row(r: &TaskRecord) -> Vec<String> {
    let t = &r.task;
    let (class, c) = match r.critical() {
        Some(d) => (d.classification.name(), d.components),
        None => ("failed", Default::default()),
    };
    vec![
        t.id.to_string(),
        t.source_zone.row.to_string(),
        t.source_zone.col.to_string(),
        t.dest_zone.row.to_string(),
        t.dest_zone.col.to_string(),
        t.gen_time_s.to_string(),
        r.scheme.to_string(),
        class.to_string(),
        r.delay_s.to_string(),
        r.success.to_string(),
        c.transmission().to_string(),
        c.propagation.to_string(),
        c.computation.to_string(),
        c.waiting.to_string(),
    ]
}

pub fn write_tasks_csv(result: &SimulationResult, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TASK_HEADER).map_err(csv_err(path))?;
    for r in &result.records {
        w.write_record(task_row(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One row per subtask of every successful task.
pub fn write_subtasks_csv(result: &SimulationResult, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUBTASK_HEADER).map_err(csv_err(path))?;
    for r in result.records.iter().filter(|r| r.success) {
        for d in &r.decisions {
            let c = d.components;
            let path_text: Vec<String> = d.path.iter().map(|n| n.to_string()).collect();
            w.write_record([
                r.task.id.to_string(),
                d.subtask.to_string(),
                r.scheme.to_string(),
                d.classification.to_string(),
                d.target_zone.row.to_string(),
                d.target_zone.col.to_string(),
                d.length_s.to_string(),
                (d.completion_s - r.task.gen_time_s).to_string(),
                c.sgl_transmission.to_string(),
                c.isl_transmission.to_string(),
                c.propagation.to_string(),
                c.computation.to_string(),
                c.waiting.to_string(),
                d.path.len().saturating_sub(1).to_string(),
                path_text.join(" "),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub seed: u64,
    pub tasks: usize,
    pub wad_s: Option<f64>,
    pub success_rate: Option<f64>,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tasks={}", self.tasks)?;
        if let (Some(wad), Some(ok)) = (self.wad_s, self.success_rate) {
            write!(
                f,
                " scheme={} seed={} wad_s={} success_rate={}",
                self.scheme, self.seed, wad, ok
            )?;
        }
        Ok(())
    }
}

pub fn summarize(result: &SimulationResult) -> RunSummary {
    RunSummary {
        scheme: result.scheme,
        seed: result.seed,
        tasks: result.records.len(),
        wad_s: weighted_average_delay(&result.records, result.config.threshold_s).ok(),
        success_rate: success_rate(&result.records).ok(),
    }
}

/// Simulates `config` and writes `tasks.csv`, `subtasks.csv` and
/// `summary.txt` into `out_dir`.
pub fn run_command(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, ExperimentError> {
    let result = run_simulation(config, config.seed)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_tasks_csv(&result, &out_dir.join("tasks.csv"))?;
    write_subtasks_csv(&result, &out_dir.join("subtasks.csv"))?;
    let summary = summarize(&result);
    let path = out_dir.join("summary.txt");
    std::fs::write(&path, format!("{summary}\n")).map_err(io_err(&path))?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Load,
    SatGflops,
    SglGbps,
    SubtaskGflo,
    SubtaskGb,
}

impl SweepParam {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::Load => "load",
            SweepParam::SatGflops => "sat_gflops",
            SweepParam::SglGbps => "sgl_gbps",
            SweepParam::SubtaskGflo => "subtask_gflo",
            SweepParam::SubtaskGb => "subtask_gb",
        }
    }

    pub fn apply(&self, config: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParam::Load => config.load = value,
            SweepParam::SatGflops => config.sat_gflops = value,
            SweepParam::SglGbps => config.sgl_gbps = value,
            SweepParam::SubtaskGflo => config.subtask_gflo = value,
            SweepParam::SubtaskGb => config.subtask_gb = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepParam {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "load" => Ok(SweepParam::Load),
            "sat_gflops" => Ok(SweepParam::SatGflops),
            "sgl_gbps" => Ok(SweepParam::SglGbps),
            "subtask_gflo" => Ok(SweepParam::SubtaskGflo),
            "subtask_gb" => Ok(SweepParam::SubtaskGb),
            other => Err(ConfigError::InvalidValue {
                key: "param".into(),
                value: other.into(),
                reason: "unknown param (expected load, sat_gflops, sgl_gbps, subtask_gflo or subtask_gb)".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub param: SweepParam,
    pub value: f64,
    pub seed: u64,
    pub wad_s: Option<f64>,
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
}

/// Runs every (scheme, value, seed) point in parallel. Rows come back
/// ordered by scheme, then value, then seed, as listed in `spec`.
pub fn sweep(config: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    let points: Vec<(Scheme, f64, u64)> = spec
        .schemes
        .iter()
        .flat_map(|&s| {
            spec.values
                .iter()
                .flat_map(move |&v| spec.seeds.iter().map(move |&seed| (s, v, seed)))
        })
        .collect();
    for &v in &spec.values {
        let mut c = config.clone();
        spec.param.apply(&mut c, v);
        c.validate()?;
    }
    points
        .par_iter()
        .map(|&(scheme, value, seed)| {
            let mut c = config.clone();
            c.scheme = scheme;
            spec.param.apply(&mut c, value);
            let result = run_simulation(&c, seed)?;
            Ok(SweepRow {
                scheme,
                param: spec.param,
                value,
                seed,
                wad_s: weighted_average_delay(&result.records, c.threshold_s).ok(),
                success_rate: success_rate(&result.records).ok(),
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SWEEP_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            r.param.to_string(),
            r.value.to_string(),
            r.seed.to_string(),
            opt(r.wad_s),
            opt(r.success_rate),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn sweep_command(
    config: &ScenarioConfig,
    spec: &SweepSpec,
    out_dir: &Path,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let rows = sweep(config, spec)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_sweep_csv(&rows, &out_dir.join("sweep.csv"))?;
    Ok(rows)
}

/// Seed-averaged WAD of one (scheme, value) point.
pub fn mean_wad(rows: &[SweepRow], scheme: Scheme, value: f64) -> Option<f64> {
    let wads: Vec<f64> = rows
        .iter()
        .filter(|r| r.scheme == scheme && r.value == value)
        .filter_map(|r| r.wad_s)
        .collect();
    (!wads.is_empty()).then(|| wads.iter().sum::<f64>() / wads.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub shortest_path: Vec<OracleReport>,
    pub theorem1: Vec<OracleReport>,
}

impl ValidationSummary {
    pub fn failures(&self) -> usize {
        self.shortest_path
            .iter()
            .chain(&self.theorem1)
            .filter(|r| !r.ok)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

impl fmt::Display for ValidationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, name: &str, reports: &[OracleReport]| {
            let bad = reports.iter().filter(|r| !r.ok).count();
            let skipped = reports.iter().filter(|r| r.skipped).count();
            writeln!(
                f,
                "{name}: {} instances, {} failed, {} skipped",
                reports.len(),
                bad,
                skipped
            )
        };
        line(f, "shortest_path", &self.shortest_path)?;
        line(f, "dominance", &self.theorem1)?;
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Runs both oracle suites; writes `validate.csv` when `out_dir` is given.
pub fn validate(seed: u64, out_dir: Option<&Path>) -> Result<ValidationSummary, ExperimentError> {
    let summary = ValidationSummary {
        shortest_path: shortest_path_suite(seed, 500, 10),
        theorem1: theorem1_suite(seed, 200)?,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("validate.csv");
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        let all: Vec<OracleReport> = summary
            .shortest_path
            .iter()
            .chain(&summary.theorem1)
            .cloned()
            .collect();
        write_report_lines(&all, &mut w).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        ScenarioConfig {
            load: 20.0,
            duration_s: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_load_run_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let config = ScenarioConfig {
            load: 0.0,
            ..Default::default()
        };
        let summary = run_command(&config, dir.path()).unwrap();
        assert_eq!(summary.to_string(), "tasks=0");
        let text = std::fs::read_to_string(dir.path().join("tasks.csv")).unwrap();
        assert_eq!(text, format!("{}\n", TASK_HEADER.join(",")));
    }

    #[test]
    fn run_writes_one_row_per_task() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_command(&tiny(), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("tasks.csv")).unwrap();
        assert_eq!(text.lines().count(), summary.tasks + 1);
        assert!(summary
            .to_string()
            .starts_with(&format!("tasks={} ", summary.tasks)));
        assert!(summary.to_string().contains("wad_s="));
    }

    #[test]
    fn sweep_cardinality_and_order() {
        let spec = SweepSpec {
            param: SweepParam::Load,
            values: vec![5.0, 10.0],
            schemes: Scheme::ALL.to_vec(),
            seeds: vec![1, 2],
        };
        let rows = sweep(&tiny(), &spec).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<(Scheme, f64, u64)> =
            rows.iter().map(|r| (r.scheme, r.value, r.seed)).collect();
        assert_eq!(keys[0], (Scheme::Fusion, 5.0, 1));
        assert_eq!(keys[1], (Scheme::Fusion, 5.0, 2));
        assert_eq!(keys[2], (Scheme::Fusion, 10.0, 1));
        assert_eq!(keys[4], (Scheme::Ground, 5.0, 1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_sweep_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("scheme,param,value,seed,wad_s,success_rate\n"));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn unknown_param() {
        let e = "gravity".parse::<SweepParam>().unwrap_err().to_string();
        assert!(e.contains("unknown param"));
        assert_eq!(
            "sgl_gbps".parse::<SweepParam>().unwrap(),
            SweepParam::SglGbps
        );
    }

    #[test]
    fn invalid_sweep_value_is_a_config_error() {
        let spec = SweepSpec {
            param: SweepParam::SglGbps,
            values: vec![-1.0],
            schemes: vec![Scheme::Fusion],
            seeds: vec![1],
        };
        assert!(matches!(
            sweep(&tiny(), &spec),
            Err(ExperimentError::Config(_))
        ));
    }
}
