//! JSON-configured batch runs.
//!
//! A config names a domain, a list of levels, walk settings and a list of
//! experiments. [`run_experiment`] writes one set of report files per
//! `(experiment, level)` into the output directory, plus `manifest.json`
//! listing every file with its SHA-256 and the hash of the canonical config.
//! `workers` only sizes the thread pool; it is left out of the hash and the
//! echoed config because results do not depend on it.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analysis::{self, BinBox, HeatKernelOracle, SubBox};
use crate::domain::{make_builtin_domain, BuiltinDomain, DomainError, DomainSpec};
use crate::functions::TestFunction;
use crate::grid::{self, hex_digest, GridError, GridFunction, GridGraph, GridTag};
use crate::operators::{self, EnergyReport, MAX_POWER_CHECK_VERTICES};
use crate::rng::RandomSource;
use crate::walk::{Discipline, StartMode, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Experiment {
    BuildGrid,
    Energy,
    SpectrumCheck,
    Marginal,
    Occupation,
    Crevice,
    ExitTime,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::BuildGrid,
        Experiment::Energy,
        Experiment::SpectrumCheck,
        Experiment::Marginal,
        Experiment::Occupation,
        Experiment::Crevice,
        Experiment::ExitTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BuildGrid => "buildGrid",
            Experiment::Energy => "energy",
            Experiment::SpectrumCheck => "spectrumCheck",
            Experiment::Marginal => "marginal",
            Experiment::Occupation => "occupation",
            Experiment::Crevice => "crevice",
            Experiment::ExitTime => "exitTime",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Where walks start. Occupation runs always start from `m_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StartChoice {
    /// Grid vertex at the lattice site nearest the domain's base point.
    BasePoint,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WalkSettings {
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    pub discipline: Discipline,
    pub start: StartChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarginalSettings {
    pub time: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExitTimeSettings {
    /// Box center; the base point when absent.
    pub center: Option<Vec<f64>>,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumSettings {
    pub samples: usize,
    pub max_power: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub domain: BuiltinDomain,
    pub base_point: Option<Vec<f64>>,
    pub levels: Vec<u32>,
    pub c1: f64,
    pub grid_tag: GridTag,
    pub walk: WalkSettings,
    pub experiments: Vec<Experiment>,
    pub test_functions: Vec<TestFunction>,
    pub output_dir: String,
    #[serde(skip)]
    pub workers: Option<usize>,
    pub marginal: MarginalSettings,
    pub exit_time: ExitTimeSettings,
    pub spectrum_check: SpectrumSettings,
}

impl ExperimentConfig {
    pub fn domain_spec(&self) -> Result<DomainSpec, DomainError> {
        make_builtin_domain(&self.domain, self.base_point.clone())
    }

    /// Canonical JSON (without `workers`).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Indented form of [`Self::canonical_json`], newline terminated.
    pub fn pretty_json(&self) -> String {
        json(self)
    }

    pub fn hash(&self) -> String {
        hex_digest(self.canonical_json().as_bytes())
    }

    pub fn walk_config(&self, start: StartMode) -> WalkConfig {
        WalkConfig {
            horizon: self.walk.horizon,
            replicas: self.walk.replicas,
            seed: self.walk.seed,
            discipline: self.walk.discipline,
            start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker {
    errors: Vec<ConfigError>,
}

impl Checker {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(ConfigError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn unknown_keys(&mut self, obj: &Map<String, Value>, path: &str, known: &[&str]) {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                let full = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                self.err(&full, "unknown field");
            }
        }
    }

    fn object<'a>(&mut self, v: Option<&'a Value>, path: &str) -> Option<&'a Map<String, Value>> {
        match v {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn number(&mut self, v: Option<&Value>, path: &str, default: f64) -> f64 {
        match v {
            None => default,
            Some(x) => match x.as_f64() {
                Some(f) if f.is_finite() => f,
                _ => {
                    self.err(path, "expected a finite number");
                    default
                }
            },
        }
    }

    fn count(&mut self, v: Option<&Value>, path: &str, default: usize) -> usize {
        match v {
            None => default,
            Some(x) => match x.as_u64() {
                Some(n) if n >= 1 => n as usize,
                _ => {
                    self.err(path, "expected a positive integer");
                    default
                }
            },
        }
    }

    fn point(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        match v.as_array() {
            Some(a) if !a.is_empty() => {
                let p: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
                if p.is_none() {
                    self.err(path, "expected an array of numbers");
                }
                p
            }
            _ => {
                self.err(path, "expected a nonempty array of numbers");
                None
            }
        }
    }

    fn parse<T: serde::de::DeserializeOwned>(&mut self, v: &Value, path: &str) -> Option<T> {
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                self.err(path, e.to_string());
                None
            }
        }
    }
}

const TOP_LEVEL: &[&str] = &[
    "domain",
    "basePoint",
    "levels",
    "c1",
    "gridTag",
    "walk",
    "experiments",
    "testFunctions",
    "outputDir",
    "workers",
    "marginal",
    "exitTime",
    "spectrumCheck",
];

/// Parse and check a config, reporting every problem found.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut c = Checker { errors: Vec::new() };
    let root: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![ConfigError {
                path: String::new(),
                message: format!("invalid JSON: {e}"),
            }])
        }
    };
    let Some(obj) = root.as_object() else {
        return Err(vec![ConfigError {
            path: String::new(),
            message: "config must be a JSON object".into(),
        }]);
    };
    c.unknown_keys(obj, "", TOP_LEVEL);

    let domain: Option<BuiltinDomain> = match obj.get("domain") {
        None => {
            c.err("domain", "missing domain");
            None
        }
        Some(v) => c.parse(v, "domain"),
    };
    let base_point = obj.get("basePoint").and_then(|v| c.point(v, "basePoint"));
    let spec = match &domain {
        Some(d) => match make_builtin_domain(d, base_point.clone()) {
            Ok(s) => Some(s),
            Err(e @ DomainError::BasePointOutside(_)) | Err(e @ DomainError::DimensionMismatch { .. })
                if base_point.is_some() =>
            {
                c.err("basePoint", e.to_string());
                None
            }
            Err(e) => {
                c.err("domain", e.to_string());
                None
            }
        },
        None => None,
    };

    let levels: Vec<u32> = match obj.get("levels") {
        None => {
            c.err("levels", "missing levels");
            Vec::new()
        }
        Some(Value::Array(a)) if !a.is_empty() => a
            .iter()
            .enumerate()
            .filter_map(|(i, v)| match v.as_u64() {
                Some(k) if (1..=30).contains(&k) => Some(k as u32),
                _ => {
                    c.err(&format!("levels[{i}]"), "level must be an integer in 1..=30");
                    None
                }
            })
            .collect(),
        Some(_) => {
            c.err("levels", "levels must be a nonempty array");
            Vec::new()
        }
    };

    let c1 = c.number(obj.get("c1"), "c1", 0.5);
    if !(c1 > 0.0 && c1 < 1.0) {
        c.err("c1", "c1 must lie in (0,1)");
    }
    let grid_tag = match obj.get("gridTag") {
        None => GridTag::CubeBased,
        Some(v) => c.parse(v, "gridTag").unwrap_or(GridTag::CubeBased),
    };

    let walk = match obj.get("walk") {
        None => {
            c.err("walk.seed", "missing seed");
            None
        }
        Some(v) => c.object(Some(v), "walk").map(|w| {
            c.unknown_keys(w, "walk", &["horizon", "replicas", "seed", "discipline", "start"]);
            let horizon = c.number(w.get("horizon"), "walk.horizon", 1.0);
            if horizon <= 0.0 {
                c.err("walk.horizon", "horizon must be positive");
            }
            let replicas = c.count(w.get("replicas"), "walk.replicas", 1000);
            let seed = match w.get("seed") {
                None => {
                    c.err("walk.seed", "missing seed");
                    0
                }
                Some(s) => s.as_u64().unwrap_or_else(|| {
                    c.err("walk.seed", "seed must be a non-negative integer");
                    0
                }),
            };
            let discipline = w
                .get("discipline")
                .and_then(|v| c.parse(v, "walk.discipline"))
                .unwrap_or(Discipline::DiscreteTime);
            let start = w
                .get("start")
                .and_then(|v| c.parse(v, "walk.start"))
                .unwrap_or(StartChoice::BasePoint);
            WalkSettings {
                horizon,
                replicas,
                seed,
                discipline,
                start,
            }
        }),
    };

    let experiments: Vec<Experiment> = match obj.get("experiments") {
        None => {
            c.err("experiments", "missing experiments");
            Vec::new()
        }
        Some(Value::Array(a)) if !a.is_empty() => a
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let e = v.as_str().and_then(Experiment::from_name);
                if e.is_none() {
                    c.err(
                        &format!("experiments[{i}]"),
                        format!("unknown experiment {v}; expected one of {}", experiment_names()),
                    );
                }
                e
            })
            .collect(),
        Some(_) => {
            c.err("experiments", "experiments must be a nonempty array");
            Vec::new()
        }
    };

    let test_functions: Vec<TestFunction> = match obj.get("testFunctions") {
        None => vec![TestFunction::Linear],
        Some(Value::Array(a)) => a
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let f = v.as_str().and_then(TestFunction::from_id);
                if f.is_none() {
                    c.err(&format!("testFunctions[{i}]"), format!("unknown test function {v}"));
                }
                f
            })
            .collect(),
        Some(_) => {
            c.err("testFunctions", "expected an array of function ids");
            Vec::new()
        }
    };

    let output_dir = match obj.get("outputDir") {
        None => "out".to_string(),
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            c.err("outputDir", "expected a nonempty string");
            String::new()
        }
    };
    let workers = obj.get("workers").map(|v| c.count(Some(v), "workers", 1));

    let marginal = {
        let m = c.object(obj.get("marginal"), "marginal");
        if let Some(m) = m {
            c.unknown_keys(m, "marginal", &["time", "bins"]);
        }
        let time = c.number(m.and_then(|m| m.get("time")), "marginal.time", 0.1);
        if time <= 0.0 {
            c.err("marginal.time", "time must be positive");
        }
        let bins = c.count(m.and_then(|m| m.get("bins")), "marginal.bins", 20);
        MarginalSettings { time, bins }
    };
    let exit_time = {
        let m = c.object(obj.get("exitTime"), "exitTime");
        if let Some(m) = m {
            c.unknown_keys(m, "exitTime", &["center", "halfWidth"]);
        }
        let center = m
            .and_then(|m| m.get("center"))
            .and_then(|v| c.point(v, "exitTime.center"));
        let half_width = c.number(m.and_then(|m| m.get("halfWidth")), "exitTime.halfWidth", 0.25);
        if half_width <= 0.0 {
            c.err("exitTime.halfWidth", "halfWidth must be positive");
        }
        ExitTimeSettings { center, half_width }
    };
    let spectrum_check = {
        let m = c.object(obj.get("spectrumCheck"), "spectrumCheck");
        if let Some(m) = m {
            c.unknown_keys(m, "spectrumCheck", &["samples", "maxPower"]);
        }
        SpectrumSettings {
            samples: c.count(m.and_then(|m| m.get("samples")), "spectrumCheck.samples", 5),
            max_power: c.count(m.and_then(|m| m.get("maxPower")), "spectrumCheck.maxPower", 20),
        }
    };

    // Cross-field checks.
    if let Some(spec) = &spec {
        let d = spec.dimension();
        for (i, f) in test_functions.iter().enumerate() {
            if f.min_dimension() > d {
                c.err(
                    &format!("testFunctions[{i}]"),
                    format!("{} needs dimension ≥ {}", f.id(), f.min_dimension()),
                );
            }
        }
        if let Some(center) = &exit_time.center {
            if center.len() != d {
                c.err("exitTime.center", format!("expected {d} coordinates"));
            }
        }
    }
    if grid_tag == GridTag::EdgeBased && experiments.contains(&Experiment::Energy) {
        c.err("gridTag", "energy needs the cubeBased grid for its continuum integral");
    }
    if let (Some(d), Some(w)) = (&domain, &walk) {
        if experiments.contains(&Experiment::Marginal)
            && w.start == StartChoice::BasePoint
            && d.as_box().is_none()
        {
            c.err(
                "walk.start",
                "a marginal run from the base point compares with the box heat kernel, so the domain must be a rectangle; use a stationary start otherwise",
            );
        }
    }

    match (c.errors.is_empty(), domain, walk) {
        (true, Some(domain), Some(walk)) => Ok(ExperimentConfig {
            domain,
            base_point,
            levels,
            c1,
            grid_tag,
            walk,
            experiments,
            test_functions,
            output_dir,
            workers,
            marginal,
            exit_time,
            spectrum_check,
        }),
        _ => Err(c.errors),
    }
}

fn experiment_names() -> String {
    Experiment::ALL.map(Experiment::name).join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RunStatus {
    Ok,
    EmptyGrid,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub experiment: Experiment,
    pub level: u32,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub files: Vec<OutputFile>,
}

impl Manifest {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RunStatus::Failed).count()
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<OutputFile>,
}

impl Writer<'_> {
    fn emit(&mut self, name: String, contents: &str) -> Result<String, RunError> {
        let path = self.dir.join(&name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path, source })?;
        self.files.push(OutputFile {
            path: name.clone(),
            sha256: hex_digest(contents.as_bytes()),
        });
        Ok(name)
    }
}

enum Outcome {
    Files(Vec<(String, String)>),
    EmptyGrid,
    Skipped(String),
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn base_vertex(spec: &DomainSpec, g: &GridGraph) -> Result<usize, String> {
    g.nearest_vertex(spec.base_point()).ok_or_else(|| {
        format!(
            "the lattice site nearest the base point {:?} is not a grid vertex at level {}",
            spec.base_point(),
            g.level()
        )
    })
}

fn run_one(
    cfg: &ExperimentConfig,
    spec: &DomainSpec,
    experiment: Experiment,
    k: u32,
) -> Result<Outcome, String> {
    let tag = |name: &str, ext: &str| format!("report-{name}-k{k}.{ext}");
    if experiment == Experiment::Crevice {
        let r = analysis::crevice_penetration(spec, k, cfg.c1).map_err(|e| e.to_string())?;
        let csv = format!(
            "k,c1,cubeVertices,edgeVertices,cubeChannelVertices,edgeChannelVertices,cubeChannelMass,edgeChannelMass\n{},{},{},{},{},{},{},{}\n",
            r.level,
            r.c1,
            r.cube_vertices,
            r.edge_vertices,
            r.cube_channel_vertices,
            r.edge_channel_vertices,
            r.cube_channel_mass,
            r.edge_channel_mass
        );
        return Ok(Outcome::Files(vec![
            (tag("crevice", "json"), json(&r)),
            (tag("crevice", "csv"), csv),
        ]));
    }
    let g = match cfg.grid_tag {
        GridTag::CubeBased => grid::build_cube_complex(spec, k, cfg.c1),
        GridTag::EdgeBased => grid::build_edge_graph(spec, k),
    }
    .map_err(|e: GridError| e.to_string())?;
    if g.is_empty() {
        return Ok(Outcome::EmptyGrid);
    }
    match experiment {
        Experiment::BuildGrid => {
            let mut s = g.to_json();
            s.push('\n');
            Ok(Outcome::Files(vec![(format!("grid-k{k}.json"), s)]))
        }
        Experiment::Energy => {
            let rows: Vec<EnergyReport> = cfg
                .test_functions
                .iter()
                .map(|&f| operators::energy_report(spec.name(), &g, f))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let mut csv = format!("{}\n", EnergyReport::CSV_HEADER);
            for r in &rows {
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            let report = serde_json::json!({
                "gridFingerprint": g.fingerprint(),
                "rows": rows,
            });
            Ok(Outcome::Files(vec![
                (tag("energy", "json"), json(&report)),
                (tag("energy", "csv"), csv),
            ]))
        }
        Experiment::SpectrumCheck => {
            if g.len() > MAX_POWER_CHECK_VERTICES {
                return Ok(Outcome::Skipped(format!(
                    "{} vertices exceed the limit of {MAX_POWER_CHECK_VERTICES}",
                    g.len()
                )));
            }
            let mut csv = String::from("sample,j,lhs,middle,rhs\n");
            let mut reports = Vec::new();
            for s in 0..cfg.spectrum_check.samples {
                // streams above the replica range keep these draws separate from walks
                let mut rng = RandomSource::new(cfg.walk.seed, (1u64 << 40) + ((k as u64) << 20) + s as u64);
                let values: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let f = GridFunction::new(&g, values).map_err(|e| e.to_string())?;
                let r = operators::power_contraction_check(&g, &f, cfg.spectrum_check.max_power)
                    .map_err(|e| e.to_string())?;
                for row in &r.rows {
                    csv.push_str(&format!("{s},{},{},{},{}\n", row.j, row.lhs, row.middle, row.rhs));
                }
                reports.push(r);
            }
            let report = serde_json::json!({
                "gridFingerprint": g.fingerprint(),
                "seed": cfg.walk.seed,
                "samples": reports,
            });
            Ok(Outcome::Files(vec![
                (tag("spectrumCheck", "json"), json(&report)),
                (tag("spectrumCheck", "csv"), csv),
            ]))
        }
        Experiment::Marginal => {
            let t = cfg.marginal.time;
            let bins = cfg.marginal.bins;
            match cfg.walk.start {
                StartChoice::BasePoint => {
                    let start = base_vertex(spec, &g)?;
                    let (lower, upper) = cfg.domain.as_box().ok_or("domain is not a rectangle")?;
                    let lengths = lower.iter().zip(&upper).map(|(a, b)| b - a).collect();
                    let oracle =
                        HeatKernelOracle::for_time(lower, lengths, t).map_err(|e| e.to_string())?;
                    let walk = cfg.walk_config(StartMode::FixedVertex(start));
                    let r = analysis::marginal_test(&g, &walk, &oracle, t, bins)
                        .map_err(|e| e.to_string())?;
                    Ok(Outcome::Files(vec![
                        (tag("marginal", "json"), json(&r)),
                        (tag("marginal", "csv"), r.to_csv()),
                    ]))
                }
                StartChoice::Stationary => {
                    let (lower, upper) = spec.bounding_box();
                    let b = BinBox { lower, upper, bins };
                    let walk = cfg.walk_config(StartMode::Stationary);
                    let emp = analysis::empirical_marginal(&g, &walk, t, &b).map_err(|e| e.to_string())?;
                    let push = analysis::stationary_pushforward(&g, &b).map_err(|e| e.to_string())?;
                    let mut csv = String::from("bin,empirical,stationary\n");
                    for (i, (e, p)) in emp.iter().zip(&push).enumerate() {
                        csv.push_str(&format!("{i},{e},{p}\n"));
                    }
                    let report = serde_json::json!({
                        "level": k,
                        "time": t,
                        "bins": b,
                        "empirical": emp,
                        "stationary": push,
                        "totalVariation": analysis::total_variation(&emp, &push),
                        "walk": walk,
                        "gridFingerprint": g.fingerprint(),
                    });
                    Ok(Outcome::Files(vec![
                        (tag("marginal", "json"), json(&report)),
                        (tag("marginal", "csv"), csv),
                    ]))
                }
            }
        }
        Experiment::Occupation => {
            let walk = cfg.walk_config(StartMode::Stationary);
            let r = analysis::occupation_test(&g, &walk).map_err(|e| e.to_string())?;
            Ok(Outcome::Files(vec![
                (tag("occupation", "json"), json(&r)),
                (tag("occupation", "csv"), r.to_csv()),
            ]))
        }
        Experiment::ExitTime => {
            let center = cfg
                .exit_time
                .center
                .clone()
                .unwrap_or_else(|| spec.base_point().to_vec());
            let sub = SubBox::centered(&center, cfg.exit_time.half_width);
            let start = g.nearest_vertex(&center).ok_or("box center is not a grid vertex")?;
            let walk = cfg.walk_config(StartMode::FixedVertex(start));
            let r = analysis::exit_time_test(&g, &walk, &sub).map_err(|e| e.to_string())?;
            let csv = format!(
                "k,replicas,empiricalMean,oracleMean,relativeError,ksDistance\n{},{},{},{},{},{}\n",
                r.level, r.replicas, r.empirical_mean, r.oracle_mean, r.relative_error, r.ks_distance
            );
            Ok(Outcome::Files(vec![
                (tag("exitTime", "json"), json(&r)),
                (tag("exitTime", "csv"), csv),
            ]))
        }
        Experiment::Crevice => unreachable!("handled above"),
    }
}

fn run_all(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest, RunError> {
    let spec = cfg.domain_spec()?;
    let mut writer = Writer {
        dir,
        files: Vec::new(),
    };
    let mut runs = Vec::new();
    for &experiment in &cfg.experiments {
        for &k in &cfg.levels {
            let mut record = RunRecord {
                experiment,
                level: k,
                status: RunStatus::Ok,
                message: None,
                files: Vec::new(),
            };
            match run_one(cfg, &spec, experiment, k) {
                Ok(Outcome::Files(files)) => {
                    for (name, contents) in files {
                        record.files.push(writer.emit(name, &contents)?);
                    }
                }
                Ok(Outcome::EmptyGrid) => {
                    record.status = RunStatus::EmptyGrid;
                    record.message = Some(format!("no cube qualifies at level {k}"));
                }
                Ok(Outcome::Skipped(why)) => {
                    record.status = RunStatus::Skipped;
                    record.message = Some(why);
                }
                Err(e) => {
                    record.status = RunStatus::Failed;
                    record.message = Some(e);
                }
            }
            runs.push(record);
        }
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        runs,
        files: writer.files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, json(&manifest)).map_err(|source| RunError::Io { path, source })?;
    Ok(manifest)
}

/// Run every `(experiment, level)` pair and write the manifest.
///
/// Failures of individual runs are recorded in the manifest; the error
/// return is reserved for I/O and setup problems.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest, RunError> {
    run_experiment_in(cfg, Path::new(&cfg.output_dir))
}

/// [`run_experiment`] with an explicit output directory.
pub fn run_experiment_in(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest, RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    #[cfg(feature = "parallel")]
    if let Some(w) = cfg.workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| RunError::ThreadPool(e.to_string()))?;
        return pool.install(|| run_all(cfg, dir));
    }
    run_all(cfg, dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterInfo {
    pub name: String,
    pub kind: String,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DomainInfo {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParameterInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionInfo {
    pub id: String,
    pub formula: String,
    pub min_dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Catalog {
    pub domains: Vec<DomainInfo>,
    pub test_functions: Vec<FunctionInfo>,
    pub experiments: Vec<String>,
}

fn param(name: &str, kind: &str, default: Option<&str>) -> ParameterInfo {
    ParameterInfo {
        name: name.into(),
        kind: kind.into(),
        default: default.map(Into::into),
    }
}

pub fn builtin_catalog() -> Catalog {
    let domain = |name: &str, description: &str, parameters| DomainInfo {
        name: name.into(),
        description: description.into(),
        parameters,
    };
    Catalog {
        domains: vec![
            domain(
                "rectangle",
                "axis-aligned box in any dimension; base point at the center",
                vec![
                    param("lower", "number[]", Some("[0, 0]")),
                    param("upper", "number[]", Some("[1, 1]")),
                ],
            ),
            domain(
                "disk",
                "open disk",
                vec![
                    param("center", "number[2]", Some("[0, 0]")),
                    param("radius", "number", Some("1")),
                ],
            ),
            domain(
                "slitDisk",
                "unit disk minus the slit [-1, 0] x {0}; base point (0.5, 0)",
                vec![],
            ),
            domain(
                "kochPrefractal",
                "Koch snowflake polygon after `level` refinements, centered at (0.5, 0.5)",
                vec![param("level", "integer 0..=7", None)],
            ),
            domain(
                "comb",
                "squares (-1,0)x(0,1) and (0,1)x(0,1) joined through the wall x1 = 0 by channels (1/n, 1/n + width) for n = 2, 3, ...; give channelWidths or widthBase; base point (0.75, 0.25)",
                vec![
                    param("channelWidths", "number[]", None),
                    param("widthBase", "number > 1, widths base^-n", None),
                    param("channelCount", "integer", Some("3")),
                ],
            ),
            domain(
                "polygon",
                "polygon with holes: outer loop counterclockwise, holes clockwise",
                vec![param("loops", "[[x, y], ...][]", None)],
            ),
        ],
        test_functions: TestFunction::ALL
            .iter()
            .map(|f| FunctionInfo {
                id: f.id().into(),
                formula: f.formula().into(),
                min_dimension: f.min_dimension(),
            })
            .collect(),
        experiments: Experiment::ALL.iter().map(|e| e.name().to_string()).collect(),
    }
}

/// Human-readable catalog of domains, test functions and experiments.
pub fn list_builtins() -> String {
    let cat = builtin_catalog();
    let mut out = String::from("domains:\n");
    for d in &cat.domains {
        out.push_str(&format!("  {}: {}\n", d.name, d.description));
        for p in &d.parameters {
            match &p.default {
                Some(def) => out.push_str(&format!("    {} ({}, default {})\n", p.name, p.kind, def)),
                None => out.push_str(&format!("    {} ({})\n", p.name, p.kind)),
            }
        }
    }
    out.push_str("test functions:\n");
    for f in &cat.test_functions {
        out.push_str(&format!("  {}: {} (dimension >= {})\n", f.id, f.formula, f.min_dimension));
    }
    out.push_str("experiments:\n");
    for e in &cat.experiments {
        out.push_str(&format!("  {e}\n"));
    }
    out
}

pub fn list_builtins_json() -> String {
    json(&builtin_catalog())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"name": "rectangle"},
        "levels": [2],
        "walk": {"seed": 1},
        "experiments": ["buildGrid"]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = validate_config(MINIMAL).unwrap();
        assert_eq!(cfg.c1, 0.5);
        assert_eq!(cfg.grid_tag, GridTag::CubeBased);
        assert_eq!(cfg.walk.discipline, Discipline::DiscreteTime);
        assert_eq!(cfg.output_dir, "out");
    }

    #[test]
    fn c1_out_of_range() {
        let raw = MINIMAL.replace("\"levels\"", "\"c1\": 1.5, \"levels\"");
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|e| e.path == "c1" && e.message == "c1 must lie in (0,1)"));
    }

    #[test]
    fn missing_seed_is_reported() {
        let raw = MINIMAL.replace("{\"seed\": 1}", "{}");
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|e| e.path == "walk.seed"));
    }

    #[test]
    fn all_errors_collected() {
        let raw = r#"{
            "domain": {"name": "rectangle"},
            "levels": [0],
            "c1": 2,
            "walk": {},
            "experiments": ["nope"],
            "bogus": 1
        }"#;
        let errs = validate_config(raw).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        for p in ["levels[0]", "c1", "walk.seed", "experiments[0]", "bogus"] {
            assert!(paths.contains(&p), "{p} missing from {paths:?}");
        }
    }

    #[test]
    fn bad_base_point_points_at_field() {
        let raw = MINIMAL.replace("\"levels\"", "\"basePoint\": [5, 5], \"levels\"");
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|e| e.path == "basePoint"));
    }

    #[test]
    fn workers_do_not_change_hash() {
        let a = validate_config(MINIMAL).unwrap();
        let b = validate_config(&MINIMAL.replace("\"levels\"", "\"workers\": 3, \"levels\"")).unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn catalog_lists_domains() {
        let text = list_builtins();
        assert!(text.contains("comb") && text.contains("kochPrefractal"));
        let v: Value = serde_json::from_str(&list_builtins_json()).unwrap();
        assert!(v["domains"].as_array().unwrap().len() >= 6);
    }
}
