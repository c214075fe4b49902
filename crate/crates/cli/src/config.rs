//! TOML run configuration.
//!
//! Every experiment reads its own table (`[two-qubit]`, `[ring]`, `[ising]`,
//! `[locc-check]`, `[oracle]`) plus the optional `[solver]` table. Missing
//! tables fall back to the defaults below.

use std::path::{Path, PathBuf};

use fme_core::fme::SetupSpec;
use fme_core::liouvillian::{SteadyStateMethod, Storage};
use fme_core::oracle::FieldConfig;
use fme_core::protocols::Z_MAX;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TwoQubit,
    Ring,
    Ising,
    LoccCheck,
    Oracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::TwoQubit => "two-qubit",
            Experiment::Ring => "ring",
            Experiment::Ising => "ising",
            Experiment::LoccCheck => "locc-check",
            Experiment::Oracle => "oracle",
        }
    }
}

/// A list of values, or `count` evenly spaced points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
    },
    LogRange {
        log_start: f64,
        log_stop: f64,
        count: usize,
    },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => spaced(*start, *stop, *count),
            Grid::LogRange {
                log_start,
                log_stop,
                count,
            } => spaced(*log_start, *log_stop, *count)
                .into_iter()
                .map(|e| 10f64.powf(e))
                .collect(),
        }
    }
}

fn spaced(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageChoice {
    #[default]
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Eigen,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub storage: StorageChoice,
    #[serde(default)]
    pub method: MethodChoice,
}

impl SolverConfig {
    pub fn storage(&self) -> Storage {
        match self.storage {
            StorageChoice::Auto => Storage::Auto,
            StorageChoice::Dense => Storage::Dense,
            StorageChoice::Sparse => Storage::Sparse,
        }
    }

    pub fn method(&self) -> SteadyStateMethod {
        match self.method {
            MethodChoice::Auto => SteadyStateMethod::Auto,
            MethodChoice::Eigen => SteadyStateMethod::Eigen,
            MethodChoice::Direct => SteadyStateMethod::Direct,
            MethodChoice::Iterative => SteadyStateMethod::Iterative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitConfig {
    pub z: Grid,
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        Self {
            z: Grid::Range {
                start: 0.1,
                stop: 0.9,
                count: 9,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub n: Vec<usize>,
    pub z: Grid,
    /// Extra bipartitions, each given by the sites of one side. The odd|even
    /// split is always reported.
    #[serde(default)]
    pub bipartitions: Vec<Vec<usize>>,
}

impl Default for RingConfig {
    fn default() -> Self {
        let mut z: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
        z.extend([0.95, 0.99]);
        Self {
            n: vec![3, 4, 5],
            z: Grid::List(z),
            bipartitions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianChoice {
    /// Full and purely dissipative runs for every grid point.
    #[default]
    Both,
    Full,
    Dissipative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub delta: f64,
    /// `g = B / Delta`.
    pub g: Grid,
    /// `alpha = r / sqrt(|Delta|)`.
    pub alpha: Grid,
    #[serde(default)]
    pub hamiltonian: HamiltonianChoice,
}

fn one() -> f64 {
    1.0
}

impl Default for IsingConfig {
    fn default() -> Self {
        Self {
            n: 5,
            delta: 1.0,
            g: Grid::LogRange {
                log_start: -1.0,
                log_stop: 1.0,
                count: 9,
            },
            alpha: Grid::List(vec![0.1, 1.0, 10.0]),
            hamiltonian: HamiltonianChoice::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsingField {
    /// Interferometer `V`.
    #[default]
    A,
    /// Interferometer `V^*`.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum SetupSource {
    TwoQubit {
        z: f64,
    },
    Ising {
        n: usize,
        #[serde(default = "one")]
        delta: f64,
        b: f64,
        #[serde(default = "one")]
        r: f64,
        #[serde(default)]
        field: IsingField,
    },
    Custom(SetupSpec),
}

impl Default for SetupSource {
    fn default() -> Self {
        SetupSource::TwoQubit { z: 0.3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoccConfig {
    #[serde(default)]
    pub setup: SetupSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// `"mixed"` for the maximally mixed state.
    Named(String),
    Basis {
        basis: Vec<usize>,
    },
    Diagonal {
        diagonal: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSettings {
    pub fock_dim: usize,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for FieldSettings {
    fn default() -> Self {
        let fc = FieldConfig::default();
        Self {
            fock_dim: fc.fock_dim,
            x_max: fc.x_max,
            n_points: fc.n_points,
        }
    }
}

impl From<FieldSettings> for FieldConfig {
    fn from(f: FieldSettings) -> Self {
        FieldConfig {
            fock_dim: f.fock_dim,
            x_max: f.x_max,
            n_points: f.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub setup: SetupSource,
    pub epsilon: f64,
    pub n_traj: usize,
    #[serde(default = "one_usize")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    pub initial: InitialState,
    #[serde(default)]
    pub field: FieldSettings,
}

fn one_usize() -> usize {
    1
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            setup: SetupSource::default(),
            epsilon: 0.05,
            n_traj: 10_000,
            steps: 1,
            seed: 0,
            initial: InitialState::Named("mixed".into()),
            field: FieldSettings::default(),
        }
    }
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(rename = "two-qubit")]
    pub two_qubit: Option<TwoQubitConfig>,
    pub ring: Option<RingConfig>,
    pub ising: Option<IsingConfig>,
    #[serde(rename = "locc-check")]
    pub locc_check: Option<LoccConfig>,
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "experiment", content = "parameters")]
pub enum Params {
    TwoQubit(TwoQubitConfig),
    Ring(RingConfig),
    Ising(IsingConfig),
    LoccCheck(LoccConfig),
    Oracle(OracleConfig),
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: Params,
    pub output: PathBuf,
    pub solver: SolverConfig,
    pub workers: usize,
}

pub fn parse_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

pub fn resolve(
    experiment: Experiment,
    file: FileConfig,
    o: &Overrides,
) -> Result<RunConfig, Failure> {
    if let Some(e) = file.experiment {
        if e != experiment {
            return Err(Failure::Config(format!(
                "experiment: file says {:?} but the command is {:?}",
                e.name(),
                experiment.name()
            )));
        }
    }
    let output = o
        .output
        .clone()
        .or(file.output)
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
    let workers = match o.workers {
        Some(0) => return Err(Failure::Config("--workers: must be at least 1".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let params = match experiment {
        Experiment::TwoQubit => Params::TwoQubit(file.two_qubit.unwrap_or_default()),
        Experiment::Ring => Params::Ring(file.ring.unwrap_or_default()),
        Experiment::Ising => Params::Ising(file.ising.unwrap_or_default()),
        Experiment::LoccCheck => Params::LoccCheck(file.locc_check.unwrap_or_default()),
        Experiment::Oracle => {
            let mut c = file.oracle.unwrap_or_default();
            if let Some(s) = o.seed {
                c.seed = s;
            }
            Params::Oracle(c)
        }
    };
    let run = RunConfig {
        params,
        output,
        solver: file.solver,
        workers,
    };
    validate(&run)?;
    Ok(run)
}

fn bad(field: String, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{field}: {msg}"))
}

fn check_grid(field: &str, grid: &Grid, lo: f64, hi: f64) -> Result<(), Failure> {
    if let Grid::Range { count: 0, .. } | Grid::LogRange { count: 0, .. } = grid {
        return Err(bad(field.into(), "count must be positive"));
    }
    let values = grid.values();
    if values.is_empty() {
        return Err(bad(field.into(), "grid is empty"));
    }
    for (k, v) in values.iter().enumerate() {
        if !(v.is_finite() && *v >= lo && *v <= hi) {
            return Err(bad(
                format!("{field}[{k}]"),
                format!("{v} outside [{lo}, {hi}]"),
            ));
        }
    }
    Ok(())
}

fn check_setup(field: &str, s: &SetupSource) -> Result<(), Failure> {
    match s {
        SetupSource::TwoQubit { z } => {
            if !(0.0..=Z_MAX).contains(z) {
                return Err(bad(
                    format!("{field}.z"),
                    format!("{z} outside [0, {Z_MAX}]"),
                ));
            }
        }
        SetupSource::Ising { n, delta, b, r, .. } => {
            if *n < 3 {
                return Err(bad(format!("{field}.n"), "need at least 3 sites"));
            }
            if !delta.is_finite() || !b.is_finite() {
                return Err(bad(format!("{field}.delta"), "couplings must be finite"));
            }
            if !(r.is_finite() && *r > 0.0) {
                return Err(bad(format!("{field}.r"), "must be positive"));
            }
        }
        SetupSource::Custom(spec) => {
            spec.build().map_err(|e| bad(field.into(), e))?;
        }
    }
    Ok(())
}

pub fn validate(run: &RunConfig) -> Result<(), Failure> {
    match &run.params {
        Params::TwoQubit(c) => check_grid("two-qubit.z", &c.z, 0.0, Z_MAX),
        Params::Ring(c) => {
            if c.n.is_empty() {
                return Err(bad("ring.n".into(), "no sizes given"));
            }
            for (k, &n) in c.n.iter().enumerate() {
                if !(3..=10).contains(&n) {
                    return Err(bad(format!("ring.n[{k}]"), format!("{n} outside [3, 10]")));
                }
            }
            check_grid("ring.z", &c.z, 0.0, Z_MAX)?;
            let n_min = *c.n.iter().min().unwrap();
            for (k, part) in c.bipartitions.iter().enumerate() {
                if part.is_empty() || part.iter().any(|&s| s >= n_min) {
                    return Err(bad(
                        format!("ring.bipartitions[{k}]"),
                        format!("sites must be nonempty and below the smallest size {n_min}"),
                    ));
                }
            }
            Ok(())
        }
        Params::Ising(c) => {
            if !(3..=8).contains(&c.n) {
                return Err(bad("ising.n".into(), format!("{} outside [3, 8]", c.n)));
            }
            if !(c.delta.is_finite() && c.delta != 0.0) {
                return Err(bad("ising.delta".into(), "must be finite and nonzero"));
            }
            check_grid("ising.g", &c.g, f64::MIN, f64::MAX)?;
            check_grid("ising.alpha", &c.alpha, f64::MIN_POSITIVE, f64::MAX)
        }
        Params::LoccCheck(c) => check_setup("locc-check.setup", &c.setup),
        Params::Oracle(c) => {
            check_setup("oracle.setup", &c.setup)?;
            if !(c.epsilon > 0.0 && c.epsilon <= 0.2) {
                return Err(bad("oracle.epsilon".into(), "must lie in (0, 0.2]"));
            }
            if c.n_traj == 0 {
                return Err(bad("oracle.n_traj".into(), "must be positive"));
            }
            if c.steps == 0 {
                return Err(bad("oracle.steps".into(), "must be positive"));
            }
            FieldConfig::from(c.field)
                .validate()
                .map_err(|e| bad("oracle.field".into(), e))?;
            if let InitialState::Named(name) = &c.initial {
                if name != "mixed" {
                    return Err(bad(
                        "oracle.initial".into(),
                        format!("unknown state {name:?}, expected \"mixed\", {{ basis = [..] }} or {{ diagonal = [..] }}"),
                    ));
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = Grid::Range {
            start: 0.1,
            stop: 0.9,
            count: 9,
        };
        let v = g.values();
        assert_eq!(v.len(), 9);
        assert!((v[8] - 0.9).abs() < 1e-15);
        let lg = Grid::LogRange {
            log_start: -1.0,
            log_stop: 1.0,
            count: 3,
        };
        assert_eq!(lg.values(), vec![0.1, 1.0, 10.0]);
    }

    #[test]
    fn parses_tables() {
        let text = r#"
            experiment = "ring"
            [solver]
            storage = "sparse"
            [ring]
            n = [3, 4]
            z = { start = 0.0, stop = 0.5, count = 6 }
            bipartitions = [[0, 1]]
        "#;
        let f: FileConfig = toml::from_str(text).unwrap();
        let run = resolve(Experiment::Ring, f, &Overrides::default()).unwrap();
        let Params::Ring(r) = run.params else {
            panic!()
        };
        assert_eq!(r.n, vec![3, 4]);
        assert_eq!(r.z.values().len(), 6);
        assert_eq!(run.solver.storage, StorageChoice::Sparse);
    }

    #[test]
    fn custom_setup_parses() {
        let text = r#"
            [oracle]
            epsilon = 0.05
            n_traj = 100
            initial = { basis = [1] }
            [oracle.setup]
            protocol = "custom"
            n_sites = 1
            system_ops = [{ site = 0, op = "sigma_minus" }]
            interferometer = [[[0.0, 1.0]]]
            feedback = [{ channel = 0, site = 0, op = "sigma_x", scale = 0.3 }]
        "#;
        let f: FileConfig = toml::from_str(text).unwrap();
        let run = resolve(
            Experiment::Oracle,
            f,
            &Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        let Params::Oracle(o) = run.params else {
            panic!()
        };
        assert_eq!(o.seed, 9);
        assert!(matches!(o.setup, SetupSource::Custom(_)));
    }

    #[test]
    fn reports_offending_field() {
        let f: FileConfig = toml::from_str("[two-qubit]\nz = [0.1, 1.5]").unwrap();
        let err = resolve(Experiment::TwoQubit, f, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("two-qubit.z[1]"), "{err}");
        let err = toml::from_str::<FileConfig>("[ring]\nn = [3]\nz = [0.1]\nzz = 1").unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
    }

    #[test]
    fn experiment_mismatch_is_rejected() {
        let f: FileConfig = toml::from_str("experiment = \"ising\"").unwrap();
        assert!(resolve(Experiment::Ring, f, &Overrides::default()).is_err());
    }
}
