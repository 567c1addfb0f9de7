use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use ibdash::baselines::{BaselineKind, LatsModel};
use ibdash::dag::{stagerize, AppDag};
use ibdash::device::{default_lambda_sets, default_profiles, LambdaScenario, LambdaSets, ProfileFile};
use ibdash::orchestrator::OrchestratorParams;
use ibdash::scheduler::SchedulerKind;
use ibdash::sim::{SimConfig, WorkloadItem};
use ibdash::workloads::{build, default_catalog, TaskTypeOverride, WorkloadKind, WorkloadSpec, DEFAULT_FANOUT};

use crate::CliError;

/// On-disk experiment description. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub schedulers: Vec<SchedulerKind>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub fleet: FleetSection,
    #[serde(default)]
    pub params: OrchestratorParams,
    pub workload: Vec<WorkloadSection>,
    /// LaTS coefficient CSV; the bundled model is used when absent.
    pub lats_model: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub cycle_length_s: f64,
    pub n_cycles: u32,
    pub instances_per_cycle: u32,
    pub arrival_window_s: f64,
    pub record_load: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            cycle_length_s: 15.0,
            n_cycles: 20,
            instances_per_cycle: 1000,
            arrival_window_s: 1.5,
            record_load: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceCount {
    pub class: String,
    pub count: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSection {
    pub profiles: Option<PathBuf>,
    pub lambda_sets: Option<PathBuf>,
    /// `mix`, `ced`, `ped`, `custom`, or any table name in `lambda_sets`.
    pub scenario: String,
    /// Per-class rates for the `custom` scenario.
    pub rates: BTreeMap<String, f64>,
    /// One device per class when empty.
    pub devices: Vec<DeviceCount>,
}

impl Default for FleetSection {
    fn default() -> Self {
        Self {
            profiles: None,
            lambda_sets: None,
            scenario: "mix".into(),
            rates: BTreeMap::new(),
            devices: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub kind: Option<WorkloadKind>,
    pub dag: Option<PathBuf>,
    #[serde(default = "default_fanout")]
    pub fanout: u32,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub overrides: Vec<TaskTypeOverride>,
}

fn default_fanout() -> u32 {
    DEFAULT_FANOUT
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative to the working directory; defaults to `results/<name>`.
    pub dir: Option<PathBuf>,
}

/// A parsed and fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub schedulers: Vec<SchedulerKind>,
    /// Scheduler field is set per run.
    pub config: SimConfig,
    pub out_dir: PathBuf,
    /// Raw bytes of the experiment file plus every file it references.
    pub inputs: Vec<(String, Vec<u8>)>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = read_bytes(path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))?;
        let file: ExperimentFile =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut inputs = vec![(path.display().to_string(), bytes)];
        Self::from_file(file, base, &mut inputs).map(|mut e| {
            e.inputs = inputs;
            e
        })
    }

    fn from_file(file: ExperimentFile, base: &Path, inputs: &mut Vec<(String, Vec<u8>)>) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Input(m);
        if file.schedulers.is_empty() {
            return Err(bad("schedulers must not be empty".into()));
        }
        if file.workload.is_empty() {
            return Err(bad("at least one [[workload]] entry is required".into()));
        }

        let profiles = match &file.fleet.profiles {
            Some(p) => {
                let p = resolve(base, p);
                let bytes = read_bytes(&p)?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                inputs.push((p.display().to_string(), bytes));
                ProfileFile::from_toml_str(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
            }
            None => default_profiles(),
        };
        let sets = match &file.fleet.lambda_sets {
            Some(p) => {
                let p = resolve(base, p);
                let bytes = read_bytes(&p)?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                inputs.push((p.display().to_string(), bytes));
                LambdaSets::from_toml_str(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
            }
            None => default_lambda_sets(),
        };
        let rates = match file.fleet.scenario.as_str() {
            "custom" => sets
                .rates(&LambdaScenario::Custom(file.fleet.rates.clone()))
                .map_err(|e| bad(e.to_string()))?,
            name => sets
                .0
                .get(name)
                .cloned()
                .ok_or_else(|| bad(format!("unknown failure-rate scenario {name:?}")))?,
        };
        let counts: Vec<(String, u32)> = if file.fleet.devices.is_empty() {
            profiles.one_per_class()
        } else {
            file.fleet.devices.iter().map(|d| (d.class.clone(), d.count)).collect()
        };
        if counts.iter().any(|c| c.1 == 0) {
            return Err(bad("device counts must be at least 1".into()));
        }
        let fleet = profiles
            .build_fleet(&counts, &rates, &file.fleet.scenario)
            .map_err(|e| bad(e.to_string()))?;

        let catalog = default_catalog();
        let mut workload = Vec::new();
        for (i, w) in file.workload.iter().enumerate() {
            let dag = match (&w.kind, &w.dag) {
                (Some(kind), None) => {
                    let spec = WorkloadSpec {
                        kind: *kind,
                        fanout: w.fanout,
                        overrides: w.overrides.clone(),
                    };
                    build(&spec).map_err(|e| bad(format!("workload {i}: {e}")))?
                }
                (None, Some(p)) => {
                    let p = resolve(base, p);
                    let bytes = read_bytes(&p)?;
                    let text = String::from_utf8_lossy(&bytes).into_owned();
                    inputs.push((p.display().to_string(), bytes));
                    AppDag::from_toml_str(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
                }
                _ => return Err(bad(format!("workload {i}: give exactly one of `kind` or `dag`"))),
            };
            if let Some(t) = dag.task_types.iter().find(|t| t.id >= fleet.n_types()) {
                return Err(bad(format!(
                    "workload {i}: task type {} ({}) is outside the device profiles' {} types",
                    t.id,
                    t.name,
                    fleet.n_types()
                )));
            }
            let staged = stagerize(&dag).map_err(|e| bad(format!("workload {i}: {e}")))?;
            workload.push(WorkloadItem {
                dag: staged,
                weight: w.weight,
            });
        }

        let needs_lats = file
            .schedulers
            .contains(&SchedulerKind::Baseline(BaselineKind::Lats));
        let lats = match &file.lats_model {
            Some(p) => {
                let p = resolve(base, p);
                let bytes = read_bytes(&p)?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                inputs.push((p.display().to_string(), bytes));
                Some(LatsModel::from_csv_str(&text, &catalog).map_err(|e| bad(format!("{}: {e}", p.display())))?)
            }
            None if needs_lats => Some(LatsModel::default_with(&catalog)),
            None => None,
        };

        let config = SimConfig {
            seed: file.seed,
            cycle_length_s: file.sim.cycle_length_s,
            n_cycles: file.sim.n_cycles,
            instances_per_cycle: file.sim.instances_per_cycle,
            arrival_window_s: file.sim.arrival_window_s,
            profiles: fleet.profiles().to_vec(),
            scenario: file.fleet.scenario.clone(),
            scheduler: file.schedulers[0],
            params: file.params,
            workload,
            lats,
            record_load: file.sim.record_load,
        };
        for &k in &file.schedulers {
            let mut c = config.clone();
            c.scheduler = k;
            c.check().map_err(|e| bad(e.to_string()))?;
        }
        let out_dir = file
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(&file.name));
        Ok(Self {
            name: file.name,
            schedulers: file.schedulers,
            config,
            out_dir,
            inputs: Vec::new(),
        })
    }
}
