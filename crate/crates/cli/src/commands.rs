use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use ibdash::baselines::{BaselineKind, LatsModel};
use ibdash::device::fit_lambda;
use ibdash::scheduler::SchedulerKind;
use ibdash::sim::{
    run, sweep_point, write_instances_csv, write_load_csv, write_summary_csv, write_sweep_csv, RunMetrics,
    SummaryRow, SweepParam, SweepRow,
};
use ibdash::workloads::{build, default_catalog, WorkloadKind, WorkloadSpec};

use crate::experiment::Experiment;
use crate::manifest::Manifest;
use crate::range::parse_range;
use crate::CliError;

/// Flags shared by `run` and `sweep`; each overrides the experiment file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub schedulers: Vec<SchedulerKind>,
    pub jobs: Option<usize>,
}

impl Overrides {
    fn apply(&self, exp: &mut Experiment) -> BTreeMap<String, String> {
        let mut used = BTreeMap::new();
        if let Some(seed) = self.seed {
            exp.config.seed = seed;
            used.insert("seed".into(), seed.to_string());
        }
        if let Some(dir) = &self.out_dir {
            exp.out_dir = dir.clone();
        }
        if !self.schedulers.is_empty() {
            exp.schedulers = self.schedulers.clone();
            let names: Vec<_> = self.schedulers.iter().map(|s| s.name()).collect();
            used.insert("scheduler".into(), names.join(","));
            if exp.schedulers.contains(&SchedulerKind::Baseline(BaselineKind::Lats)) && exp.config.lats.is_none() {
                exp.config.lats = Some(LatsModel::default_with(&default_catalog()));
            }
        }
        used
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Run(e.to_string()))
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn csv_err(path: &str) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("cannot write {path}: {e}"))
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json())
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

fn fmt_opt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        "-".into()
    }
}

pub fn cmd_run(experiment: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let mut exp = Experiment::load(experiment)?;
    let used = overrides.apply(&mut exp);
    let configs: Vec<_> = exp
        .schedulers
        .iter()
        .map(|&k| {
            let mut c = exp.config.clone();
            c.scheduler = k;
            c
        })
        .collect();
    let results: Vec<RunMetrics> = overrides
        .pool()?
        .install(|| configs.par_iter().map(run).collect::<Result<Vec<_>, _>>())
        .map_err(|e| CliError::Run(e.to_string()))?;

    make_dir(&exp.out_dir)?;
    let mut manifest = Manifest::new("run", &exp.name, exp.config.seed, &exp.inputs, used);
    let summary: Vec<SummaryRow> = results.iter().map(SummaryRow::from).collect();
    write_summary_csv(create(&exp.out_dir, "summary.csv")?, &summary).map_err(csv_err("summary.csv"))?;
    manifest.outputs.push("summary.csv".into());
    for m in &results {
        let name = format!("instances_{}.csv", m.scheduler);
        write_instances_csv(create(&exp.out_dir, &name)?, &m.records).map_err(csv_err(&name))?;
        manifest.outputs.push(name);
        if exp.config.record_load {
            let name = format!("load_{}.csv", m.scheduler);
            write_load_csv(create(&exp.out_dir, &name)?, &m.load).map_err(csv_err(&name))?;
            manifest.outputs.push(name);
        }
        manifest.schedulers.push(m.scheduler.clone());
    }
    write_manifest(&exp.out_dir, &manifest)?;

    println!(
        "{} | scenario {} | seed {} | {} instances per scheduler",
        exp.name,
        exp.config.scenario,
        exp.config.seed,
        results.first().map_or(0, |m| m.instances)
    );
    println!(
        "{:<12} {:>14} {:>12} {:>12} {:>9} {:>10}",
        "scheduler", "service_time_s", "pf_empirical", "pf_analytic", "failed", "max_share"
    );
    for s in &summary {
        println!(
            "{:<12} {:>14} {:>12.5} {:>12.5} {:>9} {:>10.3}",
            s.scheduler,
            fmt_opt(s.avg_service_time_s),
            s.avg_pf_empirical,
            s.avg_pf_analytical,
            s.failed,
            s.max_device_share
        );
    }
    println!("wrote {}", exp.out_dir.display());
    Ok(())
}

pub fn cmd_sweep(experiment: &Path, param: &str, range: &str, overrides: &Overrides) -> Result<(), CliError> {
    let param: SweepParam = param.parse().map_err(CliError::Input)?;
    let values = parse_range(range).map_err(CliError::Input)?;
    if overrides.schedulers.len() > 1 {
        return Err(CliError::Input("sweep takes a single --scheduler".into()));
    }
    let mut exp = Experiment::load(experiment)?;
    let mut used = overrides.apply(&mut exp);
    used.insert("param".into(), param.name().into());
    used.insert("range".into(), range.into());
    let mut config = exp.config.clone();
    config.scheduler = exp.schedulers[0];
    config.record_load = false;
    for &v in &values {
        param
            .apply(&config, v)
            .and_then(|c| c.check())
            .map_err(|e| CliError::Input(e.to_string()))?;
    }

    let metrics: Vec<RunMetrics> = overrides
        .pool()?
        .install(|| {
            values
                .par_iter()
                .enumerate()
                .map(|(i, &v)| sweep_point(&config, param, v, i))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| CliError::Run(e.to_string()))?;
    let rows = SweepRow::table(&values, &metrics);

    make_dir(&exp.out_dir)?;
    let name = format!("sweep_{}.csv", param.name());
    write_sweep_csv(create(&exp.out_dir, &name)?, param, &rows).map_err(csv_err(&name))?;
    let mut manifest = Manifest::new("sweep", &exp.name, config.seed, &exp.inputs, used);
    manifest.schedulers.push(config.scheduler.name().into());
    manifest.outputs.push(name.clone());
    write_manifest(&exp.out_dir, &manifest)?;

    println!("{:>10} {:>14} {:>12} {:>12}", param.name(), "service_time_s", "normalized", "pf_analytic");
    for r in &rows {
        println!(
            "{:>10} {:>14} {:>12} {:>12.6}",
            r.value,
            fmt_opt(r.avg_service_time_s),
            fmt_opt(r.normalized_service_time),
            r.avg_pf_analytical
        );
    }
    println!("wrote {}", exp.out_dir.join(name).display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    elapsed_s: f64,
    availability: f64,
}

pub fn read_trace(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    reader
        .deserialize::<TraceRow>()
        .map(|r| r.map(|r| (r.elapsed_s, r.availability)).map_err(|e| bad(e.to_string())))
        .collect()
}

pub fn cmd_fit_lambda(trace: &Path, fragment: Option<(&Path, &str)>) -> Result<(), CliError> {
    let rows = read_trace(trace)?;
    let fit = fit_lambda(&rows).map_err(|e| CliError::Input(format!("{}: {e}", trace.display())))?;
    println!("lambda = {:e}", fit.lambda);
    println!("rms_log_error = {:e}", fit.rms_log_error);
    if let Some((path, class)) = fragment {
        let text = format!("# fitted from {}\n[fitted]\n{class} = {:e}\n", trace.display(), fit.lambda);
        std::fs::write(path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_validate(experiment: &Path) -> Result<(), CliError> {
    let exp = Experiment::load(experiment)?;
    let c = &exp.config;
    let names: Vec<_> = exp.schedulers.iter().map(|s| s.name()).collect();
    let apps: Vec<_> = c
        .workload
        .iter()
        .map(|w| format!("{} ({} tasks, weight {})", w.dag.dag().name, w.dag.dag().len(), w.weight))
        .collect();
    println!("{}: ok", experiment.display());
    println!("  devices     {} (scenario {})", c.profiles.len(), c.scenario);
    println!("  schedulers  {}", names.join(", "));
    println!("  workload    {}", apps.join(", "));
    println!(
        "  cycles      {} x {} instances, {} s each",
        c.n_cycles, c.instances_per_cycle, c.cycle_length_s
    );
    Ok(())
}

pub fn cmd_export_dag(kind: &str, fanout: u32, out: Option<&Path>) -> Result<(), CliError> {
    let kind: WorkloadKind = kind.parse().map_err(|e: ibdash::workloads::WorkloadError| CliError::Input(e.to_string()))?;
    let dag = build(&WorkloadSpec::new(kind, fanout)).map_err(|e| CliError::Input(e.to_string()))?;
    let text = dag.to_toml_string();
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
