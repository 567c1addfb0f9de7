use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ibdash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibdash"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn small_experiment(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        format!(
            r#"name = "small"
seed = 4
schedulers = ["ibdash", "random", "round_robin", "lavea_sqlf", "petrel", "lats"]

[sim]
n_cycles = 2
instances_per_cycle = 15

[fleet]
scenario = "ped"

[[workload]]
kind = "video_analytics"
{extra}
"#
        ),
    )
    .unwrap();
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_summary_row_per_scheduler() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    let out = tmp.path().join("out");
    let o = ibdash(&["run", exp.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<_> = summary.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].starts_with("schema_version,scheduler,scenario,"));
    assert!(lines[0].contains("avg_service_time_s,avg_pf_empirical,avg_pf_analytical"));
    for s in ["ibdash", "random", "round_robin", "lavea_sqlf", "petrel", "lats"] {
        assert!(out.join(format!("instances_{s}.csv")).exists());
        assert!(out.join(format!("load_{s}.csv")).exists());
        assert!(stdout(&o).contains(s));
    }
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"config_sha256\""));
    assert!(manifest.contains("\"seed\": 4"));
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = ibdash(&["run", exp.to_str().unwrap(), "--seed", "7", "--out-dir", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));
    let c = tmp.path().join("c");
    let o = ibdash(&["run", exp.to_str().unwrap(), "--seed", "8", "--out-dir", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(
        fs::read(a.join("instances_random.csv")).unwrap(),
        fs::read(c.join("instances_random.csv")).unwrap()
    );
}

#[test]
fn scheduler_flag_narrows_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    let out = tmp.path().join("out");
    let o = ibdash(&[
        "run",
        exp.to_str().unwrap(),
        "--scheduler",
        "petrel",
        "--jobs",
        "2",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.contains(",petrel,"));
}

#[test]
fn missing_profile_file_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    let text = fs::read_to_string(&exp)
        .unwrap()
        .replace("scenario = \"ped\"", "scenario = \"ped\"\nprofiles = \"no_such_profiles.toml\"");
    fs::write(&exp, text).unwrap();
    let o = ibdash(&["run", exp.to_str().unwrap(), "--out-dir", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_profiles.toml"), "{}", stderr(&o));
}

#[test]
fn missing_experiment_exits_2() {
    let o = ibdash(&["run", "/nonexistent/exp.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/exp.toml"));
}

#[test]
fn sweeps_have_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    let text = fs::read_to_string(&exp)
        .unwrap()
        .replace("n_cycles = 2\ninstances_per_cycle = 15", "n_cycles = 1\ninstances_per_cycle = 5");
    fs::write(&exp, text).unwrap();
    for (param, range, rows) in [("alpha", "0:1:0.01", 101), ("gamma", "0:8:1", 9)] {
        let out = tmp.path().join(param);
        let o = ibdash(&[
            "sweep",
            exp.to_str().unwrap(),
            "--param",
            param,
            "--range",
            range,
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = fs::read_to_string(out.join(format!("sweep_{param}.csv"))).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), rows + 1);
        assert!(lines[0].starts_with(&format!("{param},avg_service_time_s,normalized_service_time")));
    }
}

#[test]
fn bad_sweep_arguments_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = small_experiment(tmp.path(), "");
    for (param, range) in [("alpha", "1:0:0.1"), ("alpha", "x"), ("delta", "0:1:1"), ("gamma", "0:1:0.5")] {
        let o = ibdash(&["sweep", exp.to_str().unwrap(), "--param", param, "--range", range]);
        assert_eq!(o.status.code(), Some(2), "{param} {range}: {}", stderr(&o));
    }
}

#[test]
fn fit_lambda_on_bundled_trace() {
    let trace = repo().join("crates/core/data/traces/availability_synthetic.csv");
    let o = ibdash(&["fit-lambda", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lambda: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("lambda = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda - 1e-4).abs() / 1e-4 < 0.1, "{lambda}");
}

#[test]
fn fit_lambda_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = tmp.path().join("flat.csv");
    fs::write(&flat, "elapsed_s,availability\n10,1.0\n20,1.0\n30,1.0\n").unwrap();
    let frag = tmp.path().join("frag.toml");
    let o = ibdash(&[
        "fit-lambda",
        flat.to_str().unwrap(),
        "--write-fragment",
        frag.to_str().unwrap(),
        "--class",
        "ED2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("lambda = 0e0"));
    let fragment: toml::Value = toml::from_str(&fs::read_to_string(&frag).unwrap()).unwrap();
    assert_eq!(fragment["fitted"]["ED2"].as_float(), Some(0.0));

    let short = tmp.path().join("short.csv");
    fs::write(&short, "elapsed_s,availability\n10,0.9\n20,0.8\n").unwrap();
    assert_eq!(ibdash(&["fit-lambda", short.to_str().unwrap()]).status.code(), Some(2));

    let junk = tmp.path().join("junk.csv");
    fs::write(&junk, "elapsed_s,availability\n10,abc\n").unwrap();
    assert_eq!(ibdash(&["fit-lambda", junk.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bundled_experiments_validate() {
    let dir = repo().join("experiments");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = ibdash(&["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn exported_dags_match_bundled_files() {
    for kind in ["light_gbm", "map_reduce_sort", "video_analytics", "matrix_compute"] {
        let o = ibdash(&["export-dag", kind]);
        assert!(o.status.success());
        let bundled = fs::read_to_string(repo().join(format!("crates/core/data/workloads/{kind}.toml"))).unwrap();
        assert_eq!(stdout(&o), bundled);
    }
    assert_eq!(ibdash(&["export-dag", "bogus"]).status.code(), Some(2));
}
