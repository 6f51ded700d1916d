use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use berger_cli::run::series_columns;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_berger-flow");

fn berger(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("BERGER_FLOW_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn product(f0: f64, n: usize) -> String {
    format!(
        "initial.kind = product\ninitial.f0 = {f0}\ninitial.g0 = 1\ninitial.h0 = 1\ngrid.n_points = {n}\nsolver.snapshot_stride = 10\n"
    )
}

fn run(config: &Path, out: &Path) -> Output {
    berger(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn round_product_is_a_global_singularity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "round.cfg", &product(1.0, 64));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&out);
    assert!((s["t_hat"].as_f64().unwrap() - 0.25).abs() < 1e-4);
    assert_eq!(s["singularity_locality"], "global");
    assert_eq!(s["stop_reason"], "resolution_limit");

    let schema: Value =
        serde_json::from_str(include_str!("../schema/summary.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&s));

    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let header: Vec<String> = series.lines().next().unwrap().split(',').map(str::to_string).collect();
    assert_eq!(header, series_columns());
    assert!(series.lines().skip(1).all(|l| l.split(',').count() == header.len()));
}

#[test]
fn ordering_violation_is_a_validation_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", &product(1.5, 64));
    let o = run(&cfg, &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ordering f <= g <= h"), "{}", stderr(&o));
    assert!(!tmp.path().join("out/summary.json").exists());
}

#[test]
fn malformed_configs_exit_one_with_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{}solver.cfl_safety = fast\n", product(0.5, 64));
    let cfg = write_config(tmp.path(), "c.cfg", &text);
    let o = run(&cfg, &tmp.path().join("out"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let o = run(&tmp.path().join("missing.cfg"), &tmp.path().join("out"));
    assert_eq!(code(&o), 1);
    let o = berger(&["run"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn step_budget_exhaustion_is_a_halt() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{}solver.max_steps = 5\n", product(0.5, 64));
    let cfg = write_config(tmp.path(), "c.cfg", &text);
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(summary(&out)["stop_reason"], "max_steps");
    assert_eq!(summary(&out)["singularity_locality"], "none");
}

#[test]
fn seeded_noise_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let text = |seed: u64| {
        format!(
            "{}solver.t_max = 0.01\nperturb.0.kind = noise\nperturb.0.target = f\nperturb.0.amplitude = 1e-3\nrng.seed = {seed}\n",
            product(0.5, 64)
        )
    };
    let a = write_config(tmp.path(), "a.cfg", &text(7));
    let b = write_config(tmp.path(), "b.cfg", &text(8));
    for (cfg, dir) in [(&a, "a1"), (&a, "a2"), (&b, "b")] {
        assert_eq!(code(&run(cfg, &tmp.path().join(dir))), 0);
    }
    let read = |d: &str| fs::read(tmp.path().join(d).join("series.csv")).unwrap();
    assert_eq!(read("a1"), read("a2"));
    assert_ne!(read("a1"), read("b"));
}

#[test]
fn single_point_sweep_matches_run_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let base = product(0.6, 64);
    let cfg = write_config(tmp.path(), "run.cfg", &base);
    let run_dir = tmp.path().join("run");
    assert_eq!(code(&run(&cfg, &run_dir)), 0);

    let sweep_text = base.replace("initial.f0 = 0.6\n", "sweep.initial.f0 = 0.6\n");
    let sweep_cfg = write_config(tmp.path(), "sweep.cfg", &sweep_text);
    let sweep_dir = tmp.path().join("sweep");
    let args = ["sweep", "--config", sweep_cfg.to_str().unwrap(), "--out", sweep_dir.to_str().unwrap(), "--workers", "1"];
    let o = berger(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let point = sweep_dir.join("point_0000");
    for f in ["series.csv", "frames.csv", "summary.json"] {
        assert_eq!(fs::read(run_dir.join(f)).unwrap(), fs::read(point.join(f)).unwrap(), "{f}");
    }

    let manifest = fs::read_to_string(sweep_dir.join("manifest.csv")).unwrap();
    let stamp = fs::metadata(point.join("summary.json")).unwrap().modified().unwrap();
    assert_eq!(code(&berger(&args)), 0);
    assert_eq!(fs::metadata(point.join("summary.json")).unwrap().modified().unwrap(), stamp);
    let again = fs::read_to_string(sweep_dir.join("manifest.csv")).unwrap();
    assert_eq!(again, manifest.replace(",done,", ",resumed,"));
    assert_eq!(code(&berger(&args)), 0);
    assert_eq!(fs::read_to_string(sweep_dir.join("manifest.csv")).unwrap(), again);

    let o = berger(&["report", "--out", sweep_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(sweep_dir.join("plot_sweep.csv").exists());
    let o = berger(&["report", "--out", run_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("T_hat"));
    assert!(run_dir.join("plot_type_i.csv").exists());
}

#[test]
fn sweep_records_partial_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let text = product(0.5, 64).replace("initial.f0 = 0.5\n", "sweep.initial.f0 = 0.5, 1.5\n");
    let cfg = write_config(tmp.path(), "s.cfg", &text);
    let out = tmp.path().join("s");
    let o = berger(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert!(manifest.contains("point_0000,done,0,0.5"));
    assert!(manifest.contains("point_0001,failed,2,1.5"));

    let all_bad = text.replace("0.5, 1.5", "1.5, 2.5");
    let cfg = write_config(tmp.path(), "t.cfg", &all_bad);
    let o = berger(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("t").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn oracle_check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let check = |name: &str, text: &str, extra: &[&str]| {
        let cfg = write_config(tmp.path(), name, text);
        let mut args = vec!["oracle-check", "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        berger(&args)
    };
    let o = check("round.cfg", &product(1.0, 64), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = check("berger.cfg", &product(0.5, 512), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let o = check("berger.cfg", &product(0.5, 512), &["--corrupt-formula"]);
    assert_ne!(code(&o), 0);

    let neck = "initial.kind = neck_bump\ninitial.alpha = 0.01\ninitial.beta = 0.05\ninitial.eta = 0.9\ninitial.lambda = 4\ninitial.delta = 0.2\ngrid.n_points = 512\n";
    let o = check("neck.cfg", neck, &[]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

/// Resolution is scaled with the circle length so the neck floor is equal
/// across points.
#[test]
fn lambda_sweep_locality_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "initial.kind = neck_bump\ninitial.alpha = 0.01\ninitial.beta = 0.05\ninitial.eta = 0.9\ninitial.delta = 0.2\n\
solver.snapshot_stride = 50\ndiagnostics.stride = 1000\n\
sweep.initial.lambda+grid.n_points = 1:512, 2:1024, 4:2048, 8:4096\n";
    let cfg = write_config(tmp.path(), "lam.cfg", text);
    let out = tmp.path().join("lam");
    let o = berger(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    let rank = |l: &str| match l {
        "global" => 0,
        "local" => 1,
        other => panic!("unexpected locality {other}"),
    };
    let ranks: Vec<i32> = manifest
        .lines()
        .skip(1)
        .map(|l| rank(l.split(',').nth(7).unwrap()))
        .collect();
    assert_eq!(ranks.len(), 4);
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{manifest}");
    assert_eq!(*ranks.last().unwrap(), 1, "{manifest}");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["round.cfg", "neckpinch.cfg"] {
        berger_cli::RunConfig::read(&dir.join(name)).unwrap();
    }
    let raw = berger_cli::config::RawConfig::read(&dir.join("lambda_sweep.cfg")).unwrap();
    assert_eq!(berger_cli::sweep::expand(&raw).unwrap().len(), 4);
}
