use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn grainflow() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grainflow"));
    cmd.env("GRAINFLOW_LOG", "error");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path) -> i32 {
    grainflow()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn failed_checks(s: &Value) -> Vec<String> {
    s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

const SMALL: &str = r#"{
    "name": "small",
    "sigma": {"kind": "quadratic_convex", "base": 1.0, "curvature": 1.0},
    "initial_u": {"kind": "fourier_modes", "modes": [{"k": 1, "amplitude": 0.1}, {"k": 2, "amplitude": 0.03}]},
    "alpha0": 0.1,
    "flow": {"n": 32, "dt": 5e-5, "t_end": 4.0},
    "tasks": ["simulate", "dissipation", "ls_fit", "stability", "length", "inequality_suite"],
    "dissipation_tolerance": 1e-3,
    "seed": 3
}"#;

#[test]
fn config_errors_exit_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("malformed", "{ not json"),
        (
            "cfl",
            r#"{"sigma": {"kind": "constant", "value": 1.0}, "initial_u": {"kind": "zero"},
                "alpha0": 0.0, "flow": {"dt": 1.0}, "tasks": ["simulate"]}"#,
        ),
        (
            "floor",
            r#"{"sigma": {"kind": "trig_periodic", "base": 0.0, "amplitude": 0.5, "frequency": 2.0},
                "initial_u": {"kind": "zero"}, "alpha0": 0.0, "tasks": ["simulate"]}"#,
        ),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        assert_eq!(run(&cfg, &tmp.path().join(name)), 3, "{name}");
        assert!(!tmp.path().join(name).join("summary.json").exists());
    }
    assert_eq!(run(&tmp.path().join("absent.json"), tmp.path()), 3);
}

#[test]
fn equilibrium_start_keeps_energy_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "eq",
        r#"{"sigma": {"kind": "trig_periodic", "base": 1.0, "amplitude": 0.5, "frequency": 2.0},
            "initial_u": {"kind": "zero"}, "alpha0": 0.0,
            "flow": {"n": 32, "t_end": 0.5}, "tasks": ["simulate"]}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(run(&cfg, &out), 0);
    let mut rdr = csv::Reader::from_path(out.join("trajectory.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header.join(","),
        "t,energy,diss_lhs,diss_rhs,mean_u,sup_v,sup_ux_sq,length,sup_curvature,grad_x,grad_y"
    );
    let energies: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert!(energies.len() > 2);
    assert!(energies.iter().all(|e| *e == 1.0), "{energies:?}");
    assert!(out.join("snapshots.json").exists());
}

#[test]
fn large_coarse_data_never_fails_silently() {
    // at N = 16 the run may finish, blow up, or break a checked bound; each
    // outcome must be visible in the exit code and the summary
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "steep",
        r#"{"sigma": {"kind": "trig_periodic", "base": 1.0, "amplitude": 0.5, "frequency": 2.0},
            "initial_u": {"kind": "sine", "amplitude": 5.0, "frequency": 1},
            "alpha0": 0.3, "flow": {"n": 16, "t_end": 0.2}, "tasks": ["simulate"]}"#,
    );
    let out = tmp.path().join("out");
    let code = run(&cfg, &out);
    let s = summary(&out);
    match code {
        0 => assert_eq!(s["passed"], true),
        1 => assert!(!failed_checks(&s).is_empty()),
        2 => {
            assert!(s["blow_up_at"].is_number());
            assert!(out.join("trajectory.csv").exists());
        }
        other => panic!("exit {other}: {:?}", failed_checks(&s)),
    }
    assert_eq!(s["exit_code"], code);
}

#[test]
fn small_scenario_runs_every_task() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL);
    let out = tmp.path().join("out");
    let code = run(&cfg, &out);
    let s = summary(&out);
    assert_eq!(code, 0, "{:?}", failed_checks(&s));
    let mut files: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        [
            "inequalities.json",
            "ls_fit.json",
            "ls_samples.csv",
            "snapshots.json",
            "summary.json",
            "trajectory.csv"
        ]
    );
    for task in ["simulate", "dissipation", "ls_fit", "stability", "length"] {
        assert!(s["reports"][task].is_object(), "missing report {task}");
    }
    // every check names the invariant it asserts
    for c in s["checks"].as_array().unwrap() {
        assert!(!c["invariant"].as_str().unwrap().is_empty());
    }
}

#[test]
fn artifacts_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&cfg, &a), run(&cfg, &b));
    for file in [
        "trajectory.csv",
        "snapshots.json",
        "ls_samples.csv",
        "ls_fit.json",
        "inequalities.json",
        "summary.json",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn seed_override_changes_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "ls",
        r#"{"sigma": {"kind": "trig_periodic", "base": 1.0, "amplitude": 0.5, "frequency": 2.0},
            "initial_u": {"kind": "zero"}, "alpha0": 0.3, "flow": {"n": 32},
            "tasks": ["ls_fit"]}"#,
    );
    let fit = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let status = grainflow()
            .args(["ls-fit", cfg.to_str().unwrap(), "--seed", seed, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        assert!(out.join("ls_samples.csv").exists());
        assert!(!out.join("trajectory.csv").exists());
        fs::read(out.join("ls_samples.csv")).unwrap()
    };
    assert_eq!(fit("1", "a"), fit("1", "b"));
    assert_ne!(fit("1", "c"), fit("2", "d"));
}

#[test]
fn parallel_sweeps_isolate_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(
        tmp.path(),
        "good",
        r#"{"name": "good", "sigma": {"kind": "constant", "value": 1.0},
            "initial_u": {"kind": "sine", "amplitude": 0.05, "frequency": 2},
            "alpha0": 0.0, "flow": {"n": 16, "t_end": 0.1}, "tasks": ["simulate"]}"#,
    );
    let bad = write_config(tmp.path(), "bad", r#"{"sigma": {"kind": "cubic"}}"#);
    let out = tmp.path().join("out");
    let status = grainflow()
        .arg("run")
        .arg(&good)
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .args(["--parallel-sweeps", "2"])
        .status()
        .unwrap();
    // the worst status wins, the valid scenario still completes
    assert_eq!(status.code(), Some(3));
    assert_eq!(summary(&out.join("good"))["passed"], true);
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["standard", "minimal", "quadratic"] {
        let cfg = grainflow_cli::parse_config(&dir.join(format!("{name}.json"))).unwrap();
        assert!(!cfg.tasks.is_empty(), "{name}");
    }
    let standard = grainflow_cli::parse_config(&dir.join("standard.json")).unwrap();
    assert_eq!(
        (standard.flow.n, standard.flow.dt, standard.flow.t_end),
        (256, 1e-5, 5.0)
    );
    assert_eq!(standard.tasks.len(), 6);
}
