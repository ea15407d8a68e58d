use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn iks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kinetic_with_zero_horizon_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    let o = iks(&["kinetic", "--out", path(&out), "--set", "time.t_end=0"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("t,mass,marginal_err,min_F,M0,M1,r,f_L2,f_H1,f0_L2,f1_L2,ImPf_mu,"));
    assert!(out.join("config.resolved.toml").exists());
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["schema_version"], 1);
}

#[test]
fn verify_reports_every_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = iks(&["verify", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["all_pass"], true);
    let ids = s["identities"].as_object().unwrap();
    assert!(ids.len() >= 10);
    for (name, v) in ids {
        assert!(v["measured"].is_number(), "{name}");
        assert!(v["tolerance"].is_number(), "{name}");
        assert_eq!(v["pass"], true, "{name}");
    }
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "mode = \"kinetic\"\n[params]\nmass = 2.0\n").unwrap();
    let o = iks(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(&tmp.path().join("a")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.mass"));

    let o = iks(&[
        "kinetic",
        "--set",
        "params.m=-1",
        "--out",
        path(&tmp.path().join("b")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.m"));

    // an empty file needs the mode from the command line
    std::fs::write(&cfg, "").unwrap();
    let o = iks(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(&tmp.path().join("c")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_one_and_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f");
    // far above the transport stability limit
    let o = iks(&[
        "kinetic",
        "--out",
        path(&out),
        "--set",
        "time.dt=0.5",
        "--set",
        "time.t_end=1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["status"], "failed");
    assert!(s["error"].is_string());
    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(text.starts_with("t,mass,"));
}

#[test]
fn diagnostics_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    for mode in ["particles", "kinetic"] {
        let mut files = Vec::new();
        for threads in ["1", "3"] {
            let out = tmp.path().join(format!("{mode}_{threads}"));
            let o = iks(&[
                mode,
                "--out",
                path(&out),
                "--threads",
                threads,
                "--seed",
                "7",
                "--set",
                "time.t_end=0.5",
                "--set",
                "particles.n=20000",
                "--set",
                "initial.profile=\"product\"",
            ]);
            assert_eq!(
                o.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&o.stderr)
            );
            files.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
        }
        assert_eq!(files[0], files[1], "{mode}");
    }
}

#[test]
fn particle_snapshots_follow_the_cadence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = iks(&[
        "particles",
        "--out",
        path(&out),
        "--set",
        "time.t_end=1",
        "--set",
        "particles.n=1000",
        "--set",
        "time.snapshot_every=0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "particles_000000.bin",
            "particles_000005.bin",
            "particles_000010.bin"
        ]
    );
    let ens =
        iks::output::read_particle_snapshot(&out.join("snapshots/particles_000010.bin")).unwrap();
    assert_eq!(ens.len(), 1000);
    assert!((ens.t - 1.0).abs() < 1e-12);
}

#[test]
fn decay_study_runs_each_sweep_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    let o = iks(&[
        "decay-study",
        "--out",
        path(&out),
        "--set",
        "grid.n_theta=8",
        "--set",
        "grid.n_omega=64",
        "--set",
        "time.t_end=3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = summary(&out);
    let runs = s["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for r in runs {
        if r["value"].as_f64().unwrap() >= 5.0 {
            assert!(r["rate"].as_f64().unwrap() > 0.0, "{r}");
        }
    }
    let table = std::fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn hydro_conserves_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h");
    let o = iks(&["hydro", "--out", path(&out), "--set", "time.t_end=2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["invariants"]["mass_conservation"]["pass"], true);
    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(text.lines().count(), 22);
}
