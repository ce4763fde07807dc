use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ductfan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ductfan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn simulate_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = ductfan(&[
        "simulate",
        scenario("single_70g.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("time,pos_n,pos_e,pos_d"));
    assert_eq!(trace.lines().count(), 1 + 2001);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["stable"], true);
    assert_eq!(summary["stages"].as_array().unwrap().len(), 2);
    assert_eq!(summary["attachments"][0]["attach_point"], 2);

    let analyzed = ductfan(&["analyze", dir.path().join("trace.csv").to_str().unwrap()]);
    assert!(analyzed.status.success());
    let a = json(&analyzed);
    assert_eq!(a["stages"], summary["stages"]);
}

#[test]
fn simulate_runs_several_files_into_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = ductfan(&[
        "simulate",
        scenario("hover.toml").to_str().unwrap(),
        scenario("roll_step.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for stem in ["hover", "roll_step"] {
        assert!(dir.path().join(stem).join("trace.csv").is_file());
        assert!(dir.path().join(stem).join("summary.json").is_file());
    }
}

#[test]
fn invalid_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[simulation]\nduration = -1.0\n").unwrap();
    let out = ductfan(&[
        "simulate",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration"));

    std::fs::write(&bad, "[simulation]\ndurration = 1.0\n").unwrap();
    let out = ductfan(&[
        "simulate",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn fault_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fault.toml");
    std::fs::write(
        &file,
        "[simulation]\nduration = 5.0\n[vehicle]\npitch_guard = 0.3\n[controller.pitch]\nkd = 2.0\n\
         [[events]]\ntime = 0.5\nset_attitude_deg = [0.0, 15.0, 0.0]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let out = ductfan(&[
        "simulate",
        file.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.lines().last().unwrap().contains("fault:singularity"));

    let analyzed = ductfan(&["analyze", out_dir.join("trace.csv").to_str().unwrap()]);
    assert_eq!(analyzed.status.code(), Some(2));
    assert_eq!(json(&analyzed)["fault"]["kind"], "singularity");
}

#[test]
fn bench_then_identify_recovers_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = ductfan(&["bench", "--out", csv.to_str().unwrap(), "--samples", "300"]);
    assert!(out.status.success());

    let out = ductfan(&["identify", "--bench", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    let rel = |got: &serde_json::Value, want: f64| ((got.as_f64().unwrap() - want) / want).abs();
    assert!(rel(&v["vane"]["c_m_delta"], 0.0014) < 1e-10);
    assert!(rel(&v["propeller"]["c_tz1"], 2e-6) < 1e-10);
    assert!(rel(&v["propeller"]["c_mz2"], -4e-8) < 1e-10);
}

#[test]
fn identify_rejects_bad_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "t,w1\n0,1\n").unwrap();
    assert!(!ductfan(&["identify", "--bench", csv.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn statics_reports_trim_and_limit() {
    let out = ductfan(&["statics", scenario("attachment_70g.toml").to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["verdict"]["outcome"], "vertical_slip");
    assert!((v["trim"]["deflection"].as_f64().unwrap() - 85.8).abs() < 0.1);
    assert_eq!(v["trim"]["over_budget"], false);
    assert!((v["max_unilateral_load"].as_f64().unwrap() * 1000.0 - 70.1).abs() < 0.1);
}

#[test]
fn statics_rejects_invalid_attachment() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("a.toml");
    std::fs::write(
        &file,
        "[attachment]\nmass = 0.05\nattach_point = 0\nmagnet_force_a = 1.0\nmagnet_force_b = 1.0\n\
         friction_coeff = 0.4\ncontact_span = 0.0\ngravity_arm = 0.015\naxis_offset = 0.13\n\
         body_position = [0.145, 0.0, 0.05]\n",
    )
    .unwrap();
    let out = ductfan(&["statics", file.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("contact_span"));
}
