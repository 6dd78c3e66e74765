use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambda4wm"))
        .args(args)
        .env_remove("LAMBDA4WM_THREADS")
        .output()
        .unwrap()
}

fn run_job(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join(config);
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn chi_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("chi", "chi_light_shift.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("chi.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "delta,re_chi_pp,im_chi_pp,re_chi_cc,im_chi_cc,re_chi_pc,im_chi_pc,re_chi_cp,im_chi_cp"
    );
    assert_eq!(lines.clone().count(), 801);
    assert!(lines.all(|l| l.split(',').count() == 9));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["subcommand"], "chi");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["outputs"], serde_json::json!(["chi.csv"]));
    assert_eq!(m["resolved_params"]["omega_rabi_gamma"], 60.0);
    assert!(m["version"].is_string() && m["wall_clock_seconds"].is_number());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let small = ["--set", "second_axis.points=20", "--set", "delta_axis.points=40"];
    let one: Vec<&str> = small.iter().copied().chain(["--threads", "1"]).collect();
    let four: Vec<&str> = small.iter().copied().chain(["--threads", "4"]).collect();
    assert_eq!(run_job("gainmap", "gainmap_mismatch.json", a.path(), &one).status.code(), Some(0));
    assert_eq!(run_job("gainmap", "gainmap_mismatch.json", b.path(), &four).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("gainmap.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(json(&b.path().join("manifest.json"))["threads"], 4);
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("propagate_point.json");
    let o = Command::new(env!("CARGO_BIN_EXE_lambda4wm"))
        .args(["propagate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("LAMBDA4WM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("manifest.json"))["threads"], 3);
}

#[test]
fn overrides_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("propagate", "propagate_point.json", dir.path(), &["--set", "delta_gamma=-2.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["delta_gamma"], -2.5);
    let p = json(&dir.path().join("propagate.json"));
    assert_eq!(p["delta_gamma"], -2.5);
    assert!(p["g_p"].as_f64().unwrap() > 1.0);
}

#[test]
fn missing_config_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["chi", "--config", "/nonexistent/fig2.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/fig2.json"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["plot", "--config", "x.json", "--out", "y"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("chi", "chi_light_shift.json", dir.path(), &["--set", "omega_rabi_gamma=-5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omega_rabi"), "{}", stderr(&o));
    let o = run_job("chi", "chi_light_shift.json", dir.path(), &["--set", "delta_axes=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delta_axes"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run_job("chi", "chi_light_shift.json", &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("oracle", "oracle_point.json", dir.path(), &["--set", "oracle.max_steps=3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("residual"));
}

#[test]
fn oracle_agrees_with_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("oracle", "oracle_point.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&dir.path().join("oracle.json"));
    assert!(r["max_relative_difference"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["probe_seeded_steady_state"]["sigma_rows_re_im"].as_array().unwrap().len(), 4);
}

#[test]
fn doppler_gain_has_both_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_job("doppler-gain", "doppler_gain.json", dir.path(), &["--set", "delta_axis.points=36"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("doppler_gain.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "delta_gamma,g_p,g_c,g_p_doppler,g_c_doppler");
    assert_eq!(csv.lines().count(), 37);
    let differs = csv.lines().skip(1).any(|l| {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        (v[1] - v[3]).abs() > 1e-3 * v[1]
    });
    assert!(differs);
}

#[test]
fn gainmap_then_fit_recovers_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run_job("gainmap", "gainmap_fit_window.json", &data, &[]).status.code(), Some(0));
    let csv = data.join("gainmap.csv");
    let set = format!("data={}", csv.display());
    let out = dir.path().join("fit");
    let o = run_job("fit", "fit_gains.json", &out, &["--set", &set]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&out.join("fit.json"));
    assert_eq!(r["status"], "converged");
    let p = &r["params_out"];
    for (key, truth) in [("omega_rabi", 60.0), ("density", 2.8e18), ("gamma_c", 0.2), ("epsilon_pump", 6.5e-6)] {
        let got = p[key].as_f64().unwrap();
        assert!(((got - truth) / truth).abs() < 1e-3, "{key}: {got}");
    }
    let history: Vec<f64> = serde_json::from_value(r["objective_history"].clone()).unwrap();
    assert!(history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fit_reports_bad_data_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "delta_gamma,theta_deg,g_p,g_c\n-1,0.2,1.5,1.2\n-1,0.2,0,1\n").unwrap();
    let set = format!("data={}", csv.display());
    let o = run_job("fit", "fit_gains.json", &dir.path().join("out"), &["--set", &set]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}
