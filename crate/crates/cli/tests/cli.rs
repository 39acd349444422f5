use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use virlab_core::scenario::Scenario;

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn virlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_virlab")).args(args).output().expect("binary runs")
}

fn run_with(config: &Path, sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    virlab(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path, name: &str, sub: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(name).join(sub).join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_scenarios_parse() {
    let mut seen = 0;
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            Scenario::from_toml_str(&fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn deterministic_reports_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("flat_free.toml");
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = run_with(&cfg, "audit-virial", &out, &["--deterministic", "--grid-override", "33"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let dir = out.join("flat_free/audit-virial");
        bytes.push((fs::read(dir.join("report.json")).unwrap(), fs::read(dir.join("terms.csv")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn timings_only_without_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("flat_free.toml");
    run_with(&cfg, "certificate", tmp.path(), &[]);
    assert!(report(tmp.path(), "flat_free", "certificate")["elapsed_seconds"].is_number());
    run_with(&cfg, "certificate", tmp.path(), &["--deterministic"]);
    assert!(report(tmp.path(), "flat_free", "certificate").get("elapsed_seconds").is_none());
}

#[test]
fn report_embeds_resolved_config_and_version() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("flat_free.toml");
    let o = run_with(&cfg, "norms", tmp.path(), &["--deterministic", "--grid-override", "25", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(tmp.path(), "flat_free", "norms");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["scenario"]["grid"]["points"], 25);
    assert_eq!(r["scenario"]["tolerances"]["tail_guard"], 1e-8);
    let echoed: Scenario = serde_json::from_value(r["scenario"].clone()).unwrap();
    assert_eq!(echoed.grid.refinement, vec![25]);
    assert!(tmp.path().join("flat_free/norms/norms.csv").exists());
}

/// Second-order lattice error, so the two finest grids extrapolate to the
/// continuum value `Θ̈ = 6` of a unit Gaussian under `|x|²/2`.
#[test]
fn flat_free_virial_total_extrapolates_to_six() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("flat_free.toml");
    let mut totals = Vec::new();
    let mut spacings = Vec::new();
    for n in ["49", "65"] {
        let o = run_with(&cfg, "audit-virial", tmp.path(), &["--deterministic", "--grid-override", n]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let r = report(tmp.path(), "flat_free", "audit-virial");
        let t = &r["result"]["terms"];
        let (comm, expanded) = (t["commutator"][0].as_f64().unwrap(), t["expanded"][0].as_f64().unwrap());
        assert!((expanded - comm).abs() < 1e-8 * comm.abs());
        assert!((comm - 6.0).abs() < 0.2, "N = {n}: {comm}");
        totals.push(comm);
        spacings.push(r["result"]["spacings"][0].as_f64().unwrap());
    }
    let r = (spacings[0] / spacings[1]).powi(2);
    let extrapolated = (r * totals[1] - totals[0]) / (r - 1.0);
    assert!((extrapolated - 6.0).abs() < 0.01 * 6.0, "{extrapolated}");
}

#[test]
fn radial_decay_passes_hypotheses() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "name = \"decay\"\n[grid]\nhalf_width = 10.0\npoints = 41\n\
         [coefficients]\nkind = \"radial_decay\"\nepsilon = 0.05\npower = 1.0\n",
    );
    let o = run_with(&cfg, "check-hypotheses", tmp.path(), &["--deterministic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(tmp.path(), "decay", "check-hypotheses");
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["tiers"].as_array().unwrap().len(), 4);
    assert!(fs::read_to_string(tmp.path().join("decay/check-hypotheses/tiers.csv")).unwrap().lines().count() == 5);
}

#[test]
fn constant_perturbation_fails_hypotheses_with_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "name = \"flat\"\n[grid]\nhalf_width = 10.0\npoints = 41\n\
         [coefficients]\nkind = \"constant\"\nepsilon = 0.05\n",
    );
    let o = run_with(&cfg, "check-hypotheses", tmp.path(), &["--deterministic"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(tmp.path(), "flat", "check-hypotheses")["result"]["decay_pass"], false);
}

#[test]
fn oversized_certificate_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "name = \"big\"\n[grid]\nhalf_width = 4.0\npoints = 17\n[norms]\ncertificate_sizes = [1.0, 1.0]\n",
    );
    let o = run_with(&cfg, "certificate", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(tmp.path(), "big", "certificate");
    assert_eq!(r["result"]["sizes_source"], "configured");
    assert_eq!(r["result"]["pass"], false);
}

#[test]
fn invalid_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "name = \"bad\"\n[grid]\nhalf_width = 4.0\npoints = 18\n");
    let o = run_with(&cfg, "simulate", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("grid.points"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), "name = \"bad\"\n[grid]\nhalf_width = 4.0\npoints = 17\nspacing = 1\n");
    let o = run_with(&cfg, "simulate", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("spacing"), "{}", stderr(&o));
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn bad_grid_override_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(&scenarios_dir().join("flat_free.toml"), "norms", tmp.path(), &["--grid-override", "20"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("grid.points"), "{}", stderr(&o));
}

#[test]
fn empty_config_prints_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let o = run_with(&cfg, "simulate", tmp.path(), &[]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));

    let o = virlab(&["simulate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--config"), "{}", stderr(&o));
}

#[test]
fn guard_violation_keeps_partial_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "name = \"wide\"\n[grid]\nhalf_width = 3.0\npoints = 17\n\
         [datum]\nwidth = 2.0\n[tolerances]\ntail_margin = 0.25\n[time]\ndt = 0.01\nt_final = 0.05\nsnapshot_every = 1\n",
    );
    let o = run_with(&cfg, "simulate", tmp.path(), &["--deterministic"]);
    assert_eq!(o.status.code(), Some(4));
    let r = report(tmp.path(), "wide", "simulate");
    assert!(r["guard_violation"].as_str().unwrap().contains("tail mass"));
    assert_eq!(r["result"]["steps"], 5);
    let csv = fs::read_to_string(tmp.path().join("wide/simulate/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

/// Richardson values against the free Gaussian: `Θ = 3/4 + 3t²`, `Θ̇ = 6t`, `‖∇u‖² = 3/2`.
#[test]
fn converge_extrapolates_to_free_gaussian() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "name = \"conv\"\n[grid]\nhalf_width = 6.0\npoints = 25\nrefinement = [25, 33, 49]\n\
         [time]\ndt_over_h = 0.1\nt_final = 0.1\n",
    );
    let o = run_with(&cfg, "converge", tmp.path(), &["--deterministic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let orders = &report(tmp.path(), "conv", "converge")["result"]["orders"];
    for (k, exact) in [("theta", 0.78), ("theta_dot", 0.6), ("h1", 1.5f64.sqrt())] {
        let p = orders[k]["observed_order"].as_f64().unwrap();
        let e = orders[k]["extrapolated"].as_f64().unwrap();
        assert!(p > 1.8 && p < 2.2, "{k}: order {p}");
        assert!((e - exact).abs() < 2e-3 * exact, "{k}: {e} vs {exact}");
    }
    assert!(tmp.path().join("conv/converge/orders.csv").exists());
}
