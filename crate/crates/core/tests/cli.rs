mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use mrps::cli::config::Method;
use mrps::cli::report::read_result_files;
use mrps::cli::run::{build_mrps, exact_reference, load_problem};
use mrps::cli::{run, RunConfig};
use mrps::simulator::expectation;

fn config(text: &str, out: &Path) -> RunConfig {
    let text = format!("{text}\noutput.dir = {}\n", out.display());
    RunConfig::from_text(&text, &common::fixture(""), Vec::new()).unwrap()
}

#[test]
fn exact_run_reports_the_oracle_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("method = exact\nintegrals = h2_sto3g_r0.7414.fcidump", dir.path());
    let out = run(&cfg).unwrap();
    assert!(out.converged);
    let rows = read_result_files(&[dir.path().join("summary.csv")]).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].energy - -1.137270174661).abs() < 1e-8);
    assert!(dir.path().join("run.log").is_file());
}

#[test]
fn zero_depth_adapt_equals_the_product_state_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "method = mrps-adapt\nintegrals = h4_rect_r2_1.40_localized.fcidump\nadapt.max_depth = 0\noptimizer.restarts = 3",
        dir.path(),
    );
    let out = run(&cfg).unwrap();
    let point = &out.points[0];
    assert!(point.ansatz.as_ref().unwrap().iterations.is_empty());
    let problem = load_problem(&cfg.integrals[0], None, None).unwrap();
    let (_, _, mrps) = build_mrps(&problem, &cfg).unwrap();
    assert_eq!(point.energy, expectation(&mrps, &problem.hamiltonian).unwrap());
    assert!(point.energy >= exact_reference(&problem, true).unwrap().energy);
    // stopped by the depth limit, so flagged as not converged
    assert!(!out.converged);
}

#[test]
fn runs_are_byte_reproducible() {
    let text = "method = scan\nscan.method = mrps-adapt\nintegrals = h4_rect_r2_1.00_localized.fcidump, h4_rect_r2_2.00_localized.fcidump\noptimizer.restarts = 4\noptimizer.seed = 11";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&config(text, a.path())).unwrap();
    run(&config(text, b.path())).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6, "{names:?}");
    for name in names.iter().filter(|n| n.to_str() != Some("run.log")) {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    let scan = fs::read_to_string(a.path().join("scan.csv")).unwrap();
    assert!(scan.starts_with("geometry_tag,E_method,E_exact,error,fidelity_HF,fidelity_MRPS,entropy,cumulative_cnots\n"));
    assert!(scan.lines().last().unwrap().starts_with("# npe = "));
}

#[test]
fn binary_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("h2.conf");
    fs::write(
        &conf,
        format!("method = exact\nintegrals = {}\n", common::fixture("h2_sto3g_r0.7414.fcidump").display()),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_mrps"))
        .args(["exact", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .args(["--jobs", "1", "--seed", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let report = Command::new(env!("CARGO_BIN_EXE_mrps"))
        .arg("report")
        .arg(out.join("summary.csv"))
        .arg(out.join("summary.csv"))
        .output()
        .unwrap();
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.starts_with("# Hartree to kcal/mol: 627.509474"), "{text}");
    assert!(text.contains("0.000"));

    fs::write(&conf, "method = exact\nintegrals = nowhere.fcidump\n").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_mrps")).args(["exact", "--config"]).arg(&conf).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("nowhere.fcidump"));
}

#[test]
fn env_overrides_reach_every_key() {
    let base = common::fixture("");
    let env = vec![
        ("MRPS_METHOD".to_string(), "hf-uccgsd".to_string()),
        ("MRPS_OPTIMIZER_RESTARTS".to_string(), "2".to_string()),
        ("MRPS_EMBED_OCC".to_string(), "env_occ".to_string()),
    ];
    let cfg = RunConfig::from_text("integrals = h2_sto3g_r0.7414.fcidump", &base, env).unwrap();
    assert_eq!(cfg.method, Method::HfUccgsd);
    assert_eq!(cfg.optimizer.restarts, 2);
    assert_eq!(cfg.embed.occupied, mrps::integrals::EmbedOccupied::EnvOcc);
}
