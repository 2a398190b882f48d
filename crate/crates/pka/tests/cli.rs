use std::path::Path;
use std::process::Command;

use pka_tools::experiments::{rerun_manifest, RunManifest, Table};

fn pka() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pka"))
}

fn run_ok(args: &[&str], out: &Path) {
    let status = pka().args(args).arg("--out-dir").arg(out).output().unwrap();
    assert!(
        status.status.success(),
        "pka {args:?} failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn svgs(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count()
}

fn check_outputs(dir: &Path) -> (RunManifest, Table) {
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let t = Table::read_csv(&dir.join("results.csv")).unwrap();
    assert!(svgs(dir) > 0);
    assert!(!t.is_empty());
    (m, t)
}

#[test]
fn validate_writes_monotone_counts() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["validate", "--n-tensors", "5", "--thresholds", "0,0.9,0.99,0.999999"], dir.path());
    let (m, t) = check_outputs(dir.path());
    assert_eq!(m.experiment.name(), "validate");
    for alg in ["pka", "deflation", "cfastica", "jade"] {
        let counts: Vec<f64> = t.rows_where("algorithm", alg).into_iter().map(|r| t.get_f64(r, "successes")).collect();
        assert_eq!(counts.len(), 4);
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{alg}: {counts:?}");
        assert_eq!(counts[0], 15.0);
    }
}

#[test]
fn waves_with_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment":"waves","seeds":[0,1,2,3,4],"algorithms":["pka","jade"]}"#).unwrap();
    let out = dir.path().join("out");
    run_ok(&["waves", "--config", cfg.to_str().unwrap(), "--seeds", "0..3", "--export-signals"], &out);
    let (m, t) = check_outputs(&out);
    assert_eq!(m.config.seeds, Some(vec![0, 1, 2]));
    assert_eq!(t.len(), 6);
    assert!(t.rows_where("algorithm", "psa").is_empty());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment":"waves","sedes":[0]}"#).unwrap();
    let out = pka().args(["waves", "--config", cfg.to_str().unwrap()]).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audio_surrogates_and_radar_scene_export() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("audio");
    run_ok(&["audio", "--seeds", "0", "--algorithms", "pka,cfastica", "--duration", "1"], &a);
    check_outputs(&a);
    let r = dir.path().join("radar");
    run_ok(&["radar", "--kind", "isrj", "--values", "0.5,1", "--seeds", "0,1", "--export-scene"], &r);
    let (_, t) = check_outputs(&r);
    assert_eq!(t.len(), 2 * 2 * 5);
    assert!(std::fs::read_dir(&r).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with("_mixed.csv")));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (one, four) = (dir.path().join("t1"), dir.path().join("t4"));
    let args = ["radar", "--kind", "csi", "--seeds", "0..3", "--values", "0.5,1"];
    run_ok(&[&args[..], &["--threads", "1"]].concat(), &one);
    run_ok(&[&args[..], &["--threads", "4"]].concat(), &four);
    assert_eq!(std::fs::read(one.join("results.csv")).unwrap(), std::fs::read(four.join("results.csv")).unwrap());
}

#[test]
fn manifest_reruns_to_the_same_results() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["waves", "--seeds", "0,1", "--threads", "1"], dir.path());
    let (m, t) = check_outputs(dir.path());
    let again = rerun_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(again.results, t);
    assert_eq!(again.manifest.without_timings().rows, m.without_timings().rows);
    assert_eq!(again.manifest.without_timings().runs, m.without_timings().runs);
}
