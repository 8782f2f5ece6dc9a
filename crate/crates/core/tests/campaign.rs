//! Whole campaigns on small configurations.

use std::fs;
use std::path::Path;

use flybench_core::campaign::{emit_report, recompute_metrics, run_campaign, summarize, CampaignConfig, CampaignError, Progress, Store};
use flybench_core::sim::Outcome;

fn config(dir: &Path, algorithms: &[&str], workers: usize) -> CampaignConfig {
    let algs: String = algorithms.iter().map(|a| format!("[[algorithms]]\nname = \"{a}\"\nbuiltin = \"{a}\"\n")).collect();
    let text = format!(
        r#"
name = "small"
master_seed = 42
maps = 2
trials_per_map = 2
workers = {workers}
output_dir = "{}"

[map]
width = 60
height = 60
r_sampling = "stratified"

[camera]
width = 48
height = 36

[trial]
d_lo = 15
d_hi = 25
max_time = 40

{algs}"#,
        dir.display()
    );
    CampaignConfig::from_toml(&text).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn same_seed_gives_identical_documents() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_campaign(&config(a.path(), &["straight-line"], 1), &Progress::default()).unwrap();
    let rb = run_campaign(&config(b.path(), &["straight-line"], 1), &Progress::default()).unwrap();
    assert_eq!(ra.executed, 4);
    assert_eq!(ra.summary.algorithms[0].trials, 4);
    for f in ["summary.json", "metrics.csv", "maps/map_000.json", "trials/straight-line/m001_t001.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    assert!(ra.summary.config_sha256.len() == 64);
}

#[test]
fn resume_completes_to_the_same_summary() {
    let full = tempfile::tempdir().unwrap();
    run_campaign(&config(full.path(), &["straight-line", "hover"], 1), &Progress::default()).unwrap();

    let part = tempfile::tempdir().unwrap();
    run_campaign(&config(part.path(), &["straight-line", "hover"], 1), &Progress::default()).unwrap();
    // Simulate a crash: drop some finished trials and every aggregate.
    let store = Store::new(part.path());
    for (alg, id) in [("straight-line", "m000_t001"), ("hover", "m001_t000"), ("hover", "m001_t001")] {
        fs::remove_file(store.record_path(alg, id)).unwrap();
    }
    fs::remove_file(store.trajectory_path("hover", "m001_t001")).unwrap();
    fs::remove_file(store.summary_path()).unwrap();
    fs::remove_file(part.path().join("metrics.csv")).unwrap();

    let progress = Progress::default();
    let resumed = run_campaign(&config(part.path(), &["straight-line", "hover"], 1), &progress).unwrap();
    assert_eq!(resumed.executed, 3);
    assert_eq!(progress.skipped.load(std::sync::atomic::Ordering::Relaxed), 5);
    assert_eq!(read(full.path(), "summary.json"), read(part.path(), "summary.json"));
    assert_eq!(read(full.path(), "metrics.csv"), read(part.path(), "metrics.csv"));
}

#[test]
fn worker_count_does_not_change_results() {
    let one = tempfile::tempdir().unwrap();
    let three = tempfile::tempdir().unwrap();
    run_campaign(&config(one.path(), &["straight-line", "reactive"], 1), &Progress::default()).unwrap();
    run_campaign(&config(three.path(), &["straight-line", "reactive"], 3), &Progress::default()).unwrap();
    assert_eq!(read(one.path(), "summary.json"), read(three.path(), "summary.json"));
    assert_eq!(read(one.path(), "metrics.csv"), read(three.path(), "metrics.csv"));
}

#[test]
fn recomputed_metrics_equal_live_values() {
    let dir = tempfile::tempdir().unwrap();
    let live = run_campaign(&config(dir.path(), &["straight-line", "reactive"], 1), &Progress::default()).unwrap();
    let again = recompute_metrics(dir.path()).unwrap();
    assert_eq!(again.checked, 8);
    assert!(again.mismatches.is_empty(), "{:?}", again.mismatches);
    assert_eq!(again.summary, live.summary);
    assert_eq!(summarize(dir.path()).unwrap(), live.summary);
}

#[test]
fn every_algorithm_flies_the_same_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&config(dir.path(), &["straight-line", "reactive", "hover"], 1), &Progress::default()).unwrap();
    let hashes: Vec<&str> = out.summary.algorithms.iter().map(|a| a.trial_list_sha256.as_str()).collect();
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
    // Hovering never finishes and never collides.
    let hover = &out.summary.algorithms[2];
    assert_eq!((hover.finished, hover.timeout, hover.sr), (0, 4, Some(0.0)));
    let summary_bins: usize = hover.bins.iter().map(|b| b.trials).sum();
    assert_eq!(summary_bins, hover.trials);
}

#[test]
fn self_contrast_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&config(dir.path(), &["straight-line", "reactive"], 1), &Progress::default()).unwrap();
    for c in &out.summary.contrast {
        if c.a == c.b {
            assert_eq!(c.cf, Some(1.0), "{} vs itself", c.a);
        }
    }
    let ab = out.summary.contrast.iter().find(|c| c.a == "straight-line" && c.b == "reactive").unwrap().cf.unwrap();
    let ba = out.summary.contrast.iter().find(|c| c.a == "reactive" && c.b == "straight-line").unwrap().cf.unwrap();
    assert!((ab * ba - 1.0).abs() < 1e-12);
}

#[test]
fn report_has_every_table_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    run_campaign(&config(dir.path(), &["straight-line", "reactive"], 1), &Progress::default()).unwrap();
    let first = emit_report(dir.path()).unwrap();
    let names: Vec<String> = first.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for n in ["sr_by_bin.csv", "missions.csv", "contrast_factor.csv", "sr_by_bin.svg", "missions_po.svg", "missions_mp.svg", "contrast_factor.svg", "trav_vs_rgs.svg"] {
        assert!(names.iter().any(|x| x == n), "missing {n}");
    }
    let snapshot: Vec<Vec<u8>> = first.files.iter().map(|p| fs::read(p).unwrap()).collect();
    let second = emit_report(dir.path()).unwrap();
    for (p, bytes) in second.files.iter().zip(&snapshot) {
        assert_eq!(&fs::read(p).unwrap(), bytes, "{} changed", p.display());
    }

    let sr = read(&first.dir, "sr_by_bin.csv");
    assert!(sr.starts_with("algorithm,bin,trav_lo_m,"));
    // Two maps give at most two bins per algorithm.
    assert_eq!(sr.lines().count(), 1 + 2 * 2);
    let cf = read(&first.dir, "contrast_factor.csv");
    assert_eq!(cf.lines().count(), 1 + 4);
    let missions = read(&first.dir, "missions.csv");
    let travs: Vec<f64> = missions.lines().skip(1).take(4).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(travs.windows(2).all(|w| w[0] <= w[1]), "missions not sorted by traversability: {travs:?}");
}

#[test]
fn different_config_in_used_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    run_campaign(&config(dir.path(), &["hover"], 1), &Progress::default()).unwrap();
    let other = CampaignConfig { master_seed: 43, ..config(dir.path(), &["hover"], 1) };
    assert!(matches!(run_campaign(&other, &Progress::default()), Err(CampaignError::Config(_))));
}

#[test]
fn trajectories_back_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&config(dir.path(), &["straight-line"], 1), &Progress::default()).unwrap();
    let store = Store::new(dir.path());
    for m in 0..2 {
        for doc in store.load_map(m).unwrap().trials {
            let rec = store.load_record("straight-line", &doc.id).unwrap();
            let traj = store.load_trajectory("straight-line", &doc.id).unwrap();
            assert!(!traj.is_empty());
            if rec.outcome == Outcome::Finished {
                assert!((traj.last().unwrap().position - rec.spec.goal).norm() <= 1.0 + 1e-6);
            }
        }
    }
    assert!(out.over_fault_threshold.is_empty());
}

#[test]
fn flown_paths_are_never_shorter_than_d_min() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), &["straight-line", "reactive"], 1);
    cfg.maps = 4;
    cfg.trials_per_map = 4;
    run_campaign(&cfg, &Progress::default()).unwrap();
    let store = Store::new(dir.path());
    let mut finished = 0;
    for alg in ["straight-line", "reactive"] {
        for m in 0..4 {
            for doc in store.load_map(m).unwrap().trials {
                let rec = store.load_record(alg, &doc.id).unwrap();
                if rec.outcome == Outcome::Finished {
                    let po = rec.metrics.po.unwrap();
                    assert!(po >= -1e-6, "{alg} {}: PO {po}", doc.id);
                    finished += 1;
                }
            }
        }
    }
    assert!(finished > 0);
}
