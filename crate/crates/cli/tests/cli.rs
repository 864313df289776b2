use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arisim::{manifest_path, RunManifest};
use arisim_core::config::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_arisim");

fn arisim(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = arisim(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn table_headers_and_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [(&str, &str, usize); 6] = [
        ("sumrate-vs-elements", "M,sum_rate_mean,sum_rate_stderr", 8),
        (
            "rate-vs-power",
            "p_tx_dbm,rate_near1_mean,rate_near1_stderr,rate_near2_mean,rate_near2_stderr,rate_far_mean,rate_far_stderr,rate_far_noncomp_mean,rate_far_noncomp_stderr,sum_rate_mean,sum_rate_stderr",
            10,
        ),
        ("se-ee", "p_tx_dbm,se_ris,ee_ris,se_noris,ee_noris", 10),
        (
            "pa-sweep",
            "gamma_far,gamma_near,sum_rate_mean,sum_rate_stderr,rate_far_mean,rate_near1_mean,rate_near2_mean,feasible,best",
            10,
        ),
        (
            "split-search",
            "m1,m2,sum_rate_mean,sum_rate_stderr,rate_far_mean,rate_near1_mean,rate_near2_mean,feasible,best",
            71,
        ),
        ("outage-vs-power", "", 10),
    ];
    for (exp, expected_header, expected_rows) in cases {
        run_ok(&[exp, "--trials", "50"], d);
        let csv = d.join(format!("{exp}.csv"));
        if !expected_header.is_empty() {
            assert_eq!(header(&csv), expected_header, "{exp}");
        }
        assert_eq!(rows(&csv), expected_rows, "{exp}");
        let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(manifest_path(&csv)).unwrap()).unwrap();
        assert_eq!(manifest.experiment, exp);
        assert_eq!(manifest.rows, expected_rows);
        assert_eq!(manifest.trials, 50);
        assert_eq!(manifest.columns.join(","), header(&csv));
    }
    let outage = header(&d.join("outage-vs-power.csv"));
    let cols: Vec<&str> = outage.split(',').collect();
    assert_eq!(cols.len(), 1 + 2 * 4 * 3);
    assert_eq!(&cols[..4], ["p_tx_dbm", "near1_ris", "near1_ris_lo", "near1_ris_hi"]);
    assert!(cols.contains(&"far_noncomp_noris_hi"));

    // exactly one winner per search table
    for exp in ["pa-sweep", "split-search"] {
        let text = fs::read_to_string(d.join(format!("{exp}.csv"))).unwrap();
        assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 1, "{exp}");
    }
}

#[test]
fn same_seed_same_bytes_different_seed_differs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["rate-vs-power", "--trials", "200", "--seed", "9", "--out", "a.csv", "--workers", "1"], d);
    run_ok(&["rate-vs-power", "--trials", "200", "--seed", "9", "--out", "b.csv", "--workers", "3"], d);
    run_ok(&["rate-vs-power", "--trials", "200", "--seed", "10", "--out", "c.csv"], d);
    let read = |n: &str| fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    // manifests only differ in the output path
    let ma: RunManifest = serde_json::from_slice(&read("a.manifest.json")).unwrap();
    let mb: RunManifest = serde_json::from_slice(&read("b.manifest.json")).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.summary, mb.summary);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(arisim(&["no-such-command"], d).status.code(), Some(2));
    assert_eq!(arisim(&["se-ee", "--trials", "0"], d).status.code(), Some(2));
    assert_eq!(arisim(&["se-ee", "--workers", "0", "--trials", "5"], d).status.code(), Some(2));

    fs::write(d.join("bad.toml"), "[ris]\nelements = 4\nsplit = [3, 3]\n").unwrap();
    let out = arisim(&["sumrate-vs-elements", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ris.split"));

    fs::write(d.join("typo.toml"), "[plan]\ntrails = 10\n").unwrap();
    let out = arisim(&["sumrate-vs-elements", "--config", "typo.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    assert_eq!(arisim(&["se-ee", "--config", "missing.toml"], d).status.code(), Some(3));
    let out = arisim(&["se-ee", "--trials", "5", "--out", "no/such/dir/x.csv"], d);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(arisim(&["--help"], d).status.code(), Some(0));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.toml"),
        "[plan]\ntrials = 30\nseed = 4\nelement_counts = [0, 5, 10]\n\n[ris]\nelements = 10\n",
    )
    .unwrap();
    run_ok(&["sumrate-vs-elements", "--config", "exp.toml", "--seed", "5", "--out", "s.csv"], d);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("s.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.trials, 30);
    assert_eq!(m.seed, 5);
    assert_eq!(m.rows, 3);
    assert_eq!(m.config.plan.element_counts, vec![0, 5, 10]);
    assert_eq!(m.config_hash, m.config.hash());
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["se-ee", "--trials", "40", "--seed", "12", "--out", "first.csv"], d);
    // the manifest is itself a valid configuration
    let cfg = ExperimentConfig::load(&d.join("first.manifest.json")).unwrap();
    assert_eq!(cfg.plan.seed, 12);
    run_ok(&["se-ee", "--config", "first.manifest.json", "--out", "second.csv"], d);
    assert_eq!(fs::read(d.join("first.csv")).unwrap(), fs::read(d.join("second.csv")).unwrap());
}

#[test]
fn print_config_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_ok(&["print-config", "--seed", "77"], d);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg.plan.seed, 77);
    assert!(text.contains("bs_near = 3.2"));
}

#[test]
fn per_user_efficiency_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("m.toml"), "[metrics]\nper_user_efficiency = true\n").unwrap();
    run_ok(&["se-ee", "--config", "m.toml", "--trials", "20"], d);
    let h = header(&d.join("se-ee.csv"));
    assert_eq!(h.split(',').count(), 5 + 12);
    assert!(h.contains("ee_far_noris"));
}

#[test]
fn export_qps_writes_dataset_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("q.toml"), "[ris]\nelements = 10\n\n[feedback]\nrecords_per_user = 25\n").unwrap();
    run_ok(&["export-qps", "--config", "q.toml", "--out", "qps.csv"], d);
    let csv: PathBuf = d.join("qps.csv");
    // ceil(25 / 10) = 3 trials, 3 users, 10 elements
    assert_eq!(rows(&csv), 90);
    assert_eq!(header(&csv), "user,element,b0,b1,b2,b3,b4,b5,b6,b7,b8");
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("qps.json")).unwrap()).unwrap();
    assert_eq!(side["trials"], 3);
    assert_eq!(side["records"], 90);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("qps.manifest.json")).unwrap()).unwrap();
    assert_eq!(side["config_hash"], m.config_hash.as_str());

    run_ok(&["export-qps", "--config", "q.toml", "--trials", "1", "--out", "one.csv"], d);
    assert_eq!(rows(&d.join("one.csv")), 30);
}
