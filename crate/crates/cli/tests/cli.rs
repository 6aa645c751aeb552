use std::path::Path;
use std::process::{Command, Output};

use perclab_cli::ExperimentConfig;

fn perclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perclab"))
        .args(args)
        .env_remove("PERCLAB_THREADS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').collect()
}

#[test]
fn estimate_row_has_interval() {
    let out = perclab(&[
        "estimate",
        "--graph",
        "zd",
        "--dim",
        "2",
        "--radius",
        "16",
        "--n",
        "16",
        "--p",
        "0.45",
        "--samples",
        "20000",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(fields(lines[0]).len(), 16);
    let row = fields(lines[1]);
    assert_eq!(row.len(), 16);
    let (value, lo, hi): (f64, f64, f64) = (
        row[9].parse().unwrap(),
        row[11].parse().unwrap(),
        row[12].parse().unwrap(),
    );
    assert!(lo <= value && value <= hi);
    assert_eq!(row[13], "20000");
}

#[test]
fn thm_quant_line_example() {
    let out = perclab(&[
        "verify",
        "--check",
        "thm-quant",
        "--graph",
        "zd",
        "--dim",
        "1",
        "--radius",
        "12",
        "--n",
        "6",
        "--m",
        "3",
        "--p",
        "0.3",
        "--mode",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let row = fields(text.lines().nth(1).unwrap());
    let lhs: f64 = row[9].parse().unwrap();
    let rhs: f64 = row[10].parse().unwrap();
    assert!((lhs - 5.5e-9).abs() < 1e-10 && (rhs - 1.0e-3).abs() < 5e-5);
    assert_eq!(row[15], "pass");
}

#[test]
fn couple_exact_tree_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = perclab(&[
        "couple", "--graph", "zd", "--dim", "1", "--radius", "2", "--n", "1", "--m", "1", "--p",
        "0.5", "--mode", "exact", "--out", out_dir,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let leaves = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("leaf"))
        .count();
    assert_eq!(leaves, 16);
    let total: f64 = text
        .lines()
        .last()
        .unwrap()
        .trim_start_matches("# total ")
        .parse()
        .unwrap();
    assert!((total - 1.0).abs() <= 1e-10);
    for name in ["results.csv", "results.json", "manifest.json", "tree.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn couple_monte_carlo_transcript() {
    let out = perclab(&[
        "couple",
        "--dim",
        "2",
        "--radius",
        "2",
        "--n",
        "1",
        "--m",
        "1",
        "--p",
        "0.5",
        "--mode",
        "mc",
        "--samples",
        "2000",
        "--transcript",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("# transcript seed=1 index=3 edges=16"));
    assert_eq!(text.lines().count(), 2 + 16);
}

#[test]
fn scans() {
    let out = perclab(&[
        "scan",
        "--dim",
        "2",
        "--radius",
        "4",
        "--n",
        "4",
        "--p-grid",
        "0.1:0.9:0.1",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1 + 9);
    let out = perclab(&[
        "scan",
        "--dim",
        "2",
        "--radius",
        "32",
        "--n-grid",
        "4,8,16,32",
        "--p",
        "0.35",
        "--samples",
        "20000",
    ]);
    let text = stdout(&out);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| fields(l)[9].parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(
        perclab(&["scan", "--p-grid", "0.1,0.2", "--n", "2", "--samples", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        perclab(&["scan", "--p-grid", "", "--n", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(perclab(&["scan", "--n", "2"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let fail = perclab(&[
        "verify",
        "--check",
        "summability",
        "--dim",
        "1",
        "--radius",
        "10",
        "--n",
        "10",
        "--p",
        "0.5",
        "--floor",
        "0.1",
    ]);
    assert_eq!(fail.status.code(), Some(2));
    let unsure = [
        "verify",
        "--check",
        "cor-homog",
        "--dim",
        "1",
        "--radius",
        "2",
        "--n",
        "1",
        "--m",
        "1",
        "--p",
        "0.5",
        "--mode",
        "mc",
        "--samples",
        "50",
    ];
    assert_eq!(perclab(&unsure).status.code(), Some(3));
    let mut relaxed = unsure.to_vec();
    relaxed.extend(["--inconclusive-exit", "0"]);
    assert_eq!(perclab(&relaxed).status.code(), Some(0));
    assert_eq!(perclab(&["estimate", "--bogus"]).status.code(), Some(1));
    assert_eq!(perclab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(perclab(&["--help"]).status.code(), Some(0));
    assert_eq!(
        perclab(&["estimate", "--n", "2", "--p", "0.5", "--threads", "0"])
            .status
            .code(),
        Some(1)
    );
    let cap = perclab(&[
        "verify",
        "--check",
        "cor-homog",
        "--dim",
        "2",
        "--radius",
        "3",
        "--n",
        "2",
        "--m",
        "1",
        "--p",
        "0.5",
    ]);
    assert_eq!(cap.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&cap.stderr).contains("--mode mc"));
}

#[test]
fn qmap_table() {
    let out = perclab(&[
        "qmap", "--dim", "1", "--radius", "2", "--n", "1", "--m", "1", "--p", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(fields).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let q: f64 = row[5].parse().unwrap();
        if row[1] == "1" {
            assert!((q - 0.21875).abs() < 1e-15);
        } else {
            assert_eq!(q, 0.5);
        }
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        command: Some("verify".into()),
        graph: Some("zd".into()),
        dim: Some(1),
        radius: Some(4),
        n: Some(2),
        m: Some(2),
        p_grid: Some(vec![0.25, 0.5, 0.75]),
        check: Some("cor-homog".into()),
        mode: Some("exact".into()),
        pc_ref: Some(0.5),
        pc_ref_provenance: Some("literature value for the square lattice".into()),
        ..Default::default()
    };
    let text = cfg.to_json();
    let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &text).unwrap();
    let out_dir = dir.path().join("out");
    let out = perclab(&[
        "verify",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read(&out_dir, "results.csv").lines().count(), 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&out_dir, "manifest.json")).unwrap();
    let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(manifest["tool"], "perclab");
    assert!(manifest["wall_time_seconds"].is_number());
    // Flags override the file.
    let out = perclab(&["verify", "--config", path.to_str().unwrap(), "--p", "0.3"]);
    assert_eq!(stdout(&out).lines().count(), 4);
    let out = perclab(&["exact", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = perclab(&[
        "verify",
        "--check",
        "cor-homog",
        "--dim",
        "1",
        "--radius",
        "2",
        "--n",
        "1",
        "--m",
        "1",
        "--p",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "results.json")).unwrap();
    let report = &json[0];
    assert_eq!(report["check"], "cor-homog");
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["lhs"].as_f64().unwrap(), 0.765625);
    assert!(read(dir.path(), "results.json").contains("7.6562500000000000e-1"));
}

#[test]
fn selftest_passes() {
    let out = perclab(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.contains(": PASS"))
            .count(),
        6
    );
}

#[test]
fn thread_budget_from_environment() {
    let args = [
        "estimate",
        "--dim",
        "2",
        "--radius",
        "8",
        "--n",
        "8",
        "--p",
        "0.5",
        "--samples",
        "5000",
    ];
    let a = Command::new(env!("CARGO_BIN_EXE_perclab"))
        .args(args)
        .env("PERCLAB_THREADS", "1")
        .output()
        .unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_perclab"))
        .args(args)
        .env("PERCLAB_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
