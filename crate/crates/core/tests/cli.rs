//! End-to-end checks of the command-line interface: subcommands, config file
//! plus flag overrides, CSV contract, exit codes and determinism.

use std::path::PathBuf;
use std::process::Command;

use mmlink::harness::parse_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmlink"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("mmlink-test-{}-{name}", std::process::id()));
    p
}

const TINY_CONFIG: &str = "\
[experiment]
nt = 2
nr = 2
[channel]
taps = 2
[mc]
symbol_vectors = 1200
realizations = 2
";

#[test]
fn pulse_spectra_emits_csv_contract() {
    let out = temp_path("spectra.csv");
    let status = bin()
        .args(["pulse-spectra", "--out"])
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pulse,frequency_normalized,magnitude_db"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 1024);
    for pulse in ["rrc", "phydyas", "dc"] {
        assert!(rows.iter().any(|r| r.starts_with(pulse)));
    }
    std::fs::remove_file(&out).ok();
}

#[test]
fn sweep_distance_is_deterministic_and_parseable() {
    let cfg_path = temp_path("config.ini");
    std::fs::write(&cfg_path, TINY_CONFIG).unwrap();
    let run = |out: &PathBuf| {
        let status = bin()
            .args(["sweep-distance", "--grid", "30,100", "--seed", "7", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .expect("binary runs");
        assert!(status.success());
    };
    let out_a = temp_path("sweep-a.csv");
    let out_b = temp_path("sweep-b.csv");
    run(&out_a);
    run(&out_b);
    let rows_a = parse_csv(&std::fs::read_to_string(&out_a).unwrap()).unwrap();
    let rows_b = parse_csv(&std::fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_eq!(rows_a.len(), 2);
    for (a, b) in rows_a.iter().zip(&rows_b) {
        // identical modulo the wall-clock column
        assert_eq!(a.axis, b.axis);
        assert_eq!(a.ase_mean, b.ase_mean);
        assert_eq!(a.ase_stderr, b.ase_stderr);
        assert_eq!(a.mi_mean, b.mi_mean);
        assert_eq!(a.singular_bins, b.singular_bins);
    }
    for p in [cfg_path, out_a, out_b] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn single_run_writes_one_row() {
    let cfg_path = temp_path("single.ini");
    std::fs::write(&cfg_path, TINY_CONFIG).unwrap();
    let out = temp_path("single.csv");
    let status = bin()
        .args(["single-run", "--distance", "30", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success());
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ase_mean >= 0.0);
    std::fs::remove_file(&cfg_path).ok();
    std::fs::remove_file(&out).ok();
}

#[test]
fn bad_arguments_exit_nonzero_with_error_line() {
    let output = bin()
        .args(["single-run", "--transceiver", "bogus", "--realizations", "1"])
        .output()
        .expect("binary runs");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "stderr was: {stderr}");
}

#[test]
fn out_of_model_distance_fails_cleanly() {
    let cfg_path = temp_path("oom.ini");
    std::fs::write(&cfg_path, TINY_CONFIG).unwrap();
    let output = bin()
        .args(["single-run", "--distance", "0.5", "--config"])
        .arg(&cfg_path)
        .output()
        .expect("binary runs");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "stderr was: {stderr}");
    std::fs::remove_file(&cfg_path).ok();
}
