use std::process::Command;

use psqam::cli::{run_sweep, write_records, Config, OutputFormat};
use psqam::shaping::Preset;
use psqam::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psqam"))
}

#[test]
fn five_distributions_six_snrs() {
    let cfg = Config {
        snr_db: vec![20.0, 10.0, 12.0, 14.0, 16.0, 18.0],
        ..Config::default()
    };
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 30);
    assert!(records.iter().all(|r| r.ber.is_none() && r.fer.is_none() && r.frames == 0));
    // Sorted by distribution, then SNR.
    let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.distribution_id, names[i / 6]);
        assert_eq!(r.snr_db, 10.0 + 2.0 * (i % 6) as f64);
        assert!(r.gmi_bits <= r.mi_bits + 1e-9);
    }
    let hash = &records[0].code_hash;
    assert!(records.iter().all(|r| &r.code_hash == hash));
}

#[test]
fn frames_fill_error_rates() {
    let cfg = Config {
        distributions: vec![Preset::P4, Preset::P1],
        snr_db: vec![13.0],
        frames: 4,
        seed: 5,
        ..Config::default()
    };
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].distribution_id, "P4");
    assert_eq!(records[0].fer, Some(0.0));
    assert_eq!(records[1].fer, Some(1.0));
    assert!(records.iter().all(|r| r.frames == 4 && r.seed == 5));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = Config {
        distributions: vec![Preset::P2, Preset::Uniform],
        snr_db: vec![12.0, 14.0],
        frames: 3,
        seed: 77,
        workers: 3,
        ..Config::default()
    };
    let render = |cfg: &Config, format| {
        let mut buf = Vec::new();
        write_records(&run_sweep(cfg).unwrap(), format, &mut buf).unwrap();
        buf
    };
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let a = render(&cfg, format);
        let b = render(&Config { workers: 1, ..cfg.clone() }, format);
        assert_eq!(a, b);
    }
}

#[test]
fn bad_config_key_is_reported() {
    let err = Config::from_toml("[link]\nbaud = 32\n").unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("baud")), "{err}");
}

#[test]
fn binary_version() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")) && text.contains("schema 1"), "{text}");
}

#[test]
fn binary_sweep_to_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = bin()
            .args(["--preset", "P3", "--preset", "uniform", "--snr-range", "11:13:1", "--frames", "2"])
            .args(["--seed", "4", "--workers", "2", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2 + 6);
    assert!(lines[0].starts_with("# psqam-records schema=1"));
    assert!(lines[2].starts_with("P3,11,"));
}

#[test]
fn binary_json_and_mi_only() {
    let out = bin()
        .args(["--preset", "P1", "--snr", "15", "--frames", "5", "--mi-only", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rec = &v["records"][0];
    assert_eq!(rec["distribution_id"], "P1");
    assert_eq!(rec["frames"], 0);
    assert!(rec.get("ber").is_none() && rec.get("fer").is_none());
}

#[test]
fn binary_rate_table() {
    let out = bin().arg("--rate-table").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["OP1 (P1)", "302.72", "270.72", "230.40", "200.32", "320.00", "Ref4"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
}

#[test]
fn binary_config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sweep]\nsnr = [1.0]\n").unwrap();
    let out = bin().arg("--config").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("snr"), "{err}");

    let out = bin().args(["--preset", "P7"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("--preset"));
}

#[test]
fn binary_config_file_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[run]\nseed = 2\n[sweep]\ndistributions = [\"P2\"]\nsnr_db = [12.5]\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("P2,12.5,"));

    let code = dir.path().join("h.txt");
    assert!(bin().arg("--export-code").arg(&code).status().unwrap().success());
    assert!(std::fs::read_to_string(&code).unwrap().starts_with("# psqam parity-check v1"));

    let frame = dir.path().join("f.csv");
    assert!(bin().arg("--config").arg(&cfg).arg("--dump-frame").arg(&frame).status().unwrap().success());
    assert_eq!(std::fs::read_to_string(&frame).unwrap().lines().count(), 577);
}
