use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use soniq_core::pipeline::load_csv;
use soniq_core::sonify::read_wav;

fn soniq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soniq"))
        .current_dir(dir)
        .env_remove("SONIQ_OUT")
        .args(args)
        .output()
        .expect("spawn soniq")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "status {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SHORT: &[&str] = &[
    "--synth_duration",
    "30",
    "--synth_onset",
    "10",
    "--synth_offset",
    "20",
];

/// A 30 s, 16-channel synthetic recording.
fn short_recording(dir: &Path) -> PathBuf {
    let mut args = vec!["synth", "data.csv"];
    args.extend_from_slice(SHORT);
    ok(soniq(dir, &args));
    dir.join("data.csv")
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn missing_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = soniq(dir.path(), &["sonify", "nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    assert_eq!(soniq(dir.path(), &["sonify"]).status.code(), Some(2));
    assert_eq!(soniq(dir.path(), &["bogus"]).status.code(), Some(2));
}

#[test]
fn malformed_csv_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n3,x\n").unwrap();
    let out = soniq(dir.path(), &["sonify", "bad.csv", "--sample_rate", "100"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("row 3") && msg.contains("column 2"), "{msg}");
}

#[test]
fn sonify_duration_follows_kept_samples() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    ok(soniq(dir.path(), &["sonify", "data.csv"]));
    let wav = read_wav(dir.path().join("soniq-out/sonify.wav")).unwrap();
    // 30 000 samples keep 60 after decimation by 500.
    assert_eq!(wav.samples.len(), 60 * 4410);
    assert!(dir.path().join("soniq-out/sonify_spectrogram.pgm").exists());
}

#[test]
fn same_seed_gives_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    for out_dir in ["a", "b"] {
        ok(soniq(
            dir.path(),
            &["sonify", "data.csv", "--out_dir", out_dir],
        ));
    }
    let a = std::fs::read(dir.path().join("a/sonify.wav")).unwrap();
    let b = std::fs::read(dir.path().join("b/sonify.wav")).unwrap();
    assert_eq!(a, b);

    let mut args = vec!["synth", "again.csv"];
    args.extend_from_slice(SHORT);
    ok(soniq(dir.path(), &args));
    assert_eq!(
        std::fs::read(dir.path().join("data.csv")).unwrap(),
        std::fs::read(dir.path().join("again.csv")).unwrap()
    );
}

#[test]
fn qpam_rows_and_verification() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    ok(soniq(
        dir.path(),
        &[
            "qpam",
            "data.csv",
            "--channel",
            "MST4",
            "--verify",
            "--sonify",
        ],
    ));
    let rows = read_rows(&dir.path().join("soniq-out/moments.csv"));
    assert_eq!(rows[0], ["start_index", "value"]);
    assert_eq!(rows.len() - 1, (30_000 - 16) / 10 + 1);
    assert!(dir.path().join("soniq-out/moments.wav").exists());

    let out = soniq(dir.path(), &["qpam", "data.csv", "--channel", "XYZ"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_channel_gives_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# sample_rate=100\nflat,wave\n");
    for i in 0..40 {
        text.push_str(&format!("3.5,{}\n", (i as f64 * 0.7).sin()));
    }
    std::fs::write(dir.path().join("flat.csv"), text).unwrap();
    ok(soniq(
        dir.path(),
        &["qpam", "flat.csv", "--channel", "flat", "--verify"],
    ));
    let rows = read_rows(&dir.path().join("soniq-out/moments.csv"));
    assert_eq!(rows.len() - 1, 3);
    assert!(rows[1..].iter().all(|r| r[1] == "NaN"));
}

#[test]
fn zero_field_keeps_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    ok(soniq(dir.path(), &["ising", "data.csv", "--hx", "0"]));
    let rows = read_rows(&dir.path().join("soniq-out/trace.csv"));
    assert_eq!(rows.len(), 11);
    for row in &rows[1..] {
        assert!(row[1..]
            .iter()
            .all(|v| v.parse::<f64>().unwrap().abs() < 1e-12));
    }
}

#[test]
fn exact_columns_for_small_chains() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    ok(soniq(
        dir.path(),
        &[
            "ising",
            "data.csv",
            "--couplings",
            "TT1,TT2,TT3,TT4",
            "--spins",
            "4",
            "--exact",
        ],
    ));
    let rows = read_rows(&dir.path().join("soniq-out/trace.csv"));
    assert_eq!(rows[0].len(), 1 + 4 + 4 + 1);
    assert_eq!(rows[0][5], "exact_q0");
    assert_eq!(rows[0].last().unwrap(), "max_abs_dev");
    for row in &rows[1..] {
        let v: Vec<f64> = row[1..].iter().map(|x| x.parse().unwrap()).collect();
        let dev = (0..4).map(|q| (v[q] - v[q + 4]).abs()).fold(0.0, f64::max);
        assert_eq!(dev, v[8]);
    }
    assert_eq!(rows[1][9], "0");
    let out = soniq(dir.path(), &["ising", "data.csv", "--exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_without_fm_matches_sonify() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    ok(soniq(
        dir.path(),
        &["full", "data.csv", "--no-fm", "--out_dir", "full"],
    ));
    ok(soniq(
        dir.path(),
        &["sonify", "data.csv", "--out_dir", "plain"],
    ));
    assert_eq!(
        std::fs::read(dir.path().join("full/fm.wav")).unwrap(),
        std::fs::read(dir.path().join("plain/sonify.wav")).unwrap()
    );
    let manifest = std::fs::read_to_string(dir.path().join("full/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 13);
}

#[test]
fn printed_config_replays() {
    let dir = tempfile::tempdir().unwrap();
    let first = ok(soniq(
        dir.path(),
        &["sonify", "--print-config", "--dt", "0.25"],
    ));
    std::fs::write(dir.path().join("run.cfg"), &first.stdout).unwrap();
    let second = ok(soniq(
        dir.path(),
        &["qpam", "--config", "run.cfg", "--print-config"],
    ));
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout).contains("dt = 0.25\n"));
}

#[test]
fn environment_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    short_recording(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_soniq"))
        .current_dir(dir.path())
        .env("SONIQ_OUT", "from-env")
        .args(["qpam", "data.csv"])
        .output()
        .unwrap();
    ok(out);
    assert!(dir.path().join("from-env/moments.csv").exists());
    // An explicit flag still wins.
    let out = Command::new(env!("CARGO_BIN_EXE_soniq"))
        .current_dir(dir.path())
        .env("SONIQ_OUT", "from-env")
        .args(["qpam", "data.csv", "--out_dir", "from-flag"])
        .output()
        .unwrap();
    ok(out);
    assert!(dir.path().join("from-flag/moments.csv").exists());
}

#[test]
fn synthetic_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let set = load_csv(short_recording(dir.path()), None).unwrap();
    assert_eq!(set.n_channels(), 16);
    assert_eq!(set.n_samples(), 30_000);
    assert_eq!(set.sample_rate(), 1000.0);
}
