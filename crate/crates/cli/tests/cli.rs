use std::path::Path;
use std::process::{Command, Output};

fn vowelspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vowelspace"))
        .args(args)
        .output()
        .unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(vowelspace(&["--help"]).status.code(), Some(0));
    assert_eq!(vowelspace(&["--bogus", "run"]).status.code(), Some(1));
    assert_eq!(vowelspace(&[]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad_q = vowelspace(&["--out", &out_arg(dir.path()), "--q", "1.5", "synthesize"]);
    assert_eq!(bad_q.status.code(), Some(1));
    assert!(!dir.path().join("corpus").exists());
}

#[test]
fn missing_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let analyze = vowelspace(&["--out", &out, "analyze"]);
    assert_eq!(analyze.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&analyze.stderr).contains("error:"));
    assert_eq!(
        vowelspace(&["--out", &out, "report"]).status.code(),
        Some(2)
    );
}

#[test]
fn single_f0_synthesis_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let synth = vowelspace(&["--out", &out, "--grid", "220", "synthesize"]);
    assert_eq!(
        synth.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&synth.stderr)
    );
    let manifest = std::fs::read_to_string(dir.path().join("corpus/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 24);

    let csv = dir.path().join("sel.csv");
    let spectra = vowelspace(&[
        "--out",
        &out,
        "--grid",
        "220",
        "spectra",
        "--vowels",
        "i,y,e",
        "--speakers",
        "s1",
        "--output",
        &csv.display().to_string(),
    ]);
    assert_eq!(
        spectra.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&spectra.stderr)
    );
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap().lines().count(),
        1 + 3 * 200
    );

    let empty = vowelspace(&[
        "--out",
        &out,
        "--grid",
        "220",
        "spectra",
        "--speakers",
        "nobody",
    ]);
    assert_eq!(empty.status.code(), Some(2));
    let unknown = vowelspace(&["--out", &out, "--grid", "220", "spectra", "--vowels", "x"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn full_run_is_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let first = vowelspace(&["--out", &out, "--no-timestamp", "run"]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stdout = String::from_utf8_lossy(&first.stdout).to_string();
    assert!(stdout.contains("\nchecks\n"));
    assert!(!stdout.contains("FAIL "), "{stdout}");
    let results = std::fs::read(dir.path().join("results.json")).unwrap();
    let report = std::fs::read(dir.path().join("report.txt")).unwrap();

    let second = vowelspace(&["--out", &out, "--no-timestamp", "run"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(second.stdout, first.stdout);
    assert_eq!(
        std::fs::read(dir.path().join("results.json")).unwrap(),
        results
    );
    assert_eq!(
        std::fs::read(dir.path().join("report.txt")).unwrap(),
        report
    );

    let rerender = vowelspace(&["--out", &out, "report"]);
    assert_eq!(rerender.stdout, report);
}
