use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use tempfile::TempDir;
use vowelspace::pipeline::{
    analyze, cmd_analyze, cmd_report, cmd_spectra, cmd_synthesize, default_manifest_path,
    AnalysisResults, Averaging, RunConfig, Selector,
};
use vowelspace::{Error, Vowel};

struct Corpus {
    _dir: TempDir,
    root: PathBuf,
    manifest: PathBuf,
}

fn config(out: &Path) -> RunConfig {
    RunConfig {
        output_dir: out.to_path_buf(),
        timestamp: false,
        ..RunConfig::default()
    }
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let manifest = cmd_synthesize(&config(&root)).unwrap();
        assert_eq!(manifest.entries.len(), 240);
        Corpus {
            manifest: default_manifest_path(&root),
            root,
            _dir: dir,
        }
    })
}

/// Output directory of one full analysis of the shared corpus.
fn analyzed() -> &'static (TempDir, AnalysisResults) {
    static RUN: OnceLock<(TempDir, AnalysisResults)> = OnceLock::new();
    RUN.get_or_init(|| {
        let out = tempfile::tempdir().unwrap();
        let r = cmd_analyze(&corpus().manifest, &config(out.path())).unwrap();
        (out, r)
    })
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn synthesis_is_byte_reproducible() {
    let again = tempfile::tempdir().unwrap();
    cmd_synthesize(&config(again.path())).unwrap();
    let a = files_under(&corpus().root.join("corpus"));
    let b = files_under(&again.path().join("corpus"));
    assert_eq!(a.len(), 241);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(
            std::fs::read(x).unwrap(),
            std::fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn single_f0_grid_gives_24_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        grid: vec![220.0],
        ..config(dir.path())
    };
    let manifest = cmd_synthesize(&cfg).unwrap();
    assert_eq!(manifest.entries.len(), 24);
    assert_eq!(manifest.grid, vec![220.0]);
}

#[test]
fn analysis_writes_every_table() {
    let (out, r) = analyzed();
    let out = out.path();
    for f0 in &r.grid {
        let mds = data_rows(&out.join(format!("mds/mds_{f0}.csv")));
        assert_eq!(mds.len(), 8);
        let dist = data_rows(&out.join(format!("distances/distmat_{f0}.csv")));
        assert_eq!(dist.len(), 8);
        assert!(dist.iter().all(|row| row.len() == 9));
        assert_eq!(
            data_rows(&out.join(format!("spectra/spectra_{f0}.csv"))).len(),
            24 * 200
        );
    }
    assert_eq!(files_under(&out.join("mds")).len(), 10);
    assert_eq!(data_rows(&out.join("observations.csv")).len(), 210);
    assert_eq!(data_rows(&out.join("fdr.csv")).len(), 9);
    assert_eq!(data_rows(&out.join("tokens.csv")).len(), 240);

    let ratios: Vec<f64> = data_rows(&out.join("axis_ratio.csv"))
        .iter()
        .map(|row| row[3].parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 10);
    assert!(ratios[9] < ratios[0]);

    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("\nchecks\n"));
    assert_eq!(
        report.lines().filter(|l| l.starts_with("PASS ")).count(),
        6,
        "{report}"
    );
    assert!(!report.contains("generated:"));
}

#[test]
fn analysis_is_byte_reproducible() {
    let (first, _) = analyzed();
    let snapshot: Vec<(PathBuf, Vec<u8>)> = files_under(first.path())
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(&f).unwrap();
            (f, bytes)
        })
        .collect();
    // same manifest, same config, same output directory
    cmd_analyze(&corpus().manifest, &config(first.path())).unwrap();
    let after = files_under(first.path());
    assert_eq!(
        after,
        snapshot.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>()
    );
    for (f, bytes) in &snapshot {
        assert!(
            std::fs::read(f).unwrap() == *bytes,
            "{} changed",
            f.display()
        );
    }
}

#[test]
fn spectra_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = dir.path().join("fig3.csv");
    let selector = Selector {
        vowels: vec![Vowel::I, Vowel::Y, Vowel::E],
        speakers: vec!["s1".into()],
        f0s: vec![220.0, 523.0, 880.0],
    };
    let cells = cmd_spectra(&corpus().manifest, &cfg, &selector, &out).unwrap();
    assert_eq!(cells.len(), 9);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 9 * 200);
    let keys: BTreeSet<(String, String)> =
        rows.iter().map(|r| (r[0].clone(), r[2].clone())).collect();
    assert_eq!(keys.len(), 9);
    assert!(rows.iter().all(|r| r[1] == "s1"));

    let all = cmd_spectra(&corpus().manifest, &cfg, &Selector::default(), &out).unwrap();
    assert_eq!(all.len(), 240);
    assert_eq!(data_rows(&out).len(), 240 * 200);

    let none = Selector {
        speakers: vec!["nobody".into()],
        ..Selector::default()
    };
    assert!(matches!(
        cmd_spectra(
            &corpus().manifest,
            &cfg,
            &none,
            &dir.path().join("none.csv")
        ),
        Err(Error::EmptySelection)
    ));
    assert!(!dir.path().join("none.csv").exists());
}

#[test]
fn report_rerenders_identically() {
    let (out, _) = analyzed();
    let before = std::fs::read(out.path().join("report.txt")).unwrap();
    let text = cmd_report(out.path()).unwrap();
    assert_eq!(text.as_bytes(), before.as_slice());
    assert_eq!(
        std::fs::read(out.path().join("report.txt")).unwrap(),
        before
    );
}

#[test]
fn report_needs_finished_analysis() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        cmd_report(dir.path()),
        Err(Error::MissingStage(_))
    ));
    let (out, _) = analyzed();
    let json = std::fs::read_to_string(out.path().join("results.json")).unwrap();
    std::fs::write(dir.path().join("results.json"), &json[..json.len() / 2]).unwrap();
    assert!(matches!(
        cmd_report(dir.path()),
        Err(Error::MissingStage(_))
    ));
    assert!(!dir.path().join("report.txt").exists());
}

#[test]
fn incomplete_manifest_lists_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let base = corpus().manifest.parent().unwrap();
    let text = std::fs::read_to_string(&corpus().manifest).unwrap();
    let mut lines = text.lines();
    let mut kept = vec![lines.next().unwrap().to_string()];
    kept.extend(
        lines
            .filter(|l| !(l.starts_with("s2_u_698.wav") || l.starts_with("s3_i_220.wav")))
            .map(|l| format!("{}/{l}", base.display())),
    );
    assert_eq!(kept.len(), 239);
    let manifest = dir.path().join("partial.csv");
    std::fs::write(&manifest, kept.join("\n") + "\n").unwrap();
    let out = dir.path().join("out");
    match cmd_analyze(&manifest, &config(&out)) {
        Err(Error::MissingCells(cells)) => {
            assert_eq!(cells.len(), 2, "{cells:?}");
            assert!(cells.iter().any(|c| c.contains("s2") && c.contains("698")));
            assert!(cells.iter().any(|c| c.contains("s3") && c.contains("220")));
        }
        other => panic!("expected missing cells, got {other:?}"),
    }
    assert!(!out.exists());
}

#[test]
fn distance_matrix_averaging_keeps_the_pattern() {
    let cfg = RunConfig {
        averaging: Averaging::Distmat,
        ..config(Path::new("unused"))
    };
    let r = analyze(&corpus().manifest, &cfg).unwrap().results;
    let reference = &analyzed().1;
    // within-cluster distances are per speaker and do not depend on pooling
    assert_eq!(r.observations, reference.observations);
    let ratio = |res: &AnalysisResults, f0: f64| res.embedding_at(f0).unwrap().axis_ratio;
    assert!(ratio(&r, 1046.0) < ratio(&r, 220.0));
}
