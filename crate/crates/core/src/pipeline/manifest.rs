//! Corpus manifest: one CSV row per token.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{fmt_f64, write_csv};
use crate::error::{Error, Result};
use crate::vowel::Vowel;

pub const MANIFEST_HEADER: [&str; 5] = ["path", "vowel", "speaker_id", "target_f0", "sample_rate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// as written in the manifest; relative paths resolve against its folder
    pub path: PathBuf,
    pub vowel: Vowel,
    pub speaker_id: String,
    pub target_f0: f64,
}

impl ManifestEntry {
    pub fn cell(&self) -> String {
        format!("/{}/ {} {} Hz", self.vowel, self.speaker_id, self.target_f0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate: u32,
    /// distinct target f0 values, ascending
    pub grid: Vec<f64>,
    /// folder relative entry paths resolve against
    pub base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct Row {
    path: PathBuf,
    vowel: String,
    speaker_id: String,
    target_f0: f64,
    sample_rate: u32,
}

impl CorpusManifest {
    pub fn new(
        entries: Vec<ManifestEntry>,
        sample_rate: u32,
        base_dir: impl Into<PathBuf>,
    ) -> Self {
        let mut grid: Vec<f64> = entries.iter().map(|e| e.target_f0).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Self {
            entries,
            sample_rate,
            grid,
            base_dir: base_dir.into(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
            return Err(Error::InvalidArgument(format!(
                "manifest {} must have header {}",
                path.display(),
                MANIFEST_HEADER.join(",")
            )));
        }
        let mut entries = Vec::new();
        let mut rate = None;
        for (line, row) in reader.deserialize::<Row>().enumerate() {
            let row = row?;
            let vowel = row.vowel.parse()?;
            if !(row.target_f0 > 0.0 && row.target_f0.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "manifest row {}: target_f0 {} is not a positive frequency",
                    line + 2,
                    row.target_f0
                )));
            }
            match rate {
                None => rate = Some(row.sample_rate),
                Some(r) if r != row.sample_rate => {
                    return Err(Error::InvalidArgument(format!(
                        "manifest row {}: sample rate {} differs from {r}",
                        line + 2,
                        row.sample_rate
                    )))
                }
                _ => {}
            }
            entries.push(ManifestEntry {
                path: row.path,
                vowel,
                speaker_id: row.speaker_id,
                target_f0: row.target_f0,
            });
        }
        let sample_rate = rate.ok_or_else(|| {
            Error::InvalidArgument(format!("manifest {} has no entries", path.display()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self::new(entries, sample_rate, base))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let rate = self.sample_rate.to_string();
        write_csv(
            path,
            &MANIFEST_HEADER,
            self.entries.iter().map(|e| {
                vec![
                    e.path.to_string_lossy().into_owned(),
                    e.vowel.symbol().to_string(),
                    e.speaker_id.clone(),
                    fmt_f64(e.target_f0),
                    rate.clone(),
                ]
            }),
        )
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    /// Speaker ids in sorted order.
    pub fn speakers(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.entries.iter().map(|e| e.speaker_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Every (vowel, speaker, f0) cell must appear exactly once. All
    /// duplicates or all missing cells are reported together.
    pub fn validate_complete(&self) -> Result<()> {
        let mut seen: BTreeMap<(String, u64, Vowel), usize> = BTreeMap::new();
        let mut duplicates = Vec::new();
        for e in &self.entries {
            let n = seen
                .entry((e.speaker_id.clone(), e.target_f0.to_bits(), e.vowel))
                .or_default();
            *n += 1;
            if *n == 2 {
                duplicates.push(e.cell());
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::DuplicateCell(duplicates.join(", ")));
        }
        let mut missing = Vec::new();
        for s in self.speakers() {
            for &f0 in &self.grid {
                for v in Vowel::ALL {
                    if !seen.contains_key(&(s.clone(), f0.to_bits(), v)) {
                        missing.push(format!("/{v}/ {s} {f0} Hz"));
                    }
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingCells(missing))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(speakers: &[&str], grid: &[f64]) -> CorpusManifest {
        let mut entries = Vec::new();
        for s in speakers {
            for &f in grid {
                for v in Vowel::ALL {
                    entries.push(ManifestEntry {
                        path: format!("{s}_{}_{f}.wav", v.code()).into(),
                        vowel: v,
                        speaker_id: s.to_string(),
                        target_f0: f,
                    });
                }
            }
        }
        CorpusManifest::new(entries, 44_100, "")
    }

    #[test]
    fn complete_grid_passes() {
        let m = full(&["s1", "s2", "s3"], &crate::DEFAULT_F0_GRID);
        assert_eq!(m.entries.len(), 240);
        assert_eq!(m.grid, crate::DEFAULT_F0_GRID.to_vec());
        m.validate_complete().unwrap();
    }

    #[test]
    fn every_missing_cell_is_listed() {
        let mut m = full(&["s1", "s2"], &[220.0, 330.0]);
        m.entries
            .retain(|e| !(e.speaker_id == "s2" && e.target_f0 == 330.0 && e.vowel <= Vowel::Y));
        match m.validate_complete() {
            Err(Error::MissingCells(cells)) => {
                assert_eq!(
                    cells,
                    vec!["/i/ s2 330 Hz".to_string(), "/y/ s2 330 Hz".to_string()]
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_rejected() {
        let mut m = full(&["s1"], &[220.0]);
        m.entries.push(m.entries[0].clone());
        assert!(matches!(
            m.validate_complete(),
            Err(Error::DuplicateCell(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let m = full(&["a", "b"], &[220.0, 523.0]);
        m.write(&path).unwrap();
        let back = CorpusManifest::read(&path).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!(back.sample_rate, 44_100);
        assert_eq!(
            back.resolve(&back.entries[0]),
            dir.path().join("a_i_220.wav")
        );
    }

    #[test]
    fn bad_header_and_mixed_rates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "file,vowel\nx.wav,i\n").unwrap();
        assert!(CorpusManifest::read(&path).is_err());
        std::fs::write(
            &path,
            "path,vowel,speaker_id,target_f0,sample_rate\na.wav,i,s,220,44100\nb.wav,a,s,220,48000\n",
        )
        .unwrap();
        assert!(CorpusManifest::read(&path).is_err());
        assert!(matches!(
            CorpusManifest::read(dir.path().join("none.csv")),
            Err(Error::FileNotFound(_))
        ));
    }
}
