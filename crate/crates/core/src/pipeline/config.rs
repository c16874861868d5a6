//! Run configuration: one TOML file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::auditory::{FilterbankSpec, MiddleEarWeighting};
use crate::error::{Error, Result};
use crate::signal::Conditioning;
use crate::stats::{
    default_clusters, validate_clusters, ClusterDef, PairedTest, DEFAULT_BREAKPOINT,
};
use crate::synth::{builtin_profiles, SpeakerProfile};
use crate::DEFAULT_F0_GRID;

/// Where speakers are pooled before MDS.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// average the speakers' normalized spectra channel-wise, then measure
    #[default]
    Spectra,
    /// measure per speaker, then average the distance matrices
    Distmat,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectra" => Ok(Averaging::Spectra),
            "distmat" => Ok(Averaging::Distmat),
            other => Err(Error::Config(format!(
                "averaging must be 'spectra' or 'distmat', got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Averaging::Spectra => "spectra",
            Averaging::Distmat => "distmat",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// target f0 values synthesized, in Hz
    pub grid: Vec<f64>,
    /// f0 every other condition is compared with and aligned to
    pub reference_f0: f64,
    pub sample_rate: u32,
    /// length of synthesized tokens before conditioning
    pub token_seconds: f64,
    /// speaker profile files; empty selects the built-in speakers
    pub speaker_profiles: Vec<PathBuf>,
    pub segment_ms: f64,
    pub fade_ms: f64,
    pub target_rms: f64,
    pub filterbank: FilterbankSpec,
    /// middle-ear table; `None` selects the built-in table
    pub middle_ear: Option<PathBuf>,
    pub clusters: Vec<ClusterDef>,
    pub averaging: Averaging,
    pub breakpoint: f64,
    pub q: f64,
    pub paired_test: PairedTest,
    /// stamp results with the wall-clock time
    pub timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("results"),
            grid: DEFAULT_F0_GRID.to_vec(),
            reference_f0: DEFAULT_F0_GRID[0],
            sample_rate: 44_100,
            token_seconds: 0.5,
            speaker_profiles: Vec::new(),
            segment_ms: 250.0,
            fade_ms: 10.0,
            target_rms: 0.1,
            filterbank: FilterbankSpec::default(),
            middle_ear: None,
            clusters: default_clusters(),
            averaging: Averaging::Spectra,
            breakpoint: DEFAULT_BREAKPOINT,
            q: 0.05,
            paired_test: PairedTest::PairedT,
            timestamp: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fade_ms >= 0.0 && self.segment_ms > 2.0 * self.fade_ms) {
            return Err(Error::Config(format!(
                "segment ({} ms) must exceed twice the fade ({} ms)",
                self.segment_ms, self.fade_ms
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!(
                "q must be in (0, 1), got {}",
                self.q
            )));
        }
        if !(self.target_rms > 0.0 && self.target_rms.is_finite()) {
            return Err(Error::Config(format!(
                "target_rms must be positive, got {}",
                self.target_rms
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("f0 grid is empty".into()));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if let Some(bad) = self.grid.iter().find(|f| !(**f > 0.0 && **f < nyquist)) {
            return Err(Error::Config(format!(
                "grid f0 {bad} Hz outside (0, {nyquist})"
            )));
        }
        let mut sorted = self.grid.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("f0 grid contains duplicates".into()));
        }
        if !(self.token_seconds * 1000.0 >= self.segment_ms) {
            return Err(Error::Config(format!(
                "tokens of {} s are shorter than the {} ms segment",
                self.token_seconds, self.segment_ms
            )));
        }
        if !self.breakpoint.is_finite() {
            return Err(Error::Config("breakpoint must be finite".into()));
        }
        self.filterbank
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        validate_clusters(&self.clusters)
    }

    pub fn conditioning(&self) -> Conditioning {
        Conditioning {
            segment_seconds: self.segment_ms / 1000.0,
            fade_seconds: self.fade_ms / 1000.0,
            target_rms: self.target_rms,
        }
    }

    pub fn weighting(&self) -> Result<MiddleEarWeighting> {
        match &self.middle_ear {
            Some(path) => MiddleEarWeighting::from_file(path),
            None => Ok(MiddleEarWeighting::default()),
        }
    }

    pub fn profiles(&self) -> Result<Vec<SpeakerProfile>> {
        if self.speaker_profiles.is_empty() {
            return Ok(builtin_profiles());
        }
        let profiles = self
            .speaker_profiles
            .iter()
            .map(SpeakerProfile::from_file)
            .collect::<Result<Vec<_>>>()?;
        let mut ids: Vec<&str> = profiles.iter().map(|p| p.speaker_id()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("speaker ids must be unique".into()));
        }
        Ok(profiles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml_str(
            "q = 0.1\naveraging = \"distmat\"\n[filterbank]\nn_channels = 64\n",
        )
        .unwrap();
        assert_eq!(c.q, 0.1);
        assert_eq!(c.averaging, Averaging::Distmat);
        assert_eq!(c.filterbank.n_channels, 64);
        assert_eq!(c.filterbank.f_max, 17_000.0);
        assert_eq!(c.grid.len(), 10);
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.fade_ms = 125.0));
        assert!(bad(|c| c.q = 1.0));
        assert!(bad(|c| c.q = 0.0));
        assert!(bad(|c| c.grid.clear()));
        assert!(bad(|c| c.grid.push(220.0)));
        assert!(bad(|c| c.clusters[0].members.truncate(1)));
        assert!(RunConfig::from_toml_str("unknown_key = 3").is_err());
        assert!("median".parse::<Averaging>().is_err());
    }
}
