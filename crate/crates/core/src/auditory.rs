//! ERB-spaced linear gammatone filterbank and cochlea-scaled spectra.
//!
//! Each channel is an `order`-stage cascade of identical complex one-pole
//! sections `g / (1 - p z^-1)^order` with `p = exp(-2 pi b / fs) e^{i w_c}`,
//! `b = bandwidth_factor * ERB(f_c)`. Twice the real part of the complex
//! output is the real gammatone response, scaled to unit gain at `f_c`.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{rms, SampleBuffer};

/// Glasberg-Moore equivalent rectangular bandwidth, in Hz.
pub fn erb_bandwidth(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(24.7 * (4.37 * f / 1000.0 + 1.0))
}

/// Glasberg-Moore ERB-number (Cam) of frequency `f`.
pub fn erb_number(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(21.4 * (4.37 * f / 1000.0 + 1.0).log10())
}

/// Frequency in Hz at ERB-number `e`.
pub fn erb_number_inverse(e: f64) -> Result<f64> {
    if !(e >= 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ERB-number must be non-negative, got {e}"
        )));
    }
    Ok((10f64.powf(e / 21.4) - 1.0) * 1000.0 / 4.37)
}

fn check_frequency(f: f64) -> Result<()> {
    if f >= 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "frequency must be non-negative, got {f}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterbankSpec {
    pub n_channels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub order: u32,
    pub bandwidth_factor: f64,
}

impl Default for FilterbankSpec {
    fn default() -> Self {
        Self {
            n_channels: 200,
            f_min: 40.0,
            f_max: 17_000.0,
            order: 4,
            bandwidth_factor: 1.019,
        }
    }
}

impl FilterbankSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 2 {
            return Err(Error::InvalidArgument(
                "filterbank needs at least 2 channels".into(),
            ));
        }
        if !(self.f_min > 0.0 && self.f_max > self.f_min && self.f_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "filterbank passband must satisfy 0 < f_min < f_max, got {}..{}",
                self.f_min, self.f_max
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidArgument(
                "gammatone order must be positive".into(),
            ));
        }
        if !(self.bandwidth_factor > 0.0) {
            return Err(Error::InvalidArgument(
                "bandwidth factor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Center frequencies equally spaced on the ERB-number scale, endpoints
    /// included.
    pub fn center_frequencies(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let e_lo = erb_number(self.f_min)?;
        let e_hi = erb_number(self.f_max)?;
        let step = (e_hi - e_lo) / (self.n_channels - 1) as f64;
        (0..self.n_channels)
            .map(|k| {
                if k == 0 {
                    Ok(self.f_min)
                } else if k == self.n_channels - 1 {
                    Ok(self.f_max)
                } else {
                    erb_number_inverse(e_lo + step * k as f64)
                }
            })
            .collect()
    }
}

/// One gammatone channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneChannel {
    center_hz: f64,
    bandwidth_hz: f64,
    order: u32,
    pole_re: f64,
    pole_im: f64,
    gain: f64,
}

impl GammatoneChannel {
    pub fn new(center_hz: f64, bandwidth_hz: f64, order: u32, sample_rate: u32) -> Self {
        let rate = sample_rate as f64;
        let r = (-2.0 * PI * bandwidth_hz / rate).exp();
        let w = 2.0 * PI * center_hz / rate;
        Self {
            center_hz,
            bandwidth_hz,
            order,
            pole_re: r * w.cos(),
            pole_im: r * w.sin(),
            // |1 - p e^{-iw}| = 1 - r at the center frequency
            gain: (1.0 - r).powi(order as i32),
        }
    }

    pub fn center_hz(&self) -> f64 {
        self.center_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Real-valued channel output for `input`, starting from rest.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let stages = self.order as usize;
        let mut state = vec![(0.0f64, 0.0f64); stages];
        let (pr, pi) = (self.pole_re, self.pole_im);
        input
            .iter()
            .map(|&x| {
                let mut re = x * self.gain;
                let mut im = 0.0;
                for s in state.iter_mut() {
                    let nr = re + pr * s.0 - pi * s.1;
                    let ni = im + pr * s.1 + pi * s.0;
                    *s = (nr, ni);
                    re = nr;
                    im = ni;
                }
                2.0 * re
            })
            .collect()
    }

    /// RMS of the channel output over the whole input.
    pub fn output_rms(&self, input: &[f64]) -> f64 {
        rms(&self.filter(input))
    }
}

/// A bank of gammatone channels bound to one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    spec: FilterbankSpec,
    sample_rate: u32,
    channels: Vec<GammatoneChannel>,
}

/// Builds the filterbank described by `spec` for `sample_rate`.
pub fn make_filterbank(spec: &FilterbankSpec, sample_rate: u32) -> Result<Filterbank> {
    spec.validate()?;
    let nyquist = sample_rate as f64 / 2.0;
    if spec.f_max >= nyquist {
        return Err(Error::InvalidArgument(format!(
            "f_max {} Hz is not below the Nyquist frequency {nyquist} Hz",
            spec.f_max
        )));
    }
    let channels = spec
        .center_frequencies()?
        .into_iter()
        .map(|fc| {
            let bw = spec.bandwidth_factor * erb_bandwidth(fc)?;
            Ok(GammatoneChannel::new(fc, bw, spec.order, sample_rate))
        })
        .collect::<Result<_>>()?;
    Ok(Filterbank {
        spec: *spec,
        sample_rate,
        channels,
    })
}

impl Filterbank {
    pub fn spec(&self) -> &FilterbankSpec {
        &self.spec
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> &[GammatoneChannel] {
        &self.channels
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.center_hz).collect()
    }
}

/// Piecewise-linear middle-ear gain on log-frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddleEarWeighting {
    breakpoints: Vec<(f64, f64)>,
}

const DEFAULT_MIDDLE_EAR: &str = include_str!("../data/middle_ear.tsv");

impl Default for MiddleEarWeighting {
    fn default() -> Self {
        Self::parse(DEFAULT_MIDDLE_EAR).expect("built-in middle-ear table parses")
    }
}

impl MiddleEarWeighting {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Config(
                "middle-ear table needs at least 2 rows".into(),
            ));
        }
        if breakpoints
            .iter()
            .any(|(f, g)| !(*f > 0.0) || !g.is_finite())
        {
            return Err(Error::Config(
                "middle-ear frequencies must be positive and gains finite".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "middle-ear frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    /// A weighting that adds 0 dB everywhere.
    pub fn flat() -> Self {
        Self {
            breakpoints: vec![(1.0, 0.0), (2.0, 0.0)],
        }
    }

    /// Parses two whitespace-separated columns (Hz, dB). Blank lines and
    /// lines starting with `#` are skipped, as is a non-numeric header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            let parsed = match fields.as_slice() {
                [f, g] => f.parse::<f64>().ok().zip(g.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(row) => rows.push(row),
                None if rows.is_empty() => continue,
                None => {
                    return Err(Error::Config(format!(
                        "middle-ear table line {}: expected two numbers, got '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(rows)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Gain in dB at `f`.
    pub fn gain_db(&self, f: f64) -> f64 {
        let first = self.breakpoints[0];
        let last = *self.breakpoints.last().unwrap();
        if f <= first.0 {
            return first.1;
        }
        if f >= last.0 {
            return last.1;
        }
        let i = self.breakpoints.partition_point(|(x, _)| *x <= f);
        let (f0, g0) = self.breakpoints[i - 1];
        let (f1, g1) = self.breakpoints[i];
        let t = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
        g0 + t * (g1 - g0)
    }
}

/// Lowest reported channel level.
pub const LEVEL_FLOOR_DB: f64 = -120.0;

/// Shortest buffer accepted by [`excitation_pattern`], in seconds.
pub const MIN_EXCITATION_SECONDS: f64 = 0.050;

/// Per-channel dB levels on the filterbank's center-frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CochleaScaledSpectrum {
    pub center_frequencies: Vec<f64>,
    pub levels_db: Vec<f64>,
    pub normalized: bool,
}

impl CochleaScaledSpectrum {
    pub fn len(&self) -> usize {
        self.levels_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_db.is_empty()
    }

    pub fn mean_level(&self) -> f64 {
        self.levels_db.iter().sum::<f64>() / self.levels_db.len() as f64
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.center_frequencies == other.center_frequencies
    }

    /// Channel-wise mean of several spectra on a common grid.
    pub fn average(spectra: &[&CochleaScaledSpectrum]) -> Result<Self> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot average zero spectra".into()))?;
        if spectra.iter().any(|s| !s.same_grid(first)) {
            return Err(Error::GridMismatch);
        }
        let n = spectra.len() as f64;
        let levels_db = (0..first.len())
            .map(|i| spectra.iter().map(|s| s.levels_db[i]).sum::<f64>() / n)
            .collect();
        Ok(Self {
            center_frequencies: first.center_frequencies.clone(),
            levels_db,
            normalized: spectra.iter().all(|s| s.normalized),
        })
    }
}

/// Filters `buffer` through every channel and reports
/// `20 log10(rms) + middle-ear gain(f_c)` per channel, with channel levels
/// clamped at [`LEVEL_FLOOR_DB`] before weighting.
pub fn excitation_pattern(
    buffer: &SampleBuffer,
    filterbank: &Filterbank,
    weighting: &MiddleEarWeighting,
) -> Result<CochleaScaledSpectrum> {
    if buffer.sample_rate() != filterbank.sample_rate() {
        return Err(Error::InvalidArgument(format!(
            "buffer rate {} Hz does not match filterbank rate {} Hz",
            buffer.sample_rate(),
            filterbank.sample_rate()
        )));
    }
    if buffer.duration_seconds() < MIN_EXCITATION_SECONDS {
        return Err(Error::BufferTooShort {
            needed: buffer.samples_for(MIN_EXCITATION_SECONDS),
            available: buffer.len(),
        });
    }
    let samples = buffer.samples();
    let levels_db = filterbank
        .channels
        .par_iter()
        .map(|ch| {
            let level = 20.0 * ch.output_rms(samples).log10();
            let level = if level.is_finite() {
                level.max(LEVEL_FLOOR_DB)
            } else {
                LEVEL_FLOOR_DB
            };
            level + weighting.gain_db(ch.center_hz)
        })
        .collect();
    Ok(CochleaScaledSpectrum {
        center_frequencies: filterbank.center_frequencies(),
        levels_db,
        normalized: false,
    })
}

/// Subtracts the mean channel level.
pub fn normalize_spectrum(s: &CochleaScaledSpectrum) -> CochleaScaledSpectrum {
    let mean = s.mean_level();
    CochleaScaledSpectrum {
        center_frequencies: s.center_frequencies.clone(),
        levels_db: s.levels_db.iter().map(|l| l - mean).collect(),
        normalized: true,
    }
}
