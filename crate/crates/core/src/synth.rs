//! Source-filter vowel synthesis and autocorrelation f0 estimation.
//!
//! The source is a zero-mean, band-limited pulse train; the filter is a cascade of two-pole
//! resonators, one per formant, each scaled to unit gain at its own center
//! frequency. Formants stay fixed across f0, so at high f0 the widely spaced
//! harmonics sample the resonance envelope at only a handful of points.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{normalize_rms, SampleBuffer};
use crate::vowel::Vowel;
use crate::F0_TOLERANCE;

/// One resonance of the vocal-tract filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormantSpec {
    pub frequency: f64,
    pub bandwidth: f64,
}

impl FormantSpec {
    pub fn new(frequency: f64, bandwidth: f64) -> Self {
        Self {
            frequency,
            bandwidth,
        }
    }

    fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.frequency > 0.0 && self.frequency < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "formant frequency {} Hz outside (0, {nyquist})",
                self.frequency
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "formant bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

/// Formant tables for one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    speaker_id: String,
    formants: BTreeMap<Vowel, Vec<FormantSpec>>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    speaker_id: String,
    /// vowel -> list of [frequency_hz, bandwidth_hz]
    vowels: BTreeMap<String, Vec<[f64; 2]>>,
}

impl SpeakerProfile {
    /// Builds a profile, checking that all eight vowels are present with at
    /// least four strictly ascending formants each.
    pub fn new(
        speaker_id: impl Into<String>,
        formants: BTreeMap<Vowel, Vec<FormantSpec>>,
    ) -> Result<Self> {
        let speaker_id = speaker_id.into();
        for v in Vowel::ALL {
            let list = formants.get(&v).ok_or_else(|| {
                Error::Config(format!("profile {speaker_id}: vowel /{v}/ missing"))
            })?;
            if list.len() < 4 {
                return Err(Error::Config(format!(
                    "profile {speaker_id}: /{v}/ needs at least 4 formants, has {}",
                    list.len()
                )));
            }
            for f in list {
                if !(f.frequency > 0.0 && f.bandwidth > 0.0) {
                    return Err(Error::Config(format!(
                        "profile {speaker_id}: /{v}/ has a non-positive formant or bandwidth"
                    )));
                }
            }
            if list.windows(2).any(|w| w[1].frequency <= w[0].frequency) {
                return Err(Error::Config(format!(
                    "profile {speaker_id}: /{v}/ formants are not strictly increasing"
                )));
            }
        }
        Ok(Self {
            speaker_id,
            formants,
        })
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn formants(&self, vowel: Vowel) -> &[FormantSpec] {
        // present for every vowel by construction
        &self.formants[&vowel]
    }

    /// Parses the TOML profile format:
    ///
    /// ```toml
    /// speaker_id = "s1"
    /// [vowels]
    /// i = [[300, 60], [2500, 90], [3300, 150], [4300, 200]]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut formants = BTreeMap::new();
        for (key, list) in file.vowels {
            let vowel: Vowel = key.parse()?;
            let specs = list.iter().map(|[f, b]| FormantSpec::new(*f, *b)).collect();
            if formants.insert(vowel, specs).is_some() {
                return Err(Error::Config(format!("vowel /{vowel}/ listed twice")));
            }
        }
        Self::new(file.speaker_id, formants)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ProfileFile {
            speaker_id: self.speaker_id.clone(),
            vowels: self
                .formants
                .iter()
                .map(|(v, list)| {
                    (
                        v.symbol().to_string(),
                        list.iter().map(|f| [f.frequency, f.bandwidth]).collect(),
                    )
                })
                .collect(),
        };
        toml::to_string(&file).expect("profile serializes")
    }

    /// Copy with formant frequencies scaled per speaker: formant number `k`
    /// of every vowel is multiplied by the same factor in `1 ± spread`,
    /// drawn from a seeded generator. Bandwidths are kept.
    pub fn jittered(&self, speaker_id: impl Into<String>, spread: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.formants.values().map(Vec::len).max().unwrap_or(0);
        let factors: Vec<f64> = (0..n)
            .map(|_| 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let formants = self
            .formants
            .iter()
            .map(|(v, list)| {
                let scaled = list
                    .iter()
                    .zip(&factors)
                    .map(|(f, k)| FormantSpec::new(f.frequency * k, f.bandwidth))
                    .collect();
                (*v, scaled)
            })
            .collect();
        Self::new(speaker_id, formants)
    }
}

/// Base formant table for adult female voices (F1-F4 with bandwidths, Hz).
/// Values are configuration data loosely based on German long vowels.
pub fn base_female_profile() -> SpeakerProfile {
    const TABLE: [(Vowel, [[f64; 2]; 4]); 8] = [
        (
            Vowel::I,
            [
                [302.0, 87.0],
                [2407.0, 100.0],
                [3097.0, 161.0],
                [4105.0, 196.0],
            ],
        ),
        (
            Vowel::Y,
            [
                [364.0, 76.0],
                [2392.0, 79.0],
                [3093.0, 159.0],
                [4183.0, 276.0],
            ],
        ),
        (
            Vowel::E,
            [
                [411.0, 57.0],
                [2385.0, 138.0],
                [3103.0, 142.0],
                [4221.0, 265.0],
            ],
        ),
        (
            Vowel::Oe,
            [
                [460.0, 120.0],
                [1546.0, 70.0],
                [2511.0, 160.0],
                [3916.0, 212.0],
            ],
        ),
        (
            Vowel::Eh,
            [
                [605.0, 93.0],
                [1620.0, 88.0],
                [2542.0, 128.0],
                [3875.0, 240.0],
            ],
        ),
        (
            Vowel::A,
            [
                [743.0, 49.0],
                [1650.0, 97.0],
                [2534.0, 155.0],
                [3920.0, 197.0],
            ],
        ),
        (
            Vowel::O,
            [
                [477.0, 57.0],
                [749.0, 52.0],
                [2600.0, 184.0],
                [3764.0, 209.0],
            ],
        ),
        (
            Vowel::U,
            [
                [326.0, 72.0],
                [824.0, 184.0],
                [2600.0, 146.0],
                [3763.0, 184.0],
            ],
        ),
    ];
    let formants = TABLE
        .iter()
        .map(|(v, rows)| {
            (
                *v,
                rows.iter().map(|[f, b]| FormantSpec::new(*f, *b)).collect(),
            )
        })
        .collect();
    SpeakerProfile::new("base", formants).expect("built-in table is valid")
}

/// Relative formant jitter between the built-in speakers.
pub const SPEAKER_JITTER: f64 = 0.05;

/// The three built-in speakers `s1`, `s2`, `s3`: the base table with fixed-seed
/// ±5% formant jitter.
pub fn builtin_profiles() -> Vec<SpeakerProfile> {
    let base = base_female_profile();
    (1..=3u64)
        .map(|k| {
            base.jittered(format!("s{k}"), SPEAKER_JITTER, 0x5EED_0000 + k)
                .expect("jitter keeps formants ordered")
        })
        .collect()
}

/// Unit impulses at the sample nearest to each `k / f0`.
pub fn impulse_train(f0: f64, duration: f64, sample_rate: u32) -> Result<SampleBuffer> {
    let rate = sample_rate as f64;
    if !(f0 > 0.0 && f0 < rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "f0 {f0} Hz outside (0, {})",
            rate / 2.0
        )));
    }
    let n = (duration * rate).round();
    if !(n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s yields an empty buffer"
        )));
    }
    let n = n as usize;
    let mut samples = vec![0.0; n];
    let period = rate / f0;
    let mut k = 0usize;
    loop {
        let pos = (k as f64 * period).round() as usize;
        if pos >= n {
            break;
        }
        samples[pos] = 1.0;
        k += 1;
    }
    SampleBuffer::new(samples, sample_rate)
}

/// Passes `buffer` through one two-pole resonator per formant, in order.
///
/// Each stage is `y[n] = g x[n] + 2 r cos(theta) y[n-1] - r^2 y[n-2]` with
/// `r = exp(-pi B / fs)`, `theta = 2 pi F / fs` and `g` chosen so the stage
/// has unit magnitude response at `F`.
pub fn resonator_cascade(buffer: &SampleBuffer, formants: &[FormantSpec]) -> Result<SampleBuffer> {
    let rate = buffer.sample_rate();
    for f in formants {
        f.validate(rate)?;
    }
    let mut signal = buffer.samples().to_vec();
    for f in formants {
        let (g, a1, a2) = resonator_coefficients(*f, rate as f64);
        let (mut y1, mut y2) = (0.0, 0.0);
        for x in signal.iter_mut() {
            let y = g * *x + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            *x = y;
        }
    }
    SampleBuffer::new(signal, rate)
}

fn resonator_coefficients(f: FormantSpec, rate: f64) -> (f64, f64, f64) {
    let r = (-PI * f.bandwidth / rate).exp();
    let theta = 2.0 * PI * f.frequency / rate;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    // |1 - a1 e^{-i theta} - a2 e^{-2 i theta}|
    let re = 1.0 - a1 * theta.cos() - a2 * (2.0 * theta).cos();
    let im = a1 * theta.sin() + a2 * (2.0 * theta).sin();
    ((re * re + im * im).sqrt(), a1, a2)
}

/// A labelled, f0-verified stimulus.
#[derive(Debug, Clone, PartialEq)]
pub struct VowelToken {
    pub vowel: Vowel,
    pub speaker_id: String,
    pub target_f0: f64,
    pub measured_f0: f64,
    pub buffer: SampleBuffer,
}

/// RMS of synthesized tokens before they are written out.
pub const SYNTH_RMS: f64 = 0.1;

/// Default f0 search interval, wide enough for the whole singing range.
pub const F0_SEARCH_RANGE: (f64, f64) = (60.0, 1600.0);

/// Synthesized lead-in dropped from the start of every token, in seconds.
/// About ten decay constants of a 30 Hz bandwidth resonator, so tokens are
/// periodic from their first sample.
pub const SYNTH_PRE_ROLL: f64 = 0.1;

/// Half-width of the band-limited pulse kernel, in samples.
const PULSE_HALF_WIDTH: usize = 32;

/// Cutoff of the band-limited pulse kernel as a fraction of the sample rate.
const PULSE_CUTOFF: f64 = 0.45;

/// Pulse train with each pulse at its exact time `k / f0`, drawn as a
/// Blackman-windowed sinc band-limited at 0.45 fs and scaled to unit area,
/// minus its mean `f0 / fs`. Every period is identical up to the fractional
/// shift, so the spectrum holds only harmonic lines and no DC.
pub fn bandlimited_pulse_train(f0: f64, duration: f64, sample_rate: u32) -> Result<SampleBuffer> {
    let rate = sample_rate as f64;
    if !(f0 > 0.0 && f0 < rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "f0 {f0} Hz outside (0, {})",
            rate / 2.0
        )));
    }
    let n = (duration * rate).round();
    if !(n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s yields an empty buffer"
        )));
    }
    let n = n as usize;
    let half = PULSE_HALF_WIDTH as f64;
    let mut samples = vec![-f0 / rate; n];
    let period = rate / f0;
    let mut kernel = Vec::with_capacity(2 * PULSE_HALF_WIDTH + 2);
    let mut k = 0usize;
    loop {
        let t = k as f64 * period;
        if t >= n as f64 + half {
            break;
        }
        let first = (t - half).ceil();
        kernel.clear();
        let mut m = first;
        while m <= t + half {
            let u = m - t;
            let sinc = if u == 0.0 {
                2.0 * PULSE_CUTOFF
            } else {
                (2.0 * PI * PULSE_CUTOFF * u).sin() / (PI * u)
            };
            let w = 0.42 + 0.5 * (PI * u / half).cos() + 0.08 * (2.0 * PI * u / half).cos();
            kernel.push(sinc * w);
            m += 1.0;
        }
        let area: f64 = kernel.iter().sum();
        for (j, h) in kernel.iter().enumerate() {
            let idx = first + j as f64;
            if idx >= 0.0 && (idx as usize) < n {
                samples[idx as usize] += h / area;
            }
        }
        k += 1;
    }
    SampleBuffer::new(samples, sample_rate)
}

/// Synthesizes one vowel and verifies its f0 against the 5% gate.
///
/// The source is [`bandlimited_pulse_train`]; a lead-in of
/// `SYNTH_PRE_ROLL` is synthesized and dropped.
pub fn synthesize_vowel(
    vowel: Vowel,
    f0: f64,
    profile: &SpeakerProfile,
    duration: f64,
    sample_rate: u32,
) -> Result<VowelToken> {
    let formants = profile
        .formants
        .get(&vowel)
        .ok_or_else(|| Error::UnknownVowel(vowel.symbol().to_string()))?;
    let nyquist = sample_rate as f64 / 2.0;
    if !(f0 > 0.0 && f0 < nyquist) {
        return Err(Error::InvalidArgument(format!(
            "f0 {f0} Hz outside (0, {nyquist})"
        )));
    }
    if let Some(f) = formants.iter().find(|f| f.frequency >= nyquist) {
        return Err(Error::InvalidArgument(format!(
            "formant {} Hz at or above Nyquist {nyquist} Hz",
            f.frequency
        )));
    }
    let n_out = (duration * sample_rate as f64).round();
    if !(n_out >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s yields an empty buffer"
        )));
    }
    let n_pre = (SYNTH_PRE_ROLL * sample_rate as f64).round() as usize;
    let total = (n_pre as f64 + n_out) / sample_rate as f64;
    let source = bandlimited_pulse_train(f0, total, sample_rate)?;
    let filtered = resonator_cascade(&source, formants)?;
    let mut samples = filtered.samples().to_vec();
    samples.drain(..n_pre);
    let buffer = normalize_rms(&SampleBuffer::new(samples, sample_rate)?, SYNTH_RMS)?;
    let cell = format!("/{vowel}/ {} {f0} Hz", profile.speaker_id);
    let measured_f0 = match estimate_f0(&buffer, F0_SEARCH_RANGE) {
        Ok(m) => m,
        Err(Error::NoPeriodicity { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };
    verify_f0(&cell, measured_f0, f0)?;
    Ok(VowelToken {
        vowel,
        speaker_id: profile.speaker_id.clone(),
        target_f0: f0,
        measured_f0,
        buffer,
    })
}

/// Fails unless `measured` lies within 5% of `target`.
pub fn verify_f0(cell: &str, measured: f64, target: f64) -> Result<()> {
    if (measured - target).abs() / target <= F0_TOLERANCE {
        Ok(())
    } else {
        Err(Error::F0Verification {
            cell: cell.to_string(),
            measured,
            target,
        })
    }
}

/// Minimum peak normalized autocorrelation for a buffer to count as periodic.
pub const VOICING_THRESHOLD: f64 = 0.5;

/// Candidate peaks within this fraction of the best are preferred at the
/// shortest lag, which suppresses period-doubling errors.
const PEAK_PICK_FRACTION: f64 = 0.95;

/// Low-pass cutoff applied before autocorrelation, relative to the top of
/// the search range.
const PRE_FILTER_RATIO: f64 = 1.25;

/// Two cascaded second-order Butterworth low-pass sections.
fn low_pass(x: &[f64], cutoff: f64, rate: f64) -> Vec<f64> {
    let w0 = 2.0 * std::f64::consts::PI * cutoff / rate;
    let alpha = w0.sin() / std::f64::consts::SQRT_2;
    let cw = w0.cos();
    let a0 = 1.0 + alpha;
    let b0 = (1.0 - cw) / 2.0 / a0;
    let b1 = (1.0 - cw) / a0;
    let a1 = -2.0 * cw / a0;
    let a2 = (1.0 - alpha) / a0;
    let mut out = x.to_vec();
    for _ in 0..2 {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in out.iter_mut() {
            let x0 = *v;
            let y0 = b0 * x0 + b1 * x1 + b0 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
    out
}

/// Estimates f0 from the normalized autocorrelation
/// `r(t) = sum x[n] x[n+t] / sqrt(sum x[n]^2 * sum x[n+t]^2)`
/// of the signal low-passed at 1.25 times the top of the search range.
///
/// Among local maxima with lags in the search range, the shortest lag whose
/// peak reaches 95% of the highest peak is taken and refined by parabolic
/// interpolation.
pub fn estimate_f0(buffer: &SampleBuffer, search_range: (f64, f64)) -> Result<f64> {
    let (f_lo, f_hi) = search_range;
    let rate = buffer.sample_rate() as f64;
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi < rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid f0 search range {f_lo}..{f_hi} Hz"
        )));
    }
    let n = buffer.len();
    let needed = (3.0 * rate / f_lo).ceil() as usize;
    if n < needed {
        return Err(Error::BufferTooShort {
            needed,
            available: n,
        });
    }
    let min_lag = ((rate / f_hi).floor() as usize).max(2);
    let max_lag = (rate / f_lo).ceil() as usize;
    let cutoff = (PRE_FILTER_RATIO * f_hi).min(0.45 * rate);
    let filtered = low_pass(buffer.samples(), cutoff, rate);
    let x = filtered.as_slice();

    // prefix sums of squares for the two overlap energies
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in x {
        cum.push(cum.last().unwrap() + v * v);
    }
    let lo = min_lag - 1;
    let hi = max_lag + 1;
    let r: Vec<f64> = (lo..=hi)
        .map(|lag| {
            let m = n - lag;
            let dot: f64 = x[..m].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            let e0 = cum[m];
            let e1 = cum[n] - cum[lag];
            let denom = (e0 * e1).sqrt();
            if denom > 0.0 {
                dot / denom
            } else {
                0.0
            }
        })
        .collect();
    let at = |lag: usize| r[lag - lo];

    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&lag| at(lag) >= at(lag - 1) && at(lag) > at(lag + 1))
        .collect();
    let best = peaks
        .iter()
        .map(|&l| at(l))
        .fold(f64::NEG_INFINITY, f64::max);
    if peaks.is_empty() || best < VOICING_THRESHOLD {
        return Err(Error::NoPeriodicity {
            peak: best.max(0.0),
            threshold: VOICING_THRESHOLD,
        });
    }
    let lag = *peaks
        .iter()
        .find(|&&l| at(l) >= PEAK_PICK_FRACTION * best)
        .expect("the best peak qualifies");
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(rate / (lag as f64 + shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_F0_GRID;

    #[test]
    fn impulse_count_matches_f0_times_duration() {
        let buf = impulse_train(100.0, 1.0, 44_100).unwrap();
        assert_eq!(buf.len(), 44_100);
        assert_eq!(buf.samples().iter().filter(|&&x| x == 1.0).count(), 100);
    }

    #[test]
    fn impulse_train_rejects_bad_input() {
        assert!(impulse_train(100.0, 0.0, 44_100).is_err());
        assert!(impulse_train(0.0, 1.0, 44_100).is_err());
        assert!(impulse_train(30_000.0, 1.0, 44_100).is_err());
    }

    #[test]
    fn impulse_train_f0_via_estimator() {
        let buf = impulse_train(220.0, 0.5, 44_100).unwrap();
        let f0 = estimate_f0(&buf, F0_SEARCH_RANGE).unwrap();
        assert!((f0 - 220.0).abs() / 220.0 < 0.01, "{f0}");
    }

    #[test]
    fn bandlimited_train_is_periodic_with_zero_mean() {
        // 441 Hz at 44.1 kHz: exactly 100 samples per period
        let buf = bandlimited_pulse_train(441.0, 0.2, 44_100).unwrap();
        let x = buf.samples();
        for n in 100..x.len() - 200 {
            assert!((x[n + 100] - x[n]).abs() < 1e-12, "sample {n}");
        }
        let mean = x[100..1100].iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 1e-12, "{mean}");
    }

    #[test]
    fn bandlimited_train_places_fractional_pulses() {
        // 988 Hz: 44.635 samples per period; the peak of pulse k sits
        // within half a sample of k * period
        let buf = bandlimited_pulse_train(988.0, 0.1, 44_100).unwrap();
        let x = buf.samples();
        let period = 44_100.0 / 988.0;
        for k in 2..50 {
            let t = k as f64 * period;
            let lo = t.floor() as usize - 2;
            let peak = (lo..lo + 5).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
            assert!(
                (peak as f64 - t).abs() <= 0.5,
                "pulse {k} at {peak}, expected {t}"
            );
        }
        let f0 = estimate_f0(&buf, F0_SEARCH_RANGE).unwrap();
        assert!((f0 - 988.0).abs() / 988.0 < 0.005, "{f0}");
        assert!(bandlimited_pulse_train(0.0, 0.1, 44_100).is_err());
        assert!(bandlimited_pulse_train(100.0, 0.0, 44_100).is_err());
    }

    #[test]
    fn empty_cascade_is_identity() {
        let buf = SampleBuffer::new(vec![1.0, 0.5, -0.25, 0.0], 8000).unwrap();
        assert_eq!(resonator_cascade(&buf, &[]).unwrap(), buf);
    }

    #[test]
    fn cascade_rejects_formant_above_nyquist() {
        let buf = SampleBuffer::new(vec![1.0; 16], 8000).unwrap();
        assert!(resonator_cascade(&buf, &[FormantSpec::new(5000.0, 100.0)]).is_err());
        assert!(resonator_cascade(&buf, &[FormantSpec::new(500.0, 0.0)]).is_err());
    }

    #[test]
    fn resonator_has_unit_gain_at_center() {
        let f = FormantSpec::new(1234.0, 90.0);
        let rate = 44_100.0;
        let (g, a1, a2) = resonator_coefficients(f, rate);
        let w = 2.0 * PI * f.frequency / rate;
        // H(e^{iw}) = g / (1 - a1 e^{-iw} - a2 e^{-2iw}), evaluated directly
        let re = 1.0 - a1 * w.cos() - a2 * (2.0 * w).cos();
        let im = a1 * w.sin() + a2 * (2.0 * w).sin();
        let mag = g / (re * re + im * im).sqrt();
        assert!((mag - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sine_440_estimate() {
        let rate = 44_100;
        let buf = SampleBuffer::new(
            (0..rate / 2)
                .map(|i| (2.0 * PI * 440.0 * i as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
        .unwrap();
        let f0 = estimate_f0(&buf, F0_SEARCH_RANGE).unwrap();
        assert!((f0 - 440.0).abs() < 4.4, "{f0}");
    }

    #[test]
    fn impulse_train_988_estimate() {
        let buf = impulse_train(988.0, 0.25, 44_100).unwrap();
        let f0 = estimate_f0(&buf, F0_SEARCH_RANGE).unwrap();
        assert!((f0 - 988.0).abs() < 9.88, "{f0}");
    }

    #[test]
    fn white_noise_has_no_periodicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let buf = SampleBuffer::new(
            (0..22_050)
                .map(|_| 2.0 * rng.random::<f64>() - 1.0)
                .collect(),
            44_100,
        )
        .unwrap();
        assert!(matches!(
            estimate_f0(&buf, F0_SEARCH_RANGE),
            Err(Error::NoPeriodicity { .. })
        ));
    }

    #[test]
    fn estimator_needs_three_periods() {
        let buf = SampleBuffer::new(vec![0.1; 1000], 44_100).unwrap();
        assert!(matches!(
            estimate_f0(&buf, (60.0, 1600.0)),
            Err(Error::BufferTooShort { .. })
        ));
    }

    #[test]
    fn synthesized_a_at_220_passes_gate() {
        let profile = &builtin_profiles()[0];
        let tok = synthesize_vowel(Vowel::A, 220.0, profile, 0.5, 44_100).unwrap();
        assert!((tok.measured_f0 - 220.0).abs() / 220.0 <= 0.05);
        assert_eq!(tok.buffer.len(), 22_050);
        assert_eq!(tok.speaker_id, "s1");
    }

    #[test]
    fn synthesis_is_deterministic() {
        let profile = &builtin_profiles()[1];
        let a = synthesize_vowel(Vowel::Oe, 587.0, profile, 0.3, 44_100).unwrap();
        let b = synthesize_vowel(Vowel::Oe, 587.0, profile, 0.3, 44_100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimator_within_one_percent_on_grid() {
        for profile in builtin_profiles() {
            for v in Vowel::ALL {
                for &f0 in &DEFAULT_F0_GRID {
                    let tok = synthesize_vowel(v, f0, &profile, 0.5, 44_100).unwrap();
                    let err = (tok.measured_f0 - f0).abs() / f0;
                    assert!(
                        err <= 0.01,
                        "/{v}/ {} {f0}: {}",
                        profile.speaker_id(),
                        tok.measured_f0
                    );
                }
            }
        }
    }

    #[test]
    fn builtin_profiles_differ_but_stay_close_to_base() {
        let base = base_female_profile();
        let profiles = builtin_profiles();
        assert_eq!(profiles.len(), 3);
        assert_ne!(profiles[0], profiles[1]);
        for p in &profiles {
            for v in Vowel::ALL {
                for (a, b) in p.formants(v).iter().zip(base.formants(v)) {
                    assert!((a.frequency / b.frequency - 1.0).abs() <= SPEAKER_JITTER + 1e-12);
                    assert_eq!(a.bandwidth, b.bandwidth);
                }
            }
        }
    }

    #[test]
    fn profile_toml_round_trip_and_validation() {
        let p = &builtin_profiles()[2];
        let text = p.to_toml_string();
        assert_eq!(&SpeakerProfile::from_toml_str(&text).unwrap(), p);

        let missing =
            "speaker_id = \"x\"\n[vowels]\ni = [[300, 60], [2500, 90], [3300, 150], [4300, 200]]\n";
        assert!(SpeakerProfile::from_toml_str(missing).is_err());

        let mut formants = BTreeMap::new();
        for v in Vowel::ALL {
            formants.insert(v, vec![FormantSpec::new(500.0, 50.0); 4]);
        }
        assert!(SpeakerProfile::new("x", formants).is_err());
    }
}
