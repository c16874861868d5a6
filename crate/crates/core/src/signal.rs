//! Audio container, WAV I/O and stimulus conditioning.
//!
//! Conditioning follows the order segment -> fade -> normalize: the center
//! of each token is cut out, both ends are ramped with raised cosines, and
//! the result is scaled to a fixed RMS.

use std::f64::consts::PI;
use std::io::{BufWriter, Seek, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    /// Number of samples covering `seconds`, rounded to the nearest sample.
    pub fn samples_for(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate as f64).round() as usize
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Sample encoding used when writing WAV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

/// Reads a 16-bit PCM or 32-bit float WAV file. Integer samples are scaled
/// by 1/32768; for multi-channel files only the first channel is kept.
pub fn read_wav(path: impl AsRef<Path>) -> Result<SampleBuffer> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    if channels > 1 {
        warn!(
            "{} has {} channels, using channel 0 only",
            path.display(),
            channels
        );
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };
    let samples: Vec<f64> = interleaved.into_iter().step_by(channels).collect();
    if samples.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }
    SampleBuffer::new(samples, spec.sample_rate)
}

fn wav_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "format not supported".into(),
        },
        other => Error::MalformedWav {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Writes a mono WAV file atomically (temp file in the target directory,
/// then rename).
pub fn write_wav(
    path: impl AsRef<Path>,
    buffer: &SampleBuffer,
    encoding: WavEncoding,
) -> Result<()> {
    let path = path.as_ref();
    crate::pipeline::io::atomic_write(path, |file| encode_wav(file, buffer, encoding))
}

pub(crate) fn encode_wav<W: Write + Seek>(
    writer: W,
    buffer: &SampleBuffer,
    encoding: WavEncoding,
) -> std::io::Result<()> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: bits,
        sample_format: format,
    };
    let to_io = |e: hound::Error| match e {
        hound::Error::IoError(e) => e,
        other => std::io::Error::other(other.to_string()),
    };
    let mut writer = hound::WavWriter::new(BufWriter::new(writer), spec).map_err(to_io)?;
    for &x in buffer.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).map_err(to_io)?;
            }
            WavEncoding::Float32 => writer.write_sample(x as f32).map_err(to_io)?,
        }
    }
    writer.finalize().map_err(to_io)
}

/// Cuts `duration` seconds out of the middle of `buffer`.
///
/// With `N` input samples and `n = round(duration * rate)` the segment starts
/// at `floor((N - n) / 2)`.
pub fn extract_center_segment(buffer: &SampleBuffer, duration: f64) -> Result<SampleBuffer> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "segment duration must be positive, got {duration}"
        )));
    }
    let n = buffer.samples_for(duration);
    let total = buffer.len();
    if n > total || n == 0 {
        return Err(Error::BufferTooShort {
            needed: n.max(1),
            available: total,
        });
    }
    let start = (total - n) / 2;
    Ok(buffer.with_samples(buffer.samples[start..start + n].to_vec()))
}

/// Applies raised-cosine onset and offset ramps of `fade_duration` seconds.
///
/// The onset ramp over `m` samples is `0.5 * (1 - cos(pi * k / (m - 1)))`,
/// running from exactly 0 to exactly 1; the offset ramp is its mirror image.
pub fn apply_raised_cosine_fades(
    buffer: &SampleBuffer,
    fade_duration: f64,
) -> Result<SampleBuffer> {
    if !(fade_duration.is_finite() && fade_duration >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fade duration must be non-negative, got {fade_duration}"
        )));
    }
    let m = buffer.samples_for(fade_duration);
    let total = buffer.len();
    if 2 * m > total {
        return Err(Error::InvalidArgument(format!(
            "fades of {m} samples each do not fit in a buffer of {total} samples"
        )));
    }
    let mut out = buffer.samples.clone();
    if m == 0 {
        return Ok(buffer.with_samples(out));
    }
    for k in 0..m {
        let w = if m == 1 {
            0.0
        } else {
            0.5 * (1.0 - (PI * k as f64 / (m - 1) as f64).cos())
        };
        out[k] *= w;
        out[total - 1 - k] *= w;
    }
    Ok(buffer.with_samples(out))
}

/// Scales the buffer so its RMS equals `target_rms`.
pub fn normalize_rms(buffer: &SampleBuffer, target_rms: f64) -> Result<SampleBuffer> {
    if !(target_rms.is_finite() && target_rms > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target RMS must be positive, got {target_rms}"
        )));
    }
    let current = buffer.rms();
    if current == 0.0 || !current.is_finite() {
        return Err(Error::Silent);
    }
    Ok(buffer.scaled(target_rms / current))
}

/// Conditioning parameters applied to every token before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub segment_seconds: f64,
    pub fade_seconds: f64,
    pub target_rms: f64,
}

impl Default for Conditioning {
    fn default() -> Self {
        Self {
            segment_seconds: 0.250,
            fade_seconds: 0.010,
            target_rms: 0.1,
        }
    }
}

impl Conditioning {
    /// Segment, fade, then normalize.
    pub fn apply(&self, buffer: &SampleBuffer) -> Result<SampleBuffer> {
        let segment = extract_center_segment(buffer, self.segment_seconds)?;
        let faded = apply_raised_cosine_fades(&segment, self.fade_seconds)?;
        normalize_rms(&faded, self.target_rms)
    }
}
