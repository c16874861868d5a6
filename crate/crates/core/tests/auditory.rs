use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use vowelspace::auditory::{
    erb_number, excitation_pattern, make_filterbank, normalize_spectrum, Filterbank,
    FilterbankSpec, MiddleEarWeighting, LEVEL_FLOOR_DB,
};
use vowelspace::signal::{extract_center_segment, normalize_rms};
use vowelspace::synth::{base_female_profile, synthesize_vowel};
use vowelspace::{SampleBuffer, Vowel, DEFAULT_F0_GRID};

const RATE: u32 = 44_100;

fn filterbank() -> &'static Filterbank {
    static FB: OnceLock<Filterbank> = OnceLock::new();
    FB.get_or_init(|| make_filterbank(&FilterbankSpec::default(), RATE).unwrap())
}

fn sine(freq: f64, seconds: f64) -> SampleBuffer {
    let n = (seconds * RATE as f64) as usize;
    let x = (0..n)
        .map(|k| 0.1 * (2.0 * PI * freq * k as f64 / RATE as f64).sin())
        .collect();
    SampleBuffer::new(x, RATE).unwrap()
}

fn vowel_segment(v: Vowel, f0: f64) -> SampleBuffer {
    let token = synthesize_vowel(v, f0, &base_female_profile(), 0.5, RATE).unwrap();
    let seg = extract_center_segment(&token.buffer, 0.25).unwrap();
    normalize_rms(&seg, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gain_shifts_every_channel_by_its_decibels(
        gain in 0.01f64..50.0,
        vowel in prop::sample::select(Vowel::ALL.to_vec()),
        f0 in prop::sample::select(DEFAULT_F0_GRID.to_vec()),
    ) {
        let x = vowel_segment(vowel, f0);
        let w = MiddleEarWeighting::default();
        let base = excitation_pattern(&x, filterbank(), &w).unwrap();
        let scaled = excitation_pattern(&x.scaled(gain), filterbank(), &w).unwrap();
        let shift = 20.0 * gain.log10();
        for (a, b) in base.levels_db.iter().zip(&scaled.levels_db) {
            prop_assert!((b - a - shift).abs() < 0.01, "{a} -> {b}, expected shift {shift}");
        }
        let na = normalize_spectrum(&base);
        let nb = normalize_spectrum(&scaled);
        for (a, b) in na.levels_db.iter().zip(&nb.levels_db) {
            prop_assert!((a - b).abs() < 0.01);
        }
    }
}

#[test]
fn tone_excites_the_channel_tuned_to_it() {
    let fb = filterbank();
    let centers = fb.center_frequencies();
    let spacing = (erb_number(centers[199]).unwrap() - erb_number(centers[0]).unwrap()) / 199.0;
    let flat = MiddleEarWeighting::flat();
    let mut f = 60.0;
    while f < 16_000.0 {
        let s = excitation_pattern(&sine(f, 0.25), fb, &flat).unwrap();
        let argmax = (0..s.len())
            .max_by(|&a, &b| s.levels_db[a].total_cmp(&s.levels_db[b]))
            .unwrap();
        let offset = (erb_number(centers[argmax]).unwrap() - erb_number(f).unwrap()).abs();
        assert!(offset <= spacing, "{f} Hz peaks at {} Hz", centers[argmax]);
        f *= 1.17;
    }
}

#[test]
fn levels_never_drop_below_floor() {
    let quiet = sine(1000.0, 0.1).scaled(1e-9);
    let s = excitation_pattern(&quiet, filterbank(), &MiddleEarWeighting::flat()).unwrap();
    assert!(s.levels_db.iter().all(|&l| l >= LEVEL_FLOOR_DB));
    assert!(s.levels_db.contains(&LEVEL_FLOOR_DB));
}

/// Variance across channels below 5 kHz of the normalized pattern,
/// averaged over the eight vowels.
fn low_band_variance(f0: f64) -> f64 {
    let fb = filterbank();
    let w = MiddleEarWeighting::default();
    let total: f64 = Vowel::ALL
        .iter()
        .map(|&v| {
            let s = normalize_spectrum(&excitation_pattern(&vowel_segment(v, f0), fb, &w).unwrap());
            let low: Vec<f64> = s
                .center_frequencies
                .iter()
                .zip(&s.levels_db)
                .filter(|(f, _)| **f < 5000.0)
                .map(|(_, l)| *l)
                .collect();
            let mean = low.iter().sum::<f64>() / low.len() as f64;
            low.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / low.len() as f64
        })
        .sum();
    total / Vowel::ALL.len() as f64
}

#[test]
fn sparse_harmonics_raise_low_band_ripple() {
    // resolved harmonics carve valleys between channels once f0 exceeds the
    // low-frequency filter bandwidths
    let v: Vec<f64> = DEFAULT_F0_GRID
        .iter()
        .map(|&f0| low_band_variance(f0))
        .collect();
    let low = v[0].max(v[1]);
    let high = v[7].min(v[8]).min(v[9]);
    assert!(high > 1.5 * low, "{v:?}");
}
