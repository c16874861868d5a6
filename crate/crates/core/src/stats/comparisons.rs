//! Paired comparisons of within-cluster distances against a reference f0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::fdr::{bh_fdr, FdrResult};
use super::DistanceObservation;
use crate::error::{Error, Result};
use crate::vowel::Vowel;

/// Test applied to the paired differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairedTest {
    #[default]
    PairedT,
    Wilcoxon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

/// Two-sided one-sample t-test of `diffs` against zero.
///
/// Zero-variance differences give p = 1 when their mean is zero and p = 0
/// otherwise.
pub fn paired_t_test(diffs: &[f64]) -> Result<TestResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if var.sqrt() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || var == 0.0 {
        let p = if mean.abs() <= 1e-14 * scale {
            1.0
        } else {
            0.0
        };
        return Ok(TestResult {
            statistic: if p == 1.0 {
                0.0
            } else {
                mean.signum() * f64::INFINITY
            },
            p,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist =
        StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(TestResult {
        statistic: t,
        p: (2.0 * dist.sf(t.abs())).min(1.0),
    })
}

/// Two-sided Wilcoxon signed-rank test on `diffs`.
///
/// Zero differences are dropped. Without ties and with at most 30 nonzero
/// differences the exact null distribution is used; otherwise the normal
/// approximation with tie and continuity corrections. The statistic is `W+`.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<TestResult> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p: 1.0,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && nonzero[order[j + 1]].abs() == nonzero[order[k]].abs() {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &i in &order[k..=j] {
            ranks[i] = avg;
        }
        let t = (j - k + 1) as f64;
        tie_term += t * t * t - t;
        k = j + 1;
    }
    let w_plus: f64 = (0..n).filter(|&i| nonzero[i] > 0.0).map(|i| ranks[i]).sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;

    if tie_term == 0.0 && n <= 30 {
        // counts[s] = number of sign assignments with W+ = s
        let max_sum = n * (n + 1) / 2;
        let mut counts = vec![0f64; max_sum + 1];
        counts[0] = 1.0;
        for r in 1..=n {
            for s in (r..=max_sum).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w = w_plus.round() as usize;
        let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
        let upper: f64 = counts[w..].iter().sum::<f64>() / total;
        return Ok(TestResult {
            statistic: w_plus,
            p: (2.0 * lower.min(upper)).min(1.0),
        });
    }

    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return Ok(TestResult {
            statistic: w_plus,
            p: 1.0,
        });
    }
    let dev = w_plus - mean;
    let z = (dev.abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    Ok(TestResult {
        statistic: w_plus,
        p: (2.0 * normal.sf(z)).min(1.0),
    })
}

/// One reference-vs-f0 comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference_f0: f64,
    pub f0: f64,
    pub n_pairs: usize,
    /// mean of (reference - comparison) distances
    pub mean_difference: f64,
    pub statistic: f64,
    pub raw_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparisons {
    pub test: PairedTest,
    pub comparisons: Vec<Comparison>,
    pub fdr: FdrResult,
}

type PairKey = (String, String, Vowel, Vowel);

/// Compares the reference f0 against every other f0, pairing observations by
/// (speaker, cluster, vowel pair), then applies BH-FDR across the family.
pub fn pairwise_f0_tests(
    obs: &[DistanceObservation],
    reference_f0: f64,
    test: PairedTest,
    q: f64,
) -> Result<PairwiseComparisons> {
    let mut by_f0: BTreeMap<u64, (f64, BTreeMap<PairKey, f64>)> = BTreeMap::new();
    for o in obs {
        let key = (o.speaker_id.clone(), o.cluster.clone(), o.pair.0, o.pair.1);
        let slot = by_f0
            .entry(o.f0.to_bits())
            .or_insert_with(|| (o.f0, BTreeMap::new()));
        if slot.1.insert(key, o.distance).is_some() {
            return Err(Error::DuplicateCell(format!(
                "{} {} /{}/-/{}/ at {} Hz",
                o.speaker_id, o.cluster, o.pair.0, o.pair.1, o.f0
            )));
        }
    }
    let reference = by_f0
        .get(&reference_f0.to_bits())
        .map(|(_, m)| m.clone())
        .ok_or_else(|| Error::MissingCells(vec![format!("reference f0 {reference_f0} Hz")]))?;

    let mut comparisons = Vec::new();
    let mut missing = Vec::new();
    for (f0, cells) in by_f0.values() {
        if *f0 == reference_f0 {
            continue;
        }
        for key in reference.keys().filter(|k| !cells.contains_key(*k)) {
            missing.push(format!(
                "{} {} /{}/-/{}/ at {f0} Hz",
                key.0, key.1, key.2, key.3
            ));
        }
        for key in cells.keys().filter(|k| !reference.contains_key(*k)) {
            missing.push(format!(
                "{} {} /{}/-/{}/ at {reference_f0} Hz",
                key.0, key.1, key.2, key.3
            ));
        }
        let diffs: Vec<f64> = reference
            .iter()
            .filter_map(|(k, r)| cells.get(k).map(|c| r - c))
            .collect();
        if !missing.is_empty() {
            continue;
        }
        let result = match test {
            PairedTest::PairedT => paired_t_test(&diffs)?,
            PairedTest::Wilcoxon => wilcoxon_signed_rank(&diffs)?,
        };
        comparisons.push(Comparison {
            reference_f0,
            f0: *f0,
            n_pairs: diffs.len(),
            mean_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
            statistic: result.statistic,
            raw_p: result.p,
        });
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    let raw: Vec<f64> = comparisons.iter().map(|c| c.raw_p).collect();
    let fdr = bh_fdr(&raw, q)?;
    Ok(PairwiseComparisons {
        test,
        comparisons,
        fdr,
    })
}
