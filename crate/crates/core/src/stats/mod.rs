//! Within-cluster distance statistics.
//!
//! Distances between normalized spectra of vowels that share a cluster are
//! collected per speaker and f0, then modelled with a broken-stick mixed
//! regression ([`piecewise_fit`]) and compared pairwise against the lowest
//! f0 with FDR control ([`pairwise_f0_tests`]).

mod comparisons;
mod fdr;
mod regression;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use comparisons::{
    paired_t_test, pairwise_f0_tests, wilcoxon_signed_rank, Comparison, PairedTest,
    PairwiseComparisons, TestResult,
};
pub use fdr::{bh_fdr, FdrResult};
pub use regression::{piecewise_fit, PiecewiseFit, DEFAULT_BREAKPOINT};

use crate::auditory::CochleaScaledSpectrum;
use crate::error::{Error, Result};
use crate::geometry::euclidean_distance;
use crate::vowel::Vowel;

/// A named group of vowels whose mutual distances are tracked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterDef {
    pub name: String,
    pub members: Vec<Vowel>,
}

impl ClusterDef {
    pub fn new(name: impl Into<String>, members: Vec<Vowel>) -> Self {
        Self {
            name: name.into(),
            members,
        }
    }

    /// Unordered member pairs in listing order.
    pub fn pairs(&self) -> Vec<(Vowel, Vowel)> {
        let mut out = Vec::new();
        for (a, &va) in self.members.iter().enumerate() {
            for &vb in &self.members[a + 1..] {
                out.push((va, vb));
            }
        }
        out
    }
}

/// /i e y/, /ø ɛ a/ and /u o/.
pub fn default_clusters() -> Vec<ClusterDef> {
    vec![
        ClusterDef::new("cluster1", vec![Vowel::I, Vowel::E, Vowel::Y]),
        ClusterDef::new("cluster2", vec![Vowel::Oe, Vowel::Eh, Vowel::A]),
        ClusterDef::new("cluster3", vec![Vowel::U, Vowel::O]),
    ]
}

/// Checks that clusters have at least two distinct members, unique names and
/// no shared vowels.
pub fn validate_clusters(clusters: &[ClusterDef]) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut names = BTreeSet::new();
    for c in clusters {
        if !names.insert(c.name.as_str()) {
            return Err(Error::Config(format!(
                "cluster name '{}' used twice",
                c.name
            )));
        }
        if c.members.len() < 2 {
            return Err(Error::Config(format!(
                "cluster '{}' needs at least two vowels",
                c.name
            )));
        }
        for v in &c.members {
            if !seen.insert(*v) {
                return Err(Error::Config(format!(
                    "vowel /{v}/ appears in more than one cluster (or twice in '{}')",
                    c.name
                )));
            }
        }
    }
    Ok(())
}

/// One normalized spectrum with its design coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCell {
    pub vowel: Vowel,
    pub speaker_id: String,
    pub f0: f64,
    pub spectrum: CochleaScaledSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceObservation {
    pub f0: f64,
    pub speaker_id: String,
    pub cluster: String,
    pub pair: (Vowel, Vowel),
    pub distance: f64,
}

/// Distances for every within-cluster pair, for every speaker and f0 found
/// in `cells`. Fails with the coordinates of every missing cell.
pub fn within_cluster_distances(
    cells: &[SpectrumCell],
    clusters: &[ClusterDef],
) -> Result<Vec<DistanceObservation>> {
    validate_clusters(clusters)?;
    let mut index: HashMap<(&str, u64, Vowel), &CochleaScaledSpectrum> = HashMap::new();
    let mut speakers = BTreeSet::new();
    let mut f0s: Vec<f64> = Vec::new();
    for c in cells {
        index.insert(
            (c.speaker_id.as_str(), c.f0.to_bits(), c.vowel),
            &c.spectrum,
        );
        speakers.insert(c.speaker_id.as_str());
        if !f0s.contains(&c.f0) {
            f0s.push(c.f0);
        }
    }
    f0s.sort_by(f64::total_cmp);

    let mut missing = Vec::new();
    for s in &speakers {
        for &f0 in &f0s {
            for c in clusters {
                for v in &c.members {
                    if !index.contains_key(&(s, f0.to_bits(), *v)) {
                        missing.push(format!("(/{v}/, {s}, {f0} Hz)"));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }

    let mut out = Vec::new();
    for s in &speakers {
        for &f0 in &f0s {
            for c in clusters {
                for (a, b) in c.pairs() {
                    let pa = index[&(*s, f0.to_bits(), a)];
                    let pb = index[&(*s, f0.to_bits(), b)];
                    out.push(DistanceObservation {
                        f0,
                        speaker_id: s.to_string(),
                        cluster: c.name.clone(),
                        pair: (a, b),
                        distance: euclidean_distance(pa, pb)?,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Five-number-style summary of the distances at one f0 (Fig. 2 data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub f0: f64,
    /// `None` for the pooled summary over all clusters
    pub cluster: Option<String>,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(f0: f64, cluster: Option<String>, mut values: Vec<f64>) -> DistanceSummary {
    values.sort_by(f64::total_cmp);
    DistanceSummary {
        f0,
        cluster,
        n: values.len(),
        min: values[0],
        q1: quantile_sorted(&values, 0.25),
        median: quantile_sorted(&values, 0.5),
        q3: quantile_sorted(&values, 0.75),
        max: values[values.len() - 1],
    }
}

/// Per-f0 quartiles of all observations, ascending in f0.
pub fn summarize_distances(obs: &[DistanceObservation]) -> Vec<DistanceSummary> {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for o in obs {
        groups
            .entry(order_key(o.f0))
            .or_insert_with(|| (o.f0, Vec::new()))
            .1
            .push(o.distance);
    }
    groups
        .into_values()
        .map(|(f0, values)| summarize(f0, None, values))
        .collect()
}

/// Per-(f0, cluster) quartiles, ascending in f0 then cluster name.
pub fn summarize_by_cluster(obs: &[DistanceObservation]) -> Vec<DistanceSummary> {
    let mut groups: BTreeMap<(u64, String), (f64, Vec<f64>)> = BTreeMap::new();
    for o in obs {
        groups
            .entry((order_key(o.f0), o.cluster.clone()))
            .or_insert_with(|| (o.f0, Vec::new()))
            .1
            .push(o.distance);
    }
    groups
        .into_iter()
        .map(|((_, cluster), (f0, values))| summarize(f0, Some(cluster), values))
        .collect()
}

/// Key that sorts non-negative floats in numeric order.
fn order_key(f: f64) -> u64 {
    f.to_bits()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(vowel: Vowel, speaker: &str, f0: f64, level: f64) -> SpectrumCell {
        SpectrumCell {
            vowel,
            speaker_id: speaker.into(),
            f0,
            spectrum: CochleaScaledSpectrum {
                center_frequencies: vec![100.0, 200.0],
                levels_db: vec![level, -level],
                normalized: true,
            },
        }
    }

    fn full_grid(speakers: &[&str], f0s: &[f64]) -> Vec<SpectrumCell> {
        let mut cells = Vec::new();
        for s in speakers {
            for &f0 in f0s {
                for (k, v) in Vowel::ALL.iter().enumerate() {
                    cells.push(cell(*v, s, f0, k as f64));
                }
            }
        }
        cells
    }

    #[test]
    fn seven_pairs_per_cell() {
        let pairs: usize = default_clusters().iter().map(|c| c.pairs().len()).sum();
        assert_eq!(pairs, 7);
        let obs =
            within_cluster_distances(&full_grid(&["s1"], &[220.0]), &default_clusters()).unwrap();
        assert_eq!(obs.len(), 7);
    }

    #[test]
    fn full_design_has_210_observations() {
        let obs = within_cluster_distances(
            &full_grid(&["s1", "s2", "s3"], &crate::DEFAULT_F0_GRID),
            &default_clusters(),
        )
        .unwrap();
        assert_eq!(obs.len(), 210);
        assert!(obs.iter().all(|o| o.distance >= 0.0));
    }

    #[test]
    fn missing_cells_are_listed() {
        let mut cells = full_grid(&["s1", "s2"], &[220.0, 330.0]);
        cells.retain(|c| !(c.speaker_id == "s2" && c.f0 == 330.0 && c.vowel == Vowel::U));
        match within_cluster_distances(&cells, &default_clusters()) {
            Err(Error::MissingCells(m)) => {
                assert_eq!(m.len(), 1);
                assert!(m[0].contains("s2") && m[0].contains("330"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cluster_validation() {
        let overlapping = vec![
            ClusterDef::new("a", vec![Vowel::I, Vowel::E]),
            ClusterDef::new("b", vec![Vowel::E, Vowel::Y]),
        ];
        assert!(validate_clusters(&overlapping).is_err());
        assert!(validate_clusters(&[ClusterDef::new("a", vec![Vowel::I])]).is_err());
        assert!(validate_clusters(&default_clusters()).is_ok());
    }

    fn obs_at(f0: f64, values: &[f64]) -> Vec<DistanceObservation> {
        values
            .iter()
            .map(|&d| DistanceObservation {
                f0,
                speaker_id: "s".into(),
                cluster: "c".into(),
                pair: (Vowel::I, Vowel::E),
                distance: d,
            })
            .collect()
    }

    #[test]
    fn medians() {
        let s = summarize_distances(&obs_at(220.0, &[3.5]));
        assert_eq!(s[0].median, 3.5);
        let s = summarize_distances(&obs_at(220.0, &[7.0, 1.0, 2.0, 6.0, 3.0, 5.0, 4.0]));
        assert_eq!(s[0].median, 4.0);
        assert_eq!(s[0].q1, 2.5);
        assert_eq!(s[0].q3, 5.5);
        assert_eq!(s[0].n, 7);
    }

    #[test]
    fn summaries_sorted_by_f0() {
        let mut obs = obs_at(880.0, &[1.0]);
        obs.extend(obs_at(220.0, &[2.0]));
        obs.extend(obs_at(523.0, &[3.0]));
        let f0s: Vec<f64> = summarize_distances(&obs).iter().map(|s| s.f0).collect();
        assert_eq!(f0s, vec![220.0, 523.0, 880.0]);
        assert_eq!(summarize_by_cluster(&obs).len(), 3);
    }
}
