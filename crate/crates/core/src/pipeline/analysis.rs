//! Pipeline stages: synthesis, ingestion, analysis and spectra export.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Averaging, RunConfig};
use super::io::{fmt_f64, write_csv, write_text};
use super::manifest::{CorpusManifest, ManifestEntry};
use crate::auditory::{
    excitation_pattern, make_filterbank, normalize_spectrum, CochleaScaledSpectrum, Filterbank,
    MiddleEarWeighting,
};
use crate::error::{Error, Result};
use crate::geometry::{
    alignment_residual, axis_ratio, classical_mds, on_convex_hull, orient_reference,
    pairwise_distances, procrustes_align, DistanceMatrix, MdsEmbedding,
};
use crate::signal::{read_wav, write_wav, Conditioning, WavEncoding};
use crate::stats::{
    pairwise_f0_tests, piecewise_fit, summarize_by_cluster, summarize_distances,
    within_cluster_distances, DistanceObservation, DistanceSummary, PairwiseComparisons,
    PiecewiseFit, SpectrumCell,
};
use crate::synth::{estimate_f0, synthesize_vowel, verify_f0, F0_SEARCH_RANGE};
use crate::vowel::Vowel;

/// Folder under the output directory that holds the synthesized corpus.
pub const CORPUS_DIR: &str = "corpus";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const RESULTS_FILE: &str = "results.json";
pub const REPORT_FILE: &str = "report.txt";

/// Vowels anchoring the orientation of the reference embedding and the
/// corner check: front, back and low.
pub const POINT_VOWELS: [Vowel; 3] = [Vowel::I, Vowel::U, Vowel::A];

/// Hull membership tolerance, relative to the embedding's frontness range.
const HULL_TOLERANCE: f64 = 1e-9;

/// File-name fragment for an f0 value.
pub fn f0_tag(f0: f64) -> String {
    format!("{f0}")
}

/// Synthesizes the full corpus into `<output_dir>/corpus` and writes its
/// manifest last. Every failing f0 check is reported together.
pub fn cmd_synthesize(config: &RunConfig) -> Result<CorpusManifest> {
    config.validate()?;
    let profiles = config.profiles()?;
    let mut jobs = Vec::new();
    for p in &profiles {
        for &f0 in &config.grid {
            for v in Vowel::ALL {
                jobs.push((p, f0, v));
            }
        }
    }
    let results: Vec<Result<_>> = jobs
        .par_iter()
        .map(|&(p, f0, v)| synthesize_vowel(v, f0, p, config.token_seconds, config.sample_rate))
        .collect();
    let mut tokens = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => tokens.push(t),
            Err(Error::F0Verification {
                cell,
                measured,
                target,
            }) => failures.push(format!(
                "{cell}: measured {measured:.2} Hz, target {target} Hz"
            )),
            Err(e) => return Err(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::F0VerificationBatch(failures));
    }

    let dir = config.output_dir.join(CORPUS_DIR);
    let entries: Vec<ManifestEntry> = tokens
        .iter()
        .map(|t| ManifestEntry {
            path: format!(
                "{}_{}_{}.wav",
                t.speaker_id,
                t.vowel.code(),
                f0_tag(t.target_f0)
            )
            .into(),
            vowel: t.vowel,
            speaker_id: t.speaker_id.clone(),
            target_f0: t.target_f0,
        })
        .collect();
    tokens
        .par_iter()
        .zip(&entries)
        .try_for_each(|(t, e)| write_wav(dir.join(&e.path), &t.buffer, WavEncoding::Float32))?;
    let manifest = CorpusManifest::new(entries, config.sample_rate, &dir);
    manifest.write(dir.join(MANIFEST_FILE))?;
    log::info!(
        "synthesized {} tokens into {}",
        manifest.entries.len(),
        dir.display()
    );
    Ok(manifest)
}

/// A token after conditioning and spectral analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub vowel: Vowel,
    pub speaker_id: String,
    pub target_f0: f64,
    pub measured_f0: f64,
}

/// Shared ingestion state for one manifest.
pub struct Ingest {
    conditioning: Conditioning,
    filterbank: Filterbank,
    weighting: MiddleEarWeighting,
}

impl Ingest {
    pub fn new(config: &RunConfig, sample_rate: u32) -> Result<Self> {
        Ok(Self {
            conditioning: config.conditioning(),
            filterbank: make_filterbank(&config.filterbank, sample_rate)?,
            weighting: config.weighting()?,
        })
    }

    /// Reads, conditions, f0-checks and analyzes one token.
    pub fn token(
        &self,
        manifest: &CorpusManifest,
        entry: &ManifestEntry,
    ) -> Result<(TokenRecord, CochleaScaledSpectrum)> {
        let path = manifest.resolve(entry);
        let raw = read_wav(&path)?;
        if raw.sample_rate() != manifest.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "{}: sample rate {} Hz, manifest says {} Hz",
                entry.cell(),
                raw.sample_rate(),
                manifest.sample_rate
            )));
        }
        let conditioned = self.conditioning.apply(&raw).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", entry.cell())),
            Error::Silent => Error::Degenerate(format!("{} is silent", entry.cell())),
            other => other,
        })?;
        let measured = match estimate_f0(&conditioned, F0_SEARCH_RANGE) {
            Ok(f) => f,
            Err(Error::NoPeriodicity { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        verify_f0(&entry.cell(), measured, entry.target_f0)?;
        let spectrum = excitation_pattern(&conditioned, &self.filterbank, &self.weighting)?;
        Ok((
            TokenRecord {
                vowel: entry.vowel,
                speaker_id: entry.speaker_id.clone(),
                target_f0: entry.target_f0,
                measured_f0: measured,
            },
            normalize_spectrum(&spectrum),
        ))
    }

    /// Runs [`Ingest::token`] over `entries` in parallel, collecting every
    /// f0 failure before giving up.
    pub fn tokens(
        &self,
        manifest: &CorpusManifest,
        entries: &[&ManifestEntry],
    ) -> Result<Vec<(TokenRecord, SpectrumCell)>> {
        let results: Vec<Result<_>> = entries
            .par_iter()
            .map(|e| self.token(manifest, e))
            .collect();
        let mut out = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok((rec, spectrum)) => {
                    let cell = SpectrumCell {
                        vowel: rec.vowel,
                        speaker_id: rec.speaker_id.clone(),
                        f0: rec.target_f0,
                        spectrum,
                    };
                    out.push((rec, cell));
                }
                Err(Error::F0Verification {
                    cell,
                    measured,
                    target,
                }) => failures.push(format!(
                    "{cell}: measured {measured:.2} Hz, target {target} Hz"
                )),
                Err(e) => return Err(e),
            }
        }
        if failures.is_empty() {
            Ok(out)
        } else {
            Err(Error::F0VerificationBatch(failures))
        }
    }
}

/// The aligned group embedding at one f0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Embedding {
    pub f0: f64,
    pub embedding: MdsEmbedding,
    pub range_dim1: f64,
    pub range_dim2: f64,
    pub axis_ratio: f64,
    /// squared-coordinate residual to the reference frame after alignment
    pub alignment_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerEmbedding {
    pub speaker_id: String,
    pub f0: f64,
    pub embedding: MdsEmbedding,
    pub axis_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullCheck {
    pub f0: f64,
    pub vowel: Vowel,
    pub on_hull: bool,
}

/// Everything downstream consumers need, serialized as `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResults {
    /// optional wall-clock stamp, the only non-deterministic field
    pub generated_at: Option<String>,
    pub config: RunConfig,
    pub grid: Vec<f64>,
    pub speakers: Vec<String>,
    pub tokens: Vec<TokenRecord>,
    pub embeddings: Vec<F0Embedding>,
    pub speaker_embeddings: Vec<SpeakerEmbedding>,
    pub observations: Vec<DistanceObservation>,
    pub summaries: Vec<DistanceSummary>,
    pub cluster_summaries: Vec<DistanceSummary>,
    pub fit: PiecewiseFit,
    pub comparisons: PairwiseComparisons,
    pub hull: Vec<HullCheck>,
}

impl AnalysisResults {
    pub fn embedding_at(&self, f0: f64) -> Option<&F0Embedding> {
        self.embeddings.iter().find(|e| e.f0 == f0)
    }

    pub fn summary_at(&self, f0: f64) -> Option<&DistanceSummary> {
        self.summaries.iter().find(|s| s.f0 == f0)
    }
}

/// In-memory analysis output, including the bulky intermediate data that
/// goes to CSV but not into the results bundle.
pub struct Analysis {
    pub results: AnalysisResults,
    pub cells: Vec<SpectrumCell>,
    /// group distance matrix per f0, ascending
    pub matrices: Vec<(f64, DistanceMatrix)>,
}

fn labels() -> Vec<String> {
    Vowel::ALL.iter().map(|v| v.symbol().to_string()).collect()
}

fn cells_at<'a>(
    cells: &'a [SpectrumCell],
    f0: f64,
    speaker: Option<&str>,
) -> Vec<&'a SpectrumCell> {
    Vowel::ALL
        .iter()
        .flat_map(|&v| {
            cells.iter().filter(move |c| {
                c.vowel == v && c.f0 == f0 && speaker.is_none_or(|s| c.speaker_id == s)
            })
        })
        .collect()
}

fn speaker_matrix(cells: &[SpectrumCell], f0: f64, speaker: &str) -> Result<DistanceMatrix> {
    let spectra: Vec<&CochleaScaledSpectrum> = cells_at(cells, f0, Some(speaker))
        .into_iter()
        .map(|c| &c.spectrum)
        .collect();
    pairwise_distances(labels(), &spectra)
}

fn group_matrix(
    cells: &[SpectrumCell],
    f0: f64,
    speakers: &[String],
    averaging: Averaging,
) -> Result<DistanceMatrix> {
    match averaging {
        Averaging::Spectra => {
            let averaged = Vowel::ALL
                .iter()
                .map(|&v| {
                    let group: Vec<&CochleaScaledSpectrum> = cells
                        .iter()
                        .filter(|c| c.vowel == v && c.f0 == f0)
                        .map(|c| &c.spectrum)
                        .collect();
                    CochleaScaledSpectrum::average(&group).map(|s| normalize_spectrum(&s))
                })
                .collect::<Result<Vec<_>>>()?;
            pairwise_distances(labels(), &averaged.iter().collect::<Vec<_>>())
        }
        Averaging::Distmat => {
            let per: Vec<DistanceMatrix> = speakers
                .iter()
                .map(|s| speaker_matrix(cells, f0, s))
                .collect::<Result<_>>()?;
            DistanceMatrix::average(&per)
        }
    }
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix time {secs}")
}

/// Runs the analysis chain on the spectra of a validated manifest.
pub fn analyze_cells(
    config: &RunConfig,
    grid: &[f64],
    speakers: &[String],
    tokens: Vec<TokenRecord>,
    cells: Vec<SpectrumCell>,
) -> Result<Analysis> {
    if !grid.contains(&config.reference_f0) {
        return Err(Error::MissingCells(vec![format!(
            "reference f0 {} Hz is not in the corpus grid",
            config.reference_f0
        )]));
    }

    let matrices: Vec<(f64, DistanceMatrix)> = grid
        .par_iter()
        .map(|&f0| group_matrix(&cells, f0, speakers, config.averaging).map(|m| (f0, m)))
        .collect::<Result<_>>()?;
    let raw: Vec<MdsEmbedding> = matrices
        .par_iter()
        .map(|(_, m)| classical_mds(m, 2))
        .collect::<Result<_>>()?;
    let ref_idx = grid
        .iter()
        .position(|&f| f == config.reference_f0)
        .expect("checked above");
    let [front, back, low] = POINT_VOWELS.map(|v| v.symbol());
    let reference = orient_reference(&raw[ref_idx], front, back, low)?;

    let mut embeddings = Vec::with_capacity(grid.len());
    for (&f0, e) in grid.iter().zip(&raw) {
        let aligned = if f0 == config.reference_f0 {
            reference.clone()
        } else {
            procrustes_align(&reference, e)?
        };
        embeddings.push(F0Embedding {
            f0,
            range_dim1: aligned.range(0),
            range_dim2: aligned.range(1),
            axis_ratio: axis_ratio(&aligned)?,
            alignment_residual: alignment_residual(&reference, &aligned),
            embedding: aligned,
        });
    }

    let speaker_jobs: Vec<(&String, f64)> = speakers
        .iter()
        .flat_map(|s| grid.iter().map(move |&f| (s, f)))
        .collect();
    let speaker_embeddings: Vec<SpeakerEmbedding> = speaker_jobs
        .par_iter()
        .map(|&(s, f0)| {
            let e = classical_mds(&speaker_matrix(&cells, f0, s)?, 2)?;
            let aligned = procrustes_align(&reference, &e)?;
            Ok(SpeakerEmbedding {
                speaker_id: s.clone(),
                f0,
                axis_ratio: axis_ratio(&aligned).ok(),
                embedding: aligned,
            })
        })
        .collect::<Result<_>>()?;

    let hull_tol = HULL_TOLERANCE * reference.range(0).max(f64::MIN_POSITIVE);
    let hull = POINT_VOWELS
        .iter()
        .map(|&v| {
            Ok(HullCheck {
                f0: config.reference_f0,
                vowel: v,
                on_hull: on_convex_hull(&reference, v.symbol(), hull_tol)?,
            })
        })
        .collect::<Result<_>>()?;

    let observations = within_cluster_distances(&cells, &config.clusters)?;
    let summaries = summarize_distances(&observations);
    let cluster_summaries = summarize_by_cluster(&observations);
    let fit = piecewise_fit(&observations, config.breakpoint)?;
    let comparisons = pairwise_f0_tests(
        &observations,
        config.reference_f0,
        config.paired_test,
        config.q,
    )?;

    Ok(Analysis {
        results: AnalysisResults {
            generated_at: config.timestamp.then(timestamp),
            config: config.clone(),
            grid: grid.to_vec(),
            speakers: speakers.to_vec(),
            tokens,
            embeddings,
            speaker_embeddings,
            observations,
            summaries,
            cluster_summaries,
            fit,
            comparisons,
            hull,
        },
        cells,
        matrices,
    })
}

/// Ingests every token of the manifest at `manifest_path` and analyzes it.
pub fn analyze(manifest_path: &Path, config: &RunConfig) -> Result<Analysis> {
    config.validate()?;
    let manifest = CorpusManifest::read(manifest_path)?;
    manifest.validate_complete()?;
    let ingest = Ingest::new(config, manifest.sample_rate)?;
    let entries: Vec<&ManifestEntry> = manifest.entries.iter().collect();
    let (tokens, cells): (Vec<_>, Vec<_>) = ingest.tokens(&manifest, &entries)?.into_iter().unzip();
    analyze_cells(config, &manifest.grid, &manifest.speakers(), tokens, cells)
}

/// Analyzes a manifest and writes every output file into the configured
/// output directory. Nothing is written unless the whole analysis succeeds.
pub fn cmd_analyze(manifest_path: &Path, config: &RunConfig) -> Result<AnalysisResults> {
    let analysis = analyze(manifest_path, config)?;
    write_outputs(&config.output_dir, &analysis)?;
    Ok(analysis.results)
}

const SPECTRA_HEADER: [&str; 5] = ["vowel", "speaker", "f0", "center_hz", "level_db"];

fn spectra_rows<'a>(cells: impl IntoIterator<Item = &'a SpectrumCell>) -> Vec<Vec<String>> {
    cells
        .into_iter()
        .flat_map(|c| {
            c.spectrum
                .center_frequencies
                .iter()
                .zip(&c.spectrum.levels_db)
                .map(move |(&hz, &db)| {
                    vec![
                        c.vowel.symbol().to_string(),
                        c.speaker_id.clone(),
                        fmt_f64(c.f0),
                        fmt_f64(hz),
                        fmt_f64(db),
                    ]
                })
        })
        .collect()
}

fn embedding_rows(e: &MdsEmbedding) -> impl Iterator<Item = Vec<String>> + '_ {
    e.labels
        .iter()
        .zip(&e.coords)
        .map(|(l, c)| vec![l.clone(), fmt_f64(c[0]), fmt_f64(c[1])])
}

fn fit_rows(fit: &PiecewiseFit) -> Vec<Vec<String>> {
    let coef = |name: &str, est: f64, se: f64, p: f64| {
        vec![name.to_string(), fmt_f64(est), fmt_f64(se), fmt_f64(p)]
    };
    let param =
        |name: &str, est: f64| vec![name.to_string(), fmt_f64(est), String::new(), String::new()];
    let mut rows = vec![
        coef("beta0", fit.beta0, fit.se_beta0, fit.p_beta0),
        coef("beta1", fit.beta1, fit.se_beta1, fit.p_beta1),
        coef("beta2", fit.beta2, fit.se_beta2, fit.p_beta2),
        coef(
            "slope_above",
            fit.slope_above,
            fit.se_slope_above,
            fit.p_slope_above,
        ),
        param("breakpoint", fit.breakpoint),
        param("residual_variance", fit.residual_variance),
        param("intercept_variance", fit.intercept_variance),
        param("dof", fit.dof),
        param("n_obs", fit.n_obs as f64),
    ];
    for (s, u) in &fit.speaker_intercepts {
        rows.push(param(&format!("speaker_intercept:{s}"), *u));
    }
    rows
}

fn summary_rows(summaries: &[DistanceSummary]) -> Vec<Vec<String>> {
    summaries
        .iter()
        .map(|s| {
            vec![
                fmt_f64(s.f0),
                s.cluster.clone().unwrap_or_else(|| "all".into()),
                s.n.to_string(),
                fmt_f64(s.min),
                fmt_f64(s.q1),
                fmt_f64(s.median),
                fmt_f64(s.q3),
                fmt_f64(s.max),
            ]
        })
        .collect()
}

/// Writes the CSV tables, `results.json` and `report.txt` under `dir`.
pub fn write_outputs(dir: &Path, analysis: &Analysis) -> Result<()> {
    let r = &analysis.results;
    let spectra_dir = dir.join("spectra");
    let dist_dir = dir.join("distances");
    let mds_dir = dir.join("mds");

    for &f0 in &r.grid {
        let at: Vec<&SpectrumCell> = analysis.cells.iter().filter(|c| c.f0 == f0).collect();
        write_csv(
            spectra_dir.join(format!("spectra_{}.csv", f0_tag(f0))),
            &SPECTRA_HEADER,
            spectra_rows(at),
        )?;
    }
    for (f0, m) in &analysis.matrices {
        let mut header = vec!["label"];
        header.extend(m.labels().iter().map(String::as_str));
        write_csv(
            dist_dir.join(format!("distmat_{}.csv", f0_tag(*f0))),
            &header,
            m.labels().iter().zip(m.rows()).map(|(l, row)| {
                std::iter::once(l.clone())
                    .chain(row.iter().map(|&v| fmt_f64(v)))
                    .collect::<Vec<_>>()
            }),
        )?;
    }
    for e in &r.embeddings {
        write_csv(
            mds_dir.join(format!("mds_{}.csv", f0_tag(e.f0))),
            &["label", "dim1", "dim2"],
            embedding_rows(&e.embedding),
        )?;
    }
    write_csv(
        dir.join("mds_all.csv"),
        &["f0", "label", "dim1", "dim2"],
        r.embeddings.iter().flat_map(|e| {
            embedding_rows(&e.embedding).map(move |row| {
                std::iter::once(fmt_f64(e.f0))
                    .chain(row)
                    .collect::<Vec<_>>()
            })
        }),
    )?;
    write_csv(
        dir.join("mds_speakers.csv"),
        &["speaker", "f0", "label", "dim1", "dim2"],
        r.speaker_embeddings.iter().flat_map(|e| {
            embedding_rows(&e.embedding).map(move |row| {
                [e.speaker_id.clone(), fmt_f64(e.f0)]
                    .into_iter()
                    .chain(row)
                    .collect::<Vec<_>>()
            })
        }),
    )?;
    write_csv(
        dir.join("axis_ratio.csv"),
        &[
            "f0",
            "range_dim1",
            "range_dim2",
            "axis_ratio",
            "eigenvalue1",
            "eigenvalue2",
            "alignment_residual",
        ],
        r.embeddings.iter().map(|e| {
            vec![
                fmt_f64(e.f0),
                fmt_f64(e.range_dim1),
                fmt_f64(e.range_dim2),
                fmt_f64(e.axis_ratio),
                fmt_f64(e.embedding.eigenvalues[0]),
                fmt_f64(e.embedding.eigenvalues[1]),
                fmt_f64(e.alignment_residual),
            ]
        }),
    )?;
    write_csv(
        dir.join("observations.csv"),
        &["f0", "speaker", "cluster", "vowel1", "vowel2", "distance"],
        r.observations.iter().map(|o| {
            vec![
                fmt_f64(o.f0),
                o.speaker_id.clone(),
                o.cluster.clone(),
                o.pair.0.symbol().to_string(),
                o.pair.1.symbol().to_string(),
                fmt_f64(o.distance),
            ]
        }),
    )?;
    let summary_header = ["f0", "cluster", "n", "min", "q1", "median", "q3", "max"];
    write_csv(
        dir.join("summary.csv"),
        &summary_header,
        summary_rows(&r.summaries),
    )?;
    write_csv(
        dir.join("summary_by_cluster.csv"),
        &summary_header,
        summary_rows(&r.cluster_summaries),
    )?;
    write_csv(
        dir.join("piecewise_fit.csv"),
        &["coefficient", "estimate", "se", "p"],
        fit_rows(&r.fit),
    )?;
    let fdr = &r.comparisons.fdr;
    write_csv(
        dir.join("fdr.csv"),
        &[
            "comparison",
            "reference_f0",
            "f0",
            "n_pairs",
            "mean_difference",
            "statistic",
            "raw_p",
            "adjusted_p",
            "rejected",
        ],
        r.comparisons.comparisons.iter().enumerate().map(|(i, c)| {
            vec![
                format!("{} vs {}", f0_tag(c.reference_f0), f0_tag(c.f0)),
                fmt_f64(c.reference_f0),
                fmt_f64(c.f0),
                c.n_pairs.to_string(),
                fmt_f64(c.mean_difference),
                fmt_f64(c.statistic),
                fmt_f64(c.raw_p),
                fmt_f64(fdr.adjusted_p[i]),
                fdr.rejected[i].to_string(),
            ]
        }),
    )?;
    write_csv(
        dir.join("tokens.csv"),
        &["vowel", "speaker", "target_f0", "measured_f0"],
        r.tokens.iter().map(|t| {
            vec![
                t.vowel.symbol().to_string(),
                t.speaker_id.clone(),
                fmt_f64(t.target_f0),
                fmt_f64(t.measured_f0),
            ]
        }),
    )?;
    let json = serde_json::to_string_pretty(r)?;
    write_text(dir.join(RESULTS_FILE), &(json + "\n"))?;
    write_text(dir.join(REPORT_FILE), &super::report::render_report(r))?;
    Ok(())
}

/// Filter for [`cmd_spectra`]; an empty list matches everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selector {
    pub vowels: Vec<Vowel>,
    pub speakers: Vec<String>,
    pub f0s: Vec<f64>,
}

impl Selector {
    pub fn matches(&self, e: &ManifestEntry) -> bool {
        (self.vowels.is_empty() || self.vowels.contains(&e.vowel))
            && (self.speakers.is_empty() || self.speakers.contains(&e.speaker_id))
            && (self.f0s.is_empty() || self.f0s.contains(&e.target_f0))
    }
}

/// Computes normalized spectra for the selected cells and writes them as a
/// long-format CSV to `output`. Returns the cells in manifest order.
pub fn cmd_spectra(
    manifest_path: &Path,
    config: &RunConfig,
    selector: &Selector,
    output: &Path,
) -> Result<Vec<SpectrumCell>> {
    config.validate()?;
    let manifest = CorpusManifest::read(manifest_path)?;
    manifest.validate_complete()?;
    let entries: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| selector.matches(e))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptySelection);
    }
    let ingest = Ingest::new(config, manifest.sample_rate)?;
    let cells: Vec<SpectrumCell> = ingest
        .tokens(&manifest, &entries)?
        .into_iter()
        .map(|(_, c)| c)
        .collect();
    write_csv(output, &SPECTRA_HEADER, spectra_rows(&cells))?;
    Ok(cells)
}

/// Default location of the corpus manifest under an output directory.
pub fn default_manifest_path(output_dir: &Path) -> PathBuf {
    output_dir.join(CORPUS_DIR).join(MANIFEST_FILE)
}
