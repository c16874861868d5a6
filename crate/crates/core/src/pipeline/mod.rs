//! End-to-end orchestration behind the command-line tool.

mod analysis;
mod config;
pub mod io;
mod manifest;
mod report;

pub use analysis::{
    analyze, analyze_cells, cmd_analyze, cmd_spectra, cmd_synthesize, default_manifest_path,
    f0_tag, write_outputs, Analysis, AnalysisResults, F0Embedding, HullCheck, Ingest, Selector,
    SpeakerEmbedding, TokenRecord, CORPUS_DIR, MANIFEST_FILE, POINT_VOWELS, REPORT_FILE,
    RESULTS_FILE,
};
pub use config::{Averaging, RunConfig};
pub use manifest::{CorpusManifest, ManifestEntry, MANIFEST_HEADER};
pub use report::{cmd_report, qualitative_checks, render_report, Check};
