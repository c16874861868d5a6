use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vowelspace::pipeline::{
    cmd_analyze, cmd_report, cmd_spectra, cmd_synthesize, default_manifest_path, Averaging,
    RunConfig, Selector,
};
use vowelspace::{Error, ErrorKind, Vowel};

/// Cochlea-scaled vowel spectra and perceptual vowel spaces across f0.
#[derive(Debug, Parser)]
#[command(name = "vowelspace", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// comma-separated f0 grid in Hz
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// regression breakpoint in Hz
    #[arg(long, global = true, value_name = "HZ")]
    breakpoint: Option<f64>,
    /// FDR level
    #[arg(long, global = true, value_name = "LEVEL")]
    q: Option<f64>,
    #[arg(long = "fade-ms", global = true, value_name = "N")]
    fade_ms: Option<f64>,
    #[arg(long = "segment-ms", global = true, value_name = "N")]
    segment_ms: Option<f64>,
    /// pool speakers on spectra or on distance matrices
    #[arg(long, global = true, value_parser = ["spectra", "distmat"])]
    averaging: Option<String>,
    /// middle-ear weighting table (frequency, dB)
    #[arg(long = "middle-ear", global = true, value_name = "PATH")]
    middle_ear: Option<PathBuf>,
    /// leave the wall-clock stamp out of the results
    #[arg(long = "no-timestamp", global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the corpus and its manifest into <out>/corpus
    Synthesize,
    /// Analyze a corpus manifest and write all result tables
    Analyze {
        /// defaults to <out>/corpus/manifest.csv
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
    },
    /// Export cochlea-scaled spectra of selected tokens
    Spectra {
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// comma-separated vowels (IPA or i,y,e,oe,eh,a,o,u)
        #[arg(long, value_delimiter = ',')]
        vowels: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        speakers: Vec<String>,
        #[arg(long = "f0", value_delimiter = ',')]
        f0s: Vec<f64>,
        /// defaults to <out>/spectra_selection.csv
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Re-render <out>/report.txt from <out>/results.json
    Report,
    /// Synthesize, analyze and report in one go
    Run,
}

fn build_config(o: &Overrides) -> Result<RunConfig, Error> {
    let mut c = match &o.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &o.out {
        c.output_dir = v.clone();
    }
    if let Some(v) = &o.grid {
        c.grid = v.clone();
        if !c.grid.contains(&c.reference_f0) {
            if let Some(min) = c.grid.iter().copied().reduce(f64::min) {
                c.reference_f0 = min;
            }
        }
    }
    if let Some(v) = o.breakpoint {
        c.breakpoint = v;
    }
    if let Some(v) = o.q {
        c.q = v;
    }
    if let Some(v) = o.fade_ms {
        c.fade_ms = v;
    }
    if let Some(v) = o.segment_ms {
        c.segment_ms = v;
    }
    if let Some(v) = &o.averaging {
        c.averaging = v.parse::<Averaging>()?;
    }
    if let Some(v) = &o.middle_ear {
        c.middle_ear = Some(v.clone());
    }
    if o.no_timestamp {
        c.timestamp = false;
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = build_config(&cli.overrides)?;
    let out = config.output_dir.clone();
    match cli.command {
        Command::Synthesize => {
            let m = cmd_synthesize(&config)?;
            println!(
                "wrote {} tokens and {}",
                m.entries.len(),
                default_manifest_path(&out).display()
            );
        }
        Command::Analyze { manifest } => {
            let manifest = manifest.unwrap_or_else(|| default_manifest_path(&out));
            let r = cmd_analyze(&manifest, &config)?;
            println!(
                "analyzed {} tokens; results in {}",
                r.tokens.len(),
                out.display()
            );
        }
        Command::Spectra {
            manifest,
            vowels,
            speakers,
            f0s,
            output,
        } => {
            let manifest = manifest.unwrap_or_else(|| default_manifest_path(&out));
            let selector = Selector {
                vowels: vowels
                    .iter()
                    .map(|v| v.parse::<Vowel>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?,
                speakers,
                f0s,
            };
            let output = output.unwrap_or_else(|| out.join("spectra_selection.csv"));
            let cells = cmd_spectra(&manifest, &config, &selector, &output)?;
            println!("wrote {} spectra to {}", cells.len(), output.display());
        }
        Command::Report => {
            print!("{}", cmd_report(&out)?);
        }
        Command::Run => {
            cmd_synthesize(&config)?;
            cmd_analyze(&default_manifest_path(&out), &config)?;
            print!("{}", cmd_report(&out)?);
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
