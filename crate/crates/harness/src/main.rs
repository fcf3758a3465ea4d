use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sslrc_core::io::{read_manifest, read_wav, write_manifest, write_wav, RecordingManifest};
use sslrc_core::srp::export_map_sequence;
use sslrc_core::{Error, Result};
use sslrc_harness::dataset::{scene_entries, Analyzer, Dataset};
use sslrc_harness::files::{detect_file, list, load_dataset, map_records, stem};
use sslrc_harness::trials::{calibrate, calibration_seed, run_trials, CalibrationResult};
use sslrc_harness::{generate_dataset, write_regions, write_summary_csv, write_trials_csv, ExperimentPlan, TrialReport};

/// Sound source localization with calibrated prediction regions.
#[derive(Parser)]
#[command(name = "sslrc", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment plan (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the plan's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Where stored samples live. Without `--recordings` the dataset is
/// simulated in memory from the plan.
#[derive(Args)]
struct Samples {
    #[arg(long)]
    recordings: Option<PathBuf>,
    /// Defaults to the traces directory.
    #[arg(long)]
    maps: Option<PathBuf>,
    /// Defaults to the recordings directory.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render every scene of the plan to WAV plus a JSON manifest.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute per-iteration SRP-PHAT maps of recordings.
    Map {
        #[command(flatten)]
        common: Common,
        /// Directory of `scene_NNNNN.json` manifests.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run iterative detection on map-exchange files.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate thresholds on all samples of each experiment group.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        samples: Samples,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated calibration/test trials.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        samples: Samples,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write trial and summary CSVs, plus region dumps when samples are given.
    Report {
        #[command(flatten)]
        common: Common,
        /// Trial report from `evaluate`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        samples: Samples,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Outcome of a stage: number of samples that failed.
type Stage = Result<usize>;

fn load_plan(c: &Common) -> Result<ExperimentPlan> {
    let plan = ExperimentPlan::read(&c.config)?.with_seed(c.seed);
    plan.validate()?;
    Ok(plan)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    use std::io::Write;
    w.write_all(b"\n")?;
    Ok(())
}

fn simulate(plan: &ExperimentPlan, out: &Path) -> Stage {
    fs::create_dir_all(out)?;
    let entries = scene_entries(plan)?;
    let failures: Vec<bool> = entries
        .par_iter()
        .map(|e| {
            let name = stem(e.index);
            let r = e.spec.render().and_then(|sig| {
                write_wav(&out.join(format!("{name}.wav")), &sig)?;
                write_manifest(
                    &out.join(format!("{name}.json")),
                    &RecordingManifest {
                        wav: format!("{name}.wav"),
                        sample_rate: sig.sample_rate(),
                        channels: sig.num_channels(),
                        seed: e.spec.seed,
                        truths: e.spec.sources.iter().map(|&d| d.into()).collect(),
                        t60_ms: e.spec.t60_label_ms,
                        snr_db: e.spec.snr_db,
                    },
                )
            });
            if let Err(err) = &r {
                warn!("{name}: {err}");
            }
            r.is_err()
        })
        .collect();
    info!("simulated {} scenes", entries.len());
    Ok(failures.iter().filter(|&&f| f).count())
}

fn map(plan: &ExperimentPlan, input: &Path, out: &Path) -> Stage {
    fs::create_dir_all(out)?;
    let analyzer = Analyzer::new(plan)?;
    let inputs = list(input, ".json")?;
    let failed = inputs
        .par_iter()
        .map(|(i, path)| {
            let r = read_manifest(path).and_then(|m| {
                let sig = read_wav(&input.join(&m.wav))?;
                let trace = analyzer.trace(&sig)?;
                export_map_sequence(&out.join(format!("{}.slmx", stem(*i))), &map_records(&trace, &analyzer))
            });
            if let Err(e) = &r {
                warn!("{}: {e}", path.display());
            }
            r.is_err()
        })
        .filter(|&f| f)
        .count();
    Ok(failed)
}

fn detect(plan: &ExperimentPlan, input: &Path, out: &Path) -> Stage {
    fs::create_dir_all(out)?;
    let analyzer = Analyzer::new(plan)?;
    let inputs = list(input, ".slmx")?;
    let failed = inputs
        .par_iter()
        .map(|(i, path)| {
            let name = format!("{}.slmx", stem(*i));
            let r = detect_file(path, &analyzer)
                .and_then(|t| write_json(&out.join(format!("{}.trace.json", stem(*i))), &t.summary(Some(name))));
            if let Err(e) = &r {
                warn!("{}: {e}", path.display());
            }
            r.is_err()
        })
        .filter(|&f| f)
        .count();
    Ok(failed)
}

fn dataset(plan: &ExperimentPlan, s: &Samples) -> Result<Dataset> {
    match &s.recordings {
        None => generate_dataset(plan),
        Some(rec) => {
            let traces = s.traces.clone().unwrap_or_else(|| rec.clone());
            let maps = s.maps.clone().unwrap_or_else(|| traces.clone());
            load_dataset(plan, rec, &maps, &traces)
        }
    }
}

#[derive(Serialize)]
struct GroupCalibration {
    group: String,
    #[serde(flatten)]
    result: CalibrationResult,
}

fn calibrate_all(plan: &ExperimentPlan, s: &Samples, out: &Path) -> Stage {
    let data = dataset(plan, s)?;
    let prep = sslrc_harness::trials::Prepared::new(plan, &data)?;
    let results = data
        .groups(plan.dataset.mix_rooms)
        .into_iter()
        .enumerate()
        .map(|(g, (label, idx))| {
            Ok(GroupCalibration { group: label, result: calibrate(plan, &prep, &idx, calibration_seed(plan.seed, g))? })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(out, &results)?;
    Ok(data.failures.len())
}

fn evaluate(plan: &ExperimentPlan, s: &Samples, out: &Path) -> Stage {
    let data = dataset(plan, s)?;
    let report = run_trials(plan, &data)?;
    write_json(out, &report)?;
    Ok(data.failures.len())
}

fn report(plan: &ExperimentPlan, input: &Path, s: &Samples, out: &Path) -> Stage {
    let report: TrialReport = serde_json::from_str(&fs::read_to_string(input)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", input.display())))?;
    fs::create_dir_all(out)?;
    write_trials_csv(&report, BufWriter::new(File::create(out.join("trials.csv"))?))?;
    write_summary_csv(&report, BufWriter::new(File::create(out.join("summary.csv"))?))?;
    if s.recordings.is_some() {
        let data = dataset(plan, s)?;
        write_regions(&report, &data, &plan.analysis.grid()?, BufWriter::new(File::create(out.join("regions.json"))?))?;
        return Ok(data.failures.len());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    let result = match &cli.command {
        Command::Simulate { common, out } => load_plan(common).and_then(|p| simulate(&p, out)),
        Command::Map { common, input, out } => load_plan(common).and_then(|p| map(&p, input, out)),
        Command::Detect { common, input, out } => load_plan(common).and_then(|p| detect(&p, input, out)),
        Command::Calibrate { common, samples, out } => load_plan(common).and_then(|p| calibrate_all(&p, samples, out)),
        Command::Evaluate { common, samples, out } => load_plan(common).and_then(|p| evaluate(&p, samples, out)),
        Command::Report { common, input, samples, out } => load_plan(common).and_then(|p| report(&p, input, samples, out)),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            warn!("{n} samples failed");
            ExitCode::from(2)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
