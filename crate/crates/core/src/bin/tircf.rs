use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tircf::eval::{ablation_configs, ablation_table, run_ope_with, EvalReport, SequenceAnnotation};
use tircf::features::Frame;
use tircf::gesr::{gesr_reconstruct, upsample};
use tircf::io::{
    emit_curves, load_config, load_dataset, load_frame, load_frames, load_sequence, override_key, render_overlays,
    save_gray, write_boxes, write_report, RunManifest,
};
use tircf::numerics::Field2D;
use tircf::tracker::{run_sequence, TrackerConfig};
use tircf::Error;

const USAGE: u8 = 1;
const DATA: u8 = 2;
const NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "tircf", version, about = "Thermal-infrared correlation-filter tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence and write its boxes.
    Track {
        #[arg(long)]
        sequence: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write one overlay PNG per frame.
        #[arg(long)]
        overlay: bool,
    },
    /// One-pass evaluation over a dataset.
    Eval {
        #[command(flatten)]
        data: Dataset,
        #[command(flatten)]
        common: Common,
        /// Only evaluate sequences carrying this attribute.
        #[arg(long)]
        attr: Option<String>,
    },
    /// Super-resolve a single image.
    Sr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        scale: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write the bicubic upsample and the reconstruction next to each other.
        #[arg(long)]
        side_by_side: bool,
    },
    /// Baseline, single-component and full configurations on one dataset.
    Ablate {
        #[command(flatten)]
        data: Dataset,
        #[command(flatten)]
        common: Common,
    },
    /// Precision and success as one config key varies.
    Sweep {
        #[command(flatten)]
        data: Dataset,
        #[command(flatten)]
        common: Common,
        /// Dotted key, e.g. `gesr.m`.
        #[arg(long)]
        param: String,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long)]
        values: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Dataset {
    #[arg(long)]
    dataset: PathBuf,
    /// Glob over sequence directory names; repeatable.
    #[arg(long = "filter")]
    filters: Vec<String>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownKey { .. } | Error::TypeMismatch { .. } | Error::InvalidConfig(_) | Error::InvalidScale(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Data(other),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Track { sequence, common, overlay } => track(&sequence, &common, overlay),
        Command::Eval { data, common, attr } => eval(&data, &common, attr.as_deref()),
        Command::Sr { input, scale, config, out, side_by_side } => sr(&input, scale, config.as_deref(), &out, side_by_side),
        Command::Ablate { data, common } => ablate(&data, &common),
        Command::Sweep { data, common, param, values } => sweep(&data, &common, &param, &values),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: a solver stopped on its iteration cap; results were written");
            ExitCode::from(NOT_CONVERGED)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(DATA)
        }
    }
}

fn config(path: Option<&Path>) -> Result<TrackerConfig, Failure> {
    Ok(match path {
        Some(p) if !p.exists() => return Err(Failure::Usage(format!("config file {} not found", p.display()))),
        Some(p) => load_config(p)?,
        None => TrackerConfig::default(),
    })
}

fn manifest(command: &str, cfg: &TrackerConfig, common: &Common, data: Option<&Dataset>) -> Result<(), Failure> {
    let mut m = RunManifest::new(command, cfg, &common.out)?;
    m.config_path = common.config.clone();
    if let Some(d) = data {
        m.dataset_root = Some(d.dataset.clone());
        m.sequence_filters = d.filters.clone();
    }
    m.write()?;
    Ok(())
}

fn track(dir: &Path, common: &Common, overlay: bool) -> Outcome {
    let cfg = config(common.config.as_deref())?;
    let seq = load_sequence(dir)?;
    let frames = load_frames(&seq.frame_paths)?;
    let init = seq.gt_boxes.first().copied().flatten().ok_or_else(|| {
        Failure::Data(Error::SequenceRead { name: seq.name.clone(), reason: "first frame has no valid ground truth".into() })
    })?;
    let results = run_sequence(&frames, &init, &cfg)?;
    let boxes: Vec<_> = results.iter().map(|r| r.bbox).collect();
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    write_boxes(&boxes, &common.out.join(format!("{}.txt", seq.name)))?;
    if overlay {
        render_overlays(&frames, &boxes, &seq.gt_boxes, &common.out.join("overlay"))?;
    }
    manifest("track", &cfg, common, None)?;
    Ok(results.iter().all(|r| r.converged))
}

fn dataset(data: &Dataset) -> Result<(Vec<SequenceAnnotation>, Vec<String>), Failure> {
    if !data.dataset.is_dir() {
        return Err(Failure::Data(Error::SequenceRead {
            name: data.dataset.display().to_string(),
            reason: "dataset directory not found".into(),
        }));
    }
    let (ok, failed) = load_dataset(&data.dataset, &data.filters)?;
    for (name, e) in &failed {
        log::warn!("skipping sequence {name}: {e}");
    }
    if ok.is_empty() {
        return Err(Failure::Data(Error::EmptyInput));
    }
    Ok((ok, failed.into_iter().map(|(n, _)| n).collect()))
}

fn evaluate(label: &str, seqs: &[SequenceAnnotation], unreadable: &[String], cfg: &TrackerConfig) -> Result<EvalReport, Failure> {
    let mut report = run_ope_with(label, seqs, cfg, |s| load_frames(&s.frame_paths))?;
    report.skipped.extend(unreadable.iter().cloned());
    report.skipped.sort();
    Ok(report)
}

fn eval(data: &Dataset, common: &Common, attr: Option<&str>) -> Outcome {
    let cfg = config(common.config.as_deref())?;
    let (mut seqs, unreadable) = dataset(data)?;
    if let Some(a) = attr {
        seqs.retain(|s| s.attributes.contains(a));
        if seqs.is_empty() {
            return Err(Failure::Data(Error::SequenceRead { name: a.into(), reason: "no sequence has this attribute".into() }));
        }
    }
    let label = common.config.as_deref().and_then(Path::file_stem).map_or("tracker".into(), |s| s.to_string_lossy().into_owned());
    let report = evaluate(&label, &seqs, &unreadable, &cfg)?;
    write_report(&report, &common.out)?;
    emit_curves(&report, &common.out)?;
    manifest("eval", &cfg, common, Some(data))?;
    print!("{}", report.to_table());
    Ok(report.converged)
}

fn sr(input: &Path, scale: usize, config_path: Option<&Path>, out: &Path, side_by_side: bool) -> Outcome {
    let mut cfg = config(config_path)?;
    cfg.gesr.scale = scale;
    cfg.gesr.validate()?;
    let frame: Frame = load_frame(input)?;
    let hr = gesr_reconstruct(&frame.pixels, &cfg.gesr)?;
    let image = if side_by_side {
        let before = upsample(&frame.pixels, scale)?;
        let (h, w) = hr.shape();
        Field2D::from_fn(h, 2 * w, |i, j| if j < w { before[(i, j)] } else { hr[(i, j - w)] })
    } else {
        hr
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    save_gray(out, &image)?;
    Ok(true)
}

fn ablate(data: &Dataset, common: &Common) -> Outcome {
    let base = config(common.config.as_deref())?;
    let (seqs, unreadable) = dataset(data)?;
    let mut reports = Vec::new();
    for (label, cfg) in ablation_configs(&base) {
        let report = evaluate(&label, &seqs, &unreadable, &cfg)?;
        write_report(&report, &common.out.join(&label))?;
        reports.push(report);
    }
    let table = ablation_table(&reports);
    std::fs::write(common.out.join("ablation.txt"), &table).map_err(Error::from)?;
    manifest("ablate", &base, common, Some(data))?;
    print!("{table}");
    Ok(reports.iter().all(|r| r.converged))
}

/// Sweep points as (text, value); the text keeps the decimals the user wrote.
fn sweep_values(spec: &str) -> Result<Vec<(String, f64)>, Failure> {
    let bad = || Failure::Usage(format!("cannot parse --values `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let decimals = parts.iter().map(|p| p.trim().split_once('.').map_or(0, |(_, d)| d.len())).max().unwrap_or(0);
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..n)
            .map(|k| {
                let text = format!("{:.*}", decimals, start + k as f64 * step);
                let v = text.parse().expect("formatted number");
                (text, v)
            })
            .collect());
    }
    spec.split(',').map(|p| Ok((p.trim().to_string(), num(p)?))).collect()
}

fn sweep(data: &Dataset, common: &Common, param: &str, values: &str) -> Outcome {
    let base = config(common.config.as_deref())?;
    let points = sweep_values(values)?;
    let (seqs, unreadable) = dataset(data)?;
    let mut csv = format!("{param},precision,success,normalized_precision,mean_iou\n");
    let mut converged = true;
    for (text, v) in points {
        let cfg = override_key(&base, param, toml::Value::Float(v))?;
        let report = evaluate(&format!("{param}={text}"), &seqs, &unreadable, &cfg)?;
        let s = &report.overall;
        csv.push_str(&format!(
            "{text},{},{},{},{}\n",
            s.precision_at_20, s.success_auc, s.normalized_precision, s.mean_iou
        ));
        converged &= report.converged;
    }
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    std::fs::write(common.out.join("sweep.csv"), &csv).map_err(Error::from)?;
    manifest("sweep", &base, common, Some(data))?;
    print!("{csv}");
    Ok(converged)
}
