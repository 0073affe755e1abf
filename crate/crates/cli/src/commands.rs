use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use degrade_core::dataset::{generate_dataset, GenerateOptions, TaskSpec, MANIFEST_NAME};
use degrade_core::infolab::sweep::{evaluate, make_instance, run_sweep, Check, EncoderKind, Instance, SweepOptions, SweepSummary};
use degrade_core::io::{read_png, write_png};
use degrade_core::ops::{self, CorruptionMode, Severity};
use degrade_core::schedule::{
    corrupt_frame, frame_stream, read_trace, schedule_trace, severity_band, write_trace, ScheduleState, TraceHeader,
    TraceStats, TransitionMatrix,
};
use degrade_core::{DegradationConfig, Image8, ENGINE_VERSION};

use crate::montage::contact_sheet;
use crate::{GlobalOpts, TheoryViolation};

const OUT_DIR_ENV: &str = "DEGRADE_OUT_DIR";

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// 8-bit RGB PNG to corrupt.
    pub input: PathBuf,
    /// Where to write the corrupted PNG.
    pub output: PathBuf,
    #[arg(long)]
    pub mode: CorruptionMode,
    #[arg(long)]
    pub severity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Mode-specific derived parameters echoed into run logs.
fn operator_params(cfg: &DegradationConfig, mode: CorruptionMode, severity: Severity) -> serde_json::Value {
    match mode {
        CorruptionMode::Rain => json!({ "streaks": ops::streak_count(severity, &cfg.rain) }),
        CorruptionMode::Snow => json!({ "flakes": ops::flake_count(severity, &cfg.snow) }),
        CorruptionMode::Haze => json!({ "alpha": cfg.haze.alpha_scale * severity.value() }),
        CorruptionMode::MotionBlur => json!({ "kernel_length": ops::motion_blur_length(severity, &cfg.motion_blur) }),
        CorruptionMode::GaussianNoise => json!({ "sigma": ops::noise_sigma(severity, &cfg.gaussian_noise) }),
        CorruptionMode::LowLight => json!({
            "brightness": ops::brightness_factor(severity, &cfg.low_light),
            "sigma": ops::low_light_sigma(severity, &cfg.low_light),
        }),
        CorruptionMode::Jpeg => json!({ "jpeg_quality": ops::jpeg_quality(severity, &cfg.jpeg) }),
    }
}

pub fn corrupt(args: &CorruptArgs, global: &GlobalOpts) -> Result<()> {
    let cfg = global.load_config()?;
    let severity = Severity::new(args.severity)?;
    let frame = read_png(&args.input)?;
    // Same stream a one-frame episode would use for its first frame.
    let mut rng = frame_stream(args.seed, 0);
    let out = ops::apply(&cfg, args.mode, &frame, severity, &mut rng)?;
    write_png(&args.output, &out)?;
    let log = json!({
        "command": "corrupt",
        "engine_version": ENGINE_VERSION,
        "seed": args.seed,
        "config_hash": cfg.hash(),
        "mode": args.mode,
        "mode_code": args.mode.code(),
        "severity": severity.value(),
        "rng_draws": rng.counter(),
        "params": operator_params(&cfg, args.mode, severity),
        "output": args.output,
    });
    println!("{log}");
    Ok(())
}

fn out_dir(given: &Option<PathBuf>) -> Result<PathBuf> {
    match given {
        Some(p) => Ok(p.clone()),
        None => bail!("no output directory: pass --out or set {OUT_DIR_ENV}"),
    }
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Directory of PNG frames, processed in file-name order.
    pub frames: PathBuf,
    /// Output directory (defaults to $DEGRADE_OUT_DIR).
    #[arg(long, short, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Self-transition probability of the sticky chain.
    #[arg(long)]
    pub ps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a contact sheet for every N frames.
    #[arg(long, value_name = "N")]
    pub montage: Option<usize>,
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn stream(args: &StreamArgs, global: &GlobalOpts) -> Result<()> {
    let mut cfg = global.load_config()?;
    if let Some(ps) = args.ps {
        cfg.schedule.sticky_prob = ps;
    }
    cfg.validate()?;
    let out = out_dir(&args.out)?;
    if args.montage == Some(0) {
        bail!(degrade_core::Error::InvalidValue("--montage needs a positive frame count".into()));
    }
    let paths = list_pngs(&args.frames)?;
    if paths.is_empty() {
        bail!(degrade_core::Error::Missing(format!("no PNG frames in {}", args.frames.display())));
    }
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let matrix = TransitionMatrix::sticky(cfg.schedule.sticky_prob)?;
    let trace = schedule_trace(ScheduleState::start(args.seed, &cfg), paths.len(), &matrix, &cfg);
    let frames: Vec<Image8> = paths
        .par_iter()
        .zip(&trace)
        .map(|(path, record)| -> Result<Image8> {
            let frame = read_png(path)?;
            let img = corrupt_frame(&frame, record, &cfg, args.seed)?;
            let name = path.file_name().expect("listed files have names");
            write_png(&out.join(name), &img)?;
            Ok(img)
        })
        .collect::<Result<_>>()?;

    let trace_path = out.join("trace.jsonl");
    let file = fs::File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    write_trace(BufWriter::new(file), &TraceHeader::new(args.seed, Some(cfg.schedule.sticky_prob), &cfg), &trace)?;

    let mut sheets = 0;
    if let Some(n) = args.montage {
        for (i, chunk) in frames.chunks(n).enumerate() {
            let refs: Vec<&Image8> = chunk.iter().collect();
            match contact_sheet(&refs) {
                Some(sheet) => {
                    write_png(&out.join(format!("montage_{i:03}.png")), &sheet)?;
                    sheets += 1;
                }
                None => log::warn!("frames {}..{} differ in size; montage skipped", i * n, i * n + chunk.len()),
            }
        }
    }
    let stats = TraceStats::from_records(&trace, &cfg);
    println!(
        "{}",
        json!({
            "command": "stream",
            "engine_version": ENGINE_VERSION,
            "seed": args.seed,
            "sticky_prob": cfg.schedule.sticky_prob,
            "config_hash": cfg.hash(),
            "frames": frames.len(),
            "trace": trace_path,
            "montages": sheets,
            "self_transition_rate": stats.self_transition_rate,
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Frame root: `<root>/<task>/<idx>_clean.png` and `<idx>_uniformbg.png`.
    pub root: PathBuf,
    /// Output directory (defaults to $DEGRADE_OUT_DIR).
    #[arg(long, short, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Task as NAME:TOLERANCE:R,G,B (background colour); repeatable.
    #[arg(long = "task", value_name = "SPEC", required = true)]
    pub tasks: Vec<TaskSpec>,
    /// Comma-separated corruption modes (default: all seven).
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<CorruptionMode>,
    /// Samples per (task, mode) pair.
    #[arg(long)]
    pub n: Option<usize>,
    /// Probability that a sample lands in the training split.
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn gen_dataset(args: &DatasetArgs, global: &GlobalOpts) -> Result<()> {
    let mut cfg = global.load_config()?;
    if let Some(n) = args.n {
        cfg.dataset.samples_per_pair = n;
    }
    if let Some(r) = args.split_ratio {
        cfg.dataset.train_ratio = r;
    }
    cfg.validate()?;
    let modes = if args.modes.is_empty() { CorruptionMode::ALL.to_vec() } else { args.modes.clone() };
    let opts = GenerateOptions {
        root: args.root.clone(),
        out: out_dir(&args.out)?,
        tasks: args.tasks.clone(),
        modes,
        samples_per_pair: cfg.dataset.samples_per_pair,
        split_ratio: cfg.dataset.train_ratio,
        seed: args.seed,
        jobs: global.jobs,
    };
    let manifest = generate_dataset(&opts, &cfg)?;
    println!(
        "{}",
        json!({
            "command": "gen-dataset",
            "engine_version": ENGINE_VERSION,
            "seed": args.seed,
            "config_hash": cfg.hash(),
            "samples": manifest.records.len(),
            "train_fraction": manifest.train_fraction(),
            "manifest": opts.out.join(MANIFEST_NAME),
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    /// Largest alphabet size for S, K and X.
    #[arg(long, default_value_t = 4)]
    pub max_alphabet: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// random, identity or constant.
    #[arg(long, default_value = "random")]
    pub encoder: EncoderKind,
    /// Comma-separated subset of contamination, fano, anchor, ib.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<Check>,
    /// Evaluate only this instance of the sweep (replay).
    #[arg(long)]
    pub instance_id: Option<u64>,
    /// Evaluate an instance previously dumped as JSON.
    #[arg(long, value_name = "FILE", conflicts_with = "instance_id")]
    pub load: Option<PathBuf>,
    /// Write the JSONL report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Directory for dumps of failing instances (defaults to $DEGRADE_OUT_DIR, then ".").
    #[arg(long, env = OUT_DIR_ENV)]
    pub dump_dir: Option<PathBuf>,
}

pub fn verify_theory(args: &TheoryArgs, _global: &GlobalOpts) -> Result<()> {
    let opts = SweepOptions {
        instances: args.instances,
        max_alphabet: args.max_alphabet,
        seed: args.seed,
        encoder: args.encoder,
        checks: args.only.clone(),
    };
    let results: Vec<(Instance, _)> = if let Some(path) = &args.load {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let inst: Instance = serde_json::from_reader(BufReader::new(file)).map_err(degrade_core::Error::from)?;
        let rep = evaluate(&inst, &opts.checks)?;
        vec![(inst, rep)]
    } else if let Some(id) = args.instance_id {
        opts.validate()?;
        let inst = make_instance(&opts, id)?;
        let rep = evaluate(&inst, &opts.checks)?;
        vec![(inst, rep)]
    } else {
        run_sweep(&opts)?.0
    };
    let reports: Vec<_> = results.iter().map(|(_, r)| r.clone()).collect();
    let summary = SweepSummary::from_reports(&reports);

    let mut sink: Box<dyn Write> = match &args.report {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    for r in &reports {
        writeln!(sink, "{}", serde_json::to_string(r)?)?;
    }
    writeln!(
        sink,
        "{}",
        json!({ "summary": summary, "seed": args.seed, "engine_version": ENGINE_VERSION, "encoder": args.encoder })
    )?;
    sink.flush()?;

    if summary.failing_instances > 0 {
        let dir = args.dump_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        for (inst, rep) in results.iter().filter(|(_, r)| !r.ok()) {
            let path = dir.join(format!("instance_{}_{}.json", inst.seed, inst.instance_id));
            fs::write(&path, serde_json::to_vec_pretty(inst)?)?;
            eprintln!(
                "instance {} failed {:?}; dumped to {} (replay: --seed {} --instance-id {} or --load {})",
                inst.instance_id,
                rep.violations,
                path.display(),
                inst.seed,
                inst.instance_id,
                path.display()
            );
        }
        return Err(TheoryViolation(format!("{} of {} instances failed", summary.failing_instances, summary.instances)).into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Trace written by `stream`.
    pub trace: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

pub fn stats(args: &StatsArgs, global: &GlobalOpts) -> Result<()> {
    let file = fs::File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let (header, records) = read_trace(BufReader::new(file))?;
    // Bands come from the config the trace was produced with, when recorded.
    let cfg = match (&header, &global.config) {
        (_, Some(_)) => global.load_config()?,
        (Some(h), None) => h.config.clone(),
        (None, None) => DegradationConfig::default(),
    };
    let stats = TraceStats::from_records(&records, &cfg);
    if args.json {
        println!("{}", serde_json::to_string(&json!({ "seed": header.as_ref().map(|h| h.seed), "stats": stats }))?);
        return Ok(());
    }
    let mut out = std::io::stdout().lock();
    if let Some(h) = &header {
        writeln!(out, "seed             {}", h.seed)?;
        writeln!(out, "config hash      {}", h.config_hash)?;
    }
    writeln!(out, "steps            {}", stats.steps)?;
    match stats.self_transition_rate {
        Some(r) => writeln!(out, "self-transition  {r:.4}")?,
        None => writeln!(out, "self-transition  n/a (fewer than 2 steps)")?,
    }
    writeln!(out, "segments         {}", stats.segments)?;
    writeln!(out, "mean segment     {:.4}", stats.mean_segment_length)?;
    writeln!(out, "band violations  {}", stats.band_violations)?;
    writeln!(out)?;
    writeln!(out, "{:<15} {:>8} {:>7}  {:<15}  severity histogram (10 bins)", "mode", "count", "freq", "band")?;
    for (mode, h) in CorruptionMode::ALL.iter().zip(&stats.severity_histograms) {
        let band = severity_band(*mode, &cfg);
        let bins: Vec<String> = h.counts.iter().map(u64::to_string).collect();
        writeln!(
            out,
            "{:<15} {:>8} {:>7.4}  [{:.3}, {:.3}]  {}",
            mode.name(),
            stats.mode_counts[mode.index()],
            stats.mode_marginals[mode.index()],
            band.min,
            band.max,
            bins.join(" ")
        )?;
    }
    Ok(())
}
