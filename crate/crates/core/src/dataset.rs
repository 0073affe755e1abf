//! Paired dataset generation.
//!
//! Each sample pairs a clean frame with a degraded copy, a binary foreground
//! mask obtained by chroma-keying a render of the same state against a
//! uniform background, and the agent-only composite (clean foreground on
//! black). Samples are written as PNGs plus one JSONL manifest.
//!
//! Input layout: `<root>/<task>/<idx>_clean.png` and `<idx>_uniformbg.png`.
//! Output layout: `<out>/<task>/<mode>/<i:05>_{degraded,clean,agent_only,mask}.png`
//! and `<out>/manifest.jsonl`.
//!
//! Per-sample randomness comes from the substream
//! `[DATASET, name_tag(task), mode code, i]`, drawn in the order: split,
//! severity jitter, operator. Results therefore do not depend on the number
//! of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{composite, denormalize, normalize, Image8, Mask, BLACK};
use crate::io::{mask_to_image, read_mask_png, read_png, write_png};
use crate::ops::{self, CorruptionMode, DegradationConfig, Severity};
use crate::rng::{derive_seed, domain, name_tag, RngStream};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl Split {
    /// Bernoulli(`train_ratio`) assignment; consumes one draw.
    pub fn draw(rng: &mut RngStream, train_ratio: f64) -> Split {
        if rng.bernoulli(train_ratio) {
            Split::Train
        } else {
            Split::Val
        }
    }
}

/// Uniform background colour and per-channel tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChromaKeyConfig {
    pub reference: [u8; 3],
    pub tolerance: u8,
}

/// Foreground where the Chebyshev distance to the reference exceeds the
/// tolerance.
pub fn chroma_key_mask(frame: &Image8, cfg: &ChromaKeyConfig) -> Mask {
    let data = frame
        .data()
        .chunks_exact(3)
        .map(|px| {
            let d = (0..3).map(|c| px[c].abs_diff(cfg.reference[c])).max().unwrap_or(0);
            if d > cfg.tolerance {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Mask::new(frame.height(), frame.width(), data).expect("binary mask")
}

/// A task: a named frame directory and its chroma-key settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub chroma: ChromaKeyConfig,
}

/// Parses `NAME:TOL:R,G,B`.
impl FromStr for TaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidValue(format!("task spec {s:?}: expected NAME:TOLERANCE:R,G,B"));
        let mut parts = s.splitn(3, ':');
        let (name, tol, rgb) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(t), Some(c)) if !n.is_empty() => (n, t, c),
            _ => return Err(bad()),
        };
        if name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::InvalidValue(format!("task name {name:?} is not a plain directory name")));
        }
        let tolerance = tol.trim().parse().map_err(|_| bad())?;
        let channels: Vec<u8> = rgb.split(',').map(|c| c.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let reference: [u8; 3] = channels.try_into().map_err(|_| bad())?;
        Ok(TaskSpec { name: name.to_string(), chroma: ChromaKeyConfig { reference, tolerance } })
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.chroma.reference;
        write!(f, "{}:{}:{r},{g},{b}", self.name, self.chroma.tolerance)
    }
}

/// Jitter band `[(1 - j) * base, (1 + j) * base]` clipped to `[0, 1]`.
pub fn jitter_band(mode: CorruptionMode, cfg: &DegradationConfig) -> (f64, f64) {
    let base = cfg.base_severity.get(mode);
    let j = cfg.dataset.jitter;
    (((1.0 - j) * base).max(0.0), ((1.0 + j) * base).min(1.0))
}

/// Jittered severity; consumes one draw.
pub fn draw_severity(mode: CorruptionMode, cfg: &DegradationConfig, rng: &mut RngStream) -> Severity {
    let (lo, hi) = jitter_band(mode, cfg);
    Severity::new(rng.uniform(lo, hi).clamp(lo, hi)).expect("jitter band lies in [0, 1]")
}

/// In-memory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub mode: CorruptionMode,
    pub severity: Severity,
    pub degraded: Image8,
    pub clean: Image8,
    pub agent_only: Image8,
    pub mask: Mask,
}

/// Clean foreground on black.
pub fn agent_only(clean: &Image8, mask: &Mask) -> Result<Image8> {
    denormalize(&composite(&normalize(clean), mask, BLACK)?)
}

/// Builds a sample with a jittered severity drawn from `rng`, followed by the
/// operator's own draws.
pub fn make_sample(
    clean: &Image8,
    uniform_bg: &Image8,
    mode: CorruptionMode,
    chroma: &ChromaKeyConfig,
    cfg: &DegradationConfig,
    rng: &mut RngStream,
) -> Result<Sample> {
    check_pair(clean, uniform_bg)?;
    let severity = draw_severity(mode, cfg, rng);
    make_sample_at(clean, uniform_bg, mode, severity, chroma, cfg, rng)
}

/// [`make_sample`] with a caller-chosen severity.
pub fn make_sample_at(
    clean: &Image8,
    uniform_bg: &Image8,
    mode: CorruptionMode,
    severity: Severity,
    chroma: &ChromaKeyConfig,
    cfg: &DegradationConfig,
    rng: &mut RngStream,
) -> Result<Sample> {
    check_pair(clean, uniform_bg)?;
    let degraded = ops::apply(cfg, mode, clean, severity, rng)?;
    let mask = chroma_key_mask(uniform_bg, chroma);
    let agent_only = agent_only(clean, &mask)?;
    Ok(Sample { mode, severity, degraded, clean: clean.clone(), agent_only, mask })
}

fn check_pair(clean: &Image8, uniform_bg: &Image8) -> Result<()> {
    if clean.same_shape(uniform_bg) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "clean {}x{} vs uniform background {}x{}",
            clean.height(),
            clean.width(),
            uniform_bg.height(),
            uniform_bg.width()
        )))
    }
}

/// One manifest row. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub sample_id: String,
    pub task_name: String,
    pub mode: CorruptionMode,
    pub mode_code: u8,
    pub severity: f64,
    pub split: Split,
    pub frame_index: u64,
    pub degraded: String,
    pub clean: String,
    pub agent_only: String,
    pub mask: String,
    pub seed: u64,
    pub rng_tags: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub engine_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: DegradationConfig,
    pub tasks: Vec<TaskSpec>,
    pub modes: Vec<CorruptionMode>,
    pub samples_per_pair: usize,
    pub split_ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: ManifestHeader,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub root: PathBuf,
    pub out: PathBuf,
    pub tasks: Vec<TaskSpec>,
    pub modes: Vec<CorruptionMode>,
    pub samples_per_pair: usize,
    pub split_ratio: f64,
    pub seed: u64,
    /// Worker threads; `0` lets the pool choose.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    pub fn train_fraction(&self) -> Option<f64> {
        let n = self.records.len();
        (n > 0).then(|| self.records.iter().filter(|r| r.split == Split::Train).count() as f64 / n as f64)
    }
}

/// Substream tags of sample `i` of `(task, mode)`.
pub fn sample_tags(task: &str, mode: CorruptionMode, i: u64) -> Vec<u64> {
    vec![domain::DATASET, name_tag(task), u64::from(mode.code()), i]
}

/// Clean / uniform-background frame pairs of a task directory, ordered by index.
pub fn load_frame_pairs(task_dir: &Path, height: usize, width: usize) -> Result<Vec<(u64, Image8, Image8)>> {
    let entries = fs::read_dir(task_dir).map_err(|e| Error::io(task_dir, e))?;
    let mut indices = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(task_dir, e))?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix("_clean.png")) else { continue };
        if let Ok(idx) = stem.parse::<u64>() {
            if indices.insert(idx, stem.to_string()).is_some() {
                return Err(Error::InvalidValue(format!("{}: duplicate frame index {idx}", task_dir.display())));
            }
        }
    }
    if indices.is_empty() {
        return Err(Error::Missing(format!("no <idx>_clean.png frames in {}", task_dir.display())));
    }
    let mut pairs = Vec::with_capacity(indices.len());
    for (idx, stem) in indices {
        let clean_path = task_dir.join(format!("{stem}_clean.png"));
        let bg_path = task_dir.join(format!("{stem}_uniformbg.png"));
        if !bg_path.is_file() {
            return Err(Error::Missing(format!("{} has no matching {}", clean_path.display(), bg_path.display())));
        }
        let clean = read_png(&clean_path)?;
        let bg = read_png(&bg_path)?;
        for (p, img) in [(&clean_path, &clean), (&bg_path, &bg)] {
            if img.height() != height || img.width() != width {
                return Err(Error::Shape(format!(
                    "{} is {}x{}, expected {height}x{width}",
                    p.display(),
                    img.height(),
                    img.width()
                )));
            }
        }
        pairs.push((idx, clean, bg));
    }
    Ok(pairs)
}

struct Job<'a> {
    task: &'a TaskSpec,
    mode: CorruptionMode,
    i: usize,
    frames: &'a [(u64, Image8, Image8)],
}

fn run_job(job: &Job<'_>, opts: &GenerateOptions, cfg: &DegradationConfig) -> Result<SampleRecord> {
    let tags = sample_tags(&job.task.name, job.mode, job.i as u64);
    let seed = derive_seed(opts.seed, &tags);
    let mut rng = RngStream::new(seed);
    let split = Split::draw(&mut rng, opts.split_ratio);
    let (frame_index, clean, bg) = &job.frames[job.i % job.frames.len()];
    let sample = make_sample(clean, bg, job.mode, &job.task.chroma, cfg, &mut rng)?;

    let rel_dir = format!("{}/{}", job.task.name, job.mode.name());
    let rel = |kind: &str| format!("{rel_dir}/{:05}_{kind}.png", job.i);
    let record = SampleRecord {
        sample_id: format!("{}/{}/{:05}", job.task.name, job.mode.name(), job.i),
        task_name: job.task.name.clone(),
        mode: job.mode,
        mode_code: job.mode.code(),
        severity: sample.severity.value(),
        split,
        frame_index: *frame_index,
        degraded: rel("degraded"),
        clean: rel("clean"),
        agent_only: rel("agent_only"),
        mask: rel("mask"),
        seed: opts.seed,
        rng_tags: tags,
    };
    write_png(&opts.out.join(&record.degraded), &sample.degraded)?;
    write_png(&opts.out.join(&record.clean), &sample.clean)?;
    write_png(&opts.out.join(&record.agent_only), &sample.agent_only)?;
    write_png(&opts.out.join(&record.mask), &mask_to_image(&sample.mask))?;
    Ok(record)
}

/// Generates every `(task, mode)` pair and writes the manifest last, via a
/// temporary file and rename.
pub fn generate_dataset(opts: &GenerateOptions, cfg: &DegradationConfig) -> Result<Manifest> {
    if !(0.0..=1.0).contains(&opts.split_ratio) {
        return Err(Error::InvalidValue(format!("split ratio {} outside [0, 1]", opts.split_ratio)));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = opts.tasks.iter().find(|t| !seen.insert(&t.name)) {
        return Err(Error::InvalidValue(format!("task {} listed twice", dup.name)));
    }
    let (h, w) = (cfg.dataset.frame_height, cfg.dataset.frame_width);
    let n = opts.samples_per_pair;
    let frames: Vec<Vec<(u64, Image8, Image8)>> = if n == 0 {
        vec![Vec::new(); opts.tasks.len()]
    } else {
        opts.tasks.iter().map(|t| load_frame_pairs(&opts.root.join(&t.name), h, w)).collect::<Result<_>>()?
    };

    fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let mut jobs = Vec::new();
    for (task, frames) in opts.tasks.iter().zip(&frames) {
        for &mode in &opts.modes {
            if n > 0 {
                let dir = opts.out.join(&task.name).join(mode.name());
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            jobs.extend((0..n).map(|i| Job { task, mode, i, frames }));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidValue(format!("worker pool: {e}")))?;
    let records: Vec<SampleRecord> = pool.install(|| jobs.par_iter().map(|j| run_job(j, opts, cfg)).collect::<Result<_>>())?;

    let header = ManifestHeader {
        engine_version: crate::ENGINE_VERSION.to_string(),
        seed: opts.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        tasks: opts.tasks.clone(),
        modes: opts.modes.clone(),
        samples_per_pair: n,
        split_ratio: opts.split_ratio,
    };
    let manifest = Manifest { header, records };
    write_manifest(&opts.out.join(MANIFEST_NAME), &manifest)?;
    log::info!("wrote {} samples to {}", manifest.records.len(), opts.out.display());
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(&tmp, e);
        serde_json::to_writer(&mut out, &HeaderLine { header: manifest.header.clone() })?;
        out.write_all(b"\n").map_err(io)?;
        for r in &manifest.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(io)?;
        }
        out.flush().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Malformed(format!("{} is empty", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    let header = serde_json::from_str::<HeaderLine>(&first)
        .map_err(|e| Error::Malformed(format!("{} header: {e}", path.display())))?
        .header;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Malformed(format!("{} line {}: {e}", path.display(), i + 2)))?;
        records.push(rec);
    }
    Ok(Manifest { header, records })
}

/// Re-reads a record's files and rechecks its invariants: files parse, the
/// mask is binary, agent-only equals the masked clean frame within one LSB,
/// and the severity lies in the jitter band.
pub fn validate_record(base: &Path, record: &SampleRecord, cfg: &DegradationConfig) -> Result<()> {
    let bad = |msg: String| Err(Error::Malformed(format!("{}: {msg}", record.sample_id)));
    if CorruptionMode::from_code(record.mode_code)? != record.mode {
        return bad(format!("mode code {} does not match {}", record.mode_code, record.mode));
    }
    let (lo, hi) = jitter_band(record.mode, cfg);
    if !(lo..=hi).contains(&record.severity) {
        return bad(format!("severity {} outside [{lo}, {hi}]", record.severity));
    }
    let degraded = read_png(&base.join(&record.degraded))?;
    let clean = read_png(&base.join(&record.clean))?;
    let agent = read_png(&base.join(&record.agent_only))?;
    let mask = read_mask_png(&base.join(&record.mask))?;
    if !degraded.same_shape(&clean) || !agent.same_shape(&clean) || mask.height() != clean.height() || mask.width() != clean.width() {
        return bad("image shapes disagree".into());
    }
    let expected = agent_only(&clean, &mask)?;
    if let Some((a, e)) = agent.data().iter().zip(expected.data()).find(|(a, e)| a.abs_diff(**e) > 1) {
        return bad(format!("agent-only pixel {a} differs from masked clean {e}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chroma() -> ChromaKeyConfig {
        ChromaKeyConfig { reference: [0, 0, 0], tolerance: 10 }
    }

    #[test]
    fn chroma_key_cases() {
        let bg = Image8::filled(4, 4, [20, 40, 60]);
        let cfg = ChromaKeyConfig { reference: [20, 40, 60], tolerance: 5 };
        assert!(chroma_key_mask(&bg, &cfg).data().iter().all(|&m| m == 0.0));

        let mut f = Image8::filled(5, 5, [0, 0, 0]);
        f.set_pixel(2, 3, [255, 255, 255]);
        let m = chroma_key_mask(&f, &chroma());
        assert_eq!(m.data().iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(m.get(2, 3), 1.0);

        let mut g = Image8::filled(2, 2, [7, 7, 7]);
        g.set_pixel(0, 1, [7, 8, 7]);
        let m0 = chroma_key_mask(&g, &ChromaKeyConfig { reference: [7, 7, 7], tolerance: 0 });
        assert_eq!(m0.data(), &[0.0, 1.0, 0.0, 0.0]);
        // exactly at tolerance is background
        let m1 = chroma_key_mask(&Image8::filled(1, 1, [10, 0, 0]), &chroma());
        assert_eq!(m1.data(), &[0.0]);
    }

    #[test]
    fn task_spec_parse() {
        let t: TaskSpec = "walker:12:0,0,255".parse().unwrap();
        assert_eq!(t.name, "walker");
        assert_eq!(t.chroma, ChromaKeyConfig { reference: [0, 0, 255], tolerance: 12 });
        assert_eq!(t.to_string().parse::<TaskSpec>().unwrap(), t);
        for bad in ["walker", "walker:12", ":1:0,0,0", "w:300:0,0,0", "w:1:0,0", "w:1:0,0,0,0", "../x:1:0,0,0"] {
            assert!(bad.parse::<TaskSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn full_mask_keeps_clean() {
        let clean = crate::ops::test_frame(8, 8);
        let bg = Image8::filled(8, 8, [255, 255, 255]);
        let s = make_sample(&clean, &bg, CorruptionMode::Rain, &chroma(), &DegradationConfig::default(), &mut RngStream::new(1)).unwrap();
        assert!(s.mask.data().iter().all(|&m| m == 1.0));
        assert_eq!(s.agent_only, clean);
    }

    #[test]
    fn empty_mask_is_black() {
        let clean = crate::ops::test_frame(8, 8);
        let bg = Image8::filled(8, 8, [0, 0, 0]);
        let s = make_sample(&clean, &bg, CorruptionMode::Jpeg, &chroma(), &DegradationConfig::default(), &mut RngStream::new(1)).unwrap();
        assert!(s.agent_only.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn pinned_zero_haze_is_clean() {
        let clean = crate::ops::test_frame(8, 8);
        let s = make_sample_at(&clean, &clean, CorruptionMode::Haze, Severity::ZERO, &chroma(), &DegradationConfig::default(), &mut RngStream::new(1)).unwrap();
        assert_eq!(s.degraded, clean);
    }

    #[test]
    fn shape_mismatch() {
        let a = Image8::filled(4, 4, [0; 3]);
        let b = Image8::filled(4, 5, [0; 3]);
        assert!(matches!(
            make_sample(&a, &b, CorruptionMode::Haze, &chroma(), &DegradationConfig::default(), &mut RngStream::new(0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn severity_stays_in_jitter_band() {
        let cfg = DegradationConfig::default();
        let mut rng = RngStream::new(99);
        for mode in CorruptionMode::ALL {
            let base = cfg.base_severity.get(mode);
            for _ in 0..10_000 {
                let s = draw_severity(mode, &cfg, &mut rng).value();
                assert!(s >= 0.9 * base - 1e-12 && s <= (1.1 * base).min(1.0) + 1e-12);
            }
        }
    }

    #[test]
    fn split_fraction() {
        let mut rng = RngStream::new(2);
        let train = (0..5000).filter(|_| Split::draw(&mut rng, 0.9) == Split::Train).count();
        let frac = train as f64 / 5000.0;
        assert!((frac - 0.9).abs() <= 0.013, "{frac}");
        assert!((0..100).all(|_| Split::draw(&mut rng, 1.0) == Split::Train));
    }
}
