//! JSONL trace of a schedule run and summary statistics over it.
//!
//! The first line is `{"header": {...}}`; every following line is one
//! [`TraceRecord`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::severity_band;
use crate::error::{Error, Result};
use crate::ops::{CorruptionMode, DegradationConfig, Severity};

const N: usize = CorruptionMode::COUNT;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub step: u64,
    pub mode_code: u8,
    pub mode_name: String,
    pub severity: f64,
    pub rng_counter_before: u64,
}

impl TraceRecord {
    pub fn new(step: u64, mode: CorruptionMode, severity: Severity, rng_counter_before: u64) -> Self {
        Self { step, mode_code: mode.code(), mode_name: mode.name().to_string(), severity: severity.value(), rng_counter_before }
    }

    /// Mode named by the record; code and name must agree.
    pub fn mode(&self) -> Result<CorruptionMode> {
        let mode = CorruptionMode::from_code(self.mode_code)?;
        if mode.name() != self.mode_name {
            return Err(Error::Malformed(format!(
                "step {}: mode code {} does not match name {:?}",
                self.step, self.mode_code, self.mode_name
            )));
        }
        Ok(mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub engine_version: String,
    pub seed: u64,
    pub sticky_prob: Option<f64>,
    pub config_hash: String,
    pub config: DegradationConfig,
}

impl TraceHeader {
    pub fn new(seed: u64, sticky_prob: Option<f64>, cfg: &DegradationConfig) -> Self {
        Self {
            engine_version: crate::ENGINE_VERSION.to_string(),
            seed,
            sticky_prob,
            config_hash: cfg.hash(),
            config: cfg.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: TraceHeader,
}

pub fn write_trace<W: Write>(mut out: W, header: &TraceHeader, records: &[TraceRecord]) -> Result<()> {
    let io = |e| Error::io("<trace>", e);
    serde_json::to_writer(&mut out, &HeaderLine { header: header.clone() })?;
    out.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a trace. The header line is optional; blank lines are skipped.
pub fn read_trace<R: BufRead>(input: R) -> Result<(Option<TraceHeader>, Vec<TraceRecord>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<trace>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| Error::Malformed(format!("trace line {}: {e}", lineno + 1));
        if lineno == 0 && line.trim_start().starts_with("{\"header\"") {
            header = Some(serde_json::from_str::<HeaderLine>(&line).map_err(malformed)?.header);
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(malformed)?;
        rec.mode()?;
        if !(0.0..=1.0).contains(&rec.severity) {
            return Err(Error::Malformed(format!("trace line {}: severity {} outside [0, 1]", lineno + 1, rec.severity)));
        }
        records.push(rec);
    }
    Ok((header, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeHistogram {
    pub mode: CorruptionMode,
    pub band_min: f64,
    pub band_max: f64,
    pub counts: [u64; HISTOGRAM_BINS],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStats {
    pub steps: usize,
    pub mode_counts: [u64; N],
    pub mode_marginals: [f64; N],
    /// `None` for traces shorter than two steps.
    pub self_transition_rate: Option<f64>,
    pub segments: usize,
    pub mean_segment_length: f64,
    pub severity_histograms: Vec<ModeHistogram>,
    pub band_violations: u64,
}

impl TraceStats {
    /// Statistics over `records`, with severity bands taken from `cfg`.
    pub fn from_records(records: &[TraceRecord], cfg: &DegradationConfig) -> Self {
        let steps = records.len();
        let mut mode_counts = [0u64; N];
        let mut hist: Vec<ModeHistogram> = CorruptionMode::ALL
            .into_iter()
            .map(|mode| {
                let b = severity_band(mode, cfg);
                ModeHistogram { mode, band_min: b.min, band_max: b.max, counts: [0; HISTOGRAM_BINS] }
            })
            .collect();
        let mut band_violations = 0;
        let mut stays = 0u64;
        let mut segments = 0usize;
        let mut prev: Option<u8> = None;
        for r in records {
            let idx = usize::from(r.mode_code.clamp(1, N as u8)) - 1;
            mode_counts[idx] += 1;
            let h = &mut hist[idx];
            if (h.band_min..=h.band_max).contains(&r.severity) {
                let width = h.band_max - h.band_min;
                let bin = if width > 0.0 {
                    (((r.severity - h.band_min) / width) * HISTOGRAM_BINS as f64) as usize
                } else {
                    0
                };
                h.counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
            } else {
                band_violations += 1;
            }
            match prev {
                Some(p) if p == r.mode_code => stays += 1,
                _ => segments += 1,
            }
            prev = Some(r.mode_code);
        }
        let denom = steps.max(1) as f64;
        let mode_marginals = mode_counts.map(|c| c as f64 / denom);
        let self_transition_rate = (steps >= 2).then(|| stays as f64 / (steps - 1) as f64);
        let mean_segment_length = if segments == 0 { 0.0 } else { steps as f64 / segments as f64 };
        Self {
            steps,
            mode_counts,
            mode_marginals,
            self_transition_rate,
            segments,
            mean_segment_length,
            severity_histograms: hist,
            band_violations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{schedule_trace, ScheduleState, TransitionMatrix};
    use super::*;

    #[test]
    fn roundtrip_jsonl() {
        let cfg = DegradationConfig::default();
        let recs = schedule_trace(ScheduleState::start(5, &cfg), 50, &TransitionMatrix::sticky(0.8).unwrap(), &cfg);
        let header = TraceHeader::new(5, Some(0.8), &cfg);
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &recs).unwrap();
        let (h, back) = read_trace(buf.as_slice()).unwrap();
        assert_eq!(h.unwrap(), header);
        assert_eq!(back, recs);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(read_trace("not json\n".as_bytes()).is_err());
        let bad = r#"{"step":0,"mode_code":1,"mode_name":"snow","severity":0.5,"rng_counter_before":0}"#;
        assert!(read_trace(bad.as_bytes()).is_err());
        let bad = r#"{"step":0,"mode_code":9,"mode_name":"rain","severity":0.5,"rng_counter_before":0}"#;
        assert!(read_trace(bad.as_bytes()).is_err());
    }

    #[test]
    fn single_step_stats() {
        let cfg = DegradationConfig::default();
        let r = TraceRecord::new(0, CorruptionMode::Snow, Severity::new(0.6).unwrap(), 0);
        let s = TraceStats::from_records(&[r], &cfg);
        assert_eq!(s.steps, 1);
        assert_eq!(s.self_transition_rate, None);
        assert_eq!(s.mean_segment_length, 1.0);
        assert_eq!(s.mode_marginals[2], 1.0);
        assert_eq!(s.band_violations, 0);
        let empty = TraceStats::from_records(&[], &cfg);
        assert_eq!(empty.mean_segment_length, 0.0);
        assert!(empty.mode_marginals.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn identity_chain_stats() {
        let cfg = DegradationConfig::default();
        let recs = schedule_trace(ScheduleState::start(8, &cfg), 300, &TransitionMatrix::identity(), &cfg);
        let s = TraceStats::from_records(&recs, &cfg);
        assert_eq!(s.self_transition_rate, Some(1.0));
        assert_eq!(s.segments, 1);
        assert_eq!(s.mean_segment_length, 300.0);
        assert_eq!(s.band_violations, 0);
    }

    #[test]
    fn sticky_segment_length() {
        let cfg = DegradationConfig::default();
        let recs = schedule_trace(ScheduleState::start(10, &cfg), 100_000, &TransitionMatrix::sticky(0.8).unwrap(), &cfg);
        let s = TraceStats::from_records(&recs, &cfg);
        assert!((s.mean_segment_length - 5.0).abs() < 0.25, "{}", s.mean_segment_length);
        assert_eq!(s.band_violations, 0);
        let total: u64 = s.severity_histograms.iter().flat_map(|h| h.counts).sum();
        assert_eq!(total, 100_000);
    }
}
