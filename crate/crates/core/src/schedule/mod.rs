//! Markov-switching corruption process.
//!
//! The active mode follows a row-stochastic chain over the seven modes. When
//! a mode is entered (including the first step) its severity is drawn
//! uniformly from the mode's band; while the mode persists the severity takes
//! a clipped Gaussian random-walk step.
//!
//! Draw order per step is fixed: one uniform for the next mode, then either a
//! uniform (fresh severity) or a normal (walk increment). The initial state
//! draws one uniform for the mode and one for the severity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;
use crate::ops::{self, CorruptionMode, DegradationConfig, ScheduleConfig, Severity};
use crate::rng::{domain, RngStream};

mod trace;

pub use trace::{read_trace, write_trace, TraceHeader, TraceRecord, TraceStats};

const N: usize = CorruptionMode::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: [[f64; N]; N],
}

impl TransitionMatrix {
    pub const ROW_TOLERANCE: f64 = 1e-12;

    pub fn new(rows: [[f64; N]; N]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidValue(format!("row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_TOLERANCE {
                return Err(Error::InvalidValue(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    /// Self-transition `p_s`, remaining mass spread evenly over the other modes.
    pub fn sticky(p_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_s) {
            return Err(Error::InvalidValue(format!("sticky probability {p_s} outside [0, 1]")));
        }
        let off = (1.0 - p_s) / (N - 1) as f64;
        let mut rows = [[off; N]; N];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = p_s;
        }
        Self::new(rows)
    }

    pub fn identity() -> Self {
        Self::sticky(1.0).expect("identity is stochastic")
    }

    pub fn get(&self, from: CorruptionMode, to: CorruptionMode) -> f64 {
        self.rows[from.index()][to.index()]
    }

    pub fn rows(&self) -> &[[f64; N]; N] {
        &self.rows
    }

    /// Inverse-CDF sample of the next mode from uniform `u` in `[0, 1)`.
    pub fn sample(&self, from: CorruptionMode, u: f64) -> CorruptionMode {
        let row = &self.rows[from.index()];
        let mut acc = 0.0;
        let mut last_positive = from;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = CorruptionMode::ALL[j];
                if u < acc {
                    return last_positive;
                }
            }
        }
        last_positive
    }
}

/// Severity band `[max(floor, (1 - d) * base), min(1, (1 + d) * base)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityBand {
    pub min: f64,
    pub max: f64,
}

impl SeverityBand {
    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.max(self.min).min(self.max)
    }
}

pub fn severity_band(mode: CorruptionMode, cfg: &DegradationConfig) -> SeverityBand {
    let base = cfg.base_severity.get(mode);
    let sc: &ScheduleConfig = &cfg.schedule;
    let min = sc.band_floor.max((1.0 - sc.band_delta) * base);
    let max = 1.0f64.min((1.0 + sc.band_delta) * base);
    // A base below the floor would invert the band; pin it to the floor.
    SeverityBand { min, max: max.max(min) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    pub mode: CorruptionMode,
    pub severity: Severity,
    pub step: u64,
    pub rng: RngStream,
}

impl ScheduleState {
    /// State at `t = 0`: mode uniform over all modes, severity uniform in its band.
    pub fn start(seed: u64, cfg: &DegradationConfig) -> Self {
        let mut rng = RngStream::substream(seed, &[domain::SCHEDULE]);
        let mode = CorruptionMode::ALL[rng.below(N)];
        let severity = fresh_severity(mode, cfg, &mut rng);
        Self { mode, severity, step: 0, rng }
    }

    /// State at `t = 0` with a caller-chosen mode and severity.
    pub fn pinned(mode: CorruptionMode, severity: Severity, seed: u64) -> Self {
        Self { mode, severity, step: 0, rng: RngStream::substream(seed, &[domain::SCHEDULE]) }
    }

    pub fn band(&self, cfg: &DegradationConfig) -> SeverityBand {
        severity_band(self.mode, cfg)
    }

    /// Advances one step in place.
    pub fn advance(&mut self, matrix: &TransitionMatrix, cfg: &DegradationConfig) {
        let next = matrix.sample(self.mode, self.rng.next_f64());
        let severity = if next != self.mode {
            fresh_severity(next, cfg, &mut self.rng)
        } else {
            let band = severity_band(next, cfg);
            let eta = self.rng.normal(0.0, cfg.schedule.walk_std);
            Severity::new(band.clip(self.severity.value() + eta)).expect("band lies in [0, 1]")
        };
        self.mode = next;
        self.severity = severity;
        self.step += 1;
    }

    pub fn step(&self, matrix: &TransitionMatrix, cfg: &DegradationConfig) -> Self {
        let mut next = self.clone();
        next.advance(matrix, cfg);
        next
    }
}

fn fresh_severity(mode: CorruptionMode, cfg: &DegradationConfig, rng: &mut RngStream) -> Severity {
    let band = severity_band(mode, cfg);
    Severity::new(band.clip(rng.uniform(band.min, band.max))).expect("band lies in [0, 1]")
}

/// Operator stream for frame `t` of an episode seeded with `seed`.
pub fn frame_stream(seed: u64, t: u64) -> RngStream {
    RngStream::substream(seed, &[domain::OPERATOR, t])
}

/// Runs the chain for `len` steps starting from `initial`, returning one
/// trace record per step.
pub fn schedule_trace(initial: ScheduleState, len: usize, matrix: &TransitionMatrix, cfg: &DegradationConfig) -> Vec<TraceRecord> {
    let mut state = initial;
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let counter_before = state.rng.counter();
        if t > 0 {
            state.advance(matrix, cfg);
        }
        out.push(TraceRecord::new(state.step, state.mode, state.severity, counter_before));
    }
    out
}

/// One corrupted frame of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFrame {
    pub image: Image8,
    pub mode: CorruptionMode,
    pub severity: Severity,
    pub record: TraceRecord,
}

/// Corrupts frame `t` according to its trace record.
pub fn corrupt_frame(frame: &Image8, record: &TraceRecord, cfg: &DegradationConfig, seed: u64) -> Result<Image8> {
    let mode = record.mode()?;
    let severity = Severity::new(record.severity)?;
    ops::apply(cfg, mode, frame, severity, &mut frame_stream(seed, record.step))
}

/// Threads the schedule through `frames`, starting from [`ScheduleState::start`].
pub fn corrupt_stream(frames: &[Image8], matrix: &TransitionMatrix, cfg: &DegradationConfig, seed: u64) -> Result<Vec<StreamFrame>> {
    corrupt_stream_from(ScheduleState::start(seed, cfg), frames, matrix, cfg, seed)
}

/// Like [`corrupt_stream`] with an explicit initial state.
pub fn corrupt_stream_from(
    initial: ScheduleState,
    frames: &[Image8],
    matrix: &TransitionMatrix,
    cfg: &DegradationConfig,
    seed: u64,
) -> Result<Vec<StreamFrame>> {
    if frames.is_empty() {
        return Err(Error::InvalidValue("frame sequence is empty".into()));
    }
    schedule_trace(initial, frames.len(), matrix, cfg)
        .into_iter()
        .zip(frames)
        .map(|(record, frame)| {
            let image = corrupt_frame(frame, &record, cfg, seed)?;
            Ok(StreamFrame { image, mode: record.mode()?, severity: Severity::new(record.severity)?, record })
        })
        .collect()
}
