//! Synthetic two-blob scenes with labelled bursts of fast motion.
//!
//! The background is a fixed noise pattern; two Gaussian blobs drift slowly
//! (under 0.5 px/frame) except inside labelled events, where they move about
//! 6 px per frame.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::events::EventInterval;
use crate::error::{Error, Result};
use crate::ingest::FrameSequence;

pub const NOISE_AMPLITUDE: f64 = 0.02;
const BLOB_AMPLITUDE: f64 = 0.85;
const DRIFT_RADIUS: f64 = 2.5;
const DRIFT_PERIOD: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// One blob jitters back and forth.
    Burst,
    /// The two blobs orbit their midpoint, trading places every half turn.
    Swap,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Burst => "burst",
            EventKind::Swap => "swap",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "burst" => Ok(EventKind::Burst),
            "swap" => Ok(EventKind::Swap),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthEvent {
    pub start: usize,
    pub end: usize,
    pub kind: EventKind,
}

impl TruthEvent {
    pub fn interval(&self) -> EventInterval {
        EventInterval::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub n_frames: usize,
    pub events: Vec<TruthEvent>,
}

impl SynthSpec {
    pub fn new(height: usize, width: usize, n_frames: usize) -> Self {
        Self {
            height,
            width,
            n_frames,
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, start: usize, end: usize, kind: EventKind) -> Self {
        self.events.push(TruthEvent { start, end, kind });
        self
    }
}

/// Draws 1..=`max_events` non-overlapping events of 10-20 frames separated by at least 12 quiet frames.
pub fn random_spec(height: usize, width: usize, n_frames: usize, max_events: usize, seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED);
    let mut spec = SynthSpec::new(height, width, n_frames);
    let wanted = rng.random_range(1..=max_events.max(1));
    let mut cursor = 6;
    for i in 0..wanted {
        let len = rng.random_range(10..=20);
        let left = wanted - i - 1;
        // leave room for the remaining events
        let latest = n_frames.saturating_sub(6 + len + left * 32);
        if latest < cursor {
            break;
        }
        let start = rng.random_range(cursor..=cursor + (latest - cursor).min(12));
        let kind = if rng.random_bool(0.5) { EventKind::Burst } else { EventKind::Swap };
        spec.events.push(TruthEvent {
            start,
            end: start + len - 1,
            kind,
        });
        cursor = start + len + 12;
    }
    spec
}

struct EventMotion {
    event: TruthEvent,
    /// Unit direction of the burst jitter.
    dir: (f64, f64),
    /// Burst half-swing or swap speed, in pixels.
    magnitude: f64,
}

/// Renders the scene; returns the frames and the labelled events.
pub fn synth_sequence(spec: &SynthSpec, seed: u64) -> Result<(FrameSequence, Vec<TruthEvent>)> {
    let (h, w, n) = (spec.height, spec.width, spec.n_frames);
    if n < 2 {
        return Err(Error::TooFewFrames(n));
    }
    for e in &spec.events {
        if e.start > e.end || e.end >= n {
            return Err(Error::EventOutOfRange {
                start: e.start,
                end: e.end,
                n_frames: n,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = DMatrix::from_fn(h, w, |_, _| rng.random::<f64>() * NOISE_AMPLITUDE);
    let (hf, wf) = (h as f64, w as f64);
    let sigma = (hf.min(wf) / 12.8).max(1.5);
    let anchor_a = (0.35 * hf + rng.random_range(-2.0..2.0), 0.32 * wf + rng.random_range(-2.0..2.0));
    let anchor_b = (0.65 * hf + rng.random_range(-2.0..2.0), 0.68 * wf + rng.random_range(-2.0..2.0));
    let phase_a = rng.random_range(0.0..2.0 * PI);
    let phase_b = rng.random_range(0.0..2.0 * PI);
    let motions: Vec<EventMotion> = spec
        .events
        .iter()
        .map(|&event| {
            let angle = rng.random_range(0.0..2.0 * PI);
            let magnitude = match event.kind {
                EventKind::Burst => rng.random_range(2.75..3.25),
                EventKind::Swap => rng.random_range(5.5..6.5),
            };
            EventMotion {
                event,
                dir: (angle.sin(), angle.cos()),
                magnitude,
            }
        })
        .collect();

    let omega = 2.0 * PI / DRIFT_PERIOD;
    let mut frames = Vec::with_capacity(n);
    for t in 0..n {
        let tf = t as f64;
        let drift = |phase: f64| (DRIFT_RADIUS * (omega * tf + phase).sin(), DRIFT_RADIUS * (omega * tf + phase).cos());
        let (da, db) = (drift(phase_a), drift(phase_b));
        let mut a = (anchor_a.0 + da.0, anchor_a.1 + da.1);
        let mut b = (anchor_b.0 + db.0, anchor_b.1 + db.1);
        if let Some(m) = motions.iter().find(|m| (m.event.start..=m.event.end).contains(&t)) {
            let k = (t - m.event.start) as f64;
            match m.event.kind {
                EventKind::Burst => {
                    let sign = if (t - m.event.start) % 2 == 0 { 1.0 } else { -1.0 };
                    a.0 += sign * m.magnitude * m.dir.0;
                    a.1 += sign * m.magnitude * m.dir.1;
                }
                EventKind::Swap => {
                    // orbit about the midpoint; half a turn trades the blobs
                    let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
                    let (ry, rx) = (a.0 - mid.0, a.1 - mid.1);
                    let radius = (ry * ry + rx * rx).sqrt().max(1.0);
                    let (sin, cos) = ((k + 1.0) * m.magnitude / radius).sin_cos();
                    let (oy, ox) = (ry * cos - rx * sin, ry * sin + rx * cos);
                    a = (mid.0 + oy, mid.1 + ox);
                    b = (mid.0 - oy, mid.1 - ox);
                }
            }
        }
        let inv = 1.0 / (2.0 * sigma * sigma);
        let frame = DMatrix::from_fn(h, w, |r, c| {
            let (rf, cf) = (r as f64, c as f64);
            let g = |p: (f64, f64)| BLOB_AMPLITUDE * (-((rf - p.0).powi(2) + (cf - p.1).powi(2)) * inv).exp();
            (background[(r, c)] + g(a) + g(b)).min(1.0)
        });
        frames.push(frame);
    }
    let seq = FrameSequence::from_pixels(format!("synth_{seed}"), frames)?;
    Ok((seq, spec.events.clone()))
}
