//! Plain-text CSV formats for matrices, traces, scores, events, tracks and synth specs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::detector::{EventInterval, EventKind, FrameScore, SynthSpec, TruthEvent};
use crate::error::{Error, Result};
use crate::tracker::TrackResult;

pub const MATRIX_HEADER: &str = "rows,cols";
pub const TRACE_HEADER: &str = "iteration,objective";
pub const SCORES_HEADER: &str = "frame,lsmd_energy,tracker_conf,combined";
pub const EVENTS_HEADER: &str = "start,end,peak";
pub const TRUTH_HEADER: &str = "start,end,kind";
pub const TRACK_HEADER: &str = "frame,l_x,l_y,theta,s,alpha,phi,confidence,occlusion_fraction";
pub const SYNTH_HEADER: &str = "h,w,n_frames";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingSource(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Non-empty lines with their 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

struct LineParser<'a> {
    path: &'a Path,
    line: usize,
}

impl LineParser<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            reason: reason.into(),
        }
    }

    fn fields<'t>(&self, text: &'t str, n: std::ops::RangeInclusive<usize>) -> Result<Vec<&'t str>> {
        let f: Vec<&str> = text.split(',').map(str::trim).collect();
        if !n.contains(&f.len()) {
            return Err(self.err(format!("expected {:?} fields, got {}", n, f.len())));
        }
        Ok(f)
    }

    fn value<T: FromStr>(&self, text: &str) -> Result<T> {
        text.parse().map_err(|_| self.err(format!("cannot parse `{text}`")))
    }
}

fn expect_header(path: &Path, line: Option<(usize, &str)>, header: &str) -> Result<()> {
    match line {
        Some((_, h)) if h == header => Ok(()),
        Some((n, h)) => Err(Error::Parse {
            path: path.to_path_buf(),
            line: n,
            reason: format!("expected header `{header}`, found `{h}`"),
        }),
        None => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("empty file, expected header `{header}`"),
        }),
    }
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("{MATRIX_HEADER}\n{},{}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(path: &Path, text: &str) -> Result<DMatrix<f64>> {
    let mut lines = data_lines(text);
    expect_header(path, lines.next(), MATRIX_HEADER)?;
    let (n, dims) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 2,
        reason: "missing dimensions line".into(),
    })?;
    let p = LineParser { path, line: n };
    let d = p.fields(dims, 2..=2)?;
    let (rows, cols): (usize, usize) = (p.value(d[0])?, p.value(d[1])?);
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (n, l) in lines {
        let p = LineParser { path, line: n };
        let f = p.fields(l, cols..=cols)?;
        for v in f {
            let x: f64 = p.value(v)?;
            if !x.is_finite() {
                return Err(p.err("non-finite value"));
            }
            values.push(x);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            reason: format!("declared {rows} rows, found {seen}"),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(path, &read_text(path)?)
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, matrix_to_csv(m))?)
}

pub fn trace_to_csv(trace: &[f64]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

pub fn scores_to_csv(scores: &[FrameScore]) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for s in scores {
        let _ = writeln!(out, "{},{},{},{}", s.frame, s.lsmd_energy, s.tracker_conf, s.combined);
    }
    out
}

pub fn parse_scores_csv(path: &Path, text: &str) -> Result<Vec<FrameScore>> {
    let mut lines = data_lines(text);
    expect_header(path, lines.next(), SCORES_HEADER)?;
    lines
        .map(|(n, l)| {
            let p = LineParser { path, line: n };
            let f = p.fields(l, 4..=4)?;
            Ok(FrameScore {
                frame: p.value(f[0])?,
                lsmd_energy: p.value(f[1])?,
                tracker_conf: p.value(f[2])?,
                combined: p.value(f[3])?,
            })
        })
        .collect()
}

pub fn events_to_csv(events: &[EventInterval]) -> String {
    let mut out = format!("{EVENTS_HEADER}\n");
    for e in events {
        let _ = writeln!(out, "{},{},{}", e.start, e.end, e.peak);
    }
    out
}

/// Reads `start,end[,peak]` rows; a missing peak score reads as 0.
pub fn parse_events_csv(path: &Path, text: &str) -> Result<Vec<EventInterval>> {
    let mut lines = data_lines(text).peekable();
    if let Some((_, h)) = lines.peek() {
        if h.starts_with("start,end") {
            lines.next();
        }
    }
    lines
        .map(|(n, l)| {
            let p = LineParser { path, line: n };
            let f = p.fields(l, 2..=3)?;
            let (start, end): (usize, usize) = (p.value(f[0])?, p.value(f[1])?);
            if start > end {
                return Err(p.err(format!("start {start} after end {end}")));
            }
            let peak = match f.get(2) {
                Some(v) => p.value(v)?,
                None => 0.0,
            };
            Ok(EventInterval { start, end, peak })
        })
        .collect()
}

pub fn read_events_csv(path: &Path) -> Result<Vec<EventInterval>> {
    parse_events_csv(path, &read_text(path)?)
}

pub fn truth_to_csv(truth: &[TruthEvent]) -> String {
    let mut out = format!("{TRUTH_HEADER}\n");
    for t in truth {
        let _ = writeln!(out, "{},{},{}", t.start, t.end, t.kind);
    }
    out
}

fn parse_truth_row(p: &LineParser, l: &str) -> Result<TruthEvent> {
    let f = p.fields(l, 3..=3)?;
    let (start, end): (usize, usize) = (p.value(f[0])?, p.value(f[1])?);
    if start > end {
        return Err(p.err(format!("start {start} after end {end}")));
    }
    let kind = f[2].parse::<EventKind>().map_err(|e| p.err(e))?;
    Ok(TruthEvent { start, end, kind })
}

pub fn parse_truth_csv(path: &Path, text: &str) -> Result<Vec<TruthEvent>> {
    let mut lines = data_lines(text);
    expect_header(path, lines.next(), TRUTH_HEADER)?;
    lines
        .map(|(n, l)| parse_truth_row(&LineParser { path, line: n }, l))
        .collect()
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<TruthEvent>> {
    parse_truth_csv(path, &read_text(path)?)
}

pub fn track_to_csv(track: &[TrackResult]) -> String {
    let mut out = format!("{TRACK_HEADER}\n");
    for r in track {
        let s = &r.state;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.frame, s.lx, s.ly, s.theta, s.s, s.alpha, s.phi, r.confidence, r.occlusion_fraction
        );
    }
    out
}

/// `h,w,n_frames` header and one size row, then a `start,end,kind` section.
pub fn synth_spec_to_csv(spec: &SynthSpec) -> String {
    let mut out = format!("{SYNTH_HEADER}\n{},{},{}\n", spec.height, spec.width, spec.n_frames);
    out.push_str(&truth_to_csv(&spec.events));
    out
}

pub fn parse_synth_spec(path: &Path, text: &str) -> Result<SynthSpec> {
    let mut lines = data_lines(text);
    expect_header(path, lines.next(), SYNTH_HEADER)?;
    let (n, dims) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 2,
        reason: "missing size row".into(),
    })?;
    let p = LineParser { path, line: n };
    let d = p.fields(dims, 3..=3)?;
    let mut spec = SynthSpec::new(p.value(d[0])?, p.value(d[1])?, p.value(d[2])?);
    if let Some(h) = lines.next() {
        expect_header(path, Some(h), TRUTH_HEADER)?;
    }
    for (n, l) in lines {
        spec.events.push(parse_truth_row(&LineParser { path, line: n }, l)?);
    }
    Ok(spec)
}

pub fn read_synth_spec(path: &Path) -> Result<SynthSpec> {
    parse_synth_spec(path, &read_text(path)?)
}
