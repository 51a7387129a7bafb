//! Per-video results table with a totals row and an overall accuracy footer.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "name,total_frames,num_events,correct_detections";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub name: String,
    pub total_frames: i64,
    pub num_events: i64,
    pub correct_detections: i64,
}

impl ReportRow {
    pub fn new(name: impl Into<String>, total_frames: i64, num_events: i64, correct_detections: i64) -> Self {
        Self {
            name: name.into(),
            total_frames,
            num_events,
            correct_detections,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub rows: Vec<ReportRow>,
    pub total_frames: i64,
    pub total_events: i64,
    pub total_correct: i64,
}

impl DetectionReport {
    /// `Σ correct / Σ events`, undefined without events.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total_events > 0).then(|| self.total_correct as f64 / self.total_events as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.name, r.total_frames, r.num_events, r.correct_detections);
        }
        let _ = writeln!(out, "TOTAL,{},{},{}", self.total_frames, self.total_events, self.total_correct);
        match self.accuracy() {
            Some(a) => {
                let _ = writeln!(out, "accuracy={a:.4}");
            }
            None => out.push_str("accuracy=n/a\n"),
        }
        out
    }
}

pub fn aggregate_report(rows: &[ReportRow]) -> Result<DetectionReport> {
    for r in rows {
        if r.total_frames < 0 || r.num_events < 0 || r.correct_detections < 0 {
            return Err(Error::NegativeCounts(r.name.clone()));
        }
        if r.correct_detections > r.num_events {
            return Err(Error::BadShape(format!(
                "row {}: {} correct detections of {} events",
                r.name, r.correct_detections, r.num_events
            )));
        }
        if r.name.contains(',') || r.name.contains('\n') {
            return Err(Error::BadShape(format!("row name `{}` is not CSV-safe", r.name)));
        }
    }
    Ok(DetectionReport {
        rows: rows.to_vec(),
        total_frames: rows.iter().map(|r| r.total_frames).sum(),
        total_events: rows.iter().map(|r| r.num_events).sum(),
        total_correct: rows.iter().map(|r| r.correct_detections).sum(),
    })
}

/// Reads the data rows of a report (or a bare row table), skipping the totals row and footer.
pub fn parse_report_rows(text: &str) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == REPORT_HEADER || line.starts_with("accuracy=") || line.starts_with("TOTAL,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = |reason: String| Error::Parse {
            path: "report".into(),
            line: i + 1,
            reason,
        };
        if fields.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.parse::<i64>().map_err(|e| parse_err(format!("`{s}`: {e}")));
        rows.push(ReportRow::new(fields[0], num(fields[1])?, num(fields[2])?, num(fields[3])?));
    }
    Ok(rows)
}
