use crate::error::{Error, Result};

/// Per-frame activity evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScore {
    pub frame: usize,
    pub lsmd_energy: f64,
    pub tracker_conf: f64,
    /// `lsmd_energy * (1 - tracker_conf * kappa)`.
    pub combined: f64,
}

impl FrameScore {
    pub fn new(frame: usize, lsmd_energy: f64, tracker_conf: f64, kappa: f64) -> Self {
        Self {
            frame,
            lsmd_energy,
            tracker_conf,
            combined: lsmd_energy * (1.0 - tracker_conf * kappa),
        }
    }
}

/// Inclusive frame span of one detected or annotated activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventInterval {
    pub start: usize,
    pub end: usize,
    pub peak: f64,
}

impl EventInterval {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end, peak: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intersection(&self, other: &Self) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo > hi {
            0
        } else {
            hi - lo + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisParams {
    pub tau_on: f64,
    pub tau_off: f64,
    pub min_len: usize,
}

impl Default for HysteresisParams {
    fn default() -> Self {
        Self {
            tau_on: 0.5,
            tau_off: 0.35,
            min_len: 5,
        }
    }
}

/// Mean of the top 10% of proposal scores (at least one proposal).
pub fn frame_activity_energy(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = scores.len().div_ceil(10).max(1);
    Ok(sorted[..top].iter().sum::<f64>() / top as f64)
}

/// Hysteresis thresholding on `combined`: an event opens at `tau_on`, stays open
/// while the score is at least `tau_off`, and is kept if it spans `min_len` frames.
pub fn detect_events(scores: &[FrameScore], params: &HysteresisParams) -> Result<Vec<EventInterval>> {
    if params.tau_off > params.tau_on {
        return Err(Error::BadThresholds {
            tau_on: params.tau_on,
            tau_off: params.tau_off,
        });
    }
    if params.min_len == 0 {
        return Err(Error::BadShape("min_len must be at least 1".into()));
    }
    let mut events = Vec::new();
    let mut open: Option<EventInterval> = None;
    for s in scores {
        match open.as_mut() {
            Some(ev) if s.combined >= params.tau_off => {
                ev.end = s.frame;
                ev.peak = ev.peak.max(s.combined);
            }
            Some(_) => {
                let ev = open.take().expect("checked above");
                if ev.len() >= params.min_len {
                    events.push(ev);
                }
            }
            None => {}
        }
        if open.is_none() && s.combined >= params.tau_on {
            open = Some(EventInterval {
                start: s.frame,
                end: s.frame,
                peak: s.combined,
            });
        }
    }
    if let Some(ev) = open {
        if ev.len() >= params.min_len {
            events.push(ev);
        }
    }
    Ok(events)
}

/// Copies `scores` with energies and combined values divided by the largest combined value.
pub fn normalize_scores(scores: &[FrameScore]) -> Vec<FrameScore> {
    let max = scores.iter().map(|s| s.combined).fold(0.0, f64::max);
    if max <= 0.0 {
        return scores.to_vec();
    }
    scores
        .iter()
        .map(|s| FrameScore {
            lsmd_energy: s.lsmd_energy / max,
            combined: s.combined / max,
            ..*s
        })
        .collect()
}

fn check_sorted(events: &[EventInterval]) -> Result<()> {
    if events.iter().any(|e| e.start > e.end) || events.windows(2).any(|w| w[1].start <= w[0].end) {
        return Err(Error::UnsortedInput);
    }
    Ok(())
}

/// Whether two intervals overlap by at least half the shorter one.
pub fn intervals_match(a: &EventInterval, b: &EventInterval) -> bool {
    2 * a.intersection(b) >= a.len().min(b.len())
}

/// Greedy one-to-one matching in time order; returns the number of matched truth events.
pub fn match_events(detected: &[EventInterval], truth: &[EventInterval]) -> Result<usize> {
    check_sorted(detected)?;
    check_sorted(truth)?;
    let mut used = vec![false; detected.len()];
    let mut correct = 0;
    for t in truth {
        if let Some(i) = (0..detected.len()).find(|&i| !used[i] && intervals_match(&detected[i], t)) {
            used[i] = true;
            correct += 1;
        }
    }
    Ok(correct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> Vec<FrameScore> {
        values.iter().enumerate().map(|(i, &v)| FrameScore::new(i, v, 0.0, 0.0)).collect()
    }

    #[test]
    fn energy_top_decile() {
        assert_eq!(frame_activity_energy(&[0.0; 7]).unwrap(), 0.0);
        let mut s = vec![0.0; 10];
        s[4] = 1.0;
        assert_eq!(frame_activity_energy(&s).unwrap(), 1.0);
        let s: Vec<f64> = (0..25).map(|i| i as f64).collect();
        // three largest of 25
        assert_eq!(frame_activity_energy(&s).unwrap(), 23.0);
        let scaled: Vec<f64> = s.iter().map(|v| v * 2.5).collect();
        assert_eq!(frame_activity_energy(&scaled).unwrap(), 2.5 * 23.0);
        assert!(matches!(frame_activity_energy(&[]), Err(Error::EmptyScores)));
    }

    #[test]
    fn hysteresis_walkthrough() {
        let p = HysteresisParams {
            tau_on: 0.5,
            tau_off: 0.5,
            min_len: 2,
        };
        assert!(detect_events(&series(&[0.0; 9]), &p).unwrap().is_empty());
        let ev = detect_events(&series(&[0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]), &p).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].start, ev[0].end), (2, 4));
        let ev = detect_events(&series(&[0.9; 12]), &p).unwrap();
        assert_eq!((ev[0].start, ev[0].end), (0, 11));
        assert!(matches!(
            detect_events(&series(&[0.0]), &HysteresisParams { tau_on: 0.2, tau_off: 0.3, min_len: 1 }),
            Err(Error::BadThresholds { .. })
        ));
    }

    #[test]
    fn hysteresis_bridges_dips_above_tau_off() {
        let p = HysteresisParams {
            tau_on: 0.5,
            tau_off: 0.3,
            min_len: 1,
        };
        let ev = detect_events(&series(&[0.0, 0.6, 0.4, 0.35, 0.7, 0.1, 0.45, 0.0]), &p).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].start, ev[0].end, ev[0].peak), (1, 4, 0.7));
    }

    #[test]
    fn matching_rules() {
        let truth = vec![EventInterval::new(10, 20), EventInterval::new(40, 50)];
        assert_eq!(match_events(&truth, &truth).unwrap(), 2);
        assert_eq!(match_events(&[], &truth).unwrap(), 0);
        assert_eq!(match_events(&[EventInterval::new(18, 40)], &[EventInterval::new(10, 20)]).unwrap(), 0);
        assert!(matches!(
            match_events(&[EventInterval::new(5, 9), EventInterval::new(2, 3)], &truth),
            Err(Error::UnsortedInput)
        ));
    }

    fn intervals() -> impl Strategy<Value = Vec<EventInterval>> {
        prop::collection::vec((0usize..6, 1usize..12), 0..6).prop_map(|gaps| {
            let mut pos = 0;
            gaps.into_iter()
                .map(|(gap, len)| {
                    let start = pos + gap;
                    pos = start + len;
                    EventInterval::new(start, start + len - 1)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn detected_events_are_disjoint_sorted_and_long_enough(
            values in prop::collection::vec(0.0f64..1.0, 1..80),
            min_len in 1usize..6,
        ) {
            let p = HysteresisParams { tau_on: 0.6, tau_off: 0.4, min_len };
            let ev = detect_events(&series(&values), &p).unwrap();
            for e in &ev {
                prop_assert!(e.start <= e.end);
                prop_assert!(e.len() >= min_len);
            }
            for w in ev.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
        }

        #[test]
        fn adding_a_detection_never_lowers_the_count(
            truth in intervals(),
            detected in intervals(),
            extra in (0usize..70, 1usize..12),
        ) {
            let before = match_events(&detected, &truth).unwrap();
            let new = EventInterval::new(extra.0, extra.0 + extra.1 - 1);
            if detected.iter().all(|d| d.intersection(&new) == 0) {
                let mut more = detected.clone();
                more.push(new);
                more.sort_by_key(|e| e.start);
                prop_assert!(match_events(&more, &truth).unwrap() >= before);
            }
        }
    }
}
