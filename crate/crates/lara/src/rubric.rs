//! Deterministic scoring of 20-minute segments: baseline estimation,
//! variability, acceleration/deceleration detection, deduction accounting,
//! and the 1-5 score with its binary label.
//!
//! Scores start at 5 and lose points per rule; a segment is normal when its
//! score is greater than 3. Late decelerations are out of scope because no
//! contraction channel exists; only duration-based deceleration rules apply.

use crate::error::{Error, Result};
use crate::signal::SAMPLES_PER_MINUTE;

/// Segment length in minutes.
pub const SEGMENT_MINUTES: usize = 20;
/// Segment length in samples (20 min at 4 Hz).
pub const SEGMENT_SAMPLES: usize = SEGMENT_MINUTES * SAMPLES_PER_MINUTE;
/// Excursion threshold about the baseline for events and the in-band filter.
pub const EVENT_EXCURSION_BPM: f64 = 15.0;
/// Minimum event duration in samples (15 s).
pub const MIN_EVENT_SAMPLES: usize = 60;
/// Maximum invalid stretch an event run may bridge, in samples (2 s).
pub const BRIDGE_SAMPLES: usize = 8;
/// Minimum valid in-band samples for a minute to enter variability.
pub const MIN_MINUTE_SAMPLES: usize = 120;

/// A 20-minute scoring unit: exactly 4800 samples plus validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment20 {
    samples: Vec<f32>,
    valid_mask: Vec<bool>,
}

impl Segment20 {
    pub fn new(samples: Vec<f32>, valid_mask: Vec<bool>) -> Result<Self> {
        if samples.len() != SEGMENT_SAMPLES || valid_mask.len() != SEGMENT_SAMPLES {
            return Err(Error::ShapeError(format!(
                "segment needs {} samples, got {}/{}",
                SEGMENT_SAMPLES,
                samples.len(),
                valid_mask.len()
            )));
        }
        Ok(Segment20 {
            samples,
            valid_mask,
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid_mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Acceleration,
    Deceleration,
}

/// A transient excursion of at least 15 bpm from baseline lasting >= 15 s.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub start_index: usize,
    pub duration_s: f64,
    pub peak_excursion_bpm: f64,
}

impl Event {
    fn duration_samples(&self) -> usize {
        (self.duration_s * 4.0).round() as usize
    }

    fn span(&self) -> std::ops::Range<usize> {
        self.start_index..self.start_index + self.duration_samples()
    }
}

/// Deduction rules reachable without a contraction channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    BaselineOutOfRange,
    LowVariability10Min,
    LowVariability20Min,
    HighVariability20Min,
    AccelerationCriterion,
    Deceleration30To60s,
    DecelerationOver3Min,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::BaselineOutOfRange => "baseline_out_of_range",
            Rule::LowVariability10Min => "low_variability_10min",
            Rule::LowVariability20Min => "low_variability_20min",
            Rule::HighVariability20Min => "high_variability_20min",
            Rule::AccelerationCriterion => "acceleration_criterion",
            Rule::Deceleration30To60s => "deceleration_30_60s",
            Rule::DecelerationOver3Min => "deceleration_over_3min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        }
    }
}

/// Full rubric result for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCard {
    pub baseline_bpm: f64,
    pub variability_bpm: f64,
    pub accelerations: Vec<Event>,
    pub decelerations: Vec<Event>,
    pub deductions: Vec<(Rule, u32)>,
    pub score: u8,
    pub binary_label: Label,
}

impl ScoreCard {
    pub fn total_deductions(&self) -> u32 {
        self.deductions.iter().map(|(_, p)| p).sum()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn median_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(median(&v))
}

/// Iterative robust baseline: median of valid samples, then two rounds of
/// excluding samples at least 15 bpm away and re-taking the median.
pub fn estimate_baseline(segment: &Segment20) -> Result<f64> {
    let valid: Vec<f64> = segment
        .samples
        .iter()
        .zip(&segment.valid_mask)
        .filter(|(_, &v)| v)
        .map(|(&x, _)| x as f64)
        .collect();
    if valid.len() * 2 < SEGMENT_SAMPLES {
        return Err(Error::InsufficientSignal {
            context: "baseline needs at least 50% valid samples",
        });
    }
    let mut b = median_of(valid.iter().copied()).expect("nonempty");
    for _ in 0..2 {
        match median_of(
            valid
                .iter()
                .copied()
                .filter(|x| (x - b).abs() < EVENT_EXCURSION_BPM),
        ) {
            Some(next) => b = next,
            None => break,
        }
    }
    Ok(b)
}

/// Maximal threshold runs about the baseline, bridging up to 2 s of invalid
/// samples. A valid in-band sample always ends a run.
pub fn detect_events(segment: &Segment20, baseline: f64) -> Vec<Event> {
    let mut events = Vec::new();
    for kind in [EventKind::Acceleration, EventKind::Deceleration] {
        let qualifies = |x: f64| match kind {
            EventKind::Acceleration => x >= baseline + EVENT_EXCURSION_BPM,
            EventKind::Deceleration => x <= baseline - EVENT_EXCURSION_BPM,
        };
        // (start, last qualifying index, peak excursion)
        let mut run: Option<(usize, usize, f64)> = None;
        let mut close = |r: (usize, usize, f64), out: &mut Vec<Event>| {
            let (start, last, peak) = r;
            let len = last - start + 1;
            if len >= MIN_EVENT_SAMPLES {
                out.push(Event {
                    kind,
                    start_index: start,
                    duration_s: len as f64 / 4.0,
                    peak_excursion_bpm: peak,
                });
            }
        };
        for i in 0..SEGMENT_SAMPLES {
            if !segment.valid_mask[i] {
                continue; // bridgeable; distance to next qualifying sample decides
            }
            let x = segment.samples[i] as f64;
            if qualifies(x) {
                let exc = (x - baseline).abs();
                run = Some(match run {
                    Some((start, last, peak)) if i - last <= BRIDGE_SAMPLES + 1 => {
                        (start, i, peak.max(exc))
                    }
                    Some(r) => {
                        close(r, &mut events);
                        (i, i, exc)
                    }
                    None => (i, i, exc),
                });
            } else if let Some(r) = run.take() {
                close(r, &mut events);
            }
        }
        if let Some(r) = run.take() {
            close(r, &mut events);
        }
    }
    events.sort_by_key(|e| e.start_index);
    events
}

/// Per-minute band amplitude: max - min of valid samples within
/// `baseline +/- 15` bpm, event spans excluded. `None` marks a minute with
/// fewer than 120 usable samples.
fn minute_amplitudes(segment: &Segment20, baseline: f64, events: &[Event]) -> Vec<Option<f64>> {
    let mut in_event = vec![false; SEGMENT_SAMPLES];
    for e in events {
        for i in e.span() {
            if i < SEGMENT_SAMPLES {
                in_event[i] = true;
            }
        }
    }
    (0..SEGMENT_MINUTES)
        .map(|m| {
            let lo = m * SAMPLES_PER_MINUTE;
            let mut count = 0usize;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for i in lo..lo + SAMPLES_PER_MINUTE {
                if !segment.valid_mask[i] || in_event[i] {
                    continue;
                }
                let x = segment.samples[i] as f64;
                if (x - baseline).abs() >= EVENT_EXCURSION_BPM {
                    continue;
                }
                count += 1;
                min = min.min(x);
                max = max.max(x);
            }
            (count >= MIN_MINUTE_SAMPLES).then(|| max - min)
        })
        .collect()
}

/// Median of per-minute band amplitudes.
pub fn compute_variability(segment: &Segment20, baseline: f64) -> Result<f64> {
    let events = detect_events(segment, baseline);
    let amps = minute_amplitudes(segment, baseline, &events);
    median_of(amps.iter().filter_map(|a| *a)).ok_or(Error::InsufficientSignal {
        context: "no minute has enough valid in-band samples",
    })
}

/// Longest contiguous run of minutes whose amplitude satisfies `pred`.
/// Excluded minutes break the run.
fn longest_run(amps: &[Option<f64>], pred: impl Fn(f64) -> bool) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for a in amps {
        match a {
            Some(x) if pred(*x) => {
                cur += 1;
                best = best.max(cur);
            }
            _ => cur = 0,
        }
    }
    best
}

/// Apply the full deduction table and produce the segment's score card.
pub fn score_segment(segment: &Segment20) -> Result<ScoreCard> {
    let baseline = estimate_baseline(segment)?;
    let events = detect_events(segment, baseline);
    let amps = minute_amplitudes(segment, baseline, &events);
    let variability = median_of(amps.iter().filter_map(|a| *a)).ok_or(
        Error::InsufficientSignal {
            context: "no minute has enough valid in-band samples",
        },
    )?;

    let accelerations: Vec<Event> = events
        .iter()
        .filter(|e| e.kind == EventKind::Acceleration)
        .cloned()
        .collect();
    let decelerations: Vec<Event> = events
        .iter()
        .filter(|e| e.kind == EventKind::Deceleration)
        .cloned()
        .collect();

    let mut deductions: Vec<(Rule, u32)> = Vec::new();
    if !(110.0..=160.0).contains(&baseline) {
        deductions.push((Rule::BaselineOutOfRange, 1));
    }
    // the 20-minute low-variability rule supersedes the 10-minute one
    let low_run = longest_run(&amps, |a| a <= 5.0);
    if low_run >= 20 {
        deductions.push((Rule::LowVariability20Min, 2));
    } else if low_run >= 10 {
        deductions.push((Rule::LowVariability10Min, 1));
    }
    if longest_run(&amps, |a| a > 25.0) >= 20 {
        deductions.push((Rule::HighVariability20Min, 1));
    }
    if accelerations.len() < 2 {
        deductions.push((Rule::AccelerationCriterion, 1));
    }
    for d in &decelerations {
        if (30.0..=60.0).contains(&d.duration_s) {
            deductions.push((Rule::Deceleration30To60s, 1));
        } else if d.duration_s > 180.0 {
            deductions.push((Rule::DecelerationOver3Min, 2));
        }
    }

    let total: u32 = deductions.iter().map(|(_, p)| p).sum();
    let score = 5i32.saturating_sub(total as i32).max(1) as u8;
    Ok(ScoreCard {
        baseline_bpm: baseline,
        variability_bpm: variability,
        accelerations,
        decelerations,
        deductions,
        score,
        binary_label: if score > 3 {
            Label::Normal
        } else {
            Label::Abnormal
        },
    })
}
