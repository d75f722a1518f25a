//! Raw-file parsing, zero-filling, long-gap excision, and the signal-loss
//! quality gate.
//!
//! Input files are two-column CSV (`timestamp_ms,fhr_bpm`) sampled nominally
//! at 4 Hz. Missing data is never interpolated: absent grid points become
//! zeros with the validity mask cleared, and gaps longer than the threshold
//! are cut out entirely with a splice log entry.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::signal::{FhrRecord, Splice, SAMPLES_PER_MINUTE};

/// Nominal sample spacing in milliseconds (4 Hz).
pub const SAMPLE_SPACING_MS: i64 = 250;
/// Gaps strictly longer than this many minutes are excised.
pub const DEFAULT_GAP_THRESHOLD_MIN: usize = 10;
/// Records that lost more than half their signal are rejected.
pub const MAX_SIGNAL_LOSS: f64 = 0.5;

/// One parsed input row. `bpm` is `None` for a missing measurement
/// (empty field or literal 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRow {
    pub timestamp_ms: i64,
    pub bpm: Option<f32>,
}

/// A parsed input file, in file order, timestamps strictly increasing.
#[derive(Debug, Clone, Default)]
pub struct RawRecord {
    pub rows: Vec<RawRow>,
}

/// Outcome of the signal-loss quality gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDecision {
    Accept,
    /// Rejected: more than 50% of the signal was lost.
    Reject { valid_fraction: f64 },
}

impl GateDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, GateDecision::Accept)
    }
}

/// Parse a `timestamp_ms,fhr_bpm` CSV stream.
///
/// The header line is optional; data rows are numbered from 1 in errors.
/// An empty value field or a literal 0 marks the sample as missing.
pub fn parse_csv<R: Read>(stream: R) -> Result<RawRecord> {
    let reader = BufReader::new(stream);
    let mut rows = Vec::new();
    let mut row_no = 0usize;
    let mut last_ts: Option<i64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 && trimmed.starts_with("timestamp_ms") {
            continue;
        }
        row_no += 1;
        let mut fields = trimmed.split(',');
        let ts_field = fields.next().unwrap_or("").trim();
        let bpm_field = fields.next().unwrap_or("").trim();
        if fields.next().is_some() {
            return Err(Error::ParseError {
                line: row_no,
                message: "expected two fields".into(),
            });
        }
        let timestamp_ms: i64 = ts_field.parse().map_err(|_| Error::ParseError {
            line: row_no,
            message: format!("bad timestamp '{ts_field}'"),
        })?;
        if let Some(prev) = last_ts {
            if timestamp_ms <= prev {
                return Err(Error::TimestampOrderError { line: row_no });
            }
        }
        last_ts = Some(timestamp_ms);
        let bpm = if bpm_field.is_empty() {
            None
        } else {
            let v: f32 = bpm_field.parse().map_err(|_| Error::ParseError {
                line: row_no,
                message: format!("bad value '{bpm_field}'"),
            })?;
            if v == 0.0 {
                None
            } else {
                Some(v)
            }
        };
        rows.push(RawRow { timestamp_ms, bpm });
    }
    Ok(RawRecord { rows })
}

/// Place rows on a regular 4 Hz grid spanning first to last timestamp.
/// Grid points with no measurement become 0 with the mask cleared; no
/// interpolation is performed.
pub fn zero_fill(raw: &RawRecord, source_id: impl Into<String>) -> Result<FhrRecord> {
    if raw.rows.is_empty() {
        return FhrRecord::new(source_id, Vec::new(), Vec::new());
    }
    let t0 = raw.rows[0].timestamp_ms;
    let span = raw.rows.last().unwrap().timestamp_ms - t0;
    let n = grid_index(span) + 1;
    let mut samples = vec![0.0f32; n];
    let mut mask = vec![false; n];
    for row in &raw.rows {
        let idx = grid_index(row.timestamp_ms - t0);
        if let Some(v) = row.bpm {
            samples[idx] = v;
            mask[idx] = true;
        }
    }
    FhrRecord::new(source_id, samples, mask)
}

fn grid_index(offset_ms: i64) -> usize {
    // nearest grid point; timestamps are nominally multiples of 250 ms
    ((offset_ms + SAMPLE_SPACING_MS / 2) / SAMPLE_SPACING_MS) as usize
}

/// Remove every maximal invalid run strictly longer than `threshold_min`
/// minutes and log each removal as a splice. Existing splice entries are
/// remapped onto the new sample stream; entries that collapse onto the same
/// cut point are merged.
pub fn excise_long_gaps(record: &FhrRecord, threshold_min: usize) -> FhrRecord {
    assert!(threshold_min > 0, "gap threshold must be positive");
    let threshold_samples = threshold_min * SAMPLES_PER_MINUTE;
    let mask = record.valid_mask();
    let n = mask.len();

    // maximal invalid runs [start, end) with length > threshold
    let mut cuts: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if !mask[i] {
            let start = i;
            while i < n && !mask[i] {
                i += 1;
            }
            if i - start > threshold_samples {
                cuts.push((start, i));
            }
        } else {
            i += 1;
        }
    }
    if cuts.is_empty() {
        return record.clone();
    }

    let removed_before = |pos: usize| -> usize {
        cuts.iter()
            .map(|&(a, b)| b.min(pos).saturating_sub(a.min(pos)))
            .sum()
    };

    let mut samples = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let mut keep_from = 0;
    for &(a, b) in &cuts {
        samples.extend_from_slice(&record.samples()[keep_from..a]);
        valid.extend_from_slice(&record.valid_mask()[keep_from..a]);
        keep_from = b;
    }
    samples.extend_from_slice(&record.samples()[keep_from..]);
    valid.extend_from_slice(&record.valid_mask()[keep_from..]);

    let mut splices: Vec<Splice> = record
        .splices()
        .iter()
        .map(|s| Splice {
            index: s.index - removed_before(s.index),
            excised_samples: s.excised_samples,
        })
        .collect();
    splices.extend(cuts.iter().map(|&(a, b)| Splice {
        index: a - removed_before(a),
        excised_samples: b - a,
    }));
    splices.sort_by_key(|s| s.index);
    let mut merged: Vec<Splice> = Vec::with_capacity(splices.len());
    for s in splices {
        match merged.last_mut() {
            Some(last) if last.index == s.index => last.excised_samples += s.excised_samples,
            _ => merged.push(s),
        }
    }

    FhrRecord::new(record.source_id(), samples, valid)
        .and_then(|r| r.with_splices(merged))
        .expect("excision preserves record invariants")
}

/// Reject a record that lost more than 50% of its signal. Evaluate this on
/// the zero-filled record before gap excision, so removed gaps still count
/// as lost signal.
pub fn quality_gate(record: &FhrRecord) -> Result<GateDecision> {
    let valid_fraction = record.valid_fraction()?;
    if valid_fraction < 1.0 - MAX_SIGNAL_LOSS {
        Ok(GateDecision::Reject { valid_fraction })
    } else {
        Ok(GateDecision::Accept)
    }
}

/// Write the canonical processed form: a `#`-prefixed `key=value` metadata
/// block followed by `minute,sample_offset,fhr_bpm,valid` rows.
pub fn write_canonical<W: Write>(record: &FhrRecord, mut out: W) -> Result<()> {
    writeln!(out, "# source_id={}", record.source_id())?;
    writeln!(out, "# sample_rate_hz={}", crate::signal::SAMPLE_RATE_HZ)?;
    for s in record.splices() {
        writeln!(out, "# splice={},{}", s.index, s.excised_samples)?;
    }
    writeln!(out, "minute,sample_offset,fhr_bpm,valid")?;
    for (i, (&x, &v)) in record
        .samples()
        .iter()
        .zip(record.valid_mask())
        .enumerate()
    {
        writeln!(
            out,
            "{},{},{},{}",
            i / SAMPLES_PER_MINUTE,
            i % SAMPLES_PER_MINUTE,
            x,
            u8::from(v)
        )?;
    }
    Ok(())
}

/// Read a record written by [`write_canonical`]; value-exact round trip.
pub fn read_canonical<R: Read>(input: R) -> Result<FhrRecord> {
    let reader = BufReader::new(input);
    let mut source_id = String::new();
    let mut splices = Vec::new();
    let mut samples = Vec::new();
    let mut mask = Vec::new();
    let mut row_no = 0usize;
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let meta = meta.trim();
            if let Some((key, value)) = meta.split_once('=') {
                match key.trim() {
                    "source_id" => source_id = value.trim().to_string(),
                    "splice" => {
                        let (idx, len) = value.split_once(',').ok_or_else(|| Error::ParseError {
                            line: row_no,
                            message: "splice needs index,length".into(),
                        })?;
                        splices.push(Splice {
                            index: idx.trim().parse().map_err(|_| Error::ParseError {
                                line: row_no,
                                message: "bad splice index".into(),
                            })?,
                            excised_samples: len.trim().parse().map_err(|_| {
                                Error::ParseError {
                                    line: row_no,
                                    message: "bad splice length".into(),
                                }
                            })?,
                        });
                    }
                    _ => {}
                }
            }
            continue;
        }
        if trimmed.starts_with("minute,") {
            continue;
        }
        row_no += 1;
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::ParseError {
                line: row_no,
                message: "expected four fields".into(),
            });
        }
        let bpm: f32 = fields[2].trim().parse().map_err(|_| Error::ParseError {
            line: row_no,
            message: format!("bad value '{}'", fields[2]),
        })?;
        let valid = match fields[3].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::ParseError {
                    line: row_no,
                    message: format!("bad valid flag '{other}'"),
                })
            }
        };
        samples.push(bpm);
        mask.push(valid);
    }
    FhrRecord::new(source_id, samples, mask)?.with_splices(splices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_rows() {
        let raw = parse_csv("0,140.5\n250,141.0".as_bytes()).unwrap();
        assert_eq!(raw.rows.len(), 2);
        assert_eq!(raw.rows[0].bpm, Some(140.5));
        assert_eq!(raw.rows[1].timestamp_ms, 250);
    }

    #[test]
    fn parse_empty_field_is_missing() {
        let raw = parse_csv("0,140.5\n250,".as_bytes()).unwrap();
        assert_eq!(raw.rows[1].bpm, None);
        let raw = parse_csv("0,140.5\n250,0".as_bytes()).unwrap();
        assert_eq!(raw.rows[1].bpm, None);
    }

    #[test]
    fn parse_rejects_duplicate_timestamp() {
        let err = parse_csv("0,140\n0,141".as_bytes()).unwrap_err();
        match err {
            Error::TimestampOrderError { line } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_number() {
        let err = parse_csv("0,140\n250,abc".as_bytes()).unwrap_err();
        match err {
            Error::ParseError { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_skips_header() {
        let raw = parse_csv("timestamp_ms,fhr_bpm\n0,140.5\n250,141".as_bytes()).unwrap();
        assert_eq!(raw.rows.len(), 2);
    }

    #[test]
    fn zero_fill_identity_when_complete() {
        let raw = parse_csv("0,140.5\n250,141.0\n500,142.0".as_bytes()).unwrap();
        let rec = zero_fill(&raw, "t").unwrap();
        assert_eq!(rec.samples(), &[140.5, 141.0, 142.0]);
        assert!(rec.valid_mask().iter().all(|&v| v));
    }

    #[test]
    fn zero_fill_gap_becomes_zeros() {
        let raw = parse_csv("0,140\n250,141\n1000,143".as_bytes()).unwrap();
        let rec = zero_fill(&raw, "t").unwrap();
        assert_eq!(rec.len(), 5);
        assert_eq!(rec.samples(), &[140.0, 141.0, 0.0, 0.0, 143.0]);
        assert_eq!(rec.valid_mask(), &[true, true, false, false, true]);
    }

    #[test]
    fn zero_fill_idempotent() {
        let raw = parse_csv("0,140\n250,\n500,143".as_bytes()).unwrap();
        let rec = zero_fill(&raw, "t").unwrap();
        // feeding the zero-filled series back through produces the same record
        let rows: Vec<RawRow> = rec
            .samples()
            .iter()
            .zip(rec.valid_mask())
            .enumerate()
            .map(|(i, (&x, &v))| RawRow {
                timestamp_ms: i as i64 * SAMPLE_SPACING_MS,
                bpm: v.then_some(x),
            })
            .collect();
        let rec2 = zero_fill(&RawRecord { rows }, "t").unwrap();
        assert_eq!(rec.samples(), rec2.samples());
        assert_eq!(rec.valid_mask(), rec2.valid_mask());
    }

    fn record_with_gap(gap_minutes: usize) -> FhrRecord {
        let head = 5 * SAMPLES_PER_MINUTE;
        let gap = gap_minutes * SAMPLES_PER_MINUTE;
        let tail = 5 * SAMPLES_PER_MINUTE;
        let mut samples = vec![140.0f32; head + gap + tail];
        let mut mask = vec![true; head + gap + tail];
        for i in head..head + gap {
            samples[i] = 0.0;
            mask[i] = false;
        }
        FhrRecord::new("g", samples, mask).unwrap()
    }

    #[test]
    fn excise_removes_long_gap() {
        let rec = record_with_gap(12);
        let out = excise_long_gaps(&rec, DEFAULT_GAP_THRESHOLD_MIN);
        assert_eq!(out.len(), 10 * SAMPLES_PER_MINUTE);
        assert_eq!(out.splices().len(), 1);
        assert_eq!(out.splices()[0].index, 5 * SAMPLES_PER_MINUTE);
        assert_eq!(out.splices()[0].excised_samples, 12 * SAMPLES_PER_MINUTE);
        assert!(out.valid_mask().iter().all(|&v| v));
    }

    #[test]
    fn excise_keeps_short_gap() {
        let rec = record_with_gap(8);
        let out = excise_long_gaps(&rec, DEFAULT_GAP_THRESHOLD_MIN);
        assert_eq!(out.samples(), rec.samples());
        assert!(out.splices().is_empty());
    }

    #[test]
    fn excise_noop_without_gaps() {
        let rec = FhrRecord::new("t", vec![140.0; 480], vec![true; 480]).unwrap();
        let out = excise_long_gaps(&rec, DEFAULT_GAP_THRESHOLD_MIN);
        assert_eq!(out.samples(), rec.samples());
        assert!(out.splices().is_empty());
    }

    #[test]
    fn excise_preserves_valid_samples() {
        let rec = record_with_gap(11);
        let before = rec.valid_mask().iter().filter(|&&v| v).count();
        let out = excise_long_gaps(&rec, DEFAULT_GAP_THRESHOLD_MIN);
        let after = out.valid_mask().iter().filter(|&&v| v).count();
        assert_eq!(before, after);
    }

    #[test]
    fn excise_boundary_exactly_threshold_kept() {
        // exactly 10 minutes invalid is not "> 10 minutes"
        let rec = record_with_gap(10);
        let out = excise_long_gaps(&rec, DEFAULT_GAP_THRESHOLD_MIN);
        assert_eq!(out.len(), rec.len());
    }

    #[test]
    fn gate_thresholds() {
        let mut mask = vec![true; 1000];
        for m in mask.iter_mut().take(600) {
            *m = false;
        }
        let r = FhrRecord::new("t", vec![140.0; 1000], mask).unwrap();
        assert!(matches!(
            quality_gate(&r).unwrap(),
            GateDecision::Reject { .. }
        ));

        let r = FhrRecord::new("t", vec![140.0; 1000], vec![true; 1000]).unwrap();
        assert!(quality_gate(&r).unwrap().is_accept());

        let mut mask = vec![true; 1000];
        for m in mask.iter_mut().take(500) {
            *m = false;
        }
        let r = FhrRecord::new("t", vec![140.0; 1000], mask).unwrap();
        assert!(quality_gate(&r).unwrap().is_accept(), "exactly 50% loss accepted");

        let empty = FhrRecord::new("t", vec![], vec![]).unwrap();
        assert_eq!(quality_gate(&empty).unwrap_err().name(), "EmptyRecord");
    }

    #[test]
    fn canonical_round_trip() {
        let rec = record_with_gap(12);
        let rec = excise_long_gaps(&rec, 10);
        let mut buf = Vec::new();
        write_canonical(&rec, &mut buf).unwrap();
        let back = read_canonical(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), rec.samples());
        assert_eq!(back.valid_mask(), rec.valid_mask());
        assert_eq!(back.splices(), rec.splices());
        assert_eq!(back.source_id(), rec.source_id());
    }
}
