//! Core time-series data model for 4 Hz fetal heart rate records.
//!
//! A record is a zero-filled, spliced bpm series with a per-sample validity
//! mask. Minute units (240 samples) and 10-minute windows (2400 samples) are
//! the indexing granularities everything downstream is defined on.

use crate::error::{Error, Result};

/// Fixed sampling rate of all records.
pub const SAMPLE_RATE_HZ: usize = 4;
/// Samples in one minute at 4 Hz.
pub const SAMPLES_PER_MINUTE: usize = 240;
/// Model input window length in minutes.
pub const WINDOW_MINUTES: usize = 10;
/// Model input window length in samples.
pub const WINDOW_SAMPLES: usize = WINDOW_MINUTES * SAMPLES_PER_MINUTE;
/// Physiologic validity band; valid samples outside it are remapped to missing.
pub const MIN_VALID_BPM: f32 = 30.0;
pub const MAX_VALID_BPM: f32 = 250.0;

/// One excision made by long-gap removal: `index` is the position in the
/// post-splice sample stream where `excised_samples` samples were cut out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splice {
    pub index: usize,
    pub excised_samples: usize,
}

/// A spliced, zero-filled 4 Hz heart-rate series with a validity mask.
///
/// Invariants enforced at construction:
/// - `samples.len() == valid_mask.len()`
/// - masked-out samples hold the value 0.0
/// - valid samples lie in `[30, 250]` bpm (out-of-band values become missing)
/// - splice indices are strictly increasing and within bounds
///
/// Values are immutable after construction; the type is `Send + Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct FhrRecord {
    source_id: String,
    samples: Vec<f32>,
    valid_mask: Vec<bool>,
    splices: Vec<Splice>,
}

/// A single minute of a record: exactly 240 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteUnit {
    pub index: usize,
    pub samples: Vec<f32>,
}

/// A 10-minute model input: exactly 2400 samples covering minutes
/// `[start_minute, start_minute + 9]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_minute: usize,
    pub samples: Vec<f32>,
}

impl FhrRecord {
    /// Build a record from raw samples and a validity mask.
    ///
    /// Masked-out samples are zeroed; valid samples outside the
    /// physiologic band (or non-finite) are marked missing and zeroed.
    pub fn new(
        source_id: impl Into<String>,
        mut samples: Vec<f32>,
        mut valid_mask: Vec<bool>,
    ) -> Result<Self> {
        if samples.len() != valid_mask.len() {
            return Err(Error::ShapeError(format!(
                "samples ({}) and valid_mask ({}) lengths differ",
                samples.len(),
                valid_mask.len()
            )));
        }
        for (x, v) in samples.iter_mut().zip(valid_mask.iter_mut()) {
            if *v && (!x.is_finite() || *x < MIN_VALID_BPM || *x > MAX_VALID_BPM) {
                *v = false;
            }
            if !*v {
                *x = 0.0;
            }
        }
        Ok(FhrRecord {
            source_id: source_id.into(),
            samples,
            valid_mask,
            splices: Vec::new(),
        })
    }

    /// Attach a splice log. Indices must be strictly increasing and within
    /// the record bounds.
    pub(crate) fn with_splices(mut self, splices: Vec<Splice>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for s in &splices {
            if s.index > self.samples.len() {
                return Err(Error::ShapeError(format!(
                    "splice index {} beyond record length {}",
                    s.index,
                    self.samples.len()
                )));
            }
            if let Some(p) = prev {
                if s.index <= p {
                    return Err(Error::ShapeError(format!(
                        "splice indices not strictly increasing: {} after {}",
                        s.index, p
                    )));
                }
            }
            prev = Some(s.index);
        }
        self.splices = splices;
        Ok(self)
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid_mask
    }

    pub fn splices(&self) -> &[Splice] {
        &self.splices
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of whole minutes; a trailing partial minute does not count.
    pub fn full_minutes(&self) -> usize {
        self.samples.len() / SAMPLES_PER_MINUTE
    }

    /// Split into consecutive whole minute units; the trailing partial
    /// minute is dropped.
    pub fn minute_units(&self) -> Result<Vec<MinuteUnit>> {
        let minutes = self.full_minutes();
        if minutes == 0 {
            return Err(Error::RecordTooShort {
                required_minutes: 1,
                actual_minutes: 0,
            });
        }
        Ok((0..minutes)
            .map(|i| MinuteUnit {
                index: i,
                samples: self.samples[i * SAMPLES_PER_MINUTE..(i + 1) * SAMPLES_PER_MINUTE]
                    .to_vec(),
            })
            .collect())
    }

    /// The 10-minute window starting at `start_minute`.
    pub fn window_at(&self, start_minute: usize) -> Result<Window> {
        let minutes = self.full_minutes();
        if start_minute + WINDOW_MINUTES > minutes {
            return Err(Error::WindowOutOfRange {
                start_minute,
                minutes,
            });
        }
        let lo = start_minute * SAMPLES_PER_MINUTE;
        Ok(Window {
            start_minute,
            samples: self.samples[lo..lo + WINDOW_SAMPLES].to_vec(),
        })
    }

    /// Fraction of samples marked valid.
    pub fn valid_fraction(&self) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::EmptyRecord);
        }
        let valid = self.valid_mask.iter().filter(|&&v| v).count();
        Ok(valid as f64 / self.samples.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_of(n: usize) -> FhrRecord {
        let samples: Vec<f32> = (0..n).map(|i| 120.0 + (i % 40) as f32).collect();
        let mask = vec![true; n];
        FhrRecord::new("t", samples, mask).unwrap()
    }

    #[test]
    fn construction_zeroes_masked_and_out_of_band() {
        let r = FhrRecord::new(
            "t",
            vec![140.0, 20.0, 300.0, f32::NAN, 0.0],
            vec![true, true, true, true, false],
        )
        .unwrap();
        assert_eq!(r.valid_mask(), &[true, false, false, false, false]);
        assert_eq!(r.samples(), &[140.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let err = FhrRecord::new("t", vec![140.0], vec![true, true]).unwrap_err();
        assert_eq!(err.name(), "ShapeError");
    }

    #[test]
    fn minute_units_counts() {
        assert_eq!(record_of(14400).minute_units().unwrap().len(), 60);
        assert_eq!(record_of(14639).minute_units().unwrap().len(), 60);
        let err = record_of(239).minute_units().unwrap_err();
        assert_eq!(err.name(), "RecordTooShort");
    }

    #[test]
    fn minute_units_reproduce_prefix() {
        let r = record_of(14639);
        let units = r.minute_units().unwrap();
        let rebuilt: Vec<f32> = units.iter().flat_map(|u| u.samples.clone()).collect();
        assert_eq!(&r.samples()[..rebuilt.len()], &rebuilt[..]);
        assert_eq!(rebuilt.len(), 14400);
    }

    #[test]
    fn window_at_bounds() {
        let r = record_of(14400);
        let w = r.window_at(0).unwrap();
        assert_eq!(w.samples, &r.samples()[0..2400]);
        let w = r.window_at(50).unwrap();
        assert_eq!(w.samples, &r.samples()[12000..14400]);
        let err = r.window_at(51).unwrap_err();
        assert_eq!(err.name(), "WindowOutOfRange");
    }

    #[test]
    fn window_matches_minute_concat() {
        let r = record_of(240 * 23 + 17);
        let units = r.minute_units().unwrap();
        for m in 0..=(r.full_minutes() - WINDOW_MINUTES) {
            let w = r.window_at(m).unwrap();
            let cat: Vec<f32> = units[m..m + WINDOW_MINUTES]
                .iter()
                .flat_map(|u| u.samples.clone())
                .collect();
            assert_eq!(w.samples, cat);
        }
        assert!(r.window_at(r.full_minutes() - WINDOW_MINUTES + 1).is_err());
    }

    #[test]
    fn valid_fraction_counts() {
        let r = record_of(240);
        assert_eq!(r.valid_fraction().unwrap(), 1.0);

        let mut mask = vec![true; 240];
        for m in mask.iter_mut().take(120) {
            *m = false;
        }
        let r = FhrRecord::new("t", vec![140.0; 240], mask).unwrap();
        assert_eq!(r.valid_fraction().unwrap(), 0.5);

        let mut mask = vec![true; 240];
        mask[3] = false;
        mask[100] = false;
        mask[200] = false;
        let r = FhrRecord::new("t", vec![140.0; 240], mask).unwrap();
        assert!((r.valid_fraction().unwrap() - 0.9875).abs() < 1e-12);

        let empty = FhrRecord::new("t", vec![], vec![]).unwrap();
        assert_eq!(empty.valid_fraction().unwrap_err().name(), "EmptyRecord");
    }

    #[test]
    fn splice_validation() {
        let r = record_of(480);
        let ok = r.clone().with_splices(vec![
            Splice {
                index: 10,
                excised_samples: 2880,
            },
            Splice {
                index: 400,
                excised_samples: 2500,
            },
        ]);
        assert!(ok.is_ok());
        let bad = record_of(480).with_splices(vec![
            Splice {
                index: 400,
                excised_samples: 2500,
            },
            Splice {
                index: 400,
                excised_samples: 2500,
            },
        ]);
        assert!(bad.is_err());
    }
}
