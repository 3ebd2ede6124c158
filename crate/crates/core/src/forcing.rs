//! Periodic excitation: an analytic sine or a measured force record that is
//! repeated with period `period` and linearly interpolated between samples.

use std::f64::consts::PI;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSignal {
    Sine {
        /// N
        amplitude: f64,
        /// Hz
        frequency: f64,
        /// rad
        phase: f64,
    },
    SampledPeriodic {
        times: Vec<f64>,
        values: Vec<f64>,
        period: f64,
    },
}

impl ForcingSignal {
    pub fn sine(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!("sine amplitude must be >= 0, got {amplitude}")));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid(format!("sine frequency must be > 0, got {frequency}")));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("sine phase must be finite"));
        }
        Ok(ForcingSignal::Sine {
            amplitude,
            frequency,
            phase,
        })
    }

    pub fn period(&self) -> f64 {
        match self {
            ForcingSignal::Sine { frequency, .. } => 1.0 / frequency,
            ForcingSignal::SampledPeriodic { period, .. } => *period,
        }
    }

    /// Force at time `t`, in N.
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            ForcingSignal::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
            ForcingSignal::SampledPeriodic { times, values, period } => {
                let tau = t.rem_euclid(*period);
                let n = times.len();
                // Number of samples at or before tau.
                let count = times.partition_point(|&x| x <= tau);
                let (t0, v0, t1, v1) = match count {
                    // Wrap segment, seen from the start of the period.
                    0 => (times[n - 1] - period, values[n - 1], times[0], values[0]),
                    c if c < n => (times[c - 1], values[c - 1], times[c], values[c]),
                    // Wrap segment: last sample back to the first one period later.
                    _ => (times[n - 1], values[n - 1], times[0] + period, values[0]),
                };
                if t1 <= t0 {
                    return v0;
                }
                let s = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
                v0 + (v1 - v0) * s
            }
        }
    }

    /// Next sample instant strictly after `t` (absolute time). The integrator
    /// lands steps on these so that no step straddles an interpolation kink.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        match self {
            ForcingSignal::Sine { .. } => None,
            ForcingSignal::SampledPeriodic { times, period, .. } => {
                let cycles = (t / period).floor();
                let base = cycles * period;
                let next = times
                    .iter()
                    .map(|&x| base + x)
                    .find(|&x| x > t + 1e-9 * period)
                    .unwrap_or(base + period + times[0]);
                Some(next)
            }
        }
    }

    /// Peak absolute force, for scaling and reporting.
    pub fn peak(&self) -> f64 {
        match self {
            ForcingSignal::Sine { amplitude, .. } => *amplitude,
            ForcingSignal::SampledPeriodic { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Validate `(t, F)` rows into a sampled periodic signal.
pub fn load_samples(rows: &[(f64, f64)], period: f64) -> Result<ForcingSignal> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid(format!("period must be > 0, got {period}")));
    }
    if rows.len() < 2 {
        return Err(Error::invalid(format!(
            "a sampled signal needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    for (i, &(t, f)) in rows.iter().enumerate() {
        let row = i + 1;
        if !t.is_finite() || !f.is_finite() {
            return Err(Error::invalid(format!("row {row}: non-finite value ({t}, {f})")));
        }
        if i == 0 && t < 0.0 {
            return Err(Error::invalid(format!("row {row}: time {t} is negative")));
        }
        if i > 0 && t <= rows[i - 1].0 {
            return Err(Error::invalid(format!(
                "row {row}: time {t} is not ascending (previous {})",
                rows[i - 1].0
            )));
        }
        if t > period {
            return Err(Error::invalid(format!(
                "row {row}: time {t} lies beyond the period {period}"
            )));
        }
    }
    Ok(ForcingSignal::SampledPeriodic {
        times: rows.iter().map(|r| r.0).collect(),
        values: rows.iter().map(|r| r.1).collect(),
        period,
    })
}

/// Parse two-column `time, force` text. Columns may be separated by commas
/// or whitespace; `#` starts a comment.
pub fn parse_samples(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 2 columns (time, force), found {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("'{s}': {e}"),
            })
        };
        rows.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(rows)
}

pub fn read_force_file(path: &Path, period: f64) -> Result<ForcingSignal> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    load_samples(&parse_samples(&text)?, period)
}
