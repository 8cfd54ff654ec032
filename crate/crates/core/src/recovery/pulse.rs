use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::RecoveryError;

/// Piecewise-constant complex control amplitudes, rad/s.
///
/// `amplitudes[segment][channel]`; a channel's real and imaginary parts are
/// its in-phase and quadrature components.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    pub segment_duration: f64,
    pub channels: Vec<String>,
    pub amplitudes: Vec<Vec<C64>>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub segment_index: usize,
    pub channel: String,
    pub real: f64,
    pub imag: f64,
    pub segment_duration_s: f64,
}

impl ControlPulse {
    pub fn segments(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn total_duration(&self) -> f64 {
        self.segment_duration * self.segments() as f64
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().flatten().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<PulseRow> {
        let mut rows = Vec::with_capacity(self.segments() * self.channels.len());
        for (k, seg) in self.amplitudes.iter().enumerate() {
            for (name, z) in self.channels.iter().zip(seg) {
                rows.push(PulseRow {
                    segment_index: k,
                    channel: name.clone(),
                    real: z.re,
                    imag: z.im,
                    segment_duration_s: self.segment_duration,
                });
            }
        }
        rows
    }

    pub fn from_rows(rows: &[PulseRow]) -> Result<Self, RecoveryError> {
        let first = rows.first().ok_or_else(|| RecoveryError::InvalidPulse("empty pulse".into()))?;
        let mut channels: Vec<String> = Vec::new();
        for r in rows {
            if !channels.contains(&r.channel) {
                channels.push(r.channel.clone());
            }
        }
        let segments = rows.iter().map(|r| r.segment_index).max().unwrap_or(0) + 1;
        let mut amplitudes = vec![vec![C64::new(0.0, 0.0); channels.len()]; segments];
        let mut seen = vec![vec![false; channels.len()]; segments];
        for r in rows {
            if r.segment_duration_s != first.segment_duration_s {
                return Err(RecoveryError::InvalidPulse("segment durations differ".into()));
            }
            let c = channels.iter().position(|n| *n == r.channel).expect("channel listed");
            amplitudes[r.segment_index][c] = C64::new(r.real, r.imag);
            seen[r.segment_index][c] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(RecoveryError::InvalidPulse("missing segment/channel rows".into()));
        }
        Ok(Self { segment_duration: first.segment_duration_s, channels, amplitudes })
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RecoveryError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| RecoveryError::Io(e.to_string()))?;
        for row in self.to_rows() {
            w.serialize(row).map_err(|e| RecoveryError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| RecoveryError::Io(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self, RecoveryError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| RecoveryError::Io(e.to_string()))?;
        let rows: Result<Vec<PulseRow>, _> = r.deserialize().collect();
        Self::from_rows(&rows.map_err(|e| RecoveryError::Io(e.to_string()))?)
    }
}
