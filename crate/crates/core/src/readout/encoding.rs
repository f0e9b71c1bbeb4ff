use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{whole_multiple, IntegratorConfig};

/// Maps a normalized scalar input onto the two drive amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    /// sqrt(Hz)
    pub eps_a_max: f64,
    /// sqrt(Hz)
    pub eps_b_max: f64,
    /// Length of one constant-drive segment, in seconds.
    pub duration: f64,
    /// Time within the segment at which features are read, in seconds.
    pub readout_time: f64,
    /// Number of evenly spaced read times ending at `readout_time`.
    pub feature_samples: usize,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            eps_a_max: 1e6,
            eps_b_max: 2e5,
            duration: 100e-9,
            readout_time: 100e-9,
            feature_samples: 1,
        }
    }
}

impl EncodingSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_a_max", self.eps_a_max), ("eps_b_max", self.eps_b_max)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidParameter(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.readout_time > 0.0 && self.readout_time <= self.duration) {
            return Err(Error::InvalidParameter(format!(
                "readout_time must lie in (0, duration], got {} with duration {}",
                self.readout_time, self.duration
            )));
        }
        if self.feature_samples == 0 {
            return Err(Error::InvalidParameter("feature_samples must be >= 1".into()));
        }
        Ok(())
    }

    /// Read times inside one segment, in steps of `cfg.dt`.
    pub(crate) fn read_steps(&self, cfg: &IntegratorConfig) -> Result<Vec<usize>> {
        let last = whole_multiple(self.readout_time, cfg.dt, "readout_time")?;
        let m = self.feature_samples;
        if last % m != 0 {
            return Err(Error::InvalidParameter(format!(
                "readout_time must split into {m} whole-step intervals"
            )));
        }
        Ok((1..=m).map(|j| last / m * j).collect())
    }

    pub(crate) fn segment_steps(&self, cfg: &IntegratorConfig) -> Result<usize> {
        whole_multiple(self.duration, cfg.dt, "duration")
    }
}

/// `(s eps_a_max, s eps_b_max)`; both drives share the normalized factor.
pub fn encode_input(s: f64, spec: &EncodingSpec) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("input {s} outside [0, 1]")));
    }
    Ok((s * spec.eps_a_max, s * spec.eps_b_max))
}
