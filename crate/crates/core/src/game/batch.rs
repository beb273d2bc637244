//! Increasing batch-size schedule for the sample-average gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch sizes `M_k = ceil(scale * (k + offset)^(exponent + 1))`, clamped to
/// at least one sample. The superlinear growth makes `1/M_k` summable, which
/// is what drives the variance of the sampled gradient to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    /// Scale `c_b > 0`.
    pub scale: f64,
    /// Offset `k0 >= 0`.
    pub offset: f64,
    /// Exponent `a > 0`.
    pub exponent: f64,
}

impl BatchSchedule {
    pub fn new(scale: f64, offset: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter {
                name: "batch.scale",
                reason: "must be positive".into(),
            });
        }
        if !(offset >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "batch.offset",
                reason: "must be nonnegative".into(),
            });
        }
        if !(exponent > 0.0) {
            return Err(Error::InvalidParameter {
                name: "batch.exponent",
                reason: "must be positive".into(),
            });
        }
        Ok(Self { scale, offset, exponent })
    }

    /// `M_k`, monotone nondecreasing in `k`.
    pub fn batch_size(&self, k: u64) -> usize {
        let value = self.scale * (k as f64 + self.offset).powf(self.exponent + 1.0);
        let rounded = value.ceil();
        if rounded >= 1.0 {
            rounded as usize
        } else {
            1
        }
    }
}

impl Default for BatchSchedule {
    fn default() -> Self {
        Self { scale: 1.0, offset: 1.0, exponent: 0.2 }
    }
}
