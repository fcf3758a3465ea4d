use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `M` equal-length channels of time-domain samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelSignal {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl MultichannelSignal {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Shape("signal has no channels".into()));
        }
        let n = channels[0].len();
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("channels have unequal lengths".into()));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Shape("signal contains non-finite samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Shape("sample rate must be positive".into()));
        }
        Ok(MultichannelSignal { channels, sample_rate })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, m: usize) -> &[f64] {
        &self.channels[m]
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Mean over channels of the per-channel mean power.
    pub fn mean_power(&self) -> f64 {
        let n = self.len().max(1) as f64;
        self.channels
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n)
            .sum::<f64>()
            / self.channels.len() as f64
    }

    pub fn peak_abs(&self) -> f64 {
        self.channels.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}
