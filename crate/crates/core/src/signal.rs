//! Sample buffers and chirp generation.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Complex baseband samples at a fixed rate.
///
/// A zero-length buffer is representable (an empty payload is a valid
/// frame component); transforms reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Used internally where the rate has already been validated.
    pub(crate) fn with_rate_of(samples: Vec<Complex64>, other: &ComplexSignal) -> Self {
        Self {
            samples,
            sample_rate_hz: other.sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    /// Mean power per sample; zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Copy of `len` samples starting at `start`, zero-padded past the end.
    pub fn window(&self, start: usize, len: usize) -> ComplexSignal {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        if start < self.samples.len() {
            let end = (start + len).min(self.samples.len());
            out[..end - start].copy_from_slice(&self.samples[start..end]);
        }
        ComplexSignal::with_rate_of(out, self)
    }

    pub(crate) fn require_non_empty(&self, what: &str) -> Result<()> {
        if self.samples.is_empty() {
            Err(Error::domain(format!("{what}: empty input")))
        } else {
            Ok(())
        }
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Where `n = 0` sits on the time axis of a generated chirp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TimeOrigin {
    /// `t = n T` for `n = 0..Ns`.
    Start,
    /// `t = (n - floor(Ns/2)) T`, the index convention used by the transform.
    #[default]
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    /// Chirp rate in 1/s^2.
    pub rho: f64,
    pub num_samples: usize,
    /// Sample spacing in seconds.
    pub symbol_period: f64,
    #[serde(default)]
    pub origin: TimeOrigin,
}

impl ChirpSpec {
    pub fn new(rho: f64, num_samples: usize, symbol_period: f64) -> Result<Self> {
        let spec = Self {
            rho,
            num_samples,
            symbol_period,
            origin: TimeOrigin::Center,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_origin(mut self, origin: TimeOrigin) -> Self {
        self.origin = origin;
        self
    }

    /// Chirp rate that the transform focuses at rotation angle `phi`,
    /// i.e. the inverse of `phi = -atan(1 / (rho Ns T^2))`.
    pub fn rate_for_angle(phi: f64, num_samples: usize, symbol_period: f64) -> f64 {
        -1.0 / (phi.tan() * num_samples as f64 * symbol_period * symbol_period)
    }

    /// Rotation angle at which this chirp collapses to an impulse.
    pub fn focus_angle(&self) -> f64 {
        let d = self.rho * self.num_samples as f64 * self.symbol_period * self.symbol_period;
        -(1.0 / d).atan()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 8 {
            return Err(Error::domain(format!(
                "chirp needs at least 8 samples, got {}",
                self.num_samples
            )));
        }
        if !(self.symbol_period.is_finite() && self.symbol_period > 0.0) {
            return Err(Error::domain("symbol period must be positive"));
        }
        if !self.rho.is_finite() {
            return Err(Error::domain("chirp rate must be finite"));
        }
        Ok(())
    }
}

/// `exp(j pi rho t^2)` sampled at `t = n T` (shifted per `spec.origin`).
///
/// The sample rate of the returned buffer is `1 / T`.
pub fn chirp(spec: &ChirpSpec) -> Result<ComplexSignal> {
    spec.validate()?;
    let offset = match spec.origin {
        TimeOrigin::Start => 0.0,
        TimeOrigin::Center => (spec.num_samples / 2) as f64,
    };
    let samples = (0..spec.num_samples)
        .map(|n| {
            let t = (n as f64 - offset) * spec.symbol_period;
            Complex64::from_polar(1.0, PI * spec.rho * t * t)
        })
        .collect();
    ComplexSignal::new(samples, 1.0 / spec.symbol_period)
}
