//! Training sequence, QAM payload and transmit frame construction.

use crate::error::{Error, Result};
use crate::frft::FrftPlan;
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Pulse-shaping filter half-length, in symbols.
pub const RRC_SPAN_SYMBOLS: usize = 32;

/// Dual-chirp training sequence `F^a[dc] + F^-a[dc]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSequence {
    /// Rotation angle `a = P pi/2` of the generating transform.
    pub alpha: f64,
    pub order_p: f64,
    pub ns: usize,
    /// One sample per symbol; the sample rate is nominal (1.0) until shaped.
    pub samples: ComplexSignal,
    /// Angle at which the `+a` chirp collapses, `(1 - P) pi/2`.
    pub phi1: f64,
    pub phi2: f64,
}

impl TrainingSequence {
    /// The sequence rescaled to unit mean power per symbol.
    pub fn unit_power_samples(&self) -> Vec<Complex64> {
        let p = self.samples.mean_power();
        let g = 1.0 / p.sqrt();
        self.samples.samples().iter().map(|v| v * g).collect()
    }
}

pub fn generate_ts(alpha: f64, ns: usize) -> Result<TrainingSequence> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "training sequence angle must lie in (0, pi/2), got {alpha}"
        )));
    }
    if ns < 64 || !ns.is_power_of_two() {
        return Err(Error::domain(format!(
            "training sequence length must be a power of two >= 64, got {ns}"
        )));
    }
    let dc = vec![Complex64::new(1.0 / (ns as f64).sqrt(), 0.0); ns];
    let plan = FrftPlan::new(ns);
    let mut ops = OpCount::new();
    let up = plan.transform(&dc, alpha, &mut ops);
    let down = plan.transform(&dc, -alpha, &mut ops);
    let samples: Vec<Complex64> = up.iter().zip(&down).map(|(a, b)| a + b).collect();

    let order_p = alpha / FRAC_PI_2;
    let phi1 = (1.0 - order_p) * FRAC_PI_2;
    Ok(TrainingSequence {
        alpha,
        order_p,
        ns,
        samples: ComplexSignal::new(samples, 1.0)?,
        phi1,
        phi2: -phi1,
    })
}

/// Same as [`generate_ts`] with the fractional order `P` instead of the angle.
pub fn generate_ts_from_order(order_p: f64, ns: usize) -> Result<TrainingSequence> {
    if !(order_p > 0.0 && order_p < 1.0) {
        return Err(Error::domain(format!(
            "fractional order must lie in (0, 1), got {order_p}"
        )));
    }
    generate_ts(order_p * FRAC_PI_2, ns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    #[default]
    #[serde(rename = "16qam")]
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    /// Unit-average-energy Gray constellation, indexed by the symbol's bits.
    pub fn constellation(self) -> Vec<Complex64> {
        match self {
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                (0..4)
                    .map(|b| {
                        let re = if b & 0b10 == 0 { -a } else { a };
                        let im = if b & 0b01 == 0 { -a } else { a };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
            Modulation::Qam16 => {
                // Gray order along each axis: 00 -> -3, 01 -> -1, 11 -> 1, 10 -> 3
                let level = |b: usize| match b {
                    0b00 => -3.0,
                    0b01 => -1.0,
                    0b11 => 1.0,
                    _ => 3.0,
                };
                let g = 1.0 / 10f64.sqrt();
                (0..16)
                    .map(|b| Complex64::new(level(b >> 2) * g, level(b & 0b11) * g))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub payload_symbols: usize,
    #[serde(default)]
    pub modulation: Modulation,
    pub rolloff: f64,
    pub tx_sps: usize,
    pub baud_hz: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            payload_symbols: 65536 - 1024,
            modulation: Modulation::Qam16,
            rolloff: 0.1,
            tx_sps: 2,
            baud_hz: 60e9,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::domain(format!(
                "roll-off must lie in [0, 1], got {}",
                self.rolloff
            )));
        }
        if self.tx_sps < 2 {
            return Err(Error::domain(format!(
                "transmit samples per symbol must be >= 2, got {}",
                self.tx_sps
            )));
        }
        if !(self.baud_hz.is_finite() && self.baud_hz > 0.0) {
            return Err(Error::domain("baud rate must be positive"));
        }
        Ok(())
    }

    pub fn tx_rate_hz(&self) -> f64 {
        self.baud_hz * self.tx_sps as f64
    }
}

/// Root-raised-cosine taps over `2 span + 1` symbols, scaled so that
/// `sum h^2 = sps` (unit-energy symbols give unit mean sample power).
pub fn rrc_taps(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    let half = (span * sps) as isize;
    let b = rolloff;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sps as f64;
            if t == 0.0 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && (4.0 * b * t).abs() == 1.0 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
                num / den
            }
        })
        .collect();
    let e: f64 = taps.iter().map(|h| h * h).sum();
    let g = (sps as f64 / e).sqrt();
    for h in &mut taps {
        *h *= g;
    }
    taps
}

/// Upsample symbols by `sps` and filter with the RRC pulse.
///
/// The output has exactly `symbols.len() * sps` samples and the pulse for
/// symbol `k` peaks at sample `k * sps` (zero group delay).
pub fn shape(symbols: &[Complex64], sps: usize, rolloff: f64, sample_rate_hz: f64) -> Result<ComplexSignal> {
    let taps = rrc_taps(rolloff, sps, RRC_SPAN_SYMBOLS);
    let half = (taps.len() / 2) as isize;
    let len = symbols.len() * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (k, s) in symbols.iter().enumerate() {
        let centre = (k * sps) as isize;
        let lo = (centre - half).max(0);
        let hi = (centre + half).min(len as isize - 1);
        for i in lo..=hi {
            out[i as usize] += s * taps[(i - centre + half) as usize];
        }
    }
    ComplexSignal::new(out, sample_rate_hz)
}

pub fn qam_symbols(modulation: Modulation, count: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let points = modulation.constellation();
    let m = points.len();
    (0..count).map(|_| points[rng.gen_range(0..m)]).collect()
}

pub fn generate_payload(cfg: &FrameConfig, seed: u64) -> Result<ComplexSignal> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = qam_symbols(cfg.modulation, cfg.payload_symbols, &mut rng);
    shape(&symbols, cfg.tx_sps, cfg.rolloff, cfg.tx_rate_hz())
}

/// The training sequence at unit symbol power, pulse shaped like the payload.
pub fn shape_ts(ts: &TrainingSequence, cfg: &FrameConfig) -> Result<ComplexSignal> {
    cfg.validate()?;
    shape(&ts.unit_power_samples(), cfg.tx_sps, cfg.rolloff, cfg.tx_rate_hz())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub signal: ComplexSignal,
    /// First sample of the shaped training sequence.
    pub ts_start: usize,
    pub ts_len: usize,
}

/// `[shaped TS | payload]`.
pub fn assemble_frame(ts: &TrainingSequence, payload: &ComplexSignal, cfg: &FrameConfig) -> Result<Frame> {
    cfg.validate()?;
    let rate = cfg.tx_rate_hz();
    if (payload.sample_rate_hz() - rate).abs() > 1e-9 * rate || payload.len() % cfg.tx_sps != 0 {
        return Err(Error::domain(format!(
            "payload at {} Hz / {} samples does not match the {} sps shaping path at {} Hz",
            payload.sample_rate_hz(),
            payload.len(),
            cfg.tx_sps,
            rate
        )));
    }
    let shaped = shape_ts(ts, cfg)?;
    let ts_len = shaped.len();
    let mut samples = shaped.into_samples();
    samples.extend_from_slice(payload.samples());
    Ok(Frame {
        signal: ComplexSignal::new(samples, rate)?,
        ts_start: 0,
        ts_len,
    })
}
