//! Linear fibre-link impairments and rate conversion.
//!
//! The simulator applies them in a fixed order: dispersion, frequency
//! offset (both at the transmit rate), resampling to the receiver rate,
//! timing offset, then additive noise.

use crate::error::{Error, Result};
use crate::frft::FftPlan;
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Receiver samples per symbol supported by the link model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RxSps {
    One,
    OnePointTwoFive,
    Two,
}

impl RxSps {
    pub fn value(self) -> f64 {
        match self {
            RxSps::One => 1.0,
            RxSps::OnePointTwoFive => 1.25,
            RxSps::Two => 2.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        match v {
            1.0 => Ok(RxSps::One),
            1.25 => Ok(RxSps::OnePointTwoFive),
            2.0 => Ok(RxSps::Two),
            _ => Err(Error::domain(format!(
                "receiver sps must be one of 1, 1.25, 2; got {v}"
            ))),
        }
    }

    /// Reduced `p/q` taking `tx_sps` samples/symbol to this rate.
    pub fn ratio_from(self, tx_sps: usize) -> (usize, usize) {
        let (num, den) = match self {
            RxSps::One => (1, 1),
            RxSps::OnePointTwoFive => (5, 4),
            RxSps::Two => (2, 1),
        };
        let p = num;
        let q = den * tx_sps;
        let g = gcd(p, q);
        (p / g, q / g)
    }
}

impl Serialize for RxSps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for RxSps {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        RxSps::from_value(v).map_err(serde::de::Error::custom)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Ground-truth link impairments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// ps/(nm km)
    pub dispersion_ps_nm_km: f64,
    pub distance_km: f64,
    pub fo_hz: f64,
    /// Receiver-rate samples from capture start to the training sequence.
    pub to_samples: i64,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub rx_sps: RxSps,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
}

fn default_wavelength() -> f64 {
    1550.0
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            dispersion_ps_nm_km: 17.0,
            distance_km: 0.0,
            fo_hz: 0.0,
            to_samples: 0,
            snr_db: Some(20.0),
            rx_sps: RxSps::Two,
            wavelength_nm: default_wavelength(),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_km >= 0.0 && self.distance_km.is_finite()) {
            return Err(Error::domain("distance must be non-negative"));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(Error::domain("snr must be finite (use null for noiseless)"));
            }
        }
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::domain("wavelength must be positive"));
        }
        Ok(())
    }

    /// Accumulated dispersion `D z` in ps/nm.
    pub fn total_cd_ps_nm(&self) -> f64 {
        self.dispersion_ps_nm_km * self.distance_km
    }

    pub fn beta2z_ps2(&self) -> f64 {
        d_to_beta2(self.dispersion_ps_nm_km, self.wavelength_nm) * self.distance_km
    }
}

/// Group-velocity dispersion `beta2 = -D lambda^2 / (2 pi c)` in ps^2/km.
pub fn d_to_beta2(d_ps_nm_km: f64, lambda_nm: f64) -> f64 {
    -d_ps_nm_km * lambda_nm * lambda_nm / (TAU * C_NM_PER_PS)
}

/// Accumulated dispersion in ps/nm for an accumulated `beta2 z` in ps^2.
pub fn beta2z_to_cd(beta2z_ps2: f64, lambda_nm: f64) -> f64 {
    -beta2z_ps2 * TAU * C_NM_PER_PS / (lambda_nm * lambda_nm)
}

/// All-pass dispersion filter.
///
/// Uses the DFT sign convention `X(w) = sum x(t) exp(-j w t)`, in which the
/// accumulated fibre phase reads `exp(-j beta2/2 w^2 z)`; this is the
/// textbook `exp(+j beta2/2 w^2 z)` of the `exp(+j w t)` optics convention.
/// With it an anomalous-dispersion link (`D > 0`) tilts a chirp's optimal
/// rotation angle in the positive direction.
pub fn apply_cd(x: &ComplexSignal, beta2_ps2_km: f64, z_km: f64) -> Result<ComplexSignal> {
    apply_cd_counted(x, beta2_ps2_km * z_km, &mut OpCount::new())
}

pub fn apply_cd_counted(x: &ComplexSignal, beta2z_ps2: f64, ops: &mut OpCount) -> Result<ComplexSignal> {
    if x.len() < 2 {
        return Err(Error::domain("dispersion needs at least two samples"));
    }
    if beta2z_ps2 == 0.0 {
        return Ok(x.clone());
    }
    let n = x.len();
    let plan = FftPlan::new(n);
    let mut buf = x.samples().to_vec();
    plan.forward_raw(&mut buf, ops);
    // angular frequency in rad/ps
    let df = x.sample_rate_hz() / n as f64 * 1e-12;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } * df;
        let w = TAU * f;
        *v *= Complex64::from_polar(1.0 / n as f64, -0.5 * beta2z_ps2 * w * w);
    }
    ops.mults(n);
    plan.inverse_raw(&mut buf, ops);
    Ok(ComplexSignal::with_rate_of(buf, x))
}

/// Multiply sample `n` by `exp(j 2 pi fo n / Fs)`.
pub fn apply_fo(x: &ComplexSignal, fo_hz: f64) -> ComplexSignal {
    if fo_hz == 0.0 {
        return x.clone();
    }
    let step = TAU * fo_hz / x.sample_rate_hz();
    let out = x
        .samples()
        .iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::from_polar(1.0, step * n as f64))
        .collect();
    ComplexSignal::with_rate_of(out, x)
}

/// Delay by `shift` samples (advance when negative), zero-filling.
pub fn apply_to(x: &ComplexSignal, shift: i64) -> Result<ComplexSignal> {
    let n = x.len();
    if shift.unsigned_abs() as usize >= n.max(1) && shift != 0 {
        return Err(Error::domain(format!(
            "shift {shift} is not smaller than the signal length {n}"
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let s = shift.unsigned_abs() as usize;
    if shift >= 0 {
        out[s..].copy_from_slice(&x.samples()[..n - s]);
    } else {
        out[..n - s].copy_from_slice(&x.samples()[s..]);
    }
    Ok(ComplexSignal::with_rate_of(out, x))
}

/// Add circular complex Gaussian noise at `P_signal / 10^(snr/10)`.
pub fn add_awgn(x: &ComplexSignal, snr_db: f64, seed: u64) -> Result<ComplexSignal> {
    if !snr_db.is_finite() {
        return Err(Error::domain("snr must be finite"));
    }
    let p = x.mean_power();
    let sigma = (p / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = x
        .samples()
        .iter()
        .map(|v| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            v + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(ComplexSignal::with_rate_of(out, x))
}

/// Polyphase rational resampler half-width, in zero crossings of the
/// anti-alias kernel.
const RESAMPLE_ZEROS: f64 = 24.0;
const KAISER_BETA: f64 = 8.0;

/// Rate change by `p/q` with a windowed-sinc anti-alias filter.
///
/// Output sample `m` sits at input time `m q / p` (no group delay); the
/// kernel cutoff is the narrower of the two Nyquist bands.
pub fn resample(x: &ComplexSignal, p: usize, q: usize) -> Result<ComplexSignal> {
    if p == 0 || q == 0 {
        return Err(Error::domain("resampling factors must be >= 1"));
    }
    if gcd(p, q) != 1 {
        return Err(Error::domain(format!("resampling factors {p}/{q} are not coprime")));
    }
    let rate = x.sample_rate_hz() * p as f64 / q as f64;
    if p == q {
        return ComplexSignal::new(x.samples().to_vec(), rate);
    }
    // cutoff in cycles per input sample
    let fc = 0.5 * (p as f64 / q as f64).min(1.0);
    let half_width = RESAMPLE_ZEROS / (2.0 * fc);
    let taps_each_side = half_width.ceil() as i64;
    let i0 = bessel_i0(KAISER_BETA);

    // phase r: fractional input offset r/p
    let table: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let frac = r as f64 / p as f64;
            (-taps_each_side + 1..=taps_each_side)
                .map(|j| {
                    let tau = frac - j as f64;
                    let w = tau / half_width;
                    if w.abs() >= 1.0 {
                        0.0
                    } else {
                        2.0 * fc * sinc(2.0 * fc * tau) * bessel_i0(KAISER_BETA * (1.0 - w * w).sqrt()) / i0
                    }
                })
                .collect()
        })
        .collect();

    let n = x.len() as i64;
    let out_len = (x.len() * p) / q;
    let xs = x.samples();
    let out = (0..out_len)
        .map(|m| {
            let pos = m * q;
            let k0 = (pos / p) as i64;
            let taps = &table[pos % p];
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, j) in taps.iter().zip(-taps_each_side + 1..=taps_each_side) {
                let k = k0 + j;
                if (0..n).contains(&k) {
                    acc += xs[k as usize] * t;
                }
            }
            acc
        })
        .collect();
    ComplexSignal::new(out, rate)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frft::fft;

    fn noise_like(n: usize, seed: u64) -> ComplexSignal {
        let tone = apply_fo(&ComplexSignal::new(vec![Complex64::new(1.0, 0.0); n], 1e9).unwrap(), 1e6);
        add_awgn(&tone, 0.0, seed).unwrap()
    }

    fn max_dev(a: &ComplexSignal, b: &ComplexSignal) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn beta2_conversion() {
        assert_eq!(d_to_beta2(0.0, 1550.0), 0.0);
        let b = d_to_beta2(17.0, 1550.0);
        assert!((b + 21.68).abs() < 0.01, "{b}");
        assert!(d_to_beta2(1.0, 1310.0) < 0.0);
        let cd = beta2z_to_cd(b * 1600.0, 1550.0);
        assert!((cd - 27200.0).abs() < 1e-9);
    }

    #[test]
    fn cd_identity_and_inverse() {
        let x = noise_like(1000, 1);
        let beta2 = d_to_beta2(17.0, 1550.0);
        assert_eq!(apply_cd(&x, beta2, 0.0).unwrap(), x);
        let y = apply_cd(&x, beta2, 800.0).unwrap();
        assert!((y.energy() - x.energy()).abs() <= 1e-9 * x.energy());
        let back = apply_cd(&y, beta2, -800.0).unwrap();
        assert!(max_dev(&back, &x) < 1e-9);
        assert!(apply_cd(&ComplexSignal::new(vec![Complex64::new(1.0, 0.0)], 1.0).unwrap(), beta2, 1.0).is_err());
    }

    #[test]
    fn cd_group_delay_spread() {
        // Oracle: delay difference between band edges is D z dlambda with
        // dlambda = lambda^2 df / c. Measure it from the centroid of two
        // narrow Gaussian pulses modulated to -B/2 and +B/2.
        let fs = 300e9;
        let n = 1 << 16;
        let bw = 75e9;
        let d = 17.0;
        let z = 1600.0;
        let beta2 = d_to_beta2(d, 1550.0);
        let centroid = |f0: f64| {
            let sigma = 400.0; // samples, narrowband
            let x: Vec<Complex64> = (0..n)
                .map(|i| {
                    let t = i as f64 - n as f64 / 2.0;
                    Complex64::from_polar((-t * t / (2.0 * sigma * sigma)).exp(), TAU * f0 * i as f64 / fs)
                })
                .collect();
            let y = apply_cd(&ComplexSignal::new(x, fs).unwrap(), beta2, z).unwrap();
            let e = y.energy();
            y.samples().iter().enumerate().map(|(i, v)| i as f64 * v.norm_sqr()).sum::<f64>() / e
        };
        let spread_s = (centroid(bw / 2.0) - centroid(-bw / 2.0)).abs() / fs;
        let dlambda_nm = 1550.0f64.powi(2) * bw / (C_NM_PER_PS * 1e12);
        let want_s = d * z * dlambda_nm * 1e-12;
        assert!((spread_s - want_s).abs() < 0.05 * want_s, "{spread_s} vs {want_s}");
    }

    #[test]
    fn cd_and_fo_commute_up_to_group_delay() {
        // Shifting by k0 bins before or after dispersion differs only by the
        // ratio H[k] / H[k - k0], a pure linear phase (a delay) in-band.
        let n = 512;
        let fs = 1e9;
        let k0 = 3usize;
        let f0 = fs / n as f64 * k0 as f64;
        let b2z = -21.7 * 3e4;
        let x = noise_like(n, 3);
        let a = fft(&apply_cd_counted(&apply_fo(&x, f0), b2z, &mut OpCount::new()).unwrap()).unwrap();
        let b = fft(&apply_fo(&apply_cd_counted(&x, b2z, &mut OpCount::new()).unwrap(), f0)).unwrap();
        let w = |k: f64| TAU * k * fs / n as f64 * 1e-12;
        for k in k0..n / 2 {
            let (kf, ks) = (k as f64, (k - k0) as f64);
            let ratio = Complex64::from_polar(1.0, -0.5 * b2z * (w(kf).powi(2) - w(ks).powi(2)));
            let got = a.samples()[k];
            let want = b.samples()[k] * ratio;
            assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "k={k}");
        }
    }

    #[test]
    fn fo_round_trip_and_identity() {
        let x = noise_like(777, 5);
        assert_eq!(apply_fo(&x, 0.0), x);
        let back = apply_fo(&apply_fo(&x, 3.3e7), -3.3e7);
        assert!(max_dev(&back, &x) < 1e-9);
    }

    #[test]
    fn timing_shift() {
        let x = ComplexSignal::new((0..10).map(|i| Complex64::new(i as f64 + 1.0, 0.0)).collect(), 1.0).unwrap();
        assert_eq!(apply_to(&x, 0).unwrap(), x);
        let d = apply_to(&x, 3).unwrap();
        assert_eq!(d.samples()[..3], [Complex64::new(0.0, 0.0); 3]);
        assert_eq!(d.samples()[3], Complex64::new(1.0, 0.0));
        let a = apply_to(&x, -2).unwrap();
        assert_eq!(a.samples()[0], Complex64::new(3.0, 0.0));
        assert_eq!(a.samples()[9], Complex64::new(0.0, 0.0));
        assert!(apply_to(&x, 10).is_err());
        assert!(apply_to(&x, -10).is_err());
    }

    #[test]
    fn awgn_snr_and_determinism() {
        let x = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 100_000], 1.0).unwrap();
        let y = add_awgn(&x, 20.0, 42).unwrap();
        assert_eq!(y, add_awgn(&x, 20.0, 42).unwrap());
        let noise: f64 = y
            .samples()
            .iter()
            .zip(x.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / 1e5;
        let snr = 10.0 * (1.0 / noise).log10();
        assert!((snr - 20.0).abs() < 0.2, "{snr}");
        assert!(add_awgn(&x, f64::INFINITY, 1).is_err());
    }

    #[test]
    fn resample_identity_and_rate() {
        let x = noise_like(100, 7);
        let y = resample(&x, 1, 1).unwrap();
        assert_eq!(y.samples(), x.samples());
        let y = resample(&x, 5, 8).unwrap();
        assert_eq!(y.len(), 62);
        assert!((y.sample_rate_hz() - x.sample_rate_hz() * 5.0 / 8.0).abs() < 1e-6);
        assert!(resample(&x, 2, 4).is_err());
        assert_eq!(RxSps::OnePointTwoFive.ratio_from(2), (5, 8));
        assert_eq!(RxSps::One.ratio_from(2), (1, 2));
        assert_eq!(RxSps::Two.ratio_from(2), (1, 1));
    }

    #[test]
    fn resample_keeps_tone_frequency() {
        let fs = 120e9;
        let n = 8192;
        let x = apply_fo(&ComplexSignal::new(vec![Complex64::new(1.0, 0.0); n], fs).unwrap(), 1e9);
        let y = resample(&x, 5, 8).unwrap();
        let spec = fft(&y).unwrap();
        let (k, _) = spec
            .samples()
            .iter()
            .enumerate()
            .fold((0, 0.0), |a, (i, v)| if v.norm() > a.1 { (i, v.norm()) } else { a });
        let m = spec.len() as f64;
        let bin_hz = y.sample_rate_hz() / m;
        let f = if (k as f64) < m / 2.0 { k as f64 } else { k as f64 - m } * bin_hz;
        assert!((f - 1e9).abs() <= bin_hz, "{f}");
    }

    #[test]
    fn resample_preserves_inband_waveform() {
        // a slow tone resampled 2 -> 1.25 must equal the analytic tone
        let fs = 120e9;
        let f0 = 7e9;
        let n = 4000;
        let x = apply_fo(&ComplexSignal::new(vec![Complex64::new(1.0, 0.0); n], fs).unwrap(), f0);
        let y = resample(&x, 5, 8).unwrap();
        for m in 200..y.len() - 200 {
            let t = m as f64 / y.sample_rate_hz();
            let want = Complex64::from_polar(1.0, TAU * f0 * t);
            assert!((y.samples()[m] - want).norm() < 1e-3, "m={m}");
        }
    }
}
