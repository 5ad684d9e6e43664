//! End-to-end link: transmit stream, impairments, receiver capture.
//!
//! The transmit stream is `[guard payload | training sequence | payload]`,
//! shaped as one continuous symbol stream at the transmit rate. The guard
//! (two sequence lengths of random symbols) gives the capture something
//! other than silence before the sequence, so a timing offset moves the
//! capture window rather than inserting zeros.

use crate::channel::{add_awgn, apply_cd_counted, apply_fo, apply_to, resample, ChannelConfig, RxSps};
use crate::error::{Error, Result};
use crate::estimator::TsGeometry;
use crate::framing::{qam_symbols, shape, shape_ts, FrameConfig, TrainingSequence};
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Guard symbols ahead of the sequence, in sequence lengths.
pub const GUARD_SEQUENCES: usize = 2;

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix_seed(mix_seed(seed) ^ stream)
}

/// Receiver capture and the ground truth needed to score it.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub signal: ComplexSignal,
    /// Receiver sample at which the training sequence starts.
    pub ts_start: usize,
    pub sps: f64,
    /// Sequence length in receiver samples, `round(Ns sps)`.
    pub ts_len: usize,
}

/// Generate one receiver capture.
///
/// The capture is `(Ns + payload_symbols) * sps` samples long and begins
/// `channel.to_samples` samples before the sequence; `to_samples` must lie
/// in `[0, guard length)`.
pub fn simulate(ts: &TrainingSequence, frame: &FrameConfig, channel: &ChannelConfig, seed: u64) -> Result<Capture> {
    frame.validate()?;
    channel.validate()?;
    let sps = channel.rx_sps.value();
    let guard_symbols = GUARD_SEQUENCES * ts.ns;
    let guard_rx = (guard_symbols as f64 * sps).round() as i64;
    if channel.to_samples < 0 || channel.to_samples >= guard_rx {
        return Err(Error::domain(format!(
            "timing offset must lie in [0, {guard_rx}) receiver samples, got {}",
            channel.to_samples
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut symbols = qam_symbols(frame.modulation, guard_symbols, &mut rng);
    symbols.extend(ts.unit_power_samples());
    symbols.extend(qam_symbols(frame.modulation, frame.payload_symbols, &mut rng));
    let tx = shape(&symbols, frame.tx_sps, frame.rolloff, frame.tx_rate_hz())?;

    let dispersed = apply_cd_counted(&tx, channel.beta2z_ps2(), &mut OpCount::new())?;
    let shifted = apply_fo(&dispersed, channel.fo_hz);
    let (p, q) = channel.rx_sps.ratio_from(frame.tx_sps);
    let rx = resample(&shifted, p, q)?;

    let advanced = apply_to(&rx, channel.to_samples - guard_rx)?;
    let capture_len = ((ts.ns + frame.payload_symbols) as f64 * sps).round() as usize;
    let mut samples = advanced.into_samples();
    samples.truncate(capture_len);
    let cropped = ComplexSignal::new(samples, rx.sample_rate_hz())?;
    let signal = match channel.snr_db {
        Some(snr) => add_awgn(&cropped, snr, derive_seed(seed, 2))?,
        None => cropped,
    };
    Ok(Capture {
        signal,
        ts_start: channel.to_samples as usize,
        sps,
        ts_len: (ts.ns as f64 * sps).round() as usize,
    })
}

/// The training sequence as the receiver expects it: shaped and resampled
/// to the receiver rate, without impairments.
pub fn reference_ts(ts: &TrainingSequence, frame: &FrameConfig, rx_sps: RxSps) -> Result<ComplexSignal> {
    let (p, q) = rx_sps.ratio_from(frame.tx_sps);
    resample(&shape_ts(ts, frame)?, p, q)
}

/// Receiver-side view of the sequence design for a given frame.
pub fn geometry_for(ts: &TrainingSequence, frame: &FrameConfig, wavelength_nm: f64) -> TsGeometry {
    TsGeometry {
        alpha: ts.alpha,
        ns: ts.ns,
        symbol_period_ps: 1e12 / frame.baud_hz,
        wavelength_nm,
    }
}
