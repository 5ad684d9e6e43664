//! Conventional one-parameter-at-a-time estimators and the operation-count
//! model they are compared against.
//!
//! The conventional receiver chain is: dispersion from per-chirp FrFT angle
//! scans, dispersion compensation, fourth-power FFT frequency estimate,
//! then frequency and dispersion removal from the raw capture and a direct
//! cross-correlation against the known sequence for timing.

use crate::channel::{apply_cd_counted, apply_fo, beta2z_to_cd};
use crate::error::{Error, Result};
use crate::estimator::{grid, refine_peak, rescale_angle, scan_points, Estimator, PeakCoordinate, SearchConfig, TsGeometry};
use crate::frft::{FftPlan, FrftPlan};
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Blind frequency offset from the spectral line of `x^4`.
///
/// Valid for `|fo| < fs / 8`. A pure tone is returned at its own frequency.
pub fn foe_4power(x: &ComplexSignal) -> Result<f64> {
    foe_4power_counted(x, &mut OpCount::new())
}

pub fn foe_4power_counted(x: &ComplexSignal, ops: &mut OpCount) -> Result<f64> {
    x.require_non_empty("foe_4power")?;
    let n = x.len();
    let mut buf: Vec<Complex64> = x
        .samples()
        .iter()
        .map(|v| {
            let s = v * v;
            s * s
        })
        .collect();
    ops.mults(2 * n);
    FftPlan::new(n).forward_raw(&mut buf, ops);
    let mags: Vec<f64> = buf.iter().map(|v| v.norm()).collect();
    let k = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut bin = k as f64;
    if n >= 3 {
        let ym = mags[(k + n - 1) % n];
        let yp = mags[(k + 1) % n];
        let den = ym - 2.0 * mags[k] + yp;
        if den < 0.0 {
            bin += (0.5 * (ym - yp) / den).clamp(-0.5, 0.5);
        }
    }
    if bin > n as f64 / 2.0 {
        bin -= n as f64;
    }
    Ok(bin * x.sample_rate_hz() / n as f64 / 4.0)
}

/// Lag (start sample of `reference` within `rx`) maximising the magnitude
/// of the direct cross-correlation. Ties go to the earliest lag.
pub fn toe_xcorr(rx: &ComplexSignal, reference: &ComplexSignal) -> Result<i64> {
    toe_xcorr_counted(rx, reference, &mut OpCount::new())
}

pub fn toe_xcorr_counted(rx: &ComplexSignal, reference: &ComplexSignal, ops: &mut OpCount) -> Result<i64> {
    let (r, h) = (rx.samples(), reference.samples());
    if h.is_empty() || h.len() > r.len() {
        return Err(Error::domain(format!(
            "reference of {} samples does not fit a capture of {}",
            h.len(),
            r.len()
        )));
    }
    let conj: Vec<Complex64> = h.iter().map(|v| v.conj()).collect();
    let lags = r.len() - h.len() + 1;
    let (best, _) = (0..lags)
        .into_par_iter()
        .map(|lag| {
            let c: Complex64 = r[lag..lag + h.len()].iter().zip(&conj).map(|(a, b)| a * b).sum();
            (lag, c.norm_sqr())
        })
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    ops.mults(lags * h.len());
    Ok(best as i64)
}

/// Dispersion from independent angle scans of the two chirps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdScan {
    pub cd_total: f64,
    pub cd_per_chirp: [f64; 2],
    /// Peak angles expressed for a block-length window.
    pub peaks: [PeakCoordinate; 2],
    pub evaluations: usize,
}

/// Scan each chirp on its own half of the angle range (`+alpha` chirp on
/// positive angles) and convert the two collapse angles to dispersion.
///
/// The split at zero holds while `tan(phi_cd) < sps tan(phi1)`, about
/// 35 000 ps/nm for the default sequence.
pub fn cde_frft_scan(window: &ComplexSignal, geometry: &TsGeometry, sps: f64, cfg: &SearchConfig) -> Result<CdScan> {
    window.require_non_empty("cde_frft_scan")?;
    let plan = FrftPlan::new(window.len());
    cde_frft_scan_with(&plan, window.samples(), geometry, sps, cfg, &mut OpCount::new())
}

pub fn cde_frft_scan_with(
    plan: &FrftPlan,
    window: &[Complex64],
    geometry: &TsGeometry,
    sps: f64,
    cfg: &SearchConfig,
    ops: &mut OpCount,
) -> Result<CdScan> {
    cfg.validate()?;
    let block = geometry.block_len(sps);
    let mut evaluations = 0;
    let mut peaks = [PeakCoordinate {
        phi: 0.0,
        delta_n: 0.0,
        magnitude: 0.0,
    }; 2];
    for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
        let half = 0.5 * cfg.coarse_half_range;
        let coarse = scan_points(plan, window, &grid(sign * half, half, cfg.coarse_step), ops);
        evaluations += coarse.len();
        let seed = coarse
            .iter()
            .max_by(|a, b| a.concentration.total_cmp(&b.concentration))
            .ok_or_else(|| Error::TsNotFound("empty chirp scan".into()))?;
        let (peak, n) = refine_peak(plan, window, seed.peak.phi, cfg, ops);
        evaluations += n;
        peaks[i] = PeakCoordinate {
            phi: rescale_angle(peak.phi, plan.len(), block),
            ..peak
        };
    }
    let mut cd = [0.0; 2];
    for (i, ts) in [geometry.phi1(), -geometry.phi1()].into_iter().enumerate() {
        let tan_cd = peaks[i].phi.tan() - sps * ts.tan();
        cd[i] = beta2z_to_cd(geometry.beta2z_from_tan(tan_cd, sps), geometry.wavelength_nm);
    }
    Ok(CdScan {
        cd_total: 0.5 * (cd[0] + cd[1]),
        cd_per_chirp: cd,
        peaks,
        evaluations,
    })
}

/// Output of the conventional chain on one capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraditionalEstimate {
    pub cd_total: f64,
    pub fo_hz: f64,
    pub to_samples: i64,
    pub cde_evaluations: usize,
    pub ops: OpCount,
}

/// Largest power of two not above `n`.
fn pow2_floor(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

const FOE_MAX_LEN: usize = 1 << 15;

/// Run the conventional chain. `reference` is the training sequence as it
/// leaves the transmitter, at the receiver rate; `estimator` supplies the
/// sequence geometry, search grid and the block detector that positions
/// the dispersion scan.
pub fn traditional_chain(rx: &ComplexSignal, reference: &ComplexSignal, estimator: &Estimator) -> Result<TraditionalEstimate> {
    let mut ops = OpCount::new();
    let block = estimator.block_len();
    let trace = estimator.detect(rx, &mut ops)?;
    let block_start = trace.block_start(trace.argmin_block);
    let guard_len = 2 * block;
    let guard_start = block_start.saturating_sub(block / 2).min(rx.len().saturating_sub(guard_len));
    let guard = rx.window(guard_start, guard_len);
    let cd = cde_frft_scan_with(
        &FrftPlan::new(guard_len),
        guard.samples(),
        &estimator.geometry,
        estimator.sps,
        &estimator.search,
        &mut ops,
    )?;

    let beta2z = cd_to_beta2z(cd.cd_total, estimator.geometry.wavelength_nm);
    let compensated = apply_cd_counted(rx, -beta2z, &mut ops)?;

    let after = (block_start + guard_len).min(rx.len());
    let (seg_start, seg_len) = if rx.len() - after >= 4096 {
        (after, pow2_floor(rx.len() - after).min(FOE_MAX_LEN))
    } else {
        (0, pow2_floor(rx.len()).min(FOE_MAX_LEN))
    };
    let segment = compensated.window(seg_start, seg_len);
    let fo = foe_4power_counted(&segment, &mut ops)?;

    // The channel disperses before the frequency shift, so undo them in
    // that order; compensating dispersion on the shifted capture delays it
    // by beta2z * 2 pi fo.
    let derotated = apply_fo(rx, -fo);
    ops.mults(rx.len());
    let aligned = apply_cd_counted(&derotated, -beta2z, &mut ops)?;
    let to = toe_xcorr_counted(&aligned, reference, &mut ops)?;
    Ok(TraditionalEstimate {
        cd_total: cd.cd_total,
        fo_hz: fo,
        to_samples: to,
        cde_evaluations: cd.evaluations,
        ops,
    })
}

fn cd_to_beta2z(cd_ps_nm: f64, lambda_nm: f64) -> f64 {
    cd_ps_nm / beta2z_to_cd(1.0, lambda_nm)
}

/// Closed-form multiplication counts next to instrumented ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub frame_len: u64,
    pub ts_len: u64,
    pub scan_count: u64,
    /// `(M + K N) log2 N`
    pub proposed_mults: u64,
    /// `(2 K N + 1) log2 N + M N`
    pub traditional_mults: u64,
    pub measured_proposed: u64,
    pub measured_traditional: u64,
}

impl ComplexityReport {
    pub fn ratio(&self) -> f64 {
        self.proposed_mults as f64 / self.traditional_mults as f64
    }

    pub fn measured_ratio(&self) -> Option<f64> {
        (self.measured_traditional > 0).then(|| self.measured_proposed as f64 / self.measured_traditional as f64)
    }

    pub fn with_measured(mut self, proposed: u64, traditional: u64) -> Self {
        self.measured_proposed = proposed;
        self.measured_traditional = traditional;
        self
    }

    /// Instrumented over modelled count, proposed and traditional.
    pub fn model_agreement(&self) -> (f64, f64) {
        (
            self.measured_proposed as f64 / self.proposed_mults as f64,
            self.measured_traditional as f64 / self.traditional_mults as f64,
        )
    }
}

pub fn complexity_report(m: u64, n: u64, k: u64) -> ComplexityReport {
    let log_n = (n.max(1) as f64).log2();
    let (mf, nf, kf) = (m as f64, n as f64, k as f64);
    ComplexityReport {
        frame_len: m,
        ts_len: n,
        scan_count: k,
        proposed_mults: ((mf + kf * nf) * log_n).round() as u64,
        traditional_mults: ((2.0 * kf * nf + 1.0) * log_n + mf * nf).round() as u64,
        measured_proposed: 0,
        measured_traditional: 0,
    }
}
