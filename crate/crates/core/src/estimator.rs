//! Joint dispersion / frequency-offset / timing-offset estimation.
//!
//! The receiver knows the training-sequence design (`alpha`, `Ns`, symbol
//! period). It
//!
//! 1. slides a block of `Ns * sps` samples over the capture and keeps the
//!    block whose transform at the nominal angle `phi1` has the smallest
//!    summed magnitude (the dual chirp concentrates, payload does not),
//! 2. scans rotation angles over that block to find the two chirp peaks,
//!    first coarsely then with progressively finer local grids,
//! 3. maps each peak angle back to accumulated dispersion, and solves the
//!    two peak offsets for the time and frequency shift of the sequence.
//!
//! Peak angles follow `tan(phi_opt) = sps tan(phi_ts) + tan(phi_cd)` with
//! `tan(phi_cd) = -sps 2 pi beta2 z / (Ns T^2)`, and a sequence shifted by
//! `dt` samples and `df` bins peaks `dt cos(phi) + df sin(phi)` bins from
//! the window centre.

use crate::channel::beta2z_to_cd;
use crate::error::{Error, Result};
use crate::frft::{wrap_angle, FrftPlan};
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// A located peak in the (angle, transform-domain offset) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCoordinate {
    pub phi: f64,
    /// Fractional bins from the window centre `floor(L/2)`.
    pub delta_n: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub coarse_half_range: f64,
    pub coarse_step: f64,
    pub fine_half_range: f64,
    pub fine_step: f64,
    /// Number of fine passes; each pass after the first shrinks range and
    /// step tenfold around the previous optimum.
    pub iterations: usize,
    /// Minimum angular distance between the two accepted peaks.
    pub min_separation: f64,
    /// Non-maximum-suppression radius on the coarse grid.
    pub nms_radius: f64,
    /// Required ratio of each coarse peak's concentration to the median
    /// over the coarse grid.
    pub min_peak_ratio: f64,
    pub framing: Framing,
    /// Detected blocks tried, best first, before giving up.
    pub framing_candidates: usize,
}

/// Block metric used to locate the training sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    /// Summed transform magnitude at the nominal angle; the smallest block
    /// wins. Reliable without dispersion only.
    AmplitudeSum,
    /// Fourth-moment concentration of the transform at the receiver-side
    /// nominal angle and halfway from it to pi/2, scored against the
    /// capture median.
    #[default]
    Concentration,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            coarse_half_range: FRAC_PI_2,
            coarse_step: 0.01 * PI,
            fine_half_range: 0.1 * PI,
            fine_step: 0.001 * PI,
            iterations: 2,
            min_separation: 0.05 * PI,
            nms_radius: 0.03 * PI,
            min_peak_ratio: 2.0,
            framing: Framing::Concentration,
            framing_candidates: 3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.coarse_half_range,
            self.coarse_step,
            self.fine_half_range,
            self.fine_step,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain("search ranges and steps must be positive"));
        }
        if self.fine_step >= self.coarse_step {
            return Err(Error::domain("fine step must be smaller than the coarse step"));
        }
        if self.iterations == 0 {
            return Err(Error::domain("at least one fine iteration is required"));
        }
        if self.framing_candidates == 0 {
            return Err(Error::domain("at least one framing candidate is required"));
        }
        Ok(())
    }
}

/// Training-sequence design parameters known to the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsGeometry {
    pub alpha: f64,
    pub ns: usize,
    pub symbol_period_ps: f64,
    pub wavelength_nm: f64,
}

impl TsGeometry {
    pub fn new(alpha: f64, ns: usize, baud_hz: f64) -> Self {
        Self {
            alpha,
            ns,
            symbol_period_ps: 1e12 / baud_hz,
            wavelength_nm: 1550.0,
        }
    }

    /// Nominal collapse angle of the `+alpha` chirp at one sample per symbol.
    pub fn phi1(&self) -> f64 {
        FRAC_PI_2 - self.alpha
    }

    /// Collapse angle of the `+alpha` chirp at the receiver rate, no dispersion.
    pub fn phi_sps(&self, sps: f64) -> f64 {
        (sps * self.phi1().tan()).atan()
    }

    /// Receiver block length `round(Ns sps)`.
    pub fn block_len(&self, sps: f64) -> usize {
        (self.ns as f64 * sps).round() as usize
    }

    fn ns_t2(&self) -> f64 {
        self.ns as f64 * self.symbol_period_ps * self.symbol_period_ps
    }

    /// `tan(phi_cd)` produced by an accumulated `beta2 z` (ps^2).
    pub fn tan_phi_cd(&self, beta2z_ps2: f64, sps: f64) -> f64 {
        -sps * TAU * beta2z_ps2 / self.ns_t2()
    }

    /// Inverse of [`Self::tan_phi_cd`].
    pub fn beta2z_from_tan(&self, tan_phi_cd: f64, sps: f64) -> f64 {
        -tan_phi_cd * self.ns_t2() / (sps * TAU)
    }
}

/// Predicted peak angles `(phi_opt1, phi_opt2)` for a given dispersion.
pub fn phi_opt_from_cd(beta2z_ps2: f64, geom: &TsGeometry, sps: f64) -> (f64, f64) {
    let cd = geom.tan_phi_cd(beta2z_ps2, sps);
    let branch = |phi_ts: f64| (sps * phi_ts.tan() + cd).atan();
    (branch(geom.phi1()), branch(-geom.phi1()))
}

/// Per-block detection metric; lower values look more like the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrace {
    pub m_values: Vec<f64>,
    pub argmin_block: usize,
    /// Local minima of `m_values`, best first, at least two blocks apart.
    pub candidates: Vec<usize>,
    pub block_len: usize,
    pub hop: usize,
}

impl DetectionTrace {
    pub fn block_start(&self, k: usize) -> usize {
        k * self.hop
    }

    fn from_values(m_values: Vec<f64>, block_len: usize, hop: usize) -> Self {
        let mut order: Vec<usize> = (0..m_values.len()).collect();
        order.sort_by(|&a, &b| m_values[a].total_cmp(&m_values[b]));
        let mut candidates: Vec<usize> = Vec::new();
        for k in order {
            if candidates.iter().all(|&c| c.abs_diff(k) > 1) {
                candidates.push(k);
            }
        }
        Self {
            argmin_block: candidates[0],
            m_values,
            candidates,
            block_len,
            hop,
        }
    }
}

/// `M[k] = sum |F^phi1(block_k)|` over half-overlapping blocks of
/// `round(ns sps)` samples.
pub fn coarse_frame_detect(rx: &ComplexSignal, ns: usize, sps: f64, phi1: f64) -> Result<DetectionTrace> {
    let block = (ns as f64 * sps).round() as usize;
    coarse_frame_detect_with(&FrftPlan::new(block), rx, phi1, &mut OpCount::new())
}

fn check_blocks(plan: &FrftPlan, rx: &ComplexSignal) -> Result<(usize, usize, usize)> {
    let block = plan.len();
    if block < 2 || rx.len() < block {
        return Err(Error::domain(format!(
            "capture of {} samples is shorter than one {}-sample block",
            rx.len(),
            block
        )));
    }
    let hop = block / 2;
    Ok((block, hop, (rx.len() - block) / hop + 1))
}

/// Apply `f` to the transform of every block at `phi`.
fn per_block<F>(plan: &FrftPlan, rx: &ComplexSignal, phi: f64, ops: &mut OpCount, f: F) -> Vec<f64>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let block = plan.len();
    let hop = block / 2;
    let count = (rx.len() - block) / hop + 1;
    let xs = rx.samples();
    let results: Vec<(f64, OpCount)> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut local = OpCount::new();
            let y = plan.transform(&xs[k * hop..k * hop + block], phi, &mut local);
            (f(&y), local)
        })
        .collect();
    results
        .into_iter()
        .map(|(m, o)| {
            *ops += o;
            m
        })
        .collect()
}

pub fn coarse_frame_detect_with(
    plan: &FrftPlan,
    rx: &ComplexSignal,
    phi1: f64,
    ops: &mut OpCount,
) -> Result<DetectionTrace> {
    let (block, hop, _) = check_blocks(plan, rx)?;
    let m = per_block(plan, rx, phi1, ops, |y| y.iter().map(|v| v.norm()).sum());
    Ok(DetectionTrace::from_values(m, block, hop))
}

/// `N sum |y|^4 / (sum |y|^2)^2`: 2 for Gaussian-like data, large for a
/// focused chirp.
fn concentration(y: &[Complex64]) -> f64 {
    let (e2, e4) = y.iter().fold((0.0, 0.0), |(a, b), v| {
        let p = v.norm_sqr();
        (a + p, b + p * p)
    });
    if e2 > 0.0 {
        y.len() as f64 * e4 / (e2 * e2)
    } else {
        0.0
    }
}

/// Blocks scored by their largest robust z-score of [`concentration`]
/// over `angles`; `m_values` holds the negated score.
pub fn concentration_detect_with(
    plan: &FrftPlan,
    rx: &ComplexSignal,
    angles: &[f64],
    ops: &mut OpCount,
) -> Result<DetectionTrace> {
    let (block, hop, count) = check_blocks(plan, rx)?;
    let mut score = vec![f64::NEG_INFINITY; count];
    for &phi in angles {
        let c = per_block(plan, rx, phi, ops, concentration);
        let (centre, spread) = if count >= 8 {
            let med = median(c.iter().copied());
            let mad = median(c.iter().map(|v| (v - med).abs()));
            (med, mad.max(1e-12))
        } else {
            (0.0, 1.0)
        };
        for (s, v) in score.iter_mut().zip(&c) {
            *s = s.max((v - centre) / spread);
        }
    }
    let m = score.into_iter().map(|s| -s).collect();
    Ok(DetectionTrace::from_values(m, block, hop))
}

/// Largest-magnitude bin with three-point parabolic refinement.
fn locate_peak(y: &[Complex64]) -> (f64, f64) {
    let n = y.len();
    let mags: Vec<f64> = y.iter().map(|v| v.norm()).collect();
    let (i, &m0) = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty transform");
    let centre = (n / 2) as f64;
    if n < 3 {
        return (i as f64 - centre, m0);
    }
    let mm = mags[(i + n - 1) % n];
    let mp = mags[(i + 1) % n];
    let (d, m) = parabolic(mm, m0, mp);
    (i as f64 + d - centre, m)
}

/// Vertex offset in (-0.5, 0.5) and height of the parabola through three
/// equally spaced samples with the middle one largest.
fn parabolic(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let den = ym - 2.0 * y0 + yp;
    if den >= 0.0 {
        return (0.0, y0);
    }
    let d = (0.5 * (ym - yp) / den).clamp(-0.5, 0.5);
    (d, y0 - 0.25 * (ym - yp) * d)
}

/// One evaluated angle: the strongest bin and the concentration of the
/// whole transform, which degrades more gracefully off-focus than a
/// single bin and so ranks coarse-grid angles.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScanPoint {
    pub(crate) peak: PeakCoordinate,
    pub(crate) concentration: f64,
}

pub(crate) fn scan_points(plan: &FrftPlan, window: &[Complex64], angles: &[f64], ops: &mut OpCount) -> Vec<ScanPoint> {
    let results: Vec<(ScanPoint, OpCount)> = angles
        .par_iter()
        .map(|&phi| {
            let mut local = OpCount::new();
            let y = plan.transform(window, phi, &mut local);
            let (delta_n, magnitude) = locate_peak(&y);
            let peak = PeakCoordinate {
                phi,
                delta_n,
                magnitude,
            };
            (
                ScanPoint {
                    peak,
                    concentration: concentration(&y),
                },
                local,
            )
        })
        .collect();
    results
        .into_iter()
        .map(|(p, o)| {
            *ops += o;
            p
        })
        .collect()
}

fn scan_angles(plan: &FrftPlan, window: &[Complex64], angles: &[f64], ops: &mut OpCount) -> Vec<PeakCoordinate> {
    scan_points(plan, window, angles, ops).into_iter().map(|p| p.peak).collect()
}

pub(crate) fn grid(center: f64, half_range: f64, step: f64) -> Vec<f64> {
    let n = ((half_range / step) + 1e-9).floor() as i64;
    (-n..=n).map(|i| center + i as f64 * step).collect()
}

/// Evaluate the transform on the grid `center +- half_range` at `step`,
/// recording the strongest bin per angle.
pub fn angle_scan(window: &ComplexSignal, center: f64, half_range: f64, step: f64) -> Result<Vec<PeakCoordinate>> {
    window.require_non_empty("angle_scan")?;
    if !(step > 0.0) {
        return Err(Error::domain("scan step must be positive"));
    }
    let plan = FrftPlan::new(window.len());
    Ok(scan_angles(
        &plan,
        window.samples(),
        &grid(center, half_range.max(0.0), step),
        &mut OpCount::new(),
    ))
}

/// Outcome of the two-stage peak search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSearch {
    /// Larger-angle peak (the `+alpha` chirp branch).
    pub first: PeakCoordinate,
    pub second: PeakCoordinate,
    /// Number of transforms evaluated (coarse + fine + final).
    pub evaluations: usize,
}

pub fn find_two_peaks(window: &ComplexSignal, cfg: &SearchConfig) -> Result<(PeakCoordinate, PeakCoordinate)> {
    window.require_non_empty("find_two_peaks")?;
    let plan = FrftPlan::new(window.len());
    let s = find_two_peaks_with(&plan, window.samples(), cfg, &mut OpCount::new())?;
    Ok((s.first, s.second))
}

pub fn find_two_peaks_with(
    plan: &FrftPlan,
    window: &[Complex64],
    cfg: &SearchConfig,
    ops: &mut OpCount,
) -> Result<PeakSearch> {
    cfg.validate()?;
    let (a, b, coarse_evals) = coarse_pair(plan, window, cfg, ops)?;
    let mut found = refine_pair(plan, window, a.phi, b.phi, cfg, ops);
    found.evaluations += coarse_evals;
    Ok(found)
}

/// Coarse scan over the configured range and the two accepted maxima.
fn coarse_pair(
    plan: &FrftPlan,
    window: &[Complex64],
    cfg: &SearchConfig,
    ops: &mut OpCount,
) -> Result<(PeakCoordinate, PeakCoordinate, usize)> {
    let coarse = scan_points(plan, window, &grid(0.0, cfg.coarse_half_range, cfg.coarse_step), ops);
    let (a, b) = pick_two(&coarse, cfg)?;
    Ok((a, b, coarse.len()))
}

/// Fine passes around two seed angles.
fn refine_pair(plan: &FrftPlan, window: &[Complex64], seed_a: f64, seed_b: f64, cfg: &SearchConfig, ops: &mut OpCount) -> PeakSearch {
    let (pa, na) = refine_peak(plan, window, seed_a, cfg, ops);
    let (pb, nb) = refine_peak(plan, window, seed_b, cfg, ops);
    let (first, second) = if pa.phi >= pb.phi { (pa, pb) } else { (pb, pa) };
    PeakSearch {
        first,
        second,
        evaluations: na + nb,
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// The two strongest well-separated maxima of the coarse concentration
/// profile, each required to stand `min_peak_ratio` above its median.
fn pick_two(points: &[ScanPoint], cfg: &SearchConfig) -> Result<(PeakCoordinate, PeakCoordinate)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TsNotFound("coarse grid has fewer than three angles".into()));
    }
    let profile: Vec<PeakCoordinate> = points.iter().map(|p| p.peak).collect();
    let m = |i: usize| points[i].concentration;
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || m(i) >= m(i - 1)) && (i + 1 == n || m(i) >= m(i + 1)))
        .collect();
    candidates.sort_by(|&i, &j| m(j).total_cmp(&m(i)));

    let mut kept: Vec<usize> = Vec::new();
    for i in candidates {
        if kept
            .iter()
            .all(|&k| (profile[k].phi - profile[i].phi).abs() > cfg.nms_radius)
        {
            kept.push(i);
        }
    }
    let background = median(points.iter().map(|p| p.concentration));
    let first = *kept
        .first()
        .ok_or_else(|| Error::TsNotFound("no local maximum in the angle profile".into()))?;
    let second = kept
        .iter()
        .copied()
        .find(|&k| (profile[k].phi - profile[first].phi).abs() > cfg.min_separation)
        .ok_or_else(|| Error::TsNotFound("only one separated peak in the angle profile".into()))?;
    for k in [first, second] {
        let ratio = m(k) / background;
        if !(ratio >= cfg.min_peak_ratio) {
            return Err(Error::TsNotFound(format!(
                "peak at {:.4} rad is only {ratio:.2}x the background",
                profile[k].phi
            )));
        }
    }
    Ok((profile[first], profile[second]))
}

pub(crate) fn refine_peak(
    plan: &FrftPlan,
    window: &[Complex64],
    seed: f64,
    cfg: &SearchConfig,
    ops: &mut OpCount,
) -> (PeakCoordinate, usize) {
    let mut centre = seed;
    let mut half = cfg.fine_half_range;
    let mut step = cfg.fine_step;
    let mut evaluations = 0;
    for pass in 0..cfg.iterations {
        if pass > 0 {
            half /= 10.0;
            step /= 10.0;
        }
        let scan = scan_angles(plan, window, &grid(centre, half, step), ops);
        evaluations += scan.len();
        let best = scan
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.magnitude.total_cmp(&b.1.magnitude))
            .map(|(i, _)| i)
            .unwrap_or(0);
        centre = scan[best].phi;
        if pass + 1 == cfg.iterations && best > 0 && best + 1 < scan.len() {
            let (d, _) = parabolic(scan[best - 1].magnitude, scan[best].magnitude, scan[best + 1].magnitude);
            centre += d * step;
        }
    }
    // Report the peak in the principal range; the transform at phi - pi is
    // the mirror image, so the offset follows automatically.
    let phi = fold_half_turn(centre);
    let mut out = scan_angles(plan, window, &[phi], ops);
    evaluations += 1;
    (out.pop().expect("one angle"), evaluations)
}

fn fold_half_turn(phi: f64) -> f64 {
    let p = wrap_angle(phi);
    if p > FRAC_PI_2 {
        p - PI
    } else if p < -FRAC_PI_2 {
        p + PI
    } else {
        p
    }
}

/// Map a rotation angle between transform lengths: a chirp collapsing at
/// `phi` over `from_len` samples collapses at the returned angle over
/// `to_len` samples of the same rate.
pub fn rescale_angle(phi: f64, from_len: usize, to_len: usize) -> f64 {
    (phi.tan() * from_len as f64 / to_len as f64).atan()
}

/// Recovered link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    /// Accumulated dispersion in ps/nm (mean of the two chirp branches).
    pub cd_total: f64,
    pub cd_per_chirp: [f64; 2],
    pub beta2z_per_chirp: [f64; 2],
    pub fo_hz: f64,
    /// Training-sequence start in receiver samples.
    pub to_samples: f64,
    /// Timing and frequency shift relative to the window, in samples / bins.
    pub delta_t: f64,
    pub delta_f: f64,
    pub peaks: [PeakCoordinate; 2],
    pub coarse_block: usize,
    pub window_start: usize,
    /// Transforms evaluated by the peak search.
    pub angle_evaluations: usize,
    pub ops: OpCount,
}

impl JointEstimate {
    pub fn to_rounded(&self) -> i64 {
        self.to_samples.round() as i64
    }
}

/// Solve the two peak coordinates for dispersion, frequency and timing.
#[allow(clippy::too_many_arguments)]
pub fn solve_joint(
    p1: PeakCoordinate,
    p2: PeakCoordinate,
    geom: &TsGeometry,
    sps: f64,
    fs_rx: f64,
    window_start: usize,
) -> Result<JointEstimate> {
    if !(fs_rx > 0.0) {
        return Err(Error::domain("receiver sample rate must be positive"));
    }
    if !(sps > 0.0) {
        return Err(Error::domain("sps must be positive"));
    }
    let (p1, p2) = if p1.phi >= p2.phi { (p1, p2) } else { (p2, p1) };

    let branch_ts = [geom.phi1(), -geom.phi1()];
    let mut beta2z = [0.0; 2];
    let mut cd = [0.0; 2];
    for (i, (p, ts)) in [p1, p2].iter().zip(branch_ts).enumerate() {
        let tan_cd = p.phi.tan() - sps * ts.tan();
        beta2z[i] = geom.beta2z_from_tan(tan_cd, sps);
        cd[i] = beta2z_to_cd(beta2z[i], geom.wavelength_nm);
    }

    let (dt, df) = solve_offsets(p1, p2)?;
    let bins = geom.ns as f64 * sps;
    Ok(JointEstimate {
        cd_total: 0.5 * (cd[0] + cd[1]),
        cd_per_chirp: cd,
        beta2z_per_chirp: beta2z,
        fo_hz: df * fs_rx / bins,
        to_samples: window_start as f64 + dt,
        delta_t: dt,
        delta_f: df,
        peaks: [p1, p2],
        coarse_block: 0,
        window_start,
        angle_evaluations: 0,
        ops: OpCount::new(),
    })
}

/// `dn_i = dt cos(phi_i) + df sin(phi_i)` for `i = 1, 2`, by Cramer's rule.
pub fn solve_offsets(p1: PeakCoordinate, p2: PeakCoordinate) -> Result<(f64, f64)> {
    let (c1, s1) = (p1.phi.cos(), p1.phi.sin());
    let (c2, s2) = (p2.phi.cos(), p2.phi.sin());
    let det = c1 * s2 - s1 * c2;
    if det.abs() < 1e-6 {
        return Err(Error::DegenerateGeometry { det });
    }
    let dt = (p1.delta_n * s2 - p2.delta_n * s1) / det;
    let df = (c1 * p2.delta_n - c2 * p1.delta_n) / det;
    Ok((dt, df))
}

/// Reusable receiver for one training-sequence design and sample rate.
///
/// After framing, the coarse angle scan runs on a guard window of twice the
/// block length centred on the detected block, so a sequence spread by
/// dispersion or straddling two blocks is still fully visible. The
/// resulting offset re-centres a block-length window on the sequence, where
/// the fine passes and the final solve take place.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub geometry: TsGeometry,
    pub sps: f64,
    pub fs_rx: f64,
    pub search: SearchConfig,
    plan: FrftPlan,
    guard: FrftPlan,
}

impl Estimator {
    pub fn new(geometry: TsGeometry, sps: f64, fs_rx: f64, search: SearchConfig) -> Result<Self> {
        search.validate()?;
        if !(sps > 0.0 && fs_rx > 0.0) {
            return Err(Error::domain("sps and sample rate must be positive"));
        }
        let block = geometry.block_len(sps);
        Ok(Self {
            geometry,
            sps,
            fs_rx,
            search,
            plan: FrftPlan::new(block),
            guard: FrftPlan::new(2 * block),
        })
    }

    pub fn block_len(&self) -> usize {
        self.plan.len()
    }

    pub fn detect(&self, rx: &ComplexSignal, ops: &mut OpCount) -> Result<DetectionTrace> {
        match self.search.framing {
            Framing::AmplitudeSum => coarse_frame_detect_with(&self.plan, rx, self.geometry.phi1(), ops),
            Framing::Concentration => {
                let nominal = self.geometry.phi_sps(self.sps);
                let angles = [nominal, 0.5 * (nominal + FRAC_PI_2)];
                concentration_detect_with(&self.plan, rx, &angles, ops)
            }
        }
    }

    pub fn search_window(&self, window: &[Complex64], ops: &mut OpCount) -> Result<PeakSearch> {
        find_two_peaks_with(&self.plan, window, &self.search, ops)
    }

    /// Full pipeline on a capture holding one training sequence.
    pub fn estimate(&self, rx: &ComplexSignal) -> Result<JointEstimate> {
        let mut ops = OpCount::new();
        let trace = self.detect(rx, &mut ops)?;
        let mut last = None;
        for &block in trace.candidates.iter().take(self.search.framing_candidates) {
            match self.estimate_near(rx, trace.block_start(block), &mut ops) {
                Ok(mut est) => {
                    est.coarse_block = block;
                    est.ops = ops;
                    return Ok(est);
                }
                Err(e @ Error::TsNotFound(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::TsNotFound("no framing candidate".into())))
    }

    /// Locate and solve the sequence near the block starting at `block_start`.
    pub fn estimate_near(&self, rx: &ComplexSignal, block_start: usize, ops: &mut OpCount) -> Result<JointEstimate> {
        let block = self.block_len();
        let span = self.guard.len();
        let latest = |len: usize| rx.len().saturating_sub(len) as i64;
        let guard_start = (block_start as i64 - (span - block) as i64 / 2).clamp(0, latest(span)) as usize;
        let guard = rx.window(guard_start, span);
        let (a, b, coarse_evals) = coarse_pair(&self.guard, guard.samples(), &self.search, ops)?;

        let (dt, _) = solve_offsets(a, b)?;
        let centre = guard_start as f64 + (span / 2) as f64 + dt;
        let start = (centre - (block / 2) as f64).round().clamp(0.0, latest(block) as f64) as usize;
        let window = rx.window(start, block);
        let found = refine_pair(
            &self.plan,
            window.samples(),
            rescale_angle(a.phi, span, block),
            rescale_angle(b.phi, span, block),
            &self.search,
            ops,
        );
        let mut est = solve_joint(found.first, found.second, &self.geometry, self.sps, self.fs_rx, start)?;
        est.angle_evaluations = coarse_evals + found.evaluations;
        Ok(est)
    }
}

pub fn estimate(
    rx: &ComplexSignal,
    geometry: &TsGeometry,
    sps: f64,
    fs_rx: f64,
    cfg: &SearchConfig,
) -> Result<JointEstimate> {
    Estimator::new(*geometry, sps, fs_rx, *cfg)?.estimate(rx)
}
