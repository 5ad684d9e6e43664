//! Monte Carlo sweeps, per-trial records and their CSV/JSON files.
//!
//! A sweep visits every `(distance, fo)` point, distance-major, and runs
//! `trials_per_point` independent trials at each. Trial seeds are derived
//! from the master seed by counter so results do not depend on scheduling.

use crate::baselines::{complexity_report, traditional_chain, ComplexityReport, TraditionalEstimate};
use crate::channel::{ChannelConfig, RxSps};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, JointEstimate, SearchConfig};
use crate::framing::{generate_ts, FrameConfig, TrainingSequence};
use crate::link::{derive_seed, geometry_for, reference_ts, simulate, GUARD_SEQUENCES};
use crate::signal::ComplexSignal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

pub const DATA_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToMode {
    /// The same offset (receiver samples) in every trial.
    Fixed(i64),
    /// Uniform over one block length.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsParams {
    pub alpha: f64,
    pub ns: usize,
}

impl Default for TsParams {
    fn default() -> Self {
        Self { alpha: FRAC_PI_4, ns: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub distances_km: Vec<f64>,
    pub fo_grid_hz: Vec<f64>,
    pub to_mode: ToMode,
    pub trials_per_point: usize,
    /// `null` runs noiseless.
    pub snr_db: Option<f64>,
    pub sps: RxSps,
    pub seed: u64,
    pub ts: TsParams,
    /// Payload, shaping and symbol rate.
    pub frame: FrameConfig,
    pub dispersion_ps_nm_km: f64,
    pub wavelength_nm: f64,
    pub search: SearchConfig,
    /// Also run the conventional chain (dominated by an `M N` correlation).
    pub baselines: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            distances_km: (0..=5).map(|i| 400.0 * i as f64).collect(),
            fo_grid_hz: vec![0.0],
            to_mode: ToMode::Random,
            trials_per_point: 20,
            snr_db: Some(20.0),
            sps: RxSps::Two,
            seed: 0,
            ts: TsParams::default(),
            frame: FrameConfig::default(),
            dispersion_ps_nm_km: 17.0,
            wavelength_nm: 1550.0,
            search: SearchConfig::default(),
            baselines: true,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials_per_point < 1 {
            return bad("trials_per_point must be at least 1".into());
        }
        if self.distances_km.is_empty() || self.fo_grid_hz.is_empty() {
            return bad("distances_km and fo_grid_hz must be non-empty".into());
        }
        if let Some(d) = self.distances_km.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return bad(format!("distance {d} km is not a non-negative number"));
        }
        if let Some(f) = self.fo_grid_hz.iter().find(|f| !f.is_finite()) {
            return bad(format!("frequency offset {f} Hz is not finite"));
        }
        if let Some(s) = self.snr_db.filter(|s| !s.is_finite()) {
            return bad(format!("snr_db {s} is not finite"));
        }
        if self.ts.ns < 8 {
            return bad(format!("ts.ns must be at least 8, got {}", self.ts.ns));
        }
        if let ToMode::Fixed(to) = self.to_mode {
            let guard = (GUARD_SEQUENCES as f64 * self.ts.ns as f64 * self.sps.value()).round() as i64;
            if !(0..guard).contains(&to) {
                return bad(format!("fixed timing offset must lie in [0, {guard}), got {to}"));
            }
        }
        self.frame.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.search.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.distances_km
            .iter()
            .flat_map(|&d| self.fo_grid_hz.iter().map(move |&f| (d, f)))
            .collect()
    }

    /// Seed of trial `trial` at sweep point `point`.
    pub fn trial_seed(&self, point: usize, trial: usize) -> u64 {
        derive_seed(derive_seed(self.seed, point as u64), trial as u64)
    }

    pub fn channel(&self, distance_km: f64, fo_hz: f64, to_samples: i64) -> ChannelConfig {
        ChannelConfig {
            dispersion_ps_nm_km: self.dispersion_ps_nm_km,
            distance_km,
            fo_hz,
            to_samples,
            snr_db: self.snr_db,
            rx_sps: self.sps,
            wavelength_nm: self.wavelength_nm,
        }
    }
}

/// Everything about one trial: truth, both chains' outputs and counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub distance_km: f64,
    pub sps: f64,
    pub snr_db: Option<f64>,
    pub cd_true: f64,
    pub fo_true: f64,
    pub to_true: i64,
    pub proposed: std::result::Result<JointEstimate, String>,
    pub traditional: Option<std::result::Result<TraditionalEstimate, String>>,
}

impl TrialResult {
    pub fn traditional_ok(&self) -> Option<&TraditionalEstimate> {
        self.traditional.as_ref().and_then(|r| r.as_ref().ok())
    }

    pub fn row(&self) -> TrialRow {
        let p = self.proposed.as_ref().ok();
        let cd_est = p.map(|e| e.cd_total);
        let fo_est = p.map(|e| e.fo_hz);
        let to_est = p.map(|e| e.to_rounded());
        TrialRow {
            distance_km: self.distance_km,
            cd_true: self.cd_true,
            cd_est,
            cd_err: cd_est.map(|v| v - self.cd_true),
            fo_true: self.fo_true,
            fo_est,
            fo_err: fo_est.map(|v| v - self.fo_true),
            to_true: self.to_true,
            to_est,
            to_err: to_est.map(|v| v - self.to_true),
            sps: self.sps,
            snr_db: self.snr_db,
            seed: self.seed,
            mults_proposed: p.map(|e| e.ops.complex_mults),
            mults_traditional: self.traditional_ok().map(|t| t.ops.complex_mults),
        }
    }
}

/// One line of the data CSV. Estimates and errors are empty when the
/// proposed estimator failed; `mults_traditional` is empty when the
/// conventional chain was not run or failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub distance_km: f64,
    pub cd_true: f64,
    pub cd_est: Option<f64>,
    pub cd_err: Option<f64>,
    pub fo_true: f64,
    pub fo_est: Option<f64>,
    pub fo_err: Option<f64>,
    pub to_true: i64,
    pub to_est: Option<i64>,
    pub to_err: Option<i64>,
    pub sps: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub mults_proposed: Option<u64>,
    pub mults_traditional: Option<u64>,
}

impl TrialRow {
    /// Recompute the error columns from estimate and truth.
    pub fn with_recomputed_errors(mut self) -> Self {
        self.cd_err = self.cd_est.map(|v| v - self.cd_true);
        self.fo_err = self.fo_est.map(|v| v - self.fo_true);
        self.to_err = self.to_est.map(|v| v - self.to_true);
        self
    }
}

/// Shared per-sweep state: sequence, estimator and correlation reference.
pub struct TrialRunner {
    pub cfg: SweepConfig,
    ts: TrainingSequence,
    estimator: Estimator,
    reference: ComplexSignal,
}

impl TrialRunner {
    pub fn new(cfg: &SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let ts = generate_ts(cfg.ts.alpha, cfg.ts.ns)?;
        let geometry = geometry_for(&ts, &cfg.frame, cfg.wavelength_nm);
        let sps = cfg.sps.value();
        let estimator = Estimator::new(geometry, sps, cfg.frame.baud_hz * sps, cfg.search)?;
        let reference = reference_ts(&ts, &cfg.frame, cfg.sps)?;
        Ok(Self {
            cfg: cfg.clone(),
            ts,
            estimator,
            reference,
        })
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn training_sequence(&self) -> &TrainingSequence {
        &self.ts
    }

    /// Capture length `M` and block length `N` in receiver samples.
    pub fn frame_and_block(&self) -> (usize, usize) {
        let sps = self.cfg.sps.value();
        let m = ((self.ts.ns + self.cfg.frame.payload_symbols) as f64 * sps).round() as usize;
        (m, self.estimator.block_len())
    }

    fn draw_to(&self, seed: u64) -> i64 {
        match self.cfg.to_mode {
            ToMode::Fixed(to) => to,
            ToMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
                rng.gen_range(0..self.estimator.block_len() as i64)
            }
        }
    }

    /// Run one trial. Estimator failures land in the result; only
    /// simulation errors are returned.
    pub fn run(&self, distance_km: f64, fo_hz: f64, seed: u64) -> Result<TrialResult> {
        let channel = self.cfg.channel(distance_km, fo_hz, self.draw_to(seed));
        let capture = simulate(&self.ts, &self.cfg.frame, &channel, seed)?;
        let proposed = self.estimator.estimate(&capture.signal).map_err(|e| e.to_string());
        let traditional = self
            .cfg
            .baselines
            .then(|| traditional_chain(&capture.signal, &self.reference, &self.estimator).map_err(|e| e.to_string()));
        Ok(TrialResult {
            seed,
            distance_km,
            sps: capture.sps,
            snr_db: self.cfg.snr_db,
            cd_true: channel.total_cd_ps_nm(),
            fo_true: fo_hz,
            to_true: capture.ts_start as i64,
            proposed,
            traditional,
        })
    }

    /// All trials, ordered by (point, trial).
    pub fn run_all(&self) -> Result<Vec<TrialResult>> {
        let jobs: Vec<(usize, f64, f64, usize)> = self
            .cfg
            .points()
            .into_iter()
            .enumerate()
            .flat_map(|(p, (d, f))| (0..self.cfg.trials_per_point).map(move |t| (p, d, f, t)))
            .collect();
        jobs.par_iter()
            .map(|&(p, d, f, t)| self.run(d, f, self.cfg.trial_seed(p, t)))
            .collect()
    }
}

pub fn run_trial(cfg: &SweepConfig, distance_km: f64, fo_hz: f64, seed: u64) -> Result<TrialResult> {
    TrialRunner::new(cfg)?.run(distance_km, fo_hz, seed)
}

/// Per-point error statistics over the successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub distance_km: f64,
    pub fo_true: f64,
    pub trials: usize,
    pub failures: usize,
    pub cd_err_mean: Option<f64>,
    pub cd_err_max: Option<f64>,
    pub fo_err_mean: Option<f64>,
    pub fo_err_max: Option<f64>,
    pub to_err_mean: Option<f64>,
    pub to_err_max: Option<i64>,
    pub to_zero_fraction: Option<f64>,
}

/// Group rows by `(distance_km, fo_true)` in order of first appearance.
/// Error statistics are of absolute errors. With random frequency offsets
/// every row is its own frequency, so points are keyed on distance and the
/// configured grid value is what `fo_true` holds.
pub fn summarize(rows: &[TrialRow]) -> Vec<PointSummary> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let k = (r.distance_km, r.fo_true);
        if !keys.iter().any(|q| q.0.to_bits() == k.0.to_bits() && q.1.to_bits() == k.1.to_bits()) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(d, f)| {
            let group: Vec<&TrialRow> = rows
                .iter()
                .filter(|r| r.distance_km.to_bits() == d.to_bits() && r.fo_true.to_bits() == f.to_bits())
                .collect();
            let ok: Vec<&&TrialRow> = group.iter().filter(|r| r.cd_err.is_some()).collect();
            let stats = |get: &dyn Fn(&TrialRow) -> f64| -> (Option<f64>, Option<f64>) {
                if ok.is_empty() {
                    return (None, None);
                }
                let v: Vec<f64> = ok.iter().map(|r| get(r).abs()).collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (Some(mean), v.iter().copied().reduce(f64::max))
            };
            let (cd_err_mean, cd_err_max) = stats(&|r| r.cd_err.unwrap_or(f64::NAN));
            let (fo_err_mean, fo_err_max) = stats(&|r| r.fo_err.unwrap_or(f64::NAN));
            let (to_err_mean, _) = stats(&|r| r.to_err.unwrap_or(0) as f64);
            let to_errs: Vec<i64> = ok.iter().filter_map(|r| r.to_err.map(i64::abs)).collect();
            PointSummary {
                distance_km: d,
                fo_true: f,
                trials: group.len(),
                failures: group.len() - ok.len(),
                cd_err_mean,
                cd_err_max,
                fo_err_mean,
                fo_err_max,
                to_err_mean,
                to_err_max: to_errs.iter().copied().max(),
                to_zero_fraction: (!to_errs.is_empty())
                    .then(|| to_errs.iter().filter(|&&e| e == 0).count() as f64 / to_errs.len() as f64),
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, rows: &[TrialRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_summary(path: &Path, summary: &[PointSummary]) -> Result<()> {
    write_csv(path, summary)
}

/// Read a data CSV, recomputing the error columns.
pub fn read_rows(path: &Path) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<TrialRow>()
        .map(|row| Ok(row?.with_recomputed_errors()))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub timestamp_unix_s: u64,
    pub crate_version: String,
    pub trials: usize,
    pub config: SweepConfig,
}

/// Paths of the files written by [`run_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub data: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
    pub results: Vec<TrialResult>,
}

/// Run every trial and write the data CSV, summary CSV and metadata sidecar
/// into `out_dir` (created if missing).
pub fn run_sweep(cfg: &SweepConfig, out_dir: &Path) -> Result<SweepOutput> {
    let runner = TrialRunner::new(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let results = runner.run_all()?;
    let rows: Vec<TrialRow> = results.iter().map(TrialResult::row).collect();
    let out = SweepOutput {
        data: out_dir.join(DATA_FILE),
        summary: out_dir.join(SUMMARY_FILE),
        meta: out_dir.join(META_FILE),
        results,
    };
    write_rows(&out.data, &rows)?;
    write_summary(&out.summary, &summarize(&rows))?;
    let meta = RunMeta {
        timestamp_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        trials: rows.len(),
        config: cfg.clone(),
    };
    std::fs::write(&out.meta, serde_json::to_string_pretty(&meta)?)?;
    Ok(out)
}

/// Accuracy of one chain against the truth, over the frames it solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAccuracy {
    pub solved: usize,
    pub cd_err_mean: f64,
    pub fo_err_mean_hz: f64,
    pub to_err_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Modelled counts use the mean number of angle evaluations as `K`;
    /// measured counts are per-frame means.
    pub complexity: ComplexityReport,
    pub frames: usize,
    pub proposed: ChainAccuracy,
    pub traditional: ChainAccuracy,
    /// Mean absolute proposed-minus-traditional differences.
    pub cd_delta_mean: f64,
    pub fo_delta_mean_hz: f64,
    pub to_delta_mean: f64,
    /// Fraction of frames where FO agrees within 30 MHz and TO within 2 samples.
    pub agreement_fraction: f64,
}

pub const FO_AGREEMENT_HZ: f64 = 30e6;
pub const TO_AGREEMENT: i64 = 2;

/// Run both chains on the same frames and report counts and accuracy.
pub fn compare_methods(cfg: &SweepConfig) -> Result<CompareReport> {
    let cfg = SweepConfig {
        baselines: true,
        ..cfg.clone()
    };
    let runner = TrialRunner::new(&cfg)?;
    let results = runner.run_all()?;
    let (m, n) = runner.frame_and_block();
    Ok(compare_results(&results, m, n))
}

pub fn compare_results(results: &[TrialResult], frame_len: usize, block_len: usize) -> CompareReport {
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let proposed: Vec<(&TrialResult, &JointEstimate)> =
        results.iter().filter_map(|r| r.proposed.as_ref().ok().map(|p| (r, p))).collect();
    let traditional: Vec<(&TrialResult, &TraditionalEstimate)> =
        results.iter().filter_map(|r| r.traditional_ok().map(|t| (r, t))).collect();
    let both: Vec<(&JointEstimate, &TraditionalEstimate)> = results
        .iter()
        .filter_map(|r| Some((r.proposed.as_ref().ok()?, r.traditional_ok()?)))
        .collect();

    let k = mean(&proposed.iter().map(|(_, p)| p.angle_evaluations as f64).collect::<Vec<_>>());
    let mp = mean(&proposed.iter().map(|(_, p)| p.ops.complex_mults as f64).collect::<Vec<_>>());
    let mt = mean(&traditional.iter().map(|(_, t)| t.ops.complex_mults as f64).collect::<Vec<_>>());
    let round = |v: f64| if v.is_finite() { v.round() as u64 } else { 0 };
    let complexity =
        complexity_report(frame_len as u64, block_len as u64, round(k)).with_measured(round(mp), round(mt));

    let agree = both
        .iter()
        .filter(|(p, t)| (p.fo_hz - t.fo_hz).abs() <= FO_AGREEMENT_HZ && (p.to_rounded() - t.to_samples).abs() <= TO_AGREEMENT)
        .count();
    CompareReport {
        complexity,
        frames: results.len(),
        proposed: ChainAccuracy {
            solved: proposed.len(),
            cd_err_mean: mean(&proposed.iter().map(|(r, p)| (p.cd_total - r.cd_true).abs()).collect::<Vec<_>>()),
            fo_err_mean_hz: mean(&proposed.iter().map(|(r, p)| (p.fo_hz - r.fo_true).abs()).collect::<Vec<_>>()),
            to_err_mean: mean(&proposed.iter().map(|(r, p)| (p.to_rounded() - r.to_true).abs() as f64).collect::<Vec<_>>()),
        },
        traditional: ChainAccuracy {
            solved: traditional.len(),
            cd_err_mean: mean(&traditional.iter().map(|(r, t)| (t.cd_total - r.cd_true).abs()).collect::<Vec<_>>()),
            fo_err_mean_hz: mean(&traditional.iter().map(|(r, t)| (t.fo_hz - r.fo_true).abs()).collect::<Vec<_>>()),
            to_err_mean: mean(&traditional.iter().map(|(r, t)| (t.to_samples - r.to_true).abs() as f64).collect::<Vec<_>>()),
        },
        cd_delta_mean: mean(&both.iter().map(|(p, t)| (p.cd_total - t.cd_total).abs()).collect::<Vec<_>>()),
        fo_delta_mean_hz: mean(&both.iter().map(|(p, t)| (p.fo_hz - t.fo_hz).abs()).collect::<Vec<_>>()),
        to_delta_mean: mean(&both.iter().map(|(p, t)| (p.to_rounded() - t.to_samples).abs() as f64).collect::<Vec<_>>()),
        agreement_fraction: if results.is_empty() { 0.0 } else { agree as f64 / results.len() as f64 },
    }
}
