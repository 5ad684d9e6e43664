//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use chirpsync_core::estimator::{phi_opt_from_cd, solve_joint, solve_offsets};
use chirpsync_core::frft::{frft, FftPlan};
use chirpsync_core::harness::{compare_results, summarize, SweepConfig, TrialResult, TrialRow, TrialRunner};
use chirpsync_core::{Complex64, ComplexSignal, OpCount, PeakCoordinate, RxSps, TsGeometry};
use common::{hermite_oracle, norm, random_signal, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn sweep(cfg: &SweepConfig) -> (Vec<TrialResult>, Vec<TrialRow>, Duration) {
    let t0 = Instant::now();
    let results = TrialRunner::new(cfg).unwrap().run_all().unwrap();
    let rows = results.iter().map(TrialResult::row).collect();
    (results, rows, t0.elapsed())
}

fn failures(rows: &[TrialRow]) -> usize {
    rows.iter().filter(|r| r.cd_est.is_none()).count()
}

fn cd_sweep(sps: RxSps, mean_limit: f64, max_limit: f64, time_limit: Option<Duration>) -> Outcome {
    let cfg = SweepConfig {
        sps,
        baselines: false,
        seed: 1,
        ..Default::default()
    };
    let (_, rows, took) = sweep(&cfg);
    let summary = summarize(&rows);
    let worst_mean = summary.iter().filter_map(|s| s.cd_err_mean).fold(0.0, f64::max);
    let max = summary.iter().filter_map(|s| s.cd_err_max).fold(0.0, f64::max);
    let fails = failures(&rows);
    let mut pass = fails == 0 && worst_mean < mean_limit && max < max_limit;
    if let Some(limit) = time_limit {
        pass &= took < limit;
    }
    let means: Vec<String> = summary
        .iter()
        .map(|s| format!("{:.0}km:{:.1}", s.distance_km, s.cd_err_mean.unwrap_or(f64::NAN)))
        .collect();
    Outcome {
        pass,
        detail: format!(
            "{} trials, worst per-point mean {worst_mean:.1} ps/nm (< {mean_limit}), max {max:.1} ps/nm (< {max_limit}), \
             failures {fails}, {:.0} s [{}]",
            rows.len(),
            took.as_secs_f64(),
            means.join(" ")
        ),
    }
}

fn criterion_3() -> Outcome {
    let cfg = SweepConfig {
        sps: RxSps::OnePointTwoFive,
        distances_km: vec![0.0, 1000.0, 2000.0],
        fo_grid_hz: (-8..=8).map(|g| g as f64 * 1e9).collect(),
        trials_per_point: 4,
        baselines: false,
        seed: 3,
        ..Default::default()
    };
    let (_, rows, took) = sweep(&cfg);
    let errs: Vec<f64> = rows.iter().filter_map(|r| r.fo_err).map(f64::abs).collect();
    let max = errs.iter().copied().fold(0.0, f64::max);
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let fails = failures(&rows);
    Outcome {
        pass: fails == 0 && max <= 30e6 && mean <= 15e6,
        detail: format!(
            "{} trials, max {:.2} MHz (<= 30), mean {:.2} MHz (<= 15), failures {fails}, {:.0} s",
            rows.len(),
            max / 1e6,
            mean / 1e6,
            took.as_secs_f64()
        ),
    }
}

fn criterion_4() -> Outcome {
    let cfg = SweepConfig {
        sps: RxSps::OnePointTwoFive,
        distances_km: (0..=20).map(|i| 100.0 * i as f64).collect(),
        trials_per_point: 10,
        baselines: false,
        seed: 4,
        ..Default::default()
    };
    let (_, rows, took) = sweep(&cfg);
    let errs: Vec<i64> = rows.iter().filter_map(|r| r.to_err).map(i64::abs).collect();
    let max = errs.iter().copied().max().unwrap_or(i64::MAX);
    let zero = errs.iter().filter(|&&e| e == 0).count() as f64 / rows.len() as f64;
    let fails = failures(&rows);
    Outcome {
        pass: fails == 0 && rows.len() >= 200 && max <= 2 && zero >= 0.4,
        detail: format!(
            "{} random offsets, max {max} samples (<= 2), zero-error fraction {zero:.2} (>= 0.40), failures {fails}, {:.0} s",
            rows.len(),
            took.as_secs_f64()
        ),
    }
}

fn criterion_5() -> Outcome {
    let cfg = SweepConfig {
        sps: RxSps::One,
        distances_km: vec![0.0, 1000.0, 2000.0],
        fo_grid_hz: vec![2e9],
        trials_per_point: 1,
        baselines: true,
        seed: 5,
        ..Default::default()
    };
    let runner = TrialRunner::new(&cfg).unwrap();
    let (m, n) = runner.frame_and_block();
    let results = runner.run_all().unwrap();
    let report = compare_results(&results, m, n).complexity;
    let (ap, at) = report.model_agreement();
    let within = |r: f64| (0.5..=2.0).contains(&r);
    Outcome {
        pass: m == 65536 && n == 1024 && report.ratio() < 0.5 && within(ap) && within(at),
        detail: format!(
            "M={m} N={n} K={}: modelled {} / {} = {:.3} (< 0.5); measured {} / {}; measured/model {ap:.2} and {at:.2} (within 2x)",
            report.scan_count,
            report.proposed_mults,
            report.traditional_mults,
            report.ratio(),
            report.measured_proposed,
            report.measured_traditional
        ),
    }
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let mut unitarity = 0f64;
    for _ in 0..24 {
        let x = random_signal(rng.gen_range(256..=4096), rng.gen());
        let y = frft(&x, rng.gen_range(-2.0 * PI..2.0 * PI)).unwrap();
        unitarity = unitarity.max((norm(y.samples()) - norm(x.samples())).abs() / norm(x.samples()));
    }

    let mut special = 0f64;
    for n in [8, 9, 255, 256, 1000, 1024] {
        let x = random_signal(n, rng.gen());
        let plan = FftPlan::new(n);
        let mut dft = x.samples().to_vec();
        plan.centered_forward(&mut dft, &mut OpCount::new());
        let mut idft = x.samples().to_vec();
        plan.centered_inverse(&mut idft, &mut OpCount::new());
        let rev: Vec<Complex64> = (0..n).map(|i| x.samples()[(2 * (n / 2) + n - i) % n]).collect();
        for (phi, want) in [(0.0, x.samples()), (FRAC_PI_2, &dft[..]), (PI, &rev[..]), (1.5 * PI, &idft[..])] {
            special = special.max(rel_err(frft(&x, phi).unwrap().samples(), want));
        }
    }

    let mut oracle = 0f64;
    for n in [32, 64, 100, 128, 200, 256] {
        let coeffs: Vec<Complex64> = (0..=n / 8)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let phi = rng.gen_range(-PI..PI);
        let (input, want) = hermite_oracle(n, &coeffs, phi);
        let y = frft(&ComplexSignal::new(input, 1.0).unwrap(), phi).unwrap();
        oracle = oracle.max(rel_err(y.samples(), &want));
    }

    let pc = |phi: f64, delta_n: f64| PeakCoordinate { phi, delta_n, magnitude: 1.0 };
    let mut residual = 0f64;
    for _ in 0..1000 {
        let (dt, df) = (rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0));
        let (a, b) = (rng.gen_range(0.05..1.5), rng.gen_range(-1.5..-0.05));
        let proj = |phi: f64| dt * f64::cos(phi) + df * f64::sin(phi);
        let (sdt, sdf) = solve_offsets(pc(a, proj(a)), pc(b, proj(b))).unwrap();
        residual = residual.max((sdt - dt).abs().max((sdf - df).abs()));
    }

    let g = TsGeometry::new(FRAC_PI_4, 1024, 60e9);
    let mut round_trip = 0f64;
    for sps in [1.0, 1.25, 2.0] {
        for i in 1..=400 {
            let beta2z = -100.0 * i as f64;
            let (p1, p2) = phi_opt_from_cd(beta2z, &g, sps);
            let est = solve_joint(pc(p1, 0.0), pc(p2, 0.0), &g, sps, 60e9 * sps, 0).unwrap();
            for b in est.beta2z_per_chirp {
                round_trip = round_trip.max((b - beta2z).abs() / beta2z.abs());
            }
        }
    }

    let lin_cfg = SweepConfig {
        snr_db: None,
        trials_per_point: 1,
        baselines: false,
        seed: 6,
        ..Default::default()
    };
    let (results, _, _) = sweep(&lin_cfg);
    let (z, tans): (Vec<f64>, Vec<f64>) = results
        .iter()
        .filter_map(|r| Some((r.distance_km, r.proposed.as_ref().ok()?.peaks[0].phi.tan())))
        .unzip();
    let r2 = if z.len() == lin_cfg.distances_km.len() { r_squared(&z, &tans) } else { 0.0 };

    let pass = unitarity <= 1e-6 && special <= 1e-6 && oracle <= 1e-2 && residual <= 1e-9 && round_trip <= 5e-3 && r2 > 0.999;
    Outcome {
        pass,
        detail: format!(
            "unitarity {unitarity:.1e}, special angles {special:.1e}, small-N oracle {oracle:.1e}, \
             solver residual {residual:.1e}, dispersion round trip {:.2e}%, linearity R^2 {r2:.6}",
            round_trip * 100.0
        ),
    }
}

fn criterion_7() -> Outcome {
    let cfg = SweepConfig {
        sps: RxSps::OnePointTwoFive,
        distances_km: vec![0.0, 500.0, 1000.0, 1500.0, 2000.0],
        fo_grid_hz: vec![-4e9, 4e9],
        trials_per_point: 5,
        baselines: true,
        seed: 7,
        ..Default::default()
    };
    let runner = TrialRunner::new(&cfg).unwrap();
    let (m, n) = runner.frame_and_block();
    let t0 = Instant::now();
    let results = runner.run_all().unwrap();
    let report = compare_results(&results, m, n);
    Outcome {
        pass: report.frames == 50 && report.agreement_fraction >= 0.9,
        detail: format!(
            "{} frames, agreement {:.2} (>= 0.90); mean |dFO| {:.2} MHz, mean |dTO| {:.2} samples, mean |dCD| {:.1} ps/nm, {:.0} s",
            report.frames,
            report.agreement_fraction,
            report.fo_delta_mean_hz / 1e6,
            report.to_delta_mean,
            report.cd_delta_mean,
            t0.elapsed().as_secs_f64()
        ),
    }
}

fn main() {
    // `cargo test` passes harness flags; a name filter other than this
    // target's skips the run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let criteria: [Criterion; 7] = [
        ("1 CD at 2 sps", || cd_sweep(RxSps::Two, 50.0, 300.0, Some(Duration::from_secs(300)))),
        ("2 CD at 1 sps", || cd_sweep(RxSps::One, 100.0, 450.0, None)),
        ("3 FO at 1.25 sps", criterion_3),
        ("4 TO at 1.25 sps", criterion_4),
        ("5 complexity", criterion_5),
        ("6 property suite", criterion_6),
        ("7 cross-method consistency", criterion_7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
