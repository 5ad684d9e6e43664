use anyhow::{bail, Context, Result};
use chirpsync_core::harness::{compare_methods, run_sweep, SweepConfig, ToMode, TrialRunner};
use chirpsync_core::link::reference_ts;
use chirpsync_core::{complexity_report, RxSps};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "chirpsync", version, about = "Joint CD / FO / TO estimation from a chirp training sequence")]
struct Cli {
    /// JSON sweep configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (trial seed for `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Receiver samples per symbol: 1, 1.25 or 2.
    #[arg(long, global = true)]
    sps: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training sequence to `<out>/ts.csv` (symbol rate, or the
    /// shaped receiver-rate reference when `--sps` is given).
    GenTs,
    /// Run one trial and print the joint estimate as JSON.
    Simulate {
        /// Defaults to the first configured distance.
        #[arg(long)]
        distance_km: Option<f64>,
        /// Defaults to the first configured frequency offset.
        #[arg(long)]
        fo_hz: Option<f64>,
        /// Fixed timing offset in receiver samples.
        #[arg(long)]
        to: Option<i64>,
    },
    /// Run the configured sweep and write trials.csv, summary.csv, meta.json.
    Sweep,
    /// Run both chains on the configured frames and report counts and accuracy.
    Compare,
    /// Modelled multiplication counts for frame length M, block length N and K angle evaluations.
    Complexity {
        #[arg(long, default_value_t = 65536)]
        m: u64,
        #[arg(long, default_value_t = 1024)]
        n: u64,
        #[arg(long, default_value_t = 300)]
        k: u64,
    },
}

fn load_config(cli: &Cli) -> Result<SweepConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(sps) = cli.sps {
        cfg.sps = RxSps::from_value(sps)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn gen_ts(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let runner = TrialRunner::new(&cfg)?;
    let samples = match cli.sps {
        Some(_) => reference_ts(runner.training_sequence(), &cfg.frame, cfg.sps)?.into_samples(),
        None => runner.training_sequence().unit_power_samples(),
    };
    let path = out_dir(cli)?.join("ts.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["n", "re", "im"])?;
    for (i, v) in samples.iter().enumerate() {
        w.write_record([i.to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()?;
    eprintln!("wrote {} samples to {}", samples.len(), path.display());
    Ok(())
}

fn simulate(cli: &Cli, distance_km: Option<f64>, fo_hz: Option<f64>, to: Option<i64>) -> Result<()> {
    let mut cfg = load_config(cli)?;
    if let Some(to) = to {
        cfg.to_mode = ToMode::Fixed(to);
        cfg.validate()?;
    }
    cfg.baselines = false;
    let distance = distance_km.unwrap_or(cfg.distances_km[0]);
    let fo = fo_hz.unwrap_or(cfg.fo_grid_hz[0]);
    let result = TrialRunner::new(&cfg)?.run(distance, fo, cfg.seed)?;
    eprintln!(
        "truth: cd {} ps/nm, fo {} Hz, to {} samples",
        result.cd_true, result.fo_true, result.to_true
    );
    match &result.proposed {
        Ok(est) => {
            if cli.out.is_some() {
                write_json(&out_dir(cli)?.join("estimate.json"), est)?;
            }
            print_json(est)
        }
        Err(e) => bail!("estimation failed: {e}"),
    }
}

fn sweep(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli)?;
    let out = run_sweep(&cfg, &dir)?;
    eprintln!(
        "{} trials -> {}, {}, {}",
        out.results.len(),
        out.data.display(),
        out.summary.display(),
        out.meta.display()
    );
    Ok(())
}

fn compare(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let report = compare_methods(&cfg)?;
    if cli.out.is_some() {
        write_json(&out_dir(cli)?.join("compare.json"), &report)?;
    }
    print_json(&report)
}

#[derive(serde::Serialize)]
struct ComplexityOut {
    #[serde(flatten)]
    report: chirpsync_core::ComplexityReport,
    ratio: f64,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(sps) = cli.sps {
        RxSps::from_value(sps)?;
    }
    match &cli.command {
        Command::GenTs => gen_ts(&cli),
        Command::Simulate { distance_km, fo_hz, to } => simulate(&cli, *distance_km, *fo_hz, *to),
        Command::Sweep => sweep(&cli),
        Command::Compare => compare(&cli),
        Command::Complexity { m, n, k } => {
            let report = complexity_report(*m, *n, *k);
            print_json(&ComplexityOut {
                ratio: report.ratio(),
                report,
            })
        }
    }
}
