use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aircomp::config::ExperimentSpec;
use aircomp::dump::write_channel_dump;
use aircomp::output::{write_csv, write_metadata, NamedResult};
use aircomp::{demo, verify};
use aircomp_core::channel::{draw_trial_channel, ChannelParams, TapProfile};
use aircomp_core::sim::{snr_to_noise_power, sweep};
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

/// Trials per SNR point under `--quick` when `--trials` is not given.
const QUICK_TRIALS: u64 = 1_000;

#[derive(Parser)]
#[command(
    name = "aircomp",
    version,
    about = "Digital over-the-air sum computation simulator"
)]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = "AIRCOMP_SEED")]
    seed: Option<u64>,
    /// Trials per SNR point; overrides the config file.
    #[arg(long, global = true, env = "AIRCOMP_TRIALS")]
    trials: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true, env = "AIRCOMP_OUT")]
    out: Option<PathBuf>,
    /// Reduced sample sizes.
    #[arg(long, global = true, env = "AIRCOMP_QUICK")]
    quick: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a config file and write the CSV table.
    Sweep { config: PathBuf },
    /// Run the built-in oracle suite.
    Verify,
    /// Trace one trial of the proposed scheme.
    Demo {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        b: u32,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr_db: f64,
    },
    /// Dump one channel realization as text.
    Channel {
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        l: usize,
        #[arg(long, default_value_t = 4)]
        taps: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 0.0)]
        csi_error: f64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

fn run_sweep(cli: &Cli, path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut spec =
        ExperimentSpec::parse(&text).with_context(|| format!("in {}", path.display()))?;
    let trials = cli.trials.or(cli.quick.then_some(QUICK_TRIALS));
    spec.override_with(cli.seed, trials);
    let out = cli.out.clone().or_else(|| spec.out.clone());

    let mut results = Vec::with_capacity(spec.experiments.len());
    for e in &spec.experiments {
        let start = Instant::now();
        let r = sweep(&e.config).with_context(|| format!("experiment [{}]", e.name))?;
        if spec.verbosity > 0 {
            eprintln!(
                "[{}] {} points x {} trials in {:.2?}",
                e.name,
                r.points.len(),
                e.config.trials,
                start.elapsed()
            );
        }
        results.push(r);
    }
    let named: Vec<NamedResult<'_>> = spec
        .experiments
        .iter()
        .zip(&results)
        .map(|(e, result)| NamedResult {
            name: &e.name,
            result,
        })
        .collect();

    let mut csv = Vec::new();
    write_csv(&mut csv, &named)?;
    emit(out.as_deref(), std::str::from_utf8(&csv)?)?;
    if let Some(out) = out {
        let meta = meta_path(&out);
        let file =
            fs::File::create(&meta).with_context(|| format!("writing {}", meta.display()))?;
        write_metadata(io::BufWriter::new(file), &named)?;
    }
    Ok(())
}

fn run_verify(cli: &Cli) -> anyhow::Result<()> {
    let sizes = if cli.quick {
        verify::Sizes::QUICK
    } else {
        verify::Sizes::FULL
    };
    let mut report = String::new();
    let mut failed = 0;
    for check in verify::run_all(sizes, cli.seed.unwrap_or(0)) {
        failed += usize::from(!check.passed);
        report.push_str(&format!("{check}\n"));
    }
    emit(cli.out.as_deref(), &report)?;
    if failed > 0 {
        bail!("{failed} oracle check(s) failed");
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Sweep { config } => run_sweep(cli, config),
        Command::Verify => run_verify(cli),
        Command::Demo { k, b, snr_db } => {
            let text = demo::trace(cli.seed.unwrap_or(0), *k, *b, *snr_db)?;
            emit(cli.out.as_deref(), &text)
        }
        Command::Channel {
            k,
            l,
            taps,
            snr_db,
            csi_error,
            trial,
        } => {
            let noise = snr_to_noise_power(1.0, *snr_db, *l);
            let params = ChannelParams::new(*k, *l, TapProfile::uniform(*taps)?, noise)
                .with_csi_error(*csi_error);
            let r = draw_trial_channel(&params, cli.seed.unwrap_or(0), *trial)?;
            emit(cli.out.as_deref(), &write_channel_dump(&r))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli);
    if matches!(cli.command, Command::Sweep { .. } | Command::Verify) {
        eprintln!("elapsed {:.2?}", start.elapsed());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
