//! `vecpert`: BER-versus-SNR sweep for one precoding scheme, written as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use vecpert::{
    sweep, write_csv, Modulation, PerturbationKind, PrecoderKind, SearchWindow, SweepOptions,
    SystemConfig,
};

#[derive(Debug, Parser)]
#[command(name = "vecpert", version, about = "Monte Carlo BER sweep for vector-perturbation precoding")]
struct Cli {
    /// Transmit antennas (M)
    #[arg(long = "tx", default_value_t = 4)]
    tx: usize,

    /// Users (K), at most M
    #[arg(long, default_value_t = 4)]
    users: usize,

    /// qpsk or 16qam
    #[arg(long, default_value = "qpsk")]
    modulation: Modulation,

    /// inv (channel inversion) or rinv (regularized inversion)
    #[arg(long, default_value = "inv")]
    precoder: PrecoderKind,

    /// none, discrete, continuous or combined
    #[arg(long, default_value = "none")]
    perturbation: PerturbationKind,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_start: f64,

    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    snr_stop: f64,

    #[arg(long, default_value_t = 2.0)]
    snr_step: f64,

    /// Maximum symbol-vector transmissions per SNR point
    #[arg(long, default_value_t = 100_000)]
    trials: u64,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Integer search radius for the discrete and combined schemes
    #[arg(long, default_value_t = 2)]
    window: u32,

    /// Output CSV file
    #[arg(long)]
    out: PathBuf,

    /// Run every point to the full trial count
    #[arg(long)]
    no_early_stop: bool,

    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        bail!("SNR grid needs finite bounds and a positive step");
    }
    if stop < start {
        bail!("--snr-stop {stop} is below --snr-start {start}");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = SystemConfig {
        tx_antennas: cli.tx,
        users: cli.users,
        noise_variance: 0.0,
        modulation: cli.modulation,
        precoder_kind: cli.precoder,
        perturbation_kind: cli.perturbation,
        window: SearchWindow::new(cli.window),
        seed: cli.seed,
    };
    cfg.validate()?;
    if cli.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let snrs = snr_grid(cli.snr_start, cli.snr_stop, cli.snr_step)?;
    let opts = SweepOptions {
        trials_per_point: cli.trials,
        early_stop: !cli.no_early_stop,
        threads: cli.threads,
    };
    let curve = sweep(&cfg, &snrs, &opts).context("sweep failed")?;
    write_csv(&curve, &cli.out)?;
    for p in &curve.points {
        println!("{:>6} dB  ber {:.3e}  ({} errors / {} bits)", p.snr_db, p.ber, p.bit_errors, p.bits);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
