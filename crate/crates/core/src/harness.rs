//! Monte Carlo bit-error-rate sweeps and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::modulation::Constellation;
use crate::perturbation::{
    combined_perturbation, continuous_perturbation, discrete_perturbation, Perturbation,
    PerturbationKind,
};
use crate::precoding::{inverse_precoder, regularized_precoder, PrecoderKind};
use crate::system::{sample_channel, sample_noise, substream, SystemConfig};
use crate::transceiver::{detect, propagate, receive, transmit};
use crate::{CVector, Error, Result};

/// Channel redraws allowed per trial before giving up.
pub const MAX_RESAMPLES: u64 = 64;
/// Early stopping needs at least this many bit errors...
pub const EARLY_STOP_ERRORS: u64 = 400;
/// ...and at least this many trials.
pub const EARLY_STOP_TRIALS: u64 = 10_000;
/// Trials run between stopping checks. Fixed so that stopping does not
/// depend on the thread count.
const BATCH: u64 = 1_000;

pub const CSV_HEADER: &str = "snr_db,trials,bits,bit_errors,ber,resamples";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
    pub resamples: u64,
    /// `| |x|^2 - 1 |` of the transmitted vector.
    pub power_error: f64,
    pub max_lattice_component: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub resamples: u64,
}

/// Per-point quantities that are tracked but not written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointDiagnostics {
    /// Worst `| |x|^2 - 1 |` over the point's transmissions.
    pub max_power_error: f64,
    /// Largest lattice offset component chosen.
    pub max_lattice_component: u32,
    /// Trials whose offset touched the edge of the search window.
    pub window_edge_trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub config: SystemConfig,
    pub points: Vec<BerPoint>,
    /// Parallel to `points`; empty for curves read back from CSV.
    pub diagnostics: Vec<PointDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Upper bound on trials per point.
    pub trials_per_point: u64,
    pub early_stop: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            trials_per_point: 100_000,
            early_stop: true,
            threads: None,
        }
    }
}

/// One transmission at the configuration's noise variance.
///
/// Draws a channel, `K` data symbols and a noise vector, in that order, from
/// `rng`; redraws all three if the channel cannot be inverted or the
/// perturbed data vanishes.
pub fn simulate_trial<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<TrialOutcome> {
    cfg.validate()?;
    let c = Constellation::new(cfg.modulation);
    let tau = c.tau();
    let (k, m) = (cfg.users, cfg.tx_antennas);
    let sigma2 = cfg.noise_variance;
    let nbits = k * c.bits_per_symbol();
    let folding = cfg.perturbation_kind.uses_lattice();

    let mut resamples = 0;
    while resamples < MAX_RESAMPLES {
        let h = sample_channel(rng, k, m);
        let bits: Vec<u8> = (0..nbits).map(|_| u8::from(rng.random::<bool>())).collect();
        let n = sample_noise(rng, k, sigma2);

        let precoder = match cfg.precoder_kind {
            PrecoderKind::Inverse => inverse_precoder(&h),
            PrecoderKind::RegularizedInverse => regularized_precoder(&h, k as f64 * sigma2),
        };
        let g = match precoder {
            Ok(g) => g,
            Err(Error::IllConditioned { .. }) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let u = CVector::from_vec(c.modulate(&bits)?);
        let pert = match cfg.perturbation_kind {
            PerturbationKind::None => Perturbation::none(&g, &u),
            PerturbationKind::Discrete => {
                match discrete_perturbation(&h, &g, &u, tau, cfg.window) {
                    Ok(p) => p,
                    Err(Error::IllConditioned { .. }) => {
                        resamples += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            PerturbationKind::Continuous => continuous_perturbation(&g, &u, sigma2)?,
            PerturbationKind::Combined => {
                combined_perturbation(&g, &u, tau, sigma2, cfg.window)?
            }
        };
        let tx = match transmit(&g, &u, &pert, tau) {
            Ok(tx) => tx,
            Err(Error::DegenerateGamma { .. }) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let y = propagate(&h, &tx, &n)?;
        let decided = detect(&receive(&y, tx.gamma, tau, folding), &c);
        let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
        return Ok(TrialOutcome {
            bit_errors,
            bits: nbits as u64,
            resamples,
            power_error: (tx.x.norm_squared() - 1.0).abs(),
            max_lattice_component: pert.max_lattice_component(),
        });
    }
    Err(Error::ResampleLimit {
        attempts: MAX_RESAMPLES as usize,
    })
}

/// One transmission at `snr_db`.
pub fn run_trial<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    snr_db: f64,
    rng: &mut R,
) -> Result<TrialOutcome> {
    simulate_trial(&cfg.at_snr(snr_db), rng)
}

#[derive(Default)]
struct Tally {
    trials: u64,
    bits: u64,
    bit_errors: u64,
    resamples: u64,
    diag: PointDiagnostics,
}

impl Tally {
    fn add(&mut self, o: &TrialOutcome, window: u32) {
        self.trials += 1;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.resamples += o.resamples;
        self.diag.max_power_error = self.diag.max_power_error.max(o.power_error);
        self.diag.max_lattice_component =
            self.diag.max_lattice_component.max(o.max_lattice_component);
        if window > 0 && o.max_lattice_component == window {
            self.diag.window_edge_trials += 1;
        }
    }
}

fn run_point(cfg: &SystemConfig, index: usize, snr_db: f64, opts: &SweepOptions) -> Result<(BerPoint, PointDiagnostics)> {
    let point_cfg = cfg.at_snr(snr_db);
    let mut tally = Tally::default();
    let mut next = 0u64;
    while next < opts.trials_per_point {
        if opts.early_stop
            && tally.bit_errors >= EARLY_STOP_ERRORS
            && tally.trials >= EARLY_STOP_TRIALS
        {
            break;
        }
        let end = (next + BATCH).min(opts.trials_per_point);
        let outcomes: Vec<Result<TrialOutcome>> = (next..end)
            .into_par_iter()
            .map(|t| simulate_trial(&point_cfg, &mut substream(cfg.seed, index as u64, t)))
            .collect();
        for o in outcomes {
            tally.add(&o?, cfg.window.radius);
        }
        next = end;
    }
    let point = BerPoint {
        snr_db,
        trials: tally.trials,
        bits: tally.bits,
        bit_errors: tally.bit_errors,
        ber: tally.bit_errors as f64 / tally.bits as f64,
        resamples: tally.resamples,
    };
    Ok((point, tally.diag))
}

/// BER at each SNR in `snrs` (dB, strictly increasing).
///
/// Trial `t` of point `i` always uses `substream(seed, i, t)`, and stopping
/// is decided on whole batches, so the result does not depend on how many
/// threads run it.
pub fn sweep(cfg: &SystemConfig, snrs: &[f64], opts: &SweepOptions) -> Result<BerCurve> {
    cfg.validate()?;
    if opts.trials_per_point == 0 {
        return Err(Error::InvalidConfig("at least one trial per point is required".into()));
    }
    if snrs.iter().any(|s| s.is_nan()) || snrs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("SNR grid must be strictly increasing".into()));
    }
    let body = || -> Result<BerCurve> {
        let mut points = Vec::with_capacity(snrs.len());
        let mut diagnostics = Vec::with_capacity(snrs.len());
        for (i, &snr) in snrs.iter().enumerate() {
            let (p, d) = run_point(cfg, i, snr, opts)?;
            points.push(p);
            diagnostics.push(d);
        }
        Ok(BerCurve {
            config: cfg.clone(),
            points,
            diagnostics,
        })
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}

/// SNR at which the curve crosses `target_ber`, interpolating `log10(ber)`
/// linearly between the first bracketing pair of points with nonzero BER.
pub fn snr_at_ber(curve: &BerCurve, target_ber: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.ber > 0.0)
        .map(|p| (p.snr_db, p.ber.log10()))
        .collect();
    let t = target_ber.log10();
    pts.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        (b0 >= t && b1 <= t && b0 != b1).then(|| s0 + (t - b0) * (s1 - s0) / (b1 - b0))
    })
}

/// CSV text: `#` metadata lines, header, one row per point.
pub fn to_csv_string(curve: &BerCurve) -> String {
    let c = &curve.config;
    let mut out = String::new();
    out.push_str("# vecpert BER sweep\n");
    let _ = writeln!(out, "# tx_antennas={}", c.tx_antennas);
    let _ = writeln!(out, "# users={}", c.users);
    let _ = writeln!(out, "# noise_variance={}", c.noise_variance);
    let _ = writeln!(out, "# modulation={}", c.modulation);
    let _ = writeln!(out, "# precoder={}", c.precoder_kind);
    let _ = writeln!(out, "# perturbation={}", c.perturbation_kind);
    let _ = writeln!(out, "# window={}", c.window);
    let _ = writeln!(out, "# seed={}", c.seed);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.snr_db, p.trials, p.bits, p.bit_errors, p.ber, p.resamples
        );
    }
    out
}

pub fn write_csv(curve: &BerCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(curve)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_field<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| Error::Parse {
        line,
        msg: format!("bad {what} {s:?}: {e}"),
    })
}

fn parse_config(line: usize, cfg: &mut SystemConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "tx_antennas" => cfg.tx_antennas = parse_field(line, key, value)?,
        "users" => cfg.users = parse_field(line, key, value)?,
        "noise_variance" => cfg.noise_variance = parse_field(line, key, value)?,
        "modulation" => cfg.modulation = parse_field(line, key, value)?,
        "precoder" => cfg.precoder_kind = parse_field(line, key, value)?,
        "perturbation" => cfg.perturbation_kind = parse_field(line, key, value)?,
        "window" => cfg.window = parse_field(line, key, value)?,
        "seed" => cfg.seed = parse_field(line, key, value)?,
        _ => {}
    }
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<BerCurve> {
    let mut config = SystemConfig::default();
    let mut points = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(meta) = raw.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                parse_config(line, &mut config, k.trim(), v.trim())?;
            }
            continue;
        }
        if !seen_header {
            if raw != CSV_HEADER {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected header {CSV_HEADER:?}"),
                });
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 fields, found {}", f.len()),
            });
        }
        points.push(BerPoint {
            snr_db: parse_field(line, "snr_db", f[0])?,
            trials: parse_field(line, "trials", f[1])?,
            bits: parse_field(line, "bits", f[2])?,
            bit_errors: parse_field(line, "bit_errors", f[3])?,
            ber: parse_field(line, "ber", f[4])?,
            resamples: parse_field(line, "resamples", f[5])?,
        });
    }
    if !seen_header {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: "missing header".into(),
        });
    }
    Ok(BerCurve {
        config,
        points,
        diagnostics: Vec::new(),
    })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<BerCurve> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::Modulation;
    use crate::perturbation::SearchWindow;

    fn cfg(modulation: Modulation, precoder: PrecoderKind, kind: PerturbationKind) -> SystemConfig {
        SystemConfig {
            modulation,
            precoder_kind: precoder,
            perturbation_kind: kind,
            seed: 17,
            ..SystemConfig::default()
        }
    }

    fn all_schemes() -> Vec<SystemConfig> {
        let mut v = Vec::new();
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            for p in [PrecoderKind::Inverse, PrecoderKind::RegularizedInverse] {
                for k in [
                    PerturbationKind::None,
                    PerturbationKind::Discrete,
                    PerturbationKind::Continuous,
                    PerturbationKind::Combined,
                ] {
                    v.push(cfg(m, p, k));
                }
            }
        }
        v
    }

    #[test]
    fn noiseless_trials_are_error_free() {
        for c in all_schemes() {
            for t in 0..300 {
                let o = run_trial(&c, f64::INFINITY, &mut substream(1, 0, t)).unwrap();
                assert_eq!(o.bit_errors, 0, "{c:?}");
                assert_eq!(o.bits, 4 * c.modulation_bits());
                assert!(o.power_error < 1e-10);
            }
        }
    }

    #[test]
    fn pure_noise_limit() {
        for kind in [PerturbationKind::None, PerturbationKind::Continuous] {
            let c = cfg(Modulation::Qpsk, PrecoderKind::Inverse, kind);
            let curve = sweep(
                &c,
                &[-40.0],
                &SweepOptions {
                    trials_per_point: 12_500,
                    early_stop: false,
                    threads: None,
                },
            )
            .unwrap();
            let p = &curve.points[0];
            assert_eq!(p.bits, 100_000);
            assert!((p.ber - 0.5).abs() < 0.02, "{kind}: {}", p.ber);
        }
    }

    #[test]
    fn infinite_noise_is_rejected() {
        let c = cfg(Modulation::Qpsk, PrecoderKind::Inverse, PerturbationKind::None);
        assert!(run_trial(&c, f64::NEG_INFINITY, &mut substream(0, 0, 0)).is_err());
    }

    #[test]
    fn trial_is_deterministic() {
        let c = cfg(Modulation::Qam16, PrecoderKind::Inverse, PerturbationKind::Combined);
        let a = run_trial(&c, 12.0, &mut substream(4, 2, 9)).unwrap();
        let b = run_trial(&c, 12.0, &mut substream(4, 2, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_bookkeeping() {
        let c = cfg(Modulation::Qam16, PrecoderKind::Inverse, PerturbationKind::Discrete);
        let opts = SweepOptions {
            trials_per_point: 1,
            early_stop: false,
            threads: Some(1),
        };
        assert!(sweep(&c, &[], &opts).unwrap().points.is_empty());
        let curve = sweep(&c, &[5.0, 10.0], &opts).unwrap();
        assert_eq!(curve.points.len(), 2);
        for p in &curve.points {
            assert_eq!(p.trials, 1);
            assert_eq!(p.bits, 16);
            assert_eq!(p.ber, p.bit_errors as f64 / p.bits as f64);
        }
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let c = SystemConfig::default();
        let opts = SweepOptions::default();
        assert!(sweep(&c, &[3.0, 3.0], &opts).is_err());
        assert!(sweep(&c, &[f64::NAN], &opts).is_err());
        let zero = SweepOptions {
            trials_per_point: 0,
            ..opts
        };
        assert!(sweep(&c, &[1.0], &zero).is_err());
    }

    #[test]
    fn early_stop_bounds_trials() {
        let c = cfg(Modulation::Qpsk, PrecoderKind::Inverse, PerturbationKind::None);
        let opts = SweepOptions {
            trials_per_point: 50_000,
            early_stop: true,
            threads: None,
        };
        let p = &sweep(&c, &[0.0], &opts).unwrap().points[0];
        assert_eq!(p.trials, EARLY_STOP_TRIALS);
        let p = &sweep(&c, &[0.0], &SweepOptions { early_stop: false, ..opts }).unwrap().points[0];
        assert_eq!(p.trials, 50_000);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = cfg(Modulation::Qam16, PrecoderKind::Inverse, PerturbationKind::Combined);
        let run = |threads| {
            let opts = SweepOptions {
                trials_per_point: 2_500,
                early_stop: false,
                threads: Some(threads),
            };
            to_csv_string(&sweep(&c, &[10.0, 20.0], &opts).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let c = SystemConfig {
            window: SearchWindow::new(3),
            noise_variance: 0.125,
            ..cfg(Modulation::Qam16, PrecoderKind::RegularizedInverse, PerturbationKind::Combined)
        };
        let curve = BerCurve {
            config: c.clone(),
            points: vec![BerPoint {
                snr_db: 2.5,
                trials: 1000,
                bits: 16_000,
                bit_errors: 7,
                ber: 7.0 / 16_000.0,
                resamples: 1,
            }],
            diagnostics: vec![],
        };
        let text = to_csv_string(&curve);
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec![CSV_HEADER, "2.5,1000,16000,7,0.0004375,1"]);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn csv_ber_keeps_precision() {
        let ber = 3.0 / 7_000_000.0;
        let curve = BerCurve {
            config: SystemConfig::default(),
            points: vec![BerPoint { snr_db: 30.0, trials: 1, bits: 7_000_000, bit_errors: 3, ber, resamples: 0 }],
            diagnostics: vec![],
        };
        let text = to_csv_string(&curve);
        let row = text.lines().last().unwrap();
        let field = row.split(',').nth(4).unwrap();
        assert!(!field.contains('e'));
        let digits = field.trim_start_matches(['0', '.']).len();
        assert!(digits >= 6, "{field}");
        assert_eq!(parse_csv(&text).unwrap().points[0].ber, ber);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv("a,b\n"), Err(Error::Parse { line: 1, .. })));
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Parse { line: 2, .. })));
        assert!(parse_csv("# only comments\n").is_err());
        let err = write_csv(
            &BerCurve { config: SystemConfig::default(), points: vec![], diagnostics: vec![] },
            "/nonexistent-dir/out.csv",
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn interpolated_crossing() {
        let mk = |snr_db: f64, ber: f64| BerPoint { snr_db, trials: 1, bits: 1, bit_errors: 0, ber, resamples: 0 };
        let curve = BerCurve {
            config: SystemConfig::default(),
            points: vec![mk(0.0, 1e-1), mk(10.0, 1e-3), mk(20.0, 0.0)],
            diagnostics: vec![],
        };
        assert!((snr_at_ber(&curve, 1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert!(snr_at_ber(&curve, 1e-5).is_none());
    }

    impl SystemConfig {
        fn modulation_bits(&self) -> u64 {
            Constellation::new(self.modulation).bits_per_symbol() as u64
        }
    }
}
