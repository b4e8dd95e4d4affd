//! System configuration, random channel and noise generation, SNR conventions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::modulation::Modulation;
use crate::perturbation::{PerturbationKind, SearchWindow};
use crate::precoding::PrecoderKind;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Everything needed to reproduce a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas at the base station (`M`).
    pub tx_antennas: usize,
    /// Single-antenna users (`K`).
    pub users: usize,
    /// Total complex noise variance per receive antenna. Each real dimension
    /// carries half of it.
    pub noise_variance: f64,
    pub modulation: Modulation,
    pub precoder_kind: PrecoderKind,
    pub perturbation_kind: PerturbationKind,
    /// Integer window for the discrete and combined searches.
    pub window: SearchWindow,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            tx_antennas: 4,
            users: 4,
            noise_variance: 0.0,
            modulation: Modulation::Qpsk,
            precoder_kind: PrecoderKind::Inverse,
            perturbation_kind: PerturbationKind::None,
            window: SearchWindow::default(),
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.tx_antennas == 0 {
            return Err(Error::InvalidConfig(
                "antenna and user counts must be positive".into(),
            ));
        }
        if self.users > self.tx_antennas {
            return Err(Error::InvalidConfig(format!(
                "{} users cannot be served by {} transmit antennas",
                self.users, self.tx_antennas
            )));
        }
        if !(self.noise_variance >= 0.0) || self.noise_variance.is_infinite() {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be finite and nonnegative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// Same configuration operated at `snr_db`.
    pub fn at_snr(&self, snr_db: f64) -> SystemConfig {
        SystemConfig {
            noise_variance: snr_to_sigma2(snr_db),
            ..self.clone()
        }
    }
}

/// Flat-fading channel `H`, one row per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(CMatrix);

impl ChannelMatrix {
    pub fn new(entries: CMatrix) -> Self {
        ChannelMatrix(entries)
    }

    pub fn identity(k: usize) -> Self {
        ChannelMatrix(CMatrix::identity(k, k))
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn tx_antennas(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std_per_dim: f64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * std_per_dim, im * std_per_dim)
}

/// Draws a `k x m` matrix of i.i.d. CN(0, 1) entries.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize) -> ChannelMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Row-major fill so the draw order follows users.
    let mut h = CMatrix::zeros(k, m);
    for r in 0..k {
        for c in 0..m {
            h[(r, c)] = complex_gaussian(rng, s);
        }
    }
    ChannelMatrix(h)
}

/// Draws `k` i.i.d. CN(0, sigma2) samples.
///
/// The stream always advances by the same amount regardless of `sigma2`, so
/// paired runs at different noise levels see the same channel and data.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, k: usize, sigma2: f64) -> CVector {
    let s = (sigma2 / 2.0).sqrt();
    CVector::from_fn(k, |_, _| complex_gaussian(rng, s))
}

/// Noise variance for a given SNR, with unit total transmit power.
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream for one trial of one SNR point.
pub fn substream(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ point) ^ trial);
    ChaCha8Rng::seed_from_u64(key)
}

impl fmt::Display for SearchWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.radius)
    }
}

impl FromStr for SearchWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u32>()
            .map(SearchWindow::new)
            .map_err(|e| Error::InvalidConfig(format!("bad search window {s:?}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = 0.0;
        let mut n = 0usize;
        while n < 1_000_000 {
            let h = sample_channel(&mut rng, 4, 4);
            acc += h.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
            n += 16;
        }
        let mean = acc / n as f64;
        assert!((0.99..=1.01).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn scalar_channel_power_is_exponential() {
        // Kolmogorov-Smirnov against Exp(1).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sample_channel(&mut rng, 1, 1).matrix()[(0, 0)].norm_sqr())
            .collect();
        xs.sort_by(f64::total_cmp);
        let mut d = 0.0f64;
        for (i, x) in xs.iter().enumerate() {
            let cdf = 1.0 - (-x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // 1% critical value
        assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn seeded_channel_is_reproducible() {
        let a = sample_channel(&mut substream(3, 1, 7), 4, 4);
        let b = sample_channel(&mut substream(3, 1, 7), 4, 4);
        assert_eq!(a, b);
        let c = sample_channel(&mut substream(3, 1, 8), 4, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_variance_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = sample_noise(&mut rng, 4, 0.0);
        assert!(n.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn noise_moments() {
        for (sigma2, seed) in [(1.0, 2u64), (0.5, 3)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = 0.0;
            let mut re2 = 0.0;
            let draws = 500_000;
            for _ in 0..draws {
                let n = sample_noise(&mut rng, 2, sigma2);
                acc += n.iter().map(|z| z.norm_sqr()).sum::<f64>();
                re2 += n.iter().map(|z| z.re * z.re).sum::<f64>();
            }
            let mean = acc / (2 * draws) as f64;
            let re_var = re2 / (2 * draws) as f64;
            assert!((mean / sigma2 - 1.0).abs() < 0.01, "E|n|^2 = {mean}");
            assert!((re_var / (sigma2 / 2.0) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_sigma2(0.0), 1.0);
        assert!((snr_to_sigma2(10.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_sigma2(3.0) - 0.501187).abs() < 1e-6);
        assert_eq!(snr_to_sigma2(f64::INFINITY), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let bad = SystemConfig {
            users: 5,
            ..SystemConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = SystemConfig {
            noise_variance: -1.0,
            ..SystemConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemConfig {
            users: 0,
            ..SystemConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
