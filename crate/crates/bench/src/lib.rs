//! Fixed random instances shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecpert::{inverse_precoder, sample_channel, ChannelMatrix, Constellation, CVector, Modulation, Precoder};

pub struct Instance {
    pub channel: ChannelMatrix,
    pub precoder: Precoder,
    pub data: CVector,
    pub tau: f64,
}

/// `count` invertible `k x k` links carrying random 16QAM vectors.
pub fn instances(count: usize, k: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Constellation::new(Modulation::Qam16);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let channel = sample_channel(&mut rng, k, k);
        let Ok(precoder) = inverse_precoder(&channel) else { continue };
        let data = CVector::from_fn(k, |_, _| c.points()[rng.random_range(0..16)]);
        out.push(Instance { channel, precoder, data, tau: c.tau() });
    }
    out
}
