//! BPSK over AWGN with hard-decision demodulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gf2::BitWord;

/// Noise variance `1 / (2 · R · 10^(Eb/N0 / 10))`. An infinite Eb/N0 gives 0.
pub fn noise_variance(ebn0_db: f64, code_rate: f64) -> f64 {
    if ebn0_db == f64::INFINITY {
        return 0.0;
    }
    1.0 / (2.0 * code_rate * 10f64.powf(ebn0_db / 10.0))
}

/// Converts Es/N0 (per coded symbol) to Eb/N0 at the given rate.
pub fn esn0_to_ebn0(esn0_db: f64, code_rate: f64) -> f64 {
    esn0_db - 10.0 * code_rate.log10()
}

/// `0 -> +1`, `1 -> -1`.
pub fn modulate(c: &BitWord) -> Vec<f64> {
    c.iter().map(|b| if b { -1.0 } else { 1.0 }).collect()
}

/// Sign slicer; zero decides 0.
pub fn hard_decision(y: &[f64]) -> BitWord {
    BitWord::from_fn(y.len(), |i| y[i] < 0.0)
}

/// Channel LLRs `2y / sigma^2`, positive favouring bit 0.
pub fn llrs(y: &[f64], sigma2: f64) -> Vec<f64> {
    y.iter().map(|&v| 2.0 * v / sigma2).collect()
}

/// Adds i.i.d. `N(0, sigma^2)` samples to `y` in place.
pub fn add_noise<R: Rng + ?Sized>(y: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    for v in y.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sigma * z;
    }
}

/// Independent random stream for frame `frame` of sweep point `point`.
///
/// Streams depend only on `(seed, point, frame)`, never on the order in
/// which frames are processed.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(point)));
    rng.set_stream(frame);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One operating point of the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    /// Information rate `k / n`.
    pub code_rate: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn sigma2(&self) -> f64 {
        noise_variance(self.ebn0_db, self.code_rate)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2().sqrt()
    }

    /// `y = x + z` with noise drawn from stream `frame`.
    pub fn transmit(&self, x: &[f64], frame: u64) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut rng = frame_rng(self.seed, 0, frame);
        add_noise(&mut y, self.sigma(), &mut rng);
        y
    }
}
