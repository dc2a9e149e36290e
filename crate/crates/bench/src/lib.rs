//! Fixtures shared by the benchmarks.

use peposd::channel::{add_noise, frame_rng, modulate, noise_variance};
use peposd::{construct_code, BitWord, Construction, CrcPolarCode, CrcPoly};
use rand::Rng;

pub fn code(n: usize, k: usize, m: usize) -> CrcPolarCode {
    let crc = CrcPoly::default_for(m).expect("default CRC exists");
    CrcPolarCode::new(
        construct_code(n, k, m, crc, Construction::GaussianApprox { design_snr_db: 3.0 }).expect("valid code"),
    )
}

/// Received frames at `ebn0_db`, reproducible from `seed`.
pub fn frames(code: &CrcPolarCode, ebn0_db: f64, count: u64, seed: u64) -> Vec<Vec<f64>> {
    let sigma = noise_variance(ebn0_db, code.spec.rate()).sqrt();
    (0..count)
        .map(|f| {
            let mut rng = frame_rng(seed, 0, f);
            let msg = BitWord::from_fn(code.spec.k, |_| rng.random());
            let (_, c) = code.encode_message(&msg).expect("message fits");
            let mut y = modulate(&c);
            add_noise(&mut y, sigma, &mut rng);
            y
        })
        .collect()
}
