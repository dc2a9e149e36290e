//! Brute-force minimum-distance decoding, used as a test oracle.

use crate::error::{Error, Result};
use crate::gf2::BitWord;
use crate::osd::euclidean_distance;
use crate::polar::{encode, CrcPolarCode};

/// Largest enumerated dimension.
pub const MAX_ORACLE_DIMENSION: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct MlOracleResult {
    pub best_codeword: BitWord,
    pub info: BitWord,
    pub distance: f64,
    /// Whether only CRC-valid information blocks were searched.
    pub constrained: bool,
}

/// Enumerates every information block (or, if `constrained`, every message
/// with its CRC attached) and returns the codeword closest to `y`. Ties go to
/// the lexicographically smallest block.
pub fn ml_oracle(y: &[f64], code: &CrcPolarCode, constrained: bool) -> Result<MlOracleResult> {
    let spec = &code.spec;
    let k_total = spec.k_total();
    if k_total > MAX_ORACLE_DIMENSION {
        return Err(Error::Refused(format!(
            "k+m = {k_total} exceeds the exhaustive limit {MAX_ORACLE_DIMENSION}"
        )));
    }
    if y.len() != spec.n {
        return Err(crate::error::invalid(format!(
            "received {} samples for length {}",
            y.len(),
            spec.n
        )));
    }
    let dim = if constrained { spec.k } else { k_total };
    let mut best: Option<MlOracleResult> = None;
    for v in 0u64..(1u64 << dim) {
        let block = BitWord::from_fn(dim, |i| (v >> (dim - 1 - i)) & 1 == 1);
        let info = if constrained { spec.crc.attach(&block) } else { block };
        let c = encode(&info, spec)?;
        let d = euclidean_distance(y, &c);
        if best.as_ref().is_none_or(|b| d < b.distance) {
            best = Some(MlOracleResult {
                best_codeword: c,
                info,
                distance: d,
                constrained,
            });
        }
    }
    Ok(best.expect("at least one block is enumerated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_noise, frame_rng, llrs, modulate, noise_variance};
    use crate::crc::CrcPoly;
    use crate::polar::{construct_code, Construction};
    use crate::scl::scl_decode;
    use rand::Rng;

    fn code(n: usize, k: usize, m: usize) -> CrcPolarCode {
        CrcPolarCode::new(
            construct_code(
                n,
                k,
                m,
                CrcPoly::default_for(m).unwrap(),
                Construction::Bhattacharyya { design_eps: 0.5 },
            )
            .unwrap(),
        )
    }

    #[test]
    fn noiseless_is_exact() {
        let c = code(16, 4, 4);
        let (u_info, cw) = c.encode_message(&BitWord::parse("1011").unwrap()).unwrap();
        for constrained in [false, true] {
            let r = ml_oracle(&modulate(&cw), &c, constrained).unwrap();
            assert_eq!(r.best_codeword, cw);
            assert_eq!(r.info, u_info);
            assert_eq!(r.distance, 0.0);
        }
    }

    #[test]
    fn single_information_bit_picks_closer_codeword() {
        let c = CrcPolarCode::new(
            construct_code(
                2,
                1,
                0,
                CrcPoly::none(),
                Construction::Bhattacharyya { design_eps: 0.5 },
            )
            .unwrap(),
        );
        assert_eq!(
            ml_oracle(&[0.2, -0.9], &c, true).unwrap().best_codeword.to_string(),
            "11"
        );
        assert_eq!(
            ml_oracle(&[0.9, -0.2], &c, true).unwrap().best_codeword.to_string(),
            "00"
        );
    }

    #[test]
    fn refuses_large_dimensions() {
        let c = code(64, 20, 6);
        assert!(matches!(ml_oracle(&[0.0; 64], &c, true), Err(Error::Refused(_))));
    }

    #[test]
    fn unconstrained_lower_bounds_constrained() {
        let c = code(16, 6, 4);
        for f in 0..200 {
            let mut rng = frame_rng(3, 0, f);
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = ml_oracle(&y, &c, false).unwrap();
            let b = ml_oracle(&y, &c, true).unwrap();
            assert!(a.distance <= b.distance);
            assert!(c.spec.crc.check(&b.info));
        }
    }

    #[test]
    fn full_list_scl_agrees_with_oracle() {
        let c = code(16, 4, 4);
        let sigma2 = noise_variance(1.0, c.spec.rate());
        for f in 0..1000 {
            let mut rng = frame_rng(8, 0, f);
            let msg = BitWord::from_fn(4, |_| rng.random());
            let (_, cw) = c.encode_message(&msg).unwrap();
            let mut y = modulate(&cw);
            add_noise(&mut y, sigma2.sqrt(), &mut rng);
            let oracle = ml_oracle(&y, &c, true).unwrap();
            let scl = scl_decode(&llrs(&y, sigma2), &c.spec, 256).unwrap();
            assert!(scl.crc_ok);
            assert_eq!(scl.info, oracle.info, "frame {f}");
        }
    }
}
