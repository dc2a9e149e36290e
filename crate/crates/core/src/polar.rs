//! CRC-polar code construction and encoding.
//!
//! The polar transform is `G_n = F^{⊗t}` with `F = [[1, 0], [1, 1]]` in
//! natural (non bit-reversed) order. `G_n` is an involution, so source
//! recovery is the same butterfly as encoding.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::channel::noise_variance;
use crate::crc::CrcPoly;
use crate::error::{invalid, parse_err, Result};
use crate::gf2::{BitMatrix, BitWord};

/// How subchannel reliabilities are estimated when picking the information set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Construction {
    /// Gaussian approximation of density evolution on the BPSK-AWGN channel,
    /// with the design point given as Eb/N0 in dB at information rate k/n.
    GaussianApprox { design_snr_db: f64 },
    /// Bhattacharyya parameter recursion seeded with the given erasure-like
    /// parameter in (0, 1).
    Bhattacharyya { design_eps: f64 },
}

impl Construction {
    pub fn name(&self) -> &'static str {
        match self {
            Construction::GaussianApprox { .. } => "ga",
            Construction::Bhattacharyya { .. } => "bhattacharyya",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Construction::GaussianApprox { design_snr_db } => design_snr_db,
            Construction::Bhattacharyya { design_eps } => design_eps,
        }
    }

    pub fn from_name(name: &str, parameter: f64) -> Result<Self> {
        match name {
            "ga" | "gaussian" => Ok(Construction::GaussianApprox {
                design_snr_db: parameter,
            }),
            "bhattacharyya" | "bh" => Ok(Construction::Bhattacharyya { design_eps: parameter }),
            other => Err(invalid(format!("unknown construction '{other}'"))),
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.parameter())
    }
}

/// Parameters of one `[n, k+m]` CRC-polar code.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// The `k+m` information subchannels, ascending.
    pub info_set: Vec<usize>,
    pub crc: CrcPoly,
    pub construction: Construction,
}

impl CodeSpec {
    /// `k + m`, the dimension of the polar code before the CRC constraint.
    #[inline]
    pub fn k_total(&self) -> usize {
        self.k + self.m
    }

    /// Information rate `k / n`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut frozen = vec![true; self.n];
        for &i in &self.info_set {
            frozen[i] = false;
        }
        frozen
    }

    /// Writes the plain `key = value` configuration format.
    pub fn to_config(&self) -> String {
        format!(
            "# CRC-polar code [{n}, {k}+{m}]\nn = {n}\nk = {k}\nm = {m}\ncrc_poly = {crc}\nconstruction = {cname}\nparameter = {param}\n",
            n = self.n,
            k = self.k,
            m = self.m,
            crc = self.crc,
            cname = self.construction.name(),
            param = self.construction.parameter(),
        )
    }

    /// Parses the configuration format. `crc_poly` may be omitted when a
    /// default polynomial of length `m` exists; `construction` defaults to
    /// Gaussian approximation at 0 dB.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut n = None;
        let mut k = None;
        let mut m = None;
        let mut crc = None;
        let mut cname = None;
        let mut param = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| parse_err(line_no, format!("{key}: {e}")))
            };
            match key {
                "n" => n = Some(int(value)?),
                "k" => k = Some(int(value)?),
                "m" => m = Some(int(value)?),
                "crc_poly" => crc = Some(CrcPoly::from_hex(value).map_err(|e| parse_err(line_no, e.to_string()))?),
                "construction" => cname = Some(value.to_string()),
                "parameter" => {
                    param = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| parse_err(line_no, format!("parameter: {e}")))?,
                    )
                }
                other => return Err(parse_err(line_no, format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| parse_err(0, format!("missing key '{what}'"));
        let n = n.ok_or_else(|| missing("n"))?;
        let k = k.ok_or_else(|| missing("k"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let crc = match crc {
            Some(c) => c,
            None => CrcPoly::default_for(m).ok_or_else(|| parse_err(0, format!("no default CRC of length {m}")))?,
        };
        let construction = Construction::from_name(cname.as_deref().unwrap_or("ga"), param.unwrap_or(0.0))?;
        construct_code(n, k, m, crc, construction)
    }

    pub fn read_config(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&fs::read_to_string(path)?)
    }
}

/// Rows of `G_n` on the information set, and `G_n` itself.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    pub g: BitMatrix,
    pub gn: BitMatrix,
}

impl GeneratorMatrix {
    pub fn new(spec: &CodeSpec) -> Self {
        let gn = polar_kernel_power(spec.n);
        let g = gn.select_rows(&spec.info_set);
        GeneratorMatrix { g, gn }
    }
}

/// Explicit `F^{⊗t}` for `n = 2^t`: entry `(r, c)` is one iff the bits of
/// `c` are a subset of the bits of `r`.
pub fn polar_kernel_power(n: usize) -> BitMatrix {
    BitMatrix::from_fn(n, n, |r, c| c & !r == 0)
}

/// In-place `x · G_n` over GF(2), `x.len()` a power of two.
pub fn polar_transform_in_place(x: &mut [u8]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for j in block..block + half {
                x[j] ^= x[j + half];
            }
        }
        half *= 2;
    }
}

fn polar_transform(w: &BitWord) -> BitWord {
    let mut bits = w.to_bits();
    polar_transform_in_place(&mut bits);
    BitWord::from_bits(&bits).expect("transform keeps values binary")
}

/// Bhattacharyya parameter of every subchannel, index bits read MSB first
/// (`0` = degraded branch `2z - z^2`, `1` = upgraded branch `z^2`).
pub fn bhattacharyya_parameters(n: usize, eps: f64) -> Vec<f64> {
    let mut z = vec![eps];
    while z.len() < n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    z
}

/// `ln φ(x)` for Chung's approximation of the Gaussian-approximation
/// function φ, evaluated in log domain so large means do not underflow.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

fn inv_ln_phi(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    // ln φ is decreasing; bracket then bisect.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Mean LLR of every subchannel under the Gaussian approximation, for an
/// initial channel LLR mean `2 / sigma^2`.
pub fn gaussian_approx_means(n: usize, sigma2: f64) -> Vec<f64> {
    let mut mean = vec![2.0 / sigma2];
    while mean.len() < n {
        mean = mean
            .iter()
            .flat_map(|&v| {
                // 1 - (1 - φ)^2 = φ (2 - φ)
                let lp = ln_phi(v);
                let minus_target = lp + (2.0 - lp.exp()).ln();
                [inv_ln_phi(minus_target), 2.0 * v]
            })
            .collect();
    }
    mean
}

/// Builds a CRC-polar code, choosing the `k+m` most reliable subchannels.
pub fn construct_code(n: usize, k: usize, m: usize, crc: CrcPoly, construction: Construction) -> Result<CodeSpec> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!("block length {n} is not a power of two >= 2")));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k + m > n {
        return Err(invalid(format!("k+m = {} exceeds n = {n}", k + m)));
    }
    if crc.degree() != m {
        return Err(invalid(format!(
            "CRC polynomial {crc} has degree {} but m = {m}",
            crc.degree()
        )));
    }
    // Larger score = more reliable.
    let score: Vec<f64> = match construction {
        Construction::GaussianApprox { design_snr_db } => {
            let sigma2 = noise_variance(design_snr_db, k as f64 / n as f64);
            if !(sigma2.is_finite() && sigma2 > 0.0) {
                return Err(invalid(format!("design SNR {design_snr_db} dB is unusable")));
            }
            gaussian_approx_means(n, sigma2)
        }
        Construction::Bhattacharyya { design_eps } => {
            if !(design_eps > 0.0 && design_eps < 1.0) {
                return Err(invalid(format!("design epsilon {design_eps} not in (0, 1)")));
            }
            bhattacharyya_parameters(n, design_eps)
                .into_iter()
                .map(|z| -z)
                .collect()
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    // Ties favour the higher index.
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(b.cmp(&a)));
    let mut info_set = order[..k + m].to_vec();
    info_set.sort_unstable();
    Ok(CodeSpec {
        n,
        k,
        m,
        info_set,
        crc,
        construction,
    })
}

/// Places `u_info` on the information set (frozen bits zero) and returns
/// `u · G_n`.
pub fn encode(u_info: &BitWord, spec: &CodeSpec) -> Result<BitWord> {
    if u_info.len() != spec.k_total() {
        return Err(invalid(format!(
            "information block of length {} for k+m = {}",
            u_info.len(),
            spec.k_total()
        )));
    }
    let mut u = vec![0u8; spec.n];
    for (i, &pos) in spec.info_set.iter().enumerate() {
        u[pos] = u8::from(u_info.get(i));
    }
    polar_transform_in_place(&mut u);
    BitWord::from_bits(&u)
}

/// `c · G_n`, which is the source block for any codeword `c`.
pub fn recover_source(c: &BitWord) -> Result<BitWord> {
    if !c.len().is_power_of_two() {
        return Err(invalid(format!("length {} is not a power of two", c.len())));
    }
    Ok(polar_transform(c))
}

/// Restriction of a source block to the information set.
pub fn info_bits(u: &BitWord, spec: &CodeSpec) -> BitWord {
    BitWord::from_fn(spec.k_total(), |i| u.get(spec.info_set[i]))
}

/// A code together with its generator, the unit most callers pass around.
#[derive(Clone, Debug)]
pub struct CrcPolarCode {
    pub spec: CodeSpec,
    pub gen: GeneratorMatrix,
}

impl CrcPolarCode {
    pub fn new(spec: CodeSpec) -> Self {
        let gen = GeneratorMatrix::new(&spec);
        CrcPolarCode { spec, gen }
    }

    /// Attaches the CRC to a `k`-bit message and encodes it.
    pub fn encode_message(&self, msg: &BitWord) -> Result<(BitWord, BitWord)> {
        if msg.len() != self.spec.k {
            return Err(invalid(format!(
                "message of length {} for k = {}",
                msg.len(),
                self.spec.k
            )));
        }
        let u_info = self.spec.crc.attach(msg);
        let c = encode(&u_info, &self.spec)?;
        Ok((u_info, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::mat_vec_mul;
    use proptest::prelude::*;

    fn kronecker(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
        let mut out = vec![vec![0u8; ca * cb]; ra * rb];
        for i in 0..ra {
            for j in 0..ca {
                for p in 0..rb {
                    for q in 0..cb {
                        out[i * rb + p][j * cb + q] = a[i][j] & b[p][q];
                    }
                }
            }
        }
        out
    }

    fn kernel_by_kronecker(n: usize) -> BitMatrix {
        let f = vec![vec![1u8, 0], vec![1, 1]];
        let mut g = f.clone();
        while g.len() < n {
            g = kronecker(&g, &f);
        }
        BitMatrix::from_fn(n, n, |r, c| g[r][c] == 1)
    }

    fn bh_code(n: usize, k: usize, m: usize) -> CodeSpec {
        construct_code(
            n,
            k,
            m,
            CrcPoly::default_for(m).unwrap(),
            Construction::Bhattacharyya { design_eps: 0.5 },
        )
        .unwrap()
    }

    #[test]
    fn subset_rule_matches_kronecker_power() {
        for n in [2, 4, 8, 16, 32] {
            assert_eq!(polar_kernel_power(n), kernel_by_kronecker(n));
        }
    }

    #[test]
    fn kernel_is_self_inverse() {
        for n in [2, 8, 64] {
            let g = polar_kernel_power(n);
            assert_eq!(g.mul(&g).unwrap(), BitMatrix::identity(n));
        }
    }

    #[test]
    fn n2_picks_upgraded_channel() {
        let spec = construct_code(
            2,
            1,
            0,
            CrcPoly::none(),
            Construction::Bhattacharyya { design_eps: 0.5 },
        )
        .unwrap();
        assert_eq!(spec.info_set, vec![1]);
        let c = encode(&BitWord::parse("1").unwrap(), &spec).unwrap();
        assert_eq!(c.to_string(), "11");
    }

    #[test]
    fn bhattacharyya_matches_per_index_recursion() {
        // Independent oracle: walk the bits of each index MSB first.
        let n = 16;
        let oracle: Vec<f64> = (0..n)
            .map(|i| {
                let mut z: f64 = 0.5;
                for bit in (0..4).rev() {
                    z = if (i >> bit) & 1 == 1 { z * z } else { 2.0 * z - z * z };
                }
                z
            })
            .collect();
        assert_eq!(bhattacharyya_parameters(n, 0.5), oracle);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| oracle[a].total_cmp(&oracle[b]));
        let mut expect = order[..8].to_vec();
        expect.sort_unstable();
        assert_eq!(bh_code(16, 4, 4).info_set, expect);
        assert_eq!(expect, vec![7, 9, 10, 11, 12, 13, 14, 15]);
    }

    #[test]
    fn ga_construction_sizes_and_determinism() {
        let a = construct_code(
            64,
            32,
            6,
            CrcPoly::nr_crc6(),
            Construction::GaussianApprox { design_snr_db: 3.0 },
        )
        .unwrap();
        assert_eq!(a.info_set.len(), 38);
        let b = construct_code(
            64,
            32,
            6,
            CrcPoly::nr_crc6(),
            Construction::GaussianApprox { design_snr_db: 3.0 },
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(a.info_set.contains(&63));
        assert!(!a.info_set.contains(&0));
        let big = construct_code(
            1024,
            500,
            11,
            CrcPoly::nr_crc11(),
            Construction::GaussianApprox { design_snr_db: 2.0 },
        )
        .unwrap();
        assert_eq!(big.info_set.len(), 511);
    }

    #[test]
    fn ga_means_are_monotone_in_the_partial_order() {
        // Flipping a 0 bit of the index to 1 never makes a channel worse.
        let means = gaussian_approx_means(32, 0.5);
        for i in 0..32 {
            for b in 0..5 {
                if (i >> b) & 1 == 0 {
                    assert!(means[i | (1 << b)] >= means[i] - 1e-9);
                }
            }
        }
    }

    #[test]
    fn construct_rejects_bad_parameters() {
        let crc = CrcPoly::nr_crc6();
        let ga = Construction::GaussianApprox { design_snr_db: 1.0 };
        assert!(construct_code(64, 60, 6, crc, ga).is_err());
        assert!(construct_code(48, 20, 6, crc, ga).is_err());
        assert!(construct_code(64, 20, 5, crc, ga).is_err());
    }

    #[test]
    fn small_encode_examples() {
        let spec = bh_code(16, 4, 4);
        assert!(encode(&BitWord::zeros(8), &spec).unwrap().is_zero());
        assert!(encode(&BitWord::zeros(7), &spec).is_err());
        // n = 2 with the upgraded channel carrying the bit.
        let mut u = [0u8, 1];
        polar_transform_in_place(&mut u);
        assert_eq!(u, [1, 1]);
    }

    #[test]
    fn encode_matches_explicit_generator() {
        let spec = bh_code(16, 4, 4);
        let gen = GeneratorMatrix::new(&spec);
        let g16 = kernel_by_kronecker(16);
        for mask in 0..256usize {
            let u_info = BitWord::from_fn(8, |i| (mask >> i) & 1 == 1);
            let mut u = BitWord::zeros(16);
            for (i, &p) in spec.info_set.iter().enumerate() {
                u.set(p, u_info.get(i));
            }
            let c = encode(&u_info, &spec).unwrap();
            assert_eq!(c, mat_vec_mul(&u, &g16).unwrap());
            assert_eq!(c, mat_vec_mul(&u_info, &gen.g).unwrap());
            let back = recover_source(&c).unwrap();
            assert_eq!(back, u);
            assert_eq!(info_bits(&back, &spec), u_info);
        }
    }

    #[test]
    fn involution_exhaustive_n16() {
        for mask in 0..1usize << 16 {
            let u = BitWord::from_fn(16, |i| (mask >> i) & 1 == 1);
            assert_eq!(recover_source(&recover_source(&u).unwrap()).unwrap(), u);
        }
    }

    #[test]
    fn config_round_trip() {
        let spec = construct_code(
            64,
            46,
            6,
            CrcPoly::nr_crc6(),
            Construction::GaussianApprox { design_snr_db: 2.5 },
        )
        .unwrap();
        let text = spec.to_config();
        assert_eq!(CodeSpec::from_config(&text).unwrap(), spec);
        let bare = "n = 16\nk = 8\nm = 4\nconstruction = bhattacharyya\nparameter = 0.5\n";
        let parsed = CodeSpec::from_config(bare).unwrap();
        assert_eq!(parsed.crc, CrcPoly::new(0x13).unwrap());
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let err = CodeSpec::from_config("n = 16\nk = x\n").unwrap_err();
        assert!(matches!(err, crate::Error::Parse { line: 2, .. }), "{err}");
        assert!(CodeSpec::from_config("n = 16\nbogus\n").is_err());
        assert!(CodeSpec::from_config("n = 16\nk = 4\n").is_err());
    }

    proptest! {
        #[test]
        fn involution_random(exp in 1u32..8, seed in any::<u64>()) {
            let n = 1usize << exp;
            let u = BitWord::from_fn(n, |i| (seed.rotate_left(i as u32 * 7) ^ (i as u64 * 0x9E37)) & 1 == 1);
            prop_assert_eq!(recover_source(&recover_source(&u).unwrap()).unwrap(), u);
        }

        #[test]
        fn encode_is_linear(a in any::<u16>(), b in any::<u16>()) {
            let spec = bh_code(32, 10, 6);
            let wa = BitWord::from_fn(16, |i| (a >> i) & 1 == 1);
            let wb = BitWord::from_fn(16, |i| (b >> i) & 1 == 1);
            let lhs = encode(&wa.xor(&wb), &spec).unwrap();
            let rhs = encode(&wa, &spec).unwrap().xor(&encode(&wb, &spec).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn frozen_positions_recover_to_zero(a in any::<u16>()) {
            let spec = bh_code(32, 10, 6);
            let w = BitWord::from_fn(16, |i| (a >> i) & 1 == 1);
            let u = recover_source(&encode(&w, &spec).unwrap()).unwrap();
            for (pos, frozen) in spec.frozen_mask().into_iter().enumerate() {
                if frozen {
                    prop_assert!(!u.get(pos));
                }
            }
        }
    }
}
