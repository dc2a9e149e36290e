//! Systematic CRC over GF(2).
//!
//! Bit 0 of a block is the highest-degree coefficient. The check value of a
//! message is `msg(x) · x^m mod g(x)`, appended most significant bit first.

use std::fmt;

use crate::error::{invalid, Result};
use crate::gf2::BitWord;

/// A CRC generator polynomial of degree `m`, stored with its `x^m` term.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CrcPoly {
    poly: u64,
    degree: usize,
}

impl CrcPoly {
    /// `poly` is the full polynomial including the leading `x^m` term, e.g.
    /// `0x61` for `x^6 + x^5 + 1`.
    pub fn new(poly: u64) -> Result<Self> {
        if poly == 0 {
            return Err(invalid("CRC polynomial is zero"));
        }
        let degree = 63 - poly.leading_zeros() as usize;
        if degree > 32 {
            return Err(invalid(format!("CRC degree {degree} exceeds 32")));
        }
        if poly & 1 == 0 {
            return Err(invalid(format!("CRC polynomial {poly:#x} has a zero constant term")));
        }
        Ok(CrcPoly { poly, degree })
    }

    /// Parses a hex polynomial, with or without a `0x` prefix.
    pub fn from_hex(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
        let poly = u64::from_str_radix(digits, 16).map_err(|e| invalid(format!("bad CRC polynomial '{s}': {e}")))?;
        Self::new(poly)
    }

    /// The degree-0 polynomial `1`: every block passes, no bits are appended.
    pub fn none() -> Self {
        CrcPoly { poly: 1, degree: 0 }
    }

    /// 5G NR CRC6: `x^6 + x^5 + 1`.
    pub fn nr_crc6() -> Self {
        CrcPoly { poly: 0x61, degree: 6 }
    }

    /// 5G NR CRC11: `x^11 + x^10 + x^9 + x^5 + 1`.
    pub fn nr_crc11() -> Self {
        CrcPoly {
            poly: 0xE21,
            degree: 11,
        }
    }

    /// A conventional polynomial for the given CRC length, if one is known.
    pub fn default_for(m: usize) -> Option<Self> {
        let poly = match m {
            0 => 0x1,
            1 => 0x3,        // x + 1
            2 => 0x7,        // x^2 + x + 1
            3 => 0xB,        // x^3 + x + 1
            4 => 0x13,       // x^4 + x + 1
            5 => 0x35,       // x^5 + x^4 + x^2 + 1
            6 => 0x61,       // NR CRC6
            8 => 0x107,      // x^8 + x^2 + x + 1
            11 => 0xE21,     // NR CRC11
            16 => 0x11021,   // CCITT
            24 => 0x1B2B117, // NR CRC24C
            _ => return None,
        };
        Some(CrcPoly::new(poly).expect("table entries are valid"))
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.poly
    }

    #[inline]
    fn mask(&self) -> u64 {
        (1u64 << self.degree) - 1
    }

    /// Shift register over `bits`; returns `bits(x) · x^m mod g(x)`.
    pub fn register(&self, bits: impl IntoIterator<Item = bool>) -> u64 {
        let m = self.degree;
        if m == 0 {
            return 0;
        }
        let low = self.poly & self.mask();
        let mut r = 0u64;
        for b in bits {
            let feedback = ((r >> (m - 1)) & 1 == 1) ^ b;
            r = (r << 1) & self.mask();
            if feedback {
                r ^= low;
            }
        }
        r
    }

    /// Appends the `m`-bit check value to `msg`.
    pub fn attach(&self, msg: &BitWord) -> BitWord {
        let rem = self.register(msg.iter());
        let m = self.degree;
        let parity = BitWord::from_fn(m, |i| (rem >> (m - 1 - i)) & 1 == 1);
        msg.concat(&parity)
    }

    /// True iff `block`, read as a polynomial, is divisible by `g(x)`.
    pub fn check(&self, block: &BitWord) -> bool {
        self.register(block.iter()) == 0
    }

    /// Per-position syndromes for blocks of length `len`: the register value
    /// of the unit vector with a single one at each index. The syndrome of
    /// any block is the XOR of the entries at its set bits.
    pub fn position_syndromes(&self, len: usize) -> Vec<u64> {
        // Walk backwards: the last bit contributes x^m mod g, and each step
        // towards the front multiplies by x.
        let mut out = vec![0u64; len];
        if self.degree == 0 {
            return out;
        }
        let low = self.poly & self.mask();
        let top = 1u64 << (self.degree - 1);
        let mut cur = low;
        for slot in out.iter_mut().rev() {
            *slot = cur;
            let carry = cur & top != 0;
            cur = (cur << 1) & self.mask();
            if carry {
                cur ^= low;
            }
        }
        out
    }
}

impl fmt::Debug for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CrcPoly({:#x})", self.poly)
    }
}

impl fmt::Display for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.poly)
    }
}

/// Appends the CRC of `msg`.
pub fn crc_attach(msg: &BitWord, poly: &CrcPoly) -> BitWord {
    poly.attach(msg)
}

pub fn crc_check(block: &BitWord, poly: &CrcPoly) -> bool {
    poly.check(block)
}
