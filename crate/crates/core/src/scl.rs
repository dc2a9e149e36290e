//! CRC-aided successive cancellation list decoding in the LLR domain.
//!
//! Works on the natural-order transform `c = u · F^{⊗t}`: a node of size
//! `2h` splits its LLRs into a left half (`v_a ⊕ v_b`) and a right half
//! (`v_b`), decodes `v_a` from `f(left, right)` and then `v_b` from
//! `right + (1 - 2 v_a) · left`. Node and combine functions are exact, so
//! with a list large enough to hold every path the decoder is maximum
//! likelihood over the CRC-valid codewords.

use crate::crc::CrcPoly;
use crate::error::{invalid, Result};
use crate::gf2::BitWord;
use crate::polar::CodeSpec;

/// Exact check-node update `2 atanh(tanh(a/2) tanh(b/2))`.
#[inline]
fn f_exact(a: f64, b: f64) -> f64 {
    let s = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    s * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

#[inline]
fn g_combine(a: f64, b: f64, bit: u8) -> f64 {
    if bit == 0 {
        b + a
    } else {
        b - a
    }
}

/// `ln(1 + exp(-(1 - 2 bit) · llr))`, the path metric penalty of deciding
/// `bit` against `llr`. Never negative.
#[inline]
pub fn path_metric_increment(llr: f64, bit: u8) -> f64 {
    let x = if bit == 0 { -llr } else { llr };
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `n · L · log2(n)`.
pub fn scl_op_count(n: usize, list_size: usize) -> u64 {
    (n * list_size) as u64 * n.trailing_zeros() as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct SclOutcome {
    /// Decoded information block (`k + m` bits, message then CRC).
    pub info: BitWord,
    /// Whether `info` passed the CRC; if no final path did, this is the most
    /// likely path and the flag is false.
    pub crc_ok: bool,
    pub path_metric: f64,
}

/// Successive cancellation, written as a plain recursion. Returns `u`.
pub fn sc_decode(llrs: &[f64], frozen: &[bool]) -> Vec<u8> {
    fn rec(llr: &[f64], frozen: &[bool], u: &mut Vec<u8>) -> Vec<u8> {
        if llr.len() == 1 {
            let bit = u8::from(!frozen[0] && llr[0] < 0.0);
            u.push(bit);
            return vec![bit];
        }
        let h = llr.len() / 2;
        let left: Vec<f64> = (0..h).map(|j| f_exact(llr[j], llr[j + h])).collect();
        let xa = rec(&left, &frozen[..h], u);
        let right: Vec<f64> = (0..h).map(|j| g_combine(llr[j], llr[j + h], xa[j])).collect();
        let xb = rec(&right, &frozen[h..], u);
        let mut x: Vec<u8> = xa.iter().zip(&xb).map(|(a, b)| a ^ b).collect();
        x.extend_from_slice(&xb);
        x
    }
    let mut u = Vec::with_capacity(llrs.len());
    rec(llrs, frozen, &mut u);
    u
}

/// CA-SCL decoder for one code and list size. Reusable across frames; not
/// shared between threads while decoding (`decode` takes `&mut self`).
#[derive(Clone, Debug)]
pub struct SclDecoder {
    n: usize,
    depth: usize,
    list_size: usize,
    frozen: Vec<bool>,
    info_set: Vec<usize>,
    crc: CrcPoly,
    // Per-slot storage, slot-major.
    alpha: Vec<f64>,
    beta: Vec<u8>,
    left: Vec<u8>,
    u: Vec<u8>,
    pm: Vec<f64>,
    active: Vec<usize>,
    free: Vec<usize>,
    channel: Vec<f64>,
}

impl SclDecoder {
    pub fn new(spec: &CodeSpec, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(invalid("list size must be at least 1"));
        }
        let n = spec.n;
        Ok(SclDecoder {
            n,
            depth: n.trailing_zeros() as usize,
            list_size,
            frozen: spec.frozen_mask(),
            info_set: spec.info_set.clone(),
            crc: spec.crc,
            alpha: vec![0.0; list_size * n],
            beta: vec![0; list_size * 2 * n],
            left: vec![0; list_size * n],
            u: vec![0; list_size * n],
            pm: vec![0.0; list_size],
            active: Vec::with_capacity(list_size),
            free: Vec::with_capacity(list_size),
            channel: vec![0.0; n],
        })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    // Offsets of depth-d buffers inside a slot (depth >= 1 for alpha/left).
    #[inline]
    fn a_off(&self, d: usize) -> usize {
        self.n - 2 * (self.n >> d)
    }

    #[inline]
    fn b_off(&self, d: usize) -> usize {
        2 * self.n - 2 * (self.n >> d)
    }

    fn copy_slot(&mut self, from: usize, to: usize) {
        let n = self.n;
        self.alpha.copy_within(from * n..(from + 1) * n, to * n);
        self.beta.copy_within(from * 2 * n..(from + 1) * 2 * n, to * 2 * n);
        self.left.copy_within(from * n..(from + 1) * n, to * n);
        self.u.copy_within(from * n..(from + 1) * n, to * n);
        self.pm[to] = self.pm[from];
    }

    /// LLR of position `j` at depth `d` for path slot `p`.
    #[inline]
    fn llr_in(&self, p: usize, d: usize, j: usize) -> f64 {
        if d == 0 {
            self.channel[j]
        } else {
            self.alpha[p * self.n + self.a_off(d) + j]
        }
    }

    pub fn decode(&mut self, llrs: &[f64]) -> Result<SclOutcome> {
        if llrs.len() != self.n {
            return Err(invalid(format!("{} LLRs for length {}", llrs.len(), self.n)));
        }
        if llrs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("LLRs must be finite"));
        }
        self.channel.copy_from_slice(llrs);
        self.active.clear();
        self.free.clear();
        self.active.push(0);
        self.free.extend((1..self.list_size).rev());
        self.pm[0] = 0.0;
        self.node(0, 0);

        let mut order = self.active.clone();
        order.sort_by(|&a, &b| self.pm[a].total_cmp(&self.pm[b]));
        let extract =
            |slot: usize| BitWord::from_fn(self.info_set.len(), |i| self.u[slot * self.n + self.info_set[i]] == 1);
        for &slot in &order {
            let info = extract(slot);
            if self.crc.check(&info) {
                return Ok(SclOutcome {
                    info,
                    crc_ok: true,
                    path_metric: self.pm[slot],
                });
            }
        }
        let slot = order[0];
        Ok(SclOutcome {
            info: extract(slot),
            crc_ok: false,
            path_metric: self.pm[slot],
        })
    }

    fn node(&mut self, d: usize, start: usize) {
        let size = self.n >> d;
        if size == 1 {
            self.leaf(start);
            return;
        }
        let half = size / 2;
        let n = self.n;
        let out = self.a_off(d + 1);
        for idx in 0..self.active.len() {
            let p = self.active[idx];
            for j in 0..half {
                let v = f_exact(self.llr_in(p, d, j), self.llr_in(p, d, j + half));
                self.alpha[p * n + out + j] = v;
            }
        }
        self.node(d + 1, start);
        let child_b = self.b_off(d + 1);
        for idx in 0..self.active.len() {
            let p = self.active[idx];
            for j in 0..half {
                let bit = self.beta[p * 2 * n + child_b + j];
                self.left[p * n + out + j] = bit;
                let v = g_combine(self.llr_in(p, d, j), self.llr_in(p, d, j + half), bit);
                self.alpha[p * n + out + j] = v;
            }
        }
        self.node(d + 1, start + half);
        let own_b = self.b_off(d);
        for idx in 0..self.active.len() {
            let p = self.active[idx];
            for j in 0..half {
                let right = self.beta[p * 2 * n + child_b + j];
                let left = self.left[p * n + out + j];
                self.beta[p * 2 * n + own_b + j] = left ^ right;
                self.beta[p * 2 * n + own_b + j + half] = right;
            }
        }
    }

    fn leaf(&mut self, i: usize) {
        let n = self.n;
        let d = self.depth;
        let bo = self.b_off(d);
        if self.frozen[i] {
            for idx in 0..self.active.len() {
                let p = self.active[idx];
                let llr = self.llr_in(p, d, 0);
                self.pm[p] += path_metric_increment(llr, 0);
                self.beta[p * 2 * n + bo] = 0;
                self.u[p * n + i] = 0;
            }
            return;
        }

        // (metric, position in active list, bit)
        let mut cands: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * self.active.len());
        for (pos, &p) in self.active.iter().enumerate() {
            let llr = self.llr_in(p, d, 0);
            for bit in 0..2u8 {
                cands.push((self.pm[p] + path_metric_increment(llr, bit), pos, bit));
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        cands.truncate(self.list_size);

        let mut keep = vec![[None::<f64>; 2]; self.active.len()];
        for &(metric, pos, bit) in &cands {
            keep[pos][bit as usize] = Some(metric);
        }
        let old_active = std::mem::take(&mut self.active);
        for (pos, &p) in old_active.iter().enumerate() {
            if keep[pos] == [None, None] {
                self.free.push(p);
            }
        }
        let mut next = Vec::with_capacity(self.list_size);
        for (pos, &p) in old_active.iter().enumerate() {
            match keep[pos] {
                [None, None] => {}
                [Some(m0), Some(m1)] => {
                    let q = self.free.pop().expect("list never exceeds its capacity");
                    self.copy_slot(p, q);
                    self.set_leaf(p, i, 0, m0);
                    self.set_leaf(q, i, 1, m1);
                    next.push(p);
                    next.push(q);
                }
                [Some(m0), None] => {
                    self.set_leaf(p, i, 0, m0);
                    next.push(p);
                }
                [None, Some(m1)] => {
                    self.set_leaf(p, i, 1, m1);
                    next.push(p);
                }
            }
        }
        self.active = next;
    }

    #[inline]
    fn set_leaf(&mut self, p: usize, i: usize, bit: u8, metric: f64) {
        let n = self.n;
        let bo = self.b_off(self.depth);
        self.beta[p * 2 * n + bo] = bit;
        self.u[p * n + i] = bit;
        self.pm[p] = metric;
    }
}

/// One-shot CA-SCL decode.
pub fn scl_decode(llrs: &[f64], spec: &CodeSpec, list_size: usize) -> Result<SclOutcome> {
    SclDecoder::new(spec, list_size)?.decode(llrs)
}
