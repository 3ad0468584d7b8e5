//! Gray-mapped 16QAM.
//!
//! A label `b0 b1 b2 b3` maps `b0 b1` to the in-phase level and `b2 b3` to
//! the quadrature level, each through the per-axis Gray table below, scaled
//! by 1/√10 for unit average energy.
//!
//! | bits | level |
//! |------|-------|
//! | 00   | −3    |
//! | 01   | −1    |
//! | 11   | +1    |
//! | 10   | +3    |

use crate::error::{contract, Result};
use crate::numerics::C64;

pub const BITS_PER_SYMBOL: usize = 4;

/// Per-axis Gray table indexed by the 2-bit label `(b_first << 1) | b_second`.
pub const AXIS_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

/// `1/√10`.
pub const QAM16_SCALE: f64 = 0.316_227_766_016_837_94;

pub fn qam16_point(label: u8) -> C64 {
    let i = AXIS_LEVELS[((label >> 2) & 3) as usize];
    let q = AXIS_LEVELS[(label & 3) as usize];
    C64::new(i, q) * QAM16_SCALE
}

/// All 16 points indexed by label (`b0` is the most significant bit).
pub fn qam16_table() -> [C64; 16] {
    std::array::from_fn(|l| qam16_point(l as u8))
}

pub fn qam16_map(bits: &[u8]) -> Result<Vec<C64>> {
    if !bits.len().is_multiple_of(BITS_PER_SYMBOL) {
        return Err(contract(format!(
            "16QAM needs a multiple of 4 bits, got {}",
            bits.len()
        )));
    }
    bits.chunks_exact(4)
        .map(|b| {
            if b.iter().any(|&x| x > 1) {
                return Err(contract("bits must be 0 or 1"));
            }
            Ok(qam16_point((b[0] << 3) | (b[1] << 2) | (b[2] << 1) | b[3]))
        })
        .collect()
}

/// Max-log LLRs of the two bits carried by one axis. Positive favours 0.
fn axis_llrs(y: f64, inv_noise: f64) -> [f64; 2] {
    let d = |level: f64| {
        let e = y - level * QAM16_SCALE;
        e * e
    };
    let (m3, m1, p1, p3) = (d(-3.0), d(-1.0), d(1.0), d(3.0));
    // first bit: 0 on the negative half-plane
    let l0 = (m3.min(m1) - p1.min(p3)) * -inv_noise;
    // second bit: 0 on the outer levels
    let l1 = (m1.min(p1) - m3.min(p3)) * inv_noise;
    [l0, l1]
}

/// Max-log LLRs with a per-symbol complex noise variance.
pub fn qam16_demap_with(symbols: &[C64], noise_var: &[f64]) -> Vec<f64> {
    assert_eq!(symbols.len(), noise_var.len());
    let mut out = Vec::with_capacity(symbols.len() * 4);
    for (s, &nv) in symbols.iter().zip(noise_var) {
        let inv = 1.0 / nv;
        let [a, b] = axis_llrs(s.re, inv);
        let [c, d] = axis_llrs(s.im, inv);
        out.extend_from_slice(&[a, b, c, d]);
    }
    out
}

pub fn qam16_demap(symbols: &[C64], noise_var: f64) -> Result<Vec<f64>> {
    if !(noise_var > 0.0) {
        return Err(contract("demapper noise variance must be positive"));
    }
    Ok(qam16_demap_with(symbols, &vec![noise_var; symbols.len()]))
}

/// Hard decisions from LLR signs (zero decides 0).
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| (l < 0.0) as u8).collect()
}

/// Label of the closest constellation point.
pub fn nearest_label(y: C64) -> u8 {
    let table = qam16_table();
    (0..16u8)
        .min_by(|&a, &b| {
            (y - table[a as usize])
                .norm_sqr()
                .total_cmp(&(y - table[b as usize]).norm_sqr())
        })
        .unwrap()
}
