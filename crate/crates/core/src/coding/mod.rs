//! Rate-3/4 LDPC code for 1140-bit information blocks.
//!
//! The parity-check matrix is a 380×1520 (3, 12) code built by progressive
//! edge growth. Columns are permuted once after construction so the last 380
//! positions carry parity and the first 1140 carry the information bits
//! verbatim.

mod decoder;
mod peg;

pub use decoder::{DecodeOutput, MinSumDecoder, DEFAULT_MAX_ITERS, MIN_SUM_SCALE};

use std::fmt::Write as _;

use crate::error::{contract, Error, Result};

pub const K: usize = 1140;
pub const N: usize = 1520;
pub const M: usize = N - K;
pub const VAR_DEGREE: usize = 3;
pub const CHECK_DEGREE: usize = 12;

const WORDS_K: usize = K.div_ceil(64);
const MAX_ATTEMPTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdpcCode {
    construction_seed: u64,
    /// Variables attached to each check (after the systematic permutation).
    check_vars: Vec<Vec<u32>>,
    /// Checks attached to each variable.
    var_checks: Vec<Vec<u32>>,
    /// Row `r` gives parity bit `K + r` as a GF(2) combination of the info bits.
    parity_rows: Vec<[u64; WORDS_K]>,
}

impl LdpcCode {
    /// Deterministic construction; re-seeds internally (bounded) if the
    /// parity part of a candidate matrix is singular.
    pub fn construct(seed: u64) -> Result<Self> {
        for attempt in 0..MAX_ATTEMPTS {
            let sub_seed = seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let checks = peg::build(N, M, VAR_DEGREE, CHECK_DEGREE, sub_seed);
            if let Some(code) = Self::systematize(seed, checks) {
                return Ok(code);
            }
        }
        Err(Error::CodeConstruction(MAX_ATTEMPTS))
    }

    fn systematize(seed: u64, checks: Vec<Vec<u32>>) -> Option<Self> {
        const WORDS_N: usize = N.div_ceil(64);
        let mut rows: Vec<[u64; WORDS_N]> = checks
            .iter()
            .map(|vars| {
                let mut r = [0u64; WORDS_N];
                for &v in vars {
                    r[v as usize / 64] |= 1 << (v % 64);
                }
                r
            })
            .collect();
        let get = |r: &[u64; WORDS_N], c: usize| (r[c / 64] >> (c % 64)) & 1 == 1;

        // reduced row echelon form, pivots scanned from the rightmost column
        let mut pivots = Vec::with_capacity(M);
        let mut next_row = 0;
        for col in (0..N).rev() {
            if next_row == M {
                break;
            }
            let Some(p) = (next_row..M).find(|&r| get(&rows[r], col)) else {
                continue;
            };
            rows.swap(next_row, p);
            let pivot = rows[next_row];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next_row && get(row, col) {
                    for (w, pw) in row.iter_mut().zip(pivot.iter()) {
                        *w ^= pw;
                    }
                }
            }
            pivots.push(col);
            next_row += 1;
        }
        if pivots.len() < M {
            return None;
        }

        let mut is_pivot = vec![false; N];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let info_cols: Vec<usize> = (0..N).filter(|&c| !is_pivot[c]).collect();
        // new position of every original column
        let mut new_pos = vec![0usize; N];
        for (i, &c) in info_cols.iter().enumerate() {
            new_pos[c] = i;
        }
        for (r, &c) in pivots.iter().enumerate() {
            new_pos[c] = K + r;
        }

        let parity_rows = rows
            .iter()
            .map(|row| {
                let mut p = [0u64; WORDS_K];
                for (i, &c) in info_cols.iter().enumerate() {
                    if get(row, c) {
                        p[i / 64] |= 1 << (i % 64);
                    }
                }
                p
            })
            .collect();

        let check_vars: Vec<Vec<u32>> = checks
            .iter()
            .map(|vars| {
                let mut v: Vec<u32> = vars.iter().map(|&c| new_pos[c as usize] as u32).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let mut var_checks = vec![Vec::new(); N];
        for (c, vars) in check_vars.iter().enumerate() {
            for &v in vars {
                var_checks[v as usize].push(c as u32);
            }
        }
        Some(Self {
            construction_seed: seed,
            check_vars,
            var_checks,
            parity_rows,
        })
    }

    pub fn construction_seed(&self) -> u64 {
        self.construction_seed
    }

    pub fn k(&self) -> usize {
        K
    }

    pub fn n(&self) -> usize {
        N
    }

    pub fn check_vars(&self) -> &[Vec<u32>] {
        &self.check_vars
    }

    pub fn var_checks(&self) -> &[Vec<u32>] {
        &self.var_checks
    }

    pub fn n_edges(&self) -> usize {
        self.check_vars.iter().map(Vec::len).sum()
    }

    /// Systematic encoding: the first 1140 codeword bits are `info`.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != K {
            return Err(contract(format!("encode expects {K} bits, got {}", info.len())));
        }
        let mut packed = [0u64; WORDS_K];
        for (i, &b) in info.iter().enumerate() {
            if b > 1 {
                return Err(contract("bits must be 0 or 1"));
            }
            packed[i / 64] |= (b as u64) << (i % 64);
        }
        let mut cw = Vec::with_capacity(N);
        cw.extend_from_slice(info);
        for row in &self.parity_rows {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            cw.push((ones & 1) as u8);
        }
        Ok(cw)
    }

    /// Number of unsatisfied checks.
    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        self.check_vars
            .iter()
            .filter(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ word[v as usize]) == 1)
            .count()
    }

    /// Number of 4-cycles (pairs of checks sharing two or more variables).
    pub fn count_4_cycles(&self) -> usize {
        let mut count = 0;
        for (c, vars) in self.check_vars.iter().enumerate() {
            // count shared variables with every later check
            let mut hits = vec![0u8; M];
            for &v in vars {
                for &c2 in &self.var_checks[v as usize] {
                    if c2 as usize > c {
                        hits[c2 as usize] += 1;
                    }
                }
            }
            count += hits.iter().filter(|&&h| h >= 2).count();
        }
        count
    }

    /// Parity-check structure in alist format (1-based indices).
    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let max_col = self.var_checks.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.check_vars.iter().map(Vec::len).max().unwrap_or(0);
        let _ = writeln!(s, "{N} {M}");
        let _ = writeln!(s, "{max_col} {max_row}");
        let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{}", join(&mut self.var_checks.iter().map(|c| c.len().to_string())));
        let _ = writeln!(s, "{}", join(&mut self.check_vars.iter().map(|v| v.len().to_string())));
        for list in self.var_checks.iter().chain(self.check_vars.iter()) {
            let _ = writeln!(s, "{}", join(&mut list.iter().map(|x| (x + 1).to_string())));
        }
        s
    }
}
