//! Normalized min-sum belief propagation with a flooding schedule.

use super::{LdpcCode, K};

pub const MIN_SUM_SCALE: f64 = 0.75;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutput {
    /// Hard decisions on the 1140 information bits.
    pub info: Vec<u8>,
    /// Zero syndrome with every bit decided.
    pub converged: bool,
    pub iterations: usize,
}

/// Edge-indexed decoder state for one code.
///
/// LLR sign convention: positive means the bit is 0. A posterior of exactly
/// zero leaves the bit undecided, which blocks convergence.
#[derive(Clone, Debug)]
pub struct MinSumDecoder<'a> {
    code: &'a LdpcCode,
    /// Edge ranges per check, into `edge_var`.
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edge ids attached to each variable.
    var_edges: Vec<Vec<usize>>,
    pub max_iters: usize,
    pub scale: f64,
}

impl<'a> MinSumDecoder<'a> {
    pub fn new(code: &'a LdpcCode) -> Self {
        let mut check_start = Vec::with_capacity(code.check_vars().len() + 1);
        let mut edge_var = Vec::with_capacity(code.n_edges());
        let mut var_edges = vec![Vec::new(); code.n()];
        for vars in code.check_vars() {
            check_start.push(edge_var.len());
            for &v in vars {
                var_edges[v as usize].push(edge_var.len());
                edge_var.push(v as usize);
            }
        }
        check_start.push(edge_var.len());
        Self {
            code,
            check_start,
            edge_var,
            var_edges,
            max_iters: DEFAULT_MAX_ITERS,
            scale: MIN_SUM_SCALE,
        }
    }

    pub fn decode(&self, llrs: &[f64]) -> DecodeOutput {
        let n = self.code.n();
        assert_eq!(llrs.len(), n, "decoder expects one LLR per code bit");
        let n_edges = self.edge_var.len();
        let mut c2v = vec![0.0f64; n_edges];
        let mut v2c = vec![0.0f64; n_edges];
        let mut posterior = llrs.to_vec();
        let mut hard = vec![0u8; n];

        for iter in 1..=self.max_iters {
            for e in 0..n_edges {
                v2c[e] = posterior[self.edge_var[e]] - c2v[e];
            }
            for c in 0..self.check_start.len() - 1 {
                let edges = self.check_start[c]..self.check_start[c + 1];
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                let mut negative = false;
                for e in edges.clone() {
                    let m = v2c[e];
                    negative ^= m < 0.0;
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in edges {
                    let mag = if e == arg { min2 } else { min1 };
                    let sign_neg = negative ^ (v2c[e] < 0.0);
                    c2v[e] = if sign_neg { -self.scale * mag } else { self.scale * mag };
                }
            }
            let mut undecided = false;
            for v in 0..n {
                let q = llrs[v] + self.var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
                posterior[v] = q;
                undecided |= q == 0.0 || !q.is_finite();
                hard[v] = (q < 0.0) as u8;
            }
            if !undecided && self.code.syndrome_weight(&hard) == 0 {
                return DecodeOutput {
                    info: hard[..K].to_vec(),
                    converged: true,
                    iterations: iter,
                };
            }
        }
        DecodeOutput {
            info: hard[..K].to_vec(),
            converged: false,
            iterations: self.max_iters,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::tests::code;
    use crate::coding::N;
    use crate::numerics::RngStream;

    fn clean_llrs(cw: &[u8], mag: f64) -> Vec<f64> {
        cw.iter().map(|&b| if b == 0 { mag } else { -mag }).collect()
    }

    #[test]
    fn noiseless_recovers_in_one_iteration() {
        let mut rng = RngStream::new(1, &[]);
        let info = rng.bits(K);
        let cw = code().encode(&info).unwrap();
        let out = MinSumDecoder::new(code()).decode(&clean_llrs(&cw, 20.0));
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.info, info);
    }

    #[test]
    fn corrects_five_flips() {
        let mut rng = RngStream::new(2, &[]);
        let dec = MinSumDecoder::new(code());
        for trial in 0..20 {
            let info = rng.bits(K);
            let cw = code().encode(&info).unwrap();
            let mut llr = clean_llrs(&cw, 20.0);
            for _ in 0..5 {
                let p = (rng.next_u64() % N as u64) as usize;
                llr[p] = -llr[p];
            }
            let out = dec.decode(&llr);
            assert!(out.converged, "trial {trial}");
            assert_eq!(out.info, info);
        }
    }

    #[test]
    fn all_zero_llrs_do_not_converge() {
        let out = MinSumDecoder::new(code()).decode(&vec![0.0; N]);
        assert!(!out.converged);
        assert_eq!(out.iterations, DEFAULT_MAX_ITERS);
    }

    #[test]
    fn deterministic() {
        let mut rng = RngStream::new(3, &[]);
        let llr: Vec<f64> = (0..N).map(|_| rng.gauss() * 2.0 + 1.0).collect();
        let dec = MinSumDecoder::new(code());
        assert_eq!(dec.decode(&llr), dec.decode(&llr));
    }

    #[test]
    fn awgn_waterfall_sanity() {
        // BPSK at Eb/N0 ≈ 4 dB is comfortably past the waterfall of a rate-3/4 code
        let mut rng = RngStream::new(4, &[]);
        let dec = MinSumDecoder::new(code());
        let sigma2 = 1.0 / (2.0 * 0.75 * 10f64.powf(0.4));
        let mut fails = 0;
        for _ in 0..20 {
            let info = rng.bits(K);
            let cw = code().encode(&info).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let x = if b == 0 { 1.0 } else { -1.0 };
                    2.0 * (x + sigma2.sqrt() * rng.gauss()) / sigma2
                })
                .collect();
            if dec.decode(&llr).info != info {
                fails += 1;
            }
        }
        assert!(fails <= 1, "{fails} failures");
    }
}
