//! Per-subcarrier max-SINR iteration on a generic stream topology.
//!
//! `g[k][j]` is the channel from stream `j`'s transmit antennas into stream
//! `k`'s receiver. The forward step picks each combiner as the max-SINR
//! receiver for the current precoders; the reverse step does the same in the
//! reciprocal network, which yields the new precoders.

use super::{direct_init, PowerNormalization};
use crate::error::Result;
use crate::numerics::{dot, herm_solve, norm_sqr, normalize_phase, CMatrix, CVec, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct MaxSinrOptions {
    /// Stop once no precoder entry moves by more than this.
    pub tol: f64,
    pub max_iters: usize,
    pub power_normalization: PowerNormalization,
    /// Return the iterate with the highest sum rate rather than the last one.
    pub track_best: bool,
}

impl Default for MaxSinrOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
            power_normalization: PowerNormalization::SystemTotal,
            track_best: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubcarrierSolution {
    pub v: Vec<CVec>,
    pub u: Vec<CVec>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum rate in bit/s/Hz of the returned iterate.
    pub value: f64,
    /// Minimum per-stream SINR after each forward step.
    pub min_sinr_trace: Vec<f64>,
}

fn unit_or_canonical(mut v: CVec) -> CVec {
    if normalize_phase(&mut v).is_none() {
        v.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        v[0] = C64::new(1.0, 0.0);
    }
    v
}

fn forward(g: &[Vec<CMatrix>], p: &[f64], nv: f64, v: &[CVec]) -> Result<Vec<CVec>> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let dim = g[k][k].rows();
            let mut b = CMatrix::identity(dim).scale(C64::new(nv, 0.0));
            for j in (0..n).filter(|&j| j != k) {
                b.add_outer_scaled(&g[k][j].mul_vec(&v[j]), p[j]);
            }
            Ok(unit_or_canonical(herm_solve(&b, &g[k][k].mul_vec(&v[k]))?))
        })
        .collect()
}

fn reverse(g: &[Vec<CMatrix>], p: &[f64], nv: f64, u: &[CVec]) -> Result<Vec<CVec>> {
    let n = u.len();
    (0..n)
        .map(|k| {
            let dim = g[k][k].cols();
            let mut b = CMatrix::identity(dim).scale(C64::new(nv, 0.0));
            for j in (0..n).filter(|&j| j != k) {
                b.add_outer_scaled(&g[j][k].adjoint_mul_vec(&u[j]), p[j]);
            }
            Ok(unit_or_canonical(herm_solve(&b, &g[k][k].adjoint_mul_vec(&u[k]))?))
        })
        .collect()
}

/// Output SINR of every stream for given precoders and combiners.
pub fn stream_sinrs(g: &[Vec<CMatrix>], p: &[f64], nv: f64, v: &[CVec], u: &[CVec]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let mut s = 0.0;
            let mut i = nv * norm_sqr(&u[k]);
            for j in 0..n {
                let x = p[j] * dot(&u[k], &g[k][j].mul_vec(&v[j])).norm_sqr();
                if j == k {
                    s = x;
                } else {
                    i += x;
                }
            }
            s / i
        })
        .collect()
}

/// Sum rate of precoders `v` with max-SINR combiners.
pub fn sum_rate(g: &[Vec<CMatrix>], p: &[f64], nv: f64, v: &[CVec]) -> Result<f64> {
    let u = forward(g, p, nv, v)?;
    Ok(stream_sinrs(g, p, nv, v, &u).iter().map(|s| (1.0 + s).log2()).sum())
}

pub fn max_sinr_subcarrier(
    g: &[Vec<CMatrix>],
    p: &[f64],
    nv: f64,
    opts: &MaxSinrOptions,
    init: Option<&[CVec]>,
) -> Result<SubcarrierSolution> {
    let n = g.len();
    let mut v: Vec<CVec> = match init {
        Some(v0) => v0.iter().cloned().map(unit_or_canonical).collect(),
        None => (0..n)
            .map(|k| direct_init(&g[k][k]).map(unit_or_canonical))
            .collect::<Result<_>>()?,
    };
    let mut best: Option<(f64, Vec<CVec>, Vec<CVec>)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = opts.max_iters;
    for it in 1..=opts.max_iters {
        let u = forward(g, p, nv, &v)?;
        let sinr = stream_sinrs(g, p, nv, &v, &u);
        trace.push(sinr.iter().copied().fold(f64::INFINITY, f64::min));
        let value: f64 = sinr.iter().map(|s| (1.0 + s).log2()).sum();
        if opts.track_best && best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, v.clone(), u.clone()));
        }
        let v_new = reverse(g, p, nv, &u)?;
        let delta = v
            .iter()
            .zip(&v_new)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        v = v_new;
        if delta < opts.tol {
            converged = true;
            iterations = it;
            break;
        }
    }
    let u = forward(g, p, nv, &v)?;
    let value: f64 = stream_sinrs(g, p, nv, &v, &u).iter().map(|s| (1.0 + s).log2()).sum();
    let (value, v, u) = match best {
        Some(b) if b.0 > value => b,
        _ => (value, v, u),
    };
    Ok(SubcarrierSolution {
        v,
        u,
        iterations,
        converged,
        value,
        min_sinr_trace: trace,
    })
}
