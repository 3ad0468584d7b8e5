//! Least-squares channel estimation and MMSE receive combining.

use super::frame::{AntennaGrid, Frame, FrameLayout, SymbolKind};
use crate::channel::ChannelRealization;
use crate::error::{contract, Result};
use crate::numerics::{dot, herm_solve, CMatrix, CVec, C64};
use crate::system::{ms_antennas, ANT_PER_NODE, N_RX};

/// Element-wise LS estimate `y / p`.
pub fn ls_estimate(observed: &[C64], pilots: &[C64]) -> Vec<C64> {
    assert_eq!(observed.len(), pilots.len());
    observed.iter().zip(pilots).map(|(y, p)| y / p).collect()
}

/// Full 6×6 per-subcarrier estimate from the sequential CSI-pilot symbols.
///
/// Entry `(sc, rx, a)` is the observation of antenna `a`'s pilot symbol at
/// receive antenna `rx`, divided by the transmitted pilot value.
pub fn csi_estimate(
    rx: &AntennaGrid,
    layout: &FrameLayout,
    frame: &Frame,
    csi_amplitude: f64,
    batch_index: usize,
    frame_index: usize,
) -> Result<ChannelRealization> {
    if !(csi_amplitude > 0.0) {
        return Err(contract("CSI pilot amplitude must be positive"));
    }
    let mut est = ChannelRealization::zeros(batch_index, frame_index);
    let n_tx = layout.csi_pilot_symbols;
    for a in 0..n_tx {
        let t = layout.position(frame.n_s, SymbolKind::CsiPilot(a));
        for r in 0..N_RX.min(rx.n_ant()) {
            for sc in 0..layout.n_subcarriers {
                let p = frame.csi_pilots[a][sc] * csi_amplitude;
                est.set(sc, r, a, rx.at(r, t, sc) / p);
            }
        }
    }
    Ok(est)
}

/// Effective (precoded) channel of every stream into the two antennas of one
/// mobile station, per subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveChannelEstimate {
    pub ms: usize,
    /// `h[stream][subcarrier]`, two entries each.
    pub h: Vec<Vec<CVec>>,
}

impl EffectiveChannelEstimate {
    pub fn n_streams(&self) -> usize {
        self.h.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    /// All stream vectors on one subcarrier.
    pub fn at_subcarrier(&self, sc: usize) -> Vec<CVec> {
        self.h.iter().map(|s| s[sc].clone()).collect()
    }
}

pub fn demod_estimate(rx: &AntennaGrid, layout: &FrameLayout, frame: &Frame, ms: usize) -> EffectiveChannelEstimate {
    let ants = ms_antennas(ms);
    let h = (0..frame.n_s)
        .map(|s| {
            let t = layout.position(frame.n_s, SymbolKind::DemodPilot(s));
            (0..layout.n_subcarriers)
                .map(|sc| {
                    let p = frame.demod_pilots[s][sc];
                    ants.iter().map(|&r| rx.at(r, t, sc) / p).collect()
                })
                .collect()
        })
        .collect();
    EffectiveChannelEstimate { ms, h }
}

/// MMSE combiner for stream `desired` given all stream vectors at one
/// subcarrier, scaled to unit gain on the desired vector.
pub fn mmse_vector(vectors: &[CVec], desired: usize, noise_var: f64) -> Result<CVec> {
    let dim = vectors[desired].len();
    let mut r = CMatrix::zeros(dim, dim);
    for v in vectors {
        r.add_outer_scaled(v, 1.0);
    }
    r.add_diag(noise_var);
    let mut w = herm_solve(&r, &vectors[desired])?;
    let g = dot(&w, &vectors[desired]);
    if g.norm() == 0.0 || !g.is_finite() {
        return Err(contract("desired stream has zero effective channel"));
    }
    // wᴴh = 1
    let s = 1.0 / g.conj();
    w.iter_mut().for_each(|x| *x *= s);
    Ok(w)
}

/// Per-subcarrier unit-gain MMSE combiners for one stream.
pub fn mmse_combine(est: &EffectiveChannelEstimate, desired: usize, noise_var: f64) -> Result<Vec<CVec>> {
    if desired >= est.n_streams() {
        return Err(contract(format!("stream {desired} not in estimate")));
    }
    (0..est.n_subcarriers())
        .map(|sc| mmse_vector(&est.at_subcarrier(sc), desired, noise_var))
        .collect()
}

/// Output SINR of combiner `w` against the true stream vectors.
pub fn combiner_sinr(w: &[C64], vectors: &[CVec], desired: usize, noise_var: f64) -> f64 {
    let s = dot(w, &vectors[desired]).norm_sqr();
    let i: f64 = vectors
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != desired)
        .map(|(_, v)| dot(w, v).norm_sqr())
        .sum();
    s / (i + noise_var * w.iter().map(|x| x.norm_sqr()).sum::<f64>())
}

const _: () = assert!(ANT_PER_NODE == 2);
