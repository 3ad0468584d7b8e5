//! Synthetic frequency-selective, temporally correlated 6×6 channel.
//!
//! Each (rx antenna, tx antenna) pair has `n_taps` complex Gaussian delay
//! taps with an exponential power-delay profile whose total power equals the
//! large-scale gain of the (MS, BS) link. The frequency response is the
//! 38-point DFT of the taps. Between frames every tap follows a first-order
//! Gauss-Markov recursion.

mod trace;

pub use trace::{load_trace, load_trace_csv, save_trace, save_trace_csv, TraceHeader, TRACE_MAGIC, TRACE_VERSION};

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::{from_db, CMatrix, RngStream, C64};
use crate::system::{max_taps_in_cp, N_BS, N_MS, N_RX, N_SUBCARRIERS, N_TX};

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModelConfig {
    pub n_taps: usize,
    /// Linear power ratio between consecutive taps.
    pub pdp_decay: f64,
    /// Frame-to-frame tap correlation.
    pub temporal_rho: f64,
    /// Raw serving-link SNR bounds in dB (low, high).
    pub serving_snr_range_db: (f64, f64),
    pub cross_gain_db: f64,
    pub cross_gain_spread_db: f64,
}

impl Default for ChannelModelConfig {
    fn default() -> Self {
        Self {
            n_taps: 4,
            pdp_decay: 0.5,
            temporal_rho: 0.995,
            serving_snr_range_db: (32.0, 61.0),
            cross_gain_db: -10.0,
            cross_gain_spread_db: 5.0,
        }
    }
}

impl ChannelModelConfig {
    pub fn validate(&self) -> Result<()> {
        let max_taps = max_taps_in_cp();
        if self.n_taps == 0 || self.n_taps > max_taps {
            return Err(Error::Config(format!(
                "n_taps must be in 1..={max_taps} (cyclic prefix), got {}",
                self.n_taps
            )));
        }
        if !(self.pdp_decay > 0.0 && self.pdp_decay.is_finite()) {
            return Err(Error::Config(format!(
                "pdp_decay must be positive, got {}",
                self.pdp_decay
            )));
        }
        if !(0.0..=1.0).contains(&self.temporal_rho) {
            return Err(Error::Config(format!(
                "temporal_rho must be in [0, 1], got {}",
                self.temporal_rho
            )));
        }
        let (lo, hi) = self.serving_snr_range_db;
        if !(lo <= hi) {
            return Err(Error::Config(format!("serving SNR range low {lo} exceeds high {hi}")));
        }
        if !(self.cross_gain_spread_db >= 0.0) {
            return Err(Error::Config("cross_gain_spread_db must be non-negative".into()));
        }
        Ok(())
    }

    /// Normalized tap powers (sum to one).
    pub fn tap_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n_taps).map(|l| self.pdp_decay.powi(l as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// Absolute power scale linking raw SNR to channel gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub p_total_w: f64,
    pub noise_var: f64,
}

impl LinkBudget {
    /// Power gain for which a transmitter at full power gives `snr_db` per
    /// receive antenna.
    pub fn gain_for_snr_db(&self, snr_db: f64) -> f64 {
        from_db(snr_db) * self.noise_var / self.p_total_w
    }

    pub fn snr_db_for_gain(&self, gain: f64) -> f64 {
        crate::numerics::db(gain * self.p_total_w / self.noise_var)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkGeometry {
    /// `serving[ms]` is the base-station serving that mobile.
    pub serving: [usize; N_MS],
    /// Linear power gain per (MS, BS) pair.
    pub gain: [[f64; N_BS]; N_MS],
}

impl LinkGeometry {
    /// Every link at the same gain.
    pub fn uniform(gain: f64) -> Self {
        Self {
            serving: [0, 1, 2],
            gain: [[gain; N_BS]; N_MS],
        }
    }

    pub fn antenna_gain(&self, rx: usize, tx: usize) -> f64 {
        self.gain[rx / 2][tx / 2]
    }
}

/// Draws one batch's serving assignment and large-scale gains.
///
/// Each MS is served by the BS with the same index. Serving raw SNR is
/// uniform over the configured range; cross links sit `cross_gain_db` below
/// with log-normal spread and are clamped to at least 0 dB raw SNR.
pub fn draw_geometry(cfg: &ChannelModelConfig, budget: &LinkBudget, rng: &mut RngStream) -> LinkGeometry {
    let (lo, hi) = cfg.serving_snr_range_db;
    let floor = budget.gain_for_snr_db(0.0);
    let serving = [0, 1, 2];
    let mut gain = [[0.0; N_BS]; N_MS];
    for ms in 0..N_MS {
        let snr_db = if hi > lo { rng.uniform_range(lo, hi) } else { lo };
        let g_serv = budget.gain_for_snr_db(snr_db).max(floor);
        gain[ms][serving[ms]] = g_serv;
        for bs in 0..N_BS {
            if bs == serving[ms] {
                continue;
            }
            let spread = if cfg.cross_gain_spread_db > 0.0 {
                cfg.cross_gain_spread_db * rng.gauss()
            } else {
                0.0
            };
            gain[ms][bs] = (g_serv * from_db(cfg.cross_gain_db + spread)).max(floor);
        }
    }
    LinkGeometry { serving, gain }
}

/// One frame's frequency response between all 6 tx and 6 rx antennas.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// Indexed `[subcarrier][rx][tx]`, flattened.
    h: Vec<C64>,
    pub frame_index: usize,
    pub batch_index: usize,
}

impl ChannelRealization {
    pub fn from_flat(h: Vec<C64>, batch_index: usize, frame_index: usize) -> Result<Self> {
        let need = N_SUBCARRIERS * N_RX * N_TX;
        if h.len() != need {
            return Err(Error::DimensionMismatch(format!(
                "expected {need} coefficients, got {}",
                h.len()
            )));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Contract("channel coefficients must be finite".into()));
        }
        Ok(Self {
            h,
            frame_index,
            batch_index,
        })
    }

    pub fn zeros(batch_index: usize, frame_index: usize) -> Self {
        Self {
            h: vec![C64::new(0.0, 0.0); N_SUBCARRIERS * N_RX * N_TX],
            frame_index,
            batch_index,
        }
    }

    #[inline]
    fn idx(sc: usize, rx: usize, tx: usize) -> usize {
        (sc * N_RX + rx) * N_TX + tx
    }

    #[inline]
    pub fn at(&self, sc: usize, rx: usize, tx: usize) -> C64 {
        self.h[Self::idx(sc, rx, tx)]
    }

    #[inline]
    pub fn set(&mut self, sc: usize, rx: usize, tx: usize, v: C64) {
        self.h[Self::idx(sc, rx, tx)] = v;
    }

    pub fn as_flat(&self) -> &[C64] {
        &self.h
    }

    /// Full 6×6 matrix on one subcarrier.
    pub fn subcarrier(&self, sc: usize) -> CMatrix {
        let base = sc * N_RX * N_TX;
        CMatrix::from_rows(N_RX, N_TX, &self.h[base..base + N_RX * N_TX])
    }

    /// Rx-by-tx block on one subcarrier.
    pub fn block(&self, sc: usize, rx: &[usize], tx: &[usize]) -> CMatrix {
        CMatrix::from_fn(rx.len(), tx.len(), |r, c| self.at(sc, rx[r], tx[c]))
    }

    /// Frequency response of one antenna pair.
    pub fn response(&self, rx: usize, tx: usize) -> Vec<C64> {
        (0..N_SUBCARRIERS).map(|sc| self.at(sc, rx, tx)).collect()
    }

    /// Mean |h|² over subcarriers and antenna pairs of an (MS, BS) link.
    pub fn wideband_power(&self, ms: usize, bs: usize) -> f64 {
        let mut acc = 0.0;
        for sc in 0..N_SUBCARRIERS {
            for rx in crate::system::ms_antennas(ms) {
                for tx in crate::system::bs_antennas(bs) {
                    acc += self.at(sc, rx, tx).norm_sqr();
                }
            }
        }
        acc / (N_SUBCARRIERS * 4) as f64
    }

    /// Per MS: is its serving BS also the one with the highest wideband power?
    pub fn best_bs_flags(&self, serving: &[usize; N_MS]) -> [bool; N_MS] {
        let mut out = [false; N_MS];
        for ms in 0..N_MS {
            let own = self.wideband_power(ms, serving[ms]);
            out[ms] = (0..N_BS).all(|bs| bs == serving[ms] || self.wideband_power(ms, bs) <= own);
        }
        out
    }

    /// Same channel multiplied by a common complex scalar.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            h: self.h.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }
}

fn twiddles() -> &'static [C64; N_SUBCARRIERS] {
    static T: OnceLock<[C64; N_SUBCARRIERS]> = OnceLock::new();
    T.get_or_init(|| std::array::from_fn(|i| C64::from_polar(1.0, -2.0 * PI * i as f64 / N_SUBCARRIERS as f64)))
}

/// 38-point DFT of a tap vector (zero-padded).
pub fn taps_to_response(taps: &[C64]) -> Vec<C64> {
    let w = twiddles();
    (0..N_SUBCARRIERS)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(l, t)| t * w[(k * l) % N_SUBCARRIERS])
                .sum()
        })
        .collect()
}

/// First `n` taps of the inverse 38-point DFT.
pub fn leading_taps(resp: &[C64], n: usize) -> Vec<C64> {
    let w = twiddles();
    (0..n)
        .map(|l| {
            resp.iter()
                .enumerate()
                .map(|(k, h)| h * w[(k * l) % N_SUBCARRIERS].conj())
                .sum::<C64>()
                / N_SUBCARRIERS as f64
        })
        .collect()
}

/// Inverse 38-point DFT; returns all 38 taps.
pub fn response_to_taps(resp: &[C64]) -> Vec<C64> {
    leading_taps(resp, N_SUBCARRIERS)
}

/// Fresh channel for the first frame of a batch.
pub fn draw_channel(
    geom: &LinkGeometry,
    cfg: &ChannelModelConfig,
    rng: &mut RngStream,
    batch_index: usize,
) -> ChannelRealization {
    let w = cfg.tap_weights();
    let mut out = ChannelRealization::zeros(batch_index, 0);
    for rx in 0..N_RX {
        for tx in 0..N_TX {
            let g = geom.antenna_gain(rx, tx);
            let taps: Vec<C64> = w.iter().map(|wl| rng.cgauss1(g * wl)).collect();
            for (sc, v) in taps_to_response(&taps).into_iter().enumerate() {
                out.set(sc, rx, tx, v);
            }
        }
    }
    out
}

/// Gauss-Markov step `t' = ρ t + √(1−ρ²) w` on every delay tap.
pub fn evolve_channel(
    prev: &ChannelRealization,
    geom: &LinkGeometry,
    cfg: &ChannelModelConfig,
    rng: &mut RngStream,
) -> ChannelRealization {
    let rho = cfg.temporal_rho;
    let mut out = prev.clone();
    out.frame_index = prev.frame_index + 1;
    if rho >= 1.0 {
        return out;
    }
    let innov = (1.0 - rho * rho).sqrt();
    let w = cfg.tap_weights();
    for rx in 0..N_RX {
        for tx in 0..N_TX {
            let g = geom.antenna_gain(rx, tx);
            let taps = leading_taps(&prev.response(rx, tx), w.len());
            let next: Vec<C64> = w
                .iter()
                .enumerate()
                .map(|(l, wl)| taps[l] * rho + rng.cgauss1(g * wl) * innov)
                .collect();
            for (sc, v) in taps_to_response(&next).into_iter().enumerate() {
                out.set(sc, rx, tx, v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> LinkBudget {
        LinkBudget {
            p_total_w: 0.0316,
            noise_var: 1e-10,
        }
    }

    #[test]
    fn symmetric_geometry_without_spread() {
        let cfg = ChannelModelConfig {
            serving_snr_range_db: (40.0, 40.0),
            cross_gain_db: 0.0,
            cross_gain_spread_db: 0.0,
            ..Default::default()
        };
        let g = draw_geometry(&cfg, &budget(), &mut RngStream::new(1, &[]));
        let g0 = g.gain[0][0];
        assert!(g.gain.iter().flatten().all(|&x| (x - g0).abs() <= 1e-15 * g0));
    }

    #[test]
    fn degenerate_range_is_exact() {
        let cfg = ChannelModelConfig {
            serving_snr_range_db: (40.0, 40.0),
            ..Default::default()
        };
        let b = budget();
        let g = draw_geometry(&cfg, &b, &mut RngStream::new(2, &[]));
        for ms in 0..N_MS {
            assert!((b.snr_db_for_gain(g.gain[ms][ms]) - 40.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clamp_keeps_links_above_zero_db() {
        let cfg = ChannelModelConfig {
            serving_snr_range_db: (2.0, 5.0),
            cross_gain_db: -20.0,
            cross_gain_spread_db: 10.0,
            ..Default::default()
        };
        let b = budget();
        let mut rng = RngStream::new(3, &[]);
        for _ in 0..2000 {
            let g = draw_geometry(&cfg, &b, &mut rng);
            assert!(g.gain.iter().flatten().all(|&x| b.snr_db_for_gain(x) >= -1e-9));
        }
    }

    #[test]
    fn single_tap_is_flat() {
        let cfg = ChannelModelConfig {
            n_taps: 1,
            ..Default::default()
        };
        let geom = LinkGeometry::uniform(1.0);
        let ch = draw_channel(&geom, &cfg, &mut RngStream::new(4, &[]), 0);
        for rx in 0..N_RX {
            for tx in 0..N_TX {
                let r = ch.response(rx, tx);
                assert!(r.iter().all(|z| (z - r[0]).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn rho_one_is_identity() {
        let cfg = ChannelModelConfig {
            temporal_rho: 1.0,
            ..Default::default()
        };
        let geom = LinkGeometry::uniform(1.0);
        let ch = draw_channel(&geom, &cfg, &mut RngStream::new(5, &[]), 0);
        let next = evolve_channel(&ch, &geom, &cfg, &mut RngStream::new(6, &[]));
        assert_eq!(ch.as_flat(), next.as_flat());
        assert_eq!(next.frame_index, 1);
    }

    #[test]
    fn dft_has_at_most_n_taps() {
        let cfg = ChannelModelConfig::default();
        let geom = LinkGeometry::uniform(1.0);
        let ch = draw_channel(&geom, &cfg, &mut RngStream::new(7, &[]), 0);
        let ch = evolve_channel(&ch, &geom, &cfg, &mut RngStream::new(8, &[]));
        for rx in 0..N_RX {
            for tx in 0..N_TX {
                let taps = response_to_taps(&ch.response(rx, tx));
                let peak = taps.iter().map(|t| t.norm()).fold(0.0, f64::max);
                assert!(taps[cfg.n_taps..].iter().all(|t| t.norm() < 1e-10 * peak));
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(ChannelModelConfig::default().validate().is_ok());
        assert!(ChannelModelConfig {
            n_taps: 6,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelModelConfig {
            n_taps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelModelConfig {
            temporal_rho: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelModelConfig {
            serving_snr_range_db: (5.0, 1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
