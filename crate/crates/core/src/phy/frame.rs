//! Frame layout, frame construction, transmit mapping and propagation.
//!
//! OFDM symbol order within a frame with `n_s` streams:
//!
//! ```text
//! payload 0..=9 | demod pilot stream 0..n_s | payload 10..=19 | CSI pilot antenna 0..6
//! ```
//!
//! Payload QAM symbol `q` of a stream sits on payload symbol `q / 38`,
//! subcarrier `q % 38`, so codeword 0 fills payload symbols 0–9 and codeword
//! 1 fills 10–19.

use std::f64::consts::FRAC_1_SQRT_2;

use super::qam::{qam16_map, BITS_PER_SYMBOL};
use crate::channel::ChannelRealization;
use crate::error::{contract, Result};
use crate::numerics::{CVec, RngStream, C64};
use crate::system::{CYCLIC_PREFIX_S, N_RX, N_SUBCARRIERS, N_TX, SUBCARRIER_SPACING_HZ};

/// Seed of the demodulation pilot sequences, shared by all nodes.
pub const PILOT_SEED: u64 = 0x5049_4C4F_5453_3031;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Payload(usize),
    DemodPilot(usize),
    CsiPilot(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameLayout {
    pub n_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub cp_s: f64,
    pub payload_symbols: usize,
    pub csi_pilot_symbols: usize,
}

impl Default for FrameLayout {
    fn default() -> Self {
        Self {
            n_subcarriers: N_SUBCARRIERS,
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
            cp_s: CYCLIC_PREFIX_S,
            payload_symbols: 20,
            csi_pilot_symbols: N_TX,
        }
    }
}

impl FrameLayout {
    pub fn payload_bits_per_stream(&self) -> usize {
        self.payload_symbols * self.n_subcarriers * BITS_PER_SYMBOL
    }

    pub fn payload_qam_per_stream(&self) -> usize {
        self.payload_symbols * self.n_subcarriers
    }

    pub fn n_symbols(&self, n_s: usize) -> usize {
        self.payload_symbols + n_s + self.csi_pilot_symbols
    }

    pub fn symbol_map(&self, n_s: usize) -> Vec<SymbolKind> {
        let half = self.payload_symbols / 2;
        let mut out = Vec::with_capacity(self.n_symbols(n_s));
        out.extend((0..half).map(SymbolKind::Payload));
        out.extend((0..n_s).map(SymbolKind::DemodPilot));
        out.extend((half..self.payload_symbols).map(SymbolKind::Payload));
        out.extend((0..self.csi_pilot_symbols).map(SymbolKind::CsiPilot));
        out
    }

    /// OFDM symbol index of a given element.
    pub fn position(&self, n_s: usize, kind: SymbolKind) -> usize {
        self.symbol_map(n_s)
            .iter()
            .position(|&k| k == kind)
            .expect("symbol kind in layout")
    }
}

/// Known unit-magnitude QPSK demodulation pilots of one stream.
pub fn demod_pilot_sequence(pilot_rng: &RngStream, stream: usize, n_sc: usize) -> Vec<C64> {
    let mut rng = pilot_rng.child(stream as u64);
    (0..n_sc)
        .map(|_| {
            let re = if rng.bit() == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if rng.bit() == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            C64::new(re, im)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub n_s: usize,
    /// Per stream, `payload_symbols × n_subcarriers` QAM symbols, time-major.
    pub payload: Vec<Vec<C64>>,
    pub demod_pilots: Vec<Vec<C64>>,
    /// All-ones per transmit antenna.
    pub csi_pilots: Vec<Vec<C64>>,
}

impl Frame {
    pub fn payload_symbol(&self, layout: &FrameLayout, stream: usize, t: usize, sc: usize) -> C64 {
        self.payload[stream][t * layout.n_subcarriers + sc]
    }
}

pub fn build_frame(payload_bits: &[Vec<u8>], layout: &FrameLayout, pilot_rng: &RngStream) -> Result<Frame> {
    let cap = layout.payload_bits_per_stream();
    let payload = payload_bits
        .iter()
        .enumerate()
        .map(|(s, bits)| {
            if bits.len() != cap {
                return Err(contract(format!(
                    "stream {s}: {} bits given, frame capacity is {cap}",
                    bits.len()
                )));
            }
            qam16_map(bits)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_s = payload.len();
    Ok(Frame {
        n_s,
        payload,
        demod_pilots: (0..n_s)
            .map(|s| demod_pilot_sequence(pilot_rng, s, layout.n_subcarriers))
            .collect(),
        csi_pilots: vec![vec![C64::new(1.0, 0.0); layout.n_subcarriers]; layout.csi_pilot_symbols],
    })
}

/// Complex samples indexed `[antenna][ofdm symbol][subcarrier]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntennaGrid {
    n_ant: usize,
    n_sym: usize,
    n_sc: usize,
    data: Vec<C64>,
}

impl AntennaGrid {
    pub fn zeros(n_ant: usize, n_sym: usize, n_sc: usize) -> Self {
        Self {
            n_ant,
            n_sym,
            n_sc,
            data: vec![C64::new(0.0, 0.0); n_ant * n_sym * n_sc],
        }
    }

    pub fn n_ant(&self) -> usize {
        self.n_ant
    }

    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    #[inline]
    fn idx(&self, a: usize, t: usize, sc: usize) -> usize {
        (a * self.n_sym + t) * self.n_sc + sc
    }

    #[inline]
    pub fn at(&self, a: usize, t: usize, sc: usize) -> C64 {
        self.data[self.idx(a, t, sc)]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, t: usize, sc: usize) -> &mut C64 {
        let i = self.idx(a, t, sc);
        &mut self.data[i]
    }

    /// All samples of one antenna branch.
    pub fn branch(&self, a: usize) -> &[C64] {
        let len = self.n_sym * self.n_sc;
        &self.data[a * len..(a + 1) * len]
    }

    pub fn branch_mut(&mut self, a: usize) -> &mut [C64] {
        let len = self.n_sym * self.n_sc;
        &mut self.data[a * len..(a + 1) * len]
    }

    /// Mean |x|² over one branch.
    pub fn branch_power(&self, a: usize) -> f64 {
        let b = self.branch(a);
        b.iter().map(|z| z.norm_sqr()).sum::<f64>() / b.len() as f64
    }
}

/// Transmit weights of one stream: its antenna set and, per subcarrier, the
/// precoder scaled by the square root of the stream power.
#[derive(Clone, Debug)]
pub struct StreamTx<'a> {
    pub antennas: &'a [usize],
    pub weights: &'a [CVec],
}

/// Maps a frame onto the transmit antennas.
///
/// Payload and demodulation pilots pass through each stream's precoder; CSI
/// pilots are sent from one antenna at a time with amplitude `csi_amplitude`.
pub fn transmit(frame: &Frame, layout: &FrameLayout, streams: &[StreamTx<'_>], csi_amplitude: f64) -> AntennaGrid {
    assert_eq!(streams.len(), frame.n_s, "one transmit spec per stream");
    let n_sc = layout.n_subcarriers;
    let map = layout.symbol_map(frame.n_s);
    let mut grid = AntennaGrid::zeros(N_TX, map.len(), n_sc);
    for (t, kind) in map.iter().enumerate() {
        match *kind {
            SymbolKind::Payload(p) => {
                for (s, st) in streams.iter().enumerate() {
                    for sc in 0..n_sc {
                        let x = frame.payload[s][p * n_sc + sc];
                        for (k, &a) in st.antennas.iter().enumerate() {
                            *grid.at_mut(a, t, sc) += st.weights[sc][k] * x;
                        }
                    }
                }
            }
            SymbolKind::DemodPilot(s) => {
                let st = &streams[s];
                for sc in 0..n_sc {
                    let x = frame.demod_pilots[s][sc];
                    for (k, &a) in st.antennas.iter().enumerate() {
                        *grid.at_mut(a, t, sc) += st.weights[sc][k] * x;
                    }
                }
            }
            SymbolKind::CsiPilot(a) => {
                for sc in 0..n_sc {
                    *grid.at_mut(a, t, sc) = frame.csi_pilots[a][sc] * csi_amplitude;
                }
            }
        }
    }
    grid
}

/// Passes a transmit grid through a block-constant channel.
pub fn propagate(tx: &AntennaGrid, ch: &ChannelRealization) -> AntennaGrid {
    let mut rx = AntennaGrid::zeros(N_RX, tx.n_sym(), tx.n_sc());
    for sc in 0..tx.n_sc() {
        for r in 0..N_RX {
            for a in 0..N_TX {
                let h = ch.at(sc, r, a);
                if h == C64::new(0.0, 0.0) {
                    continue;
                }
                for t in 0..tx.n_sym() {
                    *rx.at_mut(r, t, sc) += h * tx.at(a, t, sc);
                }
            }
        }
    }
    rx
}
