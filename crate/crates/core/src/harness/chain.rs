//! One frame of one scheme through the impaired link.

use crate::channel::ChannelRealization;
use crate::coding::{LdpcCode, MinSumDecoder};
use crate::error::{contract, Result};
use crate::impairments::{apply_rx_dirty, apply_thermal, apply_tx_dirty, ImpairmentConfig};
use crate::metrics::{evm_per_subcarrier, sindr_evm_with};
use crate::numerics::{dot, norm_sqr, tag, CVec, RngStream};
use crate::phy::{
    build_frame, csi_estimate, demod_estimate, hard_decisions, mmse_combine, propagate, qam16_demap_with, transmit,
    EffectiveChannelEstimate, FrameLayout, StreamTx, SymbolKind, PILOT_SEED,
};
use crate::precoding::SchemeSolution;
use crate::system::ms_antennas;

/// Where the receivers get the effective channels for their combiners.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiverCsi {
    /// LS estimates from the demodulation pilots.
    Pilots,
    /// The true precoded channel, without impairments.
    Ideal,
}

/// Receiver and transmitter settings shared by every slot of a frame.
#[derive(Clone, Copy)]
pub struct LinkContext<'a> {
    pub layout: &'a FrameLayout,
    pub impairments: &'a ImpairmentConfig,
    /// Noise variance assumed by the receivers.
    pub noise_var: f64,
    /// Actual thermal variance per MS.
    pub node_var: &'a [f64],
    pub csi_amplitude: f64,
    pub normalized_weights: bool,
    pub receiver_csi: ReceiverCsi,
    /// Encode and decode payloads; without it the payload is random bits.
    pub coding: Option<(&'a LdpcCode, &'a MinSumDecoder<'a>)>,
    pub batch: usize,
    pub frame: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamOutcome {
    /// Linear SINDR_EVM.
    pub sindr_evm: f64,
    pub uncoded_error: bool,
    pub coded_error: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkOutcome {
    /// Indexed like `sol.streams`.
    pub streams: Vec<StreamOutcome>,
    /// Channel estimated from the CSI pilots of the last slot.
    pub csi: ChannelRealization,
}

/// Payload bits of one stream; coded frames carry whole codewords.
fn stream_bits(ctx: &LinkContext<'_>, rng: &mut RngStream) -> Result<(Vec<u8>, Option<Vec<u8>>)> {
    let cap = ctx.layout.payload_bits_per_stream();
    match ctx.coding {
        None => Ok((rng.bits(cap), None)),
        Some((code, _)) => {
            if !cap.is_multiple_of(code.n()) {
                return Err(contract(format!(
                    "frame capacity {cap} is not a whole number of codewords"
                )));
            }
            let mut coded = Vec::with_capacity(cap);
            let mut info = Vec::with_capacity(cap / code.n() * code.k());
            for _ in 0..cap / code.n() {
                let u = rng.bits(code.k());
                coded.extend(code.encode(&u)?);
                info.extend(u);
            }
            Ok((coded, Some(info)))
        }
    }
}

fn true_effective_channel(ch: &ChannelRealization, ms: usize, specs: &[StreamTx<'_>]) -> EffectiveChannelEstimate {
    let rx = ms_antennas(ms);
    let h = specs
        .iter()
        .map(|st| {
            (0..st.weights.len())
                .map(|sc| ch.block(sc, &rx, st.antennas).mul_vec(&st.weights[sc]))
                .collect()
        })
        .collect();
    EffectiveChannelEstimate { ms, h }
}

/// Runs every slot of `sol` through `ch` and scores each stream.
///
/// `phases` is the per-branch transmit rotation of this frame.
pub fn run_link(
    sol: &SchemeSolution,
    ch: &ChannelRealization,
    ctx: &LinkContext<'_>,
    phases: &[f64],
    rng: &RngStream,
) -> Result<LinkOutcome> {
    let layout = ctx.layout;
    let n_sc = layout.n_subcarriers;
    let pilot_rng = RngStream::new(PILOT_SEED, &[]);
    let n_slots = sol.streams.iter().map(|s| s.slot + 1).max().unwrap_or(0);
    let mut out: Vec<Option<StreamOutcome>> = vec![None; sol.n_streams()];
    let mut csi = None;
    for slot in 0..n_slots {
        let ids = sol.slot_streams(slot);
        if ids.is_empty() {
            continue;
        }
        let srng = rng.child(slot as u64);
        let mut coded = Vec::with_capacity(ids.len());
        let mut info = Vec::with_capacity(ids.len());
        for (local, _) in ids.iter().enumerate() {
            let (c, u) = stream_bits(ctx, &mut srng.child(tag("bits")).child(local as u64))?;
            coded.push(c);
            info.push(u);
        }
        let frame = build_frame(&coded, layout, &pilot_rng)?;
        let weights: Vec<Vec<CVec>> = ids.iter().map(|&s| sol.weights(s)).collect();
        let specs: Vec<StreamTx<'_>> = ids
            .iter()
            .zip(&weights)
            .map(|(&s, w)| StreamTx {
                antennas: &sol.streams[s].tx_antennas,
                weights: w,
            })
            .collect();
        let mut tx = transmit(&frame, layout, &specs, ctx.csi_amplitude);
        apply_tx_dirty(&mut tx, ctx.impairments, phases, &mut srng.child(tag("tx")));
        let mut rx = propagate(&tx, ch);
        apply_rx_dirty(&mut rx, ctx.impairments, &mut srng.child(tag("rx")));
        apply_thermal(&mut rx, ctx.node_var, &mut srng.child(tag("thermal")));
        if slot + 1 == n_slots {
            csi = Some(csi_estimate(
                &rx,
                layout,
                &frame,
                ctx.csi_amplitude,
                ctx.batch,
                ctx.frame,
            )?);
        }

        for (local, &s) in ids.iter().enumerate() {
            let ms = sol.streams[s].ms;
            let est = match ctx.receiver_csi {
                ReceiverCsi::Pilots => demod_estimate(&rx, layout, &frame, ms),
                ReceiverCsi::Ideal => true_effective_channel(ch, ms, &specs),
            };
            let w = mmse_combine(&est, local, ctx.noise_var)?;
            let ants = ms_antennas(ms);
            let mut y = Vec::with_capacity(layout.payload_qam_per_stream());
            for p in 0..layout.payload_symbols {
                let t = layout.position(frame.n_s, SymbolKind::Payload(p));
                for (sc, wsc) in w.iter().enumerate() {
                    let r: CVec = ants.iter().map(|&a| rx.at(a, t, sc)).collect();
                    y.push(dot(wsc, &r));
                }
            }
            let evm = evm_per_subcarrier(&y, &frame.payload[local], n_sc)?;
            let p: Vec<f64> = w.iter().map(|x| 1.0 / norm_sqr(x)).collect();
            let sindr = sindr_evm_with(&evm, &p, ctx.normalized_weights)?;

            let (uncoded_error, coded_error) = match ctx.coding {
                None => (false, false),
                Some((code, decoder)) => {
                    let nu: Vec<f64> = (0..n_sc)
                        .map(|sc| {
                            let h = est.at_subcarrier(sc);
                            let leak: f64 = h
                                .iter()
                                .enumerate()
                                .filter(|&(j, _)| j != local)
                                .map(|(_, hj)| dot(&w[sc], hj).norm_sqr())
                                .sum();
                            (leak + ctx.noise_var * norm_sqr(&w[sc])).max(f64::MIN_POSITIVE)
                        })
                        .collect();
                    let nv: Vec<f64> = (0..y.len()).map(|q| nu[q % n_sc]).collect();
                    let llr = qam16_demap_with(&y, &nv);
                    let uncoded = hard_decisions(&llr) != coded[local];
                    let info_ref = info[local].as_ref().expect("coded payload keeps its info bits");
                    let mut decoded = Vec::with_capacity(info_ref.len());
                    for cw in llr.chunks_exact(code.n()) {
                        decoded.extend(decoder.decode(cw).info);
                    }
                    (uncoded, &decoded != info_ref)
                }
            };
            out[s] = Some(StreamOutcome {
                sindr_evm: sindr,
                uncoded_error,
                coded_error,
            });
        }
    }
    let streams = out
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| contract("solution has a stream in no slot"))?;
    let csi = csi.ok_or_else(|| contract("solution has no streams"))?;
    Ok(LinkOutcome { streams, csi })
}
