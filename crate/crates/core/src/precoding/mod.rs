//! Transmit precoders and nominal combiners for the six schemes.
//!
//! Every scheme is described as a list of streams. A stream has a transmit
//! antenna set, a receiving mobile station and a time slot. IA streams use
//! their base-station's two antennas, CoMP streams use all six, and the
//! baselines send canonical basis vectors from one base-station's antennas.
//! TDMA schemes use three slots (one per MS/BS pair); all others use one.

mod maxsinr;

pub use maxsinr::{max_sinr_subcarrier, stream_sinrs, sum_rate, MaxSinrOptions, SubcarrierSolution};

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::channel::ChannelRealization;
use crate::error::{contract, Error, Result};
use crate::metrics::sinr_post;
use crate::numerics::{dominant_right_singular, norm_sqr, CMatrix, CVec, C64};
use crate::phy::mmse_vector;
use crate::system::{bs_antennas, ms_antennas, N_BS, N_MS, N_SUBCARRIERS, N_TX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Ia,
    Comp,
    TdmaSimo,
    TdmaMimo,
    AllSimo,
    AllMimo,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Ia,
        Scheme::Comp,
        Scheme::TdmaMimo,
        Scheme::TdmaSimo,
        Scheme::AllMimo,
        Scheme::AllSimo,
    ];

    /// Concurrent streams.
    pub fn n_s(self) -> usize {
        match self {
            Scheme::Ia | Scheme::Comp | Scheme::AllSimo => 3,
            Scheme::TdmaSimo => 1,
            Scheme::TdmaMimo => 2,
            Scheme::AllMimo => 6,
        }
    }

    pub fn n_slots(self) -> usize {
        if self.is_tdma() {
            N_MS
        } else {
            1
        }
    }

    pub fn is_tdma(self) -> bool {
        matches!(self, Scheme::TdmaSimo | Scheme::TdmaMimo)
    }

    pub fn uses_max_sinr(self) -> bool {
        matches!(self, Scheme::Ia | Scheme::Comp)
    }

    pub fn key(self) -> &'static str {
        match self {
            Scheme::Ia => "ia",
            Scheme::Comp => "comp",
            Scheme::TdmaSimo => "tdma-simo",
            Scheme::TdmaMimo => "tdma-mimo",
            Scheme::AllSimo => "all-simo",
            Scheme::AllMimo => "all-mimo",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Ia => "IA",
            Scheme::Comp => "CoMP",
            Scheme::TdmaSimo => "TDMA-SIMO",
            Scheme::TdmaMimo => "TDMA-MIMO",
            Scheme::AllSimo => "All-SIMO",
            Scheme::AllMimo => "All-MIMO",
        }
    }

    /// Stream layout, in stream-id order.
    pub fn streams(self) -> Vec<StreamSpec> {
        let mut out = Vec::new();
        for ms in 0..N_MS {
            let bs = ms;
            let own: Vec<usize> = bs_antennas(bs).to_vec();
            match self {
                Scheme::Ia => out.push(StreamSpec::new(own, ms, 0)),
                Scheme::Comp => out.push(StreamSpec::new((0..N_TX).collect(), ms, 0)),
                Scheme::TdmaSimo => out.push(StreamSpec::new(own, ms, ms)),
                Scheme::TdmaMimo => {
                    out.push(StreamSpec::new(own.clone(), ms, ms));
                    out.push(StreamSpec::new(own, ms, ms));
                }
                Scheme::AllSimo => out.push(StreamSpec::new(own, ms, 0)),
                Scheme::AllMimo => {
                    out.push(StreamSpec::new(own.clone(), ms, 0));
                    out.push(StreamSpec::new(own, ms, 0));
                }
            }
        }
        out
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.key() == k)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamSpec {
    pub tx_antennas: Vec<usize>,
    pub ms: usize,
    pub slot: usize,
}

impl StreamSpec {
    pub fn new(tx_antennas: Vec<usize>, ms: usize, slot: usize) -> Self {
        Self { tx_antennas, ms, slot }
    }

    pub fn rx_antennas(&self) -> [usize; 2] {
        ms_antennas(self.ms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PowerNormalization {
    /// Equal split of the total power over the concurrent streams.
    #[default]
    SystemTotal,
    /// Scale all streams so that no base-station radiates more than its
    /// share `P_total / 3`. Only differs from `SystemTotal` for CoMP.
    PerBs,
}

impl FromStr for PowerNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "system" | "system-total" | "total" => Ok(Self::SystemTotal),
            "per-bs" | "perbs" => Ok(Self::PerBs),
            _ => Err(Error::Config(format!("unknown power normalization '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsiProvenance {
    TrueCurrent,
    EstimatedPrevious,
}

#[derive(Clone, Debug)]
pub struct CsiSnapshot<'a> {
    pub h: &'a ChannelRealization,
    pub provenance: CsiProvenance,
}

impl<'a> CsiSnapshot<'a> {
    pub fn ideal(h: &'a ChannelRealization) -> Self {
        Self {
            h,
            provenance: CsiProvenance::TrueCurrent,
        }
    }

    pub fn causal(h: &'a ChannelRealization) -> Self {
        Self {
            h,
            provenance: CsiProvenance::EstimatedPrevious,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSolution {
    pub scheme: Scheme,
    pub streams: Vec<StreamSpec>,
    /// `precoders[stream][subcarrier]`, unit norm.
    pub precoders: Vec<Vec<CVec>>,
    /// `combiners[stream][subcarrier]`, unit norm, from the CSI used.
    pub combiners: Vec<Vec<CVec>>,
    /// Per-stream power in watts per subcarrier.
    pub power: Vec<f64>,
    /// Max-SINR iterations per subcarrier (zero for baselines).
    pub iterations: Vec<usize>,
    /// Some subcarrier stopped at the iteration cap.
    pub not_converged: bool,
}

impl SchemeSolution {
    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    /// Stream ids active in `slot`.
    pub fn slot_streams(&self, slot: usize) -> Vec<usize> {
        (0..self.streams.len())
            .filter(|&s| self.streams[s].slot == slot)
            .collect()
    }

    /// Precoder of `stream` scaled by the square root of its power.
    pub fn weights(&self, stream: usize) -> Vec<CVec> {
        let a = self.power[stream].sqrt();
        self.precoders[stream]
            .iter()
            .map(|v| v.iter().map(|x| x * a).collect())
            .collect()
    }

    /// Radiated power of each slot on one subcarrier.
    pub fn slot_power(&self, slot: usize, sc: usize) -> f64 {
        self.slot_streams(slot)
            .into_iter()
            .map(|s| self.power[s] * norm_sqr(&self.precoders[s][sc]))
            .sum()
    }

    /// Text dump with one complex entry per row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("stream,subcarrier,kind,index,re,im\n");
        for (st, (vs, us)) in self.precoders.iter().zip(&self.combiners).enumerate() {
            for (sc, (v, u)) in vs.iter().zip(us).enumerate() {
                for (kind, vec) in [("precoder", v), ("combiner", u)] {
                    for (i, x) in vec.iter().enumerate() {
                        let _ = writeln!(s, "{st},{sc},{kind},{i},{:?},{:?}", x.re, x.im);
                    }
                }
            }
        }
        s
    }
}

/// Channel block from the antennas of `tx` into the MS of `rx`.
fn cross_block(h: &ChannelRealization, sc: usize, rx: &StreamSpec, tx: &StreamSpec) -> CMatrix {
    h.block(sc, &rx.rx_antennas(), &tx.tx_antennas)
}

fn equal_powers(streams: &[StreamSpec], p_total: f64) -> Vec<f64> {
    streams
        .iter()
        .map(|s| {
            let n = streams.iter().filter(|o| o.slot == s.slot).count();
            p_total / n as f64
        })
        .collect()
}

/// Unit-norm max-SINR (MMSE-direction) combiners for every stream on one
/// subcarrier, against the streams sharing its slot.
fn nominal_combiners(
    h: &ChannelRealization,
    sc: usize,
    streams: &[StreamSpec],
    precoders: &[CVec],
    power: &[f64],
    noise_var: f64,
) -> Result<Vec<CVec>> {
    (0..streams.len())
        .map(|k| {
            let peers: Vec<usize> = (0..streams.len())
                .filter(|&j| streams[j].slot == streams[k].slot)
                .collect();
            let vectors: Vec<CVec> = peers
                .iter()
                .map(|&j| {
                    let hv = cross_block(h, sc, &streams[k], &streams[j]).mul_vec(&precoders[j]);
                    hv.iter().map(|x| x * power[j].sqrt()).collect()
                })
                .collect();
            let me = peers.iter().position(|&j| j == k).unwrap();
            let mut u = mmse_vector(&vectors, me, noise_var)?;
            let n = norm_sqr(&u).sqrt();
            u.iter_mut().for_each(|x| *x /= n);
            Ok(u)
        })
        .collect()
}

/// Shared max-SINR driver for IA and CoMP.
///
/// `init[stream][sc]` overrides the default initialization (dominant right
/// singular vector of each stream's direct channel).
pub fn max_sinr_solution(
    scheme: Scheme,
    csi: &CsiSnapshot<'_>,
    noise_var: f64,
    p_total: f64,
    opts: &MaxSinrOptions,
    init: Option<&[Vec<CVec>]>,
) -> Result<SchemeSolution> {
    if !scheme.uses_max_sinr() {
        return Err(contract(format!("{scheme} does not use max-SINR precoding")));
    }
    if !(noise_var > 0.0) || !(p_total > 0.0) {
        return Err(contract("noise variance and power must be positive"));
    }
    let streams = scheme.streams();
    let power = equal_powers(&streams, p_total);
    let n = streams.len();
    let mut precoders = vec![Vec::with_capacity(N_SUBCARRIERS); n];
    let mut combiners = vec![Vec::with_capacity(N_SUBCARRIERS); n];
    let mut iterations = Vec::with_capacity(N_SUBCARRIERS);
    let mut not_converged = false;
    for sc in 0..N_SUBCARRIERS {
        let g: Vec<Vec<CMatrix>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| cross_block(csi.h, sc, &streams[k], &streams[j]))
                    .collect()
            })
            .collect();
        let init_sc: Option<Vec<CVec>> = init.map(|v| v.iter().map(|s| s[sc].clone()).collect());
        let sol = max_sinr_subcarrier(&g, &power, noise_var, opts, init_sc.as_deref())?;
        not_converged |= !sol.converged;
        iterations.push(sol.iterations);
        for k in 0..n {
            precoders[k].push(sol.v[k].clone());
            combiners[k].push(sol.u[k].clone());
        }
    }
    let mut sol = SchemeSolution {
        scheme,
        streams,
        precoders,
        combiners,
        power,
        iterations,
        not_converged,
    };
    if opts.power_normalization == PowerNormalization::PerBs {
        apply_per_bs_limit(&mut sol, p_total);
    }
    Ok(sol)
}

/// Common down-scaling so the most loaded base-station radiates exactly its
/// share on the worst subcarrier.
fn apply_per_bs_limit(sol: &mut SchemeSolution, p_total: f64) {
    let share = p_total / N_BS as f64;
    let mut worst = 0.0f64;
    for sc in 0..N_SUBCARRIERS {
        for bs in 0..N_BS {
            let ants = bs_antennas(bs);
            let p: f64 = (0..sol.n_streams())
                .map(|s| {
                    let st = &sol.streams[s];
                    st.tx_antennas
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| ants.contains(a))
                        .map(|(i, _)| sol.power[s] * sol.precoders[s][sc][i].norm_sqr())
                        .sum::<f64>()
                })
                .sum();
            worst = worst.max(p);
        }
    }
    if worst > share {
        let f = share / worst;
        sol.power.iter_mut().for_each(|p| *p *= f);
    }
}

/// IA: one stream per BS/MS pair from the serving BS's two antennas.
pub fn max_sinr_ia(
    csi: &CsiSnapshot<'_>,
    noise_var: f64,
    p_total: f64,
    opts: &MaxSinrOptions,
) -> Result<SchemeSolution> {
    max_sinr_solution(Scheme::Ia, csi, noise_var, p_total, opts, None)
}

/// CoMP: the same iteration on the stacked six-antenna transmitter.
pub fn comp_precode(
    csi: &CsiSnapshot<'_>,
    noise_var: f64,
    p_total: f64,
    opts: &MaxSinrOptions,
) -> Result<SchemeSolution> {
    max_sinr_solution(Scheme::Comp, csi, noise_var, p_total, opts, None)
}

/// IA precoders zero-padded into the six-antenna CoMP space.
pub fn embed_ia_in_comp(ia: &SchemeSolution) -> Vec<Vec<CVec>> {
    ia.streams
        .iter()
        .zip(&ia.precoders)
        .map(|(st, per_sc)| {
            per_sc
                .iter()
                .map(|v| {
                    let mut full: CVec = (0..N_TX).map(|_| C64::new(0.0, 0.0)).collect();
                    for (i, &a) in st.tx_antennas.iter().enumerate() {
                        full[a] = v[i];
                    }
                    full
                })
                .collect()
        })
        .collect()
}

/// Canonical baseline precoders: SIMO uses the first antenna of each active
/// BS, MIMO one stream per antenna. Also used for the first frame of every
/// batch, where there is no feedback yet.
///
/// Nominal combiners come from `csi` when given; otherwise they are left as
/// the first canonical receive vector.
pub fn baseline_precode(scheme: Scheme, p_total: f64, csi: Option<(&CsiSnapshot<'_>, f64)>) -> Result<SchemeSolution> {
    let streams = scheme.streams();
    let n = streams.len();
    let power = equal_powers(&streams, p_total);
    // stream index within its BS selects the antenna
    let precoders: Vec<Vec<CVec>> = (0..n)
        .map(|s| {
            let local = match scheme {
                Scheme::TdmaMimo | Scheme::AllMimo => s % 2,
                _ => 0,
            };
            let dim = streams[s].tx_antennas.len();
            let mut v: CVec = (0..dim).map(|_| C64::new(0.0, 0.0)).collect();
            // CoMP/IA fall back to antenna 0 of the serving BS
            let idx = if dim == N_TX { 2 * streams[s].ms + local } else { local };
            v[idx] = C64::new(1.0, 0.0);
            vec![v; N_SUBCARRIERS]
        })
        .collect();
    let combiners = match csi {
        Some((c, nv)) => {
            let mut out = vec![Vec::with_capacity(N_SUBCARRIERS); n];
            for sc in 0..N_SUBCARRIERS {
                let v: Vec<CVec> = precoders.iter().map(|p| p[sc].clone()).collect();
                for (k, u) in nominal_combiners(c.h, sc, &streams, &v, &power, nv)?
                    .into_iter()
                    .enumerate()
                {
                    out[k].push(u);
                }
            }
            out
        }
        None => {
            let e1: CVec = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)].into_iter().collect();
            vec![vec![e1; N_SUBCARRIERS]; n]
        }
    };
    Ok(SchemeSolution {
        scheme,
        streams,
        precoders,
        combiners,
        power,
        iterations: vec![0; N_SUBCARRIERS],
        not_converged: false,
    })
}

/// Precoders for any scheme from one CSI snapshot.
pub fn precode(
    scheme: Scheme,
    csi: &CsiSnapshot<'_>,
    noise_var: f64,
    p_total: f64,
    opts: &MaxSinrOptions,
) -> Result<SchemeSolution> {
    match scheme {
        Scheme::Ia => max_sinr_ia(csi, noise_var, p_total, opts),
        Scheme::Comp => comp_precode(csi, noise_var, p_total, opts),
        _ => baseline_precode(scheme, p_total, Some((csi, noise_var))),
    }
}

/// Per-subcarrier signal and interference powers of one stream through the
/// true channel with a unit-norm max-SINR combiner recomputed on that channel.
pub fn stream_powers(
    sol: &SchemeSolution,
    truth: &ChannelRealization,
    noise_var: f64,
    stream: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut s_out = Vec::with_capacity(N_SUBCARRIERS);
    let mut i_out = Vec::with_capacity(N_SUBCARRIERS);
    let me = &sol.streams[stream];
    let peers = sol.slot_streams(me.slot);
    for sc in 0..N_SUBCARRIERS {
        let vectors: Vec<CVec> = peers
            .iter()
            .map(|&j| {
                let hv = cross_block(truth, sc, me, &sol.streams[j]).mul_vec(&sol.precoders[j][sc]);
                hv.iter().map(|x| x * sol.power[j].sqrt()).collect()
            })
            .collect();
        let d = peers.iter().position(|&j| j == stream).unwrap();
        let mut u = mmse_vector(&vectors, d, noise_var)?;
        let n = norm_sqr(&u).sqrt();
        u.iter_mut().for_each(|x| *x /= n);
        let mut s = 0.0;
        let mut i = 0.0;
        for (k, v) in vectors.iter().enumerate() {
            let p = crate::numerics::dot(&u, v).norm_sqr();
            if k == d {
                s = p;
            } else {
                i += p;
            }
        }
        s_out.push(s);
        i_out.push(i);
    }
    Ok((s_out, i_out))
}

/// Subcarrier-aggregated SINR-post of every stream (linear).
///
/// Combiners are unit norm, so the noise term summed over subcarriers is
/// `N_sc · σ²`.
pub fn sinr_post_of_solution(sol: &SchemeSolution, truth: &ChannelRealization, noise_var: f64) -> Result<Vec<f64>> {
    (0..sol.n_streams())
        .map(|k| {
            let (s, i) = stream_powers(sol, truth, noise_var, k)?;
            sinr_post(&s, &i, N_SUBCARRIERS as f64 * noise_var)
        })
        .collect()
}

/// Sum over subcarriers of the max-SINR objective (sum rate) of a solution.
pub fn solution_value(sol: &SchemeSolution, h: &ChannelRealization, noise_var: f64) -> f64 {
    let n = sol.n_streams();
    (0..N_SUBCARRIERS)
        .map(|sc| {
            let g: Vec<Vec<CMatrix>> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|j| cross_block(h, sc, &sol.streams[k], &sol.streams[j]))
                        .collect()
                })
                .collect();
            let v: Vec<CVec> = sol.precoders.iter().map(|p| p[sc].clone()).collect();
            sum_rate(&g, &sol.power, noise_var, &v).unwrap_or(f64::NEG_INFINITY)
        })
        .sum()
}

/// Dominant right singular vector of a stream's direct channel.
pub(crate) fn direct_init(g: &CMatrix) -> Result<CVec> {
    dominant_right_singular(g)
}
