//! Batch and campaign drivers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::chain::{run_link, LinkContext, ReceiverCsi};
use super::config::{CampaignConfig, CODE_SEED};
use crate::channel::{draw_channel, draw_geometry, evolve_channel, save_trace, ChannelRealization, LinkGeometry};
use crate::coding::{LdpcCode, MinSumDecoder};
use crate::error::Result;
use crate::impairments::{draw_node_noise, draw_phase_errors};
use crate::metrics::{
    aggregate, capped_db, cdf_text, empirical_cdf, metrics_csv, summary_text, Curve, FrameMetrics, RecordFilter,
    SchemeSummary, DB_CAP,
};
use crate::numerics::{tag, RngStream};
use crate::phy::FrameLayout;
use crate::precoding::{baseline_precode, precode, sinr_post_of_solution, CsiSnapshot, Scheme, SchemeSolution};
use crate::system::{N_MS, N_TX};

/// Records and channels of one batch.
#[derive(Clone, Debug)]
pub struct BatchOutput {
    pub records: Vec<FrameMetrics>,
    pub channels: Vec<ChannelRealization>,
}

#[derive(Clone, Debug)]
pub struct CampaignOutput {
    pub records: Vec<FrameMetrics>,
    pub summary_all: BTreeMap<Scheme, SchemeSummary>,
    pub summary_best: BTreeMap<Scheme, SchemeSummary>,
    pub channels: Vec<ChannelRealization>,
}

impl CampaignOutput {
    pub fn summary_text(&self) -> String {
        summary_text(&self.summary_all, &self.summary_best)
    }

    /// Samples of `curve` for one scheme under `filter`.
    pub fn curve(&self, scheme: Scheme, curve: Curve, filter: RecordFilter) -> Vec<f64> {
        curve_samples(&self.records, scheme, curve, filter)
    }
}

pub fn curve_samples(records: &[FrameMetrics], scheme: Scheme, curve: Curve, filter: RecordFilter) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.scheme == scheme && (filter == RecordFilter::All || r.best_bs))
        .map(|r| curve.of(r))
        .collect()
}

/// CSI pilot amplitude: each antenna sends at the per-BS power.
pub fn csi_amplitude(p_total: f64) -> f64 {
    (p_total / 2.0).sqrt()
}

pub fn identity_serving() -> [usize; N_MS] {
    std::array::from_fn(|m| m)
}

/// Per-batch random state shared by every scheme.
pub struct BatchState {
    pub root: RngStream,
    pub geometry: LinkGeometry,
    pub channels: Vec<ChannelRealization>,
    pub best_bs: [bool; N_MS],
    pub node_var: Vec<f64>,
}

pub fn batch_state(cfg: &CampaignConfig, batch: usize) -> BatchState {
    let root = RngStream::new(cfg.seed, &[batch as u64]);
    let geometry = draw_geometry(&cfg.channel, &cfg.budget(), &mut root.child(tag("geometry")));
    let chrng = root.child(tag("channel"));
    let mut channels = Vec::with_capacity(cfg.frames_per_batch);
    channels.push(draw_channel(&geometry, &cfg.channel, &mut chrng.child(0), batch));
    for f in 1..cfg.frames_per_batch {
        let next = evolve_channel(&channels[f - 1], &geometry, &cfg.channel, &mut chrng.child(f as u64));
        channels.push(next);
    }
    let best_bs = channels[0].best_bs_flags(&geometry.serving);
    let node_var = draw_node_noise(N_MS, &cfg.impairments, &mut root.child(tag("thermal-level")));
    BatchState {
        root,
        geometry,
        channels,
        best_bs,
        node_var,
    }
}

fn failed_records(scheme: Scheme, batch: usize, frame: usize, best_bs: &[bool; N_MS]) -> Vec<FrameMetrics> {
    scheme
        .streams()
        .iter()
        .enumerate()
        .map(|(k, st)| FrameMetrics {
            batch,
            frame,
            scheme,
            stream: k,
            ms: st.ms,
            sinr_post_ideal_db: -DB_CAP,
            sinr_post_causal_db: -DB_CAP,
            sindr_evm_measured_db: -DB_CAP,
            sindr_evm_model_db: -DB_CAP,
            uncoded_frame_error: true,
            coded_frame_error: true,
            best_bs: best_bs[st.ms],
            failed: true,
        })
        .collect()
}

/// Precoders for the ideal curves: max-SINR schemes are re-solved on the
/// true channel, the fixed baselines keep their canonical precoders.
pub fn ideal_solution(cfg: &CampaignConfig, scheme: Scheme, ch: &ChannelRealization) -> Result<SchemeSolution> {
    if scheme.uses_max_sinr() {
        precode(
            scheme,
            &CsiSnapshot::ideal(ch),
            cfg.noise_var,
            cfg.p_total_w(),
            &cfg.max_sinr,
        )
    } else {
        baseline_precode(scheme, cfg.p_total_w(), Some((&CsiSnapshot::ideal(ch), cfg.noise_var)))
    }
}

/// Linear SINDR_EVM of every stream of `sol` in the model run.
pub fn model_sindr(
    cfg: &CampaignConfig,
    sol: &SchemeSolution,
    ch: &ChannelRealization,
    node_var: &[f64],
    frng: &RngStream,
    frame: usize,
) -> Result<Vec<f64>> {
    let layout = FrameLayout {
        payload_symbols: cfg.model_payload_symbols,
        ..FrameLayout::default()
    };
    let ctx = LinkContext {
        layout: &layout,
        impairments: &cfg.impairments,
        noise_var: cfg.noise_var,
        node_var,
        csi_amplitude: csi_amplitude(cfg.p_total_w()),
        normalized_weights: cfg.normalized_weights,
        receiver_csi: ReceiverCsi::Ideal,
        coding: None,
        batch: ch.batch_index,
        frame,
    };
    let phases = draw_phase_errors(N_TX, &cfg.impairments, &mut frng.child(tag("model-phase")));
    let out = run_link(sol, ch, &ctx, &phases, &frng.child(tag("model")))?;
    Ok(out.streams.into_iter().map(|s| s.sindr_evm).collect())
}

fn scheme_frames(
    cfg: &CampaignConfig,
    scheme: Scheme,
    state: &BatchState,
    code: &LdpcCode,
    decoder: &MinSumDecoder<'_>,
    batch: usize,
) -> Vec<FrameMetrics> {
    let layout = FrameLayout::default();
    let p = cfg.p_total_w();
    let srng = state.root.child(tag(scheme.key()));
    let mut records = Vec::new();
    let mut est_prev: Option<ChannelRealization> = None;
    for (f, ch) in state.channels.iter().enumerate() {
        let frng = srng.child(f as u64);
        let ctx = LinkContext {
            layout: &layout,
            impairments: &cfg.impairments,
            noise_var: cfg.noise_var,
            node_var: &state.node_var,
            csi_amplitude: csi_amplitude(p),
            normalized_weights: cfg.normalized_weights,
            receiver_csi: ReceiverCsi::Pilots,
            coding: Some((code, decoder)),
            batch,
            frame: f,
        };
        let result = (|| -> Result<Vec<FrameMetrics>> {
            let live = match &est_prev {
                None => baseline_precode(scheme, p, None)?,
                Some(est) => precode(scheme, &CsiSnapshot::causal(est), cfg.noise_var, p, &cfg.max_sinr)?,
            };
            let phases = draw_phase_errors(N_TX, &cfg.impairments, &mut frng.child(tag("phase")));
            let link = run_link(&live, ch, &ctx, &phases, &frng.child(tag("live")))?;
            est_prev = Some(link.csi);
            if f == 0 {
                return Ok(Vec::new());
            }
            let ideal_sol = if scheme.uses_max_sinr() {
                ideal_solution(cfg, scheme, ch)?
            } else {
                live.clone()
            };
            let ideal = sinr_post_of_solution(&ideal_sol, ch, cfg.noise_var)?;
            let causal = sinr_post_of_solution(&live, ch, cfg.noise_var)?;
            let model = model_sindr(cfg, &ideal_sol, ch, &state.node_var, &frng, f)?;
            Ok(live
                .streams
                .iter()
                .enumerate()
                .map(|(k, st)| FrameMetrics {
                    batch,
                    frame: f,
                    scheme,
                    stream: k,
                    ms: st.ms,
                    sinr_post_ideal_db: capped_db(ideal[k]),
                    sinr_post_causal_db: capped_db(causal[k]),
                    sindr_evm_measured_db: capped_db(link.streams[k].sindr_evm),
                    sindr_evm_model_db: capped_db(model[k]),
                    uncoded_frame_error: link.streams[k].uncoded_error,
                    coded_frame_error: link.streams[k].coded_error,
                    best_bs: state.best_bs[st.ms],
                    failed: false,
                })
                .collect())
        })();
        match result {
            Ok(r) => records.extend(r),
            Err(_) if f > 0 => records.extend(failed_records(scheme, batch, f, &state.best_bs)),
            Err(_) => {}
        }
    }
    records
}

fn sort_records(records: &mut [FrameMetrics]) {
    records.sort_by_key(|r| (r.batch, r.scheme, r.frame, r.stream));
}

pub fn run_batch_with(cfg: &CampaignConfig, batch: usize, code: &LdpcCode) -> BatchOutput {
    let decoder = MinSumDecoder::new(code);
    let state = batch_state(cfg, batch);
    let mut records: Vec<FrameMetrics> = cfg
        .schemes
        .iter()
        .flat_map(|&s| scheme_frames(cfg, s, &state, code, &decoder, batch))
        .collect();
    sort_records(&mut records);
    BatchOutput {
        records,
        channels: state.channels,
    }
}

pub fn run_batch(cfg: &CampaignConfig, batch: usize) -> Result<BatchOutput> {
    cfg.validate()?;
    let code = LdpcCode::construct(CODE_SEED)?;
    Ok(run_batch_with(cfg, batch, &code))
}

/// Runs all batches, in parallel when threads are available.
pub fn simulate(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    cfg.validate()?;
    let code = LdpcCode::construct(CODE_SEED)?;
    let batches: Vec<BatchOutput> = (0..cfg.n_batches)
        .into_par_iter()
        .map(|b| run_batch_with(cfg, b, &code))
        .collect();
    let mut records = Vec::new();
    let mut channels = Vec::new();
    for b in batches {
        records.extend(b.records);
        channels.extend(b.channels);
    }
    sort_records(&mut records);
    let summary_all = aggregate(&records, RecordFilter::All)?;
    let summary_best = aggregate(&records, RecordFilter::BestBs).unwrap_or_default();
    Ok(CampaignOutput {
        records,
        summary_all,
        summary_best,
        channels,
    })
}

pub fn cdf_file_name(scheme: Scheme, curve: Curve) -> String {
    format!("cdf_{}_{}.dat", scheme.key(), curve.key())
}

/// Writes one CDF file per curve from Best-BS samples; an empty Best-BS
/// selection falls back to all records.
pub fn write_cdfs(dir: &Path, records: &[FrameMetrics], schemes: &[Scheme], curves: &[Curve]) -> Result<()> {
    for &s in schemes {
        for &c in curves {
            let mut x = curve_samples(records, s, c, RecordFilter::BestBs);
            if x.is_empty() {
                x = curve_samples(records, s, c, RecordFilter::All);
            }
            if x.is_empty() {
                continue;
            }
            fs::write(dir.join(cdf_file_name(s, c)), cdf_text(&empirical_cdf(&x)?))?;
        }
    }
    Ok(())
}

/// Simulates and writes `metrics.csv`, `summary.txt`, the CDF files and,
/// if enabled, `trace.bin`.
pub fn run_campaign(cfg: &CampaignConfig, out_dir: impl AsRef<Path>) -> Result<CampaignOutput> {
    let dir = out_dir.as_ref();
    let out = simulate(cfg)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(&out.records))?;
    fs::write(dir.join("summary.txt"), out.summary_text())?;
    write_cdfs(dir, &out.records, &cfg.schemes, &cfg.emit)?;
    if cfg.save_trace {
        save_trace(dir.join("trace.bin"), &out.channels)?;
    }
    Ok(out)
}
