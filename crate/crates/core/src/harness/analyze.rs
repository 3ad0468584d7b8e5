//! Offline curves recomputed on a stored channel trace.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::campaign::{cdf_file_name, ideal_solution, identity_serving, model_sindr};
use super::config::CampaignConfig;
use crate::channel::{load_trace, ChannelRealization};
use crate::error::{Error, Result};
use crate::impairments::draw_node_noise;
use crate::metrics::{capped_db, cdf_text, empirical_cdf, Curve};
use crate::numerics::{tag, RngStream};
use crate::precoding::{precode, sinr_post_of_solution, CsiSnapshot, Scheme};
use crate::system::N_MS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalysisMode {
    Ideal,
    /// Precoders from the previous frame's stored channel.
    Causal,
    EvmModel,
}

impl AnalysisMode {
    pub fn curve(self) -> Curve {
        match self {
            AnalysisMode::Ideal => Curve::Ideal,
            AnalysisMode::Causal => Curve::Causal,
            AnalysisMode::EvmModel => Curve::Model,
        }
    }
}

impl fmt::Display for AnalysisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalysisMode::Ideal => "ideal",
            AnalysisMode::Causal => "causal",
            AnalysisMode::EvmModel => "evm-model",
        })
    }
}

impl FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(AnalysisMode::Ideal),
            "causal" => Ok(AnalysisMode::Causal),
            "evm-model" | "model" => Ok(AnalysisMode::EvmModel),
            _ => Err(Error::Config(format!("unknown analysis mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSample {
    pub batch: usize,
    pub frame: usize,
    pub stream: usize,
    pub best_bs: bool,
    pub value_db: f64,
}

fn split_batches(channels: Vec<ChannelRealization>) -> Vec<Vec<ChannelRealization>> {
    let mut out: Vec<Vec<ChannelRealization>> = Vec::new();
    for ch in channels {
        match out.last_mut() {
            Some(b) if b[0].batch_index == ch.batch_index => b.push(ch),
            _ => out.push(vec![ch]),
        }
    }
    out
}

/// Per-stream dB values of `mode` for every frame after the first.
pub fn analyze_channels(
    channels: Vec<ChannelRealization>,
    scheme: Scheme,
    mode: AnalysisMode,
    cfg: &CampaignConfig,
) -> Result<Vec<AnalysisSample>> {
    let batches = split_batches(channels);
    if mode == AnalysisMode::Causal && batches.iter().any(|b| b.len() < 2) {
        return Err(Error::Analysis(
            "causal analysis needs at least two frames per batch".into(),
        ));
    }
    let serving = identity_serving();
    let mut out = Vec::new();
    for frames in batches {
        let batch = frames[0].batch_index;
        let best_bs = frames[0].best_bs_flags(&serving);
        let root = RngStream::new(cfg.seed, &[batch as u64]);
        let node_var = draw_node_noise(N_MS, &cfg.impairments, &mut root.child(tag("thermal-level")));
        let srng = root.child(tag(scheme.key()));
        for f in 1..frames.len() {
            let ch = &frames[f];
            let (streams, values) = match mode {
                AnalysisMode::Ideal => {
                    let sol = ideal_solution(cfg, scheme, ch)?;
                    (sol.streams.clone(), sinr_post_of_solution(&sol, ch, cfg.noise_var)?)
                }
                AnalysisMode::Causal => {
                    let csi = CsiSnapshot::causal(&frames[f - 1]);
                    let sol = precode(scheme, &csi, cfg.noise_var, cfg.p_total_w(), &cfg.max_sinr)?;
                    (sol.streams.clone(), sinr_post_of_solution(&sol, ch, cfg.noise_var)?)
                }
                AnalysisMode::EvmModel => {
                    let sol = ideal_solution(cfg, scheme, ch)?;
                    let v = model_sindr(cfg, &sol, ch, &node_var, &srng.child(f as u64), f)?;
                    (sol.streams.clone(), v)
                }
            };
            for (k, (st, v)) in streams.iter().zip(values).enumerate() {
                out.push(AnalysisSample {
                    batch,
                    frame: f,
                    stream: k,
                    best_bs: best_bs[st.ms],
                    value_db: capped_db(v),
                });
            }
        }
    }
    Ok(out)
}

/// Loads a trace, recomputes one curve and writes its CDF file into
/// `out_dir`. Returns the samples.
pub fn analyze_trace(
    trace: impl AsRef<Path>,
    scheme: Scheme,
    mode: AnalysisMode,
    cfg: &CampaignConfig,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<AnalysisSample>> {
    let channels = load_trace(trace)?;
    let samples = analyze_channels(channels, scheme, mode, cfg)?;
    let mut x: Vec<f64> = samples.iter().filter(|s| s.best_bs).map(|s| s.value_db).collect();
    if x.is_empty() {
        x = samples.iter().map(|s| s.value_db).collect();
    }
    if x.is_empty() {
        return Err(Error::Analysis("trace has no frames after the first".into()));
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join(cdf_file_name(scheme, mode.curve())),
        cdf_text(&empirical_cdf(&x)?),
    )?;
    Ok(samples)
}
