//! Campaign configuration and its flat `key = value` text form.

use std::fmt::Write as _;

use crate::channel::{ChannelModelConfig, LinkBudget};
use crate::error::{Error, Result};
use crate::impairments::ImpairmentConfig;
use crate::metrics::Curve;
use crate::numerics::dbm_to_watts;
use crate::precoding::{MaxSinrOptions, Scheme};
use crate::system::{NOISE_VAR_NOMINAL, P_TOTAL_DBM};

/// Seed of the LDPC parity structure shared by every run.
pub const CODE_SEED: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignConfig {
    pub n_batches: usize,
    pub frames_per_batch: usize,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    pub channel: ChannelModelConfig,
    pub impairments: ImpairmentConfig,
    pub p_total_dbm: f64,
    /// Nominal noise variance known to precoders and receivers.
    pub noise_var: f64,
    pub max_sinr: MaxSinrOptions,
    /// Curves written as CDF files.
    pub emit: Vec<Curve>,
    /// Payload symbols per subcarrier in the EVM-model run.
    pub model_payload_symbols: usize,
    /// Normalize the SINDR_EVM power weights to sum to one.
    pub normalized_weights: bool,
    pub save_trace: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n_batches: 116,
            frames_per_batch: 5,
            schemes: Scheme::ALL.to_vec(),
            seed: 2011,
            channel: ChannelModelConfig::default(),
            impairments: ImpairmentConfig::default(),
            p_total_dbm: P_TOTAL_DBM,
            noise_var: NOISE_VAR_NOMINAL,
            max_sinr: MaxSinrOptions::default(),
            emit: Curve::ALL.to_vec(),
            model_payload_symbols: 400,
            normalized_weights: true,
            save_trace: false,
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got '{v}'")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse '{v}'"))
}

pub fn parse_schemes(v: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let s: Scheme = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

fn parse_curves(v: &str) -> std::result::Result<Vec<Curve>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            Curve::ALL
                .into_iter()
                .find(|c| c.key() == p)
                .ok_or_else(|| format!("unknown curve '{p}'"))
        })
        .collect()
}

impl CampaignConfig {
    pub fn p_total_w(&self) -> f64 {
        dbm_to_watts(self.p_total_dbm)
    }

    pub fn budget(&self) -> LinkBudget {
        LinkBudget {
            p_total_w: self.p_total_w(),
            noise_var: self.noise_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        if self.frames_per_batch < 2 {
            return Err(Error::Config("frames_per_batch must be at least 2".into()));
        }
        if self.n_batches == 0 {
            return Err(Error::Config("n_batches must be positive".into()));
        }
        if !(self.noise_var > 0.0) || !self.p_total_dbm.is_finite() {
            return Err(Error::Config(
                "noise_var must be positive and p_total_dbm finite".into(),
            ));
        }
        if self.model_payload_symbols < 2 || !self.model_payload_symbols.is_multiple_of(2) {
            return Err(Error::Config(
                "model_payload_symbols must be even and at least 2".into(),
            ));
        }
        if !(self.max_sinr.tol > 0.0) || self.max_sinr.max_iters == 0 {
            return Err(Error::Config(
                "max-SINR tolerance and iteration cap must be positive".into(),
            ));
        }
        self.channel.validate()?;
        self.impairments.validate()
    }

    /// Applies one setting. `noise_var` sets both the nominal and the actual
    /// thermal level; `thermal_var` only the actual one.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let r: std::result::Result<(), String> = (|| {
            match key.trim() {
                "n_batches" | "batches" => self.n_batches = parse_num(v)?,
                "frames_per_batch" => self.frames_per_batch = parse_num(v)?,
                "schemes" => self.schemes = parse_schemes(v).map_err(|e| e.to_string())?,
                "seed" => self.seed = parse_num(v)?,
                "n_taps" => self.channel.n_taps = parse_num(v)?,
                "pdp_decay" => self.channel.pdp_decay = parse_num(v)?,
                "temporal_rho" => self.channel.temporal_rho = parse_num(v)?,
                "serving_snr_low_db" => self.channel.serving_snr_range_db.0 = parse_num(v)?,
                "serving_snr_high_db" => self.channel.serving_snr_range_db.1 = parse_num(v)?,
                "cross_gain_db" => self.channel.cross_gain_db = parse_num(v)?,
                "cross_gain_spread_db" => self.channel.cross_gain_spread_db = parse_num(v)?,
                "tx_evm_db" => self.impairments.tx_evm_db = parse_num(v)?,
                "rx_evm_db" => self.impairments.rx_evm_db = parse_num(v)?,
                "phase_std_deg" => self.impairments.phase_std_deg = parse_num(v)?,
                "thermal_var" => self.impairments.thermal_var = parse_num(v)?,
                "noise_jitter_db" => self.impairments.noise_jitter_db = parse_num(v)?,
                "tx_noise_enabled" => self.impairments.tx_noise_enabled = parse_bool(v)?,
                "rx_noise_enabled" => self.impairments.rx_noise_enabled = parse_bool(v)?,
                "phase_enabled" => self.impairments.phase_enabled = parse_bool(v)?,
                "thermal_enabled" => self.impairments.thermal_enabled = parse_bool(v)?,
                "p_total_dbm" => self.p_total_dbm = parse_num(v)?,
                "noise_var" => {
                    self.noise_var = parse_num(v)?;
                    self.impairments.thermal_var = self.noise_var;
                }
                "max_sinr_tol" => self.max_sinr.tol = parse_num(v)?,
                "max_sinr_iters" => self.max_sinr.max_iters = parse_num(v)?,
                "max_sinr_track_best" => self.max_sinr.track_best = parse_bool(v)?,
                "power_normalization" => {
                    self.max_sinr.power_normalization = v.parse().map_err(|e: Error| e.to_string())?
                }
                "emit" => self.emit = parse_curves(v)?,
                "model_payload_symbols" => self.model_payload_symbols = parse_num(v)?,
                "normalized_weights" => self.normalized_weights = parse_bool(v)?,
                "save_trace" => self.save_trace = parse_bool(v)?,
                other => return Err(format!("unknown key '{other}'")),
            }
            Ok(())
        })();
        r.map_err(Error::Config)
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected key = value, got '{line}'"),
                });
            };
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Round-trippable text form of every key.
    pub fn to_text(&self) -> String {
        let c = &self.channel;
        let m = &self.impairments;
        let mut s = String::new();
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.key()).collect();
        let emit: Vec<&str> = self.emit.iter().map(|c| c.key()).collect();
        let pn = match self.max_sinr.power_normalization {
            crate::precoding::PowerNormalization::SystemTotal => "system-total",
            crate::precoding::PowerNormalization::PerBs => "per-bs",
        };
        let lines: Vec<(&str, String)> = vec![
            ("n_batches", self.n_batches.to_string()),
            ("frames_per_batch", self.frames_per_batch.to_string()),
            ("schemes", schemes.join(",")),
            ("seed", self.seed.to_string()),
            ("n_taps", c.n_taps.to_string()),
            ("pdp_decay", format!("{:?}", c.pdp_decay)),
            ("temporal_rho", format!("{:?}", c.temporal_rho)),
            ("serving_snr_low_db", format!("{:?}", c.serving_snr_range_db.0)),
            ("serving_snr_high_db", format!("{:?}", c.serving_snr_range_db.1)),
            ("cross_gain_db", format!("{:?}", c.cross_gain_db)),
            ("cross_gain_spread_db", format!("{:?}", c.cross_gain_spread_db)),
            ("tx_evm_db", format!("{:?}", m.tx_evm_db)),
            ("rx_evm_db", format!("{:?}", m.rx_evm_db)),
            ("phase_std_deg", format!("{:?}", m.phase_std_deg)),
            ("noise_var", format!("{:?}", self.noise_var)),
            ("thermal_var", format!("{:?}", m.thermal_var)),
            ("noise_jitter_db", format!("{:?}", m.noise_jitter_db)),
            ("tx_noise_enabled", m.tx_noise_enabled.to_string()),
            ("rx_noise_enabled", m.rx_noise_enabled.to_string()),
            ("phase_enabled", m.phase_enabled.to_string()),
            ("thermal_enabled", m.thermal_enabled.to_string()),
            ("p_total_dbm", format!("{:?}", self.p_total_dbm)),
            ("max_sinr_tol", format!("{:?}", self.max_sinr.tol)),
            ("max_sinr_iters", self.max_sinr.max_iters.to_string()),
            ("max_sinr_track_best", self.max_sinr.track_best.to_string()),
            ("power_normalization", pn.to_string()),
            ("emit", emit.join(",")),
            ("model_payload_symbols", self.model_payload_symbols.to_string()),
            ("normalized_weights", self.normalized_weights.to_string()),
            ("save_trace", self.save_trace.to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
