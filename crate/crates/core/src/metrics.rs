//! EVM, SINDR_EVM, SINR-post, frame error rates, throughput and CDFs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{contract, Error, Result};
use crate::numerics::{db, C64};
use crate::precoding::Scheme;

/// Sentinel for a SINDR whose EVM is zero on every subcarrier, and the
/// magnitude used for non-positive or non-finite ratios.
pub const DB_CAP: f64 = 60.0;

/// EVM values below this count as zero error.
pub const EVM_FLOOR: f64 = 1e-6;

/// Linear ratio in dB. Zero, negative or NaN maps to `-DB_CAP`, infinity to
/// `DB_CAP`; finite positive values pass through.
pub fn capped_db(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        -DB_CAP
    } else if x.is_infinite() {
        DB_CAP
    } else {
        db(x)
    }
}

/// Per-subcarrier EVM of `received` against `reference`. Both grids are
/// time-major with `n_sc` subcarriers per symbol.
pub fn evm_per_subcarrier(received: &[C64], reference: &[C64], n_sc: usize) -> Result<Vec<f64>> {
    if received.len() != reference.len() {
        return Err(contract("received and reference grids differ in length"));
    }
    if n_sc == 0 || received.len() < n_sc || !received.len().is_multiple_of(n_sc) {
        return Err(contract("every subcarrier needs at least one symbol"));
    }
    let mut err = vec![0.0; n_sc];
    let mut pow = vec![0.0; n_sc];
    for (i, (r, s)) in received.iter().zip(reference).enumerate() {
        err[i % n_sc] += (r - s).norm_sqr();
        pow[i % n_sc] += s.norm_sqr();
    }
    err.iter()
        .zip(&pow)
        .map(|(e, p)| {
            if *p == 0.0 {
                Err(contract("reference symbols have zero power"))
            } else {
                Ok((e / p).sqrt())
            }
        })
        .collect()
}

/// Power-weighted inverse squared EVM. With `normalize` the weights are
/// scaled to sum to one. EVM below `EVM_FLOOR` everywhere gives the
/// `DB_CAP` sentinel.
pub fn sindr_evm_with(evm: &[f64], p: &[f64], normalize: bool) -> Result<f64> {
    if evm.len() != p.len() || evm.is_empty() {
        return Err(contract("EVM and weight vectors must have equal nonzero length"));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(contract("weights must be non-negative"));
    }
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return Err(contract("all weights are zero"));
    }
    if evm.iter().all(|&e| e < EVM_FLOOR) {
        return Ok(crate::numerics::from_db(DB_CAP));
    }
    let norm = if normalize { total } else { 1.0 };
    Ok(evm
        .iter()
        .zip(p)
        .map(|(&e, &w)| (w / norm) / e.max(EVM_FLOOR).powi(2))
        .sum())
}

pub fn sindr_evm(evm: &[f64], p: &[f64]) -> Result<f64> {
    sindr_evm_with(evm, p, true)
}

/// `Σ S_i / (Σ I_i + noise)`.
pub fn sinr_post(s: &[f64], i: &[f64], noise: f64) -> Result<f64> {
    if s.len() != i.len() {
        return Err(contract("signal and interference vectors differ in length"));
    }
    let den = i.iter().sum::<f64>() + noise;
    if !(den > 0.0) {
        return Err(contract("interference plus noise must be positive"));
    }
    Ok(s.iter().sum::<f64>() / den)
}

pub fn throughput(n_s: usize, fer: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fer) {
        return Err(contract(format!("FER {fer} outside [0, 1]")));
    }
    Ok(n_s as f64 * (1.0 - fer))
}

/// Sorted `(value, k/n)` pairs.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(contract("empirical CDF of an empty sample"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.into_iter()
        .enumerate()
        .map(|(k, x)| (x, (k + 1) as f64 / n))
        .collect())
}

/// Empirical median.
pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameMetrics {
    pub batch: usize,
    pub frame: usize,
    pub scheme: Scheme,
    pub stream: usize,
    pub ms: usize,
    pub sinr_post_ideal_db: f64,
    pub sinr_post_causal_db: f64,
    pub sindr_evm_measured_db: f64,
    pub sindr_evm_model_db: f64,
    pub uncoded_frame_error: bool,
    pub coded_frame_error: bool,
    pub best_bs: bool,
    /// Set when the frame could not be processed; error flags are then true.
    pub failed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curve {
    Ideal,
    Causal,
    Measured,
    Model,
}

impl Curve {
    pub const ALL: [Curve; 4] = [Curve::Ideal, Curve::Causal, Curve::Measured, Curve::Model];

    pub fn key(self) -> &'static str {
        match self {
            Curve::Ideal => "ideal",
            Curve::Causal => "causal",
            Curve::Measured => "measured",
            Curve::Model => "model",
        }
    }

    pub fn of(self, m: &FrameMetrics) -> f64 {
        match self {
            Curve::Ideal => m.sinr_post_ideal_db,
            Curve::Causal => m.sinr_post_causal_db,
            Curve::Measured => m.sindr_evm_measured_db,
            Curve::Model => m.sindr_evm_model_db,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFilter {
    All,
    BestBs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSummary {
    pub records: usize,
    pub fer: f64,
    pub c_fer: f64,
    pub rate: f64,
    pub c_rate: f64,
}

pub fn aggregate(records: &[FrameMetrics], filter: RecordFilter) -> Result<BTreeMap<Scheme, SchemeSummary>> {
    let mut counts: BTreeMap<Scheme, (usize, usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| filter == RecordFilter::All || r.best_bs) {
        let e = counts.entry(r.scheme).or_default();
        e.0 += 1;
        e.1 += r.uncoded_frame_error as usize;
        e.2 += r.coded_frame_error as usize;
    }
    if counts.is_empty() {
        return Err(Error::Analysis("no records in the selection".into()));
    }
    counts
        .into_iter()
        .map(|(scheme, (n, e, ce))| {
            let fer = e as f64 / n as f64;
            let c_fer = ce as f64 / n as f64;
            Ok((
                scheme,
                SchemeSummary {
                    records: n,
                    fer,
                    c_fer,
                    rate: throughput(scheme.n_s(), fer)?,
                    c_rate: throughput(scheme.n_s(), c_fer)?,
                },
            ))
        })
        .collect()
}

pub const METRICS_CSV_HEADER: &str = "batch,frame,scheme,stream,ms,sinr_post_ideal_db,sinr_post_causal_db,\
sindr_evm_measured_db,sindr_evm_model_db,uncoded_frame_error,coded_frame_error,best_bs,failed";

pub fn metrics_csv(records: &[FrameMetrics]) -> String {
    let mut s = String::with_capacity(records.len() * 96);
    s.push_str(METRICS_CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
            r.batch,
            r.frame,
            r.scheme.key(),
            r.stream,
            r.ms,
            r.sinr_post_ideal_db,
            r.sinr_post_causal_db,
            r.sindr_evm_measured_db,
            r.sindr_evm_model_db,
            r.uncoded_frame_error as u8,
            r.coded_frame_error as u8,
            r.best_bs as u8,
            r.failed as u8,
        );
    }
    s
}

/// Two-column `value probability` text.
pub fn cdf_text(points: &[(f64, f64)]) -> String {
    let mut s = String::with_capacity(points.len() * 24);
    for (x, p) in points {
        let _ = writeln!(s, "{x:.4} {p:.6}");
    }
    s
}

/// Table-1-shaped text summary.
pub fn summary_text(all: &BTreeMap<Scheme, SchemeSummary>, best: &BTreeMap<Scheme, SchemeSummary>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} | {:^13} | {:^27}", "", "All data", "Best BS");
    let _ = writeln!(
        s,
        "{:<10} | {:>5} {:>6} | {:>5} {:>6} {:>5} {:>7}",
        "Method", "FER", "c-FER", "FER", "c-FER", "rate", "c-rate"
    );
    for scheme in Scheme::ALL {
        let Some(a) = all.get(&scheme) else { continue };
        let (bf, bcf, br, bcr) = best
            .get(&scheme)
            .map(|b| {
                (
                    format!("{:.2}", b.fer),
                    format!("{:.2}", b.c_fer),
                    format!("{:.2}", b.rate),
                    format!("{:.2}", b.c_rate),
                )
            })
            .unwrap_or_else(|| ("-".into(), "-".into(), "-".into(), "-".into()));
        let _ = writeln!(
            s,
            "{:<10} | {:>5.2} {:>6.2} | {:>5} {:>6} {:>5} {:>7}",
            scheme.label(),
            a.fer,
            a.c_fer,
            bf,
            bcf,
            br,
            bcr
        );
    }
    s
}
