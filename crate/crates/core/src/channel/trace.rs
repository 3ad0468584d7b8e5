//! Channel trace files.
//!
//! Binary layout (all integers little-endian `u32`):
//!
//! ```text
//! magic      8 bytes  "CHTRACE\0"
//! version    u32      1
//! n_batches  u32
//! n_frames   u32      frames per batch
//! n_sc       u32      38
//! n_rx       u32      6
//! n_tx       u32      6
//! payload    f64 LE (re, im) pairs in [batch][frame][subcarrier][rx][tx] order
//! ```
//!
//! The CSV variant has the header `batch,frame,subcarrier,rx,tx,re,im` and
//! one coefficient per row. Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::system::{N_RX, N_SUBCARRIERS, N_TX};

pub const TRACE_MAGIC: &[u8; 8] = b"CHTRACE\0";
pub const TRACE_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 6 * 4;
const PER_FRAME: usize = N_SUBCARRIERS * N_RX * N_TX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub version: u32,
    pub n_batches: u32,
    pub n_frames_per_batch: u32,
    pub n_subcarriers: u32,
    pub n_rx: u32,
    pub n_tx: u32,
}

/// Checks that realizations form a complete batch-major grid.
fn grid_shape(realizations: &[ChannelRealization]) -> Result<(usize, usize)> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::Contract("cannot save an empty trace".into()))?;
    let batch0 = first.batch_index;
    let frames = realizations.iter().take_while(|r| r.batch_index == batch0).count();
    if !realizations.len().is_multiple_of(frames) {
        return Err(Error::Contract("realizations do not form equal-length batches".into()));
    }
    for (i, r) in realizations.iter().enumerate() {
        let (b, f) = (i / frames, i % frames);
        if r.frame_index != realizations[b * frames].frame_index + f
            || r.batch_index != realizations[b * frames].batch_index
        {
            return Err(Error::Contract(format!(
                "realization {i} is out of [batch][frame] order"
            )));
        }
    }
    Ok((realizations.len() / frames, frames))
}

pub fn save_trace(path: impl AsRef<Path>, realizations: &[ChannelRealization]) -> Result<()> {
    let (n_batches, n_frames) = grid_shape(realizations)?;
    let mut buf = Vec::with_capacity(HEADER_LEN + realizations.len() * PER_FRAME * 16);
    buf.extend_from_slice(TRACE_MAGIC);
    for v in [
        TRACE_VERSION,
        n_batches as u32,
        n_frames as u32,
        N_SUBCARRIERS as u32,
        N_RX as u32,
        N_TX as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for r in realizations {
        for z in r.as_flat() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

fn parse_header(bytes: &[u8]) -> Result<TraceHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..8] != TRACE_MAGIC {
        return Err(Error::MalformedHeader("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let h = TraceHeader {
        version: word(0),
        n_batches: word(1),
        n_frames_per_batch: word(2),
        n_subcarriers: word(3),
        n_rx: word(4),
        n_tx: word(5),
    };
    if h.version != TRACE_VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {}", h.version)));
    }
    if h.n_batches == 0 || h.n_frames_per_batch == 0 {
        return Err(Error::MalformedHeader("empty trace".into()));
    }
    if h.n_subcarriers as usize != N_SUBCARRIERS || h.n_rx as usize != N_RX || h.n_tx as usize != N_TX {
        return Err(Error::DimensionMismatch(format!(
            "trace is {}×{}×{}, expected {N_SUBCARRIERS}×{N_RX}×{N_TX}",
            h.n_subcarriers, h.n_rx, h.n_tx
        )));
    }
    Ok(h)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<ChannelRealization>> {
    let bytes = fs::read(path)?;
    let h = parse_header(&bytes)?;
    let n_real = h.n_batches as usize * h.n_frames_per_batch as usize;
    let expected = HEADER_LEN + n_real * PER_FRAME * 16;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let mut out = Vec::with_capacity(n_real);
    let mut chunks = bytes[HEADER_LEN..].chunks_exact(16);
    for i in 0..n_real {
        let h_flat: Vec<C64> = (&mut chunks)
            .take(PER_FRAME)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let frames = h.n_frames_per_batch as usize;
        out.push(ChannelRealization::from_flat(h_flat, i / frames, i % frames)?);
    }
    Ok(out)
}

pub fn save_trace_csv(path: impl AsRef<Path>, realizations: &[ChannelRealization]) -> Result<()> {
    let (_, n_frames) = grid_shape(realizations)?;
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "batch,frame,subcarrier,rx,tx,re,im")?;
    for (i, r) in realizations.iter().enumerate() {
        for sc in 0..N_SUBCARRIERS {
            for rx in 0..N_RX {
                for tx in 0..N_TX {
                    let z = r.at(sc, rx, tx);
                    writeln!(
                        f,
                        "{},{},{sc},{rx},{tx},{:?},{:?}",
                        i / n_frames,
                        i % n_frames,
                        z.re,
                        z.im
                    )?;
                }
            }
        }
    }
    f.flush()?;
    Ok(())
}

pub fn load_trace_csv(path: impl AsRef<Path>) -> Result<Vec<ChannelRealization>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, hdr)) if hdr.trim() == "batch,frame,subcarrier,rx,tx,re,im" => {}
        _ => return Err(Error::MalformedHeader("missing CSV header".into())),
    }
    let mut frames: Vec<((usize, usize), ChannelRealization)> = Vec::new();
    for (ln, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: ln + 1, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(parse_err(format!("expected 7 columns, got {}", cols.len())));
        }
        let idx: Vec<usize> = cols[..5]
            .iter()
            .map(|c| c.parse::<usize>().map_err(|e| parse_err(e.to_string())))
            .collect::<Result<_>>()?;
        let re: f64 = cols[5]
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
        let im: f64 = cols[6]
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
        let (b, fr, sc, rx, tx) = (idx[0], idx[1], idx[2], idx[3], idx[4]);
        if sc >= N_SUBCARRIERS || rx >= N_RX || tx >= N_TX {
            return Err(Error::DimensionMismatch(format!(
                "line {}: index ({sc},{rx},{tx}) out of range",
                ln + 1
            )));
        }
        let pos = match frames.iter().position(|(k, _)| *k == (b, fr)) {
            Some(p) => p,
            None => {
                frames.push(((b, fr), ChannelRealization::zeros(b, fr)));
                frames.len() - 1
            }
        };
        frames[pos].1.set(sc, rx, tx, C64::new(re, im));
    }
    if frames.is_empty() {
        return Err(Error::Truncated { expected: 1, actual: 0 });
    }
    frames.sort_by_key(|(k, _)| *k);
    Ok(frames.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, evolve_channel, ChannelModelConfig, LinkGeometry};
    use crate::numerics::RngStream;

    fn sample(n_batches: usize, n_frames: usize) -> Vec<ChannelRealization> {
        let cfg = ChannelModelConfig::default();
        let geom = LinkGeometry::uniform(1e-3);
        let mut out = Vec::new();
        for b in 0..n_batches {
            let mut ch = draw_channel(&geom, &cfg, &mut RngStream::new(1, &[b as u64]), b);
            for f in 0..n_frames {
                if f > 0 {
                    ch = evolve_channel(&ch, &geom, &cfg, &mut RngStream::new(1, &[b as u64, f as u64]));
                }
                out.push(ch.clone());
            }
        }
        out
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        let data = sample(1, 5);
        save_trace(&p, &data).unwrap();
        assert_eq!(load_trace(&p).unwrap(), data);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let data = sample(2, 2);
        save_trace_csv(&p, &data).unwrap();
        assert_eq!(load_trace_csv(&p).unwrap(), data);
    }

    #[test]
    fn wrong_subcarrier_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        save_trace(&p, &sample(1, 1)).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[8 + 12..8 + 16].copy_from_slice(&64u32.to_le_bytes());
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_trace(&p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn truncated_and_bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        save_trace(&p, &sample(1, 2)).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(load_trace(&p), Err(Error::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&p, bad).unwrap();
        assert!(matches!(load_trace(&p), Err(Error::MalformedHeader(_))));
        fs::write(&p, &bytes[..10]).unwrap();
        assert!(matches!(load_trace(&p), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn empty_save_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(save_trace(dir.path().join("x"), &[]).is_err());
    }
}
