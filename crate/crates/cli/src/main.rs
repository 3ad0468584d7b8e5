use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use linksim::coding::LdpcCode;
use linksim::harness::{analyze_trace, parse_schemes, run_campaign, AnalysisMode, CampaignConfig, CODE_SEED};
use linksim::numerics::RngStream;
use linksim::phy::{demod_pilot_sequence, qam16_point, PILOT_SEED};
use linksim::precoding::Scheme;
use linksim::system::{N_SUBCARRIERS, N_TX};

#[derive(Parser)]
#[command(name = "linksim", version, about = "Three-cell MIMO-OFDM downlink link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a measurement campaign.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        batches: Option<usize>,
        /// Comma-separated scheme keys.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the channel trace.
        #[arg(long)]
        save_trace: bool,
    },
    /// Recompute one curve on a stored channel trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        mode: AnalysisMode,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the QAM map, the demodulation pilots and the LDPC code.
    DumpTables {
        /// Write qam16.txt, pilots.txt and ldpc.alist here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<CampaignConfig> {
    match path {
        None => Ok(CampaignConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            CampaignConfig::parse(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn qam_table() -> String {
    let mut s = String::from("# label bits re im\n");
    for l in 0..16u8 {
        let p = qam16_point(l);
        let _ = writeln!(s, "{l:2} {l:04b} {:+.12} {:+.12}", p.re, p.im);
    }
    s
}

fn pilot_table() -> String {
    let rng = RngStream::new(PILOT_SEED, &[]);
    let mut s = String::from("# stream subcarrier re im\n");
    for st in 0..N_TX {
        for (sc, p) in demod_pilot_sequence(&rng, st, N_SUBCARRIERS).iter().enumerate() {
            let _ = writeln!(s, "{st} {sc:2} {:+.12} {:+.12}", p.re, p.im);
        }
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            batches,
            schemes,
            out,
            save_trace,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = batches {
                cfg.n_batches = b;
            }
            if let Some(s) = schemes {
                cfg.schemes = parse_schemes(&s)?;
                if cfg.schemes.is_empty() {
                    bail!("--schemes needs at least one scheme");
                }
            }
            cfg.save_trace |= save_trace;
            let result = run_campaign(&cfg, &out)?;
            print!("{}", result.summary_text());
            eprintln!("wrote {} records to {}", result.records.len(), out.display());
        }
        Command::Analyze {
            trace,
            scheme,
            mode,
            out,
            config,
            seed,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let samples = analyze_trace(&trace, scheme, mode, &cfg, &out)?;
            eprintln!(
                "{} samples of {mode} for {scheme} written to {}",
                samples.len(),
                out.display()
            );
        }
        Command::DumpTables { out } => {
            let alist = LdpcCode::construct(CODE_SEED)?.to_alist();
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("qam16.txt"), qam_table())?;
                    fs::write(dir.join("pilots.txt"), pilot_table())?;
                    fs::write(dir.join("ldpc.alist"), alist)?;
                }
                None => {
                    println!("## qam16\n{}", qam_table());
                    println!("## pilots\n{}", pilot_table());
                    print!("## ldpc\n{alist}");
                }
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
