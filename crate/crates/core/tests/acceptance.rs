//! Acceptance run. Prints one PASS/FAIL line per criterion; exits nonzero on
//! failure only when `ACCEPTANCE_STRICT` is set.

use std::time::{Duration, Instant};

use linksim::channel::{draw_channel, draw_geometry, load_trace, save_trace, ChannelRealization};
use linksim::coding::{LdpcCode, MinSumDecoder};
use linksim::harness::{
    run_campaign, run_link, simulate, CampaignConfig, CampaignOutput, LinkContext, ReceiverCsi, CODE_SEED,
};
use linksim::impairments::ImpairmentConfig;
use linksim::metrics::{median, sindr_evm, sinr_post, throughput, Curve, RecordFilter};
use linksim::numerics::{db, dot, CMatrix, CVec, RngStream, C64};
use linksim::phy::{hard_decisions, qam16_demap, qam16_map, FrameLayout};
use linksim::precoding::{
    baseline_precode, comp_precode, embed_ia_in_comp, max_sinr_ia, max_sinr_solution, max_sinr_subcarrier,
    sinr_post_of_solution, solution_value, CsiSnapshot, MaxSinrOptions, Scheme, SchemeSolution,
};
use linksim::system::{N_MS, N_SUBCARRIERS, N_TX};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn leakage_db(g: &[Vec<CMatrix>], p: &[f64], u: &[CVec], v: &[CVec], k: usize) -> f64 {
    let mut s = 0.0;
    let mut i = 0.0;
    for j in 0..g.len() {
        let x = p[j] * dot(&u[k], &g[k][j].mul_vec(&v[j])).norm_sqr();
        if j == k {
            s = x;
        } else {
            i += x;
        }
    }
    db(i / s)
}

fn ia_nulling() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(101, &[]);
    let opts = MaxSinrOptions::default();
    let p = [1.0 / 3.0; 3];
    let n = 500;
    let mut good = 0;
    let mut worst = Vec::with_capacity(n);
    for _ in 0..n {
        let g: Vec<Vec<CMatrix>> = (0..3)
            .map(|_| (0..3).map(|_| CMatrix::from_rows(2, 2, &rng.cgauss(4, 1.0))).collect())
            .collect();
        let sol = max_sinr_subcarrier(&g, &p, 1e-9, &opts, None).expect("max-SINR on a random channel");
        let l = (0..3)
            .map(|k| leakage_db(&g, &p, &sol.u, &sol.v, k))
            .fold(f64::NEG_INFINITY, f64::max);
        worst.push(l);
        if l < -30.0 {
            good += 1;
        }
    }
    let t = start.elapsed();
    let frac = good as f64 / n as f64;
    let med = median(&worst).unwrap();
    outcome(
        frac >= 0.95 && t < Duration::from_secs(30),
        format!(
            "{good}/{n} draws below -30 dB leakage ({:.1}%), median worst-user leakage {med:.1} dB, {t:.1?}",
            100.0 * frac
        ),
    )
}

fn comp_dominance() -> Outcome {
    let cfg = CampaignConfig::default();
    let budget = cfg.budget();
    let opts = MaxSinrOptions::default();
    let p = cfg.p_total_w();
    let nv = cfg.noise_var;
    let mut ia_all = Vec::new();
    let mut comp_all = Vec::new();
    let mut contained = 0;
    let n = 500;
    for d in 0..n {
        let rng = RngStream::new(202, &[d as u64]);
        let geom = draw_geometry(&cfg.channel, &budget, &mut rng.child(0));
        let h = draw_channel(&geom, &cfg.channel, &mut rng.child(1), d);
        let csi = CsiSnapshot::ideal(&h);
        let ia = max_sinr_ia(&csi, nv, p, &opts).expect("IA");
        let comp = comp_precode(&csi, nv, p, &opts).expect("CoMP");
        ia_all.extend(sinr_post_of_solution(&ia, &h, nv).unwrap().into_iter().map(db));
        comp_all.extend(sinr_post_of_solution(&comp, &h, nv).unwrap().into_iter().map(db));
        let init = embed_ia_in_comp(&ia);
        let from_ia = max_sinr_solution(Scheme::Comp, &csi, nv, p, &opts, Some(&init)).expect("CoMP from IA");
        let (vi, vc) = (solution_value(&ia, &h, nv), solution_value(&from_ia, &h, nv));
        if vc >= vi * (1.0 - 1e-12) {
            contained += 1;
        }
    }
    let (mi, mc) = (median(&ia_all).unwrap(), median(&comp_all).unwrap());
    outcome(
        mc > mi && contained == n,
        format!("median SINR-post CoMP {mc:.2} dB vs IA {mi:.2} dB, containment on {contained}/{n} draws"),
    )
}

fn flat_two_branch(gains: [C64; 2]) -> ChannelRealization {
    let mut h = ChannelRealization::zeros(0, 0);
    for sc in 0..N_SUBCARRIERS {
        h.set(sc, 0, 0, gains[0]);
        h.set(sc, 1, 0, gains[1]);
    }
    h
}

/// TDMA-SIMO reduced to its first slot: BS 0 antenna 0 to MS 0.
fn single_stream(p: f64) -> SchemeSolution {
    let mut sol = baseline_precode(Scheme::TdmaSimo, p, None).unwrap();
    sol.streams.truncate(1);
    sol.precoders.truncate(1);
    sol.combiners.truncate(1);
    sol.power.truncate(1);
    sol
}

/// SINDR_EVM (dB) and SINR-post (dB) of one stream at thermal SNR `snr_db`
/// per receive antenna.
fn single_link(imp: &ImpairmentConfig, snr_db: f64, seed: u64) -> (f64, f64) {
    let p = 0.0316;
    let nv = 1e-10;
    let mut rng = RngStream::new(seed, &[]);
    let amp = (10f64.powf(snr_db / 10.0) * nv / p).sqrt();
    let gains = [
        C64::from_polar(amp, 2.0 * std::f64::consts::PI * rng.uniform()),
        C64::from_polar(amp * 0.8, 1.0),
    ];
    let h = flat_two_branch(gains);
    let sol = single_stream(p);
    let layout = FrameLayout {
        payload_symbols: 1000,
        ..FrameLayout::default()
    };
    let ctx = LinkContext {
        layout: &layout,
        impairments: imp,
        noise_var: nv,
        node_var: &[nv; N_MS],
        csi_amplitude: (p / 2.0).sqrt(),
        normalized_weights: true,
        receiver_csi: ReceiverCsi::Ideal,
        coding: None,
        batch: 0,
        frame: 0,
    };
    let phases = linksim::impairments::draw_phase_errors(N_TX, imp, &mut rng.child(1));
    let out = run_link(&sol, &h, &ctx, &phases, &rng.child(2)).unwrap();
    let post = sinr_post_of_solution(&sol, &h, nv).unwrap()[0];
    (db(out.streams[0].sindr_evm), db(post))
}

fn distortion_floor() -> Outcome {
    let start = Instant::now();
    let dirty = ImpairmentConfig {
        noise_jitter_db: 0.0,
        ..ImpairmentConfig::default()
    };
    let oracle = -db(10f64.powf(-3.4) + 10f64.powf(-4.0));
    let floors: Vec<f64> = (0..5).map(|s| single_link(&dirty, 60.0, 300 + s).0).collect();
    let floor = floors.iter().sum::<f64>() / floors.len() as f64;
    let clean = ImpairmentConfig::clean();
    let mut worst = 0.0f64;
    for (s, snr) in [(0u64, 60.0), (1, 30.0), (2, 10.0)] {
        let (evm, post) = single_link(&clean, snr, 310 + s);
        worst = worst.max((evm - post).abs());
    }
    let t = start.elapsed();
    outcome(
        (floor - oracle).abs() <= 1.5 && worst <= 0.1 && t < Duration::from_secs(10),
        format!(
            "floor {floor:.2} dB (oracle {oracle:.2} dB), impairments off |SINDR_EVM - SINR-post| <= {worst:.3} dB, {t:.1?}"
        ),
    )
}

fn gap(out: &CampaignOutput, s: Scheme, filter: RecordFilter) -> f64 {
    median(&out.curve(s, Curve::Ideal, filter)).unwrap() - median(&out.curve(s, Curve::Measured, filter)).unwrap()
}

fn impairment_gap(out: &CampaignOutput, t: Duration) -> Outcome {
    let f = RecordFilter::BestBs;
    let (c, i, s) = (
        gap(out, Scheme::Comp, f),
        gap(out, Scheme::Ia, f),
        gap(out, Scheme::TdmaSimo, f),
    );
    let (ca, ia, sa) = (
        gap(out, Scheme::Comp, RecordFilter::All),
        gap(out, Scheme::Ia, RecordFilter::All),
        gap(out, Scheme::TdmaSimo, RecordFilter::All),
    );
    let comp_over_ia = c > i;
    let simo_smallest = s < c && s < i;
    outcome(
        comp_over_ia && simo_smallest && t < Duration::from_secs(600),
        format!(
            "ideal-minus-measured median gap Best-BS: CoMP {c:.2}, IA {i:.2}, TDMA-SIMO {s:.2} dB \
             (all data {ca:.2}/{ia:.2}/{sa:.2}); CoMP>IA {comp_over_ia}, TDMA-SIMO smallest {simo_smallest}; campaign {t:.0?}"
        ),
    )
}

fn table_structure(out: &CampaignOutput) -> Outcome {
    let b = &out.summary_best;
    let get = |s: Scheme| &b[&s];
    let order = [Scheme::Comp, Scheme::Ia, Scheme::TdmaMimo, Scheme::TdmaSimo];
    let rate_order = order.windows(2).all(|w| get(w[0]).rate >= get(w[1]).rate);
    let c_rate_order = order.windows(2).all(|w| get(w[0]).c_rate >= get(w[1]).c_rate);
    let all_fer = get(Scheme::AllMimo).fer > get(Scheme::AllSimo).fer;
    let coding = out
        .summary_all
        .values()
        .chain(out.summary_best.values())
        .all(|x| x.c_fer <= x.fer);
    let c_rates = get(Scheme::Ia).c_rate > 2.9 && get(Scheme::Comp).c_rate > 2.9;
    println!(
        "info: FER(All-SIMO) {:.2} > FER(IA) {:.2}: {}",
        get(Scheme::AllSimo).fer,
        get(Scheme::Ia).fer,
        get(Scheme::AllSimo).fer > get(Scheme::Ia).fer
    );
    println!(
        "info: {} of {} records failed to process",
        out.records.iter().filter(|r| r.failed).count(),
        out.records.len()
    );
    let rates: Vec<String> = order
        .iter()
        .map(|&s| format!("{} {:.2}/{:.2}", s.key(), get(s).rate, get(s).c_rate))
        .collect();
    outcome(
        rate_order && all_fer && coding && c_rates,
        format!(
            "rate/c-rate {}; rate order {rate_order} (c-rate order {c_rate_order}); FER all-mimo {:.2} > all-simo {:.2}; \
             c-FER <= FER everywhere {coding}; c-rate IA, CoMP > 2.9 {c_rates}",
            rates.join(", "),
            get(Scheme::AllMimo).fer,
            get(Scheme::AllSimo).fer,
        ),
    )
}

fn formulas() -> Outcome {
    let mut ok = true;
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        let pass = (got - want).abs() <= tol;
        if !pass {
            println!("  {name}: got {got}, expected {want}");
        }
        ok &= pass;
    };
    check("SINDR single", sindr_evm(&[0.1], &[1.0]).unwrap(), 100.0, 1e-9);
    check(
        "SINDR equal EVM",
        sindr_evm(&[0.1, 0.1], &[1.0, 3.0]).unwrap(),
        100.0,
        1e-9,
    );
    check(
        "SINDR weighted",
        sindr_evm(&[0.1, 1.0], &[1.0, 1.0]).unwrap(),
        50.5,
        1e-9,
    );
    check(
        "SINR-post",
        sinr_post(&[1.0, 1.0], &[0.0, 0.0], 0.01).unwrap(),
        200.0,
        1e-9,
    );
    // reported Best-BS rates of IA, CoMP and All-MIMO
    for (n_s, fer, reported) in [(3, 0.21, 2.36), (3, 0.06, 2.81), (6, 0.98, 0.13)] {
        check("throughput", throughput(n_s, fer).unwrap(), reported, 0.02);
    }
    outcome(ok, "SINDR_EVM, SINR-post and throughput examples")
}

fn determinism() -> Outcome {
    let cfg = CampaignConfig {
        n_batches: 2,
        schemes: vec![Scheme::Ia, Scheme::TdmaSimo],
        save_trace: true,
        ..CampaignConfig::default()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_campaign(&cfg, d1.path()).unwrap();
    run_campaign(&cfg, d2.path()).unwrap();
    let same = |f: &str| std::fs::read(d1.path().join(f)).unwrap() == std::fs::read(d2.path().join(f)).unwrap();
    let files = same("metrics.csv") && same("summary.txt") && same("trace.bin");

    let channels = simulate(&CampaignConfig {
        save_trace: false,
        ..cfg.clone()
    })
    .unwrap()
    .channels;
    let path = d1.path().join("again.bin");
    save_trace(&path, &channels).unwrap();
    let back = load_trace(&path).unwrap();
    let trace = back.len() == channels.len()
        && back.iter().zip(&channels).all(|(a, b)| {
            a.as_flat()
                .iter()
                .zip(b.as_flat())
                .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
        });

    let mut rng = RngStream::new(707, &[]);
    let bits = rng.bits(4 * 1000);
    let qam = hard_decisions(&qam16_demap(&qam16_map(&bits).unwrap(), 1e-3).unwrap()) == bits;
    let code = LdpcCode::construct(CODE_SEED).unwrap();
    let dec = MinSumDecoder::new(&code);
    let ldpc = (0..20).all(|_| {
        let info = rng.bits(code.k());
        let cw = code.encode(&info).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
        let out = dec.decode(&llr);
        out.info == info && out.converged && code.syndrome_weight(&cw) == 0
    });
    outcome(
        files && trace && qam && ldpc,
        format!(
            "same-seed files identical {files}, trace bit-exact {trace}, QAM round trip {qam}, LDPC round trip {ldpc}"
        ),
    )
}

fn main() {
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!("{} {n} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    };
    report(1, "IA nulling", ia_nulling());
    report(2, "CoMP dominance", comp_dominance());
    report(3, "distortion floor", distortion_floor());
    let start = Instant::now();
    let campaign = simulate(&CampaignConfig::default());
    let t = start.elapsed();
    match campaign {
        Ok(out) => {
            report(4, "ideal-vs-impaired gap", impairment_gap(&out, t));
            report(5, "table structure", table_structure(&out));
        }
        Err(e) => {
            report(
                4,
                "ideal-vs-impaired gap",
                outcome(false, format!("campaign failed: {e}")),
            );
            report(5, "table structure", outcome(false, format!("campaign failed: {e}")));
        }
    }
    report(6, "formula conformance", formulas());
    report(7, "determinism and round trips", determinism());
    println!("{failures} of 7 criteria failed");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
