use std::f64::consts::PI;

use linksim::channel::{
    draw_channel, draw_geometry, evolve_channel, response_to_taps, ChannelModelConfig, LinkBudget, LinkGeometry,
};
use linksim::numerics::{db, RngStream, C64};
use linksim::system::{N_RX, N_SUBCARRIERS, N_TX};

fn budget() -> LinkBudget {
    LinkBudget {
        p_total_w: 10f64.powf(1.5) * 1e-3,
        noise_var: 1e-10,
    }
}

#[test]
fn serving_snr_is_uniform_over_range() {
    let cfg = ChannelModelConfig {
        serving_snr_range_db: (32.0, 61.0),
        ..ChannelModelConfig::default()
    };
    let b = budget();
    let mut rng = RngStream::new(11, &[]);
    let mut snr = Vec::new();
    for _ in 0..10_000 {
        let g = draw_geometry(&cfg, &b, &mut rng);
        snr.push(b.snr_db_for_gain(g.gain[0][g.serving[0]]));
    }
    let lo = snr.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = snr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = snr.iter().sum::<f64>() / snr.len() as f64;
    assert!((lo - 32.0).abs() < 0.1 && lo >= 32.0 - 1e-9, "min {lo}");
    assert!((hi - 61.0).abs() < 0.1 && hi <= 61.0 + 1e-9, "max {hi}");
    // uniform mean 46.5, standard error 29/sqrt(12e4) ≈ 0.084
    assert!((mean - 46.5).abs() < 0.3, "mean {mean}");
}

#[test]
fn mean_link_power_matches_large_scale_gain() {
    let cfg = ChannelModelConfig::default();
    let geom = LinkGeometry::uniform(2.5e-3);
    let mut rng = RngStream::new(12, &[]);
    let n = 10_000;
    let (rx, tx) = (1, 4);
    let mut acc = 0.0;
    for i in 0..n {
        let h = draw_channel(&geom, &cfg, &mut rng, i);
        acc += h.response(rx, tx).iter().map(|z| z.norm_sqr()).sum::<f64>() / N_SUBCARRIERS as f64;
    }
    let mean = acc / n as f64;
    assert!((mean / 2.5e-3 - 1.0).abs() < 0.02, "ratio {}", mean / 2.5e-3);
}

#[test]
fn adjacent_subcarrier_correlation_matches_pdp() {
    let cfg = ChannelModelConfig {
        n_taps: 4,
        pdp_decay: 1.0,
        ..ChannelModelConfig::default()
    };
    let geom = LinkGeometry::uniform(1.0);
    let mut rng = RngStream::new(13, &[]);
    let mut corr = C64::new(0.0, 0.0);
    let mut pow = 0.0;
    for i in 0..2_000 {
        let h = draw_channel(&geom, &cfg, &mut rng, i);
        for rx in 0..N_RX {
            for tx in 0..N_TX {
                let r = h.response(rx, tx);
                for k in 0..N_SUBCARRIERS - 1 {
                    corr += r[k] * r[k + 1].conj();
                    pow += r[k].norm_sqr();
                }
            }
        }
    }
    let empirical = (corr / pow).norm();
    // E[H_k H*_{k+1}] = Σ w_l e^{j2πl/N} for equal tap powers w_l = 1/4
    let analytic = (0..4)
        .map(|l| C64::from_polar(0.25, 2.0 * PI * l as f64 / N_SUBCARRIERS as f64))
        .sum::<C64>()
        .norm();
    assert!((empirical / analytic - 1.0).abs() < 0.05, "{empirical} vs {analytic}");
}

fn tap_correlation(rho: f64) -> f64 {
    let cfg = ChannelModelConfig {
        temporal_rho: rho,
        ..ChannelModelConfig::default()
    };
    let geom = LinkGeometry::uniform(1.0);
    let mut rng = RngStream::new(14, &[]);
    let (mut xy, mut xx, mut yy) = (C64::new(0.0, 0.0), 0.0, 0.0);
    let mut count = 0;
    let mut i = 0;
    while count < 10_000 {
        let a = draw_channel(&geom, &cfg, &mut rng, i);
        let b = evolve_channel(&a, &geom, &cfg, &mut rng);
        for rx in 0..N_RX {
            for tx in 0..N_TX {
                let ta = response_to_taps(&a.response(rx, tx));
                let tb = response_to_taps(&b.response(rx, tx));
                // first tap only, so every sample has the same variance
                xy += ta[0].conj() * tb[0];
                xx += ta[0].norm_sqr();
                yy += tb[0].norm_sqr();
                count += 1;
            }
        }
        i += 1;
    }
    xy.re / (xx * yy).sqrt()
}

#[test]
fn evolve_without_memory_is_uncorrelated() {
    let c = tap_correlation(0.0);
    assert!(c.abs() < 0.02, "{c}");
}

#[test]
fn evolve_keeps_gauss_markov_correlation() {
    let c = tap_correlation(0.99);
    assert!((c - 0.99).abs() < 0.01, "{c}");
}

#[test]
fn evolve_preserves_ensemble_energy() {
    let cfg = ChannelModelConfig {
        temporal_rho: 0.9,
        ..ChannelModelConfig::default()
    };
    let geom = LinkGeometry::uniform(1.0);
    let mut rng = RngStream::new(15, &[]);
    let mut ens: Vec<_> = (0..1_000).map(|i| draw_channel(&geom, &cfg, &mut rng, i)).collect();
    let power = |e: &[linksim::channel::ChannelRealization]| {
        e.iter()
            .map(|h| h.as_flat().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / e.len() as f64
    };
    let p0 = power(&ens);
    for step in 0..100 {
        for h in ens.iter_mut() {
            *h = evolve_channel(h, &geom, &cfg, &mut rng);
        }
        let p = power(&ens);
        assert!((p / p0 - 1.0).abs() < 0.02, "step {step}: {} dB drift", db(p / p0));
    }
}
