//! Dirty-RF layer: per-branch additive distortion, transmit common phase
//! error and thermal noise.

use crate::error::{contract, Result};
use crate::numerics::{from_db, RngStream, C64};
use crate::phy::AntennaGrid;
use crate::system::NOISE_VAR_NOMINAL;

#[derive(Clone, Debug, PartialEq)]
pub struct ImpairmentConfig {
    pub tx_evm_db: f64,
    pub rx_evm_db: f64,
    pub phase_std_deg: f64,
    pub thermal_var: f64,
    pub noise_jitter_db: f64,
    pub tx_noise_enabled: bool,
    pub rx_noise_enabled: bool,
    pub phase_enabled: bool,
    pub thermal_enabled: bool,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            tx_evm_db: -34.0,
            rx_evm_db: -40.0,
            phase_std_deg: 0.6,
            thermal_var: NOISE_VAR_NOMINAL,
            noise_jitter_db: 1.0,
            tx_noise_enabled: true,
            rx_noise_enabled: true,
            phase_enabled: true,
            thermal_enabled: true,
        }
    }
}

impl ImpairmentConfig {
    /// Everything off except thermal noise at the nominal variance, no jitter.
    pub fn clean() -> Self {
        Self {
            tx_noise_enabled: false,
            rx_noise_enabled: false,
            phase_enabled: false,
            noise_jitter_db: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thermal_var >= 0.0) || !(self.phase_std_deg >= 0.0) || !(self.noise_jitter_db >= 0.0) {
            return Err(contract("impairment powers and spreads must be non-negative"));
        }
        if !self.tx_evm_db.is_finite() || !self.rx_evm_db.is_finite() {
            return Err(contract("EVM levels must be finite"));
        }
        Ok(())
    }
}

/// Adds distortion of power `branch power × 10^(level/10)` to every branch.
fn add_branch_distortion(grid: &mut AntennaGrid, level_db: f64, rng: &mut RngStream) {
    let rel = from_db(level_db);
    for a in 0..grid.n_ant() {
        let var = grid.branch_power(a) * rel;
        if var == 0.0 {
            continue;
        }
        let mut r = rng.child(a as u64);
        for x in grid.branch_mut(a) {
            *x += r.cgauss1(var);
        }
    }
}

/// Common phase error per transmit branch, in radians.
pub fn draw_phase_errors(n_branches: usize, cfg: &ImpairmentConfig, rng: &mut RngStream) -> Vec<f64> {
    let std = cfg.phase_std_deg.to_radians();
    (0..n_branches)
        .map(|_| if cfg.phase_enabled { std * rng.gauss() } else { 0.0 })
        .collect()
}

/// Transmit distortion plus a per-branch rotation over the whole frame.
///
/// `phases` comes from [`draw_phase_errors`] so several slots of one frame
/// can share a draw.
pub fn apply_tx_dirty(grid: &mut AntennaGrid, cfg: &ImpairmentConfig, phases: &[f64], rng: &mut RngStream) {
    assert_eq!(phases.len(), grid.n_ant());
    if cfg.tx_noise_enabled {
        add_branch_distortion(grid, cfg.tx_evm_db, rng);
    }
    if cfg.phase_enabled {
        for (a, &phi) in phases.iter().enumerate() {
            let rot = C64::from_polar(1.0, phi);
            grid.branch_mut(a).iter_mut().for_each(|x| *x *= rot);
        }
    }
}

pub fn apply_rx_dirty(grid: &mut AntennaGrid, cfg: &ImpairmentConfig, rng: &mut RngStream) {
    if cfg.rx_noise_enabled {
        add_branch_distortion(grid, cfg.rx_evm_db, rng);
    }
}

/// Per-node noise variances `σ² · 10^(u/10)`, `u ~ U[−jitter, jitter]`.
pub fn draw_node_noise(n_nodes: usize, cfg: &ImpairmentConfig, rng: &mut RngStream) -> Vec<f64> {
    (0..n_nodes)
        .map(|_| {
            if !cfg.thermal_enabled {
                return 0.0;
            }
            let u = if cfg.noise_jitter_db > 0.0 {
                rng.uniform_range(-cfg.noise_jitter_db, cfg.noise_jitter_db)
            } else {
                0.0
            };
            cfg.thermal_var * from_db(u)
        })
        .collect()
}

/// Adds thermal noise; `node_var[n]` applies to branches `2n` and `2n + 1`.
pub fn apply_thermal(grid: &mut AntennaGrid, node_var: &[f64], rng: &mut RngStream) {
    let per_node = grid.n_ant() / node_var.len();
    for a in 0..grid.n_ant() {
        let var = node_var[a / per_node];
        if var == 0.0 {
            continue;
        }
        let mut r = rng.child(a as u64);
        for x in grid.branch_mut(a) {
            *x += r.cgauss1(var);
        }
    }
}
