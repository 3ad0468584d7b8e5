//! Fixed dimensions of the three-cell testbed.

pub const N_SUBCARRIERS: usize = 38;
pub const SUBCARRIER_SPACING_HZ: f64 = 312.5e3;
pub const CYCLIC_PREFIX_S: f64 = 0.48e-6;

pub const N_BS: usize = 3;
pub const N_MS: usize = 3;
pub const ANT_PER_NODE: usize = 2;
pub const N_TX: usize = N_BS * ANT_PER_NODE;
pub const N_RX: usize = N_MS * ANT_PER_NODE;

/// Default total radiated power, +15 dBm.
pub const P_TOTAL_DBM: f64 = 15.0;

/// Default nominal per-subcarrier thermal noise variance (W), −70 dBm.
pub const NOISE_VAR_NOMINAL: f64 = 1e-10;

/// Transmit antenna indices of a base-station.
pub fn bs_antennas(bs: usize) -> [usize; ANT_PER_NODE] {
    [ANT_PER_NODE * bs, ANT_PER_NODE * bs + 1]
}

/// Receive antenna indices of a mobile-station.
pub fn ms_antennas(ms: usize) -> [usize; ANT_PER_NODE] {
    [ANT_PER_NODE * ms, ANT_PER_NODE * ms + 1]
}

/// Longest channel impulse response (in samples at the OFDM sample rate)
/// that still fits inside the cyclic prefix.
pub fn max_taps_in_cp() -> usize {
    (CYCLIC_PREFIX_S * N_SUBCARRIERS as f64 * SUBCARRIER_SPACING_HZ).floor() as usize
}
