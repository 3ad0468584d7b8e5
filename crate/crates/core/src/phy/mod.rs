//! OFDM frame, 16QAM, pilots, channel estimation and MMSE combining.

mod estimate;
mod frame;
mod qam;

pub use estimate::{
    combiner_sinr, csi_estimate, demod_estimate, ls_estimate, mmse_combine, mmse_vector, EffectiveChannelEstimate,
};
pub use frame::{
    build_frame, demod_pilot_sequence, propagate, transmit, AntennaGrid, Frame, FrameLayout, StreamTx, SymbolKind,
    PILOT_SEED,
};
pub use qam::{
    hard_decisions, nearest_label, qam16_demap, qam16_demap_with, qam16_map, qam16_point, qam16_table, AXIS_LEVELS,
    BITS_PER_SYMBOL, QAM16_SCALE,
};
