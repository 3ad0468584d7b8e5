//! Campaign orchestration and offline trace analysis.

mod analyze;
mod campaign;
mod chain;
mod config;

pub use analyze::{analyze_channels, analyze_trace, AnalysisMode, AnalysisSample};
pub use campaign::{
    batch_state, cdf_file_name, csi_amplitude, curve_samples, ideal_solution, identity_serving, model_sindr, run_batch,
    run_batch_with, run_campaign, simulate, write_cdfs, BatchOutput, BatchState, CampaignOutput,
};
pub use chain::{run_link, LinkContext, LinkOutcome, ReceiverCsi, StreamOutcome};
pub use config::{parse_schemes, CampaignConfig, CODE_SEED};
