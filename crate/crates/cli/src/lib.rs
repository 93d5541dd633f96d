//! Campaign runner, configuration, and file formats around the core
//! simulation library.

pub mod config;
pub mod report;
pub mod trace_io;
pub mod trial;

pub use config::{CampaignSettings, Config, ControllerConfig, CONFIG_ENV_VAR};
pub use trace_io::{load_trace, save_trace, trace_from_csv, trace_to_csv, TraceIoError};
pub use trial::{
    build_report, run_campaign, run_trial, ArmReport, ArmRun, CampaignReport, ControlMode,
    PairwiseTest, TrialConfig, TrialResult, CAMPAIGN_ARMS,
};
