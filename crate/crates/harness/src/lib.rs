//! Monte Carlo harness for the multi-RIS channel acquisition pipeline:
//! per-trial orchestration, seeded campaigns, shipped figure recipes and the
//! closed-form power checks.

pub mod appendix;
pub mod campaign;
pub mod figures;
pub mod pipeline;

pub use campaign::{run_campaign, Campaign, CampaignError, CampaignResult, CellResult, Sweep, SweepAxis};
pub use pipeline::{run_phase_pipeline, LosFrequencies, PipelineOptions, ReflectionMode, SchemeId};
