//! Scenario files, frequency planning, end-to-end runs and parameter sweeps.

mod link;
mod plan;
mod scenario;
mod sweep;

pub use link::{compensation_spans, run_link, ChannelReport, LedgerEntry, LinkReport};
pub use plan::{channel_label, plan_frequencies, ChannelPlan, FrequencyPlan};
pub use scenario::{Mode, OtSection, RxSection, Scenario, ToSection, TxSection, VoaSection};
pub use sweep::{linspace, sweep, write_csv, SweepRow};
