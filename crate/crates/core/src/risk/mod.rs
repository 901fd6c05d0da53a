//! Seeded Monte Carlo estimation of pointwise risk.
//!
//! Every replicate draws its path from a stream derived from the master seed,
//! the path length and the replicate index, so reports do not depend on the
//! number of worker threads or on scheduling order.

mod compare;
mod expansion;
mod montecarlo;
mod oracle;
mod output;
mod rate;
mod scenario;

pub use compare::{compare_estimators, ComparisonEntry, ComparisonReport};
pub use expansion::{
    centered_risk, msem_expansion_check, CenteredRiskEntry, ExpansionEntry, ExpansionSettings,
};
pub use montecarlo::{collect_errors, monte_carlo_msem, path_seed, ErrorTable, RiskEntry, RiskReport};
pub use oracle::deterministic_bias_oracle;
pub use output::{write_centered_csv, write_expansion_csv, write_summary, SummaryWriter};
pub use rate::{rate_fit, rate_fit_report, RateFit};
pub use scenario::{step_size_rule, EstimatorKind, MuRule, Scenario};
