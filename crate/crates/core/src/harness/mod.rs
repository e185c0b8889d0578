//! Seeded verification experiments and the tooling the CLI is built on.
//!
//! Every stochastic experiment draws trial `t` from stream `t` of a
//! [`RandomSource`](crate::rng::RandomSource) and aggregates with exact
//! integer sums, so results do not depend on thread count or scheduling.

mod checks;
mod config;
mod generate;
mod ic;
mod stats;
mod trials;
mod verify;

pub use checks::{
    check_bounds, check_extractor, check_ruin, check_sampling, BoundRow, BoundsReport,
    ExtractorReport, RuinCheck, RuinReport, SamplingReport,
};
pub use config::{load_profile_file, ProfileFile, ProfileSource, SimConfig};
pub use generate::{generate_profile, ProfileKind};
pub use ic::{check_ic, deviation_grid, ic_scan, ic_scan_all_assignments, IcReport, IcViolation};
pub use stats::{at_least_within_sigmas, within_sigmas, ExactAccumulator, StatSummary, SIGMAS};
pub use trials::{
    all_assignments, exact_expected_revenue, revenue_summary, run_trials, trial_revenue,
    trial_revenues, EXACT_MAX_AGENTS,
};
pub use verify::{battery, verify, BatteryCase, VerifyKind, VerifyOptions, VerifyReport};
