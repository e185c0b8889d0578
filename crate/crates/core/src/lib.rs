//! A truthful random-sampling auction for multi-unit environments (BSPE):
//! a biased three-way partition feeding a profit extractor.
//!
//! The crate is organised bottom-up:
//!
//! * [`money`], [`profile`], [`environment`], [`outcome`], [`rng`]: exact
//!   money, valuation profiles, supply constraints, auction outcomes and the
//!   seeded randomness contract.
//! * [`benchmark`]: the envy-free optimal revenue benchmark and a brute-force
//!   oracle for it.
//! * [`extractor`]: a dominance-gated profit extractor with critical-value
//!   payments.
//! * [`auction`]: the BSPE mechanism itself and the 1-unit Vickrey auction.
//! * [`analysis`]: closed-form ruin probabilities and approximation factors.
//! * [`harness`]: Monte Carlo checks, the incentive-compatibility scanner and
//!   instance generators used by the `bspe` CLI.

pub mod analysis;
pub mod auction;
pub mod benchmark;
pub mod environment;
pub mod error;
pub mod extractor;
pub mod harness;
pub mod money;
pub mod outcome;
pub mod profile;
pub mod rng;

pub use auction::{bspe_run, vickrey_1unit, Group, MechanismSettings, SamplingBias};
pub use benchmark::{efo, EfoSolution, WinnerTieBreak};
pub use environment::Environment;
pub use error::{Error, Result};
pub use extractor::{profit_extract, ProfitExtractor};
pub use money::Money;
pub use outcome::Outcome;
pub use profile::{AgentId, Bid, ValuationProfile};
pub use rng::RandomSource;
