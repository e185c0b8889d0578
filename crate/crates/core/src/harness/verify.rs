use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::auction::{MechanismSettings, SamplingBias};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::harness::checks::{
    check_bounds, check_extractor, check_ruin, check_sampling, BoundsReport, ExtractorReport, RuinCheck,
    SamplingReport,
};
use crate::harness::generate::{generate_profile, ProfileKind};
use crate::harness::ic::{check_ic, IcReport};
use crate::profile::ValuationProfile;
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerifyKind {
    Ruin,
    Sampling,
    Extractor,
    Ic,
    Bounds,
    All,
}

impl VerifyKind {
    pub const ALL: [VerifyKind; 6] = [
        VerifyKind::Ruin,
        VerifyKind::Sampling,
        VerifyKind::Extractor,
        VerifyKind::Ic,
        VerifyKind::Bounds,
        VerifyKind::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VerifyKind::Ruin => "ruin",
            VerifyKind::Sampling => "sampling",
            VerifyKind::Extractor => "extractor",
            VerifyKind::Ic => "ic",
            VerifyKind::Bounds => "bounds",
            VerifyKind::All => "all",
        }
    }

    fn includes(self, other: VerifyKind) -> bool {
        self == VerifyKind::All || self == other
    }
}

impl fmt::Display for VerifyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VerifyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VerifyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_owned()))
    }
}

pub const DEFAULT_BIAS: f64 = 0.26;
pub const RUIN_BIASES: [f64; 3] = [0.10, 0.26, 0.40];
pub const RUIN_STEPS: usize = 200;

/// Workload sizes. The defaults keep `verify all` to a few seconds; the
/// acceptance suite runs the full sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub ruin_trials: u64,
    pub sampling_trials: u64,
    pub bounds_trials: u64,
    pub extractor_instances: u64,
    pub ic_instances: u64,
}

impl VerifyOptions {
    pub fn new(seed: u64) -> Self {
        VerifyOptions {
            seed,
            ruin_trials: 100_000,
            sampling_trials: 10_000,
            bounds_trials: 10_000,
            extractor_instances: 10_000,
            ic_instances: 50,
        }
    }

    /// Uses `trials` for every Monte Carlo experiment.
    pub fn with_trials(mut self, trials: u64) -> Self {
        self.ruin_trials = trials;
        self.sampling_trials = trials;
        self.bounds_trials = trials;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryCase {
    pub name: String,
    pub profile: ValuationProfile,
    pub env: Environment,
}

/// Battery profiles: every generator kind, n in {5, 10, 50} and k in
/// {1, ceil(n/2), n}.
pub fn battery(seed: u64) -> Vec<BatteryCase> {
    use ProfileKind::*;
    const CASES: [(ProfileKind, usize, usize, u64); 7] = [
        (EqualRevenue, 5, 5, 3600),
        (Uniform, 10, 5, 100),
        (Bimodal, 50, 25, 1000),
        (Constant, 5, 1, 50),
        (EqualRevenue, 50, 1, 3600),
        (Uniform, 50, 50, 100),
        (Bimodal, 10, 10, 1000),
    ];
    let source = RandomSource::new(seed);
    CASES
        .iter()
        .enumerate()
        .map(|(i, &(kind, n, k, scale))| {
            let profile_seed = source.derive(i as u64).master_seed();
            BatteryCase {
                name: format!("{kind}/n={n}/k={k}"),
                profile: generate_profile(kind, n, profile_seed, scale).expect("battery scales are positive"),
                env: Environment::new(k).expect("battery k >= 1"),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport<T> {
    pub case: String,
    #[serde(flatten)]
    pub report: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kind: &'static str,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ruin: Option<Vec<RuinCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Vec<CaseReport<SamplingReport>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<IcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<CaseReport<BoundsReport>>>,
    pub pass: bool,
}

// Sub-experiment seeds.
const RUIN: u64 = 1;
const SAMPLING: u64 = 2;
const EXTRACTOR: u64 = 3;
const IC: u64 = 4;
const BOUNDS: u64 = 5;
const BATTERY: u64 = 6;

pub fn verify(kind: VerifyKind, options: &VerifyOptions) -> Result<VerifyReport> {
    let source = RandomSource::new(options.seed);
    let seed_for = |label| source.derive(label).master_seed();
    let bias = SamplingBias::new(DEFAULT_BIAS)?;
    let cases = battery(seed_for(BATTERY));

    let ruin = kind
        .includes(VerifyKind::Ruin)
        .then(|| {
            RUIN_BIASES
                .iter()
                .map(|&p| check_ruin(p, RUIN_STEPS, options.ruin_trials, seed_for(RUIN)))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let sampling = kind.includes(VerifyKind::Sampling).then(|| {
        cases
            .iter()
            .map(|c| CaseReport {
                case: c.name.clone(),
                report: check_sampling(&c.profile, &c.env, bias, options.sampling_trials, seed_for(SAMPLING)),
            })
            .collect::<Vec<_>>()
    });
    let extractor = kind
        .includes(VerifyKind::Extractor)
        .then(|| check_extractor(options.extractor_instances, seed_for(EXTRACTOR)));
    let ic = kind
        .includes(VerifyKind::Ic)
        .then(|| check_ic(options.ic_instances, seed_for(IC), MechanismSettings::default()))
        .transpose()?;
    let bounds = kind.includes(VerifyKind::Bounds).then(|| {
        cases
            .iter()
            .map(|c| CaseReport {
                case: c.name.clone(),
                report: check_bounds(&c.profile, &c.env, bias, options.bounds_trials, seed_for(BOUNDS)),
            })
            .collect::<Vec<_>>()
    });

    let pass = ruin.iter().flatten().all(|r| r.pass)
        && sampling.iter().flatten().all(|r| r.report.pass)
        && extractor.iter().all(|r| r.pass)
        && ic.iter().all(|r| r.pass)
        && bounds.iter().flatten().all(|r| r.report.pass);
    Ok(VerifyReport {
        kind: kind.name(),
        seed: options.seed,
        ruin,
        sampling,
        extractor,
        ic,
        bounds,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_shape() {
        let cases = battery(1);
        assert!(cases.len() >= 5);
        for kind in ProfileKind::ALL {
            assert!(cases.iter().any(|c| c.name.starts_with(kind.name())));
        }
        for c in &cases {
            let n = c.profile.len();
            assert!([5, 10, 50].contains(&n));
            assert!([1, n.div_ceil(2), n].contains(&c.env.units()), "{}", c.name);
        }
        assert_eq!(battery(1), cases);
    }

    #[test]
    fn kinds_parse() {
        for kind in VerifyKind::ALL {
            assert_eq!(kind.name().parse::<VerifyKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<VerifyKind>().is_err());
    }

    #[test]
    fn single_kind_reports_only_its_section() {
        let mut options = VerifyOptions::new(9).with_trials(2_000);
        options.extractor_instances = 500;
        let report = verify(VerifyKind::Extractor, &options).unwrap();
        assert!(report.extractor.is_some() && report.ruin.is_none() && report.bounds.is_none());
        assert!(report.pass);
        let json = serde_json::to_string(&report).unwrap();
        assert!(!json.contains("\"ruin\""));
    }
}
