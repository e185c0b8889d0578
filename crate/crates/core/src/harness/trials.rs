use rayon::prelude::*;

use crate::auction::{bspe_run, run_with_assignment, Group, MechanismSettings, PartitionAssignment, SamplingBias};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::harness::config::SimConfig;
use crate::harness::stats::{ExactAccumulator, StatSummary};
use crate::money::Money;
use crate::profile::{AgentId, ValuationProfile};
use crate::rng::RandomSource;

/// Largest profile for which all `3^n` labellings are enumerated.
pub const EXACT_MAX_AGENTS: usize = 12;

/// Revenue of trial `trial`, which draws its coins from stream `trial`.
pub fn trial_revenue(
    bids: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    source: &RandomSource,
    trial: u64,
) -> Money {
    bspe_run(bids, env, bias, &mut source.stream(trial)).revenue()
}

/// Per-trial revenues in trial order.
pub fn trial_revenues(
    bids: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    seed: u64,
    trials: u64,
) -> Vec<Money> {
    let source = RandomSource::new(seed);
    (0..trials)
        .into_par_iter()
        .map(|t| trial_revenue(bids, env, bias, &source, t))
        .collect()
}

pub fn revenue_summary(
    bids: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    seed: u64,
    trials: u64,
) -> StatSummary {
    let source = RandomSource::new(seed);
    (0..trials)
        .into_par_iter()
        .fold(ExactAccumulator::default, |mut acc, t| {
            acc.push(trial_revenue(bids, env, bias, &source, t).amount());
            acc
        })
        .reduce(ExactAccumulator::default, ExactAccumulator::merge)
        .summary()
}

pub fn run_trials(config: &SimConfig) -> Result<StatSummary> {
    let (bids, env) = config.resolve()?;
    Ok(revenue_summary(&bids, &env, config.bias, config.seed, config.trials))
}

/// Every A/B/C labelling of `agents`, in base-3 counting order.
pub fn all_assignments(agents: &[AgentId]) -> impl Iterator<Item = PartitionAssignment> + '_ {
    let total = 3usize.pow(agents.len() as u32);
    (0..total).map(move |mut code| {
        let labels = agents.iter().map(|&agent| {
            let group = Group::ALL[code % 3];
            code /= 3;
            (agent, group)
        });
        PartitionAssignment::from_labels(labels).expect("profile ids are unique")
    })
}

/// `E[revenue]` by summing over every labelling weighted by its probability.
pub fn exact_expected_revenue(
    bids: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    settings: MechanismSettings,
) -> Result<f64> {
    if bids.len() > EXACT_MAX_AGENTS {
        return Err(Error::TooManyAgents {
            n: bids.len(),
            max: EXACT_MAX_AGENTS,
        });
    }
    let agents: Vec<AgentId> = bids.agents().collect();
    let mut expected = 0.0;
    for assignment in all_assignments(&agents) {
        let revenue = run_with_assignment(bids, env, &assignment, settings)?.revenue();
        expected += assignment.probability(bias) * revenue.as_f64();
    }
    Ok(expected)
}
