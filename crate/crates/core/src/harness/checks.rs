use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{factors, ruin_closed_form, ruin_exact_finite_from, ApproxFactors};
use crate::auction::SamplingBias;
use crate::benchmark::{efo, efo_revenue};
use crate::environment::Environment;
use crate::error::Result;
use crate::extractor::profit_extract;
use crate::harness::stats::{at_least_within_sigmas, within_sigmas, ExactAccumulator, StatSummary};
use crate::harness::trials::revenue_summary;
use crate::money::Money;
use crate::profile::ValuationProfile;
use crate::rng::RandomSource;

/// Closed-form bounds are compared with floating DP values; allow for
/// accumulated rounding in the DP.
const DP_BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuinReport {
    pub start: usize,
    pub empirical: f64,
    /// Binomial standard error of the empirical frequency under the DP value.
    pub stderr: f64,
    pub dp: f64,
    pub closed_form: f64,
    pub within_3sigma: bool,
    pub dp_within_bound: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuinCheck {
    pub p: f64,
    pub steps: usize,
    pub trials: u64,
    pub seed: u64,
    pub unconditional: RuinReport,
    pub conditional: RuinReport,
    pub pass: bool,
}

/// Walk from `start`, one step back with probability `p`, for `steps`
/// steps; true if it ever goes below zero.
fn walk_is_ruined<R: Rng>(rng: &mut R, p: f64, steps: usize, start: usize) -> bool {
    let mut pos = start as i64;
    for taken in 0..steps {
        let remaining = (steps - taken) as i64;
        if pos >= remaining {
            return false;
        }
        if rng.random::<f64>() < p {
            pos -= 1;
            if pos < 0 {
                return true;
            }
        } else {
            pos += 1;
        }
    }
    false
}

fn ruin_report(p: f64, steps: usize, trials: u64, source: RandomSource, start: usize, closed_form: f64) -> RuinReport {
    let ruined = (0..trials)
        .into_par_iter()
        .filter(|&t| walk_is_ruined(&mut source.stream(t), p, steps, start))
        .count();
    let empirical = ruined as f64 / trials as f64;
    let dp = ruin_exact_finite_from(p, steps, start);
    let stderr = (dp * (1.0 - dp) / trials as f64).sqrt();
    let within_3sigma = within_sigmas(empirical, dp, stderr);
    let dp_within_bound = dp <= closed_form + DP_BOUND_SLACK;
    RuinReport {
        start,
        empirical,
        stderr,
        dp,
        closed_form,
        within_3sigma,
        dp_within_bound,
        pass: within_3sigma && dp_within_bound,
    }
}

/// Simulated ruin frequency of the market/sample walk against the exact
/// finite-horizon value and the infinite-horizon bound, from 0 and from +1.
pub fn check_ruin(p: f64, steps: usize, trials: u64, seed: u64) -> Result<RuinCheck> {
    let bounds = ruin_closed_form(p)?;
    let source = RandomSource::new(seed);
    let unconditional = ruin_report(p, steps, trials, source.derive(0), 0, bounds.q);
    let conditional = ruin_report(p, steps, trials, source.derive(1), 1, bounds.q_conditional);
    Ok(RuinCheck {
        p,
        steps,
        trials,
        seed,
        pass: unconditional.pass && conditional.pass,
        unconditional,
        conditional,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingReport {
    pub n: usize,
    pub units: usize,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub efo: Money,
    /// `p * EFO(v)`.
    pub expected_contribution: f64,
    pub contribution: StatSummary,
    pub sample_efo: StatSummary,
    /// Draws where `EFO(v_S)` fell below the contribution of `S`.
    pub per_draw_violations: u64,
    pub contribution_within_3sigma: bool,
    pub sample_efo_above_bound: bool,
    pub pass: bool,
}

/// Random subsets `S` (each agent with probability `p`): checks
/// `EFO(v_S) >= EFO_S(v)` per draw, `E[EFO_S(v)] = p EFO(v)` and
/// `E[EFO(v_S)] >= p EFO(v)`.
pub fn check_sampling(
    profile: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    trials: u64,
    seed: u64,
) -> SamplingReport {
    let p = bias.get();
    let solution = efo(profile, env);
    let source = RandomSource::new(seed);

    let (contribution, sample_efo, violations) = (0..trials)
        .into_par_iter()
        .fold(
            || (ExactAccumulator::default(), ExactAccumulator::default(), 0u64),
            |(mut contrib, mut sample, mut bad), t| {
                let mut rng = source.stream(t);
                let picked: Vec<bool> = profile.entries().iter().map(|_| rng.random::<f64>() < p).collect();
                let members: Vec<_> = profile
                    .entries()
                    .iter()
                    .zip(&picked)
                    .filter(|(_, &keep)| keep)
                    .map(|(b, _)| b.agent)
                    .collect();
                let winners_in_sample = members.iter().filter(|a| solution.winners.contains(a)).count();
                let share = solution.uniform_price.times(winners_in_sample);
                let restricted = profile.restrict(|a| members.contains(&a));
                let revenue = efo_revenue(&restricted, env);
                if revenue < share {
                    bad += 1;
                }
                contrib.push(share.amount());
                sample.push(revenue.amount());
                (contrib, sample, bad)
            },
        )
        .reduce(
            || (ExactAccumulator::default(), ExactAccumulator::default(), 0),
            |a, b| (a.0.merge(b.0), a.1.merge(b.1), a.2 + b.2),
        );

    let contribution = contribution.summary();
    let sample_efo = sample_efo.summary();
    let expected_contribution = p * solution.revenue.as_f64();
    let contribution_within_3sigma = within_sigmas(contribution.mean, expected_contribution, contribution.stderr);
    let sample_efo_above_bound = at_least_within_sigmas(sample_efo.mean, expected_contribution, sample_efo.stderr);
    SamplingReport {
        n: profile.len(),
        units: env.units(),
        p,
        trials,
        seed,
        efo: solution.revenue,
        expected_contribution,
        contribution,
        sample_efo,
        per_draw_violations: violations,
        contribution_within_3sigma,
        sample_efo_above_bound,
        pass: violations == 0 && contribution_within_3sigma && sample_efo_above_bound,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub name: &'static str,
    /// The benchmark quantity the factor multiplies (or divides, for the
    /// theorem row).
    pub benchmark: Money,
    pub bound: f64,
    pub applicable: bool,
    /// `None` when the row's hypothesis (n >= 5) does not hold.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub units: usize,
    pub trials: u64,
    pub seed: u64,
    pub factors: ApproxFactors,
    pub revenue: StatSummary,
    pub rows: Vec<BoundRow>,
    pub pass: bool,
}

/// Agents needed for the `r2 v₂` row and the combined bound.
pub const BOUND_MIN_AGENTS: usize = 5;

/// Mean revenue against `r1 EFO(v₋₁)`, `r2 v₂` and `EFO(v⁽²⁾) / ratio`.
pub fn check_bounds(
    profile: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    trials: u64,
    seed: u64,
) -> BoundsReport {
    let f = factors(bias.get());
    let revenue = revenue_summary(profile, env, bias, seed, trials);
    let enough_agents = profile.len() >= BOUND_MIN_AGENTS;

    let without_top = profile.v_minus1().map(|p| efo_revenue(&p, env)).unwrap_or(Money::ZERO);
    let second = profile.order_stat(1);
    let lowered = efo_revenue(&profile.v_super2(), env);

    let row = |name, benchmark: Money, bound: f64, applicable: bool| BoundRow {
        name,
        benchmark,
        bound,
        applicable,
        pass: applicable.then(|| at_least_within_sigmas(revenue.mean, bound, revenue.stderr)),
    };
    let rows = vec![
        row("part1", without_top, f.r1 * without_top.as_f64(), true),
        row("part2", second, f.r2 * second.as_f64(), enough_agents),
        row("theorem", lowered, lowered.as_f64() / f.ratio, enough_agents),
    ];
    let pass = rows.iter().all(|r| r.pass != Some(false));
    BoundsReport {
        n: profile.len(),
        units: env.units(),
        trials,
        seed,
        factors: f,
        revenue,
        rows,
        pass,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractorReport {
    pub instances: u64,
    pub seed: u64,
    /// Instances where the bids dominated a target with positive benchmark.
    pub dominated: u64,
    /// `revenue < EFO(target)` despite dominance.
    pub contract_violations: u64,
    /// Someone served although dominance failed.
    pub rejection_violations: u64,
    /// Infeasible or individually irrational outcomes.
    pub outcome_violations: u64,
    pub pass: bool,
}

const FUZZ_MAX_VALUE: u64 = 30;

/// A random `(target, bids, env)` triple, padded to equal length. Half the
/// instances build the bids on top of the target so dominance is common.
fn random_extraction_instance<R: Rng>(rng: &mut R) -> (ValuationProfile, ValuationProfile, Environment) {
    let target_len = rng.random_range(0..=6);
    let bid_len = rng.random_range(1..=7);
    let mut target: Vec<u64> = (0..target_len).map(|_| rng.random_range(0..=FUZZ_MAX_VALUE)).collect();
    target.sort_unstable_by(|a, b| b.cmp(a));
    let mut bids: Vec<u64> = if rng.random_bool(0.5) {
        (0..bid_len)
            .map(|i| target.get(i).copied().unwrap_or(0) + rng.random_range(0..=3))
            .collect()
    } else {
        (0..bid_len).map(|_| rng.random_range(0..=FUZZ_MAX_VALUE)).collect()
    };
    bids.shuffle(rng);
    let len = target_len.max(bid_len);
    let units = rng.random_range(1..=len + 1);
    let pad = |values: &[u64]| ValuationProfile::from_values(values).and_then(|p| p.pad(len)).expect("small values");
    (pad(&target), pad(&bids), Environment::new(units).expect("units >= 1"))
}

/// Fuzzes the extractor contract: revenue at least the target's benchmark
/// under dominance, nobody served otherwise.
pub fn check_extractor(instances: u64, seed: u64) -> ExtractorReport {
    let source = RandomSource::new(seed);
    let zero = || [0u64; 4];
    let counts = (0..instances)
        .into_par_iter()
        .fold(zero, |mut c, i| {
            let (target, bids, env) = random_extraction_instance(&mut source.stream(i));
            let benchmark = efo(&target, &env).revenue;
            let outcome = profit_extract(&target, &bids, &env);
            if bids.dominates(&target) && !benchmark.is_zero() {
                c[0] += 1;
                c[1] += u64::from(outcome.revenue() < benchmark);
            } else {
                c[2] += u64::from(outcome.served_count() > 0);
            }
            c[3] += u64::from(outcome.check(&bids, &env).is_err());
            c
        })
        .reduce(zero, |a, b| std::array::from_fn(|i| a[i] + b[i]));
    ExtractorReport {
        instances,
        seed,
        dominated: counts[0],
        contract_violations: counts[1],
        rejection_violations: counts[2],
        outcome_violations: counts[3],
        pass: counts[1] == 0 && counts[2] == 0 && counts[3] == 0,
    }
}
