//! Envy-free optimal revenue for multi-unit environments.
//!
//! With `k` identical units, an envy-free deterministic outcome serves the
//! `j` highest agents at a common price `q` with `v_{j+1} <= q <= v_j`, so
//! the benchmark is `max_{j <= min(k, n)} j * v_j`. Lottery outcomes are not
//! considered.

use std::collections::BTreeSet;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::profile::{AgentId, ValuationProfile};

/// Which maximiser of `j * v_j` to pick when several tie.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum WinnerTieBreak {
    /// The smallest maximising winner count, i.e. the highest price.
    #[default]
    Smallest,
    /// The largest maximising winner count. Only used to reproduce the
    /// incentive problem the default avoids.
    Largest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfoSolution {
    /// Number of winners; zero when the optimal revenue is zero.
    pub winner_count: usize,
    pub uniform_price: Money,
    pub revenue: Money,
    /// The `winner_count` top-ranked agents.
    pub winners: BTreeSet<AgentId>,
}

pub fn efo(profile: &ValuationProfile, env: &Environment) -> EfoSolution {
    efo_with(profile, env, WinnerTieBreak::Smallest)
}

pub fn efo_with(
    profile: &ValuationProfile,
    env: &Environment,
    tie_break: WinnerTieBreak,
) -> EfoSolution {
    let (winner_count, uniform_price, revenue) =
        best_uniform_price(profile.sorted_values(), env.units(), tie_break);
    let winners = profile.sorted()[..winner_count]
        .iter()
        .map(|b| b.agent)
        .collect();
    EfoSolution {
        winner_count,
        uniform_price,
        revenue,
        winners,
    }
}

/// Revenue only; avoids building the winner set.
pub fn efo_revenue(profile: &ValuationProfile, env: &Environment) -> Money {
    best_uniform_price(profile.sorted_values(), env.units(), WinnerTieBreak::Smallest).2
}

/// `(j*, v_{j*}, j* * v_{j*})` over a non-increasing sequence of values.
pub(crate) fn best_uniform_price(
    sorted_values: impl Iterator<Item = Money>,
    units: usize,
    tie_break: WinnerTieBreak,
) -> (usize, Money, Money) {
    let mut best = (0, Money::ZERO, Money::ZERO);
    for (i, value) in sorted_values.take(units).enumerate() {
        let revenue = value.times(i + 1);
        let better = match tie_break {
            WinnerTieBreak::Smallest => revenue > best.2,
            WinnerTieBreak::Largest => revenue >= best.2 && !revenue.is_zero(),
        };
        if better {
            best = (i + 1, value, revenue);
        }
    }
    best
}

/// Total payment collected from the members of `subset` in the envy-free
/// optimum of `profile`.
pub fn efo_contribution(
    profile: &ValuationProfile,
    env: &Environment,
    subset: &BTreeSet<AgentId>,
) -> Result<Money> {
    if let Some(&unknown) = subset.iter().find(|&&a| !profile.contains(a)) {
        return Err(Error::UnknownAgent(unknown));
    }
    let solution = efo(profile, env);
    let members = solution.winners.intersection(subset).count();
    Ok(solution.uniform_price.times(members))
}

pub const BRUTE_FORCE_MAX_AGENTS: usize = 12;

/// Exhaustive search over winner counts and candidate prices drawn from the
/// bid values, keeping only envy-free `(j, q)` pairs.
pub fn efo_bruteforce(profile: &ValuationProfile, env: &Environment) -> Result<Money> {
    let n = profile.len();
    if n > BRUTE_FORCE_MAX_AGENTS {
        return Err(Error::TooManyAgents {
            n,
            max: BRUTE_FORCE_MAX_AGENTS,
        });
    }
    let values: Vec<Money> = profile.sorted_values().collect();
    let mut best = Money::ZERO;
    for winners in 1..=env.units().min(n) {
        let lowest_winner = values[winners - 1];
        let highest_loser = values.get(winners).copied().unwrap_or(Money::ZERO);
        for &price in &values {
            if price <= lowest_winner && price >= highest_loser {
                best = best.max(price.times(winners));
            }
        }
    }
    Ok(best)
}
