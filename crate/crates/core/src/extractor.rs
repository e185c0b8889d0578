//! A profit extractor for multi-unit environments.
//!
//! Parameterised by a target profile `ê`, the extractor computes the
//! envy-free optimum of `ê` (winner quota `j*`, reserve `r = ê_{j*}`, target
//! revenue `R = j* * r`). On bids `v` it rejects everyone unless `v`
//! pointwise dominates `ê` and `R > 0`; otherwise it serves the (up to) `k`
//! top-ranked bidders whose bid is at least `r`. Winners pay their critical
//! value, so the extractor is truthful, and when dominance holds at least
//! `j*` bidders clear `r`, which yields revenue of at least `R`.

use std::collections::BTreeSet;

use crate::benchmark::{best_uniform_price, WinnerTieBreak};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::outcome::Outcome;
use crate::profile::{AgentId, Bid, ValuationProfile};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionParams {
    pub target: ValuationProfile,
    pub reserve: Money,
    pub target_revenue: Money,
    pub winner_quota: usize,
}

impl ExtractionParams {
    pub fn new(target: &ValuationProfile, env: &Environment, tie_break: WinnerTieBreak) -> Self {
        let (winner_quota, reserve, target_revenue) =
            best_uniform_price(target.sorted_values(), env.units(), tie_break);
        ExtractionParams {
            target: target.clone(),
            reserve,
            target_revenue,
            winner_quota,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProfitExtractor {
    params: ExtractionParams,
    env: Environment,
}

impl ProfitExtractor {
    pub fn new(target: &ValuationProfile, env: &Environment) -> Self {
        Self::with_tie_break(target, env, WinnerTieBreak::Smallest)
    }

    pub fn with_tie_break(
        target: &ValuationProfile,
        env: &Environment,
        tie_break: WinnerTieBreak,
    ) -> Self {
        ProfitExtractor {
            params: ExtractionParams::new(target, env, tie_break),
            env: *env,
        }
    }

    pub fn params(&self) -> &ExtractionParams {
        &self.params
    }

    /// Served bids in rank order.
    fn winners<'a>(&self, bids: &'a ValuationProfile) -> &'a [Bid] {
        if self.params.target_revenue.is_zero() || !bids.dominates(&self.params.target) {
            return &[];
        }
        let top = &bids.sorted()[..self.env.units().min(bids.len())];
        let cleared = top
            .iter()
            .take_while(|b| b.value >= self.params.reserve && !b.agent.is_pad())
            .count();
        &top[..cleared]
    }

    pub fn allocate(&self, bids: &ValuationProfile) -> BTreeSet<AgentId> {
        self.winners(bids).iter().map(|b| b.agent).collect()
    }

    pub fn serves(&self, bids: &ValuationProfile, agent: AgentId) -> bool {
        self.winners(bids).iter().any(|b| b.agent == agent)
    }

    /// The smallest bid that keeps `agent` served, others held fixed.
    ///
    /// Searches the breakpoint set `{0, r} ∪ ê ∪ other bids`, each value
    /// also shifted up by one unit: with integer money and id tie-breaking
    /// every change of the allocation happens at one of these bids.
    pub fn critical_payment(&self, bids: &ValuationProfile, agent: AgentId) -> Result<Money> {
        let own = bids.value_of(agent).ok_or(Error::UnknownAgent(agent))?;
        if !self.serves(bids, agent) {
            return Err(Error::NotServed(agent));
        }
        let mut candidates: Vec<Money> = std::iter::once(Money::ZERO)
            .chain(std::iter::once(self.params.reserve))
            .chain(self.params.target.sorted_values())
            .chain(
                bids.entries()
                    .iter()
                    .filter(|b| b.agent != agent)
                    .map(|b| b.value),
            )
            .flat_map(|c| [c, c.next_unit()])
            .filter(|&c| c <= own)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        // Candidates ascend, so the first winner is the threshold and the
        // candidate just below it loses.
        for candidate in candidates {
            if self.serves(&bids.with_bid(agent, candidate)?, agent) {
                return Ok(candidate);
            }
        }
        // `own` itself wins, and the threshold is always one of the
        // candidates; reaching here would mean the allocation is not monotone.
        unreachable!("no winning candidate at or below the agent's bid")
    }

    /// Allocation plus critical payments, computed in `O(n log n)`.
    ///
    /// A winner's threshold is the largest of three monotone constraints:
    /// the reserve, outranking the `k`-th ranked rival, and keeping the
    /// dominance check satisfied. For the last one, let
    /// `D(x) = #{ê_i >= x} - #{v_i >= x}` (non-positive while dominance
    /// holds). Replacing a bid `b_p` by `b` keeps dominance iff `b >= x` for
    /// every `x <= b_p` with `D(x) = 0`; the largest such `x` is always a
    /// target value.
    pub fn extract(&self, bids: &ValuationProfile) -> Outcome {
        let winners = self.winners(bids);
        let mut outcome = Outcome::empty();
        if winners.is_empty() {
            return outcome;
        }
        let tight = self.tight_target_values(bids);
        let rival = bids.sorted().get(self.env.units());
        for bid in winners {
            let rank_threshold = match rival {
                Some(r) if bid.agent < r.agent => r.value,
                Some(r) => r.value.next_unit(),
                None => Money::ZERO,
            };
            let dominance_threshold = tight
                .iter()
                .copied()
                .find(|&t| t <= bid.value)
                .unwrap_or(Money::ZERO);
            let price = self
                .params
                .reserve
                .max(rank_threshold)
                .max(dominance_threshold);
            debug_assert!(price <= bid.value);
            outcome.serve(bid.agent, price);
        }
        outcome
    }

    /// Distinct target values `t` with `#{ê_i >= t} == #{v_i >= t}`, in
    /// decreasing order.
    fn tight_target_values(&self, bids: &ValuationProfile) -> Vec<Money> {
        let target: Vec<Money> = self.params.target.sorted_values().collect();
        let market: Vec<Money> = bids.sorted_values().collect();
        let mut tight = Vec::new();
        let mut at_least = 0;
        for (i, &t) in target.iter().enumerate() {
            if target.get(i + 1) == Some(&t) {
                continue;
            }
            while at_least < market.len() && market[at_least] >= t {
                at_least += 1;
            }
            if at_least == i + 1 {
                tight.push(t);
            }
        }
        tight
    }
}

pub fn pe_allocation(
    target: &ValuationProfile,
    bids: &ValuationProfile,
    env: &Environment,
) -> BTreeSet<AgentId> {
    ProfitExtractor::new(target, env).allocate(bids)
}

pub fn pe_critical_payment(
    target: &ValuationProfile,
    bids: &ValuationProfile,
    env: &Environment,
    agent: AgentId,
) -> Result<Money> {
    ProfitExtractor::new(target, env).critical_payment(bids, agent)
}

pub fn profit_extract(
    target: &ValuationProfile,
    bids: &ValuationProfile,
    env: &Environment,
) -> Outcome {
    ProfitExtractor::new(target, env).extract(bids)
}
