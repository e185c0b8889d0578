use std::collections::BTreeMap;

use serde::Serialize;

use crate::environment::Environment;
use crate::money::Money;
use crate::profile::{AgentId, ValuationProfile};

/// Served agents and what each of them pays. Unserved agents pay nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Outcome {
    payments: BTreeMap<AgentId, Money>,
}

impl Outcome {
    pub fn empty() -> Self {
        Outcome::default()
    }

    pub fn serve(&mut self, agent: AgentId, price: Money) {
        self.payments.insert(agent, price);
    }

    pub fn is_served(&self, agent: AgentId) -> bool {
        self.payments.contains_key(&agent)
    }

    pub fn served(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.payments.keys().copied()
    }

    pub fn served_count(&self) -> usize {
        self.payments.len()
    }

    pub fn payments(&self) -> &BTreeMap<AgentId, Money> {
        &self.payments
    }

    pub fn payment(&self, agent: AgentId) -> Money {
        self.payments.get(&agent).copied().unwrap_or(Money::ZERO)
    }

    pub(crate) fn payment_mut(&mut self, agent: AgentId) -> Option<&mut Money> {
        self.payments.get_mut(&agent)
    }

    pub fn revenue(&self) -> Money {
        self.payments.values().sum()
    }

    /// Utility of `agent` whose true value is `value`.
    pub fn utility(&self, agent: AgentId, value: Money) -> i128 {
        match self.payments.get(&agent) {
            Some(price) => i128::from(value.amount()) - i128::from(price.amount()),
            None => 0,
        }
    }

    /// Checks feasibility, ex-post individual rationality against `bids`, and
    /// that only real (non-padding) bidders are served. Returns a description
    /// of the first broken invariant.
    pub fn check(&self, bids: &ValuationProfile, env: &Environment) -> Result<(), String> {
        if !env.is_feasible(self.served_count()) {
            return Err(format!(
                "{} agents served with {} units",
                self.served_count(),
                env.units()
            ));
        }
        for (&agent, &price) in &self.payments {
            if agent.is_pad() {
                return Err(format!("padding entry {agent} served"));
            }
            let Some(bid) = bids.value_of(agent) else {
                return Err(format!("served agent {agent} did not bid"));
            };
            if price > bid {
                return Err(format!("agent {agent} pays {price} above bid {bid}"));
            }
        }
        Ok(())
    }
}
