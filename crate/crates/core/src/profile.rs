use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// Identifier of a bidder.
///
/// Ids at or above [`AgentId::PAD_BASE`] are reserved for the zero entries
/// added by [`ValuationProfile::pad`]; such entries are never served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(u32);

impl AgentId {
    pub const PAD_BASE: u32 = 1 << 31;

    pub fn new(id: u32) -> Result<Self> {
        if id >= Self::PAD_BASE {
            return Err(Error::ReservedAgentId(id));
        }
        Ok(AgentId(id))
    }

    fn pad(index: usize) -> Self {
        let index = u32::try_from(index).expect("padding index fits in u32");
        AgentId(Self::PAD_BASE + index)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_pad(self) -> bool {
        self.0 >= Self::PAD_BASE
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pad() {
            write!(f, "pad#{}", self.0 - Self::PAD_BASE)
        } else {
            self.0.fmt(f)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bid {
    pub agent: AgentId,
    pub value: Money,
}

impl Bid {
    pub fn new(agent: AgentId, value: Money) -> Self {
        Bid { agent, value }
    }

    /// The canonical rank order: higher value first, ties to the lower id.
    pub fn rank_cmp(&self, other: &Bid) -> Ordering {
        other
            .value
            .cmp(&self.value)
            .then(self.agent.cmp(&other.agent))
    }

    /// Whether `self` ranks strictly ahead of `other`.
    pub fn outranks(&self, other: &Bid) -> bool {
        self.rank_cmp(other) == Ordering::Less
    }
}

/// Bids of a set of agents together with their canonical sorted view.
///
/// The sorted view is non-increasing in value with ties broken by ascending
/// agent id, so it is a deterministic function of the entries.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValuationProfile {
    entries: Vec<Bid>,
    sorted: Vec<Bid>,
}

impl ValuationProfile {
    /// Builds a profile from values, assigning ids `1..=n` unless `ids` is
    /// given.
    pub fn new(values: &[Money], ids: Option<&[AgentId]>) -> Result<Self> {
        let bids = match ids {
            Some(ids) => {
                if ids.len() != values.len() {
                    return Err(Error::IdCountMismatch {
                        ids: ids.len(),
                        values: values.len(),
                    });
                }
                ids.iter()
                    .zip(values)
                    .map(|(&agent, &value)| Bid::new(agent, value))
                    .collect()
            }
            None => values
                .iter()
                .enumerate()
                .map(|(i, &value)| Ok(Bid::new(AgentId::new(sequential_id(i))?, value)))
                .collect::<Result<Vec<_>>>()?,
        };
        Self::from_bids(bids)
    }

    /// Shorthand for [`ValuationProfile::new`] with raw amounts and ids `1..=n`.
    pub fn from_values(values: &[u64]) -> Result<Self> {
        let values: Vec<Money> = values.iter().copied().map(Money::new).collect();
        Self::new(&values, None)
    }

    pub fn from_bids(entries: Vec<Bid>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for bid in &entries {
            if !seen.insert(bid.agent) {
                return Err(Error::DuplicateAgent(bid.agent));
            }
            if bid.value.amount() > Money::MAX_BID {
                return Err(Error::ValueTooLarge(bid.value.amount()));
            }
        }
        Ok(Self::from_checked(entries))
    }

    fn from_checked(entries: Vec<Bid>) -> Self {
        let mut sorted = entries.clone();
        sorted.sort_by(Bid::rank_cmp);
        ValuationProfile { entries, sorted }
    }

    pub fn entries(&self) -> &[Bid] {
        &self.entries
    }

    pub fn sorted(&self) -> &[Bid] {
        &self.sorted
    }

    pub fn sorted_values(&self) -> impl ExactSizeIterator<Item = Money> + '_ {
        self.sorted.iter().map(|b| b.value)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.entries.iter().map(|b| b.agent)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries that are not padding.
    pub fn real_len(&self) -> usize {
        self.entries.iter().filter(|b| !b.agent.is_pad()).count()
    }

    pub fn value_of(&self, agent: AgentId) -> Option<Money> {
        self.entries
            .iter()
            .find(|b| b.agent == agent)
            .map(|b| b.value)
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.entries.iter().any(|b| b.agent == agent)
    }

    /// The top-ranked bid.
    pub fn top(&self) -> Option<&Bid> {
        self.sorted.first()
    }

    /// The `i`-th highest value (0-based), zero past the end.
    pub fn order_stat(&self, i: usize) -> Money {
        self.sorted.get(i).map_or(Money::ZERO, |b| b.value)
    }

    /// Extends the profile with zero-valued padding entries to `length`.
    pub fn pad(&self, length: usize) -> Result<Self> {
        let current = self.len();
        if length < current {
            return Err(Error::PadTooShort {
                current,
                requested: length,
            });
        }
        let mut entries = self.entries.clone();
        entries.extend((current..length).map(|i| Bid::new(AgentId::pad(i), Money::ZERO)));
        Ok(Self::from_checked(entries))
    }

    /// Pointwise dominance of the sorted views, the shorter one padded with
    /// zeros.
    pub fn dominates(&self, other: &ValuationProfile) -> bool {
        let len = self.len().max(other.len());
        (0..len).all(|i| self.order_stat(i) >= other.order_stat(i))
    }

    /// The profile with its highest value lowered to the second highest.
    ///
    /// A single agent is lowered to zero; an empty profile stays empty.
    pub fn v_super2(&self) -> Self {
        let mut entries = self.entries.clone();
        if let Some(top) = self.top() {
            let second = self.order_stat(1);
            if let Some(bid) = entries.iter_mut().find(|b| b.agent == top.agent) {
                bid.value = second;
            }
        }
        Self::from_checked(entries)
    }

    /// The profile without its top-ranked agent.
    pub fn v_minus1(&self) -> Result<Self> {
        let top = self.top().ok_or(Error::EmptyProfile)?.agent;
        Ok(self.restrict(|agent| agent != top))
    }

    /// The sub-profile of agents accepted by `keep`, in entry order.
    pub fn restrict(&self, mut keep: impl FnMut(AgentId) -> bool) -> Self {
        let entries = self
            .entries
            .iter()
            .copied()
            .filter(|b| keep(b.agent))
            .collect();
        Self::from_checked(entries)
    }

    /// The same profile with `agent`'s bid replaced by `value`.
    pub fn with_bid(&self, agent: AgentId, value: Money) -> Result<Self> {
        if value.amount() > Money::MAX_BID {
            return Err(Error::ValueTooLarge(value.amount()));
        }
        let mut entries = self.entries.clone();
        let bid = entries
            .iter_mut()
            .find(|b| b.agent == agent)
            .ok_or(Error::UnknownAgent(agent))?;
        bid.value = value;
        Ok(Self::from_checked(entries))
    }
}

fn sequential_id(index: usize) -> u32 {
    u32::try_from(index + 1).unwrap_or(u32::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(values: &[u64]) -> ValuationProfile {
        ValuationProfile::from_values(values).unwrap()
    }

    fn values(p: &ValuationProfile) -> Vec<u64> {
        p.sorted_values().map(Money::amount).collect()
    }

    fn ids(p: &ValuationProfile) -> Vec<u32> {
        p.sorted().iter().map(|b| b.agent.get()).collect()
    }

    fn id(n: u32) -> AgentId {
        AgentId::new(n).unwrap()
    }

    #[test]
    fn sorted_view_and_tie_rule() {
        let p = profile(&[5, 10, 8]);
        assert_eq!(values(&p), [10, 8, 5]);
        assert_eq!(ids(&p), [2, 3, 1]);

        assert!(values(&profile(&[])).is_empty());

        let tied =
            ValuationProfile::new(&[Money::new(7), Money::new(7)], Some(&[id(2), id(1)])).unwrap();
        assert_eq!(values(&tied), [7, 7]);
        assert_eq!(ids(&tied), [1, 2]);
    }

    #[test]
    fn rejects_bad_ids() {
        let err = ValuationProfile::new(&[Money::new(1), Money::new(2)], Some(&[id(4), id(4)]));
        assert_eq!(err, Err(Error::DuplicateAgent(id(4))));
        assert!(matches!(
            ValuationProfile::new(&[Money::new(1)], Some(&[])),
            Err(Error::IdCountMismatch { .. })
        ));
        assert!(AgentId::new(AgentId::PAD_BASE).is_err());
        assert!(ValuationProfile::from_values(&[Money::MAX_BID + 1]).is_err());
    }

    #[test]
    fn padding() {
        let p = profile(&[9]).pad(3).unwrap();
        assert_eq!(values(&p), [9, 0, 0]);
        assert_eq!(p.real_len(), 1);
        assert!(p.sorted()[1].agent.is_pad());
        assert!(p.sorted()[2].agent.is_pad());

        assert_eq!(profile(&[10, 8]).pad(2).unwrap(), profile(&[10, 8]));
        assert_eq!(values(&profile(&[]).pad(2).unwrap()), [0, 0]);
        assert!(matches!(
            profile(&[1, 2]).pad(1),
            Err(Error::PadTooShort { .. })
        ));

        // Padding twice keeps pad ids unique.
        let twice = profile(&[4]).pad(2).unwrap().pad(4).unwrap();
        assert_eq!(twice.len(), 4);
    }

    #[test]
    fn dominance_examples() {
        assert!(profile(&[10, 8, 5]).dominates(&profile(&[7, 6, 0])));
        assert!(!profile(&[10, 8]).dominates(&profile(&[9, 9])));
        assert!(profile(&[10, 8, 5]).dominates(&profile(&[9])));
        assert!(!profile(&[9]).dominates(&profile(&[9, 1])));
        assert!(profile(&[]).dominates(&profile(&[0, 0])));
    }

    #[test]
    fn v_super2_examples() {
        assert_eq!(values(&profile(&[10, 8, 5]).v_super2()), [8, 8, 5]);
        assert_eq!(values(&profile(&[5, 5]).v_super2()), [5, 5]);
        assert_eq!(values(&profile(&[7]).v_super2()), [0]);
        assert!(profile(&[]).v_super2().is_empty());
    }

    #[test]
    fn v_minus1_examples() {
        assert_eq!(values(&profile(&[10, 8, 5]).v_minus1().unwrap()), [8, 5]);
        assert!(profile(&[7]).v_minus1().unwrap().is_empty());
        let tied = profile(&[7, 7]).v_minus1().unwrap();
        assert_eq!(values(&tied), [7]);
        assert_eq!(ids(&tied), [2]);
        assert_eq!(profile(&[]).v_minus1(), Err(Error::EmptyProfile));
    }

    #[test]
    fn with_bid_rejects_unknown_agent() {
        assert_eq!(
            profile(&[3]).with_bid(id(9), Money::new(1)),
            Err(Error::UnknownAgent(id(9)))
        );
    }

    fn small_values(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..20, 0..max_len)
    }

    proptest! {
        #[test]
        fn sorted_view_is_canonical(vals in small_values(12)) {
            let p = profile(&vals);
            for w in p.sorted().windows(2) {
                prop_assert!(w[0].outranks(&w[1]));
            }
            let mut rev = p.entries().to_vec();
            rev.reverse();
            let rebuilt = ValuationProfile::from_bids(rev).unwrap();
            prop_assert_eq!(rebuilt.sorted(), p.sorted());
        }

        #[test]
        fn raising_a_bid_raises_every_order_stat(
            vals in prop::collection::vec(0u64..20, 1..10),
            pick in any::<prop::sample::Index>(),
            raise in 1u64..10,
        ) {
            let p = profile(&vals);
            let bid = p.entries()[pick.index(vals.len())];
            let raised = p.with_bid(bid.agent, Money::new(bid.value.amount() + raise)).unwrap();
            prop_assert!(raised.dominates(&p));
        }

        #[test]
        fn dominance_is_a_preorder(a in small_values(6), b in small_values(6), c in small_values(6)) {
            let (a, b, c) = (profile(&a), profile(&b), profile(&c));
            prop_assert!(a.dominates(&a));
            if a.dominates(&b) && b.dominates(&c) {
                prop_assert!(a.dominates(&c));
            }
        }

        #[test]
        fn padding_preserves_dominance(a in small_values(6), b in small_values(6), extra in 0usize..4) {
            let (a, b) = (profile(&a), profile(&b));
            let len = a.len().max(b.len()) + extra;
            let padded = a.pad(len).unwrap();
            let opponent = b.pad(len).unwrap();
            prop_assert_eq!(padded.dominates(&opponent), a.dominates(&b));
            prop_assert_eq!(opponent.dominates(&padded), b.dominates(&a));
        }
    }
}
