//! The BSPE mechanism.
//!
//! 1. Each agent independently lands in group A, B or C with probabilities
//!    `p`, `p` and `1 - 2p`.
//! 2. A and B are relabelled, if needed, so that the top-ranked agent of
//!    A ∪ B is in A. The market is A ∪ C and the sample is B.
//! 3. Market and sample bids are padded with zeros to equal length.
//! 4. The profit extractor targeting the sample runs on the market. If the
//!    top agent of A wins there and the runner-up of A ∪ B is in B, her
//!    payment is raised to the runner-up's bid.
//! 5. If the extractor serves nobody, the overall top bidder is served at
//!    the second-highest bid.
//!
//! All rank comparisons (orientation, runner-up, overall top) use the
//! canonical order of [`Bid::rank_cmp`]: higher bid first, ties to the lower
//! agent id.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::WinnerTieBreak;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::extractor::ProfitExtractor;
use crate::outcome::Outcome;
use crate::profile::{AgentId, Bid, ValuationProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    C,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::A, Group::B, Group::C];

    fn swapped(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
            Group::C => Group::C,
        }
    }
}

/// Probability `p` of each of the two coin groups; C gets `1 - 2p`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct SamplingBias(f64);

impl SamplingBias {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 0.5 {
            Ok(SamplingBias(p))
        } else {
            Err(Error::InvalidBias(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn probability(self, group: Group) -> f64 {
        match group {
            Group::A | Group::B => self.0,
            Group::C => 1.0 - 2.0 * self.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PartitionAssignment {
    labels: BTreeMap<AgentId, Group>,
}

impl PartitionAssignment {
    pub fn from_labels(labels: impl IntoIterator<Item = (AgentId, Group)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (agent, group) in labels {
            if map.insert(agent, group).is_some() {
                return Err(Error::DuplicateAgent(agent));
            }
        }
        Ok(PartitionAssignment { labels: map })
    }

    pub fn label(&self, agent: AgentId) -> Option<Group> {
        self.labels.get(&agent).copied()
    }

    pub fn labels(&self) -> &BTreeMap<AgentId, Group> {
        &self.labels
    }

    pub fn count(&self, group: Group) -> usize {
        self.labels.values().filter(|&&g| g == group).count()
    }

    /// Probability of drawing exactly this assignment.
    pub fn probability(&self, bias: SamplingBias) -> f64 {
        self.labels.values().map(|&g| bias.probability(g)).product()
    }
}

/// Labels each agent A, B or C independently, one uniform draw per agent in
/// the given order.
pub fn partition<R: Rng + ?Sized>(
    agents: impl IntoIterator<Item = AgentId>,
    bias: SamplingBias,
    rng: &mut R,
) -> PartitionAssignment {
    let p = bias.get();
    let labels = agents
        .into_iter()
        .map(|agent| {
            let u: f64 = rng.random();
            let group = if u < p {
                Group::A
            } else if u < 2.0 * p {
                Group::B
            } else {
                Group::C
            };
            (agent, group)
        })
        .collect();
    PartitionAssignment { labels }
}

/// Post-swap labelling of a partition against a bid profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    pub swapped: bool,
    labels: BTreeMap<AgentId, Group>,
    /// The two top-ranked bids of A ∪ B; the first is always in A.
    leaders: Vec<Bid>,
}

impl Orientation {
    pub fn group(&self, agent: AgentId) -> Option<Group> {
        self.labels.get(&agent).copied()
    }

    pub fn in_market(&self, agent: AgentId) -> bool {
        matches!(self.group(agent), Some(Group::A | Group::C))
    }

    pub fn in_sample(&self, agent: AgentId) -> bool {
        self.group(agent) == Some(Group::B)
    }

    /// Top-ranked agent of A (and of A ∪ B).
    pub fn a_top(&self) -> Option<Bid> {
        self.leaders.first().copied()
    }

    /// Runner-up of A ∪ B.
    pub fn runner_up(&self) -> Option<Bid> {
        self.leaders.get(1).copied()
    }

    pub fn market(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.labels
            .iter()
            .filter(|(_, g)| **g != Group::B)
            .map(|(&a, _)| a)
    }

    pub fn sample(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.labels
            .iter()
            .filter(|(_, g)| **g == Group::B)
            .map(|(&a, _)| a)
    }
}

/// Swaps A and B iff the top-ranked agent of A ∪ B is in B.
pub fn orient(assignment: &PartitionAssignment, bids: &ValuationProfile) -> Result<Orientation> {
    let mut leaders = Vec::with_capacity(2);
    let mut top_group = None;
    for bid in bids.sorted() {
        let group = assignment
            .label(bid.agent)
            .ok_or(Error::UnknownAgent(bid.agent))?;
        if group != Group::C && leaders.len() < 2 {
            top_group.get_or_insert(group);
            leaders.push(*bid);
        }
    }
    let swapped = top_group == Some(Group::B);
    let labels = bids
        .agents()
        .map(|agent| {
            let group = assignment.labels[&agent];
            (agent, if swapped { group.swapped() } else { group })
        })
        .collect();
    Ok(Orientation {
        swapped,
        labels,
        leaders,
    })
}

/// Switches used to reproduce known failure modes; the defaults are the
/// mechanism proper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MechanismSettings {
    pub payment_bump: bool,
    pub tie_break: WinnerTieBreak,
}

impl Default for MechanismSettings {
    fn default() -> Self {
        MechanismSettings {
            payment_bump: true,
            tie_break: WinnerTieBreak::Smallest,
        }
    }
}

/// One run of the mechanism with its coins drawn from `rng`.
pub fn bspe_run<R: Rng + ?Sized>(
    bids: &ValuationProfile,
    env: &Environment,
    bias: SamplingBias,
    rng: &mut R,
) -> Outcome {
    let assignment = partition(bids.agents(), bias, rng);
    run_with_assignment(bids, env, &assignment, MechanismSettings::default())
        .expect("partition labels every bidder")
}

/// The mechanism for a fixed coin realisation.
pub fn run_with_assignment(
    bids: &ValuationProfile,
    env: &Environment,
    assignment: &PartitionAssignment,
    settings: MechanismSettings,
) -> Result<Outcome> {
    let orientation = orient(assignment, bids)?;
    let market = bids.restrict(|a| orientation.in_market(a));
    let sample = bids.restrict(|a| orientation.in_sample(a));
    let len = market.len().max(sample.len());
    let market = market.pad(len)?;
    let sample = sample.pad(len)?;

    let extractor = ProfitExtractor::with_tie_break(&sample, env, settings.tie_break);
    let mut outcome = extractor.extract(&market);

    if settings.payment_bump {
        if let (Some(top), Some(runner_up)) = (orientation.a_top(), orientation.runner_up()) {
            if orientation.in_sample(runner_up.agent) {
                if let Some(price) = outcome.payment_mut(top.agent) {
                    *price = (*price).max(runner_up.value);
                }
            }
        }
    }

    if outcome.served_count() == 0 && env.is_feasible(1) {
        if let Some(top) = bids.top() {
            outcome.serve(top.agent, bids.order_stat(1));
        }
    }
    Ok(outcome)
}

/// Serves the top-ranked bidder at the second-highest bid.
pub fn vickrey_1unit(bids: &ValuationProfile) -> Outcome {
    let mut outcome = Outcome::empty();
    if let Some(top) = bids.top() {
        outcome.serve(top.agent, bids.order_stat(1));
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Money;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn id(n: u32) -> AgentId {
        AgentId::new(n).unwrap()
    }

    fn env(k: usize) -> Environment {
        Environment::new(k).unwrap()
    }

    /// Bids with ids `1..=n` and the matching labels.
    fn instance(layout: &[(u64, Group)]) -> (ValuationProfile, PartitionAssignment) {
        let values: Vec<u64> = layout.iter().map(|s| s.0).collect();
        let bids = ValuationProfile::from_values(&values).unwrap();
        let labels = PartitionAssignment::from_labels(
            layout.iter().enumerate().map(|(i, s)| (id(i as u32 + 1), s.1)),
        )
        .unwrap();
        (bids, labels)
    }

    fn paid(outcome: &Outcome) -> Vec<(u32, u64)> {
        outcome
            .payments()
            .iter()
            .map(|(a, m)| (a.get(), m.amount()))
            .collect()
    }

    #[test]
    fn bias_must_be_inside_open_interval() {
        for p in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(SamplingBias::new(p).is_err());
        }
        assert!(SamplingBias::new(0.26).is_ok());
    }

    #[test]
    fn partition_limits_and_frequencies() {
        let agents: Vec<AgentId> = (1..=100).map(id).collect();
        let tiny = SamplingBias::new(1e-12).unwrap();
        let labels = partition(agents.iter().copied(), tiny, &mut RandomSource::new(1).stream(0));
        assert_eq!(labels.count(Group::C), 100);

        let n = 10_000u32;
        let bias = SamplingBias::new(0.26).unwrap();
        let big = partition((1..=n).map(id), bias, &mut RandomSource::new(2).stream(0));
        let sd = (f64::from(n) * 0.26 * 0.74).sqrt();
        for group in [Group::A, Group::B] {
            let dev = (big.count(group) as f64 - f64::from(n) * 0.26).abs();
            assert!(dev <= 4.0 * sd, "{group:?} off by {dev}");
        }

        let again = partition((1..=n).map(id), bias, &mut RandomSource::new(2).stream(0));
        assert_eq!(big, again);
    }

    #[test]
    fn orientation_examples() {
        let (bids, labels) = instance(&[(8, Group::A), (2, Group::A), (5, Group::B)]);
        let o = orient(&labels, &bids).unwrap();
        assert!(!o.swapped);
        assert_eq!(o.market().collect::<Vec<_>>(), [id(1), id(2)]);
        assert_eq!(o.sample().collect::<Vec<_>>(), [id(3)]);

        let (bids, labels) = instance(&[(5, Group::A), (8, Group::B)]);
        let o = orient(&labels, &bids).unwrap();
        assert!(o.swapped);
        assert_eq!(o.market().collect::<Vec<_>>(), [id(2)]);
        assert_eq!(o.sample().collect::<Vec<_>>(), [id(1)]);
    }

    #[test]
    fn orientation_ties_follow_agent_ids() {
        let (bids, labels) = instance(&[(7, Group::A), (7, Group::B)]);
        assert!(!orient(&labels, &bids).unwrap().swapped);
        let (bids, labels) = instance(&[(7, Group::B), (7, Group::A)]);
        assert!(orient(&labels, &bids).unwrap().swapped);
        // Empty A ∪ B.
        let (bids, labels) = instance(&[(3, Group::C)]);
        let o = orient(&labels, &bids).unwrap();
        assert!(!o.swapped && o.a_top().is_none());
    }

    #[test]
    fn orient_requires_every_bidder_labelled() {
        let bids = ValuationProfile::from_values(&[3, 4]).unwrap();
        let labels = PartitionAssignment::from_labels([(id(1), Group::A)]).unwrap();
        assert_eq!(orient(&labels, &bids), Err(Error::UnknownAgent(id(2))));
    }

    #[test]
    fn full_trace_with_payment_bump() {
        use Group::*;
        let (bids, labels) = instance(&[(90, C), (80, A), (66, C), (70, B), (65, B)]);
        let outcome =
            run_with_assignment(&bids, &env(3), &labels, MechanismSettings::default()).unwrap();
        assert_eq!(paid(&outcome), [(1, 65), (2, 70), (3, 65)]);
        assert_eq!(outcome.revenue(), Money::new(200));
    }

    #[test]
    fn fallback_when_dominance_fails() {
        use Group::*;
        let (bids, labels) = instance(&[(8, A), (7, B), (6, B), (5, C), (4, C)]);
        let outcome =
            run_with_assignment(&bids, &env(2), &labels, MechanismSettings::default()).unwrap();
        assert_eq!(paid(&outcome), [(1, 7)]);
    }

    #[test]
    fn single_agent_is_served_for_free() {
        for group in Group::ALL {
            let (bids, labels) = instance(&[(42, group)]);
            let outcome =
                run_with_assignment(&bids, &env(1), &labels, MechanismSettings::default()).unwrap();
            assert_eq!(paid(&outcome), [(1, 0)]);
        }
        let none = ValuationProfile::from_values(&[]).unwrap();
        let mut rng = RandomSource::new(0).stream(0);
        let outcome = bspe_run(&none, &env(1), SamplingBias::new(0.2).unwrap(), &mut rng);
        assert_eq!(outcome.served_count(), 0);
    }

    #[test]
    fn orientation_flip_regression() {
        use Group::*;
        // Agent 3 (value 70, in B) reports 95 and flips the orientation.
        let (bids, labels) = instance(&[(80, A), (40, A), (95, B), (90, C), (50, C)]);
        let loose = MechanismSettings {
            payment_bump: false,
            tie_break: WinnerTieBreak::Largest,
        };
        let outcome = run_with_assignment(&bids, &env(5), &labels, loose).unwrap();
        assert_eq!(outcome.payment(id(3)), Money::new(40));

        let outcome =
            run_with_assignment(&bids, &env(5), &labels, MechanismSettings::default()).unwrap();
        assert!(!outcome.is_served(id(3)) || outcome.payment(id(3)) >= Money::new(80));
    }

    #[test]
    fn vickrey_examples() {
        let p = ValuationProfile::from_values(&[10, 8, 5]).unwrap();
        assert_eq!(paid(&vickrey_1unit(&p)), [(1, 8)]);
        let p = ValuationProfile::from_values(&[7]).unwrap();
        assert_eq!(paid(&vickrey_1unit(&p)), [(1, 0)]);
        let p = ValuationProfile::new(&[Money::new(7), Money::new(7)], Some(&[id(5), id(3)])).unwrap();
        assert_eq!(paid(&vickrey_1unit(&p)), [(3, 7)]);
        assert_eq!(vickrey_1unit(&ValuationProfile::default()).served_count(), 0);
    }

    fn labelled() -> impl Strategy<Value = (Vec<(u64, Group)>, usize)> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(
                    (0u64..25, prop::sample::select(Group::ALL.to_vec())),
                    n,
                ),
                1usize..=n + 1,
            )
        })
    }

    proptest! {
        #[test]
        fn outcome_invariants((layout, k) in labelled()) {
            let (bids, labels) = instance(&layout);
            let e = env(k);
            let outcome = run_with_assignment(&bids, &e, &labels, MechanismSettings::default()).unwrap();
            prop_assert!(outcome.check(&bids, &e).is_ok());
            prop_assert!(outcome.served_count() >= 1);

            let o = orient(&labels, &bids).unwrap();
            let a_max = bids.entries().iter().filter(|b| o.group(b.agent) == Some(Group::A)).map(|b| b.value).max();
            let b_max = bids.entries().iter().filter(|b| o.group(b.agent) == Some(Group::B)).map(|b| b.value).max();
            prop_assert!(a_max.unwrap_or(Money::ZERO) >= b_max.unwrap_or(Money::ZERO));
        }

        #[test]
        fn fallback_only_when_extractor_rejects((layout, k) in labelled()) {
            let (bids, labels) = instance(&layout);
            let e = env(k);
            let o = orient(&labels, &bids).unwrap();
            let market = bids.restrict(|a| o.in_market(a));
            let sample = bids.restrict(|a| o.in_sample(a));
            let len = market.len().max(sample.len());
            let extracted = ProfitExtractor::new(&sample.pad(len).unwrap(), &e).extract(&market.pad(len).unwrap());
            let outcome = run_with_assignment(&bids, &e, &labels, MechanismSettings::default()).unwrap();
            if extracted.served_count() > 0 {
                prop_assert_eq!(
                    outcome.served().collect::<Vec<_>>(),
                    extracted.served().collect::<Vec<_>>()
                );
            } else {
                prop_assert_eq!(outcome.served_count(), 1);
                prop_assert_eq!(outcome.served().next(), bids.top().map(|b| b.agent));
            }
        }

        #[test]
        fn runs_are_deterministic(vals in prop::collection::vec(0u64..100, 0..12), seed in any::<u64>(), stream in any::<u64>()) {
            let bids = ValuationProfile::from_values(&vals).unwrap();
            let e = env(3);
            let bias = SamplingBias::new(0.26).unwrap();
            let src = RandomSource::new(seed);
            let first = bspe_run(&bids, &e, bias, &mut src.stream(stream));
            let second = bspe_run(&bids, &e, bias, &mut src.stream(stream));
            prop_assert_eq!(first, second);
        }
    }
}
