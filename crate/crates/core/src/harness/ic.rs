//! Brute-force search for profitable misreports under fixed coin flips.
//!
//! With integer money, an agent's outcome can only change where her bid
//! crosses some other bid (strictly or with a tie). Every such region is
//! represented by a bid `c - 1`, `c` or `c + 1` for some other bid `c`, plus
//! 0 and one unit above the maximum, so scanning that grid is complete for
//! the instance.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::auction::{run_with_assignment, Group, MechanismSettings, PartitionAssignment};
use crate::environment::Environment;
use crate::error::Result;
use crate::harness::trials::all_assignments;
use crate::money::Money;
use crate::profile::{AgentId, ValuationProfile};
use crate::rng::RandomSource;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IcViolation {
    pub labels: Vec<(AgentId, Group)>,
    pub agent: AgentId,
    pub truthful_value: Money,
    pub deviation_bid: Money,
    pub truthful_utility: i128,
    pub deviation_utility: i128,
}

/// Deviation bids worth trying in `bids`.
pub fn deviation_grid(bids: &ValuationProfile) -> Vec<Money> {
    let mut grid = BTreeSet::from([Money::ZERO]);
    for bid in bids.entries() {
        let v = bid.value.amount();
        grid.extend([v.saturating_sub(1), v, v + 1].map(Money::new));
    }
    let top = bids.top().map_or(Money::ZERO, |b| b.value);
    grid.insert(top.next_unit());
    grid.into_iter().collect()
}

/// All profitable single-agent deviations for one fixed labelling.
pub fn ic_scan(
    bids: &ValuationProfile,
    env: &Environment,
    assignment: &PartitionAssignment,
    settings: MechanismSettings,
) -> Result<Vec<IcViolation>> {
    let truthful = run_with_assignment(bids, env, assignment, settings)?;
    let grid = deviation_grid(bids);
    let mut violations = Vec::new();
    for bid in bids.entries() {
        let honest = truthful.utility(bid.agent, bid.value);
        for &deviation in &grid {
            if deviation == bid.value {
                continue;
            }
            let misreport = bids.with_bid(bid.agent, deviation)?;
            let outcome = run_with_assignment(&misreport, env, assignment, settings)?;
            let gained = outcome.utility(bid.agent, bid.value);
            if gained > honest {
                violations.push(IcViolation {
                    labels: assignment.labels().iter().map(|(&a, &g)| (a, g)).collect(),
                    agent: bid.agent,
                    truthful_value: bid.value,
                    deviation_bid: deviation,
                    truthful_utility: honest,
                    deviation_utility: gained,
                });
            }
        }
    }
    Ok(violations)
}

/// [`ic_scan`] over all `3^n` labellings.
pub fn ic_scan_all_assignments(
    bids: &ValuationProfile,
    env: &Environment,
    settings: MechanismSettings,
) -> Result<Vec<IcViolation>> {
    let agents: Vec<AgentId> = bids.agents().collect();
    let mut all = Vec::new();
    for assignment in all_assignments(&agents) {
        all.extend(ic_scan(bids, env, &assignment, settings)?);
    }
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IcReport {
    pub instances: u64,
    pub seed: u64,
    pub assignments_scanned: u64,
    pub violations: u64,
    /// Up to a handful of violations, for replay.
    pub examples: Vec<IcViolation>,
    pub pass: bool,
}

pub const IC_MAX_AGENTS: usize = 5;
const IC_MAX_VALUE: u64 = 12;
const IC_EXAMPLES: usize = 5;

/// Instance `i`: 1 to 5 agents with small values (ties are common) and
/// 1 to n + 1 units.
fn random_ic_instance<R: Rng>(rng: &mut R) -> (ValuationProfile, Environment) {
    let n = rng.random_range(1..=IC_MAX_AGENTS);
    let values: Vec<u64> = (0..n).map(|_| rng.random_range(0..=IC_MAX_VALUE)).collect();
    let units = rng.random_range(1..=n + 1);
    (
        ValuationProfile::from_values(&values).expect("small values"),
        Environment::new(units).expect("units >= 1"),
    )
}

/// Exhaustive deviation scan over random instances and all their labellings.
pub fn check_ic(instances: u64, seed: u64, settings: MechanismSettings) -> Result<IcReport> {
    let source = RandomSource::new(seed);
    let per_instance: Vec<(u64, Vec<IcViolation>)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let (bids, env) = random_ic_instance(&mut source.stream(i));
            let scanned = 3u64.pow(bids.len() as u32);
            ic_scan_all_assignments(&bids, &env, settings).map(|v| (scanned, v))
        })
        .collect::<Result<_>>()?;
    let assignments_scanned = per_instance.iter().map(|(s, _)| s).sum();
    let violations = per_instance.iter().map(|(_, v)| v.len() as u64).sum();
    let examples = per_instance
        .into_iter()
        .flat_map(|(_, v)| v)
        .take(IC_EXAMPLES)
        .collect();
    Ok(IcReport {
        instances,
        seed,
        assignments_scanned,
        violations,
        examples,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::WinnerTieBreak;

    fn id(n: u32) -> AgentId {
        AgentId::new(n).unwrap()
    }

    fn regression_instance() -> (ValuationProfile, PartitionAssignment) {
        use Group::*;
        let bids = ValuationProfile::from_values(&[80, 40, 70, 90, 50]).unwrap();
        let labels = PartitionAssignment::from_labels(
            [A, A, B, C, C].into_iter().enumerate().map(|(i, g)| (id(i as u32 + 1), g)),
        )
        .unwrap();
        (bids, labels)
    }

    #[test]
    fn grid_covers_breakpoints() {
        let bids = ValuationProfile::from_values(&[5, 0, 9]).unwrap();
        let grid: Vec<u64> = deviation_grid(&bids).iter().map(|m| m.amount()).collect();
        assert_eq!(grid, [0, 1, 4, 5, 6, 8, 9, 10]);
    }

    #[test]
    fn regression_instance_breaks_without_the_bump() {
        let (bids, labels) = regression_instance();
        let env = Environment::new(5).unwrap();
        let loose = MechanismSettings {
            payment_bump: false,
            tie_break: WinnerTieBreak::Largest,
        };
        let found = ic_scan(&bids, &env, &labels, loose).unwrap();
        let flip = found
            .iter()
            .find(|v| v.agent == id(3) && v.deviation_bid == Money::new(91))
            .expect("sample agent profits by flipping the orientation");
        assert_eq!((flip.truthful_utility, flip.deviation_utility), (0, 30));

        assert!(ic_scan(&bids, &env, &labels, MechanismSettings::default()).unwrap().is_empty());
    }

    #[test]
    fn single_agent_has_nothing_to_gain() {
        let bids = ValuationProfile::from_values(&[6]).unwrap();
        let env = Environment::new(1).unwrap();
        assert!(ic_scan_all_assignments(&bids, &env, MechanismSettings::default()).unwrap().is_empty());
    }

    #[test]
    fn tie_heavy_instances_are_truthful() {
        let env = Environment::new(5).unwrap();
        for values in [[10, 9, 9, 8, 8], [7, 7, 7, 7, 7], [20, 20, 19, 18, 18], [8, 8, 0, 0, 3]] {
            let bids = ValuationProfile::from_values(&values).unwrap();
            let found = ic_scan_all_assignments(&bids, &env, MechanismSettings::default()).unwrap();
            assert!(found.is_empty(), "{values:?}: {:?}", found.first());
        }
    }

    #[test]
    fn random_scan_small() {
        let report = check_ic(20, 3, MechanismSettings::default()).unwrap();
        assert!(report.pass, "{:?}", report.examples);
        assert!(report.assignments_scanned >= 20);
    }
}
