use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// A non-negative amount of money in integer base units (e.g. cents).
///
/// All mechanism arithmetic (dominance checks, thresholds, payments,
/// revenue) is done on this type, so no rounding ever happens on a money
/// flow.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Largest accepted bid. Keeps `count * value` products and per-run
    /// revenue sums inside `u64` for any realistic number of agents.
    pub const MAX_BID: u64 = 1_000_000_000_000;

    pub const fn new(amount: u64) -> Self {
        Money(amount)
    }

    pub const fn amount(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// One base unit more, saturating at `u64::MAX`.
    pub const fn next_unit(self) -> Self {
        Money(self.0.saturating_add(1))
    }

    pub const fn saturating_sub(self, other: Money) -> Self {
        Money(self.0.saturating_sub(other.0))
    }

    /// `count` copies of this amount.
    pub fn times(self, count: usize) -> Self {
        let count = u64::try_from(count).expect("count fits in u64");
        Money(self.0.checked_mul(count).expect("money product overflow"))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl From<u64> for Money {
    fn from(amount: u64) -> Self {
        Money(amount)
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0.checked_add(rhs.0).expect("money sum overflow"))
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        *self = *self + rhs;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
