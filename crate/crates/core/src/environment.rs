use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-unit supply constraint: at most `units` agents may be served.
///
/// Digital goods are the case `units >= n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Environment {
    units: usize,
}

impl Environment {
    pub fn new(units: usize) -> Result<Self> {
        if units == 0 {
            return Err(Error::ZeroUnits);
        }
        Ok(Environment { units })
    }

    /// Unlimited supply for `agents` agents.
    pub fn digital_goods(agents: usize) -> Self {
        Environment {
            units: agents.max(1),
        }
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn is_digital_goods_for(&self, agents: usize) -> bool {
        self.units >= agents
    }

    /// Whether a set of `count` served agents is feasible.
    pub fn is_feasible(&self, count: usize) -> bool {
        count <= self.units
    }
}
