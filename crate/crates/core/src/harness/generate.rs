use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ValuationProfile;
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `v_i = floor(scale / i)`.
    EqualRevenue,
    /// Independent integers in `[1, scale]`.
    Uniform,
    /// Half the agents from `[1, scale / 10]`, half from `[scale / 2, scale]`
    /// (each agent picks a band by a fair coin).
    Bimodal,
    /// Every value equals `scale`.
    Constant,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [
        ProfileKind::EqualRevenue,
        ProfileKind::Uniform,
        ProfileKind::Bimodal,
        ProfileKind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::EqualRevenue => "equal_revenue",
            ProfileKind::Uniform => "uniform",
            ProfileKind::Bimodal => "bimodal",
            ProfileKind::Constant => "constant",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| Error::UnknownKind(s.to_owned()))
    }
}

pub fn generate_profile(kind: ProfileKind, n: usize, seed: u64, scale: u64) -> Result<ValuationProfile> {
    let mut rng = RandomSource::new(seed).stream(0);
    let needs_range = matches!(kind, ProfileKind::Uniform | ProfileKind::Bimodal);
    if needs_range && scale == 0 {
        return Err(Error::InvalidArgument(format!("{kind} profiles need scale >= 1")));
    }
    let values: Vec<u64> = (1..=n as u64)
        .map(|i| match kind {
            ProfileKind::EqualRevenue => scale / i,
            ProfileKind::Uniform => rng.random_range(1..=scale),
            ProfileKind::Bimodal => {
                if rng.random_bool(0.5) {
                    rng.random_range(1..=(scale / 10).max(1))
                } else {
                    rng.random_range((scale / 2).max(1)..=scale)
                }
            }
            ProfileKind::Constant => scale,
        })
        .collect();
    ValuationProfile::from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Money;

    fn values(p: &ValuationProfile) -> Vec<u64> {
        p.entries().iter().map(|b| b.value.amount()).collect()
    }

    #[test]
    fn closed_form_kinds() {
        let p = generate_profile(ProfileKind::EqualRevenue, 3, 0, 3600).unwrap();
        assert_eq!(values(&p), [3600, 1800, 1200]);
        let p = generate_profile(ProfileKind::Constant, 4, 9, 7).unwrap();
        assert_eq!(values(&p), [7, 7, 7, 7]);
    }

    #[test]
    fn random_kinds_are_reproducible_and_in_range() {
        let a = generate_profile(ProfileKind::Uniform, 100, 5, 1000).unwrap();
        assert_eq!(a, generate_profile(ProfileKind::Uniform, 100, 5, 1000).unwrap());
        assert_ne!(a, generate_profile(ProfileKind::Uniform, 100, 6, 1000).unwrap());
        assert!(a.entries().iter().all(|b| (1..=1000).contains(&b.value.amount())));

        let b = generate_profile(ProfileKind::Bimodal, 200, 5, 1000).unwrap();
        let low = b.entries().iter().filter(|x| x.value <= Money::new(100)).count();
        let high = b.entries().iter().filter(|x| x.value >= Money::new(500)).count();
        assert_eq!(low + high, 200);
        assert!(low > 50 && high > 50);
    }

    #[test]
    fn kind_names() {
        for kind in ProfileKind::ALL {
            assert_eq!(kind.name().parse::<ProfileKind>().unwrap(), kind);
        }
        assert_eq!("equal-revenue".parse::<ProfileKind>().unwrap(), ProfileKind::EqualRevenue);
        assert!(matches!("zipf".parse::<ProfileKind>(), Err(Error::UnknownKind(_))));
        assert!(generate_profile(ProfileKind::Uniform, 3, 0, 0).is_err());
    }
}
