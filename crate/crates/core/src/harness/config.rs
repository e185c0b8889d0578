use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auction::SamplingBias;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::harness::generate::{generate_profile, ProfileKind};
use crate::profile::ValuationProfile;

/// On-disk profile: `{"values": [int, ...], "units": int}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub values: Vec<u64>,
    pub units: usize,
}

impl ProfileFile {
    pub fn into_instance(self) -> Result<(ValuationProfile, Environment)> {
        Ok((
            ValuationProfile::from_values(&self.values)?,
            Environment::new(self.units)?,
        ))
    }
}

pub fn load_profile_file(path: &Path) -> Result<(ValuationProfile, Environment)> {
    let diagnostic = |message: String| Error::ProfileFile {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| diagnostic(e.to_string()))?;
    let file: ProfileFile = serde_json::from_str(&text).map_err(|e| diagnostic(e.to_string()))?;
    file.into_instance().map_err(|e| diagnostic(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    File(PathBuf),
    Generated {
        kind: ProfileKind,
        n: usize,
        scale: u64,
        seed: u64,
        units: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub source: ProfileSource,
    /// Overrides the number of units from the source.
    pub units: Option<usize>,
    pub bias: SamplingBias,
    pub trials: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl SimConfig {
    pub fn resolve(&self) -> Result<(ValuationProfile, Environment)> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trial count must be at least 1".into()));
        }
        let (profile, env) = match &self.source {
            ProfileSource::File(path) => load_profile_file(path)?,
            ProfileSource::Generated {
                kind,
                n,
                scale,
                seed,
                units,
            } => (
                generate_profile(*kind, *n, *seed, *scale)?,
                Environment::new(*units)?,
            ),
        };
        let env = match self.units {
            Some(units) => Environment::new(units)?,
            None => env,
        };
        Ok((profile, env))
    }
}
