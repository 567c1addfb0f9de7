//! Device class profile files and failure-rate scenario tables.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DeviceError, DeviceProfile, Fleet, InterferenceMatrix};

const DEFAULT_PROFILES: &str = include_str!("../../data/devices.toml");
const DEFAULT_LAMBDA_SETS: &str = include_str!("../../data/lambda_sets.toml");

#[derive(Debug, Error)]
pub enum ProfileFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed profile file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown device class {0:?}")]
    UnknownClass(String),
    #[error("failure-rate scenario {scenario:?} has no rate for class {class:?}")]
    MissingRate { scenario: String, class: String },
    #[error("unknown failure-rate scenario {0:?}")]
    UnknownScenario(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

fn read(path: &Path) -> Result<String, ProfileFileError> {
    std::fs::read_to_string(path).map_err(|source| ProfileFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One device class: hardware columns plus the profiled interference
/// coefficients (rows = new task type, columns = co-located type).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceClass {
    pub name: String,
    #[serde(default)]
    pub instance_type: String,
    pub cores: u32,
    pub memory_gb: f64,
    #[serde(default)]
    pub frequency_ghz: f64,
    #[serde(default)]
    pub is_ped: bool,
    pub slope: Vec<Vec<f64>>,
    pub intercept: Vec<Vec<f64>>,
    #[serde(default)]
    pub solo: Option<Vec<f64>>,
}

impl DeviceClass {
    pub fn profile(&self, lambda: f64) -> Result<DeviceProfile, DeviceError> {
        let interference = match &self.solo {
            Some(solo) => InterferenceMatrix::with_solo(
                self.slope.clone(),
                self.intercept.clone(),
                solo.clone(),
            )?,
            None => InterferenceMatrix::new(self.slope.clone(), self.intercept.clone())?,
        };
        let profile = DeviceProfile {
            id: 0,
            class_name: self.name.clone(),
            cores: self.cores,
            memory_total_gb: self.memory_gb,
            lambda,
            interference,
            is_ped: self.is_ped,
        };
        profile.check()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(rename = "class")]
    pub classes: Vec<DeviceClass>,
}

impl ProfileFile {
    pub fn from_toml_str(text: &str) -> Result<Self, ProfileFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProfileFileError> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn class(&self, name: &str) -> Option<&DeviceClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Instantiates `count` devices per listed class, in list order, each
    /// taking its class's rate from `rates`.
    pub fn build_fleet(
        &self,
        counts: &[(String, u32)],
        rates: &BTreeMap<String, f64>,
        scenario: &str,
    ) -> Result<Fleet, ProfileFileError> {
        let mut profiles = Vec::new();
        for (name, count) in counts {
            let class = self
                .class(name)
                .ok_or_else(|| ProfileFileError::UnknownClass(name.clone()))?;
            let lambda = *rates.get(name).ok_or_else(|| ProfileFileError::MissingRate {
                scenario: scenario.to_string(),
                class: name.clone(),
            })?;
            for _ in 0..*count {
                profiles.push(class.profile(lambda)?);
            }
        }
        Ok(Fleet::new(profiles)?)
    }

    /// One device of every class.
    pub fn one_per_class(&self) -> Vec<(String, u32)> {
        self.classes.iter().map(|c| (c.name.clone(), 1)).collect()
    }
}

pub fn default_profiles() -> ProfileFile {
    ProfileFile::from_toml_str(DEFAULT_PROFILES).expect("bundled device profiles parse")
}

/// Named failure-rate tables: scenario name → class name → rate per second.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LambdaSets(pub BTreeMap<String, BTreeMap<String, f64>>);

impl LambdaSets {
    pub fn from_toml_str(text: &str) -> Result<Self, ProfileFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProfileFileError> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn rates(&self, scenario: &LambdaScenario) -> Result<BTreeMap<String, f64>, ProfileFileError> {
        match scenario {
            LambdaScenario::Custom(rates) => Ok(rates.clone()),
            named => self
                .0
                .get(named.name())
                .cloned()
                .ok_or_else(|| ProfileFileError::UnknownScenario(named.name().to_string())),
        }
    }
}

pub fn default_lambda_sets() -> LambdaSets {
    LambdaSets::from_toml_str(DEFAULT_LAMBDA_SETS).expect("bundled lambda sets parse")
}

/// Which failure-rate table to apply to a fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaScenario {
    /// Mixed personal and commercial devices.
    Mix,
    /// Commercial devices only.
    Ced,
    /// Personal devices only.
    Ped,
    Custom(BTreeMap<String, f64>),
}

impl LambdaScenario {
    pub fn name(&self) -> &str {
        match self {
            LambdaScenario::Mix => "mix",
            LambdaScenario::Ced => "ced",
            LambdaScenario::Ped => "ped",
            LambdaScenario::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for LambdaScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LambdaScenario {
    type Err = ProfileFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mix" => Ok(Self::Mix),
            "ced" => Ok(Self::Ced),
            "ped" => Ok(Self::Ped),
            other => Err(ProfileFileError::UnknownScenario(other.to_string())),
        }
    }
}
