use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::OxyError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceDb {
    #[serde(rename = "WOD")]
    Wod,
    #[serde(rename = "CCHDO")]
    Cchdo,
    #[serde(rename = "Argo")]
    Argo,
    #[serde(rename = "GLODAP")]
    Glodap,
    #[serde(rename = "IDP")]
    Idp,
}

impl SourceDb {
    pub const ALL: [SourceDb; 5] = [
        SourceDb::Wod,
        SourceDb::Cchdo,
        SourceDb::Argo,
        SourceDb::Glodap,
        SourceDb::Idp,
    ];
}

/// Quantities carried on grids. The last three are computed, never ingested.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "DO")]
    Oxygen,
    #[serde(rename = "temperature")]
    Temperature,
    #[serde(rename = "salinity")]
    Salinity,
    #[serde(rename = "nitrate")]
    Nitrate,
    #[serde(rename = "phosphate")]
    Phosphate,
    #[serde(rename = "silicate")]
    Silicate,
    #[serde(rename = "chlorophyll")]
    Chlorophyll,
    #[serde(rename = "pressure")]
    Pressure,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "omz_flag")]
    OmzFlag,
}

impl Variable {
    /// Environmental factors fed to the factor encoder, in channel order.
    pub const FACTORS: [Variable; 6] = [
        Variable::Temperature,
        Variable::Salinity,
        Variable::Nitrate,
        Variable::Phosphate,
        Variable::Silicate,
        Variable::Chlorophyll,
    ];

    /// Numeric range of accepted observations.
    pub fn valid_range(self) -> (f64, f64) {
        match self {
            Variable::Oxygen => (0.0, 523.0),
            Variable::Temperature => (-3.0, 35.0),
            Variable::Salinity => (0.0, 44.0),
            Variable::Nitrate => (0.0, 500.0),
            Variable::Phosphate => (0.0, 5.0),
            Variable::Silicate => (0.0, 250.0),
            Variable::Chlorophyll => (0.0, 50.0),
            Variable::Pressure => (0.0, 5500.0),
            Variable::Density => (1020.0, 1040.0),
            Variable::OmzFlag => (0.0, 1.0),
        }
    }

    pub fn is_derived(self) -> bool {
        matches!(self, Variable::Pressure | Variable::Density | Variable::OmzFlag)
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Variable::Oxygen => "do",
            Variable::Temperature => "temperature",
            Variable::Salinity => "salinity",
            Variable::Nitrate => "nitrate",
            Variable::Phosphate => "phosphate",
            Variable::Silicate => "silicate",
            Variable::Chlorophyll => "chlorophyll",
            Variable::Pressure => "pressure",
            Variable::Density => "density",
            Variable::OmzFlag => "omz_flag",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::Oxygen => "DO",
            other => other.file_stem(),
        })
    }
}

impl FromStr for Variable {
    type Err = OxyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| OxyError::Config(format!("unknown variable {s:?}")))
    }
}

/// Unified quality class shared by every source database.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagClass {
    Good = 0,
    Unknown = 1,
    Questionable = 2,
    Bad = 3,
    NotSampled = 4,
}

/// One point observation as it crosses the ingestion boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub source_db: SourceDb,
    pub lon: f64,
    pub lat: f64,
    pub depth: f64,
    pub year: i32,
    pub variable: Variable,
    pub value: f64,
    #[serde(rename = "flag")]
    pub raw_flag: String,
}
