use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Binary class of a subject. `Patient` is the positive class and maps to
/// the target value `+1`; `Healthy` (a control subject) maps to `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    Patient,
    Healthy,
}

impl Class {
    /// Desired network output for this class.
    pub fn target(self) -> f64 {
        match self {
            Class::Patient => 1.0,
            Class::Healthy => -1.0,
        }
    }

    /// Decision rule of the type-reduction layer: strictly positive output
    /// is a patient, anything else (including zero) is healthy.
    pub fn from_output(y: f64) -> Class {
        if y > 0.0 {
            Class::Patient
        } else {
            Class::Healthy
        }
    }

    pub fn opposite(self) -> Class {
        match self {
            Class::Patient => Class::Healthy,
            Class::Healthy => Class::Patient,
        }
    }

    pub fn from_target(y: f64) -> Option<Class> {
        if y == 1.0 {
            Some(Class::Patient)
        } else if y == -1.0 {
            Some(Class::Healthy)
        } else {
            None
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Patient => "Patient",
            Class::Healthy => "Healthy",
        })
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patient" | "pt" | "pd" | "1" | "+1" | "1.0" => Ok(Class::Patient),
            "healthy" | "control" | "co" | "-1" | "-1.0" => Ok(Class::Healthy),
            other => Err(Error::Validation(format!("unknown class label {other:?}"))),
        }
    }
}

/// Source study of a recording, taken from the two-letter filename prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    Ga,
    Ju,
    Si,
}

impl Dataset {
    pub const ALL: [Dataset; 3] = [Dataset::Ga, Dataset::Ju, Dataset::Si];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Ga => "Ga",
            Dataset::Ju => "Ju",
            Dataset::Si => "Si",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ga" => Ok(Dataset::Ga),
            "ju" => Ok(Dataset::Ju),
            "si" => Ok(Dataset::Si),
            other => Err(Error::Validation(format!("unknown dataset tag {other:?}"))),
        }
    }
}
