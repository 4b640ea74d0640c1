//! Hyperparameters that are either fixed by the caller or chosen from data.

use serde::{Deserialize, Serialize};

/// A positive tuning constant, or `"auto"` to let the method pick it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Raw", into = "Raw")]
pub enum Tuning {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Raw {
    Value(f64),
    Word(String),
}

impl TryFrom<Raw> for Tuning {
    type Error = String;

    fn try_from(raw: Raw) -> Result<Self, String> {
        match raw {
            Raw::Value(v) => Ok(Tuning::Fixed(v)),
            Raw::Word(w) if w == "auto" || w == "cv" => Ok(Tuning::Auto),
            Raw::Word(w) => Err(format!("expected a number or \"auto\", got {w:?}")),
        }
    }
}

impl From<Tuning> for Raw {
    fn from(t: Tuning) -> Raw {
        match t {
            Tuning::Auto => Raw::Word("auto".into()),
            Tuning::Fixed(v) => Raw::Value(v),
        }
    }
}

impl Tuning {
    pub fn fixed(&self) -> Option<f64> {
        match self {
            Tuning::Auto => None,
            Tuning::Fixed(v) => Some(*v),
        }
    }
}
