//! Data model shared by every check: distance and relaxation tables, class
//! tags, and three-valued verdicts with replayable witnesses.

mod generate;
pub mod rational;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::random_space;
pub use rational::Rational;
pub use table::{DistanceTable, SpaceFile, ThetaTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("entries[{i}][{j}] differs from entries[{j}][{i}]")]
    AsymmetricEntry { i: usize, j: usize },
    #[error("entries[{i}][{j}] is negative")]
    NegativeEntry { i: usize, j: usize },
    #[error("entries[{i}][{i}] is not zero")]
    NonzeroDiagonal { i: usize },
    #[error("theta[{i}][{j}] is below 1")]
    ThetaBelowOne { i: usize, j: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid rational `{0}`")]
    InvalidRational(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("{0} is a function class, not a space kind")]
    UnsupportedKind(ClassTag),
    #[error("malformed space file: {0}")]
    Json(String),
}

/// Closed vocabulary of space kinds and preservation classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    Metric,
    Ultrametric,
    WeakUltrametric,
    BMetric,
    ExtendedBMetric,
    M,
    U,
    DU,
    B,
    MB,
    BM,
    EB,
}

impl ClassTag {
    pub const SPACE_KINDS: [ClassTag; 5] = [
        ClassTag::Metric,
        ClassTag::Ultrametric,
        ClassTag::WeakUltrametric,
        ClassTag::BMetric,
        ClassTag::ExtendedBMetric,
    ];

    pub const FUNCTION_CLASSES: [ClassTag; 7] = [
        ClassTag::M,
        ClassTag::U,
        ClassTag::DU,
        ClassTag::B,
        ClassTag::MB,
        ClassTag::BM,
        ClassTag::EB,
    ];

    pub fn is_space_kind(self) -> bool {
        Self::SPACE_KINDS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassTag::Metric => "Metric",
            ClassTag::Ultrametric => "Ultrametric",
            ClassTag::WeakUltrametric => "WeakUltrametric",
            ClassTag::BMetric => "BMetric",
            ClassTag::ExtendedBMetric => "ExtendedBMetric",
            ClassTag::M => "M",
            ClassTag::U => "U",
            ClassTag::DU => "DU",
            ClassTag::B => "B",
            ClassTag::MB => "MB",
            ClassTag::BM => "BM",
            ClassTag::EB => "EB",
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Function classes are case-sensitive two-letter codes; "b" alone is ambiguous otherwise.
        if let Some(tag) = Self::FUNCTION_CLASSES.iter().find(|t| t.name() == s) {
            return Ok(*tag);
        }
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "metric" => ClassTag::Metric,
            "ultrametric" | "ultra" => ClassTag::Ultrametric,
            "weakultrametric" | "weakultra" => ClassTag::WeakUltrametric,
            "bmetric" => ClassTag::BMetric,
            "extendedbmetric" | "extendedb" => ClassTag::ExtendedBMetric,
            _ => return Err(format!("unknown class tag `{s}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

/// A named constant attached to a verdict: exact on table paths, real on sampling paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Exact(#[serde(with = "rational::text")] Rational),
    Real(f64),
}

impl Constant {
    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Constant::Exact(q) => Some(q),
            Constant::Real(_) => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Constant::Exact(q) => rational::to_f64(q),
            Constant::Real(x) => *x,
        }
    }
}

/// Relation between the two sides of a witness that makes it a violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Greater,
    Less,
    Equal,
    NotEqual,
}

impl Relation {
    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Greater => lhs > rhs,
            Relation::Less => lhs < rhs,
            Relation::Equal => lhs == rhs,
            Relation::NotEqual => lhs != rhs,
        }
    }
}

/// Concrete counterexample. `lhs relation rhs` is the violated inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Point indices of a finite space, with exact sides.
    Points {
        indices: Vec<usize>,
        labels: Vec<String>,
        #[serde(with = "rational::text")]
        lhs: Rational,
        #[serde(with = "rational::text")]
        rhs: Rational,
        relation: Relation,
        inequality: String,
    },
    /// Real arguments of a sampled function check.
    Sample {
        args: Vec<f64>,
        lhs: f64,
        rhs: f64,
        relation: Relation,
        inequality: String,
    },
}

impl Witness {
    /// Whether the stored sides still violate.
    pub fn is_violation(&self) -> bool {
        match self {
            Witness::Points { lhs, rhs, relation, .. } => relation.holds(lhs, rhs),
            Witness::Sample { lhs, rhs, relation, .. } => relation.holds(lhs, rhs),
        }
    }

    pub fn inequality(&self) -> &str {
        match self {
            Witness::Points { inequality, .. } | Witness::Sample { inequality, .. } => inequality,
        }
    }
}

/// Outcome of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub constants: BTreeMap<String, Constant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn holds() -> Self {
        Verdict {
            status: Status::Holds,
            witness: None,
            constants: BTreeMap::new(),
            note: None,
        }
    }

    pub fn fails(witness: Witness) -> Self {
        Verdict {
            status: Status::Fails,
            witness: Some(witness),
            constants: BTreeMap::new(),
            note: None,
        }
    }

    pub fn inconclusive(note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Inconclusive,
            witness: None,
            constants: BTreeMap::new(),
            note: Some(note.into()),
        }
    }

    pub fn with_constant(mut self, name: &str, value: Constant) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.get(name)
    }
}
