//! Online algorithms: [`Noadd`], [`Double`] and [`Waterfall`].

mod double;
mod noadd;
mod waterfall;

use std::fmt;
use std::str::FromStr;

use serde_json::json;
use thiserror::Error;

use crate::engine::OnlineAlgorithm;
use crate::model::{ModelError, Tree};

pub use double::{Double, DoubleStats};
pub use noadd::Noadd;
pub use waterfall::{FallResult, PriceState, Waterfall, WaterfallDiagnostics, WaterfallEvent};

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("double requires a path rooted at an endpoint")]
    NotAPath,
    #[error("unknown algorithm {0:?} (expected noadd, double or waterfall)")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Noadd,
    Double,
    Waterfall,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [
        AlgorithmKind::Noadd,
        AlgorithmKind::Double,
        AlgorithmKind::Waterfall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Noadd => "noadd",
            AlgorithmKind::Double => "double",
            AlgorithmKind::Waterfall => "waterfall",
        }
    }

    /// Whether the algorithm is defined on `tree`.
    pub fn applies_to(self, tree: &Tree) -> bool {
        match self {
            AlgorithmKind::Double => tree.is_path(),
            _ => true,
        }
    }

    pub fn instantiate(self, tree: &Tree) -> Result<Box<dyn OnlineAlgorithm>, AlgorithmError> {
        Ok(match self {
            AlgorithmKind::Noadd => Box::new(Noadd),
            AlgorithmKind::Double => Box::new(Double::for_tree(tree)?),
            AlgorithmKind::Waterfall => Box::new(Waterfall::new(tree)),
        })
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = AlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "noadd" => Ok(AlgorithmKind::Noadd),
            "double" => Ok(AlgorithmKind::Double),
            "waterfall" => Ok(AlgorithmKind::Waterfall),
            _ => Err(AlgorithmError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Algorithm-specific state reported at the end of a run.
#[derive(Debug, Clone, Default)]
pub enum Diagnostics {
    #[default]
    None,
    Double(DoubleStats),
    Waterfall(Box<WaterfallDiagnostics>),
}

impl Diagnostics {
    pub fn waterfall(&self) -> Option<&WaterfallDiagnostics> {
        match self {
            Diagnostics::Waterfall(w) => Some(w),
            _ => None,
        }
    }

    pub fn to_json(&self, tree: &Tree) -> serde_json::Value {
        match self {
            Diagnostics::None => serde_json::Value::Null,
            Diagnostics::Double(s) => json!({ "rejections": s.rejections }),
            Diagnostics::Waterfall(w) => w.to_json(tree),
        }
    }
}
