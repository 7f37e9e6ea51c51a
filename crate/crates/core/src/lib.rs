//! Online multi-level aggregation with deadlines (MLAPD).
//!
//! A rooted, node-weighted tree receives requests at its nodes; each request
//! must be covered by a root-containing subtree ("service") transmitted
//! inside its `[arrival, deadline]` window. This crate provides:
//!
//! * [`model`]: trees, requests, services, schedules and feasibility checks,
//! * [`engine`]: the deadline-triggered online simulation loop,
//! * [`algos`]: the `Noadd`, `Double` and `Waterfall` online algorithms,
//! * [`oracle`]: an exact brute-force offline optimum for small instances,
//! * [`analysis`]: post-hoc verification of the lateness, phase and
//!   investment accounting that underpins Waterfall's competitive bound,
//! * [`gen`]: seeded instance generators for experiment corpora.
//!
//! All quantities (costs, times, prices, budgets, investments) are exact
//! rationals.

pub mod algos;
pub mod analysis;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod wire;

pub use error::{Error, Result};
pub use model::{Instance, NodeId, NodeSet, Request, Schedule, Service, Tree, TreeBuilder};
pub use rational::Rational;
