//! Record of Waterfall's direct investments.
//!
//! A pair `(v, t)` is node `v` inside the service transmitted at time `t`.
//! Inclusion investments target `(w, t)` in the same service. Overflow
//! investments target the node's next inclusion, which is unknown when they
//! are made; they wait in `pending` until the node is next included and are
//! then moved into `entries`.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::model::{NodeId, Tree};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pair {
    pub node: NodeId,
    pub time: Rational,
}

impl Pair {
    pub fn new(node: NodeId, time: Rational) -> Pair {
        Pair { node, time }
    }

    pub fn describe(&self, tree: &Tree) -> String {
        format!("({}, {})", tree.label(self.node), self.time)
    }
}

impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .cmp(&other.time)
            .then_with(|| self.node.cmp(&other.node))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.node, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvestmentKind {
    /// The investee was added by the investor's fall.
    Inclusion,
    /// The investee was an overflow node of the investor's fall.
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectInvestment {
    pub investor: Pair,
    pub investee: Pair,
    pub amount: Rational,
    pub kind: InvestmentKind,
}

/// Overflow investment whose target node has not been included again yet.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingInvestment {
    pub investor: Pair,
    pub node: NodeId,
    pub amount: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallRecord {
    pub pair: Pair,
    /// Nodes added by the fall, in insertion order.
    pub added: Vec<NodeId>,
    pub remaining_budget: Rational,
    pub overflow_path: Vec<NodeId>,
    pub overflow_request: Option<i64>,
    /// The fall stopped because no request in the subtree was left.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRecord {
    pub time: Rational,
    pub trigger: i64,
    pub trigger_path: Vec<NodeId>,
    pub falls: Vec<FallRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvestmentLedger {
    pub entries: Vec<DirectInvestment>,
    pub pending: Vec<PendingInvestment>,
    pub services: Vec<ServiceRecord>,
}

impl InvestmentLedger {
    pub fn new() -> InvestmentLedger {
        InvestmentLedger::default()
    }

    pub fn begin_service(&mut self, time: Rational, trigger: i64, trigger_path: Vec<NodeId>) {
        self.services.push(ServiceRecord {
            time,
            trigger,
            trigger_path,
            falls: Vec::new(),
        });
    }

    pub fn record_fall(&mut self, fall: FallRecord) {
        self.services
            .last_mut()
            .expect("fall recorded outside a service")
            .falls
            .push(fall);
    }

    /// `node` has just been included in the service at `time`: every pending
    /// overflow investment in it now resolves to `(node, time)`.
    pub fn resolve_inclusion(&mut self, node: NodeId, time: &Rational) {
        let (hit, keep): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|p| p.node == node);
        self.pending = keep;
        for p in hit {
            self.entries.push(DirectInvestment {
                investor: p.investor,
                investee: Pair::new(node, time.clone()),
                amount: p.amount,
                kind: InvestmentKind::Overflow,
            });
        }
    }

    pub fn record_inclusion(&mut self, investor: Pair, investee: Pair, amount: Rational) {
        self.entries.push(DirectInvestment {
            investor,
            investee,
            amount,
            kind: InvestmentKind::Inclusion,
        });
    }

    pub fn record_overflow(&mut self, investor: Pair, node: NodeId, amount: Rational) {
        self.pending.push(PendingInvestment {
            investor,
            node,
            amount,
        });
    }

    pub fn falls(&self) -> impl Iterator<Item = &FallRecord> {
        self.services.iter().flat_map(|s| s.falls.iter())
    }

    pub fn to_json(&self, tree: &Tree) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "investor": [tree.label(e.investor.node), format_rational(&e.investor.time)],
                    "investee": [tree.label(e.investee.node), format_rational(&e.investee.time)],
                    "amount": format_rational(&e.amount),
                    "kind": e.kind,
                })
            })
            .collect();
        let pending: Vec<_> = self
            .pending
            .iter()
            .map(|p| {
                serde_json::json!({
                    "investor": [tree.label(p.investor.node), format_rational(&p.investor.time)],
                    "node": tree.label(p.node),
                    "amount": format_rational(&p.amount),
                })
            })
            .collect();
        serde_json::json!({ "entries": entries, "pending": pending })
    }
}
