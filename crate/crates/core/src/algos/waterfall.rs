//! Waterfall: budgeted falls over persistent node prices.
//!
//! Every node keeps a price `p(v) ∈ (0, c(v)]`, the part of its cost not yet
//! paid for by earlier falls. A service starts from the due request's root
//! path and processes its nodes through a FIFO queue; each dequeued node `v`
//! runs a `v`-fall with budget `c(v)`, buying the paths to pending requests
//! in its subtree in deadline order at their current prices. When the next
//! path is too expensive the leftover budget is spread over that path
//! proportionally to price (the overflow nodes) and the fall stops. Nodes
//! bought by a fall are enqueued and run their own falls.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};
use serde_json::json;

use crate::analysis::ledger::{FallRecord, InvestmentLedger, Pair};
use crate::engine::{OnlineAlgorithm, OnlineView};
use crate::model::{NodeId, NodeSet, Request, Tree};
use crate::rational::{format_rational, Rational};

use super::{AlgorithmError, Diagnostics};

#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    prices: Vec<Rational>,
}

impl PriceState {
    pub fn new(tree: &Tree) -> PriceState {
        PriceState {
            prices: tree.nodes().map(|v| tree.cost(v).clone()).collect(),
        }
    }

    pub fn get(&self, v: NodeId) -> &Rational {
        &self.prices[v.index()]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.prices
    }

    fn reset(&mut self, tree: &Tree, v: NodeId) {
        self.prices[v.index()] = tree.cost(v).clone();
    }

    pub fn path_price(&self, path: &[NodeId]) -> Rational {
        path.iter()
            .fold(Rational::zero(), |acc, v| acc + self.get(*v))
    }

    /// `0 <= p(v) <= c(v)` everywhere.
    pub fn within_bounds(&self, tree: &Tree) -> bool {
        tree.nodes().all(|v| {
            let p = self.get(v);
            !p.is_negative() && p <= tree.cost(v)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallResult {
    pub added: Vec<NodeId>,
    pub remaining_budget: Rational,
    pub overflow_path: Vec<NodeId>,
    pub overflow_request: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WaterfallEvent {
    Service {
        time: Rational,
        trigger: i64,
        path: Vec<NodeId>,
    },
    FallStart {
        node: NodeId,
        budget: Rational,
    },
    PathAdded {
        fall: NodeId,
        request: i64,
        path: Vec<NodeId>,
        price: Rational,
        budget_left: Rational,
    },
    Overflow {
        fall: NodeId,
        request: i64,
        budget: Rational,
        price: Rational,
        /// `(node, price before, price after)`
        changes: Vec<(NodeId, Rational, Rational)>,
    },
    FallEnd {
        node: NodeId,
        remaining: Rational,
    },
}

impl WaterfallEvent {
    /// One or more human-readable log lines.
    pub fn describe(&self, tree: &Tree) -> Vec<String> {
        let names = |path: &[NodeId]| {
            path.iter()
                .map(|v| tree.label(*v).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            WaterfallEvent::Service { time, trigger, path } => {
                vec![format!("t={time}: request {trigger} due, initial path [{}]", names(path))]
            }
            WaterfallEvent::FallStart { node, budget } => {
                vec![format!("  fall at {}: budget {budget}", tree.label(*node))]
            }
            WaterfallEvent::PathAdded {
                fall,
                request,
                path,
                price,
                budget_left,
            } => vec![format!(
                "    {}-fall adds [{}] for request {request} at price {price}, budget left {budget_left}",
                tree.label(*fall),
                names(path)
            )],
            WaterfallEvent::Overflow {
                fall,
                request,
                budget,
                price,
                changes,
            } => {
                let mut lines = vec![format!(
                    "    {}-fall cannot afford request {request} (price {price} > budget {budget})",
                    tree.label(*fall)
                )];
                lines.extend(changes.iter().map(|(v, before, after)| {
                    format!("    overflow at {}: price {before} → {after}", tree.label(*v))
                }));
                lines
            }
            WaterfallEvent::FallEnd { node, remaining } => {
                vec![format!("  fall at {} done, remaining budget {remaining}", tree.label(*node))]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaterfallDiagnostics {
    pub prices: PriceState,
    pub ledger: InvestmentLedger,
    pub events: Vec<WaterfallEvent>,
    /// Prices right after each service.
    pub snapshots: Vec<(Rational, Vec<Rational>)>,
}

impl WaterfallDiagnostics {
    pub fn to_json(&self, tree: &Tree) -> serde_json::Value {
        let prices = |ps: &[Rational]| -> serde_json::Map<String, serde_json::Value> {
            tree.nodes()
                .map(|v| {
                    (
                        tree.label(v).to_string(),
                        json!(format_rational(&ps[v.index()])),
                    )
                })
                .collect()
        };
        let snapshots: Vec<_> = self
            .snapshots
            .iter()
            .map(|(t, ps)| json!({ "time": format_rational(t), "prices": prices(ps) }))
            .collect();
        json!({
            "final_prices": prices(self.prices.as_slice()),
            "ledger": self.ledger.to_json(tree),
            "price_snapshots": snapshots,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Waterfall {
    prices: PriceState,
    ledger: InvestmentLedger,
    events: Vec<WaterfallEvent>,
    snapshots: Vec<(Rational, Vec<Rational>)>,
}

impl Waterfall {
    pub fn new(tree: &Tree) -> Waterfall {
        Waterfall {
            prices: PriceState::new(tree),
            ledger: InvestmentLedger::new(),
            events: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn prices(&self) -> &PriceState {
        &self.prices
    }

    pub fn ledger(&self) -> &InvestmentLedger {
        &self.ledger
    }

    pub fn events(&self) -> &[WaterfallEvent] {
        &self.events
    }

    /// Marks `v` as included at the current time: pending overflow
    /// investments in it resolve here and its price returns to its cost.
    fn include(&mut self, tree: &Tree, v: NodeId, now: &Rational) {
        self.ledger.resolve_inclusion(v, now);
        self.prices.reset(tree, v);
    }

    /// Runs the `v`-fall against the tentative service `service`.
    pub fn fall(
        &mut self,
        v: NodeId,
        service: &mut NodeSet,
        view: &OnlineView<'_>,
    ) -> Result<FallResult, AlgorithmError> {
        let tree = view.tree;
        let now = view.now;
        let me = Pair::new(v, now.clone());
        let mut budget = tree.cost(v).clone();
        let mut added = Vec::new();
        let mut overflow_path = Vec::new();
        let mut overflow_request = None;
        let mut exhausted = true;
        self.events.push(WaterfallEvent::FallStart {
            node: v,
            budget: budget.clone(),
        });

        for req in view.active_in_subtree(v) {
            if service.contains(&req.node) {
                continue;
            }
            let path = tree.path_outside(v, req.node, service)?;
            let price = self.prices.path_price(&path);
            if price > budget {
                exhausted = false;
                overflow_request = Some(req.id);
                if budget.is_zero() {
                    break;
                }
                let share = &budget / &price;
                let mut changes = Vec::with_capacity(path.len());
                for &u in &path {
                    let before = self.prices.get(u).clone();
                    let invested = &share * &before;
                    let after = &before - &invested;
                    self.ledger.record_overflow(me.clone(), u, invested);
                    self.prices.prices[u.index()] = after.clone();
                    changes.push((u, before, after));
                }
                self.events.push(WaterfallEvent::Overflow {
                    fall: v,
                    request: req.id,
                    budget: budget.clone(),
                    price,
                    changes,
                });
                overflow_path = path;
                break;
            }
            for &u in &path {
                self.ledger.record_inclusion(
                    me.clone(),
                    Pair::new(u, now.clone()),
                    self.prices.get(u).clone(),
                );
                self.include(tree, u, now);
                service.insert(u);
            }
            budget -= &price;
            self.events.push(WaterfallEvent::PathAdded {
                fall: v,
                request: req.id,
                path: path.clone(),
                price,
                budget_left: budget.clone(),
            });
            added.extend(path);
        }

        self.events.push(WaterfallEvent::FallEnd {
            node: v,
            remaining: budget.clone(),
        });
        self.ledger.record_fall(FallRecord {
            pair: me,
            added: added.clone(),
            remaining_budget: budget.clone(),
            overflow_path: overflow_path.clone(),
            overflow_request,
            exhausted,
        });
        Ok(FallResult {
            added,
            remaining_budget: budget,
            overflow_path,
            overflow_request,
        })
    }
}

impl OnlineAlgorithm for Waterfall {
    fn name(&self) -> &'static str {
        "waterfall"
    }

    fn on_due(&mut self, view: &OnlineView<'_>, due: &Request) -> Result<NodeSet, AlgorithmError> {
        let tree = view.tree;
        let now = view.now;
        let initial = tree.path_to_root(due.node)?;
        self.ledger
            .begin_service(now.clone(), due.id, initial.clone());
        self.events.push(WaterfallEvent::Service {
            time: now.clone(),
            trigger: due.id,
            path: initial.clone(),
        });
        let mut service = NodeSet::new();
        for &v in &initial {
            self.include(tree, v, now);
            service.insert(v);
        }
        let mut queue: VecDeque<NodeId> = initial.into_iter().collect();
        while let Some(v) = queue.pop_front() {
            let result = self.fall(v, &mut service, view)?;
            queue.extend(result.added);
        }
        self.snapshots
            .push((now.clone(), self.prices.as_slice().to_vec()));
        Ok(service)
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::Waterfall(Box::new(WaterfallDiagnostics {
            prices: self.prices.clone(),
            ledger: self.ledger.clone(),
            events: self.events.clone(),
            snapshots: self.snapshots.clone(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ledger::InvestmentKind;
    use crate::model::TreeBuilder;
    use crate::rational::{frac, int};

    fn star_view<'a>(tree: &'a Tree, now: &'a Rational, reqs: &'a [Request]) -> OnlineView<'a> {
        OnlineView {
            tree,
            now,
            active: reqs.iter().collect(),
        }
    }

    #[test]
    fn overflow_scales_prices_by_remaining_share() {
        // v = root with budget 2; child path priced 3
        let mut b = TreeBuilder::new(int(2));
        let a = b.child(NodeId::ROOT, int(1));
        let c = b.child(a, int(2));
        let tree = b.build().unwrap();
        let now = int(1);
        let reqs = [Request::new(0, c, int(0), int(4))];
        let view = star_view(&tree, &now, &reqs);
        let mut wf = Waterfall::new(&tree);
        let mut s: NodeSet = [NodeId::ROOT].into();
        wf.ledger.begin_service(now.clone(), 9, vec![NodeId::ROOT]);
        let res = wf.fall(NodeId::ROOT, &mut s, &view).unwrap();
        assert_eq!(res.remaining_budget, int(2));
        assert_eq!(res.overflow_path, vec![a, c]);
        assert_eq!(res.overflow_request, Some(0));
        assert!(res.added.is_empty());
        // each price times (1 - 2/3)
        assert_eq!(wf.prices().get(a), &frac(1, 3));
        assert_eq!(wf.prices().get(c), &frac(2, 3));
        let pending: Rational = wf.ledger().pending.iter().map(|p| p.amount.clone()).sum();
        assert_eq!(pending, int(2));
    }

    #[test]
    fn empty_subtree_keeps_full_budget() {
        let mut b = TreeBuilder::new(int(3));
        let a = b.child(NodeId::ROOT, int(1));
        let tree = b.build().unwrap();
        let now = int(1);
        let reqs = [Request::new(0, NodeId::ROOT, int(0), int(1))];
        let view = star_view(&tree, &now, &reqs);
        let mut wf = Waterfall::new(&tree);
        let mut s: NodeSet = [NodeId::ROOT].into();
        wf.ledger.begin_service(now.clone(), 0, vec![NodeId::ROOT]);
        let res = wf.fall(a, &mut s, &view).unwrap();
        assert!(res.added.is_empty());
        assert_eq!(res.remaining_budget, int(1));
        assert!(res.overflow_path.is_empty());
    }

    #[test]
    fn exact_budget_exhaustion_has_no_overflow() {
        // budget 2, two leaf paths priced 1 each, plus a third that cannot be paid
        let mut b = TreeBuilder::new(int(2));
        let x = b.child(NodeId::ROOT, int(1));
        let y = b.child(NodeId::ROOT, int(1));
        let z = b.child(NodeId::ROOT, int(5));
        let tree = b.build().unwrap();
        let now = int(1);
        let reqs = [
            Request::new(0, x, int(0), int(2)),
            Request::new(1, y, int(0), int(3)),
            Request::new(2, z, int(0), int(4)),
        ];
        let view = star_view(&tree, &now, &reqs);
        let mut wf = Waterfall::new(&tree);
        let mut s: NodeSet = [NodeId::ROOT].into();
        wf.ledger.begin_service(now.clone(), 7, vec![NodeId::ROOT]);
        let res = wf.fall(NodeId::ROOT, &mut s, &view).unwrap();
        assert_eq!(res.added, vec![x, y]);
        assert!(res.remaining_budget.is_zero());
        assert!(res.overflow_path.is_empty());
        assert_eq!(wf.prices().get(z), &int(5));
        assert!(wf.ledger().pending.is_empty());
        assert!(wf
            .ledger()
            .entries
            .iter()
            .all(|e| e.kind == InvestmentKind::Inclusion));
    }

    #[test]
    fn single_root_request_adds_nothing() {
        let tree = TreeBuilder::new(int(1)).build().unwrap();
        let now = int(2);
        let reqs = [Request::new(0, NodeId::ROOT, int(0), int(2))];
        let view = star_view(&tree, &now, &reqs);
        let mut wf = Waterfall::new(&tree);
        let s = wf.on_due(&view, &reqs[0]).unwrap();
        assert_eq!(s, [NodeId::ROOT].into());
        assert!(wf.ledger().entries.is_empty());
        assert!(wf.ledger().pending.is_empty());
    }
}
