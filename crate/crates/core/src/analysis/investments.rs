//! Investment totals derived from a Waterfall ledger.
//!
//! Direct investments form a DAG over pairs (investors are proper ancestors
//! of investees, so levels strictly increase along every edge). Totals are
//! computed twice: through the one-step recursions over direct investors or
//! investees, and by explicit propagation of each pair's investment along
//! every chain. The two routes must agree exactly.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::model::Tree;
use crate::rational::{int, Rational};

use super::ledger::{InvestmentLedger, Pair};
use super::report::{Check, CheckOutcome};
use super::AnalysisError;

#[derive(Debug, Clone)]
pub struct InvestmentSummary {
    pub pairs: Vec<Pair>,
    index: HashMap<Pair, usize>,
    pub level: Vec<usize>,
    pub cost: Vec<Rational>,
    /// Resolved direct investments out of / into each pair.
    pub out_edges: Vec<Vec<(usize, Rational)>>,
    pub in_edges: Vec<Vec<(usize, Rational)>>,
    /// Overflow investments whose target was never included again.
    pub pending_out: Vec<Rational>,
    /// Added by a fall rather than by the due request's root path.
    pub fall_added: Vec<bool>,
    /// Total direct investment made, pending overflow included.
    pub made_direct: Vec<Rational>,
    pub received_direct: Vec<Rational>,
    /// `I(v, t)`, including the pair's own `c(v)`.
    pub total_invested: Vec<Rational>,
    /// `IM(v, t)`, investment reaching proper descendants.
    pub invested_out: Vec<Rational>,
}

impl InvestmentSummary {
    pub fn from_ledger(
        tree: &Tree,
        ledger: &InvestmentLedger,
    ) -> Result<InvestmentSummary, AnalysisError> {
        let mut pairs = Vec::new();
        let mut fall_added = Vec::new();
        for service in &ledger.services {
            for fall in &service.falls {
                pairs.push(fall.pair.clone());
                fall_added.push(!service.trigger_path.contains(&fall.pair.node));
            }
        }
        let index: HashMap<Pair, usize> = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let n = pairs.len();
        let lookup = |p: &Pair| {
            index
                .get(p)
                .copied()
                .ok_or_else(|| AnalysisError::UnknownPair(p.to_string()))
        };

        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut made_direct = vec![Rational::zero(); n];
        let mut received_direct = vec![Rational::zero(); n];
        for e in &ledger.entries {
            let a = lookup(&e.investor)?;
            let b = lookup(&e.investee)?;
            out_edges[a].push((b, e.amount.clone()));
            in_edges[b].push((a, e.amount.clone()));
            made_direct[a] += &e.amount;
            received_direct[b] += &e.amount;
        }
        let mut pending_out = vec![Rational::zero(); n];
        for p in &ledger.pending {
            let a = lookup(&p.investor)?;
            pending_out[a] += &p.amount;
            made_direct[a] += &p.amount;
        }

        let level: Vec<usize> = pairs.iter().map(|p| tree.level(p.node)).collect();
        let cost: Vec<Rational> = pairs.iter().map(|p| tree.cost(p.node).clone()).collect();
        let mut by_level: Vec<usize> = (0..n).collect();
        by_level.sort_by_key(|&i| level[i]);

        let mut total_invested = vec![Rational::zero(); n];
        for &b in &by_level {
            let mut sum = cost[b].clone();
            for (u, amount) in &in_edges[b] {
                sum += &total_invested[*u] / &cost[*u] * amount;
            }
            total_invested[b] = sum;
        }
        let mut invested_out = vec![Rational::zero(); n];
        for &a in by_level.iter().rev() {
            let mut sum = Rational::zero();
            for (w, amount) in &out_edges[a] {
                sum += amount + amount / &cost[*w] * &invested_out[*w];
            }
            invested_out[a] = sum;
        }

        Ok(InvestmentSummary {
            pairs,
            index,
            level,
            cost,
            out_edges,
            in_edges,
            pending_out,
            fall_added,
            made_direct,
            received_direct,
            total_invested,
            invested_out,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn index_of(&self, pair: &Pair) -> Option<usize> {
        self.index.get(pair).copied()
    }

    /// `I_a(b)` for every pair `b` reached from `a` (with `I_a(a) = c(a)`),
    /// summed over all chains of direct investments.
    pub fn propagate(&self, a: usize) -> BTreeMap<usize, Rational> {
        let mut reach: BTreeMap<usize, Rational> = BTreeMap::new();
        reach.insert(a, self.cost[a].clone());
        // frontier processed level by level keeps every predecessor final
        let mut order: Vec<usize> = vec![a];
        let mut cursor = 0;
        let mut seen = vec![false; self.len()];
        seen[a] = true;
        while cursor < order.len() {
            let u = order[cursor];
            cursor += 1;
            for (w, _) in &self.out_edges[u] {
                if !seen[*w] {
                    seen[*w] = true;
                    order.push(*w);
                }
            }
        }
        order.sort_by_key(|&i| self.level[i]);
        for &b in &order {
            if b == a {
                continue;
            }
            let mut sum = Rational::zero();
            for (u, amount) in &self.in_edges[b] {
                if let Some(x) = reach.get(u) {
                    sum += x / &self.cost[*u] * amount;
                }
            }
            reach.insert(b, sum);
        }
        reach
    }
}

/// Bounds on direct and total investments for every ledger pair.
pub fn verify_investment_bounds(
    summary: &InvestmentSummary,
    ledger: &InvestmentLedger,
    tree: &Tree,
) -> Vec<CheckOutcome> {
    let depth = tree.depth();
    let describe = |i: usize| summary.pairs[i].describe(tree);

    let mut made = Check::new("direct_investment_made");
    let mut overflow = Check::new("overflow_total_equals_remaining_budget");
    let mut fall_index = 0;
    for service in &ledger.services {
        for fall in &service.falls {
            let i = fall_index;
            fall_index += 1;
            let c = &summary.cost[i];
            let spent = c - &fall.remaining_budget;
            let total = &summary.made_direct[i];
            let ok = total <= c
                && (fall.exhausted || total == c)
                && (fall.overflow_path.is_empty() || total == c);
            made.record(ok, Some(c - total), || {
                format!(
                    "{}: made {} of c = {} (exhausted: {}, overflow path: {})",
                    describe(i),
                    total,
                    c,
                    fall.exhausted,
                    fall.overflow_path.len()
                )
            });
            if !fall.overflow_path.is_empty() {
                let overflow_total = total - &spent;
                overflow.record(overflow_total == fall.remaining_budget, None, || {
                    format!(
                        "{}: overflow investments {} vs remaining budget {}",
                        describe(i),
                        overflow_total,
                        fall.remaining_budget
                    )
                });
            }
        }
    }

    let mut received = Check::new("direct_investment_received");
    let mut invested = Check::new("total_investment_within_level");
    let mut outward = Check::new("investment_made_within_remaining_depth");
    for i in 0..summary.len() {
        let c = &summary.cost[i];
        let r = &summary.received_direct[i];
        let ok = if summary.fall_added[i] { r == c } else { r < c };
        received.record(ok, Some(c - r), || {
            format!(
                "{}: received {} of c = {} (fall-added: {})",
                describe(i),
                r,
                c,
                summary.fall_added[i]
            )
        });
        let cap = int(summary.level[i] as i64) * c;
        invested.record(
            summary.total_invested[i] <= cap,
            Some(&cap - &summary.total_invested[i]),
            || {
                format!(
                    "{}: I = {} > L c = {}",
                    describe(i),
                    summary.total_invested[i],
                    cap
                )
            },
        );
        let cap = int((depth - summary.level[i]) as i64) * c;
        outward.record(
            summary.invested_out[i] <= cap,
            Some(&cap - &summary.invested_out[i]),
            || {
                format!(
                    "{}: IM = {} > (D - L) c = {}",
                    describe(i),
                    summary.invested_out[i],
                    cap
                )
            },
        );
    }

    // second route: explicit chain propagation
    let mut routes = Check::new("investment_routes_agree");
    let mut incoming = vec![Rational::zero(); summary.len()];
    for a in 0..summary.len() {
        let reach = summary.propagate(a);
        let mut out = Rational::zero();
        for (&b, x) in &reach {
            incoming[b] += x;
            if b != a {
                out += x;
            }
        }
        routes.record(out == summary.invested_out[a], None, || {
            format!(
                "{}: IM recursion {} vs chains {}",
                describe(a),
                summary.invested_out[a],
                out
            )
        });
    }
    for (b, x) in incoming.iter().enumerate() {
        routes.record(x == &summary.total_invested[b], None, || {
            format!(
                "{}: I recursion {} vs chains {}",
                describe(b),
                summary.total_invested[b],
                x
            )
        });
    }

    vec![
        made.finish(),
        overflow.finish(),
        received.finish(),
        invested.finish(),
        outward.finish(),
        routes.finish(),
    ]
}
