//! Charge sets for late pairs and the resulting charging totals.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::model::Tree;
use crate::rational::{int, Rational};

use super::classify::Statuses;
use super::investments::InvestmentSummary;
use super::ledger::Pair;
use super::report::{Check, CheckOutcome};
use super::AnalysisError;

/// Critically overdue pairs below a late pair, each with the part of the
/// late pair's investment routed to it through the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSet {
    pub source: Pair,
    pub charges: BTreeMap<Pair, Rational>,
}

impl ChargeSet {
    pub fn total(&self) -> Rational {
        self.charges
            .values()
            .fold(Rational::zero(), |acc, x| acc + x)
    }
}

fn violation(pair: &Pair, tree: &Tree, detail: impl Into<String>) -> AnalysisError {
    AnalysisError::CheckViolation {
        check: "charge_sets",
        pair: pair.describe(tree),
        detail: detail.into(),
    }
}

type Memo = HashMap<usize, BTreeMap<usize, Rational>>;

fn charge_map(
    i: usize,
    summary: &InvestmentSummary,
    statuses: &Statuses,
    tree: &Tree,
    memo: &mut Memo,
) -> Result<BTreeMap<usize, Rational>, AnalysisError> {
    if let Some(m) = memo.get(&i) {
        return Ok(m.clone());
    }
    let pair = &summary.pairs[i];
    let status = statuses
        .get(pair)
        .ok_or_else(|| AnalysisError::UnknownPair(pair.to_string()))?;
    if !status.late {
        return Err(violation(
            pair,
            tree,
            "recursion reached a pair that is not late",
        ));
    }
    let mut map = BTreeMap::new();
    if status.critically_overdue {
        map.insert(i, summary.cost[i].clone());
    } else {
        if !summary.pending_out[i].is_zero() {
            return Err(violation(
                pair,
                tree,
                format!(
                    "late pair left {} of overflow investment unresolved",
                    summary.pending_out[i]
                ),
            ));
        }
        for (w, amount) in &summary.out_edges[i] {
            let sub = charge_map(*w, summary, statuses, tree, memo)?;
            let scale = amount / &summary.cost[*w];
            for (u, x) in sub {
                *map.entry(u).or_insert_with(Rational::zero) += &scale * x;
            }
        }
    }
    memo.insert(i, map.clone());
    Ok(map)
}

/// Builds the charge set of a late pair: itself when critically overdue,
/// otherwise the union of its direct investees' charge sets scaled by the
/// investment made into each.
pub fn construct_charge_set(
    pair: &Pair,
    summary: &InvestmentSummary,
    statuses: &Statuses,
    tree: &Tree,
) -> Result<ChargeSet, AnalysisError> {
    let i = summary
        .index_of(pair)
        .ok_or_else(|| AnalysisError::UnknownPair(pair.to_string()))?;
    let map = charge_map(i, summary, statuses, tree, &mut Memo::new())?;
    Ok(ChargeSet {
        source: pair.clone(),
        charges: map
            .into_iter()
            .map(|(u, x)| (summary.pairs[u].clone(), x))
            .collect(),
    })
}

/// Charge-set validity for every late pair, then the charging totals:
/// per critically overdue pair, late charges within `L c` and early charges
/// within `(D - L) c`; every early pair covered; the charged pairs map
/// injectively onto optimal inclusions, giving `ALG <= D * OPT`.
pub fn verify_charging(
    summary: &InvestmentSummary,
    statuses: &Statuses,
    tree: &Tree,
    alg_cost: &Rational,
    opt_cost: &Rational,
) -> Vec<CheckOutcome> {
    let depth = tree.depth();
    let describe = |i: usize| summary.pairs[i].describe(tree);
    let status_of = |i: usize| statuses.get(&summary.pairs[i]);

    let mut sets = Check::new("charge_sets");
    let mut late_charge: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut memo = Memo::new();
    let mut late_total = Rational::zero();
    for i in 0..summary.len() {
        let Some(status) = status_of(i) else {
            sets.fail(|| format!("{}: no status for ledger pair", describe(i)));
            continue;
        };
        if !status.late {
            continue;
        }
        match charge_map(i, summary, statuses, tree, &mut memo) {
            Ok(map) => {
                let only_critical = map
                    .keys()
                    .all(|&u| status_of(u).is_some_and(|s| s.critically_overdue));
                let total = map.values().fold(Rational::zero(), |acc, x| acc + x);
                let ok = only_critical && total == summary.cost[i];
                sets.record(ok, None, || {
                    format!(
                        "{}: charge total {} vs c = {} (only critically overdue: {only_critical})",
                        describe(i),
                        total,
                        summary.cost[i]
                    )
                });
                for (u, x) in map {
                    *late_charge.entry(u).or_insert_with(Rational::zero) += x;
                }
                late_total += &summary.cost[i];
            }
            Err(e) => sets.fail(|| e.to_string()),
        }
    }

    let critical: Vec<usize> = (0..summary.len())
        .filter(|&i| status_of(i).is_some_and(|s| s.critically_overdue))
        .collect();
    let early: Vec<usize> = (0..summary.len())
        .filter(|&i| status_of(i).is_some_and(|s| !s.late))
        .collect();
    let is_early = {
        let mut v = vec![false; summary.len()];
        for &i in &early {
            v[i] = true;
        }
        v
    };

    let mut per_pair = Check::new("charging_per_pair");
    let mut covered = vec![Rational::zero(); summary.len()];
    let mut early_total = Rational::zero();
    let mut critical_cost = Rational::zero();
    for &a in &critical {
        let c = &summary.cost[a];
        critical_cost += c;
        let reach = summary.propagate(a);
        let mut early_charge = Rational::zero();
        for (&b, x) in &reach {
            if is_early[b] {
                early_charge += x;
                covered[b] += x;
            }
        }
        let late = late_charge.get(&a).cloned().unwrap_or_else(Rational::zero);
        let late_cap = int(summary.level[a] as i64) * c;
        let early_cap = int((depth - summary.level[a]) as i64) * c;
        per_pair.record(
            late <= late_cap && early_charge <= early_cap,
            Some(&late_cap + &early_cap - &late - &early_charge),
            || {
                format!(
                    "{}: late charge {} (cap {}), early charge {} (cap {})",
                    describe(a),
                    late,
                    late_cap,
                    early_charge,
                    early_cap
                )
            },
        );
        early_total += early_charge;
    }

    let mut coverage = Check::new("charging_coverage");
    for &b in &early {
        coverage.record(
            covered[b] >= summary.cost[b],
            Some(&covered[b] - &summary.cost[b]),
            || {
                format!(
                    "{}: early pair covered {} of c = {}",
                    describe(b),
                    covered[b],
                    summary.cost[b]
                )
            },
        );
    }

    let mut injective = Check::new("charging_injective");
    let mut targets: HashMap<(usize, usize), usize> = HashMap::new();
    for &a in &critical {
        let s = status_of(a).expect("filtered above");
        match s.phase {
            None => injective.fail(|| {
                format!(
                    "{}: critically overdue before any optimal inclusion",
                    describe(a)
                )
            }),
            Some(p) => {
                let key = (s.pair.node.index(), p);
                let prev = targets.insert(key, a);
                injective.record(prev.is_none(), None, || {
                    format!(
                        "{} and {}: same optimal inclusion",
                        describe(a),
                        describe(prev.unwrap_or(a))
                    )
                });
            }
        }
    }

    let mut total = Check::new("charging_total");
    let charged = &late_total + &early_total;
    let ceiling = int(depth as i64) * &critical_cost;
    let ok = alg_cost <= &charged && charged <= ceiling && &critical_cost <= opt_cost;
    total.record(ok, Some(int(depth as i64) * opt_cost - alg_cost), || {
        format!(
            "ALG {} vs charged {} vs D * critical cost {} (critical cost {}, OPT {})",
            alg_cost, charged, ceiling, critical_cost, opt_cost
        )
    });

    vec![
        sets.finish(),
        per_pair.finish(),
        coverage.finish(),
        injective.finish(),
        total.finish(),
    ]
}
