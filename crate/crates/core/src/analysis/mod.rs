//! Post-hoc verification of a Waterfall run against the canonical optimum.
//!
//! [`classify_pairs`] labels every pair `(v, t)` of the online schedule as
//! late or early relative to the optimum's next inclusion of `v`, and finds
//! the critically overdue ones. The investment ledger recorded during the
//! run then feeds the investment bounds, the charge-set construction and the
//! charging totals. Every comparison is exact.

mod charge;
mod classify;
mod investments;
pub mod ledger;
mod phases;
mod report;

use thiserror::Error;

use crate::engine::RunTrace;
use crate::model::Instance;
use crate::oracle::OptResult;
use crate::rational::{format_rational, int};
use crate::wire;

pub use charge::{construct_charge_set, verify_charging, ChargeSet};
pub use classify::{check_same_instance, classify_pairs, PairStatus, Statuses};
pub use investments::{verify_investment_bounds, InvestmentSummary};
pub use ledger::{InvestmentLedger, Pair};
pub use phases::{verify_late_paths, verify_phase_structure};
pub use report::{CheckOutcome, VerificationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{what} was produced for instance {found}, expected {expected}")]
    FingerprintMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("trace of {0} carries no investment ledger (only waterfall runs can be verified)")]
    NoLedger(String),
    #[error("ledger refers to pair {0} that is not in the schedule")]
    UnknownPair(String),
    #[error("{check} violated at {pair}: {detail}")]
    CheckViolation {
        check: &'static str,
        pair: String,
        detail: String,
    },
}

/// Runs every check on a Waterfall trace.
pub fn verify_waterfall_run(
    instance: &Instance,
    trace: &RunTrace,
    opt: &OptResult,
) -> Result<VerificationReport, AnalysisError> {
    let diag = trace
        .diagnostics
        .waterfall()
        .ok_or_else(|| AnalysisError::NoLedger(trace.algorithm.clone()))?;
    let tree = &instance.tree;
    let statuses = classify_pairs(instance, trace, opt)?;
    let summary = InvestmentSummary::from_ledger(tree, &diag.ledger)?;
    let alg_cost = trace.cost();

    let mut checks = Vec::new();
    let mut prices = report::Check::new("price_bounds");
    for (t, snapshot) in &diag.snapshots {
        let service = trace.schedule.services.iter().find(|s| &s.time == t);
        for v in tree.nodes() {
            let p = &snapshot[v.index()];
            let in_service = service.is_some_and(|s| s.nodes.contains(&v));
            let ok = p >= &int(0) && p <= tree.cost(v) && (!in_service || p == tree.cost(v));
            prices.record(ok, None, || format!("t={t}: p({}) = {p}", tree.label(v)));
        }
    }
    checks.push(prices.finish());
    checks.extend(verify_investment_bounds(&summary, &diag.ledger, tree));
    checks.push(verify_late_paths(&statuses, instance, &diag.ledger));
    checks.extend(verify_phase_structure(&statuses, instance));
    checks.extend(verify_charging(
        &summary, &statuses, tree, &alg_cost, &opt.cost,
    ));

    let depth = tree.depth();
    let mut bound = report::Check::new("competitive_bound");
    let cap = int(depth as i64) * &opt.cost;
    bound.record(alg_cost <= cap, Some(&cap - &alg_cost), || {
        format!("ALG {} > D * OPT = {}", alg_cost, cap)
    });
    checks.push(bound.finish());

    let ratio = if opt.cost > int(0) {
        format_rational(&(&alg_cost / &opt.cost))
    } else {
        "undefined".to_string()
    };
    Ok(VerificationReport {
        instance: wire::fingerprint(instance),
        algorithm: trace.algorithm.clone(),
        depth,
        alg_cost: format_rational(&alg_cost),
        opt_cost: format_rational(&opt.cost),
        ratio,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::Waterfall;
    use crate::engine::run;
    use crate::model::{NodeId, Request, TreeBuilder};
    use crate::oracle::brute_force_opt;

    fn golden() -> Instance {
        let mut b = TreeBuilder::new(int(4));
        let u = b.child(NodeId(0), int(1));
        b.child(NodeId(0), int(2));
        b.child(u, int(3));
        let requests = vec![
            Request::new(1, NodeId(1), int(0), int(1)),
            Request::new(2, NodeId(2), int(0), int(2)),
            Request::new(3, NodeId(3), int(0), int(3)),
        ];
        Instance::new(b.build().unwrap(), requests).unwrap()
    }

    fn pipeline(inst: &Instance) -> (RunTrace, OptResult) {
        let trace = run(inst, &mut Waterfall::new(&inst.tree)).unwrap();
        let opt = brute_force_opt(inst, 10).unwrap();
        (trace, opt)
    }

    #[test]
    fn golden_investments() {
        let inst = golden();
        let (trace, opt) = pipeline(&inst);
        let ledger = &trace.diagnostics.waterfall().unwrap().ledger;
        let summary = InvestmentSummary::from_ledger(&inst.tree, ledger).unwrap();
        let at = |v: usize| summary.index_of(&Pair::new(NodeId(v), int(1))).unwrap();
        assert_eq!(summary.total_invested[at(3)], int(6));
        assert_eq!(summary.received_direct[at(3)], int(3));
        assert_eq!(summary.invested_out[at(3)], int(0));
        assert_eq!(summary.invested_out[at(2)], int(0));
        assert_eq!(summary.invested_out[at(0)], int(4));
        assert!(ledger.pending.is_empty());

        let statuses = classify_pairs(&inst, &trace, &opt).unwrap();
        for s in statuses.iter().filter(|s| s.late) {
            let set = construct_charge_set(&s.pair, &summary, &statuses, &inst.tree).unwrap();
            assert_eq!(set.total(), inst.tree.cost(s.pair.node).clone());
        }
    }

    #[test]
    fn golden_report_passes() {
        let inst = golden();
        let (trace, opt) = pipeline(&inst);
        let report = verify_waterfall_run(&inst, &trace, &opt).unwrap();
        let failed: Vec<_> = report.failed_checks().map(|c| c.name.as_str()).collect();
        assert!(report.passed, "failed: {failed:?}");
        assert_eq!(report.alg_cost, "10");
        assert_eq!(report.opt_cost, "10");
        assert_eq!(report.ratio, "1");
        assert!(report.check("competitive_bound").is_some());
    }

    #[test]
    fn rejects_foreign_optimum() {
        let inst = golden();
        let (trace, _) = pipeline(&inst);
        let mut other = golden();
        other.requests.pop();
        let opt = brute_force_opt(&other, 10).unwrap();
        assert!(matches!(
            verify_waterfall_run(&inst, &trace, &opt),
            Err(AnalysisError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn refuses_non_waterfall_trace() {
        let inst = golden();
        let trace = run(&inst, &mut crate::algos::Noadd).unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert!(matches!(
            verify_waterfall_run(&inst, &trace, &opt),
            Err(AnalysisError::NoLedger(_))
        ));
    }
}
