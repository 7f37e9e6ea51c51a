//! Structural checks on lateness within phases.

use std::collections::BTreeMap;

use crate::model::{Instance, NodeId, NodeSet};

use super::classify::Statuses;
use super::ledger::{InvestmentLedger, Pair};
use super::report::{Check, CheckOutcome};

/// Within every phase of every node the late pairs form a prefix, exactly
/// the last late pair is critically overdue, and root pairs are all late.
pub fn verify_phase_structure(statuses: &Statuses, instance: &Instance) -> Vec<CheckOutcome> {
    let tree = &instance.tree;
    let mut phases: BTreeMap<(NodeId, Option<usize>), Vec<usize>> = BTreeMap::new();
    for (i, s) in statuses.list.iter().enumerate() {
        phases.entry((s.pair.node, s.phase)).or_default().push(i);
    }

    let name = |v: NodeId, p: Option<usize>| {
        format!(
            "node {} phase {}",
            tree.label(v),
            p.map_or("-".to_string(), |p| p.to_string())
        )
    };
    let mut prefix = Check::new("phase_late_prefix");
    let mut single = Check::new("phase_single_critical");
    let mut before = Check::new("no_late_before_first_optimal_inclusion");
    for (&(v, p), idxs) in &phases {
        let flags: Vec<bool> = idxs.iter().map(|&i| statuses.list[i].late).collect();
        let late_count = flags.iter().take_while(|&&l| l).count();
        prefix.record(flags[late_count..].iter().all(|&l| !l), None, || {
            format!("{}: late flags {:?}", name(v, p), flags)
        });
        let critical: Vec<usize> = idxs
            .iter()
            .enumerate()
            .filter(|(_, &i)| statuses.list[i].critically_overdue)
            .map(|(k, _)| k)
            .collect();
        let expected: Vec<usize> = if late_count > 0 {
            vec![late_count - 1]
        } else {
            vec![]
        };
        single.record(critical == expected, None, || {
            format!(
                "{}: critically overdue positions {:?}, expected {:?}",
                name(v, p),
                critical,
                expected
            )
        });
        if p.is_none() {
            before.record(late_count == 0, None, || {
                format!("{}: late pair before phase start", name(v, p))
            });
        }
    }

    let mut root = Check::new("root_phases_late");
    for s in statuses.iter().filter(|s| s.pair.node == NodeId::ROOT) {
        root.record(s.late, None, || {
            format!("root pair at t={} is early", s.pair.time)
        });
    }
    vec![
        prefix.finish(),
        single.finish(),
        before.finish(),
        root.finish(),
    ]
}

/// For a late pair with earliest pending request `ρ`, every node of the
/// service on the path to `ρ` is late; and a late pair whose fall added an
/// early node is critically overdue.
pub fn verify_late_paths(
    statuses: &Statuses,
    instance: &Instance,
    ledger: &InvestmentLedger,
) -> CheckOutcome {
    let tree = &instance.tree;
    let mut check = Check::new("late_paths");
    for s in statuses.iter().filter(|s| s.late) {
        let Some(rho) = s.urgent_request.and_then(|id| instance.request(id)) else {
            continue;
        };
        let path = tree
            .path_outside(s.pair.node, rho.node, &NodeSet::new())
            .expect("urgent request lies in the subtree");
        for u in path {
            if let Some(us) = statuses.get(&Pair::new(u, s.pair.time.clone())) {
                check.record(us.late, None, || {
                    format!(
                        "{} late but {} on the path to request {} is early",
                        s.pair.describe(tree),
                        us.pair.describe(tree),
                        rho.id
                    )
                });
            }
        }
    }
    for fall in ledger.falls() {
        let Some(vs) = statuses.get(&fall.pair) else {
            continue;
        };
        if !vs.late {
            continue;
        }
        for &u in &fall.added {
            if let Some(us) = statuses.get(&Pair::new(u, fall.pair.time.clone())) {
                check.record(us.late || vs.critically_overdue, None, || {
                    format!(
                        "{} late, added early {}, but is not critically overdue",
                        vs.pair.describe(tree),
                        us.pair.describe(tree)
                    )
                });
            }
        }
    }
    check.finish()
}
