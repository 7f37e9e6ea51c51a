//! Lateness, phases and critical overdueness of every ALG pair.

use std::collections::HashMap;

use crate::engine::RunTrace;
use crate::model::Instance;
use crate::oracle::OptResult;
use crate::rational::ExtTime;
use crate::wire;

use super::ledger::Pair;
use super::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct PairStatus {
    pub pair: Pair,
    pub service_index: usize,
    /// Earliest deadline among pending requests in the subtree just before
    /// the service; infinite when none is pending.
    pub urgency: ExtTime,
    pub urgent_request: Option<i64>,
    /// Next optimal service containing the node strictly after the pair's time.
    pub next_opt: ExtTime,
    /// Index of the latest optimal service containing the node at or before
    /// the pair's time; `None` before the first such service.
    pub phase: Option<usize>,
    pub late: bool,
    pub critically_overdue: bool,
}

/// Indexed statuses, in schedule order (time, then node id).
#[derive(Debug, Clone, Default)]
pub struct Statuses {
    pub list: Vec<PairStatus>,
    index: HashMap<Pair, usize>,
}

impl Statuses {
    pub fn get(&self, pair: &Pair) -> Option<&PairStatus> {
        self.index.get(pair).map(|&i| &self.list[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairStatus> {
        self.list.iter()
    }
}

pub fn check_same_instance(
    instance: &Instance,
    trace: &RunTrace,
    opt: &OptResult,
) -> Result<(), AnalysisError> {
    let fp = wire::fingerprint(instance);
    for (what, other) in [("trace", &trace.fingerprint), ("optimum", &opt.fingerprint)] {
        if other != &fp {
            return Err(AnalysisError::FingerprintMismatch {
                what,
                expected: fp.clone(),
                found: other.clone(),
            });
        }
    }
    Ok(())
}

pub fn classify_pairs(
    instance: &Instance,
    trace: &RunTrace,
    opt: &OptResult,
) -> Result<Statuses, AnalysisError> {
    check_same_instance(instance, trace, opt)?;
    let tree = &instance.tree;
    let opt_times: Vec<_> = tree.nodes().map(|v| opt.including_times(v)).collect();
    let mut satisfied = vec![false; instance.requests.len()];
    let mut list = Vec::new();

    for (idx, service) in trace.schedule.services.iter().enumerate() {
        let t = &service.time;
        let pending: Vec<usize> = (0..instance.requests.len())
            .filter(|&i| !satisfied[i] && &instance.requests[i].arrival <= t)
            .collect();
        for &v in &service.nodes {
            let urgent = pending
                .iter()
                .map(|&i| &instance.requests[i])
                .filter(|r| tree.is_descendant_or_self(r.node, v))
                .min_by(|a, b| a.deadline.cmp(&b.deadline));
            let urgency = urgent.map_or(ExtTime::Infinite, |r| ExtTime::Finite(r.deadline.clone()));
            let times = &opt_times[v.index()];
            let next_opt = times
                .iter()
                .find(|&o| o > t)
                .map_or(ExtTime::Infinite, |o| ExtTime::Finite(o.clone()));
            let phase = times.iter().rposition(|o| o <= t);
            list.push(PairStatus {
                pair: Pair::new(v, t.clone()),
                service_index: idx,
                late: urgency < next_opt,
                urgency,
                urgent_request: urgent.map(|r| r.id),
                next_opt,
                phase,
                critically_overdue: false,
            });
        }
        for &i in &pending {
            let r = &instance.requests[i];
            if service.nodes.contains(&r.node) && r.window_contains(t) {
                satisfied[i] = true;
            }
        }
    }

    // a late pair is critically overdue when no later ALG inclusion of the
    // node before its next optimal inclusion is late
    let mut by_node: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, s) in list.iter().enumerate() {
        by_node.entry(s.pair.node.index()).or_default().push(i);
    }
    for idxs in by_node.values() {
        for (k, &i) in idxs.iter().enumerate() {
            if !list[i].late {
                continue;
            }
            let horizon = list[i].next_opt.clone();
            let later_late = idxs[k + 1..].iter().any(|&j| {
                let tj = ExtTime::Finite(list[j].pair.time.clone());
                tj < horizon && list[j].late
            });
            list[i].critically_overdue = !later_late;
        }
    }

    let index = list
        .iter()
        .enumerate()
        .map(|(i, s)| (s.pair.clone(), i))
        .collect();
    Ok(Statuses { list, index })
}
