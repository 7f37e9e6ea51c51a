#![allow(dead_code)]

use std::collections::BTreeMap;

use mlapd::model::{NodeSet, Request};
use mlapd::rational::int;
use mlapd::{Instance, NodeId, Rational, TreeBuilder};
use num_traits::Zero;

pub const GOLDEN_JSON: &str = include_str!("../../../../instances/golden4.json");

/// r(4) with children u(1), w(2); x(3) below u. Requests at u, w, x with
/// deadlines 1, 2, 3, all arriving at 0.
pub fn golden() -> Instance {
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

/// Optimum over service times drawn from every arrival and deadline, by
/// plain enumeration of per-request assignments.
pub fn opt_with_arrivals(instance: &Instance) -> Rational {
    let mut times: Vec<Rational> = instance
        .requests
        .iter()
        .flat_map(|r| [r.arrival.clone(), r.deadline.clone()])
        .collect();
    times.sort();
    times.dedup();
    let candidates: Vec<Vec<&Rational>> = instance
        .requests
        .iter()
        .map(|r| times.iter().filter(|t| r.window_contains(t)).collect())
        .collect();
    let mut best: Option<Rational> = None;
    let mut pick = Vec::with_capacity(candidates.len());
    enumerate(instance, &candidates, &mut pick, &mut best);
    best.unwrap_or_else(Rational::zero)
}

fn enumerate<'a>(
    instance: &Instance,
    candidates: &[Vec<&'a Rational>],
    pick: &mut Vec<&'a Rational>,
    best: &mut Option<Rational>,
) {
    let k = pick.len();
    if k == candidates.len() {
        let mut services: BTreeMap<&Rational, NodeSet> = BTreeMap::new();
        for (r, t) in instance.requests.iter().zip(pick.iter()) {
            services
                .entry(*t)
                .or_default()
                .extend(instance.tree.path_to_root(r.node).unwrap());
        }
        let cost = services
            .values()
            .fold(Rational::zero(), |acc, s| acc + instance.tree.cost_of(s));
        if best.as_ref().is_none_or(|b| &cost < b) {
            *best = Some(cost);
        }
        return;
    }
    for &t in &candidates[k] {
        pick.push(t);
        enumerate(instance, candidates, pick, best);
        pick.pop();
    }
}
