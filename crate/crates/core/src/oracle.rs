//! Exact offline optimum for small instances.
//!
//! Some optimal schedule transmits only at request deadlines, so each
//! request is assigned one deadline inside its window and every used time
//! transmits the union of the root paths assigned to it. The search walks
//! assignments in request-id order with candidate times ascending, keeping
//! the first strictly cheaper one; the result is therefore the
//! lexicographically smallest minimum-cost assignment.
//!
//! Two exact prunings keep desk-scale instances fast without changing the
//! answer: a partial assignment is abandoned once a lower bound on its
//! completion reaches the best known cost, and when some candidate time
//! already covers a request's whole path for free, later candidates are
//! skipped (moving the request to that earlier free slot never costs more).

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, NodeId, NodeSet, Schedule, Service};
use crate::rational::{format_rational, Rational};
use crate::wire::{self, ServiceEntry};

pub const DEFAULT_MAX_REQUESTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {requests} requests; the exhaustive oracle is limited to {bound} (raise --max-oracle-requests)")]
    TooLarge { requests: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub fingerprint: String,
    pub schedule: Schedule,
    pub cost: Rational,
    /// Request id → assigned service time.
    pub assignment: BTreeMap<i64, Rational>,
}

impl OptResult {
    /// Times of optimal services containing `node`, ascending.
    pub fn including_times(&self, node: NodeId) -> Vec<Rational> {
        self.schedule
            .services
            .iter()
            .filter(|s| s.nodes.contains(&node))
            .map(|s| s.time.clone())
            .collect()
    }
}

pub fn opt_including_times(opt: &OptResult, node: NodeId) -> Vec<Rational> {
    opt.including_times(node)
}

trait Cost:
    Clone + Ord + Zero + for<'a> Add<&'a Self, Output = Self> + for<'a> Sub<&'a Self, Output = Self>
{
}

impl Cost for i128 {}
impl Cost for BigInt {}

struct Search<'a, C> {
    // per request: root path, candidate time indices (ascending)
    paths: &'a [Vec<NodeId>],
    candidates: &'a [Vec<usize>],
    cost: &'a [C],
    // cover[t][v]: requests assigned to time t whose path uses v
    cover: Vec<Vec<u32>>,
    current: Vec<usize>,
    best: Option<(C, Vec<usize>)>,
}

impl<C: Cost> Search<'_, C> {
    fn increment(&self, req: usize, t: usize) -> C {
        self.paths[req]
            .iter()
            .filter(|v| self.cover[t][v.index()] == 0)
            .fold(C::zero(), |acc, v| acc + &self.cost[v.index()])
    }

    // any completion pays at least the cheapest slot of every remaining request
    fn lower_bound(&self, from: usize) -> C {
        (from..self.paths.len())
            .map(|r| {
                self.candidates[r]
                    .iter()
                    .map(|&t| self.increment(r, t))
                    .min()
                    .expect("request without candidate time")
            })
            .max()
            .unwrap_or_else(C::zero)
    }

    fn assign(&mut self, req: usize, t: usize, delta: i32) {
        for v in &self.paths[req] {
            let c = &mut self.cover[t][v.index()];
            *c = (*c as i64 + delta as i64) as u32;
        }
    }

    fn dfs(&mut self, req: usize, spent: C) {
        if let Some((best, _)) = &self.best {
            let bound = spent.clone() + &self.lower_bound(req);
            if &bound >= best {
                return;
            }
        }
        if req == self.paths.len() {
            self.best = Some((spent, self.current.clone()));
            return;
        }
        for k in 0..self.candidates[req].len() {
            let t = self.candidates[req][k];
            let inc = self.increment(req, t);
            let free = inc.is_zero();
            self.assign(req, t, 1);
            self.current.push(t);
            self.dfs(req + 1, spent.clone() + &inc);
            self.current.pop();
            self.assign(req, t, -1);
            if free {
                break;
            }
        }
    }
}

fn search<C: Cost>(
    paths: &[Vec<NodeId>],
    candidates: &[Vec<usize>],
    cost: &[C],
    times: usize,
    nodes: usize,
) -> Vec<usize> {
    let mut s = Search {
        paths,
        candidates,
        cost,
        cover: vec![vec![0; nodes]; times],
        current: Vec::with_capacity(paths.len()),
        best: None,
    };
    s.dfs(0, C::zero());
    s.best.map(|(_, a)| a).unwrap_or_default()
}

/// Costs scaled to a common denominator, as `i128` when the total fits.
enum ScaledCosts {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

fn scale_costs(instance: &Instance) -> ScaledCosts {
    let tree = &instance.tree;
    let lcm = tree
        .nodes()
        .fold(BigInt::one(), |acc, v| acc.lcm(tree.cost(v).denom()));
    let scaled: Vec<BigInt> = tree
        .nodes()
        .map(|v| {
            let c = tree.cost(v);
            c.numer() * (&lcm / c.denom())
        })
        .collect();
    let total: BigInt =
        scaled.iter().sum::<BigInt>() * BigInt::from(instance.requests.len().max(1));
    if total.to_i128().is_some() {
        ScaledCosts::Small(scaled.iter().map(|c| c.to_i128().expect("fits")).collect())
    } else {
        ScaledCosts::Big(scaled)
    }
}

pub fn brute_force_opt(instance: &Instance, max_requests: usize) -> Result<OptResult, OracleError> {
    let n = instance.requests.len();
    if n > max_requests {
        return Err(OracleError::TooLarge {
            requests: n,
            bound: max_requests,
        });
    }
    let tree = &instance.tree;
    let times = instance.deadlines();
    let candidates: Vec<Vec<usize>> = instance
        .requests
        .iter()
        .map(|r| {
            (0..times.len())
                .filter(|&i| r.window_contains(&times[i]))
                .collect()
        })
        .collect();
    let paths: Vec<Vec<NodeId>> = instance
        .requests
        .iter()
        .map(|r| tree.path_to_root(r.node).expect("validated node"))
        .collect();

    let chosen = match scale_costs(instance) {
        ScaledCosts::Small(c) => search(&paths, &candidates, &c, times.len(), tree.len()),
        ScaledCosts::Big(c) => search(&paths, &candidates, &c, times.len(), tree.len()),
    };

    let mut by_time: BTreeMap<usize, NodeSet> = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    for ((r, path), &t) in instance.requests.iter().zip(&paths).zip(&chosen) {
        by_time.entry(t).or_default().extend(path.iter().copied());
        assignment.insert(r.id, times[t].clone());
    }
    let schedule = Schedule::new(
        by_time
            .into_iter()
            .map(|(t, nodes)| Service {
                time: times[t].clone(),
                nodes,
            })
            .collect(),
    );
    Ok(OptResult {
        fingerprint: wire::fingerprint(instance),
        cost: schedule.cost(tree),
        schedule,
        assignment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptFile {
    pub instance: String,
    pub services: Vec<ServiceEntry>,
    pub total_cost: String,
    /// Request id (as a string key) → assigned time.
    pub assignment: BTreeMap<String, String>,
}

impl OptFile {
    pub fn from_opt(instance: &Instance, opt: &OptResult) -> OptFile {
        OptFile {
            instance: opt.fingerprint.clone(),
            services: opt
                .schedule
                .services
                .iter()
                .map(|s| ServiceEntry::from_service(&instance.tree, s))
                .collect(),
            total_cost: format_rational(&opt.cost),
            assignment: opt
                .assignment
                .iter()
                .map(|(id, t)| (id.to_string(), format_rational(t)))
                .collect(),
        }
    }
}

/// Plain enumeration of every deadline assignment, without pruning.
/// Exponential; used to cross-check the pruned search on small instances.
pub fn exhaustive_opt_cost(instance: &Instance) -> Rational {
    let tree = &instance.tree;
    let times = instance.deadlines();
    let candidates: Vec<Vec<usize>> = instance
        .requests
        .iter()
        .map(|r| {
            (0..times.len())
                .filter(|&i| r.window_contains(&times[i]))
                .collect()
        })
        .collect();
    let mut best: Option<Rational> = None;
    let mut idx = vec![0usize; candidates.len()];
    loop {
        let mut services: BTreeMap<usize, NodeSet> = BTreeMap::new();
        for (r, (&k, cand)) in instance.requests.iter().zip(idx.iter().zip(&candidates)) {
            services
                .entry(cand[k])
                .or_default()
                .extend(tree.path_to_root(r.node).expect("validated node"));
        }
        let cost = services
            .values()
            .fold(Rational::zero(), |acc, s| acc + tree.cost_of(s));
        if best.as_ref().is_none_or(|b| &cost < b) {
            best = Some(cost);
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best.unwrap_or_else(Rational::zero);
            }
            idx[pos] += 1;
            if idx[pos] < candidates[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, Request, TreeBuilder};
    use crate::rational::int;

    fn chain(costs: &[i64]) -> (crate::model::Tree, Vec<NodeId>) {
        let mut b = TreeBuilder::new(int(costs[0]));
        let mut ids = vec![NodeId::ROOT];
        for &c in &costs[1..] {
            let last = *ids.last().unwrap();
            ids.push(b.child(last, int(c)));
        }
        (b.build().unwrap(), ids)
    }

    #[test]
    fn single_request_forced() {
        let (t, ids) = chain(&[1, 2, 4]);
        let inst = Instance::new(t, vec![Request::new(0, ids[2], int(0), int(5))]).unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert_eq!(opt.cost, int(7));
        assert_eq!(
            opt.schedule.services,
            vec![Service::new(int(5), ids.clone())]
        );
    }

    #[test]
    fn shared_service_at_earlier_deadline() {
        let (t, ids) = chain(&[1, 2, 4]);
        let inst = Instance::new(
            t,
            vec![
                Request::new(0, ids[2], int(0), int(5)),
                Request::new(1, ids[1], int(0), int(3)),
            ],
        )
        .unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert_eq!(opt.cost, int(7));
        assert_eq!(
            opt.schedule.services,
            vec![Service::new(int(3), ids.clone())]
        );
        assert_eq!(opt.assignment[&0], int(3));
        assert_eq!(exhaustive_opt_cost(&inst), int(7));
    }

    #[test]
    fn disjoint_windows_need_two_services() {
        let (t, ids) = chain(&[1, 2]);
        let inst = Instance::new(
            t,
            vec![
                Request::new(0, ids[1], int(0), int(1)),
                Request::new(1, ids[1], int(2), int(5)),
            ],
        )
        .unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert_eq!(opt.cost, int(6));
        assert_eq!(opt.schedule.len(), 2);
        assert_eq!(opt.including_times(ids[1]), vec![int(1), int(5)]);
        assert_eq!(opt.including_times(ids[0]), vec![int(1), int(5)]);
        assert!(check_feasible(&inst, &opt.schedule).is_ok());
    }

    #[test]
    fn unused_nodes_never_included() {
        let mut b = TreeBuilder::new(int(1));
        let a = b.child(NodeId::ROOT, int(1));
        let spare = b.child(NodeId::ROOT, int(1));
        let inst =
            Instance::new(b.build().unwrap(), vec![Request::new(0, a, int(0), int(2))]).unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert!(opt.including_times(spare).is_empty());
        assert_eq!(opt.including_times(NodeId::ROOT), vec![int(2)]);
    }

    #[test]
    fn canonical_tie_break_prefers_earlier_times() {
        // both requests at the root with nested windows: one service either at 2 or at 3
        let tree = TreeBuilder::new(int(1)).build().unwrap();
        let inst = Instance::new(
            tree,
            vec![
                Request::new(0, NodeId::ROOT, int(0), int(3)),
                Request::new(1, NodeId::ROOT, int(0), int(2)),
            ],
        )
        .unwrap();
        let opt = brute_force_opt(&inst, 10).unwrap();
        assert_eq!(opt.cost, int(1));
        assert_eq!(opt.assignment[&0], int(2));
        assert_eq!(opt.assignment[&1], int(2));
    }

    #[test]
    fn refuses_large_instances() {
        let tree = TreeBuilder::new(int(1)).build().unwrap();
        let reqs = (0..3)
            .map(|i| Request::new(i, NodeId::ROOT, int(0), int(i + 1)))
            .collect();
        let inst = Instance::new(tree, reqs).unwrap();
        assert_eq!(
            brute_force_opt(&inst, 2),
            Err(OracleError::TooLarge {
                requests: 3,
                bound: 2
            })
        );
    }
}
