//! Instances, services and schedules.
//!
//! Node ids are dense (`0..n`) with the root at `0`; every parent has a
//! smaller id than its children. The labels used in instance files are kept
//! alongside so output can be written back in the caller's id space.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("tree has no nodes")]
    EmptyTree,
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("duplicate node id {0}")]
    DuplicateNode(i64),
    #[error("node {node} has unknown parent {parent}")]
    UnknownParent { node: i64, parent: i64 },
    #[error("nodes unreachable from the root (cycle?): {0:?}")]
    Unreachable(Vec<i64>),
    #[error("node {node} has non-positive cost {cost}")]
    NonPositiveCost { node: i64, cost: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {target} is not in the subtree of {ancestor}")]
    NotDescendant { ancestor: NodeId, target: NodeId },
    #[error("duplicate request id {0}")]
    DuplicateRequest(i64),
    #[error("request {id} has arrival {arrival} after deadline {deadline}")]
    EmptyWindow {
        id: i64,
        arrival: String,
        deadline: String,
    },
    #[error(
        "requests {first} and {second} share deadline {deadline} (use perturbation to break ties)"
    )]
    DuplicateDeadline {
        first: i64,
        second: i64,
        deadline: String,
    },
    #[error("service violates the subtree property: {0}")]
    MalformedService(ServiceDefect),
}

/// Why a node set is not a valid service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServiceDefect {
    MissingRoot,
    UnknownNode(NodeId),
    MissingParent { node: NodeId, parent: NodeId },
}

impl fmt::Display for ServiceDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceDefect::MissingRoot => f.write_str("root missing"),
            ServiceDefect::UnknownNode(v) => write!(f, "unknown node {v}"),
            ServiceDefect::MissingParent { node, parent } => {
                write!(f, "node {node} present without its parent {parent}")
            }
        }
    }
}

/// Immutable rooted node-weighted tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    cost: Vec<Rational>,
    level: Vec<usize>,
    labels: Vec<i64>,
    label_index: HashMap<i64, NodeId>,
    // preorder entry/exit stamps for O(1) ancestor checks
    enter: Vec<usize>,
    exit: Vec<usize>,
    depth: usize,
}

impl Tree {
    /// Builds a tree from `(label, parent label, cost)` triples in any order.
    /// Nodes are renumbered breadth-first from the root, siblings by label.
    pub fn from_labeled(nodes: &[(i64, Option<i64>, Rational)]) -> Result<Tree, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::EmptyTree);
        }
        let mut by_label: HashMap<i64, usize> = HashMap::new();
        for (i, (label, _, _)) in nodes.iter().enumerate() {
            if by_label.insert(*label, i).is_some() {
                return Err(ModelError::DuplicateNode(*label));
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].1.is_none()).collect();
        if roots.len() != 1 {
            return Err(ModelError::RootCount(roots.len()));
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, (label, parent, cost)) in nodes.iter().enumerate() {
            if *cost <= Rational::zero() {
                return Err(ModelError::NonPositiveCost {
                    node: *label,
                    cost: cost.to_string(),
                });
            }
            if let Some(p) = parent {
                let pi = *by_label.get(p).ok_or(ModelError::UnknownParent {
                    node: *label,
                    parent: *p,
                })?;
                kids[pi].push(i);
            }
        }
        for k in &mut kids {
            k.sort_by_key(|&i| nodes[i].0);
        }
        let mut order = Vec::with_capacity(nodes.len());
        let mut new_id = vec![usize::MAX; nodes.len()];
        let mut queue = VecDeque::from([roots[0]]);
        while let Some(i) = queue.pop_front() {
            new_id[i] = order.len();
            order.push(i);
            queue.extend(kids[i].iter().copied());
        }
        if order.len() != nodes.len() {
            let mut stranded: Vec<i64> = (0..nodes.len())
                .filter(|&i| new_id[i] == usize::MAX)
                .map(|i| nodes[i].0)
                .collect();
            stranded.sort_unstable();
            return Err(ModelError::Unreachable(stranded));
        }
        let parent = order
            .iter()
            .map(|&i| nodes[i].1.map(|p| NodeId(new_id[by_label[&p]])))
            .collect();
        let cost = order.iter().map(|&i| nodes[i].2.clone()).collect();
        let labels = order.iter().map(|&i| nodes[i].0).collect();
        Ok(Tree::from_canonical(parent, cost, labels))
    }

    /// `parent[i] < i` for every non-root node and node 0 is the root.
    fn from_canonical(parent: Vec<Option<NodeId>>, cost: Vec<Rational>, labels: Vec<i64>) -> Tree {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        let mut level = vec![1usize; n];
        for i in 1..n {
            let p = parent[i].expect("non-root node without parent").index();
            debug_assert!(p < i);
            children[p].push(NodeId(i));
            level[i] = level[p] + 1;
        }
        let mut enter = vec![0; n];
        let mut exit = vec![0; n];
        let mut clock = 0;
        let mut stack = vec![(NodeId::ROOT, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                exit[v.index()] = clock;
                continue;
            }
            enter[v.index()] = clock;
            clock += 1;
            stack.push((v, true));
            for &c in children[v.index()].iter().rev() {
                stack.push((c, false));
            }
        }
        let depth = level.iter().copied().max().unwrap_or(1);
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, NodeId(i)))
            .collect();
        Tree {
            parent,
            children,
            cost,
            level,
            labels,
            label_index,
            enter,
            exit,
            depth,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).map(NodeId)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.index()]
    }

    pub fn cost(&self, v: NodeId) -> &Rational {
        &self.cost[v.index()]
    }

    /// Number of nodes on the root-to-`v` path.
    pub fn level(&self, v: NodeId) -> usize {
        self.level[v.index()]
    }

    /// Maximum number of nodes on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn label(&self, v: NodeId) -> i64 {
        self.labels[v.index()]
    }

    pub fn by_label(&self, label: i64) -> Option<NodeId> {
        self.label_index.get(&label).copied()
    }

    /// True when `v` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn is_descendant_or_self(&self, v: NodeId, ancestor: NodeId) -> bool {
        let (a, x) = (ancestor.index(), v.index());
        self.enter[a] <= self.enter[x] && self.exit[x] <= self.exit[a]
    }

    /// True when every non-leaf node has exactly one child.
    pub fn is_path(&self) -> bool {
        self.children.iter().all(|c| c.len() <= 1)
    }

    fn check(&self, v: NodeId) -> Result<(), ModelError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(ModelError::UnknownNode(v.to_string()))
        }
    }

    /// Root-first node sequence ending at `v`.
    pub fn path_to_root(&self, v: NodeId) -> Result<Vec<NodeId>, ModelError> {
        self.check(v)?;
        let mut path = Vec::with_capacity(self.level(v));
        let mut cur = Some(v);
        while let Some(u) = cur {
            path.push(u);
            cur = self.parent(u);
        }
        path.reverse();
        Ok(path)
    }

    /// Nodes on the `from`-to-`target` path that are not in `exclude`,
    /// ordered from `from` towards `target`.
    pub fn path_outside(
        &self,
        from: NodeId,
        target: NodeId,
        exclude: &NodeSet,
    ) -> Result<Vec<NodeId>, ModelError> {
        self.check(from)?;
        self.check(target)?;
        if !self.is_descendant_or_self(target, from) {
            return Err(ModelError::NotDescendant {
                ancestor: from,
                target,
            });
        }
        let mut path = Vec::new();
        let mut cur = target;
        loop {
            if !exclude.contains(&cur) {
                path.push(cur);
            }
            if cur == from {
                break;
            }
            cur = self.parent(cur).expect("descendant walk passed the root");
        }
        path.reverse();
        Ok(path)
    }

    pub fn cost_of<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> Rational {
        nodes
            .into_iter()
            .fold(Rational::zero(), |acc, v| acc + self.cost(*v))
    }

    /// Checks the subtree property: root present, every node's parent present.
    pub fn validate_service_nodes(&self, nodes: &NodeSet) -> Result<(), ServiceDefect> {
        if !nodes.contains(&NodeId::ROOT) {
            return Err(ServiceDefect::MissingRoot);
        }
        for &v in nodes {
            if !self.contains(v) {
                return Err(ServiceDefect::UnknownNode(v));
            }
            if let Some(p) = self.parent(v) {
                if !nodes.contains(&p) {
                    return Err(ServiceDefect::MissingParent { node: v, parent: p });
                }
            }
        }
        Ok(())
    }

    pub fn service_cost(&self, service: &Service) -> Result<Rational, ModelError> {
        self.validate_service_nodes(&service.nodes)
            .map_err(ModelError::MalformedService)?;
        Ok(self.cost_of(&service.nodes))
    }

    /// Largest `L` such that every child costs at least `L` times its parent.
    /// `None` for a single-node tree.
    pub fn increase_factor(&self) -> Option<Rational> {
        self.nodes()
            .filter_map(|v| self.parent(v).map(|p| self.cost(v) / self.cost(p)))
            .min()
    }

    /// Costs do not decrease moving away from the root.
    pub fn is_increasing(&self) -> bool {
        self.nodes().all(|v| match self.parent(v) {
            Some(p) => self.cost(v) >= self.cost(p),
            None => true,
        })
    }
}

/// Incremental tree construction with ids assigned in insertion order.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    parent: Vec<Option<NodeId>>,
    cost: Vec<Rational>,
}

impl TreeBuilder {
    pub fn new(root_cost: Rational) -> TreeBuilder {
        TreeBuilder {
            parent: vec![None],
            cost: vec![root_cost],
        }
    }

    pub fn child(&mut self, parent: NodeId, cost: Rational) -> NodeId {
        assert!(
            parent.index() < self.parent.len(),
            "unknown parent {parent}"
        );
        self.parent.push(Some(parent));
        self.cost.push(cost);
        NodeId(self.parent.len() - 1)
    }

    pub fn build(self) -> Result<Tree, ModelError> {
        for (i, c) in self.cost.iter().enumerate() {
            if *c <= Rational::zero() {
                return Err(ModelError::NonPositiveCost {
                    node: i as i64,
                    cost: c.to_string(),
                });
            }
        }
        let labels = (0..self.parent.len() as i64).collect();
        Ok(Tree::from_canonical(self.parent, self.cost, labels))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: i64,
    pub node: NodeId,
    pub arrival: Rational,
    pub deadline: Rational,
}

impl Request {
    pub fn new(id: i64, node: NodeId, arrival: Rational, deadline: Rational) -> Request {
        Request {
            id,
            node,
            arrival,
            deadline,
        }
    }

    pub fn window_contains(&self, t: &Rational) -> bool {
        &self.arrival <= t && t <= &self.deadline
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Service {
    pub time: Rational,
    pub nodes: NodeSet,
}

impl Service {
    pub fn new(time: Rational, nodes: impl IntoIterator<Item = NodeId>) -> Service {
        Service {
            time,
            nodes: nodes.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub services: Vec<Service>,
}

impl Schedule {
    pub fn new(services: Vec<Service>) -> Schedule {
        Schedule { services }
    }

    /// Sum of service costs; node sets are not validated here.
    pub fn cost(&self, tree: &Tree) -> Rational {
        self.services
            .iter()
            .fold(Rational::zero(), |acc, s| acc + tree.cost_of(&s.nodes))
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub tree: Tree,
    /// Sorted by request id.
    pub requests: Vec<Request>,
}

impl Instance {
    /// Validates requests and requires pairwise distinct deadlines.
    pub fn new(tree: Tree, requests: Vec<Request>) -> Result<Instance, ModelError> {
        let inst = Instance::unchecked_deadlines(tree, requests)?;
        inst.check_distinct_deadlines()?;
        Ok(inst)
    }

    /// Like [`Instance::new`], but equal deadlines are separated by shifting
    /// later duplicates (in request-id order) by multiples of a small epsilon.
    pub fn with_perturbation(tree: Tree, requests: Vec<Request>) -> Result<Instance, ModelError> {
        let mut inst = Instance::unchecked_deadlines(tree, requests)?;
        inst.perturb_deadlines();
        inst.check_distinct_deadlines()?;
        Ok(inst)
    }

    fn unchecked_deadlines(tree: Tree, mut requests: Vec<Request>) -> Result<Instance, ModelError> {
        requests.sort_by_key(|r| r.id);
        for w in requests.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::DuplicateRequest(w[0].id));
            }
        }
        for r in &requests {
            if !tree.contains(r.node) {
                return Err(ModelError::UnknownNode(r.node.to_string()));
            }
            if r.arrival > r.deadline {
                return Err(ModelError::EmptyWindow {
                    id: r.id,
                    arrival: r.arrival.to_string(),
                    deadline: r.deadline.to_string(),
                });
            }
        }
        Ok(Instance { tree, requests })
    }

    fn check_distinct_deadlines(&self) -> Result<(), ModelError> {
        let mut seen: HashMap<&Rational, i64> = HashMap::new();
        for r in &self.requests {
            if let Some(first) = seen.insert(&r.deadline, r.id) {
                return Err(ModelError::DuplicateDeadline {
                    first,
                    second: r.id,
                    deadline: r.deadline.to_string(),
                });
            }
        }
        Ok(())
    }

    // epsilon = (minimum gap between distinct event times)
    //           / (2 * (largest denominator) * (n + 1));
    // the k-th duplicate of a deadline moves by k * epsilon, which stays
    // below half a gap so no event changes order.
    fn perturb_deadlines(&mut self) {
        let mut times: Vec<&Rational> = self
            .requests
            .iter()
            .flat_map(|r| [&r.arrival, &r.deadline])
            .collect();
        times.sort();
        times.dedup();
        let gap = times
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .unwrap_or_else(|| Rational::from_integer(1.into()));
        let max_den = times
            .iter()
            .map(|t| t.denom().clone())
            .max()
            .unwrap_or_else(|| 1.into());
        let n = self.requests.len() as i64;
        let eps = gap / Rational::from_integer(max_den * (2 * (n + 1)));
        let mut dup_count: HashMap<Rational, i64> = HashMap::new();
        for r in &mut self.requests {
            let k = dup_count.entry(r.deadline.clone()).or_insert(0);
            if *k > 0 {
                r.deadline += &eps * Rational::from_integer((*k).into());
            }
            *k += 1;
        }
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn request(&self, id: i64) -> Option<&Request> {
        self.requests
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.requests[i])
    }

    /// Sorted distinct deadlines.
    pub fn deadlines(&self) -> Vec<Rational> {
        let mut d: Vec<Rational> = self.requests.iter().map(|r| r.deadline.clone()).collect();
        d.sort();
        d.dedup();
        d
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnservedReason {
    /// No service contains the request's node.
    NodeNeverIncluded,
    /// Every service containing the node precedes the arrival.
    OnlyBeforeArrival,
    /// Every service containing the node follows the deadline.
    OnlyAfterDeadline,
    /// Services containing the node exist on both sides of the window.
    OutsideWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MalformedService {
        index: usize,
        defect: ServiceDefect,
    },
    TimesNotIncreasing {
        index: usize,
    },
    Unserved {
        request: i64,
        reason: UnservedReason,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedService { index, defect } => {
                write!(f, "service {index} malformed: {defect}")
            }
            Violation::TimesNotIncreasing { index } => {
                write!(f, "service {index} is not later than its predecessor")
            }
            Violation::Unserved { request, reason } => {
                let why = match reason {
                    UnservedReason::NodeNeverIncluded => "node never included",
                    UnservedReason::OnlyBeforeArrival => "served only before arrival",
                    UnservedReason::OnlyAfterDeadline => "served after deadline",
                    UnservedReason::OutsideWindow => "served only outside its window",
                };
                write!(f, "request {request} unserved: {why}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Feasibility {
    pub violations: Vec<Violation>,
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_feasible(instance: &Instance, schedule: &Schedule) -> Feasibility {
    let tree = &instance.tree;
    let mut violations = Vec::new();
    for (i, s) in schedule.services.iter().enumerate() {
        if let Err(defect) = tree.validate_service_nodes(&s.nodes) {
            violations.push(Violation::MalformedService { index: i, defect });
        }
        if i > 0 && schedule.services[i - 1].time >= s.time {
            violations.push(Violation::TimesNotIncreasing { index: i });
        }
    }
    for r in &instance.requests {
        let mut before = false;
        let mut after = false;
        let mut served = false;
        for s in schedule
            .services
            .iter()
            .filter(|s| s.nodes.contains(&r.node))
        {
            if s.time < r.arrival {
                before = true;
            } else if s.time > r.deadline {
                after = true;
            } else {
                served = true;
                break;
            }
        }
        if !served {
            let reason = match (before, after) {
                (false, false) => UnservedReason::NodeNeverIncluded,
                (true, false) => UnservedReason::OnlyBeforeArrival,
                (false, true) => UnservedReason::OnlyAfterDeadline,
                (true, true) => UnservedReason::OutsideWindow,
            };
            violations.push(Violation::Unserved {
                request: r.id,
                reason,
            });
        }
    }
    Feasibility { violations }
}

/// Requests satisfied by `S` at `time` among `pending`.
pub fn satisfied_by<'a>(
    pending: impl IntoIterator<Item = &'a Request>,
    nodes: &NodeSet,
    time: &Rational,
) -> HashSet<i64> {
    pending
        .into_iter()
        .filter(|r| nodes.contains(&r.node) && r.window_contains(time))
        .map(|r| r.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn chain(costs: &[i64]) -> (Tree, Vec<NodeId>) {
        let mut b = TreeBuilder::new(int(costs[0]));
        let mut ids = vec![NodeId::ROOT];
        for &c in &costs[1..] {
            let last = *ids.last().unwrap();
            ids.push(b.child(last, int(c)));
        }
        (b.build().unwrap(), ids)
    }

    #[test]
    fn chain_paths() {
        let (t, ids) = chain(&[1, 2, 4]);
        let (r, a, b) = (ids[0], ids[1], ids[2]);
        assert_eq!(t.path_to_root(b).unwrap(), vec![r, a, b]);
        assert_eq!(t.path_to_root(r).unwrap(), vec![r]);
        assert_eq!(t.depth(), 3);
        assert!(t.path_to_root(NodeId(9)).is_err());
    }

    #[test]
    fn star_path() {
        let mut b = TreeBuilder::new(int(1));
        let _x = b.child(NodeId::ROOT, int(1));
        let y = b.child(NodeId::ROOT, int(1));
        let t = b.build().unwrap();
        assert_eq!(t.path_to_root(y).unwrap(), vec![NodeId::ROOT, y]);
        assert!(!t.is_path());
    }

    #[test]
    fn path_outside_cases() {
        let (t, ids) = chain(&[1, 2, 4]);
        let (r, a, b) = (ids[0], ids[1], ids[2]);
        let s: NodeSet = [r].into();
        assert_eq!(t.path_outside(r, b, &s).unwrap(), vec![a, b]);
        let all: NodeSet = [r, a, b].into();
        assert!(t.path_outside(r, b, &all).unwrap().is_empty());
        assert_eq!(t.path_outside(a, b, &s).unwrap(), vec![a, b]);
        assert!(matches!(
            t.path_outside(b, a, &NodeSet::new()),
            Err(ModelError::NotDescendant { .. })
        ));
    }

    #[test]
    fn service_costs() {
        let (t, ids) = chain(&[1, 2, 3]);
        assert_eq!(
            t.service_cost(&Service::new(int(0), [ids[0]])).unwrap(),
            int(1)
        );
        assert_eq!(
            t.service_cost(&Service::new(int(0), ids.clone())).unwrap(),
            int(6)
        );
        assert!(matches!(
            t.service_cost(&Service::new(int(0), [])),
            Err(ModelError::MalformedService(ServiceDefect::MissingRoot))
        ));
        assert!(matches!(
            t.service_cost(&Service::new(int(0), [ids[0], ids[2]])),
            Err(ModelError::MalformedService(
                ServiceDefect::MissingParent { .. }
            ))
        ));
    }

    #[test]
    fn feasibility_verdicts() {
        let (t, ids) = chain(&[1, 2, 4]);
        let inst = Instance::new(t, vec![Request::new(0, ids[2], int(0), int(5))]).unwrap();
        let ok = Schedule::new(vec![Service::new(int(5), ids.clone())]);
        assert!(check_feasible(&inst, &ok).is_ok());

        let absent = Schedule::new(vec![Service::new(int(5), [ids[0], ids[1]])]);
        assert_eq!(
            check_feasible(&inst, &absent).violations,
            vec![Violation::Unserved {
                request: 0,
                reason: UnservedReason::NodeNeverIncluded
            }]
        );

        let late = Schedule::new(vec![Service::new(int(6), ids.clone())]);
        assert_eq!(
            check_feasible(&inst, &late).violations,
            vec![Violation::Unserved {
                request: 0,
                reason: UnservedReason::OnlyAfterDeadline
            }]
        );
    }

    #[test]
    fn labeled_trees_are_canonicalized() {
        let t = Tree::from_labeled(&[
            (30, Some(10), int(3)),
            (10, None, int(1)),
            (20, Some(10), int(2)),
            (40, Some(20), int(4)),
        ])
        .unwrap();
        assert_eq!(t.label(NodeId::ROOT), 10);
        assert_eq!(t.label(NodeId(1)), 20);
        assert_eq!(t.label(NodeId(2)), 30);
        assert_eq!(t.label(NodeId(3)), 40);
        assert_eq!(t.parent(NodeId(3)), Some(NodeId(1)));
        assert_eq!(t.by_label(40), Some(NodeId(3)));
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn labeled_tree_errors() {
        assert_eq!(Tree::from_labeled(&[]), Err(ModelError::EmptyTree));
        assert_eq!(
            Tree::from_labeled(&[(1, None, int(1)), (2, None, int(1))]),
            Err(ModelError::RootCount(2))
        );
        assert_eq!(
            Tree::from_labeled(&[
                (1, None, int(1)),
                (2, Some(3), int(1)),
                (3, Some(2), int(1))
            ]),
            Err(ModelError::Unreachable(vec![2, 3]))
        );
        assert!(matches!(
            Tree::from_labeled(&[(1, None, int(0))]),
            Err(ModelError::NonPositiveCost { .. })
        ));
        assert!(matches!(
            Tree::from_labeled(&[(1, None, int(1)), (2, Some(7), int(1))]),
            Err(ModelError::UnknownParent { .. })
        ));
    }

    #[test]
    fn duplicate_deadlines_rejected_or_perturbed() {
        let (t, ids) = chain(&[1, 2]);
        let reqs = vec![
            Request::new(0, ids[1], int(0), int(4)),
            Request::new(1, ids[0], int(1), int(4)),
            Request::new(2, ids[0], int(2), int(6)),
        ];
        assert!(matches!(
            Instance::new(t.clone(), reqs.clone()),
            Err(ModelError::DuplicateDeadline { .. })
        ));
        let inst = Instance::with_perturbation(t, reqs).unwrap();
        // gap 1 between event times, n = 3: eps = 1/8
        assert_eq!(inst.requests[0].deadline, int(4));
        assert_eq!(inst.requests[1].deadline, crate::rational::frac(33, 8));
        assert_eq!(inst.requests[2].deadline, int(6));

        let (t, ids) = chain(&[1]);
        let half = crate::rational::frac(1, 2);
        let reqs = vec![
            Request::new(0, ids[0], int(0), half.clone()),
            Request::new(1, ids[0], int(0), half.clone()),
        ];
        let inst = Instance::with_perturbation(t, reqs).unwrap();
        // gap 1/2, largest denominator 2, n = 2: eps = 1/24
        assert_eq!(inst.requests[1].deadline, crate::rational::frac(13, 24));
    }

    #[test]
    fn request_validation() {
        let (t, ids) = chain(&[1]);
        assert!(matches!(
            Instance::new(t.clone(), vec![Request::new(0, ids[0], int(3), int(2))]),
            Err(ModelError::EmptyWindow { .. })
        ));
        assert!(matches!(
            Instance::new(t.clone(), vec![Request::new(0, NodeId(5), int(0), int(2))]),
            Err(ModelError::UnknownNode(_))
        ));
        assert!(matches!(
            Instance::new(
                t,
                vec![
                    Request::new(0, ids[0], int(0), int(2)),
                    Request::new(0, ids[0], int(0), int(3))
                ]
            ),
            Err(ModelError::DuplicateRequest(0))
        ));
    }
}
