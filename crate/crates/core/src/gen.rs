//! Seeded instance generators.
//!
//! Every generator is a pure function of its [`GenSpec`]. Deadlines are made
//! distinct by construction: integer candidates are drawn, sorted, and the
//! `i`-th smallest is offset by `i / (k + 1)`, which keeps the order and
//! separates ties. Generated instances therefore never need perturbation.
//!
//! Specs have a compact text form, `kind:key=value:...`, for example
//! `increasing:seed=1..100:n=10:r=8:depth=4`. A seed range expands into one
//! spec per seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Instance, ModelError, NodeId, Request, Tree, TreeBuilder};
use crate::rational::{format_rational, frac, int, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse generator spec '{spec}': {reason}")]
    Parse { spec: String, reason: String },
    #[error("generated instance violates the {kind} constraint: {detail}")]
    Constraint { kind: GenKind, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenKind {
    Random,
    Path,
    Increasing,
    LIncreasing,
    GeometricPath,
}

impl GenKind {
    pub const ALL: [GenKind; 5] = [
        GenKind::Random,
        GenKind::Path,
        GenKind::Increasing,
        GenKind::LIncreasing,
        GenKind::GeometricPath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenKind::Random => "random",
            GenKind::Path => "path",
            GenKind::Increasing => "increasing",
            GenKind::LIncreasing => "l_increasing",
            GenKind::GeometricPath => "geometric_path",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenKind {
    type Err = GenError;

    fn from_str(s: &str) -> Result<GenKind, GenError> {
        GenKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GenError::InvalidSpec(format!("unknown kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub seed: u64,
    pub nodes: usize,
    pub requests: usize,
    /// Maximum number of nodes on a root-to-leaf path.
    pub depth_cap: Option<usize>,
    pub cost_min: i64,
    pub cost_max: i64,
    /// Child/parent cost factor for `l_increasing`.
    pub l_factor: Rational,
    /// Deadlines are drawn from `1..=horizon`.
    pub horizon: i64,
}

impl GenSpec {
    pub fn new(kind: GenKind, seed: u64) -> GenSpec {
        GenSpec {
            kind,
            seed,
            nodes: 8,
            requests: 6,
            depth_cap: None,
            cost_min: 1,
            cost_max: 10,
            l_factor: int(2),
            horizon: 10,
        }
    }

    pub fn nodes(mut self, n: usize) -> GenSpec {
        self.nodes = n;
        self
    }

    pub fn requests(mut self, r: usize) -> GenSpec {
        self.requests = r;
        self
    }

    pub fn depth_cap(mut self, d: usize) -> GenSpec {
        self.depth_cap = Some(d);
        self
    }

    pub fn l_factor(mut self, l: Rational) -> GenSpec {
        self.l_factor = l;
        self
    }

    pub fn horizon(mut self, h: i64) -> GenSpec {
        self.horizon = h;
        self
    }

    /// A spec from a seed alone: kind, sizes and horizon are drawn from the
    /// seed, with at most 15 nodes and 10 requests.
    pub fn mixed(seed: u64) -> GenSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_7865_6400_0000);
        let kind = GenKind::ALL[rng.gen_range(0..GenKind::ALL.len())];
        let nodes = rng.gen_range(1..=15);
        let mut spec = GenSpec::new(kind, seed)
            .nodes(nodes)
            .requests(rng.gen_range(0..=10))
            .horizon(rng.gen_range(2..=12));
        if kind == GenKind::LIncreasing {
            spec.l_factor = int(rng.gen_range(2..=3));
        }
        if matches!(
            kind,
            GenKind::Random | GenKind::Increasing | GenKind::LIncreasing
        ) && nodes > 1
            && rng.gen_bool(0.5)
        {
            spec.depth_cap = Some(rng.gen_range(2..=nodes));
        }
        spec
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        if self.nodes == 0 {
            return bad("a tree needs at least one node".into());
        }
        if let Some(d) = self.depth_cap {
            if d == 0 {
                return bad("depth cap must be at least 1".into());
            }
            if d > self.nodes {
                return bad(format!("depth cap {d} exceeds node count {}", self.nodes));
            }
            if self.is_path() && d < self.nodes {
                return bad(format!(
                    "a path of {} nodes has depth {}, above cap {d}",
                    self.nodes, self.nodes
                ));
            }
        }
        if self.nodes > 1 && self.depth_cap == Some(1) {
            return bad("depth cap 1 admits only the root".into());
        }
        if self.cost_min < 1 || self.cost_min > self.cost_max {
            return bad(format!(
                "cost range {}..{} is empty or non-positive",
                self.cost_min, self.cost_max
            ));
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.kind == GenKind::LIncreasing && self.l_factor <= int(1) {
            return bad(format!("L factor must exceed 1, got {}", self.l_factor));
        }
        Ok(())
    }

    fn is_path(&self) -> bool {
        matches!(self.kind, GenKind::Path | GenKind::GeometricPath)
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:seed={}:n={}:r={}",
            self.kind, self.seed, self.nodes, self.requests
        )?;
        if let Some(d) = self.depth_cap {
            write!(f, ":depth={d}")?;
        }
        write!(f, ":cmin={}:cmax={}", self.cost_min, self.cost_max)?;
        if self.kind == GenKind::LIncreasing {
            write!(f, ":L={}", format_rational(&self.l_factor))?;
        }
        write!(f, ":horizon={}", self.horizon)
    }
}

/// Parses `kind:key=value:...`. `seed` accepts `a..b` (inclusive) and
/// expands into one spec per seed. The kind `mixed` draws each spec from
/// its seed with [`GenSpec::mixed`] and accepts no other keys.
pub fn parse_specs(text: &str) -> Result<Vec<GenSpec>, GenError> {
    let err = |reason: String| GenError::Parse {
        spec: text.to_string(),
        reason,
    };
    let mut parts = text.trim().split(':');
    let kind_name = parts.next().unwrap_or_default();
    let mixed = kind_name == "mixed";
    let mut spec = if mixed {
        GenSpec::new(GenKind::Random, 1)
    } else {
        GenSpec::new(
            kind_name
                .parse()
                .map_err(|e: GenError| err(e.to_string()))?,
            1,
        )
    };
    let mut seeds = (1u64, 1u64);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got '{part}'")))?;
        let num = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| err(format!("{key}: '{v}' is not an integer")))
        };
        let size = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(format!("{key}: '{v}' is not a count")))
        };
        if mixed && key != "seed" {
            return Err(err(format!("mixed specs take only a seed, got '{key}'")));
        }
        match key {
            "seed" => {
                let parse = |v: &str| {
                    v.parse::<u64>()
                        .map_err(|_| err(format!("seed: '{v}' is not a seed")))
                };
                seeds = match value.split_once("..") {
                    Some((a, b)) => (parse(a)?, parse(b)?),
                    None => {
                        let s = parse(value)?;
                        (s, s)
                    }
                };
                if seeds.0 > seeds.1 {
                    return Err(err(format!("empty seed range {value}")));
                }
            }
            "n" | "nodes" => spec.nodes = size(value)?,
            "r" | "requests" => spec.requests = size(value)?,
            "depth" => spec.depth_cap = Some(size(value)?),
            "cmin" => spec.cost_min = num(value)?,
            "cmax" => spec.cost_max = num(value)?,
            "horizon" => spec.horizon = num(value)?,
            "L" => spec.l_factor = parse_rational(value).map_err(|e| err(format!("L: {e}")))?,
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
    }
    let specs: Vec<GenSpec> = (seeds.0..=seeds.1)
        .map(|seed| {
            if mixed {
                GenSpec::mixed(seed)
            } else {
                GenSpec {
                    seed,
                    ..spec.clone()
                }
            }
        })
        .collect();
    for s in &specs {
        s.validate().map_err(|e| err(e.to_string()))?;
    }
    Ok(specs)
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (tree, requests) = match spec.kind {
        GenKind::GeometricPath => geometric_path(spec, &mut rng)?,
        _ => {
            let tree = random_tree(spec, &mut rng)?;
            let requests = random_requests(spec, &tree, &mut rng);
            (tree, requests)
        }
    };
    verify_kind(spec, &tree)?;
    Ok(Instance::new(tree, requests)?)
}

fn draw_cost(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.gen_range(1..=3);
    frac(
        rng.gen_range(spec.cost_min * den..=spec.cost_max * den),
        den,
    )
}

fn random_tree(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Tree, GenError> {
    let cap = if spec.kind == GenKind::Path {
        spec.nodes
    } else {
        spec.depth_cap.unwrap_or(spec.nodes)
    };
    let root_cost = draw_cost(spec, rng);
    let mut builder = TreeBuilder::new(root_cost.clone());
    let mut level = vec![1usize];
    let mut costs = vec![root_cost];
    for i in 1..spec.nodes {
        let parent = if spec.kind == GenKind::Path {
            i - 1
        } else {
            let open: Vec<usize> = (0..i).filter(|&p| level[p] < cap).collect();
            *open
                .choose(rng)
                .expect("depth cap above 1 keeps the root open")
        };
        let pc = costs[parent].clone();
        let cost = match spec.kind {
            GenKind::Increasing => pc + draw_cost(spec, rng),
            GenKind::LIncreasing => &spec.l_factor * pc + draw_cost(spec, rng) - int(spec.cost_min),
            _ => draw_cost(spec, rng),
        };
        builder.child(NodeId(parent), cost.clone());
        level.push(level[parent] + 1);
        costs.push(cost);
    }
    canonical(builder.build()?)
}

/// Renumbers a built tree breadth-first, matching trees loaded from files.
fn canonical(tree: Tree) -> Result<Tree, GenError> {
    let nodes: Vec<_> = tree
        .nodes()
        .map(|v| {
            (
                tree.label(v),
                tree.parent(v).map(|p| tree.label(p)),
                tree.cost(v).clone(),
            )
        })
        .collect();
    Ok(Tree::from_labeled(&nodes)?)
}

/// Distinct deadlines in `(1, horizon + 1)`, returned in drawing order.
fn spaced_deadlines(k: usize, horizon: i64, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let candidates: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=horizon)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| (candidates[i], i));
    let mut deadlines = vec![int(0); k];
    for (rank, &i) in order.iter().enumerate() {
        deadlines[i] = int(candidates[i]) + frac(rank as i64, k as i64 + 1);
    }
    deadlines
}

fn random_requests(spec: &GenSpec, tree: &Tree, rng: &mut ChaCha8Rng) -> Vec<Request> {
    let deadlines = spaced_deadlines(spec.requests, spec.horizon, rng);
    deadlines
        .into_iter()
        .enumerate()
        .map(|(id, deadline)| {
            let node = NodeId(rng.gen_range(0..tree.len()));
            // integer arrival at or before the deadline
            let latest = deadline.floor().to_integer();
            let arrival = int(rng.gen_range(0..=latest.try_into().unwrap_or(0i64)));
            Request::new(id as i64, node, arrival, deadline)
        })
        .collect()
}

/// Each root prefix costs more than twice the previous one, and requests
/// are nested down the path with deadlines increasing with depth, so
/// extending to the next request always exceeds Double's budget.
fn geometric_path(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<(Tree, Vec<Request>), GenError> {
    let mut prefix = int(rng.gen_range(1..=3));
    let mut builder = TreeBuilder::new(prefix.clone());
    for i in 1..spec.nodes {
        let cost = &prefix + int(rng.gen_range(1..=3));
        prefix += &cost;
        builder.child(NodeId(i - 1), cost);
    }
    let tree = builder.build()?;
    let k = spec.requests;
    let requests = (0..k)
        .map(|j| {
            let node = NodeId(j * spec.nodes / k.max(1));
            Request::new(j as i64, node, int(0), int(j as i64 + 1))
        })
        .collect();
    Ok((tree, requests))
}

fn verify_kind(spec: &GenSpec, tree: &Tree) -> Result<(), GenError> {
    let fail = |detail: String| {
        Err(GenError::Constraint {
            kind: spec.kind,
            detail,
        })
    };
    if spec.is_path() && !tree.is_path() {
        return fail("some node has more than one child".into());
    }
    if let Some(cap) = spec.depth_cap {
        if tree.depth() > cap {
            return fail(format!("depth {} exceeds cap {cap}", tree.depth()));
        }
    }
    for v in tree.nodes() {
        let Some(p) = tree.parent(v) else { continue };
        let (cv, cp) = (tree.cost(v), tree.cost(p));
        let ok = match spec.kind {
            GenKind::Increasing => cv > cp,
            GenKind::LIncreasing => cv >= &(&spec.l_factor * cp),
            GenKind::GeometricPath => {
                let prefix = tree.cost_of(&tree.path_to_root(p)?);
                cv > &prefix
            }
            _ => true,
        };
        if !ok {
            return fail(format!(
                "node {} costs {cv} under parent cost {cp}",
                tree.label(v)
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = GenSpec::new(GenKind::Path, 7).nodes(4);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GenSpec::new(GenKind::Path, 8).nodes(4);
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn l_increasing_factor_holds() {
        for seed in 0..50 {
            let inst = generate(&GenSpec::new(GenKind::LIncreasing, seed).nodes(9)).unwrap();
            let t = &inst.tree;
            for v in t.nodes().skip(1) {
                assert!(t.cost(v) >= &(int(2) * t.cost(t.parent(v).unwrap())));
            }
        }
    }

    #[test]
    fn depth_cap_respected() {
        for seed in 0..50 {
            let inst =
                generate(&GenSpec::new(GenKind::Random, seed).nodes(12).depth_cap(3)).unwrap();
            assert!(inst.depth() <= 3);
        }
    }

    #[test]
    fn deadlines_distinct_with_many_requests() {
        let spec = GenSpec::new(GenKind::Random, 3)
            .nodes(5)
            .requests(40)
            .horizon(3);
        let inst = generate(&spec).unwrap();
        let mut d = inst.deadlines();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 40);
        assert!(inst.requests.iter().all(|r| r.arrival <= r.deadline));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&GenSpec::new(GenKind::Random, 1).nodes(3).depth_cap(4)).is_err());
        assert!(generate(&GenSpec::new(GenKind::Random, 1).nodes(0)).is_err());
        assert!(generate(&GenSpec::new(GenKind::LIncreasing, 1).l_factor(int(1))).is_err());
        assert!(generate(&GenSpec::new(GenKind::Path, 1).nodes(5).depth_cap(3)).is_err());
    }

    #[test]
    fn parses_ranges() {
        let specs = parse_specs("increasing:seed=1..100:n=10").unwrap();
        assert_eq!(specs.len(), 100);
        assert_eq!(specs[99].seed, 100);
        assert_eq!(specs[0].nodes, 10);
        let specs = parse_specs("l_increasing:seed=4:L=3:depth=3").unwrap();
        assert_eq!(specs[0].l_factor, int(3));
        assert_eq!(parse_specs(&specs[0].to_string()).unwrap(), specs);
        assert!(parse_specs("tree:seed=1").is_err());
        assert!(parse_specs("path:seed=5..2").is_err());
        assert!(parse_specs("path:colour=red").is_err());
        assert_eq!(parse_specs("mixed:seed=1..20").unwrap().len(), 20);
    }

    #[test]
    fn mixed_specs_stay_small() {
        for seed in 1..=300 {
            let spec = GenSpec::mixed(seed);
            assert!(spec.nodes <= 15 && spec.requests <= 10);
            generate(&spec).unwrap();
        }
    }

    #[test]
    fn geometric_path_forces_double_rejections() {
        use crate::algos::{Diagnostics, Double};
        use crate::engine::run;
        for seed in 0..20 {
            let inst = generate(
                &GenSpec::new(GenKind::GeometricPath, seed)
                    .nodes(6)
                    .requests(6),
            )
            .unwrap();
            let trace = run(&inst, &mut Double::for_tree(&inst.tree).unwrap()).unwrap();
            let Diagnostics::Double(stats) = trace.diagnostics else {
                panic!("double reports its stats")
            };
            assert!(stats.rejections >= 1);
        }
    }
}
