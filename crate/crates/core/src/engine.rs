//! Deadline-triggered online simulation.
//!
//! The engine owns satisfaction bookkeeping. At each step it jumps to the
//! earliest deadline among unsatisfied requests, hands the algorithm a fresh
//! [`OnlineView`] of the requests that have arrived and are still pending,
//! validates the returned node set and marks everything it covers.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algos::{AlgorithmError, Diagnostics};
use crate::model::{Instance, NodeId, NodeSet, Request, Schedule, Service, ServiceDefect, Tree};
use crate::oracle::{self, OptResult, OracleError};
use crate::rational::{format_rational, Rational};
use crate::wire::{self, ServiceEntry};

/// What an online algorithm sees when a request becomes due.
#[derive(Debug, Clone)]
pub struct OnlineView<'a> {
    pub tree: &'a Tree,
    pub now: &'a Rational,
    /// Arrived, unsatisfied requests in increasing deadline order.
    pub active: Vec<&'a Request>,
}

impl<'a> OnlineView<'a> {
    /// Active requests issued inside the subtree of `v`, by deadline.
    pub fn active_in_subtree(&self, v: NodeId) -> impl Iterator<Item = &'a Request> + '_ {
        self.active
            .iter()
            .copied()
            .filter(move |r| self.tree.is_descendant_or_self(r.node, v))
    }
}

pub trait OnlineAlgorithm {
    fn name(&self) -> &'static str;

    /// Chooses the service transmitted at `view.now`; `due` is the request
    /// whose deadline is `now`.
    fn on_due(&mut self, view: &OnlineView<'_>, due: &Request) -> Result<NodeSet, AlgorithmError>;

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractBreach {
    Malformed(ServiceDefect),
    MissingDueNode { request: i64, node: NodeId },
}

impl fmt::Display for ContractBreach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractBreach::Malformed(d) => write!(f, "subtree property violated ({d})"),
            ContractBreach::MissingDueNode { request, node } => {
                write!(f, "due request {request} at node {node} not covered")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{algorithm} broke the service contract in service {index} at t={time}: {breach}")]
    ContractViolation {
        algorithm: String,
        index: usize,
        time: Rational,
        breach: ContractBreach,
    },
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceStep {
    pub trigger: i64,
    pub cost: Rational,
    /// Request ids satisfied by this service, ascending.
    pub satisfied: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub fingerprint: String,
    pub schedule: Schedule,
    pub steps: Vec<ServiceStep>,
    pub diagnostics: Diagnostics,
}

impl RunTrace {
    pub fn cost(&self) -> Rational {
        self.steps
            .iter()
            .fold(Rational::zero(), |acc, s| acc + &s.cost)
    }
}

pub fn run(
    instance: &Instance,
    algorithm: &mut dyn OnlineAlgorithm,
) -> Result<RunTrace, EngineError> {
    let tree = &instance.tree;
    let requests = &instance.requests;
    let mut satisfied = vec![false; requests.len()];
    let mut services = Vec::new();
    let mut steps = Vec::new();

    while let Some(due_idx) = (0..requests.len())
        .filter(|&i| !satisfied[i])
        .min_by(|&a, &b| requests[a].deadline.cmp(&requests[b].deadline))
    {
        let due = &requests[due_idx];
        let now = &due.deadline;
        let mut active: Vec<(usize, &Request)> = (0..requests.len())
            .filter(|&i| !satisfied[i] && &requests[i].arrival <= now)
            .map(|i| (i, &requests[i]))
            .collect();
        active.sort_by(|a, b| a.1.deadline.cmp(&b.1.deadline));
        let view = OnlineView {
            tree,
            now,
            active: active.iter().map(|&(_, r)| r).collect(),
        };
        let nodes = algorithm.on_due(&view, due)?;

        let breach = |breach| EngineError::ContractViolation {
            algorithm: algorithm.name().to_string(),
            index: services.len(),
            time: now.clone(),
            breach,
        };
        tree.validate_service_nodes(&nodes)
            .map_err(|d| breach(ContractBreach::Malformed(d)))?;
        if !nodes.contains(&due.node) {
            return Err(breach(ContractBreach::MissingDueNode {
                request: due.id,
                node: due.node,
            }));
        }

        let mut covered = Vec::new();
        for &(i, r) in &active {
            if nodes.contains(&r.node) {
                satisfied[i] = true;
                covered.push(r.id);
            }
        }
        covered.sort_unstable();
        steps.push(ServiceStep {
            trigger: due.id,
            cost: tree.cost_of(&nodes),
            satisfied: covered,
        });
        services.push(Service {
            time: now.clone(),
            nodes,
        });
    }

    Ok(RunTrace {
        algorithm: algorithm.name().to_string(),
        fingerprint: wire::fingerprint(instance),
        schedule: Schedule::new(services),
        steps,
        diagnostics: algorithm.diagnostics(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub alg_cost: Rational,
    pub opt_cost: Rational,
    pub ratio: Rational,
}

#[derive(Debug, Error)]
pub enum RatioError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("instance has no requests; the ratio is undefined")]
    NoRequests,
}

/// Runs `algorithm` and the brute-force optimum and divides their costs.
pub fn measure_ratio(
    instance: &Instance,
    algorithm: &mut dyn OnlineAlgorithm,
    max_oracle_requests: usize,
) -> Result<RatioReport, RatioError> {
    let opt = oracle::brute_force_opt(instance, max_oracle_requests)?;
    let trace = run(instance, algorithm)?;
    ratio_against(&trace, &opt)
}

pub fn ratio_against(trace: &RunTrace, opt: &OptResult) -> Result<RatioReport, RatioError> {
    if opt.cost.is_zero() {
        return Err(RatioError::NoRequests);
    }
    let alg_cost = trace.cost();
    Ok(RatioReport {
        ratio: &alg_cost / &opt.cost,
        alg_cost,
        opt_cost: opt.cost.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceServiceEntry {
    #[serde(flatten)]
    pub service: ServiceEntry,
    pub trigger: i64,
    pub cost: String,
    pub satisfied: Vec<i64>,
}

/// JSON shape of a [`RunTrace`]; a superset of the schedule format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub algorithm: String,
    pub instance: String,
    pub services: Vec<TraceServiceEntry>,
    pub total_cost: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

impl TraceFile {
    pub fn from_trace(tree: &Tree, trace: &RunTrace, with_diagnostics: bool) -> TraceFile {
        let services = trace
            .schedule
            .services
            .iter()
            .zip(&trace.steps)
            .map(|(s, step)| TraceServiceEntry {
                service: ServiceEntry::from_service(tree, s),
                trigger: step.trigger,
                cost: format_rational(&step.cost),
                satisfied: step.satisfied.clone(),
            })
            .collect();
        TraceFile {
            algorithm: trace.algorithm.clone(),
            instance: trace.fingerprint.clone(),
            services,
            total_cost: format_rational(&trace.cost()),
            diagnostics: with_diagnostics.then(|| trace.diagnostics.to_json(tree)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::{Noadd, Waterfall};
    use crate::model::{check_feasible, TreeBuilder};
    use crate::rational::int;

    fn chain_ra() -> Instance {
        let mut b = TreeBuilder::new(int(1));
        let a = b.child(NodeId::ROOT, int(2));
        let tree = b.build().unwrap();
        Instance::new(
            tree,
            vec![
                Request::new(0, a, int(0), int(1)),
                Request::new(1, a, int(2), int(5)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_root_request_is_forced() {
        let tree = TreeBuilder::new(int(1)).build().unwrap();
        let inst =
            Instance::new(tree, vec![Request::new(0, NodeId::ROOT, int(0), int(3))]).unwrap();
        for mut alg in [
            Box::new(Noadd) as Box<dyn OnlineAlgorithm>,
            Box::new(Waterfall::new(&inst.tree)),
        ] {
            let trace = run(&inst, alg.as_mut()).unwrap();
            assert_eq!(
                trace.schedule.services,
                vec![Service::new(int(3), [NodeId::ROOT])]
            );
            assert_eq!(trace.cost(), int(1));
        }
    }

    #[test]
    fn later_arrival_cannot_be_aggregated() {
        let inst = chain_ra();
        let trace = run(&inst, &mut Noadd).unwrap();
        let times: Vec<_> = trace
            .schedule
            .services
            .iter()
            .map(|s| s.time.clone())
            .collect();
        assert_eq!(times, vec![int(1), int(5)]);
        assert_eq!(trace.cost(), int(6));
        assert_eq!(trace.steps[0].satisfied, vec![0]);
        assert!(check_feasible(&inst, &trace.schedule).is_ok());
    }

    #[test]
    fn noadd_ratio_on_disjoint_windows() {
        let inst = chain_ra();
        let rep = measure_ratio(&inst, &mut Noadd, 10).unwrap();
        assert_eq!(rep.ratio, int(1));
        assert_eq!(rep.opt_cost, int(6));
    }

    #[test]
    fn oracle_bound_refusal() {
        let inst = chain_ra();
        assert!(matches!(
            measure_ratio(&inst, &mut Noadd, 1),
            Err(RatioError::Oracle(OracleError::TooLarge { .. }))
        ));
    }

    struct Lazy;

    impl OnlineAlgorithm for Lazy {
        fn name(&self) -> &'static str {
            "lazy"
        }

        fn on_due(&mut self, _: &OnlineView<'_>, _: &Request) -> Result<NodeSet, AlgorithmError> {
            Ok([NodeId::ROOT].into())
        }
    }

    struct Rootless;

    impl OnlineAlgorithm for Rootless {
        fn name(&self) -> &'static str {
            "rootless"
        }

        fn on_due(&mut self, _: &OnlineView<'_>, due: &Request) -> Result<NodeSet, AlgorithmError> {
            Ok([due.node].into())
        }
    }

    #[test]
    fn contract_violations_are_fatal() {
        let inst = chain_ra();
        match run(&inst, &mut Lazy) {
            Err(EngineError::ContractViolation {
                index: 0, breach, ..
            }) => {
                assert_eq!(
                    breach,
                    ContractBreach::MissingDueNode {
                        request: 0,
                        node: NodeId(1)
                    }
                )
            }
            other => panic!("unexpected {other:?}"),
        }
        match run(&inst, &mut Rootless) {
            Err(EngineError::ContractViolation { breach, .. }) => {
                assert_eq!(
                    breach,
                    ContractBreach::Malformed(ServiceDefect::MissingRoot)
                )
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn view_excludes_future_arrivals() {
        struct Probe(Vec<Vec<i64>>);
        impl OnlineAlgorithm for Probe {
            fn name(&self) -> &'static str {
                "probe"
            }
            fn on_due(
                &mut self,
                view: &OnlineView<'_>,
                due: &Request,
            ) -> Result<NodeSet, AlgorithmError> {
                assert!(view
                    .active
                    .iter()
                    .all(|r| &r.arrival <= view.now && &r.deadline >= view.now));
                assert_eq!(view.active[0].id, due.id);
                self.0.push(view.active.iter().map(|r| r.id).collect());
                Ok(view
                    .tree
                    .path_to_root(due.node)
                    .unwrap()
                    .into_iter()
                    .collect())
            }
        }
        let inst = chain_ra();
        let mut probe = Probe(Vec::new());
        run(&inst, &mut probe).unwrap();
        assert_eq!(probe.0, vec![vec![0], vec![1]]);
    }

    #[test]
    fn empty_instance_runs_to_empty_schedule() {
        let tree = TreeBuilder::new(int(1)).build().unwrap();
        let inst = Instance::new(tree, vec![]).unwrap();
        let trace = run(&inst, &mut Noadd).unwrap();
        assert!(trace.schedule.is_empty());
    }
}
