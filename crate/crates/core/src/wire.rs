//! Canonical JSON file formats.
//!
//! Instance files:
//!
//! ```json
//! {"version":1,
//!  "nodes":[{"id":0,"parent":null,"cost":"4"}, ...],
//!  "requests":[{"id":0,"node":1,"arrival":"0","deadline":"7/2"}, ...]}
//! ```
//!
//! Schedules: `{"services":[{"time":"1","nodes":[0,1]}], "total_cost":"5"}`.
//! Node ids in every output are the labels from the instance file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Instance, ModelError, NodeSet, Request, Schedule, Service, Tree};
use crate::rational::{format_rational, parse_rational, ParseRationalError, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("field {field}: {source}")]
    Rational {
        field: String,
        source: ParseRationalError,
    },
    #[error("unknown node id {0}")]
    UnknownNode(i64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: i64,
    pub parent: Option<i64>,
    pub cost: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEntry {
    pub id: i64,
    pub node: i64,
    pub arrival: String,
    pub deadline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub nodes: Vec<NodeEntry>,
    pub requests: Vec<RequestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEntry {
    pub time: String,
    pub nodes: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub services: Vec<ServiceEntry>,
    pub total_cost: String,
}

fn rational_field(field: impl Into<String>, s: &str) -> Result<Rational, WireError> {
    parse_rational(s).map_err(|source| WireError::Rational {
        field: field.into(),
        source,
    })
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> InstanceFile {
        let tree = &instance.tree;
        let nodes = tree
            .nodes()
            .map(|v| NodeEntry {
                id: tree.label(v),
                parent: tree.parent(v).map(|p| tree.label(p)),
                cost: format_rational(tree.cost(v)),
            })
            .collect();
        let requests = instance
            .requests
            .iter()
            .map(|r| RequestEntry {
                id: r.id,
                node: tree.label(r.node),
                arrival: format_rational(&r.arrival),
                deadline: format_rational(&r.deadline),
            })
            .collect();
        InstanceFile {
            version: FORMAT_VERSION,
            nodes,
            requests,
        }
    }

    pub fn into_instance(self, perturb: bool) -> Result<Instance, WireError> {
        if self.version != FORMAT_VERSION {
            return Err(WireError::Version(self.version));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let cost = rational_field(format!("nodes[{}].cost", n.id), &n.cost)?;
                Ok((n.id, n.parent, cost))
            })
            .collect::<Result<Vec<_>, WireError>>()?;
        let tree = Tree::from_labeled(&nodes)?;
        let requests = self
            .requests
            .iter()
            .map(|r| {
                let node = tree
                    .by_label(r.node)
                    .ok_or(WireError::UnknownNode(r.node))?;
                let arrival = rational_field(format!("requests[{}].arrival", r.id), &r.arrival)?;
                let deadline = rational_field(format!("requests[{}].deadline", r.id), &r.deadline)?;
                Ok(Request::new(r.id, node, arrival, deadline))
            })
            .collect::<Result<Vec<_>, WireError>>()?;
        let inst = if perturb {
            Instance::with_perturbation(tree, requests)?
        } else {
            Instance::new(tree, requests)?
        };
        Ok(inst)
    }
}

pub fn instance_from_json(text: &str, perturb: bool) -> Result<Instance, WireError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.into_instance(perturb)
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(instance)).expect("serializable")
}

/// Stable content hash of the canonical instance encoding.
pub fn fingerprint(instance: &Instance) -> String {
    let compact =
        serde_json::to_string(&InstanceFile::from_instance(instance)).expect("serializable");
    let digest = Sha256::digest(compact.as_bytes());
    hex::encode(&digest[..8])
}

pub fn labels_of(tree: &Tree, nodes: &NodeSet) -> Vec<i64> {
    let mut labels: Vec<i64> = nodes.iter().map(|&v| tree.label(v)).collect();
    labels.sort_unstable();
    labels
}

impl ServiceEntry {
    pub fn from_service(tree: &Tree, service: &Service) -> ServiceEntry {
        ServiceEntry {
            time: format_rational(&service.time),
            nodes: labels_of(tree, &service.nodes),
        }
    }

    pub fn to_service(&self, tree: &Tree) -> Result<Service, WireError> {
        let time = rational_field("services[].time", &self.time)?;
        let nodes = self
            .nodes
            .iter()
            .map(|&l| tree.by_label(l).ok_or(WireError::UnknownNode(l)))
            .collect::<Result<NodeSet, _>>()?;
        Ok(Service { time, nodes })
    }
}

impl ScheduleFile {
    pub fn from_schedule(tree: &Tree, schedule: &Schedule) -> ScheduleFile {
        ScheduleFile {
            services: schedule
                .services
                .iter()
                .map(|s| ServiceEntry::from_service(tree, s))
                .collect(),
            total_cost: format_rational(&schedule.cost(tree)),
        }
    }

    pub fn to_schedule(&self, tree: &Tree) -> Result<Schedule, WireError> {
        let services = self
            .services
            .iter()
            .map(|s| s.to_service(tree))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Schedule::new(services))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeId;
    use crate::rational::{frac, int};

    const SAMPLE: &str = r#"{"version":1,
        "nodes":[{"id":7,"parent":null,"cost":"4"},{"id":3,"parent":7,"cost":"1/2"}],
        "requests":[{"id":5,"node":3,"arrival":"0","deadline":"7/2"},
                    {"id":1,"node":7,"arrival":"1","deadline":"2"}]}"#;

    #[test]
    fn loads_and_maps_ids() {
        let inst = instance_from_json(SAMPLE, false).unwrap();
        assert_eq!(inst.tree.label(NodeId::ROOT), 7);
        assert_eq!(inst.tree.cost(NodeId(1)), &frac(1, 2));
        assert_eq!(inst.requests[0].id, 1);
        assert_eq!(inst.requests[1].node, NodeId(1));
        assert_eq!(inst.requests[1].deadline, frac(7, 2));
    }

    #[test]
    fn reencodes_identically() {
        let inst = instance_from_json(SAMPLE, false).unwrap();
        let again = instance_from_json(&instance_to_json(&inst), false).unwrap();
        assert_eq!(inst, again);
        assert_eq!(fingerprint(&inst), fingerprint(&again));
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_version = SAMPLE.replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            instance_from_json(&bad_version, false),
            Err(WireError::Version(2))
        ));
        let bad_cost = SAMPLE.replace("\"1/2\"", "\"0.5\"");
        assert!(matches!(
            instance_from_json(&bad_cost, false),
            Err(WireError::Rational { .. })
        ));
        let bad_node = SAMPLE.replace("\"node\":3", "\"node\":99");
        assert!(matches!(
            instance_from_json(&bad_node, false),
            Err(WireError::UnknownNode(99))
        ));
        assert!(matches!(
            instance_from_json("{}", false),
            Err(WireError::Json(_))
        ));
    }

    #[test]
    fn schedule_roundtrip_uses_labels() {
        let inst = instance_from_json(SAMPLE, false).unwrap();
        let sched = Schedule::new(vec![Service::new(int(2), [NodeId(0), NodeId(1)])]);
        let file = ScheduleFile::from_schedule(&inst.tree, &sched);
        assert_eq!(file.services[0].nodes, vec![3, 7]);
        assert_eq!(file.total_cost, "9/2");
        assert_eq!(file.to_schedule(&inst.tree).unwrap(), sched);
    }
}
