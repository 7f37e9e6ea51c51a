use num_traits::Zero;

use crate::engine::{OnlineAlgorithm, OnlineView};
use crate::model::{NodeSet, Request, Tree};
use crate::rational::Rational;

use super::AlgorithmError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DoubleStats {
    /// Services in which an extension was refused by the budget test.
    pub rejections: usize,
}

/// Path instances only. Starts from the due request's root path and keeps
/// extending towards the earliest-deadline unsatisfied request while the
/// service stays within twice the cost of that initial path.
#[derive(Debug, Clone, Default)]
pub struct Double {
    stats: DoubleStats,
}

impl Double {
    pub fn for_tree(tree: &Tree) -> Result<Double, AlgorithmError> {
        if !tree.is_path() {
            return Err(AlgorithmError::NotAPath);
        }
        Ok(Double::default())
    }

    pub fn stats(&self) -> &DoubleStats {
        &self.stats
    }
}

impl OnlineAlgorithm for Double {
    fn name(&self) -> &'static str {
        "double"
    }

    fn on_due(&mut self, view: &OnlineView<'_>, due: &Request) -> Result<NodeSet, AlgorithmError> {
        let tree = view.tree;
        if !tree.is_path() {
            return Err(AlgorithmError::NotAPath);
        }
        let mut service: NodeSet = tree.path_to_root(due.node)?.into_iter().collect();
        let mut cost = tree.cost_of(&service);
        let cap = &cost * Rational::from_integer(2.into());
        while let Some(next) = view.active.iter().find(|r| !service.contains(&r.node)) {
            let extension = tree.path_outside(tree.root(), next.node, &service)?;
            let extra = tree.cost_of(&extension);
            debug_assert!(!extra.is_zero());
            if &cost + &extra > cap {
                self.stats.rejections += 1;
                break;
            }
            cost += extra;
            service.extend(extension);
        }
        Ok(service)
    }

    fn diagnostics(&self) -> super::Diagnostics {
        super::Diagnostics::Double(self.stats.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, TreeBuilder};
    use crate::rational::int;

    fn path(costs: [i64; 3]) -> (Tree, [NodeId; 3]) {
        let mut b = TreeBuilder::new(int(costs[0]));
        let a = b.child(NodeId::ROOT, int(costs[1]));
        let c = b.child(a, int(costs[2]));
        (b.build().unwrap(), [NodeId::ROOT, a, c])
    }

    fn serve(tree: &Tree, ids: [NodeId; 3], with_gamma: bool) -> (NodeSet, usize) {
        let now = int(1);
        let rho = Request::new(0, ids[1], int(0), int(1));
        let gamma = Request::new(1, ids[2], int(0), int(2));
        let mut active = vec![&rho];
        if with_gamma {
            active.push(&gamma);
        }
        let view = OnlineView {
            tree,
            now: &now,
            active,
        };
        let mut alg = Double::for_tree(tree).unwrap();
        let s = alg.on_due(&view, &rho).unwrap();
        (s, alg.stats().rejections)
    }

    #[test]
    fn rejects_strictly_over_budget() {
        // P_rho = {r, a} costs 2; adding b gives 5 > 4
        let (tree, ids) = path([1, 1, 3]);
        let (s, rej) = serve(&tree, ids, true);
        assert_eq!(s, [ids[0], ids[1]].into());
        assert_eq!(rej, 1);
    }

    #[test]
    fn accepts_exactly_double() {
        // adding b gives 4 = 2 * 2, accepted
        let (tree, ids) = path([1, 1, 2]);
        let (s, rej) = serve(&tree, ids, true);
        assert_eq!(s, ids.into());
        assert_eq!(rej, 0);
    }

    #[test]
    fn alone_transmits_root_path() {
        let (tree, ids) = path([1, 1, 2]);
        let (s, _) = serve(&tree, ids, false);
        assert_eq!(s, [ids[0], ids[1]].into());
    }

    #[test]
    fn refuses_non_paths() {
        let mut b = TreeBuilder::new(int(1));
        b.child(NodeId::ROOT, int(1));
        b.child(NodeId::ROOT, int(1));
        assert!(matches!(
            Double::for_tree(&b.build().unwrap()),
            Err(AlgorithmError::NotAPath)
        ));
    }
}
