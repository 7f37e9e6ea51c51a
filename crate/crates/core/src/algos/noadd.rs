use crate::engine::{OnlineAlgorithm, OnlineView};
use crate::model::{NodeSet, Request};

use super::AlgorithmError;

/// Transmits exactly the root path of the due request.
#[derive(Debug, Clone, Copy, Default)]
pub struct Noadd;

impl OnlineAlgorithm for Noadd {
    fn name(&self) -> &'static str {
        "noadd"
    }

    fn on_due(&mut self, view: &OnlineView<'_>, due: &Request) -> Result<NodeSet, AlgorithmError> {
        Ok(view.tree.path_to_root(due.node)?.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, TreeBuilder};
    use crate::rational::int;

    #[test]
    fn returns_root_path_only() {
        let mut b = TreeBuilder::new(int(1));
        let a = b.child(NodeId::ROOT, int(2));
        let leaf = b.child(a, int(4));
        let x = b.child(NodeId::ROOT, int(3));
        let tree = b.build().unwrap();
        let now = int(5);
        let due = Request::new(0, leaf, int(0), int(5));
        let other = Request::new(1, x, int(0), int(6));
        let view = OnlineView {
            tree: &tree,
            now: &now,
            active: vec![&due, &other],
        };
        assert_eq!(
            Noadd.on_due(&view, &due).unwrap(),
            [NodeId::ROOT, a, leaf].into()
        );
        let at_root = Request::new(2, NodeId::ROOT, int(0), int(5));
        assert_eq!(
            Noadd.on_due(&view, &at_root).unwrap(),
            [NodeId::ROOT].into()
        );
        let at_x = Request::new(3, x, int(0), int(5));
        assert_eq!(
            Noadd.on_due(&view, &at_x).unwrap(),
            [NodeId::ROOT, x].into()
        );
    }
}
