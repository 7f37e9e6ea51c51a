//! Exact competitive-ratio bounds for each algorithm and tree class.

use crate::algos::AlgorithmKind;
use crate::model::Tree;
use crate::rational::{int, pow2, Rational};

/// `D` for Waterfall on any tree, and for Noadd on increasing trees.
pub fn depth_bound(depth: usize) -> Rational {
    int(depth as i64)
}

/// `L / (L - 1)` for Noadd on `L`-increasing trees (`L > 1`).
pub fn l_increasing_bound(factor: &Rational) -> Option<Rational> {
    let one = int(1);
    (factor > &one).then(|| factor / (factor - one))
}

/// `4 - 2^-D` for Double on paths of depth `D`.
pub fn double_bound(depth: usize) -> Rational {
    int(4) - pow2(-(depth as i32))
}

/// `4 - 2^(1 - D/2)`, exact only for even `D`.
pub fn double_refined_bound(depth: usize) -> Option<Rational> {
    depth
        .is_multiple_of(2)
        .then(|| int(4) - pow2(1 - (depth / 2) as i32))
}

/// Tightest guaranteed ratio for `alg` on `tree`, if any applies.
pub fn guaranteed_ratio(alg: AlgorithmKind, tree: &Tree) -> Option<Rational> {
    let depth = tree.depth();
    match alg {
        AlgorithmKind::Waterfall => Some(depth_bound(depth)),
        AlgorithmKind::Double => tree
            .is_path()
            .then(|| double_refined_bound(depth).unwrap_or_else(|| double_bound(depth))),
        AlgorithmKind::Noadd => {
            let factor = tree.increase_factor();
            let mut best = tree.is_increasing().then(|| depth_bound(depth));
            if let Some(b) = factor.as_ref().and_then(l_increasing_bound) {
                best = Some(match best {
                    Some(d) if d < b => d,
                    _ => b,
                });
            }
            if tree.len() == 1 {
                best = Some(int(1));
            }
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn double_bounds() {
        assert_eq!(double_bound(1), frac(7, 2));
        assert_eq!(double_bound(3), frac(31, 8));
        assert_eq!(double_refined_bound(2), Some(int(3)));
        assert_eq!(double_refined_bound(4), Some(frac(7, 2)));
        assert_eq!(double_refined_bound(3), None);
    }

    #[test]
    fn l_increasing() {
        assert_eq!(l_increasing_bound(&int(2)), Some(int(2)));
        assert_eq!(l_increasing_bound(&int(3)), Some(frac(3, 2)));
        assert_eq!(l_increasing_bound(&int(1)), None);
    }
}
