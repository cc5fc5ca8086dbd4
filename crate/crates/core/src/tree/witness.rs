//! Witness extraction.
//!
//! Nested mode: from a node `N`, find the shallowest depth at which `N` has
//! three or more live descendants, take the closed interval between the
//! midpoints of the outermost two (it contains every middle descendant in
//! its interior), and continue from a middle descendant. Fat-path mode:
//! follow a root-to-bottom path whose intervals all have length at least
//! `lambda` and pick a cluster of its midpoints.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::certificate::ClosedInterval;
use super::{IntervalTree, NodeId};
use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStep {
    /// Node the step started from.
    pub from: NodeId,
    /// Depth at which three or more live descendants first appear.
    pub split_depth: usize,
    pub descendants: Vec<NodeId>,
    pub closed: ClosedInterval,
    pub middle: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedWitness {
    pub steps: Vec<ChainStep>,
    /// Deepest live descendant of the last middle node; the witness is its
    /// midpoint.
    pub anchor: NodeId,
    /// Closed intervals of the steps followed by the middle half of the
    /// anchor. Strictly nested.
    pub chain: Vec<ClosedInterval>,
    pub witness: Rat,
    pub horizon: usize,
}

impl NestedWitness {
    /// Number of leading levels the witness is certified to lie in.
    pub fn certified_levels(&self, tree: &IntervalTree) -> usize {
        tree.node(self.anchor).depth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FatPathChoice {
    /// Earliest midpoint of the most populated `lambda / 2` bucket.
    Cluster,
    /// The cluster candidate missed some level; deepest midpoint used.
    DeepestMidpoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FatPath {
    pub lambda: Rat,
    pub nodes: Vec<NodeId>,
    pub midpoints: Vec<Rat>,
    pub witness: Rat,
    pub choice: FatPathChoice,
}

/// Index of the middle descendant: the central one, or the left of the
/// central pair.
fn central_index(count: usize) -> usize {
    debug_assert!(count >= 3);
    (count - 1) / 2
}

impl IntervalTree {
    /// Runs the nested closed-interval construction from each live root in
    /// turn and returns the first success.
    pub fn extract_witness(&self, horizon: usize) -> Result<NestedWitness> {
        self.check_horizon(horizon)?;
        for root in self.live_nodes_at(1).collect::<Vec<_>>() {
            if let Some(w) = self.extract_from(root, horizon) {
                return Ok(w);
            }
        }
        Err(Error::InsufficientSplitting { horizon })
    }

    fn first_three_way_split(&self, from: NodeId, horizon: usize) -> Option<(usize, Vec<NodeId>)> {
        let mut frontier = vec![from];
        let mut depth = self.node(from).depth;
        while depth < horizon {
            frontier = frontier
                .iter()
                .flat_map(|&n| self.live_children(n))
                .collect();
            depth += 1;
            if frontier.len() >= 3 {
                return Some((depth, frontier));
            }
            if frontier.is_empty() {
                return None;
            }
        }
        None
    }

    fn extract_from(&self, root: NodeId, horizon: usize) -> Option<NestedWitness> {
        let mut steps = Vec::new();
        let mut current = root;
        while let Some((split_depth, descendants)) = self.first_three_way_split(current, horizon) {
            let first = &self.node(descendants[0]).interval;
            let last = &self.node(descendants[descendants.len() - 1]).interval;
            let closed = ClosedInterval::new(first.midpoint(), last.midpoint())
                .expect("descendants are ordered left to right");
            let middle = descendants[central_index(descendants.len())];
            steps.push(ChainStep {
                from: current,
                split_depth,
                descendants,
                closed,
                middle,
            });
            current = middle;
        }
        if steps.is_empty() {
            return None;
        }
        let anchor = self.deepest_live_descendant(current);
        let anchor_iv = &self.node(anchor).interval;
        let quarter = anchor_iv.length() / Rat::from_int(4);
        let last = ClosedInterval::new(anchor_iv.lo() + &quarter, anchor_iv.hi() - &quarter)
            .expect("quarter-trimmed interval is nonempty");
        let mut chain: Vec<ClosedInterval> = steps.iter().map(|s| s.closed.clone()).collect();
        chain.push(last);
        Some(NestedWitness {
            witness: anchor_iv.midpoint(),
            steps,
            anchor,
            chain,
            horizon,
        })
    }

    /// Leftmost live descendant of maximal depth.
    fn deepest_live_descendant(&self, from: NodeId) -> NodeId {
        let mut frontier = vec![from];
        loop {
            let next: Vec<NodeId> = frontier
                .iter()
                .flat_map(|&n| self.live_children(n))
                .collect();
            if next.is_empty() {
                return frontier[0];
            }
            frontier = next;
        }
    }

    /// Leftmost live path from a root to the deepest level along which every
    /// interval has length `>= lambda`.
    pub fn detect_fat_path(&self, lambda: &Rat) -> Option<FatPath> {
        if !lambda.is_positive() {
            return None;
        }
        let bottom = self.depth();
        let fat = |id: NodeId| &self.node(id).interval.length() >= lambda;
        // Depth-first, leftmost first. Each node is expanded at most once.
        let mut path: Vec<NodeId> = Vec::new();
        let mut stack: Vec<(NodeId, usize)> = self
            .live_nodes_at(1)
            .filter(|id| fat(*id))
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|id| (id, 1))
            .collect();
        while let Some((id, depth)) = stack.pop() {
            path.truncate(depth - 1);
            path.push(id);
            if depth == bottom {
                return Some(self.fat_path_from(path, lambda));
            }
            let kids: Vec<NodeId> = self.live_children(id).filter(|c| fat(*c)).collect();
            stack.extend(kids.into_iter().rev().map(|c| (c, depth + 1)));
        }
        None
    }

    fn fat_path_from(&self, nodes: Vec<NodeId>, lambda: &Rat) -> FatPath {
        let midpoints: Vec<Rat> = nodes
            .iter()
            .map(|id| self.node(*id).interval.midpoint())
            .collect();
        let width = lambda / &Rat::from_int(2);
        // bucket -> (population, earliest position)
        let mut buckets: BTreeMap<BigInt, (usize, usize)> = BTreeMap::new();
        for (i, m) in midpoints.iter().enumerate() {
            let entry = buckets.entry((m / &width).floor()).or_insert((0, i));
            entry.0 += 1;
        }
        let (_, &(_, best)) = buckets
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .expect("path is nonempty");
        let candidate = &midpoints[best];
        let (witness, choice) = if self.levels().iter().all(|lvl| lvl.contains(candidate)) {
            (candidate.clone(), FatPathChoice::Cluster)
        } else {
            (
                midpoints[midpoints.len() - 1].clone(),
                FatPathChoice::DeepestMidpoint,
            )
        };
        FatPath {
            lambda: lambda.clone(),
            nodes,
            midpoints,
            witness,
            choice,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalSet;
    use crate::rat::rat;
    use crate::tree::build_tree;

    /// Each node keeps its three outer ninths: (0,1/9), (4/9,5/9), (8/9,1)
    /// scaled into the parent.
    fn triadic_levels(depth: usize) -> Vec<IntervalSet> {
        let mut levels = vec![IntervalSet::unit()];
        for _ in 1..depth {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for iv in prev.intervals() {
                let w = iv.length() / Rat::from_int(9);
                for k in [0, 4, 8] {
                    let lo = iv.lo() + &(&w * &Rat::from_int(k));
                    next.push((lo.clone(), lo + &w));
                }
            }
            levels.push(IntervalSet::from_pairs(next).unwrap());
        }
        levels
    }

    #[test]
    fn triadic_tree_chain() {
        let levels = triadic_levels(5);
        let t = build_tree(levels.clone(), &rat("1/1000000")).unwrap();
        let w = t.extract_witness(5).unwrap();
        // Every step splits at the next depth; four steps plus the anchor.
        assert_eq!(w.steps.len(), 4);
        assert_eq!(w.chain.len(), 5);
        for pair in w.chain.windows(2) {
            assert!(pair[0].strictly_contains(&pair[1]));
        }
        for step in &w.steps {
            let mid = &t.node(step.middle).interval;
            assert!(step.closed.lo() < mid.lo() && mid.hi() < step.closed.hi());
        }
        for c in &w.chain {
            assert!(c.contains(&w.witness));
        }
        for lvl in &levels {
            assert!(lvl.contains(&w.witness));
        }
        // The middle ninths converge on 1/2.
        assert_eq!(w.witness, rat("1/2"));
        assert_eq!(w.certified_levels(&t), 5);
    }

    #[test]
    fn chain_never_splits() {
        let levels = vec![IntervalSet::from_pairs([(rat("1/4"), rat("3/4"))]).unwrap(); 6];
        let t = build_tree(levels, &rat("1/8")).unwrap();
        assert!(matches!(
            t.extract_witness(6),
            Err(Error::InsufficientSplitting { horizon: 6 })
        ));
        let fp = t.detect_fat_path(&rat("1/2")).unwrap();
        assert_eq!(fp.witness, rat("1/2"));
        assert!(fp.midpoints.iter().all(|m| m == &rat("1/2")));
        assert_eq!(fp.choice, FatPathChoice::Cluster);
    }

    #[test]
    fn even_descendant_count_takes_left_of_centre() {
        assert_eq!(central_index(3), 1);
        assert_eq!(central_index(4), 1);
        assert_eq!(central_index(5), 2);
        assert_eq!(central_index(6), 2);
    }

    #[test]
    fn fat_path_vanishes_when_lengths_shrink() {
        let levels: Vec<IntervalSet> = (1..=6)
            .map(|k| IntervalSet::from_pairs([(Rat::zero(), Rat::inv_pow2(k))]).unwrap())
            .collect();
        let t = build_tree(levels, &rat("1/1000")).unwrap();
        assert!(t.detect_fat_path(&rat("1/8")).is_none());
        assert!(t.detect_fat_path(&rat("1/64")).is_some());
        assert!(t.detect_fat_path(&Rat::zero()).is_none());
    }

    #[test]
    fn fat_path_prefers_left_branch_that_reaches_bottom() {
        let levels = vec![
            IntervalSet::unit(),
            IntervalSet::from_pairs([(rat("0"), rat("1/2")), (rat("1/2"), rat("1"))]).unwrap(),
            IntervalSet::from_pairs([(rat("0"), rat("1/8")), (rat("1/2"), rat("1"))]).unwrap(),
        ];
        let t = build_tree(levels, &rat("1/1000")).unwrap();
        let fp = t.detect_fat_path(&rat("1/4")).unwrap();
        assert_eq!(fp.midpoints, vec![rat("1/2"), rat("3/4"), rat("3/4")]);
        assert_eq!(fp.witness, rat("3/4"));
    }

    #[test]
    fn cluster_on_boundary_falls_back_to_deepest() {
        // The populated bucket's earliest midpoint is 1/2, a gap of level 2.
        let levels = vec![
            IntervalSet::unit(),
            IntervalSet::from_pairs([(rat("0"), rat("1/2")), (rat("1/2"), rat("1"))]).unwrap(),
        ];
        let t = build_tree(levels, &rat("1/1000")).unwrap();
        let fp = t.detect_fat_path(&rat("1/2")).unwrap();
        assert_eq!(fp.midpoints, vec![rat("1/2"), rat("1/4")]);
        // Buckets of width 1/4: 1/2 -> 2, 1/4 -> 1; tie broken by earliest.
        assert_eq!(fp.choice, FatPathChoice::DeepestMidpoint);
        assert_eq!(fp.witness, rat("1/4"));
    }
}
