//! The interval tree of a nested decreasing family of open sets.
//!
//! Level `n` (1-based) is the canonical set `V_n`; its components are the
//! nodes at depth `n`, and the children of a node are the components of
//! `V_(n+1)` lying inside it. Pruning passes mark nodes instead of deleting
//! them so every vanished component keeps the reason it was dropped.
//!
//! Statements about "sufficiently large depth" are taken relative to an
//! explicit horizon depth.

mod certificate;
mod witness;

pub use certificate::{
    exact_intersection_oracle, verify_against_sequence, verify_certificate, Clause, ClosedInterval,
    Evidence, VerificationFailure, VerificationReport, WitnessCertificate, WitnessMode,
};
pub use witness::{ChainStep, FatPath, FatPathChoice, NestedWitness};

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{IntervalSet, OpenInterval};
use crate::rat::Rat;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    Live,
    PrunedTerminating,
    PrunedNonsplitting,
    PrunedTruncated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub interval: OpenInterval,
    pub depth: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub status: NodeStatus,
}

impl TreeNode {
    pub fn is_live(&self) -> bool {
        self.status == NodeStatus::Live
    }
}

#[derive(Clone, Debug)]
pub struct IntervalTree {
    levels: Vec<IntervalSet>,
    nodes: Vec<TreeNode>,
    by_depth: Vec<Vec<NodeId>>,
    epsilon: Rat,
}

/// `S_n` and `O_n` at one depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitClassification {
    pub depth: usize,
    pub horizon: usize,
    /// Live nodes with at least two live descendants at the horizon.
    pub splitting: Vec<NodeId>,
    /// The remaining live nodes.
    pub single_chain: Vec<NodeId>,
    pub splitting_length: Rat,
    pub single_chain_length: Rat,
    /// Total length of the horizon descendants of `splitting`.
    pub splitting_horizon_length: Rat,
    /// Total length of the horizon descendants of `single_chain`.
    pub single_chain_horizon_length: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruneReport {
    pub horizon: usize,
    pub pruned: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiscardOutcome {
    /// Non-splitting nodes were marked; `level_lengths[n - 1]` is the live
    /// length left at depth `n <= horizon`.
    Applied {
        discarded: usize,
        level_lengths: Vec<Rat>,
    },
    /// Discarding would leave `level` shorter than `floor`; nothing marked.
    BoundNotWitnessed {
        level: usize,
        length: Rat,
        floor: Rat,
    },
}

impl IntervalTree {
    /// Builds the tree of `levels`, which must be nested decreasing with each
    /// level at least `epsilon / 2` long.
    pub fn build(levels: Vec<IntervalSet>, epsilon: &Rat) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::NoLevels);
        }
        let half = epsilon / &Rat::from_int(2);
        for (i, level) in levels.iter().enumerate() {
            if i > 0 && !level.subset_of(&levels[i - 1]) {
                return Err(Error::NotNested { level: i + 1 });
            }
            let length = level.total_length();
            if length < half {
                return Err(Error::LevelTooShort {
                    level: i + 1,
                    length,
                    required: half,
                });
            }
        }

        let mut nodes = Vec::new();
        let mut by_depth: Vec<Vec<NodeId>> = Vec::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            let depth = i + 1;
            let mut ids = Vec::with_capacity(level.len());
            for iv in level.intervals() {
                let parent = match i {
                    0 => None,
                    _ => {
                        let idx = levels[i - 1]
                            .component_covering(iv)
                            .ok_or(Error::NotNested { level: depth })?;
                        Some(by_depth[i - 1][idx])
                    }
                };
                let id = NodeId(nodes.len());
                nodes.push(TreeNode {
                    interval: iv.clone(),
                    depth,
                    parent,
                    children: Vec::new(),
                    status: NodeStatus::Live,
                });
                if let Some(p) = parent {
                    nodes[p.0].children.push(id);
                }
                ids.push(id);
            }
            by_depth.push(ids);
        }
        Ok(IntervalTree {
            levels,
            nodes,
            by_depth,
            epsilon: epsilon.clone(),
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    pub fn levels(&self) -> &[IntervalSet] {
        &self.levels
    }

    /// `V_depth`, 1-based.
    pub fn level(&self, depth: usize) -> &IntervalSet {
        &self.levels[depth - 1]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// All nodes at `depth`, ordered left to right.
    pub fn nodes_at(&self, depth: usize) -> &[NodeId] {
        &self.by_depth[depth - 1]
    }

    pub fn roots(&self) -> &[NodeId] {
        self.nodes_at(1)
    }

    pub fn live_nodes_at(&self, depth: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes_at(depth)
            .iter()
            .copied()
            .filter(|id| self.node(*id).is_live())
    }

    pub fn live_children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.node(id)
            .children
            .iter()
            .copied()
            .filter(|c| self.node(*c).is_live())
    }

    /// Live descendants of `id` at `depth`, left to right. A node is its own
    /// descendant at its own depth.
    pub fn live_descendants_at(&self, id: NodeId, depth: usize) -> Vec<NodeId> {
        let start = self.node(id);
        if depth < start.depth || !start.is_live() {
            return Vec::new();
        }
        let mut frontier = vec![id];
        for _ in start.depth..depth {
            frontier = frontier
                .iter()
                .flat_map(|&n| self.live_children(n))
                .collect();
            if frontier.is_empty() {
                break;
            }
        }
        frontier
    }

    /// Union of the live nodes at `depth`.
    pub fn live_level_set(&self, depth: usize) -> IntervalSet {
        IntervalSet::normalize(
            self.live_nodes_at(depth)
                .map(|id| self.node(id).interval.clone()),
        )
    }

    fn live_length_at(&self, depth: usize) -> Rat {
        self.live_nodes_at(depth)
            .map(|id| self.node(id).interval.length())
            .sum()
    }

    fn check_horizon(&self, horizon: usize) -> Result<()> {
        if horizon == 0 || horizon > self.depth() {
            return Err(Error::InvalidHorizon {
                horizon,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    fn mark_subtree(&mut self, id: NodeId, status: NodeStatus) -> usize {
        let mut stack = vec![id];
        let mut marked = 0;
        while let Some(n) = stack.pop() {
            if self.nodes[n.0].is_live() {
                self.nodes[n.0].status = status;
                marked += 1;
                stack.extend(self.nodes[n.0].children.iter().copied());
            }
        }
        marked
    }

    /// Marks as truncated every node whose interval is not a component of
    /// `kept[depth - 1]`, along with its subtree. Levels beyond `kept` are
    /// left alone.
    pub fn mark_truncated(&mut self, kept: &[IntervalSet]) -> usize {
        let mut marked = 0;
        for (i, keep) in kept.iter().enumerate().take(self.depth()) {
            for id in self.by_depth[i].clone() {
                let iv = &self.nodes[id.0].interval;
                if self.nodes[id.0].is_live() && !keep.intervals().contains(iv) {
                    marked += self.mark_subtree(id, NodeStatus::PrunedTruncated);
                }
            }
        }
        marked
    }

    /// Live horizon descendants of every node at depth `<= horizon`.
    fn horizon_counts(&self, horizon: usize) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for d in (1..=horizon).rev() {
            for &id in self.nodes_at(d) {
                let node = self.node(id);
                if !node.is_live() {
                    continue;
                }
                counts[id.0] = if d == horizon {
                    1
                } else {
                    node.children.iter().map(|c| counts[c.0]).sum()
                };
            }
        }
        counts
    }

    /// Marks every live node at depth `<= horizon` without a live descendant
    /// at the horizon.
    pub fn prune_terminating(&mut self, horizon: usize) -> Result<PruneReport> {
        self.check_horizon(horizon)?;
        let counts = self.horizon_counts(horizon);
        let mut pruned = 0;
        for d in 1..horizon {
            for id in self.by_depth[d - 1].clone() {
                if self.nodes[id.0].is_live() && counts[id.0] == 0 {
                    pruned += self.mark_subtree(id, NodeStatus::PrunedTerminating);
                }
            }
        }
        Ok(PruneReport { horizon, pruned })
    }

    /// Splits the live nodes at each depth `1..=horizon` into `S_n` (two or
    /// more live horizon descendants) and `O_n` (the rest).
    pub fn classify_splitting(&self, horizon: usize) -> Result<Vec<SplitClassification>> {
        self.check_horizon(horizon)?;
        let counts = self.horizon_counts(horizon);
        let horizon_len = |id: NodeId| -> Rat {
            self.live_descendants_at(id, horizon)
                .iter()
                .map(|d| self.node(*d).interval.length())
                .sum()
        };
        let mut out = Vec::with_capacity(horizon);
        for depth in 1..=horizon {
            let (splitting, single_chain): (Vec<NodeId>, Vec<NodeId>) =
                self.live_nodes_at(depth).partition(|id| counts[id.0] >= 2);
            let len = |ids: &[NodeId]| ids.iter().map(|id| self.node(*id).interval.length()).sum();
            let hlen = |ids: &[NodeId]| ids.iter().map(|id| horizon_len(*id)).sum();
            out.push(SplitClassification {
                depth,
                horizon,
                splitting_length: len(&splitting),
                single_chain_length: len(&single_chain),
                splitting_horizon_length: hlen(&splitting),
                single_chain_horizon_length: hlen(&single_chain),
                splitting,
                single_chain,
            });
        }
        Ok(out)
    }

    /// Discards `O_n` at every depth `n` above the horizon, together with
    /// their subtrees, using one classification taken after terminating
    /// pruning.
    ///
    /// Horizon nodes are leaves of the finite view and are never classified
    /// as non-splitting themselves. The discard is committed only if every
    /// depth `<= horizon` keeps live length at least `floor`.
    pub fn discard_nonsplitting(&mut self, horizon: usize, floor: &Rat) -> Result<DiscardOutcome> {
        self.check_horizon(horizon)?;
        let mut scratch = self.clone();
        scratch.prune_terminating(horizon)?;
        let counts = scratch.horizon_counts(horizon);
        let doomed: Vec<NodeId> = (1..horizon)
            .flat_map(|d| scratch.live_nodes_at(d).collect::<Vec<_>>())
            .filter(|id| counts[id.0] < 2)
            .collect();
        let mut discarded = 0;
        for id in doomed {
            if scratch.nodes[id.0].is_live() {
                discarded += scratch.mark_subtree(id, NodeStatus::PrunedNonsplitting);
            }
        }
        let mut level_lengths = Vec::with_capacity(horizon);
        for depth in 1..=horizon {
            let length = scratch.live_length_at(depth);
            if &length < floor {
                return Ok(DiscardOutcome::BoundNotWitnessed {
                    level: depth,
                    length,
                    floor: floor.clone(),
                });
            }
            level_lengths.push(length);
        }
        *self = scratch;
        Ok(DiscardOutcome::Applied {
            discarded,
            level_lengths,
        })
    }

    /// Per-level component listing with status tags.
    pub fn dump(&self) -> TreeDump {
        TreeDump {
            epsilon: self.epsilon.clone(),
            levels: (1..=self.depth())
                .map(|depth| LevelDump {
                    level: depth,
                    nodes: self
                        .nodes_at(depth)
                        .iter()
                        .map(|id| {
                            let n = self.node(*id);
                            NodeDump {
                                id: id.0,
                                component: n.interval.clone(),
                                parent: n.parent.map(|p| p.0),
                                status: n.status,
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn build_tree(levels: Vec<IntervalSet>, epsilon: &Rat) -> Result<IntervalTree> {
    IntervalTree::build(levels, epsilon)
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeDump {
    pub epsilon: Rat,
    pub levels: Vec<LevelDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDump {
    pub level: usize,
    pub nodes: Vec<NodeDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDump {
    pub id: usize,
    pub component: OpenInterval,
    pub parent: Option<usize>,
    pub status: NodeStatus,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    pub(crate) fn set(pairs: &[(&str, &str)]) -> IntervalSet {
        IntervalSet::from_pairs(pairs.iter().map(|(a, b)| (rat(a), rat(b)))).unwrap()
    }

    fn tiny() -> Rat {
        rat("1/1000000")
    }

    #[test]
    fn root_with_two_children() {
        let t = build_tree(
            vec![set(&[("0", "1")]), set(&[("0", "1/3"), ("2/3", "1")])],
            &rat("1/4"),
        )
        .unwrap();
        assert_eq!(t.roots().len(), 1);
        assert_eq!(t.node(t.roots()[0]).children.len(), 2);
        for &c in t.nodes_at(2) {
            assert_eq!(t.node(c).parent, Some(t.roots()[0]));
        }
    }

    #[test]
    fn nestedness_and_length_checked() {
        let err = build_tree(vec![set(&[("0", "1/2")]), set(&[("1/4", "3/4")])], &tiny());
        assert!(matches!(err, Err(Error::NotNested { level: 2 })));
        let err = build_tree(vec![set(&[("0", "1/8")])], &rat("1/2"));
        assert!(matches!(err, Err(Error::LevelTooShort { level: 1, .. })));
        assert!(matches!(build_tree(vec![], &tiny()), Err(Error::NoLevels)));
    }

    #[test]
    fn touching_components_have_separate_parents() {
        let t = build_tree(
            vec![
                set(&[("0", "1/2"), ("1/2", "1")]),
                set(&[("1/4", "1/2"), ("1/2", "3/4")]),
            ],
            &tiny(),
        )
        .unwrap();
        let [a, b] = [t.nodes_at(2)[0], t.nodes_at(2)[1]];
        assert_ne!(t.node(a).parent, t.node(b).parent);
    }

    #[test]
    fn chain_prunes_nothing() {
        let levels = vec![set(&[("1/4", "3/4")]); 5];
        let mut t = build_tree(levels, &rat("1/8")).unwrap();
        for h in 1..=5 {
            assert_eq!(t.prune_terminating(h).unwrap().pruned, 0);
        }
        let cls = t.classify_splitting(5).unwrap();
        assert!(cls
            .iter()
            .all(|c| c.splitting.is_empty() && c.single_chain.len() == 1));
    }

    #[test]
    fn terminating_subtree_pruned() {
        // (1/2, 1) has descendants only down to depth 3.
        let levels = vec![
            set(&[("0", "1/4"), ("1/2", "1")]),
            set(&[("0", "1/4"), ("1/2", "3/4")]),
            set(&[("0", "1/8"), ("5/8", "3/4")]),
            set(&[("0", "1/8")]),
            set(&[("0", "1/16")]),
        ];
        let mut t = build_tree(levels, &tiny()).unwrap();
        let report = t.prune_terminating(5).unwrap();
        assert_eq!(report.pruned, 3);
        let right_root = t.roots()[1];
        assert_eq!(t.node(right_root).status, NodeStatus::PrunedTerminating);
        assert_eq!(t.live_level_set(3), set(&[("0", "1/8")]));
        assert!(matches!(
            t.prune_terminating(6),
            Err(Error::InvalidHorizon { .. })
        ));
    }

    #[test]
    fn binary_tree_all_splitting() {
        let t = build_tree(dyadic_levels(4), &tiny()).unwrap();
        let cls = t.classify_splitting(4).unwrap();
        for c in &cls[..3] {
            assert!(c.single_chain.is_empty());
        }
        assert!(cls[3].splitting.is_empty());
    }

    /// Level d has 2^(d-1) components: each parent keeps its left and right
    /// quarter.
    pub(crate) fn dyadic_levels(depth: usize) -> Vec<IntervalSet> {
        let mut levels = vec![IntervalSet::unit()];
        for _ in 1..depth {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for iv in prev.intervals() {
                let q = iv.length() / Rat::from_int(4);
                next.push((iv.lo().clone(), iv.lo() + &q));
                next.push((iv.hi() - &q, iv.hi().clone()));
            }
            levels.push(IntervalSet::from_pairs(next).unwrap());
        }
        levels
    }

    #[test]
    fn discard_leaves_only_splitting_nodes() {
        // Root splits into a chain (left) and a fork (right).
        let levels = vec![
            set(&[("0", "1")]),
            set(&[("0", "1/4"), ("1/2", "1")]),
            set(&[("0", "1/4"), ("1/2", "5/8"), ("7/8", "1")]),
        ];
        let mut t = build_tree(levels, &tiny()).unwrap();
        let outcome = t.discard_nonsplitting(3, &rat("1/8")).unwrap();
        assert!(matches!(
            outcome,
            DiscardOutcome::Applied { discarded: 2, .. }
        ));
        assert_eq!(t.live_level_set(2), set(&[("1/2", "1")]));
        assert_eq!(t.live_level_set(3), set(&[("1/2", "5/8"), ("7/8", "1")]));
        let left = t.nodes_at(2)[0];
        assert_eq!(t.node(left).status, NodeStatus::PrunedNonsplitting);
    }

    #[test]
    fn discard_respects_floor() {
        let levels = vec![
            set(&[("0", "1")]),
            set(&[("0", "1/2"), ("1/2", "1")]),
            set(&[("0", "1/2"), ("1/2", "9/16"), ("15/16", "1")]),
        ];
        let mut t = build_tree(levels, &tiny()).unwrap();
        let outcome = t.discard_nonsplitting(3, &rat("1/4")).unwrap();
        assert!(matches!(
            outcome,
            DiscardOutcome::BoundNotWitnessed { level: 3, .. }
        ));
        assert!(t.node_ids().all(|id| t.node(id).is_live()));
    }

    #[test]
    fn truncation_marks_subtrees() {
        let levels = vec![
            set(&[("0", "1/4"), ("1/2", "1")]),
            set(&[("0", "1/8"), ("1/2", "3/4")]),
        ];
        let mut t = build_tree(levels, &tiny()).unwrap();
        let marked = t.mark_truncated(&[set(&[("1/2", "1")])]);
        assert_eq!(marked, 2);
        assert_eq!(t.live_level_set(2), set(&[("1/2", "3/4")]));
        let dump = serde_json::to_value(t.dump()).unwrap();
        assert_eq!(dump["levels"][0]["nodes"][0]["status"], "pruned-truncated");
    }
}
