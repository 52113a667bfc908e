//! Removal of multicast incapable branching (MIB) nodes from a pruned
//! shortest-path tree. Each MIB node keeps at most one downstream branch;
//! destinations in the dropped branches are handed to the reconnection step.

use std::collections::BTreeSet;

use crate::network::{reachable_avoiding, NetworkGraph, NodeId, Weight};
use crate::spt::{prune_spt, SptTree};

/// How branches of an MIB node are chosen.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MibMode {
    /// Critical-articulation and deepest-branch heuristics.
    MibPro,
    /// Drop every downstream branch.
    MibPro2,
    /// Keep the lowest-id child (Reroute-to-Any's arbitrary choice).
    LowestId,
}

/// Which rule selected the surviving branch.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    NoCcDeepest,
    OneCc,
    MultiCcDeepest,
    LowestId,
    DeleteAll,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MibDecision {
    pub mib: NodeId,
    pub kept_branch: Option<NodeId>,
    pub rule_fired: Rule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    pub subtree: SptTree,
    pub cut_destinations: BTreeSet<NodeId>,
    pub decisions: Vec<MibDecision>,
}

/// Largest tree distance from `mib` to any node below `child`.
pub fn branch_depth(t: &SptTree, mib: NodeId, child: NodeId) -> Weight {
    let base = t.dist(mib).expect("MIB node is in the tree");
    t.subtree(child)
        .into_iter()
        .filter_map(|v| t.dist(v))
        .max()
        .expect("branch is non-empty")
        - base
}

/// Processes MIB nodes top-down (breadth-first from the root). Lower MIB
/// nodes inside deleted branches disappear with them. The result is
/// re-pruned so every leaf is a destination.
///
/// A branch counts as holding a CC node for MIB node `m` when one of its
/// destinations cannot reach the source once `m` is removed from the graph,
/// i.e. `m` is that destination's critical articulation node.
pub fn process_mib_nodes(
    t: &SptTree,
    g: &NetworkGraph,
    dests: &BTreeSet<NodeId>,
    mode: MibMode,
) -> CutResult {
    let s = t.root();
    let mut parent: Vec<Option<NodeId>> = (0..t.capacity())
        .map(|i| t.parent(NodeId::from_index(i)))
        .collect();
    let mut dist: Vec<Option<Weight>> = (0..t.capacity())
        .map(|i| t.dist(NodeId::from_index(i)))
        .collect();
    let mut cut = BTreeSet::new();
    let mut decisions = Vec::new();

    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        let current = SptTree::from_parts(s, parent.clone(), dist.clone());
        let children = current.children(u);
        if g.is_mc(u) || children.len() < 2 {
            queue.extend(children);
            continue;
        }
        let (kept, rule) = match mode {
            MibMode::MibPro2 => (None, Rule::DeleteAll),
            MibMode::LowestId => (Some(children[0]), Rule::LowestId),
            MibMode::MibPro => {
                let reach = reachable_avoiding(g, s, &|v| v == u);
                let qualifying: Vec<NodeId> = children
                    .iter()
                    .copied()
                    .filter(|&c| {
                        current
                            .subtree(c)
                            .into_iter()
                            .any(|v| dests.contains(&v) && !reach[v.index()])
                    })
                    .collect();
                let deepest = |pool: &[NodeId]| {
                    // max depth, smaller id on ties
                    pool.iter()
                        .copied()
                        .max_by_key(|&c| (branch_depth(&current, u, c), std::cmp::Reverse(c)))
                };
                match qualifying.len() {
                    0 => (deepest(&children), Rule::NoCcDeepest),
                    1 => (Some(qualifying[0]), Rule::OneCc),
                    _ => (deepest(&qualifying), Rule::MultiCcDeepest),
                }
            }
        };
        for &c in children.iter().filter(|&&c| Some(c) != kept) {
            for v in current.subtree(c) {
                if dests.contains(&v) {
                    cut.insert(v);
                }
                parent[v.index()] = None;
                dist[v.index()] = None;
            }
        }
        decisions.push(MibDecision {
            mib: u,
            kept_branch: kept,
            rule_fired: rule,
        });
        queue.extend(kept);
    }

    let survivors: BTreeSet<NodeId> = dests.difference(&cut).copied().collect();
    CutResult {
        subtree: prune_spt(&SptTree::from_parts(s, parent, dist), &survivors),
        cut_destinations: cut,
        decisions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{articulation_analysis, parse_topology, Metric};
    use crate::spt::{dijkstra_spt, mib_census, TieBreak};

    fn set(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn tree(text: &str, dests: &[u32]) -> (NetworkGraph, SptTree, BTreeSet<NodeId>) {
        let g = parse_topology(text).unwrap();
        let dests = set(dests);
        let t = prune_spt(
            &dijkstra_spt(&g, NodeId(1), Metric::Delay, TieBreak::SmallestId),
            &dests,
        );
        (g, t, dests)
    }

    #[test]
    fn depth_of_leaf_and_chain() {
        let (_, t, _) = tree("nodes 5\nedge 1 2\nedge 2 3\nedge 3 4\nedge 1 5\n", &[4, 5]);
        assert_eq!(branch_depth(&t, NodeId(1), NodeId(5)), 1);
        assert_eq!(branch_depth(&t, NodeId(1), NodeId(2)), 3);
    }

    #[test]
    fn mib_free_tree_is_untouched() {
        let (g, t, dests) = tree("nodes 3\nedge 1 2\nedge 2 3\n", &[3]);
        for mode in [MibMode::MibPro, MibMode::MibPro2, MibMode::LowestId] {
            let r = process_mib_nodes(&t, &g, &dests, mode);
            assert_eq!(r.subtree, t);
            assert!(r.cut_destinations.is_empty());
            assert!(r.decisions.is_empty());
        }
    }

    // s=1, a=2, m=3; m-x-d1 (4, 5) is the only way to d1; d2=6 hangs off m
    // and also has the detour 6-7-1.
    const BRIDGE_CHAIN: &str = "nodes 7\nmc 1\n\
        edge 1 2\nedge 2 3\nedge 3 4\nedge 4 5\nedge 3 6\nedge 6 7 5 5\nedge 7 1 5 5\n";

    #[test]
    fn critical_articulation_keeps_cc_branch() {
        let (g, t, dests) = tree(BRIDGE_CHAIN, &[5, 6]);
        let rep = articulation_analysis(&g, NodeId(1), &dests);
        assert!(rep.separates(NodeId(3), NodeId(5)));
        assert!(!rep.separates(NodeId(3), NodeId(6)));
        assert_eq!(mib_census(&t, &g).mib_nodes, set(&[3]));

        let r = process_mib_nodes(&t, &g, &dests, MibMode::MibPro);
        assert_eq!(r.cut_destinations, set(&[6]));
        assert_eq!(
            r.decisions,
            vec![MibDecision {
                mib: NodeId(3),
                kept_branch: Some(NodeId(4)),
                rule_fired: Rule::OneCc
            }]
        );
        assert!(r.subtree.contains(NodeId(5)));
        assert!(!r.subtree.contains(NodeId(6)));
    }

    #[test]
    fn deepest_branch_without_cc() {
        // 2 is MI with branches 3 (leaf) and 4-5 (depth 2); both also reach 1 via 6
        let (g, t, dests) = tree(
            "nodes 6\nmc 1\nedge 1 2\nedge 2 3\nedge 2 4\nedge 4 5\nedge 1 6 3 3\nedge 6 3 3 3\nedge 6 5 3 3\n",
            &[3, 5],
        );
        let r = process_mib_nodes(&t, &g, &dests, MibMode::MibPro);
        assert_eq!(r.decisions[0].rule_fired, Rule::NoCcDeepest);
        assert_eq!(r.decisions[0].kept_branch, Some(NodeId(4)));
        assert_eq!(r.cut_destinations, set(&[3]));
    }

    #[test]
    fn several_cc_branches_keep_deepest() {
        // 2 is the only gateway for 3 and for 4-5
        let (g, t, dests) = tree(
            "nodes 5\nmc 1\nedge 1 2\nedge 2 3\nedge 2 4\nedge 4 5\n",
            &[3, 5],
        );
        let r = process_mib_nodes(&t, &g, &dests, MibMode::MibPro);
        assert_eq!(r.decisions[0].rule_fired, Rule::MultiCcDeepest);
        assert_eq!(r.decisions[0].kept_branch, Some(NodeId(4)));
    }

    #[test]
    fn mibpro2_drops_everything_below() {
        let (g, t, dests) = tree(BRIDGE_CHAIN, &[5, 6]);
        let r = process_mib_nodes(&t, &g, &dests, MibMode::MibPro2);
        assert_eq!(r.cut_destinations, set(&[5, 6]));
        // node 3 is not a destination, so the whole chain is pruned
        assert_eq!(r.subtree.nodes().collect::<Vec<_>>(), vec![NodeId(1)]);
        assert_eq!(r.decisions[0].rule_fired, Rule::DeleteAll);
    }

    #[test]
    fn nested_mib_in_deleted_branch_is_skipped() {
        // 2 branches to 3 and 4; 4 branches to 5 and 6. All MI except 1.
        let (g, t, dests) = tree(
            "nodes 6\nmc 1\nedge 1 2\nedge 2 3\nedge 2 4\nedge 4 5\nedge 4 6\n",
            &[3, 5, 6],
        );
        let r = process_mib_nodes(&t, &g, &dests, MibMode::LowestId);
        assert_eq!(r.decisions.len(), 1);
        assert_eq!(r.cut_destinations, set(&[5, 6]));
        assert_eq!(mib_census(&r.subtree, &g).count(), 0);
    }
}
