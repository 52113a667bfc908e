//! End-to-end session routing: the MIBPro / MIBPro2 pipelines and the
//! Reroute-to-Source, Reroute-to-Any and Member-Only baselines.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forest::{reconnect, LightForest, LightTree, MulticastSession, ReconnectRule};
use crate::mib::{process_mib_nodes, MibMode};
use crate::network::{Metric, NetworkGraph, NodeId};
use crate::spt::{dijkstra_pro_spt, dijkstra_spt, prune_spt, ProOptions, SptTree, TieBreak};

/// Shortest-path trees are built on delay: the tree part of every
/// algorithm is meant to give each destination its minimal delay.
pub const SPT_METRIC: Metric = Metric::Delay;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    MibPro,
    MibPro2,
    R2S,
    R2A,
    MO,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 5] = [
        AlgorithmId::MibPro,
        AlgorithmId::MibPro2,
        AlgorithmId::R2S,
        AlgorithmId::R2A,
        AlgorithmId::MO,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::MibPro => "MIBPro",
            AlgorithmId::MibPro2 => "MIBPro2",
            AlgorithmId::R2S => "R2S",
            AlgorithmId::R2A => "R2A",
            AlgorithmId::MO => "MO",
        }
    }

    pub fn run(self, g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
        match self {
            AlgorithmId::MibPro => mibpro(g, ms),
            AlgorithmId::MibPro2 => mibpro2(g, ms),
            AlgorithmId::R2S => Ok(reroute_to_source(g, ms)),
            AlgorithmId::R2A => reroute_to_any(g, ms),
            AlgorithmId::MO => member_only(g, ms),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}` (expected MIBPro, MIBPro2, R2S, R2A or MO)"
                ))
            })
    }
}

/// How the initial shortest-path tree is built.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SptBuilder {
    Dijkstra(TieBreak),
    DijkstraPro(ProOptions),
}

impl SptBuilder {
    pub fn build(self, g: &NetworkGraph, s: NodeId, dests: &BTreeSet<NodeId>) -> SptTree {
        match self {
            SptBuilder::Dijkstra(tie) => dijkstra_spt(g, s, SPT_METRIC, tie),
            SptBuilder::DijkstraPro(opts) => dijkstra_pro_spt(g, s, dests, SPT_METRIC, opts),
        }
    }
}

/// SPT → prune → MIB processing → reconnection.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    pub spt: SptBuilder,
    pub mib: MibMode,
    pub reconnect: ReconnectRule,
}

impl Pipeline {
    pub const MIBPRO: Pipeline = Pipeline {
        spt: SptBuilder::DijkstraPro(ProOptions {
            mc_priority: true,
            degree_priority: true,
            adoption: true,
        }),
        mib: MibMode::MibPro,
        reconnect: ReconnectRule::DistanceBased,
    };

    pub const MIBPRO2: Pipeline = Pipeline {
        mib: MibMode::MibPro2,
        ..Pipeline::MIBPRO
    };

    pub const R2A: Pipeline = Pipeline {
        spt: SptBuilder::Dijkstra(TieBreak::SmallestId),
        mib: MibMode::LowestId,
        reconnect: ReconnectRule::Plain,
    };

    pub fn run(&self, g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
        let full = self.spt.build(g, ms.source, &ms.dests);
        let pruned = prune_spt(&full, &ms.dests);
        let cut = process_mib_nodes(&pruned, g, &ms.dests, self.mib);
        let seed = LightTree::from_spt(&cut.subtree);
        reconnect(g, ms, Some(seed), cut.cut_destinations, self.reconnect)
    }
}

pub fn mibpro(g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
    Pipeline::MIBPRO.run(g, ms)
}

pub fn mibpro2(g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
    Pipeline::MIBPRO2.run(g, ms)
}

pub fn reroute_to_any(g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
    Pipeline::R2A.run(g, ms)
}

/// Takahashi-Matsuyama style greedy growth from the bare source, restricted
/// to constrained paths.
pub fn member_only(g: &NetworkGraph, ms: &MulticastSession) -> Result<LightForest> {
    reconnect(g, ms, None, ms.dests.clone(), ReconnectRule::Plain)
}

pub fn reroute_to_source(g: &NetworkGraph, ms: &MulticastSession) -> LightForest {
    let spt = dijkstra_spt(g, ms.source, SPT_METRIC, TieBreak::SmallestId);
    reroute_tree_to_source(&prune_spt(&spt, &ms.dests), g, &ms.dests)
}

/// Splits a pruned shortest-path tree into light-trees the Reroute-to-Source
/// way. The first tree keeps the lowest-id child at every MIB node. Every
/// other child `c` of an MIB node opens a new tree made of the tree path
/// from the source to `c` plus `c`'s subtree, which is split again at its
/// own MIB nodes. Each destination therefore keeps its tree path, which is a
/// shortest path.
pub fn reroute_tree_to_source(
    t: &SptTree,
    g: &NetworkGraph,
    dests: &BTreeSet<NodeId>,
) -> LightForest {
    let s = t.root();
    let children = t.child_lists();
    let mut trees = Vec::new();
    let mut branch_roots = VecDeque::from([s]);
    while let Some(b) = branch_roots.pop_front() {
        let mut lt = LightTree::new(s);
        for w in t.path_from_root(b).windows(2) {
            lt.add_edge(w[0], w[1]);
        }
        let mut stack = vec![b];
        while let Some(v) = stack.pop() {
            if dests.contains(&v) {
                lt.served.insert(v);
            }
            let kids = &children[v.index()];
            let kept = if !g.is_mc(v) && kids.len() >= 2 {
                branch_roots.extend(kids[1..].iter().copied());
                &kids[..1]
            } else {
                &kids[..]
            };
            for &k in kept {
                lt.add_edge(v, k);
                stack.push(k);
            }
        }
        if !lt.served.is_empty() {
            trees.push(lt);
        }
    }
    LightForest {
        session: MulticastSession {
            source: s,
            dests: dests.iter().copied().filter(|&d| t.contains(d)).collect(),
        },
        trees,
    }
}
