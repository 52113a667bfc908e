//! Light-trees, light-forests, the shortest constrained path (SCP) search and
//! the greedy reconnection engine shared by Member-Only, Reroute-to-Any and
//! the distance-based reconnection of MIBPro.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::network::{
    distances, distances_from, lexicographic_walk, Metric, NetworkGraph, NodeId, Weight,
};
use crate::spt::SptTree;

/// One source and the destinations it must reach.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MulticastSession {
    pub source: NodeId,
    pub dests: BTreeSet<NodeId>,
}

impl MulticastSession {
    pub fn new(g: &NetworkGraph, source: NodeId, dests: BTreeSet<NodeId>) -> Result<Self> {
        if !g.contains(source) {
            return Err(Error::Session(format!(
                "source {source} is not in the graph"
            )));
        }
        if dests.is_empty() {
            return Err(Error::Session("destination set is empty".into()));
        }
        if dests.contains(&source) {
            return Err(Error::Session(format!(
                "source {source} is also a destination"
            )));
        }
        if let Some(d) = dests.iter().find(|&&d| !g.contains(d)) {
            return Err(Error::Session(format!(
                "destination {d} is not in the graph"
            )));
        }
        Ok(MulticastSession { source, dests })
    }
}

/// A tree on one wavelength, rooted at the session source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LightTree {
    root: NodeId,
    parent: BTreeMap<NodeId, NodeId>,
    pub served: BTreeSet<NodeId>,
}

impl LightTree {
    pub fn new(root: NodeId) -> Self {
        LightTree {
            root,
            parent: BTreeMap::new(),
            served: BTreeSet::new(),
        }
    }

    /// Copies the edges of an SPT-shaped tree; `served` starts empty.
    pub fn from_spt(t: &SptTree) -> Self {
        let mut lt = LightTree::new(t.root());
        for (p, c) in t.edges() {
            lt.parent.insert(c, p);
        }
        lt
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v == self.root || self.parent.contains_key(&v)
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(&v).copied()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> BTreeSet<NodeId> {
        std::iter::once(self.root)
            .chain(self.parent.keys().copied())
            .collect()
    }

    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.parent
            .iter()
            .filter(|&(_, &p)| p == v)
            .map(|(&c, _)| c)
            .collect()
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.parent.values().filter(|&&p| p == v).count()
    }

    /// (parent, child) pairs in breadth-first order from the root.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&c, &p) in &self.parent {
            children.entry(p).or_default().push(c);
        }
        let mut out = Vec::with_capacity(self.parent.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            for &c in children.get(&u).map(Vec::as_slice).unwrap_or_default() {
                out.push((u, c));
                queue.push_back(c);
            }
        }
        out
    }

    pub fn add_edge(&mut self, parent: NodeId, child: NodeId) {
        debug_assert!(self.contains(parent) && !self.contains(child));
        self.parent.insert(child, parent);
    }

    /// Root-to-`v` node sequence, `None` if `v` is not in the tree or the
    /// parent chain loops.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        if !self.contains(v) {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != self.root {
            cur = *self.parent.get(&cur)?;
            if path.len() > self.parent.len() {
                return None;
            }
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Additive weight from the root to `v` along tree edges.
    pub fn distance_to(&self, v: NodeId, g: &NetworkGraph, metric: Metric) -> Option<Weight> {
        let path = self.path_to(v)?;
        path.windows(2)
            .map(|w| g.edge_between(w[0], w[1]).map(|e| e.weight(metric)))
            .sum()
    }

    pub fn cost(&self, g: &NetworkGraph) -> Weight {
        self.parent
            .iter()
            .map(|(&c, &p)| g.edge_between(p, c).map_or(0, |e| e.cost))
            .sum()
    }

    /// Structural checks: real edges, acyclic and rooted, no MI node
    /// splitting, served destinations inside the tree.
    pub fn validate(&self, g: &NetworkGraph) -> std::result::Result<(), String> {
        if !g.contains(self.root) {
            return Err(format!("root {} not in graph", self.root));
        }
        if self.parent.contains_key(&self.root) {
            return Err("root has a parent".into());
        }
        for (&c, &p) in &self.parent {
            if g.edge_between(p, c).is_none() {
                return Err(format!("{p}-{c} is not a fiber link"));
            }
            if self.path_to(c).is_none() {
                return Err(format!("node {c} does not reach the root"));
            }
        }
        for v in self.nodes() {
            if !g.is_mc(v) && self.out_degree(v) > 1 {
                return Err(format!(
                    "MI node {v} splits into {} branches",
                    self.out_degree(v)
                ));
            }
        }
        if let Some(d) = self.served.iter().find(|&&d| !self.contains(d)) {
            return Err(format!("served destination {d} is not in the tree"));
        }
        Ok(())
    }
}

/// All light-trees of one session; tree `i` uses wavelength `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LightForest {
    pub session: MulticastSession,
    pub trees: Vec<LightTree>,
}

impl LightForest {
    pub fn stress(&self) -> usize {
        self.trees.len()
    }

    /// Index of the tree serving `d`.
    pub fn serving_tree(&self, d: NodeId) -> Option<&LightTree> {
        self.trees.iter().find(|t| t.served.contains(&d))
    }

    /// Checks every tree plus the partition of the destination set.
    pub fn validate(&self, g: &NetworkGraph) -> std::result::Result<(), String> {
        if self.trees.is_empty() {
            return Err("forest has no trees".into());
        }
        let mut seen = BTreeSet::new();
        for (i, t) in self.trees.iter().enumerate() {
            if t.root != self.session.source {
                return Err(format!(
                    "tree {} is rooted at {}, not the source",
                    i + 1,
                    t.root
                ));
            }
            if t.served.is_empty() {
                return Err(format!("tree {} serves nobody", i + 1));
            }
            t.validate(g).map_err(|e| format!("tree {}: {e}", i + 1))?;
            for &d in &t.served {
                if !self.session.dests.contains(&d) {
                    return Err(format!("tree {} serves non-destination {d}", i + 1));
                }
                if !seen.insert(d) {
                    return Err(format!("destination {d} is served twice"));
                }
            }
        }
        if seen != self.session.dests {
            let missing: Vec<String> = self
                .session
                .dests
                .difference(&seen)
                .map(|d| d.to_string())
                .collect();
            return Err(format!("unserved destinations: {}", missing.join(",")));
        }
        Ok(())
    }
}

impl fmt::Display for LightForest {
    /// `tree <i>: edge <u>-<v> ...; serves <d,...>`, one line per tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.trees.iter().enumerate() {
            write!(f, "tree {}: edge", i + 1)?;
            for (u, v) in t.edges() {
                write!(f, " {u}-{v}")?;
            }
            let served: Vec<String> = t.served.iter().map(|d| d.to_string()).collect();
            writeln!(f, "; serves {}", served.join(","))?;
        }
        Ok(())
    }
}

/// Parses the text form written by `Display`.
pub fn parse_forest(text: &str, source: NodeId) -> Result<LightForest> {
    let mut trees = Vec::new();
    let mut dests = BTreeSet::new();
    for (i, raw) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let syntax = |msg: &str| Error::Syntax {
            line: i + 1,
            msg: msg.to_string(),
        };
        let rest = raw
            .trim()
            .strip_prefix("tree ")
            .and_then(|r| r.split_once(':'))
            .ok_or_else(|| syntax("expected `tree <i>:`"))?
            .1;
        let (edge_part, serves_part) = rest
            .split_once(';')
            .ok_or_else(|| syntax("missing `; serves`"))?;
        let edge_list = edge_part
            .trim()
            .strip_prefix("edge")
            .ok_or_else(|| syntax("expected `edge`"))?;
        let id = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map(NodeId)
                .map_err(|_| syntax("bad node id"))
        };
        let mut lt = LightTree::new(source);
        for pair in edge_list.split_whitespace() {
            let (u, v) = pair
                .split_once('-')
                .ok_or_else(|| syntax("edge must be `u-v`"))?;
            lt.parent.insert(id(v)?, id(u)?);
        }
        let served = serves_part
            .trim()
            .strip_prefix("serves")
            .ok_or_else(|| syntax("expected `serves`"))?;
        for d in served.split(',').filter(|s| !s.trim().is_empty()) {
            let d = id(d)?;
            lt.served.insert(d);
            dests.insert(d);
        }
        trees.push(lt);
    }
    Ok(LightForest {
        session: MulticastSession { source, dests },
        trees,
    })
}

/// Per-session quality figures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricsReport {
    /// Number of light-trees (wavelengths).
    pub stress: usize,
    /// Wavelength channels used, summed over all trees.
    pub total_cost: Weight,
    pub aver_delay: Ratio<u64>,
    pub max_delay: Weight,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stress={} cost={} aver_delay={} max_delay={}",
            self.stress, self.total_cost, self.aver_delay, self.max_delay
        )
    }
}

/// Delay of the lightpath from the source to each destination inside the
/// tree serving it.
pub fn destination_delays(f: &LightForest, g: &NetworkGraph) -> Result<BTreeMap<NodeId, Weight>> {
    f.session
        .dests
        .iter()
        .map(|&d| {
            let delay = f
                .serving_tree(d)
                .and_then(|t| t.distance_to(d, g, Metric::Delay))
                .ok_or_else(|| {
                    Error::Invariant(format!("destination {d} is not served by any tree"))
                })?;
            Ok((d, delay))
        })
        .collect()
}

pub fn metrics(f: &LightForest, g: &NetworkGraph) -> Result<MetricsReport> {
    let delays = destination_delays(f, g)?;
    let sum: Weight = delays.values().sum();
    Ok(MetricsReport {
        stress: f.stress(),
        total_cost: f.trees.iter().map(|t| t.cost(g)).sum(),
        aver_delay: Ratio::new(sum, delays.len() as u64),
        max_delay: delays.values().copied().max().unwrap_or(0),
    })
}

/// Most light-trees sharing a single fiber. Never exceeds the stress.
pub fn link_stress_per_fiber(f: &LightForest) -> usize {
    let mut histogram: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for t in &f.trees {
        for (u, v) in t.edges() {
            *histogram.entry((u.min(v), u.max(v))).or_default() += 1;
        }
    }
    histogram.into_values().max().unwrap_or(0)
}

/// A tree under construction with its connector (MC_SET) and blocked
/// (MI_SET) node sets.
#[derive(Clone, Debug)]
pub struct ReconnectionState {
    pub tree: LightTree,
    pub mc_set: BTreeSet<NodeId>,
    pub mi_set: BTreeSet<NodeId>,
    pub remaining: BTreeSet<NodeId>,
}

impl ReconnectionState {
    /// Classifies every node of `tree`: MC nodes and leaf MI nodes are
    /// connectors, non-leaf MI nodes are blocked.
    pub fn new(tree: LightTree, remaining: BTreeSet<NodeId>, g: &NetworkGraph) -> Self {
        let mut mc_set = BTreeSet::new();
        let mut mi_set = BTreeSet::new();
        for v in tree.nodes() {
            if g.is_mc(v) || tree.out_degree(v) == 0 {
                mc_set.insert(v);
            } else {
                mi_set.insert(v);
            }
        }
        ReconnectionState {
            tree,
            mc_set,
            mi_set,
            remaining,
        }
    }

    /// Grafts `path` (connector first, new leaf last) onto the tree.
    /// Remaining destinations picked up along the way are served.
    pub fn attach(&mut self, path: &[NodeId], g: &NetworkGraph) {
        let (&connector, rest) = path.split_first().expect("path has a connector");
        if !g.is_mc(connector) {
            self.mc_set.remove(&connector);
            self.mi_set.insert(connector);
        }
        let mut prev = connector;
        for (i, &v) in rest.iter().enumerate() {
            self.tree.add_edge(prev, v);
            let leaf = i + 1 == rest.len();
            if g.is_mc(v) || leaf {
                self.mc_set.insert(v);
            } else {
                self.mi_set.insert(v);
            }
            if self.remaining.remove(&v) {
                self.tree.served.insert(v);
            }
            prev = v;
        }
    }

    /// Distance from every node to its nearest connector, through nodes
    /// outside the tree only.
    fn distances_to_tree(&self, g: &NetworkGraph) -> Vec<Option<Weight>> {
        let sources: Vec<NodeId> = self.mc_set.iter().copied().collect();
        let outside = |v: NodeId| !self.tree.contains(v);
        distances_from(g, &sources, Metric::Cost, &outside, &outside)
    }
}

/// Minimal constrained paths from a node to the tree: one entry per
/// connector reachable at the minimal length, each with the
/// lexicographically smallest path starting at the node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scp {
    pub length: Weight,
    pub routes: Vec<(NodeId, Vec<NodeId>)>,
}

/// Shortest constrained path from `u` to the tree: it ends at a connector
/// and touches no blocked node. Interior nodes lie outside the tree, since
/// reaching any tree node earlier would make that node the nearer connector.
pub fn scp(u: NodeId, state: &ReconnectionState, g: &NetworkGraph) -> Option<Scp> {
    debug_assert!(!state.tree.contains(u));
    let outside = |v: NodeId| !state.tree.contains(v);
    let enter = |v: NodeId| outside(v) || state.mc_set.contains(&v);
    let dist = distances_from(g, &[u], Metric::Cost, &outside, &enter);
    let length = state.mc_set.iter().filter_map(|c| dist[c.index()]).min()?;
    let routes = state
        .mc_set
        .iter()
        .filter(|c| dist[c.index()] == Some(length))
        .map(|&c| {
            let to_c = distances_from(g, &[c], Metric::Cost, &outside, &outside);
            let step = |v: NodeId| outside(v) || v == c;
            (c, lexicographic_walk(g, u, &to_c, Metric::Cost, &step))
        })
        .collect();
    Some(Scp { length, routes })
}

/// How ties are broken when several destinations or connectors qualify.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ReconnectRule {
    /// Smallest id for both choices (Member-Only style).
    Plain,
    /// Destination nearest to the source in the graph first, then the
    /// connector nearest to the source along the tree; smallest id last.
    DistanceBased,
}

/// Greedy light-tree reconnection. Starting from `seed` (or the bare
/// source), repeatedly attaches the destination with the shortest SCP; when
/// none can attach, the tree is closed and a new one starts at the source.
pub fn reconnect(
    g: &NetworkGraph,
    session: &MulticastSession,
    seed: Option<LightTree>,
    remaining: BTreeSet<NodeId>,
    rule: ReconnectRule,
) -> Result<LightForest> {
    let s = session.source;
    let to_source = distances(g, s, Metric::Delay);
    let mut trees = Vec::new();
    let mut remaining = remaining;
    let mut seed = seed.unwrap_or_else(|| LightTree::new(s));
    for v in seed.nodes() {
        if session.dests.contains(&v) {
            remaining.remove(&v);
            seed.served.insert(v);
        }
    }
    let mut state = ReconnectionState::new(seed, remaining, g);
    loop {
        while let Some(d) = next_destination(&state, g, rule, &to_source) {
            let found = scp(d, &state, g).expect("chosen destination has a constrained path");
            let (connector, path) = found
                .routes
                .into_iter()
                .min_by_key(|(c, _)| match rule {
                    ReconnectRule::Plain => (0, *c),
                    ReconnectRule::DistanceBased => (
                        state
                            .tree
                            .distance_to(*c, g, Metric::Delay)
                            .unwrap_or(Weight::MAX),
                        *c,
                    ),
                })
                .expect("at least one route");
            debug_assert_eq!(path.last(), Some(&connector));
            let grafted: Vec<NodeId> = path.into_iter().rev().collect();
            state.attach(&grafted, g);
        }
        let ReconnectionState {
            tree, remaining, ..
        } = state;
        let stuck = remaining.len();
        let fresh_start = tree.parent.is_empty();
        if !tree.served.is_empty() {
            trees.push(tree);
        }
        if remaining.is_empty() {
            break;
        }
        if fresh_start {
            return Err(Error::Invariant(format!(
                "{stuck} destinations cannot reach source {s}"
            )));
        }
        state = ReconnectionState::new(LightTree::new(s), remaining, g);
    }
    Ok(LightForest {
        session: session.clone(),
        trees,
    })
}

fn next_destination(
    state: &ReconnectionState,
    g: &NetworkGraph,
    rule: ReconnectRule,
    to_source: &[Weight],
) -> Option<NodeId> {
    if state.remaining.is_empty() {
        return None;
    }
    let dist = state.distances_to_tree(g);
    state
        .remaining
        .iter()
        .filter_map(|&d| dist[d.index()].map(|len| (d, len)))
        .min_by_key(|&(d, len)| match rule {
            ReconnectRule::Plain => (len, 0, d),
            ReconnectRule::DistanceBased => (len, to_source[d.index()], d),
        })
        .map(|(d, _)| d)
}
