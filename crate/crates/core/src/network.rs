//! Network model: nodes with or without light splitters, weighted undirected
//! fibers, topology file ingestion and the basic graph queries the routing
//! algorithms are built on.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// 1-based node identifier, as written in topology files.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Edge weights are positive integers; the default experiments use 1.
pub type Weight = u64;

/// Splitting capability of a switch.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Splitting {
    /// Tap-and-continue only: forwards a wavelength to a single output.
    Mi,
    /// Splitter-equipped, unbounded fanout.
    Mc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub splitting: Splitting,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub u: NodeId,
    pub v: NodeId,
    pub cost: Weight,
    pub delay: Weight,
}

impl EdgeRecord {
    pub fn weight(&self, metric: Metric) -> Weight {
        match metric {
            Metric::Cost => self.cost,
            Metric::Delay => self.delay,
        }
    }
}

/// Which additive edge weight a path query minimizes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Cost,
    Delay,
}

/// Undirected, connected, simple graph with per-node splitting capability.
///
/// Immutable once built; every query is a pure function of the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    // neighbor lists sorted by neighbor id: (neighbor, edge index)
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

/// A path as a node sequence plus its length under the queried metric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub length: Weight,
}

impl NetworkGraph {
    /// Builds and validates a graph. `edges` holds `(u, v, cost, delay)`.
    pub fn new(
        node_count: usize,
        mc: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, Weight, Weight)>,
    ) -> Result<Self> {
        let mut b = Builder::new(node_count);
        for id in mc {
            b.set_mc(id, 0)?;
        }
        for (u, v, c, d) in edges {
            b.add_edge(u, v, c, d, 0)?;
        }
        b.finish()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 >= 1 && (v.0 as usize) <= self.nodes.len()
    }

    pub fn splitting(&self, v: NodeId) -> Splitting {
        self.nodes[v.index()].splitting
    }

    pub fn is_mc(&self, v: NodeId) -> bool {
        self.splitting(v) == Splitting::Mc
    }

    pub fn mc_nodes(&self) -> BTreeSet<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.splitting == Splitting::Mc)
            .map(|n| n.id)
            .collect()
    }

    /// Neighbors of `v` in ascending id order, with the connecting edge.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, &EdgeRecord)> + '_ {
        self.adjacency[v.index()]
            .iter()
            .map(move |&(w, e)| (w, &self.edges[e]))
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<&EdgeRecord> {
        let adj = &self.adjacency[u.index()];
        adj.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| &self.edges[adj[i].1])
    }

    /// Same topology with the MC set replaced by `mc`.
    pub fn with_mc_set(&self, mc: &BTreeSet<NodeId>) -> NetworkGraph {
        let mut g = self.clone();
        for n in &mut g.nodes {
            n.splitting = if mc.contains(&n.id) {
                Splitting::Mc
            } else {
                Splitting::Mi
            };
        }
        g
    }

    /// Serializes back to the topology file format.
    pub fn to_topology_string(&self) -> String {
        let mut out = format!("nodes {}\n", self.nodes.len());
        let mc = self.mc_nodes();
        if !mc.is_empty() {
            out.push_str("mc");
            for id in mc {
                out.push_str(&format!(" {id}"));
            }
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&format!("edge {} {} {} {}\n", e.u, e.v, e.cost, e.delay));
        }
        out
    }
}

struct Builder {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    seen: BTreeSet<(NodeId, NodeId)>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Builder {
            nodes: (0..n)
                .map(|i| NodeRecord {
                    id: NodeId::from_index(i),
                    splitting: Splitting::Mi,
                })
                .collect(),
            edges: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    fn check(&self, raw: u32, line: usize) -> Result<NodeId> {
        if raw == 0 || raw as usize > self.nodes.len() {
            return Err(Error::UnknownNode { line, node: raw });
        }
        Ok(NodeId(raw))
    }

    fn set_mc(&mut self, id: NodeId, line: usize) -> Result<()> {
        let id = self.check(id.0, line)?;
        self.nodes[id.index()].splitting = Splitting::Mc;
        Ok(())
    }

    fn add_edge(
        &mut self,
        u: NodeId,
        v: NodeId,
        cost: Weight,
        delay: Weight,
        line: usize,
    ) -> Result<()> {
        let u = self.check(u.0, line)?;
        let v = self.check(v.0, line)?;
        if u == v {
            return Err(Error::SelfLoop { line, node: u });
        }
        if cost == 0 || delay == 0 {
            return Err(Error::Syntax {
                line,
                msg: "edge cost and delay must be positive".into(),
            });
        }
        let key = (u.min(v), u.max(v));
        if !self.seen.insert(key) {
            return Err(Error::DuplicateEdge { line, u, v });
        }
        self.edges.push(EdgeRecord { u, v, cost, delay });
        Ok(())
    }

    fn finish(self) -> Result<NetworkGraph> {
        if self.nodes.is_empty() {
            return Err(Error::Syntax {
                line: 0,
                msg: "graph has no nodes".into(),
            });
        }
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adjacency[e.u.index()].push((e.v, i));
            adjacency[e.v.index()].push((e.u, i));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let g = NetworkGraph {
            nodes: self.nodes,
            edges: self.edges,
            adjacency,
        };
        let reach = reachable_avoiding(&g, NodeId(1), &|_| false);
        if let Some(i) = reach.iter().position(|r| !r) {
            return Err(Error::Disconnected(NodeId::from_index(i)));
        }
        Ok(g)
    }
}

/// Parses the topology text format:
///
/// ```text
/// # comment
/// nodes <N>
/// mc <id> <id> ...          (optional)
/// edge <u> <v> [cost] [delay]
/// ```
pub fn parse_topology(text: &str) -> Result<NetworkGraph> {
    let mut builder: Option<Builder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let syntax = |msg: &str| Error::Syntax {
            line,
            msg: msg.to_string(),
        };
        match keyword {
            "nodes" => {
                if builder.is_some() {
                    return Err(syntax("repeated `nodes` header"));
                }
                let [n] = args[..] else {
                    return Err(syntax("expected `nodes <N>`"));
                };
                let n: usize = n
                    .parse()
                    .map_err(|_| syntax("node count is not an integer"))?;
                builder = Some(Builder::new(n));
            }
            "mc" => {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| syntax("`mc` before `nodes` header"))?;
                for a in args {
                    let id: u32 = a
                        .parse()
                        .map_err(|_| syntax("mc node id is not an integer"))?;
                    b.set_mc(NodeId(id), line)?;
                }
            }
            "edge" => {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| syntax("`edge` before `nodes` header"))?;
                if !(2..=4).contains(&args.len()) {
                    return Err(syntax("expected `edge <u> <v> [cost] [delay]`"));
                }
                let num = |s: &str, what: &str| -> Result<u64> {
                    s.parse()
                        .map_err(|_| syntax(&format!("{what} `{s}` is not a positive integer")))
                };
                let u = num(args[0], "node id")? as u32;
                let v = num(args[1], "node id")? as u32;
                let cost = args
                    .get(2)
                    .map(|s| num(s, "cost"))
                    .transpose()?
                    .unwrap_or(1);
                let delay = args
                    .get(3)
                    .map(|s| num(s, "delay"))
                    .transpose()?
                    .unwrap_or(1);
                b.add_edge(NodeId(u), NodeId(v), cost, delay, line)?;
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    builder
        .ok_or(Error::Syntax {
            line: 0,
            msg: "missing `nodes <N>` header".into(),
        })?
        .finish()
}

/// BFS reachability from `s` with the nodes matching `removed` deleted.
pub fn reachable_avoiding(
    g: &NetworkGraph,
    s: NodeId,
    removed: &dyn Fn(NodeId) -> bool,
) -> Vec<bool> {
    let mut seen = vec![false; g.node_count()];
    if removed(s) {
        return seen;
    }
    seen[s.index()] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for (w, _) in g.neighbors(u) {
            if !seen[w.index()] && !removed(w) {
                seen[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Multi-source Dijkstra. Only nodes accepted by `expand` are relaxed
/// through; sources are always settled. Returns per-node distances.
pub(crate) fn distances_from(
    g: &NetworkGraph,
    sources: &[NodeId],
    metric: Metric,
    expand: &dyn Fn(NodeId) -> bool,
    enter: &dyn Fn(NodeId) -> bool,
) -> Vec<Option<Weight>> {
    let mut dist: Vec<Option<Weight>> = vec![None; g.node_count()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s.index()] = Some(0);
        heap.push(Reverse((0, s)));
    }
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u.index()] != Some(d) {
            continue;
        }
        if d > 0 && !expand(u) {
            continue;
        }
        for (w, e) in g.neighbors(u) {
            if !enter(w) {
                continue;
            }
            let nd = d + e.weight(metric);
            if dist[w.index()].is_none_or(|cur| nd < cur) {
                dist[w.index()] = Some(nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
    dist
}

/// Walks from `from` toward the target of `dist_to_target`, always stepping
/// to the smallest-id neighbor that stays on a shortest route. Produces the
/// lexicographically smallest shortest node sequence.
pub(crate) fn lexicographic_walk(
    g: &NetworkGraph,
    from: NodeId,
    dist_to_target: &[Option<Weight>],
    metric: Metric,
    enter: &dyn Fn(NodeId) -> bool,
) -> Vec<NodeId> {
    let mut path = vec![from];
    let mut cur = from;
    while let Some(d) = dist_to_target[cur.index()].filter(|&d| d > 0) {
        let next = g
            .neighbors(cur)
            .find(|&(w, e)| {
                enter(w) && dist_to_target[w.index()].is_some_and(|dw| dw + e.weight(metric) == d)
            })
            .map(|(w, _)| w)
            .expect("distance labels admit a predecessor");
        path.push(next);
        cur = next;
    }
    path
}

/// Shortest `u`→`v` path under `metric`; ties resolve to the
/// lexicographically smallest node sequence.
pub fn shortest_path(g: &NetworkGraph, u: NodeId, v: NodeId, metric: Metric) -> Path {
    let all = |_| true;
    let dist = distances_from(g, &[v], metric, &all, &all);
    let length = dist[u.index()].expect("validated graphs are connected");
    Path {
        nodes: lexicographic_walk(g, u, &dist, metric, &all),
        length,
    }
}

/// Shortest distances from `s` to every node.
pub fn distances(g: &NetworkGraph, s: NodeId, metric: Metric) -> Vec<Weight> {
    let all = |_| true;
    distances_from(g, &[s], metric, &all, &all)
        .into_iter()
        .map(|d| d.expect("validated graphs are connected"))
        .collect()
}

/// Per-destination separator sets with respect to one source.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArticulationReport {
    pub separators: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl ArticulationReport {
    /// `u` is a connection-constrained node: some single node cuts it off.
    pub fn is_cc(&self, u: NodeId) -> bool {
        self.separators.get(&u).is_some_and(|s| !s.is_empty())
    }

    /// `x` is a critical articulation node for `u`.
    pub fn separates(&self, x: NodeId, u: NodeId) -> bool {
        self.separators.get(&u).is_some_and(|s| s.contains(&x))
    }
}

/// For each target `u`, the set of nodes `x ∉ {u, s}` whose removal leaves
/// `u` and `s` in different components. One BFS per candidate node.
pub fn articulation_analysis(
    g: &NetworkGraph,
    s: NodeId,
    targets: &BTreeSet<NodeId>,
) -> ArticulationReport {
    let mut separators: BTreeMap<NodeId, BTreeSet<NodeId>> =
        targets.iter().map(|&u| (u, BTreeSet::new())).collect();
    for x in g.node_ids().filter(|&x| x != s) {
        let reach = reachable_avoiding(g, s, &|v| v == x);
        for (&u, seps) in separators.iter_mut() {
            if u != x && u != s && !reach[u.index()] {
                seps.insert(x);
            }
        }
    }
    ArticulationReport { separators }
}
