//! Shortest-path trees: classic Dijkstra and the DijkstraPro variant that
//! orders equal-distance candidates by splitting capability and degree, then
//! lets childless candidates adopt children from overloaded MI candidates.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::{Metric, NetworkGraph, NodeId, Weight};

/// A rooted tree over a subset of the graph's nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SptTree {
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    dist: Vec<Option<Weight>>,
}

impl SptTree {
    pub(crate) fn from_parts(
        root: NodeId,
        parent: Vec<Option<NodeId>>,
        dist: Vec<Option<Weight>>,
    ) -> Self {
        SptTree { root, parent, dist }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.dist.get(v.index()).is_some_and(Option::is_some)
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    /// Additive distance from the root along tree edges.
    pub fn dist(&self, v: NodeId) -> Option<Weight> {
        self.dist[v.index()]
    }

    /// Tree nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.dist
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_some())
            .map(|(i, _)| NodeId::from_index(i))
    }

    pub fn len(&self) -> usize {
        self.dist.iter().filter(|d| d.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn capacity(&self) -> usize {
        self.dist.len()
    }

    /// Children of every node, each list ascending.
    pub fn child_lists(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.parent.len()];
        for v in self.nodes() {
            if let Some(p) = self.parent[v.index()] {
                out[p.index()].push(v);
            }
        }
        out
    }

    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.nodes()
            .filter(|&c| self.parent[c.index()] == Some(v))
            .collect()
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.nodes()
            .filter(|&c| self.parent[c.index()] == Some(v))
            .count()
    }

    /// Tree edges as (parent, child) pairs, ordered by child id.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes()
            .filter_map(|v| self.parent[v.index()].map(|p| (p, v)))
            .collect()
    }

    /// Nodes in breadth-first order from the root, children ascending.
    pub fn bfs_order(&self) -> Vec<NodeId> {
        let children = self.child_lists();
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(children[u.index()].iter().copied());
        }
        order
    }

    /// All nodes of the subtree rooted at `v`, `v` included.
    pub fn subtree(&self, v: NodeId) -> Vec<NodeId> {
        let children = self.child_lists();
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(children[u.index()].iter().rev().copied());
        }
        out
    }

    /// Root-to-`v` node sequence.
    pub fn path_from_root(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// Tie-breaking rule for plain Dijkstra.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TieBreak {
    /// Smallest node id wins.
    SmallestId,
    /// A seeded random priority per node.
    Seeded(u64),
}

impl TieBreak {
    fn ranks(self, n: usize) -> Vec<usize> {
        match self {
            TieBreak::SmallestId => (0..n).collect(),
            TieBreak::Seeded(seed) => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let mut rank = vec![0; n];
                for (r, i) in order.into_iter().enumerate() {
                    rank[i] = r;
                }
                rank
            }
        }
    }
}

/// Full shortest-path tree rooted at `s`. Equal-distance tentative nodes are
/// labeled in tie-break order, and among equal-length parents the preferred
/// one under the same order is kept.
pub fn dijkstra_spt(g: &NetworkGraph, s: NodeId, metric: Metric, tie: TieBreak) -> SptTree {
    let n = g.node_count();
    let rank = tie.ranks(n);
    let mut dist: Vec<Option<Weight>> = vec![None; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s.index()] = Some(0);
    heap.push(Reverse((0, rank[s.index()], s)));
    while let Some(Reverse((d, _, u))) = heap.pop() {
        if done[u.index()] || dist[u.index()] != Some(d) {
            continue;
        }
        done[u.index()] = true;
        for (w, e) in g.neighbors(u) {
            if done[w.index()] {
                continue;
            }
            let nd = d + e.weight(metric);
            match dist[w.index()] {
                Some(cur) if nd > cur => {}
                Some(cur) if nd == cur => {
                    let p = parent[w.index()].expect("tentative node has a parent");
                    if rank[u.index()] < rank[p.index()] {
                        parent[w.index()] = Some(u);
                    }
                }
                _ => {
                    dist[w.index()] = Some(nd);
                    parent[w.index()] = Some(u);
                    heap.push(Reverse((nd, rank[w.index()], w)));
                }
            }
        }
    }
    SptTree {
        root: s,
        parent,
        dist,
    }
}

/// Which DijkstraPro refinements are active. All on by default.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ProOptions {
    pub mc_priority: bool,
    pub degree_priority: bool,
    pub adoption: bool,
}

impl Default for ProOptions {
    fn default() -> Self {
        ProOptions {
            mc_priority: true,
            degree_priority: true,
            adoption: true,
        }
    }
}

/// DijkstraPro: labels nodes level by level, where a level is every
/// tentative node at the current minimum distance. Inside a level MC nodes
/// go first, then MI nodes by ascending degree, then by id. Once the level
/// is labeled and relaxed, node adoption runs among its members.
pub fn dijkstra_pro_spt(
    g: &NetworkGraph,
    s: NodeId,
    dests: &BTreeSet<NodeId>,
    metric: Metric,
    opts: ProOptions,
) -> SptTree {
    let n = g.node_count();
    let mut dist: Vec<Option<Weight>> = vec![None; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    dist[s.index()] = Some(0);
    while let Some(level_dist) = (0..n).filter(|&i| !done[i]).filter_map(|i| dist[i]).min() {
        let mut level: Vec<NodeId> = (0..n)
            .filter(|&i| !done[i] && dist[i] == Some(level_dist))
            .map(NodeId::from_index)
            .collect();
        level.sort_by_key(|&v| {
            let mc = g.is_mc(v);
            let class = usize::from(opts.mc_priority && !mc);
            let degree = if opts.degree_priority && !mc {
                g.degree(v)
            } else {
                0
            };
            (class, degree, v)
        });
        for &x in &level {
            done[x.index()] = true;
            for (w, e) in g.neighbors(x) {
                if done[w.index()] {
                    continue;
                }
                let nd = level_dist + e.weight(metric);
                if dist[w.index()].is_none_or(|cur| nd < cur) {
                    dist[w.index()] = Some(nd);
                    parent[w.index()] = Some(x);
                }
            }
        }
        if opts.adoption {
            level.sort_unstable();
            adopt_children(&mut parent, &dist, &level, g, dests, metric);
        }
    }
    SptTree {
        root: s,
        parent,
        dist,
    }
}

/// Node adoption among the members of one fully labeled level.
///
/// An MI member with two or more children donates children to members with
/// none, provided the child keeps its shortest distance through the adopter.
/// Destination children move first. An MI adopter takes a single child, an
/// MC adopter as many as the donor can spare. Donors, adopters and children
/// are scanned in ascending id order.
pub fn adopt_children(
    parent: &mut [Option<NodeId>],
    dist: &[Option<Weight>],
    level: &[NodeId],
    g: &NetworkGraph,
    dests: &BTreeSet<NodeId>,
    metric: Metric,
) {
    let children_of = |parent: &[Option<NodeId>], x: NodeId| -> Vec<NodeId> {
        let mut c: Vec<NodeId> = (0..parent.len())
            .filter(|&i| parent[i] == Some(x))
            .map(NodeId::from_index)
            .collect();
        c.sort_by_key(|v| (!dests.contains(v), *v));
        c
    };
    loop {
        let mut changed = false;
        for &donor in level {
            if g.is_mc(donor) {
                continue;
            }
            for &adopter in level {
                let kids = children_of(parent, donor);
                if kids.len() < 2 {
                    break;
                }
                if adopter == donor || !children_of(parent, adopter).is_empty() {
                    continue;
                }
                let Some(base) = dist[adopter.index()] else {
                    continue;
                };
                let mut spare = kids.len() - 1;
                for c in kids {
                    if spare == 0 {
                        break;
                    }
                    let legal = g
                        .edge_between(adopter, c)
                        .is_some_and(|e| Some(base + e.weight(metric)) == dist[c.index()]);
                    if legal {
                        parent[c.index()] = Some(adopter);
                        changed = true;
                        spare -= 1;
                        if !g.is_mc(adopter) {
                            break;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Smallest subtree containing the root and every destination.
pub fn prune_spt(t: &SptTree, dests: &BTreeSet<NodeId>) -> SptTree {
    let n = t.capacity();
    let mut keep = vec![false; n];
    keep[t.root.index()] = true;
    for &d in dests {
        if !t.contains(d) {
            continue;
        }
        let mut cur = Some(d);
        while let Some(v) = cur {
            if keep[v.index()] && v != d {
                break;
            }
            keep[v.index()] = true;
            cur = t.parent[v.index()];
        }
    }
    SptTree {
        root: t.root,
        parent: (0..n)
            .map(|i| if keep[i] { t.parent[i] } else { None })
            .collect(),
        dist: (0..n)
            .map(|i| if keep[i] { t.dist[i] } else { None })
            .collect(),
    }
}

/// MI nodes branching into two or more children.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MibCensus {
    pub mib_nodes: BTreeSet<NodeId>,
    pub out_degree: BTreeMap<NodeId, usize>,
}

impl MibCensus {
    pub fn count(&self) -> usize {
        self.mib_nodes.len()
    }
}

pub fn mib_census(t: &SptTree, g: &NetworkGraph) -> MibCensus {
    let children = t.child_lists();
    let out_degree: BTreeMap<NodeId, usize> =
        t.nodes().map(|v| (v, children[v.index()].len())).collect();
    let mib_nodes = out_degree
        .iter()
        .filter(|&(&v, &deg)| !g.is_mc(v) && deg >= 2)
        .map(|(&v, _)| v)
        .collect();
    MibCensus {
        mib_nodes,
        out_degree,
    }
}

/// Link stress of a pruned tree once its MIB nodes are resolved the
/// Reroute-to-Source way: the most wavelengths any single fiber carries.
pub fn spt_link_stress(t: &SptTree, g: &NetworkGraph, dests: &BTreeSet<NodeId>) -> usize {
    let forest = crate::algorithms::reroute_tree_to_source(t, g, dests);
    crate::forest::link_stress_per_fiber(&forest)
}
