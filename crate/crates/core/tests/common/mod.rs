#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mibroute::forest::{LightForest, MulticastSession};
use mibroute::{Metric, NetworkGraph, NodeId, Weight};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn set(v: &[u32]) -> BTreeSet<NodeId> {
    v.iter().map(|&i| NodeId(i)).collect()
}

/// Connected graph on `2..=max_nodes` nodes: a random spanning tree plus
/// each remaining pair with probability `extra`. Costs and delays are drawn
/// independently from `1..=max_weight`.
pub fn random_graph(
    rng: &mut impl Rng,
    max_nodes: usize,
    extra: f64,
    max_weight: u64,
    mc_prob: f64,
) -> NetworkGraph {
    let n = rng.gen_range(2..=max_nodes);
    let mut pairs = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        pairs.insert((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(extra) {
                pairs.insert((i, j));
            }
        }
    }
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| {
            (
                NodeId::from_index(a),
                NodeId::from_index(b),
                rng.gen_range(1..=max_weight),
                rng.gen_range(1..=max_weight),
            )
        })
        .collect();
    let mc: Vec<NodeId> = (0..n)
        .filter(|_| rng.gen_bool(mc_prob))
        .map(NodeId::from_index)
        .collect();
    NetworkGraph::new(n, mc, edges).expect("generator builds valid graphs")
}

pub fn random_session(rng: &mut impl Rng, g: &NetworkGraph) -> MulticastSession {
    let nodes: Vec<NodeId> = g.node_ids().collect();
    let s = *nodes.choose(rng).unwrap();
    let others: Vec<NodeId> = nodes.iter().copied().filter(|&v| v != s).collect();
    let k = rng.gen_range(1..=others.len());
    let dests = others.choose_multiple(rng, k).copied().collect();
    MulticastSession::new(g, s, dests).unwrap()
}

/// Source plus a uniformly sized random set of other nodes.
pub fn random_mc(rng: &mut impl Rng, g: &NetworkGraph, s: NodeId) -> BTreeSet<NodeId> {
    let others: Vec<NodeId> = g.node_ids().filter(|&v| v != s).collect();
    let k = rng.gen_range(0..=others.len());
    let mut mc: BTreeSet<NodeId> = others.choose_multiple(rng, k).copied().collect();
    mc.insert(s);
    mc
}

pub fn weight(g: &NetworkGraph, u: NodeId, v: NodeId, metric: Metric) -> Weight {
    g.edge_between(u, v)
        .expect("path uses graph edges")
        .weight(metric)
}

pub fn path_length(g: &NetworkGraph, path: &[NodeId], metric: Metric) -> Weight {
    path.windows(2).map(|w| weight(g, w[0], w[1], metric)).sum()
}

/// Calls `visit` on every simple path starting at `from` (including the
/// one-node path). Nodes for which `blocked` holds are never entered.
pub fn simple_paths(
    g: &NetworkGraph,
    from: NodeId,
    blocked: &dyn Fn(NodeId) -> bool,
    visit: &mut dyn FnMut(&[NodeId]),
) {
    fn go(
        g: &NetworkGraph,
        path: &mut Vec<NodeId>,
        on: &mut [bool],
        blocked: &dyn Fn(NodeId) -> bool,
        visit: &mut dyn FnMut(&[NodeId]),
    ) {
        visit(path);
        let last = *path.last().unwrap();
        let next: Vec<NodeId> = g.neighbors(last).map(|(w, _)| w).collect();
        for w in next {
            if on[w.index()] || blocked(w) {
                continue;
            }
            on[w.index()] = true;
            path.push(w);
            go(g, path, on, blocked, visit);
            path.pop();
            on[w.index()] = false;
        }
    }
    let mut on = vec![false; g.node_count()];
    on[from.index()] = true;
    go(g, &mut vec![from], &mut on, blocked, visit);
}

/// Shortest length and lexicographically smallest shortest path from
/// `from` to every node, by exhaustive enumeration.
pub fn brute_shortest(
    g: &NetworkGraph,
    from: NodeId,
    metric: Metric,
) -> BTreeMap<NodeId, (Weight, Vec<NodeId>)> {
    let mut best: BTreeMap<NodeId, (Weight, Vec<NodeId>)> = BTreeMap::new();
    simple_paths(g, from, &|_| false, &mut |p| {
        let len = path_length(g, p, metric);
        let end = *p.last().unwrap();
        let better = match best.get(&end) {
            None => true,
            Some((l, q)) => len < *l || (len == *l && p < q.as_slice()),
        };
        if better {
            best.insert(end, (len, p.to_vec()));
        }
    });
    best
}

/// Nodes other than `s` and `u` lying on every simple `s`-`u` path.
pub fn brute_separators(g: &NetworkGraph, s: NodeId) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut common: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    simple_paths(g, s, &|_| false, &mut |p| {
        if p.len() < 2 {
            return;
        }
        let end = p[p.len() - 1];
        let inner: BTreeSet<NodeId> = p[1..p.len() - 1].iter().copied().collect();
        common
            .entry(end)
            .and_modify(|c| c.retain(|v| inner.contains(v)))
            .or_insert(inner);
    });
    common
}

/// Delay from the root to `d` walking the tree's edge list upward.
pub fn tree_delay(
    g: &NetworkGraph,
    edges: &[(NodeId, NodeId)],
    root: NodeId,
    d: NodeId,
) -> Option<Weight> {
    let parent: BTreeMap<NodeId, NodeId> = edges.iter().map(|&(p, c)| (c, p)).collect();
    let mut total = 0;
    let mut v = d;
    let mut steps = 0;
    while v != root {
        let p = *parent.get(&v)?;
        total += weight(g, p, v, Metric::Delay);
        v = p;
        steps += 1;
        if steps > edges.len() {
            return None;
        }
    }
    Some(total)
}

/// Checks a forest from scratch: each tree is a rooted arborescence of
/// graph edges, MI nodes forward to at most one child, served sets are
/// reachable, pairwise disjoint and cover the destination set exactly.
pub fn check_forest(
    f: &LightForest,
    g: &NetworkGraph,
    ms: &MulticastSession,
) -> Result<(), String> {
    if f.trees.is_empty() {
        return Err("no trees".into());
    }
    let mut covered = BTreeSet::new();
    for (i, t) in f.trees.iter().enumerate() {
        let edges = t.edges();
        if t.root() != ms.source {
            return Err(format!("tree {i} rooted at {}", t.root()));
        }
        let mut parents: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut out: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &(p, c) in &edges {
            if g.edge_between(p, c).is_none() {
                return Err(format!("tree {i} uses missing edge {p}-{c}"));
            }
            if parents.insert(c, p).is_some() || c == ms.source {
                return Err(format!("tree {i}: {c} has two parents"));
            }
            *out.entry(p).or_default() += 1;
        }
        for (&v, &k) in &out {
            if !g.is_mc(v) && k > 1 {
                return Err(format!("tree {i}: MI node {v} has out-degree {k}"));
            }
        }
        for &c in parents.keys() {
            if tree_delay(g, &edges, ms.source, c).is_none() {
                return Err(format!("tree {i}: {c} does not reach the root"));
            }
        }
        if t.served.is_empty() {
            return Err(format!("tree {i} serves nothing"));
        }
        for &d in &t.served {
            if !parents.contains_key(&d) {
                return Err(format!("tree {i} serves {d} outside the tree"));
            }
            if !covered.insert(d) {
                return Err(format!("{d} served twice"));
            }
        }
    }
    if covered != ms.dests {
        return Err(format!(
            "served {covered:?} but destinations are {:?}",
            ms.dests
        ));
    }
    Ok(())
}

/// Plain Bellman-Ford distances on delay.
pub fn bellman_ford(g: &NetworkGraph, s: NodeId) -> Vec<Weight> {
    let mut d = vec![Weight::MAX; g.node_count()];
    d[s.index()] = 0;
    for _ in 0..g.node_count() {
        for e in g.edges() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if d[a.index()] != Weight::MAX && d[a.index()] + e.delay < d[b.index()] {
                    d[b.index()] = d[a.index()] + e.delay;
                }
            }
        }
    }
    d
}

/// Minimal length over simple paths from `u` to any connector that never
/// enter a blocked node, with the lexicographically smallest such path per
/// connector reached at that length.
pub fn brute_scp(
    g: &NetworkGraph,
    u: NodeId,
    connectors: &BTreeSet<NodeId>,
    blocked: &BTreeSet<NodeId>,
) -> Option<(Weight, BTreeMap<NodeId, Vec<NodeId>>)> {
    let mut best: Option<(Weight, BTreeMap<NodeId, Vec<NodeId>>)> = None;
    simple_paths(g, u, &|v| blocked.contains(&v), &mut |p| {
        let end = p[p.len() - 1];
        if !connectors.contains(&end) {
            return;
        }
        let len = path_length(g, p, Metric::Cost);
        match &mut best {
            Some((l, _)) if len > *l => {}
            Some((l, routes)) if len == *l => {
                let e = routes.entry(end).or_insert_with(|| p.to_vec());
                if p < e.as_slice() {
                    *e = p.to_vec();
                }
            }
            _ => best = Some((len, BTreeMap::from([(end, p.to_vec())]))),
        }
    });
    best
}
