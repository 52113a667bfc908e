mod common;

use std::collections::BTreeSet;

use common::*;
use mibroute::algorithms::{AlgorithmId, Pipeline, SptBuilder, SPT_METRIC};
use mibroute::forest::{
    link_stress_per_fiber, metrics, parse_forest, scp, LightTree, MulticastSession, ReconnectRule,
    ReconnectionState,
};
use mibroute::mib::{branch_depth, process_mib_nodes, MibMode, Rule};
use mibroute::network::{reachable_avoiding, shortest_path};
use mibroute::reference;
use mibroute::spt::{dijkstra_spt, mib_census, prune_spt, TieBreak};
use mibroute::{Metric, NetworkGraph, NodeId, Weight};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random graph or one of the reference networks with a random MC
/// placement, plus a random session.
fn instance(seed: u64) -> (NetworkGraph, MulticastSession) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let g = match r.gen_range(0..4) {
        0 => reference::nsf(),
        1 => reference::longhaul(),
        _ => random_graph(&mut r, 12, 0.2, 3, 0.0),
    };
    let ms = random_session(&mut r, &g);
    let mc = random_mc(&mut r, &g, ms.source);
    (g.with_mc_set(&mc), ms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_algorithm_builds_a_valid_forest(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        for a in AlgorithmId::ALL {
            let f = a.run(&g, &ms).unwrap();
            prop_assert_eq!(check_forest(&f, &g, &ms), Ok(()), "{}", a);
            prop_assert_eq!(f.validate(&g), Ok(()), "{}", a);
            let m = metrics(&f, &g).unwrap();
            prop_assert!(m.stress >= 1 && m.stress <= ms.dests.len());
            prop_assert!(link_stress_per_fiber(&f) <= m.stress);
            prop_assert!(Ratio::from_integer(m.max_delay) >= m.aver_delay);
            let delays: Vec<Weight> = ms
                .dests
                .iter()
                .map(|&d| {
                    let t = f.trees.iter().find(|t| t.served.contains(&d)).unwrap();
                    tree_delay(&g, &t.edges(), ms.source, d).unwrap()
                })
                .collect();
            prop_assert_eq!(m.aver_delay * Ratio::from_integer(ms.dests.len() as u64), Ratio::from_integer(delays.iter().sum::<Weight>()));
            prop_assert_eq!(m.max_delay, *delays.iter().max().unwrap());
            let cost: Weight = f.trees.iter().flat_map(|t| t.edges()).map(|(u, v)| weight(&g, u, v, Metric::Cost)).sum();
            prop_assert_eq!(m.total_cost, cost);
            let tree_max = f.trees.iter().map(|t| t.cost(&g)).max().unwrap();
            prop_assert!(m.total_cost >= tree_max);
        }
    }

    #[test]
    fn reroute_to_source_is_a_delay_lower_bound(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        let r2s = AlgorithmId::R2S.run(&g, &ms).unwrap();
        let truth = bellman_ford(&g, ms.source);
        for t in &r2s.trees {
            for &d in &t.served {
                prop_assert_eq!(tree_delay(&g, &t.edges(), ms.source, d), Some(truth[d.index()]));
            }
        }
        let base = metrics(&r2s, &g).unwrap();
        for a in [AlgorithmId::R2A, AlgorithmId::MO, AlgorithmId::MibPro, AlgorithmId::MibPro2] {
            let m = metrics(&a.run(&g, &ms).unwrap(), &g).unwrap();
            prop_assert!(base.aver_delay <= m.aver_delay, "{}", a);
            prop_assert!(base.max_delay <= m.max_delay, "{}", a);
        }
    }

    #[test]
    fn mib_processing_invariants(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        let t = prune_spt(&dijkstra_spt(&g, ms.source, SPT_METRIC, TieBreak::Seeded(seed)), &ms.dests);
        let original_mibs = mib_census(&t, &g).mib_nodes;
        for mode in [MibMode::MibPro, MibMode::MibPro2, MibMode::LowestId] {
            let cut = process_mib_nodes(&t, &g, &ms.dests, mode);
            let sub = &cut.subtree;
            prop_assert_eq!(sub.root(), ms.source);
            prop_assert_eq!(mib_census(sub, &g).count(), 0);
            let kept: BTreeSet<NodeId> = ms.dests.iter().copied().filter(|&d| sub.contains(d)).collect();
            prop_assert!(kept.is_disjoint(&cut.cut_destinations));
            prop_assert_eq!(kept.union(&cut.cut_destinations).copied().collect::<BTreeSet<_>>(), ms.dests.clone());
            for v in sub.nodes() {
                if v != ms.source && sub.children(v).is_empty() {
                    prop_assert!(ms.dests.contains(&v), "leaf {} is not a destination", v);
                }
                prop_assert_eq!(sub.parent(v), t.parent(v));
            }
            for d in &cut.decisions {
                prop_assert!(original_mibs.contains(&d.mib));
                if let Some(b) = d.kept_branch {
                    prop_assert_eq!(t.parent(b), Some(d.mib));
                }
            }
            if mode == MibMode::MibPro2 {
                for &m in &original_mibs {
                    for c in t.children(m) {
                        for v in t.subtree(c) {
                            prop_assert!(!sub.contains(v), "{} lies below MIB node {}", v, m);
                        }
                    }
                }
            }
            if mode == MibMode::MibPro {
                for d in &cut.decisions {
                    let reach = reachable_avoiding(&g, ms.source, &|v| v == d.mib);
                    let has_cc = |c: NodeId| t.subtree(c).into_iter().any(|v| ms.dests.contains(&v) && !reach[v.index()]);
                    let kids = t.children(d.mib);
                    let kept = d.kept_branch.unwrap();
                    let qualifying: Vec<NodeId> = kids.iter().copied().filter(|&c| has_cc(c)).collect();
                    let depth = |c| branch_depth(&t, d.mib, c);
                    match d.rule_fired {
                        Rule::NoCcDeepest => {
                            prop_assert!(qualifying.is_empty());
                            prop_assert!(kids.iter().all(|&c| depth(c) < depth(kept) || (depth(c) == depth(kept) && c >= kept)));
                        }
                        Rule::OneCc => prop_assert_eq!(qualifying, vec![kept]),
                        Rule::MultiCcDeepest => {
                            prop_assert!(qualifying.len() >= 2 && qualifying.contains(&kept));
                            prop_assert!(qualifying.iter().all(|&c| depth(c) <= depth(kept)));
                        }
                        other => prop_assert!(false, "unexpected rule {:?}", other),
                    }
                }
            }
        }
    }

    #[test]
    fn connector_sets_evolve_monotonically(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        let mut state = ReconnectionState::new(LightTree::new(ms.source), ms.dests.clone(), &g);
        loop {
            let pick = state
                .remaining
                .iter()
                .filter_map(|&d| scp(d, &state, &g).map(|p| (p.length, d, p)))
                .min_by_key(|(len, d, _)| (*len, *d));
            let Some((_, _, p)) = pick else { break };
            let before_mi = state.mi_set.clone();
            let (_, route) = p.routes.into_iter().next().unwrap();
            let path: Vec<NodeId> = route.into_iter().rev().collect();
            state.attach(&path, &g);
            prop_assert!(state.mi_set.is_superset(&before_mi));
            prop_assert!(state.mc_set.is_disjoint(&state.mi_set));
            let all: BTreeSet<NodeId> = state.mc_set.union(&state.mi_set).copied().collect();
            prop_assert_eq!(all, state.tree.nodes());
            prop_assert_eq!(state.tree.validate(&g), Ok(()));
        }
    }

    #[test]
    fn algorithms_are_deterministic_and_serializable(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        for a in AlgorithmId::ALL {
            let f = a.run(&g, &ms).unwrap();
            prop_assert_eq!(&f, &a.run(&g, &ms).unwrap());
            let back = parse_forest(&f.to_string(), ms.source).unwrap();
            prop_assert_eq!(back.trees, f.trees);
        }
    }

    #[test]
    fn heuristics_reduce_to_reroute_to_any_when_they_agree(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        let plain_spt = SptBuilder::Dijkstra(TieBreak::SmallestId);
        let t = prune_spt(&plain_spt.build(&g, ms.source, &ms.dests), &ms.dests);
        let cut = process_mib_nodes(&t, &g, &ms.dests, MibMode::MibPro);
        let agrees = cut.decisions.iter().all(|d| d.kept_branch == t.children(d.mib).first().copied());
        if agrees {
            let heuristic = Pipeline { spt: plain_spt, mib: MibMode::MibPro, reconnect: ReconnectRule::Plain };
            prop_assert_eq!(heuristic.run(&g, &ms).unwrap(), AlgorithmId::R2A.run(&g, &ms).unwrap());
        }
    }

    #[test]
    fn single_destination_is_a_shortest_path(seed in any::<u64>()) {
        let (g, ms) = instance(seed);
        let d = *ms.dests.iter().next().unwrap();
        let single = MulticastSession::new(&g, ms.source, BTreeSet::from([d])).unwrap();
        let want = shortest_path(&g, ms.source, d, Metric::Delay).length;
        for a in [AlgorithmId::MibPro, AlgorithmId::MibPro2, AlgorithmId::R2S, AlgorithmId::R2A] {
            let m = metrics(&a.run(&g, &single).unwrap(), &g).unwrap();
            prop_assert_eq!(m.stress, 1);
            prop_assert_eq!(m.max_delay, want, "{}", a);
        }
        let mo = metrics(&AlgorithmId::MO.run(&g, &single).unwrap(), &g).unwrap();
        prop_assert_eq!(mo.total_cost, shortest_path(&g, ms.source, d, Metric::Cost).length);
    }
}

#[test]
fn all_split_network_needs_one_tree() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let g = random_graph(&mut r, 10, 0.3, 3, 1.0);
        let ms = random_session(&mut r, &g);
        for a in AlgorithmId::ALL {
            assert_eq!(a.run(&g, &ms).unwrap().stress(), 1, "{a}");
        }
    }
}
