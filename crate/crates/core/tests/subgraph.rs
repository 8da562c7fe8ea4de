mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use txgraph::subgraph::gk_from_node;
use txgraph::{gk_batch, gk_generate, synth_ledger, GkParams, NodeKind, RawBlock, RawTx, SynthConfig, TxEntry, TxGraph};

use common::LedgerShape;

fn tx(id: &str, ins: &[&str], outs: &[&str]) -> RawTx {
    RawTx {
        txid: id.into(),
        is_coinbase: ins.is_empty(),
        inputs: ins.iter().map(|a| TxEntry::new(*a, 1)).collect(),
        outputs: outs.iter().map(|a| TxEntry::new(*a, 1)).collect(),
    }
}

/// A -> Tx1 -> B -> Tx2 -> C, with a coinbase funding A.
fn path_graph() -> TxGraph {
    TxGraph::build(&[
        RawBlock {
            height: 1,
            timestamp: 1_600_000_000,
            txs: vec![tx("cb", &[], &["A"])],
        },
        RawBlock {
            height: 2,
            timestamp: 1_600_000_600,
            txs: vec![tx("Tx1", &["A"], &["B"]), tx("Tx2", &["B"], &["C"])],
        },
    ])
    .unwrap()
}

#[test]
fn path_to_depth_two() {
    let g = path_graph();
    let sub = gk_generate(&g, "B", &GkParams::new(1, 10).unwrap()).unwrap();
    let names: Vec<_> = sub.nodes.iter().map(|n| g.name(n.original)).collect();
    assert_eq!(names, ["B", "Tx1", "Tx2"]);

    // from the head of the path, hop 2 reaches B through Tx1 only
    let sub = gk_generate(&g, "C", &GkParams::new(2, 10).unwrap()).unwrap();
    let names: Vec<_> = sub.nodes.iter().map(|n| g.name(n.original)).collect();
    assert_eq!(names, ["C", "Tx2", "B"]);
    let edges: Vec<_> = sub
        .edges
        .iter()
        .map(|e| (g.name(sub.original(e.source)), g.name(sub.original(e.target))))
        .collect();
    assert_eq!(edges, [("Tx2", "C"), ("B", "Tx2")]);
    assert_eq!(sub.max_distance(), 2);
}

#[test]
fn unfunded_path_from_tail() {
    let g = TxGraph::build(&[RawBlock {
        height: 1,
        timestamp: 1_600_000_000,
        txs: vec![tx("Tx1", &["A"], &["B"]), tx("Tx2", &["B"], &["C"])],
    }])
    .unwrap();
    let sub = gk_generate(&g, "A", &GkParams::new(2, 100).unwrap()).unwrap();
    let names: Vec<_> = sub.nodes.iter().map(|n| g.name(n.original)).collect();
    assert_eq!(names, ["A", "Tx1", "B"]);
    let edges: Vec<_> = sub.edges.iter().map(|e| (e.source, e.target)).collect();
    assert_eq!(edges, [(0, 1), (1, 2)]);
}

#[test]
fn single_node_cap() {
    let g = path_graph();
    let sub = gk_generate(&g, "A", &GkParams::new(3, 1).unwrap()).unwrap();
    assert_eq!(sub.node_count(), 1);
    assert!(sub.edges.is_empty());
    assert_eq!(sub.address_count(), 1);
}

#[test]
fn invalid_params_and_unknown_seed() {
    assert!(GkParams::new(0, 1).is_err());
    assert!(GkParams::new(1, 0).is_err());
    assert!(gk_generate(&path_graph(), "Z", &GkParams::default()).is_err());
}

#[test]
fn empty_batch() {
    assert!(gk_batch(&path_graph(), &[], &GkParams::default(), 8).unwrap().is_empty());
}

#[test]
fn batch_is_parallelism_invariant() {
    let ledger = synth_ledger(&SynthConfig::default(), 3).unwrap();
    let g = TxGraph::build(&ledger.blocks).unwrap();
    let seeds = common::address_names(&g);
    let params = GkParams::new(3, 200).unwrap();
    let one = gk_batch(&g, &seeds, &params, 1).unwrap();
    let eight = gk_batch(&g, &seeds, &params, 8).unwrap();
    assert_eq!(one, eight);
}

#[test]
fn thousand_seeds() {
    let config = SynthConfig {
        blocks: 60,
        addresses_per_archetype: 40,
        ..SynthConfig::default()
    };
    let g = TxGraph::build(&synth_ledger(&config, 5).unwrap().blocks).unwrap();
    let names = common::address_names(&g);
    let seeds: Vec<String> = names.iter().cycle().take(1000).cloned().collect();
    let subs = gk_batch(&g, &seeds, &GkParams::default(), 4).unwrap();
    assert_eq!(subs.len(), 1000);
    assert!(subs.iter().all(|s| s.node_count() <= 3000));
}

fn cases() -> impl Strategy<Value = (u64, LedgerShape, usize, usize)> {
    (any::<u64>(), 2usize..30, 1usize..8, 1usize..5, 1usize..5, 1usize..6, 1usize..60).prop_map(
        |(seed, a, b, t, io, k, cap)| {
            (
                seed,
                LedgerShape {
                    addresses: a,
                    blocks: b,
                    max_txs: t,
                    max_io: io,
                },
                k,
                cap,
            )
        },
    )
}

proptest! {
    #[test]
    fn matches_bfs_oracle((seed, shape, k, cap) in cases()) {
        let g = common::random_graph(&mut common::rng(seed), shape);
        for node in g.nodes().filter(|&n| g.kind(n) == NodeKind::Address) {
            let got = gk_from_node(&g, node, &GkParams::new(k, cap).unwrap());
            let want = common::gk_oracle(&g, node, k, cap);
            let nodes: Vec<_> = got.nodes.iter().map(|n| (n.original, n.distance)).collect();
            prop_assert_eq!(nodes, want.nodes);
            let mut a: Vec<_> = got.edges.iter().map(|e| (e.source, e.target, e.attr.amount_sats, e.attr.timestamp)).collect();
            let mut b: Vec<_> = want.edges.iter().map(|e| (e.0, e.1, e.2.amount_sats, e.2.timestamp)).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn structural_invariants((seed, shape, k, cap) in cases()) {
        let g = common::random_graph(&mut common::rng(seed), shape);
        let originals: HashSet<_> = g.edges().iter().map(|e| (e.source, e.target)).collect();
        for node in g.nodes().filter(|&n| g.kind(n) == NodeKind::Address) {
            let sub = gk_from_node(&g, node, &GkParams::new(k, cap).unwrap());
            prop_assert_eq!(sub.original(0), node);
            prop_assert!(sub.address_count() + sub.tx_count() <= cap);
            prop_assert!(sub.max_distance() <= k);
            let distinct: HashSet<_> = sub.nodes.iter().map(|n| n.original).collect();
            prop_assert_eq!(distinct.len(), sub.node_count());
            for e in &sub.edges {
                prop_assert!(originals.contains(&(sub.original(e.source), sub.original(e.target))));
            }
            let again = gk_from_node(&g, node, &GkParams::new(k, cap).unwrap());
            prop_assert_eq!(&sub, &again);
        }
    }
}
