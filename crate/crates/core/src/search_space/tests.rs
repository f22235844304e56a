use proptest::prelude::*;

use super::*;
use crate::error::Error;

fn range(lo: i64, hi: i64) -> ValueRange {
    ValueRange::new(lo, hi).unwrap()
}

#[test]
fn stack_layers_graph_shape() {
    let g = build_stack_layers(Variant::Graph, 10).unwrap();
    assert!(g.validate().is_empty());
    assert_eq!(g.decision_vertices().count(), 1);
    assert_eq!(g.num_edges(), 2);
    assert_eq!(g.edges().iter().filter(|e| e.source == e.target).count(), 1);
    assert_eq!(g.out_degree(g.start()), 2);
}

#[test]
fn stack_layers_linear_shape() {
    let g = build_stack_layers(Variant::Linear, 10).unwrap();
    assert!(g.validate().is_empty());
    let decisions: Vec<_> = g.decision_vertices().collect();
    assert_eq!(decisions.len(), 20);
    assert!(decisions.iter().all(|&v| g.out_degree(v) == 2));
    assert_eq!(g.terminal_vertices().count(), 1);
}

#[test]
fn stack_layers_rejects_zero_depth() {
    assert!(build_stack_layers(Variant::Graph, 0).is_err());
    assert!(build_stack_layers(Variant::Linear, 0).is_err());
}

#[test]
fn linear_chain_of_paper_size() {
    let g = build_linear_chain(&LinearChainSpec::new(vec![2; 20])).unwrap();
    assert_eq!(g.decision_vertices().count(), 20);
    assert_eq!(g.terminal_vertices().count(), 1);
    assert_eq!(g.num_edges(), 40);
}

#[test]
fn linear_chain_single_forced_action() {
    let g = build_linear_chain(&LinearChainSpec::new(vec![1])).unwrap();
    let all = enumerate_trajectories(&g, 5).unwrap();
    assert_eq!(all.len(), 1);
    assert_eq!(all[0].len(), 1);
}

#[test]
fn linear_chain_counts_follow_product_rule() {
    let g = build_linear_chain(&LinearChainSpec::new(vec![2, 3])).unwrap();
    let all = enumerate_trajectories(&g, 10).unwrap();
    assert_eq!(all.len(), 6);
    assert!(all.iter().all(|t| t.len() == 2));
}

#[test]
fn linear_chain_rejects_bad_specs() {
    assert!(build_linear_chain(&LinearChainSpec::new(vec![])).is_err());
    assert!(build_linear_chain(&LinearChainSpec::new(vec![2, 0])).is_err());
}

#[test]
fn select_optimizer_graph_shape() {
    let g = build_select_optimizer(Variant::Graph, 2, range(1, 100)).unwrap();
    assert!(g.validate().is_empty());
    assert_eq!(g.decision_vertices().count(), 1 + 8);
    assert_eq!(g.out_degree(g.start()), 2);
    let small = build_select_optimizer(Variant::Graph, 2, range(1, 2)).unwrap();
    let all = enumerate_trajectories(&small, 10).unwrap();
    assert_eq!(all.len(), 2 * 2usize.pow(4));
    assert!(all.iter().all(|t| t.len() == 5));
}

#[test]
fn select_optimizer_linear_trajectories_have_length_one_plus_four_b() {
    let g = build_select_optimizer(Variant::Linear, 4, range(1, 100)).unwrap();
    assert!(g.validate().is_empty());
    assert_eq!(g.decision_vertices().count(), 17);
    // A path graph: every walk has the same length as the chain.
    assert_eq!(count_trajectories(&g, 16), 0);
    assert_eq!(count_trajectories(&g, 17), 4 * 100u128.pow(16));
    let small = build_select_optimizer(Variant::Linear, 4, range(1, 1)).unwrap();
    let all = enumerate_trajectories(&small, 40).unwrap();
    assert_eq!(all.len(), 4);
    assert!(all.iter().all(|t| t.len() == 17));
}

#[test]
fn select_optimizer_rejects_bad_arguments() {
    assert!(build_select_optimizer(Variant::Graph, 0, range(1, 2)).is_err());
    assert!(ValueRange::new(3, 2).is_err());
    let empty = ValueRange { lo: 3, hi: 2 };
    assert!(build_select_optimizer(Variant::Linear, 2, empty).is_err());
}

#[test]
fn stack_layers_graph_enumeration_counts_loops() {
    let g = build_stack_layers(Variant::Graph, 10).unwrap();
    let all = enumerate_trajectories(&g, 4).unwrap();
    assert_eq!(all.len(), 4);
    let loops: Vec<usize> = all
        .iter()
        .map(|t| t.steps.iter().filter(|s| g.is_self_loop(s.edge)).count())
        .collect();
    let mut sorted = loops.clone();
    sorted.sort();
    assert_eq!(sorted, vec![0, 1, 2, 3]);
}

#[test]
fn zero_step_enumeration_is_empty() {
    let g = build_stack_layers(Variant::Graph, 3).unwrap();
    assert!(enumerate_trajectories(&g, 0).unwrap().is_empty());
    assert_eq!(count_trajectories(&g, 0), 0);
}

#[test]
fn enumeration_guard_reports_limit() {
    let g = build_linear_chain(&LinearChainSpec::new(vec![3; 4])).unwrap();
    let err = enumerate_with_limit(&g, 10, 50).unwrap_err();
    assert!(matches!(err, Error::EnumerationLimit { limit: 50 }));
    assert_eq!(enumerate_with_limit(&g, 10, 81).unwrap().len(), 81);
}

#[test]
fn terminal_with_out_edge_is_reported() {
    let mut b = GraphBuilder::new();
    let s = b.decision("s");
    let t = b.terminal("t");
    b.edge(s, t, "go");
    let bad = b.edge(t, s, "back");
    let g = b.build(s).unwrap();
    let v = g.validate();
    assert!(v.contains(&Violation::TerminalWithOutEdge { vertex: t, edge: bad }));
    assert_eq!(v[0].code(), "terminal-with-out-edge");
}

#[test]
fn decision_without_route_to_terminal_is_reported() {
    let mut b = GraphBuilder::new();
    let s = b.decision("s");
    let trap = b.decision("trap");
    let t = b.terminal("t");
    b.edge(s, t, "exit");
    b.edge(s, trap, "enter");
    b.edge(trap, trap, "spin");
    let g = b.build(s).unwrap();
    let v = g.validate();
    assert_eq!(v, vec![Violation::NoPathToTerminal(trap)]);
    assert_eq!(v[0].code(), "no-path-to-terminal");
    assert!(g.ensure_valid().is_err());
}

#[test]
fn other_violations_are_reported() {
    let mut b = GraphBuilder::new();
    let s = b.terminal("s");
    let dead = b.decision("dead");
    let g = b.build(s).unwrap();
    let codes: Vec<_> = g.validate().iter().map(Violation::code).collect();
    assert!(codes.contains(&"start-not-decision"));
    assert!(codes.contains(&"dead-end"));
    assert!(codes.contains(&"unreachable"));
    assert!(!g.validate().contains(&Violation::NoTerminal));
    let _ = dead;

    let mut b = GraphBuilder::new();
    let s = b.decision("s");
    b.edge(s, s, "loop");
    let g = b.build(s).unwrap();
    assert!(g.validate().contains(&Violation::NoTerminal));
}

#[test]
fn dangling_references_are_rejected_at_construction() {
    let vertices = vec![Vertex { kind: VertexKind::Decision, label: String::new() }];
    let edges = vec![Edge { source: VertexId(0), target: VertexId(3), label: String::new() }];
    assert!(SearchGraph::from_parts(vertices.clone(), edges, VertexId(0)).is_err());
    assert!(SearchGraph::from_parts(vertices, vec![], VertexId(1)).is_err());
}

#[test]
fn json_round_trip_preserves_graph() {
    let dir = tempfile::tempdir().unwrap();
    for g in [
        build_stack_layers(Variant::Graph, 4).unwrap(),
        build_select_optimizer(Variant::Linear, 2, range(1, 3)).unwrap(),
    ] {
        let path = dir.path().join("g.json");
        g.save(&path).unwrap();
        assert_eq!(SearchGraph::load(&path).unwrap(), g);
    }
    let text = r#"{"start": 0, "vertices": [{"kind": "decision"}, {"kind": "terminal", "label": "t"}],
                  "edges": [{"source": 0, "target": 1}, {"source": 0, "target": 0, "label": "again"}]}"#;
    let g = SearchGraph::from_json(text).unwrap();
    assert!(g.validate().is_empty());
    assert!(SearchGraph::from_json(r#"{"start": 5, "vertices": [], "edges": []}"#).is_err());
}

#[test]
fn trajectory_from_edges_and_chaining_errors() {
    let g = build_stack_layers(Variant::Graph, 3).unwrap();
    let add = g.out_edges(g.start())[0];
    let stop = g.out_edges(g.start())[1];
    let t = Trajectory::from_edges(&g, &[add, add, stop]).unwrap();
    assert!(!t.truncated);
    assert_eq!(t.len(), 3);
    let partial = Trajectory::from_edges(&g, &[add, add]).unwrap();
    assert!(partial.truncated);
    assert!(Trajectory::from_edges(&g, &[stop, add]).is_err());

    let mut broken = t.clone();
    broken.final_vertex = g.start();
    assert!(broken.check(&g).is_err());
    let mut wrong_start = t;
    wrong_start.steps[0].vertex = VertexId(1);
    assert!(wrong_start.check(&g).is_err());
}

#[test]
fn variant_parses_by_name() {
    assert_eq!("graph".parse::<Variant>().unwrap(), Variant::Graph);
    assert_eq!("linear".parse::<Variant>().unwrap(), Variant::Linear);
    assert!("tree".parse::<Variant>().is_err());
}

fn arbitrary_space() -> impl Strategy<Value = SearchGraph> {
    prop_oneof![
        (1usize..6).prop_map(|l| build_stack_layers(Variant::Graph, l).unwrap()),
        (1usize..6).prop_map(|l| build_stack_layers(Variant::Linear, l).unwrap()),
        (1usize..4, 1i64..4).prop_map(|(b, n)| build_select_optimizer(Variant::Graph, b, range(1, n)).unwrap()),
        (1usize..3, 1i64..3).prop_map(|(b, n)| build_select_optimizer(Variant::Linear, b, range(1, n)).unwrap()),
        prop::collection::vec(1usize..4, 1..5)
            .prop_map(|c| build_linear_chain(&LinearChainSpec::new(c)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn built_spaces_validate_and_enumerations_chain(g in arbitrary_space()) {
        prop_assert!(g.validate().is_empty());
        let all = enumerate_trajectories(&g, 12).unwrap();
        prop_assert_eq!(all.len() as u128, count_trajectories(&g, 12));
        for t in &all {
            prop_assert!(t.check(&g).is_ok());
            prop_assert!(!t.truncated);
            prop_assert!(t.len() <= 12);
        }
    }

    #[test]
    fn stack_layers_graph_has_k_walks_up_to_k_steps(l in 1usize..20, k in 1usize..30) {
        let g = build_stack_layers(Variant::Graph, l).unwrap();
        prop_assert_eq!(enumerate_trajectories(&g, k).unwrap().len(), k);
    }

    #[test]
    fn linear_chain_count_is_product(counts in prop::collection::vec(1usize..5, 1..6)) {
        let g = build_linear_chain(&LinearChainSpec::new(counts.clone())).unwrap();
        let expected: usize = counts.iter().product();
        prop_assert_eq!(enumerate_trajectories(&g, counts.len()).unwrap().len(), expected);
    }
}
