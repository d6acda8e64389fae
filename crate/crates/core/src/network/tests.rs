use nalgebra::DMatrix;

use super::*;
use crate::scalar::lit;

fn default_params() -> PipeParams<f64> {
    PipeParams {
        length: 1000.0,
        area: 0.2,
        density: 960.0,
        heat_capacity: 4182.0,
        heat_transfer: 0.5,
        resistance: 1e-3,
    }
}

fn node(id: &str, kind: NodeKind) -> HeatNode<f64> {
    let (supply, ret, power) = match kind {
        NodeKind::Slack => (Some(85.0), None, None),
        NodeKind::Source => (Some(85.0), None, Some(2e5)),
        NodeKind::Load => (None, Some(50.0), Some(1e5)),
        NodeKind::Intermediate => (None, None, None),
    };
    HeatNode { id: id.into(), kind, supply_temp: supply, return_temp: ret, power }
}

/// The four-node, four-pipe looped system used throughout the docs.
pub(crate) fn four_node_loop() -> HeatNetwork<f64> {
    HeatNetwork::builder(10.0, 4182.0)
        .node(node("1", NodeKind::Slack))
        .node(node("2", NodeKind::Source))
        .node(node("3", NodeKind::Load))
        .node(node("4", NodeKind::Load))
        .pipe("1", "1", "3", default_params())
        .pipe("2", "2", "3", default_params())
        .pipe("3", "2", "4", default_params())
        .pipe("4", "1", "4", default_params())
        .build()
        .unwrap()
}

fn matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        rows.len(),
        rows[0].len(),
        &rows.iter().flat_map(|r| r.iter().copied()).collect::<Vec<_>>(),
    )
}

#[test]
fn four_node_loop_incidence_matches_reference() {
    let net = four_node_loop();
    let expect_v = matrix(&[
        &[-1.0, 0.0, 0.0, -1.0],
        &[0.0, -1.0, -1.0, 0.0],
        &[1.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 1.0],
    ]);
    let expect_l = matrix(&[&[1.0, -1.0, 1.0, -1.0]]);
    assert_eq!(net.incidence(), &expect_v);
    assert_eq!(net.loop_matrix(), &expect_l);
}

#[test]
fn single_pipe_has_no_loops() {
    let net = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("b", NodeKind::Load))
        .pipe("p", "a", "b", default_params())
        .build()
        .unwrap();
    assert_eq!(net.incidence(), &matrix(&[&[-1.0], &[1.0]]));
    assert_eq!(net.loop_matrix().nrows(), 0);
}

#[test]
fn triangle_loop_matches_brute_force_cycle_enumeration() {
    let net = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("b", NodeKind::Load))
        .node(node("c", NodeKind::Load))
        .pipe("p1", "a", "b", default_params())
        .pipe("p2", "b", "c", default_params())
        .pipe("p3", "a", "c", default_params())
        .build()
        .unwrap();
    let loops = net.loop_matrix();
    assert_eq!(loops.nrows(), 1, "triangle has exactly one independent cycle");

    // Brute force: every nonzero ±1 assignment with zero net boundary is a
    // cycle of the 3-edge graph.
    let v = net.incidence();
    let mut valid = Vec::new();
    for s1 in [-1.0, 0.0, 1.0] {
        for s2 in [-1.0, 0.0, 1.0] {
            for s3 in [-1.0, 0.0, 1.0] {
                let signs = nalgebra::DVector::from_vec(vec![s1, s2, s3]);
                if signs.amax() == 0.0 {
                    continue;
                }
                if (v * &signs).amax() < 1e-12 {
                    valid.push(signs);
                }
            }
        }
    }
    let row = loops.row(0).transpose();
    assert!(
        valid.iter().any(|c| (c - &row).amax() < 1e-12),
        "loop row {row:?} not among brute-force cycles {valid:?}"
    );
}

#[test]
fn incidence_column_sums_vanish() {
    let net = four_node_loop();
    for j in 0..net.pipes().len() {
        let sum: f64 = net.incidence().column(j).iter().sum();
        assert_eq!(sum, 0.0, "column {j} must have one +1 and one −1");
    }
}

#[test]
fn loop_rows_have_zero_boundary() {
    let net = four_node_loop();
    let product = net.incidence() * net.loop_matrix().transpose();
    assert!(product.amax() < 1e-12, "V·Lᵀ must vanish, got {product}");
}

#[test]
fn dangling_pipe_endpoint_is_reported() {
    let err = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("b", NodeKind::Load))
        .pipe("p", "a", "zzz", default_params())
        .build()
        .unwrap_err();
    assert!(matches!(err, CoreError::DanglingEndpoint { .. }), "got {err:?}");
}

#[test]
fn disconnected_graph_is_reported() {
    let err = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("b", NodeKind::Load))
        .node(node("c", NodeKind::Load))
        .node(node("d", NodeKind::Intermediate))
        .pipe("p1", "a", "b", default_params())
        .pipe("p2", "c", "d", default_params())
        .build()
        .unwrap_err();
    assert!(matches!(err, CoreError::DisconnectedGraph { .. }), "got {err:?}");
}

#[test]
fn compound_load_node_is_split() {
    // Load node "m" sits mid-line: a → m → b, with the load attached at m.
    let net = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("m", NodeKind::Load))
        .node(node("b", NodeKind::Load))
        .pipe("p1", "a", "m", default_params())
        .pipe("p2", "m", "b", default_params())
        .build()
        .unwrap();
    let expanded = net.expand_compound_nodes().unwrap();
    assert_eq!(expanded.nodes().len(), 4);
    assert_eq!(expanded.pipes().len(), 3);
    let m = &expanded.nodes()[expanded.node_index("m").unwrap()];
    assert_eq!(m.kind, NodeKind::Intermediate);
    assert!(m.power.is_none());
    let virt = &expanded.nodes()[expanded.node_index("m__virt").unwrap()];
    assert_eq!(virt.kind, NodeKind::Load);
    assert_eq!(virt.power, Some(1e5));
    let vpipe = &expanded.pipes()[expanded.pipe_index("m__virt__pipe").unwrap()];
    assert!(vpipe.implicit);
    assert_eq!(vpipe.params.length, 0.0);
    assert_eq!(vpipe.params.resistance, 0.0);
    // Supply flows from the junction into the virtual load.
    assert_eq!(expanded.nodes()[vpipe.from].id, "m");
    assert_eq!(expanded.nodes()[vpipe.to].id, "m__virt");
}

#[test]
fn pure_load_leaf_is_unchanged() {
    let net = four_node_loop();
    let expanded = net.clone().expand_compound_nodes().unwrap();
    assert_eq!(expanded.nodes().len(), net.nodes().len());
    assert_eq!(expanded.pipes().len(), net.pipes().len());
}

#[test]
fn compound_source_node_is_split() {
    // Source "m" in the middle of a line receives flow from "a".
    let net = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("m", NodeKind::Source))
        .node(node("b", NodeKind::Load))
        .pipe("p1", "a", "m", default_params())
        .pipe("p2", "m", "b", default_params())
        .build()
        .unwrap();
    let expanded = net.expand_compound_nodes().unwrap();
    let virt = &expanded.nodes()[expanded.node_index("m__virt").unwrap()];
    assert_eq!(virt.kind, NodeKind::Source);
    let vpipe = &expanded.pipes()[expanded.pipe_index("m__virt__pipe").unwrap()];
    // Supply flows from the virtual source into the junction.
    assert_eq!(expanded.nodes()[vpipe.from].id, "m__virt");
    assert_eq!(expanded.nodes()[vpipe.to].id, "m");
}

#[test]
fn expansion_is_idempotent() {
    let net = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("m", NodeKind::Load))
        .node(node("b", NodeKind::Load))
        .pipe("p1", "a", "m", default_params())
        .pipe("p2", "m", "b", default_params())
        .build()
        .unwrap();
    let once = net.expand_compound_nodes().unwrap();
    let twice = once.clone().expand_compound_nodes().unwrap();
    assert_eq!(once.nodes().len(), twice.nodes().len());
    assert_eq!(once.pipes().len(), twice.pipes().len());
    assert_eq!(once.incidence(), twice.incidence());
}

#[test]
fn reversing_pipe_negates_columns() {
    let mut net = four_node_loop();
    net.reverse_pipes(&["2".into()]).unwrap();
    let col: Vec<f64> = net.incidence().column(1).iter().copied().collect();
    assert_eq!(col, vec![0.0, 1.0, -1.0, 0.0]);
    assert_eq!(net.loop_matrix()[(0, 1)], 1.0);
    assert!(net.pipes()[1].reversed);
}

#[test]
fn reversing_twice_is_identity() {
    let original = four_node_loop();
    let mut net = original.clone();
    net.reverse_pipes(&["1".into(), "3".into()]).unwrap();
    net.reverse_pipes(&["1".into(), "3".into()]).unwrap();
    assert_eq!(net.incidence(), original.incidence());
    assert_eq!(net.loop_matrix(), original.loop_matrix());
    assert!(net.pipes().iter().all(|p| !p.reversed));
}

#[test]
fn reversing_all_loop_pipes_flips_loop_sign_only() {
    let original = four_node_loop();
    let mut net = original.clone();
    net.reverse_pipes(&["1".into(), "2".into(), "3".into(), "4".into()])
        .unwrap();
    let flipped = -original.loop_matrix().clone();
    assert_eq!(net.loop_matrix(), &flipped);
    // Head-loss sums are unchanged up to the global sign: L·diag(K)·diag(ṁ)·ṁ
    // evaluates to the negated value for the reversed flow vector.
    let mdot = nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
    let k = nalgebra::DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
    let head = |l: &DMatrix<f64>, m: &nalgebra::DVector<f64>| -> f64 {
        (l * nalgebra::DMatrix::from_diagonal(&k)
            * nalgebra::DMatrix::from_diagonal(m)
            * m)[0]
    };
    let before = head(original.loop_matrix(), &mdot);
    let after = head(net.loop_matrix(), &(-mdot.clone()));
    assert!((before + after).abs() < 1e-12, "loop sum changed: {before} vs {after}");
}

#[test]
fn reverse_rejects_unknown_pipe() {
    let mut net = four_node_loop();
    let err = net.reverse_pipes(&["nope".into()]).unwrap_err();
    assert!(matches!(err, CoreError::UnknownId(_)));
}

#[test]
fn duplicate_slack_is_rejected() {
    let err = HeatNetwork::builder(10.0, 4182.0)
        .node(node("a", NodeKind::Slack))
        .node(node("b", NodeKind::Slack))
        .pipe("p", "a", "b", default_params())
        .build()
        .unwrap_err();
    assert!(matches!(err, CoreError::Validation { .. }));
}

#[test]
fn network_spec_round_trips_through_json() {
    let spec = NetworkSpec {
        heat_nodes: vec![
            HeatNodeSpec {
                id: "1".into(),
                kind: "slack".into(),
                supply_temp_c: Some(85.0),
                return_temp_c: None,
                power_w: None,
            },
            HeatNodeSpec {
                id: "2".into(),
                kind: "load".into(),
                supply_temp_c: None,
                return_temp_c: Some(50.0),
                power_w: Some(1e5),
            },
        ],
        pipes: vec![PipeSpec {
            id: "p".into(),
            from: "1".into(),
            to: "2".into(),
            length_m: 500.0,
            area_m2: 0.2,
            density_kg_per_m3: 960.0,
            cp_j_per_kg_k: 4182.0,
            heat_transfer_w_per_m_k: 0.5,
            resistance: 1e-3,
        }],
        buses: vec![],
        branches: vec![],
        couplings: vec![],
        ambient_temp_c: 10.0,
        fluid_cp_j_per_kg_k: 4182.0,
        temp_base_c: None,
    };
    let json = serde_json::to_string(&spec).unwrap();
    let system: CoupledSystem<f64> = NetworkSpec::from_json(&json).unwrap().build().unwrap();
    assert_eq!(system.heat.nodes().len(), 2);
    assert_eq!(system.heat.pipes().len(), 1);
    assert_eq!(system.electric.buses().len(), 0);
}

#[test]
fn lit_helper_is_exact_for_small_integers() {
    assert_eq!(lit::<f64>(3.0), 3.0);
    assert_eq!(lit::<f32>(3.0), 3.0f32);
}
