//! Hand-derived expectations for small instances.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use xplab::congest::algorithms::{Chatter, Flood};
use xplab::congest::{run, RunConfig, StopRule};
use xplab::cutsim::{rounds_used, simulate, CutSimError, SimOptions};
use xplab::exec;
use xplab::family::{Family, FamilyParams, Side, Variant};
use xplab::gadget::{
    build_gadget, exact_destination_distribution, exact_follow_probability, expected_path,
    reduction_run, sample_walk, ConnectorMode, GadgetParams, DEFAULT_DP_BUDGET,
};
use xplab::graph::{GraphBuilder, Multiplicity};
use xplab::pointer::{distributed_pc_algorithm, PcInstance};
use xplab::tape::derive_seed;
use xplab::{Bits, ExecMode, NodeId};

#[test]
fn phi_table_at_two_and_a_half() {
    let f = Family::new(FamilyParams::new(2.5, 2, 1).unwrap()).unwrap();
    assert_eq!((f.k_max(), f.target()), (12, 17));
    let tail: Vec<u64> = (9..=12).map(|j| f.phi_prime(j).unwrap()).collect();
    assert_eq!(tail, vec![1, 4, 6, 7]);
    assert_eq!(f.phi(-10).unwrap(), 6);
    assert_eq!(f.path_len(), 53);
}

#[test]
fn f_variant_uses_constant_widths() {
    let f = Family::with_variant(FamilyParams::new(2.0, 2, 1).unwrap(), Variant::F).unwrap();
    assert!((-f.k_max()..=f.k_max()).all(|j| f.phi_prime(j).unwrap() == 2));
}

#[test]
fn relay_cannot_fit_smallest_family() {
    // dist(s, t) = 8 but only 2 steps fit under κΛ^κ = 2.
    let f = Family::new(FamilyParams::new(1.0, 2, 2).unwrap()).unwrap();
    let g = f.build();
    let inst = PcInstance::identity(2, 1);
    let relay = distributed_pc_algorithm(&g, &inst, 5, 1000).unwrap();
    let inputs = inst.network_inputs();
    let err = simulate(
        &f,
        &g,
        &relay,
        inputs.get(&NodeId::Source),
        inputs.get(&NodeId::Sink),
        0,
        &SimOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, CutSimError::TooManySteps { t_a: 8, .. }));
}

#[test]
fn silent_algorithm_costs_nothing() {
    let f = Family::new(FamilyParams::new(2.0, 2, 2).unwrap()).unwrap();
    let g = f.build();
    let algo = Chatter::deterministic(8, 4).silent_highways();
    let out = simulate(&f, &g, &algo, None, None, 0, &SimOptions::default()).unwrap();
    assert_eq!(out.transcript.total_bits, 0);
    assert_eq!(out.bob_output, out.direct_output);
    assert_eq!(out.summary.rounds_used, rounds_used(&f, 8).unwrap());
}

#[test]
fn flood_lacks_running_time() {
    let f = Family::new(FamilyParams::new(1.0, 2, 1).unwrap()).unwrap();
    let g = f.build();
    let err = simulate(&f, &g, &Flood, None, None, 0, &SimOptions::default()).unwrap_err();
    assert_eq!(err, CutSimError::UnknownRunningTime);
    let inputs = [(NodeId::Source, Bits::from_uint(1, 1))].into_iter().collect();
    let trace = run(&g, &Flood, &inputs, 0, &RunConfig::default()).unwrap();
    let s = g.index_of(&NodeId::Source).unwrap();
    let ecc = g.bfs(s).into_iter().flatten().max().unwrap();
    assert_eq!(trace.rounds, u64::from(ecc));
}

#[test]
fn known_set_conventions() {
    let f = Family::new(FamilyParams::new(2.5, 2, 1).unwrap()).unwrap();
    assert_eq!(f.known_set(Side::Alice, 12, 0), f.known_set(Side::Alice, 11, 6));
    assert_eq!(f.known_set(Side::Bob, -1, 0), f.known_set(Side::Bob, 0, 1));
    let a = f.known_set(Side::Alice, 9, 1);
    assert!(f.contains(&a, &NodeId::Source));
    assert!(!f.contains(&a, &NodeId::Sink));
    assert!(f.contains(&a, &NodeId::highway(2, 8)));
    assert!(!f.contains(&a, &NodeId::highway(1, 10)));
}

#[test]
fn four_node_chain_ratio() {
    let mut b = GraphBuilder::new();
    let ids: Vec<NodeId> = (1..=4).map(|k| NodeId::path(1, 0, k)).collect();
    for id in &ids {
        b.add_node(*id).unwrap();
    }
    b.add_edge(ids[0], ids[1], Multiplicity::one()).unwrap();
    b.add_edge(ids[1], ids[2], Multiplicity::finite(8)).unwrap();
    b.add_edge(ids[2], ids[3], Multiplicity::one()).unwrap();
    let g = b.build().unwrap();
    let u = g.index_of(&ids[1]).unwrap();
    let deg = g.degree(u).unwrap();
    let next = g.edge(g.edge_between(u, g.index_of(&ids[2]).unwrap()).unwrap()).multiplicity.value().unwrap();
    assert_eq!(BigRational::new(next.into(), deg.into()), BigRational::new(8.into(), 9.into()));
}

#[test]
fn derived_instance_labels() {
    let inst = PcInstance::new(4, 2, vec![2, 3, 4, 1], vec![3, 1, 4, 2]).unwrap();
    let params = GadgetParams::new(FamilyParams::new(1.0, 2, 16).unwrap(), 2, 4).unwrap();
    let gd = build_gadget(params, &inst, ConnectorMode::Corrected).unwrap();
    let p = expected_path(&gd);
    assert_eq!((p.labels[1], p.labels[3]), (1, 1));
    let rep = reduction_run(&gd, 200, 3, ExecMode::Parallel, 0).unwrap();
    assert_eq!(rep.modal_output, Some(1));
    assert!(rep.exact_prob.is_none());
}

#[test]
fn literal_connectors_lose_the_walk() {
    let inst = PcInstance::identity(1, 2);
    let params = GadgetParams::new(FamilyParams::new(1.0, 2, 4).unwrap(), 2, 1).unwrap();
    let corrected = build_gadget(params, &inst, ConnectorMode::Corrected).unwrap();
    let literal = build_gadget(params, &inst, ConnectorMode::Literal).unwrap();
    let path = expected_path(&corrected).nodes;
    assert!(exact_follow_probability(&corrected, &path).unwrap().at_least(2, 3));
    assert!(!exact_follow_probability(&literal, &path).unwrap().at_least(2, 3));
}

#[test]
fn smallest_gadget_matches_monte_carlo_per_node() {
    let params = GadgetParams::new(FamilyParams::new(1.0, 2, 2).unwrap(), 1, 1).unwrap();
    let gd = build_gadget(params, &PcInstance::identity(1, 1), ConnectorMode::Corrected).unwrap();
    let dist = exact_destination_distribution(&gd, &gd.start(), gd.ell(), DEFAULT_DP_BUDGET).unwrap();
    let n = 1_000_000usize;
    let ends = exec::map_range(ExecMode::Parallel, n, |k| {
        sample_walk(&gd, &gd.start(), gd.ell(), derive_seed(41, k as u64))
    });
    for v in gd.graph().nodes() {
        let p = dist.get(v).map(|q| q.to_f64().unwrap()).unwrap_or(0.0);
        let freq = ends.iter().filter(|e| *e == v).count() as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64);
        assert!((freq - p).abs() <= 4.0 * sigma, "{v}: freq {freq} exact {p}");
    }
}

#[test]
fn flood_reaches_distance() {
    let f = Family::new(FamilyParams::new(1.0, 2, 2).unwrap()).unwrap();
    let g = f.build();
    let inputs = [(NodeId::Source, Bits::from_uint(1, 1))].into_iter().collect();
    let cfg = RunConfig::default().with_stop(StopRule::OutputAt(vec![NodeId::Sink]));
    let trace = run(&g, &Flood, &inputs, 0, &cfg).unwrap();
    assert_eq!(trace.rounds, 8);
}
