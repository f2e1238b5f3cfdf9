//! Sequential versus data-parallel execution on the hot loops.
//!
//! Build with `--no-default-features` to see the fallback path in both rows.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use xplab::congest::algorithms::Chatter;
use xplab::congest::{run, RunConfig, StopRule};
use xplab::cutsim::{simulate, SimOptions};
use xplab::exec;
use xplab::family::{Family, FamilyParams};
use xplab::gadget::{build_gadget, sample_walk, ConnectorMode, GadgetParams};
use xplab::pointer::PcInstance;
use xplab::tape::derive_seed;
use xplab::{Bits, ExecMode, NodeId};

const MODES: [ExecMode; 2] = [ExecMode::Sequential, ExecMode::Parallel];

fn label(mode: ExecMode) -> &'static str {
    match mode {
        ExecMode::Sequential => "sequential",
        ExecMode::Parallel => "parallel",
    }
}

fn diameter(c: &mut Criterion) {
    let g = Family::new(FamilyParams::new(2.5, 4, 4).unwrap()).unwrap().build();
    let mut group = c.benchmark_group("diameter");
    group.sample_size(10);
    for mode in MODES {
        group.bench_function(BenchmarkId::new(label(mode), g.node_count()), |b| {
            b.iter(|| black_box(g.diameter(mode)))
        });
    }
    group.finish();
}

fn direct_run(c: &mut Criterion) {
    let g = Family::new(FamilyParams::new(3.0, 3, 4).unwrap()).unwrap().build();
    let algo = Chatter::randomized(40, 16);
    let inputs = [(NodeId::Source, Bits::from_uint(9, 4))].into_iter().collect();
    let mut group = c.benchmark_group("direct_run");
    group.sample_size(10);
    for mode in MODES {
        let cfg = RunConfig::default()
            .with_stop(StopRule::Rounds(40))
            .with_mode(mode);
        group.bench_function(label(mode), |b| {
            b.iter(|| black_box(run(&g, &algo, &inputs, 1, &cfg).unwrap().rounds))
        });
    }
    group.finish();
}

fn cut_simulation(c: &mut Criterion) {
    let f = Family::new(FamilyParams::new(2.5, 4, 2).unwrap()).unwrap();
    let g = f.build();
    let algo = Chatter::deterministic(60, 4);
    let mut group = c.benchmark_group("cut_simulation");
    group.sample_size(10);
    for mode in MODES {
        let opts = SimOptions {
            mode,
            verify: false,
            ..SimOptions::default()
        };
        group.bench_function(label(mode), |b| {
            b.iter(|| black_box(simulate(&f, &g, &algo, None, None, 0, &opts).unwrap().summary.bits))
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let params = GadgetParams::new(FamilyParams::new(2.0, 2, 8).unwrap(), 2, 2).unwrap();
    let gd = build_gadget(params, &PcInstance::identity(2, 2), ConnectorMode::Corrected).unwrap();
    let start = gd.start();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for mode in MODES {
        group.bench_function(BenchmarkId::new(label(mode), 2000), |b| {
            b.iter(|| {
                exec::map_range(mode, 2000, |k| sample_walk(&gd, &start, gd.ell(), derive_seed(7, k as u64)))
                    .len()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, diameter, direct_run, cut_simulation, monte_carlo);
criterion_main!(benches);
