//! `xplab`: generate networks, run and simulate algorithms, and exercise the
//! random-walk reduction from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a checked
//! bound fails.

mod config;
mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use xplab::congest::algorithms::{Chatter, Flood};
use xplab::congest::{default_bandwidth, run, CongestError, NodeAlgorithm, RunConfig, StopRule};
use xplab::cutsim::{simulate, CutSimError, SimOptions, SimulationSummary};
use xplab::family::Family;
use xplab::gadget::{build_gadget, reduction_run, GadgetParams};
use xplab::graph::GraphFile;
use xplab::pointer::{
    ceil_log2, distributed_pc_algorithm, naive_direct_protocol, one_round_everything_protocol,
    PcInstance, PointerChasingRelay,
};
use xplab::tape::derive_seed;
use xplab::{Bits, MultiGraph, NodeId};

use config::{Flags, Resolved};
use output::{write_atomic, write_json, write_report};

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn config(e: impl fmt::Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }

    pub fn bound(e: impl fmt::Display) -> Self {
        Self { code: 3, message: e.to_string() }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "xplab", version, about = "CONGEST lower-bound experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build a network, write it as JSON with its structure report.
    Gen,
    /// Check a network (generated or from --graph) against the structural bounds.
    Validate,
    /// Run an algorithm directly and export its trace as JSONL.
    Run,
    /// Simulate an algorithm with two parties and check the communication bounds.
    Cutsim,
    /// Solve pointer chasing with random walks on the weighted gadget.
    Reduce,
    /// Solve a pointer-chasing instance with every available solver.
    Pc,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Validate => "validate",
            Command::Run => "run",
            Command::Cutsim => "cutsim",
            Command::Reduce => "reduce",
            Command::Pc => "pc",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = config::resolve(cli.command.name(), &cli.flags).and_then(|cfg| adopt_instance(cfg, &cli.flags));
    let result = resolved.and_then(|cfg| match cli.command {
        Command::Gen => cmd_gen(&cfg),
        Command::Validate => cmd_validate(&cfg),
        Command::Run => cmd_run(&cfg, &cli.flags),
        Command::Cutsim => cmd_cutsim(&cfg, &cli.flags),
        Command::Reduce => cmd_reduce(&cfg, &cli.flags),
        Command::Pc => cmd_pc(&cfg, &cli.flags),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xplab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn family(cfg: &Resolved) -> Result<Family, Failure> {
    Family::with_variant(cfg.family()?, cfg.variant()).map_err(Failure::config)
}

fn cmd_gen(cfg: &Resolved) -> Result<(), Failure> {
    let fam = family(cfg)?;
    let graph = fam.build();
    let report = fam.measure(&graph, 8, cfg.mode());
    write_json(&cfg.out.join("graph.json"), &graph.to_json())?;
    let path = write_report(cfg, "structure", &report, std::slice::from_ref(&report_row(&report)))?;
    println!(
        "nodes {} edges {} L {} diameter {} -> {}",
        report.node_count,
        report.edge_count,
        report.path_len,
        report.diameter,
        path.display()
    );
    if !report.ok() {
        return Err(Failure::config(format!("structure check failed: {:?}", report.violations)));
    }
    Ok(())
}

#[derive(Serialize)]
struct StructureRow {
    kappa: f64,
    lambda: u64,
    gamma: u32,
    node_count: u64,
    expected_node_count: u64,
    path_len: u64,
    path_len_lower: u64,
    path_len_upper: f64,
    diameter: u64,
    diameter_lower: u64,
    diameter_upper: f64,
    st_distance: u64,
    violations: usize,
}

fn report_row(r: &xplab::family::StructureReport) -> StructureRow {
    StructureRow {
        kappa: r.kappa,
        lambda: r.lambda,
        gamma: r.gamma,
        node_count: r.node_count,
        expected_node_count: r.expected_node_count,
        path_len: r.path_len,
        path_len_lower: r.path_len_lower,
        path_len_upper: r.path_len_upper,
        diameter: r.diameter,
        diameter_lower: r.diameter_lower,
        diameter_upper: r.diameter_upper,
        st_distance: r.st_distance,
        violations: r.violations.len(),
    }
}

fn cmd_validate(cfg: &Resolved) -> Result<(), Failure> {
    let fam = family(cfg)?;
    let graph = match &cfg.graph {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            let file: GraphFile = serde_json::from_str(&text).map_err(|e| Failure::io(p, e))?;
            MultiGraph::from_json(&file).map_err(|e| Failure::io(p, e))?
        }
        None => fam.build(),
    };
    let report = fam.measure(&graph, 8, cfg.mode());
    let path = write_report(cfg, "validate", &report, std::slice::from_ref(&report_row(&report)))?;
    println!("{} violations -> {}", report.violations.len(), path.display());
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Failure::bound(format!(
            "{} is {}, expected {}",
            v.quantity, v.value, v.expected
        ))),
    }
}

/// Echo the instance file's dimensions in the resolved config.
fn adopt_instance(mut cfg: Resolved, flags: &Flags) -> Result<Resolved, Failure> {
    if cfg.instance.is_some() {
        let inst = load_instance(&cfg, flags)?;
        cfg.m = inst.m;
        cfg.r = inst.r;
    }
    Ok(cfg)
}

fn load_instance(cfg: &Resolved, flags: &Flags) -> Result<PcInstance, Failure> {
    let Some(p) = &cfg.instance else {
        return Ok(PcInstance::seeded(cfg.m, cfg.r, cfg.seed));
    };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
    let inst: PcInstance = serde_json::from_str(&text).map_err(|e| Failure::io(p, e))?;
    inst.validate().map_err(|e| Failure::io(p, e))?;
    for (name, flag, value) in [("m", flags.m, inst.m), ("r", flags.r, inst.r)] {
        if flag.is_some_and(|f| f != value) {
            return Err(Failure::config(format!(
                "--{name} {} conflicts with the instance file ({value})",
                flag.unwrap_or_default()
            )));
        }
    }
    Ok(inst)
}

/// Inputs for the non-relay algorithms, derived from the seed.
fn seeded_inputs(seed: u64) -> (Bits, Bits) {
    (
        Bits::from_uint(derive_seed(seed, 1), 64),
        Bits::from_uint(derive_seed(seed, 2), 64),
    )
}

/// Largest round count the two-party schedule accepts, as a default.
fn default_rounds(fam: &Family) -> u64 {
    let k = fam.kappa().to_f64();
    ((k * (fam.lambda() as f64).powf(k)).floor() as u64).max(1)
}

enum Algo {
    Flood,
    Chatter(Chatter),
    Relay(PointerChasingRelay, PcInstance),
}

fn pick_algo(
    cfg: &Resolved,
    flags: &Flags,
    fam: &Family,
    graph: &MultiGraph,
    bandwidth: usize,
) -> Result<Algo, Failure> {
    let rounds = cfg.rounds.unwrap_or_else(|| default_rounds(fam));
    Ok(match cfg.algo.as_str() {
        "flood" => Algo::Flood,
        "chatter" => Algo::Chatter(Chatter::deterministic(rounds, 64)),
        "chatter-rand" => Algo::Chatter(Chatter::randomized(rounds, 64)),
        "chatter-silent" => Algo::Chatter(Chatter::deterministic(rounds, 64).silent_highways()),
        "relay" => {
            let inst = load_instance(cfg, flags)?;
            let relay = distributed_pc_algorithm(graph, &inst, bandwidth, 1_000_000).map_err(Failure::config)?;
            Algo::Relay(relay, inst)
        }
        other => {
            return Err(Failure::config(format!(
                "unknown algorithm {other:?}; expected flood, chatter, chatter-rand, chatter-silent or relay"
            )))
        }
    })
}

#[derive(Serialize)]
struct RunReport {
    algorithm: String,
    node_count: usize,
    bandwidth: usize,
    rounds: u64,
    messages: usize,
    bits: usize,
    t_output: Option<String>,
    pc: Option<u32>,
}

fn cmd_run(cfg: &Resolved, flags: &Flags) -> Result<(), Failure> {
    let fam = family(cfg)?;
    let graph = fam.build();
    let b = cfg.bandwidth.unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let (x, y) = seeded_inputs(cfg.seed);
    let generic = BTreeMap::from([(NodeId::Source, x), (NodeId::Sink, y)]);
    let base = RunConfig::default().with_bandwidth(b).with_mode(cfg.mode()).with_max_rounds(1_000_000);
    let report = match pick_algo(cfg, flags, &fam, &graph, b)? {
        Algo::Flood => direct(cfg, &graph, &Flood, &generic, base, None)?,
        Algo::Chatter(c) => {
            let stop = StopRule::Rounds(c.rounds);
            direct(cfg, &graph, &c, &generic, base.with_stop(stop), None)?
        }
        Algo::Relay(relay, inst) => {
            let stop = StopRule::OutputAt(vec![NodeId::Sink]);
            direct(cfg, &graph, &relay, &inst.network_inputs(), base.with_stop(stop), Some(inst.pc()))?
        }
    };
    let path = write_report(cfg, "run", &report, std::slice::from_ref(&report))?;
    println!("{} rounds, {} bits -> {}", report.rounds, report.bits, path.display());
    Ok(())
}

fn direct<A: NodeAlgorithm>(
    cfg: &Resolved,
    graph: &MultiGraph,
    algo: &A,
    inputs: &BTreeMap<NodeId, Bits>,
    run_cfg: RunConfig,
    pc: Option<u32>,
) -> Result<RunReport, Failure> {
    let trace = run(graph, algo, inputs, cfg.seed, &run_cfg).map_err(|e| match e {
        CongestError::BandwidthViolation { .. } => Failure::bound(e),
        other => Failure::config(other),
    })?;
    let mut jsonl = Vec::new();
    trace.write_jsonl(&mut jsonl).map_err(Failure::internal)?;
    write_atomic(&cfg.out.join("trace.jsonl"), &jsonl)?;
    Ok(RunReport {
        algorithm: algo.name(),
        node_count: graph.node_count(),
        bandwidth: trace.bandwidth,
        rounds: trace.rounds,
        messages: trace.messages.len(),
        bits: trace.messages.iter().map(|m| m.payload.len()).sum(),
        t_output: trace.output_of(&NodeId::Sink).map(|b| b.to_string()),
        pc,
    })
}

#[derive(Serialize)]
struct CutsimRow {
    kappa: f64,
    lambda: u64,
    gamma: u32,
    #[serde(rename = "T_A")]
    t_a: u64,
    rounds_used: u64,
    round_bound: f64,
    bits: usize,
    bit_bound: f64,
    output_match: bool,
    algorithm: String,
    bandwidth: usize,
    max_iteration_bits: usize,
    iteration_bit_bound: usize,
    rounds_ok: bool,
    bits_ok: bool,
}

impl From<&SimulationSummary> for CutsimRow {
    fn from(s: &SimulationSummary) -> Self {
        Self {
            kappa: s.kappa,
            lambda: s.lambda,
            gamma: s.gamma,
            t_a: s.t_a,
            rounds_used: s.rounds_used,
            round_bound: s.round_bound,
            bits: s.bits,
            bit_bound: s.bit_bound,
            output_match: s.output_match,
            algorithm: s.algorithm.clone(),
            bandwidth: s.bandwidth,
            max_iteration_bits: s.max_iteration_bits,
            iteration_bit_bound: s.iteration_bit_bound,
            rounds_ok: s.rounds_ok,
            bits_ok: s.bits_ok,
        }
    }
}

fn cmd_cutsim(cfg: &Resolved, flags: &Flags) -> Result<(), Failure> {
    let fam = family(cfg)?;
    let graph = fam.build();
    let b = cfg.bandwidth.unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let opts = SimOptions {
        bandwidth: Some(b),
        verify: true,
        mode: cfg.mode(),
    };
    let (x, y) = seeded_inputs(cfg.seed);
    let outcome = match pick_algo(cfg, flags, &fam, &graph, b)? {
        Algo::Flood => simulate(&fam, &graph, &Flood, Some(&x), Some(&y), cfg.seed, &opts),
        Algo::Chatter(c) => simulate(&fam, &graph, &c, Some(&x), Some(&y), cfg.seed, &opts),
        Algo::Relay(relay, inst) => {
            let inputs = inst.network_inputs();
            simulate(
                &fam,
                &graph,
                &relay,
                inputs.get(&NodeId::Source),
                inputs.get(&NodeId::Sink),
                cfg.seed,
                &opts,
            )
        }
    }
    .map_err(|e| match e {
        CutSimError::UnknownRunningTime | CutSimError::Family(_) => Failure::config(e),
        other => Failure::bound(other),
    })?;

    #[derive(Serialize)]
    struct TranscriptFile<'a> {
        config: &'a Resolved,
        summary: &'a SimulationSummary,
        iterations: &'a [xplab::cutsim::IterationRecord],
    }
    write_json(
        &cfg.out.join("cutsim_transcript.json"),
        &TranscriptFile {
            config: cfg,
            summary: &outcome.summary,
            iterations: &outcome.transcript.iterations,
        },
    )?;
    let s = &outcome.summary;
    let path = write_report(cfg, "cutsim", s, &[CutsimRow::from(s)])?;
    println!(
        "T_A {} rounds {}/{:.2} bits {}/{:.1} output_match {} -> {}",
        s.t_a,
        s.rounds_used,
        s.round_bound,
        s.bits,
        s.bit_bound,
        s.output_match,
        path.display()
    );
    if !s.all_ok() {
        return Err(Failure::bound(format!("simulation check failed: {s:?}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ReduceRow {
    kappa: f64,
    lambda: u64,
    gamma: u32,
    r: u32,
    m: u32,
    #[serde(rename = "L")]
    path_len: u64,
    ell: u64,
    exact_prob: Option<String>,
    trials: u64,
    successes: u64,
}

fn cmd_reduce(cfg: &Resolved, flags: &Flags) -> Result<(), Failure> {
    let inst = load_instance(cfg, flags)?;
    let params = GadgetParams::new(cfg.family()?, inst.r, inst.m).map_err(Failure::config)?;
    let gadget = build_gadget(params, &inst, cfg.connectors()).map_err(Failure::config)?;
    write_json(&cfg.out.join("gadget.json"), &gadget.graph().to_json())?;
    let rep = reduction_run(&gadget, cfg.trials, cfg.seed, cfg.mode(), cfg.dp_budget).map_err(Failure::config)?;
    let row = ReduceRow {
        kappa: rep.kappa,
        lambda: rep.lambda,
        gamma: rep.gamma,
        r: rep.r,
        m: rep.m,
        path_len: rep.path_len,
        ell: rep.ell,
        exact_prob: rep.exact_prob.clone(),
        trials: rep.trials,
        successes: rep.successes,
    };
    let path = write_report(cfg, "reduce", &rep, &[row])?;
    println!(
        "pc {} exact {} follow {:.4} successes {}/{} -> {}",
        rep.pc,
        rep.exact_prob.as_deref().unwrap_or("over budget"),
        rep.follow_prob,
        rep.successes,
        rep.trials,
        path.display()
    );
    if rep.exact_prob_ok == Some(false) {
        return Err(Failure::bound("exact success probability is below 2/3"));
    }
    if !rep.follow_prob_ok {
        return Err(Failure::bound("walk follows the expected path with probability below 2/3"));
    }
    if cfg.ell_check && !rep.min_step_ok {
        return Err(Failure::bound("some step continues with probability below 1 - 1/(3l)"));
    }
    Ok(())
}

#[derive(Serialize)]
struct PcRow {
    m: u32,
    r: u32,
    pc: u32,
    naive_output: u32,
    naive_bits: usize,
    naive_rounds: usize,
    naive_bits_expected: usize,
    one_round_output: u32,
    one_round_bits: usize,
    one_round_bits_expected: usize,
    relay_output: Option<u32>,
    relay_rounds: u64,
    relay_rounds_expected: u64,
}

fn cmd_pc(cfg: &Resolved, flags: &Flags) -> Result<(), Failure> {
    let inst = load_instance(cfg, flags)?;
    if cfg.instance.is_none() {
        write_json(&cfg.out.join("instance.json"), &inst)?;
    }
    let fam = family(cfg)?;
    let graph = fam.build();
    let b = cfg.bandwidth.unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let (naive, naive_tr) = naive_direct_protocol(&inst);
    let (one, one_tr) = one_round_everything_protocol(&inst);
    let relay = distributed_pc_algorithm(&graph, &inst, b, 1_000_000).map_err(Failure::config)?;
    let run_cfg = RunConfig::default()
        .with_bandwidth(b)
        .with_mode(cfg.mode())
        .with_max_rounds(relay.rounds_needed().max(1))
        .with_stop(StopRule::OutputAt(vec![NodeId::Sink]));
    let trace = run(&graph, &relay, &inst.network_inputs(), cfg.seed, &run_cfg).map_err(Failure::bound)?;
    let w = ceil_log2(inst.m);
    let row = PcRow {
        m: inst.m,
        r: inst.r,
        pc: inst.pc(),
        naive_output: naive,
        naive_bits: naive_tr.total_bits,
        naive_rounds: naive_tr.rounds_used(),
        naive_bits_expected: 2 * inst.r as usize * w,
        one_round_output: one,
        one_round_bits: one_tr.total_bits,
        one_round_bits_expected: inst.m as usize * w,
        relay_output: trace.output_of(&NodeId::Sink).and_then(PointerChasingRelay::decode_output),
        relay_rounds: trace.rounds,
        relay_rounds_expected: relay.rounds_needed(),
    };
    let path = write_report(cfg, "pc", &row, std::slice::from_ref(&row))?;
    println!("pc {} naive {} one-round {} relay {:?} -> {}", row.pc, naive, one, row.relay_output, path.display());
    let agree = naive == row.pc && one == row.pc && row.relay_output == Some(row.pc);
    let accounted = row.naive_bits == row.naive_bits_expected
        && row.naive_rounds == inst.r as usize
        && row.one_round_bits == row.one_round_bits_expected
        && row.relay_rounds == row.relay_rounds_expected;
    if !agree || !accounted {
        return Err(Failure::bound("solvers disagree or cost differs from the closed form"));
    }
    Ok(())
}
