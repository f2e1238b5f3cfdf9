//! Synchronous CONGEST(B) simulator on multigraphs.
//!
//! Round `τ ≥ 1` has two halves. Every node first emits messages computed
//! from its state at the end of round `τ-1`; then every node folds the
//! messages addressed to it into a new state, its state at the end of `τ`.
//! Messages are addressed per edge class: one bit string per neighbor per
//! round, at most `B × multiplicity` bits long (no limit when unbounded).

pub mod algorithms;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use crate::bits::Bits;
use crate::exec::{self, ExecMode};
use crate::graph::{Adjacent, MultiGraph, NodeId};
use crate::tape::RandomTape;

/// What a node can see while computing: itself, its links, the shared tape.
#[derive(Clone, Copy)]
pub struct NodeCtx<'a> {
    pub graph: &'a MultiGraph,
    pub node: usize,
    pub tape: &'a RandomTape,
    pub bandwidth: usize,
}

impl<'a> NodeCtx<'a> {
    pub fn id(&self) -> NodeId {
        self.graph.node(self.node)
    }

    pub fn neighbors(&self) -> &'a [Adjacent] {
        self.graph.neighbors(self.node)
    }

    /// Bits this node may push to `neighbor` in one round, `None` if unlimited.
    pub fn capacity_to(&self, neighbor: usize) -> Option<usize> {
        let e = self.graph.edge_between(self.node, neighbor)?;
        self.graph.edge(e).multiplicity.capacity(self.bandwidth)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub to: usize,
    pub payload: Bits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incoming {
    pub from: usize,
    pub payload: Bits,
}

/// A per-node synchronous state machine.
///
/// `send` and `receive` must be pure functions of their arguments (the
/// tape included); the simulator, replay checker and cut simulation all
/// rely on re-evaluating them.
pub trait NodeAlgorithm: Sync {
    type State: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn name(&self) -> String;

    fn init(&self, ctx: &NodeCtx<'_>, input: Option<&Bits>) -> Self::State;

    /// Messages sent in `round`, computed from the state at the end of `round - 1`.
    fn send(&self, ctx: &NodeCtx<'_>, state: &Self::State, round: u64) -> Vec<Outgoing>;

    /// State at the end of `round`. `inbox` is sorted by sender index.
    fn receive(
        &self,
        ctx: &NodeCtx<'_>,
        state: &Self::State,
        round: u64,
        inbox: &[Incoming],
    ) -> Self::State;

    fn output(&self, state: &Self::State) -> Option<Bits>;

    /// Worst-case running time over all inputs, when the algorithm knows it.
    fn round_bound(&self) -> Option<u64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Message {
    pub round: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub payload: Bits,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CongestError {
    #[error(
        "bandwidth violation in round {round}: {from} -> {to} carries {bits} bits, budget is {budget}"
    )]
    BandwidthViolation {
        round: u64,
        from: NodeId,
        to: NodeId,
        bits: usize,
        budget: String,
    },
    #[error("no output after {0} rounds")]
    RoundLimitExceeded(u64),
    #[error("{from} addressed {to}, which is not a neighbor")]
    NotANeighbor { from: NodeId, to: NodeId },
    #[error("{from} sent two messages to {to} in round {round}")]
    DuplicateMessage { round: u64, from: NodeId, to: NodeId },
    #[error("input assigned to unknown node {0}")]
    UnknownNode(NodeId),
    #[error("max_rounds must be at least 1")]
    NoRounds,
}

/// `max(1, ⌈log₂ n⌉)`.
pub fn default_bandwidth(node_count: usize) -> usize {
    let n = node_count.max(1);
    let ceil_log = usize::BITS - (n - 1).leading_zeros();
    (ceil_log as usize).max(1)
}

/// Evaluates `send` for one node and checks the result against the graph.
pub fn emit<A: NodeAlgorithm>(
    algo: &A,
    ctx: &NodeCtx<'_>,
    state: &A::State,
    round: u64,
) -> Result<Vec<Outgoing>, CongestError> {
    let mut out = algo.send(ctx, state, round);
    out.sort_by_key(|o| o.to);
    for (k, o) in out.iter().enumerate() {
        let from = ctx.id();
        let to = ctx.graph.node(o.to);
        if k > 0 && out[k - 1].to == o.to {
            return Err(CongestError::DuplicateMessage { round, from, to });
        }
        let e = ctx
            .graph
            .edge_between(ctx.node, o.to)
            .ok_or(CongestError::NotANeighbor { from, to })?;
        let mult = &ctx.graph.edge(e).multiplicity;
        if !mult.carries(o.payload.len(), ctx.bandwidth) {
            return Err(CongestError::BandwidthViolation {
                round,
                from,
                to,
                bits: o.payload.len(),
                budget: format!("{} x {}", ctx.bandwidth, mult),
            });
        }
    }
    Ok(out)
}

/// When a run is considered finished.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Every node has an output.
    AllOutput,
    /// Every listed node has an output.
    OutputAt(Vec<NodeId>),
    /// Exactly this many rounds.
    Rounds(u64),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub max_rounds: u64,
    /// Per-copy bandwidth `B`; defaults to [`default_bandwidth`].
    pub bandwidth: Option<usize>,
    pub stop: StopRule,
    /// Keep only the newest `k` state snapshots.
    pub snapshot_depth: Option<usize>,
    pub record_messages: bool,
    pub mode: ExecMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10_000,
            bandwidth: None,
            stop: StopRule::AllOutput,
            snapshot_depth: None,
            record_messages: true,
            mode: ExecMode::default(),
        }
    }
}

impl RunConfig {
    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_bandwidth(mut self, b: usize) -> Self {
        self.bandwidth = Some(b);
        self
    }

    pub fn with_max_rounds(mut self, r: u64) -> Self {
        self.max_rounds = r;
        self
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Record of a direct run.
#[derive(Clone, Debug)]
pub struct ExecutionTrace<S> {
    nodes: Vec<NodeId>,
    first_snapshot: u64,
    snapshots: VecDeque<Vec<S>>,
    pub messages: Vec<Message>,
    pub outputs: Vec<Option<Bits>>,
    /// Number of rounds executed (`T_A`).
    pub rounds: u64,
    pub bandwidth: usize,
}

impl<S> ExecutionTrace<S> {
    /// States at the end of round `tau`, if still retained.
    pub fn snapshot(&self, tau: u64) -> Option<&[S]> {
        let k = tau.checked_sub(self.first_snapshot)?;
        self.snapshots.get(usize::try_from(k).ok()?).map(Vec::as_slice)
    }

    pub fn final_states(&self) -> &[S] {
        self.snapshots.back().expect("at least one snapshot")
    }

    pub fn retained_rounds(&self) -> std::ops::RangeInclusive<u64> {
        self.first_snapshot..=self.rounds
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn output_of(&self, id: &NodeId) -> Option<&Bits> {
        let k = self.nodes.iter().position(|n| n == id)?;
        self.outputs[k].as_ref()
    }

    pub fn messages_in_round(&self, round: u64) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.round == round)
    }

    /// Re-checks every logged message against the per-edge-class budget.
    pub fn check_budget(&self, graph: &MultiGraph) -> Result<(), CongestError> {
        for m in &self.messages {
            let (u, v) = (
                graph.index_of(&m.sender).expect("known node"),
                graph.index_of(&m.receiver).expect("known node"),
            );
            let e = graph.edge_between(u, v).ok_or(CongestError::NotANeighbor {
                from: m.sender,
                to: m.receiver,
            })?;
            let mult = &graph.edge(e).multiplicity;
            if !mult.carries(m.payload.len(), self.bandwidth) {
                return Err(CongestError::BandwidthViolation {
                    round: m.round,
                    from: m.sender,
                    to: m.receiver,
                    bits: m.payload.len(),
                    budget: format!("{} x {}", self.bandwidth, mult),
                });
            }
        }
        Ok(())
    }

    /// JSON-lines export: one record per message, one per round boundary.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        #[derive(Serialize)]
        #[serde(tag = "kind", rename_all = "snake_case")]
        enum Record<'a> {
            Message {
                round: u64,
                from: NodeId,
                to: NodeId,
                bits: usize,
                payload: &'a Bits,
            },
            Round {
                round: u64,
                messages: usize,
                bits: usize,
            },
        }
        let mut by_round: BTreeMap<u64, Vec<&Message>> = BTreeMap::new();
        for m in &self.messages {
            by_round.entry(m.round).or_default().push(m);
        }
        for tau in 0..=self.rounds {
            let msgs = by_round.remove(&tau).unwrap_or_default();
            let mut bits = 0;
            for m in &msgs {
                bits += m.payload.len();
                let rec = Record::Message {
                    round: m.round,
                    from: m.sender,
                    to: m.receiver,
                    bits: m.payload.len(),
                    payload: &m.payload,
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n")?;
            }
            let rec = Record::Round {
                round: tau,
                messages: msgs.len(),
                bits,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Advances every node by one round.
pub fn step_all<A: NodeAlgorithm>(
    graph: &MultiGraph,
    algo: &A,
    tape: &RandomTape,
    bandwidth: usize,
    states: &[A::State],
    round: u64,
    mode: ExecMode,
) -> Result<(Vec<A::State>, Vec<Message>), CongestError> {
    let n = graph.node_count();
    let ctx = |node| NodeCtx {
        graph,
        node,
        tape,
        bandwidth,
    };
    let outs = exec::map_range(mode, n, |u| emit(algo, &ctx(u), &states[u], round));
    let mut inbox: Vec<Vec<Incoming>> = vec![Vec::new(); n];
    let mut log = Vec::new();
    for (u, out) in outs.into_iter().enumerate() {
        for o in out? {
            log.push(Message {
                round,
                sender: graph.node(u),
                receiver: graph.node(o.to),
                payload: o.payload.clone(),
            });
            inbox[o.to].push(Incoming {
                from: u,
                payload: o.payload,
            });
        }
    }
    let next = exec::map_range(mode, n, |v| {
        algo.receive(&ctx(v), &states[v], round, &inbox[v])
    });
    Ok((next, log))
}

fn stopped<A: NodeAlgorithm>(
    graph: &MultiGraph,
    algo: &A,
    stop: &StopRule,
    states: &[A::State],
    round: u64,
) -> bool {
    match stop {
        StopRule::AllOutput => states.iter().all(|s| algo.output(s).is_some()),
        StopRule::OutputAt(ids) => ids.iter().all(|id| {
            graph
                .index_of(id)
                .is_some_and(|k| algo.output(&states[k]).is_some())
        }),
        StopRule::Rounds(t) => round >= *t,
    }
}

/// Runs `algo` from its initial configuration.
pub fn run<A: NodeAlgorithm>(
    graph: &MultiGraph,
    algo: &A,
    inputs: &BTreeMap<NodeId, Bits>,
    tape_seed: u64,
    cfg: &RunConfig,
) -> Result<ExecutionTrace<A::State>, CongestError> {
    for id in inputs.keys() {
        if graph.index_of(id).is_none() {
            return Err(CongestError::UnknownNode(*id));
        }
    }
    let tape = RandomTape::new(tape_seed);
    let bandwidth = cfg
        .bandwidth
        .unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let initial = exec::map_range(cfg.mode, graph.node_count(), |v| {
        let ctx = NodeCtx {
            graph,
            node: v,
            tape: &tape,
            bandwidth,
        };
        algo.init(&ctx, inputs.get(&graph.node(v)))
    });
    run_from(graph, algo, tape_seed, 0, initial, cfg)
}

/// Continues a run from the states at the end of `start_round`.
pub fn run_from<A: NodeAlgorithm>(
    graph: &MultiGraph,
    algo: &A,
    tape_seed: u64,
    start_round: u64,
    states: Vec<A::State>,
    cfg: &RunConfig,
) -> Result<ExecutionTrace<A::State>, CongestError> {
    if cfg.max_rounds == 0 {
        return Err(CongestError::NoRounds);
    }
    assert_eq!(states.len(), graph.node_count(), "one state per node");
    let tape = RandomTape::new(tape_seed);
    let bandwidth = cfg
        .bandwidth
        .unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let mut trace = ExecutionTrace {
        nodes: graph.nodes().to_vec(),
        first_snapshot: start_round,
        snapshots: VecDeque::from([states]),
        messages: Vec::new(),
        outputs: Vec::new(),
        rounds: start_round,
        bandwidth,
    };
    let mut round = start_round;
    while !stopped(graph, algo, &cfg.stop, trace.final_states(), round) {
        round += 1;
        if round > cfg.max_rounds {
            return Err(CongestError::RoundLimitExceeded(cfg.max_rounds));
        }
        let (next, log) = step_all(
            graph,
            algo,
            &tape,
            bandwidth,
            trace.final_states(),
            round,
            cfg.mode,
        )?;
        if cfg.record_messages {
            trace.messages.extend(log);
        }
        trace.snapshots.push_back(next);
        if let Some(depth) = cfg.snapshot_depth {
            while trace.snapshots.len() > depth.max(1) {
                trace.snapshots.pop_front();
                trace.first_snapshot += 1;
            }
        }
        trace.rounds = round;
    }
    trace.outputs = trace
        .final_states()
        .iter()
        .map(|s| algo.output(s))
        .collect();
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DivergenceKind {
    State,
    Message,
    RoundCount { recorded: u64, replayed: u64 },
    ReplayFailed(String),
}

/// First point at which a replay differs from a recorded trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub round: u64,
    pub node: Option<NodeId>,
    pub kind: DivergenceKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub matches: bool,
    pub divergence: Option<Divergence>,
}

/// Re-executes the run and compares it state-by-state and message-by-message.
pub fn replay_check<A: NodeAlgorithm>(
    trace: &ExecutionTrace<A::State>,
    graph: &MultiGraph,
    algo: &A,
    inputs: &BTreeMap<NodeId, Bits>,
    tape_seed: u64,
    cfg: &RunConfig,
) -> ReplayReport {
    let fail = |d: Divergence| ReplayReport {
        matches: false,
        divergence: Some(d),
    };
    let replay = match run(graph, algo, inputs, tape_seed, cfg) {
        Ok(t) => t,
        Err(e) => {
            return fail(Divergence {
                round: 0,
                node: None,
                kind: DivergenceKind::ReplayFailed(e.to_string()),
            })
        }
    };
    let last = trace.rounds.min(replay.rounds);
    for tau in 0..=last {
        if tau > 0 {
            let a: Vec<_> = trace.messages_in_round(tau).collect();
            let b: Vec<_> = replay.messages_in_round(tau).collect();
            if a != b {
                let node = a
                    .iter()
                    .zip(&b)
                    .find(|(x, y)| x != y)
                    .map(|(x, _)| x.sender)
                    .or_else(|| a.get(b.len()).or(b.get(a.len())).map(|m| m.sender));
                return fail(Divergence {
                    round: tau,
                    node,
                    kind: DivergenceKind::Message,
                });
            }
        }
        if let (Some(a), Some(b)) = (trace.snapshot(tau), replay.snapshot(tau)) {
            if let Some(k) = (0..a.len()).find(|&k| a[k] != b[k]) {
                return fail(Divergence {
                    round: tau,
                    node: Some(graph.node(k)),
                    kind: DivergenceKind::State,
                });
            }
        }
    }
    if trace.rounds != replay.rounds {
        return fail(Divergence {
            round: last,
            node: None,
            kind: DivergenceKind::RoundCount {
                recorded: trace.rounds,
                replayed: replay.rounds,
            },
        });
    }
    ReplayReport {
        matches: true,
        divergence: None,
    }
}
