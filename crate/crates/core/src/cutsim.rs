//! Two-party simulation of a network run across shrinking cuts.
//!
//! Alice starts out knowing the initial state of every node except `t`,
//! Bob of every node except `s`. Protocol rounds are numbered downward from
//! `K`. Round `r` advances simulated time from `t_r` to `t_r + φ'_r` twice:
//!
//! * A-phase: Alice runs a fast-shrinking set `A(r - i·Λ^(⌊κ⌋-1), 1)` on her
//!   own, and sends the highway messages that enter Bob's slowly shrinking
//!   set `B(-r, φ'_r - i)` from outside it.
//! * B-phase: the mirror image, with Bob replaying from his round-start
//!   snapshot and Alice's slow set `A(r, φ'_r - i)` receiving.
//!
//! Each phase's messages depend only on the sender's round-start knowledge,
//! so a protocol round is one message from each party. The run stops once
//! Bob knows the state of `t` at time `T_A`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::bits::Bits;
use crate::congest::{
    self, default_bandwidth, emit, ExecutionTrace, NodeAlgorithm, NodeCtx, Outgoing, RunConfig,
    StopRule,
};
use crate::exec::{self, ExecMode};
use crate::family::{Family, FamilyError, KnownSet, Side};
use crate::graph::{MultiGraph, NodeId};
use crate::tape::RandomTape;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CutSimError {
    #[error("algorithm needs {t_a} rounds, more than the {limit} the schedule supports")]
    TooManySteps { t_a: u64, limit: String },
    #[error("iteration {iteration}: {node} is needed but not known to the {party:?} side")]
    CoverageGap {
        iteration: String,
        node: NodeId,
        party: Side,
    },
    #[error("algorithm does not declare a worst-case running time")]
    UnknownRunningTime,
    #[error("state of {node} at time {tau} differs from the direct run")]
    StateMismatch { tau: u64, node: NodeId },
    #[error(transparent)]
    Congest(#[from] congest::CongestError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    #[serde(rename = "A")]
    AliceSends,
    #[serde(rename = "B")]
    BobSends,
}

impl Phase {
    pub fn sender(self) -> Side {
        match self {
            Phase::AliceSends => Side::Alice,
            Phase::BobSends => Side::Bob,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IterationId {
    pub round: i64,
    pub phase: Phase,
    pub index: u64,
}

impl std::fmt::Display for IterationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = match self.phase {
            Phase::AliceSends => 'A',
            Phase::BobSends => 'B',
        };
        write!(f, "I({},{},{})", self.round, p, self.index)
    }
}

/// One iteration of the schedule and the sets known after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub id: IterationId,
    /// Simulated time reached by this iteration.
    pub tau: u64,
    /// Sender's fast set at `tau - 1`, the source of crossing messages.
    pub sender_prior: KnownSet,
    /// Sender's fast set at `tau`.
    pub sender_set: KnownSet,
    /// Receiver's slow set at `tau - 1`.
    pub receiver_prior: KnownSet,
    /// Receiver's slow set at `tau`.
    pub receiver_target: KnownSet,
}

impl ScheduleEntry {
    /// Sets known by `(Alice, Bob)` after this iteration.
    pub fn known_after(&self) -> (KnownSet, KnownSet) {
        match self.id.phase {
            Phase::AliceSends => (self.sender_set, self.receiver_target),
            Phase::BobSends => (self.receiver_target, self.sender_set),
        }
    }
}

/// Largest `T_A` the schedule can host without violating its hypothesis.
///
/// Errors unless `T_A ≤ κΛ^κ`; also refuses `T_A` beyond `t_0`.
pub fn check_steps(family: &Family, t_a: u64) -> Result<(), CutSimError> {
    let kappa = family.kappa();
    let within = kappa.cmp_scaled_power(
        family.lambda(),
        (&BigUint::from(t_a), &BigUint::one()),
        (&BigUint::from(kappa.num()), &BigUint::from(kappa.den())),
    )? != std::cmp::Ordering::Greater;
    let capacity = family.t(0)?;
    if !within || t_a > capacity {
        return Err(CutSimError::TooManySteps {
            t_a,
            limit: format!(
                "kappa*Lambda^kappa = {:.3}",
                kappa.to_f64() * (family.lambda() as f64).powf(kappa.to_f64())
            ),
        });
    }
    Ok(())
}

/// Last protocol round `r'`: the largest `r` with `t_r + φ'_r ≥ T_A`.
pub fn last_round(family: &Family, t_a: u64) -> Result<i64, CutSimError> {
    check_steps(family, t_a)?;
    let k = family.k_max();
    for r in (1..=k).rev() {
        if family.t(r)? + family.phi_prime(r)? >= t_a {
            return Ok(r);
        }
    }
    unreachable!("check_steps bounds T_A by t_0")
}

/// Protocol rounds used for `T_A` steps: `K - r' + 1`, or 0 when `T_A = 0`.
pub fn rounds_used(family: &Family, t_a: u64) -> Result<u64, CutSimError> {
    if t_a == 0 {
        check_steps(family, 0)?;
        return Ok(0);
    }
    Ok((family.k_max() - last_round(family, t_a)? + 1) as u64)
}

/// Full iteration order for simulating `T_A` steps.
pub fn schedule(family: &Family, t_a: u64) -> Result<Vec<ScheduleEntry>, CutSimError> {
    check_steps(family, t_a)?;
    let mut out = Vec::new();
    if t_a == 0 {
        return Ok(out);
    }
    let r_last = last_round(family, t_a)?;
    let sp = family.top_spacing() as i64;
    for r in (r_last..=family.k_max()).rev() {
        let tr = family.t(r)?;
        let width = family.phi_prime(r)?;
        let steps = if r == r_last { t_a - tr } else { width };
        let phases: &[Phase] = if r == r_last {
            &[Phase::AliceSends]
        } else {
            &[Phase::AliceSends, Phase::BobSends]
        };
        for &phase in phases {
            let (me, other, sign) = match phase {
                Phase::AliceSends => (Side::Alice, Side::Bob, 1),
                Phase::BobSends => (Side::Bob, Side::Alice, -1),
            };
            for i in 1..=steps {
                let fast = |k: u64| {
                    if k == 0 {
                        family.known_set(me, sign * r, width)
                    } else {
                        family.known_set(me, sign * (r - k as i64 * sp), 1)
                    }
                };
                let slow = |k: u64| family.known_set(other, -sign * r, width - k);
                out.push(ScheduleEntry {
                    id: IterationId {
                        round: r,
                        phase,
                        index: i,
                    },
                    tau: tr + i,
                    sender_prior: fast(i - 1),
                    sender_set: fast(i),
                    receiver_prior: slow(i - 1),
                    receiver_target: slow(i),
                });
            }
        }
    }
    Ok(out)
}

/// Edge classes `(u, v)` with `u` outside `outer` and `v` inside `inner`.
pub fn cut_edges(
    family: &Family,
    graph: &MultiGraph,
    outer: &KnownSet,
    inner: &KnownSet,
) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for (vi, v) in graph.nodes().iter().enumerate() {
        if !family.contains(inner, v) {
            continue;
        }
        for a in graph.neighbors(vi) {
            let u = graph.node(a.node);
            if !family.contains(outer, &u) {
                out.push((u, *v));
            }
        }
    }
    out
}

/// States of a node set at one simulated time, held by one party.
#[derive(Clone, Debug)]
pub struct KnownConfig<S> {
    pub owner: Side,
    pub tau: u64,
    pub set: KnownSet,
    pub states: Vec<Option<S>>,
}

impl<S> KnownConfig<S> {
    pub fn state(&self, node: usize) -> Option<&S> {
        self.states[node].as_ref()
    }

    pub fn len(&self) -> usize {
        self.states.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossingMessage {
    pub from: NodeId,
    pub to: NodeId,
    pub bits: usize,
    #[serde(skip)]
    pub payload: Bits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub round: i64,
    pub phase: Phase,
    pub index: u64,
    pub tau: u64,
    pub messages: Vec<CrossingMessage>,
    /// Edge classes that cross into the receiver's target, silent or not.
    pub crossing_edges: usize,
    pub bits: usize,
    pub cumulative_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoPartyTranscript {
    pub iterations: Vec<IterationRecord>,
    pub total_bits: usize,
    pub rounds_used: u64,
    pub bob_output: Option<Bits>,
}

/// Exact bound checks and headline numbers of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub algorithm: String,
    pub kappa: f64,
    pub lambda: u64,
    pub gamma: u32,
    pub bandwidth: usize,
    #[serde(rename = "T_A")]
    pub t_a: u64,
    pub rounds_used: u64,
    /// `8 T_A / (κΛ)`.
    pub round_bound: f64,
    pub bits: usize,
    /// `2 κ B T_A`.
    pub bit_bound: f64,
    pub max_iteration_bits: usize,
    /// `⌈κ⌉ B`.
    pub iteration_bit_bound: usize,
    pub max_crossing_edges: usize,
    pub output_match: bool,
    pub rounds_ok: bool,
    pub bits_ok: bool,
    pub iteration_bits_ok: bool,
}

impl SimulationSummary {
    pub fn all_ok(&self) -> bool {
        self.output_match && self.rounds_ok && self.bits_ok && self.iteration_bits_ok
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub bob_output: Option<Bits>,
    pub direct_output: Option<Bits>,
    pub transcript: TwoPartyTranscript,
    pub summary: SimulationSummary,
    pub schedule: Vec<ScheduleEntry>,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub bandwidth: Option<usize>,
    /// Compare every known state with the direct run.
    pub verify: bool,
    pub mode: ExecMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            bandwidth: None,
            verify: true,
            mode: ExecMode::default(),
        }
    }
}

/// One Alice/Bob simulation of `algo` on a built member of the family.
pub struct Session<'a, A: NodeAlgorithm> {
    family: &'a Family,
    graph: &'a MultiGraph,
    algo: &'a A,
    tape: RandomTape,
    bandwidth: usize,
    mode: ExecMode,
    oracle: Option<&'a ExecutionTrace<A::State>>,
}

impl<'a, A: NodeAlgorithm> Session<'a, A> {
    pub fn new(
        family: &'a Family,
        graph: &'a MultiGraph,
        algo: &'a A,
        tape_seed: u64,
        bandwidth: usize,
        mode: ExecMode,
    ) -> Self {
        Self {
            family,
            graph,
            algo,
            tape: RandomTape::new(tape_seed),
            bandwidth,
            mode,
            oracle: None,
        }
    }

    /// Checks every computed configuration against `trace`.
    pub fn verify_against(mut self, trace: &'a ExecutionTrace<A::State>) -> Self {
        self.oracle = Some(trace);
        self
    }

    fn ctx(&self, node: usize) -> NodeCtx<'_> {
        NodeCtx {
            graph: self.graph,
            node,
            tape: &self.tape,
            bandwidth: self.bandwidth,
        }
    }

    fn members(&self, set: &KnownSet) -> Vec<usize> {
        (0..self.graph.node_count())
            .filter(|&v| self.family.contains(set, &self.graph.node(v)))
            .collect()
    }

    /// Initial configuration of everything one party knows.
    pub fn initial(&self, side: Side, own_input: Option<&Bits>) -> KnownConfig<A::State> {
        let k = self.family.k_max();
        let set = match side {
            Side::Alice => self.family.known_set(side, k, self.family.phi_prime(k).expect("K")),
            Side::Bob => self.family.known_set(side, -k, self.family.phi_prime(k).expect("K")),
        };
        let own = match side {
            Side::Alice => NodeId::Source,
            Side::Bob => NodeId::Sink,
        };
        let members = self.members(&set);
        let states = exec::map(self.mode, &members, |&v| {
            let input = (self.graph.node(v) == own).then_some(own_input).flatten();
            (v, self.algo.init(&self.ctx(v), input))
        });
        let mut out = vec![None; self.graph.node_count()];
        for (v, s) in states {
            out[v] = Some(s);
        }
        KnownConfig {
            owner: side,
            tau: 0,
            set,
            states: out,
        }
    }

    fn emit_all(
        &self,
        known: &KnownConfig<A::State>,
        senders: &[usize],
        tau: u64,
    ) -> Result<HashMap<usize, Vec<Outgoing>>, CutSimError> {
        let out = exec::map(self.mode, senders, |&u| {
            let st = known.state(u).expect("caller checked membership");
            emit(self.algo, &self.ctx(u), st, tau).map(|m| (u, m))
        });
        out.into_iter()
            .map(|r| r.map_err(CutSimError::from))
            .collect()
    }

    /// Messages sent at `tau` into `target` by nodes outside `prior`.
    ///
    /// `sender` must know the state at `tau - 1` of every such node.
    pub fn crossing_messages(
        &self,
        sender: &KnownConfig<A::State>,
        prior: &KnownSet,
        target: &KnownSet,
        tau: u64,
        label: &str,
    ) -> Result<(Vec<CrossingMessage>, usize), CutSimError> {
        let mut edges = Vec::new();
        for v in self.members(target) {
            for a in self.graph.neighbors(v) {
                let u = a.node;
                if !self.family.contains(prior, &self.graph.node(u)) {
                    if sender.state(u).is_none() {
                        return Err(CutSimError::CoverageGap {
                            iteration: label.into(),
                            node: self.graph.node(u),
                            party: sender.owner,
                        });
                    }
                    edges.push((u, v));
                }
            }
        }
        let mut senders: Vec<usize> = edges.iter().map(|e| e.0).collect();
        senders.sort_unstable();
        senders.dedup();
        let emitted = self.emit_all(sender, &senders, tau)?;
        let mut msgs = Vec::new();
        for &(u, v) in &edges {
            if let Some(o) = emitted[&u].iter().find(|o| o.to == v) {
                msgs.push(CrossingMessage {
                    from: self.graph.node(u),
                    to: self.graph.node(v),
                    bits: o.payload.len(),
                    payload: o.payload.clone(),
                });
            }
        }
        Ok((msgs, edges.len()))
    }

    /// Advances `known` by one step onto `target`, using `external` for
    /// messages whose sender lies outside `known`.
    pub fn advance(
        &self,
        known: &KnownConfig<A::State>,
        target: KnownSet,
        external: &[CrossingMessage],
        label: &str,
    ) -> Result<KnownConfig<A::State>, CutSimError> {
        let tau = known.tau + 1;
        let members = self.members(&target);
        let gap = |node: usize| CutSimError::CoverageGap {
            iteration: label.into(),
            node: self.graph.node(node),
            party: known.owner,
        };
        let mut senders = Vec::new();
        for &v in &members {
            if known.state(v).is_none() {
                return Err(gap(v));
            }
            for a in self.graph.neighbors(v) {
                if known.state(a.node).is_some() {
                    senders.push(a.node);
                }
            }
        }
        senders.sort_unstable();
        senders.dedup();
        let emitted = self.emit_all(known, &senders, tau)?;
        let mut from_outside: HashMap<(NodeId, NodeId), &Bits> = HashMap::new();
        for m in external {
            from_outside.insert((m.from, m.to), &m.payload);
        }
        let mut inboxes = Vec::with_capacity(members.len());
        for &v in &members {
            let mut inbox = Vec::new();
            for a in self.graph.neighbors(v) {
                let u = a.node;
                let payload = if let Some(out) = emitted.get(&u) {
                    out.iter().find(|o| o.to == v).map(|o| o.payload.clone())
                } else {
                    from_outside
                        .get(&(self.graph.node(u), self.graph.node(v)))
                        .map(|p| (*p).clone())
                };
                if let Some(payload) = payload {
                    inbox.push(congest::Incoming { from: u, payload });
                }
            }
            inboxes.push((v, inbox));
        }
        let next = exec::map(self.mode, &inboxes, |(v, inbox)| {
            let st = known.state(*v).expect("checked above");
            (*v, self.algo.receive(&self.ctx(*v), st, tau, inbox))
        });
        let mut states = vec![None; self.graph.node_count()];
        for (v, s) in next {
            states[v] = Some(s);
        }
        let cfg = KnownConfig {
            owner: known.owner,
            tau,
            set: target,
            states,
        };
        self.check(&cfg)?;
        Ok(cfg)
    }

    /// Advances a fast set that must not depend on anything outside `known`.
    fn advance_closed(
        &self,
        known: &KnownConfig<A::State>,
        target: KnownSet,
        label: &str,
    ) -> Result<KnownConfig<A::State>, CutSimError> {
        for v in self.members(&target) {
            for a in self.graph.neighbors(v) {
                if known.state(a.node).is_none() {
                    return Err(CutSimError::CoverageGap {
                        iteration: label.into(),
                        node: self.graph.node(a.node),
                        party: known.owner,
                    });
                }
            }
        }
        self.advance(known, target, &[], label)
    }

    fn check(&self, cfg: &KnownConfig<A::State>) -> Result<(), CutSimError> {
        let Some(trace) = self.oracle else {
            return Ok(());
        };
        let Some(snap) = trace.snapshot(cfg.tau) else {
            return Ok(());
        };
        for (v, st) in cfg.states.iter().enumerate() {
            if let Some(st) = st {
                if *st != snap[v] {
                    return Err(CutSimError::StateMismatch {
                        tau: cfg.tau,
                        node: self.graph.node(v),
                    });
                }
            }
        }
        Ok(())
    }

    /// Runs the protocol for `t_a` steps from the given inputs.
    pub fn run(
        &self,
        x: Option<&Bits>,
        y: Option<&Bits>,
        t_a: u64,
    ) -> Result<(TwoPartyTranscript, Vec<ScheduleEntry>), CutSimError> {
        let sched = schedule(self.family, t_a)?;
        let mut alice_slow = self.initial(Side::Alice, x);
        let mut bob_slow = self.initial(Side::Bob, y);
        self.check(&alice_slow)?;
        self.check(&bob_slow)?;
        let mut iterations = Vec::new();
        let mut cumulative = 0;
        // Round-start snapshots each sender replays from.
        let mut alice_start = alice_slow.clone();
        let mut bob_start = bob_slow.clone();
        let mut fast: Option<KnownConfig<A::State>> = None;
        let mut current_round = None;
        for e in &sched {
            if current_round != Some(e.id.round) {
                current_round = Some(e.id.round);
                alice_start = alice_slow.clone();
                bob_start = bob_slow.clone();
            }
            if e.id.index == 1 {
                fast = Some(match e.id.phase {
                    Phase::AliceSends => alice_start.clone(),
                    Phase::BobSends => bob_start.clone(),
                });
            }
            let label = e.id.to_string();
            let sender = fast.take().expect("fast track initialised");
            debug_assert_eq!(sender.set, e.sender_prior);
            let receiver = match e.id.phase {
                Phase::AliceSends => &mut bob_slow,
                Phase::BobSends => &mut alice_slow,
            };
            debug_assert_eq!(receiver.set, e.receiver_prior);
            let (msgs, crossing_edges) =
                self.crossing_messages(&sender, &receiver.set, &e.receiver_target, e.tau, &label)?;
            *receiver = self.advance(receiver, e.receiver_target, &msgs, &label)?;
            let next_fast = if e.tau < t_a && e.sender_set != e.sender_prior {
                self.advance_closed(&sender, e.sender_set, &label)?
            } else {
                // Not needed again, or already at the target set.
                KnownConfig {
                    tau: e.tau,
                    set: e.sender_set,
                    ..sender.clone()
                }
            };
            fast = Some(next_fast);
            let bits: usize = msgs.iter().map(|m| m.bits).sum();
            cumulative += bits;
            iterations.push(IterationRecord {
                round: e.id.round,
                phase: e.id.phase,
                index: e.id.index,
                tau: e.tau,
                messages: msgs,
                crossing_edges,
                bits,
                cumulative_bits: cumulative,
            });
        }
        let t = self.graph.index_of(&NodeId::Sink).expect("t exists");
        let bob_output = bob_slow.state(t).and_then(|s| self.algo.output(s));
        Ok((
            TwoPartyTranscript {
                total_bits: cumulative,
                rounds_used: rounds_used(self.family, t_a)?,
                iterations,
                bob_output,
            },
            sched,
        ))
    }
}

/// Simulates `algo` with `x` at `s` and `y` at `t`, and compares the result
/// with a direct run.
pub fn simulate<A: NodeAlgorithm>(
    family: &Family,
    graph: &MultiGraph,
    algo: &A,
    x: Option<&Bits>,
    y: Option<&Bits>,
    tape_seed: u64,
    opts: &SimOptions,
) -> Result<SimulationOutcome, CutSimError> {
    let t_a = algo.round_bound().ok_or(CutSimError::UnknownRunningTime)?;
    check_steps(family, t_a)?;
    let bandwidth = opts
        .bandwidth
        .unwrap_or_else(|| default_bandwidth(graph.node_count()));
    let mut inputs = BTreeMap::new();
    if let Some(x) = x {
        inputs.insert(NodeId::Source, x.clone());
    }
    if let Some(y) = y {
        inputs.insert(NodeId::Sink, y.clone());
    }
    let cfg = RunConfig {
        max_rounds: t_a.max(1),
        bandwidth: Some(bandwidth),
        stop: StopRule::Rounds(t_a),
        snapshot_depth: None,
        record_messages: false,
        mode: opts.mode,
    };
    let direct = congest::run(graph, algo, &inputs, tape_seed, &cfg)?;
    let mut session = Session::new(family, graph, algo, tape_seed, bandwidth, opts.mode);
    if opts.verify {
        session = session.verify_against(&direct);
    }
    let (transcript, sched) = session.run(x, y, t_a)?;
    let direct_output = direct.output_of(&NodeId::Sink).cloned();
    let summary = summarize(family, algo.name(), bandwidth, t_a, &transcript, &direct_output);
    Ok(SimulationOutcome {
        bob_output: transcript.bob_output.clone(),
        direct_output,
        transcript,
        summary,
        schedule: sched,
    })
}

fn summarize(
    family: &Family,
    algorithm: String,
    bandwidth: usize,
    t_a: u64,
    tr: &TwoPartyTranscript,
    direct_output: &Option<Bits>,
) -> SimulationSummary {
    let kappa = family.kappa();
    let (p, q) = (u128::from(kappa.num()), u128::from(kappa.den()));
    let lam = u128::from(family.lambda());
    let b = bandwidth as u128;
    let t = u128::from(t_a);
    let kf = kappa.to_f64();
    let max_iteration_bits = tr.iterations.iter().map(|i| i.bits).max().unwrap_or(0);
    let iteration_bit_bound = kappa.ceil() as usize * bandwidth;
    SimulationSummary {
        algorithm,
        kappa: kf,
        lambda: family.lambda(),
        gamma: family.gamma(),
        bandwidth,
        t_a,
        rounds_used: tr.rounds_used,
        round_bound: 8.0 * t_a as f64 / (kf * family.lambda() as f64),
        bits: tr.total_bits,
        bit_bound: 2.0 * kf * bandwidth as f64 * t_a as f64,
        max_iteration_bits,
        iteration_bit_bound,
        max_crossing_edges: tr.iterations.iter().map(|i| i.crossing_edges).max().unwrap_or(0),
        output_match: tr.bob_output == *direct_output,
        // rounds ≤ 8T/(κΛ)  <=>  rounds·p·Λ ≤ 8·T·q
        rounds_ok: u128::from(tr.rounds_used) * p * lam <= 8 * t * q,
        // bits ≤ 2κBT  <=>  bits·q ≤ 2·p·B·T
        bits_ok: tr.total_bits as u128 * q <= 2 * p * b * t,
        iteration_bits_ok: max_iteration_bits <= iteration_bit_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::algorithms::Chatter;
    use crate::family::FamilyParams;

    fn example() -> (Family, MultiGraph) {
        let f = Family::new(FamilyParams::new(2.5, 2, 2).unwrap()).unwrap();
        let g = f.build();
        (f, g)
    }

    #[test]
    fn schedule_matches_worked_example() {
        let (f, _) = example();
        let s = schedule(&f, 14).unwrap();
        let first = s
            .iter()
            .find(|e| e.id == IterationId { round: 11, phase: Phase::AliceSends, index: 1 })
            .unwrap();
        assert_eq!(first.tau, 8);
        assert_eq!(first.sender_set, f.known_set(Side::Alice, 9, 1));
        assert_eq!(first.receiver_prior, f.known_set(Side::Bob, -11, 6));
        let sixth = s
            .iter()
            .find(|e| e.id == IterationId { round: 11, phase: Phase::AliceSends, index: 6 })
            .unwrap();
        assert_eq!(sixth.tau, 13);
        assert_eq!(sixth.receiver_target, f.known_set(Side::Bob, -10, 4));
        assert_eq!(rounds_used(&f, 14).unwrap(), 3);
    }

    #[test]
    fn too_many_steps() {
        let (f, _) = example();
        // 2.5 * 2^2.5 = 14.14
        assert!(check_steps(&f, 14).is_ok());
        assert!(matches!(check_steps(&f, 15), Err(CutSimError::TooManySteps { .. })));
    }

    #[test]
    fn chatter_simulation_is_exact() {
        let (f, g) = example();
        let algo = Chatter::deterministic(14, 3);
        let x: Bits = "1011".parse().unwrap();
        let y: Bits = "01".parse().unwrap();
        let out = simulate(&f, &g, &algo, Some(&x), Some(&y), 5, &SimOptions::default()).unwrap();
        assert!(out.summary.all_ok(), "{:?}", out.summary);
        assert_eq!(out.bob_output, out.direct_output);
        let it = out
            .transcript
            .iterations
            .iter()
            .find(|i| i.round == 11 && i.phase == Phase::AliceSends && i.index == 1)
            .unwrap();
        let edges: Vec<_> = it.messages.iter().map(|m| (m.from.to_string(), m.to.to_string())).collect();
        assert_eq!(
            edges,
            vec![
                ("H:1:-12".to_string(), "H:1:-10".to_string()),
                ("H:2:-12".to_string(), "H:2:-11".to_string()),
            ]
        );
    }
}
