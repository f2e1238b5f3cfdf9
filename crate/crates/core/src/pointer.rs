//! Pointer chasing: `g^0 = 1`, then alternately apply `f_A` and `f_B`.
//!
//! `pc^{r,m}(f_A, f_B) = g^{2r}`. Values are 1-indexed throughout.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::congest::{Incoming, NodeAlgorithm, NodeCtx, Outgoing};
use crate::graph::{MultiGraph, NodeId};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PcError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("g index {index} outside [0, {max}]")]
    IndexOutOfRange { index: u32, max: u32 },
    #[error("relay needs {needed} rounds, limit is {limit}")]
    InstanceTooLarge { needed: u64, limit: u64 },
    #[error("graph has no s-t route")]
    NoRoute,
}

/// Bits per pointer: `max(1, ⌈log₂ m⌉)`.
pub fn pointer_width(m: u32) -> usize {
    ceil_log2(m).max(1)
}

/// `⌈log₂ m⌉`, zero for `m ≤ 1`.
pub fn ceil_log2(m: u32) -> usize {
    if m <= 1 {
        0
    } else {
        (u32::BITS - (m - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcInstance {
    pub m: u32,
    pub r: u32,
    #[serde(rename = "fA")]
    pub fa: Vec<u32>,
    #[serde(rename = "fB")]
    pub fb: Vec<u32>,
}

impl PcInstance {
    pub fn new(m: u32, r: u32, fa: Vec<u32>, fb: Vec<u32>) -> Result<Self, PcError> {
        let inst = Self { m, r, fa, fb };
        inst.validate()?;
        Ok(inst)
    }

    pub fn identity(m: u32, r: u32) -> Self {
        let id: Vec<u32> = (1..=m).collect();
        Self::new(m, r, id.clone(), id).expect("identity is valid")
    }

    pub fn random<R: Rng + ?Sized>(m: u32, r: u32, rng: &mut R) -> Self {
        let mut f = || (0..m).map(|_| rng.gen_range(1..=m)).collect::<Vec<_>>();
        let fa = f();
        let fb = f();
        Self::new(m, r, fa, fb).expect("random tables are in range")
    }

    /// Random instance drawn from a ChaCha stream seeded with `seed`.
    pub fn seeded(m: u32, r: u32, seed: u64) -> Self {
        Self::random(m, r, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn validate(&self) -> Result<(), PcError> {
        let bad = |s: String| Err(PcError::InvalidInstance(s));
        if self.m < 1 || self.r < 1 {
            return bad(format!("m and r must be positive, got m={} r={}", self.m, self.r));
        }
        for (name, f) in [("fA", &self.fa), ("fB", &self.fb)] {
            if f.len() != self.m as usize {
                return bad(format!("{name} has {} entries, expected {}", f.len(), self.m));
            }
            if let Some(v) = f.iter().find(|&&v| v < 1 || v > self.m) {
                return bad(format!("{name} contains {v}, outside 1..={}", self.m));
            }
        }
        Ok(())
    }

    fn apply_a(&self, v: u32) -> u32 {
        self.fa[v as usize - 1]
    }

    fn apply_b(&self, v: u32) -> u32 {
        self.fb[v as usize - 1]
    }

    /// `g^i` for `0 ≤ i ≤ 2r`.
    pub fn g(&self, i: u32) -> Result<u32, PcError> {
        if i > 2 * self.r {
            return Err(PcError::IndexOutOfRange {
                index: i,
                max: 2 * self.r,
            });
        }
        Ok((1..=i).fold(1, |v, k| {
            if k % 2 == 1 {
                self.apply_a(v)
            } else {
                self.apply_b(v)
            }
        }))
    }

    pub fn pc(&self) -> u32 {
        self.g(2 * self.r).expect("2r is in range")
    }

    /// Relabels `[m]` by `perm` (1-indexed, `perm[0] = π(1)`): `f ↦ π∘f∘π⁻¹`.
    pub fn conjugate(&self, perm: &[u32]) -> Self {
        let mut inv = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inv[p as usize - 1] = k as u32 + 1;
        }
        let conj = |f: &[u32]| -> Vec<u32> {
            (1..=self.m)
                .map(|x| perm[f[inv[x as usize - 1] as usize - 1] as usize - 1])
                .collect()
        };
        Self {
            m: self.m,
            r: self.r,
            fa: conj(&self.fa),
            fb: conj(&self.fb),
        }
    }

    /// Table encoded as `m` fields of `width` bits holding `value - 1`.
    pub fn encode_table(f: &[u32], width: usize) -> Bits {
        let mut out = Bits::new();
        for &v in f {
            out.extend_from(&Bits::from_uint(u64::from(v - 1), width));
        }
        out
    }

    pub fn decode_table(bits: &Bits, m: u32, width: usize) -> Option<Vec<u32>> {
        (0..m as usize)
            .map(|k| bits.read_uint(k * width, width).map(|v| v as u32 + 1))
            .collect::<Option<Vec<_>>>()
            .filter(|f| f.iter().all(|&v| v <= m))
    }

    /// Inputs for `s` (holding `f_A`) and `t` (holding `f_B`).
    pub fn network_inputs(&self) -> BTreeMap<NodeId, Bits> {
        let w = pointer_width(self.m);
        BTreeMap::from([
            (NodeId::Source, Self::encode_table(&self.fa, w)),
            (NodeId::Sink, Self::encode_table(&self.fb, w)),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartyMessage {
    pub from: Party,
    pub bits: usize,
    pub payload: Bits,
}

/// Two-party exchange; each round is Alice then Bob.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub rounds: Vec<Vec<PartyMessage>>,
    pub total_bits: usize,
}

impl Transcript {
    pub fn rounds_used(&self) -> usize {
        self.rounds.len()
    }

    fn push(&mut self, round: usize, from: Party, payload: Bits) {
        while self.rounds.len() <= round {
            self.rounds.push(Vec::new());
        }
        self.total_bits += payload.len();
        self.rounds[round].push(PartyMessage {
            from,
            bits: payload.len(),
            payload,
        });
    }
}

/// Alice and Bob take turns sending the current pointer.
///
/// Uses `r` rounds and `2r⌈log₂ m⌉` bits; with `m = 1` every message is empty.
pub fn naive_direct_protocol(inst: &PcInstance) -> (u32, Transcript) {
    let w = ceil_log2(inst.m);
    let read = |p: &Bits| if w == 0 { 1 } else { p.to_uint().expect("fits") as u32 + 1 };
    let mut tr = Transcript::default();
    let mut bob_view = 1;
    for round in 0..inst.r as usize {
        // Alice knows the last pointer from Bob (1 at the start).
        let a = inst.apply_a(bob_view);
        tr.push(round, Party::Alice, Bits::from_uint(u64::from(a - 1), w));
        let got = read(&tr.rounds[round][0].payload);
        let b = inst.apply_b(got);
        tr.push(round, Party::Bob, Bits::from_uint(u64::from(b - 1), w));
        bob_view = read(&tr.rounds[round][1].payload);
    }
    (bob_view, tr)
}

/// Alice sends all of `f_A` at once (`m⌈log₂ m⌉` bits); Bob finishes locally.
pub fn one_round_everything_protocol(inst: &PcInstance) -> (u32, Transcript) {
    let w = ceil_log2(inst.m);
    let mut tr = Transcript::default();
    tr.push(0, Party::Alice, PcInstance::encode_table(&inst.fa, w));
    let fa = if w == 0 {
        vec![1; inst.m as usize]
    } else {
        PcInstance::decode_table(&tr.rounds[0][0].payload, inst.m, w).expect("well formed")
    };
    let local = PcInstance {
        fa,
        ..inst.clone()
    };
    (local.pc(), tr)
}

/// CONGEST algorithm computing `pc` on any graph containing `s` and `t`.
///
/// The current pointer travels along a fixed shortest `s`-`t` route,
/// `2r - 1` times in alternating directions. On each hop it moves in chunks
/// of at most `B × multiplicity` bits, so a hop costs `⌈w / cap⌉` rounds.
#[derive(Clone, Debug)]
pub struct PointerChasingRelay {
    m: u32,
    r: u32,
    width: usize,
    route: Vec<usize>,
    position: BTreeMap<usize, usize>,
    /// Capacity of hop `k` (route[k]-route[k+1]); `usize::MAX` if unbounded.
    caps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holding {
    traversal: u32,
    value: Bits,
    sent: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcRelayState {
    table: Option<Vec<u32>>,
    holding: Option<Holding>,
    buffer: Bits,
    expect: Option<u32>,
    output: Option<u32>,
}

impl PointerChasingRelay {
    pub fn new(
        graph: &MultiGraph,
        m: u32,
        r: u32,
        bandwidth: usize,
        max_rounds: u64,
    ) -> Result<Self, PcError> {
        if m < 1 || r < 1 {
            return Err(PcError::InvalidInstance("m and r must be positive".into()));
        }
        let s = graph.index_of(&NodeId::Source).ok_or(PcError::NoRoute)?;
        let t = graph.index_of(&NodeId::Sink).ok_or(PcError::NoRoute)?;
        let route = graph.shortest_path(s, t).ok_or(PcError::NoRoute)?;
        let caps = route
            .windows(2)
            .map(|w| {
                let e = graph.edge_between(w[0], w[1]).expect("route edges exist");
                graph.edge(e).multiplicity.capacity(bandwidth).unwrap_or(usize::MAX)
            })
            .collect::<Vec<_>>();
        let relay = Self {
            m,
            r,
            width: pointer_width(m),
            position: route.iter().enumerate().map(|(k, &v)| (v, k)).collect(),
            route,
            caps,
        };
        let needed = relay.rounds_needed();
        if needed > max_rounds || relay.caps.contains(&0) {
            return Err(PcError::InstanceTooLarge {
                needed,
                limit: max_rounds,
            });
        }
        Ok(relay)
    }

    pub fn route(&self) -> &[usize] {
        &self.route
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Rounds per one-way traversal: `Σ_hops ⌈w / cap⌉`.
    pub fn traversal_rounds(&self) -> u64 {
        self.caps
            .iter()
            .map(|&c| self.width.div_ceil(c.max(1)) as u64)
            .sum()
    }

    /// `(2r - 1) · Σ_hops ⌈w / cap⌉`.
    pub fn rounds_needed(&self) -> u64 {
        (2 * u64::from(self.r) - 1) * self.traversal_rounds()
    }

    fn traversals(&self) -> u32 {
        2 * self.r - 1
    }

    fn last(&self) -> usize {
        self.route.len() - 1
    }

    /// Whether traversal `d` ends at or passes through route index `k`.
    fn arrives(&self, d: u32, k: usize) -> bool {
        if d.is_multiple_of(2) {
            k > 0
        } else {
            k < self.last()
        }
    }

    fn next_expect(&self, from: u32, k: usize) -> Option<u32> {
        (from..self.traversals()).find(|&d| self.arrives(d, k))
    }

    fn next_hop(&self, k: usize, d: u32) -> Option<(usize, usize)> {
        if d.is_multiple_of(2) {
            (k < self.last()).then(|| (self.route[k + 1], self.caps[k]))
        } else {
            (k > 0).then(|| (self.route[k - 1], self.caps[k - 1]))
        }
    }

    fn predecessor(&self, k: usize, d: u32) -> usize {
        if d.is_multiple_of(2) {
            self.route[k - 1]
        } else {
            self.route[k + 1]
        }
    }

    fn encode(&self, v: u32) -> Bits {
        Bits::from_uint(u64::from(v - 1), self.width)
    }

    /// Decodes the output of `t` into a pointer value.
    pub fn decode_output(bits: &Bits) -> Option<u32> {
        bits.to_uint().map(|v| v as u32 + 1)
    }
}

impl NodeAlgorithm for PointerChasingRelay {
    type State = PcRelayState;

    fn name(&self) -> String {
        "pc-relay".into()
    }

    fn init(&self, ctx: &NodeCtx<'_>, input: Option<&Bits>) -> PcRelayState {
        let id = ctx.id();
        let table = matches!(id, NodeId::Source | NodeId::Sink).then(|| {
            input
                .and_then(|b| PcInstance::decode_table(b, self.m, self.width))
                .unwrap_or_else(|| vec![1; self.m as usize])
        });
        let k = self.position.get(&ctx.node).copied();
        let holding = (id == NodeId::Source).then(|| Holding {
            traversal: 0,
            value: self.encode(table.as_ref().expect("s has a table")[0]),
            sent: 0,
        });
        PcRelayState {
            table,
            holding,
            buffer: Bits::new(),
            expect: k.and_then(|k| self.next_expect(0, k)),
            output: None,
        }
    }

    fn send(&self, ctx: &NodeCtx<'_>, st: &PcRelayState, _: u64) -> Vec<Outgoing> {
        let (Some(h), Some(&k)) = (&st.holding, self.position.get(&ctx.node)) else {
            return Vec::new();
        };
        let Some((to, cap)) = self.next_hop(k, h.traversal) else {
            return Vec::new();
        };
        let end = (h.sent + cap.min(self.width)).min(self.width);
        vec![Outgoing {
            to,
            payload: h.value.slice(h.sent, end),
        }]
    }

    fn receive(&self, ctx: &NodeCtx<'_>, st: &PcRelayState, _: u64, inbox: &[Incoming]) -> PcRelayState {
        let mut next = st.clone();
        let Some(&k) = self.position.get(&ctx.node) else {
            return next;
        };
        if let Some(h) = &mut next.holding {
            if let Some((_, cap)) = self.next_hop(k, h.traversal) {
                h.sent = (h.sent + cap.min(self.width)).min(self.width);
                if h.sent == self.width {
                    next.holding = None;
                }
            }
        }
        let Some(d) = st.expect else {
            return next;
        };
        let pred = self.predecessor(k, d);
        let Some(msg) = inbox.iter().find(|m| m.from == pred) else {
            return next;
        };
        next.buffer.extend_from(&msg.payload);
        if next.buffer.len() < self.width {
            return next;
        }
        let value = std::mem::take(&mut next.buffer);
        next.expect = self.next_expect(d + 1, k);
        let v = value.to_uint().expect("width fits") as u32 + 1;
        let forward = match ctx.id() {
            NodeId::Source => {
                let fa = next.table.as_ref().expect("s has a table");
                Some(self.encode(fa[v as usize - 1]))
            }
            NodeId::Sink => {
                let fb = next.table.as_ref().expect("t has a table");
                let out = fb[v as usize - 1];
                if d + 1 == self.traversals() {
                    next.output = Some(out);
                    None
                } else {
                    Some(self.encode(out))
                }
            }
            _ => Some(value),
        };
        if let Some(value) = forward {
            next.holding = Some(Holding {
                traversal: d + u32::from(matches!(ctx.id(), NodeId::Source | NodeId::Sink)),
                value,
                sent: 0,
            });
        }
        next
    }

    fn output(&self, st: &PcRelayState) -> Option<Bits> {
        st.output.map(|v| self.encode(v))
    }

    fn round_bound(&self) -> Option<u64> {
        Some(self.rounds_needed())
    }
}

/// Builds the relay for `inst` on `graph`.
pub fn distributed_pc_algorithm(
    graph: &MultiGraph,
    inst: &PcInstance,
    bandwidth: usize,
    max_rounds: u64,
) -> Result<PointerChasingRelay, PcError> {
    inst.validate()?;
    PointerChasingRelay::new(graph, inst.m, inst.r, bandwidth, max_rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::{run, RunConfig, StopRule};
    use crate::family::{Family, FamilyParams};

    fn derived() -> PcInstance {
        PcInstance::new(4, 2, vec![2, 3, 4, 1], vec![3, 1, 4, 2]).unwrap()
    }

    #[test]
    fn recursion_on_derived_instance() {
        let inst = derived();
        let g: Vec<u32> = (0..=4).map(|i| inst.g(i).unwrap()).collect();
        assert_eq!(g, vec![1, 2, 1, 2, 1]);
        assert_eq!(inst.pc(), 1);
        assert!(inst.g(5).is_err());
    }

    #[test]
    fn constant_fa_collapses() {
        let inst = PcInstance::new(3, 3, vec![2, 2, 2], vec![3, 1, 2]).unwrap();
        // g1 = 2, g2 = fB(2) = 1, g3 = 2, ...
        assert_eq!(inst.g(2).unwrap(), inst.fb[1]);
    }

    #[test]
    fn validation() {
        assert!(PcInstance::new(2, 1, vec![1, 3], vec![1, 1]).is_err());
        assert!(PcInstance::new(2, 1, vec![1], vec![1, 1]).is_err());
        assert!(PcInstance::new(0, 1, vec![], vec![]).is_err());
        let json = r#"{"m":2,"r":1,"fA":[2,1],"fB":[1,1]}"#;
        let inst: PcInstance = serde_json::from_str(json).unwrap();
        assert_eq!(serde_json::to_string(&inst).unwrap(), json);
    }

    #[test]
    fn protocol_accounting() {
        let inst = derived();
        let (ans, tr) = naive_direct_protocol(&inst);
        assert_eq!((ans, tr.total_bits, tr.rounds_used()), (1, 8, 2));
        let (ans, tr) = one_round_everything_protocol(&inst);
        assert_eq!((ans, tr.total_bits, tr.rounds_used()), (1, 8, 1));
        let big = PcInstance::identity(16, 2);
        assert_eq!(one_round_everything_protocol(&big).1.total_bits, 64);
        let one = PcInstance::identity(1, 3);
        let (ans, tr) = naive_direct_protocol(&one);
        assert_eq!((ans, tr.total_bits, tr.rounds_used()), (1, 0, 3));
    }

    #[test]
    fn conjugation_commutes_with_pc() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let inst = PcInstance::random(5, 3, &mut rng);
        let perm = vec![1, 4, 2, 5, 3];
        let c = inst.conjugate(&perm);
        assert_eq!(c.pc(), perm[inst.pc() as usize - 1]);
    }

    #[test]
    fn relay_on_smallest_network() {
        let fam = Family::new(FamilyParams::new(1.0, 2, 2).unwrap()).unwrap();
        let g = fam.build();
        let inst = derived();
        let relay = distributed_pc_algorithm(&g, &inst, 4, 10_000).unwrap();
        let cfg = RunConfig::default()
            .with_bandwidth(4)
            .with_stop(StopRule::OutputAt(vec![NodeId::Sink]));
        let trace = run(&g, &relay, &inst.network_inputs(), 0, &cfg).unwrap();
        let out = trace.output_of(&NodeId::Sink).unwrap();
        assert_eq!(PointerChasingRelay::decode_output(out), Some(inst.pc()));
        let s = g.index_of(&NodeId::Source).unwrap();
        let t = g.index_of(&NodeId::Sink).unwrap();
        let dist = u64::from(g.bfs(s)[t].unwrap());
        assert_eq!(trace.rounds, 3 * dist);
        assert_eq!(trace.rounds, relay.rounds_needed());
    }

    #[test]
    fn relay_chunks_over_narrow_edges() {
        // A route whose middle hop is a single-copy highway edge with B = 1.
        let fam = Family::new(FamilyParams::new(2.0, 2, 1).unwrap()).unwrap();
        let g = fam.build();
        let inst = PcInstance::identity(8, 1);
        let relay = distributed_pc_algorithm(&g, &inst, 1, 10_000).unwrap();
        let cfg = RunConfig::default()
            .with_bandwidth(1)
            .with_stop(StopRule::OutputAt(vec![NodeId::Sink]));
        let trace = run(&g, &relay, &inst.network_inputs(), 0, &cfg).unwrap();
        assert_eq!(trace.rounds, relay.rounds_needed());
        assert_eq!(
            PointerChasingRelay::decode_output(trace.output_of(&NodeId::Sink).unwrap()),
            Some(1)
        );
        trace.check_budget(&g).unwrap();
        assert!(distributed_pc_algorithm(&g, &inst, 1, 3).is_err());
    }
}
