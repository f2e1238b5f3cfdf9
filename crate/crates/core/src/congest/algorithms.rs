//! Reference algorithms used by tests, benches and the cut simulation.

use super::{Incoming, NodeAlgorithm, NodeCtx, Outgoing};
use crate::bits::Bits;
use crate::graph::NodeId;
use crate::tape::mix64;

/// Stable 64-bit fingerprint of a node label.
pub fn label_hash(id: &NodeId) -> u64 {
    let (tag, a, b, c) = match *id {
        NodeId::Source => (1, 0, 0, 0),
        NodeId::Sink => (2, 0, 0, 0),
        NodeId::Highway { level, sub } => (3, u64::from(level), sub as u64, 0),
        NodeId::Path { path, sub, pos } => (4, u64::from(path), sub as u64, pos),
    };
    [a, b, c].iter().fold(mix64(tag), |h, &x| mix64(h ^ x))
}

fn bits_hash(bits: &Bits) -> u64 {
    let mut h = mix64(bits.len() as u64);
    for (k, chunk) in (0..bits.len()).step_by(64).enumerate() {
        let w = (bits.len() - chunk).min(64);
        h = mix64(h ^ bits.read_uint(chunk, w).unwrap_or(0) ^ k as u64);
    }
    h
}

/// Floods the first bit of any input to the whole network.
#[derive(Clone, Copy, Debug, Default)]
pub struct Flood;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloodState {
    bit: Option<bool>,
    forwarded: bool,
}

impl NodeAlgorithm for Flood {
    type State = FloodState;

    fn name(&self) -> String {
        "flood".into()
    }

    fn init(&self, _: &NodeCtx<'_>, input: Option<&Bits>) -> FloodState {
        FloodState {
            bit: input.and_then(|b| b.get(0)),
            forwarded: false,
        }
    }

    fn send(&self, ctx: &NodeCtx<'_>, st: &FloodState, _: u64) -> Vec<Outgoing> {
        match st.bit {
            Some(b) if !st.forwarded => ctx
                .neighbors()
                .iter()
                .map(|a| Outgoing {
                    to: a.node,
                    payload: Bits::from_iter([b]),
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn receive(&self, _: &NodeCtx<'_>, st: &FloodState, _: u64, inbox: &[Incoming]) -> FloodState {
        FloodState {
            bit: st.bit.or_else(|| inbox.first().and_then(|m| m.payload.get(0))),
            forwarded: st.bit.is_some(),
        }
    }

    fn output(&self, st: &FloodState) -> Option<Bits> {
        st.bit.map(|b| Bits::from_iter([b]))
    }
}

/// Carries the input of `route[0]` hop by hop to the last node of the route.
#[derive(Clone, Debug)]
pub struct TokenRelay {
    route: Vec<usize>,
    token_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelayState {
    token: Option<Bits>,
    done: bool,
}

impl TokenRelay {
    pub fn new(route: Vec<usize>, token_bits: usize) -> Self {
        assert!(!route.is_empty(), "route needs at least one node");
        Self { route, token_bits }
    }

    fn position(&self, node: usize) -> Option<usize> {
        self.route.iter().position(|&v| v == node)
    }
}

impl NodeAlgorithm for TokenRelay {
    type State = RelayState;

    fn name(&self) -> String {
        "relay".into()
    }

    fn init(&self, ctx: &NodeCtx<'_>, input: Option<&Bits>) -> RelayState {
        let token = (ctx.node == self.route[0]).then(|| {
            let mut t = input.cloned().unwrap_or_default();
            t = t.slice(0, t.len().min(self.token_bits));
            while t.len() < self.token_bits {
                t.push(false);
            }
            t
        });
        RelayState { token, done: false }
    }

    fn send(&self, ctx: &NodeCtx<'_>, st: &RelayState, _: u64) -> Vec<Outgoing> {
        match (&st.token, self.position(ctx.node)) {
            (Some(t), Some(k)) if !st.done && k + 1 < self.route.len() => vec![Outgoing {
                to: self.route[k + 1],
                payload: t.clone(),
            }],
            _ => Vec::new(),
        }
    }

    fn receive(&self, ctx: &NodeCtx<'_>, st: &RelayState, _: u64, inbox: &[Incoming]) -> RelayState {
        let k = self.position(ctx.node);
        let last = k == Some(self.route.len() - 1);
        if st.token.is_some() {
            // Forwarding nodes are done once they have sent.
            return RelayState {
                token: st.token.clone(),
                done: st.done || !last,
            };
        }
        let prev = k.and_then(|k| k.checked_sub(1)).map(|p| self.route[p]);
        let token = inbox
            .iter()
            .find(|m| Some(m.from) == prev)
            .map(|m| m.payload.clone());
        RelayState { token, done: false }
    }

    fn output(&self, st: &RelayState) -> Option<Bits> {
        // Only the route's last node keeps `done == false` while holding the token.
        st.token.as_ref().filter(|_| !st.done).cloned()
    }

    fn round_bound(&self) -> Option<u64> {
        Some(self.route.len() as u64 - 1)
    }
}

/// Runs a fixed number of rounds exchanging hashed state with every neighbor.
///
/// Every node's output is a digest of everything it ever heard, so the output
/// of `t` is sensitive to inputs at `s` once the run is long enough. With
/// `silent_highways` set, highway nodes listen but never send.
#[derive(Clone, Debug)]
pub struct Chatter {
    pub rounds: u64,
    pub payload_bits: usize,
    pub use_tape: bool,
    pub silent_highways: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatterState {
    digest: u64,
    round: u64,
}

impl Chatter {
    pub fn deterministic(rounds: u64, payload_bits: usize) -> Self {
        Self {
            rounds,
            payload_bits,
            use_tape: false,
            silent_highways: false,
        }
    }

    pub fn randomized(rounds: u64, payload_bits: usize) -> Self {
        Self {
            use_tape: true,
            ..Self::deterministic(rounds, payload_bits)
        }
    }

    pub fn silent_highways(mut self) -> Self {
        self.silent_highways = true;
        self
    }
}

impl NodeAlgorithm for Chatter {
    type State = ChatterState;

    fn name(&self) -> String {
        let mut n = String::from("chatter");
        if self.use_tape {
            n.push_str("-rand");
        }
        if self.silent_highways {
            n.push_str("-silent");
        }
        n
    }

    fn init(&self, ctx: &NodeCtx<'_>, input: Option<&Bits>) -> ChatterState {
        let mut digest = label_hash(&ctx.id());
        if let Some(x) = input {
            digest = mix64(digest ^ bits_hash(x));
        }
        ChatterState { digest, round: 0 }
    }

    fn send(&self, ctx: &NodeCtx<'_>, st: &ChatterState, round: u64) -> Vec<Outgoing> {
        if st.round >= self.rounds || (self.silent_highways && ctx.id().is_highway()) {
            return Vec::new();
        }
        let width = self.payload_bits.min(ctx.bandwidth).min(64);
        ctx.neighbors()
            .iter()
            .map(|a| {
                let mut h = mix64(st.digest ^ label_hash(&ctx.graph.node(a.node)));
                if self.use_tape {
                    h ^= ctx.tape.word(mix64(h ^ round) & 0xffff);
                }
                let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
                Outgoing {
                    to: a.node,
                    payload: Bits::from_uint(h & mask, width),
                }
            })
            .collect()
    }

    fn receive(&self, ctx: &NodeCtx<'_>, st: &ChatterState, _: u64, inbox: &[Incoming]) -> ChatterState {
        let digest = inbox.iter().fold(mix64(st.digest), |h, m| {
            mix64(h ^ label_hash(&ctx.graph.node(m.from)) ^ bits_hash(&m.payload))
        });
        ChatterState {
            digest,
            round: st.round + 1,
        }
    }

    fn output(&self, st: &ChatterState) -> Option<Bits> {
        (st.round >= self.rounds).then(|| Bits::from_uint(st.digest, 64))
    }

    fn round_bound(&self) -> Option<u64> {
        Some(self.rounds)
    }
}
