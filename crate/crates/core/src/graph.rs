//! Node-labelled multigraphs with exact edge multiplicities.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exec::{self, ExecMode};

/// Structured node label.
///
/// Labels address coordinates of the lower-bound network directly: the
/// source and sink, highway nodes `(level, subscript)` and path nodes
/// `(path, column, position)`. Hand-built test graphs reuse the path form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Source,
    Sink,
    Highway { level: u32, sub: i64 },
    Path { path: u32, sub: i64, pos: u64 },
}

impl NodeId {
    pub fn highway(level: u32, sub: i64) -> Self {
        NodeId::Highway { level, sub }
    }

    pub fn path(path: u32, sub: i64, pos: u64) -> Self {
        NodeId::Path { path, sub, pos }
    }

    pub fn is_highway(&self) -> bool {
        matches!(self, NodeId::Highway { .. })
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Source => f.write_str("S"),
            NodeId::Sink => f.write_str("T"),
            NodeId::Highway { level, sub } => write!(f, "H:{level}:{sub}"),
            NodeId::Path { path, sub, pos } => write!(f, "P:{path}:{sub}:{pos}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed node label {0:?}")]
pub struct ParseNodeIdError(pub String);

impl FromStr for NodeId {
    type Err = ParseNodeIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseNodeIdError(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["S"] => Ok(NodeId::Source),
            ["T"] => Ok(NodeId::Sink),
            ["H", level, sub] => Ok(NodeId::Highway {
                level: level.parse().map_err(|_| err())?,
                sub: sub.parse().map_err(|_| err())?,
            }),
            ["P", path, sub, pos] => Ok(NodeId::Path {
                path: path.parse().map_err(|_| err())?,
                sub: sub.parse().map_err(|_| err())?,
                pos: pos.parse().map_err(|_| err())?,
            }),
            _ => Err(err()),
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of parallel copies of an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(BigUint),
    /// `base^exponent` copies, kept symbolic until a value is needed.
    Power { base: u64, exponent: u32 },
    Unbounded,
}

impl Multiplicity {
    pub fn one() -> Self {
        Multiplicity::Finite(BigUint::one())
    }

    pub fn finite(n: u64) -> Self {
        Multiplicity::Finite(BigUint::from(n))
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Multiplicity::Unbounded)
    }

    /// Exact number of copies, `None` when unbounded.
    pub fn value(&self) -> Option<BigUint> {
        match self {
            Multiplicity::Finite(n) => Some(n.clone()),
            Multiplicity::Power { base, exponent } => Some(BigUint::from(*base).pow(*exponent)),
            Multiplicity::Unbounded => None,
        }
    }

    /// Whether `bits` fit through this edge class in one direction per round.
    pub fn carries(&self, bits: usize, bandwidth: usize) -> bool {
        match self {
            Multiplicity::Unbounded => true,
            Multiplicity::Finite(n) => match n.to_usize() {
                Some(n) => n.checked_mul(bandwidth).is_none_or(|cap| bits <= cap),
                None => true,
            },
            Multiplicity::Power { .. } => {
                let cap = self.value().expect("finite") * BigUint::from(bandwidth);
                BigUint::from(bits) <= cap
            }
        }
    }

    /// Per-round capacity in bits, `None` when it exceeds `usize` or is unbounded.
    pub fn capacity(&self, bandwidth: usize) -> Option<usize> {
        self.value()?.to_usize()?.checked_mul(bandwidth)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{n}"),
            Multiplicity::Power { base, exponent } => write!(f, "{base}^{exponent}"),
            Multiplicity::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => serializer.collect_str(n),
            Multiplicity::Unbounded => serializer.serialize_str("unbounded"),
            Multiplicity::Power { base, exponent } => {
                #[derive(Serialize)]
                struct Pow {
                    base: u64,
                    exponent: u32,
                }
                Pow {
                    base: *base,
                    exponent: *exponent,
                }
                .serialize(serializer)
            }
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Pow { base: u64, exponent: u32 },
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) if s == "unbounded" => Ok(Multiplicity::Unbounded),
            Raw::Text(s) => s
                .parse::<BigUint>()
                .map(Multiplicity::Finite)
                .map_err(serde::de::Error::custom),
            Raw::Pow { base, exponent } => Ok(Multiplicity::Power { base, exponent }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeClass {
    pub u: usize,
    pub v: usize,
    pub multiplicity: Multiplicity,
}

impl EdgeClass {
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjacent {
    pub node: usize,
    pub edge: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop at {0}")]
    SelfLoop(NodeId),
    #[error("second edge class between {0} and {1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge class {0}-{1} has zero multiplicity")]
    ZeroMultiplicity(NodeId, NodeId),
    #[error("graph is not connected ({reached} of {total} nodes reachable)")]
    Disconnected { reached: usize, total: usize },
    #[error("graph has no nodes")]
    Empty,
}

/// Incrementally assembles a [`MultiGraph`].
#[derive(Default)]
pub struct GraphBuilder {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    edges: Vec<EdgeClass>,
    pairs: HashMap<(usize, usize), usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId) -> Result<usize, GraphError> {
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        let idx = self.nodes.len();
        self.nodes.push(id);
        self.index.insert(id, idx);
        Ok(idx)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn add_edge(
        &mut self,
        a: NodeId,
        b: NodeId,
        multiplicity: Multiplicity,
    ) -> Result<usize, GraphError> {
        let u = *self.index.get(&a).ok_or(GraphError::UnknownNode(a))?;
        let v = *self.index.get(&b).ok_or(GraphError::UnknownNode(b))?;
        if u == v {
            return Err(GraphError::SelfLoop(a));
        }
        if multiplicity.value().is_some_and(|n| n.is_zero()) {
            return Err(GraphError::ZeroMultiplicity(a, b));
        }
        let key = (u.min(v), u.max(v));
        if self.pairs.contains_key(&key) {
            return Err(GraphError::DuplicateEdge(a, b));
        }
        let e = self.edges.len();
        self.edges.push(EdgeClass { u, v, multiplicity });
        self.pairs.insert(key, e);
        Ok(e)
    }

    pub fn build(self) -> Result<MultiGraph, GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            adjacency[edge.u].push(Adjacent { node: edge.v, edge: e });
            adjacency[edge.v].push(Adjacent { node: edge.u, edge: e });
        }
        for list in &mut adjacency {
            list.sort_by_key(|a| a.node);
        }
        let graph = MultiGraph {
            nodes: self.nodes,
            index: self.index,
            edges: self.edges,
            adjacency,
        };
        let reached = graph.bfs(0).iter().filter(|d| d.is_some()).count();
        if reached != graph.node_count() {
            return Err(GraphError::Disconnected {
                reached,
                total: graph.node_count(),
            });
        }
        Ok(graph)
    }
}

/// Connected multigraph with at most one edge class per node pair.
#[derive(Clone, Debug)]
pub struct MultiGraph {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    edges: Vec<EdgeClass>,
    adjacency: Vec<Vec<Adjacent>>,
}

impl MultiGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> NodeId {
        self.nodes[idx]
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[EdgeClass] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &EdgeClass {
        &self.edges[e]
    }

    pub fn neighbors(&self, idx: usize) -> &[Adjacent] {
        &self.adjacency[idx]
    }

    /// Edge class joining `u` and `v`, if any.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |a| a.node)
            .ok()
            .map(|i| list[i].edge)
    }

    /// Same topology with every multiplicity rewritten by `f`.
    pub fn map_multiplicities(
        &self,
        mut f: impl FnMut(usize, &EdgeClass) -> Multiplicity,
    ) -> Result<MultiGraph, GraphError> {
        let mut g = self.clone();
        for (e, edge) in self.edges.iter().enumerate() {
            let m = f(e, edge);
            if m.value().is_some_and(|n| n.is_zero()) {
                return Err(GraphError::ZeroMultiplicity(
                    self.nodes[edge.u],
                    self.nodes[edge.v],
                ));
            }
            g.edges[e].multiplicity = m;
        }
        Ok(g)
    }

    /// Unweighted BFS distances from `source`.
    pub fn bfs(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for a in &self.adjacency[u] {
                if dist[a.node].is_none() {
                    dist[a.node] = Some(d + 1);
                    queue.push_back(a.node);
                }
            }
        }
        dist
    }

    /// A shortest path `source -> target` as node indices; ties are broken
    /// towards the smallest node index so the route is reproducible.
    pub fn shortest_path(&self, source: usize, target: usize) -> Option<Vec<usize>> {
        let dist = self.bfs(target);
        dist[source]?;
        let mut path = vec![source];
        let mut cur = source;
        while cur != target {
            let d = dist[cur].expect("on a shortest path");
            cur = self.adjacency[cur]
                .iter()
                .find(|a| dist[a.node] == Some(d - 1))
                .expect("a predecessor exists")
                .node;
            path.push(cur);
        }
        Some(path)
    }

    pub fn eccentricity(&self, source: usize) -> u32 {
        self.bfs(source)
            .into_iter()
            .map(|d| d.expect("graph is connected"))
            .max()
            .unwrap_or(0)
    }

    /// Exact diameter by BFS from every node.
    pub fn diameter(&self, mode: ExecMode) -> u32 {
        let sources: Vec<usize> = (0..self.node_count()).collect();
        exec::map(mode, &sources, |&s| self.eccentricity(s))
            .into_iter()
            .max()
            .unwrap_or(0)
    }

    /// Sum of incident multiplicities, `None` if any incident class is unbounded.
    pub fn degree(&self, idx: usize) -> Option<BigUint> {
        let mut total = BigUint::zero();
        for a in &self.adjacency[idx] {
            total += self.edges[a.edge].multiplicity.value()?;
        }
        Some(total)
    }

    pub fn to_json(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.nodes[e.u],
                    v: self.nodes[e.v],
                    multiplicity: e.multiplicity.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(file: &GraphFile) -> Result<MultiGraph, GraphError> {
        let mut b = GraphBuilder::new();
        for n in &file.nodes {
            b.add_node(*n)?;
        }
        for e in &file.edges {
            b.add_edge(e.u, e.v, e.multiplicity.clone())?;
        }
        b.build()
    }
}

/// Graph interchange format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: NodeId,
    pub v: NodeId,
    pub multiplicity: Multiplicity,
}
