//! The layered network family: highways over long parallel paths.
//!
//! Parameters are a real `κ ≥ 1` (held as an exact fraction), an integer
//! `Λ ≥ 2` and a path count `Γ ≥ 1`. Write `K = ⌈κ⌉Λ^⌊κ⌋` and
//! `C = ⌈⌈κ⌉Λ^κ⌉`. Column indices run over `-K..=K`.
//!
//! * Highway `H^i` (`1 ≤ i ≤ ⌊κ⌋`) has one node per multiple of `Λ^(⌊κ⌋-i)`
//!   in `[-K, K]`; consecutive highway nodes share a single-copy edge.
//! * Each of the `Γ` paths is cut into subpaths, one per column `j`, of
//!   `φ'_j` nodes. Subpath `j` hangs below the bottom highway node `h_j`.
//! * `s` and `t` attach to the left and right ends of every path, and the
//!   ends on each side form a clique.
//!
//! In `G` every edge other than highway path edges has unbounded
//! multiplicity. `F` is the same skeleton with every subpath of `Λ` nodes.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exec::ExecMode;
use crate::graph::{GraphBuilder, MultiGraph, Multiplicity, NodeId};

/// Largest denominator for which `Λ^κ` comparisons use exact integer roots.
const EXACT_DEN_LIMIT: u64 = 64;
/// Guard against accidentally building astronomically large networks.
pub const MAX_NODES: u64 = 20_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index {index} outside [-{bound}, {bound}]")]
    IndexOutOfRange { index: i64, bound: i64 },
    #[error("set index ({i}, {j}) is not valid")]
    InvalidSetIndex { i: i64, j: u64 },
    #[error("ceiling of {0} is numerically ambiguous at f64 precision")]
    AmbiguousCeiling(String),
    #[error("structural violation: {quantity} = {value}, expected {expected}")]
    StructuralViolation {
        quantity: String,
        value: String,
        expected: String,
    },
}

/// `κ` as an exact reduced fraction `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Kappa {
    num: u64,
    den: u64,
}

impl Kappa {
    pub fn new(num: u64, den: u64) -> Result<Self, FamilyError> {
        if den == 0 || num < den {
            return Err(FamilyError::InvalidParams(format!(
                "kappa must be at least 1, got {num}/{den}"
            )));
        }
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    /// Exact value of the shortest decimal that round-trips to `x`.
    pub fn from_f64(x: f64) -> Result<Self, FamilyError> {
        if !x.is_finite() {
            return Err(FamilyError::InvalidParams(format!("kappa {x} is not finite")));
        }
        x.to_string().parse()
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn floor(&self) -> u64 {
        self.num / self.den
    }

    pub fn ceil(&self) -> u64 {
        self.num.div_ceil(self.den)
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn exact(&self) -> bool {
        self.den <= EXACT_DEN_LIMIT && self.num <= 1 << 20
    }

    /// Compares `x` against `coef · Λ^κ`, with `x` and `coef` given as
    /// non-negative fractions.
    pub fn cmp_scaled_power(
        &self,
        lambda: u64,
        x: (&BigUint, &BigUint),
        coef: (&BigUint, &BigUint),
    ) -> Result<Ordering, FamilyError> {
        if self.exact() {
            // x_n / x_d  vs  (c_n / c_d) Λ^(p/q)  <=>  (x_n c_d)^q  vs  (c_n x_d)^q Λ^p
            let q = self.den as u32;
            let lhs = (x.0 * coef.1).pow(q);
            let rhs = (coef.0 * x.1).pow(q) * BigUint::from(lambda).pow(self.num as u32);
            return Ok(lhs.cmp(&rhs));
        }
        let xv = ratio_f64(x.0, x.1);
        let rv = ratio_f64(coef.0, coef.1) * (lambda as f64).powf(self.to_f64());
        let tol = 1e-9 * rv.abs().max(1.0);
        if (xv - rv).abs() <= tol {
            return Err(FamilyError::AmbiguousCeiling(format!(
                "comparison {xv} vs {rv}"
            )));
        }
        Ok(xv.partial_cmp(&rv).unwrap_or(Ordering::Equal))
    }

    /// `⌈c · Λ^κ⌉` for an integer coefficient `c ≥ 1`.
    pub fn ceil_scaled_power(&self, lambda: u64, c: u64) -> Result<u64, FamilyError> {
        if self.exact() {
            let q = self.den as u32;
            let x = BigUint::from(c).pow(q) * BigUint::from(lambda).pow(self.num as u32);
            let root = x.nth_root(q);
            let ceil = if root.pow(q) == x { root } else { root + 1u32 };
            return ceil
                .to_u64()
                .ok_or_else(|| FamilyError::InvalidParams("network too large".into()));
        }
        let v = c as f64 * (lambda as f64).powf(self.to_f64());
        if !v.is_finite() || v > MAX_NODES as f64 * 4.0 {
            return Err(FamilyError::InvalidParams("network too large".into()));
        }
        if (v - v.round()).abs() < 1e-9 * v.max(1.0) {
            return Err(FamilyError::AmbiguousCeiling(format!("{c}*{lambda}^{self}")));
        }
        Ok(v.ceil() as u64)
    }
}

fn ratio_f64(n: &BigUint, d: &BigUint) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY)
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl FromStr for Kappa {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FamilyError::InvalidParams(format!("cannot parse kappa {s:?}"));
        let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let num = int
            .parse::<u64>()
            .ok()
            .and_then(|i| i.checked_mul(den))
            .and_then(|i| i.checked_add(if frac.is_empty() { 0 } else { frac.parse().ok()? }))
            .ok_or_else(bad)?;
        Kappa::new(num, den)
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Kappa::from_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub kappa: Kappa,
    pub lambda: u64,
    pub gamma: u32,
}

impl FamilyParams {
    pub fn new(kappa: f64, lambda: u64, gamma: u32) -> Result<Self, FamilyError> {
        let p = Self {
            kappa: Kappa::from_f64(kappa)?,
            lambda,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.lambda < 2 {
            return Err(FamilyError::InvalidParams(format!(
                "lambda must be at least 2, got {}",
                self.lambda
            )));
        }
        if self.gamma < 1 {
            return Err(FamilyError::InvalidParams("gamma must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Subpath sizes capped so each side totals about `C` nodes.
    G,
    /// Reference skeleton with every subpath of `Λ` nodes.
    F,
}

/// Which party a known set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Contains `s` and grows leftward-closed.
    Alice,
    /// Contains `t` and grows rightward-closed.
    Bob,
}

/// Raw `(i, j)` set index as used by [`Family::s_set`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetIndex {
    pub i: i64,
    pub j: u64,
}

impl SetIndex {
    pub fn new(i: i64, j: u64) -> Self {
        Self { i, j }
    }
}

/// A prefix of the network seen from one side, in normalized form.
///
/// `Alice` sets hold `s`, every highway node with column `≤ col` and every
/// path node at or before `(col, pos)` in left-to-right path order. `Bob`
/// sets mirror this with `t`, `≥` and at-or-after.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnownSet {
    pub side: Side,
    pub col: i64,
    pub pos: u64,
}

impl fmt::Display for KnownSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.side {
            Side::Alice => 'A',
            Side::Bob => 'B',
        };
        write!(f, "{tag}({},{})", self.col, self.pos)
    }
}

/// Position of a path node along its path, left to right.
///
/// Columns are ordered; inside a non-negative column `pos` grows to the
/// right, inside a negative column it grows to the left.
pub fn line_key(sub: i64, pos: u64) -> (i64, i64) {
    let p = pos as i64;
    (sub, if sub < 0 { -p } else { p })
}

/// One constructed member of the family, with all derived quantities.
#[derive(Clone, Debug)]
pub struct Family {
    params: FamilyParams,
    variant: Variant,
    k_max: i64,
    target: u64,
    spacing_base: u64,
    phi: Vec<u64>,
    phi_prime: Vec<u64>,
    path_len: u64,
}

impl Family {
    /// The network `G`.
    pub fn new(params: FamilyParams) -> Result<Self, FamilyError> {
        Self::with_variant(params, Variant::G)
    }

    /// The reference network `F`.
    pub fn reference(params: FamilyParams) -> Result<Self, FamilyError> {
        Self::with_variant(params, Variant::F)
    }

    pub fn with_variant(params: FamilyParams, variant: Variant) -> Result<Self, FamilyError> {
        params.validate()?;
        let too_large = || FamilyError::InvalidParams("network too large".into());
        let kf = params.kappa.floor() as u32;
        let kc = params.kappa.ceil();
        let lam = params.lambda;
        let k_max = lam
            .checked_pow(kf)
            .and_then(|x| x.checked_mul(kc))
            .filter(|&k| k <= MAX_NODES)
            .ok_or_else(too_large)?;
        let spacing_base = lam.pow(kf - 1);
        let target = params.kappa.ceil_scaled_power(lam, kc)?;
        let k = k_max as usize;
        let phi: Vec<u64> = (0..=k_max).map(|j| j / spacing_base + 1).collect();
        let phi_prime = match variant {
            Variant::F => vec![lam; k + 1],
            Variant::G => {
                // suffix[j] = Σ_{j' > j} φ_{j'}
                let mut out = vec![0; k + 1];
                let mut suffix = 0u64;
                for j in (0..=k).rev() {
                    out[j] = phi[j].min(target.saturating_sub(suffix).max(1));
                    suffix = suffix.saturating_add(phi[j]);
                }
                out
            }
        };
        let path_len = phi_prime[0] + 2 * phi_prime[1..].iter().sum::<u64>();
        let fam = Self {
            params,
            variant,
            k_max: k_max as i64,
            target,
            spacing_base,
            phi,
            phi_prime,
            path_len,
        };
        if fam.node_count_formula() > MAX_NODES {
            return Err(too_large());
        }
        Ok(fam)
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn kappa(&self) -> Kappa {
        self.params.kappa
    }

    pub fn lambda(&self) -> u64 {
        self.params.lambda
    }

    pub fn gamma(&self) -> u32 {
        self.params.gamma
    }

    /// `⌊κ⌋`, the number of highways.
    pub fn levels(&self) -> u32 {
        self.params.kappa.floor() as u32
    }

    /// `K = ⌈κ⌉Λ^⌊κ⌋`, the largest column index.
    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    /// `C = ⌈⌈κ⌉Λ^κ⌉`.
    pub fn target(&self) -> u64 {
        self.target
    }

    /// Subscript spacing on highway `level`.
    pub fn spacing(&self, level: u32) -> u64 {
        self.params.lambda.pow(self.levels() - level)
    }

    /// `Λ^(⌊κ⌋-1)`: spacing of the top highway.
    pub fn top_spacing(&self) -> u64 {
        self.spacing_base
    }

    fn slot(&self, j: i64) -> Result<usize, FamilyError> {
        if j.abs() > self.k_max {
            return Err(FamilyError::IndexOutOfRange {
                index: j,
                bound: self.k_max,
            });
        }
        Ok(j.unsigned_abs() as usize)
    }

    /// `φ_j = ⌊|j| / Λ^(⌊κ⌋-1)⌋ + 1`.
    pub fn phi(&self, j: i64) -> Result<u64, FamilyError> {
        Ok(self.phi[self.slot(j)?])
    }

    /// Size of subpath `j`.
    pub fn phi_prime(&self, j: i64) -> Result<u64, FamilyError> {
        Ok(self.phi_prime[self.slot(j)?])
    }

    fn pp(&self, j: i64) -> u64 {
        self.phi_prime[j.unsigned_abs() as usize]
    }

    /// `t_r = Σ_{r < r' ≤ K} φ'_{r'}` for `0 ≤ r ≤ K`.
    pub fn t(&self, r: i64) -> Result<u64, FamilyError> {
        let start = self.slot(r)?;
        if r < 0 {
            return Err(FamilyError::IndexOutOfRange {
                index: r,
                bound: self.k_max,
            });
        }
        Ok(self.phi_prime[start + 1..].iter().sum())
    }

    /// Nodes per path, `L = Σ_j φ'_j`.
    pub fn path_len(&self) -> u64 {
        self.path_len
    }

    pub fn highway_len(&self, level: u32) -> u64 {
        2 * self.k_max as u64 / self.spacing(level) + 1
    }

    /// `2 + Σ_i (2⌈κ⌉Λ^i + 1) + Γ·L`.
    pub fn node_count_formula(&self) -> u64 {
        let kc = self.params.kappa.ceil();
        let highways: u64 = (1..=self.levels())
            .map(|i| 2 * kc * self.params.lambda.pow(i) + 1)
            .sum();
        2 + highways + u64::from(self.params.gamma) * self.path_len
    }

    /// Left end `v^x_{-∞}` of path `x`.
    pub fn left_end(&self, path: u32) -> NodeId {
        NodeId::path(path, -self.k_max, self.pp(self.k_max))
    }

    /// Right end `v^x_{∞}` of path `x`.
    pub fn right_end(&self, path: u32) -> NodeId {
        NodeId::path(path, self.k_max, self.pp(self.k_max))
    }

    /// Nodes of path `x` in left-to-right order.
    pub fn path_nodes(&self, path: u32) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.path_len as usize);
        for sub in -self.k_max..=self.k_max {
            let n = self.pp(sub);
            if sub < 0 {
                out.extend((1..=n).rev().map(|pos| NodeId::path(path, sub, pos)));
            } else {
                out.extend((1..=n).map(|pos| NodeId::path(path, sub, pos)));
            }
        }
        out
    }

    pub fn highway_nodes(&self, level: u32) -> Vec<NodeId> {
        let sp = self.spacing(level) as usize;
        (-self.k_max..=self.k_max)
            .step_by(sp)
            .map(|sub| NodeId::highway(level, sub))
            .collect()
    }

    /// Builds the network as a multigraph.
    pub fn build(&self) -> MultiGraph {
        let mut b = GraphBuilder::new();
        let unbounded = || Multiplicity::Unbounded;
        let ok = "construction is internally consistent";
        b.add_node(NodeId::Source).expect(ok);
        b.add_node(NodeId::Sink).expect(ok);
        let kf = self.levels();
        for level in 1..=kf {
            let nodes = self.highway_nodes(level);
            for &h in &nodes {
                b.add_node(h).expect(ok);
            }
            for w in nodes.windows(2) {
                b.add_edge(w[0], w[1], Multiplicity::one()).expect(ok);
            }
        }
        for level in 1..kf {
            for h in self.highway_nodes(level) {
                let NodeId::Highway { sub, .. } = h else {
                    unreachable!()
                };
                b.add_edge(h, NodeId::highway(level + 1, sub), unbounded())
                    .expect(ok);
            }
        }
        for x in 1..=self.params.gamma {
            let nodes = self.path_nodes(x);
            for &v in &nodes {
                b.add_node(v).expect(ok);
            }
            for w in nodes.windows(2) {
                b.add_edge(w[0], w[1], unbounded()).expect(ok);
            }
            for sub in -self.k_max..=self.k_max {
                b.add_edge(NodeId::highway(kf, sub), NodeId::path(x, sub, 1), unbounded())
                    .expect(ok);
            }
            b.add_edge(NodeId::Source, self.left_end(x), unbounded()).expect(ok);
            b.add_edge(NodeId::Sink, self.right_end(x), unbounded()).expect(ok);
            for y in 1..x {
                b.add_edge(self.left_end(y), self.left_end(x), unbounded()).expect(ok);
                b.add_edge(self.right_end(y), self.right_end(x), unbounded()).expect(ok);
            }
        }
        b.build().expect(ok)
    }

    /// Normalized known set for `side` at raw coordinates `(col, pos)`.
    ///
    /// `pos = 0` steps back to the end of the previous column, and
    /// columns beyond `±K` clamp to the full side.
    pub fn known_set(&self, side: Side, col: i64, pos: u64) -> KnownSet {
        let k = self.k_max;
        let (col, pos) = match side {
            Side::Alice if col > k => (k, self.pp(k)),
            Side::Bob if col < -k => (-k, self.pp(k)),
            Side::Alice if pos == 0 && (1 - k..=k).contains(&col) => (col - 1, self.pp(col - 1)),
            Side::Bob if pos == 0 && (-k..=-2).contains(&col) => (col + 1, self.pp(col + 1)),
            Side::Bob if pos == 0 && col == -1 => (0, 1),
            _ => (col, pos),
        };
        KnownSet { side, col, pos }
    }

    /// Interprets a raw set index: non-negative `i` is Alice's side.
    pub fn set_index(&self, idx: SetIndex) -> Result<KnownSet, FamilyError> {
        let k = self.k_max;
        let bad = || FamilyError::InvalidSetIndex { i: idx.i, j: idx.j };
        if idx.i.abs() > k + 1 {
            return Err(bad());
        }
        if idx.i.abs() <= k && idx.j > self.pp(idx.i) {
            return Err(bad());
        }
        if idx.j == 0 && idx.i == 0 {
            return Err(bad());
        }
        let side = if idx.i >= 0 { Side::Alice } else { Side::Bob };
        Ok(self.known_set(side, idx.i, idx.j))
    }

    pub fn contains(&self, set: &KnownSet, node: &NodeId) -> bool {
        match (set.side, *node) {
            (Side::Alice, NodeId::Source) | (Side::Bob, NodeId::Sink) => true,
            (Side::Alice, NodeId::Sink) | (Side::Bob, NodeId::Source) => false,
            (Side::Alice, NodeId::Highway { sub, .. }) => sub <= set.col,
            (Side::Bob, NodeId::Highway { sub, .. }) => sub >= set.col,
            (Side::Alice, NodeId::Path { sub, pos, .. }) => {
                line_key(sub, pos) <= line_key(set.col, set.pos)
            }
            (Side::Bob, NodeId::Path { sub, pos, .. }) => {
                line_key(sub, pos) >= line_key(set.col, set.pos)
            }
        }
    }

    /// Enumerates `S_{i,j}` over the nodes of `graph`.
    pub fn s_set(&self, graph: &MultiGraph, idx: SetIndex) -> Result<BTreeSet<NodeId>, FamilyError> {
        let set = self.set_index(idx)?;
        Ok(graph
            .nodes()
            .iter()
            .filter(|v| self.contains(&set, v))
            .copied()
            .collect())
    }

    /// Checks the structural guarantees of the family on a built network.
    pub fn validate_structure(
        &self,
        graph: &MultiGraph,
        diameter_constant: u64,
        mode: ExecMode,
    ) -> Result<StructureReport, FamilyError> {
        let report = self.measure(graph, diameter_constant, mode);
        match report.violations.first() {
            None => Ok(report),
            Some(v) => Err(FamilyError::StructuralViolation {
                quantity: v.quantity.clone(),
                value: v.value.clone(),
                expected: v.expected.clone(),
            }),
        }
    }

    /// Like [`Family::validate_structure`] but always returns the report.
    pub fn measure(&self, graph: &MultiGraph, diameter_constant: u64, mode: ExecMode) -> StructureReport {
        let mut violations = Vec::new();
        let mut flag = |quantity: &str, value: String, expected: String| {
            violations.push(Violation {
                quantity: quantity.into(),
                value,
                expected,
            })
        };
        let kappa = self.params.kappa;
        let (p, q) = (kappa.num(), kappa.den());
        let lam = self.params.lambda;
        let kc = kappa.ceil();

        let mut per_path = vec![0u64; self.params.gamma as usize];
        for v in graph.nodes() {
            if !self.node_ok(v) {
                flag("node label", v.to_string(), "within family ranges".into());
            }
            if let NodeId::Path { path, .. } = v {
                if let Some(c) = per_path.get_mut(*path as usize - 1) {
                    *c += 1;
                }
            }
        }
        for (x, &len) in per_path.iter().enumerate() {
            if len != self.path_len {
                flag(&format!("length of path {}", x + 1), len.to_string(), self.path_len.to_string());
            }
        }
        for e in graph.edges() {
            let (u, v) = (graph.node(e.u), graph.node(e.v));
            let highway_edge = matches!(
                (u, v),
                (NodeId::Highway { level: a, .. }, NodeId::Highway { level: b, .. }) if a == b
            );
            let expect_one = highway_edge;
            let ok = if expect_one {
                e.multiplicity == Multiplicity::one()
            } else {
                e.multiplicity.is_unbounded()
            };
            if !ok {
                flag(
                    &format!("multiplicity of {u}-{v}"),
                    e.multiplicity.to_string(),
                    if expect_one { "1" } else { "unbounded" }.into(),
                );
            }
        }

        let node_count = graph.node_count() as u64;
        let expected_nodes = self.node_count_formula();
        if node_count != expected_nodes {
            flag("node count", node_count.to_string(), expected_nodes.to_string());
        }

        // L ∈ [⌈κ⌉Λ^κ, 2⌈κ⌉Λ^κ + 2K + 2]
        let l = self.path_len;
        let lower = self.target;
        let slack = 2 * self.k_max as u64 + 2;
        let upper_ok = l <= slack
            || kappa
                .cmp_scaled_power(
                    lam,
                    (&BigUint::from(l - slack), &BigUint::one()),
                    (&BigUint::from(2 * kc), &BigUint::one()),
                )
                .map(|o| o != Ordering::Greater)
                .unwrap_or(false);
        let upper_f = 2.0 * kc as f64 * (lam as f64).powf(kappa.to_f64()) + slack as f64;
        if l < lower || !upper_ok {
            flag(
                "path length L",
                l.to_string(),
                format!("in [{lower}, {upper_f:.3}]"),
            );
        }

        let diameter = graph.diameter(mode) as u64;
        let kl_floor = p * lam / q;
        let kl_f = kappa.to_f64() * lam as f64;
        // diameter ≤ c·κΛ  <=>  diameter·q ≤ c·p·Λ
        if diameter < kl_floor || diameter * q > diameter_constant * p * lam {
            flag(
                "diameter",
                diameter.to_string(),
                format!("in [{kl_floor}, {:.3}]", diameter_constant as f64 * kl_f),
            );
        }
        let (s, t) = (
            graph.index_of(&NodeId::Source).expect("s exists"),
            graph.index_of(&NodeId::Sink).expect("t exists"),
        );
        let st_distance = graph.bfs(s)[t].expect("connected") as u64;
        if st_distance < kl_floor {
            flag("s-t distance", st_distance.to_string(), format!(">= {kl_floor}"));
        }

        StructureReport {
            kappa: kappa.to_f64(),
            lambda: lam,
            gamma: self.params.gamma,
            variant: self.variant,
            k_max: self.k_max,
            target: self.target,
            node_count,
            expected_node_count: expected_nodes,
            edge_count: graph.edge_count() as u64,
            path_len: l,
            path_len_lower: lower,
            path_len_upper: upper_f,
            diameter,
            diameter_lower: kl_floor,
            diameter_upper: diameter_constant as f64 * kl_f,
            st_distance,
            violations,
        }
    }

    fn node_ok(&self, v: &NodeId) -> bool {
        match *v {
            NodeId::Source | NodeId::Sink => true,
            NodeId::Highway { level, sub } => {
                (1..=self.levels()).contains(&level)
                    && sub.abs() <= self.k_max
                    && sub % self.spacing(level) as i64 == 0
            }
            NodeId::Path { path, sub, pos } => {
                (1..=self.params.gamma).contains(&path)
                    && sub.abs() <= self.k_max
                    && (1..=self.pp(sub)).contains(&pos)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub quantity: String,
    pub value: String,
    pub expected: String,
}

/// Measured structural quantities of a built network.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub kappa: f64,
    pub lambda: u64,
    pub gamma: u32,
    pub variant: Variant,
    pub k_max: i64,
    pub target: u64,
    pub node_count: u64,
    pub expected_node_count: u64,
    pub edge_count: u64,
    pub path_len: u64,
    pub path_len_lower: u64,
    pub path_len_upper: f64,
    pub diameter: u64,
    pub diameter_lower: u64,
    pub diameter_upper: f64,
    pub st_distance: u64,
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(k: f64, l: u64, g: u32) -> Family {
        Family::new(FamilyParams::new(k, l, g).unwrap()).unwrap()
    }

    #[test]
    fn kappa_parsing() {
        let k: Kappa = "2.5".parse().unwrap();
        assert_eq!((k.num(), k.den()), (5, 2));
        assert_eq!((k.floor(), k.ceil()), (2, 3));
        assert_eq!(Kappa::from_f64(1.0).unwrap(), Kappa::new(1, 1).unwrap());
        assert!(Kappa::from_f64(0.5).is_err());
        assert!("abc".parse::<Kappa>().is_err());
        assert!("-2".parse::<Kappa>().is_err());
    }

    #[test]
    fn ceiling_is_exact() {
        let k = Kappa::from_f64(2.5).unwrap();
        // 3 * 2^2.5 = 16.97..
        assert_eq!(k.ceil_scaled_power(2, 3).unwrap(), 17);
        // 3 * 4^2.5 = 96 exactly
        assert_eq!(k.ceil_scaled_power(4, 3).unwrap(), 96);
        let k2 = Kappa::from_f64(2.0).unwrap();
        assert_eq!(k2.ceil_scaled_power(3, 2).unwrap(), 18);
    }

    #[test]
    fn golden_phi_values() {
        let f = fam(2.5, 2, 1);
        assert_eq!(f.k_max(), 12);
        assert_eq!(f.target(), 17);
        assert_eq!(f.phi(10).unwrap(), 6);
        assert_eq!(f.phi(0).unwrap(), 1);
        assert_eq!(f.phi(-12).unwrap(), 7);
        assert_eq!(f.phi_prime(10).unwrap(), 4);
        assert_eq!(f.phi_prime(12).unwrap(), 7);
        assert_eq!(f.phi_prime(-11).unwrap(), 6);
        assert_eq!(f.phi_prime(9).unwrap(), 1);
        assert_eq!(f.t(11).unwrap(), 7);
        assert_eq!(f.path_len(), 53);
        assert!(f.phi(13).is_err());
    }

    #[test]
    fn small_instances() {
        let f = fam(1.0, 2, 1);
        assert_eq!(f.levels(), 1);
        assert_eq!(f.highway_len(1), 5);
        assert_eq!(f.path_len(), 7);
        let g = f.build();
        assert_eq!(g.node_count() as u64, f.node_count_formula());
        let st = g.bfs(g.index_of(&NodeId::Source).unwrap())[g.index_of(&NodeId::Sink).unwrap()];
        assert_eq!(st, Some(8));

        let r = Family::reference(FamilyParams::new(2.0, 2, 1).unwrap()).unwrap();
        assert_eq!(r.path_len(), 34);
    }

    #[test]
    fn highway_layout() {
        let f = fam(2.5, 2, 2);
        let h1: Vec<_> = f.highway_nodes(1);
        assert_eq!(h1.len(), 13);
        assert_eq!(h1[0], NodeId::highway(1, -12));
        assert_eq!(h1[1], NodeId::highway(1, -10));
        assert_eq!(f.highway_nodes(2).len(), 25);
    }

    #[test]
    fn end_cliques() {
        let f = fam(2.5, 2, 3);
        let g = f.build();
        for a in 1..=3 {
            for b in 1..=3 {
                if a != b {
                    let (u, v) = (
                        g.index_of(&f.left_end(a)).unwrap(),
                        g.index_of(&f.left_end(b)).unwrap(),
                    );
                    assert!(g.edge_between(u, v).is_some());
                }
            }
        }
    }

    #[test]
    fn structure_report_for_example() {
        let f = fam(2.5, 2, 2);
        let g = f.build();
        let rep = f.validate_structure(&g, 8, ExecMode::Sequential).unwrap();
        assert_eq!(rep.path_len, 53);
        assert_eq!(rep.path_len_lower, 17);
        assert!(rep.path_len_upper > 59.0 && rep.path_len_upper < 60.0);
    }

    #[test]
    fn set_conventions() {
        let f = fam(2.5, 2, 2);
        let g = f.build();
        let all_but_t: BTreeSet<_> = g.nodes().iter().copied().filter(|v| *v != NodeId::Sink).collect();
        assert_eq!(f.s_set(&g, SetIndex::new(13, 0)).unwrap(), all_but_t);
        assert_eq!(f.s_set(&g, SetIndex::new(13, 5)).unwrap(), all_but_t);
        assert_eq!(
            f.s_set(&g, SetIndex::new(-11, 0)).unwrap(),
            f.s_set(&g, SetIndex::new(-10, 4)).unwrap()
        );
        let s9 = f.s_set(&g, SetIndex::new(9, 1)).unwrap();
        let s11 = f.s_set(&g, SetIndex::new(11, 1)).unwrap();
        assert!(s9.is_subset(&s11) && s9 != s11);
        assert!(f.s_set(&g, SetIndex::new(14, 0)).is_err());
        assert!(f.s_set(&g, SetIndex::new(10, 5)).is_err());
    }
}
