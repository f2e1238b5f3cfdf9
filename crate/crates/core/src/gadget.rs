//! Input-dependent weighted multigraph on which a short random walk solves
//! pointer chasing.
//!
//! Paths of the family network are regrouped: for `i ≤ r` and `j ≤ m`,
//! `S^{i,j}` is path `2(i-1)m + j` read left to right and `T^{i,j}` is path
//! `2(i-1)m + m + j` read right to left. Chain edges carry `W^k` copies with
//! `W = 6Γℓ`, and connector edges between path ends encode `f_A` and `f_B`.
//! Along the expected path the exponents run `1, 2, …, ℓ`, so every step
//! continues forward with probability at least `1 - 1/(3ℓ)`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::{self, ExecMode};
use crate::family::{Family, FamilyError, FamilyParams};
use crate::graph::{GraphError, MultiGraph, Multiplicity, NodeId};
use crate::pointer::PcInstance;
use crate::tape::derive_seed;

/// Default cap on `node_count × ℓ` for the exact destination DP.
///
/// Big-rational denominators grow quickly with `ℓ`: 455 cells take well under
/// a second, 1701 cells take minutes.
pub const DEFAULT_DP_BUDGET: u64 = 1_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("parameter violation: {0}")]
    ParamViolation(String),
    #[error("exact DP needs {needed} cells, budget is {limit}")]
    BudgetExceeded { needed: u64, limit: u64 },
    #[error("{0} -> {1} is not an edge of the gadget")]
    InvalidPath(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How connector edges are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectorMode {
    /// `s^{i,j}_L-t^{i,f_B(j)}_1` and `t^{i,j}_L-s^{i+1,f_A(j)}_1`.
    #[default]
    Corrected,
    /// `t^{i,j}_L-s^{i,f_A(j)}_1` and `t^{i,j}_1-s^{i+1,f_B(j)}_L`, kept for
    /// comparison only: the walk does not follow it.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetParams {
    pub family: FamilyParams,
    pub r: u32,
    pub m: u32,
}

impl GadgetParams {
    pub fn new(family: FamilyParams, r: u32, m: u32) -> Result<Self, GadgetError> {
        let p = Self { family, r, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GadgetError> {
        self.family.validate()?;
        if self.r < 1 || self.m < 1 {
            return Err(GadgetError::ParamViolation(format!(
                "r and m must be positive, got r={} m={}",
                self.r, self.m
            )));
        }
        if 2 * u64::from(self.r) * u64::from(self.m) > u64::from(self.family.gamma) {
            return Err(GadgetError::ParamViolation(format!(
                "2rm = {} exceeds Gamma = {}",
                2 * self.r * self.m,
                self.family.gamma
            )));
        }
        Ok(())
    }
}

/// Precomputed transition weights of the walk.
#[derive(Clone, Debug)]
struct Weights {
    /// `(neighbor, copies)` sorted by neighbor.
    adj: Vec<Vec<(usize, BigUint)>>,
    degree: Vec<BigUint>,
}

#[derive(Clone, Debug)]
pub struct GadgetGraph {
    params: GadgetParams,
    instance: PcInstance,
    mode: ConnectorMode,
    family: Family,
    graph: MultiGraph,
    paths: Vec<Vec<NodeId>>,
    len: u64,
    ell: u64,
    base: u64,
    weights: Weights,
}

pub fn build_gadget(
    params: GadgetParams,
    inst: &PcInstance,
    mode: ConnectorMode,
) -> Result<GadgetGraph, GadgetError> {
    params.validate()?;
    if inst.m != params.m || inst.r != params.r {
        return Err(GadgetError::ParamViolation(format!(
            "instance has m={} r={}, parameters say m={} r={}",
            inst.m, inst.r, params.m, params.r
        )));
    }
    inst.validate()
        .map_err(|e| GadgetError::ParamViolation(e.to_string()))?;
    let family = Family::new(params.family)?;
    let len = family.path_len();
    let ell = 2 * u64::from(params.r) * len - 1;
    let base = 6 * u64::from(params.family.gamma) * ell;
    let paths: Vec<Vec<NodeId>> = (1..=params.family.gamma)
        .map(|x| family.path_nodes(x))
        .collect();
    let g = family.build();

    let mut gadget = GadgetGraph {
        params,
        instance: inst.clone(),
        mode,
        family,
        graph: g.clone(),
        paths,
        len,
        ell,
        base,
        weights: Weights {
            adj: Vec::new(),
            degree: Vec::new(),
        },
    };
    let mut exps: HashMap<(usize, usize), u32> = HashMap::new();
    let mut set = |a: NodeId, b: NodeId, k: u64| -> Result<(), GadgetError> {
        let (u, v) = (index(&g, a)?, index(&g, b)?);
        g.edge_between(u, v).ok_or(GadgetError::InvalidPath(a, b))?;
        exps.insert((u.min(v), u.max(v)), k as u32);
        Ok(())
    };
    let (r, m, l) = (params.r, params.m, len);
    for i in 1..=r {
        let off = 2 * u64::from(i - 1) * l;
        for j in 1..=m {
            for x in 1..l {
                set(gadget.s_node(i, j, x), gadget.s_node(i, j, x + 1), off + x)?;
                set(gadget.t_node(i, j, x), gadget.t_node(i, j, x + 1), off + l + x)?;
            }
            match mode {
                ConnectorMode::Corrected => {
                    let fb = inst.fb[j as usize - 1];
                    set(gadget.s_node(i, j, l), gadget.t_node(i, fb, 1), off + l)?;
                    if i < r {
                        let fa = inst.fa[j as usize - 1];
                        set(gadget.t_node(i, j, l), gadget.s_node(i + 1, fa, 1), off + 2 * l)?;
                    }
                }
                ConnectorMode::Literal => {
                    let fa = inst.fa[j as usize - 1];
                    set(gadget.t_node(i, j, l), gadget.s_node(i, fa, 1), off + l)?;
                    if i < r {
                        let fb = inst.fb[j as usize - 1];
                        set(gadget.t_node(i, j, 1), gadget.s_node(i + 1, fb, l), off + 2 * l)?;
                    }
                }
            }
        }
    }
    gadget.graph = g.map_multiplicities(|_, e| match exps.get(&(e.u.min(e.v), e.u.max(e.v))) {
        Some(&k) => Multiplicity::Power {
            base,
            exponent: k,
        },
        None => Multiplicity::one(),
    })?;
    gadget.weights = weights(&gadget.graph);
    Ok(gadget)
}

fn index(g: &MultiGraph, id: NodeId) -> Result<usize, GadgetError> {
    g.index_of(&id).ok_or(GadgetError::UnknownNode(id))
}

fn weights(g: &MultiGraph) -> Weights {
    let adj: Vec<Vec<(usize, BigUint)>> = (0..g.node_count())
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|a| {
                    let copies = g.edge(a.edge).multiplicity.value().expect("gadget edges are finite");
                    (a.node, copies)
                })
                .collect()
        })
        .collect();
    let degree = adj
        .iter()
        .map(|l| l.iter().fold(BigUint::zero(), |acc, (_, c)| acc + c))
        .collect();
    Weights { adj, degree }
}

impl GadgetGraph {
    pub fn params(&self) -> &GadgetParams {
        &self.params
    }

    pub fn instance(&self) -> &PcInstance {
        &self.instance
    }

    pub fn mode(&self) -> ConnectorMode {
        self.mode
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    /// Nodes per path, `L`.
    pub fn path_len(&self) -> u64 {
        self.len
    }

    /// Walk length `ℓ = 2rL - 1`.
    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// Multiplicity base `W = 6Γℓ`.
    pub fn base(&self) -> u64 {
        self.base
    }

    /// `s^{i,j}_x`: node `x` of `S^{i,j}`, counted from the left.
    pub fn s_node(&self, i: u32, j: u32, x: u64) -> NodeId {
        let p = 2 * (i - 1) * self.params.m + j;
        self.paths[p as usize - 1][x as usize - 1]
    }

    /// `t^{i,j}_x`: node `x` of `T^{i,j}`, counted from the right.
    pub fn t_node(&self, i: u32, j: u32, x: u64) -> NodeId {
        let p = 2 * (i - 1) * self.params.m + self.params.m + j;
        self.paths[p as usize - 1][(self.len - x) as usize]
    }

    /// Walk start `s^{1,f_A(1)}_1`.
    pub fn start(&self) -> NodeId {
        self.s_node(1, self.instance.fa[0], 1)
    }

    /// Reduction output for a walk ending at `dest`: `j` when `dest` is
    /// `t^{r,j}_L`, otherwise 1.
    pub fn output_for(&self, dest: &NodeId) -> u32 {
        (1..=self.params.m)
            .find(|&j| self.t_node(self.params.r, j, self.len) == *dest)
            .unwrap_or(1)
    }

    /// Exponent `k` of an edge carrying `W^k` copies, `None` for unit edges.
    pub fn exponent(&self, a: &NodeId, b: &NodeId) -> Option<u32> {
        let (u, v) = (self.graph.index_of(a)?, self.graph.index_of(b)?);
        match &self.graph.edge(self.graph.edge_between(u, v)?).multiplicity {
            Multiplicity::Power { exponent, .. } => Some(*exponent),
            _ => None,
        }
    }

    /// Number of unit edge classes at `node`.
    pub fn unit_degree(&self, node: &NodeId) -> Option<usize> {
        let u = self.graph.index_of(node)?;
        Some(
            self.graph
                .neighbors(u)
                .iter()
                .filter(|a| self.graph.edge(a.edge).multiplicity == Multiplicity::one())
                .count(),
        )
    }

    /// Checks that every edge class exists in `g` and respects its finite
    /// multiplicities.
    pub fn check_restriction_of(&self, g: &MultiGraph) -> Result<(), String> {
        for e in self.graph.edges() {
            let (a, b) = (self.graph.node(e.u), self.graph.node(e.v));
            let (Some(u), Some(v)) = (g.index_of(&a), g.index_of(&b)) else {
                return Err(format!("{a} or {b} missing from the network"));
            };
            let Some(f) = g.edge_between(u, v) else {
                return Err(format!("{a} - {b} is not a network edge"));
            };
            if let Some(cap) = g.edge(f).multiplicity.value() {
                if e.multiplicity.value().expect("finite") > cap {
                    return Err(format!("{a} - {b} exceeds multiplicity {cap}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExpectedPath {
    pub nodes: Vec<NodeId>,
    /// `g^1, …, g^{2r}`: the path index followed on each segment.
    pub labels: Vec<u32>,
}

impl ExpectedPath {
    pub fn terminal(&self) -> NodeId {
        *self.nodes.last().expect("non-empty")
    }
}

/// `P*`: the `s`-path of `g^1`, the `t`-path of `g^2`, …, the `t`-path of `g^{2r}`.
pub fn expected_path(gadget: &GadgetGraph) -> ExpectedPath {
    let inst = &gadget.instance;
    let labels: Vec<u32> = (1..=2 * inst.r).map(|k| inst.g(k).expect("k ≤ 2r")).collect();
    let mut nodes = Vec::with_capacity(2 * inst.r as usize * gadget.len as usize);
    for i in 1..=inst.r {
        let (a, b) = (labels[2 * i as usize - 2], labels[2 * i as usize - 1]);
        nodes.extend((1..=gadget.len).map(|x| gadget.s_node(i, a, x)));
        nodes.extend((1..=gadget.len).map(|x| gadget.t_node(i, b, x)));
    }
    ExpectedPath { nodes, labels }
}

/// Probability of following a fixed path, kept as an unreduced fraction.
#[derive(Clone, Debug)]
pub struct FollowProbability {
    numer: BigUint,
    denom: BigUint,
    /// Smallest single-step continue probability.
    pub min_step: BigRational,
    pub steps: usize,
}

impl FollowProbability {
    /// Whether the product is at least `n/d`.
    pub fn at_least(&self, n: u64, d: u64) -> bool {
        &self.numer * BigUint::from(d) >= &self.denom * BigUint::from(n)
    }

    /// Whether every step continues with probability at least `n/d`.
    pub fn min_step_at_least(&self, n: u64, d: u64) -> bool {
        self.min_step >= BigRational::new(n.into(), d.into())
    }

    /// The product in lowest terms.
    pub fn product(&self) -> BigRational {
        let g = self.numer.gcd(&self.denom);
        BigRational::new_raw((&self.numer / &g).into(), (&self.denom / &g).into())
    }

    pub fn to_f64(&self) -> f64 {
        ratio_f64(&self.numer, &self.denom)
    }
}

fn ratio_f64(n: &BigUint, d: &BigUint) -> f64 {
    let shift = d.bits().saturating_sub(60);
    let (n, d) = (n >> shift, d >> shift);
    n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY)
}

/// Exact probability that the walk started at `path[0]` follows `path`.
pub fn exact_follow_probability(
    gadget: &GadgetGraph,
    path: &[NodeId],
) -> Result<FollowProbability, GadgetError> {
    let mut numer = BigUint::one();
    let mut denom = BigUint::one();
    let mut min_step: Option<BigRational> = None;
    for w in path.windows(2) {
        let u = index(&gadget.graph, w[0])?;
        let v = index(&gadget.graph, w[1])?;
        let adj = &gadget.weights.adj[u];
        let k = adj
            .binary_search_by_key(&v, |e| e.0)
            .map_err(|_| GadgetError::InvalidPath(w[0], w[1]))?;
        let copies = &adj[k].1;
        let deg = &gadget.weights.degree[u];
        let step = BigRational::new(copies.clone().into(), deg.clone().into());
        if min_step.as_ref().is_none_or(|m| step < *m) {
            min_step = Some(step);
        }
        numer *= copies;
        denom *= deg;
    }
    Ok(FollowProbability {
        numer,
        denom,
        min_step: min_step.unwrap_or_else(BigRational::one),
        steps: path.len().saturating_sub(1),
    })
}

/// Exact `steps`-step distribution of the walk from `start`.
pub fn exact_destination_distribution(
    gadget: &GadgetGraph,
    start: &NodeId,
    steps: u64,
    budget: u64,
) -> Result<BTreeMap<NodeId, BigRational>, GadgetError> {
    let n = gadget.graph.node_count();
    let needed = n as u64 * steps.max(1);
    if needed > budget {
        return Err(GadgetError::BudgetExceeded {
            needed,
            limit: budget,
        });
    }
    let w = &gadget.weights;
    let trans: Vec<Vec<(usize, BigRational)>> = (0..n)
        .map(|u| {
            w.adj[u]
                .iter()
                .map(|(v, c)| (*v, BigRational::new(c.clone().into(), w.degree[u].clone().into())))
                .collect()
        })
        .collect();
    let mut dist: Vec<BigRational> = vec![BigRational::zero(); n];
    dist[index(&gadget.graph, *start)?] = BigRational::one();
    for _ in 0..steps {
        let mut next = vec![BigRational::zero(); n];
        for (u, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (v, q) in &trans[u] {
                next[*v] += p * q;
            }
        }
        dist = next;
    }
    Ok(dist
        .into_iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(v, p)| (gadget.graph.node(v), p))
        .collect())
}

/// One walk of `steps` steps, choosing each neighbor with probability
/// `copies / degree` by exact big-integer sampling.
pub fn sample_walk(gadget: &GadgetGraph, start: &NodeId, steps: u64, seed: u64) -> NodeId {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = &gadget.weights;
    let mut u = gadget.graph.index_of(start).expect("start is a gadget node");
    for _ in 0..steps {
        let mut x = rng.gen_biguint_below(&w.degree[u]);
        for (v, c) in &w.adj[u] {
            if x < *c {
                u = *v;
                break;
            }
            x -= c;
        }
    }
    gadget.graph.node(u)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub kappa: f64,
    pub lambda: u64,
    pub gamma: u32,
    pub r: u32,
    pub m: u32,
    #[serde(rename = "L")]
    pub path_len: u64,
    pub ell: u64,
    pub start: NodeId,
    pub pc: u32,
    pub terminal: NodeId,
    /// Exact success probability, when the DP fits the budget.
    pub exact_prob: Option<String>,
    pub exact_prob_f64: Option<f64>,
    /// Whether the exact success probability is at least 2/3.
    pub exact_prob_ok: Option<bool>,
    /// Probability of following `P*` exactly, as a float.
    pub follow_prob: f64,
    pub follow_prob_ok: bool,
    pub min_step_ok: bool,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: Option<f64>,
    pub modal_output: Option<u32>,
    pub histogram: BTreeMap<u32, u64>,
    pub outputs: Vec<u32>,
}

/// Exact success probability: mass on `t^{r,pc}_L`, plus the fallback mass
/// when `pc = 1`.
pub fn exact_success_probability(
    gadget: &GadgetGraph,
    dist: &BTreeMap<NodeId, BigRational>,
) -> BigRational {
    let pc = gadget.instance.pc();
    dist.iter()
        .filter(|(v, _)| gadget.output_for(v) == pc)
        .fold(BigRational::zero(), |acc, (_, p)| acc + p)
}

/// Runs `trials` walks from `s^{1,f_A(1)}_1` and reports outputs.
pub fn reduction_run(
    gadget: &GadgetGraph,
    trials: u64,
    seed: u64,
    mode: ExecMode,
    dp_budget: u64,
) -> Result<ReductionReport, GadgetError> {
    let start = gadget.start();
    let pc = gadget.instance.pc();
    let ell = gadget.ell;
    let exact = match exact_destination_distribution(gadget, &start, ell, dp_budget) {
        Ok(d) => Some(exact_success_probability(gadget, &d)),
        Err(GadgetError::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let follow = exact_follow_probability(gadget, &expected_path(gadget).nodes)?;
    let outputs = exec::map_range(mode, trials as usize, |k| {
        gadget.output_for(&sample_walk(gadget, &start, ell, derive_seed(seed, k as u64)))
    });
    let mut histogram = BTreeMap::new();
    for &o in &outputs {
        *histogram.entry(o).or_insert(0u64) += 1;
    }
    let successes = histogram.get(&pc).copied().unwrap_or(0);
    let modal_output = histogram
        .iter()
        .max_by_key(|(o, c)| (**c, std::cmp::Reverse(**o)))
        .map(|(o, _)| *o);
    let p = gadget.params.family;
    Ok(ReductionReport {
        kappa: p.kappa.to_f64(),
        lambda: p.lambda,
        gamma: p.gamma,
        r: gadget.params.r,
        m: gadget.params.m,
        path_len: gadget.len,
        ell,
        start,
        pc,
        terminal: gadget.t_node(gadget.params.r, pc, gadget.len),
        exact_prob_f64: exact.as_ref().map(|q| {
            ratio_f64(&q.numer().magnitude().clone(), &q.denom().magnitude().clone())
        }),
        exact_prob_ok: exact.as_ref().map(|q| *q >= BigRational::new(2.into(), 3.into())),
        exact_prob: exact.map(|q| format!("{}/{}", q.numer(), q.denom())),
        follow_prob: follow.to_f64(),
        follow_prob_ok: follow.at_least(2, 3),
        min_step_ok: follow.min_step_at_least(3 * ell - 1, 3 * ell),
        trials,
        successes,
        success_rate: (trials > 0).then(|| successes as f64 / trials as f64),
        modal_output,
        histogram,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(r: u32, m: u32, gamma: u32) -> GadgetParams {
        GadgetParams::new(FamilyParams::new(1.0, 2, gamma).unwrap(), r, m).unwrap()
    }

    #[test]
    fn rejects_crowded_parameters() {
        let fam = FamilyParams::new(1.0, 2, 3).unwrap();
        assert!(matches!(
            GadgetParams::new(fam, 1, 2),
            Err(GadgetError::ParamViolation(_))
        ));
    }

    #[test]
    fn exponents_run_consecutively() {
        let inst = PcInstance::identity(2, 2);
        let g = build_gadget(small(2, 2, 8), &inst, ConnectorMode::Corrected).unwrap();
        let p = expected_path(&g);
        assert_eq!(p.nodes.len() as u64, g.ell() + 1);
        let exps: Vec<u32> = p
            .nodes
            .windows(2)
            .map(|w| g.exponent(&w[0], &w[1]).unwrap())
            .collect();
        assert_eq!(exps, (1..=g.ell() as u32).collect::<Vec<_>>());
        assert_eq!(p.labels, vec![1; 4]);
        assert_eq!(p.terminal(), g.t_node(2, 1, g.path_len()));
    }

    #[test]
    fn follow_probability_and_dp_agree() {
        let inst = PcInstance::new(2, 1, vec![2, 1], vec![2, 2]).unwrap();
        let g = build_gadget(small(1, 2, 4), &inst, ConnectorMode::Corrected).unwrap();
        let p = expected_path(&g);
        let f = exact_follow_probability(&g, &p.nodes).unwrap();
        assert!(f.at_least(2, 3));
        assert!(f.min_step_at_least(3 * g.ell() - 1, 3 * g.ell()));
        let d = exact_destination_distribution(&g, &g.start(), g.ell(), DEFAULT_DP_BUDGET).unwrap();
        let total = d.values().fold(BigRational::zero(), |a, b| a + b);
        assert_eq!(total, BigRational::one());
        assert!(d[&p.terminal()] >= f.product());
    }

    #[test]
    fn walk_is_reproducible() {
        let inst = PcInstance::identity(1, 1);
        let g = build_gadget(small(1, 1, 2), &inst, ConnectorMode::Corrected).unwrap();
        let a = sample_walk(&g, &g.start(), g.ell(), 9);
        assert_eq!(a, sample_walk(&g, &g.start(), g.ell(), 9));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = PcInstance::identity(1, 1);
        let g = build_gadget(small(1, 1, 2), &inst, ConnectorMode::Corrected).unwrap();
        assert!(matches!(
            exact_destination_distribution(&g, &g.start(), g.ell(), 10),
            Err(GadgetError::BudgetExceeded { .. })
        ));
        let rep = reduction_run(&g, 0, 1, ExecMode::Sequential, 10).unwrap();
        assert_eq!((rep.trials, rep.successes, rep.exact_prob), (0, 0, None));
    }
}
