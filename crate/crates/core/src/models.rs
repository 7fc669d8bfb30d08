//! Model families with closed-form information projections.
//!
//! Each family exposes a `divergence_*` function that returns the projection
//! `q*` together with `D(p‖ℳ)` evaluated by its closed form. The
//! [`ModelSpec`] enum ties the families together for the estimators and the
//! command line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::junction::{JunctionEdge, JunctionTree};
use crate::simplex::{
    entropy_of, kl_of, marginal_unchecked, xlogx, Pmf, Partition, ReferenceMeasure, StateSpace,
};

/// An information projection and the divergence it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub q_star: Pmf,
    /// `D(p‖ℳ)` in nats, from the family's closed form.
    pub divergence: f64,
    /// Position of the minimizing member, for unions of models.
    pub argmin_member: Option<usize>,
}

/// A cylinder set `A = Y_1 × … × Y_n` of a composite space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CylinderBlock {
    values: Vec<Vec<usize>>,
}

impl CylinderBlock {
    /// `values[j]` lists the admissible values of factor `j`.
    pub fn new(values: Vec<Vec<usize>>) -> Self {
        let values = values
            .into_iter()
            .map(|mut v| {
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[Vec<usize>] {
        &self.values
    }

    /// `G = {j : |Y_j| > 1}`.
    pub fn free_factors(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&j| self.values[j].len() > 1)
            .collect()
    }

    pub fn cardinality(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    fn contains(&self, space: &StateSpace, state: usize) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(j, ys)| ys.binary_search(&space.coordinate(state, j)).is_ok())
    }
}

/// Pairwise disjoint cylinder blocks covering a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderPartition {
    blocks: Vec<CylinderBlock>,
    partition: Partition,
}

impl CylinderPartition {
    pub fn new(space: StateSpace, blocks: Vec<CylinderBlock>) -> Result<Self> {
        let n = space.n_factors();
        for (k, b) in blocks.iter().enumerate() {
            if b.values.len() != n {
                return Err(Error::InvalidCylinderBlocks(format!(
                    "block {k} lists {} factors, the space has {n}",
                    b.values.len()
                )));
            }
            for (j, ys) in b.values.iter().enumerate() {
                if ys.is_empty() {
                    return Err(Error::InvalidCylinderBlocks(format!(
                        "block {k} has no values for factor {j}"
                    )));
                }
                if let Some(&y) = ys.iter().find(|&&y| y >= space.factors()[j]) {
                    return Err(Error::InvalidCylinderBlocks(format!(
                        "block {k} uses value {y} of factor {j} with {} states",
                        space.factors()[j]
                    )));
                }
            }
        }
        let mut labels = vec![usize::MAX; space.size()];
        for x in 0..space.size() {
            for (k, b) in blocks.iter().enumerate() {
                if b.contains(&space, x) {
                    if labels[x] != usize::MAX {
                        return Err(Error::InvalidCylinderBlocks(format!(
                            "state {x} lies in blocks {} and {k}",
                            labels[x]
                        )));
                    }
                    labels[x] = k;
                }
            }
            if labels[x] == usize::MAX {
                return Err(Error::InvalidCylinderBlocks(format!(
                    "state {x} is in no block"
                )));
            }
        }
        let mut members = vec![Vec::new(); blocks.len()];
        for (x, &k) in labels.iter().enumerate() {
            members[k].push(x);
        }
        let partition = Partition::new(space, members)?;
        Ok(Self { blocks, partition })
    }

    /// Blocks `{x : x_k = v}` for each value `v` of factor `k`.
    pub fn split_on_factor(space: StateSpace, k: usize) -> Result<Self> {
        if k >= space.n_factors() {
            return Err(Error::IndexOutOfRange {
                what: "factor",
                index: k,
                bound: space.n_factors(),
            });
        }
        let blocks = (0..space.factors()[k])
            .map(|v| {
                let values = (0..space.n_factors())
                    .map(|j| {
                        if j == k {
                            vec![v]
                        } else {
                            (0..space.factors()[j]).collect()
                        }
                    })
                    .collect();
                CylinderBlock::new(values)
            })
            .collect();
        Self::new(space, blocks)
    }

    /// The single block covering the whole space.
    pub fn whole(space: StateSpace) -> Self {
        let values = space.factors().iter().map(|&n| (0..n).collect()).collect();
        Self::new(space, vec![CylinderBlock::new(values)]).expect("whole space is a cylinder")
    }

    pub fn space(&self) -> &StateSpace {
        self.partition.space()
    }

    pub fn blocks(&self) -> &[CylinderBlock] {
        &self.blocks
    }

    /// The underlying partition of the state indices.
    pub fn partition(&self) -> &Partition {
        &self.partition
    }
}

/// A model family on one state space.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `{u}`.
    Uniform(StateSpace),
    /// `{q}`.
    FixedPoint(Pmf),
    /// The convex exponential family `ℳ_{ϱ,ν}`; a partition model when ν is uniform.
    Partition(Partition, ReferenceMeasure),
    /// Product distributions `ℳ_1`.
    Independence(StateSpace),
    Decomposable(JunctionTree),
    /// Mixtures of product distributions with disjoint cylinder supports.
    DisjointMixture(CylinderPartition),
    UnionOfPartitions(Vec<Partition>, ReferenceMeasure),
}

impl ModelSpec {
    pub fn space(&self) -> &StateSpace {
        match self {
            ModelSpec::Uniform(s) | ModelSpec::Independence(s) => s,
            ModelSpec::FixedPoint(q) => q.space(),
            ModelSpec::Partition(p, _) => p.space(),
            ModelSpec::Decomposable(jt) => jt.space(),
            ModelSpec::DisjointMixture(c) => c.space(),
            ModelSpec::UnionOfPartitions(_, nu) => nu.space(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Uniform(_) => "uniform",
            ModelSpec::FixedPoint(_) => "fixed_point",
            ModelSpec::Partition(..) => "partition",
            ModelSpec::Independence(_) => "independence",
            ModelSpec::Decomposable(_) => "decomposable",
            ModelSpec::DisjointMixture(_) => "disjoint_mixture",
            ModelSpec::UnionOfPartitions(..) => "union_of_partitions",
        }
    }

    /// The information projection of `p` onto the model.
    pub fn project(&self, p: &Pmf) -> Result<ProjectionResult> {
        if p.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        match self {
            ModelSpec::Uniform(s) => {
                let q = Pmf::uniform(s.clone());
                let d = (s.size() as f64).ln() - entropy_of(p.weights());
                Ok(ProjectionResult {
                    q_star: q,
                    divergence: d.max(0.0),
                    argmin_member: None,
                })
            }
            ModelSpec::FixedPoint(q) => {
                let d = kl_of(p.weights(), q.weights()).into_result()?;
                Ok(ProjectionResult {
                    q_star: q.clone(),
                    divergence: d,
                    argmin_member: None,
                })
            }
            ModelSpec::Partition(part, nu) => divergence_from_partition_model(p, part, nu),
            ModelSpec::Independence(_) => multi_information(p),
            ModelSpec::Decomposable(jt) => divergence_from_decomposable(p, jt),
            ModelSpec::DisjointMixture(c) => divergence_from_disjoint_mixture(p, c),
            ModelSpec::UnionOfPartitions(parts, nu) => divergence_from_union(p, parts, nu),
        }
    }

    /// `D(p‖ℳ)` without materializing `q*`.
    pub fn divergence(&self, p: &Pmf) -> Result<f64> {
        if p.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        let w = p.weights();
        match self {
            ModelSpec::Uniform(s) => Ok(((s.size() as f64).ln() - entropy_of(w)).max(0.0)),
            ModelSpec::FixedPoint(q) => kl_of(w, q.weights()).into_result(),
            ModelSpec::Partition(part, nu) => Ok(partition_divergence(w, part, nu.values())),
            ModelSpec::Independence(s) => {
                if s.n_factors() < 2 {
                    return Err(independence_undefined());
                }
                Ok(multi_information_value(p))
            }
            ModelSpec::Decomposable(jt) => Ok(decomposable_value(p, jt)),
            ModelSpec::DisjointMixture(c) => Ok(disjoint_mixture_value(p, c)),
            ModelSpec::UnionOfPartitions(parts, nu) => {
                if parts.is_empty() {
                    return Err(Error::EmptyUnion);
                }
                Ok(parts
                    .iter()
                    .map(|part| partition_divergence(w, part, nu.values()))
                    .fold(f64::INFINITY, f64::min))
            }
        }
    }

    /// Whether the model contains the uniform distribution.
    pub fn contains_uniform(&self) -> bool {
        match self {
            ModelSpec::Uniform(_)
            | ModelSpec::Independence(_)
            | ModelSpec::Decomposable(_)
            | ModelSpec::DisjointMixture(_) => true,
            ModelSpec::FixedPoint(q) => {
                let u = 1.0 / q.len() as f64;
                q.weights().iter().all(|&w| (w - u).abs() < 1e-15)
            }
            ModelSpec::Partition(_, nu) | ModelSpec::UnionOfPartitions(_, nu) => nu.is_uniform(),
        }
    }
}

fn independence_undefined() -> Error {
    Error::ModelUndefined("the independence model needs at least two factors".into())
}

/// `Σ_i p_i log(p_i ν(A_k) / (p(A_k) ν_i))`, the divergence from `ℳ_{ϱ,ν}`.
pub(crate) fn partition_divergence(p: &[f64], part: &Partition, nu: &[f64]) -> f64 {
    let mass = part.aggregate(p);
    let nu_mass = part.aggregate(nu);
    let labels = part.block_of();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            let k = labels[i];
            acc += pi * (pi.ln() + nu_mass[k].ln() - mass[k].ln() - nu[i].ln());
        }
    }
    acc.max(0.0)
}

/// Projection onto `ℳ_{ϱ,ν}`: `q*_i = p(A_k) ν_i / ν(A_k)` for `i ∈ A_k`.
pub fn divergence_from_partition_model(
    p: &Pmf,
    part: &Partition,
    nu: &ReferenceMeasure,
) -> Result<ProjectionResult> {
    if p.space() != part.space() || nu.space() != part.space() {
        return Err(Error::SpaceMismatch);
    }
    let mass = part.aggregate(p.weights());
    let nu_mass = part.aggregate(nu.values());
    let q: Vec<f64> = part
        .block_of()
        .iter()
        .zip(nu.values())
        .map(|(&k, &v)| mass[k] * v / nu_mass[k])
        .collect();
    Ok(ProjectionResult {
        q_star: Pmf::from_unnormalized(p.space().clone(), q)?,
        divergence: partition_divergence(p.weights(), part, nu.values()),
        argmin_member: None,
    })
}

fn multi_information_value(p: &Pmf) -> f64 {
    let n = p.space().n_factors();
    let marginal_sum: f64 = (0..n)
        .map(|k| entropy_of(marginal_unchecked(p, &[k]).weights()))
        .sum();
    (marginal_sum - entropy_of(p.weights())).max(0.0)
}

/// Divergence from the independence model, `Σ_k H(X_k) − H(X_1, …, X_n)`,
/// with `q*` the product of the single-factor marginals.
pub fn multi_information(p: &Pmf) -> Result<ProjectionResult> {
    let space = p.space();
    let n = space.n_factors();
    if n < 2 {
        return Err(independence_undefined());
    }
    let marginals: Vec<Pmf> = (0..n).map(|k| marginal_unchecked(p, &[k])).collect();
    let q: Vec<f64> = (0..space.size())
        .map(|x| {
            marginals
                .iter()
                .enumerate()
                .map(|(k, m)| m.weights()[space.coordinate(x, k)])
                .product()
        })
        .collect();
    Ok(ProjectionResult {
        q_star: Pmf::from_unnormalized(space.clone(), q)?,
        divergence: multi_information_value(p),
        argmin_member: None,
    })
}

fn aggregate_by_map(w: &[f64], map: &[usize], size: usize) -> Vec<f64> {
    let mut out = vec![0.0; size];
    for (&x, &m) in w.iter().zip(map) {
        out[m] += x;
    }
    out
}

fn decomposable_value(p: &Pmf, jt: &JunctionTree) -> f64 {
    let w = p.weights();
    let sizes_v = jt.vertex_sizes();
    let sizes_e = jt.separator_sizes();
    let vertex_h: f64 = jt
        .vertex_maps()
        .iter()
        .zip(&sizes_v)
        .map(|(map, &n)| entropy_of(&aggregate_by_map(w, map, n)))
        .sum();
    let edge_h: f64 = jt
        .edge_maps()
        .iter()
        .zip(&sizes_e)
        .map(|(map, &n)| entropy_of(&aggregate_by_map(w, map, n)))
        .sum();
    (vertex_h - edge_h - entropy_of(w)).max(0.0)
}

/// Divergence from a decomposable model,
/// `Σ_{S∈V} H(X_S) − Σ_{S∈E} H(X_S) − H(p)`.
///
/// `q*(x) = Π_V p(x_S) / Π_E p(x_S)`, set to zero wherever a vertex
/// marginal vanishes.
pub fn divergence_from_decomposable(p: &Pmf, jt: &JunctionTree) -> Result<ProjectionResult> {
    if p.space() != jt.space() {
        return Err(Error::SpaceMismatch);
    }
    jt.validate()?;
    let w = p.weights();
    let vm: Vec<Vec<f64>> = jt
        .vertex_maps()
        .iter()
        .zip(jt.vertex_sizes())
        .map(|(map, n)| aggregate_by_map(w, map, n))
        .collect();
    let em: Vec<Vec<f64>> = jt
        .edge_maps()
        .iter()
        .zip(jt.separator_sizes())
        .map(|(map, n)| aggregate_by_map(w, map, n))
        .collect();
    let q: Vec<f64> = (0..w.len())
        .map(|x| {
            let mut num = 1.0;
            for (marg, map) in vm.iter().zip(jt.vertex_maps()) {
                num *= marg[map[x]];
            }
            if num == 0.0 {
                return 0.0;
            }
            let den: f64 = em
                .iter()
                .zip(jt.edge_maps())
                .map(|(marg, map)| marg[map[x]])
                .product();
            num / den
        })
        .collect();
    Ok(ProjectionResult {
        q_star: Pmf::from_unnormalized(p.space().clone(), q)?,
        divergence: decomposable_value(p, jt),
        argmin_member: None,
    })
}

/// Per block, the mass `p(A)` and for every factor the block-restricted
/// marginal `y_j ↦ Σ_{y∈A, y_j = x_j} p(y)`.
fn block_marginals(p: &Pmf, cyl: &CylinderPartition) -> (Vec<f64>, Vec<Vec<Vec<f64>>>) {
    let space = p.space();
    let part = cyl.partition();
    let mass = part.aggregate(p.weights());
    let mut marg: Vec<Vec<Vec<f64>>> = (0..part.n_blocks())
        .map(|_| space.factors().iter().map(|&n| vec![0.0; n]).collect())
        .collect();
    for (x, &px) in p.weights().iter().enumerate() {
        let k = part.block_of()[x];
        for (j, mj) in marg[k].iter_mut().enumerate() {
            mj[space.coordinate(x, j)] += px;
        }
    }
    (mass, marg)
}

fn disjoint_mixture_value(p: &Pmf, cyl: &CylinderPartition) -> f64 {
    let space = p.space();
    let n = space.n_factors() as f64;
    let (mass, marg) = block_marginals(p, cyl);
    let labels = cyl.partition().block_of();
    let mut acc = 0.0;
    for (x, &px) in p.weights().iter().enumerate() {
        if px > 0.0 {
            let k = labels[x];
            let mut log_den = 0.0;
            for (j, mj) in marg[k].iter().enumerate() {
                log_den += mj[space.coordinate(x, j)].ln();
            }
            acc += px * (px.ln() + (n - 1.0) * mass[k].ln() - log_den);
        }
    }
    acc.max(0.0)
}

/// Divergence from the mixture of product distributions supported on
/// disjoint cylinder blocks,
/// `Σ_i Σ_{x∈A_i} p(x) log[p(x) p(A_i)^{n−1} / Π_j Σ_{y∈A_i, y_j = x_j} p(y)]`.
///
/// `q*` keeps the block masses of `p` and replaces each conditional
/// `p(·|A_i)` by the product of its single-factor marginals.
pub fn divergence_from_disjoint_mixture(
    p: &Pmf,
    cyl: &CylinderPartition,
) -> Result<ProjectionResult> {
    if p.space() != cyl.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = p.space();
    let n = space.n_factors() as i32;
    let (mass, marg) = block_marginals(p, cyl);
    let labels = cyl.partition().block_of();
    let q: Vec<f64> = (0..space.size())
        .map(|x| {
            let k = labels[x];
            if mass[k] == 0.0 {
                return 0.0;
            }
            let prod: f64 = marg[k]
                .iter()
                .enumerate()
                .map(|(j, mj)| mj[space.coordinate(x, j)])
                .product();
            prod / mass[k].powi(n - 1)
        })
        .collect();
    Ok(ProjectionResult {
        q_star: Pmf::from_unnormalized(space.clone(), q)?,
        divergence: disjoint_mixture_value(p, cyl),
        argmin_member: None,
    })
}

/// Divergence from a union of partition models: the smallest member
/// divergence, ties going to the lowest index.
pub fn divergence_from_union(
    p: &Pmf,
    parts: &[Partition],
    nu: &ReferenceMeasure,
) -> Result<ProjectionResult> {
    let mut best: Option<(usize, f64)> = None;
    for (i, part) in parts.iter().enumerate() {
        if part.space() != p.space() || nu.space() != p.space() {
            return Err(Error::SpaceMismatch);
        }
        let d = partition_divergence(p.weights(), part, nu.values());
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    let (i, _) = best.ok_or(Error::EmptyUnion)?;
    let mut res = divergence_from_partition_model(p, &parts[i], nu)?;
    res.argmin_member = Some(i);
    Ok(res)
}

/// `max_p D(p‖ℳ_ϱ) = max_k log L_k` for the partition model (uniform ν).
pub fn max_divergence_partition_model(part: &Partition) -> f64 {
    part.block_sizes()
        .into_iter()
        .map(|l| (l as f64).ln())
        .fold(0.0, f64::max)
}

/// Wire form of a [`ModelSpec`]. The state space comes from `factors` when
/// present, otherwise from the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<usize>>,
    #[serde(flatten)]
    pub kind: ModelKindDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKindDoc {
    Uniform,
    FixedPoint {
        q: Vec<f64>,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<Vec<f64>>,
    },
    Independence,
    Decomposable {
        vertices: Vec<Vec<usize>>,
        /// Omitted edges are inferred from the facets.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<JunctionEdge>>,
    },
    DisjointMixture {
        blocks: Vec<CylinderBlock>,
    },
    UnionOfPartitions {
        partitions: Vec<Vec<Vec<usize>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<Vec<f64>>,
    },
}

impl ModelDoc {
    /// Validates the document against `fallback` (used when `factors` is absent).
    pub fn build(&self, fallback: Option<&StateSpace>) -> Result<ModelSpec> {
        let space = match (&self.factors, fallback) {
            (Some(f), _) => StateSpace::new(f.clone())?,
            (None, Some(s)) => s.clone(),
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "model has no `factors` and no state space was given".into(),
                ))
            }
        };
        let nu_of = |nu: &Option<Vec<f64>>| match nu {
            Some(v) => ReferenceMeasure::new(space.clone(), v.clone()),
            None => Ok(ReferenceMeasure::uniform(space.clone())),
        };
        Ok(match &self.kind {
            ModelKindDoc::Uniform => ModelSpec::Uniform(space),
            ModelKindDoc::FixedPoint { q } => ModelSpec::FixedPoint(Pmf::new(space, q.clone())?),
            ModelKindDoc::Partition { blocks, nu } => {
                ModelSpec::Partition(Partition::new(space.clone(), blocks.clone())?, nu_of(nu)?)
            }
            ModelKindDoc::Independence => {
                if space.n_factors() < 2 {
                    return Err(independence_undefined());
                }
                ModelSpec::Independence(space)
            }
            ModelKindDoc::Decomposable { vertices, edges } => ModelSpec::Decomposable(match edges {
                Some(e) => JunctionTree::new(space, vertices.clone(), e.clone())?,
                None => JunctionTree::from_facets(space, vertices.clone())?,
            }),
            ModelKindDoc::DisjointMixture { blocks } => {
                ModelSpec::DisjointMixture(CylinderPartition::new(space, blocks.clone())?)
            }
            ModelKindDoc::UnionOfPartitions { partitions, nu } => {
                if partitions.is_empty() {
                    return Err(Error::EmptyUnion);
                }
                let parts = partitions
                    .iter()
                    .map(|b| Partition::new(space.clone(), b.clone()))
                    .collect::<Result<Vec<_>>>()?;
                ModelSpec::UnionOfPartitions(parts, nu_of(nu)?)
            }
        })
    }
}

impl From<&ModelSpec> for ModelDoc {
    fn from(m: &ModelSpec) -> Self {
        let nu_doc = |nu: &ReferenceMeasure| (!nu.is_uniform()).then(|| nu.values().to_vec());
        let kind = match m {
            ModelSpec::Uniform(_) => ModelKindDoc::Uniform,
            ModelSpec::FixedPoint(q) => ModelKindDoc::FixedPoint {
                q: q.weights().to_vec(),
            },
            ModelSpec::Partition(p, nu) => ModelKindDoc::Partition {
                blocks: p.blocks().to_vec(),
                nu: nu_doc(nu),
            },
            ModelSpec::Independence(_) => ModelKindDoc::Independence,
            ModelSpec::Decomposable(jt) => ModelKindDoc::Decomposable {
                vertices: jt.vertices().to_vec(),
                edges: Some(jt.edges().to_vec()),
            },
            ModelSpec::DisjointMixture(c) => ModelKindDoc::DisjointMixture {
                blocks: c.blocks().to_vec(),
            },
            ModelSpec::UnionOfPartitions(parts, nu) => ModelKindDoc::UnionOfPartitions {
                partitions: parts.iter().map(|p| p.blocks().to_vec()).collect(),
                nu: nu_doc(nu),
            },
        };
        ModelDoc {
            factors: Some(m.space().factors().to_vec()),
            kind,
        }
    }
}

/// Entropy of the block masses plus the in-block term; used by tests and
/// the bipartition minimizer: `D(p‖ℳ_ϱ) = −H(p) − Σ_k p(A_k) log(p(A_k) / L_k)`.
pub(crate) fn partition_divergence_uniform_from_masses(
    neg_entropy: f64,
    masses: &[f64],
    sizes: &[usize],
) -> f64 {
    let mut acc = neg_entropy;
    for (&m, &l) in masses.iter().zip(sizes) {
        acc -= xlogx(m) - m * (l as f64).ln();
    }
    acc.max(0.0)
}
