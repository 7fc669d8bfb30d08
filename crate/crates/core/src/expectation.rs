//! Expected entropies and divergences of Dirichlet-distributed distributions.
//!
//! Every function returns an [`ExpectationResult`] tagged with the formula
//! branch that produced it. General formulas take a [`DirichletPrior`];
//! the `*_symmetric` variants take the common concentration `a` and are
//! cheaper at large `N`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::junction::JunctionTree;
use crate::models::{CylinderPartition, ModelSpec};
use crate::simplex::{DirichletPrior, Partition, Pmf, ReferenceMeasure, StateSpace};
use crate::special::{harmonic, KahanSum, EULER_GAMMA};

/// Which closed form produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Entropy,
    EntropySymmetric,
    DivUniform,
    DivUniformSymmetric,
    DivToPoint,
    DivToPointSymmetric,
    DivFromPrior,
    DivPair,
    CrossTermPair,
    MarginalEntropy,
    MarginalEntropySymmetric,
    MultiInformation,
    MultiInformationSymmetric,
    DivPartition,
    DivPartitionSymmetric,
    DivDisjointMixture,
    DivDisjointMixtureSymmetric,
    DivDecomposable,
    DivDecomposableSymmetric,
    Asymptotic(Quantity, Regime),
    SubsimplexVolume,
}

impl FormulaId {
    pub fn as_str(&self) -> &'static str {
        use FormulaId::*;
        match self {
            Entropy => "entropy",
            EntropySymmetric => "entropy_symmetric",
            DivUniform => "div_uniform",
            DivUniformSymmetric => "div_uniform_symmetric",
            DivToPoint => "div_to_point",
            DivToPointSymmetric => "div_to_point_symmetric",
            DivFromPrior => "div_from_prior",
            DivPair => "div_pair",
            CrossTermPair => "cross_term_pair",
            MarginalEntropy => "marginal_entropy",
            MarginalEntropySymmetric => "marginal_entropy_symmetric",
            MultiInformation => "multi_information",
            MultiInformationSymmetric => "multi_information_symmetric",
            DivPartition => "div_partition",
            DivPartitionSymmetric => "div_partition_symmetric",
            DivDisjointMixture => "div_disjoint_mixture",
            DivDisjointMixtureSymmetric => "div_disjoint_mixture_symmetric",
            DivDecomposable => "div_decomposable",
            DivDecomposableSymmetric => "div_decomposable_symmetric",
            Asymptotic(Quantity::Entropy, r) => match r {
                Regime::LargeNConstA => "asymptotic_entropy_large_N_const_a",
                Regime::LargeA => "asymptotic_entropy_large_a",
                Regime::AToZeroBoundedN => "asymptotic_entropy_a_to_0_bounded_N",
                Regime::AToZeroFixedNa => "asymptotic_entropy_a_to_0_fixed_Na",
            },
            Asymptotic(Quantity::DivUniform, r) => match r {
                Regime::LargeNConstA => "asymptotic_div_uniform_large_N_const_a",
                Regime::LargeA => "asymptotic_div_uniform_large_a",
                Regime::AToZeroBoundedN => "asymptotic_div_uniform_a_to_0_bounded_N",
                Regime::AToZeroFixedNa => "asymptotic_div_uniform_a_to_0_fixed_Na",
            },
            SubsimplexVolume => "subsimplex_volume",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A closed-form value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationResult {
    /// Nats.
    pub value: f64,
    pub formula: FormulaId,
    /// Leading-order error of an asymptotic value; `None` for exact formulas.
    pub error_order: Option<&'static str>,
}

impl ExpectationResult {
    fn exact(value: f64, formula: FormulaId) -> Self {
        Self {
            value,
            formula,
            error_order: None,
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("concentration a must be positive, got {a}")))
    }
}

/// `Σ_j (β_j/α) h(β_j)`.
fn weighted_h(betas: impl IntoIterator<Item = f64>, total: f64) -> f64 {
    betas
        .into_iter()
        .map(|b| b / total * harmonic(b))
        .collect::<KahanSum>()
        .value()
}

/// `h(α) − Σ_i (α_i/α) h(α_i)`.
pub fn expected_entropy(prior: &DirichletPrior) -> ExpectationResult {
    let total = prior.total();
    let value = harmonic(total) - weighted_h(prior.alpha().iter().copied(), total);
    ExpectationResult::exact(value, FormulaId::Entropy)
}

/// `h(Na) − h(a)`.
pub fn expected_entropy_symmetric(n: usize, a: f64) -> Result<ExpectationResult> {
    check_a(a)?;
    let value = harmonic(n as f64 * a) - harmonic(a);
    Ok(ExpectationResult::exact(value, FormulaId::EntropySymmetric))
}

/// `log N − ⟨H(p)⟩`.
pub fn expected_div_uniform(prior: &DirichletPrior) -> ExpectationResult {
    let value = (prior.len() as f64).ln() - expected_entropy(prior).value;
    ExpectationResult::exact(value, FormulaId::DivUniform)
}

/// `log N − h(Na) + h(a)`.
pub fn expected_div_uniform_symmetric(n: usize, a: f64) -> Result<ExpectationResult> {
    let h = expected_entropy_symmetric(n, a)?;
    Ok(ExpectationResult::exact(
        (n as f64).ln() - h.value,
        FormulaId::DivUniformSymmetric,
    ))
}

fn require_positive(q: &Pmf) -> Result<()> {
    match q.weights().iter().position(|&w| w <= 0.0) {
        Some(i) => Err(Error::Domain(format!(
            "q vanishes at state {i}; the expected divergence is infinite"
        ))),
        None => Ok(()),
    }
}

/// `⟨D(p‖q)⟩` for `p ~ Dir(α)` and a fixed, strictly positive `q`.
pub fn expected_div_to_point(prior: &DirichletPrior, q: &Pmf) -> Result<ExpectationResult> {
    if prior.space() != q.space() {
        return Err(Error::SpaceMismatch);
    }
    require_positive(q)?;
    let total = prior.total();
    let sum: KahanSum = prior
        .alpha()
        .iter()
        .zip(q.weights())
        .map(|(&ai, &qi)| ai / total * (harmonic(ai) - qi.ln()))
        .collect();
    Ok(ExpectationResult::exact(
        sum.value() - harmonic(total),
        FormulaId::DivToPoint,
    ))
}

/// `D(u‖q) + h(a) + log N − h(Na)`.
pub fn expected_div_to_point_symmetric(a: f64, q: &Pmf) -> Result<ExpectationResult> {
    check_a(a)?;
    require_positive(q)?;
    let n = q.len() as f64;
    let d_uq: KahanSum = q.weights().iter().map(|&qi| -(n * qi).ln() / n).collect();
    let value = d_uq.value() + harmonic(a) + n.ln() - harmonic(n * a);
    Ok(ExpectationResult::exact(value, FormulaId::DivToPointSymmetric))
}

/// `⟨D(p‖q)⟩` for a fixed `p` and `q ~ Dir(α)`:
/// `Σ_i p_i (log p_i − h(α_i − 1)) + h(α − 1)`.
pub fn expected_div_from_prior(p: &Pmf, prior: &DirichletPrior) -> Result<ExpectationResult> {
    if prior.space() != p.space() {
        return Err(Error::SpaceMismatch);
    }
    let sum: KahanSum = p
        .weights()
        .iter()
        .zip(prior.alpha())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &ai)| pi * (pi.ln() - harmonic(ai - 1.0)))
        .collect();
    Ok(ExpectationResult::exact(
        sum.value() + harmonic(prior.total() - 1.0),
        FormulaId::DivFromPrior,
    ))
}

/// Expectations for independent `p ~ Dir(α)` and `q ~ Dir(α̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairExpectation {
    /// `⟨D(p‖q)⟩`.
    pub divergence: ExpectationResult,
    /// `⟨Σ_i p_i log q_i⟩`.
    pub cross_term: ExpectationResult,
}

pub fn expected_div_pair(
    prior_p: &DirichletPrior,
    prior_q: &DirichletPrior,
) -> Result<PairExpectation> {
    if prior_p.space() != prior_q.space() {
        return Err(Error::SpaceMismatch);
    }
    let total = prior_p.total();
    let total_q = prior_q.total();
    let cross = prior_p
        .alpha()
        .iter()
        .zip(prior_q.alpha())
        .map(|(&ai, &bi)| ai / total * harmonic(bi - 1.0))
        .collect::<KahanSum>()
        .value()
        - harmonic(total_q - 1.0);
    let neg_entropy = weighted_h(prior_p.alpha().iter().copied(), total) - harmonic(total);
    Ok(PairExpectation {
        divergence: ExpectationResult::exact(neg_entropy - cross, FormulaId::DivPair),
        cross_term: ExpectationResult::exact(cross, FormulaId::CrossTermPair),
    })
}

/// `⟨H(X_k)⟩ = h(α) − Σ_j (α^k_j/α) h(α^k_j)`.
pub fn expected_marginal_entropy(prior: &DirichletPrior, k: usize) -> Result<ExpectationResult> {
    let marginal = crate::simplex::marginal_concentration(prior, k)?;
    let total = prior.total();
    let value = harmonic(total) - weighted_h(marginal.alpha().iter().copied(), total);
    Ok(ExpectationResult::exact(value, FormulaId::MarginalEntropy))
}

/// `h(Na) − h((N/N_k) a)`.
pub fn expected_marginal_entropy_symmetric(
    space: &StateSpace,
    a: f64,
    k: usize,
) -> Result<ExpectationResult> {
    check_a(a)?;
    let nk = *space.factors().get(k).ok_or(Error::IndexOutOfRange {
        what: "factor",
        index: k,
        bound: space.n_factors(),
    })?;
    let n = space.size() as f64;
    let value = harmonic(n * a) - harmonic(n / nk as f64 * a);
    Ok(ExpectationResult::exact(value, FormulaId::MarginalEntropySymmetric))
}

fn require_composite(space: &StateSpace) -> Result<()> {
    if space.n_factors() < 2 {
        Err(Error::ModelUndefined(
            "the independence model needs at least two factors".into(),
        ))
    } else {
        Ok(())
    }
}

/// `(n−1) h(α) + Σ_i (α_i/α) h(α_i) − Σ_k Σ_j (α^k_j/α) h(α^k_j)`.
pub fn expected_multi_information(prior: &DirichletPrior) -> Result<ExpectationResult> {
    let space = prior.space();
    require_composite(space)?;
    let total = prior.total();
    let mut acc = KahanSum::default();
    acc.add((space.n_factors() - 1) as f64 * harmonic(total));
    acc.add(weighted_h(prior.alpha().iter().copied(), total));
    for k in 0..space.n_factors() {
        let m = crate::simplex::marginal_concentration(prior, k)?;
        acc.add(-weighted_h(m.alpha().iter().copied(), total));
    }
    Ok(ExpectationResult::exact(acc.value(), FormulaId::MultiInformation))
}

/// `(n−1) h(Na) + h(a) − Σ_k h((N/N_k) a)`.
pub fn expected_multi_information_symmetric(
    space: &StateSpace,
    a: f64,
) -> Result<ExpectationResult> {
    check_a(a)?;
    require_composite(space)?;
    let n = space.size() as f64;
    let mut acc = KahanSum::default();
    acc.add((space.n_factors() - 1) as f64 * harmonic(n * a));
    acc.add(harmonic(a));
    for &nk in space.factors() {
        acc.add(-harmonic(n / nk as f64 * a));
    }
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::MultiInformationSymmetric,
    ))
}

/// Expected divergence from the convex exponential family `ℳ_{ϱ,ν}`:
/// `Σ_i (α_i/α)(h(α_i) − log ν_i) − Σ_k (α^ϱ_k/α)(h(α^ϱ_k) − log ν(A_k))`
/// with ν normalized to a probability vector.
pub fn expected_div_partition(
    prior: &DirichletPrior,
    part: &Partition,
    nu: &ReferenceMeasure,
) -> Result<ExpectationResult> {
    if prior.space() != part.space() || nu.space() != part.space() {
        return Err(Error::SpaceMismatch);
    }
    let total = prior.total();
    let nu = nu.normalized();
    let nu_mass = part.aggregate(nu.weights());
    let block_alpha = part.aggregate(prior.alpha());
    let mut acc = KahanSum::default();
    for (&ai, &vi) in prior.alpha().iter().zip(nu.weights()) {
        acc.add(ai / total * (harmonic(ai) - vi.ln()));
    }
    for (&bk, &vk) in block_alpha.iter().zip(&nu_mass) {
        acc.add(-bk / total * (harmonic(bk) - vk.ln()));
    }
    Ok(ExpectationResult::exact(acc.value(), FormulaId::DivPartition))
}

/// `h(a) − Σ_k (L_k/N)(h(L_k a) − log L_k) + D(u‖ν')`, where `ν'` keeps the
/// conditionals `ν(·|A_k)` and gives block `A_k` the mass `L_k/N`.
pub fn expected_div_partition_symmetric(
    a: f64,
    part: &Partition,
    nu: &ReferenceMeasure,
) -> Result<ExpectationResult> {
    check_a(a)?;
    if nu.space() != part.space() {
        return Err(Error::SpaceMismatch);
    }
    let n = part.space().size() as f64;
    let sizes = part.block_sizes();
    let nu_mass = part.aggregate(nu.values());
    let mut acc = KahanSum::default();
    acc.add(harmonic(a));
    for &l in &sizes {
        let l = l as f64;
        acc.add(-(l / n) * (harmonic(l * a) - l.ln()));
    }
    // D(u‖ν') = Σ_i (1/N) log((1/N) / ν'_i), ν'_i = (L_k/N) ν_i / ν(A_k)
    for (&k, &vi) in part.block_of().iter().zip(nu.values()) {
        acc.add(-(sizes[k] as f64 * vi / nu_mass[k]).ln() / n);
    }
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::DivPartitionSymmetric,
    ))
}

/// Expected divergence from the mixture of product distributions with
/// disjoint cylinder supports.
pub fn expected_div_disjoint_mixture(
    prior: &DirichletPrior,
    cyl: &CylinderPartition,
) -> Result<ExpectationResult> {
    if prior.space() != cyl.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = prior.space();
    let total = prior.total();
    let h_total = harmonic(total);
    let part = cyl.partition();
    let block_alpha = part.aggregate(prior.alpha());
    let mut acc = KahanSum::default();
    for &ai in prior.alpha() {
        acc.add(ai / total * (harmonic(ai) - h_total));
    }
    for (k, block) in cyl.blocks().iter().enumerate() {
        let free = block.free_factors();
        let bk = block_alpha[k];
        acc.add((free.len() as f64 - 1.0) * bk / total * (harmonic(bk) - h_total));
        for &j in &free {
            let mut per_value = vec![0.0; space.factors()[j]];
            for &x in &part.blocks()[k] {
                per_value[space.coordinate(x, j)] += prior.alpha()[x];
            }
            for &b in block.values()[j].iter().map(|v| &per_value[*v]) {
                acc.add(-b / total * (harmonic(b) - h_total));
            }
        }
    }
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::DivDisjointMixture,
    ))
}

/// Block exponents `m_k` when all factors share one size `N_1` and every
/// block is `N_1^{m_k}` states; `None` otherwise.
fn homogeneous_exponents(cyl: &CylinderPartition) -> Option<(usize, Vec<usize>)> {
    let factors = cyl.space().factors();
    let n1 = factors[0];
    if factors.iter().any(|&f| f != n1) {
        return None;
    }
    let mut ms = Vec::with_capacity(cyl.blocks().len());
    for b in cyl.blocks() {
        let free = b.free_factors();
        if free.iter().any(|&j| b.values()[j].len() != n1) {
            return None;
        }
        ms.push(free.len());
    }
    Some((n1, ms))
}

/// `h(a) + Σ_k N_1^{m_k−n}((m_k−1) h(N_1^{m_k} a) − m_k h(N_1^{m_k−1} a))`,
/// for homogeneous spaces whose blocks fix `n − m_k` coordinates.
pub fn expected_div_disjoint_mixture_symmetric(
    a: f64,
    cyl: &CylinderPartition,
) -> Result<ExpectationResult> {
    check_a(a)?;
    let (n1, ms) = homogeneous_exponents(cyl).ok_or_else(|| {
        Error::InvalidConfig(
            "symmetric mixture formula needs equal factor sizes and full free factors".into(),
        )
    })?;
    let n = cyl.space().n_factors() as i32;
    let n1 = n1 as f64;
    let mut acc = KahanSum::default();
    acc.add(harmonic(a));
    for &m in &ms {
        let m_f = m as f64;
        let w = n1.powi(m as i32 - n);
        let big = n1.powi(m as i32) * a;
        let small = n1.powi(m as i32 - 1) * a;
        acc.add(w * ((m_f - 1.0) * harmonic(big) - m_f * harmonic(small)));
    }
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::DivDisjointMixtureSymmetric,
    ))
}

fn aggregated_weighted_h(alpha: &[f64], map: &[usize], size: usize, total: f64) -> f64 {
    let mut agg = vec![0.0; size];
    for (&ai, &m) in alpha.iter().zip(map) {
        agg[m] += ai;
    }
    weighted_h(agg, total)
}

/// Expected divergence from a decomposable model,
/// `−Σ_V Σ_j (α^S_j/α) h(α^S_j) + Σ_E Σ_j (α^S_j/α) h(α^S_j)
///  + (|V| − |E| − 1) h(α) + Σ_i (α_i/α) h(α_i)`.
pub fn expected_div_decomposable(
    prior: &DirichletPrior,
    jt: &JunctionTree,
) -> Result<ExpectationResult> {
    if prior.space() != jt.space() {
        return Err(Error::SpaceMismatch);
    }
    jt.validate()?;
    let alpha = prior.alpha();
    let total = prior.total();
    let mut acc = KahanSum::default();
    for (map, size) in jt.vertex_maps().iter().zip(jt.vertex_sizes()) {
        acc.add(-aggregated_weighted_h(alpha, map, size, total));
    }
    for (map, size) in jt.edge_maps().iter().zip(jt.separator_sizes()) {
        acc.add(aggregated_weighted_h(alpha, map, size, total));
    }
    let coef = jt.vertices().len() as f64 - jt.edges().len() as f64 - 1.0;
    acc.add(coef * harmonic(total));
    acc.add(weighted_h(alpha.iter().copied(), total));
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::DivDecomposable,
    ))
}

/// `Σ_V (h(Na) − h(Na/N_S)) − Σ_E (h(Na) − h(Na/N_S)) − h(Na) + h(a)`.
pub fn expected_div_decomposable_symmetric(
    a: f64,
    jt: &JunctionTree,
) -> Result<ExpectationResult> {
    check_a(a)?;
    jt.validate()?;
    let na = jt.space().size() as f64 * a;
    let h_na = harmonic(na);
    let mut acc = KahanSum::default();
    for s in jt.vertex_sizes() {
        acc.add(h_na - harmonic(na / s as f64));
    }
    for s in jt.separator_sizes() {
        acc.add(-(h_na - harmonic(na / s as f64)));
    }
    acc.add(harmonic(a) - h_na);
    Ok(ExpectationResult::exact(
        acc.value(),
        FormulaId::DivDecomposableSymmetric,
    ))
}

/// `⟨D(p‖ℳ)⟩` for any model with a closed form. Symmetric priors take the
/// symmetric branch where one exists.
pub fn expected_divergence(prior: &DirichletPrior, model: &ModelSpec) -> Result<ExpectationResult> {
    if prior.space() != model.space() {
        return Err(Error::SpaceMismatch);
    }
    let sym = prior.symmetric_value();
    match (model, sym) {
        (ModelSpec::Uniform(s), Some(a)) => expected_div_uniform_symmetric(s.size(), a),
        (ModelSpec::Uniform(_), None) => Ok(expected_div_uniform(prior)),
        (ModelSpec::FixedPoint(q), Some(a)) => expected_div_to_point_symmetric(a, q),
        (ModelSpec::FixedPoint(q), None) => expected_div_to_point(prior, q),
        (ModelSpec::Partition(part, nu), Some(a)) => expected_div_partition_symmetric(a, part, nu),
        (ModelSpec::Partition(part, nu), None) => expected_div_partition(prior, part, nu),
        (ModelSpec::Independence(s), Some(a)) => expected_multi_information_symmetric(s, a),
        (ModelSpec::Independence(_), None) => expected_multi_information(prior),
        (ModelSpec::Decomposable(jt), Some(a)) => expected_div_decomposable_symmetric(a, jt),
        (ModelSpec::Decomposable(jt), None) => expected_div_decomposable(prior, jt),
        (ModelSpec::DisjointMixture(c), Some(a)) if homogeneous_exponents(c).is_some() => {
            expected_div_disjoint_mixture_symmetric(a, c)
        }
        (ModelSpec::DisjointMixture(c), _) => expected_div_disjoint_mixture(prior, c),
        (ModelSpec::UnionOfPartitions(..), _) => Err(Error::ModelUndefined(
            "no closed-form expectation for a union of partition models".into(),
        )),
    }
}

/// Which expectation an asymptotic branch approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Entropy,
    DivUniform,
}

/// Limit regimes of the symmetric prior `(a, …, a)` on `N` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `N → ∞` at fixed `a`.
    #[serde(rename = "large_N_const_a")]
    LargeNConstA,
    /// `a → ∞` at fixed `N`.
    #[serde(rename = "large_a")]
    LargeA,
    /// `a → 0` at fixed `N`.
    #[serde(rename = "a_to_0_bounded_N")]
    AToZeroBoundedN,
    /// `a → 0`, `N → ∞` with `Na = c` fixed.
    #[serde(rename = "a_to_0_fixed_Na")]
    AToZeroFixedNa,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large_N_const_a" => Ok(Regime::LargeNConstA),
            "large_a" => Ok(Regime::LargeA),
            "a_to_0_bounded_N" => Ok(Regime::AToZeroBoundedN),
            "a_to_0_fixed_Na" => Ok(Regime::AToZeroFixedNa),
            _ => Err(Error::InvalidConfig(format!("unknown regime `{s}`"))),
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Quantity::Entropy),
            "div_uniform" => Ok(Quantity::DivUniform),
            _ => Err(Error::InvalidConfig(format!("unknown quantity `{s}`"))),
        }
    }
}

/// Parameters of an asymptotic branch; each regime reads only what it needs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AsymptoticParams {
    pub n: Option<usize>,
    pub a: Option<f64>,
    /// The fixed product `Na`.
    pub c: Option<f64>,
}

fn need<T>(v: Option<T>, name: &str, regime: Regime) -> Result<T> {
    v.ok_or_else(|| Error::InvalidConfig(format!("regime {regime:?} needs parameter `{name}`")))
}

/// Leading-order value of `⟨H⟩` or `⟨D(·‖u)⟩` under a symmetric prior.
pub fn asymptotic_eval(
    quantity: Quantity,
    regime: Regime,
    params: AsymptoticParams,
) -> Result<ExpectationResult> {
    let log_n = |n: usize| (n as f64).ln();
    let (value, order) = match (quantity, regime) {
        (Quantity::Entropy, Regime::LargeNConstA) => {
            let n = need(params.n, "N", regime)?;
            let a = need(params.a, "a", regime)?;
            check_a(a)?;
            ((n as f64 * a).ln() - harmonic(a) + EULER_GAMMA, "O(1/(Na))")
        }
        (Quantity::DivUniform, Regime::LargeNConstA) => {
            let a = need(params.a, "a", regime)?;
            check_a(a)?;
            (harmonic(a) - a.ln() - EULER_GAMMA, "O(1/(Na))")
        }
        (Quantity::Entropy, Regime::LargeA) => (log_n(need(params.n, "N", regime)?), "O(1/a)"),
        (Quantity::DivUniform, Regime::LargeA) => (0.0, "O(1/a)"),
        (Quantity::Entropy, Regime::AToZeroBoundedN) => (0.0, "O(Na)"),
        (Quantity::DivUniform, Regime::AToZeroBoundedN) => {
            (log_n(need(params.n, "N", regime)?), "O(Na)")
        }
        (Quantity::Entropy, Regime::AToZeroFixedNa) => {
            let c = need(params.c, "c", regime)?;
            check_a(c)?;
            (harmonic(c), "O(a)")
        }
        (Quantity::DivUniform, Regime::AToZeroFixedNa) => {
            let n = need(params.n, "N", regime)?;
            let c = need(params.c, "c", regime)?;
            check_a(c)?;
            (log_n(n) - harmonic(c), "O(a)")
        }
    };
    Ok(ExpectationResult {
        value,
        formula: FormulaId::Asymptotic(quantity, regime),
        error_order: Some(order),
    })
}

/// `(1 − e^{−c})^{N−1}`, the relative volume of `{p : D(u‖p) ≤ c}`'s inner
/// subsimplex `{p : p_i ≥ e^{−c}/N}`.
pub fn subsimplex_volume_bound(c: f64, n: usize) -> Result<f64> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::Domain(format!("c must be nonnegative, got {c}")));
    }
    if n == 0 {
        return Err(Error::InvalidSpace("N must be at least 1".into()));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let base = -(-c).exp_m1();
    Ok(base.powf((n - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::JunctionEdge;
    use crate::models::CylinderBlock;
    use crate::special::harmonic_int;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn flat(n: usize) -> StateSpace {
        StateSpace::flat(n).unwrap()
    }

    fn prior(factors: Vec<usize>, alpha: Vec<f64>) -> DirichletPrior {
        DirichletPrior::new(StateSpace::new(factors).unwrap(), alpha).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(expected_entropy(&prior(vec![1], vec![2.5])).value, 0.0);
        assert_abs_diff_eq!(
            expected_entropy(&prior(vec![2], vec![1.0, 1.0])).value,
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expected_entropy(&prior(vec![3], vec![1.0, 2.0, 3.0])).value,
            2.45 - 9.5 / 6.0,
            epsilon = 1e-15
        );
        let sym = expected_entropy_symmetric(7, 0.3).unwrap().value;
        let gen = expected_entropy(&DirichletPrior::symmetric(flat(7), 0.3).unwrap()).value;
        assert_abs_diff_eq!(sym, gen, epsilon = 1e-13);
    }

    #[test]
    fn div_uniform_examples() {
        assert_eq!(expected_div_uniform(&prior(vec![1], vec![0.7])).value, 0.0);
        assert_abs_diff_eq!(
            expected_div_uniform(&prior(vec![2], vec![1.0, 1.0])).value,
            LN_2 - 0.5,
            epsilon = 1e-15
        );
        let big = expected_div_uniform_symmetric(1_000_000, 1.0).unwrap().value;
        assert_abs_diff_eq!(big, 1.0 - EULER_GAMMA - 0.5e-6, epsilon = 1e-10);
    }

    #[test]
    fn div_uniform_increases_to_limit() {
        let limit = 1.0 - EULER_GAMMA;
        let mut prev = 0.0;
        for e in 1..=20 {
            let n = 1usize << e;
            let v = expected_div_uniform_symmetric(n, 1.0).unwrap().value;
            assert!(v > prev && v < limit, "N = {n}");
            assert!(limit - v <= 1.0 / n as f64);
            prev = v;
        }
    }

    #[test]
    fn div_to_point_examples() {
        let s = flat(2);
        let p = DirichletPrior::symmetric(s.clone(), 1.0).unwrap();
        let q = Pmf::new(s.clone(), vec![0.75, 0.25]).unwrap();
        let d_uq = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
        let expect = d_uq + LN_2 - 0.5;
        assert_abs_diff_eq!(expected_div_to_point(&p, &q).unwrap().value, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(expect, 0.3369882, epsilon = 1e-7);
        assert_abs_diff_eq!(
            expected_div_to_point_symmetric(1.0, &q).unwrap().value,
            expect,
            epsilon = 1e-15
        );

        let alpha = DirichletPrior::new(flat(4), vec![0.5, 1.0, 2.0, 3.5]).unwrap();
        let u = Pmf::uniform(flat(4));
        assert_abs_diff_eq!(
            expected_div_to_point(&alpha, &u).unwrap().value,
            expected_div_uniform(&alpha).value,
            epsilon = 1e-14
        );
        let zero = Pmf::new(s, vec![1.0, 0.0]).unwrap();
        assert!(expected_div_to_point(&p, &zero).unwrap_err().is_numerical());
    }

    #[test]
    fn div_to_point_concentrates() {
        let s = flat(3);
        let q = Pmf::new(s.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let mut prev = f64::INFINITY;
        for kappa in [1e2, 1e3, 1e4, 1e5] {
            let alpha = q.weights().iter().map(|w| w * kappa).collect();
            let v = expected_div_to_point(&DirichletPrior::new(s.clone(), alpha).unwrap(), &q)
                .unwrap()
                .value;
            assert!(v < prev && v * kappa < 3.0, "kappa = {kappa}");
            prev = v;
        }
    }

    #[test]
    fn div_from_prior_examples() {
        let s = flat(2);
        let a22 = DirichletPrior::new(s.clone(), vec![2.0, 2.0]).unwrap();
        let u = Pmf::uniform(s.clone());
        assert_abs_diff_eq!(
            expected_div_from_prior(&u, &a22).unwrap().value,
            -LN_2 - 1.0 + 11.0 / 6.0,
            epsilon = 1e-15
        );
        let pt = Pmf::point(s, 0).unwrap();
        assert_abs_diff_eq!(
            expected_div_from_prior(&pt, &a22).unwrap().value,
            5.0 / 6.0,
            epsilon = 1e-15
        );
        let one = Pmf::uniform(flat(1));
        let a1 = DirichletPrior::new(flat(1), vec![3.0]).unwrap();
        assert_abs_diff_eq!(expected_div_from_prior(&one, &a1).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn div_from_prior_remainder_ratio_bounded() {
        let p = Pmf::new(flat(3), vec![0.2, 0.3, 0.5]).unwrap();
        let mut ratios = Vec::new();
        for kappa in [10.0, 30.0, 100.0, 300.0, 1000.0, 1e4] {
            let alpha: Vec<f64> = p.weights().iter().map(|w| 1.0 + w * kappa).collect();
            let total: f64 = alpha.iter().sum();
            let mean: Vec<f64> = alpha.iter().map(|a| a / total).collect();
            let d_mean: f64 = p.weights().iter().zip(&mean).map(|(pi, m)| pi * (pi / m).ln()).sum();
            let prior = DirichletPrior::new(flat(3), alpha.clone()).unwrap();
            let v = expected_div_from_prior(&p, &prior).unwrap().value;
            let scale: f64 = alpha.iter().map(|a| 1.0 / (a - 1.0)).sum();
            ratios.push((v - d_mean).abs() / scale);
        }
        assert!(ratios.iter().all(|&r| r < 1.0), "{ratios:?}");
    }

    #[test]
    fn div_pair_examples() {
        let s = flat(4);
        let p = DirichletPrior::symmetric(s.clone(), 1.0).unwrap();
        assert_abs_diff_eq!(expected_div_pair(&p, &p).unwrap().divergence.value, 0.75, epsilon = 1e-15);
        let p2 = DirichletPrior::symmetric(flat(2), 1.0).unwrap();
        assert_abs_diff_eq!(expected_div_pair(&p2, &p2).unwrap().divergence.value, 0.5, epsilon = 1e-15);
        let p1 = DirichletPrior::new(flat(1), vec![0.4]).unwrap();
        assert_abs_diff_eq!(expected_div_pair(&p1, &p1).unwrap().divergence.value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_and_multi_information_examples() {
        let s = StateSpace::new(vec![2, 2]).unwrap();
        let p = DirichletPrior::symmetric(s.clone(), 1.0).unwrap();
        let h = expected_marginal_entropy(&p, 0).unwrap().value;
        assert_abs_diff_eq!(h, 25.0 / 12.0 - 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_marginal_entropy_symmetric(&s, 1.0, 1).unwrap().value,
            h,
            epsilon = 1e-15
        );
        let mi = expected_multi_information(&p).unwrap().value;
        assert_abs_diff_eq!(mi, 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_multi_information_symmetric(&s, 1.0).unwrap().value,
            mi,
            epsilon = 1e-15
        );

        let s21 = StateSpace::new(vec![3, 1]).unwrap();
        let p = DirichletPrior::new(s21.clone(), vec![0.5, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(expected_multi_information(&p).unwrap().value, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expected_marginal_entropy(&p, 1).unwrap().value, 0.0, epsilon = 1e-15);
        assert!(expected_multi_information(&DirichletPrior::symmetric(flat(4), 1.0).unwrap()).is_err());
        assert!(expected_marginal_entropy(&p, 2).is_err());
    }

    #[test]
    fn marginal_entropy_large_regime() {
        let s = StateSpace::new(vec![3, 200]).unwrap();
        for a in [1.0, 10.0, 100.0] {
            let v = expected_marginal_entropy_symmetric(&s, a, 0).unwrap().value;
            let gap = (v - 3f64.ln()).abs();
            assert!(gap <= 3.0 / (600.0 * a), "a = {a}, gap = {gap}");
        }
    }

    #[test]
    fn partition_examples() {
        let s = flat(4);
        let u = ReferenceMeasure::uniform(s.clone());
        let p = DirichletPrior::symmetric(s.clone(), 1.0).unwrap();
        let single = Partition::singletons(s.clone());
        assert_abs_diff_eq!(expected_div_partition(&p, &single, &u).unwrap().value, 0.0, epsilon = 1e-15);
        let halves = Partition::new(s.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let v = expected_div_partition(&p, &halves, &u).unwrap().value;
        assert_abs_diff_eq!(v, LN_2 - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_div_partition_symmetric(1.0, &halves, &u).unwrap().value,
            v,
            epsilon = 1e-15
        );
    }

    #[test]
    fn partition_symmetric_matches_general_with_arbitrary_nu() {
        let s = flat(6);
        let part = Partition::new(s.clone(), vec![vec![0, 4], vec![1, 2, 3], vec![5]]).unwrap();
        let nu = ReferenceMeasure::new(s.clone(), vec![0.3, 2.0, 1.1, 0.7, 4.0, 0.9]).unwrap();
        for a in [0.2, 1.0, 3.7] {
            let p = DirichletPrior::symmetric(s.clone(), a).unwrap();
            let g = expected_div_partition(&p, &part, &nu).unwrap().value;
            let y = expected_div_partition_symmetric(a, &part, &nu).unwrap().value;
            assert_abs_diff_eq!(g, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn partition_large_n_limit() {
        for n in [100usize, 1000, 10_000] {
            let part = Partition::new(flat(n), vec![(0..n / 2).collect(), (n / 2..n).collect()]).unwrap();
            let u = ReferenceMeasure::uniform(flat(n));
            let v = expected_div_partition_symmetric(1.0, &part, &u).unwrap().value;
            assert!((v - (1.0 - EULER_GAMMA)).abs() <= 2.0 / n as f64, "N = {n}");
        }
    }

    #[test]
    fn disjoint_mixture_examples() {
        let s2 = StateSpace::new(vec![2, 2]).unwrap();
        let cyl = CylinderPartition::split_on_factor(s2.clone(), 0).unwrap();
        let p = DirichletPrior::symmetric(s2, 1.0).unwrap();
        assert_abs_diff_eq!(expected_div_disjoint_mixture(&p, &cyl).unwrap().value, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_div_disjoint_mixture_symmetric(1.0, &cyl).unwrap().value,
            0.0,
            epsilon = 1e-15
        );

        let s3 = StateSpace::new(vec![2, 2, 2]).unwrap();
        let cyl = CylinderPartition::split_on_factor(s3.clone(), 0).unwrap();
        let p = DirichletPrior::symmetric(s3, 1.0).unwrap();
        assert_abs_diff_eq!(
            expected_div_disjoint_mixture(&p, &cyl).unwrap().value,
            1.0 / 12.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expected_div_disjoint_mixture_symmetric(1.0, &cyl).unwrap().value,
            1.0 / 12.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn disjoint_mixture_symmetric_mixed_block_sizes() {
        // 2x2x2 with blocks {x0=0} (m=2), {x0=1,x1=0} (m=1), {x0=1,x1=1} (m=1)
        let s = StateSpace::new(vec![2, 2, 2]).unwrap();
        let blocks = vec![
            CylinderBlock::new(vec![vec![0], vec![0, 1], vec![0, 1]]),
            CylinderBlock::new(vec![vec![1], vec![0], vec![0, 1]]),
            CylinderBlock::new(vec![vec![1], vec![1], vec![0, 1]]),
        ];
        let cyl = CylinderPartition::new(s.clone(), blocks).unwrap();
        for a in [0.3, 1.0, 2.5] {
            let p = DirichletPrior::symmetric(s.clone(), a).unwrap();
            assert_abs_diff_eq!(
                expected_div_disjoint_mixture(&p, &cyl).unwrap().value,
                expected_div_disjoint_mixture_symmetric(a, &cyl).unwrap().value,
                epsilon = 1e-14
            );
        }
        // single-state blocks (m = 0)
        let blocks = vec![
            CylinderBlock::new(vec![vec![0], vec![0, 1], vec![0, 1]]),
            CylinderBlock::new(vec![vec![1], vec![0], vec![0]]),
            CylinderBlock::new(vec![vec![1], vec![0], vec![1]]),
            CylinderBlock::new(vec![vec![1], vec![1], vec![0, 1]]),
        ];
        let cyl = CylinderPartition::new(s.clone(), blocks).unwrap();
        for a in [0.3, 1.0, 2.5] {
            let p = DirichletPrior::symmetric(s.clone(), a).unwrap();
            assert_abs_diff_eq!(
                expected_div_disjoint_mixture(&p, &cyl).unwrap().value,
                expected_div_disjoint_mixture_symmetric(a, &cyl).unwrap().value,
                epsilon = 1e-14
            );
        }
        let s23 = StateSpace::new(vec![2, 3]).unwrap();
        let cyl = CylinderPartition::whole(s23);
        assert!(expected_div_disjoint_mixture_symmetric(1.0, &cyl).is_err());
    }

    #[test]
    fn disjoint_mixture_large_regime() {
        // n = 2, blocks split on x0: m_k = 1, always zero; use n = 3 split on x0 with N1 growing
        for n1 in [4usize, 16, 64] {
            let s = StateSpace::new(vec![n1, n1, n1]).unwrap();
            let cyl = CylinderPartition::split_on_factor(s, 0).unwrap();
            let v = expected_div_disjoint_mixture_symmetric(1.0, &cyl).unwrap().value;
            assert!((v - (1.0 - EULER_GAMMA)).abs() <= 2.0 * 2.0 / n1 as f64, "N1 = {n1}");
        }
    }

    #[test]
    fn decomposable_examples() {
        let s = StateSpace::new(vec![2, 2]).unwrap();
        let p = DirichletPrior::symmetric(s.clone(), 1.0).unwrap();
        let ind = JunctionTree::independence(s.clone());
        assert_abs_diff_eq!(expected_div_decomposable(&p, &ind).unwrap().value, 1.0 / 12.0, epsilon = 1e-15);
        let full = JunctionTree::new(s.clone(), vec![vec![0, 1]], vec![]).unwrap();
        assert_abs_diff_eq!(expected_div_decomposable(&p, &full).unwrap().value, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_div_decomposable_symmetric(1.0, &full).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn decomposable_uniform_prior_form() {
        // chain {0,1} - {1,2} on 2x3x4, uniform prior
        let s = StateSpace::new(vec![2, 3, 4]).unwrap();
        let jt = JunctionTree::new(
            s.clone(),
            vec![vec![0, 1], vec![1, 2]],
            vec![JunctionEdge { a: 0, b: 1, separator: vec![1] }],
        )
        .unwrap();
        let n = 24.0;
        let h = |x: f64| harmonic(x);
        let expect = (h(n) - h(n / 6.0)) + (h(n) - h(n / 12.0)) - (h(n) - h(n / 3.0)) - h(n) + 1.0;
        let p = DirichletPrior::symmetric(s, 1.0).unwrap();
        assert_abs_diff_eq!(expected_div_decomposable(&p, &jt).unwrap().value, expect, epsilon = 1e-14);
        assert_abs_diff_eq!(
            expected_div_decomposable_symmetric(1.0, &jt).unwrap().value,
            expect,
            epsilon = 1e-14
        );
    }

    #[test]
    fn decomposable_gap_shrinks_with_n_over_ns() {
        let limit = 1.0 - EULER_GAMMA;
        let mut prev = f64::INFINITY;
        for m in [4usize, 8, 16, 32] {
            // chain of three factors of size m: N/N_S = m for both facets
            let s = StateSpace::new(vec![m, m, m]).unwrap();
            let jt = JunctionTree::from_facets(s, vec![vec![0, 1], vec![1, 2]]).unwrap();
            let gap = (expected_div_decomposable_symmetric(1.0, &jt).unwrap().value - limit).abs();
            assert!(gap < prev, "m = {m}");
            prev = gap;
        }
    }

    #[test]
    fn asymptotic_examples() {
        let p = AsymptoticParams { n: Some(100), a: Some(1.0), c: Some(2.0) };
        let v = asymptotic_eval(Quantity::DivUniform, Regime::LargeNConstA, p).unwrap();
        assert_abs_diff_eq!(v.value, 1.0 - EULER_GAMMA, epsilon = 1e-15);
        let v = asymptotic_eval(Quantity::DivUniform, Regime::LargeA, p).unwrap();
        assert_eq!((v.value, v.error_order), (0.0, Some("O(1/a)")));
        let v = asymptotic_eval(Quantity::DivUniform, Regime::AToZeroFixedNa, p).unwrap();
        assert_abs_diff_eq!(v.value, 100f64.ln() - 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.value, 3.1051702, epsilon = 1e-7);
        let exact = expected_div_uniform_symmetric(100, 0.02).unwrap().value;
        assert!((exact - v.value).abs() < 0.1);
        let missing = AsymptoticParams { n: None, a: None, c: None };
        assert!(asymptotic_eval(Quantity::DivUniform, Regime::AToZeroBoundedN, missing).is_err());
    }

    #[test]
    fn asymptotic_branches_track_exact_values() {
        // large N at fixed a
        for a in [0.2, 1.0, 5.0] {
            let mut prev = f64::INFINITY;
            for n in [100usize, 1000, 10_000, 100_000] {
                let p = AsymptoticParams { n: Some(n), a: Some(a), c: None };
                let lead = asymptotic_eval(Quantity::Entropy, Regime::LargeNConstA, p).unwrap().value;
                let gap = (expected_entropy_symmetric(n, a).unwrap().value - lead).abs();
                assert!(gap * n as f64 * a < 1.0 && gap < prev);
                prev = gap;
            }
        }
        // large a at fixed N
        for n in [2usize, 10, 50] {
            for a in [1e2, 1e3, 1e4] {
                let p = AsymptoticParams { n: Some(n), a: Some(a), c: None };
                let lead = asymptotic_eval(Quantity::DivUniform, Regime::LargeA, p).unwrap().value;
                let gap = (expected_div_uniform_symmetric(n, a).unwrap().value - lead).abs();
                assert!(gap * a < n as f64);
            }
        }
        // a -> 0, N bounded
        for n in [2usize, 10, 50] {
            for a in [1e-3, 1e-5] {
                let p = AsymptoticParams { n: Some(n), a: Some(a), c: None };
                let lead = asymptotic_eval(Quantity::Entropy, Regime::AToZeroBoundedN, p).unwrap().value;
                let gap = (expected_entropy_symmetric(n, a).unwrap().value - lead).abs();
                assert!(gap / (n as f64 * a) < 2.0);
            }
        }
        // a -> 0 with Na = c
        for c in [0.5, 2.0] {
            for n in [1000usize, 100_000] {
                let a = c / n as f64;
                let p = AsymptoticParams { n: Some(n), a: Some(a), c: Some(c) };
                let lead = asymptotic_eval(Quantity::DivUniform, Regime::AToZeroFixedNa, p).unwrap().value;
                let gap = (expected_div_uniform_symmetric(n, a).unwrap().value - lead).abs();
                assert!(gap / a < 2.0);
            }
        }
    }

    #[test]
    fn volume_bound_examples() {
        assert_eq!(subsimplex_volume_bound(0.0, 5).unwrap(), 0.0);
        assert_eq!(subsimplex_volume_bound(1.3, 1).unwrap(), 1.0);
        assert_abs_diff_eq!(subsimplex_volume_bound(LN_2, 3).unwrap(), 0.25, epsilon = 1e-15);
        assert!(subsimplex_volume_bound(-0.1, 3).is_err());
    }

    #[test]
    fn dispatch_refuses_union() {
        let s = flat(4);
        let m = ModelSpec::UnionOfPartitions(
            vec![Partition::whole(s.clone())],
            ReferenceMeasure::uniform(s.clone()),
        );
        let p = DirichletPrior::symmetric(s, 1.0).unwrap();
        assert!(expected_divergence(&p, &m).is_err());
    }

    #[test]
    fn harmonic_routes_agree_for_uniform_prior() {
        // integer routes (exact sum) vs symmetric branch through digamma
        for n in [65usize, 100, 1000] {
            let v = expected_div_uniform_symmetric(n, 1.0).unwrap().value;
            let direct = (n as f64).ln() - harmonic_int(n as u64) + 1.0;
            assert_abs_diff_eq!(v, direct, epsilon = 1e-13);
        }
    }

    proptest! {
        #[test]
        fn entropy_plus_divergence_is_log_n(alpha in prop::collection::vec(0.05f64..20.0, 1..40)) {
            let n = alpha.len();
            let p = DirichletPrior::new(flat(n), alpha).unwrap();
            let s = expected_entropy(&p).value + expected_div_uniform(&p).value;
            prop_assert!((s - (n as f64).ln()).abs() <= 1e-12);
        }

        #[test]
        fn equal_pair_gives_n_minus_one_over_alpha(alpha in prop::collection::vec(0.05f64..20.0, 1..40)) {
            let n = alpha.len();
            let p = DirichletPrior::new(flat(n), alpha).unwrap();
            let d = expected_div_pair(&p, &p).unwrap().divergence.value;
            prop_assert!((d - (n as f64 - 1.0) / p.total()).abs() <= 1e-12);
        }

        #[test]
        fn divergences_are_nonnegative(alpha in prop::collection::vec(0.05f64..20.0, 8)) {
            let s = StateSpace::new(vec![2, 2, 2]).unwrap();
            let p = DirichletPrior::new(s.clone(), alpha).unwrap();
            prop_assert!(expected_div_uniform(&p).value >= -1e-12);
            prop_assert!(expected_multi_information(&p).unwrap().value >= -1e-12);
            let jt = JunctionTree::from_facets(s.clone(), vec![vec![0, 1], vec![1, 2]]).unwrap();
            prop_assert!(expected_div_decomposable(&p, &jt).unwrap().value >= -1e-12);
            let cyl = CylinderPartition::split_on_factor(s, 1).unwrap();
            prop_assert!(expected_div_disjoint_mixture(&p, &cyl).unwrap().value >= -1e-12);
        }
    }
}
