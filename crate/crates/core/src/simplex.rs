//! Points of the probability simplex over plain and composite state spaces,
//! together with entropy, KL divergence, and the bookkeeping for Dirichlet
//! concentration parameters (aggregation over partitions and marginals).
//!
//! Composite states are indexed row-major with factor 0 varying slowest.
//! Factor indices are zero-based throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass accepted by [`Pmf::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// A finite state space `X_1 × … × X_n` with `|X_k| = N_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct StateSpace {
    factors: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl StateSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpace("at least one factor is required".into()));
        }
        let mut size: usize = 1;
        for (k, &n) in factors.iter().enumerate() {
            if n == 0 {
                return Err(Error::InvalidSpace(format!("factor {k} has no states")));
            }
            size = size.checked_mul(n).ok_or_else(|| {
                Error::InvalidSpace("total number of states overflows".into())
            })?;
        }
        let mut strides = vec![1; factors.len()];
        for k in (0..factors.len() - 1).rev() {
            strides[k] = strides[k + 1] * factors[k + 1];
        }
        Ok(Self {
            factors,
            strides,
            size,
        })
    }

    /// A plain space with `n` states (a single factor).
    pub fn flat(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Value of factor `k` in composite state `index`.
    #[inline]
    pub fn coordinate(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.factors[k]
    }

    pub fn coordinates(&self, index: usize) -> Vec<usize> {
        (0..self.factors.len())
            .map(|k| self.coordinate(index, k))
            .collect()
    }

    pub fn index_of(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.factors.len() {
            return Err(Error::LengthMismatch {
                expected: self.factors.len(),
                found: coords.len(),
            });
        }
        let mut idx = 0;
        for (k, (&x, &n)) in coords.iter().zip(&self.factors).enumerate() {
            if x >= n {
                return Err(Error::IndexOutOfRange {
                    what: "coordinate",
                    index: x,
                    bound: n,
                });
            }
            idx += x * self.strides[k];
        }
        Ok(idx)
    }

    /// Checks a set of factor indices and returns it sorted and deduplicated.
    pub fn normalize_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&bad) = s.iter().find(|&&k| k >= self.factors.len()) {
            return Err(Error::IndexOutOfRange {
                what: "factor",
                index: bad,
                bound: self.factors.len(),
            });
        }
        Ok(s)
    }

    /// Number of joint states of the factors in `subset` (`N_S`).
    pub fn subset_size(&self, subset: &[usize]) -> usize {
        subset.iter().map(|&k| self.factors[k]).product()
    }

    /// For every state, the row-major index of its restriction to `subset`.
    /// `subset` must already be normalized.
    pub fn projection_map(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.size)
            .map(|i| {
                subset
                    .iter()
                    .fold(0, |acc, &k| acc * self.factors[k] + self.coordinate(i, k))
            })
            .collect()
    }

    /// The space of the `subset` marginal (one state when `subset` is empty).
    pub fn subspace(&self, subset: &[usize]) -> StateSpace {
        let factors = if subset.is_empty() {
            vec![1]
        } else {
            subset.iter().map(|&k| self.factors[k]).collect()
        };
        StateSpace::new(factors).expect("sub-factors of a valid space")
    }
}

impl TryFrom<Vec<usize>> for StateSpace {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        StateSpace::new(v)
    }
}

impl From<StateSpace> for Vec<usize> {
    fn from(s: StateSpace) -> Self {
        s.factors
    }
}

/// A probability mass function on a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    space: StateSpace,
    weights: Vec<f64>,
}

impl Pmf {
    /// Validates nonnegativity and normalization (within
    /// [`NORMALIZATION_TOLERANCE`]), then rescales to sum exactly to one.
    pub fn new(space: StateSpace, weights: Vec<f64>) -> Result<Self> {
        check_len(&space, &weights)?;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { index: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::rescaled(space, weights, sum))
    }

    /// Normalizes arbitrary nonnegative weights with a positive total.
    pub fn from_unnormalized(space: StateSpace, weights: Vec<f64>) -> Result<Self> {
        check_len(&space, &weights)?;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { index: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::rescaled(space, weights, sum))
    }

    fn rescaled(space: StateSpace, mut weights: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Self { space, weights }
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.size();
        Self {
            space,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// The point mass `δ_x`.
    pub fn point(space: StateSpace, x: usize) -> Result<Self> {
        if x >= space.size() {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: x,
                bound: space.size(),
            });
        }
        let mut weights = vec![0.0; space.size()];
        weights[x] = 1.0;
        Ok(Self { space, weights })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Total mass of a set of states.
    pub fn mass(&self, states: &[usize]) -> f64 {
        states.iter().map(|&i| self.weights[i]).sum()
    }
}

fn check_len(space: &StateSpace, v: &[f64]) -> Result<()> {
    if v.len() != space.size() {
        return Err(Error::LengthMismatch {
            expected: space.size(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Dirichlet concentration parameters `α ∈ ℝ^N_{>0}` with cached total.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    space: StateSpace,
    alpha: Vec<f64>,
    total: f64,
}

impl DirichletPrior {
    pub fn new(space: StateSpace, alpha: Vec<f64>) -> Result<Self> {
        check_len(&space, &alpha)?;
        for (i, &a) in alpha.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::NonPositiveConcentration { index: i, value: a });
            }
        }
        let total = crate::special::KahanSum::from_iter(alpha.iter().copied()).value();
        Ok(Self {
            space,
            alpha,
            total,
        })
    }

    /// The symmetric prior `(a, …, a)`.
    pub fn symmetric(space: StateSpace, a: f64) -> Result<Self> {
        let n = space.size();
        Self::new(space, vec![a; n])
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `α = Σ α_i`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// The common value when every α_i is equal.
    pub fn symmetric_value(&self) -> Option<f64> {
        let a = self.alpha[0];
        self.alpha.iter().all(|&x| x == a).then_some(a)
    }

    /// The mean `α / α`.
    pub fn mean(&self) -> Pmf {
        Pmf {
            space: self.space.clone(),
            weights: self.alpha.iter().map(|a| a / self.total).collect(),
        }
    }
}

/// A partition `{A_1, …, A_K}` of the state indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: StateSpace,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(space: StateSpace, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.size();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "state {i} in block {b} is outside 0..{n}"
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "state {i} appears in blocks {} and {b}",
                        block_of[i]
                    )));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {i} is not covered")));
        }
        Ok(Self {
            space,
            blocks,
            block_of,
        })
    }

    /// Builds a partition from a block label per state; labels are
    /// renumbered in order of first appearance.
    pub fn from_labels(space: StateSpace, labels: &[usize]) -> Result<Self> {
        if labels.len() != space.size() {
            return Err(Error::LengthMismatch {
                expected: space.size(),
                found: labels.len(),
            });
        }
        let mut remap = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            let b = *remap.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        Self::new(space, blocks)
    }

    pub fn singletons(space: StateSpace) -> Self {
        let blocks = (0..space.size()).map(|i| vec![i]).collect();
        Self::new(space, blocks).expect("singletons partition the space")
    }

    pub fn whole(space: StateSpace) -> Self {
        let blocks = vec![(0..space.size()).collect()];
        Self::new(space, blocks).expect("one block partitions the space")
    }

    /// The partition of a composite space by the value of factor `k`.
    pub fn by_factor(space: StateSpace, k: usize) -> Result<Self> {
        if k >= space.n_factors() {
            return Err(Error::IndexOutOfRange {
                what: "factor",
                index: k,
                bound: space.n_factors(),
            });
        }
        let mut blocks = vec![Vec::new(); space.factors()[k]];
        for i in 0..space.size() {
            blocks[space.coordinate(i, k)].push(i);
        }
        Self::new(space, blocks)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `L_k = |A_k|`.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block label of each state.
    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    /// Sums a per-state vector over each block.
    pub fn aggregate(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.blocks.len()];
        for (i, &v) in values.iter().enumerate() {
            out[self.block_of[i]] += v;
        }
        out
    }
}

/// A strictly positive reference measure `ν` on the states.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasure {
    space: StateSpace,
    nu: Vec<f64>,
}

impl ReferenceMeasure {
    pub fn new(space: StateSpace, nu: Vec<f64>) -> Result<Self> {
        check_len(&space, &nu)?;
        for (i, &v) in nu.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::NonPositiveReference { index: i, value: v });
            }
        }
        Ok(Self { space, nu })
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.size();
        Self {
            space,
            nu: vec![1.0; n],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.nu
    }

    /// True when all weights coincide (the partition-model case).
    pub fn is_uniform(&self) -> bool {
        self.nu.iter().all(|&v| v == self.nu[0])
    }

    /// `ν / Σν` as a probability vector.
    pub fn normalized(&self) -> Pmf {
        Pmf::from_unnormalized(self.space.clone(), self.nu.clone())
            .expect("positive measure has positive mass")
    }
}

/// Outcome of a KL divergence evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    /// `p` charges a state that the reference does not; `index` is the first.
    Infinite { index: usize },
}

impl Divergence {
    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite { .. } => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Divergence::Infinite { .. })
    }

    /// The value as `f64`, mapping the infinite case to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn into_result(self) -> Result<f64> {
        match self {
            Divergence::Finite(v) => Ok(v),
            Divergence::Infinite { index } => Err(Error::SupportViolation { index }),
        }
    }
}

/// `x log x` with `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy (nats) of a weight vector.
pub(crate) fn entropy_of(weights: &[f64]) -> f64 {
    -weights.iter().map(|&w| xlogx(w)).sum::<f64>()
}

/// KL divergence of raw weight vectors; the caller checks lengths.
pub(crate) fn kl_of(p: &[f64], q: &[f64]) -> Divergence {
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Divergence::Infinite { index: i };
            }
            acc += pi * (pi.ln() - qi.ln());
        }
    }
    Divergence::Finite(acc)
}

/// `H(p) = −Σ p_i log p_i` in nats.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(&p.weights)
}

/// `D(p‖q) = Σ p_i log(p_i / q_i)` in nats.
///
/// Terms with `p_i = 0` vanish regardless of `q_i`.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<Divergence> {
    if p.space != q.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(kl_of(&p.weights, &q.weights))
}

/// The aggregated prior `α^ϱ_k = Σ_{i∈A_k} α_i` on the blocks of `part`.
pub fn aggregate_prior(prior: &DirichletPrior, part: &Partition) -> Result<DirichletPrior> {
    if prior.space != part.space {
        return Err(Error::SpaceMismatch);
    }
    let alpha = part.aggregate(&prior.alpha);
    let space = StateSpace::flat(part.n_blocks())?;
    // Keep the exact total rather than re-summing.
    let mut out = DirichletPrior::new(space, alpha)?;
    out.total = prior.total;
    Ok(out)
}

/// Concentration parameters of the Dirichlet law induced on the `S`-marginal,
/// `α^S_j = Σ_{x: x_S = j} α_x`.
pub fn subset_concentration(prior: &DirichletPrior, subset: &[usize]) -> Result<DirichletPrior> {
    let space = &prior.space;
    let subset = space.normalize_subset(subset)?;
    let map = space.projection_map(&subset);
    let sub = space.subspace(&subset);
    let mut alpha = vec![0.0; sub.size()];
    for (i, &a) in prior.alpha.iter().enumerate() {
        alpha[map[i]] += a;
    }
    let mut out = DirichletPrior::new(sub, alpha)?;
    out.total = prior.total;
    Ok(out)
}

/// Concentration parameters of the marginal of factor `k`.
pub fn marginal_concentration(prior: &DirichletPrior, k: usize) -> Result<DirichletPrior> {
    if k >= prior.space.n_factors() {
        return Err(Error::IndexOutOfRange {
            what: "factor",
            index: k,
            bound: prior.space.n_factors(),
        });
    }
    subset_concentration(prior, &[k])
}

/// The marginal distribution of the factors in `subset` (row-major in
/// increasing factor order). The empty subset gives the one-point law.
pub fn marginal_pmf(p: &Pmf, subset: &[usize]) -> Result<Pmf> {
    let subset = p.space.normalize_subset(subset)?;
    Ok(marginal_unchecked(p, &subset))
}

pub(crate) fn marginal_unchecked(p: &Pmf, subset: &[usize]) -> Pmf {
    let map = p.space.projection_map(subset);
    let sub = p.space.subspace(subset);
    let mut w = vec![0.0; sub.size()];
    for (i, &x) in p.weights.iter().enumerate() {
        w[map[i]] += x;
    }
    Pmf {
        space: sub,
        weights: w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat(n: usize) -> StateSpace {
        StateSpace::flat(n).unwrap()
    }

    fn pmf(w: &[f64]) -> Pmf {
        Pmf::new(flat(w.len()), w.to_vec()).unwrap()
    }

    #[test]
    fn state_space_indexing_is_row_major() {
        let s = StateSpace::new(vec![2, 3]).unwrap();
        assert_eq!(s.size(), 6);
        assert_eq!(s.coordinates(0), vec![0, 0]);
        assert_eq!(s.coordinates(1), vec![0, 1]);
        assert_eq!(s.coordinates(3), vec![1, 0]);
        assert_eq!(s.index_of(&[1, 2]).unwrap(), 5);
        assert!(StateSpace::new(vec![]).is_err());
        assert!(StateSpace::new(vec![2, 0]).is_err());
        assert!(StateSpace::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(flat(2), vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(flat(2), vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(flat(3), vec![0.5, 0.5]).is_err());
        let p = Pmf::new(flat(2), vec![0.5 + 1e-11, 0.5]).unwrap();
        assert_eq!(p.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&Pmf::uniform(flat(4))), 4f64.ln(), epsilon = 1e-15);
        assert_eq!(entropy(&Pmf::point(flat(5), 2).unwrap()), 0.0);
        assert_abs_diff_eq!(
            entropy(&pmf(&[0.5, 0.25, 0.25])),
            1.5 * std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn kl_examples() {
        let p = pmf(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), Divergence::Finite(0.0));
        let d = kl_divergence(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(d.finite().unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        let d = kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])).unwrap();
        assert_eq!(d, Divergence::Infinite { index: 1 });
        assert!(d.into_result().is_err());
        assert!(kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[0.2, 0.3, 0.5])).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let prior = DirichletPrior::new(flat(4), vec![1.0; 4]).unwrap();
        let part = Partition::new(flat(4), vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(aggregate_prior(&prior, &part).unwrap().alpha(), &[2.0, 2.0]);

        let prior = DirichletPrior::new(flat(3), vec![1.0, 2.0, 3.0]).unwrap();
        let part = Partition::new(flat(3), vec![vec![0, 2], vec![1]]).unwrap();
        let agg = aggregate_prior(&prior, &part).unwrap();
        assert_eq!(agg.alpha(), &[4.0, 2.0]);
        assert_eq!(agg.total(), prior.total());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(flat(3), vec![vec![0], vec![1]]).is_err());
        assert!(Partition::new(flat(3), vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(flat(3), vec![vec![0, 1, 2], vec![]]).is_err());
        assert!(Partition::new(flat(3), vec![vec![0, 1, 3]]).is_err());
        let p = Partition::from_labels(flat(4), &[7, 3, 7, 3]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn marginal_concentration_examples() {
        let s = StateSpace::new(vec![2, 2]).unwrap();
        let sym = DirichletPrior::symmetric(s.clone(), 0.7).unwrap();
        assert_eq!(marginal_concentration(&sym, 0).unwrap().alpha(), &[1.4, 1.4]);
        let prior = DirichletPrior::new(s, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(marginal_concentration(&prior, 1).unwrap().alpha(), &[4.0, 6.0]);
        assert_eq!(marginal_concentration(&prior, 0).unwrap().alpha(), &[3.0, 7.0]);
        assert!(marginal_concentration(&prior, 2).is_err());
    }

    #[test]
    fn marginal_of_marginal_commutes() {
        let s = StateSpace::new(vec![2, 3, 2]).unwrap();
        let alpha: Vec<f64> = (1..=12).map(f64::from).collect();
        let prior = DirichletPrior::new(s, alpha).unwrap();
        let a = subset_concentration(&subset_concentration(&prior, &[0, 2]).unwrap(), &[1]).unwrap();
        let b = marginal_concentration(&prior, 2).unwrap();
        assert_eq!(a.alpha(), b.alpha());
        let c = subset_concentration(&subset_concentration(&prior, &[1, 2]).unwrap(), &[1]).unwrap();
        assert_eq!(c.alpha(), b.alpha());
    }

    #[test]
    fn marginal_pmf_examples() {
        let s = StateSpace::new(vec![2, 2]).unwrap();
        let p = Pmf::new(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = marginal_pmf(&p, &[0]).unwrap();
        assert_abs_diff_eq!(m.weights()[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.weights()[1], 0.7, epsilon = 1e-15);
        let e = marginal_pmf(&p, &[]).unwrap();
        assert_eq!(e.len(), 1);
        assert_abs_diff_eq!(e.weights()[0], 1.0, epsilon = 1e-15);
        assert!(marginal_pmf(&p, &[3]).is_err());

        let u = Pmf::uniform(StateSpace::new(vec![2, 3]).unwrap());
        let m = marginal_pmf(&u, &[1]).unwrap();
        for w in m.weights() {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn product_marginal_is_factor() {
        let s = StateSpace::new(vec![2, 3]).unwrap();
        let a = [0.3, 0.7];
        let b = [0.2, 0.5, 0.3];
        let w: Vec<f64> = (0..6).map(|i| a[i / 3] * b[i % 3]).collect();
        let p = Pmf::new(s, w).unwrap();
        let m = marginal_pmf(&p, &[1]).unwrap();
        for (x, y) in m.weights().iter().zip(b) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
    }

    fn arb_pmf(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..max_n).prop_filter_map("positive mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(p in arb_pmf(12), seed in 0u64..1000) {
            let n = p.len();
            let q: Vec<f64> = (0..n).map(|i| 1.0 + ((i as u64 * 2654435761 + seed) % 97) as f64).collect();
            let p = Pmf::new(flat(n), p).unwrap();
            let q = Pmf::from_unnormalized(flat(n), q).unwrap();
            let d = kl_divergence(&p, &q).unwrap().finite().unwrap();
            prop_assert!(d >= -1e-15);
            let gap = p.weights().iter().zip(q.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > 1e-3 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn entropy_bounded_by_log_n(p in arb_pmf(16)) {
            let n = p.len();
            let h = entropy(&Pmf::new(flat(n), p).unwrap());
            prop_assert!(h <= (n as f64).ln() + 1e-12);
            prop_assert!(h >= 0.0);
        }

        #[test]
        fn marginals_stay_normalized(w in prop::collection::vec(0.0f64..1.0, 12), s in prop::sample::subsequence(vec![0usize, 1, 2], 0..=3)) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 1e-3);
            let space = StateSpace::new(vec![2, 3, 2]).unwrap();
            let p = Pmf::from_unnormalized(space, w).unwrap();
            let m = marginal_pmf(&p, &s).unwrap();
            prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn aggregation_preserves_total(alpha in prop::collection::vec(0.01f64..10.0, 2..10), labels_seed in 0usize..1000) {
            let n = alpha.len();
            let labels: Vec<usize> = (0..n).map(|i| (i * 7 + labels_seed) % 3).collect();
            let prior = DirichletPrior::new(flat(n), alpha).unwrap();
            let part = Partition::from_labels(flat(n), &labels).unwrap();
            let agg = aggregate_prior(&prior, &part).unwrap();
            prop_assert_eq!(agg.total(), prior.total());
        }
    }
}
