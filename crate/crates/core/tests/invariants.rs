//! Model-level invariants on random inputs.

use divexp::models::{divergence_from_union, multi_information};
use divexp::montecarlo::{self as mc, enumerate_bipartitions};
use divexp::{
    kl_divergence, CylinderPartition, DirichletPrior, JunctionTree, McConfig, ModelDoc, ModelSpec, Partition,
    Pmf, ReferenceMeasure, StateSpace,
};
use proptest::prelude::*;

fn pmf_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.001f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().any(|&x| x > 0.0))
}

fn pmf(space: &StateSpace, w: Vec<f64>) -> Pmf {
    Pmf::from_unnormalized(space.clone(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn larger_unions_never_increase_the_divergence(w in pmf_strategy(6), extra in 0usize..15) {
        let space = StateSpace::flat(6).unwrap();
        let p = pmf(&space, w);
        let u = ReferenceMeasure::uniform(space.clone());
        let upsilon1: Vec<Partition> = enumerate_bipartitions(6, 1).unwrap().collect();
        let upsilon2: Vec<Partition> = enumerate_bipartitions(6, 2).unwrap().collect();
        let mut bigger = upsilon1.clone();
        bigger.push(upsilon2[extra].clone());
        let small = divergence_from_union(&p, &upsilon1, &u).unwrap().divergence;
        let large = divergence_from_union(&p, &bigger, &u).unwrap().divergence;
        prop_assert!(large <= small);
    }

    #[test]
    fn models_containing_uniform_stay_below_kl_to_uniform(w in pmf_strategy(12)) {
        let space = StateSpace::new(vec![2, 3, 2]).unwrap();
        let p = pmf(&space, w);
        let to_u = kl_divergence(&p, &Pmf::uniform(space.clone())).unwrap().to_f64();
        let models = [
            ModelSpec::Partition(
                Partition::new(space.clone(), vec![vec![0, 5, 7], vec![1, 2], (3..5).chain(8..12).chain([6]).collect()]).unwrap(),
                ReferenceMeasure::uniform(space.clone()),
            ),
            ModelSpec::Independence(space.clone()),
            ModelSpec::Decomposable(JunctionTree::from_facets(space.clone(), vec![vec![0, 1], vec![1, 2]]).unwrap()),
            ModelSpec::DisjointMixture(CylinderPartition::split_on_factor(space.clone(), 1).unwrap()),
        ];
        for m in &models {
            prop_assert!(m.contains_uniform());
            prop_assert!(m.divergence(&p).unwrap() <= to_u + 1e-12, "{}", m.kind_name());
        }
    }

    #[test]
    fn decomposable_on_independence_tree_is_multi_information(w in pmf_strategy(24)) {
        let space = StateSpace::new(vec![2, 3, 4]).unwrap();
        let p = pmf(&space, w);
        let jt = JunctionTree::independence(space.clone());
        let a = ModelSpec::Decomposable(jt).project(&p).unwrap().divergence;
        let b = multi_information(&p).unwrap().divergence;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn json_round_trip_keeps_divergences(w in pmf_strategy(12)) {
        let space = StateSpace::new(vec![2, 3, 2]).unwrap();
        let p = pmf(&space, w);
        let models = [
            ModelSpec::Decomposable(JunctionTree::from_facets(space.clone(), vec![vec![0, 1], vec![1, 2]]).unwrap()),
            ModelSpec::DisjointMixture(CylinderPartition::split_on_factor(space.clone(), 0).unwrap()),
            ModelSpec::Partition(
                Partition::from_labels(space.clone(), &[0, 1, 1, 0, 2, 2, 0, 1, 1, 0, 2, 2]).unwrap(),
                ReferenceMeasure::new(space.clone(), (1..=12).map(f64::from).collect()).unwrap(),
            ),
        ];
        for m in &models {
            let text = serde_json::to_string(&ModelDoc::from(m)).unwrap();
            let back = serde_json::from_str::<ModelDoc>(&text).unwrap().build(None).unwrap();
            prop_assert_eq!(&back, m);
            let (x, y) = (m.divergence(&p).unwrap(), back.divergence(&p).unwrap());
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }
}

#[test]
fn union_estimate_is_below_both_members() {
    let n = 8;
    let prior = DirichletPrior::symmetric(StateSpace::flat(n).unwrap(), 1.0).unwrap();
    let cfg = McConfig::new(5000, 21);
    let u1 = mc::estimate_with(cfg, |r| Ok(mc::brute_min_bipartition_value(&mc::sample_dirichlet_weights(prior.alpha(), r), 1))).unwrap();
    let u2 = mc::estimate_with(cfg, |r| Ok(mc::brute_min_bipartition_value(&mc::sample_dirichlet_weights(prior.alpha(), r), 2))).unwrap();
    let both = mc::estimate_with(cfg, |r| {
        let w = mc::sample_dirichlet_weights(prior.alpha(), r);
        Ok(mc::brute_min_bipartition_value(&w, 1).min(mc::brute_min_bipartition_value(&w, 2)))
    })
    .unwrap();
    let se = (u1.std_error.powi(2) + u2.std_error.powi(2)).sqrt();
    assert!(both.mean <= u1.mean.min(u2.mean) + 3.0 * se);
    // shared streams: the pointwise minimum is below each member exactly
    assert!(both.mean <= u1.mean && both.mean <= u2.mean);
}

#[test]
fn estimates_are_bit_identical_across_worker_counts() {
    let space = StateSpace::new(vec![2, 3]).unwrap();
    let prior = DirichletPrior::new(space.clone(), vec![0.3, 1.0, 2.0, 0.7, 4.0, 1.5]).unwrap();
    let model = ModelSpec::Independence(space);
    let run = |w| mc::estimate_expected_divergence(&prior, &model, McConfig::new(20_000, 5).with_workers(w)).unwrap();
    let (a, b, c) = (run(1), run(8), run(1));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    assert_eq!(a, c);
}
