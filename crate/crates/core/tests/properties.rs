use defect_designs::asymptotic::{binary_objective, f_binary, psi};
use defect_designs::oracle::{design_t, is_t_correcting, DEFAULT_BUDGET};
use defect_designs::rational::{frac, int};
use defect_designs::subset_eval::{
    f_k, f_kn, hypergeom_pmf, multinomial_pmf_exact, sorted_compositions,
    tv_hypergeom_multinomial, type_vectors, CompositionPX, SizeDistribution,
};
use defect_designs::{
    copy_designs, is_permutation_invariant, merge_designs, symmetrize, BipartiteDesign,
};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn design(max_k: usize, max_m: usize) -> impl Strategy<Value = BipartiteDesign> {
    (1..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(1u32..(1 << k), 1..=max_m).prop_map(move |masks| {
            let sets = masks
                .into_iter()
                .map(|mask| (0..k).filter(|&i| mask >> i & 1 == 1).collect())
                .collect();
            BipartiteDesign::new(k, sets).unwrap()
        })
    })
}

fn same_k_pair() -> impl Strategy<Value = (BipartiteDesign, BipartiteDesign)> {
    (1usize..=4).prop_flat_map(|k| {
        let side = move || {
            prop::collection::vec(1u32..(1 << k), 1..=4).prop_map(move |masks| {
                let sets = masks
                    .into_iter()
                    .map(|mask| (0..k).filter(|&i| mask >> i & 1 == 1).collect())
                    .collect();
                BipartiteDesign::new(k, sets).unwrap()
            })
        };
        (side(), side())
    })
}

fn size_distribution() -> impl Strategy<Value = SizeDistribution> {
    prop::collection::vec(0i64..6, 4).prop_filter_map("needs mass", |w| {
        let support: Vec<usize> = (1..=4).collect();
        let weights = w.into_iter().map(int).collect();
        SizeDistribution::normalized(support, weights).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(g in design(6, 8)) {
        let back = BipartiteDesign::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.redundant(), g.redundant());
        prop_assert_eq!(back.k(), g.k());
    }

    #[test]
    fn copy_and_merge_bookkeeping(a in design(4, 5), b in design(4, 5)) {
        let c = copy_designs(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(c.k(), a.k() + b.k());
        prop_assert_eq!(c.m(), a.m() + b.m());
        prop_assert_eq!(c.edges(), a.edges() + b.edges());
        let mm = merge_designs(&[a.clone(), a.clone()]).unwrap();
        prop_assert_eq!(mm.k(), a.k());
        prop_assert_eq!(mm.m(), 2 * a.m());
        prop_assert_eq!(mm.edges(), 2 * a.edges());
    }

    #[test]
    fn merge_is_super_additive((a, b) in same_k_pair(), q in 2usize..=3) {
        let ta = design_t(&a, q, DEFAULT_BUDGET).unwrap();
        let tb = design_t(&b, q, DEFAULT_BUDGET).unwrap();
        let merged = merge_designs(&[a, b]).unwrap();
        prop_assert!(design_t(&merged, q, DEFAULT_BUDGET).unwrap() >= ta + tb);
    }

    #[test]
    fn copy_corrects_the_weaker_part(a in design(3, 4), b in design(3, 4)) {
        let ta = design_t(&a, 2, DEFAULT_BUDGET).unwrap();
        let tb = design_t(&b, 2, DEFAULT_BUDGET).unwrap();
        let c = copy_designs(&[a, b]).unwrap();
        prop_assert_eq!(design_t(&c, 2, DEFAULT_BUDGET).unwrap(), ta.min(tb));
    }

    #[test]
    fn maximum_level_is_tight(g in design(4, 6), q in 2usize..=3) {
        let t = design_t(&g, q, DEFAULT_BUDGET).unwrap();
        prop_assert!(is_t_correcting(&g, q, t, DEFAULT_BUDGET).unwrap());
        prop_assert!(!is_t_correcting(&g, q, t + 1, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn relabeling_primaries_preserves_level(g in design(4, 5), rot in 0usize..4) {
        let k = g.k();
        let perm: Vec<usize> = (0..k).map(|i| (i + rot) % k).collect();
        let h = g.permute_primaries(&perm).unwrap();
        prop_assert_eq!(
            design_t(&g, 2, DEFAULT_BUDGET).unwrap(),
            design_t(&h, 2, DEFAULT_BUDGET).unwrap()
        );
    }

    #[test]
    fn symmetrized_designs_are_invariant(g in design(3, 3)) {
        let s = symmetrize(&g, 5).unwrap();
        prop_assert!(is_permutation_invariant(&s).is_some());
        let factorial: usize = (1..=g.k()).product();
        prop_assert_eq!(s.m(), factorial * g.m());
        let t = design_t(&g, 2, DEFAULT_BUDGET).unwrap();
        prop_assert!(design_t(&s, 2, DEFAULT_BUDGET).unwrap() >= factorial * t);
    }

    #[test]
    fn tv_within_quadratic_bound(k in 1usize..=7, s_frac in 0.0f64..1.0, split in 0usize..=7) {
        let s = 1 + ((k - 1) as f64 * s_frac) as usize;
        let zero_count = split.min(k);
        let px = CompositionPX::new(vec![k - zero_count, zero_count]).unwrap();
        let tv = tv_hypergeom_multinomial(s, k, &px).unwrap();
        prop_assert!(tv >= BigRational::zero());
        prop_assert!(tv <= frac((s * s) as i64, 2 * k as i64));
    }

    #[test]
    fn pmfs_sum_to_one(k in 2usize..=6, a in 0usize..=6, s_frac in 0.0f64..1.0) {
        let a = a.min(k);
        let s = 1 + ((k - 1) as f64 * s_frac) as usize;
        let px = CompositionPX::new(vec![k - a, a]).unwrap();
        let probs = px.px();
        let mut h = BigRational::zero();
        let mut m = BigRational::zero();
        for l in type_vectors(s, 2) {
            h += hypergeom_pmf(&l, s, k, &px).unwrap();
            m += multinomial_pmf_exact(&l, s, &probs).unwrap();
        }
        prop_assert!(h.is_one());
        prop_assert!(m.is_one());
    }

    #[test]
    fn fkn_sandwich(ps in size_distribution(), n in 1usize..=3) {
        let k = 4;
        let fk = f_k(&ps, k, 2).unwrap();
        let fkn = f_kn(&ps, k, n, 2).unwrap().value;
        prop_assert!(fkn <= fk);
        prop_assert!(fk - ps.mean() / int(n as i64) <= fkn);
    }

    #[test]
    fn threshold_policy_is_locally_optimal(ps in size_distribution()) {
        let f = f_binary(&ps, 1e-3).unwrap();
        let base = binary_objective(&ps, f.lambda, &|a, b| f.policy.label0_fraction(a, b));
        for &s in ps.support() {
            for l0 in 0..=s {
                let y = f.policy.label0_fraction(l0, s - l0);
                if y != 0.0 && y != 1.0 {
                    continue;
                }
                let flipped = binary_objective(&ps, f.lambda, &|a, b| {
                    if (a, b) == (l0, s - l0) { 1.0 - y } else { f.policy.label0_fraction(a, b) }
                });
                prop_assert!(flipped <= base + 1e-9, "flip ({}, {}) {} > {}", l0, s - l0, flipped, base);
            }
        }
    }

    #[test]
    fn binary_functional_is_continuous(ps in size_distribution(), shift in 0usize..4) {
        // Move a 1/100 of mass onto one degree.
        let target = ps.support()[shift % ps.support().len()];
        let delta = frac(1, 100);
        let probs: Vec<BigRational> = ps
            .iter()
            .map(|(s, p)| {
                let scaled = p * (BigRational::one() - &delta);
                if s == target { scaled + &delta } else { scaled }
            })
            .collect();
        let moved = SizeDistribution::new(ps.support().to_vec(), probs).unwrap();
        let a = f_binary(&ps, 1e-3).unwrap().value;
        let b = f_binary(&moved, 1e-3).unwrap().value;
        // F is at most E[S] and the mean moves by at most 4/100.
        prop_assert!((a - b).abs() <= 0.1, "{} vs {}", a, b);
    }
}

#[test]
fn psi_decays_like_inverse_root() {
    for &l in &[0.5, 1.0 / 3.0, 0.4, 9.0 / 19.0] {
        for s in 1..2000 {
            assert!(psi(s, l) <= 1.5 / (s as f64).sqrt() + 1e-12, "s={s} lambda={l}");
        }
    }
}

#[test]
fn doubling_k_does_not_decrease_fk() {
    let cases = [
        SizeDistribution::point(2).unwrap(),
        SizeDistribution::new(vec![1, 2], vec![frac(1, 2), frac(1, 2)]).unwrap(),
        SizeDistribution::new(vec![1, 2], vec![frac(1, 3), frac(2, 3)]).unwrap(),
    ];
    for ps in &cases {
        for k in 2..=4 {
            let small = f_k(ps, k, 2).unwrap();
            let large = f_k(ps, 2 * k, 2).unwrap();
            assert!(small <= large, "{ps} k={k}: {small} > {large}");
        }
    }
}

#[test]
fn compositions_are_sorted_and_complete() {
    for c in sorted_compositions(6, 3) {
        assert_eq!(c.counts.iter().sum::<usize>(), 6);
        assert!(c.counts.windows(2).all(|w| w[0] >= w[1]));
    }
}

/// On `{1,2,3}` with mean `c <= 9/4` the best value is `(2c + 3) / 5`, reached
/// at masses `(1 - 4(c-1)/5, 3(c-1)/5, (c-1)/5)`.
#[test]
fn three_primary_maximum_closed_form() {
    for num in 11..=22 {
        let c = frac(num, 10);
        let d = &c - int(1);
        let best = (int(2) * &c + int(3)) / int(5);
        let argmax = SizeDistribution::new(
            vec![1, 2, 3],
            vec![int(1) - int(4) * &d / int(5), int(3) * &d / int(5), &d / int(5)],
        )
        .unwrap();
        assert_eq!(f_k(&argmax, 3, 2).unwrap(), best, "c={c}");
        // Every other distribution of the same mean: p3 = x, p2 = d - 2x.
        let lo = if c > int(2) { &c - int(2) } else { BigRational::zero() };
        let hi = &d / int(2);
        for step in 0..=12 {
            let x = &lo + (&hi - &lo) * frac(step, 12);
            let p2 = &d - int(2) * &x;
            let p1 = int(1) - &p2 - &x;
            let ps = SizeDistribution::new(vec![1, 2, 3], vec![p1, p2, x]).unwrap();
            assert!(f_k(&ps, 3, 2).unwrap() <= best, "c={c} {ps}");
        }
    }
}

#[test]
fn general_and_binary_agree_on_known_rows() {
    use defect_designs::asymptotic::{f_general, known_distribution, KNOWN_ACHIEVABLE};
    for i in 0..KNOWN_ACHIEVABLE.len() {
        let ps = known_distribution(i).unwrap();
        let b = f_binary(&ps, 1e-4).unwrap().value;
        let g = f_general(&ps, 2, 1.0 / 200.0).unwrap().value;
        assert!((b - g).abs() <= 1e-4, "row {i}: {b} vs {g}");
    }
}

#[test]
fn single_degree_functional_grows() {
    let values: Vec<f64> = (2..=6)
        .map(|s| f_binary(&SizeDistribution::point(s).unwrap(), 1e-4).unwrap().value)
        .collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
}

#[test]
fn finite_k_gap_shrinks_when_k_doubles() {
    let ps = SizeDistribution::new(vec![1, 2, 3], vec![frac(1, 4), frac(1, 2), frac(1, 4)]).unwrap();
    let f = f_binary(&ps, 1e-5).unwrap().value;
    let gaps: Vec<f64> = [3, 6, 12]
        .iter()
        .map(|&k| f - defect_designs::rational::to_f64(&f_k(&ps, k, 2).unwrap()))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1].abs() <= w[0].abs() + 1e-9), "{gaps:?}");
}
