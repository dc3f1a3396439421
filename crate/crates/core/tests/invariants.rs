use hardy_ladder::behavior::hardy_relation_constant;
use hardy_ladder::bounds::{random_local_mixture, random_ns_mixture};
use hardy_ladder::proof::cere2_target;
use hardy_ladder::{
    born_behavior, derive_cere2, extremal_ns_box, local_membership, Behavior,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(k: usize, rng: &mut ChaCha8Rng) -> Behavior {
    let n = (k + 1) * (k + 1);
    let mut table = Vec::with_capacity(4 * n);
    for _ in 0..n {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() + 1e-3);
        let sum: f64 = raw.iter().sum();
        table.extend(raw.iter().map(|v| v / sum));
    }
    // renormalize the last entry of each block against rounding
    for block in table.chunks_mut(4) {
        let head: f64 = block[..3].iter().sum();
        block[3] = 1.0 - head;
    }
    Behavior::from_table(k, table).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ns_mixtures_satisfy_chsh_ch_relation(k in 1usize..=5, seed in any::<u64>(), parts in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_ns_mixture(k, parts, &mut rng).unwrap();
        prop_assert!(b.ns_residual().max_residual <= 1e-12);
        let r = b.relation_residuals();
        prop_assert!(r.cere3_residual <= 1e-9, "cere3 {}", r.cere3_residual);
        let ch = b.ch_values();
        prop_assert!((ch.ch_plus - ch.ch_minus).abs() <= 1e-9);
    }

    #[test]
    fn ch_sum_matches_chsh_for_any_table(k in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_table(k, &mut rng);
        let ch = b.ch_values();
        let expected = (b.chsh_k() - 2.0 * k as f64) / 2.0;
        prop_assert!((ch.ch_plus + ch.ch_minus - expected).abs() <= 1e-12);
    }

    #[test]
    fn chsh_invariant_under_party_swap(k in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_table(k, &mut rng);
        let s = b.swap_parties();
        prop_assert!((b.chsh_k() - s.chsh_k()).abs() <= 1e-12);
        prop_assert!((b.ns_residual().max_residual - s.ns_residual().max_residual).abs() <= 1e-12);
    }

    #[test]
    fn correlation_is_bilinear_and_bounded(k in 1usize..=3, seed in any::<u64>(), w in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = random_table(k, &mut rng);
        let b2 = random_table(k, &mut rng);
        let mix = Behavior::mixture(&[(w, &b1), (1.0 - w, &b2)]).unwrap();
        for a in 0..=k {
            for bb in 0..=k {
                let e = mix.correlation(a, bb).unwrap();
                prop_assert!((-1.0..=1.0).contains(&e));
                let lin = w * b1.correlation(a, bb).unwrap() + (1.0 - w) * b2.correlation(a, bb).unwrap();
                prop_assert!((e - lin).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn approximate_hardy_relation_is_controlled(
        k in 1usize..=5,
        x in 0.05f64..0.95,
        delta in 0.0f64..0.05,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = random_table(k, &mut rng);
        let q = born_behavior(x, k).unwrap();
        let b = Behavior::mixture(&[(1.0 - delta, &q), (delta, &noise)]).unwrap();
        let eps = b.ns_residual().max_residual.max(b.hardy_report().max_zero_violation);
        let gap = (b.chsh_k() - 2.0 * k as f64 - 4.0 * b.hardy_report().p_k).abs();
        prop_assert!(gap <= hardy_relation_constant(k) * eps + 1e-12, "gap {gap} eps {eps}");
    }

    #[test]
    fn certificate_is_numerically_sound(
        k in 1usize..=4,
        x in 0.05f64..0.95,
        delta in 0.0f64..0.05,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = random_table(k, &mut rng);
        let q = born_behavior(x, k).unwrap();
        let b = Behavior::mixture(&[(1.0 - delta, &q), (delta, &noise)]).unwrap();
        let ns = b.ns_residual().max_residual;
        let zeros = b.hardy_report().max_zero_violation;
        let eps = ns.max(zeros);
        let cert = derive_cere2(k).unwrap();
        let target = cere2_target(k).unwrap().eval(&b).abs();
        prop_assert!(target <= cert.soundness_bound(ns, zeros) + 1e-12);
        prop_assert!(target <= 4.0 * (k as f64 + 1.0) * eps + 1e-12);
        // the certified combination itself reproduces the target up to the zero terms
        let comb = cert.combination().eval(&b);
        let zero_sum: f64 = b.hardy_report().zero_terms.iter().map(|(_, v)| v).sum();
        prop_assert!((comb - zero_sum - cere2_target(k).unwrap().eval(&b)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn membership_rejects_chsh_violations(k in 1usize..=2, seed in any::<u64>(), w in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let local = random_local_mixture(k, 4, &mut rng).unwrap();
        let pr = extremal_ns_box(k).unwrap();
        let b = Behavior::mixture(&[(w, &pr), (1.0 - w, &local)]).unwrap();
        if b.chsh_k() > 2.0 * k as f64 + 1e-9 {
            prop_assert!(!local_membership(&b).unwrap());
        }
        prop_assert!(local_membership(&local).unwrap());
    }
}

#[test]
fn operations_are_pure() {
    let b = born_behavior(0.37, 3).unwrap();
    assert_eq!(b.chsh_k(), b.clone().chsh_k());
    assert_eq!(b.hardy_report(), b.hardy_report());
    assert_eq!(b.ns_residual(), b.ns_residual());
    assert_eq!(b.relation_residuals(), b.relation_residuals());
}

#[test]
fn json_roundtrip_is_lossless() {
    for (x, k) in [(0.3, 2), (0.91, 5)] {
        let b = born_behavior(x, k).unwrap();
        let back = Behavior::from_json(&b.to_json()).unwrap();
        assert_eq!(b.table(), back.table());
        assert_eq!(b.chsh_k(), back.chsh_k());
    }
}
