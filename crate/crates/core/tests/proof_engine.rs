use std::collections::{BTreeMap, BTreeSet};

use hardy_ladder::proof::{
    cere2_rhs, cere2_target, selected_subset, span_certificate, span_certificate_with_zeros,
    Generator,
};
use hardy_ladder::{
    born_behavior, derive_cere2, extremal_ns_box, hardy_zero_set, ns_system, Behavior, Error,
    Party,
};
use std::time::Instant;

#[test]
fn certificates_verify_for_k_up_to_10() {
    let start = Instant::now();
    for k in 1..=10 {
        let c = derive_cere2(k).unwrap();
        assert!(c.verified(), "K={k}");
        assert!(c.residual.is_zero());
        assert!(c.elimination_agrees);
        assert_eq!(c.selected.len(), 4 * (k + 1));
        assert_eq!(c.k, k);
    }
    assert_eq!(derive_cere2(1).unwrap().selected.len(), 8);
    assert_eq!(derive_cere2(2).unwrap().selected.len(), 12);
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn each_relationship_carries_one_rhs_probability() {
    for k in 1..=8 {
        let zeros: BTreeSet<_> = hardy_zero_set(k).unwrap().into_iter().collect();
        let rhs = cere2_rhs(k);
        assert_eq!(rhs.len(), 2 * k + 2);
        for party in [Party::A, Party::B] {
            let subset = selected_subset(k, party).unwrap();
            assert_eq!(subset.len(), 2 * (k + 1));
            let mut uses: BTreeMap<_, usize> = BTreeMap::new();
            for c in &subset {
                let reduced = hardy_ladder::proof::equality_expr(c).reduce_mod(&zeros);
                let hits: Vec<_> = rhs
                    .iter()
                    .filter(|idx| reduced.coefficients.contains_key(idx))
                    .collect();
                assert_eq!(hits.len(), 1, "K={k} {party:?}");
                *uses.entry(*hits[0]).or_default() += 1;
            }
            // each subset exhausts all the right-hand probabilities once
            assert_eq!(uses.len(), 2 * k + 2);
            assert!(uses.values().all(|&n| n == 1));
        }
    }
}

#[test]
fn zero_support_is_exactly_the_hardy_zeros() {
    for k in 1..=10 {
        let c = derive_cere2(k).unwrap();
        let zeros = hardy_zero_set(k).unwrap();
        let support: BTreeSet<_> = c.zero_support.coefficients.keys().copied().collect();
        assert!(support.is_subset(&zeros.iter().copied().collect()));
    }
}

#[test]
fn elimination_route_agrees() {
    for k in [1, 2, 5, 12] {
        let s = span_certificate(k).unwrap();
        assert!(s.residual.is_zero());
        assert!(s.multipliers.keys().any(|g| matches!(g, Generator::Ns(_))));
        assert!(s.rank > 0);
    }
}

#[test]
fn target_is_not_implied_by_ns_alone() {
    for k in 1..=4 {
        assert!(matches!(
            span_certificate_with_zeros(k, &[]),
            Err(Error::DerivationFailed(_))
        ));
        // dropping any single zero also breaks the derivation
        let zeros = hardy_zero_set(k).unwrap();
        for skip in 0..zeros.len() {
            let partial: Vec<_> = zeros
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, z)| *z)
                .collect();
            assert!(span_certificate_with_zeros(k, &partial).is_err(), "K={k} skip {skip}");
        }
    }
}

#[test]
fn target_vanishes_where_it_should() {
    for k in 1..=6 {
        let target = cere2_target(k).unwrap();
        assert!(target.eval(&born_behavior(0.42, k).unwrap()).abs() <= 1e-12);
        assert_eq!(target.eval(&extremal_ns_box(k).unwrap()), 0.0);
        // uniform is non-signaling but violates the zeros
        let u = Behavior::uniform(k).unwrap();
        assert!(target.eval(&u).abs() > 1e-3);
    }
}

#[test]
fn ns_system_has_expected_size() {
    for k in 1..=6 {
        let eqs = ns_system(k).unwrap();
        assert_eq!(eqs.len(), 4 * (k + 1) * k);
        let ids: BTreeSet<_> = eqs.iter().map(|e| e.id).collect();
        assert_eq!(ids.len(), eqs.len());
    }
}

#[test]
fn certificate_json() {
    let json = derive_cere2(3).unwrap().to_json();
    assert!(json.verified);
    assert_eq!(json.terms.len(), 16);
    let text = serde_json::to_string(&json).unwrap();
    assert!(text.contains("\"multiplier\":\"1/2\""));
}
