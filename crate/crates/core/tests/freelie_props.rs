use proptest::prelude::*;

use kzb_core::freelie::{basis, lyndon_basis, witt_dimension, AssocElt, LieElt, Word, S, T};
use kzb_core::Rat;

const N: usize = 6;

fn elt() -> impl Strategy<Value = LieElt<Rat>> {
    let size = basis().size_upto(N);
    prop::collection::vec((0..size, -6i64..7, 1i64..4), 1..5)
        .prop_map(|v| LieElt::from_terms(N, v.into_iter().map(|(i, a, b)| (i, Rat::new(a, b)))))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn jacobi(a in elt(), b in elt(), c in elt()) {
        let j = a.bracket(&b.bracket(&c)).plus(&b.bracket(&c.bracket(&a))).plus(&c.bracket(&a.bracket(&b)));
        prop_assert!(j.is_zero());
    }

    #[test]
    fn antisymmetry(a in elt(), b in elt()) {
        prop_assert_eq!(a.bracket(&b), b.bracket(&a).negate());
    }

    #[test]
    fn bracket_is_commutator(a in elt(), b in elt()) {
        let (x, y) = (a.to_assoc(), b.to_assoc());
        prop_assert_eq!(a.bracket(&b).to_assoc(), x.mul(&y).minus(&y.mul(&x)));
    }

    #[test]
    fn exp_log_inverse(a in elt()) {
        let p = a.to_assoc();
        let e = p.exp().unwrap();
        prop_assert!(e.is_grouplike());
        prop_assert_eq!(e.log().unwrap(), p);
    }

    #[test]
    fn projection_inverts_embedding(a in elt()) {
        prop_assert_eq!(LieElt::from_assoc(&a.to_assoc()), a);
    }
}

#[test]
fn witt_counts() {
    let known = [2, 1, 2, 3, 6, 9, 18, 30, 56, 99];
    for (n, k) in known.iter().enumerate() {
        assert_eq!(witt_dimension(n + 1), *k);
    }
    for n in 1..=8 {
        assert_eq!(lyndon_basis(n).len(), witt_dimension(n));
    }
}

#[test]
fn standard_bracketing() {
    assert_eq!(lyndon_basis(2), vec!["[T,S]"]);
    assert_eq!(lyndon_basis(3), vec!["[T,[T,S]]", "[[T,S],S]"]);
    let i = basis().parse_bracket("[T,[T,S]]").unwrap();
    assert_eq!(basis().word(i).0, vec![T, T, S]);
}

#[test]
fn non_lie_polynomial_is_not_grouplike_log() {
    // exp of a non-primitive element fails the shuffle test.
    let mut a = AssocElt::zero(4);
    a.add_term(Word(vec![T, S]), Rat::one());
    assert!(!a.exp().unwrap().is_grouplike());
}
