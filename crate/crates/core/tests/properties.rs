use hitchin_core::combinatorics::{r_and_s, EdgeType, PsiEncoding, PsiTuple};
use hitchin_core::hyperbolic::{cyclic_split, invert_word, reduce_word};
use hitchin_core::invariants::cross_ratio_vectors;
use hitchin_core::params::{EdgeId, EdgeKind};
use hitchin_core::scalar::{parse_scalar, rational};
use hitchin_core::{Extended, Scalar};
use num_rational::BigRational;
use proptest::prelude::*;

type Q = BigRational;

fn config(n: usize) -> impl Strategy<Value = (Vec<Vec<Q>>, Vec<Vec<Q>>)> {
    let vector = move || proptest::collection::vec(-6i64..=6, n).prop_map(|v| v.into_iter().map(Q::from_int).collect());
    (
        proptest::collection::vec(vector(), 5),
        proptest::collection::vec(vector(), n - 2),
    )
}

fn finite(e: Extended<Q>) -> Option<Q> {
    e.finite().cloned()
}

fn letter() -> impl Strategy<Value = char> {
    prop::sample::select(vec!['a', 'b', 's', 't', 'A', 'B', 'S', 'T'])
}

fn word(max: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(letter(), 0..max).prop_map(|v| v.into_iter().collect())
}

fn tuple() -> impl Strategy<Value = PsiTuple> {
    let edge = (0usize..2, 0usize..3).prop_map(|(pants, k)| EdgeId {
        pants,
        kind: [EdgeKind::AB, EdgeKind::AC, EdgeKind::BC][k],
    });
    (edge.clone(), edge.clone(), edge, any::<bool>(), -4i64..=4).prop_map(|(pred, edge, succ, z, t)| PsiTuple {
        pred,
        edge,
        succ,
        kind: if z { EdgeType::Z } else { EdgeType::S },
        t,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cross_ratio_symmetries((lines, base) in (2usize..=4).prop_flat_map(config)) {
        let [l1, l2, l3, l4, l5] = [&lines[0], &lines[1], &lines[2], &lines[3], &lines[4]];
        let cr = |a: &Vec<Q>, b: &Vec<Q>, c: &Vec<Q>, d: &Vec<Q>| cross_ratio_vectors([a, b, c, d], &base);
        let Ok(x) = cr(l1, l2, l3, l4) else { return Ok(()) };
        prop_assert_eq!(cr(l4, l3, l2, l1).unwrap(), x.clone());
        if let (Some(x), Ok(Extended::Finite(y))) = (finite(x), cr(l2, l1, l3, l4)) {
            prop_assert_eq!(x, Q::from_int(1) - y);
        }
        if let (Ok(a), Ok(b), Ok(c)) = (cr(l1, l2, l3, l5), cr(l1, l3, l4, l5), cr(l1, l2, l4, l5)) {
            if let (Some(a), Some(b), Some(c)) = (finite(a), finite(b), finite(c)) {
                prop_assert_eq!(a * b, c);
            }
        }
    }

    #[test]
    fn scaling_a_line_keeps_the_cross_ratio((lines, base) in (2usize..=4).prop_flat_map(config), k in 1i64..=7) {
        let scaled: Vec<Q> = lines[2].iter().map(|x| x * Q::from_int(-k)).collect();
        let plain = cross_ratio_vectors([&lines[0], &lines[1], &lines[2], &lines[3]], &base);
        let moved = cross_ratio_vectors([&lines[0], &lines[1], &scaled, &lines[3]], &base);
        prop_assert_eq!(plain.is_ok(), moved.is_ok());
        if let (Ok(a), Ok(b)) = (plain, moved) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn rotations_share_a_canonical_form(tuples in proptest::collection::vec(tuple(), 1..8), k in 0usize..16) {
        let psi = PsiEncoding::new(tuples);
        let turned = psi.rotated(k);
        prop_assert!(psi.same_cycle(&turned));
        prop_assert_eq!(psi.canonical(), turned.canonical());
        prop_assert_eq!(r_and_s(&psi).unwrap(), r_and_s(&turned).unwrap());
    }

    #[test]
    fn reduced_words_are_stable(w in word(12)) {
        let r = reduce_word(&w);
        prop_assert_eq!(reduce_word(&r), r.clone());
        prop_assert_eq!(invert_word(&invert_word(&w)), w.clone());
        prop_assert_eq!(reduce_word(&format!("{w}{}", invert_word(&w))), "");
    }

    #[test]
    fn conjugation_keeps_the_cyclic_core(c in word(8), y in word(5)) {
        let core = cyclic_split(&c).1;
        let conj = format!("{y}{c}{}", invert_word(&y));
        let (prefix, again) = cyclic_split(&conj);
        prop_assert_eq!(reduce_word(&format!("{prefix}{again}{}", invert_word(&prefix))), reduce_word(&conj));
        // the core is determined up to rotation
        prop_assert_eq!(again.len(), core.len());
        if !core.is_empty() {
            let doubled = format!("{core}{core}");
            prop_assert!(doubled.contains(&again));
        }
    }

    #[test]
    fn fractions_parse_exactly(p in -1000i64..1000, q in 1i64..1000) {
        let got: Q = parse_scalar(&format!("{p}/{q}")).unwrap();
        prop_assert_eq!(got, rational(p, q));
    }
}
