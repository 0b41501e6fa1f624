// Copyright 2023 Google LLC
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


//! Property tests for fields, characters, function spaces and moment tables.

use std::collections::BTreeMap;

use num_rational::Rational64;
use padic_core::chars::{Character, MultiIndex, SmoothPart};
use padic_core::dist::MomentTable;
use padic_core::field::{Elem, Field, FieldDescriptor, LogNorm};
use padic_core::funcspace::{LocalPolynomial, LocallyPolyFunction};
use proptest::prelude::*;

fn q3() -> Field {
    Field::new(FieldDescriptor { p: 3, f: 1 }).unwrap()
}

fn f4() -> Field {
    Field::new(FieldDescriptor { p: 2, f: 2 }).unwrap()
}

/// Coefficients of a polynomial in the generator and a power of p.
fn raw() -> impl Strategy<Value = (Vec<i64>, i64)> {
    (prop::collection::vec(-100_000i64..100_000, 2), -4i64..4)
}

fn build(k: &Field, r: &(Vec<i64>, i64)) -> Elem {
    k.mul(&k.from_poly(&r.0[..k.f()]), &k.p_pow(r.1))
}

fn nonzero(k: &Field, r: &(Vec<i64>, i64)) -> Elem {
    let x = build(k, r);
    if x.is_zero() {
        k.p_pow(r.1)
    } else {
        x
    }
}

/// The quadratic character of `(Z/3)^x`.
fn sign_mod_3(k: &Field) -> SmoothPart {
    let mut table = BTreeMap::new();
    table.insert(1, k.one());
    table.insert(2, k.from_i64(-1));
    SmoothPart {
        conductor: 1,
        table,
    }
}

fn random_function(k: &Field, level: u32, deg: i64, seed: &[i64]) -> LocallyPolyFunction {
    let mut it = seed.iter().cycle();
    LocallyPolyFunction::from_fn(k, level, |_, c| {
        let mut coeffs = BTreeMap::new();
        for m in MultiIndex::all_upto(k.f(), deg) {
            let v = *it.next().unwrap();
            if v % 5 != 0 {
                coeffs.insert(m, k.mul(&k.from_i64(v), &k.p_pow(v.rem_euclid(3) - 1)));
            }
        }
        Ok(LocalPolynomial { center: *c, coeffs })
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ultrametric_with_equality_off_ties(a in raw(), b in raw(), ext in any::<bool>()) {
        let k = if ext { f4() } else { q3() };
        let (x, y) = (build(&k, &a), build(&k, &b));
        let s = k.add(&x, &y);
        if let (Some(vx), Some(vy)) = (x.val(), y.val()) {
            if let Some(vs) = s.val() {
                prop_assert!(vs >= vx.min(vy));
            }
            if vx != vy {
                prop_assert_eq!(s.val(), Some(vx.min(vy)));
            }
        }
    }

    #[test]
    fn ring_laws(a in raw(), b in raw(), c in raw(), ext in any::<bool>()) {
        let k = if ext { f4() } else { q3() };
        let (x, y, z) = (build(&k, &a), build(&k, &b), build(&k, &c));
        prop_assert!(k.eq(&k.mul(&k.mul(&x, &y), &z), &k.mul(&x, &k.mul(&y, &z))));
        prop_assert!(k.eq(&k.add(&k.add(&x, &y), &z), &k.add(&x, &k.add(&y, &z))));
        prop_assert!(k.eq(&k.mul(&x, &k.add(&y, &z)), &k.add(&k.mul(&x, &y), &k.mul(&x, &z))));
    }

    #[test]
    fn monomial_norm(a in raw(), m0 in -3i64..4, m1 in -3i64..4) {
        let k = f4();
        let z = nonzero(&k, &a);
        let m = [m0, m1];
        let v = k.monomial(&z, &m).unwrap();
        let w = z.val().unwrap();
        prop_assert_eq!(LogNorm::of(&v), LogNorm::q_pow_int(-w * (m0 + m1)));
    }

    #[test]
    fn characters_are_multiplicative(
        a in raw(), b in raw(), lam in raw(), alg in -2i64..3, smooth in any::<bool>()
    ) {
        let k = q3();
        let mut chi = Character::unr(&k, nonzero(&k, &lam));
        chi.alg = MultiIndex(vec![alg]);
        if smooth {
            chi = chi.with_smooth(sign_mod_3(&k));
        }
        let (x, y) = (nonzero(&k, &a), nonzero(&k, &b));
        let lhs = chi.eval(&k, &k.mul(&x, &y)).unwrap();
        let rhs = k.mul(&chi.eval(&k, &x).unwrap(), &chi.eval(&k, &y).unwrap());
        prop_assert!(k.eq(&lhs, &rhs));
    }

    #[test]
    fn val_p_is_additive(l1 in raw(), l2 in raw(), a1 in -2i64..3, a2 in -2i64..3) {
        let k = f4();
        let mut c1 = Character::unr(&k, nonzero(&k, &l1));
        c1.alg = MultiIndex(vec![a1, 0]);
        let mut c2 = Character::unr(&k, nonzero(&k, &l2));
        c2.alg = MultiIndex(vec![0, a2]);
        let prod = c1.mul(&k, &c2).unwrap();
        prop_assert_eq!(
            prod.val_p(&k).unwrap(),
            c1.val_p(&k).unwrap() + c2.val_p(&k).unwrap()
        );
    }

    #[test]
    fn local_expansion_matches_evaluation(
        alg in -2i64..4, u in 1i64..1000, t in 0i64..10_000, smooth in any::<bool>()
    ) {
        let k = q3();
        let mut chi = Character::algebraic(&k, &[alg]);
        if smooth {
            chi = chi.with_smooth(sign_mod_3(&k));
        }
        let a = k.from_i64(3 * u + 1);
        let n = chi.analyticity_level(&k);
        let (poly, tail) = chi.local_expansion(&k, &a, n, 4).unwrap();
        let z = k.add(&a, &k.mul(&k.p_pow(n as i64), &k.from_i64(t)));
        let diff = k.sub(&poly.eval(&k, &z).unwrap(), &chi.eval(&k, &z).unwrap());
        if tail.is_zero() {
            prop_assert!(diff.is_zero());
        } else {
            prop_assert!(LogNorm::of(&diff) <= tail);
        }
    }
}

#[test]
fn coset_reps_refine_q_to_one() {
    for k in [q3(), f4()] {
        for lvl in 0..4u32 {
            let mut count = vec![0u64; k.q().pow(lvl) as usize];
            for r in k.coset_reps(lvl + 1, false) {
                count[k.coset_index(&r, lvl).unwrap() as usize] += 1;
            }
            assert!(count.iter().all(|&c| c == k.q()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_keeps_values_and_enumerated_norm(
        seed in prop::collection::vec(-50i64..50, 12), level in 0u32..2, deg in 0i64..3,
        pts in prop::collection::vec(0i64..100_000, 5)
    ) {
        let k = q3();
        let f = random_function(&k, level, deg, &seed);
        let g = f.refine(&k, level + 1).unwrap();
        for t in pts {
            let z = k.from_i64(t);
            prop_assert!(k.eq(&f.eval(&k, &z).unwrap(), &g.eval(&k, &z).unwrap()));
        }
        let r = Rational64::new(1, 2);
        let m = g.default_enum_level();
        prop_assert_eq!(f.cr_norm_enum(&k, r, m).unwrap(), g.cr_norm_enum(&k, r, m).unwrap());
        prop_assert!(g.cr_norm_enum(&k, r, m).unwrap() <= g.cr_norm_upper(&k, r));
    }

    #[test]
    fn enumeration_never_exceeds_upper_bound(
        seed in prop::collection::vec(-50i64..50, 12), level in 0u32..2, deg in 0i64..3,
        rn in 0i64..5
    ) {
        let k = q3();
        let f = random_function(&k, level, deg, &seed);
        let r = Rational64::new(rn, 2);
        let iv = f.cr_norm(&k, r).unwrap();
        prop_assert!(iv.lower <= iv.upper);
    }

    #[test]
    fn scaling_into_disk_bound(
        seed in prop::collection::vec(-50i64..50, 12), level in 0u32..3, deg in 0i64..4,
        n in 0u32..4, rn in 1i64..5
    ) {
        let k = q3();
        let f = random_function(&k, level, deg, &seed);
        let r = Rational64::new(rn, 2);
        let g = f.scale_into_disk(&k, n).unwrap();
        let bound = f.cr_norm_upper(&k, r).times_q_pow(r * Rational64::from_integer(n as i64));
        prop_assert!(g.cr_norm_upper(&k, r) <= bound);
    }

    #[test]
    fn difference_quotients_approach_divided_derivatives(
        seed in prop::collection::vec(-50i64..50, 12), deg in 1i64..4, x0 in 0i64..10_000,
        order in 1i64..3, u in 1i64..100
    ) {
        let k = q3();
        let f = random_function(&k, 1, deg, &seed);
        let x = k.from_i64(x0);
        let piece = &f.pieces[k.coset_index(&x, 1).unwrap() as usize];
        let coeff = |i: i64| piece.divided_derivative(&k, &MultiIndex(vec![i])).eval(&k, &x).unwrap();
        let floor = (0..=deg).filter_map(|i| coeff(i).val()).min().unwrap_or(0);
        for v in 1..6i64 {
            let t = k.mul(&k.p_pow(v), &k.from_i64(3 * u + 1));
            let mut e = f.eval(&k, &k.add(&x, &t)).unwrap();
            for i in 0..order {
                e = k.sub(&e, &k.mul(&coeff(i), &k.pow(&t, i).unwrap()));
            }
            let quotient = k.div(&e, &k.pow(&t, order).unwrap()).unwrap();
            let err = k.sub(&quotient, &coeff(order));
            if let Some(w) = err.val() {
                prop_assert!(w >= v + floor);
            }
        }
    }

    #[test]
    fn subspace_closure(
        s1 in prop::collection::vec(-50i64..50, 12), s2 in prop::collection::vec(-50i64..50, 12),
        n in 0u32..3, c in 1i64..200
    ) {
        let k = q3();
        let d = [1i64];
        let f = random_function(&k, 1, 1, &s1).with_type(&[], &d);
        let g = random_function(&k, 1, 1, &s2).with_type(&[], &d);
        prop_assert!(f.subspace_check(&k, &[], &d));
        prop_assert!(f.refine(&k, 2).unwrap().subspace_check(&k, &[], &d));
        prop_assert!(f.scale_into_disk(&k, n).unwrap().subspace_check(&k, &[], &d));
        let comb = f.add(&k, &g.scale(&k, &k.from_i64(c))).unwrap();
        prop_assert!(comb.subspace_check(&k, &[], &d));
        let shifted = f.pieces[0].recenter(&k, &k.from_i64(3 * c)).unwrap();
        prop_assert!(shifted.max_total_degree() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pairing_with_recentered_monomials_reads_the_table(
        seed in 0u64..1000, n in 0u32..4, idx in 0u64..81, m in 0i64..3
    ) {
        let k = q3();
        let t = MomentTable::random_consistent(&k, seed, 3, 2, 0).unwrap();
        let idx = idx % k.q().pow(n);
        let mi = MultiIndex(vec![m]);
        let f = LocallyPolyFunction::from_fn(&k, n, |i, c| {
            let mut p = LocalPolynomial::zero(*c);
            if i == idx {
                p.coeffs.insert(mi.clone(), k.one());
            }
            Ok(p)
        }).unwrap();
        prop_assert!(k.eq(&t.pair(&k, &f).unwrap(), &t.value(&k, n, idx, &mi).unwrap()));
    }

    #[test]
    fn order_norm_is_homogeneous_and_ultrametric(
        s1 in 0u64..1000, s2 in 0u64..1000, shift in -3i64..4, rn in 0i64..5
    ) {
        let k = q3();
        let r = Rational64::new(rn, 2);
        let (j, d) = (vec![0usize], vec![0i64]);
        let a = MomentTable::random_consistent(&k, s1, 3, 2, -1).unwrap();
        let b = MomentTable::random_consistent(&k, s2, 3, 2, 0).unwrap();
        let na = a.avv_norm(r, &j, &d).constant;
        let scaled = a.scale(&k, &k.p_pow(shift)).avv_norm(r, &j, &d).constant;
        prop_assert_eq!(scaled, na.times_q_pow(Rational64::from_integer(-shift)));
        let sum = a.add(&k, &b).unwrap().avv_norm(r, &j, &d).constant;
        prop_assert!(sum <= na.max(b.avv_norm(r, &j, &d).constant));
    }

    #[test]
    fn order_check_is_monotone_in_r(seed in 0u64..1000, rn in 0i64..4, extra in 0i64..4) {
        let k = q3();
        let (j, d) = (vec![0usize], vec![0i64]);
        let t = MomentTable::random_consistent(&k, seed, 3, 2, 0).unwrap();
        let r = Rational64::new(rn, 2);
        let r2 = r + Rational64::new(extra, 2);
        let budget = LogNorm::q_pow_int(1);
        if t.order_check(r, &j, &d, budget).unwrap().satisfied == Some(true) {
            prop_assert_eq!(t.order_check(r2, &j, &d, budget).unwrap().satisfied, Some(true));
        }
    }

    #[test]
    fn point_masses_have_order_constant_one(a in raw(), which in 0usize..3, rn in 0i64..5) {
        let k = [q3(), f4(), Field::new(FieldDescriptor { p: 5, f: 1 }).unwrap()][which].clone();
        let mut x = build(&k, &a);
        if let Some(w) = x.val() {
            if w < 0 {
                x = k.mul(&x, &k.p_pow(-w));
            }
        }
        let all: Vec<usize> = (0..k.f()).collect();
        let t = MomentTable::dirac(&k, &x, 3, 2).unwrap();
        let rep = t.avv_norm(Rational64::new(rn, 2), &all, &vec![0; k.f()]);
        prop_assert_eq!(rep.constant, LogNorm::one());
    }

    #[test]
    fn table_and_function_json_round_trip(seed in 0u64..1000, s in prop::collection::vec(-50i64..50, 12)) {
        let k = f4();
        let t = MomentTable::random_consistent(&k, seed, 2, 2, -1).unwrap();
        prop_assert_eq!(&MomentTable::from_json(&k, &t.to_json(&k)).unwrap(), &t);
        let f = random_function(&k, 1, 2, &s);
        let back = LocallyPolyFunction::from_json(&k, &f.to_json(&k)).unwrap();
        prop_assert_eq!(back.to_json(&k), f.to_json(&k));
    }
}
