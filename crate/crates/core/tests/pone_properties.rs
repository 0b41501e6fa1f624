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


//! Property tests for the two-chart model.

use std::collections::BTreeMap;

use padic_core::chars::{Character, MultiIndex, SmoothPart};
use padic_core::field::{Elem, Field, FieldDescriptor, LogNorm};
use padic_core::pone::action::{lattice_generator, Family, TermSum};
use padic_core::pone::conditions::{equivalence_harness, ConditionRange};
use padic_core::pone::{
    act_eval, nullity_collapse, Acted, Certificate, Chart, ChartEval, CollapseTarget, Engine,
    InductionDatum, Mat2, TwoChartDistribution, XTerm,
};
use proptest::prelude::*;

fn q3() -> Field {
    Field::new(FieldDescriptor { p: 3, f: 1 }).unwrap()
}

fn harness_datum() -> InductionDatum {
    let k = q3();
    let chi1 = Character::unr(&k, k.p_pow(-2));
    let chi2 = Character::unr(&k, k.p_pow(1));
    InductionDatum::new(k, vec![], MultiIndex(vec![1]), chi1, chi2).unwrap()
}

/// A datum whose `psi` is ramified.
fn ramified_datum() -> InductionDatum {
    let k = q3();
    let mut table = BTreeMap::new();
    table.insert(1, k.one());
    table.insert(2, k.from_i64(-1));
    let chi1 = Character::unr(&k, k.p_pow(-1)).with_smooth(SmoothPart { conductor: 1, table });
    let chi2 = Character::unr(&k, k.p_pow(1));
    InductionDatum::new(k, vec![], MultiIndex(vec![0]), chi1, chi2).unwrap()
}

fn elem(k: &Field, (c, w): (i64, i64)) -> Elem {
    k.mul(&k.from_i64(c), &k.p_pow(w))
}

fn entry() -> impl Strategy<Value = (i64, i64)> {
    (-500i64..500, -1i64..3)
}

fn matrix(k: &Field, e: [(i64, i64); 4]) -> Option<Mat2> {
    let g = Mat2::new(elem(k, e[0]), elem(k, e[1]), elem(k, e[2]), elem(k, e[3]));
    (!g.det(k).is_zero()).then_some(g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_composes(
        e1 in prop::array::uniform4(entry()), e2 in prop::array::uniform4(entry()),
        z in entry(), ramified in any::<bool>(), center in -20i64..20
    ) {
        let datum = if ramified { ramified_datum() } else { harness_datum() };
        let k = datum.k().clone();
        let (Some(g1), Some(g2)) = (matrix(&k, e1), matrix(&k, e2)) else { return Ok(()) };
        let mut terms = vec![
            lattice_generator(&k, Family::Integral, &MultiIndex(vec![0])),
            lattice_generator(&k, Family::Outer, &MultiIndex(vec![0])),
            XTerm::disk_moment(k.from_i64(center), 2, MultiIndex(vec![0]), k.from_i64(5)),
        ];
        if datum.d.total() > 0 {
            terms.push(lattice_generator(&k, Family::Integral, &MultiIndex(vec![1])));
        }
        let f = TermSum { datum: &datum, terms };
        let inner = Acted { datum: &datum, g: g2, inner: &f };
        let g12 = g1.mul(&k, &g2);
        let z = elem(&k, (z.0, z.1.max(0)));
        for chart in [Chart::One, Chart::Two] {
            let lhs = act_eval(&datum, &g1, &inner, chart, &z).unwrap();
            let rhs = act_eval(&datum, &g12, &f, chart, &z).unwrap();
            prop_assert!(k.eq(&lhs, &rhs), "chart {:?}", chart);
        }
    }

    #[test]
    fn symbolic_upper_action_matches_pointwise(
        n in -2i64..4, b in entry(), u in 1i64..50, z in entry(), outer in any::<bool>(), e in 0i64..2
    ) {
        let datum = harness_datum();
        let k = datum.k().clone();
        let g = Mat2::upper(&k, k.mul(&k.p_pow(n), &k.from_i64(3 * u + 1)), elem(&k, b), k.one());
        let family = if outer { Family::Outer } else { Family::Integral };
        let gen = lattice_generator(&k, family, &MultiIndex(vec![e]));
        let img = TermSum { datum: &datum, terms: vec![gen.act_upper(&datum, &g).unwrap()] };
        let f = TermSum { datum: &datum, terms: vec![gen] };
        let z = elem(&k, (z.0, z.1.max(0)));
        for chart in [Chart::One, Chart::Two] {
            let lhs = act_eval(&datum, &g, &f, chart, &z).unwrap();
            prop_assert!(k.eq(&lhs, &img.eval_chart(chart, &z).unwrap()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unitarity_of_translations_and_scalings(
        seed in 0u64..1000, n in 0i64..4, a in 0i64..27, e in 0i64..2, outer in any::<bool>()
    ) {
        let datum = harness_datum();
        let k = datum.k().clone();
        let r = datum.r().unwrap().to_integer();
        let mu = TwoChartDistribution::random(&k, seed, 5, 1, 0).unwrap();
        let engine = Engine::new(&datum);
        let a = k.from_i64(a);
        let g = Mat2::upper(&k, k.p_pow(n), a, k.one());
        let family = if outer { Family::Outer } else { Family::Integral };
        let gen = lattice_generator(&k, family, &MultiIndex(vec![e]));
        let acted = gen.act_upper(&datum, &g).unwrap();
        let plain = if outer {
            XTerm::complement_moment(a, n, MultiIndex(vec![e]), k.one())
        } else {
            XTerm::disk_moment(a, n, MultiIndex(vec![e]), k.one())
        };
        let w = n * (e - r);
        let factor = LogNorm::q_pow_int(if outer { -w } else { w });
        let lhs = LogNorm::of(&engine.integrate(&mu, &acted).unwrap());
        let rhs = factor.mul(LogNorm::of(&engine.integrate(&mu, &plain).unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn budgets_hold_on_random_tables(seed in 0u64..10_000, floor in -2i64..2) {
        let datum = harness_datum();
        let k = datum.k().clone();
        let mu = TwoChartDistribution::random(&k, seed, 4, 2, floor).unwrap();
        let range = ConditionRange { level: 3, degree: 2, center_depth: 1 };
        let rep = equivalence_harness(&mu, &datum, &range).unwrap();
        prop_assert!(rep.ab_holds);
        prop_assert!(rep.ba_holds);
    }

    #[test]
    fn collapse_certificates_verify_with_integral_coefficients(
        t in 1i64..4, n in 0i64..2, i in 0i64..2, seed in 0u64..100
    ) {
        let k = q3();
        let chi1 = Character::unr(&k, k.p_pow(1));
        let chi2 = Character::unr(&k, k.p_pow(-1 - i));
        let datum = InductionDatum::new(k.clone(), vec![], MultiIndex(vec![i]), chi1, chi2).unwrap();
        let target = CollapseTarget { lambda: k.p_pow(-t), n, i: MultiIndex(vec![i]) };
        let cert = nullity_collapse(&datum, &target, 100_000).unwrap();
        let v = cert.verify(&datum, 10, seed).unwrap();
        prop_assert!(v.ok());
        prop_assert!(v.min_coeff_val.unwrap() >= 1);
    }

    #[test]
    fn reports_round_trip(seed in 0u64..1000, t in 1i64..3) {
        let datum = harness_datum();
        let k = datum.k().clone();
        let back = InductionDatum::from_json(&datum.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), datum.to_json());
        let mu = TwoChartDistribution::random(&k, seed, 2, 1, -1).unwrap();
        let mu2 = TwoChartDistribution::from_json(&k, &mu.to_json(&k)).unwrap();
        prop_assert_eq!(mu2.to_json(&k), mu.to_json(&k));
        let cdatum = {
            let chi1 = Character::unr(&k, k.p_pow(1));
            let chi2 = Character::unr(&k, k.p_pow(-1));
            InductionDatum::new(k.clone(), vec![], MultiIndex(vec![0]), chi1, chi2).unwrap()
        };
        let target = CollapseTarget { lambda: k.p_pow(-t), n: 0, i: MultiIndex(vec![0]) };
        let cert = nullity_collapse(&cdatum, &target, 1000).unwrap();
        let json = cert.to_json(&k);
        let cert2 = Certificate::from_json(&k, &json).unwrap();
        prop_assert_eq!(cert2.to_json(&k), json);
    }
}
