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


//! Desk-scale checks of the library's main claims, with deterministic JSON
//! reports. Each check is run by [`criterion`]; [`run_all`] collects them.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::chars::{Character, MultiIndex};
use crate::dist::{random_elem, MomentTable};
use crate::field::{rational_json, Elem, Field, FieldDescriptor, LogNorm};
use crate::funcspace::{LocalPolynomial, LocallyPolyFunction};
use crate::pone::action::{act_eval, lattice_generator, Chart, ChartEval, Family, Mat2, TermSum, XTerm};
use crate::pone::collapse::{nullity_collapse, refinement_depth, CollapseTarget};
use crate::pone::conditions::{equivalence_with, BudgetConstants, ConditionRange};
use crate::pone::datum::{InductionDatum, TemplateParams};
use crate::pone::engine::{Engine, Piece, TwoChartDistribution};
use crate::{Error, Result};

/// Identifiers and titles of the checks.
pub const CRITERIA: [(u32, &str); 8] = [
    (1, "field laws"),
    (2, "C^r norm of disk indicators"),
    (3, "scaling into a disk"),
    (4, "order-r criterion on point masses"),
    (5, "action of upper triangular matrices on generators"),
    (6, "equivalence budgets on random two-chart tables"),
    (7, "nullity collapse certificates"),
    (8, "template analyzer"),
];

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: Value,
}

impl Outcome {
    pub fn to_json(&self) -> Value {
        json!({"id": self.id, "title": self.title, "pass": self.pass, "detail": self.detail})
    }
}

fn q_exp(x: LogNorm) -> Value {
    x.to_json()
}

fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Runs check `id`.
pub fn criterion(id: u32) -> Result<Outcome> {
    let (pass, detail) = match id {
        1 => field_laws()?,
        2 => disk_indicator_norms()?,
        3 => disk_scaling()?,
        4 => point_mass_orders()?,
        5 => upper_action_identity()?,
        6 => equivalence_budgets()?,
        7 => collapse_certificates()?,
        8 => template_analyzer()?,
        _ => return Err(Error::Precondition(format!("no criterion {id}"))),
    };
    let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("");
    Ok(Outcome { id, title, pass, detail })
}

/// All checks in order, as one report.
pub fn run_all() -> Result<Value> {
    let outcomes = CRITERIA
        .iter()
        .map(|(id, _)| criterion(*id))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(&outcomes))
}

pub fn report(outcomes: &[Outcome]) -> Value {
    json!({
        "allPass": outcomes.iter().all(|o| o.pass),
        "criteria": outcomes.iter().map(Outcome::to_json).collect::<Vec<_>>(),
    })
}

// Field laws.

const FIELD_TRIPLES: usize = 10_000;

/// Coefficients and a shift; built identically at every precision.
type Raw = (Vec<i64>, i64);

fn raw_elem(rng: &mut ChaCha8Rng, f: usize, p: i64) -> Raw {
    let bound = p.pow(6);
    let coeffs = (0..f).map(|_| rng.gen_range(-bound..=bound)).collect();
    (coeffs, rng.gen_range(-3..=3))
}

fn build(k: &Field, r: &Raw) -> Elem {
    k.mul(&k.from_poly(&r.0), &k.p_pow(r.1))
}

fn law_failures(k: &Field, a: &Elem, b: &Elem, c: &Elem) -> Result<(usize, Vec<Option<i64>>)> {
    let mut bad = 0;
    let mut check = |ok: bool| bad += usize::from(!ok);
    check(k.eq(&k.add(&k.add(a, b), c), &k.add(a, &k.add(b, c))));
    check(k.eq(&k.mul(&k.mul(a, b), c), &k.mul(a, &k.mul(b, c))));
    check(k.eq(&k.mul(a, &k.add(b, c)), &k.add(&k.mul(a, b), &k.mul(a, c))));
    check(k.eq(&k.add(a, b), &k.add(b, a)));
    check(k.eq(&k.mul(a, b), &k.mul(b, a)));
    check(k.add(a, &k.neg(a)).is_zero());
    check(k.eq(&k.mul(a, &k.one()), a));
    if !a.is_zero() {
        check(k.eq(&k.mul(a, &k.inv(a)?), &k.one()));
    }
    let s = k.add(a, b);
    if let (Some(va), Some(vb), Some(vs)) = (a.val(), b.val(), s.val()) {
        check(vs >= va.min(vb));
    }
    let prod = k.mul(a, b);
    if let (Some(va), Some(vb)) = (a.val(), b.val()) {
        check(prod.val() == Some(va + vb));
    }
    Ok((bad, vec![s.val(), prod.val(), k.mul(a, &k.add(b, c)).val()]))
}

fn field_laws() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut rows = Vec::new();
    for (p, f) in [(3u64, 1usize), (2, 2)] {
        let desc = FieldDescriptor { p, f };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + p * 10 + f as u64);
        let triples: Vec<[Raw; 3]> = (0..FIELD_TRIPLES)
            .map(|_| {
                [
                    raw_elem(&mut rng, f, p as i64),
                    raw_elem(&mut rng, f, p as i64),
                    raw_elem(&mut rng, f, p as i64),
                ]
            })
            .collect();
        let mut digests = Vec::new();
        for prec in [16u32, 32] {
            let k = Field::with_precision(desc, prec)?;
            let mut failures = 0;
            let mut digest = Vec::with_capacity(FIELD_TRIPLES);
            for t in &triples {
                let (a, b, c) = (build(&k, &t[0]), build(&k, &t[1]), build(&k, &t[2]));
                let (bad, vals) = law_failures(&k, &a, &b, &c)?;
                failures += bad;
                digest.push(vals);
            }
            let val_p = k.from_i64(p as i64).val().unwrap_or(0) * f as i64;
            let ok = failures == 0 && val_p == desc.e() as i64 * f as i64;
            pass &= ok;
            rows.push(json!({"p": p, "f": f, "precision": prec, "triples": FIELD_TRIPLES,
                             "failures": failures, "valFOfP": val_p}));
            digests.push(digest);
        }
        let same = digests[0] == digests[1];
        pass &= same;
        rows.push(json!({"p": p, "f": f, "valuationsAgreeAcrossPrecisions": same}));
    }
    Ok((pass, json!({"fields": rows})))
}

// C^r norms of indicators.

fn q3() -> Result<Field> {
    Field::new(FieldDescriptor { p: 3, f: 1 })
}

fn disk_indicator_norms() -> Result<(bool, Value)> {
    let k = q3()?;
    let mut pass = true;
    let mut rows = Vec::new();
    for n in 1..=4u32 {
        let f = LocallyPolyFunction::indicator(&k, n, 0);
        for r in [rat(1, 2), rat(1, 1), rat(3, 2)] {
            let expect = LogNorm::q_pow(r * Rational64::from_integer(n as i64 - 1));
            let iv = f.cr_norm(&k, r)?;
            let ok = iv.lower == expect && iv.upper == expect;
            pass &= ok;
            rows.push(json!({"n": n, "r": rational_json(&r), "lower": q_exp(iv.lower),
                             "upper": q_exp(iv.upper), "expected": q_exp(expect), "ok": ok}));
        }
    }
    Ok((pass, json!({"cases": rows})))
}

// Scaling into a disk.

fn random_function(k: &Field, rng: &mut ChaCha8Rng) -> Result<LocallyPolyFunction> {
    let level = rng.gen_range(0..=2u32);
    let deg = rng.gen_range(0..=3i64);
    LocallyPolyFunction::from_fn(k, level, |_, c| {
        let mut coeffs = BTreeMap::new();
        for m in MultiIndex::all_upto(k.f(), deg) {
            if rng.gen_bool(0.7) {
                let floor = rng.gen_range(-1..=2);
                coeffs.insert(m, random_elem(k, rng, floor));
            }
        }
        Ok(LocalPolynomial { center: *c, coeffs })
    })
}

fn disk_scaling() -> Result<(bool, Value)> {
    let k = q3()?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    let mut violations = 0;
    let mut tightest: Option<Rational64> = None;
    for _ in 0..100 {
        let f = random_function(&k, &mut rng)?;
        for r in [rat(1, 2), rat(1, 1), rat(2, 1)] {
            let base = f.cr_norm_upper(&k, r);
            for n in 0..=3u32 {
                let g = f.scale_into_disk(&k, n)?;
                let bound = base.times_q_pow(r * Rational64::from_integer(n as i64));
                let lhs = g.cr_norm_upper(&k, r);
                checks += 1;
                if lhs > bound {
                    violations += 1;
                }
                if let (Some(a), Some(b)) = (lhs.q_exponent(), bound.q_exponent()) {
                    let gap = b - a;
                    tightest = Some(tightest.map_or(gap, |t| t.min(gap)));
                }
            }
        }
    }
    Ok((
        violations == 0,
        json!({"checks": checks, "violations": violations,
               "minimalGapExponent": tightest.map(|t| rational_json(&t))}),
    ))
}

// Order-r criterion.

fn point_mass_orders() -> Result<(bool, Value)> {
    let k = q3()?;
    let all: Vec<usize> = (0..k.f()).collect();
    let d = vec![0; k.f()];
    let level = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rs = [rat(0, 1), rat(1, 2), rat(1, 1), rat(2, 1)];
    let mut satisfied = 0;
    let mut total = 0;
    for _ in 0..20 {
        let a = random_elem(&k, &mut rng, 0);
        let t = MomentTable::dirac(&k, &a, level, 2)?;
        for r in rs {
            let rep = t.order_check(r, &all, &d, LogNorm::one())?;
            total += 1;
            if rep.satisfied == Some(true) {
                satisfied += 1;
            }
        }
    }
    let mut pass = satisfied == total;
    let mut growth = Vec::new();
    for r in rs {
        let s = r.numer().div_euclid(*r.denom()) + 1;
        let t = MomentTable::growth(&k, level, 2, s)?;
        let rep = t.order_check(r, &all, &d, LogNorm::one())?;
        let deepest = rep.deepest_violation.as_ref().map(|w| w.n);
        let ok = rep.satisfied == Some(false) && deepest == Some(level);
        pass &= ok;
        growth.push(json!({"r": rational_json(&r), "s": s, "constant": q_exp(rep.constant),
                           "deepestViolation": rep.deepest_violation.as_ref().map(|w| w.to_json(&k)),
                           "ok": ok}));
    }
    Ok((
        pass,
        json!({"pointMasses": {"checks": total, "satisfied": satisfied}, "growthTables": growth}),
    ))
}

// Upper triangular action.

/// `chi1 = unr(p^-2)`, `chi2 = unr(p)`, `d = 1` on `Q_3`: integral, `r = 2`.
pub fn harness_datum() -> Result<InductionDatum> {
    let k = q3()?;
    let chi1 = Character::unr(&k, k.p_pow(-2));
    let chi2 = Character::unr(&k, k.p_pow(1));
    InductionDatum::new(k, vec![], MultiIndex(vec![1]), chi1, chi2)
}

fn upper_action_identity() -> Result<(bool, Value)> {
    let datum = harness_datum()?;
    let k = datum.k().clone();
    let r = datum.r()?;
    let engine = Engine::new(&datum);
    let tables = (0..20)
        .map(|s| TwoChartDistribution::random(&k, 500 + s, 6, 1, 0))
        .collect::<Result<Vec<_>>>()?;
    let nmax = tables[0].nmax();
    let reps = k.coset_reps(3, false);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut identities, mut failures, mut pointwise, mut pointwise_bad) = (0, 0, 0, 0);
    for n in 0..=4i64 {
        for a in &reps {
            let g = Mat2::upper(&k, k.p_pow(n), *a, k.one());
            for family in [Family::Integral, Family::Outer] {
                for e in [MultiIndex(vec![0]), MultiIndex(vec![1])] {
                    let gen = lattice_generator(&k, family, &e);
                    let acted = gen.act_upper(&datum, &g)?;
                    let plain = match family {
                        Family::Integral => XTerm::disk_moment(*a, n, e.clone(), k.one()),
                        Family::Outer => XTerm::complement_moment(*a, n, e.clone(), k.one()),
                    };
                    let w = Rational64::from_integer(n * e.total()) - Rational64::from_integer(n) * r;
                    let factor = match family {
                        Family::Integral => LogNorm::q_pow(w),
                        Family::Outer => LogNorm::q_pow(-w),
                    };
                    if LogNorm::of(&acted.coeff) != factor {
                        failures += 1;
                    }
                    // The symbolic image against the pointwise action.
                    let gen_fn = TermSum { datum: &datum, terms: vec![gen.clone()] };
                    let img = TermSum { datum: &datum, terms: vec![acted.clone()] };
                    for chart in [Chart::One, Chart::Two] {
                        let floor = rng.gen_range(0..3);
                        let z = random_elem(&k, &mut rng, floor);
                        pointwise += 1;
                        if !k.eq(&act_eval(&datum, &g, &gen_fn, chart, &z)?, &img.eval_chart(chart, &z)?) {
                            pointwise_bad += 1;
                        }
                    }
                    let pieces_acted = pieces_both(&engine, &acted, nmax)?;
                    let pieces_plain = pieces_both(&engine, &plain, nmax)?;
                    for mu in &tables {
                        let lhs = LogNorm::of(&pair_pieces(&k, mu, &pieces_acted)?);
                        let rhs = factor.mul(LogNorm::of(&pair_pieces(&k, mu, &pieces_plain)?));
                        identities += 1;
                        if lhs != rhs {
                            failures += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((
        failures == 0 && pointwise_bad == 0,
        json!({"tables": tables.len(), "identities": identities, "failures": failures,
               "pointwiseChecks": pointwise, "pointwiseMismatches": pointwise_bad}),
    ))
}

type ChartPieces = Vec<(Chart, Vec<Piece>)>;

fn pieces_both(engine: &Engine, t: &XTerm, nmax: u32) -> Result<ChartPieces> {
    [Chart::One, Chart::Two]
        .into_iter()
        .map(|c| Ok((c, engine.pieces(t, c, nmax)?)))
        .collect()
}

fn pair_pieces(k: &Field, mu: &TwoChartDistribution, pieces: &ChartPieces) -> Result<Elem> {
    let mut acc = k.zero();
    for (chart, ps) in pieces {
        let table = mu.table(*chart);
        for p in ps {
            for (m, c) in p.poly.terms() {
                acc = k.add(&acc, &k.mul(c, &table.value(k, p.h, p.idx, m)?));
            }
        }
    }
    Ok(acc)
}

// Equivalence budgets.

pub const HARNESS_SEEDS: u64 = 100;

pub fn harness_range() -> ConditionRange {
    ConditionRange { level: 5, degree: 3, center_depth: 2 }
}

fn equivalence_budgets() -> Result<(bool, Value)> {
    let datum = harness_datum()?;
    let k = datum.k().clone();
    let range = harness_range();
    let budget = BudgetConstants::compute(&datum, &range)?;
    let (mut ab_bad, mut ba_bad) = (0, 0);
    let (mut max_a, mut max_b) = (LogNorm::ZERO, LogNorm::ZERO);
    for seed in 0..HARNESS_SEEDS {
        let mu = TwoChartDistribution::random(&k, seed, 6, 3, 0)?;
        let rep = equivalence_with(&mu, &datum, &range, &budget)?;
        ab_bad += usize::from(!rep.ab_holds);
        ba_bad += usize::from(!rep.ba_holds);
        max_a = max_a.max(rep.c_a);
        max_b = max_b.max(rep.c_b);
    }
    Ok((
        ab_bad == 0 && ba_bad == 0,
        json!({"seeds": HARNESS_SEEDS, "range": range.to_json(), "budget": budget.to_json(),
               "violationsAtoB": ab_bad, "violationsBtoA": ba_bad,
               "maxC_A": q_exp(max_a), "maxC_B": q_exp(max_b)}),
    ))
}

// Collapse.

/// `chi1 = unr(p)`, `chi2 = unr(1/p)`, `d = 0` on `Q_3`.
pub fn collapse_datum() -> Result<InductionDatum> {
    let k = q3()?;
    let chi1 = Character::unr(&k, k.p_pow(1));
    let chi2 = Character::unr(&k, k.p_pow(-1));
    InductionDatum::new(k, vec![], MultiIndex(vec![0]), chi1, chi2)
}

fn collapse_certificates() -> Result<(bool, Value)> {
    let datum = collapse_datum()?;
    let k = datum.k().clone();
    let s = datum.inequality_value()?.to_integer();
    let mut pass = true;
    let mut rows = Vec::new();
    for t in 1..=4i64 {
        let target = CollapseTarget { lambda: k.p_pow(-t), n: 0, i: MultiIndex(vec![0]) };
        let cert = nullity_collapse(&datum, &target, 10_000)?;
        let v = cert.verify(&datum, 30, 70 + t as u64)?;
        let m = refinement_depth(-t, 0, s);
        let expected = k.q().pow(m as u32) as usize;
        let ok = v.ok() && cert.m == m && cert.terms.len() == expected;
        pass &= ok;
        rows.push(json!({"t": t, "m": cert.m, "terms": cert.terms.len(), "expectedTerms": expected,
                         "points": v.points, "mismatches": v.mismatches,
                         "minCoeffValuation": v.min_coeff_val, "ok": ok}));
    }
    Ok((pass, json!({"slope": s, "targets": rows})))
}

// Template analyzer.

struct TemplateCase {
    p: u64,
    f: usize,
    alpha: i64,
    alpha_tilde: i64,
    weights: Vec<i64>,
    j1: Vec<usize>,
    j2: Vec<usize>,
    /// Hand values of the two conditions, `r` and the enlarged set.
    expect: (i64, i64, i64, Vec<usize>),
}

fn template_cases() -> Vec<TemplateCase> {
    let case = |p, f, alpha, alpha_tilde, weights: &[i64], j1: &[usize], j2: &[usize], expect| TemplateCase {
        p,
        f,
        alpha,
        alpha_tilde,
        weights: weights.to_vec(),
        j1: j1.to_vec(),
        j2: j2.to_vec(),
        expect,
    };
    vec![
        case(3, 1, 0, 1, &[2], &[], &[], (0, 0, 0, vec![0])),
        case(3, 1, 1, 2, &[4], &[], &[], (0, 1, 1, vec![0])),
        case(3, 1, 0, 5, &[2], &[], &[], (-4, -4, 0, vec![0])),
        case(2, 2, 1, 1, &[3, 3], &[], &[], (0, 2, 2, vec![])),
        case(2, 2, 1, 1, &[3, 3], &[0, 1], &[0, 1], (0, -2, -2, vec![0, 1])),
    ]
}

fn template_analyzer() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut failing_cases = 0;
    let mut rows = Vec::new();
    for c in template_cases() {
        let k = Field::new(FieldDescriptor { p: c.p, f: c.f })?;
        let params = TemplateParams::new(
            k.clone(),
            k.p_pow(c.alpha),
            k.p_pow(c.alpha_tilde),
            c.weights.clone(),
            c.j1.clone(),
            c.j2.clone(),
        )?;
        let an = params.analyze();
        let got = (
            an.first.to_integer(),
            an.second.to_integer(),
            an.r.to_integer(),
            an.j3.clone(),
        );
        let ok = got == c.expect && an.consistent() != Some(false);
        pass &= ok;
        if !an.first_holds() || !an.second_holds() {
            failing_cases += 1;
        }
        rows.push(json!({"analysis": an.to_json(), "matchesHand": ok}));
    }
    pass &= failing_cases >= 1;
    Ok((pass, json!({"cases": rows, "failingCases": failing_cases})))
}
