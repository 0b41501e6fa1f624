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


//! Explicit lattice certificates showing that arbitrarily large multiples
//! of `1_{D(0, n)} x^i` lie in the lattice when `val(chi2(p)) + |d| < 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::chars::MultiIndex;
use crate::dist::random_elem;
use crate::field::{Elem, Field};
use crate::pone::action::{
    act_eval, lattice_generator, Chart, ChartEval, Family, Mat2, Region, Shape, TermSum, XTerm,
};
use crate::pone::datum::InductionDatum;
use crate::{Error, Result};

/// `lambda * 1_{D(0, n)} x^i`.
#[derive(Clone, Debug)]
pub struct CollapseTarget {
    pub lambda: Elem,
    pub n: i64,
    pub i: MultiIndex,
}

impl CollapseTarget {
    pub fn term(&self, k: &Field) -> XTerm {
        XTerm {
            coeff: self.lambda,
            region: Region::Disk { c: k.zero(), m: self.n },
            center: k.zero(),
            shape: Shape::Plain,
            k: self.i.clone(),
        }
    }
}

/// `coeff * g * generator`.
#[derive(Clone, Debug)]
pub struct CertificateTerm {
    pub coeff: Elem,
    pub g: Mat2,
    pub family: Family,
    pub k: MultiIndex,
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub target: CollapseTarget,
    pub terms: Vec<CertificateTerm>,
    /// Refinement depth `m` chosen for the top target.
    pub m: i64,
    /// Deepest recursion level reached.
    pub depth: usize,
}

/// `val(chi2(p)) + |d|`.
fn slope(datum: &InductionDatum) -> Result<i64> {
    let s = datum.inequality_value()?;
    Ok(s.to_integer())
}

/// Smallest `m >= 1` with `w(lambda) - (n + m) s > 0`.
pub fn refinement_depth(w_lambda: i64, n: i64, s: i64) -> i64 {
    let mut m = 1;
    while w_lambda - (n + m) * s <= 0 {
        m += 1;
    }
    m
}

struct Builder<'a> {
    datum: &'a InductionDatum,
    s: i64,
    budget: usize,
    terms: Vec<CertificateTerm>,
    depth: usize,
}

impl Builder<'_> {
    fn run(&mut self, prefix: &Mat2, lambda: &Elem, n: i64, i: &MultiIndex, level: usize) -> Result<i64> {
        let k = self.datum.k();
        self.depth = self.depth.max(level);
        if lambda.is_zero() {
            return Ok(0);
        }
        let m = refinement_depth(lambda.val().unwrap(), n, self.s);
        let e = n + m;
        let c_e = k.mul(
            &self.datum.chi2.eval(k, &k.p_pow(e))?,
            &k.p_pow(e * self.datum.d.total()),
        );
        let top = k.div(&k.mul(lambda, &k.monomial(&k.p_pow(e), &i.0)?), &c_e)?;
        for a in k.coset_reps(m as u32, false) {
            let b = k.mul(&k.p_pow(n), &a);
            if self.terms.len() >= self.budget {
                return Err(Error::BudgetExhausted(format!(
                    "more than {} terms needed",
                    self.budget
                )));
            }
            let g = prefix.mul(k, &Mat2::upper(k, k.p_pow(e), b, k.one()));
            self.terms.push(CertificateTerm {
                coeff: top,
                g,
                family: Family::Integral,
                k: i.clone(),
            });
            let shifted = prefix.mul(k, &Mat2::upper(k, k.one(), b, k.one()));
            for low in MultiIndex::all_in_box(&i.0, i.total()) {
                if low == *i {
                    continue;
                }
                let c = k.mul(
                    &k.mul(lambda, &k.from_i64(i.binom(&low) as i64)),
                    &k.monomial(&b, &i.sub(&low).0)?,
                );
                self.run(&shifted, &c, e, &low, level + 1)?;
            }
        }
        Ok(m)
    }
}

/// Writes `lambda * 1_{D(0, n)} x^i` as an integral combination of
/// translates of `1_{O_F} x^k` under upper triangular matrices.
pub fn nullity_collapse(datum: &InductionDatum, target: &CollapseTarget, budget: usize) -> Result<Certificate> {
    let k = datum.k();
    let s = slope(datum)?;
    if s >= 0 {
        return Err(Error::Precondition("need val(chi2(p)) + |d| < 0".into()));
    }
    if target.n < 0 {
        return Err(Error::Precondition("target disk must lie in O_F".into()));
    }
    if !target.i.is_nonneg() || target.i.len() != k.f() {
        return Err(Error::Precondition("target exponent must be a nonnegative multi-index".into()));
    }
    let mut b = Builder {
        datum,
        s,
        budget,
        terms: Vec::new(),
        depth: 0,
    };
    let m = b.run(&Mat2::identity(k), &target.lambda, target.n, &target.i, 0)?;
    Ok(Certificate {
        target: target.clone(),
        terms: b.terms,
        m,
        depth: b.depth,
    })
}

/// The combination as a lazily evaluated function.
struct CertificateSum<'a> {
    datum: &'a InductionDatum,
    cert: &'a Certificate,
}

impl ChartEval for CertificateSum<'_> {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem> {
        let k = self.datum.k();
        let mut acc = k.zero();
        for t in &self.cert.terms {
            let gen = TermSum {
                datum: self.datum,
                terms: vec![lattice_generator(k, t.family, &t.k)],
            };
            let v = act_eval(self.datum, &t.g, &gen, chart, z)?;
            acc = k.add(&acc, &k.mul(&t.coeff, &v));
        }
        Ok(acc)
    }
}

/// Outcome of evaluating a certificate against its target.
#[derive(Clone, Debug)]
pub struct Verification {
    pub points: usize,
    pub mismatches: usize,
    pub all_integral: bool,
    pub min_coeff_val: Option<i64>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.mismatches == 0 && self.all_integral
    }
}

impl Certificate {
    /// Compares both sides at `points` random points of each chart.
    pub fn verify(&self, datum: &InductionDatum, points: usize, seed: u64) -> Result<Verification> {
        let k = datum.k();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lhs = CertificateSum { datum, cert: self };
        let target = TermSum {
            datum,
            terms: vec![self.target.term(k)],
        };
        let mut mismatches = 0;
        for chart in [Chart::One, Chart::Two] {
            for j in 0..points {
                // Spread the points over several valuations.
                let z = random_elem(k, &mut rng, (j % 4) as i64);
                if z.is_zero() {
                    continue;
                }
                let a = lhs.eval_chart(chart, &z)?;
                let b = target.eval_chart(chart, &z)?;
                if !k.eq(&a, &b) {
                    mismatches += 1;
                }
            }
        }
        let vals: Vec<i64> = self.terms.iter().filter_map(|t| t.coeff.val()).collect();
        Ok(Verification {
            points: 2 * points,
            mismatches,
            all_integral: vals.iter().all(|&v| v >= 0),
            min_coeff_val: vals.iter().copied().min(),
        })
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!({
            "target": {
                "lambda": k.to_json(&self.target.lambda),
                "n": self.target.n,
                "i": self.target.i.to_json(),
            },
            "m": self.m,
            "depth": self.depth,
            "count": self.terms.len(),
            "terms": self.terms.iter().map(|t| json!({
                "coeff": k.to_json(&t.coeff),
                "matrix": t.g.to_json(k),
                "generator": {"family": t.family.name(), "k": t.k.to_json()},
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<Certificate> {
        let bad = |m: &str| Error::Parse(format!("certificate: {m}"));
        let t = v.get("target").ok_or_else(|| bad("missing target"))?;
        let target = CollapseTarget {
            lambda: k.from_json(t.get("lambda").ok_or_else(|| bad("missing lambda"))?)?,
            n: t.get("n").and_then(Value::as_i64).ok_or_else(|| bad("missing n"))?,
            i: MultiIndex::from_json(t.get("i").ok_or_else(|| bad("missing i"))?, k.f())?,
        };
        let mut terms = Vec::new();
        for e in v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))? {
            let gen = e.get("generator").ok_or_else(|| bad("missing generator"))?;
            let family = match gen.get("family").and_then(Value::as_str) {
                Some("integral") => Family::Integral,
                Some("outer") => Family::Outer,
                _ => return Err(bad("unknown generator family")),
            };
            terms.push(CertificateTerm {
                coeff: k.from_json(e.get("coeff").ok_or_else(|| bad("missing coeff"))?)?,
                g: Mat2::from_json(k, e.get("matrix").ok_or_else(|| bad("missing matrix"))?)?,
                family,
                k: MultiIndex::from_json(gen.get("k").ok_or_else(|| bad("missing k"))?, k.f())?,
            });
        }
        Ok(Certificate {
            target,
            terms,
            m: v.get("m").and_then(Value::as_i64).unwrap_or(0),
            depth: v.get("depth").and_then(Value::as_u64).unwrap_or(0) as usize,
        })
    }
}
