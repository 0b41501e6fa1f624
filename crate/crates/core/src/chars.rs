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

//! Multi-indices over the embeddings and characters `F^x -> E^x` of the form
//! unramified x algebraic x finite smooth.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde_json::{json, Map, Value};

use crate::field::{Elem, Field, LogNorm};
use crate::funcspace::LocalPolynomial;
use crate::{Error, Result};

/// Default truncation degree for local expansions.
pub const DEFAULT_EXPANSION_DEGREE: i64 = 8;

/// Exponents indexed by the embeddings `sigma = 0..f`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<i64>);

/// Generalized binomial coefficient `n choose k` for `n` in Z, `k >= 0`.
pub fn binom(n: i64, k: i64) -> i128 {
    if k < 0 {
        return 0;
    }
    let mut r: i128 = 1;
    for i in 0..k as i128 {
        r = r * (n as i128 - i) / (i + 1);
    }
    r
}

fn falling(n: i64, k: i64) -> i128 {
    (0..k as i128).map(|i| n as i128 - i).product()
}

impl MultiIndex {
    pub fn zero(f: usize) -> MultiIndex {
        MultiIndex(vec![0; f])
    }

    /// `k * e_sigma`.
    pub fn unit(f: usize, sigma: usize, k: i64) -> MultiIndex {
        let mut v = vec![0; f];
        v[sigma] = k;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|m| = sum_sigma m_sigma`.
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn is_nonneg(&self) -> bool {
        self.0.iter().all(|&x| x >= 0)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }

    /// `prod_sigma binom(self_sigma, k_sigma)`.
    pub fn binom(&self, k: &MultiIndex) -> i128 {
        self.0.iter().zip(&k.0).map(|(&n, &k)| binom(n, k)).product()
    }

    /// `prod_sigma self_sigma (self_sigma - 1) ... (self_sigma - i_sigma + 1)`.
    pub fn falling(&self, i: &MultiIndex) -> i128 {
        self.0.iter().zip(&i.0).map(|(&n, &k)| falling(n, k)).product()
    }

    pub fn factorial(&self) -> i128 {
        self.falling(self)
    }

    /// Nonnegative multi-indices with `|m| <= d`, graded then lexicographic.
    pub fn all_upto(f: usize, d: i64) -> Vec<MultiIndex> {
        MultiIndex::all_in_box(&vec![d.max(0); f], d)
    }

    /// Nonnegative multi-indices with `m <= caps` and `|m| <= d`.
    pub fn all_in_box(caps: &[i64], d: i64) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::new())];
        for &c in caps {
            let mut next = Vec::new();
            for m in &out {
                for k in 0..=c.max(-1) {
                    let mut v = m.0.clone();
                    v.push(k);
                    next.push(MultiIndex(v));
                }
            }
            out = next;
        }
        out.retain(|m| m.total() <= d);
        out.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| a.cmp(b)));
        out
    }

    pub fn to_json(&self) -> Value {
        json!(self.0)
    }

    pub fn from_json(v: &Value, f: usize) -> Result<MultiIndex> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Parse("multi-index must be a list".into()))?;
        let m: Option<Vec<i64>> = arr.iter().map(Value::as_i64).collect();
        let m = m.ok_or_else(|| Error::Parse("multi-index entries must be integers".into()))?;
        if m.len() != f {
            return Err(Error::Parse(format!("multi-index must have {f} entries")));
        }
        Ok(MultiIndex(m))
    }
}

/// Finite-order character of `(O_F / p^c)^x`, keyed by coset index.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothPart {
    pub conductor: u32,
    pub table: BTreeMap<u64, Elem>,
}

impl SmoothPart {
    pub fn trivial() -> SmoothPart {
        SmoothPart {
            conductor: 0,
            table: BTreeMap::new(),
        }
    }

    pub fn is_trivial(&self, k: &Field) -> bool {
        self.table.values().all(|v| k.eq(v, &k.one()))
    }

    /// Value on the unit with coset index `idx` at any level `>= conductor`.
    fn value(&self, k: &Field, idx: u64) -> Result<Elem> {
        if self.conductor == 0 {
            return Ok(k.one());
        }
        let i = idx % k.q().pow(self.conductor);
        self.table
            .get(&i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("smooth table has no entry for coset {i}")))
    }
}

/// `x -> lambda^{val_F(x)} * prod sigma(u)^{a_sigma} * smooth(u)` for
/// `x = p^w u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub lambda: Elem,
    pub alg: MultiIndex,
    pub smooth: SmoothPart,
    pub j: Vec<usize>,
}

impl Character {
    pub fn trivial(k: &Field) -> Character {
        Character::unr(k, k.one())
    }

    pub fn unr(k: &Field, lambda: Elem) -> Character {
        Character {
            lambda,
            alg: MultiIndex::zero(k.f()),
            smooth: SmoothPart::trivial(),
            j: Vec::new(),
        }
    }

    /// `prod_sigma sigma^{a_sigma}`.
    pub fn algebraic(k: &Field, alg: &[i64]) -> Character {
        Character {
            alg: MultiIndex(alg.to_vec()),
            ..Character::trivial(k)
        }
    }

    pub fn with_smooth(mut self, smooth: SmoothPart) -> Character {
        self.smooth = smooth;
        self
    }

    /// Checks shape, unit smooth values and multiplicativity of the table.
    pub fn validate(&self, k: &Field) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if self.alg.len() != k.f() {
            return bad(format!("algExp must have {} entries", k.f()));
        }
        if self.lambda.is_zero() {
            return bad("lambda must be nonzero".into());
        }
        if self.j.iter().any(|&s| s >= k.f()) {
            return bad("J contains an embedding index out of range".into());
        }
        let c = self.smooth.conductor;
        if c == 0 {
            if !self.smooth.table.is_empty() {
                return bad("conductor 0 smooth part must have an empty table".into());
            }
            return Ok(());
        }
        let q = k.q();
        let units: Vec<u64> = (0..q.pow(c)).filter(|i| i % q != 0).collect();
        if self.smooth.table.len() != units.len() {
            return bad("smooth table must list every unit coset".into());
        }
        for i in &units {
            let v = self.smooth.value(k, *i)?;
            if v.val() != Some(0) {
                return bad("smooth values must be units".into());
            }
        }
        for &a in &units {
            for &b in &units {
                let prod = k.mul(&k.coset_rep(c, a), &k.coset_rep(c, b));
                let ab = k.coset_index(&prod, c)?;
                let lhs = self.smooth.value(k, ab)?;
                let rhs = k.mul(&self.smooth.value(k, a)?, &self.smooth.value(k, b)?);
                if !k.eq(&lhs, &rhs) {
                    return bad(format!("smooth table not multiplicative at ({a},{b})"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, k: &Field, x: &Elem) -> Result<Elem> {
        let x = k.require_nonzero(x)?;
        let w = x.val().unwrap();
        let u = k.unit_part(&x)?;
        let mut v = k.pow(&self.lambda, w * k.f() as i64)?;
        v = k.mul(&v, &k.monomial(&u, &self.alg.0)?);
        if self.smooth.conductor > 0 {
            let idx = k.coset_index(&u, self.smooth.conductor)?;
            v = k.mul(&v, &self.smooth.value(k, idx)?);
        }
        Ok(v)
    }

    /// `val_{Q_p}(chi(p))`.
    pub fn val_p(&self, k: &Field) -> Result<Rational64> {
        let v = self.eval(k, &k.p_pow(1))?;
        let w = k.require_nonzero(&v)?.val().unwrap();
        Ok(Rational64::from_integer(w))
    }

    pub fn mul(&self, k: &Field, other: &Character) -> Result<Character> {
        let c = self.smooth.conductor.max(other.smooth.conductor);
        let mut table = BTreeMap::new();
        if c > 0 {
            let q = k.q();
            for i in (0..q.pow(c)).filter(|i| i % q != 0) {
                let v = k.mul(&self.smooth.value(k, i)?, &other.smooth.value(k, i)?);
                table.insert(i, v);
            }
        }
        let mut j = self.j.clone();
        j.extend(other.j.iter().copied());
        j.sort_unstable();
        j.dedup();
        Ok(Character {
            lambda: k.mul(&self.lambda, &other.lambda),
            alg: self.alg.add(&other.alg),
            smooth: SmoothPart {
                conductor: c,
                table,
            },
            j,
        })
    }

    pub fn inv(&self, k: &Field) -> Result<Character> {
        let mut table = BTreeMap::new();
        for (i, v) in &self.smooth.table {
            table.insert(*i, k.inv(v)?);
        }
        Ok(Character {
            lambda: k.inv(&self.lambda)?,
            alg: self.alg.neg(),
            smooth: SmoothPart {
                conductor: self.smooth.conductor,
                table,
            },
            j: self.j.clone(),
        })
    }

    /// `self * other^-1`.
    pub fn ratio(&self, k: &Field, other: &Character) -> Result<Character> {
        self.mul(k, &other.inv(k)?)
    }

    /// Whether the smooth part is identically 1.
    pub fn is_tamely_unramified(&self, k: &Field) -> bool {
        self.smooth.is_trivial(k)
    }

    /// Smallest `l >= 1` such that the smooth part is constant on every
    /// disk `D(a, l)` with `a` a unit.
    pub fn analyticity_level(&self, k: &Field) -> u32 {
        let c = self.smooth.conductor;
        let q = k.q();
        for l in 1..c.max(1) {
            let ql = q.pow(l);
            let constant = (0..q.pow(c)).filter(|i| i % q != 0).all(|i| {
                let base = i % ql;
                let a = self.smooth.value(k, i).unwrap();
                let b = self.smooth.value(k, base).unwrap();
                k.eq(&a, &b)
            });
            if constant {
                return l;
            }
        }
        c.max(1)
    }

    /// Smallest `n0 >= 1` such that the smooth part is constant on `D(1, n0)`.
    pub fn analyticity_level_at_1(&self, k: &Field) -> u32 {
        let c = self.smooth.conductor;
        let q = k.q();
        for l in 1..c.max(1) {
            let ql = q.pow(l);
            let one = self.smooth.value(k, 1).unwrap();
            let constant = (0..q.pow(c))
                .filter(|i| i % ql == 1)
                .all(|i| k.eq(&self.smooth.value(k, i).unwrap(), &one));
            if constant {
                return l;
            }
        }
        c.max(1)
    }

    /// Expansion `chi(z) = sum_m b_m (z - a)^m` on `D(a, n)` truncated at total
    /// degree `degree`, with a bound on the omitted part in the `F_n` norm.
    pub fn local_expansion(
        &self,
        k: &Field,
        a: &Elem,
        n: u32,
        degree: i64,
    ) -> Result<(LocalPolynomial, LogNorm)> {
        if a.val() != Some(0) {
            return Err(Error::Domain("expansion center must be a unit".into()));
        }
        let l = self.analyticity_level(k);
        if n < l {
            return Err(Error::InsufficientLevel(format!(
                "level {n} below analyticity level {l}"
            )));
        }
        let chi_a = self.eval(k, a)?;
        let inv_images: Vec<Elem> = (0..k.f())
            .map(|s| k.inv(&k.frobenius(a, s)))
            .collect::<Result<_>>()?;
        let mut coeffs = BTreeMap::new();
        for m in MultiIndex::all_upto(k.f(), degree) {
            let b = self.alg.binom(&m);
            if b == 0 {
                continue;
            }
            let mut c = k.mul(&chi_a, &k.from_i64(b as i64));
            for (s, &ms) in m.0.iter().enumerate() {
                if ms > 0 {
                    c = k.mul(&c, &k.pow(&inv_images[s], ms)?);
                }
            }
            coeffs.insert(m, c);
        }
        let exact = self.alg.is_nonneg() && self.alg.total() <= degree;
        let tail = if exact {
            LogNorm::ZERO
        } else {
            LogNorm::of(&chi_a).times_q_pow(Rational64::from_integer(-(n as i64) * (degree + 1)))
        };
        Ok((
            LocalPolynomial {
                center: *a,
                coeffs,
            },
            tail,
        ))
    }

    pub fn to_json(&self, k: &Field) -> Value {
        let mut table = Map::new();
        for (i, v) in &self.smooth.table {
            table.insert(k.coset_key(self.smooth.conductor, *i), k.to_json(v));
        }
        json!({
            "lambda": k.to_json(&self.lambda),
            "algExp": self.alg.0,
            "smooth": {"conductor": self.smooth.conductor, "table": table},
            "J": self.j,
        })
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<Character> {
        let bad = |m: &str| Error::Parse(format!("character: {m}"));
        let lambda = k.from_json(v.get("lambda").ok_or_else(|| bad("missing lambda"))?)?;
        let alg = match v.get("algExp") {
            Some(a) => MultiIndex::from_json(a, k.f())?,
            None => MultiIndex::zero(k.f()),
        };
        let mut smooth = SmoothPart::trivial();
        if let Some(s) = v.get("smooth") {
            let c = s
                .get("conductor")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad("smooth.conductor must be an integer"))?;
            smooth.conductor = c as u32;
            if let Some(t) = s.get("table").and_then(Value::as_object) {
                for (key, val) in t {
                    let (lvl, idx) = k.parse_coset_key(key)?;
                    if lvl != smooth.conductor {
                        return Err(bad("smooth table keys must have conductor length"));
                    }
                    smooth.table.insert(idx, k.from_json(val)?);
                }
            }
        }
        let j = match v.get("J") {
            Some(j) => parse_index_set(j)?,
            None => Vec::new(),
        };
        let chi = Character {
            lambda,
            alg,
            smooth,
            j,
        };
        chi.validate(k)?;
        Ok(chi)
    }
}

pub fn parse_index_set(v: &Value) -> Result<Vec<usize>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse("index set must be a list".into()))?;
    let mut out: Vec<usize> = arr
        .iter()
        .map(|x| x.as_u64().map(|x| x as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Parse("index set entries must be nonnegative integers".into()))?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldDescriptor;

    fn q3() -> Field {
        Field::with_precision(FieldDescriptor { p: 3, f: 1 }, 8).unwrap()
    }

    /// `u -> (-1)^((u-1)/2)` on Z_2^x, of conductor 2.
    fn mod_four(k: &Field) -> Character {
        let mut table = BTreeMap::new();
        table.insert(1, k.one());
        table.insert(3, k.from_i64(-1));
        Character::trivial(k).with_smooth(SmoothPart {
            conductor: 2,
            table,
        })
    }

    #[test]
    fn trivial_character_is_one() {
        let k = q3();
        let chi = Character::trivial(&k);
        assert!(k.eq(&chi.eval(&k, &k.from_i64(12)).unwrap(), &k.one()));
        assert_eq!(chi.val_p(&k).unwrap(), Rational64::from_integer(0));
        assert_eq!(chi.analyticity_level(&k), 1);
    }

    #[test]
    fn unramified_on_p_is_lambda() {
        let k = q3();
        let lambda = k.from_i64(7);
        let chi = Character::unr(&k, lambda);
        assert!(k.eq(&chi.eval(&k, &k.p_pow(1)).unwrap(), &lambda));
    }

    #[test]
    fn algebraic_square_on_four() {
        let k = q3();
        let chi = Character::algebraic(&k, &[2]);
        assert!(k.eq(&chi.eval(&k, &k.from_i64(4)).unwrap(), &k.from_i64(16)));
    }

    #[test]
    fn val_p_of_worked_example_characters() {
        let k = q3();
        // unr(p * alpha~^-1) with alpha~ = p, times sigma^0.
        let chi2 = Character::unr(&k, k.one());
        assert_eq!(chi2.val_p(&k).unwrap(), Rational64::from_integer(0));
        let chi1 = Character::unr(&k, k.inv(&k.one()).unwrap());
        assert_eq!(-chi1.val_p(&k).unwrap(), Rational64::from_integer(0));
    }

    #[test]
    fn expansion_of_identity_and_square() {
        let k = q3();
        let (lin, tail) = Character::algebraic(&k, &[1])
            .local_expansion(&k, &k.from_i64(4), 1, 8)
            .unwrap();
        assert!(tail.is_zero());
        assert_eq!(lin.coeffs.len(), 2);
        let (sq, _) = Character::algebraic(&k, &[2])
            .local_expansion(&k, &k.one(), 1, 4)
            .unwrap();
        let got: Vec<i64> = (0..4)
            .map(|d| {
                sq.coeffs
                    .get(&MultiIndex(vec![d]))
                    .map_or(0, |c| if k.eq(c, &k.from_i64(2)) { 2 } else { 1 })
            })
            .collect();
        assert_eq!(got, vec![1, 2, 1, 0]);
    }

    #[test]
    fn conductor_two_level() {
        let k = Field::with_precision(FieldDescriptor { p: 2, f: 1 }, 8).unwrap();
        let chi = mod_four(&k);
        chi.validate(&k).unwrap();
        assert_eq!(chi.analyticity_level(&k), 2);
        assert_eq!(chi.analyticity_level_at_1(&k), 2);
        assert!(k.eq(&chi.eval(&k, &k.from_i64(7)).unwrap(), &k.from_i64(-1)));
        assert!(k.eq(&chi.eval(&k, &k.from_i64(20)).unwrap(), &k.one()));
        assert!(Character::algebraic(&k, &[3]).analyticity_level_at_1(&k) == 1);
    }

    #[test]
    fn expansion_needs_unit_center() {
        let k = q3();
        let err = Character::algebraic(&k, &[1])
            .local_expansion(&k, &k.from_i64(3), 1, 4)
            .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
