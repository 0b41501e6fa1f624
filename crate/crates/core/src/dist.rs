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

//! Distributions on `O_F` as finite tables of disk moments.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::chars::{Character, MultiIndex};
use crate::field::{Elem, Field, LogNorm};
use crate::funcspace::LocallyPolyFunction;
use crate::{Error, Result};

/// Moments `mu(1_{D(a,n)} (z - a)^m)` for canonical `a`, `n <= nmax`, `|m| <= mmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub nmax: u32,
    pub mmax: i64,
    /// Graded order of the stored exponents.
    pub degs: Vec<MultiIndex>,
    /// `values[n][coset index][position in degs]`.
    pub values: Vec<Vec<Vec<Elem>>>,
}

/// A node where the refinement identity fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub n: u32,
    pub idx: u64,
    pub m: MultiIndex,
}

/// A table node `(a, n, m)` by coset index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub n: u32,
    pub idx: u64,
    pub m: MultiIndex,
}

impl Witness {
    pub fn to_json(&self, k: &Field) -> Value {
        json!({"a": k.coset_key(self.n, self.idx), "n": self.n, "m": self.m.to_json()})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvvReport {
    pub constant: LogNorm,
    pub witness: Option<Witness>,
    pub satisfied: Option<bool>,
    /// Deepest node exceeding the budget, when a budget was given.
    pub deepest_violation: Option<Witness>,
    pub range: (u32, i64),
}

impl AvvReport {
    pub fn to_json(&self, k: &Field) -> Value {
        json!({
            "constant": self.constant.to_json(),
            "witness": self.witness.as_ref().map(|w| w.to_json(k)),
            "satisfied": self.satisfied,
            "deepestViolation": self.deepest_violation.as_ref().map(|w| w.to_json(k)),
            "range": {"Nmax": self.range.0, "Mmax": self.range.1, "scope": "stored range"},
        })
    }
}

/// Whether `m` obeys the caps `m_sigma <= d_sigma` off `J`.
pub fn respects_caps(m: &MultiIndex, j: &[usize], d: &[i64]) -> bool {
    m.0.iter()
        .enumerate()
        .all(|(s, &e)| j.contains(&s) || e <= d[s])
}

/// A uniformly random element with valuation at least `floor`.
pub fn random_elem(k: &Field, rng: &mut ChaCha8Rng, floor: i64) -> Elem {
    let n = k.precision();
    let modulus = (k.p() as i64).pow(n);
    let coeffs: Vec<i64> = (0..k.f()).map(|_| rng.gen_range(0..modulus)).collect();
    k.mul(&k.from_poly(&coeffs), &k.p_pow(floor))
}

impl MomentTable {
    fn empty(k: &Field, nmax: u32, mmax: i64) -> MomentTable {
        let degs = MultiIndex::all_upto(k.f(), mmax);
        let values = (0..=nmax)
            .map(|n| vec![vec![k.zero(); degs.len()]; k.q().pow(n) as usize])
            .collect();
        MomentTable {
            nmax,
            mmax,
            degs,
            values,
        }
    }

    /// The all-zero table.
    pub fn zero(k: &Field, nmax: u32, mmax: i64) -> MomentTable {
        MomentTable::empty(k, nmax, mmax)
    }

    fn pos(&self, m: &MultiIndex) -> Option<usize> {
        if m.total() > self.mmax || !m.is_nonneg() {
            return None;
        }
        self.degs.iter().position(|d| d == m)
    }

    fn coverage(&self, k: &Field, n: u32, idx: u64, m: &MultiIndex) -> Error {
        Error::Coverage {
            a: if n <= self.nmax {
                k.coset_key(n, idx)
            } else {
                format!("index {idx}")
            },
            n: n as i64,
            m: m.0.clone(),
        }
    }

    /// Stored moment at the canonical center.
    pub fn value(&self, k: &Field, n: u32, idx: u64, m: &MultiIndex) -> Result<Elem> {
        match (n <= self.nmax, self.pos(m)) {
            (true, Some(p)) => Ok(self.values[n as usize][idx as usize][p]),
            _ => Err(self.coverage(k, n, idx, m)),
        }
    }

    /// `mu(1_{D(a,n)} (z - a)^m)` for any `a` in `O_F`.
    pub fn moment_at(&self, k: &Field, a: &Elem, n: u32, m: &MultiIndex) -> Result<Elem> {
        let idx = if n <= self.nmax {
            k.coset_index(a, n)?
        } else {
            0
        };
        if n > self.nmax || self.pos(m).is_none() {
            return Err(self.coverage(k, n, idx, m));
        }
        let c = k.coset_rep(n, idx);
        let shift = k.sub(&c, a);
        let row = &self.values[n as usize][idx as usize];
        let mut acc = k.zero();
        for j in MultiIndex::all_in_box(&m.0, m.total()) {
            let v = row[self.pos(&j).unwrap()];
            if v.is_zero() {
                continue;
            }
            let b = k.from_i64(m.binom(&j) as i64);
            acc = k.add(&acc, &k.mul(&k.mul(&b, &k.monomial(&shift, &m.sub(&j).0)?), &v));
        }
        Ok(acc)
    }

    /// The refinement identity applied to the children of `(n, idx)`.
    fn children_sum(&self, k: &Field, n: u32, idx: u64) -> Result<Vec<Elem>> {
        let a = k.coset_rep(n, idx);
        let qn = k.q().pow(n);
        let mut out = vec![k.zero(); self.degs.len()];
        for digit in 0..k.q() {
            let child = idx + digit * qn;
            let b = k.coset_rep(n + 1, child);
            let shift = k.sub(&b, &a);
            let row = &self.values[n as usize + 1][child as usize];
            for (pm, m) in self.degs.iter().enumerate() {
                for j in MultiIndex::all_in_box(&m.0, m.total()) {
                    let v = row[self.pos(&j).unwrap()];
                    if v.is_zero() {
                        continue;
                    }
                    let c = k.mul(
                        &k.from_i64(m.binom(&j) as i64),
                        &k.monomial(&shift, &m.sub(&j).0)?,
                    );
                    out[pm] = k.add(&out[pm], &k.mul(&c, &v));
                }
            }
        }
        Ok(out)
    }

    /// Fills every shallower level from the deepest one.
    pub fn fill_upward(&mut self, k: &Field) -> Result<()> {
        for n in (0..self.nmax).rev() {
            for idx in 0..k.q().pow(n) {
                let row = self.children_sum(k, n, idx)?;
                self.values[n as usize][idx as usize] = row;
            }
        }
        Ok(())
    }

    /// Builds a table from its deepest level.
    pub fn from_deepest(
        k: &Field,
        nmax: u32,
        mmax: i64,
        mut deepest: impl FnMut(u64, &MultiIndex) -> Result<Elem>,
    ) -> Result<MomentTable> {
        let mut t = MomentTable::empty(k, nmax, mmax);
        for idx in 0..k.q().pow(nmax) {
            for (pm, m) in t.degs.clone().iter().enumerate() {
                t.values[nmax as usize][idx as usize][pm] = deepest(idx, m)?;
            }
        }
        t.fill_upward(k)?;
        Ok(t)
    }

    /// Nodes whose stored moments differ from the aggregate of the deepest level.
    pub fn consistency_check(&self, k: &Field) -> Result<Vec<Violation>> {
        let mut want = self.clone();
        want.fill_upward(k)?;
        let mut bad = Vec::new();
        for n in 0..self.nmax {
            for idx in 0..k.q().pow(n) {
                for (pm, m) in self.degs.iter().enumerate() {
                    let (w, v) = (
                        &want.values[n as usize][idx as usize][pm],
                        &self.values[n as usize][idx as usize][pm],
                    );
                    if !k.eq(w, v) {
                        bad.push(Violation {
                            n,
                            idx,
                            m: m.clone(),
                        });
                    }
                }
            }
        }
        Ok(bad)
    }

    /// The point mass at `a`.
    pub fn dirac(k: &Field, a: &Elem, nmax: u32, mmax: i64) -> Result<MomentTable> {
        if !a.is_integral() {
            return Err(Error::Domain("Dirac point outside O_F".into()));
        }
        let mut t = MomentTable::empty(k, nmax, mmax);
        for n in 0..=nmax {
            let idx = k.coset_index(a, n)?;
            let shift = k.sub(a, &k.coset_rep(n, idx));
            for (pm, m) in t.degs.clone().iter().enumerate() {
                t.values[n as usize][idx as usize][pm] = k.monomial(&shift, &m.0)?;
            }
        }
        Ok(t)
    }

    /// Random deepest moments with valuation at least `floor`, deterministic per seed.
    pub fn random_consistent(
        k: &Field,
        seed: u64,
        nmax: u32,
        mmax: i64,
        floor: i64,
    ) -> Result<MomentTable> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MomentTable::from_deepest(k, nmax, mmax, |_, _| Ok(random_elem(k, &mut rng, floor)))
    }

    /// A consistent table with `value(0, n, 0) = p^{-n s}`.
    pub fn growth(k: &Field, nmax: u32, mmax: i64, s: i64) -> Result<MomentTable> {
        let mut t = MomentTable::dirac(k, &k.zero(), nmax, mmax)?.scale(k, &k.p_pow(-(nmax as i64) * s));
        for n in 0..nmax as i64 {
            let delta = k.sub(&k.p_pow(-n * s), &k.p_pow(-(n + 1) * s));
            let point = MomentTable::dirac(k, &k.p_pow(n), nmax, mmax)?;
            t = t.add(k, &point.scale(k, &delta))?;
        }
        Ok(t)
    }

    pub fn scale(&self, k: &Field, s: &Elem) -> MomentTable {
        let mut t = self.clone();
        for level in &mut t.values {
            for row in level {
                for v in row {
                    *v = k.mul(v, s);
                }
            }
        }
        t
    }

    pub fn add(&self, k: &Field, other: &MomentTable) -> Result<MomentTable> {
        if self.nmax != other.nmax || self.mmax != other.mmax {
            return Err(Error::Precondition("tables with different ranges".into()));
        }
        let mut t = self.clone();
        for (lt, lo) in t.values.iter_mut().zip(&other.values) {
            for (rt, ro) in lt.iter_mut().zip(lo) {
                for (vt, vo) in rt.iter_mut().zip(ro) {
                    *vt = k.add(vt, vo);
                }
            }
        }
        Ok(t)
    }

    pub fn sub(&self, k: &Field, other: &MomentTable) -> Result<MomentTable> {
        self.add(k, &other.scale(k, &k.from_i64(-1)))
    }

    /// `int f mu` for a function within coverage.
    pub fn pair(&self, k: &Field, f: &LocallyPolyFunction) -> Result<Elem> {
        let mut acc = k.zero();
        for (idx, piece) in f.pieces.iter().enumerate() {
            for (m, c) in piece.terms() {
                let v = self.value(k, f.level, idx as u64, m)?;
                acc = k.add(&acc, &k.mul(c, &v));
            }
        }
        Ok(acc)
    }

    /// `sup |value(a,n,m)| q^{-n(r - |m|)}` over stored nodes with capped `m`.
    ///
    /// Canonical centers suffice: recentering inside `D(a,n)` only mixes in
    /// lower moments that are already weighted no less.
    pub fn avv_norm(&self, r: Rational64, j: &[usize], d: &[i64]) -> AvvReport {
        let mut best = LogNorm::ZERO;
        let mut witness = None;
        for (n, level) in self.values.iter().enumerate() {
            for (idx, row) in level.iter().enumerate() {
                for (pm, m) in self.degs.iter().enumerate() {
                    if !respects_caps(m, j, d) {
                        continue;
                    }
                    let e = Rational64::from_integer(n as i64) * (Rational64::from_integer(m.total()) - r);
                    let v = LogNorm::of(&row[pm]).times_q_pow(e);
                    if v > best {
                        best = v;
                        witness = Some(Witness {
                            n: n as u32,
                            idx: idx as u64,
                            m: m.clone(),
                        });
                    }
                }
            }
        }
        AvvReport {
            constant: best,
            witness,
            satisfied: None,
            deepest_violation: None,
            range: (self.nmax, self.mmax),
        }
    }

    /// Checks the order-`r` moment bounds with constant `budget`.
    pub fn order_check(
        &self,
        r: Rational64,
        j: &[usize],
        d: &[i64],
        budget: LogNorm,
    ) -> Result<AvvReport> {
        let int_r = r.numer().div_floor(r.denom());
        if self.mmax < int_r {
            return Err(Error::InsufficientLevel(format!(
                "moment degree {} below [r] = {int_r}",
                self.mmax
            )));
        }
        let mut rep = self.avv_norm(r, j, d);
        rep.satisfied = Some(rep.constant <= budget);
        for (n, level) in self.values.iter().enumerate().rev() {
            let hit = level.iter().enumerate().find_map(|(idx, row)| {
                self.degs.iter().enumerate().find_map(|(pm, m)| {
                    let e = Rational64::from_integer(n as i64)
                        * (Rational64::from_integer(m.total()) - r);
                    let over = respects_caps(m, j, d)
                        && LogNorm::of(&row[pm]).times_q_pow(e) > budget;
                    over.then(|| Witness {
                        n: n as u32,
                        idx: idx as u64,
                        m: m.clone(),
                    })
                })
            });
            if hit.is_some() {
                rep.deepest_violation = hit;
                break;
            }
        }
        Ok(rep)
    }

    /// Moments of `mu o g` for `g = [[p^n, a], [0, 1]]` acting with
    /// central data `chi2(p^n) p^{n d}`.
    ///
    /// The new `(b, j, m)` entry is
    /// `chi2(p^n) p^{n|d|} p^{-n|m|} mu(1_{D(c, n+j)} (z - c)^m)` with `c = a + p^n b`.
    pub fn translate_scale_action(
        &self,
        k: &Field,
        n: u32,
        a: &Elem,
        chi2: &Character,
        d: &[i64],
    ) -> Result<MomentTable> {
        if n > self.nmax {
            return Err(self.coverage(k, n, 0, &MultiIndex::zero(k.f())));
        }
        if !a.is_integral() {
            return Err(Error::Domain("translation outside O_F".into()));
        }
        let pn = k.p_pow(n as i64);
        let dtot: i64 = d.iter().sum();
        let factor = k.mul(&chi2.eval(k, &pn)?, &k.p_pow(n as i64 * dtot));
        let nmax = self.nmax - n;
        let mut t = MomentTable::empty(k, nmax, self.mmax);
        for j in 0..=nmax {
            for idx in 0..k.q().pow(j) {
                let c = k.add(a, &k.mul(&pn, &k.coset_rep(j, idx)));
                for (pm, m) in self.degs.iter().enumerate() {
                    let v = self.moment_at(k, &c, n + j, m)?;
                    let s = k.mul(&factor, &k.p_pow(-(n as i64) * m.total()));
                    t.values[j as usize][idx as usize][pm] = k.mul(&s, &v);
                }
            }
        }
        Ok(t)
    }

    pub fn to_json(&self, k: &Field) -> Value {
        let mut values = Vec::new();
        for (n, level) in self.values.iter().enumerate() {
            for (idx, row) in level.iter().enumerate() {
                for (pm, m) in self.degs.iter().enumerate() {
                    values.push(json!({
                        "a": k.coset_key(n as u32, idx as u64),
                        "n": n,
                        "m": m.to_json(),
                        "v": k.to_json(&row[pm]),
                    }));
                }
            }
        }
        let desc = k.descriptor();
        json!({
            "field": {"p": desc.p, "f": desc.f},
            "Nmax": self.nmax,
            "Mmax": self.mmax,
            "values": values,
        })
    }

    /// Parses a table; entries not listed are zero.
    pub fn from_json(k: &Field, v: &Value) -> Result<MomentTable> {
        let bad = |m: &str| Error::Parse(format!("moment table: {m}"));
        if let Some(fd) = v.get("field") {
            let desc = k.descriptor();
            if fd.get("p").and_then(Value::as_u64) != Some(desc.p)
                || fd.get("f").and_then(Value::as_u64) != Some(desc.f as u64)
            {
                return Err(bad("field does not match"));
            }
        }
        let nmax = v.get("Nmax").and_then(Value::as_u64).ok_or_else(|| bad("missing Nmax"))? as u32;
        let mmax = v.get("Mmax").and_then(Value::as_i64).ok_or_else(|| bad("missing Mmax"))?;
        if nmax > 12 || !(0..=16).contains(&mmax) {
            return Err(bad("range too large"));
        }
        let mut t = MomentTable::empty(k, nmax, mmax);
        let entries = v.get("values").and_then(Value::as_array).ok_or_else(|| bad("missing values"))?;
        let mut seen = BTreeMap::new();
        for e in entries {
            let key = e.get("a").and_then(Value::as_str).ok_or_else(|| bad("entry without a"))?;
            let n = e.get("n").and_then(Value::as_u64).ok_or_else(|| bad("entry without n"))? as u32;
            let (lvl, idx) = k.parse_coset_key(key)?;
            if lvl != n || n > nmax {
                return Err(bad("entry level mismatch"));
            }
            let m = MultiIndex::from_json(e.get("m").ok_or_else(|| bad("entry without m"))?, k.f())?;
            let pm = t.pos(&m).ok_or_else(|| bad("exponent outside Mmax"))?;
            let val = k.from_json(e.get("v").ok_or_else(|| bad("entry without v"))?)?;
            if seen.insert((n, idx, pm), ()).is_some() {
                return Err(bad("duplicate entry"));
            }
            t.values[n as usize][idx as usize][pm] = val;
        }
        Ok(t)
    }
}
