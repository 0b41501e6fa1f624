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

//! Locally polynomial functions on `O_F` and their norms.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Rational64;
use serde_json::{json, Map, Value};

use crate::chars::MultiIndex;
use crate::field::{Elem, Field, LogNorm};
use crate::{Error, Result};

/// `sum_m c_m (z - center)^m` with `(z - a)^m = prod_sigma sigma(z - a)^{m_sigma}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPolynomial {
    pub center: Elem,
    pub coeffs: BTreeMap<MultiIndex, Elem>,
}

/// `prod sigma(alpha + beta * z)^{e_sigma}` as one affine factor.
#[derive(Clone, Debug)]
pub struct AffineFactor {
    pub alpha: Elem,
    pub beta: Elem,
    pub exps: MultiIndex,
}

fn floor_r(r: Rational64) -> i64 {
    r.numer().div_floor(r.denom())
}

fn int(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

impl LocalPolynomial {
    pub fn zero(center: Elem) -> LocalPolynomial {
        LocalPolynomial {
            center,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(k: &Field, center: Elem, c: Elem) -> LocalPolynomial {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::zero(k.f()), c);
        LocalPolynomial { center, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(Elem::is_zero)
    }

    /// Nonzero terms only.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Elem)> {
        self.coeffs.iter().filter(|(_, c)| !c.is_zero())
    }

    pub fn max_total_degree(&self) -> i64 {
        self.terms().map(|(m, _)| m.total()).max().unwrap_or(0)
    }

    pub fn eval(&self, k: &Field, z: &Elem) -> Result<Elem> {
        let y = k.sub(z, &self.center);
        let mut acc = k.zero();
        for (m, c) in self.terms() {
            acc = k.add(&acc, &k.mul(c, &k.monomial(&y, &m.0)?));
        }
        Ok(acc)
    }

    /// Taylor shift to a new center.
    pub fn recenter(&self, k: &Field, center: &Elem) -> Result<LocalPolynomial> {
        let shift = k.sub(center, &self.center);
        let mut coeffs: BTreeMap<MultiIndex, Elem> = BTreeMap::new();
        for (m, c) in self.terms() {
            for j in MultiIndex::all_in_box(&m.0, m.total()) {
                let b = m.binom(&j);
                let term = k.mul(
                    &k.mul(c, &k.from_i64(b as i64)),
                    &k.monomial(&shift, &m.sub(&j).0)?,
                );
                let e = coeffs.entry(j).or_insert_with(|| k.zero());
                *e = k.add(e, &term);
            }
        }
        Ok(LocalPolynomial {
            center: *center,
            coeffs,
        })
    }

    pub fn scale(&self, k: &Field, s: &Elem) -> LocalPolynomial {
        LocalPolynomial {
            center: self.center,
            coeffs: self.terms().map(|(m, c)| (m.clone(), k.mul(c, s))).collect(),
        }
    }

    /// Sum of two polynomials with the same center.
    pub fn add(&self, k: &Field, other: &LocalPolynomial) -> LocalPolynomial {
        let mut coeffs = self.coeffs.clone();
        for (m, c) in other.terms() {
            let e = coeffs.entry(m.clone()).or_insert_with(|| k.zero());
            *e = k.add(e, c);
        }
        LocalPolynomial {
            center: self.center,
            coeffs,
        }
    }

    /// Product of two polynomials with the same center.
    pub fn mul(&self, k: &Field, other: &LocalPolynomial) -> LocalPolynomial {
        let mut coeffs: BTreeMap<MultiIndex, Elem> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let e = coeffs.entry(a.add(b)).or_insert_with(|| k.zero());
                *e = k.add(e, &k.mul(ca, cb));
            }
        }
        LocalPolynomial {
            center: self.center,
            coeffs,
        }
    }

    /// `D_i P / i!`, which maps `c_m (z-a)^m` to `binom(m, i) c_m (z-a)^{m-i}`.
    pub fn divided_derivative(&self, k: &Field, i: &MultiIndex) -> LocalPolynomial {
        let coeffs = self
            .terms()
            .filter(|(m, _)| i.le(m))
            .map(|(m, c)| (m.sub(i), k.mul(c, &k.from_i64(m.binom(i) as i64))))
            .collect();
        LocalPolynomial {
            center: self.center,
            coeffs,
        }
    }

    /// The formal derivative `D_i P`.
    pub fn derivative(&self, k: &Field, i: &MultiIndex) -> LocalPolynomial {
        let coeffs = self
            .terms()
            .filter(|(m, _)| i.le(m))
            .map(|(m, c)| (m.sub(i), k.mul(c, &k.from_i64(m.falling(i) as i64))))
            .collect();
        LocalPolynomial {
            center: self.center,
            coeffs,
        }
    }

    /// Gauss norm on a disk of radius `q^-h`: `sup_m |c_m| q^{-h|m|}`.
    pub fn gauss(&self, h: i64) -> LogNorm {
        self.terms()
            .map(|(m, c)| LogNorm::of(c).times_q_pow(int(-h * m.total())))
            .max()
            .unwrap_or(LogNorm::ZERO)
    }

    /// Expands `scalar * prod_factors prod_sigma sigma(alpha + beta z)^{e_sigma}`
    /// around `center`.
    pub fn affine_product(
        k: &Field,
        center: &Elem,
        scalar: &Elem,
        factors: &[AffineFactor],
    ) -> Result<LocalPolynomial> {
        let f = k.f();
        let mut poly = LocalPolynomial::constant(k, *center, *scalar);
        for fac in factors {
            let base = k.add(&fac.alpha, &k.mul(&fac.beta, center));
            for (s, &e) in fac.exps.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if e < 0 {
                    return Err(Error::Domain("affine factor with negative exponent".into()));
                }
                let c0 = k.frobenius(&base, s);
                let c1 = k.frobenius(&fac.beta, s);
                let mut uni = BTreeMap::new();
                for j in 0..=e {
                    let c = k.mul(
                        &k.from_i64(crate::chars::binom(e, j) as i64),
                        &k.mul(&k.pow(&c0, e - j)?, &k.pow(&c1, j)?),
                    );
                    uni.insert(MultiIndex::unit(f, s, j), c);
                }
                poly = poly.mul(
                    k,
                    &LocalPolynomial {
                        center: *center,
                        coeffs: uni,
                    },
                );
            }
        }
        Ok(poly)
    }

    /// Like [`LocalPolynomial::affine_product`] on the disk `center + p^h O_F`,
    /// but negative exponents are expanded as a binomial series cut at
    /// degree `degree` in each embedding. Returns the polynomial and a bound
    /// for the sup of the discarded remainder on the disk.
    pub fn affine_series(
        k: &Field,
        center: &Elem,
        h: i64,
        scalar: &Elem,
        factors: &[AffineFactor],
        degree: i64,
    ) -> Result<(LocalPolynomial, LogNorm)> {
        let f = k.f();
        let mut poly = LocalPolynomial::constant(k, *center, *scalar);
        let mut sup = LogNorm::of(scalar);
        let mut tail = LogNorm::ZERO;
        for fac in factors {
            let base = k.add(&fac.alpha, &k.mul(&fac.beta, center));
            for (s, &e) in fac.exps.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let c0 = k.frobenius(&base, s);
                let c1 = k.frobenius(&fac.beta, s);
                let c0e = k.pow(&c0, e)?;
                let mut fac_sup = LogNorm::of(&c0e);
                let mut uni = BTreeMap::new();
                let mut fac_tail = LogNorm::ZERO;
                if e > 0 {
                    for j in 0..=e {
                        let c = k.mul(
                            &k.from_i64(crate::chars::binom(e, j) as i64),
                            &k.mul(&k.pow(&c0, e - j)?, &k.pow(&c1, j)?),
                        );
                        uni.insert(MultiIndex::unit(f, s, j), c);
                    }
                    fac_sup = LogNorm::of(&c0)
                        .max(LogNorm::of(&c1).times_q_pow(int(-h)))
                        .pow_int(e);
                } else {
                    k.require_nonzero(&c0)?;
                    let w0 = c0.val().unwrap_or(0);
                    let ratio = k.div(&c1, &c0)?;
                    if let Some(w1) = c1.val() {
                        let gap = w1 + h - w0;
                        if gap <= 0 {
                            return Err(Error::Domain(
                                "affine factor vanishes near the disk".into(),
                            ));
                        }
                        fac_tail = fac_sup.times_q_pow(int(-(degree + 1) * gap));
                    }
                    for j in 0..=degree {
                        let b = crate::chars::binom(e, j);
                        let b = i64::try_from(b).map_err(|_| Error::PrecisionExhausted)?;
                        let c = k.mul(&c0e, &k.mul(&k.from_i64(b), &k.pow(&ratio, j)?));
                        uni.insert(MultiIndex::unit(f, s, j), c);
                    }
                }
                poly = poly.mul(
                    k,
                    &LocalPolynomial {
                        center: *center,
                        coeffs: uni,
                    },
                );
                tail = tail
                    .mul(fac_sup)
                    .max(sup.mul(fac_tail))
                    .max(tail.mul(fac_tail));
                sup = sup.mul(fac_sup);
            }
        }
        Ok((poly, tail))
    }
}

/// A function on `O_F` that is polynomial on each coset of `p^level O_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocallyPolyFunction {
    pub level: u32,
    /// Indexed by coset index; each piece is centered at the canonical rep.
    pub pieces: Vec<LocalPolynomial>,
    pub j: Vec<usize>,
    pub deg_bound: Vec<i64>,
}

/// Sampled remainder sizes `C_{f,r}(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RemainderProfile {
    pub entries: BTreeMap<u32, LogNorm>,
}

/// The certified pair of bounds on a C^r norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormInterval {
    pub lower: LogNorm,
    pub upper: LogNorm,
}

impl LocallyPolyFunction {
    /// A function given piece by piece through its canonical centers.
    pub fn from_fn<F>(k: &Field, level: u32, mut piece: F) -> Result<LocallyPolyFunction>
    where
        F: FnMut(u64, &Elem) -> Result<LocalPolynomial>,
    {
        let mut pieces = Vec::with_capacity(k.q().pow(level) as usize);
        for i in 0..k.q().pow(level) {
            let c = k.coset_rep(level, i);
            let mut p = piece(i, &c)?;
            if p.center != c {
                p = p.recenter(k, &c)?;
            }
            pieces.push(p);
        }
        let mut out = LocallyPolyFunction {
            level,
            pieces,
            j: (0..k.f()).collect(),
            deg_bound: vec![0; k.f()],
        };
        out.deg_bound = out.degree_vector(k);
        Ok(out)
    }

    pub fn zero(k: &Field, level: u32) -> LocallyPolyFunction {
        LocallyPolyFunction::from_fn(k, level, |_, c| Ok(LocalPolynomial::zero(*c))).unwrap()
    }

    pub fn constant(k: &Field, c: Elem) -> LocallyPolyFunction {
        LocallyPolyFunction::from_fn(k, 0, |_, a| Ok(LocalPolynomial::constant(k, *a, c))).unwrap()
    }

    /// `z -> z^m` on all of `O_F`.
    pub fn monomial(k: &Field, m: &MultiIndex) -> LocallyPolyFunction {
        LocallyPolyFunction::from_fn(k, 0, |_, a| {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(m.clone(), k.one());
            Ok(LocalPolynomial { center: *a, coeffs })
        })
        .unwrap()
    }

    /// `1_{D(rep, n)}` for the level-`n` coset with index `idx`.
    pub fn indicator(k: &Field, n: u32, idx: u64) -> LocallyPolyFunction {
        LocallyPolyFunction::from_fn(k, n, |i, a| {
            Ok(if i == idx {
                LocalPolynomial::constant(k, *a, k.one())
            } else {
                LocalPolynomial::zero(*a)
            })
        })
        .unwrap()
    }

    /// Declares the analyticity directions and degree caps.
    pub fn with_type(mut self, j: &[usize], deg_bound: &[i64]) -> LocallyPolyFunction {
        self.j = j.to_vec();
        self.deg_bound = deg_bound.to_vec();
        self
    }

    /// Componentwise maximal exponents over all pieces.
    pub fn degree_vector(&self, k: &Field) -> Vec<i64> {
        let mut d = vec![0; k.f()];
        for p in &self.pieces {
            for (m, _) in p.terms() {
                for (s, &e) in m.0.iter().enumerate() {
                    d[s] = d[s].max(e);
                }
            }
        }
        d
    }

    pub fn max_total_degree(&self) -> i64 {
        self.pieces
            .iter()
            .map(LocalPolynomial::max_total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(LocalPolynomial::is_zero)
    }

    pub fn eval(&self, k: &Field, z: &Elem) -> Result<Elem> {
        if !z.is_integral() {
            return Err(Error::Domain("evaluation point outside O_F".into()));
        }
        let idx = k.coset_index(z, self.level)?;
        self.pieces[idx as usize].eval(k, z)
    }

    /// The same function at a finer level.
    pub fn refine(&self, k: &Field, level: u32) -> Result<LocallyPolyFunction> {
        if level < self.level {
            return Err(Error::Precondition(format!(
                "cannot refine level {} down to {level}",
                self.level
            )));
        }
        if level == self.level {
            return Ok(self.clone());
        }
        let step = k.q().pow(self.level);
        let mut out = LocallyPolyFunction::from_fn(k, level, |i, c| {
            self.pieces[(i % step) as usize].recenter(k, c)
        })?;
        out.j = self.j.clone();
        out.deg_bound = self.deg_bound.clone();
        Ok(out)
    }

    fn combine<F>(&self, k: &Field, other: &LocallyPolyFunction, op: F) -> Result<LocallyPolyFunction>
    where
        F: Fn(&LocalPolynomial, &LocalPolynomial) -> LocalPolynomial,
    {
        let level = self.level.max(other.level);
        let a = self.refine(k, level)?;
        let b = other.refine(k, level)?;
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(x, y)| op(x, y)).collect();
        let deg_bound = a
            .deg_bound
            .iter()
            .zip(&b.deg_bound)
            .map(|(x, y)| *x.max(y))
            .collect();
        let mut j = a.j.clone();
        j.retain(|s| b.j.contains(s));
        Ok(LocallyPolyFunction {
            level,
            pieces,
            j,
            deg_bound,
        })
    }

    pub fn add(&self, k: &Field, other: &LocallyPolyFunction) -> Result<LocallyPolyFunction> {
        self.combine(k, other, |x, y| x.add(k, y))
    }

    pub fn sub(&self, k: &Field, other: &LocallyPolyFunction) -> Result<LocallyPolyFunction> {
        let minus = k.from_i64(-1);
        self.combine(k, other, |x, y| x.add(k, &y.scale(k, &minus)))
    }

    pub fn scale(&self, k: &Field, s: &Elem) -> LocallyPolyFunction {
        LocallyPolyFunction {
            pieces: self.pieces.iter().map(|p| p.scale(k, s)).collect(),
            ..self.clone()
        }
    }

    /// `sup_{a mod p^h} sup_m |c_m(a)| q^{-h|m|}`.
    pub fn norm_fh(&self) -> LogNorm {
        self.pieces
            .iter()
            .map(|p| p.gauss(self.level as i64))
            .max()
            .unwrap_or(LogNorm::ZERO)
    }

    pub fn derivative(&self, k: &Field, i: &MultiIndex) -> LocallyPolyFunction {
        LocallyPolyFunction {
            pieces: self.pieces.iter().map(|p| p.derivative(k, i)).collect(),
            ..self.clone()
        }
    }

    /// Whether `D_{(d_sigma + 1) e_sigma} f = 0` for every `sigma` outside `J`.
    pub fn subspace_check(&self, k: &Field, j: &[usize], d: &[i64]) -> bool {
        (0..k.f())
            .filter(|s| !j.contains(s))
            .all(|s| self.derivative(k, &MultiIndex::unit(k.f(), s, d[s] + 1)).is_zero())
    }

    /// `z -> 1_{D(0,n)}(z) f(z / p^n)`.
    pub fn scale_into_disk(&self, k: &Field, n: u32) -> Result<LocallyPolyFunction> {
        let qn = k.q().pow(n);
        let mut out = LocallyPolyFunction::from_fn(k, self.level + n, |i, c| {
            if i % qn != 0 {
                return Ok(LocalPolynomial::zero(*c));
            }
            let src = &self.pieces[(i / qn) as usize];
            let mut coeffs = BTreeMap::new();
            for (m, cm) in src.terms() {
                coeffs.insert(m.clone(), k.mul(cm, &k.p_pow(-(n as i64) * m.total())));
            }
            Ok(LocalPolynomial { center: *c, coeffs })
        })?;
        out.j = self.j.clone();
        out.deg_bound = self.deg_bound.clone();
        Ok(out)
    }

    /// Gauss norms of `D_i f / i!` per piece, for the listed `i`.
    fn divided_gauss(&self, k: &Field, idx: &[MultiIndex]) -> Vec<Vec<LogNorm>> {
        self.pieces
            .iter()
            .map(|p| {
                idx.iter()
                    .map(|i| p.divided_derivative(k, i).gauss(self.level as i64))
                    .collect()
            })
            .collect()
    }

    /// Certified upper bound on `||f||_{C^r}`.
    ///
    /// Three terms: the Gauss norms of `D_i f / i!` for `|i| <= [r]`; pairs
    /// `x, x + y` in one coset of level `h`, where only Taylor terms of
    /// degree above `[r]` survive; and pairs that first separate at level
    /// `v < h`, bounded through the pieces inside the common level-`v`
    /// coset.
    pub fn cr_norm_upper(&self, k: &Field, r: Rational64) -> LogNorm {
        let big_r = floor_r(r);
        let h = self.level as i64;
        let f = k.f();
        let low = MultiIndex::all_upto(f, big_r);
        let top = self.max_total_degree();
        let high: Vec<MultiIndex> = MultiIndex::all_upto(f, top)
            .into_iter()
            .filter(|i| i.total() > big_r)
            .collect();
        let g_low = self.divided_gauss(k, &low);
        let mut best = g_low
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(LogNorm::ZERO);
        for p in &self.pieces {
            for i in &high {
                let g = p.divided_derivative(k, i).gauss(h);
                best = best.max(g.times_q_pow(-int(h) * (int(i.total()) - r)));
            }
        }
        let q = k.q();
        for v in 0..h {
            let groups = q.pow(v as u32) as usize;
            let mut m_v: Vec<Vec<LogNorm>> = vec![vec![LogNorm::ZERO; low.len()]; groups];
            for (pi, row) in g_low.iter().enumerate() {
                let g = pi % groups;
                for (t, val) in row.iter().enumerate() {
                    m_v[g][t] = m_v[g][t].max(*val);
                }
            }
            for row in &m_v {
                for (t, i) in low.iter().enumerate() {
                    let bound = row[t].times_q_pow(int(v) * (r - int(i.total())));
                    best = best.max(bound);
                }
            }
        }
        best
    }

    /// Default enumeration level `level + max total degree + 2`.
    pub fn default_enum_level(&self) -> u32 {
        self.level + self.max_total_degree() as u32 + 2
    }

    /// Exact sup of both norm terms over `x, y` in `coset_reps(m)`.
    pub fn cr_norm_enum(&self, k: &Field, r: Rational64, m: u32) -> Result<LogNorm> {
        let big_r = floor_r(r);
        let f = k.f();
        let low = MultiIndex::all_upto(f, big_r);
        let reps = k.coset_reps(m, false);
        // D_i f(x) / i! at every enumeration point.
        let mut derivs: Vec<Vec<Elem>> = Vec::with_capacity(reps.len());
        let mut best = LogNorm::ZERO;
        for x in &reps {
            let idx = k.coset_index(x, self.level)? as usize;
            let row: Vec<Elem> = low
                .iter()
                .map(|i| self.pieces[idx].divided_derivative(k, i).eval(k, x))
                .collect::<Result<_>>()?;
            for d in &row {
                best = best.max(LogNorm::of(d));
            }
            derivs.push(row);
        }
        let ys: Vec<(Elem, Vec<Elem>)> = reps
            .iter()
            .filter(|y| !y.is_zero())
            .map(|y| {
                let pows = low.iter().map(|i| k.monomial(y, &i.0)).collect::<Result<_>>()?;
                Ok((*y, pows))
            })
            .collect::<Result<_>>()?;
        for (xi, x) in reps.iter().enumerate() {
            for (y, ypow) in &ys {
                let e = self.remainder(k, x, y, &derivs[xi], ypow)?;
                let v = y.val().unwrap();
                best = best.max(LogNorm::of(&e).times_q_pow(r * int(v)));
            }
        }
        Ok(best)
    }

    fn remainder(&self, k: &Field, x: &Elem, y: &Elem, dx: &[Elem], ypow: &[Elem]) -> Result<Elem> {
        let mut e = self.eval(k, &k.add(x, y))?;
        for (d, yp) in dx.iter().zip(ypow) {
            if !d.is_zero() {
                e = k.sub(&e, &k.mul(d, yp));
            }
        }
        Ok(e)
    }

    /// Both bounds at the default enumeration level.
    pub fn cr_norm(&self, k: &Field, r: Rational64) -> Result<NormInterval> {
        Ok(NormInterval {
            lower: self.cr_norm_enum(k, r, self.default_enum_level())?,
            upper: self.cr_norm_upper(k, r),
        })
    }

    /// `sup |eps(x, y)| q^{rh}` over `x` in `coset_reps(m)` and
    /// `y` in `p^h coset_reps(m - h)`, for each `h` in `hs`.
    pub fn remainder_profile(
        &self,
        k: &Field,
        r: Rational64,
        hs: &[u32],
        m: u32,
    ) -> Result<RemainderProfile> {
        let big_r = floor_r(r);
        let low = MultiIndex::all_upto(k.f(), big_r);
        let reps = k.coset_reps(m, false);
        let mut derivs = Vec::with_capacity(reps.len());
        for x in &reps {
            let idx = k.coset_index(x, self.level)? as usize;
            let row: Vec<Elem> = low
                .iter()
                .map(|i| self.pieces[idx].divided_derivative(k, i).eval(k, x))
                .collect::<Result<_>>()?;
            derivs.push(row);
        }
        let mut entries = BTreeMap::new();
        for &h in hs {
            let mut best = LogNorm::ZERO;
            if h <= m {
                let scale = k.p_pow(h as i64);
                for y0 in k.coset_reps(m - h, false) {
                    if y0.is_zero() {
                        continue;
                    }
                    let y = k.mul(&scale, &y0);
                    let ypow: Vec<Elem> =
                        low.iter().map(|i| k.monomial(&y, &i.0)).collect::<Result<_>>()?;
                    for (xi, x) in reps.iter().enumerate() {
                        let e = self.remainder(k, x, &y, &derivs[xi], &ypow)?;
                        best = best.max(LogNorm::of(&e));
                    }
                }
            }
            entries.insert(h, best.times_q_pow(r * int(h as i64)));
        }
        Ok(RemainderProfile { entries })
    }

    pub fn to_json(&self, k: &Field) -> Value {
        let mut pieces = Map::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let mut terms = Map::new();
            for (m, c) in p.terms() {
                let key: Vec<String> = m.0.iter().map(|e| e.to_string()).collect();
                terms.insert(key.join(","), k.to_json(c));
            }
            pieces.insert(k.coset_key(self.level, i as u64), Value::Object(terms));
        }
        json!({
            "level": self.level,
            "J": self.j,
            "degBound": self.deg_bound,
            "pieces": pieces,
        })
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<LocallyPolyFunction> {
        let bad = |m: &str| Error::Parse(format!("function: {m}"));
        let level = v
            .get("level")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing level"))? as u32;
        let j = match v.get("J") {
            Some(j) => crate::chars::parse_index_set(j)?,
            None => Vec::new(),
        };
        let deg_bound = match v.get("degBound") {
            Some(d) => MultiIndex::from_json(d, k.f())?.0,
            None => vec![i64::MAX; k.f()],
        };
        let pieces_json = v
            .get("pieces")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing pieces"))?;
        let mut given: BTreeMap<u64, BTreeMap<MultiIndex, Elem>> = BTreeMap::new();
        for (key, terms) in pieces_json {
            let (lvl, idx) = k.parse_coset_key(key)?;
            if lvl != level {
                return Err(bad("piece key length must equal level"));
            }
            let terms = terms.as_object().ok_or_else(|| bad("piece must be an object"))?;
            let mut coeffs = BTreeMap::new();
            for (mk, c) in terms {
                let m: Option<Vec<i64>> = mk.split(',').map(|s| s.trim().parse().ok()).collect();
                let m = m.ok_or_else(|| bad("bad multi-index key"))?;
                if m.len() != k.f() || m.iter().any(|&e| e < 0) {
                    return Err(bad("multi-index key must have f nonnegative entries"));
                }
                coeffs.insert(MultiIndex(m), k.from_json(c)?);
            }
            given.insert(idx, coeffs);
        }
        let mut out = LocallyPolyFunction::from_fn(k, level, |i, c| {
            Ok(LocalPolynomial {
                center: *c,
                coeffs: given.remove(&i).unwrap_or_default(),
            })
        })?;
        out.j = j;
        if deg_bound.iter().all(|&d| d != i64::MAX) {
            out.deg_bound = deg_bound;
        }
        let caps = out.deg_bound.clone();
        for p in &out.pieces {
            for (m, _) in p.terms() {
                for s in 0..k.f() {
                    if !out.j.contains(&s) && m.0[s] > caps[s] {
                        return Err(Error::Precondition("piece exceeds degBound".into()));
                    }
                }
            }
        }
        Ok(out)
    }
}
