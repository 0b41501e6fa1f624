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


//! The action of `GL_2(F)` on two-chart functions, and symbolic terms that
//! the upper triangular subgroup permutes.

use serde_json::{json, Value};

use crate::chars::MultiIndex;
use crate::field::{Elem, Field};
use crate::funcspace::LocallyPolyFunction;
use crate::pone::datum::InductionDatum;
use crate::{Error, Result};

/// An invertible matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug)]
pub struct Mat2 {
    pub a: Elem,
    pub b: Elem,
    pub c: Elem,
    pub d: Elem,
}

impl Mat2 {
    pub fn new(a: Elem, b: Elem, c: Elem, d: Elem) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    pub fn identity(k: &Field) -> Mat2 {
        Mat2::new(k.one(), k.zero(), k.zero(), k.one())
    }

    /// `[[alpha, beta], [0, delta]]`.
    pub fn upper(k: &Field, alpha: Elem, beta: Elem, delta: Elem) -> Mat2 {
        Mat2::new(alpha, beta, k.zero(), delta)
    }

    pub fn det(&self, k: &Field) -> Elem {
        k.sub(&k.mul(&self.a, &self.d), &k.mul(&self.b, &self.c))
    }

    pub fn mul(&self, k: &Field, o: &Mat2) -> Mat2 {
        let dot = |x: &Elem, y: &Elem, z: &Elem, w: &Elem| k.add(&k.mul(x, y), &k.mul(z, w));
        Mat2 {
            a: dot(&self.a, &o.a, &self.b, &o.c),
            b: dot(&self.a, &o.b, &self.b, &o.d),
            c: dot(&self.c, &o.a, &self.d, &o.c),
            d: dot(&self.c, &o.b, &self.d, &o.d),
        }
    }

    pub fn is_upper(&self) -> bool {
        self.c.is_zero()
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!([
            [k.to_json(&self.a), k.to_json(&self.b)],
            [k.to_json(&self.c), k.to_json(&self.d)]
        ])
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<Mat2> {
        let bad = || Error::Parse("matrix must be [[a, b], [c, d]]".into());
        let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
        let mut e = Vec::new();
        for row in rows {
            let row = row.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
            for x in row {
                e.push(k.from_json(x)?);
            }
        }
        let m = Mat2::new(e[0], e[1], e[2], e[3]);
        k.require_nonzero(&m.det(k))
            .map_err(|_| Error::Precondition("matrix is not invertible".into()))?;
        Ok(m)
    }
}

/// The generators the group is decomposed into.
#[derive(Clone, Copy, Debug)]
pub enum BruhatFactor {
    /// `[[l, 0], [0, l]]`.
    Central(Elem),
    /// `[[1, 0], [0, l]]`.
    Diagonal(Elem),
    /// `[[1, l], [0, 1]]`.
    Unipotent(Elem),
    /// `[[0, p], [1, 0]]`.
    Swap,
}

impl BruhatFactor {
    pub fn to_mat(&self, k: &Field) -> Mat2 {
        let (o, z) = (k.one(), k.zero());
        match *self {
            BruhatFactor::Central(l) => Mat2::new(l, z, z, l),
            BruhatFactor::Diagonal(l) => Mat2::new(o, z, z, l),
            BruhatFactor::Unipotent(l) => Mat2::new(o, l, z, o),
            BruhatFactor::Swap => Mat2::new(z, k.p_pow(1), o, z),
        }
    }
}

fn upper_factors(k: &Field, alpha: &Elem, beta: &Elem, delta: &Elem) -> Result<Vec<BruhatFactor>> {
    let u = k.div(alpha, delta)?;
    Ok(vec![
        BruhatFactor::Central(*delta),
        BruhatFactor::Unipotent(k.div(beta, delta)?),
        BruhatFactor::Central(u),
        BruhatFactor::Diagonal(k.inv(&u)?),
    ])
}

/// Factors whose ordered product is `g`: `P` when `c = 0`, else `P w N`.
pub fn bruhat_decompose(k: &Field, g: &Mat2) -> Result<Vec<BruhatFactor>> {
    let det = k.require_nonzero(&g.det(k))?;
    if g.c.is_zero() {
        return upper_factors(k, &g.a, &g.b, &g.d);
    }
    let mut out = upper_factors(k, &k.neg(&k.div(&det, &g.c)?), &g.a, &g.c)?;
    out.push(BruhatFactor::Swap);
    out.push(BruhatFactor::Diagonal(k.p_pow(-1)));
    out.push(BruhatFactor::Unipotent(k.div(&g.d, &g.c)?));
    Ok(out)
}

/// Chart 1 is `z -> p z`, chart 2 is `z -> 1/z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chart {
    One,
    Two,
}

impl Chart {
    pub fn name(&self) -> &'static str {
        match self {
            Chart::One => "chart1",
            Chart::Two => "chart2",
        }
    }
}

/// Anything that can be evaluated on both charts at points of `O_F`.
pub trait ChartEval {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem>;
}

/// A function on `P^1(F)` as its two chart restrictions.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoChartFunction {
    pub f1: LocallyPolyFunction,
    pub f2: LocallyPolyFunction,
}

/// A [`TwoChartFunction`] bound to its field for evaluation.
pub struct BoundFunction<'a> {
    pub k: &'a Field,
    pub f: &'a TwoChartFunction,
}

impl ChartEval for BoundFunction<'_> {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem> {
        match chart {
            Chart::One => self.f.f1.eval(self.k, z),
            Chart::Two => self.f.f2.eval(self.k, z),
        }
    }
}

impl TwoChartFunction {
    pub fn zero(k: &Field) -> TwoChartFunction {
        TwoChartFunction {
            f1: LocallyPolyFunction::zero(k, 0),
            f2: LocallyPolyFunction::zero(k, 0),
        }
    }

    pub fn bind<'a>(&'a self, k: &'a Field) -> BoundFunction<'a> {
        BoundFunction { k, f: self }
    }

    pub fn add(&self, k: &Field, o: &TwoChartFunction) -> Result<TwoChartFunction> {
        Ok(TwoChartFunction {
            f1: self.f1.add(k, &o.f1)?,
            f2: self.f2.add(k, &o.f2)?,
        })
    }

    pub fn scale(&self, k: &Field, s: &Elem) -> TwoChartFunction {
        TwoChartFunction {
            f1: self.f1.scale(k, s),
            f2: self.f2.scale(k, s),
        }
    }

    /// Whether both charts lie in the polynomial-type subspace of the datum.
    pub fn subspace_check(&self, k: &Field, datum: &InductionDatum) -> bool {
        self.f1.subspace_check(k, &datum.j, &datum.d.0)
            && self.f2.subspace_check(k, &datum.j, &datum.d.0)
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!({"f1": self.f1.to_json(k), "f2": self.f2.to_json(k)})
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<TwoChartFunction> {
        let get = |key: &str| {
            v.get(key)
                .ok_or_else(|| Error::Parse(format!("two-chart function: missing {key}")))
        };
        Ok(TwoChartFunction {
            f1: LocallyPolyFunction::from_json(k, get("f1")?)?,
            f2: LocallyPolyFunction::from_json(k, get("f2")?)?,
        })
    }
}

/// `psi(x) x^d` for the datum.
pub fn twist(datum: &InductionDatum, x: &Elem) -> Result<Elem> {
    let k = datum.k();
    Ok(k.mul(&datum.psi.eval(k, x)?, &k.monomial(x, &datum.d.0)?))
}

/// `(g f)` on one chart at `z`, from
/// `(g f)(x) = chi1(det g) psi(-c x + a) (-c x + a)^d f((d x - b) / (-c x + a))`.
pub fn act_eval(
    datum: &InductionDatum,
    g: &Mat2,
    f: &dyn ChartEval,
    chart: Chart,
    z: &Elem,
) -> Result<Elem> {
    let k = datum.k();
    let (l, n) = match chart {
        Chart::One => {
            let x = k.mul(&k.p_pow(1), z);
            (
                k.sub(&g.a, &k.mul(&g.c, &x)),
                k.sub(&k.mul(&g.d, &x), &g.b),
            )
        }
        Chart::Two => (
            k.sub(&k.mul(&g.a, z), &g.c),
            k.sub(&g.d, &k.mul(&g.b, z)),
        ),
    };
    let pre = datum.chi1.eval(k, &g.det(k))?;
    let lands_in_chart1 = match (l.val(), n.val()) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(wl), Some(wn)) => wn - wl >= 1,
    };
    if lands_in_chart1 {
        let y = k.div(&k.div(&n, &l)?, &k.p_pow(1))?;
        Ok(k.mul(&k.mul(&pre, &twist(datum, &l)?), &f.eval_chart(Chart::One, &y)?))
    } else {
        let y = k.div(&l, &n)?;
        Ok(k.mul(&k.mul(&pre, &twist(datum, &n)?), &f.eval_chart(Chart::Two, &y)?))
    }
}

/// `g f`, evaluated lazily.
pub struct Acted<'a> {
    pub datum: &'a InductionDatum,
    pub g: Mat2,
    pub inner: &'a dyn ChartEval,
}

impl ChartEval for Acted<'_> {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem> {
        act_eval(self.datum, &self.g, self.inner, chart, z)
    }
}

/// A finite sum `sum c_i f_i`.
pub struct Combination<'a> {
    pub k: &'a Field,
    pub terms: Vec<(Elem, &'a dyn ChartEval)>,
}

impl ChartEval for Combination<'_> {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem> {
        let mut acc = self.k.zero();
        for (c, f) in &self.terms {
            acc = self.k.add(&acc, &self.k.mul(c, &f.eval_chart(chart, z)?));
        }
        Ok(acc)
    }
}

/// A subset of `P^1(F)`: a disk, the complement of a disk (with `infinity`),
/// or everything.
#[derive(Clone, Copy, Debug)]
pub enum Region {
    Whole,
    Disk { c: Elem, m: i64 },
    Complement { c: Elem, m: i64 },
}

fn w_ge(x: &Elem, m: i64) -> bool {
    x.val().is_none_or(|w| w >= m)
}

impl Region {
    /// Membership of a finite point.
    pub fn contains(&self, k: &Field, x: &Elem) -> bool {
        match self {
            Region::Whole => true,
            Region::Disk { c, m } => w_ge(&k.sub(x, c), *m),
            Region::Complement { c, m } => !w_ge(&k.sub(x, c), *m),
        }
    }

    pub fn contains_infinity(&self) -> bool {
        !matches!(self, Region::Disk { .. })
    }

    pub fn to_json(&self, k: &Field) -> Value {
        match self {
            Region::Whole => json!({"kind": "whole"}),
            Region::Disk { c, m } => json!({"kind": "disk", "c": k.to_json(c), "n": m}),
            Region::Complement { c, m } => {
                json!({"kind": "complement", "c": k.to_json(c), "n": m})
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `(x - a)^k`.
    Plain,
    /// `psi(x - a) (x - a)^{d - k}`.
    Twisted,
}

/// `coeff * 1_region(x) * shape(x - center)` as a function on `P^1(F)`.
#[derive(Clone, Debug)]
pub struct XTerm {
    pub coeff: Elem,
    pub region: Region,
    pub center: Elem,
    pub shape: Shape,
    pub k: MultiIndex,
}

impl XTerm {
    /// `1_{D(c, n)} (x - c)^k`.
    pub fn disk_moment(c: Elem, n: i64, k: MultiIndex, one: Elem) -> XTerm {
        XTerm {
            coeff: one,
            region: Region::Disk { c, m: n },
            center: c,
            shape: Shape::Plain,
            k,
        }
    }

    /// `1_{F \ D(c, n)} psi(x - c) (x - c)^{d - k}`.
    pub fn complement_moment(c: Elem, n: i64, k: MultiIndex, one: Elem) -> XTerm {
        XTerm {
            coeff: one,
            region: Region::Complement { c, m: n },
            center: c,
            shape: Shape::Twisted,
            k,
        }
    }

    /// The exponent of `x - center`.
    pub fn exponent(&self, datum: &InductionDatum) -> MultiIndex {
        match self.shape {
            Shape::Plain => self.k.clone(),
            Shape::Twisted => datum.d.sub(&self.k),
        }
    }

    /// Value at a finite point `x`.
    pub fn eval_x(&self, datum: &InductionDatum, x: &Elem) -> Result<Elem> {
        let k = datum.k();
        if !self.region.contains(k, x) {
            return Ok(k.zero());
        }
        let y = k.sub(x, &self.center);
        let base = k.monomial(&y, &self.exponent(datum).0)?;
        let v = match self.shape {
            Shape::Plain => base,
            Shape::Twisted => k.mul(&datum.psi.eval(k, &y)?, &base),
        };
        Ok(k.mul(&self.coeff, &v))
    }

    /// Chart values; chart 2 is `psi(z) z^d f(1/z)`, simplified so that it
    /// extends to `z = 0` where possible.
    pub fn eval_chart_with(&self, datum: &InductionDatum, chart: Chart, z: &Elem) -> Result<Elem> {
        let k = datum.k();
        if chart == Chart::One {
            return self.eval_x(datum, &k.mul(&k.p_pow(1), z));
        }
        if z.is_zero() {
            if !self.region.contains_infinity() {
                return Ok(k.zero());
            }
            return match self.shape {
                Shape::Twisted if self.k.is_zero() => Ok(self.coeff),
                Shape::Twisted => Ok(k.zero()),
                Shape::Plain => Err(Error::Domain("plain term is singular at infinity".into())),
            };
        }
        let x = k.inv(z)?;
        if !self.region.contains(k, &x) {
            return Ok(k.zero());
        }
        // 1 - a z = z (x - a).
        let l = k.sub(&k.one(), &k.mul(&self.center, z));
        let v = match self.shape {
            Shape::Plain => k.mul(
                &k.mul(&datum.psi.eval(k, z)?, &k.monomial(z, &datum.d.sub(&self.k).0)?),
                &k.monomial(&l, &self.k.0)?,
            ),
            Shape::Twisted => k.mul(
                &k.mul(&datum.psi.eval(k, &l)?, &k.monomial(&l, &datum.d.sub(&self.k).0)?),
                &k.monomial(z, &self.k.0)?,
            ),
        };
        Ok(k.mul(&self.coeff, &v))
    }

    /// The image under `[[alpha, beta], [0, delta]]`.
    pub fn act_upper(&self, datum: &InductionDatum, g: &Mat2) -> Result<XTerm> {
        let k = datum.k();
        if !g.is_upper() {
            return Err(Error::Precondition("symbolic action needs an upper triangular matrix".into()));
        }
        let (alpha, beta, delta) = (g.a, g.b, g.d);
        let u = k.div(&delta, &alpha)?;
        let move_pt = |c: &Elem| -> Result<Elem> { k.div(&k.add(&beta, &k.mul(&alpha, c)), &delta) };
        let shift = -k.require_nonzero(&u)?.val().unwrap();
        let region = match self.region {
            Region::Whole => Region::Whole,
            Region::Disk { c, m } => Region::Disk {
                c: move_pt(&c)?,
                m: m + shift,
            },
            Region::Complement { c, m } => Region::Complement {
                c: move_pt(&c)?,
                m: m + shift,
            },
        };
        let mut coeff = k.mul(
            &k.mul(&self.coeff, &datum.chi1.eval(k, &g.det(k))?),
            &twist(datum, &alpha)?,
        );
        coeff = match self.shape {
            Shape::Plain => k.mul(&coeff, &k.monomial(&u, &self.k.0)?),
            Shape::Twisted => k.mul(
                &coeff,
                &k.mul(&datum.psi.eval(k, &u)?, &k.monomial(&u, &datum.d.sub(&self.k).0)?),
            ),
        };
        Ok(XTerm {
            coeff,
            region,
            center: move_pt(&self.center)?,
            shape: self.shape,
            k: self.k.clone(),
        })
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!({
            "coeff": k.to_json(&self.coeff),
            "region": self.region.to_json(k),
            "center": k.to_json(&self.center),
            "shape": match self.shape { Shape::Plain => "plain", Shape::Twisted => "twisted" },
            "k": self.k.to_json(),
        })
    }
}

/// An [`XTerm`] sum bound to its datum.
pub struct TermSum<'a> {
    pub datum: &'a InductionDatum,
    pub terms: Vec<XTerm>,
}

impl ChartEval for TermSum<'_> {
    fn eval_chart(&self, chart: Chart, z: &Elem) -> Result<Elem> {
        let k = self.datum.k();
        let mut acc = k.zero();
        for t in &self.terms {
            acc = k.add(&acc, &t.eval_chart_with(self.datum, chart, z)?);
        }
        Ok(acc)
    }
}

/// The exponents `k` with `k <= d` off `J` and `k_sigma <= cutoff` on `J`.
pub fn generator_exponents(datum: &InductionDatum, cutoff: i64) -> Vec<MultiIndex> {
    let caps: Vec<i64> = (0..datum.k().f())
        .map(|s| if datum.j.contains(&s) { cutoff } else { datum.d.0[s] })
        .collect();
    let total = caps.iter().sum();
    MultiIndex::all_in_box(&caps, total)
}

/// Which half of the generating family a lattice generator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `1_{O_F} x^k`.
    Integral,
    /// `1_{F \ O_F} psi(x) x^{d - k}`.
    Outer,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Integral => "integral",
            Family::Outer => "outer",
        }
    }
}

pub fn lattice_generator(k: &Field, family: Family, exp: &MultiIndex) -> XTerm {
    match family {
        Family::Integral => XTerm::disk_moment(k.zero(), 0, exp.clone(), k.one()),
        Family::Outer => XTerm::complement_moment(k.zero(), 0, exp.clone(), k.one()),
    }
}

/// Both generator families up to the cutoff on `J` directions.
pub fn lattice_generators(datum: &InductionDatum, cutoff: i64) -> Vec<(Family, MultiIndex, XTerm)> {
    let k = datum.k();
    let mut out = Vec::new();
    for family in [Family::Integral, Family::Outer] {
        for e in generator_exponents(datum, cutoff) {
            let t = lattice_generator(k, family, &e);
            out.push((family, e, t));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::Character;
    use crate::field::FieldDescriptor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn datum() -> InductionDatum {
        let k = Field::new(FieldDescriptor { p: 3, f: 1 }).unwrap();
        let chi1 = Character::unr(&k, k.p_pow(-2));
        let chi2 = Character::unr(&k, k.p_pow(1));
        InductionDatum::new(k, vec![], MultiIndex(vec![1]), chi1, chi2).unwrap()
    }

    fn random_point(k: &Field, rng: &mut ChaCha8Rng) -> Elem {
        let v: i64 = rng.gen_range(0..3i64.pow(12));
        k.from_i64(v)
    }

    fn random_matrix(k: &Field, rng: &mut ChaCha8Rng) -> Mat2 {
        loop {
            let mut e = || {
                let v: i64 = rng.gen_range(-40..40);
                k.mul(&k.from_i64(v), &k.p_pow(rng.gen_range(-1..2)))
            };
            let m = Mat2::new(e(), e(), e(), e());
            if !m.det(k).is_zero() {
                return m;
            }
        }
    }

    #[test]
    fn bruhat_factors_multiply_back() {
        let dat = datum();
        let k = dat.k();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let g = random_matrix(k, &mut rng);
            let mut prod = Mat2::identity(k);
            for f in bruhat_decompose(k, &g).unwrap() {
                prod = prod.mul(k, &f.to_mat(k));
            }
            for (x, y) in [(prod.a, g.a), (prod.b, g.b), (prod.c, g.c), (prod.d, g.d)] {
                assert!(k.eq(&x, &y));
            }
        }
    }

    #[test]
    fn identity_acts_trivially() {
        let dat = datum();
        let k = dat.k();
        let f = TermSum {
            datum: &dat,
            terms: lattice_generators(&dat, 0).into_iter().map(|g| g.2).collect(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for chart in [Chart::One, Chart::Two] {
            for _ in 0..10 {
                let z = random_point(k, &mut rng);
                let a = act_eval(&dat, &Mat2::identity(k), &f, chart, &z).unwrap();
                assert!(k.eq(&a, &f.eval_chart(chart, &z).unwrap()));
            }
        }
    }

    #[test]
    fn action_composes() {
        let dat = datum();
        let k = dat.k();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gens: Vec<XTerm> = lattice_generators(&dat, 0).into_iter().map(|g| g.2).collect();
        let f = TermSum { datum: &dat, terms: gens };
        for _ in 0..10 {
            let g1 = random_matrix(k, &mut rng);
            let g2 = random_matrix(k, &mut rng);
            let inner = Acted { datum: &dat, g: g2, inner: &f };
            let outer = Acted { datum: &dat, g: g1, inner: &inner };
            let g12 = g1.mul(k, &g2);
            for chart in [Chart::One, Chart::Two] {
                let z = random_point(k, &mut rng);
                let lhs = outer.eval_chart(chart, &z).unwrap();
                let rhs = act_eval(&dat, &g12, &f, chart, &z).unwrap();
                assert!(k.eq(&lhs, &rhs), "{} vs {}", k.display(&lhs), k.display(&rhs));
            }
        }
    }

    #[test]
    fn central_elements_act_by_scalars() {
        let dat = datum();
        let k = dat.k();
        let f = TermSum {
            datum: &dat,
            terms: lattice_generators(&dat, 0).into_iter().map(|g| g.2).collect(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let lam = k.mul(&k.from_i64(rng.gen_range(1..50)), &k.p_pow(rng.gen_range(-2..3)));
            let scalar = k.mul(
                &k.mul(&dat.chi1.eval(k, &lam).unwrap(), &dat.chi2.eval(k, &lam).unwrap()),
                &k.monomial(&lam, &dat.d.0).unwrap(),
            );
            let g = Mat2::new(lam, k.zero(), k.zero(), lam);
            for chart in [Chart::One, Chart::Two] {
                let z = random_point(k, &mut rng);
                let lhs = act_eval(&dat, &g, &f, chart, &z).unwrap();
                let rhs = k.mul(&scalar, &f.eval_chart(chart, &z).unwrap());
                assert!(k.eq(&lhs, &rhs));
            }
        }
    }

    #[test]
    fn symbolic_upper_action_matches_pointwise() {
        let dat = datum();
        let k = dat.k();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (_, _, gen) in lattice_generators(&dat, 0) {
            for _ in 0..5 {
                let alpha = k.mul(&k.from_i64(rng.gen_range(1..20)), &k.p_pow(rng.gen_range(-2..3)));
                let delta = k.mul(&k.from_i64(rng.gen_range(1..20)), &k.p_pow(rng.gen_range(-2..3)));
                let beta = k.from_i64(rng.gen_range(-30..30));
                if alpha.is_zero() || delta.is_zero() {
                    continue;
                }
                let g = Mat2::upper(k, alpha, beta, delta);
                let image = gen.act_upper(&dat, &g).unwrap();
                let single = TermSum { datum: &dat, terms: vec![gen.clone()] };
                for chart in [Chart::One, Chart::Two] {
                    let z = random_point(k, &mut rng);
                    if z.is_zero() {
                        continue;
                    }
                    let lhs = image.eval_chart_with(&dat, chart, &z).unwrap();
                    let rhs = act_eval(&dat, &g, &single, chart, &z).unwrap();
                    assert!(k.eq(&lhs, &rhs));
                }
            }
        }
    }

    #[test]
    fn swap_sends_integral_generators_to_twisted_terms() {
        let dat = datum();
        let k = dat.k();
        let w = Mat2::new(k.zero(), k.one(), k.one(), k.zero());
        let sign = k.mul(
            &dat.chi2.eval(k, &k.from_i64(-1)).unwrap(),
            &k.pow(&k.from_i64(-1), dat.d.total()).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for e in generator_exponents(&dat, 0) {
            let a = TermSum { datum: &dat, terms: vec![lattice_generator(k, Family::Integral, &e)] };
            let b = lattice_generator(k, Family::Outer, &e);
            for _ in 0..10 {
                // Chart 2 away from the unit circle: sign times the outer generator.
                let z = k.mul(&random_point(k, &mut rng), &k.p_pow(1));
                let lhs = act_eval(&dat, &w, &a, Chart::Two, &z).unwrap();
                let rhs = k.mul(&sign, &b.eval_chart_with(&dat, Chart::Two, &z).unwrap());
                assert!(k.eq(&lhs, &rhs));
                // Chart 1 vanishes.
                let z1 = random_point(k, &mut rng);
                if !z1.is_zero() {
                    assert!(act_eval(&dat, &w, &a, Chart::One, &z1).unwrap().is_zero());
                }
                // Units: sign times z^k.
                let u = k.add(&k.one(), &k.mul(&random_point(k, &mut rng), &k.p_pow(1)));
                let lhs = act_eval(&dat, &w, &a, Chart::Two, &u).unwrap();
                assert!(k.eq(&lhs, &k.mul(&sign, &k.monomial(&u, &e.0).unwrap())));
            }
        }
    }
}
