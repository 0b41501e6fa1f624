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


//! Exact integration of symbolic terms against two-chart moment tables, by
//! an adaptive walk over the cosets of each chart.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::chars::MultiIndex;
use crate::dist::MomentTable;
use crate::field::{Elem, Field};
use crate::funcspace::{AffineFactor, LocalPolynomial, LocallyPolyFunction};
use crate::pone::action::{Chart, Region, Shape, TwoChartFunction, XTerm};
use crate::pone::datum::InductionDatum;
use crate::{Error, Result};

/// A pair of moment tables, one per chart.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoChartDistribution {
    pub mu1: MomentTable,
    pub mu2: MomentTable,
}

impl TwoChartDistribution {
    pub fn zero(k: &Field, nmax: u32, mmax: i64) -> TwoChartDistribution {
        TwoChartDistribution {
            mu1: MomentTable::zero(k, nmax, mmax),
            mu2: MomentTable::zero(k, nmax, mmax),
        }
    }

    /// Independent random consistent tables on both charts.
    pub fn random(k: &Field, seed: u64, nmax: u32, mmax: i64, floor: i64) -> Result<TwoChartDistribution> {
        Ok(TwoChartDistribution {
            mu1: MomentTable::random_consistent(k, seed.wrapping_mul(2), nmax, mmax, floor)?,
            mu2: MomentTable::random_consistent(k, seed.wrapping_mul(2) + 1, nmax, mmax, floor)?,
        })
    }

    /// The point mass at `x = 0`, which sits in chart 1.
    pub fn dirac_origin(k: &Field, nmax: u32, mmax: i64) -> Result<TwoChartDistribution> {
        Ok(TwoChartDistribution {
            mu1: MomentTable::dirac(k, &k.zero(), nmax, mmax)?,
            mu2: MomentTable::zero(k, nmax, mmax),
        })
    }

    pub fn table(&self, chart: Chart) -> &MomentTable {
        match chart {
            Chart::One => &self.mu1,
            Chart::Two => &self.mu2,
        }
    }

    pub fn nmax(&self) -> u32 {
        self.mu1.nmax.min(self.mu2.nmax)
    }

    pub fn mmax(&self) -> i64 {
        self.mu1.mmax.min(self.mu2.mmax)
    }

    pub fn scale(&self, k: &Field, s: &Elem) -> TwoChartDistribution {
        TwoChartDistribution {
            mu1: self.mu1.scale(k, s),
            mu2: self.mu2.scale(k, s),
        }
    }

    pub fn add(&self, k: &Field, o: &TwoChartDistribution) -> Result<TwoChartDistribution> {
        Ok(TwoChartDistribution {
            mu1: self.mu1.add(k, &o.mu1)?,
            mu2: self.mu2.add(k, &o.mu2)?,
        })
    }

    /// `mu1(f1) + mu2(f2)`.
    pub fn pair(&self, k: &Field, f: &TwoChartFunction) -> Result<Elem> {
        Ok(k.add(&self.mu1.pair(k, &f.f1)?, &self.mu2.pair(k, &f.f2)?))
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!({"mu1": self.mu1.to_json(k), "mu2": self.mu2.to_json(k)})
    }

    pub fn from_json(k: &Field, v: &Value) -> Result<TwoChartDistribution> {
        let get = |key: &str| {
            v.get(key)
                .ok_or_else(|| Error::Parse(format!("two-chart distribution: missing {key}")))
        };
        Ok(TwoChartDistribution {
            mu1: MomentTable::from_json(k, get("mu1")?)?,
            mu2: MomentTable::from_json(k, get("mu2")?)?,
        })
    }
}

/// Where a chart coset lands in `P^1(F)`.
#[derive(Clone, Copy, Debug)]
enum Image {
    Disk(Elem, i64),
    /// `P^1 \ D(0, t)`.
    CoDisk(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Inside,
    Outside,
    Split,
}

fn w_ge(x: &Elem, m: i64) -> bool {
    x.val().is_none_or(|w| w >= m)
}

/// The polynomial form of a term on one chart coset.
#[derive(Clone, Debug)]
pub struct Piece {
    pub chart: Chart,
    pub h: u32,
    pub idx: u64,
    pub poly: LocalPolynomial,
}

/// Walks cosets of both charts for one datum.
pub struct Engine<'a> {
    pub datum: &'a InductionDatum,
    n0: i64,
}

impl<'a> Engine<'a> {
    pub fn new(datum: &'a InductionDatum) -> Engine<'a> {
        let n0 = datum.psi.analyticity_level_at_1(datum.k()) as i64;
        Engine { datum, n0 }
    }

    fn k(&self) -> &Field {
        self.datum.k()
    }

    fn image(&self, chart: Chart, h: u32, b: &Elem) -> Result<Image> {
        let k = self.k();
        let h = h as i64;
        Ok(match chart {
            Chart::One => Image::Disk(k.mul(&k.p_pow(1), b), h + 1),
            Chart::Two => match b.val() {
                None => Image::CoDisk(1 - h),
                Some(w) => Image::Disk(k.inv(b)?, h - 2 * w),
            },
        })
    }

    fn status(&self, img: &Image, region: &Region) -> Status {
        let k = self.k();
        let flip = |s: Status| match s {
            Status::Inside => Status::Outside,
            Status::Outside => Status::Inside,
            Status::Split => Status::Split,
        };
        match (img, region) {
            (_, Region::Whole) => Status::Inside,
            (Image::Disk(c2, m2), Region::Disk { c, m }) => disk_vs_disk(k, c2, *m2, c, *m),
            (Image::Disk(c2, m2), Region::Complement { c, m }) => flip(disk_vs_disk(k, c2, *m2, c, *m)),
            (Image::CoDisk(t), Region::Disk { c, m }) => {
                if *m >= *t && w_ge(c, *t) {
                    Status::Outside
                } else {
                    Status::Split
                }
            }
            (Image::CoDisk(t), Region::Complement { c, m }) => {
                if *m >= *t && w_ge(c, *t) {
                    Status::Inside
                } else {
                    Status::Split
                }
            }
        }
    }

    /// Affine arguments `alpha + beta z` fed to `psi` on this chart.
    fn psi_args(&self, chart: Chart, term: &XTerm) -> Vec<(Elem, Elem)> {
        let k = self.k();
        let a = term.center;
        match (chart, term.shape) {
            (Chart::One, Shape::Plain) => vec![],
            (Chart::Two, Shape::Plain) => vec![(k.zero(), k.one())],
            (Chart::One, Shape::Twisted) => vec![(k.neg(&a), k.p_pow(1))],
            (Chart::Two, Shape::Twisted) => vec![(k.one(), k.neg(&a))],
        }
    }

    /// `psi(alpha + beta z) = psi(L(b)) L(b)^{-a} L(z)^a` on `D(b, h)`.
    fn psi_constant(&self, arg: &(Elem, Elem), b: &Elem, h: u32) -> bool {
        let k = self.k();
        let lb = k.add(&arg.0, &k.mul(&arg.1, b));
        match (lb.val(), arg.1.val()) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(wl), Some(wb)) => wl + self.n0 <= wb + h as i64,
        }
    }

    fn piece(&self, chart: Chart, term: &XTerm, b: &Elem) -> Result<LocalPolynomial> {
        let k = self.k();
        let d = &self.datum.d;
        let apsi = &self.datum.psi.alg;
        let a = term.center;
        let fac = |alpha: Elem, beta: Elem, exps: MultiIndex| AffineFactor { alpha, beta, exps };
        // psi(L(b)) L(b)^{-a_psi}.
        let psi_scalar = |lb: &Elem| -> Result<Elem> {
            Ok(k.mul(&self.datum.psi.eval(k, lb)?, &k.monomial(lb, &apsi.neg().0)?))
        };
        let (scalar, factors) = match (chart, term.shape) {
            (Chart::One, Shape::Plain) => (term.coeff, vec![fac(k.neg(&a), k.p_pow(1), term.k.clone())]),
            (Chart::Two, Shape::Plain) => (
                k.mul(&term.coeff, &psi_scalar(b)?),
                vec![
                    fac(k.zero(), k.one(), apsi.add(d).sub(&term.k)),
                    fac(k.one(), k.neg(&a), term.k.clone()),
                ],
            ),
            (Chart::One, Shape::Twisted) => {
                let lb = k.add(&k.neg(&a), &k.mul(&k.p_pow(1), b));
                (
                    k.mul(&term.coeff, &psi_scalar(&lb)?),
                    vec![fac(k.neg(&a), k.p_pow(1), apsi.add(d).sub(&term.k))],
                )
            }
            (Chart::Two, Shape::Twisted) => {
                let lb = k.sub(&k.one(), &k.mul(&a, b));
                (
                    k.mul(&term.coeff, &psi_scalar(&lb)?),
                    vec![
                        fac(k.one(), k.neg(&a), apsi.add(d).sub(&term.k)),
                        fac(k.zero(), k.one(), term.k.clone()),
                    ],
                )
            }
        };
        LocalPolynomial::affine_product(k, b, &scalar, &factors)
    }

    /// The pieces of `term` on `chart`, refining cosets up to `max_level`.
    pub fn pieces(&self, term: &XTerm, chart: Chart, max_level: u32) -> Result<Vec<Piece>> {
        let k = self.k();
        let q = k.q();
        let args = self.psi_args(chart, term);
        let mut out = Vec::new();
        let mut stack = vec![(0u32, 0u64)];
        while let Some((h, idx)) = stack.pop() {
            let b = k.coset_rep(h, idx);
            let status = self.status(&self.image(chart, h, &b)?, &term.region);
            if status == Status::Outside {
                continue;
            }
            let split = status == Status::Split || args.iter().any(|a| !self.psi_constant(a, &b, h));
            if split {
                if h >= max_level {
                    return Err(Error::Coverage {
                        a: format!("{}:{}", chart.name(), k.coset_key(h, idx)),
                        n: h as i64 + 1,
                        m: term.k.0.clone(),
                    });
                }
                let qh = q.pow(h);
                for digit in (0..q).rev() {
                    stack.push((h + 1, idx + digit * qh));
                }
                continue;
            }
            let poly = self.piece(chart, term, &b)?;
            out.push(Piece { chart, h, idx, poly });
        }
        Ok(out)
    }

    /// `int term dmu`, exactly.
    pub fn integrate(&self, mu: &TwoChartDistribution, term: &XTerm) -> Result<Elem> {
        let k = self.k();
        let mut acc = k.zero();
        for chart in [Chart::One, Chart::Two] {
            let table = mu.table(chart);
            for p in self.pieces(term, chart, table.nmax)? {
                for (m, c) in p.poly.terms() {
                    acc = k.add(&acc, &k.mul(c, &table.value(k, p.h, p.idx, m)?));
                }
            }
        }
        Ok(acc)
    }

    pub fn integrate_sum(&self, mu: &TwoChartDistribution, terms: &[XTerm]) -> Result<Elem> {
        let k = self.k();
        let mut acc = k.zero();
        for t in terms {
            acc = k.add(&acc, &self.integrate(mu, t)?);
        }
        Ok(acc)
    }

    fn materialize_chart(&self, terms: &[XTerm], chart: Chart, max_level: u32) -> Result<LocallyPolyFunction> {
        let k = self.k();
        let mut maps: Vec<HashMap<(u32, u64), LocalPolynomial>> = Vec::new();
        let mut level = 0;
        for t in terms {
            let mut map = HashMap::new();
            for p in self.pieces(t, chart, max_level)? {
                level = level.max(p.h);
                map.insert((p.h, p.idx), p.poly);
            }
            maps.push(map);
        }
        let q = k.q();
        let mut f = LocallyPolyFunction::from_fn(k, level, |i, c| {
            let mut acc = LocalPolynomial::zero(*c);
            for map in &maps {
                for h in 0..=level {
                    if let Some(p) = map.get(&(h, i % q.pow(h))) {
                        acc = acc.add(k, &p.recenter(k, c)?);
                        break;
                    }
                }
            }
            Ok(acc)
        })?;
        f = f.with_type(&self.datum.j, &self.datum.d.0);
        Ok(f)
    }

    /// The sum of `terms` as a two-chart function.
    pub fn materialize(&self, terms: &[XTerm], max_level: u32) -> Result<TwoChartFunction> {
        Ok(TwoChartFunction {
            f1: self.materialize_chart(terms, Chart::One, max_level)?,
            f2: self.materialize_chart(terms, Chart::Two, max_level)?,
        })
    }
}

fn disk_vs_disk(k: &Field, c2: &Elem, m2: i64, c: &Elem, m: i64) -> Status {
    let close = |level: i64| w_ge(&k.sub(c2, c), level);
    if m2 >= m {
        if close(m) {
            Status::Inside
        } else {
            Status::Outside
        }
    } else if close(m2) {
        Status::Split
    } else {
        Status::Outside
    }
}
