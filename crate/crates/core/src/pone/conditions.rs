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


//! The two inequality systems on two-chart distributions, checked over a
//! finite range, and the comparison of their best constants.

use num_rational::Rational64;
use serde_json::{json, Value};

use crate::chars::MultiIndex;
use crate::field::{rational_json, Elem, Field, LogNorm};
use crate::pone::action::{generator_exponents, XTerm};
use crate::pone::datum::InductionDatum;
use crate::pone::engine::{Engine, TwoChartDistribution};
use crate::pone::truncation::{truncation, SERIES_DEGREE};
use crate::{Error, Result};

/// Disk levels, exponent degree and depth of the center set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionRange {
    pub level: u32,
    pub degree: i64,
    pub center_depth: u32,
}

impl ConditionRange {
    /// Level 6 and degree 4, capped by the tables.
    pub fn default_for(mu: &TwoChartDistribution) -> ConditionRange {
        ConditionRange {
            level: mu.nmax().min(6),
            degree: mu.mmax().min(4),
            center_depth: 2,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"level": self.level, "degree": self.degree, "centerDepth": self.center_depth})
    }
}

/// One normalized quantity.
#[derive(Clone, Debug)]
pub struct Entry {
    pub center: Elem,
    pub n: i64,
    pub k: MultiIndex,
    pub raw: LogNorm,
    pub normalized: LogNorm,
}

impl Entry {
    fn to_json(&self, k: &Field) -> Value {
        json!({
            "center": k.to_json(&self.center),
            "n": self.n,
            "k": self.k.to_json(),
            "raw": self.raw.to_json(),
            "normalized": self.normalized.to_json(),
        })
    }
}

/// Best constant of one inequality family with its witness.
#[derive(Clone, Debug)]
pub struct FamilyResult {
    pub name: &'static str,
    pub constant: LogNorm,
    pub witness: Option<Entry>,
    pub count: usize,
}

impl FamilyResult {
    fn new(name: &'static str) -> FamilyResult {
        FamilyResult {
            name,
            constant: LogNorm::ZERO,
            witness: None,
            count: 0,
        }
    }

    fn push(&mut self, e: Entry) {
        self.count += 1;
        if self.witness.is_none() || e.normalized > self.constant {
            self.constant = self.constant.max(e.normalized);
            self.witness = Some(e);
        }
    }

    fn to_json(&self, k: &Field) -> Value {
        json!({
            "name": self.name,
            "constant": self.constant.to_json(),
            "witness": self.witness.as_ref().map(|w| w.to_json(k)),
            "count": self.count,
        })
    }
}

/// A partial integral standing in for a vanishing condition.
#[derive(Clone, Debug)]
pub struct Residual {
    pub name: &'static str,
    pub entry: Entry,
    /// Normalized residual at most the inequality constant.
    pub within_tail: bool,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub side: &'static str,
    pub r: Rational64,
    pub range: ConditionRange,
    pub families: Vec<FamilyResult>,
    pub residuals: Vec<Residual>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    /// Sup over the inequality families.
    pub fn inequality_constant(&self) -> LogNorm {
        self.families.iter().map(|f| f.constant).max().unwrap_or(LogNorm::ZERO)
    }

    /// Sup over families and normalized residuals.
    pub fn constant(&self) -> LogNorm {
        self.residuals
            .iter()
            .map(|r| r.entry.normalized)
            .fold(self.inequality_constant(), LogNorm::max)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn to_json(&self, k: &Field) -> Value {
        json!({
            "side": self.side,
            "r": rational_json(&self.r),
            "range": self.range.to_json(),
            "constant": self.constant().to_json(),
            "inequalityConstant": self.inequality_constant().to_json(),
            "families": self.families.iter().map(|f| f.to_json(k)).collect::<Vec<_>>(),
            "residuals": self.residuals.iter().map(|r| json!({
                "name": r.name,
                "entry": r.entry.to_json(k),
                "withinTail": r.within_tail,
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}

fn weight(r: Rational64, k: &MultiIndex) -> Rational64 {
    r - Rational64::from_integer(k.total())
}

/// `raw * q^{-n (r - |k|)}`.
fn normalize(raw: LogNorm, n: i64, r: Rational64, k: &MultiIndex) -> LogNorm {
    raw.times_q_pow(-Rational64::from_integer(n) * weight(r, k))
}

fn check_inputs(datum: &InductionDatum, mu: &TwoChartDistribution, range: &ConditionRange) -> Result<()> {
    if !datum.j.is_empty() {
        return Err(Error::Precondition(
            "condition checks need J empty (locally algebraic data)".into(),
        ));
    }
    let k = datum.k();
    if range.level > mu.nmax() {
        let n = mu.nmax() + 1;
        return Err(Error::Coverage {
            a: k.coset_key(n, 0),
            n: n as i64,
            m: vec![0; k.f()],
        });
    }
    let need = range.degree.max(datum.d.total());
    if need > mu.mmax() {
        let mut m = vec![0; k.f()];
        m[0] = mu.mmax() + 1;
        return Err(Error::Coverage {
            a: String::new(),
            n: 0,
            m,
        });
    }
    Ok(())
}

fn exponents(datum: &InductionDatum, range: &ConditionRange) -> Vec<MultiIndex> {
    generator_exponents(datum, 0)
        .into_iter()
        .filter(|e| e.total() <= range.degree)
        .collect()
}

/// X-centers of chart cosets down to `depth`: `p b` for chart 1 and `1/b`
/// for nonzero chart-2 representatives.
pub fn center_set(k: &Field, depth: u32) -> Result<Vec<Elem>> {
    let mut out = Vec::new();
    for h in 0..=depth {
        for b in k.coset_reps(h, false) {
            out.push(k.mul(&k.p_pow(1), &b));
        }
    }
    for h in 1..=depth {
        for b in k.coset_reps(h, false) {
            if !b.is_zero() {
                out.push(k.inv(&b)?);
            }
        }
    }
    Ok(out)
}

/// Disks `D(c, m)` of `F` reached from the charts within `level`: images of
/// chart-1 cosets, images of nonzero chart-2 cosets, and `D(0, n)` for
/// `1 - level <= n <= 0`.
pub fn covered_disks(k: &Field, level: u32) -> Result<Vec<(Elem, i64)>> {
    let mut out = Vec::new();
    for h in 0..=level {
        for b in k.coset_reps(h, false) {
            out.push((k.mul(&k.p_pow(1), &b), h as i64 + 1));
        }
    }
    out.extend(inverted_disks(k, level)?);
    for n in (1 - level as i64)..=0 {
        out.push((k.zero(), n));
    }
    Ok(out)
}

/// `D(1/b, h - 2 w(b))` for nonzero chart-2 representatives `b` of level `h`.
pub fn inverted_disks(k: &Field, level: u32) -> Result<Vec<(Elem, i64)>> {
    let mut out = Vec::new();
    for h in 1..=level {
        for b in k.coset_reps(h, false) {
            if let Some(w) = b.val() {
                out.push((k.inv(&b)?, h as i64 - 2 * w));
            }
        }
    }
    Ok(out)
}

/// Largest `n` for which `F \ D(c, n + 1)` is integrable against `mu`, and
/// the integrals for `n` from `-level` up to it.
fn complement_profile(
    eng: &Engine,
    mu: &TwoChartDistribution,
    c: &Elem,
    level: u32,
    exps: &[MultiIndex],
) -> Result<Vec<(i64, Vec<Elem>)>> {
    let k = eng.datum.k();
    let mut out = Vec::new();
    let cap = 3 * mu.nmax() as i64 + 8;
    let mut n = -(level as i64);
    while n <= cap {
        let mut row = Vec::new();
        let mut covered = true;
        for e in exps {
            match eng.integrate(mu, &XTerm::complement_moment(*c, n + 1, e.clone(), k.one())) {
                Ok(v) => row.push(v),
                Err(Error::Coverage { .. }) => {
                    covered = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !covered {
            break;
        }
        out.push((n, row));
        n += 1;
    }
    if out.is_empty() {
        return Err(Error::Coverage {
            a: k.display(c),
            n: -(level as i64),
            m: vec![],
        });
    }
    Ok(out)
}

/// Moments over disks and over complements of disks, integrated through
/// both charts.
pub fn cond_a_check(
    mu: &TwoChartDistribution,
    datum: &InductionDatum,
    range: &ConditionRange,
) -> Result<ConditionReport> {
    check_inputs(datum, mu, range)?;
    let k = datum.k();
    let r = datum.r()?;
    let eng = Engine::new(datum);
    let exps = exponents(datum, range);
    let mut disks = FamilyResult::new("disk_moments");
    for (c, m) in covered_disks(k, range.level)? {
        for e in &exps {
            let v = eng.integrate(mu, &XTerm::disk_moment(c, m, e.clone(), k.one()))?;
            let raw = LogNorm::of(&v);
            disks.push(Entry {
                center: c,
                n: m,
                k: e.clone(),
                raw,
                normalized: normalize(raw, m, r, e),
            });
        }
    }
    let mut comps = FamilyResult::new("complement_moments");
    for c in center_set(k, range.center_depth)? {
        for (n, row) in complement_profile(&eng, mu, &c, range.level, &exps)? {
            for (e, v) in exps.iter().zip(row) {
                let raw = LogNorm::of(&v);
                comps.push(Entry {
                    center: c,
                    n,
                    k: e.clone(),
                    raw,
                    normalized: normalize(raw, -n, r, e),
                });
            }
        }
    }
    Ok(ConditionReport {
        side: "A",
        r,
        range: *range,
        families: vec![disks, comps],
        residuals: Vec::new(),
        notes: Vec::new(),
    })
}

/// Chart-wise moment bounds read from the tables, plus the partial
/// integrals standing in for the two vanishing conditions.
pub fn cond_b_check(
    mu: &TwoChartDistribution,
    datum: &InductionDatum,
    range: &ConditionRange,
) -> Result<ConditionReport> {
    check_inputs(datum, mu, range)?;
    let k = datum.k();
    let r = datum.r()?;
    let exps = exponents(datum, range);
    let mut inner = FamilyResult::new("inner_chart_disks");
    let mut outer = FamilyResult::new("outer_complements");
    let mut inverted = FamilyResult::new("inverted_disks");
    for h in 0..=range.level {
        for (idx, b) in k.coset_reps(h, false).into_iter().enumerate() {
            for e in &exps {
                let v1 = mu.mu1.value(k, h, idx as u64, e)?;
                let raw1 = LogNorm::of(&k.mul(&k.monomial(&k.p_pow(1), &e.0)?, &v1));
                inner.push(Entry {
                    center: k.mul(&k.p_pow(1), &b),
                    n: h as i64 + 1,
                    k: e.clone(),
                    raw: raw1,
                    normalized: normalize(raw1, h as i64 + 1, r, e),
                });
                let raw2 = LogNorm::of(&mu.mu2.value(k, h, idx as u64, e)?);
                let entry = Entry {
                    center: b,
                    n: h as i64,
                    k: e.clone(),
                    raw: raw2,
                    normalized: normalize(raw2, h as i64, r, e),
                };
                if b.is_zero() {
                    outer.push(entry);
                } else {
                    inverted.push(entry);
                }
            }
        }
    }
    let mut report = ConditionReport {
        side: "B",
        r,
        range: *range,
        families: vec![inner, outer, inverted],
        residuals: Vec::new(),
        notes: Vec::new(),
    };
    let strict: Vec<MultiIndex> = exps
        .iter()
        .filter(|e| weight(r, e) > Rational64::from_integer(0))
        .cloned()
        .collect();
    if strict.is_empty() {
        report
            .notes
            .push("no exponent has r - |k| > 0 in range: the vanishing conditions are vacuous".into());
        return Ok(report);
    }
    let bound = report.inequality_constant();
    let eng = Engine::new(datum);
    let n_out = 1 - range.level as i64;
    for e in &strict {
        let v = eng.integrate(mu, &XTerm::disk_moment(k.zero(), n_out, e.clone(), k.one()))?;
        let raw = LogNorm::of(&v);
        let normalized = normalize(raw, n_out, r, e);
        report.residuals.push(Residual {
            name: "total_moment_residual",
            entry: Entry {
                center: k.zero(),
                n: n_out,
                k: e.clone(),
                raw,
                normalized,
            },
            within_tail: normalized <= bound,
        });
    }
    for c in center_set(k, range.center_depth)? {
        let profile = complement_profile(&eng, mu, &c, range.level, &strict)?;
        let (n_hi, row) = profile.last().unwrap();
        for (e, v) in strict.iter().zip(row) {
            let raw = LogNorm::of(v);
            let normalized = normalize(raw, -n_hi, r, e);
            report.residuals.push(Residual {
                name: "total_twisted_residual",
                entry: Entry {
                    center: c,
                    n: *n_hi,
                    k: e.clone(),
                    raw,
                    normalized,
                },
                within_tail: normalized <= bound,
            });
        }
    }
    Ok(report)
}

/// Character and truncation data entering the two budgets.
#[derive(Clone, Debug)]
pub struct BudgetConstants {
    /// `C1 q^{n0 r}`.
    pub kappa_ab: LogNorm,
    /// `q^{(n0 + 1) r} max(1, C)` with `C` the truncation constant.
    pub kappa_ba: LogNorm,
    /// `sup |b_h|` of the expansion of `psi` at 1, at least 1.
    pub c1: LogNorm,
    pub n0: u32,
    /// Sup of the C^r norms of the truncations over the range, at least 1.
    pub c_trunc: LogNorm,
}

impl BudgetConstants {
    pub fn compute(datum: &InductionDatum, range: &ConditionRange) -> Result<BudgetConstants> {
        let k = datum.k();
        let r = datum.r()?;
        let n0 = datum.psi.analyticity_level_at_1(k);
        let (expansion, tail) = datum.psi.local_expansion(k, &k.one(), n0, SERIES_DEGREE)?;
        let c1 = expansion
            .terms()
            .map(|(_, c)| LogNorm::of(c))
            .fold(LogNorm::one().max(tail), LogNorm::max);
        let reduced = datum.reduced()?;
        let mut c_trunc = LogNorm::one();
        for e in exponents(datum, range) {
            if weight(r, &e) <= Rational64::from_integer(0) {
                continue;
            }
            for n in 1..=range.level.max(1) {
                let t = truncation(&reduced, &e, n, SERIES_DEGREE)?;
                c_trunc = c_trunc.max(t.cr_upper(k, r));
            }
        }
        let n0r = Rational64::from_integer(n0 as i64) * r;
        Ok(BudgetConstants {
            kappa_ab: c1.times_q_pow(n0r),
            kappa_ba: c_trunc.times_q_pow(n0r + r),
            c1,
            n0,
            c_trunc,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kappaAB": self.kappa_ab.to_json(),
            "kappaBA": self.kappa_ba.to_json(),
            "C1": self.c1.to_json(),
            "n0": self.n0,
            "truncationConstant": self.c_trunc.to_json(),
        })
    }
}

/// Both constants and the two implication budgets.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub a: ConditionReport,
    pub b: ConditionReport,
    pub c_a: LogNorm,
    pub c_b: LogNorm,
    pub budget: BudgetConstants,
    pub ab_holds: bool,
    pub ba_holds: bool,
}

impl EquivalenceReport {
    pub fn to_json(&self, k: &Field) -> Value {
        json!({
            "A": self.a.to_json(k),
            "B": self.b.to_json(k),
            "C_A": self.c_a.to_json(),
            "C_B": self.c_b.to_json(),
            "budget": self.budget.to_json(),
            "budgetAtoB": self.ab_holds,
            "budgetBtoA": self.ba_holds,
        })
    }
}

fn require_harness_datum(datum: &InductionDatum) -> Result<()> {
    datum.require_integral_reduced()?;
    if Rational64::from_integer(datum.d.total()) >= datum.r()? {
        return Err(Error::Precondition("need |d| < r".into()));
    }
    Ok(())
}

/// Runs both checkers and compares `C_B <= kappa_AB C_A` and
/// `C_A <= kappa_BA C_B`.
pub fn equivalence_harness(
    mu: &TwoChartDistribution,
    datum: &InductionDatum,
    range: &ConditionRange,
) -> Result<EquivalenceReport> {
    require_harness_datum(datum)?;
    let budget = BudgetConstants::compute(datum, range)?;
    equivalence_with(mu, datum, range, &budget)
}

/// [`equivalence_harness`] with precomputed budget constants.
pub fn equivalence_with(
    mu: &TwoChartDistribution,
    datum: &InductionDatum,
    range: &ConditionRange,
    budget: &BudgetConstants,
) -> Result<EquivalenceReport> {
    require_harness_datum(datum)?;
    let a = cond_a_check(mu, datum, range)?;
    let b = cond_b_check(mu, datum, range)?;
    let c_a = a.constant();
    let c_b = b.constant();
    Ok(EquivalenceReport {
        ab_holds: c_b <= budget.kappa_ab.mul(c_a),
        ba_holds: c_a <= budget.kappa_ba.mul(c_b),
        a,
        b,
        c_a,
        c_b,
        budget: budget.clone(),
    })
}
