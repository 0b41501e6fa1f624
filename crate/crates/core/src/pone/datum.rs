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


//! Induction data, their invariants, and the two-parameter template family.

use num_rational::Rational64;
use serde_json::{json, Value};

use crate::chars::{parse_index_set, Character, MultiIndex};
use crate::field::{rational_json, Elem, Field, FieldDescriptor};
use crate::{Error, Result};

/// `(chi1, chi2, J, d)` over a field, with `psi = chi2 / chi1` cached.
#[derive(Clone)]
pub struct InductionDatum {
    pub field: Field,
    pub j: Vec<usize>,
    /// Zero on `J`.
    pub d: MultiIndex,
    pub chi1: Character,
    pub chi2: Character,
    pub psi: Character,
}

/// Builds a field from `{"p": .., "f": .., "precision": ..}`.
pub fn field_from_json(v: &Value) -> Result<Field> {
    let bad = |m: &str| Error::Parse(format!("field: {m}"));
    let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| bad("missing p"))?;
    let f = v.get("f").and_then(Value::as_u64).unwrap_or(1) as usize;
    let desc = FieldDescriptor { p, f };
    match v.get("precision") {
        None => Field::new(desc),
        Some(n) => {
            let n = n.as_u64().ok_or_else(|| bad("precision must be a positive integer"))?;
            Field::with_precision(desc, n as u32)
        }
    }
}

pub fn field_to_json(k: &Field) -> Value {
    json!({"p": k.p(), "f": k.f(), "precision": k.precision()})
}

impl InductionDatum {
    pub fn new(
        field: Field,
        j: Vec<usize>,
        d: MultiIndex,
        chi1: Character,
        chi2: Character,
    ) -> Result<InductionDatum> {
        let k = &field;
        let f = k.f();
        let bad = |m: String| Err(Error::Precondition(m));
        if d.len() != f {
            return bad(format!("d must have {f} entries"));
        }
        if !d.is_nonneg() {
            return bad("d must be nonnegative".into());
        }
        if j.iter().any(|&s| s >= f) {
            return bad("J contains an embedding index out of range".into());
        }
        if j.iter().any(|&s| d.0[s] != 0) {
            return bad("d must vanish on J".into());
        }
        chi1.validate(k)?;
        chi2.validate(k)?;
        for (name, chi) in [("chi1", &chi1), ("chi2", &chi2)] {
            if chi.alg.0.iter().enumerate().any(|(s, &a)| a != 0 && !j.contains(&s)) {
                return bad(format!("{name} has an algebraic exponent outside J"));
            }
        }
        let psi = chi2.ratio(k, &chi1)?;
        let mut j = j;
        j.sort_unstable();
        j.dedup();
        Ok(InductionDatum {
            field,
            j,
            d,
            chi1,
            chi2,
            psi,
        })
    }

    pub fn k(&self) -> &Field {
        &self.field
    }

    /// `r = -val(chi1(p))`.
    pub fn r(&self) -> Result<Rational64> {
        Ok(-self.chi1.val_p(&self.field)?)
    }

    /// `val(chi1(p)) + val(chi2(p)) + |d|`; zero exactly when the central
    /// character is integral.
    pub fn central_exponent(&self) -> Result<Rational64> {
        let k = &self.field;
        Ok(self.chi1.val_p(k)? + self.chi2.val_p(k)? + Rational64::from_integer(self.d.total()))
    }

    /// `val(chi2(p)) + |d|`.
    pub fn inequality_value(&self) -> Result<Rational64> {
        Ok(self.chi2.val_p(&self.field)? + Rational64::from_integer(self.d.total()))
    }

    /// `J` together with the directions where `d_sigma + 1 > r`.
    pub fn j_prime(&self) -> Result<Vec<usize>> {
        let r = self.r()?;
        let mut out = self.j.clone();
        for s in 0..self.field.f() {
            if !self.j.contains(&s) && Rational64::from_integer(self.d.0[s] + 1) > r {
                out.push(s);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// `chi2 * prod_{J' \ J} sigma^{d_sigma}`.
    pub fn chi2_prime(&self) -> Result<Character> {
        let k = &self.field;
        let mut extra = vec![0; k.f()];
        for s in self.j_prime()? {
            if !self.j.contains(&s) {
                extra[s] = self.d.0[s];
            }
        }
        let mut c = self.chi2.mul(k, &Character::algebraic(k, &extra))?;
        c.j = self.j_prime()?;
        Ok(c)
    }

    /// The datum `(chi1, chi2', J', d off J')`.
    pub fn reduced(&self) -> Result<InductionDatum> {
        let jp = self.j_prime()?;
        let mut d = self.d.clone();
        for &s in &jp {
            d.0[s] = 0;
        }
        InductionDatum::new(self.field.clone(), jp, d, self.chi1.clone(), self.chi2_prime()?)
    }

    /// Whether `d_sigma + 1 <= r` off `J`.
    pub fn is_reduced(&self) -> Result<bool> {
        Ok(self.j_prime()? == self.j)
    }

    /// Integral central character and `d_sigma + 1 <= r` off `J`.
    pub fn require_integral_reduced(&self) -> Result<()> {
        if self.central_exponent()? != Rational64::from_integer(0) {
            return Err(Error::Precondition("central character is not integral".into()));
        }
        if !self.is_reduced()? {
            return Err(Error::Precondition(
                "datum is not reduced: some d_sigma + 1 > r off J".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let k = &self.field;
        json!({
            "field": field_to_json(k),
            "J": self.j,
            "d": self.d.to_json(),
            "chi1": self.chi1.to_json(k),
            "chi2": self.chi2.to_json(k),
        })
    }

    pub fn from_json(v: &Value) -> Result<InductionDatum> {
        let bad = |m: &str| Error::Parse(format!("datum: {m}"));
        let k = field_from_json(v.get("field").ok_or_else(|| bad("missing field"))?)?;
        let j = match v.get("J") {
            Some(j) => parse_index_set(j)?,
            None => Vec::new(),
        };
        let d = match v.get("d") {
            Some(d) => MultiIndex::from_json(d, k.f())?,
            None => MultiIndex::zero(k.f()),
        };
        let chi1 = Character::from_json(&k, v.get("chi1").ok_or_else(|| bad("missing chi1"))?)?;
        let chi2 = Character::from_json(&k, v.get("chi2").ok_or_else(|| bad("missing chi2"))?)?;
        InductionDatum::new(k, j, d, chi1, chi2)
    }
}

/// Everything the analyzer reports about a datum.
#[derive(Clone)]
pub struct DatumAnalysis {
    pub r: Rational64,
    pub central_exponent: Rational64,
    pub integral: bool,
    pub inequality_value: Rational64,
    pub inequality: bool,
    pub j_prime: Vec<usize>,
    pub chi2_prime: Character,
    pub reduced: InductionDatum,
}

pub fn datum_analysis(datum: &InductionDatum) -> Result<DatumAnalysis> {
    let central = datum.central_exponent()?;
    let ineq = datum.inequality_value()?;
    let reduced = datum.reduced()?;
    debug_assert!(reduced.is_reduced()?);
    Ok(DatumAnalysis {
        r: datum.r()?,
        central_exponent: central,
        integral: central == Rational64::from_integer(0),
        inequality_value: ineq,
        inequality: ineq >= Rational64::from_integer(0),
        j_prime: datum.j_prime()?,
        chi2_prime: datum.chi2_prime()?,
        reduced,
    })
}

impl DatumAnalysis {
    /// Nonzero completion is only possible when both flags hold.
    pub fn completion_may_be_nonzero(&self) -> bool {
        self.integral && self.inequality
    }

    pub fn to_json(&self) -> Value {
        let k = self.reduced.k();
        let verdict = if self.completion_may_be_nonzero() {
            "both necessary conditions hold"
        } else if !self.integral {
            "central character not integral: the completion is zero"
        } else {
            "val(chi2(p)) + |d| < 0: the completion is zero"
        };
        json!({
            "r": rational_json(&self.r),
            "centralExponent": rational_json(&self.central_exponent),
            "integral": self.integral,
            "inequalityValue": rational_json(&self.inequality_value),
            "inequality": self.inequality,
            "Jprime": self.j_prime,
            "chi2prime": self.chi2_prime.to_json(k),
            "reduced": self.reduced.to_json(),
            "verdict": verdict,
        })
    }
}

/// Parameters `(alpha, alpha~, k, J1, J2)` of the algebraic-times-unramified
/// family.
#[derive(Clone)]
pub struct TemplateParams {
    pub field: Field,
    pub alpha: Elem,
    pub alpha_tilde: Elem,
    pub weights: Vec<i64>,
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
}

/// Hand formulas for the template, and the generic analysis of the datum
/// it induces when that datum is representable.
#[derive(Clone)]
pub struct TemplateAnalysis {
    /// `-(val_F alpha + val_F alpha~) + sum_S (k - 1)`, must be 0.
    pub first: Rational64,
    /// `-val_F alpha~ + sum_{S \ J1} (k - 1)`, must be `>= 0`.
    pub second: Rational64,
    pub r: Rational64,
    pub j3: Vec<usize>,
    pub datum: Option<DatumAnalysis>,
    /// Why no datum was built.
    pub note: Option<String>,
}

impl TemplateParams {
    pub fn from_json(v: &Value) -> Result<TemplateParams> {
        let bad = |m: &str| Error::Parse(format!("template: {m}"));
        let k = field_from_json(v.get("field").ok_or_else(|| bad("missing field"))?)?;
        let alpha = k.from_json(v.get("alpha").ok_or_else(|| bad("missing alpha"))?)?;
        let alpha_tilde = k.from_json(v.get("alphaTilde").ok_or_else(|| bad("missing alphaTilde"))?)?;
        let weights = MultiIndex::from_json(v.get("k").ok_or_else(|| bad("missing k"))?, k.f())?.0;
        let set = |key: &str| match v.get(key) {
            Some(s) => parse_index_set(s),
            None => Ok(Vec::new()),
        };
        let j1 = set("J1")?;
        let j2 = set("J2")?;
        TemplateParams::new(k, alpha, alpha_tilde, weights, j1, j2)
    }

    pub fn new(
        field: Field,
        alpha: Elem,
        alpha_tilde: Elem,
        weights: Vec<i64>,
        mut j1: Vec<usize>,
        mut j2: Vec<usize>,
    ) -> Result<TemplateParams> {
        let f = field.f();
        let bad = |m: &str| Err(Error::Precondition(format!("template: {m}")));
        if weights.len() != f || weights.iter().any(|&w| w < 2) {
            return bad("k must have one entry >= 2 per embedding");
        }
        if alpha.is_zero() || alpha_tilde.is_zero() {
            return bad("alpha and alphaTilde must be nonzero");
        }
        j1.sort_unstable();
        j1.dedup();
        j2.sort_unstable();
        j2.dedup();
        if j2.iter().any(|&s| s >= f) || j1.iter().any(|s| !j2.contains(s)) {
            return bad("need J1 inside J2 inside S");
        }
        Ok(TemplateParams {
            field,
            alpha,
            alpha_tilde,
            weights,
            j1,
            j2,
        })
    }

    fn val_f(&self, x: &Elem) -> i64 {
        x.val().unwrap() * self.field.f() as i64
    }

    fn sum_km1(&self, pred: impl Fn(usize) -> bool) -> i64 {
        (0..self.field.f()).filter(|&s| pred(s)).map(|s| self.weights[s] - 1).sum()
    }

    /// The characters and weights `(chi1, chi2, J2, k - 2)`. The unramified
    /// parts absorb `p^{sum a}` from the algebraic parts, which needs the
    /// sums to be divisible by `f`.
    pub fn datum(&self) -> Result<InductionDatum> {
        let k = &self.field;
        let f = k.f();
        let fi = f as i64;
        let mut alg1 = vec![0; f];
        let mut alg2 = vec![0; f];
        let mut d = vec![0; f];
        for s in 0..f {
            if self.j1.contains(&s) {
                alg1[s] = self.weights[s] - 1;
                alg2[s] = -1;
            } else if self.j2.contains(&s) {
                alg2[s] = self.weights[s] - 2;
            } else {
                d[s] = self.weights[s] - 2;
            }
        }
        let s1: i64 = alg1.iter().sum();
        let s2: i64 = alg2.iter().sum();
        if s1 % fi != 0 || s2 % fi != 0 {
            return Err(Error::Precondition(format!(
                "algebraic exponent sums {s1}, {s2} are not divisible by f = {f}"
            )));
        }
        let lambda1 = k.mul(&k.inv(&self.alpha)?, &k.p_pow(s1 / fi));
        let lambda2 = k.mul(&k.div(&k.p_pow(1), &self.alpha_tilde)?, &k.p_pow(s2 / fi));
        let mut chi1 = Character::unr(k, lambda1);
        chi1.alg = MultiIndex(alg1);
        chi1.j = self.j2.clone();
        let mut chi2 = Character::unr(k, lambda2);
        chi2.alg = MultiIndex(alg2);
        chi2.j = self.j2.clone();
        InductionDatum::new(k.clone(), self.j2.clone(), MultiIndex(d), chi1, chi2)
    }

    pub fn analyze(&self) -> TemplateAnalysis {
        let f = self.field.f();
        let va = self.val_f(&self.alpha);
        let vt = self.val_f(&self.alpha_tilde);
        let first = -(va + vt) + self.sum_km1(|_| true);
        let second = -vt + self.sum_km1(|s| !self.j1.contains(&s));
        let r = va - self.sum_km1(|s| self.j1.contains(&s));
        let mut j3 = self.j2.clone();
        for s in 0..f {
            if !self.j2.contains(&s) && self.weights[s] - 1 > r {
                j3.push(s);
            }
        }
        j3.sort_unstable();
        let (datum, note) = match self.datum().and_then(|d| datum_analysis(&d)) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };
        TemplateAnalysis {
            first: Rational64::from_integer(first),
            second: Rational64::from_integer(second),
            r: Rational64::from_integer(r),
            j3,
            datum,
            note,
        }
    }
}

impl TemplateAnalysis {
    pub fn first_holds(&self) -> bool {
        self.first == Rational64::from_integer(0)
    }

    pub fn second_holds(&self) -> bool {
        self.second >= Rational64::from_integer(0)
    }

    /// Whether the hand formulas agree with the generic analysis.
    pub fn consistent(&self) -> Option<bool> {
        self.datum.as_ref().map(|a| {
            a.central_exponent == self.first
                && a.inequality_value == self.second
                && a.r == self.r
                && a.j_prime == self.j3
        })
    }

    pub fn to_json(&self) -> Value {
        let verdict = if !self.first_holds() || !self.second_holds() {
            "a necessary condition fails: the completion is zero"
        } else {
            "both conditions hold"
        };
        json!({
            "first": rational_json(&self.first),
            "firstHolds": self.first_holds(),
            "second": rational_json(&self.second),
            "secondHolds": self.second_holds(),
            "r": rational_json(&self.r),
            "J3": self.j3,
            "verdict": verdict,
            "generic": self.datum.as_ref().map(DatumAnalysis::to_json),
            "consistent": self.consistent(),
            "note": self.note,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(p: u64) -> Field {
        Field::new(FieldDescriptor { p, f: 1 }).unwrap()
    }

    fn trivial_datum(k: &Field, d: i64) -> InductionDatum {
        InductionDatum::new(
            k.clone(),
            vec![],
            MultiIndex(vec![d]),
            Character::trivial(k),
            Character::trivial(k),
        )
        .unwrap()
    }

    #[test]
    fn trivial_characters_have_r_zero_and_full_j_prime() {
        let k = qp(5);
        let a = datum_analysis(&trivial_datum(&k, 0)).unwrap();
        assert_eq!(a.r, Rational64::from_integer(0));
        assert!(a.integral);
        assert!(a.inequality);
        assert_eq!(a.j_prime, vec![0]);
        assert!(a.reduced.is_reduced().unwrap());
    }

    #[test]
    fn nonzero_d_breaks_integrality_for_trivial_characters() {
        let k = qp(3);
        let a = datum_analysis(&trivial_datum(&k, 2)).unwrap();
        assert!(!a.integral);
        assert_eq!(a.central_exponent, Rational64::from_integer(2));
    }

    #[test]
    fn algebraic_part_outside_j_is_rejected() {
        let k = qp(3);
        let chi = Character::algebraic(&k, &[1]);
        let e = InductionDatum::new(k.clone(), vec![], MultiIndex(vec![0]), chi, Character::trivial(&k));
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn reduction_moves_large_weights_into_j_prime() {
        let k = qp(3);
        // r = 1 and d = 1: d + 1 = 2 > 1.
        let chi1 = Character::unr(&k, k.p_pow(-1));
        let chi2 = Character::trivial(&k);
        let dat = InductionDatum::new(k.clone(), vec![], MultiIndex(vec![1]), chi1, chi2).unwrap();
        let red = dat.reduced().unwrap();
        assert_eq!(red.j, vec![0]);
        assert_eq!(red.d.0, vec![0]);
        assert_eq!(red.chi2.alg.0, vec![1]);
    }

    #[test]
    fn template_weight_two_example() {
        let k = qp(7);
        let t = TemplateParams::new(k.clone(), k.one(), k.p_pow(1), vec![2], vec![], vec![]).unwrap();
        let a = t.analyze();
        assert_eq!(a.first, Rational64::from_integer(0));
        assert_eq!(a.second, Rational64::from_integer(0));
        assert_eq!(a.r, Rational64::from_integer(0));
        assert_eq!(a.j3, vec![0]);
        assert_eq!(a.consistent(), Some(true));
    }

    #[test]
    fn datum_json_round_trip() {
        let k = qp(3);
        let chi1 = Character::unr(&k, k.p_pow(-2));
        let chi2 = Character::unr(&k, k.p_pow(1));
        let dat = InductionDatum::new(k.clone(), vec![], MultiIndex(vec![1]), chi1, chi2).unwrap();
        let back = InductionDatum::from_json(&dat.to_json()).unwrap();
        assert_eq!(back.to_json(), dat.to_json());
    }

    #[test]
    fn shorthand_datum_parses() {
        let v = serde_json::json!({
            "field": {"p": 3, "f": 1},
            "d": [1],
            "chi1": {"lambda": "1/9"},
            "chi2": {"lambda": 3},
        });
        let dat = InductionDatum::from_json(&v).unwrap();
        assert_eq!(dat.r().unwrap(), Rational64::from_integer(2));
        assert_eq!(dat.central_exponent().unwrap(), Rational64::from_integer(0));
    }
}
