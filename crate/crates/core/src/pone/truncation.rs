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


//! Truncations `f_n = 1_{O_F \ D(0, n)} psi'(z) z^{d' - e}` of the twisted
//! powers, whose limits span the subspace killed by the completion.

use num_rational::Rational64;
use serde_json::{json, Value};

use crate::chars::MultiIndex;
use crate::field::{rational_json, Field, LogNorm};
use crate::funcspace::{AffineFactor, LocalPolynomial, LocallyPolyFunction, NormInterval, RemainderProfile};
use crate::pone::datum::InductionDatum;
use crate::{Error, Result};

/// Series degree used for negative powers on `J'` directions.
pub const SERIES_DEGREE: i64 = 8;

/// Largest enumeration set used for certified lower bounds.
const ENUM_POINTS: u64 = 729;

/// One truncation, with a bound on the discarded series tail.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub n: u32,
    pub f: LocallyPolyFunction,
    pub tail: LogNorm,
}

impl Truncation {
    /// Upper bound on `||f_n||_{C^r}`, tail included.
    pub fn cr_upper(&self, k: &Field, r: Rational64) -> LogNorm {
        self.f
            .cr_norm_upper(k, r)
            .max(tail_term(self.tail, self.f.level, r))
    }
}

/// The truncations for one exponent, with the norms of consecutive
/// differences and remainder profiles.
#[derive(Clone, Debug)]
pub struct TruncationFamily {
    pub exponent: MultiIndex,
    pub truncations: Vec<Truncation>,
    /// `(n, ||f_{n+1} - f_n||)`.
    pub differences: Vec<(u32, NormInterval)>,
    pub profiles: Vec<(u32, RemainderProfile)>,
}

fn tail_term(tail: LogNorm, level: u32, r: Rational64) -> LogNorm {
    tail.times_q_pow(r * Rational64::from_integer(level as i64))
}

fn enum_level(k: &Field, level: u32) -> u32 {
    let mut m = level + 1;
    while m > 1 && k.q().pow(m) > ENUM_POINTS {
        m -= 1;
    }
    m
}

/// `f_n` on the reduced datum at level `n - 1 + n0`.
pub fn truncation(reduced: &InductionDatum, e: &MultiIndex, n: u32, degree: i64) -> Result<Truncation> {
    let k = reduced.k();
    let psi = &reduced.psi;
    let n0 = psi.analyticity_level_at_1(k);
    let level = n.max(1) - 1 + n0;
    let power = psi.alg.add(&reduced.d).sub(e);
    let mut tail = LogNorm::ZERO;
    let f = LocallyPolyFunction::from_fn(k, level, |_, b| {
        match b.val() {
            Some(w) if w < n as i64 => {
                let scalar = k.mul(&psi.eval(k, b)?, &k.monomial(b, &psi.alg.neg().0)?);
                let fac = AffineFactor {
                    alpha: k.zero(),
                    beta: k.one(),
                    exps: power.clone(),
                };
                let (p, t) = LocalPolynomial::affine_series(k, b, level as i64, &scalar, &[fac], degree)?;
                tail = tail.max(t);
                Ok(p)
            }
            _ => Ok(LocalPolynomial::zero(*b)),
        }
    })?;
    Ok(Truncation {
        n,
        f: f.with_type(&reduced.j, &reduced.d.0),
        tail,
    })
}

/// Truncations `f_n` for `n` in `levels` and each exponent `e`, on the
/// reduced datum. Each `e` must satisfy `r - |e| > 0`.
pub fn twisted_power_truncations(
    datum: &InductionDatum,
    levels: &[u32],
    exponents: &[MultiIndex],
    degree: i64,
) -> Result<Vec<TruncationFamily>> {
    let reduced = datum.reduced()?;
    let k = reduced.k();
    let r = reduced.r()?;
    let mut out = Vec::new();
    for e in exponents {
        if r - Rational64::from_integer(e.total()) <= Rational64::from_integer(0) {
            return Err(Error::Precondition(format!(
                "exponent {:?} has r - |e| <= 0",
                e.0
            )));
        }
        if !e.is_nonneg() || (0..k.f()).any(|s| !reduced.j.contains(&s) && e.0[s] > reduced.d.0[s]) {
            return Err(Error::Precondition(format!("exponent {:?} exceeds d off J'", e.0)));
        }
        let truncations: Vec<Truncation> = levels
            .iter()
            .map(|&n| truncation(&reduced, e, n, degree))
            .collect::<Result<_>>()?;
        let mut differences = Vec::new();
        let mut profiles = Vec::new();
        for t in &truncations {
            let hs: Vec<u32> = (1..=t.f.level).collect();
            let m = enum_level(k, t.f.level);
            profiles.push((t.n, t.f.remainder_profile(k, r, &hs, m)?));
        }
        for pair in truncations.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.n != a.n + 1 {
                continue;
            }
            let diff = b.f.sub(k, &a.f)?;
            let tail = tail_term(a.tail.max(b.tail), diff.level, r);
            let upper = diff.cr_norm_upper(k, r).max(tail);
            let enumerated = diff.cr_norm_enum(k, r, enum_level(k, diff.level))?;
            let lower = if enumerated > tail { enumerated } else { LogNorm::ZERO };
            differences.push((a.n, NormInterval { lower, upper }));
        }
        out.push(TruncationFamily {
            exponent: e.clone(),
            truncations,
            differences,
            profiles,
        });
    }
    Ok(out)
}

impl TruncationFamily {
    pub fn to_json(&self, k: &Field, r: Rational64) -> Value {
        json!({
            "exponent": self.exponent.to_json(),
            "truncations": self.truncations.iter().map(|t| json!({
                "n": t.n,
                "level": t.f.level,
                "crUpper": t.cr_upper(k, r).to_json(),
                "tail": t.tail.to_json(),
            })).collect::<Vec<_>>(),
            "differences": self.differences.iter().map(|(n, iv)| json!({
                "n": n,
                "lower": iv.lower.to_json(),
                "upper": iv.upper.to_json(),
            })).collect::<Vec<_>>(),
            "profiles": self.profiles.iter().map(|(n, p)| json!({
                "n": n,
                "entries": p.entries.iter().map(|(h, v)| json!({"h": h, "value": v.to_json()})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "r": rational_json(&r),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::Character;
    use crate::field::FieldDescriptor;

    fn datum() -> InductionDatum {
        let k = Field::new(FieldDescriptor { p: 3, f: 1 }).unwrap();
        let chi1 = Character::unr(&k, k.p_pow(-1));
        let chi2 = Character::unr(&k, k.p_pow(1));
        InductionDatum::new(k, vec![], MultiIndex(vec![0]), chi1, chi2).unwrap()
    }

    #[test]
    fn exponents_outside_the_strict_region_are_rejected() {
        let dat = datum();
        let e = twisted_power_truncations(&dat, &[1, 2], &[MultiIndex(vec![1])], 4);
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn difference_norms_decay_at_rate_r() {
        let dat = datum();
        let k = dat.k();
        let fams = twisted_power_truncations(&dat, &[1, 2, 3, 4, 5], &[MultiIndex(vec![0])], 4).unwrap();
        let diffs = &fams[0].differences;
        assert_eq!(diffs.len(), 4);
        for w in diffs.windows(2) {
            let step = w[1].1.upper.q_exponent().unwrap() - w[0].1.upper.q_exponent().unwrap();
            assert_eq!(step, Rational64::from_integer(-1));
        }
        for t in &fams[0].truncations {
            assert!(t.f.subspace_check(k, &[], &[0]));
        }
    }

    #[test]
    fn truncation_matches_pointwise_formula() {
        let dat = datum();
        let k = dat.k();
        let t = truncation(&dat.reduced().unwrap(), &MultiIndex(vec![0]), 3, 4).unwrap();
        for v in 1..200i64 {
            let z = k.from_i64(v);
            let want = if z.val().unwrap() < 3 { dat.psi.eval(k, &z).unwrap() } else { k.zero() };
            assert!(k.eq(&t.f.eval(k, &z).unwrap(), &want));
        }
    }
}
