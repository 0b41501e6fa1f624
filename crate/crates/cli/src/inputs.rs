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


//! Reading input files, with optional generated tables.

use std::path::Path;

use padic_core::dist::MomentTable;
use padic_core::field::Field;
use padic_core::pone::datum::field_from_json;
use padic_core::pone::TwoChartDistribution;
use padic_core::Error;
use serde_json::Value;

use crate::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses `p,f` or `p`.
pub fn parse_field_flag(s: &str) -> Result<Field, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<u64>()
            .map_err(|_| CliError::Input(format!("--field expects p,f but got '{s}'")))
    };
    let (p, f) = match parts.as_slice() {
        [p] => (num(p)?, 1),
        [p, f] => (num(p)?, num(f)?),
        _ => return Err(CliError::Input(format!("--field expects p,f but got '{s}'"))),
    };
    Ok(field_from_json(&serde_json::json!({"p": p, "f": f}))?)
}

/// The `--field` flag wins over a `"field"` key in the file.
pub fn resolve_field(flag: &Option<Field>, v: &Value) -> Result<Field, CliError> {
    if let Some(k) = flag {
        return Ok(k.clone());
    }
    match v.get("field") {
        Some(fv) => Ok(field_from_json(fv)?),
        None => Err(CliError::Input("no field: pass --field p,f or add a \"field\" key".into())),
    }
}

fn gen_u64(g: &Value, key: &str, default: u64) -> Result<u64, CliError> {
    match g.get(key) {
        None => Ok(default),
        Some(x) => x
            .as_u64()
            .ok_or_else(|| CliError::Input(format!("generate.{key} must be a nonnegative integer"))),
    }
}

/// A moment table given by `values` or by a `generate` block
/// (`dirac`, `growth`, `random`, `zero`).
pub fn moment_table(k: &Field, v: &Value, seed: Option<u64>) -> Result<MomentTable, CliError> {
    let Some(g) = v.get("generate") else {
        return Ok(MomentTable::from_json(k, v)?);
    };
    let nmax = gen_u64(g, "Nmax", 6)? as u32;
    let mmax = gen_u64(g, "Mmax", 2)? as i64;
    let kind = g.get("kind").and_then(Value::as_str).unwrap_or("");
    let t = match kind {
        "dirac" => {
            let a = k.from_json(g.get("a").unwrap_or(&Value::from(0)))?;
            MomentTable::dirac(k, &a, nmax, mmax)?
        }
        "growth" => {
            let s = g
                .get("s")
                .and_then(Value::as_i64)
                .ok_or_else(|| CliError::Input("generate.s must be an integer".into()))?;
            MomentTable::growth(k, nmax, mmax, s)?
        }
        "random" => {
            let seed = seed.unwrap_or(gen_u64(g, "seed", 0)?);
            MomentTable::random_consistent(k, seed, nmax, mmax, 0)?
        }
        "zero" => MomentTable::zero(k, nmax, mmax),
        other => return Err(CliError::Input(format!("unknown table kind '{other}'"))),
    };
    Ok(t)
}

/// A two-chart table given by `mu1`/`mu2` or by a `generate` block
/// (`random`, `zero`, `diracOrigin`).
pub fn two_chart(k: &Field, v: &Value, seed: Option<u64>) -> Result<TwoChartDistribution, CliError> {
    let Some(g) = v.get("generate") else {
        return Ok(TwoChartDistribution::from_json(k, v)?);
    };
    let nmax = gen_u64(g, "Nmax", 6)? as u32;
    let mmax = gen_u64(g, "Mmax", 3)? as i64;
    let kind = g.get("kind").and_then(Value::as_str).unwrap_or("");
    let mu = match kind {
        "random" => {
            let seed = seed.unwrap_or(gen_u64(g, "seed", 0)?);
            TwoChartDistribution::random(k, seed, nmax, mmax, 0)?
        }
        "zero" => TwoChartDistribution::zero(k, nmax, mmax),
        "diracOrigin" => TwoChartDistribution::dirac_origin(k, nmax, mmax)?,
        other => return Err(CliError::Input(format!("unknown two-chart kind '{other}'"))),
    };
    Ok(mu)
}

/// Maps library errors onto the exit-code classes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidDescriptor(_) => 2,
        Error::Coverage { .. } => 4,
        _ => 3,
    }
}
