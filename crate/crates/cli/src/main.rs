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


//! `padic`: batch front end over `padic-core`.

mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_rational::Rational64;
use padic_core::chars::MultiIndex;
use padic_core::field::{parse_rational, rational_json, Field, LogNorm};
use padic_core::funcspace::LocallyPolyFunction;
use padic_core::pone::collapse::{nullity_collapse, Certificate, CollapseTarget};
use padic_core::pone::conditions::{cond_a_check, cond_b_check, equivalence_harness, ConditionRange};
use padic_core::pone::{datum_analysis, InductionDatum, TemplateParams};
use padic_core::{selftest, Error};
use serde_json::{json, Value};

use inputs::{moment_table, parse_field_flag, read_json, resolve_field, two_chart};

#[derive(Parser)]
#[command(name = "padic", version, about = "Exact p-adic norms, moment criteria and two-chart checks")]
struct Cli {
    /// Field as `p,f`; overrides a "field" key in the input.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Disk level of the condition range.
    #[arg(long, global = true)]
    range_n: Option<u32>,
    /// Moment degree of the condition range.
    #[arg(long, global = true)]
    range_deg: Option<i64>,
    /// Seed for generated tables.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze an induction datum, or a template parameter set.
    Analyze { input: PathBuf },
    /// Bounds on the C^r norm of a locally polynomial function.
    Crnorm {
        input: PathBuf,
        #[arg(long, default_value = "1")]
        r: String,
        /// Also compare `1_{D(0,n)} f(z/p^n)` with `q^{nr}` times the norm.
        #[arg(long)]
        scale_into: Option<u32>,
    },
    /// Order-r moment bounds of a distribution on O_F.
    Avv {
        input: PathBuf,
        #[arg(long, default_value = "0")]
        r: String,
        /// Budget as a q-exponent.
        #[arg(long, default_value = "0")]
        budget: String,
    },
    /// Condition (A), (B) or both on a two-chart table.
    Cond {
        input: PathBuf,
        #[arg(long)]
        datum: PathBuf,
        #[arg(long, default_value = "both", value_parser = ["A", "B", "both"])]
        side: String,
    },
    /// Both conditions with the implication budgets.
    Equiv {
        input: PathBuf,
        #[arg(long)]
        datum: PathBuf,
    },
    /// Certificate that `p^-t 1_{D(0,n)} x^i` lies in the lattice.
    Collapse {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long, default_value_t = 1)]
        t: i64,
        #[arg(long, default_value_t = 0)]
        n: i64,
        /// Exponent, comma separated.
        #[arg(long, default_value = "0")]
        i: String,
        /// Maximal number of terms.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Re-verify this certificate instead of building one.
        #[arg(long)]
        verify: Option<PathBuf>,
        /// Evaluation points per chart.
        #[arg(long, default_value_t = 30)]
        points: usize,
    },
    /// Runs every acceptance check and prints one report.
    Selftest,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => inputs::exit_code(e) as u8,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn rational_arg(s: &str, name: &str) -> Result<Rational64, CliError> {
    parse_rational(s).map_err(|_| CliError::Input(format!("--{name} expects a rational, got '{s}'")))
}

fn datum_file(path: &std::path::Path) -> Result<InductionDatum, CliError> {
    Ok(InductionDatum::from_json(&read_json(path)?)?)
}

fn range_for(cli: &Cli, mu: &padic_core::pone::TwoChartDistribution) -> ConditionRange {
    let mut range = ConditionRange::default_for(mu);
    if let Some(n) = cli.range_n {
        range.level = n;
    }
    if let Some(d) = cli.range_deg {
        range.degree = d;
    }
    range
}

fn check_table_field(datum: &InductionDatum, k: &Field) -> Result<(), CliError> {
    if datum.k().descriptor() != k.descriptor() {
        return Err(CliError::Input("table and datum use different fields".into()));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let flag = cli.field.as_deref().map(parse_field_flag).transpose()?;
    match &cli.cmd {
        Cmd::Analyze { input } => {
            let v = read_json(input)?;
            if v.get("alpha").is_some() {
                let params = TemplateParams::from_json(&v)?;
                return Ok(json!({"kind": "template", "analysis": params.analyze().to_json()}));
            }
            let datum = InductionDatum::from_json(&v)?;
            Ok(json!({"kind": "datum", "analysis": datum_analysis(&datum)?.to_json()}))
        }
        Cmd::Crnorm { input, r, scale_into } => {
            let v = read_json(input)?;
            let k = resolve_field(&flag, &v)?;
            let r = rational_arg(r, "r")?;
            let f = LocallyPolyFunction::from_json(&k, v.get("function").unwrap_or(&v))?;
            let iv = f.cr_norm(&k, r)?;
            let m = f.default_enum_level();
            let hs: Vec<u32> = (1..=m).collect();
            let profile = f.remainder_profile(&k, r, &hs, m)?;
            let mut report = json!({
                "r": rational_json(&r),
                "enumLevel": m,
                "lower": iv.lower.to_json(),
                "upper": iv.upper.to_json(),
                "exact": iv.lower == iv.upper,
                "remainderProfile": profile.entries.iter()
                    .map(|(h, c)| json!({"h": h, "value": c.to_json()}))
                    .collect::<Vec<_>>(),
            });
            if let Some(n) = scale_into {
                let g = f.scale_into_disk(&k, *n)?;
                let bound = iv.upper.times_q_pow(r * Rational64::from_integer(*n as i64));
                let gu = g.cr_norm_upper(&k, r);
                report["scaled"] = json!({"n": n, "upper": gu.to_json(), "bound": bound.to_json(),
                                          "boundRespected": gu <= bound});
            }
            Ok(report)
        }
        Cmd::Avv { input, r, budget } => {
            let v = read_json(input)?;
            let k = resolve_field(&flag, &v)?;
            let r = rational_arg(r, "r")?;
            let budget = LogNorm::q_pow(rational_arg(budget, "budget")?);
            let t = moment_table(&k, &v, cli.seed)?;
            let all: Vec<usize> = (0..k.f()).collect();
            let rep = t.order_check(r, &all, &vec![0; k.f()], budget)?;
            Ok(json!({"r": rational_json(&r), "budget": budget.to_json(), "report": rep.to_json(&k)}))
        }
        Cmd::Cond { input, datum, side } => {
            let datum = datum_file(datum)?;
            let v = read_json(input)?;
            let k = resolve_field(&flag, &v)?;
            check_table_field(&datum, &k)?;
            let mu = two_chart(&k, &v, cli.seed)?;
            let range = range_for(cli, &mu);
            let mut report = json!({"range": range.to_json()});
            if side != "B" {
                report["A"] = cond_a_check(&mu, &datum, &range)?.to_json(&k);
            }
            if side != "A" {
                report["B"] = cond_b_check(&mu, &datum, &range)?.to_json(&k);
            }
            Ok(report)
        }
        Cmd::Equiv { input, datum } => {
            let datum = datum_file(datum)?;
            let v = read_json(input)?;
            let k = resolve_field(&flag, &v)?;
            check_table_field(&datum, &k)?;
            let mu = two_chart(&k, &v, cli.seed)?;
            let range = range_for(cli, &mu);
            let rep = equivalence_harness(&mu, &datum, &range)?;
            Ok(json!({"range": range.to_json(), "report": rep.to_json(&k)}))
        }
        Cmd::Collapse { datum, t, n, i, budget, verify, points } => {
            let datum = datum_file(datum)?;
            let k = datum.k().clone();
            let seed = cli.seed.unwrap_or(0);
            let cert = match verify {
                Some(path) => {
                    let v = read_json(path)?;
                    Certificate::from_json(&k, v.get("certificate").unwrap_or(&v))?
                }
                None => {
                    let i = i
                        .split(',')
                        .map(|s| s.trim().parse::<i64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| CliError::Input(format!("--i expects integers, got '{i}'")))?;
                    if i.len() != k.f() {
                        return Err(CliError::Input(format!("--i needs {} entries", k.f())));
                    }
                    let target = CollapseTarget { lambda: k.p_pow(-t), n: *n, i: MultiIndex(i) };
                    nullity_collapse(&datum, &target, *budget)?
                }
            };
            let check = cert.verify(&datum, *points, seed)?;
            let verification = json!({
                "points": check.points,
                "mismatches": check.mismatches,
                "allIntegral": check.all_integral,
                "minCoeffValuation": check.min_coeff_val,
                "ok": check.ok(),
            });
            if verify.is_some() {
                return Ok(json!({"verification": verification}));
            }
            Ok(json!({"certificate": cert.to_json(&k), "verification": verification}))
        }
        Cmd::Selftest => Ok(selftest::run_all()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let mut text = serde_json::to_string(&report).expect("reports serialize");
            text.push('\n');
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => {
                    use std::io::Write;
                    // A closed pipe is not an error for a report printer.
                    let _ = std::io::stdout().lock().write_all(text.as_bytes());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
