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

//! Exact p-adic analysis on the ring of integers of an unramified extension
//! of Q_p: C^r functions, moment distributions, and the two-chart model of
//! principal series on P^1.

pub mod chars;
pub mod dist;
pub mod field;
pub mod funcspace;
pub mod pone;
pub mod selftest;

use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid field descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("coverage exceeded at a={a} n={n} m={m:?}")]
    Coverage { a: String, n: i64, m: Vec<i64> },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient level: {0}")]
    InsufficientLevel(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
