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


//! The two-chart model of principal series on `P^1(F)`.

pub mod action;
pub mod collapse;
pub mod conditions;
pub mod datum;
pub mod engine;
pub mod truncation;

pub use action::{
    act_eval, bruhat_decompose, lattice_generators, Acted, BruhatFactor, Chart, ChartEval, Mat2,
    Region, Shape, TwoChartFunction, XTerm,
};
pub use collapse::{nullity_collapse, Certificate, CollapseTarget};
pub use datum::{datum_analysis, DatumAnalysis, InductionDatum, TemplateAnalysis, TemplateParams};
pub use engine::{Engine, TwoChartDistribution};
