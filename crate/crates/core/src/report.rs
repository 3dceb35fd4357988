//! Command reports and their text and JSON renderings.
//!
//! The text form is rendered from the same JSON value, so every number it
//! prints appears verbatim in the JSON form.

use serde::Serialize;
use serde_json::Value;

use crate::check::Check;
use crate::compat::{CompatibilityReport, OrderWitness};
use crate::matrix::CMatrix;
use crate::ontic::{Axis, BbReport, KernelTable, ModelDocument, StateWeights, VariationReport};
use crate::quantum::SequentialDistribution;
use crate::sampler::{EmpiricalComparison, ShotRecord};
use crate::scenario::ComplexPair;

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityBlock {
    pub observables: Vec<String>,
    /// `matrix[i][j]` is true when observables `i` and `j` are compatible.
    pub matrix: Vec<Vec<bool>>,
    pub pairs: Vec<CompatibilityReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TablePair {
    pub forward: SequentialDistribution,
    pub reverse: SequentialDistribution,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessBlock {
    pub pair: (String, String),
    pub subsets: (Vec<f64>, Vec<f64>),
    pub gap: f64,
    pub sequential_gap: f64,
    pub vector: Vec<ComplexPair>,
    pub state: Vec<Vec<ComplexPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<TablePair>,
}

pub(crate) fn complex_rows(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl WitnessBlock {
    pub fn new(w: &OrderWitness, tables: Option<TablePair>) -> Self {
        WitnessBlock {
            pair: w.pair.clone(),
            subsets: w.subset_values.clone(),
            gap: w.gap,
            sequential_gap: w.sequential_gap,
            vector: w.witness_vector.iter().map(|z| [z.re, z.im]).collect(),
            state: complex_rows(w.witness_state.matrix()),
            tables,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelBlock {
    pub lambda_size: usize,
    pub axes: Vec<Axis>,
    pub weights: Vec<StateWeights>,
    pub kernels: Vec<KernelTable>,
}

impl From<ModelDocument> for ModelBlock {
    fn from(d: ModelDocument) -> Self {
        ModelBlock {
            lambda_size: d.lambda_size,
            axes: d.axes,
            weights: d.weights,
            kernels: d.kernels,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationBlock {
    pub instances: usize,
    pub trials_per_instance: usize,
    pub violations: usize,
    pub max_closed_form_residual: f64,
    pub max_shortfall: f64,
}

impl VariationBlock {
    pub fn from_reports(reports: &[VariationReport], trials: usize) -> Self {
        let mut block = VariationBlock {
            instances: reports.len(),
            trials_per_instance: trials,
            violations: 0,
            max_closed_form_residual: 0.0,
            max_shortfall: 0.0,
        };
        for r in reports {
            block.violations += r.violations;
            block.max_closed_form_residual = block
                .max_closed_form_residual
                .max((r.conditioned_distance - r.closed_form).abs());
            if let Some(m) = r.min_sampled_distance {
                block.max_shortfall = block.max_shortfall.max(r.closed_form - m);
            }
        }
        block
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBlock {
    pub record: ShotRecord,
    pub comparison: EmpiricalComparison,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub pass: bool,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<CompatibilityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variation: Option<VariationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb: Option<BbReport>,
}

impl Report {
    pub fn new(command: &str, scenario: &str) -> Self {
        Report {
            command: command.to_string(),
            scenario: scenario.to_string(),
            seed: None,
            pass: true,
            summary: Vec::new(),
            checks: Vec::new(),
            compatibility: None,
            witness: None,
            model: None,
            variation: None,
            samples: None,
            bb: None,
        }
    }

    pub fn add_checks(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        if let Value::Object(map) = &value {
            for (key, v) in map {
                match key.as_str() {
                    "checks" => render_checks(v, &mut out),
                    "summary" => {
                        for line in v.as_array().into_iter().flatten() {
                            out.push_str(&format!("* {}\n", line.as_str().unwrap_or_default()));
                        }
                    }
                    _ => render(key, v, 0, &mut out),
                }
            }
        }
        out
    }
}

fn render_checks(v: &Value, out: &mut String) {
    let checks = v.as_array().map(Vec::as_slice).unwrap_or_default();
    if checks.is_empty() {
        return;
    }
    out.push_str("checks:\n");
    let width = checks
        .iter()
        .filter_map(|c| c["name"].as_str())
        .map(str::len)
        .max()
        .unwrap_or(0);
    for c in checks {
        let verdict = if c["pass"].as_bool() == Some(true) {
            "PASS"
        } else {
            "FAIL"
        };
        out.push_str(&format!(
            "  {verdict}  {:<width$}  residual={}  tolerance={}\n",
            c["name"].as_str().unwrap_or_default(),
            c["residual"],
            c["tolerance"],
        ));
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

/// Arrays of scalars, or of arrays of scalars, print on one line.
fn is_compact(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|i| {
            is_scalar(i) || matches!(i, Value::Array(inner) if inner.iter().all(is_scalar))
        }),
        _ => is_scalar(v),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(key: &str, v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    if is_scalar(v) {
        out.push_str(&format!("{pad}{key}: {}\n", scalar(v)));
    } else if is_compact(v) {
        out.push_str(&format!("{pad}{key}: {v}\n"));
    } else {
        out.push_str(&format!("{pad}{key}:\n"));
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    render(k, child, depth + 1, out);
                }
            }
            Value::Array(items) => {
                let item_pad = "  ".repeat(depth + 1);
                for child in items {
                    match child {
                        Value::Object(map) => {
                            out.push_str(&format!("{item_pad}-\n"));
                            for (k, c) in map {
                                render(k, c, depth + 2, out);
                            }
                        }
                        other if is_compact(other) => {
                            out.push_str(&format!("{item_pad}- {other}\n"))
                        }
                        other => {
                            out.push_str(&format!("{item_pad}-\n"));
                            render("", other, depth + 2, out);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}
