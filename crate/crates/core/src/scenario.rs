//! JSON scenario files: a Hilbert-space dimension, named observables and
//! named states. Complex numbers are `[re, im]` pairs.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "observables": [
//!     { "name": "Z", "builtin": "pauli_z" },
//!     { "name": "P", "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] }
//!   ],
//!   "states": [
//!     { "name": "zero", "vector": [[1, 0], [0, 0]] },
//!     { "name": "one", "vector": [[0, 0], [1, 0]] },
//!     { "name": "mixed", "mixture": [{ "weight": 0.5, "state": "zero" }, { "weight": 0.5, "state": "one" }] }
//!   ]
//! }
//! ```
//!
//! Builtins: `pauli_x`, `pauli_y`, `pauli_z`, `identity`, `identity(d)`,
//! `diag(a, b, …)`, `spin_x`, `spin_y`, `spin_z` (spin 1, dimension 3).

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix, C64, DEFAULT_CLUSTER_TOL};
use crate::quantum::{builtins, Observable, State};

pub type ComplexPair = [f64; 2];
pub type ComplexRows = Vec<Vec<ComplexPair>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub weight: f64,
    /// Name of a state given by `vector`.
    pub state: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Vec<MixtureTerm>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub states: Vec<StateSpec>,
}

/// A parsed and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub dimension: usize,
    pub observables: Vec<Observable>,
    pub states: Vec<(String, State)>,
}

impl Scenario {
    pub fn observable(&self, name: &str) -> Result<&Observable> {
        self.observables
            .iter()
            .find(|o| o.name() == name)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    pub fn state(&self, name: &str) -> Result<&State> {
        self.states
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn resolve(&self) -> Result<Scenario> {
        self.resolve_with(DEFAULT_CLUSTER_TOL)
    }

    pub fn resolve_with(&self, cluster_tol: f64) -> Result<Scenario> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        unique(
            self.observables.iter().map(|o| o.name.as_str()),
            "observable",
        )?;
        unique(self.states.iter().map(|s| s.name.as_str()), "state")?;

        let observables = self
            .observables
            .iter()
            .map(|spec| {
                let ctx = format!("observable '{}'", spec.name);
                let matrix = match (&spec.matrix, &spec.builtin) {
                    (Some(rows), None) => parse_matrix(rows, d, &ctx)?,
                    (None, Some(b)) => builtin(b, d, &ctx)?,
                    _ => {
                        return Err(Error::Parse(format!(
                            "{ctx}: give exactly one of 'matrix' or 'builtin'"
                        )))
                    }
                };
                Observable::with_cluster_tol(&spec.name, matrix, cluster_tol)
                    .map_err(|e| Error::Parse(format!("{ctx}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut states: Vec<(String, State)> = Vec::with_capacity(self.states.len());
        for spec in &self.states {
            let ctx = format!("state '{}'", spec.name);
            let state = match (&spec.density, &spec.vector, &spec.mixture) {
                (Some(rows), None, None) => State::from_matrix(parse_matrix(rows, d, &ctx)?),
                (None, Some(v), None) => State::pure(&parse_vector(v, d, &ctx)?),
                (None, None, Some(terms)) => {
                    let parts = terms
                        .iter()
                        .map(|t| {
                            let v = self
                                .states
                                .iter()
                                .find(|s| s.name == t.state)
                                .and_then(|s| s.vector.as_ref())
                                .ok_or_else(|| {
                                    Error::Parse(format!(
                                        "{ctx}: '{}' is not a vector state",
                                        t.state
                                    ))
                                })?;
                            Ok((t.weight, parse_vector(v, d, &ctx)?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    State::mixture(&parts)
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "{ctx}: give exactly one of 'density', 'vector' or 'mixture'"
                    )))
                }
            }
            .map_err(|e| match e {
                Error::Parse(_) => e,
                other => Error::Parse(format!("{ctx}: {other}")),
            })?;
            states.push((spec.name.clone(), state));
        }
        Ok(Scenario {
            dimension: d,
            observables,
            states,
        })
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, kind: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Parse(format!("duplicate {kind} name '{n}'")));
        }
    }
    Ok(())
}

fn parse_matrix(rows: &ComplexRows, d: usize, ctx: &str) -> Result<CMatrix> {
    if rows.len() != d {
        return Err(Error::Parse(format!(
            "{ctx}: {} rows, expected {d}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Parse(format!(
                "{ctx}: row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
    }
    CMatrix::from_rows(
        rows.iter()
            .map(|r| r.iter().map(|z| c(z[0], z[1])).collect())
            .collect(),
    )
    .map_err(|e| Error::Parse(format!("{ctx}: {e}")))
}

fn parse_vector(v: &[ComplexPair], d: usize, ctx: &str) -> Result<Vec<C64>> {
    if v.len() != d {
        return Err(Error::Parse(format!(
            "{ctx}: vector has {} entries, expected {d}",
            v.len()
        )));
    }
    Ok(v.iter().map(|z| c(z[0], z[1])).collect())
}

fn builtin(name: &str, d: usize, ctx: &str) -> Result<CMatrix> {
    let need = |want: usize, m: CMatrix| {
        if want == d {
            Ok(m)
        } else {
            Err(Error::Parse(format!(
                "{ctx}: builtin '{name}' has dimension {want}, scenario has {d}"
            )))
        }
    };
    let args = |prefix: &str| -> Option<&str> { name.strip_prefix(prefix)?.strip_suffix(')') };
    match name.trim() {
        "pauli_x" => need(2, builtins::pauli_x()),
        "pauli_y" => need(2, builtins::pauli_y()),
        "pauli_z" => need(2, builtins::pauli_z()),
        "spin_x" => need(3, builtins::spin1_x()),
        "spin_y" => need(3, builtins::spin1_y()),
        "spin_z" => need(3, builtins::spin1_z()),
        "identity" => Ok(CMatrix::identity(d)),
        _ => {
            if let Some(a) = args("identity(") {
                let n: usize = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{ctx}: bad identity size '{a}'")))?;
                need(n, CMatrix::identity(n))
            } else if let Some(a) = args("diag(") {
                let values = a
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Parse(format!("{ctx}: bad diag entries '{a}'")))?;
                need(values.len(), CMatrix::from_real_diagonal(&values))
            } else {
                Err(Error::Parse(format!("{ctx}: unknown builtin '{name}'")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUBIT: &str = r#"{
        "dimension": 2,
        "observables": [
            {"name": "Z", "builtin": "pauli_z"},
            {"name": "X", "matrix": [[[0,0],[1,0]],[[1,0],[0,0]]]}
        ],
        "states": [
            {"name": "zero", "vector": [[1,0],[0,0]]},
            {"name": "one", "vector": [[0,0],[1,0]]},
            {"name": "half", "mixture": [{"weight": 0.5, "state": "zero"}, {"weight": 0.5, "state": "one"}]},
            {"name": "rho", "density": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}
        ]
    }"#;

    #[test]
    fn parses_qubit_scenario() {
        let s = ScenarioFile::from_json(QUBIT).unwrap().resolve().unwrap();
        assert_eq!(s.observables.len(), 2);
        assert_eq!(s.observable("X").unwrap().eigenvalues(), &[-1.0, 1.0]);
        let half = s.state("half").unwrap();
        assert_eq!(half.decomposition().unwrap().len(), 2);
        assert!(
            half.matrix()
                .sub(s.state("rho").unwrap().matrix())
                .unwrap()
                .max_abs_norm()
                < 1e-15
        );
        assert!(matches!(s.state("nope"), Err(Error::UnknownState(_))));
        assert!(matches!(
            s.observable("Y"),
            Err(Error::UnknownObservable(_))
        ));
    }

    #[test]
    fn builtins_resolve() {
        let text = r#"{"dimension": 3, "observables": [
            {"name": "A", "builtin": "diag(1,2,2)"},
            {"name": "I", "builtin": "identity(3)"},
            {"name": "S", "builtin": "spin_z"}]}"#;
        let s = ScenarioFile::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(s.observable("A").unwrap().eigenvalues(), &[1.0, 2.0]);
        assert_eq!(s.observable("S").unwrap().eigenvalues(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn malformed_row_names_observable() {
        let text = r#"{"dimension": 2, "observables": [
            {"name": "Bad", "matrix": [[[0,0],[1,0],[2,0]],[[1,0],[0,0]]]}]}"#;
        let err = ScenarioFile::from_json(text)
            .unwrap()
            .resolve()
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("observable 'Bad'") && err.contains("row 0"),
            "{err}"
        );
    }

    #[test]
    fn rejects_bad_input() {
        let dup = r#"{"dimension": 2, "observables": [{"name": "Z", "builtin": "pauli_z"}, {"name": "Z", "builtin": "pauli_x"}]}"#;
        assert!(ScenarioFile::from_json(dup).unwrap().resolve().is_err());
        let wrong_dim = r#"{"dimension": 3, "observables": [{"name": "Z", "builtin": "pauli_z"}]}"#;
        assert!(ScenarioFile::from_json(wrong_dim)
            .unwrap()
            .resolve()
            .is_err());
        let both = r#"{"dimension": 2, "observables": [{"name": "Z", "builtin": "pauli_z", "matrix": []}]}"#;
        assert!(ScenarioFile::from_json(both).unwrap().resolve().is_err());
        let trace = r#"{"dimension": 2, "observables": [], "states": [{"name": "r", "density": [[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        let err = ScenarioFile::from_json(trace)
            .unwrap()
            .resolve()
            .unwrap_err()
            .to_string();
        assert!(err.contains("state 'r'"), "{err}");
        let syntax = r#"{"dimension": 2, "observables": [}"#;
        let err = ScenarioFile::from_json(syntax).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }
}
