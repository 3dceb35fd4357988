use serde::{Deserialize, Serialize};

/// One named residual compared against a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual ≤ tolerance`; a NaN residual fails.
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// A check that must hold exactly (0/1 residual).
    pub fn condition(name: impl Into<String>, holds: bool) -> Self {
        Check {
            name: name.into(),
            residual: if holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass: holds,
        }
    }
}

/// Running maximum of a residual.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct MaxResidual(pub f64);

impl MaxResidual {
    pub fn push(&mut self, r: f64) {
        if r.is_nan() || r > self.0 {
            self.0 = r;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }
}
