//! Pass/fail records shared by every audit.

use serde::Serialize;

/// One audited claim. `margin` is the worst slack seen, positive when the
/// claim holds with room to spare.
#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_time: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Claim {
    pub fn new(name: impl Into<String>, passed: bool, margin: f64) -> Self {
        Self { name: name.into(), passed, margin, worst_time: None, note: String::new() }
    }

    pub fn at(mut self, t: Option<f64>) -> Self {
        self.worst_time = t;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Running minimum of `slack + tol` over a sequence of checks. The claim
/// reports the raw slack at the worst point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Worst {
    margin: f64,
    slack: f64,
    time: Option<f64>,
}

impl Worst {
    pub fn new() -> Self {
        Self { margin: f64::INFINITY, slack: f64::INFINITY, time: None }
    }

    /// Record a check with slack `slack` (>= 0 when it holds exactly) and
    /// allowed tolerance `tol`.
    pub fn update(&mut self, slack: f64, tol: f64, t: f64) {
        let m = slack + tol;
        if m < self.margin || m.is_nan() {
            self.margin = m;
            self.slack = slack;
            self.time = Some(t);
        }
    }

    pub fn holds(&self) -> bool {
        self.margin >= 0.0
    }

    pub fn claim(self, name: &str) -> Claim {
        Claim::new(name, self.holds(), self.slack).at(self.time)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub claims: Vec<Claim>,
}

impl AuditReport {
    pub fn new(claims: Vec<Claim>) -> Self {
        let passed = claims.iter().all(|c| c.passed);
        Self { passed, claims }
    }

    pub fn claim(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Claim> {
        self.claims.iter().filter(|c| !c.passed).collect()
    }
}
