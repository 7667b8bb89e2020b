//! Reports: human-readable lines followed by one machine-readable JSON line.

use std::fmt::Write as _;

use grassmann_core::grassmann::{PlaneSet, Space, Subspace};
use grassmann_core::linalg::Matrix;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Prefix of the machine-readable line in text output.
pub const JSON_PREFIX: &str = "json: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Infeasible,
    /// A non-theorem command produced its answer.
    Done,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Done => 0,
            Verdict::Fail => 1,
            Verdict::Infeasible => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A computed fact, as opposed to a pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Vec<String>,
    pub parameters: Value,
    pub verdict: Verdict,
    /// What was examined, e.g. "all 18480 regular sets".
    pub scope: String,
    pub findings: Vec<Finding>,
    pub checks: Vec<Check>,
    pub certificates: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl Report {
    pub fn new(command: Vec<String>, parameters: Value) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            parameters,
            verdict: Verdict::Done,
            scope: String::new(),
            findings: Vec::new(),
            checks: Vec::new(),
            certificates: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn find(&mut self, name: impl Into<String>, value: impl Serialize) {
        self.findings.push(Finding {
            name: name.into(),
            value: serde_json::to_value(value).expect("finding serializes"),
        });
    }

    pub fn finding(&self, name: &str) -> Option<&Value> {
        self.findings.iter().find(|f| f.name == name).map(|f| &f.value)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command: {}", self.command.join(" ")).unwrap();
        writeln!(out, "verdict: {}", verdict_word(self.verdict)).unwrap();
        if !self.scope.is_empty() {
            writeln!(out, "scope: {}", self.scope).unwrap();
        }
        for f in &self.findings {
            match &f.value {
                // Long lists (plane listings) get one element per line.
                Value::Array(items) if items.len() > 8 => {
                    writeln!(out, "{}: {} items", f.name, items.len()).unwrap();
                    for item in items {
                        writeln!(out, "  {item}").unwrap();
                    }
                }
                Value::String(text) => writeln!(out, "{}: {text}", f.name).unwrap(),
                v => writeln!(out, "{}: {v}", f.name).unwrap(),
            }
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            if c.detail.is_empty() {
                writeln!(out, "  [{mark}] {}", c.name).unwrap();
            } else {
                writeln!(out, "  [{mark}] {}: {}", c.name, c.detail).unwrap();
            }
        }
        if let Some(ms) = self.elapsed_ms {
            writeln!(out, "elapsed: {ms} ms").unwrap();
        }
        writeln!(out, "{JSON_PREFIX}{}", self.render_json()).unwrap();
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Infeasible => "INFEASIBLE",
        Verdict::Done => "done",
    }
}

/// The JSON object on the last line of a text report.
pub fn extract_json(text: &str) -> Option<Value> {
    text.lines()
        .rev()
        .find_map(|l| l.strip_prefix(JSON_PREFIX))
        .and_then(|j| serde_json::from_str(j).ok())
}

/// A plane set as indices plus basis rows, re-checkable with `PlaneSet::new`.
pub fn set_json(space: &Space, set: &PlaneSet) -> Value {
    let planes: Vec<Value> = set.iter().map(|p| plane_json(space, set.k(), p)["basis"].clone()).collect();
    json!({ "k": set.k(), "members": set.members(), "planes": planes })
}

/// Basis rows of a subspace as element codes.
pub fn subspace_json(s: &Subspace) -> Value {
    json!(s.basis_vectors())
}

pub fn plane_json(space: &Space, k: usize, idx: u32) -> Value {
    json!({ "index": idx, "basis": subspace_json(&space.subspace(k, idx).expect("valid index")) })
}

pub fn matrix_json(m: &Matrix) -> Value {
    json!(m.row_vecs())
}

/// Representative vectors of a list of lines, e.g. a coordinate system.
pub fn lines_json(space: &Space, lines: &[u32]) -> Value {
    json!(lines
        .iter()
        .map(|&l| space.subspace(1, l).expect("valid line").basis_vectors()[0].clone())
        .collect::<Vec<_>>())
}
