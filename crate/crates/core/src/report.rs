//! Named residuals with verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "limit", rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    /// `None` for measurement-only entries.
    pub passed: Option<bool>,
}

impl Residual {
    fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        let passed = match bound {
            Bound::AtMost(limit) => Some(value <= limit),
            Bound::AtLeast(limit) => Some(value >= limit),
            Bound::Info => None,
        };
        Self {
            name: name.into(),
            value,
            bound,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    pub residuals: Vec<Residual>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<String, Value>,
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub wall_time: f64,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            scenario: None,
            residuals: Vec::new(),
            verdict: Verdict::Info,
            notes: Vec::new(),
            witnesses: BTreeMap::new(),
            tol: 0.0,
            wall_time: 0.0,
        }
    }

    fn push(&mut self, r: Residual) -> bool {
        let ok = r.passed.unwrap_or(true);
        match (self.verdict, r.passed) {
            (_, Some(false)) => self.verdict = Verdict::Fail,
            (Verdict::Info, Some(true)) => self.verdict = Verdict::Pass,
            _ => {}
        }
        self.residuals.push(r);
        ok
    }

    /// Asserts `value <= limit`; returns whether it held.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) -> bool {
        self.push(Residual::new(name, value, Bound::AtMost(limit)))
    }

    /// Asserts `value >= limit`; returns whether it held.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) -> bool {
        self.push(Residual::new(name, value, Bound::AtLeast(limit)))
    }

    pub fn info(&mut self, name: impl Into<String>, value: f64) {
        self.push(Residual::new(name, value, Bound::Info));
    }

    /// Boolean assertion, recorded as 1.0 (held) or 0.0.
    pub fn require(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.push(Residual::new(name, if ok { 1.0 } else { 0.0 }, Bound::AtLeast(1.0)))
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn witness(&mut self, name: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.witnesses.insert(name.into(), v);
    }

    /// Folds another report's entries into this one under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: CheckReport) {
        for mut r in other.residuals {
            r.name = format!("{prefix}.{}", r.name);
            self.push(r);
        }
        for n in other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
        for (k, v) in other.witnesses {
            self.witnesses.insert(format!("{prefix}.{k}"), v);
        }
    }

    /// Folds a repetition of the same check into this one, keeping the
    /// worst value per residual and the witnesses of the first failure.
    pub fn merge_worst(&mut self, other: CheckReport) {
        let was_failing = self.verdict == Verdict::Fail;
        for r in other.residuals {
            match self.residuals.iter_mut().find(|x| x.name == r.name) {
                Some(x) => {
                    let worse = match r.bound {
                        Bound::AtLeast(_) => r.value < x.value,
                        _ => r.value > x.value,
                    };
                    if worse || (r.passed == Some(false) && x.passed != Some(false)) {
                        *x = r;
                    }
                }
                None => self.residuals.push(r),
            }
        }
        self.verdict = Verdict::Info;
        for r in &self.residuals {
            match r.passed {
                Some(false) => {
                    self.verdict = Verdict::Fail;
                    break;
                }
                Some(true) => self.verdict = Verdict::Pass,
                None => {}
            }
        }
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        if !was_failing && other.verdict == Verdict::Fail || self.witnesses.is_empty() {
            for (k, v) in other.witnesses {
                self.witnesses.insert(k, v);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// Names of the asserted entries that failed.
    pub fn failures(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|r| r.passed == Some(false))
            .map(|r| r.name.as_str())
            .collect()
    }

    /// Largest value among upper-bounded residuals (0 when there are none).
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| matches!(r.bound, Bound::AtMost(_)))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }
}
