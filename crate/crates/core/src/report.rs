//! Residual summaries shared by the verification suites.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::families::GridSpec;

pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Exceeded its tolerance on a check that is reported but not enforced.
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64, samples: usize) -> Self {
        let ok = max_residual < tolerance;
        CheckItem {
            name: name.into(),
            max_residual,
            tolerance,
            samples,
            status: if ok { Status::Pass } else { Status::Fail },
            note: None,
        }
    }

    /// Same as [`CheckItem::new`] but a failure is only flagged.
    pub fn advisory(name: impl Into<String>, max_residual: f64, tolerance: f64, samples: usize) -> Self {
        let mut item = CheckItem::new(name, max_residual, tolerance, samples);
        if item.status == Status::Fail {
            item.status = Status::Flagged;
        }
        item
    }

    /// An item that could not be evaluated.
    pub fn error(name: impl Into<String>, message: String) -> Self {
        CheckItem {
            name: name.into(),
            max_residual: f64::NAN,
            tolerance: 0.0,
            samples: 0,
            status: Status::Fail,
            note: Some(message),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Running maximum of a residual over sample points.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxAcc {
    pub max: f64,
    pub count: usize,
    pub nan: bool,
}

impl MaxAcc {
    pub fn push(&mut self, r: f64) {
        self.count += 1;
        if r.is_nan() {
            self.nan = true;
        } else if r > self.max {
            self.max = r;
        }
    }

    pub fn merge(mut self, other: MaxAcc) -> MaxAcc {
        self.max = self.max.max(other.max);
        self.count += other.count;
        self.nan |= other.nan;
        self
    }

    pub fn value(&self) -> f64 {
        if self.nan {
            f64::NAN
        } else {
            self.max
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub family: String,
    pub params: BTreeMap<String, String>,
    pub grid: GridSpec,
    pub items: Vec<CheckItem>,
    pub passed: bool,
    pub elapsed_ms: u128,
}

impl VerifyReport {
    pub fn new(family: impl Into<String>, params: Vec<(String, String)>, grid: GridSpec) -> Self {
        VerifyReport {
            schema: SCHEMA,
            family: family.into(),
            params: params.into_iter().collect(),
            grid,
            items: Vec::new(),
            passed: true,
            elapsed_ms: 0,
        }
    }

    pub fn push(&mut self, item: CheckItem) {
        self.passed &= item.passed();
        self.items.push(item);
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.passed())
    }
}
