//! Check results and named quantities, serialized with exact fraction strings.

use serde::Serialize;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The check's hypothesis does not hold on this instance.
    Skipped,
}

/// One verified inequality or property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub pass: bool,
    /// `rhs − lhs` for inequalities `lhs ≤ rhs`.
    #[serde(with = "rational::serde_fraction_opt")]
    pub slack: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// `lhs ≤ rhs`.
    pub fn le(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= Rational::from_integer(0.into());
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            pass,
            slack: Some(slack),
            note: None,
        }
    }

    /// `lhs < rhs`.
    pub fn lt(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Self {
        let mut c = Self::le(name, lhs, rhs);
        let pass = lhs < rhs;
        c.pass = pass;
        c.status = if pass { Status::Pass } else { Status::Fail };
        c
    }

    /// `lhs = rhs`.
    pub fn eq(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Self {
        let pass = lhs == rhs;
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            pass,
            slack: Some(rhs - lhs),
            note: None,
        }
    }

    /// A property without a numeric slack.
    pub fn holds(name: impl Into<String>, pass: bool, note: Option<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            pass,
            slack: None,
            note,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            pass: true,
            slack: None,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_violation(&self) -> bool {
        self.status == Status::Fail
    }
}

/// A named exact value with a decimal rendering for reading convenience.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    #[serde(with = "rational::serde_fraction")]
    pub value: Rational,
    pub decimal: f64,
}

impl Quantity {
    pub fn new(name: impl Into<String>, value: Rational) -> Self {
        let decimal = rational::to_f64(&value);
        Self {
            name: name.into(),
            value,
            decimal,
        }
    }
}

/// Quantities and checks produced by one suite on one instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: &Rational) {
        self.quantities.push(Quantity::new(name, value.clone()));
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.quantities.extend(other.quantities);
        self.checks.extend(other.checks);
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.quantities.iter().find(|q| q.name == name).map(|q| &q.value)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.is_violation())
    }

    pub fn violations(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.is_violation())
    }
}
