use std::fmt;

use serde::{Deserialize, Serialize};

use super::{PowerNetwork, ValidationError, HORIZON};

/// Operating condition a flow limit applies to.
///
/// Ordering puts the base case first, then outages by line index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Base,
    Outage(usize),
}

/// Identity of one transmission (base case) or security (outage) constraint:
/// the flow on `line`, under `scenario`, in `period` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstraintKey {
    pub line: usize,
    pub scenario: Scenario,
    pub period: usize,
}

impl ConstraintKey {
    pub fn new(line: usize, scenario: Scenario, period: usize) -> Self {
        ConstraintKey {
            line,
            scenario,
            period,
        }
    }

    pub fn to_record(&self, network: &PowerNetwork) -> KeyRecord {
        KeyRecord {
            line: network.lines()[self.line].id.clone(),
            scenario: match self.scenario {
                Scenario::Base => KeyRecord::BASE.to_string(),
                Scenario::Outage(c) => network.lines()[c].id.clone(),
            },
            period: self.period + 1,
        }
    }
}

impl fmt::Display for ConstraintKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scenario {
            Scenario::Base => write!(f, "({}, base, {})", self.line, self.period + 1),
            Scenario::Outage(c) => write!(f, "({}, {}, {})", self.line, c, self.period + 1),
        }
    }
}

/// File representation of a [`ConstraintKey`]: line ids instead of indices and
/// 1-based periods. The scenario is either `"base"` or the outaged line's id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub line: String,
    pub scenario: String,
    pub period: usize,
}

impl KeyRecord {
    pub const BASE: &'static str = "base";

    pub fn resolve(&self, network: &PowerNetwork) -> Result<ConstraintKey, ValidationError> {
        let unknown = |id: &str| ValidationError::UnknownOutage {
            line: self.line.clone(),
            outage: id.to_string(),
        };
        let line = network
            .line_index(&self.line)
            .ok_or_else(|| unknown(&self.line))?;
        let scenario = if self.scenario == Self::BASE {
            Scenario::Base
        } else {
            let outage = network
                .line_index(&self.scenario)
                .ok_or_else(|| unknown(&self.scenario))?;
            if outage == line {
                return Err(ValidationError::SelfOutage(self.line.clone()));
            }
            Scenario::Outage(outage)
        };
        if self.period < 1 || self.period > HORIZON {
            return Err(ValidationError::Length {
                what: format!("constraint key period {}", self.period),
                len: self.period,
                expected: HORIZON,
            });
        }
        Ok(ConstraintKey::new(line, scenario, self.period - 1))
    }
}
