//! Feasibility check of a [`UCSolution`] against the complete SCUC constraint set,
//! evaluated directly from the instance data (independently of any model build).

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{Scenario, UCInstance, UCSolution, HORIZON};
use crate::sensitivity::Sensitivities;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConstraintFamily {
    /// Binary values and non-negativity of continuous variables.
    Domain,
    Balance,
    Reserve,
    Capacity,
    RampUp,
    RampDown,
    MinUp,
    MinDown,
    BaseFlow,
    ContingencyFlow,
    SegmentLimit,
    SegmentLink,
    CommitmentLogic,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Largest absolute violation found in the family.
    pub magnitude: f64,
    /// Human-readable location of that worst violation.
    pub location: String,
    pub count: usize,
}

/// Violated constraint families with their worst violation. Empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: BTreeMap<ConstraintFamily, Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn get(&self, family: ConstraintFamily) -> Option<&Violation> {
        self.violations.get(&family)
    }

    pub fn has_flow_violations(&self) -> bool {
        self.violations.contains_key(&ConstraintFamily::BaseFlow)
            || self.violations.contains_key(&ConstraintFamily::ContingencyFlow)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("solution {what} has shape {found}, instance expects {expected}")]
pub struct DimensionMismatch {
    pub what: &'static str,
    pub found: String,
    pub expected: String,
}

struct Checker {
    tol: f64,
    report: FeasibilityReport,
}

impl Checker {
    /// Records a violation of `lhs <= rhs` beyond `tol * max(1, |rhs|)`.
    fn le(&mut self, family: ConstraintFamily, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        let excess = lhs - rhs;
        if excess > self.tol * rhs.abs().max(1.0) {
            let entry = self
                .report
                .violations
                .entry(family)
                .or_insert_with(|| Violation {
                    magnitude: 0.0,
                    location: String::new(),
                    count: 0,
                });
            entry.count += 1;
            if excess > entry.magnitude {
                entry.magnitude = excess;
                entry.location = location();
            }
        }
    }

    fn eq(&mut self, family: ConstraintFamily, lhs: f64, rhs: f64, location: impl Fn() -> String) {
        self.le(family, lhs, rhs, &location);
        self.le(family, -lhs, -rhs, location);
    }
}

fn check_shape(instance: &UCInstance, sol: &UCSolution) -> Result<(), DimensionMismatch> {
    let g = instance.generators.len();
    let bin = |what: &'static str, m: &Vec<Vec<bool>>| {
        if m.len() != g || m.iter().any(|r| r.len() != HORIZON) {
            Err(DimensionMismatch {
                what,
                found: format!("{}x{:?}", m.len(), m.first().map(|r| r.len())),
                expected: format!("{g}x{HORIZON}"),
            })
        } else {
            Ok(())
        }
    };
    let real = |what: &'static str, m: &Vec<Vec<f64>>| {
        if m.len() != g || m.iter().any(|r| r.len() != HORIZON) {
            Err(DimensionMismatch {
                what,
                found: format!("{}x{:?}", m.len(), m.first().map(|r| r.len())),
                expected: format!("{g}x{HORIZON}"),
            })
        } else {
            Ok(())
        }
    };
    bin("commitment", &sol.commitment)?;
    bin("startup", &sol.startup)?;
    bin("shutdown", &sol.shutdown)?;
    real("production", &sol.production)?;
    real("reserve", &sol.reserve)?;
    let seg_ok = sol.segment_production.len() == g
        && sol
            .segment_production
            .iter()
            .zip(&instance.generators)
            .all(|(rows, gen)| {
                rows.len() == HORIZON && rows.iter().all(|r| r.len() == gen.segments.len())
            });
    if !seg_ok {
        return Err(DimensionMismatch {
            what: "segment_production",
            found: format!("{} generators", sol.segment_production.len()),
            expected: format!("{g}x{HORIZON}x|K_g|"),
        });
    }
    Ok(())
}

/// Checks `sol` against every SCUC constraint, including all base-case and
/// single-outage flow limits. `tol` is relative.
pub fn validate_solution(
    instance: &UCInstance,
    sol: &UCSolution,
    tol: f64,
) -> Result<FeasibilityReport, DimensionMismatch> {
    let sens = Sensitivities::new(&instance.network)
        .expect("validated networks have a nonsingular susceptance matrix");
    validate_solution_with(instance, &sens, sol, tol)
}

/// Same as [`validate_solution`], reusing precomputed sensitivities.
pub fn validate_solution_with(
    instance: &UCInstance,
    sens: &Sensitivities,
    sol: &UCSolution,
    tol: f64,
) -> Result<FeasibilityReport, DimensionMismatch> {
    use ConstraintFamily::*;

    check_shape(instance, sol)?;
    let mut ck = Checker {
        tol,
        report: FeasibilityReport::default(),
    };
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    let gens = &instance.generators;

    for (g, gen) in gens.iter().enumerate() {
        let x = |t: usize| b(sol.commitment[g][t]);
        // x_{g,s} for s <= 0 is the initial status
        let x_at = |s: isize| {
            if s < 0 {
                b(gen.initial_status)
            } else {
                x(s as usize)
            }
        };
        let z = |t: usize| b(sol.startup[g][t]);
        let w = |t: usize| b(sol.shutdown[g][t]);
        let span = gen.max_power - gen.min_power;
        let here = |t: usize| format!("generator {:?}, period {}", gen.id, t + 1);

        for t in 0..HORIZON {
            let y = sol.production[g][t];
            let r = sol.reserve[g][t];
            let segs = &sol.segment_production[g][t];
            ck.le(Domain, 0.0, y, || format!("production, {}", here(t)));
            ck.le(Domain, 0.0, r, || format!("reserve, {}", here(t)));
            for (k, &yk) in segs.iter().enumerate() {
                ck.le(Domain, 0.0, yk, || format!("segment {k}, {}", here(t)));
                ck.le(SegmentLimit, yk, gen.segments[k].size, || {
                    format!("segment {k}, {}", here(t))
                });
            }
            let seg_total: f64 = segs.iter().sum();
            ck.eq(SegmentLink, y, gen.min_power * x(t) + seg_total, || here(t));

            let head = seg_total + r;
            let startup_cut = (gen.max_power - gen.ramp_up) * z(t);
            let rhs = if t + 1 < HORIZON {
                let w_next = w(t + 1);
                if gen.min_up > 1 {
                    span * x(t) - startup_cut - (gen.max_power - gen.ramp_down) * w_next
                } else {
                    let a = span * x(t)
                        - startup_cut
                        - (gen.ramp_up - gen.ramp_down).max(0.0) * w_next;
                    ck.le(Capacity, head, a, || here(t));
                    span * x(t)
                        - (gen.max_power - gen.ramp_down) * w_next
                        - (gen.ramp_down - gen.ramp_up).max(0.0) * z(t)
                }
            } else {
                span * x(t) - startup_cut
            };
            ck.le(Capacity, head, rhs, || here(t));

            if t > 0 {
                let prev = sol.production[g][t - 1];
                ck.le(RampUp, y, prev + gen.ramp_up, || here(t));
                ck.le(RampDown, prev - gen.ramp_down, y, || here(t));
            }

            let up_from = (t + 1).saturating_sub(gen.min_up as usize);
            let starts: f64 = (up_from..=t).map(z).sum();
            ck.le(MinUp, starts, x(t), || here(t));

            let down_from = (t + 1).saturating_sub(gen.min_down as usize);
            let starts: f64 = (down_from..=t).map(z).sum();
            let reference = t as isize - gen.min_down as isize;
            ck.le(MinDown, starts, 1.0 - x_at(reference), || here(t));

            ck.eq(CommitmentLogic, x(t) - x_at(t as isize - 1), z(t) - w(t), || here(t));
        }
    }

    for t in 0..HORIZON {
        let supply: f64 = (0..gens.len()).map(|g| sol.production[g][t]).sum();
        let load = instance.system_load(t);
        ck.eq(Balance, supply, load, || format!("period {}", t + 1));
        let reserve: f64 = (0..gens.len()).map(|g| sol.reserve[g][t]).sum();
        ck.le(Reserve, instance.reserve[t], reserve, || format!("period {}", t + 1));
    }

    let net = &instance.network;
    let contingencies = sens.contingencies();
    for t in 0..HORIZON {
        let injections = instance.injections(&sol.production, t);
        let base = sens.base_flows(&injections);
        for (l, &f) in base.iter().enumerate() {
            let limit = net.normal_limit(l);
            ck.le(BaseFlow, f.abs(), limit, || {
                format!("line {:?}, period {}, flow {f:.6}", net.lines()[l].id, t + 1)
            });
        }
        for &c in &contingencies {
            let outage = sens.outage(c).expect("contingency list excludes bridges");
            for l in outage.monitored() {
                let f = outage.post_outage_flow(&base, l);
                let limit = net.limit(l, Scenario::Outage(c));
                ck.le(ContingencyFlow, f.abs(), limit, || {
                    format!(
                        "line {:?} after outage of {:?}, period {}, flow {f:.6}",
                        net.lines()[l].id,
                        net.lines()[c].id,
                        t + 1
                    )
                });
            }
        }
    }

    Ok(ck.report)
}
