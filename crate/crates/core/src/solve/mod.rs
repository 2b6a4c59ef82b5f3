//! MIP backend contract and the transmission screening loop.
//!
//! [`solve_scuc`] starts from a relaxation holding only the hinted flow limits,
//! solves it, scans the dispatch for overloads under the base case and every
//! non-islanding outage, adds a filtered subset of the violated limits and
//! repeats until the scan comes back empty.

mod highs;

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::highs::HighsBackend;
use crate::formulation::{build_model, FormulationError, Hyperplane, MipModel, VarKind};
use crate::powergrid::{ConstraintKey, UCInstance, UCSolution, HORIZON};
use crate::sensitivity::{scan_violations, ScreeningConfig, Sensitivities};

/// Fraction of the time limit granted to repairing one infeasible warm start.
const REPAIR_BUDGET: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("the problem is infeasible (iteration {iteration})")]
    Infeasible { iteration: usize },
    #[error("no violation-free dispatch after {iterations} iterations; {remaining} violations left")]
    IterationCap { iterations: usize, remaining: usize },
    #[error("warm start has {found} rows/columns where {expected} were expected")]
    WarmStartShape { found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendOptions {
    pub relative_gap: f64,
    /// Seconds; `None` means unlimited.
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub warm_start_repair: bool,
}

impl BackendOptions {
    pub fn test() -> Self {
        BackendOptions {
            relative_gap: 1e-3,
            time_limit: None,
            seed: 0,
            warm_start_repair: true,
        }
    }

    pub fn training() -> Self {
        BackendOptions {
            relative_gap: 1e-4,
            ..Self::test()
        }
    }
}

impl Default for BackendOptions {
    fn default() -> Self {
        Self::test()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendStatus {
    /// Solved to within the relative gap.
    Optimal,
    Infeasible,
    /// Stopped by the time limit; a solution may still be available.
    TimeLimit,
}

/// What a backend returns for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSolve {
    pub status: BackendStatus,
    pub values: Option<Vec<f64>>,
    pub objective: f64,
    pub bound: f64,
}

/// A MIP engine. `start`, when given, is a complete feasible assignment the
/// engine should adopt as its first incumbent.
pub trait MipBackend: Sync {
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        model: &MipModel,
        start: Option<&[f64]>,
        relative_gap: f64,
        time_limit: Option<f64>,
        seed: u64,
    ) -> Result<RawSolve, SolveError>;
}

/// Partial assignment of the commitment variables, `values[g][t]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarmStart {
    pub values: Vec<Vec<Option<bool>>>,
}

impl WarmStart {
    pub fn empty(generators: usize) -> Self {
        WarmStart {
            values: vec![vec![None; HORIZON]; generators],
        }
    }

    /// A complete start copying a commitment schedule.
    pub fn from_commitment(commitment: &[Vec<bool>]) -> Self {
        WarmStart {
            values: commitment
                .iter()
                .map(|row| row.iter().map(|&b| Some(b)).collect())
                .collect(),
        }
    }

    pub fn assigned(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    fn check_shape(&self, model: &MipModel) -> Result<(), SolveError> {
        let gens = model.layout.generator_count();
        if self.values.len() != gens {
            return Err(SolveError::WarmStartShape {
                found: self.values.len(),
                expected: gens,
            });
        }
        if let Some(row) = self.values.iter().find(|r| r.len() != HORIZON) {
            return Err(SolveError::WarmStartShape {
                found: row.len(),
                expected: HORIZON,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartOutcome {
    pub accepted: bool,
    /// Accepted only after repair.
    pub repaired: bool,
    /// Objective of the completed start, when accepted.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendResult {
    pub status: BackendStatus,
    pub values: Option<Vec<f64>>,
    pub objective: f64,
    pub bound: f64,
    /// One entry per warm start, in the order given.
    pub starts: Vec<StartOutcome>,
}

impl BackendResult {
    /// Objective of the best accepted start.
    pub fn best_start(&self) -> Option<f64> {
        self.starts
            .iter()
            .filter_map(|s| s.objective)
            .min_by(f64::total_cmp)
    }

    pub fn gap(&self) -> f64 {
        if self.values.is_none() {
            return f64::INFINITY;
        }
        ((self.objective - self.bound) / self.objective.abs().max(1e-9)).max(0.0)
    }
}

fn remaining(limit: Option<f64>, since: Instant) -> Option<f64> {
    limit.map(|l| (l - since.elapsed().as_secs_f64()).max(0.0))
}

/// Completes a warm start: fix its assigned commitments and solve for the
/// rest. If that fails and repair is on, find the commitment closest in
/// Hamming distance to the start and complete that instead.
fn complete_start(
    backend: &dyn MipBackend,
    model: &MipModel,
    start: &WarmStart,
    options: &BackendOptions,
) -> Result<(StartOutcome, Option<Vec<f64>>), SolveError> {
    let layout = &model.layout;
    let assigned: Vec<(usize, bool)> = start
        .values
        .iter()
        .enumerate()
        .flat_map(|(g, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(t, v)| v.map(|b| (layout.x(g, t), b)))
        })
        .collect();
    let mut fixed = model.clone();
    for &(col, b) in &assigned {
        fixed.fix(col, if b { 1.0 } else { 0.0 });
    }
    let raw = backend.solve(
        &fixed,
        None,
        options.relative_gap,
        options.time_limit,
        options.seed,
    )?;
    if let Some(values) = raw.values {
        let outcome = StartOutcome {
            accepted: true,
            repaired: false,
            objective: Some(raw.objective),
        };
        return Ok((outcome, Some(values)));
    }
    let rejected = StartOutcome {
        accepted: false,
        repaired: false,
        objective: None,
    };
    if !options.warm_start_repair || assigned.is_empty() {
        return Ok((rejected, None));
    }

    let budget = options.time_limit.map(|l| l * REPAIR_BUDGET);
    let mut closest = model.clone();
    closest.objective = vec![0.0; model.variables.len()];
    closest.objective_offset = 0.0;
    for &(col, b) in &assigned {
        if b {
            closest.objective[col] = -1.0;
            closest.objective_offset += 1.0;
        } else {
            closest.objective[col] = 1.0;
        }
    }
    let found = backend.solve(&closest, None, options.relative_gap, budget, options.seed)?;
    let Some(near) = found.values else {
        return Ok((rejected, None));
    };
    let mut repaired = model.clone();
    for g in 0..layout.generator_count() {
        for t in 0..HORIZON {
            let col = layout.x(g, t);
            repaired.fix(col, if near[col] > 0.5 { 1.0 } else { 0.0 });
        }
    }
    let raw = backend.solve(&repaired, None, options.relative_gap, budget, options.seed)?;
    Ok(match raw.values {
        Some(values) => (
            StartOutcome {
                accepted: true,
                repaired: true,
                objective: Some(raw.objective),
            },
            Some(values),
        ),
        None => (rejected, None),
    })
}

/// Solves `model`, first completing each warm start in order; the cheapest
/// accepted start becomes the engine's initial incumbent.
pub fn backend_solve(
    backend: &dyn MipBackend,
    model: &MipModel,
    warm_starts: &[WarmStart],
    options: &BackendOptions,
) -> Result<BackendResult, SolveError> {
    let began = Instant::now();
    let mut starts = Vec::with_capacity(warm_starts.len());
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    for ws in warm_starts {
        ws.check_shape(model)?;
        let opts = BackendOptions {
            time_limit: remaining(options.time_limit, began),
            ..*options
        };
        let (outcome, values) = complete_start(backend, model, ws, &opts)?;
        if let (Some(obj), Some(values)) = (outcome.objective, values) {
            if incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                incumbent = Some((obj, values));
            }
        }
        starts.push(outcome);
    }
    let raw = backend.solve(
        model,
        incumbent.as_ref().map(|(_, v)| v.as_slice()),
        options.relative_gap,
        remaining(options.time_limit, began),
        options.seed,
    )?;
    let mut result = BackendResult {
        status: raw.status,
        values: raw.values,
        objective: raw.objective,
        bound: raw.bound,
        starts,
    };
    // An engine stopped early may not have improved on the start it was given.
    if let Some((obj, values)) = incumbent {
        if result.values.is_none() || obj < result.objective {
            result.values = Some(values);
            result.objective = obj;
            if result.status == BackendStatus::Infeasible {
                result.status = BackendStatus::TimeLimit;
            }
        }
    }
    Ok(result)
}

/// Hints handed to [`solve_scuc`] by a predictor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hints {
    pub enforce: BTreeSet<ConstraintKey>,
    pub warm_starts: Vec<WarmStart>,
    pub hyperplanes: Vec<Hyperplane>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub backend: BackendOptions,
    pub screening: ScreeningConfig,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            backend: BackendOptions::test(),
            screening: ScreeningConfig::default(),
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Enforced flow limits at the end, divided by the number of periods.
    pub constraints_per_period: f64,
    /// Seconds.
    pub wall_time: f64,
    pub warm_start_accepted: bool,
    /// Relative distance of the accepted start above the final objective.
    pub warm_start_gap: Option<f64>,
    pub final_gap: f64,
    pub time_limited: bool,
    /// Objective after each iteration.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: UCSolution,
    pub stats: SolveStats,
    /// Every flow limit present in the last model.
    pub enforced: BTreeSet<ConstraintKey>,
}

/// Solves the full security-constrained problem by lazy constraint screening.
pub fn solve_scuc(
    instance: &UCInstance,
    sens: &Sensitivities,
    hints: &Hints,
    options: &SolveOptions,
    backend: &dyn MipBackend,
) -> Result<SolveOutcome, SolveError> {
    let began = Instant::now();
    let mut enforced = hints.enforce.clone();
    let mut trace = Vec::new();
    let mut accepted_start: Option<f64> = None;
    let mut any_accepted = false;
    let mut iteration = 0;
    loop {
        iteration += 1;
        let model = build_model(instance, sens, &enforced, &hints.hyperplanes)?;
        debug_assert!(model
            .variables
            .iter()
            .any(|v| v.kind == VarKind::Binary));
        let opts = BackendOptions {
            time_limit: remaining(options.backend.time_limit, began),
            ..options.backend
        };
        let result = backend_solve(backend, &model, &hints.warm_starts, &opts)?;
        if let Some(obj) = result.best_start() {
            any_accepted = true;
            accepted_start = Some(obj);
        }
        let Some(values) = result.values.as_deref() else {
            if result.status == BackendStatus::TimeLimit {
                return Err(SolveError::Backend(
                    "time limit reached before any feasible solution".into(),
                ));
            }
            return Err(SolveError::Infeasible { iteration });
        };
        let solution = model.layout.extract(values, result.objective);
        trace.push(result.objective);
        let time_limited = result.status == BackendStatus::TimeLimit;
        let violations = scan_violations(
            instance,
            sens,
            &solution.production,
            &enforced,
            &options.screening,
        );
        log::debug!(
            "iteration {iteration}: objective {:.4}, {} enforced, {} new violations",
            result.objective,
            enforced.len(),
            violations.len()
        );
        if violations.is_empty() || time_limited {
            let final_objective = result.objective;
            let stats = SolveStats {
                iterations: iteration,
                constraints_per_period: enforced.len() as f64 / HORIZON as f64,
                wall_time: began.elapsed().as_secs_f64(),
                warm_start_accepted: any_accepted,
                warm_start_gap: accepted_start
                    .map(|s| ((s - final_objective) / final_objective.abs().max(1e-9)).max(0.0)),
                final_gap: result.gap(),
                time_limited,
                objective_trace: trace,
            };
            return Ok(SolveOutcome {
                solution,
                stats,
                enforced,
            });
        }
        if iteration >= options.max_iterations {
            return Err(SolveError::IterationCap {
                iterations: iteration,
                remaining: violations.len(),
            });
        }
        enforced.extend(violations.keys());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::HyperplaneKind;
    use crate::powergrid::{parse_instance, validate_solution};

    const TWO_BUS: &str = r#"{
        "format": "scuc-lab/1",
        "buses": ["b1", "b2"],
        "slack_bus": "b2",
        "lines": [
            {"id": "l1", "from_bus": "b1", "to_bus": "b2", "reactance": 0.1,
             "normal_limit": 100.0, "contingency_limit": 120.0}
        ],
        "generators": [
            {"id": "g1", "bus": "b1", "min_power": 10.0, "max_power": 100.0,
             "segments": [{"size": 90.0, "cost": 2.0}],
             "base_cost": 5.0, "startup_cost": 7.0, "ramp_up": 100.0, "ramp_down": 100.0,
             "min_up": 1, "min_down": 1}
        ],
        "demand": {"b2": [40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40]},
        "reserve": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]
    }"#;

    fn solve(text: &str, hints: &Hints) -> Result<SolveOutcome, SolveError> {
        let inst = parse_instance(text).unwrap();
        let sens = Sensitivities::new(&inst.network).unwrap();
        solve_scuc(&inst, &sens, hints, &SolveOptions::default(), &HighsBackend)
    }

    #[test]
    fn uncongested_case_needs_one_iteration() {
        let out = solve(TWO_BUS, &Hints::default()).unwrap();
        assert_eq!(out.stats.iterations, 1);
        assert!(out.enforced.is_empty());
        // 24 * (5 + 2 * 30) + 7
        assert!((out.solution.objective - 1567.0).abs() < 1e-4);
        let inst = parse_instance(TWO_BUS).unwrap();
        assert!(validate_solution(&inst, &out.solution, 1e-6).unwrap().is_feasible());
    }

    #[test]
    fn forced_off_only_generator_is_infeasible() {
        let hints = Hints {
            hyperplanes: (0..HORIZON)
                .map(|t| Hyperplane::new(HyperplaneKind::FixZero, 0, t))
                .collect(),
            ..Hints::default()
        };
        assert!(matches!(
            solve(TWO_BUS, &hints),
            Err(SolveError::Infeasible { iteration: 1 })
        ));
    }

    #[test]
    fn fully_fixed_model_solves() {
        let hints = Hints {
            hyperplanes: (0..HORIZON)
                .map(|t| Hyperplane::new(HyperplaneKind::FixOne, 0, t))
                .collect(),
            ..Hints::default()
        };
        let out = solve(TWO_BUS, &hints).unwrap();
        assert!(out.solution.commitment[0].iter().all(|&x| x));
    }

    #[test]
    fn all_off_start_is_rejected_without_repair() {
        let inst = parse_instance(TWO_BUS).unwrap();
        let sens = Sensitivities::new(&inst.network).unwrap();
        let model = build_model(&inst, &sens, &BTreeSet::new(), &[]).unwrap();
        let start = WarmStart::from_commitment(&[vec![false; HORIZON]]);
        let opts = BackendOptions {
            warm_start_repair: false,
            ..BackendOptions::test()
        };
        let res = backend_solve(&HighsBackend, &model, &[start.clone()], &opts).unwrap();
        assert!(!res.starts[0].accepted);
        assert_eq!(res.status, BackendStatus::Optimal);

        let repaired = backend_solve(&HighsBackend, &model, &[start], &BackendOptions::test()).unwrap();
        assert!(repaired.starts[0].accepted);
        assert!(repaired.starts[0].repaired);
    }

    #[test]
    fn good_start_is_accepted_with_its_objective() {
        let inst = parse_instance(TWO_BUS).unwrap();
        let sens = Sensitivities::new(&inst.network).unwrap();
        let model = build_model(&inst, &sens, &BTreeSet::new(), &[]).unwrap();
        let start = WarmStart::from_commitment(&[vec![true; HORIZON]]);
        let res = backend_solve(&HighsBackend, &model, &[start], &BackendOptions::test()).unwrap();
        assert!(res.starts[0].accepted);
        assert!((res.best_start().unwrap() - 1567.0).abs() < 1e-4);
        assert!(res.gap() <= 1e-3);
    }

    #[test]
    fn misshapen_start_is_an_error() {
        let inst = parse_instance(TWO_BUS).unwrap();
        let sens = Sensitivities::new(&inst.network).unwrap();
        let model = build_model(&inst, &sens, &BTreeSet::new(), &[]).unwrap();
        let start = WarmStart::empty(3);
        assert!(matches!(
            backend_solve(&HighsBackend, &model, &[start], &BackendOptions::test()),
            Err(SolveError::WarmStartShape { .. })
        ));
    }
}
