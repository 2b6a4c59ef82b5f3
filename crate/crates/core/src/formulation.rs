//! The SCUC mixed-integer program.
//!
//! Variables, per generator `g` (sorted by id) and period `t`:
//! commitment `x`, startup `z`, shutdown `w`, production `y`, reserve `r` and
//! one production variable per cost segment. Rows appear in this order:
//! balance, reserve, capacity, ramp-up, ramp-down, minimum up, minimum down,
//! enforced flow limits, segment linking, commitment logic, hyperplanes.
//! Segment widths are imposed as variable upper bounds.
//!
//! Before the first period every generator is in its `initial_status` with no
//! pending minimum up/down obligation.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powergrid::{ConstraintFamily, ConstraintKey, Scenario, UCInstance, UCSolution, HORIZON};
use crate::sensitivity::{SensitivityError, Sensitivities};

/// Coefficients smaller than this are dropped from flow rows.
const COEFFICIENT_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Where a model row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowOrigin {
    Family {
        family: ConstraintFamily,
        generator: Option<usize>,
        period: usize,
    },
    Transmission(ConstraintKey),
    Hyperplane(Hyperplane),
}

/// `lower <= Σ coefficient · variable <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefficients: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub origin: RowOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HyperplaneKind {
    /// `x_gt = 0`
    FixZero,
    /// `x_gt = 1`
    FixOne,
    /// `x_gt = x_g,t+1`
    FixNext,
}

/// An equality restricting one commitment variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hyperplane {
    pub kind: HyperplaneKind,
    pub generator: usize,
    /// 0-based.
    pub period: usize,
}

impl Hyperplane {
    pub fn new(kind: HyperplaneKind, generator: usize, period: usize) -> Self {
        Hyperplane {
            kind,
            generator,
            period,
        }
    }

    /// Whether a commitment schedule `x[g][t]` lies on this hyperplane.
    pub fn satisfied_by(&self, commitment: &[Vec<bool>]) -> bool {
        let x = &commitment[self.generator];
        match self.kind {
            HyperplaneKind::FixZero => !x[self.period],
            HyperplaneKind::FixOne => x[self.period],
            HyperplaneKind::FixNext => x[self.period] == x[self.period + 1],
        }
    }
}

impl fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(g{}, t{})", self.kind, self.generator, self.period + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulationError {
    #[error("more than one hyperplane for generator {generator}, period {}", period + 1)]
    ConflictingHyperplanes { generator: usize, period: usize },
    #[error("hyperplane {0} is out of range")]
    BadHyperplane(Hyperplane),
    #[error("cannot enforce {key}: {source}")]
    InvalidKey {
        key: ConstraintKey,
        source: SensitivityError,
    },
}

/// Column positions of the SCUC variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    offsets: Vec<usize>,
    segments: Vec<usize>,
    total: usize,
}

const PER_PERIOD_FIXED: usize = 5;

impl VarLayout {
    pub fn new(instance: &UCInstance) -> Self {
        let mut offsets = Vec::with_capacity(instance.generators.len());
        let mut segments = Vec::with_capacity(instance.generators.len());
        let mut next = 0;
        for g in &instance.generators {
            offsets.push(next);
            segments.push(g.segments.len());
            next += HORIZON * (PER_PERIOD_FIXED + g.segments.len());
        }
        VarLayout {
            offsets,
            segments,
            total: next,
        }
    }

    fn base(&self, g: usize, t: usize) -> usize {
        self.offsets[g] + t * (PER_PERIOD_FIXED + self.segments[g])
    }

    pub fn x(&self, g: usize, t: usize) -> usize {
        self.base(g, t)
    }
    pub fn z(&self, g: usize, t: usize) -> usize {
        self.base(g, t) + 1
    }
    pub fn w(&self, g: usize, t: usize) -> usize {
        self.base(g, t) + 2
    }
    pub fn y(&self, g: usize, t: usize) -> usize {
        self.base(g, t) + 3
    }
    pub fn r(&self, g: usize, t: usize) -> usize {
        self.base(g, t) + 4
    }
    pub fn segment(&self, g: usize, t: usize, k: usize) -> usize {
        self.base(g, t) + PER_PERIOD_FIXED + k
    }

    pub fn generator_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Turns a column assignment into a solution; binaries are rounded and tiny
    /// negative continuous values clipped to zero.
    pub fn extract(&self, values: &[f64], objective: f64) -> UCSolution {
        let gens = self.generator_count();
        let bin = |i: usize| values[i] > 0.5;
        let real = |i: usize| values[i].max(0.0);
        let grid = |f: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<f64>> {
            (0..gens)
                .map(|g| (0..HORIZON).map(|t| real(f(g, t))).collect())
                .collect()
        };
        UCSolution {
            commitment: (0..gens)
                .map(|g| (0..HORIZON).map(|t| bin(self.x(g, t))).collect())
                .collect(),
            startup: (0..gens)
                .map(|g| (0..HORIZON).map(|t| bin(self.z(g, t))).collect())
                .collect(),
            shutdown: (0..gens)
                .map(|g| (0..HORIZON).map(|t| bin(self.w(g, t))).collect())
                .collect(),
            production: grid(&|g, t| self.y(g, t)),
            segment_production: (0..gens)
                .map(|g| {
                    (0..HORIZON)
                        .map(|t| {
                            (0..self.segments[g])
                                .map(|k| real(self.segment(g, t, k)))
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            reserve: grid(&|g, t| self.r(g, t)),
            objective,
        }
    }
}

/// A linear mixed-integer program in row form, minimization sense.
#[derive(Debug, Clone, PartialEq)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective: Vec<f64>,
    /// Constant term added to the objective.
    pub objective_offset: f64,
    pub layout: VarLayout,
}

impl MipModel {
    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Fixes a column to `value` by collapsing its bounds.
    pub fn fix(&mut self, column: usize, value: f64) {
        self.variables[column].lower = value;
        self.variables[column].upper = value;
    }

    pub fn transmission_keys(&self) -> impl Iterator<Item = ConstraintKey> + '_ {
        self.rows.iter().filter_map(|r| match r.origin {
            RowOrigin::Transmission(k) => Some(k),
            _ => None,
        })
    }

    pub fn objective_at(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Writes the model in CPLEX LP format. Ranged rows become two rows.
    pub fn write_lp<W: Write>(&self, mut out: W) -> io::Result<()> {
        fn term(out: &mut impl Write, first: bool, coef: f64, name: &str) -> io::Result<()> {
            let sign = if coef < 0.0 { "-" } else if first { "" } else { "+" };
            write!(out, " {sign} {} {name}", coef.abs())
        }
        fn expression(out: &mut impl Write, model: &MipModel, coefs: &[(usize, f64)]) -> io::Result<()> {
            if coefs.is_empty() {
                write!(out, " 0 {}", model.variables.first().map(|v| v.name.as_str()).unwrap_or("x"))?;
            }
            for (i, (col, c)) in coefs.iter().enumerate() {
                term(out, i == 0, *c, &model.variables[*col].name)?;
            }
            Ok(())
        }

        writeln!(out, "\\ SCUC model: {} columns, {} rows", self.variables.len(), self.rows.len())?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let objective: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i, *c))
            .collect();
        expression(&mut out, self, &objective)?;
        if self.objective_offset != 0.0 {
            write!(out, " + {}", self.objective_offset)?;
        }
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.lower == row.upper {
                write!(out, " r{i}:")?;
                expression(&mut out, self, &row.coefficients)?;
                writeln!(out, " = {}", row.upper)?;
                continue;
            }
            if row.upper.is_finite() {
                write!(out, " r{i}_u:")?;
                expression(&mut out, self, &row.coefficients)?;
                writeln!(out, " <= {}", row.upper)?;
            }
            if row.lower.is_finite() {
                write!(out, " r{i}_l:")?;
                expression(&mut out, self, &row.coefficients)?;
                writeln!(out, " >= {}", row.lower)?;
            }
        }
        writeln!(out, "Bounds")?;
        for v in &self.variables {
            let upper = if v.upper.is_finite() {
                format!("{}", v.upper)
            } else {
                "+inf".to_string()
            };
            writeln!(out, " {} <= {} <= {}", v.lower, v.name, upper)?;
        }
        writeln!(out, "Binary")?;
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Binary) {
            writeln!(out, " {}", v.name)?;
        }
        writeln!(out, "End")
    }
}

/// Checks that at most one hyperplane touches each (generator, period) and
/// that every hyperplane is in range.
pub fn check_hyperplanes(instance: &UCInstance, hyperplanes: &[Hyperplane]) -> Result<(), FormulationError> {
    let mut seen = HashSet::new();
    for h in hyperplanes {
        let in_range = h.generator < instance.generators.len()
            && h.period < HORIZON
            && !(h.kind == HyperplaneKind::FixNext && h.period + 1 >= HORIZON);
        if !in_range {
            return Err(FormulationError::BadHyperplane(*h));
        }
        if !seen.insert((h.generator, h.period)) {
            return Err(FormulationError::ConflictingHyperplanes {
                generator: h.generator,
                period: h.period,
            });
        }
    }
    Ok(())
}

/// Builds the SCUC model with flow limits only for the `enforced` keys.
pub fn build_model(
    instance: &UCInstance,
    sens: &Sensitivities,
    enforced: &BTreeSet<ConstraintKey>,
    hyperplanes: &[Hyperplane],
) -> Result<MipModel, FormulationError> {
    use ConstraintFamily::*;

    check_hyperplanes(instance, hyperplanes)?;
    let layout = VarLayout::new(instance);
    let gens = &instance.generators;

    let mut variables = Vec::with_capacity(layout.len());
    let mut objective = vec![0.0; layout.len()];
    for (g, gen) in gens.iter().enumerate() {
        for t in 0..HORIZON {
            let binary = |name: &str| Variable {
                name: format!("{name}_{g}_{t}"),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            };
            let continuous = |name: String, upper: f64| Variable {
                name,
                kind: VarKind::Continuous,
                lower: 0.0,
                upper,
            };
            variables.push(binary("x"));
            variables.push(binary("z"));
            variables.push(binary("w"));
            variables.push(continuous(format!("y_{g}_{t}"), f64::INFINITY));
            variables.push(continuous(format!("r_{g}_{t}"), f64::INFINITY));
            for (k, seg) in gen.segments.iter().enumerate() {
                variables.push(continuous(format!("s_{g}_{t}_{k}"), seg.size));
            }
            objective[layout.x(g, t)] = gen.base_cost;
            objective[layout.z(g, t)] = gen.startup_cost;
            for (k, seg) in gen.segments.iter().enumerate() {
                objective[layout.segment(g, t, k)] = seg.cost;
            }
        }
    }
    debug_assert_eq!(variables.len(), layout.len());

    let mut rows = Vec::new();
    let family = |family, generator, period| RowOrigin::Family {
        family,
        generator,
        period,
    };
    let le = |coefficients, upper, origin| Row {
        coefficients,
        lower: f64::NEG_INFINITY,
        upper,
        origin,
    };
    let eq = |coefficients, rhs, origin| Row {
        coefficients,
        lower: rhs,
        upper: rhs,
        origin,
    };

    for t in 0..HORIZON {
        let coefs = (0..gens.len()).map(|g| (layout.y(g, t), 1.0)).collect();
        rows.push(eq(coefs, instance.system_load(t), family(Balance, None, t)));
    }
    for t in 0..HORIZON {
        let coefs = (0..gens.len()).map(|g| (layout.r(g, t), 1.0)).collect();
        rows.push(Row {
            coefficients: coefs,
            lower: instance.reserve[t],
            upper: f64::INFINITY,
            origin: family(Reserve, None, t),
        });
    }

    // capacity: Σ_k y^k + r − (Pmax−Pmin)x + ... <= 0
    for (g, gen) in gens.iter().enumerate() {
        let span = gen.max_power - gen.min_power;
        for t in 0..HORIZON {
            let head = |extra: &[(usize, f64)]| {
                let mut c: Vec<(usize, f64)> = (0..gen.segments.len())
                    .map(|k| (layout.segment(g, t, k), 1.0))
                    .collect();
                c.push((layout.r(g, t), 1.0));
                c.push((layout.x(g, t), -span));
                c.extend(extra.iter().copied().filter(|(_, v)| *v != 0.0));
                c
            };
            let origin = family(Capacity, Some(g), t);
            if t + 1 == HORIZON {
                rows.push(le(
                    head(&[(layout.z(g, t), gen.max_power - gen.ramp_up)]),
                    0.0,
                    origin,
                ));
            } else if gen.min_up > 1 {
                rows.push(le(
                    head(&[
                        (layout.z(g, t), gen.max_power - gen.ramp_up),
                        (layout.w(g, t + 1), gen.max_power - gen.ramp_down),
                    ]),
                    0.0,
                    origin,
                ));
            } else {
                rows.push(le(
                    head(&[
                        (layout.z(g, t), gen.max_power - gen.ramp_up),
                        (layout.w(g, t + 1), (gen.ramp_up - gen.ramp_down).max(0.0)),
                    ]),
                    0.0,
                    origin,
                ));
                rows.push(le(
                    head(&[
                        (layout.w(g, t + 1), gen.max_power - gen.ramp_down),
                        (layout.z(g, t), (gen.ramp_down - gen.ramp_up).max(0.0)),
                    ]),
                    0.0,
                    origin,
                ));
            }
        }
    }
    for (g, gen) in gens.iter().enumerate() {
        for t in 1..HORIZON {
            rows.push(le(
                vec![(layout.y(g, t), 1.0), (layout.y(g, t - 1), -1.0)],
                gen.ramp_up,
                family(RampUp, Some(g), t),
            ));
        }
    }
    for (g, gen) in gens.iter().enumerate() {
        for t in 1..HORIZON {
            rows.push(le(
                vec![(layout.y(g, t - 1), 1.0), (layout.y(g, t), -1.0)],
                gen.ramp_down,
                family(RampDown, Some(g), t),
            ));
        }
    }
    for (g, gen) in gens.iter().enumerate() {
        for t in 0..HORIZON {
            let from = (t + 1).saturating_sub(gen.min_up as usize);
            let mut c: Vec<(usize, f64)> = (from..=t).map(|i| (layout.z(g, i), 1.0)).collect();
            c.push((layout.x(g, t), -1.0));
            rows.push(le(c, 0.0, family(MinUp, Some(g), t)));
        }
    }
    for (g, gen) in gens.iter().enumerate() {
        let dt = gen.min_down as usize;
        for t in 0..HORIZON {
            let from = (t + 1).saturating_sub(dt);
            let mut c: Vec<(usize, f64)> = (from..=t).map(|i| (layout.z(g, i), 1.0)).collect();
            let rhs = if t >= dt {
                c.push((layout.x(g, t - dt), 1.0));
                1.0
            } else if gen.initial_status {
                0.0
            } else {
                1.0
            };
            rows.push(le(c, rhs, family(MinDown, Some(g), t)));
        }
    }

    let gen_bus = instance.generator_buses();
    for key in enforced {
        let delta = sens
            .coefficients(key)
            .map_err(|source| FormulationError::InvalidKey { key: *key, source })?;
        let limit = instance.network.limit(key.line, key.scenario);
        let t = key.period;
        let load_term: f64 = instance
            .demand
            .iter()
            .enumerate()
            .map(|(b, row)| delta[b] * row[t])
            .sum();
        let coefs: Vec<(usize, f64)> = gen_bus
            .iter()
            .enumerate()
            .map(|(g, &b)| (layout.y(g, t), delta[b]))
            .filter(|(_, d)| d.abs() > COEFFICIENT_EPS)
            .collect();
        rows.push(Row {
            coefficients: coefs,
            lower: -limit + load_term,
            upper: limit + load_term,
            origin: RowOrigin::Transmission(*key),
        });
    }

    for (g, gen) in gens.iter().enumerate() {
        for t in 0..HORIZON {
            let mut c = vec![(layout.y(g, t), 1.0)];
            if gen.min_power != 0.0 {
                c.push((layout.x(g, t), -gen.min_power));
            }
            c.extend((0..gen.segments.len()).map(|k| (layout.segment(g, t, k), -1.0)));
            rows.push(eq(c, 0.0, family(SegmentLink, Some(g), t)));
        }
    }
    for (g, gen) in gens.iter().enumerate() {
        for t in 0..HORIZON {
            let mut c = vec![
                (layout.x(g, t), 1.0),
                (layout.z(g, t), -1.0),
                (layout.w(g, t), 1.0),
            ];
            let rhs = if t == 0 {
                if gen.initial_status {
                    1.0
                } else {
                    0.0
                }
            } else {
                c.push((layout.x(g, t - 1), -1.0));
                0.0
            };
            rows.push(eq(c, rhs, family(CommitmentLogic, Some(g), t)));
        }
    }

    for h in hyperplanes {
        let x = layout.x(h.generator, h.period);
        let (coefs, rhs) = match h.kind {
            HyperplaneKind::FixZero => (vec![(x, 1.0)], 0.0),
            HyperplaneKind::FixOne => (vec![(x, 1.0)], 1.0),
            HyperplaneKind::FixNext => (
                vec![(x, 1.0), (layout.x(h.generator, h.period + 1), -1.0)],
                0.0,
            ),
        };
        rows.push(eq(coefs, rhs, RowOrigin::Hyperplane(*h)));
    }

    Ok(MipModel {
        variables,
        rows,
        objective,
        objective_offset: 0.0,
        layout,
    })
}

/// Evaluates the SCUC objective (startup, no-load and segment costs) on a solution.
pub fn objective_value(instance: &UCInstance, sol: &UCSolution) -> f64 {
    let mut total = 0.0;
    for (g, gen) in instance.generators.iter().enumerate() {
        for t in 0..HORIZON {
            if sol.startup[g][t] {
                total += gen.startup_cost;
            }
            if sol.commitment[g][t] {
                total += gen.base_cost;
            }
            total += gen
                .segments
                .iter()
                .zip(&sol.segment_production[g][t])
                .map(|(s, y)| s.cost * y)
                .sum::<f64>();
        }
    }
    total
}

/// True when `key` names a constraint that [`build_model`] can add.
pub fn is_enforceable(sens: &Sensitivities, key: &ConstraintKey) -> bool {
    match key.scenario {
        Scenario::Base => key.line < sens.isf().line_count(),
        Scenario::Outage(_) => sens.coefficients(key).is_ok(),
    }
}
