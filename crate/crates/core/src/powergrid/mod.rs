//! Domain data model for day-ahead SCUC instances.
//!
//! All power quantities are MW over one-hour periods, so energy (MWh) and power
//! coincide numerically. Periods are indexed `0..HORIZON` in code.

mod keys;
mod schema;
mod validate;

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use keys::{ConstraintKey, KeyRecord, Scenario};
pub use schema::{load_instance, parse_instance, save_instance, to_json, InstanceError, FORMAT_TAG};
pub use validate::{
    validate_solution, validate_solution_with, ConstraintFamily, DimensionMismatch,
    FeasibilityReport, Violation,
};

/// Number of hourly periods in the planning horizon.
pub const HORIZON: usize = 24;

/// A structural invariant that an instance or one of its parts does not satisfy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{context} references undeclared bus {bus:?}")]
    UnknownBus { context: String, bus: String },
    #[error("slack bus {0:?} is not a declared bus")]
    UnknownSlack(String),
    #[error("network has no buses")]
    Empty,
    #[error("line {line:?} has non-positive reactance {value}")]
    Reactance { line: String, value: f64 },
    #[error("line {line:?} connects bus {bus:?} to itself")]
    SelfLoop { line: String, bus: String },
    #[error("line {line:?} has non-positive {which} limit {value}")]
    LineLimit {
        line: String,
        which: &'static str,
        value: f64,
    },
    #[error("line {line:?} lists a contingency limit for unknown outage {outage:?}")]
    UnknownOutage { line: String, outage: String },
    #[error("network is disconnected: bus {bus:?} is unreachable from {root:?}")]
    Disconnected { bus: String, root: String },
    #[error("generator {generator:?}: {reason}")]
    Generator { generator: String, reason: String },
    #[error("generator {generator:?}: segment sizes sum to {sum} but max - min power is {expected}")]
    SegmentSum {
        generator: String,
        sum: f64,
        expected: f64,
    },
    #[error("{what} has {len} values, expected {expected}")]
    Length {
        what: String,
        len: usize,
        expected: usize,
    },
    #[error("constraint key monitors line {0:?} under its own outage")]
    SelfOutage(String),
    #[error("{what} must be finite and non-negative, got {value}")]
    Negative { what: String, value: f64 },
    #[error("period {period}: load {load} MW exceeds installed capacity {capacity} MW")]
    Unservable {
        period: usize,
        load: f64,
        capacity: f64,
    },
}

/// Contingency flow limit of a line: one value for every outage, or per outage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContingencyLimit {
    Uniform(f64),
    PerOutage {
        default: f64,
        by_outage: BTreeMap<String, f64>,
    },
}

impl ContingencyLimit {
    pub fn for_outage(&self, outage_id: &str) -> f64 {
        match self {
            ContingencyLimit::Uniform(v) => *v,
            ContingencyLimit::PerOutage { default, by_outage } => {
                by_outage.get(outage_id).copied().unwrap_or(*default)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLine {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Series reactance, per unit.
    pub reactance: f64,
    /// Flow limit under normal operation, MW.
    pub normal_limit: f64,
    /// Flow limit after a single outage of another line, MW.
    pub contingency_limit: ContingencyLimit,
}

/// Static transmission network. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    buses: Vec<String>,
    lines: Vec<TransmissionLine>,
    slack_bus: String,
    bus_index: HashMap<String, usize>,
    endpoints: Vec<(usize, usize)>,
    slack: usize,
    /// `outage_limits[l][c]`, only materialized when some line has per-outage limits.
    outage_limits: Option<Vec<Vec<f64>>>,
}

impl PowerNetwork {
    pub fn new(
        buses: Vec<String>,
        lines: Vec<TransmissionLine>,
        slack_bus: String,
    ) -> Result<Self, ValidationError> {
        if buses.is_empty() {
            return Err(ValidationError::Empty);
        }
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if bus_index.insert(b.clone(), i).is_some() {
                return Err(ValidationError::DuplicateId {
                    kind: "bus",
                    id: b.clone(),
                });
            }
        }
        let slack = *bus_index
            .get(&slack_bus)
            .ok_or_else(|| ValidationError::UnknownSlack(slack_bus.clone()))?;

        let mut line_ids = HashMap::with_capacity(lines.len());
        let mut endpoints = Vec::with_capacity(lines.len());
        for (l, line) in lines.iter().enumerate() {
            if line_ids.insert(line.id.clone(), l).is_some() {
                return Err(ValidationError::DuplicateId {
                    kind: "line",
                    id: line.id.clone(),
                });
            }
            let lookup = |bus: &String| {
                bus_index
                    .get(bus)
                    .copied()
                    .ok_or_else(|| ValidationError::UnknownBus {
                        context: format!("line {:?}", line.id),
                        bus: bus.clone(),
                    })
            };
            let (from, to) = (lookup(&line.from_bus)?, lookup(&line.to_bus)?);
            if from == to {
                return Err(ValidationError::SelfLoop {
                    line: line.id.clone(),
                    bus: line.from_bus.clone(),
                });
            }
            if !(line.reactance.is_finite() && line.reactance > 0.0) {
                return Err(ValidationError::Reactance {
                    line: line.id.clone(),
                    value: line.reactance,
                });
            }
            let positive = |v: f64| v.is_finite() && v > 0.0;
            if !positive(line.normal_limit) {
                return Err(ValidationError::LineLimit {
                    line: line.id.clone(),
                    which: "normal",
                    value: line.normal_limit,
                });
            }
            let limits: Vec<f64> = match &line.contingency_limit {
                ContingencyLimit::Uniform(v) => vec![*v],
                ContingencyLimit::PerOutage { default, by_outage } => std::iter::once(*default)
                    .chain(by_outage.values().copied())
                    .collect(),
            };
            if let Some(bad) = limits.into_iter().find(|v| !positive(*v)) {
                return Err(ValidationError::LineLimit {
                    line: line.id.clone(),
                    which: "contingency",
                    value: bad,
                });
            }
            endpoints.push((from, to));
        }

        let mut outage_limits = None;
        if lines
            .iter()
            .any(|l| matches!(l.contingency_limit, ContingencyLimit::PerOutage { .. }))
        {
            for line in &lines {
                if let ContingencyLimit::PerOutage { by_outage, .. } = &line.contingency_limit {
                    if let Some(unknown) = by_outage.keys().find(|k| !line_ids.contains_key(*k)) {
                        return Err(ValidationError::UnknownOutage {
                            line: line.id.clone(),
                            outage: unknown.clone(),
                        });
                    }
                }
            }
            outage_limits = Some(
                lines
                    .iter()
                    .map(|l| {
                        lines
                            .iter()
                            .map(|c| l.contingency_limit.for_outage(&c.id))
                            .collect()
                    })
                    .collect(),
            );
        }

        let network = PowerNetwork {
            buses,
            lines,
            slack_bus,
            bus_index,
            endpoints,
            slack,
            outage_limits,
        };
        if let Some(bus) = network.first_unreachable(None) {
            return Err(ValidationError::Disconnected {
                bus: network.buses[bus].clone(),
                root: network.buses[network.slack].clone(),
            });
        }
        Ok(network)
    }

    pub fn buses(&self) -> &[String] {
        &self.buses
    }

    pub fn lines(&self) -> &[TransmissionLine] {
        &self.lines
    }

    pub fn slack_bus(&self) -> &str {
        &self.slack_bus
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// `(from, to)` bus indices of line `l`.
    pub fn endpoints(&self, l: usize) -> (usize, usize) {
        self.endpoints[l]
    }

    pub fn normal_limit(&self, l: usize) -> f64 {
        self.lines[l].normal_limit
    }

    /// Limit of line `l` when line `outage` is out of service.
    pub fn contingency_limit(&self, l: usize, outage: usize) -> f64 {
        match &self.outage_limits {
            Some(table) => table[l][outage],
            None => match self.lines[l].contingency_limit {
                ContingencyLimit::Uniform(v) => v,
                ContingencyLimit::PerOutage { default, .. } => default,
            },
        }
    }

    pub fn limit(&self, l: usize, scenario: Scenario) -> f64 {
        match scenario {
            Scenario::Base => self.normal_limit(l),
            Scenario::Outage(c) => self.contingency_limit(l, c),
        }
    }

    /// True when removing line `l` splits the network into islands.
    pub fn is_bridge(&self, l: usize) -> bool {
        self.first_unreachable(Some(l)).is_some()
    }

    /// Breadth-first search from the slack bus, optionally skipping one line.
    fn first_unreachable(&self, skip: Option<usize>) -> Option<usize> {
        let n = self.buses.len();
        let mut adjacency = vec![Vec::new(); n];
        for (l, &(a, b)) in self.endpoints.iter().enumerate() {
            if Some(l) != skip {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

/// One linear piece of a convex production cost curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    /// Width of the piece, MW.
    pub size: f64,
    /// Marginal cost, $/MWh.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub min_power: f64,
    pub max_power: f64,
    pub segments: Vec<CostSegment>,
    /// Hourly cost of running at minimum output, $/h.
    pub base_cost: f64,
    pub startup_cost: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub min_up: u32,
    pub min_down: u32,
    #[serde(default)]
    pub initial_status: bool,
}

impl Generator {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let err = |reason: String| ValidationError::Generator {
            generator: self.id.clone(),
            reason,
        };
        let finite = [
            self.min_power,
            self.max_power,
            self.base_cost,
            self.startup_cost,
            self.ramp_up,
            self.ramp_down,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite parameter".into()));
        }
        if !(0.0 <= self.min_power && self.min_power <= self.max_power) {
            return Err(err(format!(
                "power limits must satisfy 0 <= min ({}) <= max ({})",
                self.min_power, self.max_power
            )));
        }
        if self.ramp_up < 0.0 || self.ramp_down < 0.0 {
            return Err(err("ramp rates must be non-negative".into()));
        }
        if self.min_up < 1 || self.min_down < 1 {
            return Err(err("minimum up/down times must be at least 1 hour".into()));
        }
        if self.segments.is_empty() && self.max_power > self.min_power {
            return Err(err("no cost segments".into()));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.size.is_finite() && s.size >= 0.0 && s.cost.is_finite()) {
                return Err(err(format!("segment {k} has invalid size or cost")));
            }
        }
        if self.segments.windows(2).any(|w| w[1].cost < w[0].cost) {
            return Err(err("segment marginal costs must be nondecreasing".into()));
        }
        let sum: f64 = self.segments.iter().map(|s| s.size).sum();
        let expected = self.max_power - self.min_power;
        if (sum - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(ValidationError::SegmentSum {
                generator: self.id.clone(),
                sum,
                expected,
            });
        }
        Ok(())
    }

    /// Unweighted mean of segment marginal costs; 0 when there are no segments.
    pub fn mean_marginal_cost(&self) -> f64 {
        if self.segments.is_empty() {
            0.0
        } else {
            self.segments.iter().map(|s| s.cost).sum::<f64>() / self.segments.len() as f64
        }
    }
}

/// A fully parameterized 24-period SCUC problem.
///
/// Generators are kept sorted by id, which fixes variable order in models.
#[derive(Debug, Clone, PartialEq)]
pub struct UCInstance {
    pub network: PowerNetwork,
    pub generators: Vec<Generator>,
    /// `demand[bus][t]`, MW.
    pub demand: Vec<Vec<f64>>,
    /// System reserve requirement per period, MW.
    pub reserve: Vec<f64>,
}

impl UCInstance {
    pub fn new(
        network: PowerNetwork,
        mut generators: Vec<Generator>,
        demand: Vec<Vec<f64>>,
        reserve: Vec<f64>,
    ) -> Result<Self, ValidationError> {
        generators.sort_by(|a, b| a.id.cmp(&b.id));
        let instance = UCInstance {
            network,
            generators,
            demand,
            reserve,
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Checks every instance invariant except network structure, which
    /// [`PowerNetwork::new`] already guarantees.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let net = &self.network;
        for w in self.generators.windows(2) {
            if w[0].id == w[1].id {
                return Err(ValidationError::DuplicateId {
                    kind: "generator",
                    id: w[0].id.clone(),
                });
            }
        }
        for g in &self.generators {
            if net.bus_index(&g.bus).is_none() {
                return Err(ValidationError::UnknownBus {
                    context: format!("generator {:?}", g.id),
                    bus: g.bus.clone(),
                });
            }
            g.validate()?;
        }
        if self.demand.len() != net.bus_count() {
            return Err(ValidationError::Length {
                what: "demand table".into(),
                len: self.demand.len(),
                expected: net.bus_count(),
            });
        }
        for (b, row) in self.demand.iter().enumerate() {
            if row.len() != HORIZON {
                return Err(ValidationError::Length {
                    what: format!("demand of bus {:?}", net.buses()[b]),
                    len: row.len(),
                    expected: HORIZON,
                });
            }
            if let Some(&v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(ValidationError::Negative {
                    what: format!("demand of bus {:?}", net.buses()[b]),
                    value: v,
                });
            }
        }
        if self.reserve.len() != HORIZON {
            return Err(ValidationError::Length {
                what: "reserve".into(),
                len: self.reserve.len(),
                expected: HORIZON,
            });
        }
        if let Some(&v) = self.reserve.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(ValidationError::Negative {
                what: "reserve".into(),
                value: v,
            });
        }
        let capacity = self.total_capacity();
        for t in 0..HORIZON {
            let load = self.system_load(t);
            if load > capacity * (1.0 + 1e-12) {
                return Err(ValidationError::Unservable {
                    period: t + 1,
                    load,
                    capacity,
                });
            }
        }
        Ok(())
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.max_power).sum()
    }

    /// Total demand over all buses in period `t`.
    pub fn system_load(&self, t: usize) -> f64 {
        self.demand.iter().map(|row| row[t]).sum()
    }

    pub fn system_loads(&self) -> Vec<f64> {
        (0..HORIZON).map(|t| self.system_load(t)).collect()
    }

    /// Bus index of every generator, in generator order.
    pub fn generator_buses(&self) -> Vec<usize> {
        self.generators
            .iter()
            .map(|g| self.network.bus_index(&g.bus).expect("validated"))
            .collect()
    }

    /// Net injection `Σ_{g at b} y_gt − d_bt` for each bus in period `t`.
    pub fn injections(&self, production: &[Vec<f64>], t: usize) -> Vec<f64> {
        let mut inj: Vec<f64> = self.demand.iter().map(|row| -row[t]).collect();
        for (g, b) in self.generator_buses().into_iter().enumerate() {
            inj[b] += production[g][t];
        }
        inj
    }
}

/// Commitment and dispatch for every generator and period, indexed `[g][t]`
/// (segment production `[g][t][k]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCSolution {
    pub commitment: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub shutdown: Vec<Vec<bool>>,
    pub production: Vec<Vec<f64>>,
    pub segment_production: Vec<Vec<Vec<f64>>>,
    pub reserve: Vec<Vec<f64>>,
    pub objective: f64,
}

impl UCSolution {
    /// Everything off, nothing produced.
    pub fn all_off(instance: &UCInstance) -> Self {
        let g = instance.generators.len();
        UCSolution {
            commitment: vec![vec![false; HORIZON]; g],
            startup: vec![vec![false; HORIZON]; g],
            shutdown: vec![vec![false; HORIZON]; g],
            production: vec![vec![0.0; HORIZON]; g],
            segment_production: instance
                .generators
                .iter()
                .map(|gen| vec![vec![0.0; gen.segments.len()]; HORIZON])
                .collect(),
            reserve: vec![vec![0.0; HORIZON]; g],
            objective: 0.0,
        }
    }
}
