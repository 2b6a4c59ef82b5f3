//! DC power-flow sensitivities and the transmission violation scan.
//!
//! Injection shift factors (ISFs) are built from the reduced bus susceptance
//! matrix with the slack bus absorbing every injection. Post-contingency
//! factors use line outage distribution factors:
//!
//! ```text
//! δᶜ_lb = δ⁰_lb + LODF(l, c) · δ⁰_cb,   LODF(l, c) = φ_l / (1 − φ_c),   LODF(c, c) = −1
//! ```
//!
//! where `φ_l = δ⁰_l,from(c) − δ⁰_l,to(c)` is the flow on `l` caused by a unit
//! transfer across the endpoints of `c`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powergrid::{ConstraintKey, PowerNetwork, Scenario, UCInstance, HORIZON};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("reduced susceptance matrix is singular")]
    Singular,
    #[error("outage of line {0:?} islands the network; scenario excluded")]
    Islanding(String),
    #[error("line index {0} out of range")]
    UnknownLine(usize),
}

/// Base-case injection shift factors, `|L| × |B|`, row-major by line.
#[derive(Debug, Clone, PartialEq)]
pub struct IsfMatrix {
    rows: Vec<Vec<f64>>,
    slack: usize,
}

impl IsfMatrix {
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.rows[line][bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.rows[line]
    }

    pub fn line_count(&self) -> usize {
        self.rows.len()
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    /// Flow on every line for the given bus injections (MW, slack absorbs the balance).
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| dot(row, injections)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes base-case ISFs for a connected network.
pub fn build_isf(network: &PowerNetwork) -> Result<IsfMatrix, SensitivityError> {
    let n = network.bus_count();
    let slack = network.slack_index();
    // reduced index: skip the slack bus
    let reduced = |b: usize| if b < slack { Some(b) } else if b > slack { Some(b - 1) } else { None };

    let mut susceptance = DMatrix::<f64>::zeros(n - 1, n - 1);
    for l in 0..network.line_count() {
        let (i, j) = network.endpoints(l);
        let y = 1.0 / network.lines()[l].reactance;
        if let Some(ri) = reduced(i) {
            susceptance[(ri, ri)] += y;
        }
        if let Some(rj) = reduced(j) {
            susceptance[(rj, rj)] += y;
        }
        if let (Some(ri), Some(rj)) = (reduced(i), reduced(j)) {
            susceptance[(ri, rj)] -= y;
            susceptance[(rj, ri)] -= y;
        }
    }
    let reactance = if n > 1 {
        susceptance
            .lu()
            .try_inverse()
            .ok_or(SensitivityError::Singular)?
    } else {
        DMatrix::zeros(0, 0)
    };
    // angle of bus `a` per unit injection at bus `b`
    let angle = |a: usize, b: usize| match (reduced(a), reduced(b)) {
        (Some(ra), Some(rb)) => reactance[(ra, rb)],
        _ => 0.0,
    };
    let rows = (0..network.line_count())
        .map(|l| {
            let (i, j) = network.endpoints(l);
            let x = network.lines()[l].reactance;
            (0..n).map(|b| (angle(i, b) - angle(j, b)) / x).collect()
        })
        .collect();
    Ok(IsfMatrix { rows, slack })
}

/// Post-contingency ISFs for one outage scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageIsf {
    outage: usize,
    /// `lodf[l]` for every line; `lodf[outage] == -1`.
    lodf: Vec<f64>,
    /// `rows[l]` is `δᶜ_l·`; the outaged line's own row is empty.
    rows: Vec<Vec<f64>>,
}

impl OutageIsf {
    pub fn outage(&self) -> usize {
        self.outage
    }

    pub fn lodf(&self, line: usize) -> f64 {
        self.lodf[line]
    }

    /// Post-outage shift factors of `line`, or `None` for the outaged line itself.
    pub fn row(&self, line: usize) -> Option<&[f64]> {
        if line == self.outage {
            None
        } else {
            Some(&self.rows[line])
        }
    }

    /// Lines whose flow is limited under this scenario (all but the outaged one).
    pub fn monitored(&self) -> impl Iterator<Item = usize> + '_ {
        let outage = self.outage;
        (0..self.rows.len()).filter(move |&l| l != outage)
    }

    /// Post-outage flow on `line` given pre-outage flows on every line.
    pub fn post_outage_flow(&self, base_flows: &[f64], line: usize) -> f64 {
        base_flows[line] + self.lodf[line] * base_flows[self.outage]
    }
}

/// Builds outage factors for line `outage`, failing when it is a bridge.
pub fn build_outage_isf(
    network: &PowerNetwork,
    isf: &IsfMatrix,
    outage: usize,
) -> Result<OutageIsf, SensitivityError> {
    if outage >= network.line_count() {
        return Err(SensitivityError::UnknownLine(outage));
    }
    if network.is_bridge(outage) {
        return Err(SensitivityError::Islanding(
            network.lines()[outage].id.clone(),
        ));
    }
    let (i, j) = network.endpoints(outage);
    let transfer = |l: usize| isf.get(l, i) - isf.get(l, j);
    let denom = 1.0 - transfer(outage);
    let lodf: Vec<f64> = (0..network.line_count())
        .map(|l| if l == outage { -1.0 } else { transfer(l) / denom })
        .collect();
    let outage_row = isf.row(outage);
    let rows = (0..network.line_count())
        .map(|l| {
            if l == outage {
                Vec::new()
            } else {
                isf.row(l)
                    .iter()
                    .zip(outage_row)
                    .map(|(d, dc)| d + lodf[l] * dc)
                    .collect()
            }
        })
        .collect();
    Ok(OutageIsf { outage, lodf, rows })
}

/// Cached sensitivities of one network: base ISFs up front, outage factors on
/// first use. Safe to share between threads.
#[derive(Debug)]
pub struct Sensitivities {
    network: PowerNetwork,
    isf: IsfMatrix,
    bridges: Vec<bool>,
    outages: Vec<OnceLock<OutageIsf>>,
}

impl Sensitivities {
    pub fn new(network: &PowerNetwork) -> Result<Self, SensitivityError> {
        let isf = build_isf(network)?;
        let bridges: Vec<bool> = (0..network.line_count())
            .map(|l| network.is_bridge(l))
            .collect();
        if bridges.iter().any(|b| *b) {
            let ids: Vec<&str> = bridges
                .iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .map(|(l, _)| network.lines()[l].id.as_str())
                .collect();
            log::debug!("islanding outages excluded from N-1 screening: {ids:?}");
        }
        Ok(Sensitivities {
            network: network.clone(),
            isf,
            outages: (0..network.line_count()).map(|_| OnceLock::new()).collect(),
            bridges,
        })
    }

    pub fn network(&self) -> &PowerNetwork {
        &self.network
    }

    pub fn isf(&self) -> &IsfMatrix {
        &self.isf
    }

    pub fn is_islanding(&self, line: usize) -> bool {
        self.bridges[line]
    }

    /// Outage scenarios screened for N-1 security: every non-bridge line.
    pub fn contingencies(&self) -> Vec<usize> {
        (0..self.bridges.len()).filter(|&c| !self.bridges[c]).collect()
    }

    pub fn outage(&self, c: usize) -> Result<&OutageIsf, SensitivityError> {
        if c >= self.outages.len() {
            return Err(SensitivityError::UnknownLine(c));
        }
        if self.bridges[c] {
            return Err(SensitivityError::Islanding(
                self.network.lines()[c].id.clone(),
            ));
        }
        Ok(self.outages[c].get_or_init(|| {
            build_outage_isf(&self.network, &self.isf, c).expect("non-bridge outage")
        }))
    }

    /// Shift-factor row of a constraint key, or an error for keys that name an
    /// islanding outage or monitor the outaged line itself.
    pub fn coefficients(&self, key: &ConstraintKey) -> Result<&[f64], SensitivityError> {
        if key.line >= self.isf.line_count() {
            return Err(SensitivityError::UnknownLine(key.line));
        }
        match key.scenario {
            Scenario::Base => Ok(self.isf.row(key.line)),
            Scenario::Outage(c) => self
                .outage(c)?
                .row(key.line)
                .ok_or(SensitivityError::UnknownLine(key.line)),
        }
    }

    pub fn base_flows(&self, injections: &[f64]) -> Vec<f64> {
        self.isf.flows(injections)
    }

    /// Every valid constraint key: base case plus non-islanding outages,
    /// excluding the outaged line's own row.
    pub fn all_keys(&self) -> BTreeSet<ConstraintKey> {
        let lines = self.isf.line_count();
        let mut keys = BTreeSet::new();
        for t in 0..HORIZON {
            for l in 0..lines {
                keys.insert(ConstraintKey::new(l, Scenario::Base, t));
                for c in self.contingencies() {
                    if c != l {
                        keys.insert(ConstraintKey::new(l, Scenario::Outage(c), t));
                    }
                }
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    /// Cap on violations added per period in one pass.
    pub max_violations_per_period: usize,
    /// Overloads at or below this many MW are treated as zero.
    pub min_violation: f64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            max_violations_per_period: 15,
            min_violation: 1e-6,
        }
    }
}

/// Violated constraints retained for addition, with overload magnitude in MW.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationSet {
    pub entries: Vec<(ConstraintKey, f64)>,
}

impl ViolationSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = ConstraintKey> + '_ {
        self.entries.iter().map(|(k, _)| *k)
    }
}

/// Overload of a flow `f` against a symmetric limit.
pub fn overload(flow: f64, limit: f64) -> f64 {
    (-flow - limit).max(0.0).max(flow - limit)
}

/// Finds flow-limit violations of a dispatch and keeps, per line and period,
/// the worst scenario, then per period the `max_violations_per_period` worst
/// entries. Keys already in `enforced` are never reported. Ties go to the
/// lower (line, scenario) pair.
pub fn scan_violations(
    instance: &UCInstance,
    sens: &Sensitivities,
    production: &[Vec<f64>],
    enforced: &BTreeSet<ConstraintKey>,
    cfg: &ScreeningConfig,
) -> ViolationSet {
    let net = &instance.network;
    let contingencies = sens.contingencies();
    let mut kept = Vec::new();
    for t in 0..HORIZON {
        let injections = instance.injections(production, t);
        let base = sens.base_flows(&injections);
        // (line) -> worst (gamma, scenario)
        let mut worst: BTreeMap<usize, (f64, Scenario)> = BTreeMap::new();
        let mut offer = |key: ConstraintKey, gamma: f64| {
            if gamma <= cfg.min_violation || enforced.contains(&key) {
                return;
            }
            let slot = worst.entry(key.line).or_insert((gamma, key.scenario));
            if gamma > slot.0 || (gamma == slot.0 && key.scenario < slot.1) {
                *slot = (gamma, key.scenario);
            }
        };
        for (l, &f) in base.iter().enumerate() {
            offer(
                ConstraintKey::new(l, Scenario::Base, t),
                overload(f, net.normal_limit(l)),
            );
        }
        for &c in &contingencies {
            let outage = sens.outage(c).expect("non-bridge");
            for l in outage.monitored() {
                let f = outage.post_outage_flow(&base, l);
                offer(
                    ConstraintKey::new(l, Scenario::Outage(c), t),
                    overload(f, net.contingency_limit(l, c)),
                );
            }
        }
        let mut period: Vec<(ConstraintKey, f64)> = worst
            .into_iter()
            .map(|(l, (gamma, s))| (ConstraintKey::new(l, s, t), gamma))
            .collect();
        period.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(a.0.line.cmp(&b.0.line))
                .then(a.0.scenario.cmp(&b.0.scenario))
        });
        period.truncate(cfg.max_violations_per_period);
        kept.extend(period);
    }
    ViolationSet { entries: kept }
}
