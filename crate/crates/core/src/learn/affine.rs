//! Affine subspace predictor: decides, per candidate hyperplane, whether to
//! add it to the model for a new variation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{kfold_evaluate, svm_train, SvmModel};
use super::{fingerprint, LearnError, TrainingStore};
use crate::formulation::{Hyperplane, HyperplaneKind};
use crate::powergrid::{UCInstance, HORIZON};
use crate::sampling::apply_parameters;

/// Peak load, 24 hourly loads, own mean marginal cost, others' mean.
pub const FEATURE_COUNT: usize = 27;

/// Features of generator `g` in `instance`.
pub fn extract_features(instance: &UCInstance, g: usize) -> Vec<f64> {
    let loads = instance.system_loads();
    let mut f = Vec::with_capacity(FEATURE_COUNT);
    f.push(loads.iter().copied().fold(f64::MIN, f64::max));
    f.extend_from_slice(&loads);
    let costs: Vec<f64> = instance
        .generators
        .iter()
        .map(|gen| gen.mean_marginal_cost())
        .collect();
    f.push(costs[g]);
    let others = costs.len() - 1;
    f.push(if others == 0 {
        0.0
    } else {
        (costs.iter().sum::<f64>() - costs[g]) / others as f64
    });
    f
}

/// Thresholds for one hyperplane kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub z_fix: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub alpha_r: f64,
    pub alpha_p: f64,
}

impl GateParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let ok = unit(self.z_min)
            && unit(self.z_max)
            && self.z_min <= self.z_max
            && self.z_fix >= self.z_max
            && unit(self.alpha_r)
            && unit(self.alpha_p);
        if ok {
            Ok(())
        } else {
            Err(LearnError::Config(format!("gate thresholds {self:?}")))
        }
    }

    /// Smallest acceptable cross-validated precision for a label mean `z_bar`.
    pub fn precision_threshold(&self, z_bar: f64) -> f64 {
        z_bar.max(1.0 - z_bar) * (1.0 - self.alpha_p) + self.alpha_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineGateConfig {
    pub fix_zero: GateParams,
    pub fix_one: GateParams,
    pub fix_next: GateParams,
    /// SVM penalty.
    pub c: f64,
    pub k_cv: usize,
    /// When off, every classifier that gets trained is used unchecked.
    pub cross_validate: bool,
}

impl AffineGateConfig {
    pub fn params(&self, kind: HyperplaneKind) -> &GateParams {
        match kind {
            HyperplaneKind::FixZero => &self.fix_zero,
            HyperplaneKind::FixOne => &self.fix_one,
            HyperplaneKind::FixNext => &self.fix_next,
        }
    }

    /// Lets classes be far more imbalanced before falling back to a constant.
    pub fn imbalanced() -> Self {
        let widen = |p: GateParams| GateParams {
            z_fix: 0.975,
            z_max: 0.975,
            z_min: 0.025,
            ..p
        };
        let d = Self::default();
        AffineGateConfig {
            fix_zero: widen(d.fix_zero),
            fix_one: widen(d.fix_one),
            fix_next: widen(d.fix_next),
            ..d
        }
    }

    /// [`Self::imbalanced`] with every precision and recall threshold at 0.5.
    pub fn permissive() -> Self {
        let relax = |p: GateParams| GateParams {
            alpha_r: 0.5,
            alpha_p: 0.5,
            ..p
        };
        let d = Self::imbalanced();
        AffineGateConfig {
            fix_zero: relax(d.fix_zero),
            fix_one: relax(d.fix_one),
            fix_next: relax(d.fix_next),
            ..d
        }
    }

    /// Default thresholds, classifiers used without cross-validation.
    pub fn unchecked() -> Self {
        AffineGateConfig {
            cross_validate: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        self.fix_zero.validate()?;
        self.fix_one.validate()?;
        self.fix_next.validate()?;
        if !(self.c.is_finite() && self.c > 0.0) || self.k_cv < 2 {
            return Err(LearnError::Config(format!(
                "C = {}, k_cv = {}",
                self.c, self.k_cv
            )));
        }
        Ok(())
    }
}

impl Default for AffineGateConfig {
    fn default() -> Self {
        AffineGateConfig {
            fix_zero: GateParams {
                z_fix: 1.0,
                z_min: 0.25,
                z_max: 0.75,
                alpha_r: 0.90,
                alpha_p: 0.90,
            },
            fix_one: GateParams {
                z_fix: 1.0,
                z_min: 0.25,
                z_max: 0.75,
                alpha_r: 0.75,
                alpha_p: 0.75,
            },
            fix_next: GateParams {
                z_fix: 0.975,
                z_min: 0.025,
                z_max: 0.975,
                alpha_r: 0.50,
                alpha_p: 0.75,
            },
            c: 1.0,
            k_cv: 5,
            cross_validate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Add,
    Skip,
    /// Add when the classifier answers 1.
    Classifier(SvmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub hyperplane: Hyperplane,
    /// Fraction of training solutions lying on the hyperplane.
    pub z_bar: f64,
    pub decision: GateDecision,
    pub cv_precision: Option<f64>,
    pub cv_recall: Option<f64>,
}

impl Gate {
    /// Whether a recorded classifier meets its acceptance thresholds.
    pub fn meets_thresholds(&self, params: &GateParams) -> bool {
        match (self.cv_precision, self.cv_recall) {
            (Some(p), Some(r)) => r >= params.alpha_r && p >= params.precision_threshold(self.z_bar),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePredictor {
    pub fingerprint: String,
    pub config: AffineGateConfig,
    pub gates: Vec<Gate>,
}

/// Every hyperplane that can restrict the commitments of `generators` units.
pub fn candidate_hyperplanes(generators: usize) -> Vec<Hyperplane> {
    let mut all = Vec::new();
    for g in 0..generators {
        for t in 0..HORIZON {
            all.push(Hyperplane::new(HyperplaneKind::FixZero, g, t));
            all.push(Hyperplane::new(HyperplaneKind::FixOne, g, t));
            if t + 1 < HORIZON {
                all.push(Hyperplane::new(HyperplaneKind::FixNext, g, t));
            }
        }
    }
    all
}

fn fit_gate(
    h: Hyperplane,
    store: &TrainingStore,
    features: &[Vec<Vec<f64>>],
    cfg: &AffineGateConfig,
) -> Result<Gate, LearnError> {
    let params = cfg.params(h.kind);
    let labels: Vec<i8> = store
        .records
        .iter()
        .map(|r| if h.satisfied_by(&r.solution.commitment) { 1 } else { -1 })
        .collect();
    let z_bar = labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
    let mut gate = Gate {
        hyperplane: h,
        z_bar,
        decision: GateDecision::Skip,
        cv_precision: None,
        cv_recall: None,
    };
    if z_bar >= params.z_fix {
        gate.decision = GateDecision::Add;
        return Ok(gate);
    }
    if z_bar < params.z_min || z_bar > params.z_max || !(labels.contains(&1) && labels.contains(&-1)) {
        return Ok(gate);
    }
    let x = &features[h.generator];
    if cfg.cross_validate {
        let cv = kfold_evaluate(x, &labels, cfg.k_cv, cfg.c)?;
        gate.cv_precision = Some(cv.precision);
        gate.cv_recall = Some(cv.recall);
        if !gate.meets_thresholds(params) {
            return Ok(gate);
        }
    }
    gate.decision = GateDecision::Classifier(svm_train(x, &labels, cfg.c)?);
    Ok(gate)
}

/// Fits one gate per candidate hyperplane. Gates are independent and fitted
/// in parallel.
pub fn fit_affine_predictor(
    store: &TrainingStore,
    base: &UCInstance,
    cfg: &AffineGateConfig,
) -> Result<AffinePredictor, LearnError> {
    cfg.validate()?;
    store.check_base(base)?;
    if store.len() < cfg.k_cv {
        return Err(LearnError::BadK {
            k: cfg.k_cv,
            available: store.len(),
        });
    }
    let instances = store
        .records
        .iter()
        .map(|r| apply_parameters(base, &r.params, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    // features[g][i]
    let features: Vec<Vec<Vec<f64>>> = (0..base.generators.len())
        .map(|g| instances.iter().map(|inst| extract_features(inst, g)).collect())
        .collect();
    let gates = candidate_hyperplanes(base.generators.len())
        .into_par_iter()
        .map(|h| fit_gate(h, store, &features, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AffinePredictor {
        fingerprint: store.fingerprint.clone(),
        config: *cfg,
        gates,
    })
}

impl AffinePredictor {
    /// Hyperplanes to add for `instance`, a variation of `base`, at most one
    /// per (generator, period): FixZero wins over FixOne, which wins over
    /// FixNext.
    pub fn predict(&self, base: &UCInstance, instance: &UCInstance) -> Result<Vec<Hyperplane>, LearnError> {
        let found = fingerprint(base);
        if found != self.fingerprint {
            return Err(LearnError::Fingerprint {
                expected: self.fingerprint.clone(),
                found,
            });
        }
        let mut features: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut chosen: BTreeMap<(usize, usize), Hyperplane> = BTreeMap::new();
        for gate in &self.gates {
            let h = gate.hyperplane;
            if h.generator >= instance.generators.len() {
                return Err(LearnError::Dimension {
                    found: instance.generators.len(),
                    expected: h.generator + 1,
                });
            }
            let add = match &gate.decision {
                GateDecision::Add => true,
                GateDecision::Skip => false,
                GateDecision::Classifier(m) => {
                    let f = features
                        .entry(h.generator)
                        .or_insert_with(|| extract_features(instance, h.generator));
                    m.classify(f) == 1
                }
            };
            if !add {
                continue;
            }
            chosen
                .entry((h.generator, h.period))
                .and_modify(|cur| {
                    if h.kind < cur.kind {
                        *cur = h
                    }
                })
                .or_insert(h);
        }
        Ok(chosen.into_values().collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("predictors always serialize")
    }
}

pub fn parse_predictor(text: &str) -> Result<AffinePredictor, LearnError> {
    let p: AffinePredictor = serde_json::from_str(text)?;
    p.config.validate()?;
    Ok(p)
}
