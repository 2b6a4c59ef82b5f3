//! Nearest-neighbor search and the transmission and warm-start predictors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LearnError, TrainingStore};
use crate::powergrid::{ConstraintKey, HORIZON};
use crate::sampling::ParameterVector;
use crate::solve::WarmStart;

/// Slack for comparisons of vote fractions against thresholds.
const VOTE_EPS: f64 = 1e-9;

/// Per-coordinate min-max scaling fitted to a point set. Constant coordinates
/// are only shifted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl Normalizer {
    pub fn fit(points: &[Vec<f64>]) -> Result<Self, LearnError> {
        let first = points.first().ok_or(LearnError::EmptyStore)?;
        let n = first.len();
        let mut min = first.clone();
        let mut max = first.clone();
        for p in points {
            if p.len() != n {
                return Err(LearnError::Dimension {
                    found: p.len(),
                    expected: n,
                });
            }
            for i in 0..n {
                min[i] = min[i].min(p[i]);
                max[i] = max[i].max(p[i]);
            }
        }
        let range = min
            .iter()
            .zip(&max)
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        Ok(Normalizer { min, range })
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| (v - lo) / r)
            .collect()
    }
}

/// Indices of the `k` points closest to `query` in Euclidean distance after
/// min-max normalization over `points`; ties go to the lower index.
pub fn knn_indices(points: &[Vec<f64>], query: &[f64], k: usize) -> Result<Vec<usize>, LearnError> {
    if points.is_empty() {
        return Err(LearnError::EmptyStore);
    }
    if k < 1 || k > points.len() {
        return Err(LearnError::BadK {
            k,
            available: points.len(),
        });
    }
    let norm = Normalizer::fit(points)?;
    if query.len() != norm.min.len() {
        return Err(LearnError::Dimension {
            found: query.len(),
            expected: norm.min.len(),
        });
    }
    let q = norm.apply(query);
    let mut dist: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d: f64 = norm
                .apply(p)
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(dist.into_iter().take(k).map(|(_, i)| i).collect())
}

impl TrainingStore {
    pub fn parameter_matrix(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.params.to_vec()).collect()
    }

    pub fn neighbors(&self, query: &ParameterVector, k: usize) -> Result<Vec<usize>, LearnError> {
        knn_indices(&self.parameter_matrix(), &query.to_vec(), k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPredictorConfig {
    pub k: usize,
    /// Percentage of neighbors a key must appear in.
    pub p_threshold: f64,
}

impl TransmissionPredictorConfig {
    pub fn new(k: usize) -> Self {
        TransmissionPredictorConfig {
            k,
            p_threshold: 10.0,
        }
    }
}

/// Flow limits that were enforced for at least `p_threshold`% of the `k`
/// nearest training variations. Only keys seen in some neighbor qualify.
pub fn predict_transmission(
    store: &TrainingStore,
    query: &ParameterVector,
    cfg: &TransmissionPredictorConfig,
) -> Result<BTreeSet<ConstraintKey>, LearnError> {
    if !(0.0..=100.0).contains(&cfg.p_threshold) {
        return Err(LearnError::Config(format!(
            "threshold {}% is outside [0, 100]",
            cfg.p_threshold
        )));
    }
    let neighbors = store.neighbors(query, cfg.k)?;
    let mut counts: BTreeMap<ConstraintKey, usize> = BTreeMap::new();
    for &i in &neighbors {
        for key in &store.records[i].enforced {
            *counts.entry(*key).or_default() += 1;
        }
    }
    let needed = cfg.p_threshold / 100.0 * cfg.k as f64;
    Ok(counts
        .into_iter()
        .filter(|&(_, c)| c as f64 >= needed - VOTE_EPS)
        .map(|(k, _)| k)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStartMode {
    /// One start holding the values that more than a fraction `p` of the
    /// neighbors agree on.
    Consensus { p: f64 },
    /// The full commitment of each of the `n` nearest variations.
    Collect { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStartPredictorConfig {
    pub k: usize,
    pub mode: WarmStartMode,
}

impl Default for WarmStartPredictorConfig {
    fn default() -> Self {
        WarmStartPredictorConfig {
            k: 50,
            mode: WarmStartMode::Consensus { p: 0.9 },
        }
    }
}

/// Warm starts built from the commitments of the nearest training variations.
///
/// In consensus mode `x[g][t]` is set to 1 when the fraction of neighbors with
/// the unit on exceeds `p`, to 0 when it is at most `1 - p`, and left open
/// otherwise.
pub fn predict_warm_start(
    store: &TrainingStore,
    query: &ParameterVector,
    cfg: &WarmStartPredictorConfig,
) -> Result<Vec<WarmStart>, LearnError> {
    match cfg.mode {
        WarmStartMode::Collect { n } => Ok(store
            .neighbors(query, n)?
            .into_iter()
            .map(|i| WarmStart::from_commitment(&store.records[i].solution.commitment))
            .collect()),
        WarmStartMode::Consensus { p } => {
            if !(0.5..=1.0).contains(&p) {
                return Err(LearnError::Config(format!(
                    "consensus fraction {p} is outside [0.5, 1]"
                )));
            }
            let neighbors = store.neighbors(query, cfg.k)?;
            let first = &store.records[neighbors[0]].solution.commitment;
            let gens = first.len();
            let k = neighbors.len() as f64;
            let mut start = WarmStart::empty(gens);
            for g in 0..gens {
                for t in 0..HORIZON {
                    let ones = neighbors
                        .iter()
                        .filter(|&&i| store.records[i].solution.commitment[g][t])
                        .count() as f64;
                    let zeros = k - ones;
                    start.values[g][t] = if ones > p * k + VOTE_EPS {
                        Some(true)
                    } else if zeros >= p * k - VOTE_EPS {
                        Some(false)
                    } else {
                        None
                    };
                }
            }
            Ok(vec![start])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powergrid::{Scenario, UCSolution};
    use crate::learn::TrainingRecord;

    fn params(x: f64) -> ParameterVector {
        ParameterVector {
            cost_multipliers: vec![x],
            load_weights: vec![],
            hourly_ratios: vec![],
            peak_fraction: 0.6,
        }
    }

    fn solution(on: &[bool]) -> UCSolution {
        let g = on.len();
        UCSolution {
            commitment: on.iter().map(|&b| vec![b; HORIZON]).collect(),
            startup: vec![vec![false; HORIZON]; g],
            shutdown: vec![vec![false; HORIZON]; g],
            production: vec![vec![0.0; HORIZON]; g],
            segment_production: vec![vec![vec![]; HORIZON]; g],
            reserve: vec![vec![0.0; HORIZON]; g],
            objective: 0.0,
        }
    }

    fn key(l: usize) -> ConstraintKey {
        ConstraintKey::new(l, Scenario::Base, 0)
    }

    fn store(entries: &[(f64, &[usize], &[bool])]) -> TrainingStore {
        TrainingStore {
            fingerprint: String::new(),
            records: entries
                .iter()
                .enumerate()
                .map(|(i, (x, keys, on))| TrainingRecord {
                    seed: i as u64,
                    params: params(*x),
                    enforced: keys.iter().map(|&l| key(l)).collect(),
                    solution: solution(on),
                })
                .collect(),
        }
    }

    #[test]
    fn knn_examples() {
        let pts = vec![vec![0.0], vec![1.0], vec![10.0]];
        assert_eq!(knn_indices(&pts, &[0.4], 2).unwrap(), vec![0, 1]);
        assert_eq!(knn_indices(&pts, &[10.0], 1).unwrap(), vec![2]);
        assert_eq!(knn_indices(&pts, &[5.0], 3).unwrap().len(), 3);
        assert!(matches!(knn_indices(&pts, &[0.0], 4), Err(LearnError::BadK { .. })));
        assert!(matches!(knn_indices(&[], &[0.0], 1), Err(LearnError::EmptyStore)));
    }

    #[test]
    fn knn_ties_go_to_lower_index() {
        let pts = vec![vec![2.0], vec![0.0], vec![2.0], vec![4.0]];
        assert_eq!(knn_indices(&pts, &[1.0], 2).unwrap(), vec![0, 1]);
        assert_eq!(knn_indices(&pts, &[3.0], 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn transmission_threshold_examples() {
        let s = store(&[(0.0, &[0, 1], &[true]), (0.1, &[0], &[true]), (0.2, &[2], &[true])]);
        let q = params(0.1);
        let low = predict_transmission(&s, &q, &TransmissionPredictorConfig::new(3)).unwrap();
        assert_eq!(low, [key(0), key(1), key(2)].into_iter().collect());
        let cfg = TransmissionPredictorConfig {
            k: 3,
            p_threshold: 50.0,
        };
        assert_eq!(
            predict_transmission(&s, &q, &cfg).unwrap(),
            [key(0)].into_iter().collect()
        );
        let nearest = TransmissionPredictorConfig {
            k: 1,
            p_threshold: 0.0,
        };
        let q = params(0.2);
        assert_eq!(
            predict_transmission(&s, &q, &nearest).unwrap(),
            [key(2)].into_iter().collect()
        );
    }

    #[test]
    fn consensus_examples() {
        let s = store(&[
            (0.0, &[], &[true, true]),
            (0.1, &[], &[true, true]),
            (0.2, &[], &[true, false]),
            (0.3, &[], &[true, true]),
        ]);
        let cfg = WarmStartPredictorConfig {
            k: 4,
            mode: WarmStartMode::Consensus { p: 0.9 },
        };
        let ws = predict_warm_start(&s, &params(0.0), &cfg).unwrap();
        assert_eq!(ws.len(), 1);
        assert!(ws[0].values[0].iter().all(|v| *v == Some(true)));
        assert!(ws[0].values[1].iter().all(|v| v.is_none()));
        let cfg = WarmStartPredictorConfig {
            k: 3,
            mode: WarmStartMode::Consensus { p: 0.5 },
        };
        let ws = predict_warm_start(&s, &params(0.0), &cfg).unwrap();
        assert_eq!(ws[0].assigned(), 2 * HORIZON);
        assert!(ws[0].values[1].iter().all(|v| *v == Some(true)));
    }

    #[test]
    fn collect_returns_neighbor_commitments_in_order() {
        let s = store(&[(0.0, &[], &[false]), (0.5, &[], &[true]), (1.0, &[], &[false])]);
        let cfg = WarmStartPredictorConfig {
            k: 3,
            mode: WarmStartMode::Collect { n: 2 },
        };
        let ws = predict_warm_start(&s, &params(0.6), &cfg).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[0].values[0][0], Some(true));
        assert_eq!(ws[1].values[0][0], Some(false));
    }

    #[test]
    fn bad_settings_rejected() {
        let s = store(&[(0.0, &[], &[true])]);
        let cfg = WarmStartPredictorConfig {
            k: 1,
            mode: WarmStartMode::Consensus { p: 0.4 },
        };
        assert!(predict_warm_start(&s, &params(0.0), &cfg).is_err());
        let cfg = TransmissionPredictorConfig {
            k: 1,
            p_threshold: 120.0,
        };
        assert!(predict_transmission(&s, &params(0.0), &cfg).is_err());
    }
}
