//! Seeded instance variations and load-profile statistics.
//!
//! A variation rescales every generator's costs, redistributes load between
//! buses, and reshapes the hourly system load curve around a random peak. All
//! of it is captured by a [`ParameterVector`]; [`apply_parameters`] turns that
//! vector back into an instance, so a variation is reproducible from its
//! parameters alone.
//!
//! Each randomized quantity draws from its own ChaCha20 stream. The stream key
//! is the SHA-256 digest of the seed (8 bytes, little endian), the attempt
//! number (4 bytes, little endian) and a quantity label (`cost`, `geo`,
//! `profile`, `peak`).

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::powergrid::{UCInstance, ValidationError, HORIZON};

/// Lower clamp for sampled hour-to-hour load ratios.
const MIN_RATIO: f64 = 0.01;
const MAX_ATTEMPTS: u32 = 10;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("reference profile: {0}")]
    Profile(String),
    #[error("reference profile csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("base instance has no load to redistribute")]
    NoLoad,
    #[error("invalid variation: {0}")]
    Invalid(#[from] ValidationError),
    #[error("parameter vector does not match the base system: {0}")]
    Shape(String),
    #[error("no valid variation for seed {seed} after {attempts} attempts: {last}")]
    Exhausted {
        seed: u64,
        attempts: u32,
        last: ValidationError,
    },
}

/// The random quantities that distinguish one variation from another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    /// One multiplier per generator, in instance order.
    pub cost_multipliers: Vec<f64>,
    /// One weight per bus, applied to the base load shares before normalizing.
    pub load_weights: Vec<f64>,
    /// `D_{t+1} / D_t` for the 23 consecutive hour pairs.
    pub hourly_ratios: Vec<f64>,
    /// Peak system load as a fraction of installed capacity.
    pub peak_fraction: f64,
}

impl ParameterVector {
    /// Flattens to the vector used for nearest-neighbor search.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dimension());
        v.extend_from_slice(&self.cost_multipliers);
        v.extend_from_slice(&self.load_weights);
        v.extend_from_slice(&self.hourly_ratios);
        v.push(self.peak_fraction);
        v
    }

    pub fn dimension(&self) -> usize {
        self.cost_multipliers.len() + self.load_weights.len() + self.hourly_ratios.len() + 1
    }

    /// Hourly system loads: `D_1 = 1`, chained through the ratios, scaled so
    /// that the maximum equals `peak_fraction * capacity`.
    pub fn system_loads(&self, capacity: f64) -> Vec<f64> {
        let mut d = Vec::with_capacity(HORIZON);
        d.push(1.0);
        for r in &self.hourly_ratios {
            let last = *d.last().expect("non-empty");
            d.push(last * r);
        }
        let top = (0..d.len()).fold(0, |best, t| if d[t] > d[best] { t } else { best });
        let max = d[top];
        let peak = self.peak_fraction * capacity;
        d.iter_mut().for_each(|v| *v *= peak / max);
        // Remove rounding so the maximum is exactly the peak.
        d[top] = peak;
        d
    }
}

/// Mean and standard deviation of each hour-to-hour load ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileStats {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

impl ProfileStats {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.mean.len() != HORIZON - 1 || self.std_dev.len() != HORIZON - 1 {
            return Err(SamplingError::Profile(format!(
                "expected {} ratios, found {} means and {} deviations",
                HORIZON - 1,
                self.mean.len(),
                self.std_dev.len()
            )));
        }
        if self.mean.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(SamplingError::Profile("ratio means must be positive".into()));
        }
        if self.std_dev.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SamplingError::Profile(
                "ratio deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Fits ratio statistics to daily load curves (`days × 24`). Deviations are
/// sample deviations (divisor `n - 1`).
pub fn fit_profile_stats(days: &[Vec<f64>]) -> Result<ProfileStats, SamplingError> {
    if days.len() < 2 {
        return Err(SamplingError::Profile(format!(
            "need at least 2 days, found {}",
            days.len()
        )));
    }
    for (i, day) in days.iter().enumerate() {
        if day.len() != HORIZON {
            return Err(SamplingError::Profile(format!(
                "day {} has {} values",
                i + 1,
                day.len()
            )));
        }
        if let Some(t) = day.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SamplingError::Profile(format!(
                "day {}, hour {}: load must be positive",
                i + 1,
                t + 1
            )));
        }
    }
    let n = days.len() as f64;
    let mut mean = Vec::with_capacity(HORIZON - 1);
    let mut std_dev = Vec::with_capacity(HORIZON - 1);
    for t in 0..HORIZON - 1 {
        let ratios: Vec<f64> = days.iter().map(|d| d[t + 1] / d[t]).collect();
        let m = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1.0);
        if !(m.is_finite() && var.is_finite()) {
            return Err(SamplingError::Profile(format!(
                "hour {} to {}: ratios overflow",
                t + 1,
                t + 2
            )));
        }
        mean.push(m);
        std_dev.push(var.sqrt());
    }
    Ok(ProfileStats { mean, std_dev })
}

/// Reads hourly loads from CSV: a header row of hour labels, then one row of
/// 24 values per day.
pub fn read_reference_loads<R: Read>(reader: R) -> Result<Vec<Vec<f64>>, SamplingError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let width = rdr.headers()?.len();
    if width != HORIZON {
        return Err(SamplingError::Profile(format!(
            "header has {width} columns, expected {HORIZON}"
        )));
    }
    let mut days = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let day = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    SamplingError::Profile(format!("day {}: {field:?} is not a number", i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        days.push(day);
    }
    Ok(days)
}

/// A scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dist {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    Point { value: f64 },
}

impl Dist {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let ok = match *self {
            Dist::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Dist::Normal { mean, std_dev } => mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0,
            Dist::Point { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SamplingError::Distribution(format!("{self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Uniform { low, high } => 0.5 * (low + high),
            Dist::Normal { mean, .. } => mean,
            Dist::Point { value } => value,
        }
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> f64 {
        match *self {
            Dist::Uniform { low, high } if low < high => rng.random_range(low..high),
            Dist::Uniform { low, .. } => low,
            Dist::Normal { mean, std_dev } => Normal::new(mean, std_dev)
                .expect("validated parameters")
                .sample(rng),
            Dist::Point { value } => value,
        }
    }
}

/// Where the hourly load ratios come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSource {
    /// Drawn from the profile statistics.
    Profile,
    /// Copied from the base instance's own load curve.
    Base,
}

/// Distributions of the randomized quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub cost: Dist,
    /// Per-bus weight on the base load share.
    pub geo: Dist,
    /// Peak load as a fraction of installed capacity.
    pub peak: Dist,
    pub ratios: RatioSource,
    /// Reserve requirement as a fraction of system load.
    #[serde(default)]
    pub reserve_fraction: f64,
}

impl ShiftSpec {
    /// The training distribution.
    pub fn in_distribution() -> Self {
        ShiftSpec {
            cost: Dist::Uniform { low: 0.95, high: 1.05 },
            geo: Dist::Uniform { low: 0.90, high: 1.10 },
            peak: Dist::Uniform {
                low: 0.6 * 0.925,
                high: 0.6 * 1.075,
            },
            ratios: RatioSource::Profile,
            reserve_fraction: 0.0,
        }
    }

    /// Costs 5% higher, loads more dispersed, peak 3% higher.
    pub fn out_of_distribution() -> Self {
        ShiftSpec {
            cost: Dist::Normal {
                mean: 1.05,
                std_dev: 0.017,
            },
            geo: Dist::Normal {
                mean: 1.0,
                std_dev: 0.033,
            },
            peak: Dist::Normal {
                mean: 0.6 * 1.03,
                std_dev: 0.009,
            },
            ratios: RatioSource::Profile,
            reserve_fraction: 0.0,
        }
    }

    /// No randomness: unit multipliers, base load shape, peak at 60% of capacity.
    pub fn fixed() -> Self {
        ShiftSpec {
            cost: Dist::Point { value: 1.0 },
            geo: Dist::Point { value: 1.0 },
            peak: Dist::Point { value: 0.6 },
            ratios: RatioSource::Base,
            reserve_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        self.cost.validate()?;
        self.geo.validate()?;
        self.peak.validate()?;
        if !(self.reserve_fraction.is_finite() && self.reserve_fraction >= 0.0) {
            return Err(SamplingError::Distribution(format!(
                "reserve fraction {}",
                self.reserve_fraction
            )));
        }
        Ok(())
    }
}

impl Default for ShiftSpec {
    fn default() -> Self {
        Self::in_distribution()
    }
}

/// The random stream for one quantity of one generation attempt.
pub fn stream(seed: u64, attempt: u32, label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(attempt.to_le_bytes());
    h.update(label.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(digest)
}

/// Share of the base daily load at each bus.
fn base_shares(base: &UCInstance) -> Result<Vec<f64>, SamplingError> {
    let totals: Vec<f64> = base.demand.iter().map(|d| d.iter().sum()).collect();
    let all: f64 = totals.iter().sum();
    if all <= 0.0 {
        return Err(SamplingError::NoLoad);
    }
    Ok(totals.iter().map(|t| t / all).collect())
}

fn base_ratios(base: &UCInstance) -> Result<Vec<f64>, SamplingError> {
    let loads = base.system_loads();
    if loads.iter().any(|&d| d <= 0.0) {
        return Err(SamplingError::NoLoad);
    }
    Ok(loads.windows(2).map(|w| w[1] / w[0]).collect())
}

/// Builds the variation of `base` described by `params`.
pub fn apply_parameters(
    base: &UCInstance,
    params: &ParameterVector,
    reserve_fraction: f64,
) -> Result<UCInstance, SamplingError> {
    let gens = base.generators.len();
    let buses = base.network.bus_count();
    if params.cost_multipliers.len() != gens
        || params.load_weights.len() != buses
        || params.hourly_ratios.len() != HORIZON - 1
    {
        return Err(SamplingError::Shape(format!(
            "{} cost multipliers, {} load weights, {} ratios for {gens} generators and {buses} buses",
            params.cost_multipliers.len(),
            params.load_weights.len(),
            params.hourly_ratios.len()
        )));
    }
    let shares = base_shares(base)?;
    let weighted: Vec<f64> = shares
        .iter()
        .zip(&params.load_weights)
        .map(|(d, b)| d * b)
        .collect();
    let norm: f64 = weighted.iter().sum();
    let system = params.system_loads(base.total_capacity());

    let mut generators = base.generators.clone();
    for (g, a) in generators.iter_mut().zip(&params.cost_multipliers) {
        g.base_cost *= a;
        g.startup_cost *= a;
        for s in &mut g.segments {
            s.cost *= a;
        }
    }
    let demand = weighted
        .iter()
        .map(|w| system.iter().map(|d| w / norm * d).collect())
        .collect();
    let reserve = system.iter().map(|d| reserve_fraction * d).collect();
    Ok(UCInstance::new(base.network.clone(), generators, demand, reserve)?)
}

fn draw(
    base: &UCInstance,
    stats: &ProfileStats,
    spec: &ShiftSpec,
    seed: u64,
    attempt: u32,
) -> Result<ParameterVector, SamplingError> {
    let mut cost = stream(seed, attempt, "cost");
    let cost_multipliers = (0..base.generators.len())
        .map(|_| spec.cost.sample(&mut cost))
        .collect();
    let mut geo = stream(seed, attempt, "geo");
    let load_weights = (0..base.network.bus_count())
        .map(|_| spec.geo.sample(&mut geo))
        .collect();
    let hourly_ratios = match spec.ratios {
        RatioSource::Base => base_ratios(base)?,
        RatioSource::Profile => {
            let mut profile = stream(seed, attempt, "profile");
            stats
                .mean
                .iter()
                .zip(&stats.std_dev)
                .map(|(&m, &s)| {
                    let d = Dist::Normal { mean: m, std_dev: s };
                    d.sample(&mut profile).max(MIN_RATIO)
                })
                .collect()
        }
    };
    let mut peak = stream(seed, attempt, "peak");
    Ok(ParameterVector {
        cost_multipliers,
        load_weights,
        hourly_ratios,
        peak_fraction: spec.peak.sample(&mut peak),
    })
}

/// Draws a variation of `base`. Draws that produce an invalid instance
/// (for instance a negative load weight) are repeated with the next attempt
/// number, up to 10 times.
pub fn generate_variation(
    base: &UCInstance,
    stats: &ProfileStats,
    spec: &ShiftSpec,
    seed: u64,
) -> Result<(ParameterVector, UCInstance), SamplingError> {
    spec.validate()?;
    stats.validate()?;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let params = draw(base, stats, spec, seed, attempt)?;
        let valid_params = params.to_vec().iter().all(|v| v.is_finite())
            && params.peak_fraction > 0.0
            && params.load_weights.iter().all(|&w| w >= 0.0)
            && params.cost_multipliers.iter().all(|&a| a >= 0.0);
        if !valid_params {
            last = Some(ValidationError::Negative {
                what: format!("sampled parameter (attempt {attempt})"),
                value: params.to_vec().into_iter().fold(f64::INFINITY, f64::min),
            });
            continue;
        }
        match apply_parameters(base, &params, spec.reserve_fraction) {
            Ok(instance) => return Ok((params, instance)),
            Err(SamplingError::Invalid(e)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(SamplingError::Exhausted {
        seed,
        attempts: MAX_ATTEMPTS,
        last: last.expect("at least one attempt"),
    })
}

/// [`generate_variation`] with the shifted distributions of
/// [`ShiftSpec::out_of_distribution`].
pub fn generate_ood_variation(
    base: &UCInstance,
    stats: &ProfileStats,
    seed: u64,
) -> Result<(ParameterVector, UCInstance), SamplingError> {
    generate_variation(base, stats, &ShiftSpec::out_of_distribution(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powergrid::parse_instance;

    const BASE: &str = r#"{
        "format": "scuc-lab/1",
        "buses": ["b1", "b2", "b3"],
        "slack_bus": "b1",
        "lines": [
            {"id": "l1", "from_bus": "b1", "to_bus": "b2", "reactance": 0.1,
             "normal_limit": 100.0, "contingency_limit": 120.0},
            {"id": "l2", "from_bus": "b2", "to_bus": "b3", "reactance": 0.1,
             "normal_limit": 100.0, "contingency_limit": 120.0},
            {"id": "l3", "from_bus": "b1", "to_bus": "b3", "reactance": 0.1,
             "normal_limit": 100.0, "contingency_limit": 120.0}
        ],
        "generators": [
            {"id": "g1", "bus": "b1", "min_power": 10.0, "max_power": 100.0,
             "segments": [{"size": 90.0, "cost": 2.0}],
             "base_cost": 5.0, "startup_cost": 7.0, "ramp_up": 100.0, "ramp_down": 100.0,
             "min_up": 1, "min_down": 1},
            {"id": "g2", "bus": "b2", "min_power": 0.0, "max_power": 100.0,
             "segments": [{"size": 50.0, "cost": 3.0}, {"size": 50.0, "cost": 4.0}],
             "base_cost": 1.0, "startup_cost": 2.0, "ramp_up": 100.0, "ramp_down": 100.0,
             "min_up": 1, "min_down": 1}
        ],
        "demand": {
            "b2": [30,30,30,30,30,30,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,40,30,30],
            "b3": [90,90,90,90,90,90,120,120,120,120,120,120,120,120,120,120,120,120,120,120,120,120,90,90]
        },
        "reserve": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]
    }"#;

    fn base() -> UCInstance {
        parse_instance(BASE).unwrap()
    }

    fn flat_stats() -> ProfileStats {
        ProfileStats {
            mean: vec![1.0; HORIZON - 1],
            std_dev: vec![0.02; HORIZON - 1],
        }
    }

    #[test]
    fn constant_profile_has_unit_ratios() {
        let days = vec![vec![5.0; HORIZON]; 4];
        let stats = fit_profile_stats(&days).unwrap();
        assert!(stats.mean.iter().all(|&m| m == 1.0));
        assert!(stats.std_dev.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn overflowing_ratios_are_rejected() {
        let mut days = vec![vec![1.0; HORIZON]; 2];
        days[0][3] = 1e-300;
        days[0][4] = 1e300;
        assert!(fit_profile_stats(&days).is_err());
    }

    #[test]
    fn two_day_statistics() {
        let mut a = vec![10.0; HORIZON];
        let mut b = vec![10.0; HORIZON];
        for t in 5..HORIZON {
            a[t] = 11.0;
            b[t] = 9.0;
        }
        let stats = fit_profile_stats(&[a, b]).unwrap();
        // ratio index 4 is D_6 / D_5 in 1-based hours
        assert!((stats.mean[4] - 1.0).abs() < 1e-12);
        let expected = ((0.1f64.powi(2) + 0.1f64.powi(2)) / 1.0).sqrt();
        assert!((stats.std_dev[4] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_load_is_rejected() {
        let mut day = vec![1.0; HORIZON];
        day[3] = 0.0;
        assert!(fit_profile_stats(&[day, vec![1.0; HORIZON]]).is_err());
        assert!(fit_profile_stats(&[vec![1.0; HORIZON]]).is_err());
    }

    #[test]
    fn csv_ingest() {
        let header = (1..=HORIZON).map(|h| h.to_string()).collect::<Vec<_>>().join(",");
        let row = vec!["2.5"; HORIZON].join(",");
        let text = format!("{header}\n{row}\n{row}\n");
        let days = read_reference_loads(text.as_bytes()).unwrap();
        assert_eq!(days.len(), 2);
        assert_eq!(days[1][23], 2.5);
        let bad = format!("{header}\n{}\n", vec!["x"; HORIZON].join(","));
        assert!(read_reference_loads(bad.as_bytes()).is_err());
        assert!(read_reference_loads("1,2,3\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn fixed_spec_only_rescales_the_peak() {
        let b = base();
        let (params, inst) = generate_variation(&b, &flat_stats(), &ShiftSpec::fixed(), 3).unwrap();
        assert_eq!(params.peak_fraction, 0.6);
        let scale = 0.6 * b.total_capacity() / 160.0;
        for (row, base_row) in inst.demand.iter().zip(&b.demand) {
            for (d, e) in row.iter().zip(base_row) {
                assert!((d - e * scale).abs() < 1e-9);
            }
        }
        assert_eq!(inst.generators, b.generators);
    }

    #[test]
    fn peak_is_anchored_and_shares_sum_to_one() {
        let b = base();
        for seed in 0..50 {
            let (params, inst) =
                generate_variation(&b, &flat_stats(), &ShiftSpec::in_distribution(), seed).unwrap();
            let loads = inst.system_loads();
            let peak = loads.iter().copied().fold(f64::MIN, f64::max);
            let expected = params.peak_fraction * b.total_capacity();
            assert!((peak - expected).abs() <= 1e-9 * expected);
            let t = 7;
            let share_sum: f64 = inst.demand.iter().map(|d| d[t] / loads[t]).sum();
            assert!((share_sum - 1.0).abs() < 1e-12);
            assert_eq!(inst.network, b.network);
        }
    }

    #[test]
    fn same_seed_same_variation() {
        let b = base();
        let spec = ShiftSpec::in_distribution();
        let (p1, i1) = generate_variation(&b, &flat_stats(), &spec, 42).unwrap();
        let (p2, i2) = generate_variation(&b, &flat_stats(), &spec, 42).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(i1, i2);
        let (p3, _) = generate_variation(&b, &flat_stats(), &spec, 43).unwrap();
        assert_ne!(p1, p3);
    }

    #[test]
    fn costs_scale_per_generator() {
        let b = base();
        let (p, inst) = generate_variation(&b, &flat_stats(), &ShiftSpec::default(), 9).unwrap();
        for ((g, bg), a) in inst.generators.iter().zip(&b.generators).zip(&p.cost_multipliers) {
            assert!((0.95..1.05).contains(a));
            assert_eq!(g.startup_cost, bg.startup_cost * a);
            assert_eq!(g.segments[0].cost, bg.segments[0].cost * a);
            assert_eq!(g.max_power, bg.max_power);
        }
    }

    #[test]
    fn impossible_spec_exhausts_attempts() {
        let spec = ShiftSpec {
            geo: Dist::Point { value: -1.0 },
            ..ShiftSpec::fixed()
        };
        assert!(matches!(
            generate_variation(&base(), &flat_stats(), &spec, 1),
            Err(SamplingError::Exhausted { attempts: 10, .. })
        ));
    }

    #[test]
    fn shift_spec_json_roundtrip() {
        let spec = ShiftSpec::out_of_distribution();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ShiftSpec>(&text).unwrap(), spec);
    }
}
