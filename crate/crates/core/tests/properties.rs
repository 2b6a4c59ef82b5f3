mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scuc_lab::harness::Method;
use scuc_lab::learn::{
    knn_indices, precision_recall, predict_transmission, svm_objective, svm_train, TrainingRecord,
    TrainingStore, TransmissionPredictorConfig,
};
use scuc_lab::powergrid::{ConstraintKey, UCSolution};
use scuc_lab::sampling::{generate_variation, ParameterVector, ShiftSpec};
use scuc_lab::sensitivity::{scan_violations, ScreeningConfig};
use scuc_lab::{Sensitivities, HORIZON};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn base_and_outage_flows_match_direct_solves(seed in any::<u64>(), n in 2usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_network(&mut rng, n);
        let sens = Sensitivities::new(&net).unwrap();
        let inj: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) % 17) as f64 - 8.0).collect();
        let direct = common::dc_flows(&net, &inj, None).unwrap();
        let base = sens.base_flows(&inj);
        for l in 0..net.line_count() {
            prop_assert!((base[l] - direct[l]).abs() < 1e-8);
        }
        for c in sens.contingencies() {
            let after = common::dc_flows(&net, &inj, Some(c)).unwrap();
            let o = sens.outage(c).unwrap();
            prop_assert_eq!(o.lodf(c), -1.0);
            for l in o.monitored() {
                prop_assert!((o.post_outage_flow(&base, l) - after[l]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn precision_and_recall_are_ratios(labels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
        let predicted: Vec<i8> = labels.iter().map(|&(p, _)| if p { 1 } else { -1 }).collect();
        let actual: Vec<i8> = labels.iter().map(|&(_, a)| if a { 1 } else { -1 }).collect();
        let (p, r) = precision_recall(&predicted, &actual).unwrap();
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r));
        let (p_self, r_self) = precision_recall(&actual, &actual).unwrap();
        prop_assert_eq!((p_self, r_self), (1.0, 1.0));
    }

    #[test]
    fn knn_agrees_with_brute_force(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..30),
        query in prop::collection::vec(-5.0f64..5.0, 3),
        k in 1usize..30,
    ) {
        let k = k.min(points.len());
        let got = knn_indices(&points, &query, k).unwrap();
        prop_assert_eq!(got, common::brute_force_knn(&points, &query, k));
    }

    #[test]
    fn svm_never_worse_than_the_zero_hyperplane(
        data in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 2), any::<bool>()), 2..20),
        c in 0.1f64..10.0,
    ) {
        let x: Vec<Vec<f64>> = data.iter().map(|(p, _)| p.clone()).collect();
        let y: Vec<i8> = data.iter().map(|&(_, l)| if l { 1 } else { -1 }).collect();
        prop_assume!(y.contains(&1) && y.contains(&-1));
        let model = svm_train(&x, &y, c).unwrap();
        let obj = svm_objective(&model, &x, &y, c);
        // w = 0 with the best constant intercept pays at most c.
        prop_assert!(obj <= c + 1e-9);
        let (_, _, exact) = common::svm_qp_oracle(&common::standardize(&x), &y, c);
        prop_assert!(obj >= exact * (1.0 - 1e-6) - 1e-9);
        prop_assert!(obj <= exact * 1.01 + 1e-9);
    }

    #[test]
    fn method_names_round_trip(k in 1usize..500, p in 0u32..=100, n in 1usize..20) {
        for m in [
            Method::TrKnn { k, p: f64::from(p) },
            Method::WsKnn { k, p: f64::from(p.max(50)) },
            Method::WsCollect { n },
        ] {
            let name = m.to_string();
            prop_assert_eq!(name.parse::<Method>().unwrap(), m);
        }
        if p < 50 {
            let name = format!("ws:knn:{k}:{p}");
            prop_assert!(name.parse::<Method>().is_err());
        }
    }

    #[test]
    fn system_loads_peak_at_the_requested_level(
        ratios in prop::collection::vec(0.5f64..1.5, HORIZON - 1),
        peak in 0.1f64..1.0,
        capacity in 10.0f64..5000.0,
    ) {
        let p = ParameterVector {
            cost_multipliers: vec![],
            load_weights: vec![],
            hourly_ratios: ratios.clone(),
            peak_fraction: peak,
        };
        let d = p.system_loads(capacity);
        prop_assert_eq!(d.iter().copied().fold(f64::MIN, f64::max), peak * capacity);
        for t in 0..HORIZON - 1 {
            prop_assert!((d[t + 1] / d[t] - ratios[t]).abs() < 1e-9);
        }
    }
}

fn store_with(enforced: Vec<BTreeSet<ConstraintKey>>) -> (TrainingStore, ParameterVector) {
    let base = common::fixture("case6");
    let stats = common::profile();
    let records = enforced
        .into_iter()
        .enumerate()
        .map(|(i, enforced)| {
            let (params, _) = generate_variation(&base, &stats, &ShiftSpec::in_distribution(), i as u64).unwrap();
            TrainingRecord {
                seed: i as u64,
                params,
                enforced,
                solution: UCSolution::all_off(&base),
            }
        })
        .collect();
    let (query, _) = generate_variation(&base, &stats, &ShiftSpec::in_distribution(), 777).unwrap();
    (
        TrainingStore {
            fingerprint: scuc_lab::learn::fingerprint(&base),
            records,
        },
        query,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn raising_the_threshold_never_adds_keys(
        sets in prop::collection::vec(prop::collection::btree_set(0usize..30, 0..10), 1..8),
        p_low in 0.0f64..100.0,
        p_high in 0.0f64..100.0,
    ) {
        let sets: Vec<BTreeSet<ConstraintKey>> = sets
            .into_iter()
            .map(|s| s.into_iter().map(|i| ConstraintKey::new(i % 11, scuc_lab::Scenario::Base, i % HORIZON)).collect())
            .collect();
        let (store, query) = store_with(sets);
        let (lo, hi) = if p_low <= p_high { (p_low, p_high) } else { (p_high, p_low) };
        let k = store.len();
        let wide = predict_transmission(&store, &query, &TransmissionPredictorConfig { k, p_threshold: lo }).unwrap();
        let narrow = predict_transmission(&store, &query, &TransmissionPredictorConfig { k, p_threshold: hi }).unwrap();
        prop_assert!(narrow.is_subset(&wide));
    }
}

#[test]
fn enforcing_everything_leaves_nothing_to_report() {
    let inst = common::fixture("case14");
    let sens = Sensitivities::new(&inst.network).unwrap();
    // Everything on at full output is far from feasible but still a dispatch.
    let production: Vec<Vec<f64>> = inst.generators.iter().map(|g| vec![g.max_power; HORIZON]).collect();
    let cfg = ScreeningConfig::default();
    let found = scan_violations(&inst, &sens, &production, &BTreeSet::new(), &cfg);
    assert!(!found.is_empty());
    for t in 0..HORIZON {
        assert!(found.keys().filter(|k| k.period == t).count() <= cfg.max_violations_per_period);
    }
    let none = scan_violations(&inst, &sens, &production, &sens.all_keys(), &cfg);
    assert!(none.is_empty());
}
