//! Fixtures and independent reference computations shared by the
//! integration tests. Nothing here calls into the code under test except to
//! load data.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scuc_lab::powergrid::{ContingencyLimit, PowerNetwork, TransmissionLine, UCInstance};
use scuc_lab::sampling::{fit_profile_stats, read_reference_loads, ProfileStats};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> UCInstance {
    scuc_lab::load_instance(fixture_path(&format!("{name}.json"))).expect("fixture loads")
}

pub fn profile() -> ProfileStats {
    let file = std::fs::File::open(fixture_path("reference_loads.csv")).expect("profile csv");
    fit_profile_stats(&read_reference_loads(file).expect("csv parses")).expect("stats")
}

pub fn line(id: &str, from: &str, to: &str, x: f64, limit: f64) -> TransmissionLine {
    TransmissionLine {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        reactance: x,
        normal_limit: limit,
        contingency_limit: ContingencyLimit::Uniform(limit),
    }
}

/// A connected network on `n` buses: a random spanning tree plus a few
/// extra lines (parallel lines allowed).
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> PowerNetwork {
    let buses: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut lines = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        lines.push((i, j));
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            lines.push((i, j));
        }
    }
    let lines = lines
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| {
            line(
                &format!("e{k}"),
                &buses[i],
                &buses[j],
                rng.random_range(0.05..1.0),
                100.0,
            )
        })
        .collect();
    let slack = buses[rng.random_range(0..n)].clone();
    PowerNetwork::new(buses, lines, slack).expect("connected by construction")
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot falls to `tol` or below.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > tol) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// DC line flows for `injections` (slack absorbs the imbalance) with line
/// `removed` taken out of service. `None` if the remaining network is split.
pub fn dc_flows(net: &PowerNetwork, injections: &[f64], removed: Option<usize>) -> Option<Vec<f64>> {
    let n = net.bus_count();
    let slack = net.slack_index();
    let mut b = vec![vec![0.0; n]; n];
    for l in 0..net.line_count() {
        if Some(l) == removed {
            continue;
        }
        let (i, j) = net.endpoints(l);
        let y = 1.0 / net.lines()[l].reactance;
        b[i][i] += y;
        b[j][j] += y;
        b[i][j] -= y;
        b[j][i] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != slack).collect();
    let reduced: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| b[i][j]).collect())
        .collect();
    let rhs: Vec<f64> = keep.iter().map(|&i| injections[i]).collect();
    let theta_reduced = gauss_solve(reduced, rhs, 1e-9)?;
    let mut theta = vec![0.0; n];
    for (k, &i) in keep.iter().enumerate() {
        theta[i] = theta_reduced[k];
    }
    Some(
        (0..net.line_count())
            .map(|l| {
                if Some(l) == removed {
                    return 0.0;
                }
                let (i, j) = net.endpoints(l);
                (theta[i] - theta[j]) / net.lines()[l].reactance
            })
            .collect(),
    )
}

/// Exact optimum of the soft-margin linear SVM
/// `min ½‖w‖² + (c/s) Σ max(0, 1 − y_i (w·x_i − b))`
/// through a log-barrier Newton method on the dual, followed by an exact
/// search for `b`. Returns `(w, b, primal objective)`.
pub fn svm_qp_oracle(x: &[Vec<f64>], y: &[i8], c: f64) -> (Vec<f64>, f64, f64) {
    let n = x.len();
    let dim = x[0].len();
    let u = c / n as f64;
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| yf[i] * yf[j] * dot(&x[i], &x[j])).collect())
        .collect();
    let pos = yf.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = n as f64 - pos;
    let m = pos.min(neg);
    let mut alpha: Vec<f64> = yf
        .iter()
        .map(|&v| 0.5 * u * m / if v > 0.0 { pos } else { neg })
        .collect();
    let barrier_obj = |a: &[f64], mu: f64| -> f64 {
        let quad: f64 = (0..n).map(|i| a[i] * dot(&q[i], a)).sum::<f64>() * 0.5;
        let lin: f64 = a.iter().sum();
        let bar: f64 = a.iter().map(|&v| (v).ln() + (u - v).ln()).sum();
        quad - lin - mu * bar
    };
    let mut mu = u;
    while mu > 1e-14 * u.max(1.0) {
        for _ in 0..100 {
            let qa: Vec<f64> = (0..n).map(|i| dot(&q[i], &alpha)).collect();
            let grad: Vec<f64> = (0..n)
                .map(|i| qa[i] - 1.0 - mu / alpha[i] + mu / (u - alpha[i]))
                .collect();
            // KKT system [H y; yᵀ 0] [d; ν] = [−g; 0].
            let mut kkt = vec![vec![0.0; n + 1]; n + 1];
            for i in 0..n {
                for j in 0..n {
                    kkt[i][j] = q[i][j];
                }
                kkt[i][i] += mu / (alpha[i] * alpha[i]) + mu / ((u - alpha[i]) * (u - alpha[i]));
                kkt[i][n] = yf[i];
                kkt[n][i] = yf[i];
            }
            let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            rhs.push(0.0);
            let sol = gauss_solve(kkt, rhs, 0.0).expect("KKT system is nonsingular");
            let d = &sol[..n];
            let decrement: f64 = -dot(&grad, d);
            if decrement < 1e-18 {
                break;
            }
            let mut step: f64 = 1.0;
            for i in 0..n {
                if d[i] < 0.0 {
                    step = step.min(-0.99 * alpha[i] / d[i]);
                } else if d[i] > 0.0 {
                    step = step.min(0.99 * (u - alpha[i]) / d[i]);
                }
            }
            let f0 = barrier_obj(&alpha, mu);
            loop {
                let trial: Vec<f64> = (0..n).map(|i| alpha[i] + step * d[i]).collect();
                if barrier_obj(&trial, mu) <= f0 - 0.25 * step * decrement || step < 1e-16 {
                    alpha = trial;
                    break;
                }
                step *= 0.5;
            }
        }
        mu *= 0.2;
    }
    let w: Vec<f64> = (0..dim)
        .map(|k| (0..n).map(|i| alpha[i] * yf[i] * x[i][k]).sum())
        .collect();
    let primal = |b: f64| {
        let loss: f64 = (0..n)
            .map(|i| (1.0 - yf[i] * (dot(&w, &x[i]) - b)).max(0.0))
            .sum();
        0.5 * dot(&w, &w) + u * loss
    };
    // The loss is piecewise linear in b with kinks at w·x_i − y_i.
    let (mut best_b, mut best) = (0.0, primal(0.0));
    for i in 0..n {
        let b = dot(&w, &x[i]) - yf[i];
        let v = primal(b);
        if v < best {
            best = v;
            best_b = b;
        }
    }
    (w, best_b, best)
}

/// Z-scores columns with the population deviation; constant columns keep
/// scale 1.
pub fn standardize(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let dim = x[0].len();
    let mean: Vec<f64> = (0..dim).map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..dim)
        .map(|k| {
            let v = x.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    x.iter()
        .map(|r| (0..dim).map(|k| (r[k] - mean[k]) / scale[k]).collect())
        .collect()
}

/// Indices of the `k` nearest points after min-max scaling, ties to the
/// lower index.
pub fn brute_force_knn(points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let dim = query.len();
    let lo: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let scaled = |p: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|d| {
                let r = hi[d] - lo[d];
                (p[d] - lo[d]) / if r > 0.0 { r } else { 1.0 }
            })
            .collect()
    };
    let q = scaled(query);
    let mut dist: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = scaled(p);
            (s.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist.into_iter().take(k).map(|(_, i)| i).collect()
}
