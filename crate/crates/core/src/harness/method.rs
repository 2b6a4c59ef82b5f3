//! Method names such as `tr:knn:300`, `ws:knn:50:90` or `aff:svm`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::learn::AffineGateConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AffineVariant {
    /// Default thresholds.
    Svm,
    /// Wider class-balance window.
    A,
    /// Wider window, thresholds at 0.5.
    B,
    /// Default thresholds, no cross-validation.
    C,
}

impl AffineVariant {
    pub fn config(self) -> AffineGateConfig {
        match self {
            AffineVariant::Svm => AffineGateConfig::default(),
            AffineVariant::A => AffineGateConfig::imbalanced(),
            AffineVariant::B => AffineGateConfig::permissive(),
            AffineVariant::C => AffineGateConfig::unchecked(),
        }
    }
}

/// How hints are produced for a test variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    /// No hints.
    Zero,
    /// Everything the most similar training variation needed.
    TrNearest,
    /// Everything any training variation needed.
    TrAll,
    /// Keys needed by at least `p`% of the `k` nearest variations.
    TrKnn { k: usize, p: f64 },
    /// The keys the `zero` run ended with.
    TrPerf,
    /// Consensus warm start; `p` in percent.
    WsKnn { k: usize, p: f64 },
    WsCollect { n: usize },
    /// The `zero` run's commitments as warm start.
    WsPerf,
    Aff(AffineVariant),
    /// The `zero` run's commitments fixed outright.
    AffPerf,
}

impl Method {
    /// Whether this method needs the `zero` run of the same variation.
    pub fn uses_reference(&self) -> bool {
        matches!(self, Method::TrPerf | Method::WsPerf | Method::AffPerf)
    }

    /// Warm-start and affine methods get transmission hints as well.
    pub fn layered(&self) -> bool {
        matches!(
            self,
            Method::WsKnn { .. }
                | Method::WsCollect { .. }
                | Method::WsPerf
                | Method::Aff(_)
                | Method::AffPerf
        )
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Method::Aff(_) | Method::AffPerf)
    }

    pub fn is_warm_start(&self) -> bool {
        matches!(self, Method::WsKnn { .. } | Method::WsCollect { .. } | Method::WsPerf)
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Zero => write!(f, "zero"),
            Method::TrNearest => write!(f, "tr:nearest"),
            Method::TrAll => write!(f, "tr:all"),
            Method::TrKnn { k, p } if *p == 10.0 => write!(f, "tr:knn:{k}"),
            Method::TrKnn { k, p } => write!(f, "tr:knn:{k}:{}", fmt_num(*p)),
            Method::TrPerf => write!(f, "tr:perf"),
            Method::WsKnn { k, p } => write!(f, "ws:knn:{k}:{}", fmt_num(*p)),
            Method::WsCollect { n } => write!(f, "ws:collect:{n}"),
            Method::WsPerf => write!(f, "ws:perf"),
            Method::Aff(AffineVariant::Svm) => write!(f, "aff:svm"),
            Method::Aff(AffineVariant::A) => write!(f, "aff:A"),
            Method::Aff(AffineVariant::B) => write!(f, "aff:B"),
            Method::Aff(AffineVariant::C) => write!(f, "aff:C"),
            Method::AffPerf => write!(f, "aff:perf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method {0:?}")]
pub struct MethodError(pub String);

impl FromStr for Method {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MethodError(s.to_string());
        let count = |v: &str| v.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(bad);
        let percent = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|p| (0.0..=100.0).contains(p))
                .ok_or_else(bad)
        };
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["zero"] => Method::Zero,
            ["tr", "nearest"] => Method::TrNearest,
            ["tr", "all"] => Method::TrAll,
            ["tr", "knn", k] => Method::TrKnn {
                k: count(k)?,
                p: 10.0,
            },
            ["tr", "knn", k, p] => Method::TrKnn {
                k: count(k)?,
                p: percent(p)?,
            },
            ["tr", "perf"] => Method::TrPerf,
            ["ws", "knn", k, p] => {
                let p = percent(p)?;
                if p < 50.0 {
                    return Err(bad());
                }
                Method::WsKnn { k: count(k)?, p }
            }
            ["ws", "collect", n] => Method::WsCollect { n: count(n)? },
            ["ws", "perf"] => Method::WsPerf,
            ["aff", "svm"] => Method::Aff(AffineVariant::Svm),
            ["aff", "A"] => Method::Aff(AffineVariant::A),
            ["aff", "B"] => Method::Aff(AffineVariant::B),
            ["aff", "C"] => Method::Aff(AffineVariant::C),
            ["aff", "perf"] => Method::AffPerf,
            _ => return Err(bad()),
        })
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = MethodError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for name in [
            "zero",
            "tr:nearest",
            "tr:all",
            "tr:knn:300",
            "tr:knn:50:25",
            "tr:perf",
            "ws:knn:50:90",
            "ws:knn:50:50",
            "ws:collect:5",
            "ws:perf",
            "aff:svm",
            "aff:A",
            "aff:B",
            "aff:C",
            "aff:perf",
        ] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert_eq!("tr:knn:10:10".parse::<Method>().unwrap().to_string(), "tr:knn:10");
    }

    #[test]
    fn malformed_names() {
        for name in ["", "tr", "tr:knn", "tr:knn:0", "tr:knn:5:101", "ws:knn:50", "ws:knn:50:40", "aff:D", "zero:1"] {
            assert!(name.parse::<Method>().is_err(), "{name}");
        }
    }

    #[test]
    fn serde_uses_names() {
        let m = Method::WsKnn { k: 50, p: 90.0 };
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"ws:knn:50:90\"");
        let back: Method = serde_json::from_str("\"aff:C\"").unwrap();
        assert_eq!(back, Method::Aff(AffineVariant::C));
    }
}
