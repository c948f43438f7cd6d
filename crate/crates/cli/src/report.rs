//! The JSON report written to standard output.

use num_rational::BigRational;
use polybias::harmonic::BiasValue;
use polybias::rank::RankEstimate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "polybias-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool: Tool,
    pub command: String,
    pub instance: Option<InstanceInfo>,
    pub budget: BudgetInfo,
    pub result: Option<Value>,
    pub error: Option<ErrorInfo>,
    pub timing_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

impl Default for Tool {
    fn default() -> Self {
        Tool {
            name: "polybias".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub sha256: String,
    pub ring: String,
    pub vars: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInfo {
    pub max_points: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    /// `budget`, `input` or `internal`.
    pub kind: String,
    pub message: String,
}

impl Report {
    /// The report with its timing zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Report {
        Report {
            timing_ms: 0,
            ..self.clone()
        }
    }
}

/// Exact rationals are written as `"num/den"`.
pub fn rational(x: &BigRational) -> Value {
    Value::String(format!("{}/{}", x.numer(), x.denom()))
}

/// Finite floats as numbers; infinities as the strings `"inf"`/`"-inf"`.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn bias_value(b: &BiasValue) -> Value {
    json!({
        "value": { "re": b.value.re, "im": b.value.im },
        "magnitude": b.magnitude,
        "is_zero": b.is_zero,
        "analytic_rank": real(b.analytic_rank()),
        "phase_counts": b.phase_counts,
        "domain_size": b.domain_size,
    })
}

pub fn rank_estimate(r: &RankEstimate) -> Value {
    json!({
        "lower": real(r.lower),
        "lower_int": r.lower.is_finite().then(|| r.lower_int()),
        "lower_source": format!("{:?}", r.source),
        "upper": r.upper,
        "exact": r.exact,
        "degenerate": r.degenerate,
        "certificate": r.certificate.as_ref().map(|c| {
            c.pairs.iter().map(|(q, s)| json!([q.to_string(), s.to_string()])).collect::<Vec<_>>()
        }),
        "minimizer": r.minimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn rationals_and_reals() {
        assert_eq!(rational(&BigRational::new(BigInt::from(6), BigInt::from(4))), json!("3/2"));
        assert_eq!(rational(&BigRational::from_integer(BigInt::from(2))), json!("2/1"));
        assert_eq!(real(f64::INFINITY), json!("inf"));
        assert_eq!(real(0.5), json!(0.5));
    }
}
