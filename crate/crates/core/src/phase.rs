//! Phase diagram of the complex energy model.
//!
//! ```text
//! B2 = { 2 sigma^2 > 1, |sigma| + |tau| > sqrt 2 }
//! B3 = { 2 sigma^2 < 1, sigma^2 + tau^2 > 1 }
//! B1 = complement of the closures of B2 and B3
//! ```
//!
//! Boundary membership is decided with an absolute tolerance of `1e-12` on
//! the defining equalities.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Beta;

pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    B1,
    B2,
    B3,
    B12,
    B13,
    B23,
    #[serde(rename = "TRIPLE")]
    Triple,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::B1 => "B1",
            PhaseLabel::B2 => "B2",
            PhaseLabel::B3 => "B3",
            PhaseLabel::B12 => "B12",
            PhaseLabel::B13 => "B13",
            PhaseLabel::B23 => "B23",
            PhaseLabel::Triple => "TRIPLE",
        }
    }

    pub fn is_boundary(&self) -> bool {
        !matches!(self, PhaseLabel::B1 | PhaseLabel::B2 | PhaseLabel::B3)
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "B1" => PhaseLabel::B1,
            "B2" => PhaseLabel::B2,
            "B3" => PhaseLabel::B3,
            "B12" => PhaseLabel::B12,
            "B13" => PhaseLabel::B13,
            "B23" => PhaseLabel::B23,
            "TRIPLE" => PhaseLabel::Triple,
            _ => return Err(Error::Config(format!("unknown phase label '{s}'"))),
        })
    }
}

pub fn classify(beta: Beta) -> PhaseLabel {
    let (s, t) = (beta.sigma.abs(), beta.tau.abs());
    let strip = s - FRAC_1_SQRT_2;
    let diamond = s + t - SQRT_2;
    let circle = s * s + t * t - 1.0;
    let near = |v: f64| v.abs() <= BOUNDARY_TOL;

    if near(strip) {
        return if near(circle) {
            PhaseLabel::Triple
        } else if circle > 0.0 {
            PhaseLabel::B23
        } else {
            PhaseLabel::B1
        };
    }
    if strip > 0.0 {
        if near(diamond) {
            PhaseLabel::B12
        } else if diamond > 0.0 {
            PhaseLabel::B2
        } else {
            PhaseLabel::B1
        }
    } else if near(circle) {
        PhaseLabel::B13
    } else if circle > 0.0 {
        PhaseLabel::B3
    } else {
        PhaseLabel::B1
    }
}

/// The three branches of the limiting free energy.
pub fn free_energy_b1(beta: Beta) -> f64 {
    beta.mckean_rate()
}

pub fn free_energy_b2(beta: Beta) -> f64 {
    SQRT_2 * beta.sigma.abs()
}

pub fn free_energy_b3(beta: Beta) -> f64 {
    beta.fluctuation_rate()
}

/// `lim (1/t) log |X_{beta,rho}(t)|`.
pub fn limiting_log_partition(beta: Beta) -> f64 {
    match classify(beta) {
        PhaseLabel::B1 | PhaseLabel::B12 | PhaseLabel::B13 => free_energy_b1(beta),
        PhaseLabel::B2 => free_energy_b2(beta),
        PhaseLabel::B3 | PhaseLabel::B23 | PhaseLabel::Triple => free_energy_b3(beta),
    }
}

/// Martingale whose value at time `r` sets the random variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceMartingale {
    /// `M_{2 sigma, 0}`
    #[serde(rename = "M_2SIGMA")]
    M2Sigma,
    /// `sqrt(2/pi) Z`
    #[serde(rename = "SH_DERIVATIVE")]
    ShDerivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceConstant {
    C1,
    C2,
    C3,
}

/// What is scaled: the martingale increment `M(t) - M(r)` or the
/// normalized partition function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "increment")]
    MartingaleIncrement,
    #[serde(rename = "normalized")]
    NormalizedPartition,
}

/// Scaling under which the partition function has a Gaussian limit with
/// random variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRule {
    pub label: PhaseLabel,
    pub statistic: Statistic,
    /// Per-unit-time exponent removed from the partition function.
    pub normalization_rate: f64,
    /// Power of `t` multiplying the statistic (0 or -1/2).
    pub t_exponent: f64,
    /// Power of `r` multiplying the statistic (0 or 1/4).
    pub r_exponent: f64,
    pub variance_martingale: VarianceMartingale,
    pub variance_constant: VarianceConstant,
}

/// CLT scaling rule on the strip `|sigma| <= 1/sqrt 2`.
pub fn clt_scaling(beta: Beta) -> Result<ScalingRule> {
    if beta.sigma.abs() > FRAC_1_SQRT_2 + BOUNDARY_TOL {
        return Err(Error::NoCltRule(beta.to_string()));
    }
    let label = classify(beta);
    let normalized = |label, t_exponent, r_exponent, variance_martingale, variance_constant| ScalingRule {
        label,
        statistic: Statistic::NormalizedPartition,
        normalization_rate: beta.fluctuation_rate(),
        t_exponent,
        r_exponent,
        variance_martingale,
        variance_constant,
    };
    use VarianceConstant::*;
    use VarianceMartingale::*;
    Ok(match label {
        PhaseLabel::B1 => ScalingRule {
            label,
            statistic: Statistic::MartingaleIncrement,
            normalization_rate: beta.mckean_rate(),
            t_exponent: 0.0,
            r_exponent: 0.0,
            variance_martingale: M2Sigma,
            variance_constant: C1,
        },
        PhaseLabel::B3 => normalized(label, 0.0, 0.0, M2Sigma, C2),
        PhaseLabel::B13 => normalized(label, -0.5, 0.0, M2Sigma, C3),
        PhaseLabel::B23 => normalized(label, 0.0, 0.25, ShDerivative, C2),
        PhaseLabel::Triple => normalized(label, -0.5, 0.25, ShDerivative, C3),
        PhaseLabel::B2 | PhaseLabel::B12 => return Err(Error::NoCltRule(beta.to_string())),
    })
}
