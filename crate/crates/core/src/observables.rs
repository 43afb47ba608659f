//! Partition function, martingales and normalized sums of a BBM population.
//!
//! Sums are accumulated in the log domain with [`ComplexExpSum`] and only
//! converted to linear scale once the normalizing exponent has been removed.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bbm::{BarrierSpec, BbmForest, Population, Snapshot};
use crate::error::{Error, Result};
use crate::expsum::ComplexExpSum;

/// Complex inverse temperature `beta = sigma + i tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub sigma: f64,
    pub tau: f64,
}

impl Beta {
    pub const fn new(sigma: f64, tau: f64) -> Self {
        Self { sigma, tau }
    }

    pub fn modulus_sq(&self) -> f64 {
        self.sigma * self.sigma + self.tau * self.tau
    }

    pub fn conj(&self) -> Self {
        Self::new(self.sigma, -self.tau)
    }

    /// Exponent of the unit-mean martingale normalization,
    /// `1 + (sigma^2 - tau^2) / 2`.
    pub fn mckean_rate(&self) -> f64 {
        1.0 + 0.5 * (self.sigma * self.sigma - self.tau * self.tau)
    }

    /// Exponent of the fluctuation normalization, `1/2 + sigma^2`.
    pub fn fluctuation_rate(&self) -> f64 {
        0.5 + self.sigma * self.sigma
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.sigma, self.tau)
    }
}

impl FromStr for Beta {
    type Err = Error;

    /// Accepts `a+bi`, `a-bi`, `a`, `bi` (and `i`, `-i`), with optional
    /// exponents in either part.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot parse complex number '{s}'"));
        let num = |part: &str| -> Result<f64> {
            match part {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                p => p.parse::<f64>().map_err(|_| bad()),
            }
        };
        if s.is_empty() {
            return Err(bad());
        }
        let Some(body) = s.strip_suffix('i') else {
            let sigma = s.parse::<f64>().map_err(|_| bad())?;
            return Ok(Beta::new(sigma, 0.0));
        };
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let beta = match split {
            Some(k) => {
                let re = &body[..k];
                if re.is_empty() {
                    return Err(bad());
                }
                Beta::new(re.parse::<f64>().map_err(|_| bad())?, num(&body[k..])?)
            }
            None => Beta::new(0.0, num(body)?),
        };
        if !beta.sigma.is_finite() || !beta.tau.is_finite() {
            return Err(bad());
        }
        Ok(beta)
    }
}

/// `X_{beta,rho}(t) = sum_k exp(sigma x_k + i tau y_k)`.
pub fn partition_function(pop: &Population, beta: Beta) -> ComplexExpSum {
    let mut acc = ComplexExpSum::new();
    for (x, y) in pop.x.iter().zip(&pop.y) {
        acc.push(beta.sigma * x, beta.tau * y);
    }
    acc
}

/// Unit-mean additive martingale
/// `exp(-t (1 + (sigma^2 - tau^2)/2) - i sigma tau rho t) X_{beta,rho}(t)`.
///
/// The deterministic phase `exp(-i sigma tau rho t)` cancels the phase of
/// `E X`; without it the mean would be `exp(i sigma tau rho t)`.
pub fn mckean_martingale(pop: &Population, beta: Beta) -> Complex64 {
    let t = pop.time;
    let sum = partition_function(pop, beta);
    let v = sum.scaled_value(t * beta.mckean_rate());
    v * Complex64::from_polar(1.0, -beta.sigma * beta.tau * pop.rho * t)
}

/// `M_{theta,0}(t) = exp(-t (1 + theta^2/2)) sum_k exp(theta x_k)`.
pub fn additive_real_martingale(pop: &Population, theta: f64) -> f64 {
    let mut acc = ComplexExpSum::new();
    for x in &pop.x {
        acc.push_real(theta * x);
    }
    acc.scaled_value(pop.time * (1.0 + 0.5 * theta * theta)).re
}

/// Derivative martingale `Z(t) = sum_k (sqrt2 t - x_k) exp(-sqrt2 (sqrt2 t - x_k))`.
pub fn derivative_martingale(pop: &Population) -> f64 {
    let front = SQRT_2 * pop.time;
    pop.x
        .iter()
        .map(|x| {
            let gap = front - x;
            gap * (-SQRT_2 * gap).exp()
        })
        .sum()
}

/// Critical additive martingale in Seneta–Heyde scaling,
/// `sqrt(t) sum_k exp(-sqrt2 (sqrt2 t - x_k))`.
pub fn seneta_heyde(pop: &Population) -> f64 {
    let front = SQRT_2 * pop.time;
    let sum: f64 = pop.x.iter().map(|x| (-SQRT_2 * (front - x)).exp()).sum();
    pop.time.sqrt() * sum
}

/// `N(t) = X(t) exp(-t (1/2 + sigma^2))`, or `N(t)/sqrt(t)` with
/// `boundary_scaling`. The boundary scaling is rejected for `t < 1`.
pub fn normalized_partition(pop: &Population, beta: Beta, boundary_scaling: bool) -> Result<Complex64> {
    let t = pop.time;
    if boundary_scaling && t < 1.0 {
        return Err(Error::BoundaryScalingTooEarly(t));
    }
    let n = partition_function(pop, beta).scaled_value(t * beta.fluctuation_rate());
    Ok(if boundary_scaling { n / t.sqrt() } else { n })
}

/// `N^{c,A}(t)`: the normalized partition function restricted to leaves that
/// end below `2 sigma t + A sqrt(t)` and stay below `2 sigma s + s^gamma` on
/// `[r, t]`. `at_r` is the forest's snapshot at `r`.
pub fn constrained_partition<R: Rng + ?Sized>(
    forest: &BbmForest<'_>,
    beta: Beta,
    spec: &BarrierSpec,
    at_r: &Snapshot,
    rng: &mut R,
) -> Result<Complex64> {
    if spec.sigma != beta.sigma {
        return Err(Error::InvalidBarrier(format!(
            "barrier slope uses sigma = {}, beta has sigma = {}",
            spec.sigma, beta.sigma
        )));
    }
    if spec.a <= 0.0 {
        return Err(Error::InvalidBarrier(format!("A must be positive, got {}", spec.a)));
    }
    let flags = forest.barrier_flags(spec, at_r, rng)?;
    let pop = forest.leaves();
    let mut acc = ComplexExpSum::new();
    for ((x, y), f) in pop.x.iter().zip(&pop.y).zip(&flags) {
        if f.both() {
            acc.push(beta.sigma * x, beta.tau * y);
        }
    }
    Ok(acc.scaled_value(pop.time * beta.fluctuation_rate()))
}
