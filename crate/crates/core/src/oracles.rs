//! Closed-form moments of the complex BBM energy model.
//!
//! Nothing here touches the samplers; tests compare simulated moments
//! against these values.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observables::Beta;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOracleInput {
    pub beta: Beta,
    pub rho: f64,
    pub t: f64,
    /// `K = sum_k k(k-1) p_k`; 2 for binary branching.
    pub k: f64,
}

impl MomentOracleInput {
    pub fn binary(beta: Beta, rho: f64, t: f64) -> Self {
        Self { beta, rho, t, k: 2.0 }
    }
}

/// `E X_{beta,rho}(t) = exp(t (1 + (sigma^2 - tau^2)/2)) exp(i sigma tau rho t)`.
pub fn mean_partition(input: &MomentOracleInput) -> Complex64 {
    let b = input.beta;
    Complex64::from_polar(
        (input.t * b.mckean_rate()).exp(),
        b.sigma * b.tau * input.rho * input.t,
    )
}

/// `int_0^t exp(a q) dq`.
fn growth_integral(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else {
        (a * t).exp_m1() / a
    }
}

/// `E |N(t)|^2 = 1 + K int_0^t exp((1 - sigma^2 - tau^2) q) dq`, where
/// `N(t) = X(t) exp(-t (1/2 + sigma^2))`. The leading 1 is the diagonal
/// `k = l` part of the double sum; the integral is the many-to-two
/// contribution of distinct pairs. Independent of `rho`.
pub fn second_moment_normalized(input: &MomentOracleInput) -> f64 {
    let a = 1.0 - input.beta.modulus_sq();
    1.0 + input.k * growth_integral(a, input.t)
}

/// `E |N(t)|^2 / t`, the second moment under the boundary scaling.
pub fn second_moment_boundary_scaled(input: &MomentOracleInput) -> f64 {
    second_moment_normalized(input) / input.t
}

/// `E |M_{sigma,tau}(t)|^2 = exp(-(1 - sigma^2 - tau^2) t) E |N(t)|^2`.
pub fn mckean_second_moment(input: &MomentOracleInput) -> f64 {
    let a = 1.0 - input.beta.modulus_sq();
    (-a * input.t).exp() * second_moment_normalized(input)
}

/// Exponential growth rate in `q` of the integrand bounding the `p`-th
/// absolute moment of the martingale,
///
/// ```text
/// 1 + p^2 sigma^2 / 2 - p (2 + sigma^2 - tau^2) / 2.
/// ```
///
/// At `p = sqrt2 / sigma` this is `(tau^2 - (sigma - sqrt2)^2) / (sqrt2 sigma)`.
/// A negative rate means the bound stays finite as `t` grows.
pub fn pth_moment_growth_rate(beta: Beta, p: f64) -> Result<f64> {
    let sigma = beta.sigma.abs();
    let max = if sigma > 0.0 {
        std::f64::consts::SQRT_2 / sigma
    } else {
        f64::INFINITY
    };
    if !(p > 1.0 && p <= max * (1.0 + 1e-12)) {
        return Err(Error::MomentOrderOutOfRange { p, max });
    }
    let (s2, t2) = (sigma * sigma, beta.tau * beta.tau);
    Ok(1.0 + 0.5 * p * p * s2 - 0.5 * p * (2.0 + s2 - t2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn mean_partition_cases() {
        let m = mean_partition(&MomentOracleInput::binary(Beta::new(0.0, 0.0), 0.3, 1.7));
        assert!((m - Complex64::new(1.7f64.exp(), 0.0)).norm() < 1e-12);
        let m = mean_partition(&MomentOracleInput::binary(Beta::new(0.6, 0.0), 0.3, 2.0));
        assert_eq!(m.im, 0.0);
        assert!((m.re - (2.0f64 * 1.18).exp()).abs() < 1e-12);
        let m = mean_partition(&MomentOracleInput::binary(Beta::new(0.4, 0.3), 0.7, 2.0));
        assert!((m.norm().ln() - 2.07).abs() < 1e-12);
        assert!((m.arg() - 0.168).abs() < 1e-12);
    }

    /// E exp(sigma x + i tau y) for x ~ N(0, t), y = rho x + sqrt(1 - rho^2) z,
    /// by trapezoidal quadrature over (x, z), times E n(t) = e^t.
    fn mean_partition_by_quadrature(beta: Beta, rho: f64, t: f64) -> Complex64 {
        let sd = t.sqrt();
        let c = (1.0 - rho * rho).sqrt();
        let (lim, n) = (14.0, 1400);
        let h = 2.0 * lim / n as f64;
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let u = -lim + i as f64 * h;
            let x = sd * u;
            for j in 0..=n {
                let v = -lim + j as f64 * h;
                let y = rho * x + c * sd * v;
                acc += Complex64::from_polar((beta.sigma * x).exp(), beta.tau * y) * phi(u) * phi(v);
            }
        }
        acc * h * h * t.exp()
    }

    #[test]
    fn mean_partition_matches_quadrature() {
        for (beta, rho) in [(Beta::new(0.4, 0.3), 0.7), (Beta::new(0.9, 1.1), -0.4)] {
            let q = mean_partition_by_quadrature(beta, rho, 2.0);
            let m = mean_partition(&MomentOracleInput::binary(beta, rho, 2.0));
            assert!((q - m).norm() < 1e-9 * m.norm(), "{q} vs {m}");
        }
    }

    #[test]
    fn mean_partition_factorizes_in_time() {
        let b = Beta::new(0.4, 0.9);
        let at = |t| mean_partition(&MomentOracleInput::binary(b, -0.6, t));
        let (s, u) = (1.3, 2.9);
        assert!((at(s + u) - at(s) * at(u)).norm() < 1e-12 * at(s + u).norm());
    }

    #[test]
    fn second_moment_values() {
        let b3 = MomentOracleInput::binary(Beta::new(0.5, 1.0), 0.0, 10.0);
        let v = second_moment_normalized(&b3);
        assert!((v - (1.0 + 8.0 * (1.0 - (-2.5f64).exp()))).abs() < 1e-12);
        assert!((v - 8.3434).abs() < 1e-4);
        let zero = MomentOracleInput { t: 0.0, ..b3 };
        assert_eq!(second_moment_normalized(&zero), 1.0);
        let b13 = MomentOracleInput::binary(Beta::new(0.6, 0.8), 0.0, 10.0);
        assert!((second_moment_boundary_scaled(&b13) - 2.1).abs() < 1e-12);
        // rho does not enter
        let other = MomentOracleInput { rho: 0.9, ..b3 };
        assert_eq!(second_moment_normalized(&other), v);
    }

    #[test]
    fn second_moment_continuous_across_unit_circle() {
        let t = 7.0;
        let on = second_moment_normalized(&MomentOracleInput::binary(Beta::new(0.6, 0.8), 0.0, t));
        assert!((on - (1.0 + 2.0 * t)).abs() < 1e-12);
        for eps in [1e-4, 1e-6, -1e-6, -1e-4] {
            let b = Beta::new(0.6 * (1.0 + eps), 0.8 * (1.0 + eps));
            let v = second_moment_normalized(&MomentOracleInput::binary(b, 0.0, t));
            assert!((v - on).abs() < 200.0 * eps.abs(), "eps {eps}: {v} vs {on}");
        }
    }

    #[test]
    fn growth_rate_in_b1_is_negative() {
        let b = Beta::new(0.9, 0.3);
        let p = SQRT_2 / b.sigma;
        let r = pth_moment_growth_rate(b, p).unwrap();
        let printed = (b.tau * b.tau - (b.sigma - SQRT_2).powi(2)) / (SQRT_2 * b.sigma);
        assert!((r - printed).abs() < 1e-12);
        assert!(r < 0.0);
    }

    #[test]
    fn growth_rate_on_b12_is_marginal_at_the_endpoint() {
        let b = Beta::new(1.0, SQRT_2 - 1.0);
        let r = pth_moment_growth_rate(b, SQRT_2 / b.sigma).unwrap();
        assert!(r.abs() < 1e-12);
        // Below the endpoint the rate is (1 - p sigma / sqrt2)^2 >= 0.
        for p in [1.1, 1.3, 1.4] {
            let r = pth_moment_growth_rate(b, p).unwrap();
            assert!((r - (1.0 - p * b.sigma / SQRT_2).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn growth_rate_rejects_bad_order() {
        let b = Beta::new(1.0, 0.2);
        assert!(pth_moment_growth_rate(b, 1.0).is_err());
        assert!(pth_moment_growth_rate(b, 1.5).is_err());
    }
}
