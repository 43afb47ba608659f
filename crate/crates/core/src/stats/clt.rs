//! Conditional central limit experiments.
//!
//! Each replica yields a scaled statistic `S` and a conditioning variable
//! `V` measured at time `r`. With `C = mean(|S|^2) / mean(V)` the
//! standardized values `W = S / sqrt(C V / 2)` should look like a standard
//! complex Gaussian: real and imaginary parts N(0, 1), `E W^2 = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::{OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::Beta;
use crate::oracles::{mckean_second_moment, second_moment_normalized, MomentOracleInput};
use crate::phase::{clt_scaling, PhaseLabel, ScalingRule, Statistic, VarianceMartingale};
use crate::stats::ks::{ks_critical_one_sample, ks_statistic, standard_normal_cdf};
use crate::stats::replicas::{run_replicas, ReplicaPlan, ReplicaTable};
use crate::stats::summary::{origin_slope, ratio_of_means, LinearFit};

#[derive(Debug, Clone, PartialEq)]
pub struct CltConfig {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub replicas: u64,
    pub seed: u64,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl CltConfig {
    pub fn new(beta: Beta, rho: f64, r: f64, t: f64, replicas: u64, seed: u64) -> Self {
        Self {
            beta,
            rho,
            r,
            t,
            replicas,
            seed,
            law: OffspringLaw::binary(),
            cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn plan(&self) -> ReplicaPlan {
        ReplicaPlan {
            seed: self.seed,
            pairs: vec![(self.beta, self.rho)],
            horizons: vec![self.r, self.t],
            law: self.law.clone(),
            cap: self.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub rule: ScalingRule,
    pub replicas: usize,
    /// Replicas dropped because the conditioning variable was not positive.
    pub excluded: usize,
    /// `mean(|S|^2) / mean(V)`
    pub c_hat: f64,
    pub c_hat_se: f64,
    /// `E|S|^2 / E V` where a closed form exists.
    pub c_hat_oracle: Option<f64>,
    pub ks_re: f64,
    pub ks_im: f64,
    /// One-sample KS critical value at the 1% level for the used sample size.
    pub ks_critical_1pct: f64,
    /// `|mean(W^2)|`
    pub mixed_moment: f64,
    /// `mean(|W|^2)`
    pub mean_abs_w_sq: f64,
    /// `mean(W)`; nonzero at finite `t` when `E S != 0`.
    pub mean_w_re: f64,
    pub mean_w_im: f64,
    /// Least squares fit of `|S|^2` on `V`.
    pub regression: LinearFit,
    /// Least squares slope of `|S|^2` on `V` through the origin.
    pub origin_slope: f64,
    #[serde(skip)]
    pub w: Vec<Complex64>,
}

fn check_times(r: f64, t: f64) -> Result<()> {
    if !(r.is_finite() && t.is_finite() && 0.0 <= r && r < t) {
        return Err(Error::Config(format!("need 0 <= r < t, got r = {r}, t = {t}")));
    }
    Ok(())
}

/// Closed-form `E|S|^2 / E V`, available when `V = M_{2 sigma, 0}(r)`.
fn oracle(rule: &ScalingRule, beta: Beta, r: f64, t: f64, k: f64) -> Option<f64> {
    let at = |time: f64| MomentOracleInput { beta, rho: 0.0, t: time, k };
    match (rule.statistic, rule.variance_martingale) {
        (_, VarianceMartingale::ShDerivative) => None,
        (Statistic::MartingaleIncrement, _) => {
            let a = 1.0 - beta.modulus_sq();
            // E|M(t) - M(r)|^2 = E|M(t)|^2 - E|M(r)|^2 by orthogonal increments
            Some((mckean_second_moment(&at(t)) - mckean_second_moment(&at(r))) * (a * r).exp())
        }
        (Statistic::NormalizedPartition, _) => {
            Some(second_moment_normalized(&at(t)) * t.powf(2.0 * rule.t_exponent) * r.powf(2.0 * rule.r_exponent))
        }
    }
}

/// CLT report from a table that records `(beta, rho)` at horizons `r` and `t`.
pub fn clt_from_table(table: &ReplicaTable, beta: Beta, rho: f64, r: f64, t: f64, k: f64) -> Result<CltReport> {
    check_times(r, t)?;
    let rule = clt_scaling(beta)?;
    let missing = || Error::Config(format!("table lacks beta = {beta}, rho = {rho} at r = {r}, t = {t}"));
    let p = table.pair_index(beta, rho).ok_or_else(missing)?;
    let hr = table.horizon_index(r).ok_or_else(missing)?;
    let ht = table.horizon_index(t).ok_or_else(missing)?;
    let n = table.replica_count();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let scale = t.powf(rule.t_exponent) * r.powf(rule.r_exponent);
    let mut s = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut excluded = 0;
    for rep in 0..n {
        let (at_r, at_t) = (table.row(rep, hr, p), table.row(rep, ht, p));
        let stat = match rule.statistic {
            Statistic::MartingaleIncrement => {
                (at_t.mckean - at_r.mckean) * (0.5 * (1.0 - beta.modulus_sq()) * r).exp()
            }
            Statistic::NormalizedPartition => at_t.normalized() * scale,
        };
        let cond = match rule.variance_martingale {
            VarianceMartingale::M2Sigma => at_r.m2sigma,
            VarianceMartingale::ShDerivative => (2.0 / PI).sqrt() * at_r.deriv,
        };
        if cond > 0.0 && cond.is_finite() {
            s.push(stat);
            v.push(cond);
        } else {
            excluded += 1;
        }
    }
    if s.len() < 3 {
        return Err(Error::DegenerateConditioning);
    }
    let s2: Vec<f64> = s.iter().map(|z| z.norm_sqr()).collect();
    let c = ratio_of_means(&s2, &v)?;
    let w: Vec<Complex64> = s
        .iter()
        .zip(&v)
        .map(|(z, vv)| z / (c.mean * vv / 2.0).sqrt())
        .collect();
    let re: Vec<f64> = w.iter().map(|z| z.re).collect();
    let im: Vec<f64> = w.iter().map(|z| z.im).collect();
    let m = w.len() as f64;
    let mixed = w.iter().map(|z| z * z).sum::<Complex64>() / m;
    let mean_abs = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
    let mean_w = w.iter().sum::<Complex64>() / m;
    Ok(CltReport {
        beta,
        rho,
        r,
        t,
        rule,
        replicas: n,
        excluded,
        c_hat: c.mean,
        c_hat_se: c.se,
        c_hat_oracle: oracle(&rule, beta, r, t, k),
        ks_re: ks_statistic(&re, standard_normal_cdf)?,
        ks_im: ks_statistic(&im, standard_normal_cdf)?,
        ks_critical_1pct: ks_critical_one_sample(w.len(), 0.01),
        mixed_moment: mixed.norm(),
        mean_abs_w_sq: mean_abs,
        mean_w_re: mean_w.re,
        mean_w_im: mean_w.im,
        regression: LinearFit::fit(&v, &s2)?,
        origin_slope: origin_slope(&v, &s2)?,
        w,
    })
}

/// Simulates `config.replicas` replicas and reports on the CLT for `beta`.
pub fn conditional_clt_experiment(config: &CltConfig) -> Result<CltReport> {
    check_times(config.r, config.t)?;
    clt_scaling(config.beta)?;
    let table = run_replicas(&config.plan(), 0..config.replicas)?;
    clt_from_table(
        &table,
        config.beta,
        config.rho,
        config.r,
        config.t,
        config.law.second_factorial_moment(),
    )
}

impl CltReport {
    pub fn label(&self) -> PhaseLabel {
        self.rule.label
    }

    /// `|W|` values, for comparing two reports.
    pub fn w_modulus(&self) -> Vec<f64> {
        self.w.iter().map(|z| z.norm()).collect()
    }
}
