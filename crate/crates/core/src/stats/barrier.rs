//! Effect of the barrier constraints on the normalized partition function.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbm::{BarrierSpec, BbmForest};
use crate::error::{Error, Result};
use crate::gw::{GwTree, OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::{constrained_partition, normalized_partition, Beta};
use crate::rng::{derive_seed, Substream};
use crate::stats::summary::Estimate;

const BARRIER: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierConfig {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub gamma: f64,
    pub a: f64,
    /// Threshold for `P(|N - N^{c,A}| > delta)`.
    pub delta: f64,
    pub replicas: u64,
    pub seed: u64,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl BarrierConfig {
    pub fn spec(&self) -> BarrierSpec {
        BarrierSpec {
            sigma: self.beta.sigma,
            gamma: self.gamma,
            r: self.r,
            t: self.t,
            a: self.a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub gamma: f64,
    pub a: f64,
    pub delta: f64,
    pub replicas: u64,
    /// `E |N(t)|^2`
    pub second_moment: Estimate,
    /// `E |N^{c,A}(t)|^2`
    pub constrained_second_moment: Estimate,
    /// `P(|N - N^{c,A}| > delta)`
    pub exceed_probability: Estimate,
}

fn one(cfg: &BarrierConfig, seed: u64, i: u64) -> Result<(Complex64, Complex64)> {
    let mut rng = Substream::new(seed, i);
    let tree = GwTree::sample_with_cap(cfg.t, &cfg.law, &mut rng, cfg.cap)?;
    let forest = BbmForest::sample(&tree, cfg.rho, &mut rng)?;
    let at_r = forest.snapshots(&[cfg.r], &mut rng)?.remove(0);
    let full = normalized_partition(&forest.leaves(), cfg.beta, false)?;
    let kept = constrained_partition(&forest, cfg.beta, &cfg.spec(), &at_r, &mut rng)?;
    Ok((full, kept))
}

pub fn barrier_experiment(cfg: &BarrierConfig) -> Result<BarrierReport> {
    cfg.spec().validate()?;
    if cfg.a <= 0.0 {
        return Err(Error::InvalidBarrier(format!("A must be positive, got {}", cfg.a)));
    }
    if cfg.replicas < 2 {
        return Err(Error::EmptySample);
    }
    let seed = derive_seed(cfg.seed, BARRIER);
    let per: Vec<Result<(Complex64, Complex64)>> =
        (0..cfg.replicas).into_par_iter().map(|i| one(cfg, seed, i)).collect();
    let (mut m2, mut c2, mut ex) = (Vec::new(), Vec::new(), Vec::new());
    for p in per {
        let (full, kept) = p?;
        m2.push(full.norm_sqr());
        c2.push(kept.norm_sqr());
        ex.push(if (full - kept).norm() > cfg.delta { 1.0 } else { 0.0 });
    }
    Ok(BarrierReport {
        beta: cfg.beta,
        rho: cfg.rho,
        r: cfg.r,
        t: cfg.t,
        gamma: cfg.gamma,
        a: cfg.a,
        delta: cfg.delta,
        replicas: cfg.replicas,
        second_moment: Estimate::of(&m2)?,
        constrained_second_moment: Estimate::of(&c2)?,
        exceed_probability: Estimate::of(&ex)?,
    })
}

impl BarrierConfig {
    pub fn new(beta: Beta, rho: f64, r: f64, t: f64, gamma: f64, a: f64, replicas: u64, seed: u64) -> Self {
        Self {
            beta,
            rho,
            r,
            t,
            gamma,
            a,
            delta: 0.1,
            replicas,
            seed,
            law: OffspringLaw::binary(),
            cap: DEFAULT_NODE_CAP,
        }
    }
}
