//! Distributional check of the branching recursion
//!
//! ```text
//! M(t + r) = sum_k a_k(r) M^(k)(t),
//! a_k(r) = exp(sigma x_k(r) + i tau y_k(r) - r (1 + (sigma^2 - tau^2)/2) - i sigma tau rho r),
//! ```
//!
//! where the `M^(k)` are independent copies. The left side is sampled
//! directly on one tree of height `t + r`; the right side from a tree of
//! height `r` whose particles each start a fresh tree of height `t`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbm::BbmForest;
use crate::error::{Error, Result};
use crate::gw::{GwTree, OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::{mckean_martingale, Beta};
use crate::phase::{classify, PhaseLabel};
use crate::rng::{derive_seed, Substream};
use crate::stats::ks::{ks_critical_two_sample, ks_two_sample};

const DIRECT: u64 = 1;
const RECURSION: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub replicas: u64,
    pub seed: u64,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl SmoothingConfig {
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
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub beta: Beta,
    pub rho: f64,
    pub r: f64,
    pub t: f64,
    pub replicas: u64,
    pub ks_re: f64,
    pub ks_im: f64,
    /// `max(ks_re, ks_im)`
    pub ks: f64,
    pub critical_1pct: f64,
}

fn mckean_on_fresh_tree(cfg: &SmoothingConfig, horizon: f64, rng: &mut Substream) -> Result<Complex64> {
    let tree = GwTree::sample_with_cap(horizon, &cfg.law, rng, cfg.cap)?;
    let forest = BbmForest::sample(&tree, cfg.rho, rng)?;
    Ok(mckean_martingale(&forest.leaves(), cfg.beta))
}

fn recursion_side(cfg: &SmoothingConfig, rng: &mut Substream) -> Result<Complex64> {
    let tree = GwTree::sample_with_cap(cfg.r, &cfg.law, rng, cfg.cap)?;
    let forest = BbmForest::sample(&tree, cfg.rho, rng)?;
    let pop = forest.leaves();
    let b = cfg.beta;
    let shift = cfg.r * b.mckean_rate();
    let turn = b.sigma * b.tau * cfg.rho * cfg.r;
    let mut total = Complex64::new(0.0, 0.0);
    for (x, y) in pop.x.iter().zip(&pop.y) {
        let a = Complex64::from_polar((b.sigma * x - shift).exp(), b.tau * y - turn);
        total += a * mckean_on_fresh_tree(cfg, cfg.t, rng)?;
    }
    Ok(total)
}

/// Two-sample KS distances between the direct and the recursive samples.
pub fn smoothing_recursion_check(cfg: &SmoothingConfig) -> Result<SmoothingReport> {
    match classify(cfg.beta) {
        PhaseLabel::B1 | PhaseLabel::B12 => {}
        _ => {
            return Err(Error::PhaseNotAdmissible {
                beta: cfg.beta.to_string(),
                needed: "B1 or B12".into(),
            })
        }
    }
    if !(cfg.r >= 0.0 && cfg.t >= 0.0 && cfg.r.is_finite() && cfg.t.is_finite()) {
        return Err(Error::Config(format!("need r, t >= 0, got r = {}, t = {}", cfg.r, cfg.t)));
    }
    if !(-1.0..=1.0).contains(&cfg.rho) {
        return Err(Error::InvalidCorrelation(cfg.rho));
    }
    if cfg.replicas == 0 {
        return Err(Error::EmptySample);
    }
    let direct_seed = derive_seed(cfg.seed, DIRECT);
    let recursion_seed = derive_seed(cfg.seed, RECURSION);
    let pairs: Vec<Result<(Complex64, Complex64)>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let d = mckean_on_fresh_tree(cfg, cfg.t + cfg.r, &mut Substream::new(direct_seed, i))?;
            let s = recursion_side(cfg, &mut Substream::new(recursion_seed, i))?;
            Ok((d, s))
        })
        .collect();
    let mut direct = Vec::with_capacity(pairs.len());
    let mut assembled = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (d, s) = p?;
        direct.push(d);
        assembled.push(s);
    }
    let part = |v: &[Complex64], f: fn(&Complex64) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let ks_re = ks_two_sample(&part(&direct, |z| z.re), &part(&assembled, |z| z.re))?;
    let ks_im = ks_two_sample(&part(&direct, |z| z.im), &part(&assembled, |z| z.im))?;
    let n = cfg.replicas as usize;
    Ok(SmoothingReport {
        beta: cfg.beta,
        rho: cfg.rho,
        r: cfg.r,
        t: cfg.t,
        replicas: cfg.replicas,
        ks_re,
        ks_im,
        ks: ks_re.max(ks_im),
        critical_1pct: ks_critical_two_sample(n, n, 0.01),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_b3() {
        let c = SmoothingConfig::new(Beta::new(0.5, 1.0), 0.0, 1.0, 2.0, 10, 1);
        assert!(matches!(smoothing_recursion_check(&c), Err(Error::PhaseNotAdmissible { .. })));
    }

    #[test]
    fn r_zero_is_the_same_construction() {
        let c = SmoothingConfig::new(Beta::new(0.4, 0.3), 0.5, 0.0, 3.0, 800, 2);
        let rep = smoothing_recursion_check(&c).unwrap();
        assert!(rep.ks < rep.critical_1pct, "{rep:?}");
    }

    #[test]
    fn small_identity_check() {
        let c = SmoothingConfig::new(Beta::new(0.5, 0.0), 0.0, 1.0, 3.0, 800, 3);
        let rep = smoothing_recursion_check(&c).unwrap();
        assert!(rep.ks < rep.critical_1pct, "{rep:?}");
        assert_eq!(rep.ks_im, 0.0);
    }
}
