//! Mean, `p`-th moments and increments of the McKean martingale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::{OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::Beta;
use crate::oracles::{mckean_second_moment, pth_moment_growth_rate, MomentOracleInput};
use crate::phase::{classify, PhaseLabel};
use crate::stats::replicas::{run_replicas, ReplicaPlan, ReplicaTable};
use crate::stats::summary::Estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleConfig {
    pub beta: Beta,
    pub rho: f64,
    pub horizons: Vec<f64>,
    pub p: f64,
    pub replicas: u64,
    pub seed: u64,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl MartingaleConfig {
    pub fn new(beta: Beta, rho: f64, horizons: Vec<f64>, p: f64, replicas: u64, seed: u64) -> Self {
        Self {
            beta,
            rho,
            horizons,
            p,
            replicas,
            seed,
            law: OffspringLaw::binary(),
            cap: DEFAULT_NODE_CAP,
        }
    }
}

impl MartingaleConfig {
    /// Rejects phases and moment orders the experiment is not defined for.
    pub fn validate(&self) -> Result<()> {
        admissible(self.beta, self.p).map(|_| ())
    }

    pub fn plan(&self) -> ReplicaPlan {
        ReplicaPlan {
            seed: self.seed,
            pairs: vec![(self.beta, self.rho)],
            horizons: self.horizons.clone(),
            law: self.law.clone(),
            cap: self.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMoments {
    pub t: f64,
    pub mean_re: Estimate,
    pub mean_im: Estimate,
    /// `E |M(t)|^p`
    pub pth_moment: Estimate,
    /// `E |M(t)|^2` from the closed form.
    pub second_moment_oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub t1: f64,
    pub t2: f64,
    /// `E |M(t2) - M(t1)|`
    pub l1: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub beta: Beta,
    pub rho: f64,
    pub label: PhaseLabel,
    pub p: f64,
    pub p_max: f64,
    /// Growth rate of the `p`-th moment bound; negative predicts boundedness.
    pub growth_rate: f64,
    pub replicas: usize,
    pub horizons: Vec<HorizonMoments>,
    pub increments: Vec<Increment>,
}

fn admissible(beta: Beta, p: f64) -> Result<f64> {
    match classify(beta) {
        PhaseLabel::B1 | PhaseLabel::B12 => {}
        _ => {
            return Err(Error::PhaseNotAdmissible {
                beta: beta.to_string(),
                needed: "B1 or B12".into(),
            })
        }
    }
    pth_moment_growth_rate(beta, p)
}

pub fn martingale_from_table(table: &ReplicaTable, beta: Beta, rho: f64, p: f64, k: f64) -> Result<MartingaleReport> {
    let growth_rate = admissible(beta, p)?;
    let pi = table
        .pair_index(beta, rho)
        .ok_or_else(|| Error::Config(format!("table lacks beta = {beta}, rho = {rho}")))?;
    let n = table.replica_count();
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let mut horizons = Vec::new();
    for (h, &t) in table.horizons.iter().enumerate() {
        let m: Vec<_> = table.column(h, pi).map(|row| row.mckean).collect();
        let re: Vec<f64> = m.iter().map(|z| z.re).collect();
        let im: Vec<f64> = m.iter().map(|z| z.im).collect();
        let pth: Vec<f64> = m.iter().map(|z| z.norm().powf(p)).collect();
        horizons.push(HorizonMoments {
            t,
            mean_re: Estimate::of(&re)?,
            mean_im: Estimate::of(&im)?,
            pth_moment: Estimate::of(&pth)?,
            second_moment_oracle: mckean_second_moment(&MomentOracleInput { beta, rho, t, k }),
        });
    }
    let mut increments = Vec::new();
    for h in 1..table.horizons.len() {
        let d: Vec<f64> = (0..n)
            .map(|rep| (table.row(rep, h, pi).mckean - table.row(rep, h - 1, pi).mckean).norm())
            .collect();
        increments.push(Increment {
            t1: table.horizons[h - 1],
            t2: table.horizons[h],
            l1: Estimate::of(&d)?,
        });
    }
    let p_max = if beta.sigma == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::SQRT_2 / beta.sigma.abs()
    };
    Ok(MartingaleReport {
        beta,
        rho,
        label: classify(beta),
        p,
        p_max,
        growth_rate,
        replicas: n,
        horizons,
        increments,
    })
}

pub fn martingale_experiment(config: &MartingaleConfig) -> Result<MartingaleReport> {
    config.validate()?;
    let table = run_replicas(&config.plan(), 0..config.replicas)?;
    martingale_from_table(&table, config.beta, config.rho, config.p, config.law.second_factorial_moment())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        let c = MartingaleConfig::new(Beta::new(0.5, 1.0), 0.0, vec![1.0, 2.0], 1.5, 10, 1);
        assert!(matches!(martingale_experiment(&c), Err(Error::PhaseNotAdmissible { .. })));
        let c = MartingaleConfig::new(Beta::new(0.9, 0.3), 0.0, vec![1.0, 2.0], 1.7, 10, 1);
        assert!(matches!(martingale_experiment(&c), Err(Error::MomentOrderOutOfRange { .. })));
    }

    #[test]
    fn report_shape() {
        let c = MartingaleConfig::new(Beta::new(0.4, 0.3), 0.5, vec![1.0, 2.0, 3.0], 2.0, 400, 2);
        let r = martingale_experiment(&c).unwrap();
        assert_eq!(r.horizons.len(), 3);
        assert_eq!(r.increments.len(), 2);
        assert_eq!((r.increments[0].t1, r.increments[0].t2), (1.0, 2.0));
        for h in &r.horizons {
            assert!(h.mean_re.z_score(1.0) < 5.0, "{h:?}");
            assert!(h.mean_im.z_score(0.0) < 5.0, "{h:?}");
        }
        assert!(r.growth_rate < 0.0);
    }
}
