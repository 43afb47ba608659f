//! Empirical free energy `(1/t) log |X(t)|` against the phase diagram.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::{OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::Beta;
use crate::phase::{classify, limiting_log_partition, PhaseLabel};
use crate::stats::replicas::{run_replicas, ReplicaPlan, ReplicaTable};
use crate::stats::summary::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyRow {
    pub beta: Beta,
    pub label: PhaseLabel,
    /// Median over replicas of `(1/t) log |X(t)|`.
    pub median: f64,
    pub formula: f64,
    /// `median - formula`
    pub gap: f64,
    pub boundary_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyConfig {
    pub grid: Vec<Beta>,
    pub rho: f64,
    pub t: f64,
    pub replicas: u64,
    pub seed: u64,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl FreeEnergyConfig {
    pub fn new(grid: Vec<Beta>, rho: f64, t: f64, replicas: u64, seed: u64) -> Self {
        Self {
            grid,
            rho,
            t,
            replicas,
            seed,
            law: OffspringLaw::binary(),
            cap: DEFAULT_NODE_CAP,
        }
    }
}

/// `n x n` grid on `[0, max]^2`, sigma varying slowest.
pub fn square_grid(n: usize, max: f64) -> Vec<Beta> {
    let step = if n > 1 { max / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(Beta::new(i as f64 * step, j as f64 * step));
        }
    }
    out
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let u = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + u * dx, a.1 + u * dy);
    (p.0 - qx).hypot(p.1 - qy)
}

/// Euclidean distance in the `(sigma, tau)` plane to the nearest phase
/// boundary.
pub fn boundary_distance(beta: Beta) -> f64 {
    let p = (beta.sigma.abs(), beta.tau.abs());
    let triple = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    // B12: sigma + tau = sqrt2 between the triple point and (sqrt2, 0)
    let d12 = segment_distance(p, triple, (SQRT_2, 0.0));
    // B13: unit circle between the triple point and (0, 1)
    let angle = p.1.atan2(p.0);
    let d13 = if angle >= std::f64::consts::FRAC_PI_4 {
        (p.0.hypot(p.1) - 1.0).abs()
    } else {
        (p.0 - triple.0).hypot(p.1 - triple.1)
    };
    // B23: sigma = 1/sqrt2 above the triple point
    let d23 = if p.1 >= FRAC_1_SQRT_2 {
        (p.0 - FRAC_1_SQRT_2).abs()
    } else {
        (p.0 - triple.0).hypot(p.1 - triple.1)
    };
    d12.min(d13).min(d23)
}

pub fn free_energy_from_table(table: &ReplicaTable, grid: &[Beta], rho: f64, t: f64) -> Result<Vec<FreeEnergyRow>> {
    let h = table
        .horizon_index(t)
        .ok_or_else(|| Error::Config(format!("table lacks horizon {t}")))?;
    grid.iter()
        .map(|&beta| {
            let p = table
                .pair_index(beta, rho)
                .ok_or_else(|| Error::Config(format!("table lacks beta = {beta}")))?;
            let vals: Vec<f64> = table.column(h, p).map(|row| row.log_mag / t).collect();
            let med = median(&vals)?;
            let formula = limiting_log_partition(beta);
            Ok(FreeEnergyRow {
                beta,
                label: classify(beta),
                median: med,
                formula,
                gap: med - formula,
                boundary_distance: boundary_distance(beta),
            })
        })
        .collect()
}

impl FreeEnergyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 6.0) {
            return Err(Error::Config(format!("free-energy map needs t >= 6, got {}", self.t)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("empty beta grid".into()));
        }
        Ok(())
    }

    /// One forest per replica serves the whole grid.
    pub fn plan(&self) -> ReplicaPlan {
        ReplicaPlan {
            seed: self.seed,
            pairs: self.grid.iter().map(|&b| (b, self.rho)).collect(),
            horizons: vec![self.t],
            law: self.law.clone(),
            cap: self.cap,
        }
    }
}

pub fn free_energy_map(config: &FreeEnergyConfig) -> Result<Vec<FreeEnergyRow>> {
    config.validate()?;
    let table = run_replicas(&config.plan(), 0..config.replicas)?;
    free_energy_from_table(&table, &config.grid, config.rho, config.t)
}
