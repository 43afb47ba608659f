//! Independent replicas of the process and their observables.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbm::{BbmForest, Population};
use crate::error::{Error, Result};
use crate::gw::{GwTree, OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::{
    additive_real_martingale, derivative_martingale, mckean_martingale, partition_function,
    seneta_heyde, Beta,
};
use crate::rng::Substream;

/// What to record on each replica: one tree grown to the last horizon, and
/// for every horizon and every `(beta, rho)` pair one row of observables.
/// A single forest serves every `rho`, since `Y = rho X + sqrt(1 - rho^2) Z`
/// is formed after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaPlan {
    pub seed: u64,
    pub pairs: Vec<(Beta, f64)>,
    /// Strictly increasing, non-negative.
    pub horizons: Vec<f64>,
    pub law: OffspringLaw,
    pub cap: u64,
}

impl ReplicaPlan {
    pub fn new(seed: u64, pairs: Vec<(Beta, f64)>, horizons: Vec<f64>) -> Self {
        Self {
            seed,
            pairs,
            horizons,
            law: OffspringLaw::binary(),
            cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one horizon is required".into()));
        }
        if let Some(&h) = self.horizons.iter().find(|h| !h.is_finite() || **h < 0.0) {
            return Err(Error::InvalidHorizon(h));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizons must be strictly increasing".into()));
        }
        for (beta, rho) in &self.pairs {
            if !(-1.0..=1.0).contains(rho) {
                return Err(Error::InvalidCorrelation(*rho));
            }
            if !beta.sigma.is_finite() || !beta.tau.is_finite() {
                return Err(Error::Config(format!("non-finite beta {beta}")));
            }
        }
        Ok(())
    }

    fn horizon(&self) -> f64 {
        *self.horizons.last().expect("validated")
    }
}

/// Observables of one replica at one horizon for one `(beta, rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRow {
    pub replica_id: u64,
    pub t: f64,
    pub beta_sigma: f64,
    pub beta_tau: f64,
    pub rho: f64,
    /// `log |X(t)|`
    pub log_mag: f64,
    /// `arg X(t)`
    pub phase: f64,
    /// `M_{2 sigma, 0}(t)`
    pub m2sigma: f64,
    /// derivative martingale `Z(t)`
    pub deriv: f64,
    /// Seneta–Heyde martingale
    pub sh: f64,
    /// `N(t) = X(t) exp(-t (1/2 + sigma^2))`
    pub n_re: f64,
    pub n_im: f64,
    /// Phase-repaired McKean martingale.
    #[serde(skip)]
    pub mckean: Complex64,
    #[serde(skip)]
    pub particles: usize,
}

impl ReplicaRow {
    pub fn beta(&self) -> Beta {
        Beta::new(self.beta_sigma, self.beta_tau)
    }

    pub fn normalized(&self) -> Complex64 {
        Complex64::new(self.n_re, self.n_im)
    }
}

/// Rows of a contiguous range of replicas, ordered by replica, then
/// horizon, then `(beta, rho)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaTable {
    pub pairs: Vec<(Beta, f64)>,
    pub horizons: Vec<f64>,
    pub first_replica: u64,
    rows: Vec<ReplicaRow>,
}

impl ReplicaTable {
    pub fn replica_count(&self) -> usize {
        let per = self.pairs.len() * self.horizons.len();
        if per == 0 {
            0
        } else {
            self.rows.len() / per
        }
    }

    pub fn rows(&self) -> &[ReplicaRow] {
        &self.rows
    }

    /// Row of replica `first_replica + rep` at horizon index `h` for pair `p`.
    pub fn row(&self, rep: usize, h: usize, p: usize) -> &ReplicaRow {
        let np = self.pairs.len();
        &self.rows[(rep * self.horizons.len() + h) * np + p]
    }

    /// All replicas at horizon index `h` for pair `p`.
    pub fn column(&self, h: usize, p: usize) -> impl Iterator<Item = &ReplicaRow> + '_ {
        (0..self.replica_count()).map(move |rep| self.row(rep, h, p))
    }

    pub fn horizon_index(&self, t: f64) -> Option<usize> {
        self.horizons.iter().position(|&h| h == t)
    }

    pub fn pair_index(&self, beta: Beta, rho: f64) -> Option<usize> {
        self.pairs.iter().position(|&(b, r)| b == beta && r == rho)
    }

    /// Appends the replicas of `other`, which must continue this table's range.
    pub fn append(&mut self, other: ReplicaTable) -> Result<()> {
        if other.pairs != self.pairs || other.horizons != self.horizons {
            return Err(Error::Config("tables record different observables".into()));
        }
        if other.first_replica != self.first_replica + self.replica_count() as u64 {
            return Err(Error::Config("replica ranges are not adjacent".into()));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    /// Comma-separated rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "replica_id", "t", "beta_sigma", "beta_tau", "rho", "log_mag", "phase", "m2sigma", "deriv",
                "sh", "n_re", "n_im",
            ])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()
    }
}

/// `M_{2 sigma, 0}` for each distinct sigma, then the rows of one population.
fn observe(plan: &ReplicaPlan, replica: u64, pop_x: &Population, pops: &[Population], out: &mut Vec<ReplicaRow>) {
    let deriv = derivative_martingale(pop_x);
    let sh = seneta_heyde(pop_x);
    let mut m2: Vec<(f64, f64)> = Vec::new();
    for (&(beta, rho), pop) in plan.pairs.iter().zip(pops) {
        let m2sigma = match m2.iter().find(|(s, _)| *s == beta.sigma) {
            Some(&(_, v)) => v,
            None => {
                let v = additive_real_martingale(pop_x, 2.0 * beta.sigma);
                m2.push((beta.sigma, v));
                v
            }
        };
        let t = pop.time;
        let sum = partition_function(pop, beta);
        let n = sum.scaled_value(t * beta.fluctuation_rate());
        out.push(ReplicaRow {
            replica_id: replica,
            t,
            beta_sigma: beta.sigma,
            beta_tau: beta.tau,
            rho,
            log_mag: sum.log_magnitude(),
            phase: sum.phase(),
            m2sigma,
            deriv,
            sh,
            n_re: n.re,
            n_im: n.im,
            mckean: mckean_martingale(pop, beta),
            particles: pop.len(),
        });
    }
}

fn rho_populations(x: &[f64], z: &[f64], time: f64, rhos: impl Iterator<Item = f64>) -> Vec<Population> {
    let mut pops: Vec<Population> = Vec::new();
    for rho in rhos {
        if let Some(p) = pops.iter().find(|p| p.rho == rho) {
            let p = p.clone();
            pops.push(p);
            continue;
        }
        let c = (1.0 - rho * rho).max(0.0).sqrt();
        pops.push(Population {
            time,
            rho,
            x: x.to_vec(),
            y: x.iter().zip(z).map(|(a, b)| rho * a + c * b).collect(),
        });
    }
    pops
}

/// Rows of a single replica; a pure function of `(plan, replica)`.
pub fn simulate_replica(plan: &ReplicaPlan, replica: u64) -> Result<Vec<ReplicaRow>> {
    let mut rng = Substream::new(plan.seed, replica);
    let tree = GwTree::sample_with_cap(plan.horizon(), &plan.law, &mut rng, plan.cap)?;
    let forest = BbmForest::sample(&tree, 0.0, &mut rng)?;
    let (last, interior) = plan.horizons.split_last().expect("validated");
    let snaps = forest.snapshots(interior, &mut rng)?;
    let mut rows = Vec::with_capacity(plan.horizons.len() * plan.pairs.len());
    let rhos = || plan.pairs.iter().map(|p| p.1);
    for snap in &snaps {
        let pops = rho_populations(&snap.x, &snap.z, snap.time, rhos());
        let pop_x = Population {
            time: snap.time,
            rho: 0.0,
            x: snap.x.clone(),
            y: Vec::new(),
        };
        observe(plan, replica, &pop_x, &pops, &mut rows);
    }
    let leaves = forest.leaves();
    let z = forest.leaf_z();
    let pops = rho_populations(&leaves.x, &z, *last, rhos());
    observe(plan, replica, &leaves, &pops, &mut rows);
    Ok(rows)
}

/// Runs replicas `range` of `plan` on the current rayon pool. The result
/// does not depend on the number of threads: replica `i` reads only its own
/// substream, and rows are assembled in replica order.
pub fn run_replicas(plan: &ReplicaPlan, range: Range<u64>) -> Result<ReplicaTable> {
    plan.validate()?;
    let per: Vec<Result<Vec<ReplicaRow>>> = range
        .clone()
        .into_par_iter()
        .map(|i| simulate_replica(plan, i))
        .collect();
    let mut rows = Vec::with_capacity(per.len() * plan.horizons.len() * plan.pairs.len());
    for r in per {
        rows.extend(r?);
    }
    Ok(ReplicaTable {
        pairs: plan.pairs.clone(),
        horizons: plan.horizons.clone(),
        first_replica: range.start,
        rows,
    })
}

/// Runs `f` on a dedicated pool with `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> ReplicaPlan {
        ReplicaPlan::new(
            5,
            vec![(Beta::new(0.4, 0.3), 0.5), (Beta::new(0.5, 1.0), 0.0), (Beta::new(0.5, 1.0), 0.8)],
            vec![1.0, 2.5, 4.0],
        )
    }

    #[test]
    fn zero_replicas_give_an_empty_table() {
        let t = run_replicas(&plan(), 0..0).unwrap();
        assert_eq!(t.replica_count(), 0);
        assert!(t.rows().is_empty());
    }

    #[test]
    fn same_seed_same_table() {
        let a = run_replicas(&plan(), 0..20).unwrap();
        let b = run_replicas(&plan(), 0..20).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replica_count(), 20);
        assert_eq!(a.rows().len(), 20 * 3 * 3);
    }

    #[test]
    fn ranges_concatenate() {
        let whole = run_replicas(&plan(), 0..12).unwrap();
        let mut left = run_replicas(&plan(), 0..5).unwrap();
        let right = run_replicas(&plan(), 5..12).unwrap();
        left.append(right).unwrap();
        assert_eq!(left, whole);
        let far = run_replicas(&plan(), 20..22).unwrap();
        assert!(left.append(far).is_err());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let one = with_threads(Some(1), || run_replicas(&plan(), 0..16)).unwrap().unwrap();
        let three = with_threads(Some(3), || run_replicas(&plan(), 0..16)).unwrap().unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn rows_are_consistent() {
        let p = plan();
        let t = run_replicas(&p, 3..4).unwrap();
        let last = t.row(0, 2, 0);
        assert_eq!(last.replica_id, 3);
        assert_eq!(last.t, 4.0);
        let beta = last.beta();
        // mckean and N differ by a deterministic factor
        let a = 1.0 - beta.modulus_sq();
        let phase = Complex64::from_polar(1.0, -beta.sigma * beta.tau * last.rho * last.t);
        let expect = last.normalized() * (-a * last.t / 2.0).exp() * phase;
        assert!((expect - last.mckean).norm() < 1e-12 * last.mckean.norm());
        // the two rho values share x but not y
        let (b0, b8) = (t.row(0, 2, 1), t.row(0, 2, 2));
        assert_eq!(b0.m2sigma, b8.m2sigma);
        assert_eq!(b0.deriv, b8.deriv);
        assert_ne!(b0.log_mag, b8.log_mag);
        assert!(t.pair_index(Beta::new(0.5, 1.0), 0.8) == Some(2));
        assert!(t.horizon_index(2.5) == Some(1));
    }

    #[test]
    fn resource_cap_is_reported() {
        let mut p = plan();
        p.cap = 10;
        assert!(run_replicas(&p, 0..2).unwrap_err().is_resource_cap());
    }

    #[test]
    fn csv_has_the_row_format() {
        let t = run_replicas(&plan(), 0..2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "replica_id,t,beta_sigma,beta_tau,rho,log_mag,phase,m2sigma,deriv,sh,n_re,n_im"
        );
        assert_eq!(lines.count(), 2 * 9);
    }
}
