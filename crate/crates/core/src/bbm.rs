//! Correlated branching Brownian motions on a fixed genealogy.
//!
//! A forest carries two independent BBMs `X` and `Z` on the same tree. The
//! second energy coordinate is `Y = rho X + sqrt(1 - rho^2) Z`, which gives
//! `Cov(x_k(t), y_k(t)) = rho t`.
//!
//! Positions in the middle of an edge are filled in by Brownian bridges,
//! sampled on demand and sequentially when several times fall on one edge.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gw::GwTree;

/// Positions of the particles alive at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub time: f64,
    pub rho: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Leaf dump: `leaf_id x y`, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.len() * 56);
        for (k, (x, y)) in self.x.iter().zip(&self.y).enumerate() {
            let _ = writeln!(out, "{k} {x:.16e} {y:.16e}");
        }
        out
    }
}

/// Values of `X` and `Z` at one time, tagged with the node alive then.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub nodes: Vec<u32>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl Snapshot {
    pub fn population(&self, rho: f64) -> Population {
        let c = (1.0 - rho * rho).max(0.0).sqrt();
        Population {
            time: self.time,
            rho,
            x: self.x.clone(),
            y: self.x.iter().zip(&self.z).map(|(x, z)| rho * x + c * z).collect(),
        }
    }
}

/// Gaussian increments of `X` and `Z` on every edge of a tree.
#[derive(Debug, Clone)]
pub struct BbmForest<'a> {
    tree: &'a GwTree,
    rho: f64,
    dx: Vec<f64>,
    dz: Vec<f64>,
    // positions at the end of each node's edge
    x_end: Vec<f64>,
    z_end: Vec<f64>,
}

impl<'a> BbmForest<'a> {
    /// Samples the pair `(X, Z)` on `tree`.
    pub fn sample<R: Rng + ?Sized>(tree: &'a GwTree, rho: f64, rng: &mut R) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidCorrelation(rho));
        }
        let n = tree.node_count();
        let birth = tree.birth_slice();
        let end = tree.end_slice();
        let parent = tree.parent_slice();
        let mut dx = Vec::with_capacity(n);
        let mut dz = Vec::with_capacity(n);
        let mut x_end = Vec::with_capacity(n);
        let mut z_end = Vec::with_capacity(n);
        for i in 0..n {
            let sd = (end[i] - birth[i]).sqrt();
            let gx: f64 = rng.sample(StandardNormal);
            let gz: f64 = rng.sample(StandardNormal);
            let (ix, iz) = (sd * gx, sd * gz);
            let (x0, z0) = match parent[i] {
                u32::MAX => (0.0, 0.0),
                p => (x_end[p as usize], z_end[p as usize]),
            };
            dx.push(ix);
            dz.push(iz);
            x_end.push(x0 + ix);
            z_end.push(z0 + iz);
        }
        Ok(Self {
            tree,
            rho,
            dx,
            dz,
            x_end,
            z_end,
        })
    }

    pub fn tree(&self) -> &'a GwTree {
        self.tree
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn horizon(&self) -> f64 {
        self.tree.horizon()
    }

    /// Increments `(dx, dz)` on the edge ending at `node`.
    pub fn increments(&self, node: usize) -> (f64, f64) {
        (self.dx[node], self.dz[node])
    }

    /// `(x, z)` at the start of `node`'s edge.
    #[inline]
    fn start(&self, node: usize) -> (f64, f64) {
        match self.tree.parent_of(node) {
            None => (0.0, 0.0),
            Some(p) => (self.x_end[p], self.z_end[p]),
        }
    }

    /// `(x, z)` at the end of `node`'s edge.
    pub fn end_position(&self, node: usize) -> (f64, f64) {
        (self.x_end[node], self.z_end[node])
    }

    /// Leaf positions `x_k(t), y_k(t)` in leaf order.
    pub fn leaves(&self) -> Population {
        let c = (1.0 - self.rho * self.rho).max(0.0).sqrt();
        let leaves = self.tree.leaves();
        let mut x = Vec::with_capacity(leaves.len());
        let mut y = Vec::with_capacity(leaves.len());
        for &id in leaves {
            let (xi, zi) = (self.x_end[id as usize], self.z_end[id as usize]);
            x.push(xi);
            y.push(self.rho * xi + c * zi);
        }
        Population {
            time: self.horizon(),
            rho: self.rho,
            x,
            y,
        }
    }

    /// `z_k(t)` in leaf order.
    pub fn leaf_z(&self) -> Vec<f64> {
        self.tree
            .leaves()
            .iter()
            .map(|&id| self.z_end[id as usize])
            .collect()
    }

    /// Joint snapshots of the process at the given times. Times must be
    /// non-decreasing and lie in `[0, horizon]`. Interior points of an edge
    /// are sampled from Brownian bridges, conditioned on the earlier
    /// snapshot times on the same edge.
    pub fn snapshots<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Result<Vec<Snapshot>> {
        let horizon = self.horizon();
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("snapshot times must be non-decreasing".into()));
        }
        if let Some(&bad) = times.iter().find(|s| !(0.0..=horizon).contains(*s)) {
            return Err(Error::InvalidHorizon(bad));
        }
        let mut out: Vec<Snapshot> = times
            .iter()
            .map(|&time| Snapshot {
                time,
                nodes: Vec::new(),
                x: Vec::new(),
                z: Vec::new(),
            })
            .collect();
        let Some(&latest) = times.last() else {
            return Ok(out);
        };
        let birth = self.tree.birth_slice();
        let end = self.tree.end_slice();
        for i in 0..self.tree.node_count() {
            let (b, e) = (birth[i], end[i]);
            if b > latest {
                continue;
            }
            let leaf = self.tree.children_of(i).is_empty();
            let (x0, z0) = self.start(i);
            let (x1, z1) = (self.x_end[i], self.z_end[i]);
            let (mut ct, mut cx, mut cz) = (b, x0, z0);
            for (j, &s) in times.iter().enumerate() {
                let alive = b <= s && (s < e || (leaf && s == e));
                if !alive {
                    continue;
                }
                let (xs, zs) = if s == ct {
                    (cx, cz)
                } else if s == e {
                    (x1, z1)
                } else {
                    let w = (s - ct) / (e - ct);
                    let sd = ((s - ct) * (e - s) / (e - ct)).sqrt();
                    let gx: f64 = rng.sample(StandardNormal);
                    let gz: f64 = rng.sample(StandardNormal);
                    (cx + w * (x1 - cx) + sd * gx, cz + w * (z1 - cz) + sd * gz)
                };
                ct = s;
                cx = xs;
                cz = zs;
                let snap = &mut out[j];
                snap.nodes.push(i as u32);
                snap.x.push(xs);
                snap.z.push(zs);
            }
        }
        Ok(out)
    }

    /// Ancestral path of `X` for leaf `k`: positions at time 0, at every
    /// branch point on the lineage, and at the horizon.
    pub fn path(&self, k: usize) -> Result<PathRecord> {
        let lineage = self.tree.lineage(k)?;
        let mut points = Vec::with_capacity(lineage.len() + 1);
        points.push((0.0, 0.0));
        for &node in &lineage {
            let e = self.tree.end_slice()[node];
            if e > points.last().map_or(0.0, |p| p.0) {
                points.push((e, self.x_end[node]));
            }
        }
        PathRecord::new(points)
    }

    /// Barrier flags for every leaf, in leaf order. `at_r` must be the
    /// snapshot of this forest at time `spec.r`; it supplies the bridge values
    /// on edges straddling `r`, so that the decision agrees with any other
    /// observable computed from the same snapshot.
    pub fn barrier_flags<R: Rng + ?Sized>(
        &self,
        spec: &BarrierSpec,
        at_r: &Snapshot,
        rng: &mut R,
    ) -> Result<Vec<BarrierFlags>> {
        spec.validate()?;
        if at_r.time != spec.r {
            return Err(Error::InvalidBarrier(format!(
                "snapshot at {} does not match r = {}",
                at_r.time, spec.r
            )));
        }
        if (spec.t - self.horizon()).abs() > 1e-12 {
            return Err(Error::InvalidBarrier(format!(
                "barrier horizon {} differs from forest horizon {}",
                spec.t,
                self.horizon()
            )));
        }
        let n = self.tree.node_count();
        let birth = self.tree.birth_slice();
        let end = self.tree.end_slice();
        let parent = self.tree.parent_slice();
        let mut ok = vec![true; n];
        let mut cursor = 0;
        for i in 0..n {
            let parent_ok = match parent[i] {
                u32::MAX => true,
                p => ok[p as usize],
            };
            let (b, e) = (birth[i], end[i]);
            let (x0, _) = self.start(i);
            let x1 = self.x_end[i];
            let mut from_snapshot = None;
            while cursor < at_r.nodes.len() && (at_r.nodes[cursor] as usize) < i {
                cursor += 1;
            }
            if cursor < at_r.nodes.len() && at_r.nodes[cursor] as usize == i {
                from_snapshot = Some(at_r.x[cursor]);
            }
            // Edges ending before r are unconstrained; so is everything
            // below a failed ancestor.
            ok[i] = parent_ok
                && if e < spec.r {
                    true
                } else if b < spec.r {
                    let xr = from_snapshot.ok_or_else(|| {
                        Error::InvalidBarrier(format!("node {i} missing from snapshot at r"))
                    })?;
                    spec.segment_below(spec.r, xr, e, x1, rng)
                } else {
                    spec.segment_below(b, x0, e, x1, rng)
                };
        }
        let threshold = spec.endpoint_threshold();
        Ok(self
            .tree
            .leaves()
            .iter()
            .map(|&id| BarrierFlags {
                endpoint: self.x_end[id as usize] < threshold,
                path: ok[id as usize],
            })
            .collect())
    }
}

/// Positions `(time, x)` of one lineage at its branch points.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    points: Vec<(f64, f64)>,
}

impl PathRecord {
    /// Times must increase strictly from an initial `(0, 0)`.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.first() != Some(&(0.0, 0.0)) {
            return Err(Error::Config("path must start at (0, 0)".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("path times must increase strictly".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn end(&self) -> (f64, f64) {
        *self.points.last().expect("path is non-empty")
    }
}

/// Parameters of the two barrier events
/// `{x(t) < 2 sigma t + A sqrt(t)}` and `{x(s) <= 2 sigma s + s^gamma on [r, t]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub sigma: f64,
    pub gamma: f64,
    pub r: f64,
    pub t: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarrierFlags {
    pub endpoint: bool,
    pub path: bool,
}

impl BarrierFlags {
    pub fn both(&self) -> bool {
        self.endpoint && self.path
    }
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::InvalidBarrierExponent(self.gamma));
        }
        if !(0.0 <= self.r && self.r <= self.t) {
            return Err(Error::InvalidBarrier(format!(
                "need 0 <= r <= t, got r = {}, t = {}",
                self.r, self.t
            )));
        }
        if !self.sigma.is_finite() || !self.a.is_finite() {
            return Err(Error::InvalidBarrier("non-finite parameter".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn curve(&self, s: f64) -> f64 {
        2.0 * self.sigma * s + s.powf(self.gamma)
    }

    pub fn endpoint_threshold(&self) -> f64 {
        2.0 * self.sigma * self.t + self.a * self.t.sqrt()
    }

    /// Decides whether a Brownian bridge from `(t0, x0)` to `(t1, x1)` stays
    /// below the barrier. The barrier is replaced by its chord on the
    /// segment, for which the crossing probability of the bridge is
    /// `exp(-2 (b0 - x0)(b1 - x1) / (t1 - t0))`; the outcome is a Bernoulli
    /// draw with that probability. The chord lies below the concave barrier,
    /// so the check is conservative.
    pub fn segment_below<R: Rng + ?Sized>(&self, t0: f64, x0: f64, t1: f64, x1: f64, rng: &mut R) -> bool {
        let g0 = self.curve(t0) - x0;
        let g1 = self.curve(t1) - x1;
        if g0 < 0.0 || g1 < 0.0 {
            return false;
        }
        if t1 <= t0 {
            return true;
        }
        let p_cross = (-2.0 * g0 * g1 / (t1 - t0)).exp();
        let u: f64 = rng.random();
        u >= p_cross
    }
}

/// Evaluates both barrier events on a single recorded path. Segments that
/// straddle `r` get a bridge point at `r` drawn from `rng`.
pub fn path_barrier_event<R: Rng + ?Sized>(
    path: &PathRecord,
    spec: &BarrierSpec,
    rng: &mut R,
) -> Result<BarrierFlags> {
    spec.validate()?;
    let (t_end, x_end) = path.end();
    if (t_end - spec.t).abs() > 1e-12 {
        return Err(Error::InvalidBarrier(format!(
            "path ends at {t_end}, barrier horizon is {}",
            spec.t
        )));
    }
    let mut ok = true;
    for w in path.points().windows(2) {
        let ((t0, x0), (t1, x1)) = (w[0], w[1]);
        if t1 < spec.r {
            continue;
        }
        let pass = if t0 < spec.r {
            let frac = (spec.r - t0) / (t1 - t0);
            let sd = ((spec.r - t0) * (t1 - spec.r) / (t1 - t0)).sqrt();
            let g: f64 = rng.sample(StandardNormal);
            let xr = x0 + frac * (x1 - x0) + sd * g;
            spec.segment_below(spec.r, xr, t1, x1, rng)
        } else {
            spec.segment_below(t0, x0, t1, x1, rng)
        };
        if !pass {
            ok = false;
            break;
        }
    }
    Ok(BarrierFlags {
        endpoint: x_end < spec.endpoint_threshold(),
        path: ok,
    })
}
