//! Continuous-time Galton–Watson genealogies.
//!
//! Trees are sampled event by event: every particle lives an exponential(1)
//! time and is then replaced by a random number of children drawn from the
//! offspring law. Nodes are stored in flat arrays. A node's children occupy a
//! contiguous id range and every child id is larger than its parent id, so a
//! single forward sweep visits parents before children.

use std::fmt::Write as _;
use std::ops::Range;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Default cap on the number of stored nodes.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

const NO_PARENT: u32 = u32::MAX;
const LAW_TOL: f64 = 1e-9;

/// Offspring distribution `p_k`, `k >= 1`, with mean two.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    // probs[k] = p_k; probs[0] is always zero.
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OffspringLaw {
    /// Binary branching, `p_2 = 1`.
    pub fn binary() -> Self {
        Self::new(vec![0.0, 0.0, 1.0]).expect("binary law is valid")
    }

    /// Builds a law from `probs[k] = p_k`. Requires `p_0 = 0`, total mass one
    /// and mean two.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidOffspringLaw("no probabilities".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidOffspringLaw(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        if probs[0] != 0.0 {
            return Err(Error::InvalidOffspringLaw("p_0 must be zero".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > LAW_TOL {
            return Err(Error::InvalidOffspringLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mean: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (mean - 2.0).abs() > LAW_TOL {
            return Err(Error::InvalidOffspringLaw(format!(
                "mean offspring is {mean}, not 2"
            )));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cumulative })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_binary(&self) -> bool {
        self.probs.len() == 3 && self.probs[2] == 1.0
    }

    /// `K = sum_k k(k-1) p_k`.
    pub fn second_factorial_moment(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p)
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.is_binary() {
            return 2;
        }
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|c| *c <= u);
        k.min(self.probs.len() - 1) as u32
    }
}

impl Default for OffspringLaw {
    fn default() -> Self {
        Self::binary()
    }
}

/// One node of a [`GwTree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    /// Branching time, or the horizon for particles alive at the horizon.
    pub end: f64,
    pub first_child: usize,
    pub n_children: usize,
}

impl NodeRecord {
    pub fn children(&self) -> Range<usize> {
        self.first_child..self.first_child + self.n_children
    }
}

/// Genealogy of a continuous-time Galton–Watson process up to a horizon.
#[derive(Debug, Clone)]
pub struct GwTree {
    horizon: f64,
    birth: Vec<f64>,
    end: Vec<f64>,
    parent: Vec<u32>,
    first_child: Vec<u32>,
    n_children: Vec<u32>,
    leaves: Vec<u32>,
}

impl GwTree {
    /// Samples a tree with the default node cap.
    pub fn sample<R: Rng + ?Sized>(horizon: f64, law: &OffspringLaw, rng: &mut R) -> Result<Self> {
        Self::sample_with_cap(horizon, law, rng, DEFAULT_NODE_CAP)
    }

    /// Samples a tree, rejecting horizons whose expected or realised node
    /// count exceeds `cap`.
    pub fn sample_with_cap<R: Rng + ?Sized>(
        horizon: f64,
        law: &OffspringLaw,
        rng: &mut R,
        cap: u64,
    ) -> Result<Self> {
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::InvalidHorizon(horizon));
        }
        let cap = cap.min(u64::from(NO_PARENT) - 1);
        // E[#nodes] = 1 + 2 (e^t - 1) for any mean-two law.
        let projected = 2.0 * horizon.exp() - 1.0;
        if projected > cap as f64 {
            return Err(Error::HorizonTooLarge {
                nodes: projected.min(u64::MAX as f64) as u64,
                cap,
            });
        }
        let reserve = (projected * 1.25) as usize + 8;
        let mut tree = GwTree {
            horizon,
            birth: Vec::with_capacity(reserve),
            end: Vec::with_capacity(reserve),
            parent: Vec::with_capacity(reserve),
            first_child: Vec::with_capacity(reserve),
            n_children: Vec::with_capacity(reserve),
            leaves: Vec::with_capacity(reserve / 2 + 1),
        };
        tree.birth.push(0.0);
        tree.parent.push(NO_PARENT);

        let mut i = 0;
        while i < tree.birth.len() {
            let birth = tree.birth[i];
            let life: f64 = rng.sample(Exp1);
            let death = birth + life;
            if death >= horizon {
                tree.end.push(horizon);
                tree.first_child.push(tree.birth.len() as u32);
                tree.n_children.push(0);
                tree.leaves.push(i as u32);
            } else {
                let k = law.sample(rng);
                let first = tree.birth.len();
                if (first + k as usize) as u64 > cap {
                    return Err(Error::HorizonTooLarge {
                        nodes: (first + k as usize) as u64,
                        cap,
                    });
                }
                tree.end.push(death);
                tree.first_child.push(first as u32);
                tree.n_children.push(k);
                for _ in 0..k {
                    tree.birth.push(death);
                    tree.parent.push(i as u32);
                }
            }
            i += 1;
        }
        Ok(tree)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.birth.len()
    }

    /// `n(t)`.
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Node ids of the leaves, in the order `i_1(t), ..., i_n(t)`.
    pub fn leaves(&self) -> &[u32] {
        &self.leaves
    }

    pub fn node(&self, id: usize) -> NodeRecord {
        NodeRecord {
            id,
            parent: self.parent_of(id),
            birth: self.birth[id],
            end: self.end[id],
            first_child: self.first_child[id] as usize,
            n_children: self.n_children[id] as usize,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeRecord> + '_ {
        (0..self.node_count()).map(|i| self.node(i))
    }

    #[inline]
    pub fn parent_of(&self, id: usize) -> Option<usize> {
        match self.parent[id] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }

    #[inline]
    pub(crate) fn birth_slice(&self) -> &[f64] {
        &self.birth
    }

    #[inline]
    pub(crate) fn end_slice(&self) -> &[f64] {
        &self.end
    }

    #[inline]
    pub(crate) fn parent_slice(&self) -> &[u32] {
        &self.parent
    }

    #[inline]
    pub(crate) fn children_of(&self, id: usize) -> Range<usize> {
        let f = self.first_child[id] as usize;
        f..f + self.n_children[id] as usize
    }

    /// Ancestor node ids of leaf `k`, from the root down to the leaf itself.
    pub fn lineage(&self, k: usize) -> Result<Vec<usize>> {
        let mut node = self.leaf_node(k)?;
        let mut out = vec![node];
        while let Some(p) = self.parent_of(node) {
            out.push(p);
            node = p;
        }
        out.reverse();
        Ok(out)
    }

    fn leaf_node(&self, k: usize) -> Result<usize> {
        self.leaves
            .get(k)
            .map(|&id| id as usize)
            .ok_or(Error::LeafOutOfRange {
                index: k,
                leaves: self.leaves.len(),
            })
    }

    /// Time of the most recent common ancestor of leaves `k` and `l`.
    pub fn overlap(&self, k: usize, l: usize) -> Result<f64> {
        let mut a = self.leaf_node(k)?;
        let mut b = self.leaf_node(l)?;
        if a == b {
            return Ok(self.horizon);
        }
        while a != b {
            // parent ids are always smaller than child ids
            if a > b {
                a = self.parent[a] as usize;
            } else {
                b = self.parent[b] as usize;
            }
        }
        Ok(self.end[a])
    }

    /// Number of branching events and total particle lifetime in the tree.
    pub fn branching_exposure(&self) -> (usize, f64) {
        let events = self.n_children.iter().filter(|&&c| c > 0).count();
        let exposure = self
            .birth
            .iter()
            .zip(&self.end)
            .map(|(b, e)| e - b)
            .sum();
        (events, exposure)
    }

    /// Line-based dump, one node per line: `id parent_id birth_time n_children`.
    /// The root's parent id is written as `-1`.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.node_count() * 40);
        for n in self.nodes() {
            let parent = n.parent.map_or(-1, |p| p as i64);
            let _ = writeln!(out, "{} {} {:.16e} {}", n.id, parent, n.birth, n.n_children);
        }
        out
    }
}
