//! Binomial detector-loss model.
//!
//! An inefficient detector is a perfect one behind a beam splitter of
//! transmissivity η. Every mode on every side is thinned independently, which
//! acts on the photon-number outcome distribution only.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bsv::{sector_weights, BsvSpec};
use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_basis, Key, Occupation, StateVector};
use crate::par::{map_slice, Parallelism};

/// Probabilities below this are dropped after thinning.
pub const DEFAULT_PRUNE: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Efficiency(f64);

impl Efficiency {
    pub fn new(eta: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&eta) {
            Ok(Efficiency(eta))
        } else {
            Err(Error::InvalidEfficiency(eta))
        }
    }

    pub const PERFECT: Efficiency = Efficiency(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability that `m` photons are counted when `n` reach the detector.
pub fn q(m: usize, n: usize, eta: Efficiency) -> f64 {
    let e = eta.0;
    if e == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if e == 1.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    if m > n {
        return 0.0;
    }
    binomial(n, m) * e.powi(m as i32) * (1.0 - e).powi((n - m) as i32)
}

/// Joint probability table over detected (A, B) occupations.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    p: usize,
    entries: BTreeMap<Key, f64>,
}

impl OutcomeDistribution {
    pub fn new(p: usize) -> Self {
        OutcomeDistribution { p, entries: BTreeMap::new() }
    }

    pub fn add(&mut self, a: Occupation, b: Occupation, prob: f64) {
        *self.entries.entry((a, b)).or_insert(0.0) += prob;
    }

    /// `|amplitude|²` of every component of a bipartite state.
    pub fn from_state(state: &StateVector) -> Result<Self> {
        if !state.is_bipartite() {
            return Err(Error::NotBipartite);
        }
        let mut d = OutcomeDistribution::new(state.modes());
        for ((a, b), amp) in state.iter() {
            d.add(a.clone(), b.clone(), amp.norm_sqr());
        }
        Ok(d)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &f64)> {
        self.entries.iter()
    }

    pub fn prob(&self, a: &Occupation, b: &Occupation) -> f64 {
        self.entries.get(&(a.clone(), b.clone())).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Mean detected photon number on Alice's (`true`) or Bob's side.
    pub fn mean_number(&self, alice: bool) -> f64 {
        self.entries.iter().map(|((a, b), w)| w * if alice { a.total() } else { b.total() } as f64).sum()
    }

    /// Largest absolute probability difference over the union of supports.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, w) in &self.entries {
            worst = worst.max((w - other.entries.get(k).unwrap_or(&0.0)).abs());
        }
        for (k, w) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(w.abs());
            }
        }
        worst
    }
}

/// Ideal (lossless) photon-count distribution behind a conjugate pair of
/// multiports in `setting`. Conjugate pairs leave the state invariant, so the
/// table is the same for every setting: sector n with weight `P_n`, uniform over
/// its compositions, identical on both sides.
pub fn ideal_joint_distribution(spec: &BsvSpec, setting: usize) -> Result<OutcomeDistribution> {
    spec.validate()?;
    if setting > spec.p {
        return Err(Error::InvalidSetting { setting, p: spec.p });
    }
    let mut d = OutcomeDistribution::new(spec.p);
    for (n, pn) in sector_weights(spec) {
        if pn == 0.0 {
            continue;
        }
        let comps = enumerate_basis(spec.p, n);
        let each = pn / comps.len() as f64;
        for c in comps {
            d.add(c.clone(), c, each);
        }
    }
    Ok(d)
}

/// Detected-count distribution for one side given the photons reaching it.
pub fn thin(occ: &Occupation, eta: Efficiency) -> Vec<(Occupation, f64)> {
    let mut out = vec![(Vec::with_capacity(occ.modes()), 1.0)];
    for &n in occ.counts() {
        let n = n as usize;
        let mut next = Vec::with_capacity(out.len() * (n + 1));
        for (prefix, w) in &out {
            for m in 0..=n {
                let qm = q(m, n, eta);
                if qm == 0.0 {
                    continue;
                }
                let mut v: Vec<u32> = prefix.clone();
                v.push(m as u32);
                next.push((v, w * qm));
            }
        }
        out = next;
    }
    out.into_iter().map(|(v, w)| (Occupation::new(v), w)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct LossOptions {
    pub prune: f64,
    pub parallelism: Parallelism,
}

impl Default for LossOptions {
    fn default() -> Self {
        LossOptions { prune: DEFAULT_PRUNE, parallelism: Parallelism::Parallel }
    }
}

pub fn apply_loss(dist: &OutcomeDistribution, eta: Efficiency) -> OutcomeDistribution {
    apply_loss_with(dist, eta, LossOptions::default())
}

/// Thins every mode on both sides independently and aggregates the detected table.
pub fn apply_loss_with(dist: &OutcomeDistribution, eta: Efficiency, opts: LossOptions) -> OutcomeDistribution {
    let components = thinned_components(dist, eta, opts.parallelism);
    let parts = map_slice(&components, opts.parallelism, |c| {
        let mut local = Vec::with_capacity(c.alice.len() * c.bob.len());
        for (a, wa) in c.alice.iter() {
            for (b, wb) in c.bob.iter() {
                let w = c.weight * wa * wb;
                if w >= opts.prune {
                    local.push(((a.clone(), b.clone()), w));
                }
            }
        }
        local
    });
    let mut out = OutcomeDistribution::new(dist.p);
    for part in parts {
        for (k, w) in part {
            *out.entries.entry(k).or_insert(0.0) += w;
        }
    }
    out
}

/// One ideal outcome together with the detected-count laws on each side.
/// Given the ideal outcome the two sides are thinned independently.
#[derive(Clone, Debug)]
pub struct ThinnedComponent {
    pub weight: f64,
    pub alice: std::sync::Arc<Vec<(Occupation, f64)>>,
    pub bob: std::sync::Arc<Vec<(Occupation, f64)>>,
}

/// Factorized lossy distribution: the mixture over ideal outcomes of product
/// laws. Equivalent to [`apply_loss`] without aggregating the joint table.
pub fn thinned_components(dist: &OutcomeDistribution, eta: Efficiency, mode: Parallelism) -> Vec<ThinnedComponent> {
    use std::sync::Arc;
    let mut occs: Vec<&Occupation> = dist.entries.keys().flat_map(|(a, b)| [a, b]).collect();
    occs.sort();
    occs.dedup();
    let laws = map_slice(&occs, mode, |o| Arc::new(thin(o, eta)));
    let cache: BTreeMap<&Occupation, Arc<Vec<(Occupation, f64)>>> = occs.into_iter().zip(laws).collect();
    dist.entries
        .iter()
        .filter(|(_, &w)| w > 0.0)
        .map(|((a, b), &w)| ThinnedComponent { weight: w, alice: cache[a].clone(), bob: cache[b].clone() })
        .collect()
}
