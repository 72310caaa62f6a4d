//! Random one-party states and the product-state safety check.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::operators::{PartyObservables, SideOperatorMoments};
use super::{separable_rhs, CriterionKind};
use crate::error::Result;
use crate::fock::{truncated_basis, Occupation, StateVector};
use crate::par::{map_range, Parallelism};

/// Independent, reproducible stream for sample `index`.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex-Gaussian (Haar-distributed) pure state on all occupations with
/// `min_total ≤ N ≤ cutoff`.
pub fn random_state(rng: &mut impl Rng, p: usize, cutoff: usize, min_total: usize) -> StateVector {
    let basis = truncated_basis(p, min_total, cutoff);
    loop {
        let s = StateVector::from_amplitudes(p, cutoff, basis.iter().map(|o| (o.clone(), gaussian(rng))));
        if let Ok(s) = s.normalize() {
            return s;
        }
    }
}

/// Product of per-mode coherent states restricted to `N ≤ cutoff`, renormalized.
pub fn truncated_coherent(alphas: &[C64], cutoff: usize) -> StateVector {
    let p = alphas.len();
    let mut s = StateVector::single_party(p, cutoff);
    for occ in truncated_basis(p, 0, cutoff) {
        let mut amp = C64::new(1.0, 0.0);
        for (a, &n) in alphas.iter().zip(occ.counts()) {
            let fact: f64 = (1..=n).map(f64::from).product();
            amp *= a.powu(n) / fact.sqrt() * (-0.5 * a.norm_sqr()).exp();
        }
        s.add(occ, Occupation::empty(), amp);
    }
    s.normalize().expect("vacuum term is always present")
}

fn random_fock(rng: &mut impl Rng, p: usize, cutoff: usize) -> StateVector {
    let n = rng.random_range(1..=cutoff);
    let mut counts = vec![0u32; p];
    for _ in 0..n {
        counts[rng.random_range(0..p)] += 1;
    }
    let mut s = StateVector::single_party(p, cutoff);
    s.add(Occupation::new(counts), Occupation::empty(), C64::new(1.0, 0.0));
    s
}

/// Draws from a rotating set of families so both generic and near-extremal
/// states are covered.
pub(crate) fn random_family_state(rng: &mut impl Rng, p: usize, cutoff: usize, index: usize) -> StateVector {
    match index % 5 {
        0 => random_state(rng, p, cutoff, 0),
        1 => {
            let n = rng.random_range(1..=cutoff);
            random_state(rng, p, n, n).with_cutoff(cutoff)
        }
        2 => {
            let basis = truncated_basis(p, 0, cutoff);
            let k = rng.random_range(1..=3);
            let picks = (0..k).map(|_| (basis[rng.random_range(0..basis.len())].clone(), gaussian(rng)));
            StateVector::from_amplitudes(p, cutoff, picks)
                .normalize()
                .unwrap_or_else(|_| StateVector::vacuum(p, cutoff))
        }
        3 => {
            let alphas: Vec<C64> = (0..p).map(|_| gaussian(rng) * 0.6).collect();
            truncated_coherent(&alphas, cutoff)
        }
        _ => random_fock(rng, p, cutoff),
    }
}

/// The two sides of product sample `index`. Every fifth sample puts the
/// same Fock state on both sides, which sits exactly on the rate-d3 bound.
pub fn random_product_sample(seed: u64, index: usize, p: usize, cutoff: usize) -> (StateVector, StateVector) {
    let mut rng = sample_rng(seed, index as u64);
    if index % 5 == 4 {
        let f = random_fock(&mut rng, p, cutoff);
        return (f.clone(), f);
    }
    let a = random_family_state(&mut rng, p, cutoff, index);
    let b = random_family_state(&mut rng, p, cutoff, index / 5 + index);
    (a, b)
}

#[derive(Clone, Debug, Serialize)]
pub struct KindSummary {
    pub kind: CriterionKind,
    pub evaluated: usize,
    pub skipped: usize,
    /// Smallest `lhs − rhs` seen.
    pub min_margin: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerReport {
    pub p: usize,
    pub samples: usize,
    pub cutoff: usize,
    pub tolerance: f64,
    pub kinds: Vec<KindSummary>,
}

impl SamplerReport {
    pub fn passes(&self) -> bool {
        self.kinds.iter().all(|k| k.violations == 0)
    }
}

/// Margin `lhs − rhs` of `kind` on `ψ_A ⊗ ψ_B`, or `None` when degenerate
/// (a side with no photons, after the vacuum projection for rate kinds).
pub fn product_margin(
    obs: &PartyObservables,
    kind: CriterionKind,
    alice: &StateVector,
    bob: &StateVector,
) -> Result<Option<f64>> {
    let (a, b) = if kind.default_renormalized() {
        match (alice.project_out_vacuum().normalize(), bob.project_out_vacuum().normalize()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(None),
        }
    } else {
        (alice.clone(), bob.clone())
    };
    let ma = SideOperatorMoments::new(obs, &a, kind.observable())?;
    let mb = SideOperatorMoments::new(obs, &b, kind.observable())?;
    let lhs = SideOperatorMoments::product_deficit(&ma, &mb);
    Ok(separable_rhs(kind, obs.p(), &ma.numbers, &mb.numbers).map(|r| lhs - r))
}

/// Evaluates every applicable criterion on random product states and counts
/// margins below `−tolerance`.
pub fn separable_sampler(
    p: usize,
    samples: usize,
    seed: u64,
    cutoff: usize,
    mode: Parallelism,
) -> Result<SamplerReport> {
    let obs = PartyObservables::new(p)?;
    let kinds = CriterionKind::applicable(p);
    let tolerance = 1e-9;
    let margins: Vec<Vec<Option<f64>>> = map_range(samples, mode, |i| {
        let (a, b) = random_product_sample(seed, i, p, cutoff);
        kinds.iter().map(|&k| product_margin(&obs, k, &a, &b).expect("shapes match")).collect()
    });
    let summaries = kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let mut s = KindSummary { kind, evaluated: 0, skipped: 0, min_margin: f64::INFINITY, violations: 0 };
            for row in &margins {
                match row[ki] {
                    Some(m) => {
                        s.evaluated += 1;
                        s.min_margin = s.min_margin.min(m);
                        if m < -tolerance {
                            s.violations += 1;
                        }
                    }
                    None => s.skipped += 1,
                }
            }
            s
        })
        .collect();
    Ok(SamplerReport { p, samples, cutoff, tolerance, kinds: summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_fock_product_sits_on_rate_bound() {
        let obs = PartyObservables::new(3).unwrap();
        let f = StateVector::fock(&[1, 0, 0]);
        let m = product_margin(&obs, CriterionKind::RateD3, &f, &f).unwrap().unwrap();
        assert!(m >= -1e-12);
        assert_relative_eq!(m, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_side_is_skipped() {
        let obs = PartyObservables::new(3).unwrap();
        let f = StateVector::fock(&[1, 0, 0]);
        let v = StateVector::vacuum(3, 1);
        for k in CriterionKind::ALL {
            assert_eq!(product_margin(&obs, k, &f, &v).unwrap(), None);
        }
    }

    #[test]
    fn coherent_state_is_normalized() {
        let s = truncated_coherent(&[C64::new(0.5, 0.2), C64::new(-0.3, 0.0)], 6);
        assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn small_sampler_run() {
        for p in [2, 3] {
            let r = separable_sampler(p, 100, 5, 3, Parallelism::Parallel).unwrap();
            assert!(r.passes(), "{r:?}");
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = separable_sampler(3, 40, 9, 3, Parallelism::Parallel).unwrap();
        let b = separable_sampler(3, 40, 9, 3, Parallelism::Sequential).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
