//! Operator-level observables on one party: rotated number operators, the
//! phase-weighted rate operators `R_m`, and the algebraic checks built on them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{NumberMoments, Observable, StatMoments};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, Party, QuadraticOperator, StateVector};
use crate::mub::{build_mub, omega_pow, ModeUnitary};
use crate::par::{map_range, Parallelism};

/// `n̂_j(m) = a_j†(m) a_j(m) = Σ_{s,t} U_js conj(U_jt) a_s† a_t` for every exit j.
pub fn rotated_number_ops(u: &ModeUnitary) -> Vec<QuadraticOperator> {
    let p = u.p();
    let m = u.matrix();
    (0..p).map(|j| QuadraticOperator::new(DMatrix::from_fn(p, p, |s, t| m[(j, s)] * m[(j, t)].conj()))).collect()
}

/// The full set of per-setting operators for one party.
#[derive(Clone, Debug)]
pub struct PartyObservables {
    p: usize,
    settings: Vec<ModeUnitary>,
    numbers: Vec<Vec<QuadraticOperator>>,
    phases: Vec<QuadraticOperator>,
}

impl PartyObservables {
    pub fn new(p: usize) -> Result<Self> {
        let settings = build_mub(p)?;
        let numbers: Vec<_> = settings.iter().map(rotated_number_ops).collect();
        let phases = numbers
            .iter()
            .map(|ops| {
                let mut c = DMatrix::zeros(p, p);
                for (j, op) in ops.iter().enumerate() {
                    c += op.coeffs() * omega_pow(j as i64, p);
                }
                QuadraticOperator::new(c)
            })
            .collect();
        Ok(PartyObservables { p, settings, numbers, phases })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn settings(&self) -> &[ModeUnitary] {
        &self.settings
    }

    /// `n̂_j(m)` for all j.
    pub fn number_ops(&self, m: usize) -> &[QuadraticOperator] {
        &self.numbers[m]
    }

    /// `K_m = Σ_j ω^j n̂_j(m)`.
    pub fn phase_op(&self, m: usize) -> &QuadraticOperator {
        &self.phases[m]
    }

    /// Applies the statistic's operator(s) for setting `m`; rate statistics
    /// carry the `(1/N̂) Π` factor.
    fn apply(&self, state: &StateVector, m: usize, obs: Observable) -> Vec<StateVector> {
        let rate = matches!(obs, Observable::RatePhasor | Observable::RateComponents);
        let scaled;
        let input = if rate {
            scaled = inv_number(state);
            &scaled
        } else {
            state
        };
        let ops: Vec<&QuadraticOperator> = match obs {
            Observable::RatePhasor | Observable::IntensityPhasor => vec![&self.phases[m]],
            Observable::NumberComponents | Observable::RateComponents => self.numbers[m].iter().collect(),
        };
        ops.into_iter().map(|op| input.apply_quadratic(op, Party::A).expect("dimension checked")).collect()
    }

    /// `⟨x⟩` and `⟨x†x⟩` of the statistic, per setting.
    pub(crate) fn stat_moments(&self, state: &StateVector, obs: Observable) -> Vec<StatMoments> {
        (0..=self.p)
            .map(|m| {
                let images = self.apply(state, m, obs);
                StatMoments {
                    mean: images.iter().map(|v| state.inner(v)).collect(),
                    mean_sq: images.iter().map(|v| v.norm_sqr()).sum(),
                }
            })
            .collect()
    }

    /// Expectation values `⟨x⟩` of the statistic for each setting.
    pub fn means(&self, state: &StateVector, obs: Observable) -> Vec<Vec<C64>> {
        self.stat_moments(state, obs).into_iter().map(|s| s.mean).collect()
    }
}

/// `(1/N̂) Π |ψ⟩`.
fn inv_number(state: &StateVector) -> StateVector {
    state.scale_by_number(Party::A, |n| if n == 0 { 0.0 } else { 1.0 / n as f64 })
}

fn require_single(state: &StateVector, p: usize) -> Result<()> {
    if state.is_bipartite() {
        return Err(Error::NotSingleParty);
    }
    if state.modes() != p {
        return Err(Error::DimensionMismatch { expected: p, found: state.modes() });
    }
    Ok(())
}

/// Operator moments of one side of a product state, for a given statistic.
#[derive(Clone, Debug)]
pub struct SideOperatorMoments {
    pub(crate) per_setting: Vec<StatMoments>,
    pub numbers: NumberMoments,
}

impl SideOperatorMoments {
    pub fn new(obs_set: &PartyObservables, state: &StateVector, obs: Observable) -> Result<Self> {
        require_single(state, obs_set.p)?;
        let mut numbers = NumberMoments::default();
        for ((a, _), amp) in state.iter() {
            let n = a.total();
            let w = amp.norm_sqr();
            if n > 0 {
                numbers.p_nonzero += w;
                numbers.mean_n += w * n as f64;
                numbers.mean_inv_n += w / n as f64;
            }
        }
        Ok(SideOperatorMoments { per_setting: obs_set.stat_moments(state, obs), numbers })
    }

    /// `Σ_m ⟨|x_{m,A} − x_{m,B}|²⟩` on the product of the two sides.
    pub fn product_deficit(a: &SideOperatorMoments, b: &SideOperatorMoments) -> f64 {
        a.per_setting.iter().zip(&b.per_setting).map(|(x, y)| StatMoments::deficit(x, y)).sum()
    }
}

/// Maximum entry deviation between `Σ_{m=0}^{p} R_m† R_m` and its closed
/// form on the non-vacuum space up to `cutoff` photons.
///
/// For p = 3 the closed form is `Π + 3Π/N̂`. For other primes it is the
/// diagonal `[Σ_i n_i² + Σ_{i≠j} ω^{i−j} n_i n_j + p Σ_i n_i n_{i+1} + p N̂] / N̂²`.
pub fn identity_check_appa(p: usize, cutoff: usize) -> Result<f64> {
    let obs = PartyObservables::new(p)?;
    let mut worst: f64 = 0.0;
    for n in 1..=cutoff {
        let basis = enumerate_basis(p, n);
        let index: BTreeMap<_, _> = basis.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        let d = basis.len();
        let mut lhs = DMatrix::<C64>::zeros(d, d);
        for m in 0..=p {
            let mut k = DMatrix::<C64>::zeros(d, d);
            for (col, occ) in basis.iter().enumerate() {
                let v = StateVector::from_amplitudes(p, cutoff, [(occ.clone(), C64::new(1.0, 0.0))]);
                for ((o, _), amp) in v.apply_quadratic(obs.phase_op(m), Party::A)?.iter() {
                    k[(index[o], col)] += amp;
                }
            }
            lhs += k.adjoint() * &k;
        }
        lhs /= C64::new((n * n) as f64, 0.0);
        for (i, occ) in basis.iter().enumerate() {
            let diag = if p == 3 { 1.0 + 3.0 / n as f64 } else { general_diagonal(occ.counts(), p) };
            for j in 0..d {
                let target = if i == j { diag } else { 0.0 };
                worst = worst.max((lhs[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
    }
    Ok(worst)
}

fn general_diagonal(counts: &[u32], p: usize) -> f64 {
    let n: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let total: f64 = n.iter().sum();
    let mut acc: f64 = n.iter().map(|x| x * x).sum();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                acc += omega_pow(i as i64 - j as i64, p).re * n[i] * n[j];
            }
        }
        acc += p as f64 * n[i] * n[(i + 1) % p];
    }
    acc += p as f64 * total;
    acc / (total * total)
}

/// `Σ_m |⟨R_m⟩|²` for one normalized single-party state.
pub fn phase_rate_bound_value(obs: &PartyObservables, state: &StateVector) -> Result<f64> {
    require_single(state, obs.p)?;
    Ok(obs.means(state, Observable::RatePhasor).iter().map(|v| v[0].norm_sqr()).sum())
}

/// Largest `Σ_{m=0}^{3} |⟨R_m⟩|²` over `samples` random pure states (p = 3).
pub fn bound_check_appb(p: usize, samples: usize, cutoff: usize, seed: u64, mode: Parallelism) -> Result<f64> {
    if p != 3 {
        return Err(Error::InvalidParameter(format!("the R_m complementarity bound is stated for p = 3, got {p}")));
    }
    let obs = PartyObservables::new(p)?;
    let values = map_range(samples, mode, |i| {
        let mut rng = super::sampler::sample_rng(seed, i as u64);
        let state = super::sampler::random_family_state(&mut rng, p, cutoff, i);
        phase_rate_bound_value(&obs, &state).expect("single-party state")
    });
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Complementarity {
    /// `Σ_{m=0}^{p} Σ_j ⟨r̂_j(m)⟩²`, bounded by 2.
    pub rate_sum: f64,
    /// `Σ_{m=0}^{p} Σ_j ⟨n̂_j(m)⟩²`.
    pub intensity_sum: f64,
    /// `2⟨N̂⟩²`, the bound on `intensity_sum`.
    pub intensity_bound: f64,
}

pub fn complementarity_rates(state: &StateVector, p: usize) -> Result<Complementarity> {
    let obs = PartyObservables::new(p)?;
    complementarity_with(&obs, state)
}

pub(crate) fn complementarity_with(obs: &PartyObservables, state: &StateVector) -> Result<Complementarity> {
    require_single(state, obs.p)?;
    let sum_sq =
        |o: Observable| -> f64 { obs.means(state, o).iter().flat_map(|v| v.iter().map(|z| z.re * z.re)).sum() };
    let n = state.mean_number(Party::A);
    Ok(Complementarity {
        rate_sum: sum_sq(Observable::RateComponents),
        intensity_sum: sum_sq(Observable::NumberComponents),
        intensity_bound: 2.0 * n * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expect_quadratic, truncated_basis, Occupation};
    use crate::linop::transform_state;
    use approx::assert_relative_eq;

    #[test]
    fn rotated_ops_examples() {
        let id = ModeUnitary::new(3, 3).unwrap();
        for (j, op) in rotated_number_ops(&id).iter().enumerate() {
            assert_eq!(op, &QuadraticOperator::mode_number(3, j));
        }
        for p in [2, 3, 5, 7] {
            for u in build_mub(p).unwrap() {
                let ops = rotated_number_ops(&u);
                let mut sum = DMatrix::<C64>::zeros(p, p);
                for op in &ops {
                    // rank-1 projector: C² = C, trace 1
                    let c = op.coeffs();
                    assert!((c * c - c).iter().all(|z| z.norm() < 1e-12));
                    assert_relative_eq!(c.trace().re, 1.0, epsilon = 1e-12);
                    sum += c;
                }
                assert!((sum - DMatrix::identity(p, p)).iter().all(|z| z.norm() < 1e-12));
            }
        }
        let s = StateVector::fock(&[1, 0, 0]);
        for u in build_mub(3).unwrap().iter().take(3) {
            for op in rotated_number_ops(u) {
                assert_relative_eq!(expect_quadratic(&s, &op).unwrap().re, 1.0 / 3.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn heisenberg_and_schrodinger_pictures_agree() {
        let mut rng = crate::witness::sampler::sample_rng(11, 0);
        for p in [2, 3] {
            for _ in 0..5 {
                let s = crate::witness::random_state(&mut rng, p, 4, 0);
                for u in build_mub(p).unwrap() {
                    let moved = transform_state(&s, &u).unwrap();
                    for (j, op) in rotated_number_ops(&u).iter().enumerate() {
                        let heis = expect_quadratic(&s, op).unwrap().re;
                        let schr = expect_quadratic(&moved, &QuadraticOperator::mode_number(p, j)).unwrap().re;
                        assert!((heis - schr).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn identity_small_sectors() {
        // N = 1 block eigenvalue 4, N = 2 block 2.5
        assert!(identity_check_appa(3, 2).unwrap() < 1e-12);
        for (counts, want) in [([1u32, 0, 0], 4.0), ([1, 1, 0], 2.5)] {
            let o = Occupation::from(counts);
            assert_relative_eq!(general_diagonal(o.counts(), 3), want, epsilon = 1e-12);
        }
        for occ in truncated_basis(3, 1, 6) {
            assert_relative_eq!(general_diagonal(occ.counts(), 3), 1.0 + 3.0 / occ.total() as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_other_primes() {
        // p = 2 reduces to Π + 2Π/N̂
        for occ in truncated_basis(2, 1, 5) {
            assert_relative_eq!(general_diagonal(occ.counts(), 2), 1.0 + 2.0 / occ.total() as f64, epsilon = 1e-12);
        }
        assert!(identity_check_appa(2, 6).unwrap() < 1e-10);
        assert!(identity_check_appa(5, 4).unwrap() < 1e-10);
    }

    #[test]
    fn bound_examples() {
        let obs = PartyObservables::new(3).unwrap();
        assert_relative_eq!(
            phase_rate_bound_value(&obs, &StateVector::fock(&[1, 0, 0])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(phase_rate_bound_value(&obs, &StateVector::vacuum(3, 2)).unwrap(), 0.0);
        assert!(bound_check_appb(3, 200, 3, 7, Parallelism::Parallel).unwrap() <= 1.0 + 1e-10);
        assert!(bound_check_appb(5, 10, 3, 7, Parallelism::Parallel).is_err());
    }

    #[test]
    fn complementarity_saturation() {
        for p in [2, 3, 5] {
            for n in 1..=3u32 {
                let mut counts = vec![0u32; p];
                counts[1] = n;
                let c = complementarity_rates(&StateVector::fock(&counts), p).unwrap();
                assert_relative_eq!(c.rate_sum, 2.0, epsilon = 1e-10);
                assert_relative_eq!(c.intensity_sum, c.intensity_bound, epsilon = 1e-10);
            }
            let c = complementarity_rates(&StateVector::vacuum(p, 2), p).unwrap();
            assert_eq!(c.rate_sum, 0.0);
        }
    }
}
