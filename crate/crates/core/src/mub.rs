//! Mutually unbiased multiport transformations for prime mode counts and
//! the clock/shift operators that generate them.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Trial-division primality test.
pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn require_prime(p: usize) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// `ω^k` with `ω = exp(2πi/p)`; the exponent is reduced mod p first.
pub fn omega_pow(k: i64, p: usize) -> C64 {
    let r = k.rem_euclid(p as i64);
    C64::from_polar(1.0, TAU * r as f64 / p as f64)
}

/// One multiport setting. For `m < p` the entries are
/// `U_js = ω^{js + m s²} / √p`; `m = p` is the identity (number basis).
/// Output mode j is created by `a_j†(m) = Σ_s U_js a_s†`.
///
/// For p = 2 the quadratic phase is degenerate (`s² ≡ s mod 2`), so the
/// qubit setting uses `i^{2js + m s²} / √2` instead, giving the X and Y bases.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    p: usize,
    setting: usize,
    matrix: DMatrix<C64>,
}

impl ModeUnitary {
    pub fn new(p: usize, setting: usize) -> Result<Self> {
        require_prime(p)?;
        if setting > p {
            return Err(Error::InvalidSetting { setting, p });
        }
        let matrix = if setting == p {
            DMatrix::identity(p, p)
        } else {
            let norm = 1.0 / (p as f64).sqrt();
            let m = setting as i64;
            DMatrix::from_fn(p, p, |j, s| {
                let (j, s) = (j as i64, s as i64);
                if p == 2 {
                    omega_pow(2 * j * s + m * s * s, 4) * norm
                } else {
                    omega_pow(j * s + m * s * s, p) * norm
                }
            })
        };
        Ok(ModeUnitary { p, setting, matrix })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn setting(&self) -> usize {
        self.setting
    }

    pub fn is_identity_setting(&self) -> bool {
        self.setting == self.p
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `|φ_j(m)⟩` in the input basis, i.e. row j of the matrix.
    pub fn basis_vector(&self, j: usize) -> DVector<C64> {
        self.matrix.row(j).transpose()
    }

    /// `max |U†U − I|` over entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        max_dev_from_identity(&prod)
    }
}

fn max_dev_from_identity(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// All p+1 settings, `m = 0..p-1` followed by the identity `m = p`.
pub fn build_mub(p: usize) -> Result<Vec<ModeUnitary>> {
    require_prime(p)?;
    (0..=p).map(|m| ModeUnitary::new(p, m)).collect()
}

/// Bob's conjugate multiport for the same setting.
pub fn conjugate_pair(u: &ModeUnitary) -> ModeUnitary {
    ModeUnitary { p: u.p, setting: u.setting, matrix: u.matrix.map(|z| z.conj()) }
}

/// Result of certifying a full MUB set.
#[derive(Clone, Debug, Serialize)]
pub struct Certification {
    pub p: usize,
    pub max_unitarity_dev: f64,
    pub max_overlap_dev: f64,
    pub max_det_modulus_dev: f64,
}

impl Certification {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_unitarity_dev < tol && self.max_overlap_dev < tol && self.max_det_modulus_dev < tol
    }
}

/// Checks unitarity, `| |(U(m)U(m')†)_jk|² − 1/p |` for all `m ≠ m'`, and `|det U| = 1`.
pub fn certify(set: &[ModeUnitary]) -> Certification {
    let p = set.first().map(|u| u.p).unwrap_or(0);
    let inv_p = 1.0 / p as f64;
    let mut cert = Certification { p, max_unitarity_dev: 0.0, max_overlap_dev: 0.0, max_det_modulus_dev: 0.0 };
    for (i, u) in set.iter().enumerate() {
        cert.max_unitarity_dev = cert.max_unitarity_dev.max(u.unitarity_deviation());
        let det = u.matrix.clone().determinant();
        cert.max_det_modulus_dev = cert.max_det_modulus_dev.max((det.norm() - 1.0).abs());
        for v in &set[i + 1..] {
            let prod = &u.matrix * v.matrix.adjoint();
            for z in prod.iter() {
                cert.max_overlap_dev = cert.max_overlap_dev.max((z.norm_sqr() - inv_p).abs());
            }
        }
    }
    cert
}

/// Clock `Z`, shift `X` and the p+1 unitary observables
/// `M_k = ω^k X Z^{-2k}` (k < p) and `M_p = Z`. For p = 2 the unbiased pair is
/// `X` and `iXZ` (= Y), matching the qubit multiport settings.
#[derive(Clone, Debug)]
pub struct GeneralizedPauli {
    pub p: usize,
    pub z: DMatrix<C64>,
    pub x: DMatrix<C64>,
    pub observables: Vec<DMatrix<C64>>,
}

pub fn build_pauli(p: usize) -> Result<GeneralizedPauli> {
    require_prime(p)?;
    let z = clock(p, 1);
    let x = DMatrix::from_fn(p, p, |i, j| if j == (i + 1) % p { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let mut observables: Vec<_> = if p == 2 {
        vec![x.clone(), &x * &z * C64::new(0.0, 1.0)]
    } else {
        (0..p).map(|k| &x * clock(p, -2 * k as i64) * omega_pow(k as i64, p)).collect()
    };
    observables.push(z.clone());
    Ok(GeneralizedPauli { p, z, x, observables })
}

/// `Z^e`.
pub fn clock(p: usize, e: i64) -> DMatrix<C64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { omega_pow(e * i as i64, p) } else { C64::new(0.0, 0.0) })
}

/// `Σ_j ω^j |φ_j(m)⟩⟨φ_j(m)|` assembled from a multiport setting.
pub fn phase_observable(u: &ModeUnitary) -> DMatrix<C64> {
    let p = u.p;
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let phi = u.basis_vector(j);
        out += (&phi * phi.adjoint()) * omega_pow(j as i64, p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn primality() {
        let primes: Vec<usize> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(build_mub(4).unwrap_err(), Error::NotPrime(4));
        assert_eq!(build_mub(1).unwrap_err(), Error::NotPrime(1));
        assert!(build_pauli(6).is_err());
    }

    #[test]
    fn first_entry_p3() {
        let set = build_mub(3).unwrap();
        assert_eq!(set.len(), 4);
        assert_relative_eq!(set[0].matrix()[(0, 0)].re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert!(set[3].is_identity_setting());
    }

    #[test]
    fn p2_is_hadamard() {
        let u = ModeUnitary::new(2, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want =
            DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.), C64::new(h, 0.), C64::new(h, 0.), C64::new(-h, 0.)]);
        assert!(max_diff(u.matrix(), &want) < 1e-15);
    }

    #[test]
    fn p5_pairwise_unbiased_by_direct_products() {
        let set = build_mub(5).unwrap();
        assert_eq!(set.len(), 6);
        for a in 0..6 {
            for b in 0..6 {
                if a == b {
                    continue;
                }
                let prod = set[a].matrix() * set[b].matrix().adjoint();
                for z in prod.iter() {
                    assert!((z.norm_sqr() - 0.2).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn certification_for_small_primes() {
        for p in [2, 3, 5, 7, 11, 13] {
            let cert = certify(&build_mub(p).unwrap());
            assert!(cert.passes(1e-12), "{cert:?}");
        }
    }

    #[test]
    fn pauli_basics() {
        let g = build_pauli(3).unwrap();
        for j in 0..3 {
            assert!((g.z[(j, j)] - omega_pow(j as i64, 3)).norm() < 1e-15);
        }
        let g2 = build_pauli(2).unwrap();
        let x = &g2.x;
        assert_eq!(x[(0, 1)], C64::new(1., 0.));
        assert_eq!(x[(1, 0)], C64::new(1., 0.));
        assert!(max_diff(&(x * x), &DMatrix::identity(2, 2)) < 1e-15);
        for p in [2, 3, 5, 7] {
            let g = build_pauli(p).unwrap();
            for m in &g.observables {
                assert!(max_diff(&(m.adjoint() * m), &DMatrix::identity(p, p)) < 1e-12);
                let mut pow = DMatrix::identity(p, p);
                for _ in 0..p {
                    pow = &pow * m;
                }
                assert!(max_diff(&pow, &DMatrix::identity(p, p)) < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_eigenbases_are_the_multiport_bases() {
        for p in [2, 3, 5, 7] {
            let g = build_pauli(p).unwrap();
            for (k, m) in g.observables.iter().enumerate() {
                let u = ModeUnitary::new(p, k).unwrap();
                assert!(max_diff(m, &phase_observable(&u)) < 1e-12, "p={p} k={k}");
                for j in 0..p {
                    let phi = u.basis_vector(j);
                    let lhs = m * &phi;
                    let rhs = &phi * omega_pow(j as i64, p);
                    assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-12));
                }
            }
        }
        // M_0 eigenbasis against Z eigenbasis (standard basis)
        let u0 = ModeUnitary::new(3, 0).unwrap();
        for j in 0..3 {
            for s in 0..3 {
                assert!((u0.basis_vector(j)[s].norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_clock_families_are_permutations() {
        for p in [3, 5, 7, 11] {
            let g = build_pauli(p).unwrap();
            let a: Vec<_> = (0..p).map(|k| &g.x * clock(p, -2 * k as i64)).collect();
            let b: Vec<_> = (0..p).map(|k| &g.x * clock(p, k as i64)).collect();
            let mut used = vec![false; p];
            for m in &a {
                let hit = b.iter().position(|n| max_diff(m, n) < 1e-12).expect("member");
                assert!(!used[hit]);
                used[hit] = true;
            }
        }
    }

    #[test]
    fn conjugation() {
        let id = ModeUnitary::new(3, 3).unwrap();
        assert_eq!(conjugate_pair(&id), id);
        let u = ModeUnitary::new(3, 0).unwrap();
        let c = conjugate_pair(&u);
        for j in 0..3 {
            for s in 0..3 {
                let want = omega_pow(-((j * s) as i64), 3) / 3f64.sqrt();
                assert!((c.matrix()[(j, s)] - want).norm() < 1e-15);
            }
        }
        for m in 0..=5 {
            let u = ModeUnitary::new(5, m).unwrap();
            assert_eq!(conjugate_pair(&conjugate_pair(&u)), u);
        }
    }
}
