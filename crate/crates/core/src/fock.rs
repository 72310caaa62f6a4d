//! Truncated Fock spaces: occupation labels, sparse state vectors and
//! quadratic (`a_s† a_t`) operators.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default photon-number cutoff per party.
pub const DEFAULT_CUTOFF: usize = 10;

/// Photons per mode for one party. Ordering is lexicographic on the counts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    /// Zero-length label used for the absent B part of single-party states.
    pub fn empty() -> Self {
        Occupation(Vec::new())
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    fn shifted(&self, lower: usize, raise: usize) -> Occupation {
        let mut c = self.0.clone();
        c[lower] -= 1;
        c[raise] += 1;
        Occupation(c)
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl From<&[u32]> for Occupation {
    fn from(c: &[u32]) -> Self {
        Occupation(c.to_vec())
    }
}

impl<const K: usize> From<[u32; K]> for Occupation {
    fn from(c: [u32; K]) -> Self {
        Occupation(c.to_vec())
    }
}

/// All compositions of `n` photons into `p` modes, lexicographically ascending.
pub fn enumerate_basis(p: usize, n: usize) -> Vec<Occupation> {
    assert!(p >= 1, "need at least one mode");
    let mut out = Vec::with_capacity(binomial(n + p - 1, p - 1) as usize);
    let mut current = vec![0u32; p];
    fill_compositions(&mut current, 0, n, &mut out);
    out
}

fn fill_compositions(cur: &mut Vec<u32>, idx: usize, left: usize, out: &mut Vec<Occupation>) {
    if idx + 1 == cur.len() {
        cur[idx] = left as u32;
        out.push(Occupation(cur.clone()));
        return;
    }
    for k in 0..=left {
        cur[idx] = k as u32;
        fill_compositions(cur, idx + 1, left - k, out);
    }
}

/// Every occupation with total photon number in `min_total..=cutoff`,
/// grouped by total and lexicographic within a group.
pub fn truncated_basis(p: usize, min_total: usize, cutoff: usize) -> Vec<Occupation> {
    (min_total..=cutoff).flat_map(|n| enumerate_basis(p, n)).collect()
}

/// Binomial coefficient in floating point (multiplicative recurrence).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Which tensor factor an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

pub type Key = (Occupation, Occupation);

/// Sparse amplitudes over (A, B) occupation pairs. Single-party states keep
/// an empty B label on every key.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    modes: usize,
    cutoff: usize,
    bipartite: bool,
    amplitudes: BTreeMap<Key, C64>,
}

impl StateVector {
    pub fn single_party(modes: usize, cutoff: usize) -> Self {
        StateVector { modes, cutoff, bipartite: false, amplitudes: BTreeMap::new() }
    }

    pub fn bipartite(modes: usize, cutoff: usize) -> Self {
        StateVector { modes, cutoff, bipartite: true, amplitudes: BTreeMap::new() }
    }

    /// Normalized single-party Fock state.
    pub fn fock(counts: &[u32]) -> Self {
        let occ = Occupation::from(counts);
        let mut s = StateVector::single_party(counts.len(), occ.total().max(1));
        s.add(occ, Occupation::empty(), C64::new(1.0, 0.0));
        s
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Self {
        let mut s = StateVector::single_party(modes, cutoff);
        s.add(Occupation::vacuum(modes), Occupation::empty(), C64::new(1.0, 0.0));
        s
    }

    /// Builds a single-party state from (occupation, amplitude) pairs.
    pub fn from_amplitudes<I>(modes: usize, cutoff: usize, iter: I) -> Self
    where
        I: IntoIterator<Item = (Occupation, C64)>,
    {
        let mut s = StateVector::single_party(modes, cutoff);
        for (o, a) in iter {
            s.add(o, Occupation::empty(), a);
        }
        s
    }

    /// Accumulates `amp` onto the `(a, b)` component.
    pub fn add(&mut self, a: Occupation, b: Occupation, amp: C64) {
        debug_assert_eq!(a.modes(), self.modes);
        debug_assert_eq!(b.modes(), if self.bipartite { self.modes } else { 0 });
        debug_assert!(a.total() <= self.cutoff && b.total() <= self.cutoff);
        *self.amplitudes.entry((a, b)).or_insert(C64::new(0.0, 0.0)) += amp;
    }

    /// Raises the recorded cutoff (the support is unchanged).
    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        assert!(cutoff >= self.cutoff, "cutoff can only be raised");
        self.cutoff = cutoff;
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &C64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, a: &Occupation, b: &Occupation) -> C64 {
        self.amplitudes.get(&(a.clone(), b.clone())).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Single-party amplitude lookup.
    pub fn amp(&self, a: &Occupation) -> C64 {
        self.amplitude(a, &Occupation::empty())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n.is_nan() || n <= 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for a in self.amplitudes.values_mut() {
            *a /= n;
        }
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b)).sum()
    }

    /// Largest component-wise amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        let zero = C64::new(0.0, 0.0);
        let mut worst: f64 = 0.0;
        for (k, a) in &self.amplitudes {
            worst = worst.max((a - other.amplitudes.get(k).unwrap_or(&zero)).norm());
        }
        for (k, b) in &other.amplitudes {
            if !self.amplitudes.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Drops components whose modulus is below `eps`.
    pub fn pruned(mut self, eps: f64) -> Self {
        self.amplitudes.retain(|_, a| a.norm() >= eps);
        self
    }

    /// Vacuum projection: `Π` for one party, `Π_A ⊗ Π_B` for two. Not renormalized.
    pub fn project_out_vacuum(&self) -> StateVector {
        let mut out = self.empty_like();
        for ((a, b), amp) in &self.amplitudes {
            if a.is_vacuum() || (self.bipartite && b.is_vacuum()) {
                continue;
            }
            out.amplitudes.insert((a.clone(), b.clone()), *amp);
        }
        out
    }

    /// `⟨N̂⟩` on the chosen party (unnormalized states are weighted as-is).
    pub fn mean_number(&self, party: Party) -> f64 {
        self.amplitudes
            .iter()
            .map(|((a, b), amp)| {
                let n = match party {
                    Party::A => a.total(),
                    Party::B => b.total(),
                };
                n as f64 * amp.norm_sqr()
            })
            .sum()
    }

    pub(crate) fn empty_like(&self) -> StateVector {
        StateVector { modes: self.modes, cutoff: self.cutoff, bipartite: self.bipartite, amplitudes: BTreeMap::new() }
    }

    pub(crate) fn from_parts(modes: usize, cutoff: usize, bipartite: bool, amplitudes: BTreeMap<Key, C64>) -> Self {
        StateVector { modes, cutoff, bipartite, amplitudes }
    }

    /// Applies `Σ C_st a_s† a_t` to one party. Photon number is conserved so
    /// the cutoff can never be exceeded.
    pub fn apply_quadratic(&self, op: &QuadraticOperator, party: Party) -> Result<StateVector> {
        if op.dim() != self.modes {
            return Err(Error::DimensionMismatch { expected: op.dim(), found: self.modes });
        }
        if party == Party::B && !self.bipartite {
            return Err(Error::NotBipartite);
        }
        let p = self.modes;
        let c = &op.coeffs;
        let mut out = self.empty_like();
        for ((a, b), amp) in &self.amplitudes {
            let occ = if party == Party::A { a } else { b };
            for t in 0..p {
                let nt = occ.get(t);
                if nt == 0 {
                    continue;
                }
                for s in 0..p {
                    let cst = c[(s, t)];
                    if cst == C64::new(0.0, 0.0) {
                        continue;
                    }
                    // a_t lowers n_t, then a_s† raises the lowered state's n_s.
                    let ms = if s == t { nt - 1 } else { occ.get(s) };
                    let factor = ((nt as f64) * ((ms + 1) as f64)).sqrt();
                    let target = occ.shifted(t, s);
                    let key = if party == Party::A { (target, b.clone()) } else { (a.clone(), target) };
                    debug_assert!(key.0.total() <= self.cutoff && key.1.total() <= self.cutoff);
                    *out.amplitudes.entry(key).or_insert(C64::new(0.0, 0.0)) += cst * amp * factor;
                }
            }
        }
        Ok(out)
    }

    /// Multiplies each component by `f(N_party)`; used for `1/N̂`-type diagonals.
    pub fn scale_by_number(&self, party: Party, f: impl Fn(usize) -> f64) -> StateVector {
        let mut out = self.empty_like();
        for ((a, b), amp) in &self.amplitudes {
            let n = if party == Party::A { a.total() } else { b.total() };
            let w = f(n);
            if w != 0.0 {
                out.amplitudes.insert((a.clone(), b.clone()), amp * w);
            }
        }
        out
    }
}

/// `Σ_{s,t} C_st a_s† a_t` on one party.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticOperator {
    coeffs: DMatrix<C64>,
}

impl QuadraticOperator {
    pub fn new(coeffs: DMatrix<C64>) -> Self {
        assert!(coeffs.is_square(), "coefficient matrix must be square");
        QuadraticOperator { coeffs }
    }

    /// `N̂`.
    pub fn total_number(p: usize) -> Self {
        QuadraticOperator::new(DMatrix::identity(p, p))
    }

    /// `n̂_j` in the input mode basis.
    pub fn mode_number(p: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(p, p);
        m[(j, j)] = C64::new(1.0, 0.0);
        QuadraticOperator::new(m)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    pub fn adjoint(&self) -> Self {
        QuadraticOperator::new(self.coeffs.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.coeffs - self.coeffs.adjoint()).iter().all(|z| z.norm() <= tol)
    }
}

fn require_single(state: &StateVector, op: &QuadraticOperator) -> Result<()> {
    if state.is_bipartite() {
        return Err(Error::NotSingleParty);
    }
    if op.dim() != state.modes() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: state.modes() });
    }
    Ok(())
}

/// `⟨ψ| Σ C_st a_s† a_t |ψ⟩` on a single-party state.
pub fn expect_quadratic(state: &StateVector, op: &QuadraticOperator) -> Result<C64> {
    require_single(state, op)?;
    let applied = state.apply_quadratic(op, Party::A)?;
    Ok(state.inner(&applied))
}

/// `⟨ψ| op1 · op2 |ψ⟩`, evaluated as `⟨op1† ψ | op2 ψ⟩`.
pub fn expect_quartic(state: &StateVector, op1: &QuadraticOperator, op2: &QuadraticOperator) -> Result<C64> {
    require_single(state, op1)?;
    require_single(state, op2)?;
    let right = state.apply_quadratic(op2, Party::A)?;
    let left = state.apply_quadratic(&op1.adjoint(), Party::A)?;
    Ok(left.inner(&right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(v: &[f64]) -> QuadraticOperator {
        let p = v.len();
        QuadraticOperator::new(DMatrix::from_fn(p, p, |i, j| if i == j { c(v[i]) } else { c(0.0) }))
    }

    #[test]
    fn basis_small_cases() {
        assert_eq!(enumerate_basis(3, 0), vec![Occupation::from([0, 0, 0])]);
        let two = enumerate_basis(3, 2);
        assert_eq!(two.len(), 6);
        assert!(two.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(two[0], Occupation::from([0, 0, 2]));
        assert_eq!(two[5], Occupation::from([2, 0, 0]));
    }

    #[test]
    fn basis_matches_brute_force() {
        // all 5-tuples with entries 0..=3 summing to 3
        let mut brute = Vec::new();
        for code in 0..4u32.pow(5) {
            let v: Vec<u32> = (0..5).map(|i| (code / 4u32.pow(4 - i)) % 4).collect();
            if v.iter().sum::<u32>() == 3 {
                brute.push(Occupation::new(v));
            }
        }
        brute.sort();
        assert_eq!(brute.len(), 35);
        assert_eq!(enumerate_basis(5, 3), brute);
    }

    #[test]
    fn three_mode_count_matches_triangular_numbers() {
        for n in 0..=DEFAULT_CUTOFF {
            assert_eq!(enumerate_basis(3, n).len(), (n + 1) * (n + 2) / 2);
        }
    }

    #[test]
    fn quadratic_examples() {
        let s = StateVector::fock(&[1, 0, 0]);
        assert_relative_eq!(expect_quadratic(&s, &diag(&[1., 1., 1.])).unwrap().re, 1.0);

        let s = StateVector::fock(&[2, 1, 0]);
        assert_relative_eq!(expect_quadratic(&s, &diag(&[1., 0., 0.])).unwrap().re, 2.0);

        // on the single-photon subspace a_s† a_t is |s⟩⟨t|; dense 3x3 oracle
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(
            3,
            1,
            [(Occupation::from([1, 0, 0]), c(h)), (Occupation::from([0, 1, 0]), c(h))],
        );
        let mut e01 = DMatrix::zeros(3, 3);
        e01[(0, 1)] = c(1.0);
        let psi = nalgebra::DVector::from_vec(vec![c(h), c(h), c(0.0)]);
        let dense = (psi.adjoint() * &e01 * &psi)[(0, 0)];
        let got = expect_quadratic(&s, &QuadraticOperator::new(e01)).unwrap();
        assert_relative_eq!(got.re, dense.re, epsilon = 1e-15);
        assert_relative_eq!(got.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn quartic_examples() {
        let n0 = diag(&[1., 0., 0.]);
        let tot = diag(&[1., 1., 1.]);
        assert_relative_eq!(expect_quartic(&StateVector::fock(&[1, 0, 0]), &n0, &n0).unwrap().re, 1.0);
        assert_relative_eq!(expect_quartic(&StateVector::fock(&[2, 0, 0]), &tot, &tot).unwrap().re, 4.0);

        let comps = enumerate_basis(3, 2);
        let amp = c(1.0 / (comps.len() as f64).sqrt());
        let s = StateVector::from_amplitudes(3, 2, comps.iter().cloned().map(|o| (o, amp)));
        let direct: f64 = comps.iter().map(|o| (o.get(0) as f64).powi(2)).sum::<f64>() / 6.0;
        let got = expect_quartic(&s, &n0, &n0).unwrap();
        // n₀ ∈ {2,1,1,0,0,0}: (4 + 1 + 1) / 6
        assert_relative_eq!(direct, 1.0, epsilon = 1e-15);
        assert_relative_eq!(got.re, 1.0, epsilon = 1e-12);
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let s = StateVector::fock(&[1, 0]);
        assert!(matches!(
            expect_quadratic(&s, &diag(&[1., 1., 1.])),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert_eq!(StateVector::single_party(2, 2).normalize(), Err(Error::ZeroNorm));
        let bi = StateVector::bipartite(2, 2);
        assert_eq!(expect_quadratic(&bi, &diag(&[1., 1.])), Err(Error::NotSingleParty));
    }

    #[test]
    fn quadratic_never_leaves_the_sector() {
        let comps = truncated_basis(3, 0, 4);
        let s = StateVector::from_amplitudes(3, 4, comps.iter().cloned().map(|o| (o, c(1.0))));
        let op = QuadraticOperator::new(DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64)));
        let out = s.apply_quadratic(&op, Party::A).unwrap();
        assert!(out.iter().all(|((a, _), _)| a.total() <= 4));
    }

    fn arb_state(p: usize, cutoff: usize) -> impl Strategy<Value = StateVector> {
        let basis = truncated_basis(p, 1, cutoff);
        let n = basis.len();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("nonzero", move |v| {
            StateVector::from_amplitudes(p, cutoff, basis.iter().cloned().zip(v.iter().map(|&(r, i)| C64::new(r, i))))
                .normalize()
                .ok()
        })
    }

    fn arb_matrix(p: usize) -> impl Strategy<Value = DMatrix<C64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), p * p)
            .prop_map(move |v| DMatrix::from_iterator(p, p, v.into_iter().map(|(r, i)| C64::new(r, i))))
    }

    proptest! {
        #[test]
        fn mode_numbers_sum_to_total(s in arb_state(3, 3)) {
            let total = expect_quadratic(&s, &QuadraticOperator::total_number(3)).unwrap().re;
            let parts: f64 = (0..3)
                .map(|j| expect_quadratic(&s, &QuadraticOperator::mode_number(3, j)).unwrap().re)
                .sum();
            prop_assert!((total - parts).abs() < 1e-12);
            prop_assert!(total >= 1.0 - 1e-12);
        }

        #[test]
        fn adjoint_conjugates_expectation(s in arb_state(3, 3), m in arb_matrix(3)) {
            let op = QuadraticOperator::new(m);
            let a = expect_quadratic(&s, &op).unwrap();
            let b = expect_quadratic(&s, &op.adjoint()).unwrap();
            prop_assert!((a.conj() - b).norm() < 1e-12);
        }

        #[test]
        fn psd_quartic_is_real_nonnegative(s in arb_state(3, 3), m in arb_matrix(3)) {
            // B†B is Hermitian PSD
            let op = QuadraticOperator::new(m.adjoint() * &m);
            prop_assert!(op.is_hermitian(1e-12));
            let v = expect_quartic(&s, &op, &op).unwrap();
            prop_assert!(v.im.abs() < 1e-10);
            prop_assert!(v.re >= -1e-10);
            let q = expect_quadratic(&s, &op).unwrap();
            prop_assert!(q.im.abs() < 1e-12);
        }
    }
}
