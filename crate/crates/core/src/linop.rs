//! Exact linear-optics transformation of truncated Fock states.
//!
//! Each component `Π_s (a_s†)^{n_s} / √(n_s!) |Ω⟩` is rewritten in the output
//! modes of the multiport and the multinomial product is expanded term by
//! term. This is slow on purpose: it is the reference the symmetry shortcuts
//! in [`crate::witness`] are checked against.
//!
//! Direction: with `a_j†(out) = Σ_s U_js a_s†`, an input creation operator is
//! `a_s† = Σ_j conj(U_js) a_j†(out)`. Occupation expectations of the
//! transformed state therefore equal `⟨n̂_j(m)⟩` from
//! [`crate::witness::rotated_number_ops`] on the original state.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{Occupation, StateVector};
use crate::mub::ModeUnitary;

/// Largest photon number per party the expansion accepts.
pub const EXPANSION_GUARD: usize = 8;

/// Fixed-N transformation bookkeeping for one multiport.
#[derive(Clone, Debug)]
pub struct TransformPlan<'a> {
    unitary: &'a ModeUnitary,
    cache: BTreeMap<Occupation, Vec<(Occupation, C64)>>,
}

impl<'a> TransformPlan<'a> {
    pub fn new(unitary: &'a ModeUnitary) -> Self {
        TransformPlan { unitary, cache: BTreeMap::new() }
    }

    pub fn unitary(&self) -> &ModeUnitary {
        self.unitary
    }

    /// Image of one occupation basis vector, as sorted (output occupation, amplitude) pairs.
    pub fn image(&mut self, occ: &Occupation) -> Result<&[(Occupation, C64)]> {
        if !self.cache.contains_key(occ) {
            let img = expand_occupation(occ, self.unitary)?;
            self.cache.insert(occ.clone(), img);
        }
        Ok(&self.cache[occ])
    }

    /// Dense matrix of the transformation on the fixed-N sector
    /// (columns: inputs, rows: outputs, both in `enumerate_basis` order).
    pub fn sector_matrix(&mut self, n: usize) -> Result<nalgebra::DMatrix<C64>> {
        let basis = crate::fock::enumerate_basis(self.unitary.p(), n);
        let index: BTreeMap<_, _> = basis.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        let mut m = nalgebra::DMatrix::zeros(basis.len(), basis.len());
        for (col, occ) in basis.iter().enumerate() {
            for (out, amp) in self.image(occ)? {
                m[(index[out], col)] = *amp;
            }
        }
        Ok(m)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn expand_occupation(occ: &Occupation, u: &ModeUnitary) -> Result<Vec<(Occupation, C64)>> {
    let p = u.p();
    if occ.modes() != p {
        return Err(Error::DimensionMismatch { expected: p, found: occ.modes() });
    }
    let n = occ.total();
    if n > EXPANSION_GUARD {
        return Err(Error::ExpansionGuard { found: n, guard: EXPANSION_GUARD });
    }
    let mat = u.matrix();
    // polynomial in output creation operators, keyed by exponent vector
    let mut poly: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
    poly.insert(vec![0; p], C64::new(1.0, 0.0));
    for s in 0..p {
        for _ in 0..occ.get(s) {
            let mut next = BTreeMap::new();
            for (exp, coef) in &poly {
                for j in 0..p {
                    let c = mat[(j, s)].conj();
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let mut e = exp.clone();
                    e[j] += 1;
                    *next.entry(e).or_insert(C64::new(0.0, 0.0)) += coef * c;
                }
            }
            poly = next;
        }
    }
    let input_norm: f64 = occ.counts().iter().map(|&k| factorial(k)).product::<f64>().sqrt();
    Ok(poly
        .into_iter()
        .map(|(exp, coef)| {
            let out_norm: f64 = exp.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            (Occupation::new(exp), coef * out_norm / input_norm)
        })
        .collect())
}

/// Transforms a single-party state through the multiport `u`.
pub fn transform_state(state: &StateVector, u: &ModeUnitary) -> Result<StateVector> {
    if state.is_bipartite() {
        return Err(Error::NotSingleParty);
    }
    let mut plan = TransformPlan::new(u);
    let mut out = BTreeMap::new();
    for ((a, b), amp) in state.iter() {
        for (o, c) in plan.image(a)? {
            *out.entry((o.clone(), b.clone())).or_insert(C64::new(0.0, 0.0)) += amp * c;
        }
    }
    Ok(StateVector::from_parts(state.modes(), state.cutoff(), false, out))
}

/// Applies `u_a` on Alice's modes and `u_b` on Bob's.
pub fn joint_transform(state: &StateVector, u_a: &ModeUnitary, u_b: &ModeUnitary) -> Result<StateVector> {
    if !state.is_bipartite() {
        return Err(Error::NotBipartite);
    }
    let mut plan_a = TransformPlan::new(u_a);
    let mut plan_b = TransformPlan::new(u_b);
    let mut out = BTreeMap::new();
    for ((a, b), amp) in state.iter() {
        let img_a = plan_a.image(a)?.to_vec();
        let img_b = plan_b.image(b)?;
        for (oa, ca) in &img_a {
            for (ob, cb) in img_b {
                *out.entry((oa.clone(), ob.clone())).or_insert(C64::new(0.0, 0.0)) += amp * ca * cb;
            }
        }
    }
    Ok(StateVector::from_parts(state.modes(), state.cutoff(), true, out))
}
