//! Bright squeezed vacuum for p mode pairs, truncated at a photon cutoff.
//!
//! The state is the product of p two-mode squeezed vacua over the
//! `(a_i, b_i)` pairs. Its n-photon sector is the uniform superposition over
//! all compositions of n with identical occupations on both sides, weighted by
//! `tanh^n Γ`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_basis, StateVector, DEFAULT_CUTOFF};
use crate::mub::require_prime;

/// Gain Γ (squeezing parameter).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct GainParameter(f64);

impl GainParameter {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma >= 0.0 {
            Ok(GainParameter(gamma))
        } else {
            Err(Error::InvalidGain(gamma))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `tanh² Γ`, the sector-to-sector probability ratio per mode pair.
    pub fn tanh_sq(self) -> f64 {
        self.0.tanh().powi(2)
    }
}

/// How the photon-number sectors are mixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `P_n ∝ C(n+p−1, p−1) tanh^{2n} Γ`, the squared sector norms of the state.
    #[default]
    StateNorm,
    /// `P_n ∝ 2/((n+1)(n+2)) tanh^{2n} Γ`, the mixing weights as printed in
    /// the loss analysis for three mode pairs (the combinatorial factor is
    /// inverted rather than applied; p = 3 only in the original, generalized
    /// here as `1/C(n+p−1, p−1)`).
    LiteralAppendixC,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::StateNorm => "state-norm",
            Weighting::LiteralAppendixC => "literal-appendix-c",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state-norm" => Ok(Weighting::StateNorm),
            "literal-appendix-c" => Ok(Weighting::LiteralAppendixC),
            other => Err(Error::InvalidParameter(format!("unknown weighting {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsvSpec {
    pub p: usize,
    pub gain: GainParameter,
    pub cutoff: usize,
    /// Project out the vacuum on both sides before normalizing.
    pub renormalized: bool,
    pub weighting: Weighting,
}

impl BsvSpec {
    pub fn new(p: usize, gamma: f64) -> Result<Self> {
        let spec = BsvSpec {
            p,
            gain: GainParameter::new(gamma)?,
            cutoff: DEFAULT_CUTOFF,
            renormalized: false,
            weighting: Weighting::StateNorm,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn renormalized(mut self, on: bool) -> Self {
        self.renormalized = on;
        self
    }

    pub fn with_weighting(mut self, w: Weighting) -> Self {
        self.weighting = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_prime(self.p)?;
        if self.renormalized && self.cutoff < 1 {
            return Err(Error::InvalidParameter("renormalized state needs cutoff >= 1".into()));
        }
        Ok(())
    }

    fn first_sector(&self) -> usize {
        usize::from(self.renormalized)
    }

    /// Untruncated probability mass above the cutoff, `1 − Σ_{n≤cutoff} C(n+p−1,p−1) t^n (1−t)^p`.
    pub fn truncated_mass(&self) -> f64 {
        let t = self.gain.tanh_sq();
        let p = self.p;
        let kept: f64 = (0..=self.cutoff).map(|n| binomial(n + p - 1, p - 1) * t.powi(n as i32)).sum::<f64>()
            * (1.0 - t).powi(p as i32);
        (1.0 - kept).max(0.0)
    }
}

/// Normalized sector probabilities `(n, P_n)` for `n` from 0 (or 1 when
/// renormalized) to the cutoff.
pub fn sector_weights(spec: &BsvSpec) -> Vec<(usize, f64)> {
    let t = spec.gain.tanh_sq();
    let p = spec.p;
    let raw: Vec<(usize, f64)> = (spec.first_sector()..=spec.cutoff)
        .map(|n| {
            let count = binomial(n + p - 1, p - 1);
            let comb = match spec.weighting {
                Weighting::StateNorm => count,
                Weighting::LiteralAppendixC => 1.0 / count,
            };
            (n, comb * t.powi(n as i32))
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    if total > 0.0 {
        raw.into_iter().map(|(n, w)| (n, w / total)).collect()
    } else {
        // Γ = 0 with the vacuum projected out: the lowest kept sector is the limit Γ → 0⁺
        raw.into_iter().enumerate().map(|(i, (n, _))| (n, if i == 0 { 1.0 } else { 0.0 })).collect()
    }
}

/// The truncated (and optionally vacuum-projected) state, normalized.
pub fn build_bsv(spec: &BsvSpec) -> Result<StateVector> {
    spec.validate()?;
    let t = spec.gain.value().tanh();
    let lowest_only = spec.renormalized && t == 0.0;
    let mut state = StateVector::bipartite(spec.p, spec.cutoff);
    for n in spec.first_sector()..=spec.cutoff {
        let amp = if lowest_only {
            if n == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            t.powi(n as i32)
        };
        if amp == 0.0 {
            continue;
        }
        for occ in enumerate_basis(spec.p, n) {
            state.add(occ.clone(), occ, C64::new(amp, 0.0));
        }
    }
    state.normalize()
}
