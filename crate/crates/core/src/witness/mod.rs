//! Observables and separability criteria.
//!
//! Four criteria are evaluated, each as `witness = lhs − rhs` with
//! `witness < 0` meaning the state is entangled:
//!
//! | kind           | lhs                                  | rhs                               |
//! |----------------|--------------------------------------|-----------------------------------|
//! | `rate-d3`      | `Σ_m ⟨|R_{m,A} − R_{m,B}|²⟩`          | `3(⟨Π/N_A⟩ + ⟨Π/N_B⟩)`            |
//! | `intensity-d3` | `Σ_m ⟨|K_{m,A} − K_{m,B}|²⟩`          | `3(⟨N_A⟩ + ⟨N_B⟩)`                |
//! | `number-p`     | `Σ_{m,j} ⟨(n_j^A(m) − n_j^B(m))²⟩`   | `(p−1)(⟨N_A⟩ + ⟨N_B⟩)`            |
//! | `rate-p`       | `Σ_{m,j} ⟨(r_j^A(m) − r_j^B(m))²⟩`   | `(p−1)(1/⟨N_A⟩ + 1/⟨N_B⟩)`        |
//!
//! The sums run over all p+1 settings. A criterion is one-sided: a
//! non-negative witness is inconclusive, never a separability certificate.

mod operators;
mod sampler;

pub use operators::{
    bound_check_appb, complementarity_rates, identity_check_appa, phase_rate_bound_value, rotated_number_ops,
    Complementarity, PartyObservables, SideOperatorMoments,
};
pub use sampler::{
    product_margin, random_product_sample, random_state, separable_sampler, truncated_coherent, KindSummary,
    SamplerReport,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bsv::{build_bsv, BsvSpec, Weighting};
use crate::error::{Error, Result};
use crate::fock::Occupation;
use crate::linop::joint_transform;
use crate::loss::{ideal_joint_distribution, thinned_components, Efficiency, OutcomeDistribution};
use crate::mub::{build_mub, conjugate_pair, omega_pow};
use crate::par::{map_slice, Parallelism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    RateD3,
    IntensityD3,
    NumberP,
    RateP,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 4] =
        [CriterionKind::RateD3, CriterionKind::IntensityD3, CriterionKind::NumberP, CriterionKind::RateP];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::RateD3 => "rate-d3",
            CriterionKind::IntensityD3 => "intensity-d3",
            CriterionKind::NumberP => "number-p",
            CriterionKind::RateP => "rate-p",
        }
    }

    pub fn requires_three_modes(self) -> bool {
        matches!(self, CriterionKind::RateD3 | CriterionKind::IntensityD3)
    }

    pub fn is_rate(self) -> bool {
        matches!(self, CriterionKind::RateD3 | CriterionKind::RateP)
    }

    /// Vacuum projection is on by default for the rate criteria only.
    pub fn default_renormalized(self) -> bool {
        self.is_rate()
    }

    pub fn observable(self) -> Observable {
        match self {
            CriterionKind::RateD3 => Observable::RatePhasor,
            CriterionKind::IntensityD3 => Observable::IntensityPhasor,
            CriterionKind::NumberP => Observable::NumberComponents,
            CriterionKind::RateP => Observable::RateComponents,
        }
    }

    pub fn check_modes(self, p: usize) -> Result<()> {
        if self.requires_three_modes() && p != 3 {
            return Err(Error::KindRequiresThreeModes { kind: self.as_str(), p });
        }
        Ok(())
    }

    /// Kinds that apply to `p` modes.
    pub fn applicable(p: usize) -> Vec<CriterionKind> {
        CriterionKind::ALL.into_iter().filter(|k| k.check_modes(p).is_ok()).collect()
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion {s:?}")))
    }
}

/// Per-outcome statistic measured behind one multiport setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// `R = Σ_j ω^j n_j / N`, 0 when nothing is detected.
    RatePhasor,
    /// `K = Σ_j ω^j n_j`.
    IntensityPhasor,
    /// `(n_0, …, n_{p−1})`.
    NumberComponents,
    /// `(n_0/N, …, n_{p−1}/N)`, all 0 when nothing is detected.
    RateComponents,
}

impl Observable {
    /// Value(s) of the statistic on a detected occupation.
    pub fn values(self, occ: &Occupation) -> Vec<C64> {
        let p = occ.modes();
        let n = occ.total();
        let scale = match self {
            Observable::RatePhasor | Observable::RateComponents => {
                if n == 0 {
                    0.0
                } else {
                    1.0 / n as f64
                }
            }
            _ => 1.0,
        };
        match self {
            Observable::RatePhasor | Observable::IntensityPhasor => {
                let z: C64 = (0..p).map(|j| omega_pow(j as i64, p) * occ.get(j) as f64).sum();
                vec![z * scale]
            }
            Observable::NumberComponents | Observable::RateComponents => {
                occ.counts().iter().map(|&k| C64::new(k as f64 * scale, 0.0)).collect()
            }
        }
    }
}

/// `E|x_A − x_B|²` summed over the statistic's components, for one setting,
/// on a materialized joint table.
pub fn setting_deficit(dist: &OutcomeDistribution, obs: Observable) -> f64 {
    dist.iter()
        .map(|((a, b), w)| {
            let xa = obs.values(a);
            let xb = obs.values(b);
            w * xa.iter().zip(&xb).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// LHS of `kind` on a table valid for every setting: `(p+1) ×` one setting.
pub fn epr_deficit(dist: &OutcomeDistribution, kind: CriterionKind) -> Result<f64> {
    kind.check_modes(dist.p())?;
    Ok((dist.p() + 1) as f64 * setting_deficit(dist, kind.observable()))
}

/// Rate-difference LHS: complex `R` statistic for p = 3, per-exit rates otherwise.
pub fn epr_deficit_rates(dist: &OutcomeDistribution) -> f64 {
    let obs = if dist.p() == 3 { Observable::RatePhasor } else { Observable::RateComponents };
    (dist.p() + 1) as f64 * setting_deficit(dist, obs)
}

/// Photon-number-difference LHS: complex `K` for p = 3, per-exit counts otherwise.
pub fn epr_deficit_numbers(dist: &OutcomeDistribution) -> f64 {
    let obs = if dist.p() == 3 { Observable::IntensityPhasor } else { Observable::NumberComponents };
    (dist.p() + 1) as f64 * setting_deficit(dist, obs)
}

/// Photon-number moments of one side's detected counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NumberMoments {
    /// Probability that at least one photon is detected.
    pub p_nonzero: f64,
    pub mean_n: f64,
    /// `E[1/N ; N > 0]`, i.e. `⟨Π 1/N̂ Π⟩`.
    pub mean_inv_n: f64,
}

impl NumberMoments {
    fn accumulate(&mut self, n: usize, w: f64) {
        if n > 0 {
            self.p_nonzero += w;
            self.mean_n += w * n as f64;
            self.mean_inv_n += w / n as f64;
        }
    }
}

pub fn marginal_moments(dist: &OutcomeDistribution) -> (NumberMoments, NumberMoments) {
    let mut a = NumberMoments::default();
    let mut b = NumberMoments::default();
    for ((oa, ob), &w) in dist.iter() {
        a.accumulate(oa.total(), w);
        b.accumulate(ob.total(), w);
    }
    (a, b)
}

/// Separable-state bound of `kind` from the two marginals, or `None` when a
/// side never registers a photon.
pub fn separable_rhs(kind: CriterionKind, p: usize, a: &NumberMoments, b: &NumberMoments) -> Option<f64> {
    if a.p_nonzero <= 0.0 || b.p_nonzero <= 0.0 {
        return None;
    }
    let pm1 = (p - 1) as f64;
    Some(match kind {
        CriterionKind::RateD3 => 3.0 * (a.mean_inv_n + b.mean_inv_n),
        CriterionKind::IntensityD3 => 3.0 * (a.mean_n + b.mean_n),
        CriterionKind::NumberP => pm1 * (a.mean_n + b.mean_n),
        CriterionKind::RateP => pm1 * (1.0 / a.mean_n + 1.0 / b.mean_n),
    })
}

/// Rate-criterion RHS on a table: `3(E[1/N_A] + E[1/N_B])` for p = 3,
/// `(p−1)(1/E[N_A] + 1/E[N_B])` otherwise.
pub fn separable_rhs_rates(dist: &OutcomeDistribution) -> Option<f64> {
    let (a, b) = marginal_moments(dist);
    let kind = if dist.p() == 3 { CriterionKind::RateD3 } else { CriterionKind::RateP };
    separable_rhs(kind, dist.p(), &a, &b)
}

/// First and second moments of a statistic on one side.
#[derive(Clone, Debug, Default)]
pub(crate) struct StatMoments {
    pub mean: Vec<C64>,
    pub mean_sq: f64,
}

impl StatMoments {
    fn from_law(law: &[(Occupation, f64)], obs: Observable) -> Self {
        let mut m = StatMoments::default();
        for (occ, w) in law {
            let v = obs.values(occ);
            if m.mean.is_empty() {
                m.mean = vec![C64::new(0.0, 0.0); v.len()];
            }
            for (acc, x) in m.mean.iter_mut().zip(&v) {
                *acc += x * w;
            }
            m.mean_sq += w * v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        }
        m
    }

    /// `E|x_A − x_B|²` for independent sides.
    pub fn deficit(a: &StatMoments, b: &StatMoments) -> f64 {
        let cross: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x * y.conj()).re).sum();
        a.mean_sq + b.mean_sq - 2.0 * cross
    }
}

/// One-setting deficit and marginal moments of the lossy BSV table,
/// computed from the factorized mixture (never materializing the joint table).
#[derive(Clone, Copy, Debug)]
pub struct LossyStatistics {
    pub setting_deficit: f64,
    pub alice: NumberMoments,
    pub bob: NumberMoments,
}

pub fn lossy_statistics(
    ideal: &OutcomeDistribution,
    eta: Efficiency,
    obs: Observable,
    mode: Parallelism,
) -> LossyStatistics {
    let comps = thinned_components(ideal, eta, mode);
    let parts = map_slice(&comps, mode, |c| {
        let ma = StatMoments::from_law(&c.alice, obs);
        let mb = StatMoments::from_law(&c.bob, obs);
        let mut na = NumberMoments::default();
        let mut nb = NumberMoments::default();
        for (o, w) in c.alice.iter() {
            na.accumulate(o.total(), c.weight * w);
        }
        for (o, w) in c.bob.iter() {
            nb.accumulate(o.total(), c.weight * w);
        }
        (c.weight * StatMoments::deficit(&ma, &mb), na, nb)
    });
    let mut out =
        LossyStatistics { setting_deficit: 0.0, alice: NumberMoments::default(), bob: NumberMoments::default() };
    for (d, na, nb) in parts {
        out.setting_deficit += d;
        for (acc, x) in [(&mut out.alice, na), (&mut out.bob, nb)] {
            acc.p_nonzero += x.p_nonzero;
            acc.mean_n += x.mean_n;
            acc.mean_inv_n += x.mean_inv_n;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub criterion: CriterionKind,
    pub p: usize,
    pub gamma: f64,
    pub eta: f64,
    pub cutoff: usize,
    pub weighting: Weighting,
    pub renormalized: bool,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub witness: Option<f64>,
    pub verdict: Verdict,
    pub truncated_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl WitnessReport {
    pub fn entangled(&self) -> bool {
        self.verdict == Verdict::Entangled
    }
}

/// Evaluates `kind` on the lossy BSV described by `spec`.
pub fn criterion(kind: CriterionKind, spec: &BsvSpec, eta: Efficiency) -> Result<WitnessReport> {
    criterion_with(kind, spec, eta, Parallelism::Parallel)
}

pub fn criterion_with(
    kind: CriterionKind,
    spec: &BsvSpec,
    eta: Efficiency,
    mode: Parallelism,
) -> Result<WitnessReport> {
    kind.check_modes(spec.p)?;
    let ideal = ideal_joint_distribution(spec, 0)?;
    let stats = lossy_statistics(&ideal, eta, kind.observable(), mode);
    let lhs = (spec.p + 1) as f64 * stats.setting_deficit;
    let rhs = separable_rhs(kind, spec.p, &stats.alice, &stats.bob);
    let witness = rhs.map(|r| lhs - r);
    let verdict = match witness {
        Some(w) if w < 0.0 => Verdict::Entangled,
        _ => Verdict::Inconclusive,
    };
    let reason =
        if rhs.is_none() { Some("not evaluable: a detection station registers no photons".to_string()) } else { None };
    Ok(WitnessReport {
        criterion: kind,
        p: spec.p,
        gamma: spec.gain.value(),
        eta: eta.value(),
        cutoff: spec.cutoff,
        weighting: spec.weighting,
        renormalized: spec.renormalized,
        lhs: Some(lhs),
        rhs,
        witness,
        verdict,
        truncated_mass: spec.truncated_mass(),
        reason,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct BisectionOptions {
    /// Absolute tolerance on η.
    pub tolerance: f64,
    /// Lower end of the bracket; η = 0 itself is not evaluable.
    pub eta_floor: f64,
    pub max_iterations: usize,
    pub parallelism: Parallelism,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        BisectionOptions { tolerance: 1e-4, eta_floor: 1e-6, max_iterations: 200, parallelism: Parallelism::Parallel }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalEta {
    pub eta: f64,
    pub iterations: usize,
}

pub fn critical_eta(kind: CriterionKind, spec: &BsvSpec) -> Result<CriticalEta> {
    critical_eta_with(kind, spec, BisectionOptions::default())
}

/// Bisects for the efficiency at which the witness changes sign.
pub fn critical_eta_with(kind: CriterionKind, spec: &BsvSpec, opts: BisectionOptions) -> Result<CriticalEta> {
    let witness_at = |e: f64| -> Result<Option<f64>> {
        Ok(criterion_with(kind, spec, Efficiency::new(e)?, opts.parallelism)?.witness)
    };
    let mut lo = opts.eta_floor;
    let mut hi = 1.0;
    match witness_at(hi)? {
        Some(w) if w < 0.0 => {}
        _ => return Err(Error::NoBracket("criterion never violated (witness ≥ 0 at η = 1)".into())),
    }
    match witness_at(lo)? {
        Some(w) if w >= 0.0 => {}
        Some(_) => return Err(Error::NoBracket(format!("criterion always violated (witness < 0 at η = {lo})"))),
        None => return Err(Error::NoBracket(format!("witness not evaluable at η = {lo}"))),
    }
    let mut iterations = 0;
    while hi - lo > opts.tolerance && iterations < opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        match witness_at(mid)? {
            Some(w) if w < 0.0 => hi = mid,
            _ => lo = mid,
        }
        iterations += 1;
    }
    Ok(CriticalEta { eta: 0.5 * (lo + hi), iterations })
}

/// Checks the `(p+1) ×` shortcut against the exact transformation: for every
/// setting, the BSV (truncated at `spec.cutoff ≤ 4`) is pushed through the
/// conjugate pair of multiports and its outcome table compared with the
/// number-basis table; returns the largest deviation seen (probabilities,
/// amplitudes and per-setting lossy deficits).
pub fn setting_symmetry_deviation(spec: &BsvSpec, eta: Efficiency) -> Result<f64> {
    let state = build_bsv(spec)?;
    let reference = OutcomeDistribution::from_state(&state)?;
    let lossy_ref = crate::loss::apply_loss(&reference, eta);
    let mut worst: f64 = 0.0;
    for u in build_mub(spec.p)? {
        let rotated = joint_transform(&state, &u, &conjugate_pair(&u))?;
        worst = worst.max(rotated.max_abs_diff(&state));
        let dist = OutcomeDistribution::from_state(&rotated)?;
        worst = worst.max(dist.max_abs_diff(&reference));
        let lossy = crate::loss::apply_loss(&dist, eta);
        for kind in CriterionKind::applicable(spec.p) {
            let obs = kind.observable();
            worst = worst.max((setting_deficit(&lossy, obs) - setting_deficit(&lossy_ref, obs)).abs());
        }
    }
    Ok(worst)
}
