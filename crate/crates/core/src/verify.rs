//! The self-check suite behind the `verify` subcommand.

use std::time::Instant;

use serde::Serialize;

use crate::bsv::{BsvSpec, Weighting};
use crate::error::Result;
use crate::fock::StateVector;
use crate::loss::{ideal_joint_distribution, Efficiency};
use crate::mub::{build_mub, certify};
use crate::par::{map_range, Parallelism};
use crate::witness::phase_rate_bound_value;
use crate::witness::{
    bound_check_appb, complementarity_rates, critical_eta_with, epr_deficit_numbers, epr_deficit_rates,
    identity_check_appa, random_product_sample, separable_sampler, setting_symmetry_deviation, BisectionOptions,
    CriterionKind, PartyObservables,
};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Random states for the R_m bound.
    pub bound_samples: usize,
    /// Random states / products for the sampler and complementarity checks.
    pub samples: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { bound_samples: 10_000, samples: 1_000, seed: 2016, parallelism: Parallelism::Parallel }
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Check { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_verification(opts: VerifyOptions) -> Vec<Check> {
    let mode = opts.parallelism;
    let bis = BisectionOptions { parallelism: mode, ..Default::default() };
    let mut checks = Vec::new();

    checks.push(timed("mub certification p in {2,3,5,7,11}", || {
        let mut worst: f64 = 0.0;
        for p in [2, 3, 5, 7, 11] {
            let c = certify(&build_mub(p)?);
            worst = worst.max(c.max_overlap_dev).max(c.max_unitarity_dev);
        }
        Ok((worst < 1e-12, format!("max deviation {worst:.3e} < 1e-12")))
    }));

    checks.push(timed("operator identity d=3, cutoff 6", || {
        let dev = identity_check_appa(3, 6)?;
        Ok((dev < 1e-10, format!("max entry deviation {dev:.3e} < 1e-10")))
    }));

    checks.push(timed("R_m complementarity bound (p=3, cutoff 4)", || {
        let max = bound_check_appb(3, opts.bound_samples, 4, opts.seed, mode)?;
        let obs = PartyObservables::new(3)?;
        let sat = phase_rate_bound_value(&obs, &StateVector::fock(&[1, 0, 0]))?;
        let ok = max <= 1.0 + 1e-10 && (sat - 1.0).abs() < 1e-10;
        Ok((ok, format!("max over {} states {max:.6}; |1,0,0> gives {sat:.12}", opts.bound_samples)))
    }));

    checks.push(timed("EPR zero at eta=1", || {
        let mut worst: f64 = 0.0;
        for g in [0.5, 1.0, 2.0] {
            let d = ideal_joint_distribution(&BsvSpec::new(3, g)?, 0)?;
            worst = worst.max(epr_deficit_rates(&d)).max(epr_deficit_numbers(&d));
        }
        Ok((worst < 1e-12, format!("max deficit {worst:.3e} < 1e-12")))
    }));

    checks.push(timed("intensity-d3 critical eta = 1/4", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for g in [0.3, 1.0, 2.0] {
            let c = critical_eta_with(CriterionKind::IntensityD3, &BsvSpec::new(3, g)?, bis)?;
            ok &= (c.eta - 0.25).abs() <= 0.005;
            detail.push(format!("Γ={g}: {:.5}", c.eta));
        }
        Ok((ok, detail.join(", ")))
    }));

    checks.push(timed("rate-d3 critical eta, Γ=0.05", || {
        let c = critical_eta_with(CriterionKind::RateD3, &BsvSpec::new(3, 0.05)?.renormalized(true), bis)?;
        Ok(((0.24..0.25).contains(&c.eta), format!("{:.5} in [0.24, 0.25)", c.eta)))
    }));

    checks.push(timed("rate-d3 critical eta, Γ=3", || {
        let mut hits = Vec::new();
        let mut detail = Vec::new();
        for w in [Weighting::StateNorm, Weighting::LiteralAppendixC] {
            let spec = BsvSpec::new(3, 3.0)?.renormalized(true).with_weighting(w);
            let c = critical_eta_with(CriterionKind::RateD3, &spec, bis)?;
            if (0.15..=0.16).contains(&c.eta) {
                hits.push(w.as_str());
            }
            detail.push(format!("{w}: {:.5}", c.eta));
        }
        let which = if hits.is_empty() { "none".to_string() } else { hits.join(", ") };
        Ok((!hits.is_empty(), format!("{}; reproduces 0.153: {which}", detail.join(", "))))
    }));

    checks.push(timed("conjugate-pair symmetry vs exact transform (n<=4)", || {
        let mut worst: f64 = 0.0;
        for p in [2, 3, 5] {
            let spec = BsvSpec::new(p, 0.8)?.with_cutoff(4);
            worst = worst.max(setting_symmetry_deviation(&spec, Efficiency::new(0.6)?)?);
        }
        Ok((worst < 1e-10, format!("max deviation {worst:.3e} < 1e-10")))
    }));

    checks.push(timed("separable products never violate", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for p in [2, 3, 5] {
            let r = separable_sampler(p, opts.samples, opts.seed, 4, mode)?;
            ok &= r.passes();
            let worst = r.kinds.iter().map(|k| k.min_margin).fold(f64::INFINITY, f64::min);
            detail.push(format!("p={p}: min margin {worst:.3e}"));
        }
        Ok((ok, detail.join(", ")))
    }));

    checks.push(timed("rate complementarity <= 2", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for p in [2, 3, 5] {
            let vals = map_range(opts.samples, mode, |i| {
                let (s, _) = random_product_sample(opts.seed ^ 0xC0, i, p, 4);
                complementarity_rates(&s, p).expect("single party")
            });
            let max_rate = vals.iter().map(|c| c.rate_sum).fold(0.0, f64::max);
            let int_ok = vals.iter().all(|c| c.intensity_sum <= c.intensity_bound + 1e-10);
            let mut counts = vec![0u32; p];
            counts[1] = 2;
            let sat = complementarity_rates(&StateVector::fock(&counts), p)?.rate_sum;
            ok &= max_rate <= 2.0 + 1e-10 && int_ok && (sat - 2.0).abs() < 1e-10;
            detail.push(format!("p={p}: max {max_rate:.6}, saturation {sat:.12}"));
        }
        Ok((ok, detail.join(", ")))
    }));

    checks
}

/// Plain-text table of check results.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{:<4}  {:<width$}  {:>7.2}s  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail,
        ));
    }
    out
}
