//! Randomized property sweeps. Each trial draws from its own stream
//! `trial_rng(seed, i)`, trials run in parallel, and the report is assembled
//! in trial order, so results depend only on the arguments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dualopt::{self, DualRestriction};
use crate::error::{Error, Result};
use crate::frames::{canonical_dual, convex_potential, frame_operator, random_frame};
use crate::hermat::{eigvalsh, HermitianMatrix, ScalarFn};
use crate::lidskii;
use crate::perturbopt::{self, PerturbRestriction};
use crate::random::{random_hermitian, random_invertible, random_pd, trial_rng, TrialRng};
use crate::specvec::{submajorization_slack, Spectrum};
use crate::waterfill;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Dual,
    Perturb,
    Lidskii,
    Waterfill,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Dual, Suite::Perturb, Suite::Lidskii, Suite::Waterfill];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Dual => "dual",
            Suite::Perturb => "perturb",
            Suite::Lidskii => "lidskii",
            Suite::Waterfill => "waterfill",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite {s:?} (expected dual, perturb, lidskii or waterfill)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub trials: u64,
    pub dmax: usize,
    pub seed: u64,
    /// Slack for additive comparisons.
    pub tol: f64,
    /// Slack for comparisons of log-sums.
    pub log_tol: f64,
    /// Random members drawn per trial where a suite samples competitors.
    pub samples: usize,
}

impl SweepConfig {
    pub fn new(trials: u64, dmax: usize, seed: u64) -> Self {
        Self { trials, dmax, seed, tol: 1e-8, log_tol: 1e-8, samples: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub evaluated: u64,
    pub violations: u64,
    /// Smallest slack seen; `None` when the check never produced a number.
    pub worst_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialError {
    pub trial: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SweepConfig,
    pub checks: BTreeMap<String, CheckSummary>,
    pub violations: u64,
    pub errors: Vec<TrialError>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.errors.is_empty()
    }
}

#[derive(Default)]
struct Probe {
    records: Vec<(&'static str, f64, bool)>,
}

impl Probe {
    /// Records a slack that must be at least `-tol`.
    fn slack(&mut self, name: &'static str, slack: f64, tol: f64) {
        self.records.push((name, slack, slack >= -tol));
    }

    fn flag(&mut self, name: &'static str, ok: bool) {
        self.records.push((name, if ok { 0.0 } else { -1.0 }, ok));
    }
}

pub fn run_suite(suite: Suite, cfg: &SweepConfig) -> Result<SuiteReport> {
    if cfg.dmax == 0 {
        return Err(Error::Parameter("dmax must be at least 1".into()));
    }
    if !(cfg.tol >= 0.0 && cfg.log_tol >= 0.0) {
        return Err(Error::Parameter("tolerances must be nonnegative".into()));
    }
    let outcomes: Vec<Result<Probe>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, i);
            let mut probe = Probe::default();
            match suite {
                Suite::Dual => dual_trial(&mut rng, cfg, &mut probe),
                Suite::Perturb => perturb_trial(&mut rng, cfg, &mut probe),
                Suite::Lidskii => lidskii_trial(&mut rng, cfg, &mut probe),
                Suite::Waterfill => waterfill_trial(&mut rng, cfg, &mut probe),
            }
            .map(|_| probe)
        })
        .collect();

    let mut checks: BTreeMap<String, CheckSummary> = BTreeMap::new();
    let mut errors = Vec::new();
    for (trial, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(probe) => {
                for (name, slack, ok) in probe.records {
                    let c = checks
                        .entry(name.to_string())
                        .or_insert(CheckSummary { evaluated: 0, violations: 0, worst_slack: None });
                    c.evaluated += 1;
                    c.violations += u64::from(!ok);
                    if slack.is_finite() {
                        c.worst_slack = Some(c.worst_slack.map_or(slack, |w| w.min(slack)));
                    }
                }
            }
            Err(e) => errors.push(TrialError { trial: trial as u64, message: e.to_string() }),
        }
    }
    let violations = checks.values().map(|c| c.violations).sum::<u64>() + errors.len() as u64;
    Ok(SuiteReport { suite, config: *cfg, checks, violations, errors })
}

fn dim(rng: &mut TrialRng, cfg: &SweepConfig) -> usize {
    rng.random_range(1..=cfg.dmax)
}

fn waterfill_trial(rng: &mut TrialRng, cfg: &SweepConfig, p: &mut Probe) -> Result<()> {
    let d = dim(rng, cfg);
    let lam = Spectrum::new((0..d).map(|_| rng.random_range(-2.0..5.0)).collect())?.desc();
    let eps = rng.random_range(0.1..2.0);
    let m: i64 = if d == 1 { rng.random_range(-1..=0) } else { rng.random_range(-1..=1) };
    let cap = waterfill::support_cap(d, m) as f64 * eps;
    let t = lam.trace() + rng.random_range(0.0..=1.0) * cap;
    let r = waterfill::rho(&lam, t, eps, m)?;
    let scale = t.abs().max(1.0);
    p.slack("trace", -(r.rho.trace() - t).abs() / scale, 1e-10);
    let seed = rng.random();
    let worst = waterfill::brute_force_min(&lam, t, eps, m, cfg.samples.max(1) * 50, seed)?;
    p.slack("minimality", submajorization_slack(&r.rho, &worst)?, cfg.tol);
    let bumps_ok = r.rho.iter().zip(lam.iter()).all(|(x, l)| *x >= l - cfg.tol && *x <= l + eps + cfg.tol);
    p.flag("box", bumps_ok);
    Ok(())
}

fn dual_trial(rng: &mut TrialRng, cfg: &SweepConfig, p: &mut Probe) -> Result<()> {
    let d = dim(rng, cfg);
    let n = rng.random_range(d + 1..=2 * d + 2);
    let f = random_frame(d, n, rng)?;
    let m = dualopt::support_parameter(&f);
    let eps = rng.random_range(0.2..1.5);
    let t0 = canonical_dual(&f)?.norm_sum();
    let cap = waterfill::support_cap(d, m) as f64 * eps * eps;
    let r = DualRestriction::new(t0 + rng.random_range(0.0..=1.0) * cap, eps)?;
    let res = dualopt::construct_optimal_dual(&f, &r)?;
    let cert = dualopt::certify_optimal_dual(&f, &res.dual, &r, cfg.tol.max(1e-9))?;
    p.flag("certificate", cert.optimal);
    for k in 0..cfg.samples {
        let g = dualopt::sample_random_dual(&f, &r, rng.random::<u64>() ^ k as u64)?;
        let lg = eigvalsh(&frame_operator(&g))?;
        p.slack("submajorization", submajorization_slack(&res.rho, &lg)?, cfg.tol);
        for h in [ScalarFn::Identity, ScalarFn::Square, ScalarFn::Exp] {
            let bound = res.lower_bounds[&h.name()];
            let value = convex_potential(&g, h)?;
            let name = match h {
                ScalarFn::Identity => "potential_identity",
                ScalarFn::Square => "potential_square",
                _ => "potential_exp",
            };
            p.slack(name, (value - bound) / bound.abs().max(1.0), cfg.tol);
        }
    }
    Ok(())
}

fn perturb_trial(rng: &mut TrialRng, cfg: &SweepConfig, p: &mut Probe) -> Result<()> {
    let d = dim(rng, cfg);
    let s = random_pd(d, 0.1, 5.0, rng);
    let delta: f64 = rng.random_range(0.05..0.9);
    let (lo, hi) = ((1.0 - delta).powi(d as i32), (1.0 + delta).powi(d as i32));
    let r = PerturbRestriction::new(lo + rng.random_range(0.0..=1.0) * (hi - lo), delta)?;
    let res = perturbopt::construct_optimal_v(&s, &r)?;
    let cert = perturbopt::certify_optimal_perturb(&s, &res.v0, &r, cfg.tol.max(1e-9))?;
    p.flag("certificate", cert.optimal);
    let det_s: f64 = eigvalsh(&s)?.iter().map(|x| x.ln()).sum();
    let log_prod: f64 = res.mu.iter().map(|x| x.ln()).sum();
    p.slack("det_identity", -(log_prod - r.s.ln() - det_s).abs(), cfg.log_tol);
    let bounds: Vec<(&'static str, ScalarFn, f64)> = [("potential_square", ScalarFn::Square), ("potential_exp", ScalarFn::Exp)]
        .into_iter()
        .map(|(n, h)| (n, h, res.lower_bounds[&h.name()]))
        .collect();
    for _ in 0..cfg.samples {
        let v = perturbopt::sample_random_perturbation(d, &r, rng.random())?;
        p.flag("membership", perturbopt::membership_perturb(&v, &r, cfg.tol.max(1e-9)));
        p.slack("partial_products", perturbopt::partial_product_slack(&s, &v, &res.mu)?, cfg.log_tol);
        let lv = perturbopt::perturbed_spectrum(&s, &v)?;
        for (name, h, bound) in &bounds {
            let value: f64 = lv.iter().map(|&x| h.eval(x)).sum::<Result<f64>>()?;
            p.slack(name, (value - bound) / bound.abs().max(1.0), cfg.tol);
        }
        p.slack("sandwich", sandwich_worst(&lidskii::mult_lidskii_sandwich(&s, &v.adjoint(), cfg.log_tol)?), cfg.log_tol);
    }
    let s_det = 1.0 + rng.random_range(0.01..4.0);
    let ex = perturbopt::construct_expansive_v(&s, s_det)?;
    p.flag("expansive_certificate", {
        let c = perturbopt::certify_expansive(&s, &ex.v0, s_det, cfg.tol.max(1e-9))?;
        c.equality && c.structure
    });
    for _ in 0..cfg.samples.div_ceil(4) {
        let v = perturbopt::sample_random_expansive(d, s_det, rng.random())?;
        let c = perturbopt::certify_expansive(&s, &v, s_det, cfg.tol.max(1e-9))?;
        p.slack("expansive_dominance", c.log_slack.min(-c.log_trace_gap), cfg.log_tol);
    }
    Ok(())
}

fn sandwich_worst(r: &lidskii::SandwichReport) -> f64 {
    r.lower.worst_slack.min(r.upper.worst_slack)
}

fn lidskii_trial(rng: &mut TrialRng, cfg: &SweepConfig, p: &mut Probe) -> Result<()> {
    let d = dim(rng, cfg);
    let s = random_pd(d, 0.1, 5.0, rng);
    let v = random_invertible(d, 0.3, 3.0, rng);
    p.slack("sandwich", sandwich_worst(&lidskii::mult_lidskii_sandwich(&s, &v, cfg.log_tol)?), cfg.log_tol);
    p.slack("li_mathias", lidskii::li_mathias_all(&s, &v, 3, cfg.log_tol)?.worst_slack, cfg.log_tol);
    let a = random_hermitian(d, rng);
    let b = random_hermitian(d, rng);
    p.slack("weyl", lidskii::weyl_check(&a, &b, cfg.tol)?.report.worst_slack, cfg.tol);
    p.slack("additive_lidskii", lidskii::additive_lidskii_check(&a, &b, cfg.tol)?.worst_slack, cfg.tol);
    let low = eigvalsh(&HermitianMatrix::gram(&v))?;
    let expansive = v.scale_real(1.0 / low[d - 1].sqrt());
    p.slack("ostrowski", lidskii::ostrowski_check(&s, &expansive, cfg.tol)?.report.worst_slack, cfg.tol);
    if d <= lidskii::UMM_MAX_DIM {
        p.flag("umm_implies_commute", lidskii::umm_implies_commute(&s, &v, cfg.log_tol)?);
    }
    Ok(())
}
