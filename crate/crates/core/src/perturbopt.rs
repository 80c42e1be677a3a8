//! Optimal perturbations of a frame by equivalent frames `V·F`.
//!
//! Near-unitary model: `‖V*V − I‖ ≤ δ`, `det(V*V) ≥ s`. The frame operator of
//! `V·F` is `V S V*`, and the log-spectra of the admissible operators are
//! bounded below (in submajorization) by a water-filled log-spectrum of `S`.
//! Expansive model: `V*V ⪰ I`, `det(V*V) = s > 1`.
//!
//! Since the frame operator is `V S V*`, certificates inspect `V*V`; the
//! unitary factor of `V` never enters.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::hermat::{
    commutator_norm, eigh, eigvalsh, is_invertible, joint_spectrum, op_norm, op_norm_h, pairing_matches,
    rank_one_sum, ComplexMatrix, HermitianMatrix, ScalarFn,
};
use crate::random::{random_unitary, seeded};
use crate::specvec::{log_majorization_slack, Spectrum};
use crate::waterfill::{nu, rho_zero};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbRestriction {
    /// Floor on `det(V*V)`.
    pub s: f64,
    /// Radius on `‖V*V − I‖`.
    pub delta: f64,
}

impl PerturbRestriction {
    pub fn new(s: f64, delta: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("s must be positive and finite, got {s}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { s, delta })
    }

    /// `((1 − δ)^d, (1 + δ)^d)`.
    pub fn det_range(&self, d: usize) -> (f64, f64) {
        ((1.0 - self.delta).powi(d as i32), (1.0 + self.delta).powi(d as i32))
    }

    /// `(1 − δ)^d ≤ s ≤ (1 + δ)^d`, compared in logs with relative slack `1e-12`.
    pub fn feasible(&self, d: usize) -> bool {
        let ls = self.s.ln();
        let lo = d as f64 * (-self.delta).ln_1p();
        let hi = d as f64 * self.delta.ln_1p();
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        ls >= lo - slack && ls <= hi + slack
    }

    fn require_feasible(&self, d: usize) -> Result<()> {
        if !self.feasible(d) {
            let (lo, hi) = self.det_range(d);
            return Err(Error::Infeasible(format!(
                "need (1 − δ)^d ≤ s ≤ (1 + δ)^d, i.e. {lo} ≤ {} ≤ {hi} (d = {d}, δ = {})",
                self.s, self.delta
            )));
        }
        Ok(())
    }
}

/// Log-domain water-filling data behind `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogData {
    /// `log λ(S)`, nonincreasing.
    pub lambda_log: Spectrum,
    /// `log(s · det S / (1 − δ)^d)`.
    pub t_log: f64,
    /// `log((1 + δ)/(1 − δ))`.
    pub eps_log: f64,
    pub rho_log: Spectrum,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalPerturbResult {
    /// Positive `V₀ = Σ (μ_i/λ_i(S))^{1/2} v_i ⊗ v_i`.
    pub v0: ComplexMatrix,
    pub mu: Spectrum,
    pub lambda: Spectrum,
    pub log_data: LogData,
    /// `Σ h(μ_i)`, lower bounds for `P_h(V·F)`.
    pub lower_bounds: BTreeMap<String, f64>,
}

fn positive_spectrum(s: &HermitianMatrix) -> Result<(Spectrum, ComplexMatrix)> {
    let es = eigh(s)?;
    let low = es.values[es.dim() - 1];
    if !(low > 0.0) {
        return Err(Error::Domain(format!("matrix is not positive definite (λ_min = {low})")));
    }
    Ok((es.values, es.vectors))
}

/// `log det(V*V) = Σ log λ_i(V*V)`.
pub fn log_det_gram(v: &ComplexMatrix) -> Result<f64> {
    eigvalsh(&HermitianMatrix::gram(v))?
        .iter()
        .map(|&x| {
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::Input("operator is singular".into()))
            }
        })
        .sum()
}

pub fn det_gram(v: &ComplexMatrix) -> Result<f64> {
    Ok(log_det_gram(v)?.exp())
}

/// `λ(V S V*)`, the spectrum of the frame operator of `V·F`.
pub fn perturbed_spectrum(s: &HermitianMatrix, v: &ComplexMatrix) -> Result<Spectrum> {
    eigvalsh(&s.congruence(v)?)
}

fn bound_table(mu: &Spectrum) -> BTreeMap<String, f64> {
    [ScalarFn::Identity, ScalarFn::Square, ScalarFn::Exp, ScalarFn::Inverse, ScalarFn::Log]
        .iter()
        .filter_map(|&h| mu.iter().map(|&x| h.eval(x)).sum::<Result<f64>>().ok().map(|v| (h.name(), v)))
        .collect()
}

/// `μ_{(s,δ)}(S) = (1 − δ)·exp ρ` with `ρ = ρ_{(t,ε)}(log λ(S), 0)`.
pub fn mu_spectrum(s: &HermitianMatrix, r: &PerturbRestriction) -> Result<(Spectrum, LogData)> {
    let (lam, _) = positive_spectrum(s)?;
    mu_from_eigenvalues(&lam, r)
}

fn mu_from_eigenvalues(lam: &Spectrum, r: &PerturbRestriction) -> Result<(Spectrum, LogData)> {
    let d = lam.len();
    r.require_feasible(d)?;
    let lambda_log = lam.map(f64::ln)?;
    let shrink = (-r.delta).ln_1p();
    let t_log = r.s.ln() + lambda_log.trace() - d as f64 * shrink;
    let eps_log = r.delta.ln_1p() - shrink;
    let wf = rho_zero(&lambda_log, t_log, eps_log)?;
    let mu = wf.rho.map(|x| (1.0 - r.delta) * x.exp())?;
    Ok((mu, LogData { lambda_log, t_log, eps_log, rho_log: wf.rho }))
}

/// `V₀ = Σ (μ_i/λ_i(S))^{1/2} v_i ⊗ v_i` in the decreasing eigenbasis of `S`.
pub fn construct_optimal_v(s: &HermitianMatrix, r: &PerturbRestriction) -> Result<OptimalPerturbResult> {
    let (lam, basis) = positive_spectrum(s)?;
    let (mu, log_data) = mu_from_eigenvalues(&lam, r)?;
    let scales = mu.hadamard(&lam.map(f64::recip)?)?.map(f64::sqrt)?;
    let v0 = rank_one_sum(&scales, &basis)?.into_matrix();
    Ok(OptimalPerturbResult { v0, lower_bounds: bound_table(&mu), mu, lambda: lam, log_data })
}

/// `V` invertible, `‖V*V − I‖ ≤ δ + tol` and `det(V*V) ≥ s − tol`.
pub fn membership_perturb(v: &ComplexMatrix, r: &PerturbRestriction, tol: f64) -> bool {
    if !v.is_square() || !is_invertible(v) {
        return false;
    }
    let g = HermitianMatrix::gram(v);
    let dev = match g.sub(&HermitianMatrix::identity(v.rows())) {
        Ok(m) => op_norm(m.matrix()),
        Err(_) => return false,
    };
    match det_gram(v) {
        Ok(det) => dev <= r.delta + tol && det >= r.s - tol,
        Err(_) => false,
    }
}

/// `min_k Σ_{i≤k} (log λ_i(V S V*) − log μ_i)`.
pub fn partial_product_slack(s: &HermitianMatrix, v: &ComplexMatrix, mu: &Spectrum) -> Result<f64> {
    let lv = perturbed_spectrum(s, v)?;
    check_dims("spectrum length", lv.len(), mu.len())?;
    let mut acc = 0.0;
    let mut worst = f64::INFINITY;
    for (a, b) in lv.iter().zip(mu.desc().iter()) {
        if !(*a > 0.0) {
            return Err(Error::Domain("perturbed frame operator is not positive definite".into()));
        }
        acc += a.ln() - b.ln();
        worst = worst.min(acc);
    }
    Ok(worst)
}

/// `Π_{i≤k} μ_i ≤ Π_{i≤k} λ_i(V S V*)·e^tol` for every `k`.
pub fn partial_product_check(s: &HermitianMatrix, v: &ComplexMatrix, r: &PerturbRestriction, tol: f64) -> Result<bool> {
    check_dims("operator dimension", v.rows(), s.dim())?;
    if !membership_perturb(v, r, tol) {
        return Err(Error::Precondition("V is not an admissible perturbation".into()));
    }
    let (mu, _) = mu_spectrum(s, r)?;
    Ok(partial_product_slack(s, v, &mu)? >= -tol)
}

/// Commutation of `S` with `G` plus the expected pairing of joint eigenvalues.
fn structure_check(s: &HermitianMatrix, g: &HermitianMatrix, expected: &[(f64, f64)], tol: f64) -> Result<(f64, bool, bool)> {
    let commutator = commutator_norm(s, g)?;
    let commutes = commutator <= tol * op_norm_h(s)? * op_norm_h(g)?;
    let ctol = tol.sqrt().max(1e-9);
    let pairing = commutes && pairing_matches(&joint_spectrum(s, g, ctol)?, expected, ctol);
    Ok((commutator, commutes, pairing))
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbCertificate {
    pub spectrum_error: f64,
    pub spectrum_match: bool,
    pub det: f64,
    pub det_tight: bool,
    pub commutator: f64,
    pub commutes: bool,
    pub pairing: bool,
    pub structure: bool,
    pub optimal: bool,
}

/// Checks `λ(V S V*) = μ`, `det(V*V) = s` and that `S` and `V*V` are jointly
/// diagonal with `V*V v_i = (μ_i/λ_i(S)) v_i`.
pub fn certify_optimal_perturb(
    s: &HermitianMatrix,
    v: &ComplexMatrix,
    r: &PerturbRestriction,
    tol: f64,
) -> Result<PerturbCertificate> {
    check_dims("operator dimension", v.rows(), s.dim())?;
    if !membership_perturb(v, r, tol) {
        return Err(Error::Precondition("V is not an admissible perturbation".into()));
    }
    let (lam, _) = positive_spectrum(s)?;
    let (mu, _) = mu_from_eigenvalues(&lam, r)?;
    let lv = perturbed_spectrum(s, v)?;
    let spectrum_error = lv.max_abs_diff(&mu)?;
    let spectrum_match = spectrum_error <= tol * mu[0];
    let det = det_gram(v)?;
    let det_tight = (det - r.s).abs() <= tol * r.s;
    let expected: Vec<(f64, f64)> = lam.iter().zip(mu.iter()).map(|(l, m)| (*l, m / l)).collect();
    let (commutator, commutes, pairing) = structure_check(s, &HermitianMatrix::gram(v), &expected, tol)?;
    let structure = commutes && pairing;
    Ok(PerturbCertificate {
        spectrum_error,
        spectrum_match,
        det,
        det_tight,
        commutator,
        commutes,
        pairing,
        structure,
        optimal: spectrum_match && det_tight && structure,
    })
}

/// Positive `V = Σ γ'_i^{1/2} v_i ⊗ v_i` with `γ'` the decreasing `γ` reversed
/// (`anti_aligned`) or kept in order, in the decreasing eigenbasis of `S`.
pub fn gamma_operator(s: &HermitianMatrix, gamma: &Spectrum, anti_aligned: bool) -> Result<ComplexMatrix> {
    check_dims("gamma length", gamma.len(), s.dim())?;
    if gamma.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Domain("gamma must be strictly positive".into()));
    }
    let (_, basis) = positive_spectrum(s)?;
    let g = if anti_aligned { gamma.asc() } else { gamma.desc() };
    Ok(rank_one_sum(&g.map(f64::sqrt)?, &basis)?.into_matrix())
}

/// `Σ h(λ_i(S)·γ_{d+1−i})` and a positive `V` with `λ(V*V) = γ` attaining it.
pub fn fixed_gamma_bound(s: &HermitianMatrix, gamma: &Spectrum, h: ScalarFn) -> Result<(f64, ComplexMatrix)> {
    let v = gamma_operator(s, gamma, true)?;
    let (lam, _) = positive_spectrum(s)?;
    let bound = lam.iter().zip(gamma.asc().iter()).map(|(l, g)| h.eval(l * g)).sum::<Result<f64>>()?;
    Ok((bound, v))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansiveResult {
    /// Positive expansive `V₀` with `det(V₀²) = s`.
    pub v0: ComplexMatrix,
    /// `exp ν(log λ(S), log s + tr log λ(S))`.
    pub mu: Spectrum,
    pub lambda: Spectrum,
    pub lambda_log: Spectrum,
    pub t_log: f64,
    pub nu_log: Spectrum,
    pub lower_bounds: BTreeMap<String, f64>,
}

fn require_expansive_s(s_det: f64) -> Result<()> {
    if !(s_det > 1.0 && s_det.is_finite()) {
        return Err(Error::Parameter(format!("expansive perturbations need s > 1, got {s_det}")));
    }
    Ok(())
}

/// `μ = exp ν(log λ(S), log s + tr log λ(S))`.
pub fn mu_expansive(s: &HermitianMatrix, s_det: f64) -> Result<Spectrum> {
    Ok(construct_expansive_v(s, s_det)?.mu)
}

pub fn construct_expansive_v(s: &HermitianMatrix, s_det: f64) -> Result<ExpansiveResult> {
    require_expansive_s(s_det)?;
    let (lam, basis) = positive_spectrum(s)?;
    let lambda_log = lam.map(f64::ln)?;
    let t_log = s_det.ln() + lambda_log.trace();
    let nu_log = nu(&lambda_log, t_log)?;
    let mu = nu_log.map(f64::exp)?;
    // ν ≥ λ entrywise, so every scale is at least 1
    let scales = nu_log.iter().zip(lambda_log.iter()).map(|(n, l)| ((n - l).max(0.0) / 2.0).exp()).collect();
    let v0 = rank_one_sum(&Spectrum::new(scales)?, &basis)?.into_matrix();
    Ok(ExpansiveResult { v0, lower_bounds: bound_table(&mu), mu, lambda: lam, lambda_log, t_log, nu_log })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansiveCertificate {
    /// `min_k` of the partial log-sum excess of `λ(V S V*)` over `μ`.
    pub log_slack: f64,
    /// `|Σ log λ(V S V*) − Σ log μ|`.
    pub log_trace_gap: f64,
    pub log_dominance: bool,
    pub spectrum_error: f64,
    pub equality: bool,
    pub commutator: f64,
    pub commutes: bool,
    pub pairing: bool,
    pub structure: bool,
}

/// For expansive `V` with `det(V*V) = s`: `μ ≺_log λ(V S V*)`, and whether
/// equality holds together with the joint-eigenbasis structure.
pub fn certify_expansive(s: &HermitianMatrix, v: &ComplexMatrix, s_det: f64, tol: f64) -> Result<ExpansiveCertificate> {
    check_dims("operator dimension", v.rows(), s.dim())?;
    require_expansive_s(s_det)?;
    if !v.is_square() || !is_invertible(v) {
        return Err(Error::Precondition("V must be invertible".into()));
    }
    let g = HermitianMatrix::gram(v);
    let gv = eigvalsh(&g)?;
    if gv[gv.len() - 1] < 1.0 - tol {
        return Err(Error::Precondition(format!("V is not expansive (λ_min(V*V) = {})", gv[gv.len() - 1])));
    }
    let det = det_gram(v)?;
    if (det - s_det).abs() > tol * s_det {
        return Err(Error::Precondition(format!("det(V*V) = {det} differs from s = {s_det}")));
    }
    let res = construct_expansive_v(s, s_det)?;
    let lv = perturbed_spectrum(s, v)?;
    let (log_slack, log_full) = log_majorization_slack(&res.mu, &lv)?;
    let log_dominance = log_slack >= -tol && log_full.abs() <= tol;
    let spectrum_error = lv.max_abs_diff(&res.mu)?;
    let equality = spectrum_error <= tol * res.mu[0];
    let expected: Vec<(f64, f64)> = res.lambda.iter().zip(res.mu.iter()).map(|(l, m)| (*l, m / l)).collect();
    let (commutator, commutes, pairing) = structure_check(s, &g, &expected, tol)?;
    Ok(ExpansiveCertificate {
        log_slack,
        log_trace_gap: log_full.abs(),
        log_dominance,
        spectrum_error,
        equality,
        commutator,
        commutes,
        pairing,
        structure: commutes && pairing,
    })
}

/// `U₁ diag(g)^{1/2} U₂` with Haar unitaries, so that `λ(V*V) = g`.
fn with_gram_spectrum<R: Rng + ?Sized>(g: &[f64], rng: &mut R) -> ComplexMatrix {
    let d = g.len();
    let u1 = random_unitary(d, rng);
    let u2 = random_unitary(d, rng);
    let root: Vec<f64> = g.iter().map(|x| x.sqrt()).collect();
    &(&u1 * &ComplexMatrix::from_real_diag(&root)) * &u2
}

/// Random admissible `V`: `λ(V*V)` drawn from `[1 − δ, 1 + δ]` and, if the
/// product falls short of `s`, pushed toward `1 + δ` by the smallest uniform
/// fraction that restores `Π g_i ≥ s`.
pub fn sample_random_perturbation(d: usize, r: &PerturbRestriction, seed: u64) -> Result<ComplexMatrix> {
    r.require_feasible(d)?;
    let mut rng = seeded(seed);
    let (lo, hi) = (1.0 - r.delta, 1.0 + r.delta);
    let base: Vec<f64> = (0..d).map(|_| rng.random_range(lo..=hi)).collect();
    let target = r.s.ln();
    let log_prod = |alpha: f64| -> f64 { base.iter().map(|g| (g + alpha * (hi - g)).ln()).sum() };
    let g: Vec<f64> = if log_prod(0.0) >= target {
        base.clone()
    } else {
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if log_prod(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        base.iter().map(|x| x + b * (hi - x)).collect()
    };
    Ok(with_gram_spectrum(&g, &mut rng))
}

/// Random expansive `V` with `det(V*V) = s`: `λ(V*V) = s^{w}` for random
/// weights `w ≥ 0` summing to one.
pub fn sample_random_expansive(d: usize, s_det: f64, seed: u64) -> Result<ComplexMatrix> {
    require_expansive_s(s_det)?;
    let mut rng = seeded(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let g: Vec<f64> = w.iter().map(|x| s_det.powf(x / total)).collect();
    Ok(with_gram_spectrum(&g, &mut rng))
}

/// Random `V` with `λ(V*V) = γ`.
pub fn sample_with_gamma(gamma: &Spectrum, seed: u64) -> ComplexMatrix {
    with_gram_spectrum(gamma.as_slice(), &mut seeded(seed))
}
