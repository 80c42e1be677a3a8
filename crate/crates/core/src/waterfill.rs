//! Water-filling spectra: the level `c_λ(t)`, the unconstrained minimizer
//! `ν(λ, t)` and the capped, support-restricted minimizers `ρ_{(t,ε)}(λ, m)`.
//!
//! All minimizers are with respect to submajorization over
//! `Λ_{(t,ε)}(λ, m) = {λ + μ : 0 ≤ μ_i ≤ ε, tr μ ≥ t − tr λ, #supp μ ≤ d − m}`.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::random::seeded;
use crate::specvec::{submajorization_slack, Spectrum};

/// Relative slack on budget comparisons: `t` against `tr λ` and `min(d − m, d)·ε`.
pub const BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillResult {
    pub rho: Spectrum,
    /// `ρ − λ`, nondecreasing.
    pub increments: Spectrum,
    /// Level of the final flat block; absent when the budget is zero.
    pub water_level: Option<f64>,
    /// Entries fixed at `λ_i + ε` before the final flat block.
    pub saturated_count: usize,
    /// `c` at each step of the recursion, outermost first; nondecreasing.
    pub level_trace: Vec<f64>,
}

fn budget_scale(lambda: &[f64], t: f64) -> f64 {
    BUDGET_TOL * lambda.iter().fold(1.0_f64.max(t.abs()), |m, x| m.max(x.abs()))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

fn require_nonincreasing(lambda: &Spectrum) -> Result<()> {
    if !lambda.is_nonincreasing() {
        return Err(Error::Input("lambda must be sorted nonincreasing".into()));
    }
    Ok(())
}

/// Nonnegative budget `t − tr λ`, clamped to zero within tolerance.
fn budget(lambda: &[f64], t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Parameter(format!("t must be finite, got {t}")));
    }
    let b = t - lambda.iter().sum::<f64>();
    if b < -budget_scale(lambda, t) {
        return Err(Error::Infeasible(format!("t = {t} is below tr(lambda) = {}", t - b)));
    }
    Ok(b.max(0.0))
}

/// Exact breakpoint scan for `Σ (c − a_i)^+ = b` on ascending `a`.
fn level_ascending(a: &[f64], b: f64) -> f64 {
    let d = a.len();
    let mut prefix = 0.0;
    for k in 1..d {
        prefix += a[k - 1];
        // h(a_{k+1}) = k·a_{k+1} − Σ_{i≤k} a_i
        if k as f64 * a[k] - prefix >= b {
            return (b + prefix) / k as f64;
        }
    }
    (b + prefix + a[d - 1]) / d as f64
}

/// The unique `c ≥ λ_min` with `Σ (c − λ_i)^+ = t − tr λ`.
pub fn c_level(lambda: &Spectrum, t: f64) -> Result<f64> {
    let b = budget(lambda.as_slice(), t)?;
    Ok(level_ascending(lambda.asc().as_slice(), b))
}

/// `ν(λ, t)_i = max(λ_i, c_λ(t))`.
pub fn nu(lambda: &Spectrum, t: f64) -> Result<Spectrum> {
    let c = c_level(lambda, t)?;
    lambda.map(|x| x.max(c))
}

/// The submajorization minimizer over `Λ_{(t,ε)}(λ, 0)`.
///
/// Repeatedly compares the water level of the current prefix with its last
/// entry: if the level overshoots `λ_k + ε`, that entry is saturated and the
/// prefix shrinks; otherwise the prefix is water-filled and the recursion stops.
pub fn rho_zero(lambda: &Spectrum, t: f64, eps: f64) -> Result<WaterfillResult> {
    check_eps(eps)?;
    require_nonincreasing(lambda)?;
    let lam = lambda.as_slice();
    let d = lam.len();
    let b = budget(lam, t)?;
    if b > d as f64 * eps + budget_scale(lam, t) {
        return Err(Error::Infeasible(format!(
            "t − tr(lambda) = {b} exceeds d·eps = {}",
            d as f64 * eps
        )));
    }
    if b == 0.0 {
        return Ok(WaterfillResult {
            rho: lambda.clone(),
            increments: Spectrum::constant(0.0, d)?,
            water_level: None,
            saturated_count: 0,
            level_trace: Vec::new(),
        });
    }

    let mut rho = lam.to_vec();
    let mut trace = Vec::new();
    let mut k = d;
    let mut tk = t;
    let mut saturated = 0;
    loop {
        let prefix = &lam[..k];
        let bk = (tk - prefix.iter().sum::<f64>()).max(0.0);
        let mut asc = prefix.to_vec();
        asc.reverse();
        let c = level_ascending(&asc, bk);
        debug_assert!(
            trace.last().is_none_or(|&prev: &f64| c >= prev - 1e-9 * (1.0 + prev.abs())),
            "water level decreased along the recursion"
        );
        trace.push(c);
        if k == 1 || c - lam[k - 1] <= eps {
            for (r, &x) in rho[..k].iter_mut().zip(prefix) {
                *r = x.max(c);
            }
            break;
        }
        rho[k - 1] = lam[k - 1] + eps;
        tk -= rho[k - 1];
        saturated += 1;
        k -= 1;
    }

    let increments: Vec<f64> = rho.iter().zip(lam).map(|(r, l)| r - l).collect();
    Ok(WaterfillResult {
        rho: Spectrum::new(rho)?,
        increments: Spectrum::new(increments)?,
        water_level: trace.last().copied(),
        saturated_count: saturated,
        level_trace: trace,
    })
}

/// Capacity `min(d − m, d)` of the support restriction.
pub fn support_cap(d: usize, m: i64) -> usize {
    if m <= 0 {
        d
    } else {
        d.saturating_sub(m as usize)
    }
}

/// The submajorization minimizer over `Λ_{(t,ε)}(λ, m)`.
///
/// For `m ≥ 1` the top `m` entries of `λ` are kept and the tail is solved by
/// [`rho_zero`]; the result need not be sorted.
pub fn rho(lambda: &Spectrum, t: f64, eps: f64, m: i64) -> Result<WaterfillResult> {
    let d = lambda.len();
    if m >= d as i64 {
        return Err(Error::Parameter(format!("m = {m} must be at most d − 1 = {}", d - 1)));
    }
    if m <= 0 {
        return rho_zero(lambda, t, eps);
    }
    check_eps(eps)?;
    require_nonincreasing(lambda)?;
    let lam = lambda.as_slice();
    let m = m as usize;
    let b = budget(lam, t)?;
    let cap = (d - m) as f64 * eps;
    if b > cap + budget_scale(lam, t) {
        return Err(Error::Infeasible(format!("t − tr(lambda) = {b} exceeds (d − m)·eps = {cap}")));
    }
    let head: f64 = lam[..m].iter().sum();
    let tail = rho_zero(&Spectrum::from_slice(&lam[m..])?, t - head, eps)?;
    let mut rho = lam[..m].to_vec();
    rho.extend(tail.rho.iter());
    let mut inc = vec![0.0; m];
    inc.extend(tail.increments.iter());
    Ok(WaterfillResult {
        rho: Spectrum::new(rho)?,
        increments: Spectrum::new(inc)?,
        water_level: tail.water_level,
        saturated_count: tail.saturated_count,
        level_trace: tail.level_trace,
    })
}

/// `tr λ ≤ t` and `t − tr λ ≤ min(d − m, d)·ε`, both within tolerance.
pub fn feasible(lambda: &Spectrum, t: f64, eps: f64, m: i64) -> bool {
    if !(eps > 0.0) || !t.is_finite() {
        return false;
    }
    let lam = lambda.as_slice();
    let tol = budget_scale(lam, t);
    let b = t - lambda.trace();
    let cap = if m >= lam.len() as i64 { 0.0 } else { support_cap(lam.len(), m) as f64 * eps };
    b >= -tol && b <= cap + tol
}

/// Raises `μ` on `support` toward `ε` until its trace reaches `b`.
fn lift_to_budget(mu: &mut [f64], support: &[usize], eps: f64, b: f64) -> bool {
    let tr: f64 = mu.iter().sum();
    if tr >= b {
        return true;
    }
    let room: f64 = support.iter().map(|&i| eps - mu[i]).sum();
    if room + 1e-15 < b - tr {
        return false;
    }
    let alpha = ((b - tr) / room).min(1.0);
    for &i in support {
        mu[i] += alpha * (eps - mu[i]);
    }
    true
}

/// Random members of `Λ_{(t,ε)}(λ, m)` plus a deterministic grid over
/// `{0, ε/2, ε}^d`, all lifted onto the budget where needed.
pub fn sample_members(
    lambda: &Spectrum,
    t: f64,
    eps: f64,
    m: i64,
    samples: usize,
    seed: u64,
) -> Result<Vec<Spectrum>> {
    if !feasible(lambda, t, eps, m) || m >= lambda.len() as i64 {
        return Err(Error::Infeasible(format!(
            "no members: t = {t}, eps = {eps}, m = {m}, tr(lambda) = {}",
            lambda.trace()
        )));
    }
    let lam = lambda.as_slice();
    let d = lam.len();
    let k = support_cap(d, m);
    let b = (t - lambda.trace()).max(0.0);
    // smallest support able to carry the budget
    let kmin = ((b / eps).ceil() as usize).clamp(1, k);
    let mut rng = seeded(seed);
    let mut out = Vec::with_capacity(samples + 3usize.pow(d as u32));
    let push = |mu: &[f64], out: &mut Vec<Spectrum>| -> Result<()> {
        out.push(Spectrum::new(lam.iter().zip(mu).map(|(l, u)| l + u).collect())?);
        Ok(())
    };

    while out.len() < samples {
        let size = rng.random_range(kmin..=k);
        let support = sample(&mut rng, d, size).into_vec();
        let mut mu = vec![0.0; d];
        for &i in &support {
            mu[i] = rng.random_range(0.0..=eps);
        }
        if lift_to_budget(&mut mu, &support, eps, b) {
            push(&mu, &mut out)?;
        }
    }

    if d <= 8 {
        let levels = [0.0, eps / 2.0, eps];
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut mu = vec![0.0; d];
            for x in mu.iter_mut() {
                *x = levels[c % 3];
                c /= 3;
            }
            let support: Vec<usize> = (0..d).filter(|&i| mu[i] > 0.0).collect();
            if support.len() > k {
                continue;
            }
            if lift_to_budget(&mut mu, &support, eps, b) {
                push(&mu, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// Sampling oracle: the sampled member of `Λ_{(t,ε)}(λ, m)` that comes closest
/// to violating `ρ ≺_w γ` for `ρ = rho(λ, t, ε, m)`; ties go to the smaller trace.
pub fn brute_force_min(
    lambda: &Spectrum,
    t: f64,
    eps: f64,
    m: i64,
    samples: usize,
    seed: u64,
) -> Result<Spectrum> {
    let r = rho(lambda, t, eps, m)?;
    let mut best: Option<(f64, f64, Spectrum)> = None;
    for g in sample_members(lambda, t, eps, m, samples, seed)? {
        let slack = submajorization_slack(&r.rho, &g)?;
        let tr = g.trace();
        if best.as_ref().is_none_or(|(s, bt, _)| slack < *s || (slack == *s && tr < *bt)) {
            best = Some((slack, tr, g));
        }
    }
    best.map(|(_, _, g)| g).ok_or_else(|| Error::Numeric("no members sampled".into()))
}
