//! Optimal duals under a norm-sum floor and an operator-norm radius.
//!
//! For a frame `F` of `n` vectors in `C^d`, the restricted duals are
//! `D_{(t,ε)}(F) = {G dual of F : Σ‖g_j‖² ≥ t, ‖T_G − T_{F#}‖ ≤ ε}`. Their frame
//! operators are exactly `S_{F#} + B` with `B ⪰ 0`, `tr B ≥ t − tr S_{F#}`,
//! `‖B‖ ≤ ε²` and `rank B ≤ d − m`, `m = 2d − n`. The submajorization
//! minimum of the spectra is the water-filled `ρ_{(t,ε²)}(λ(S_{F#}), m)`.
//!
//! `ε` is the radius on analysis operators; the matrix model uses `ε²`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::frames::{analysis, analysis_distance, canonical_dual, dual_check, frame_operator, require_frame, Frame};
use crate::hermat::{
    commutator_norm, eigh, eigvalsh, func_calc, joint_spectrum, op_norm_h, pairing_matches, ComplexMatrix,
    HermitianMatrix, ScalarFn, RANK_TOL,
};
use crate::random::{random_isometry, seeded};
use crate::specvec::Spectrum;
use crate::waterfill::{self, support_cap, WaterfillResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRestriction {
    /// Floor on `Σ ‖g_j‖²`.
    pub t: f64,
    /// Radius on `‖T_G − T_{F#}‖`.
    pub eps: f64,
}

impl DualRestriction {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Parameter(format!("t must be finite, got {t}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("eps must be positive and finite, got {eps}")));
        }
        Ok(Self { t, eps })
    }

    pub fn eps_sq(&self) -> f64 {
        self.eps * self.eps
    }
}

/// `m = 2d − n`.
pub fn support_parameter(f: &Frame) -> i64 {
    2 * f.d() as i64 - f.n() as i64
}

/// The quantities entering the feasibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualFeasibility {
    /// `tr S_{F#}`.
    pub t0: f64,
    pub m: i64,
    /// `min(d − m, d)·ε²`.
    pub capacity: f64,
    /// `t − t0`.
    pub budget: f64,
    pub feasible: bool,
}

/// Canonical dual and the spectral data of its frame operator.
struct Canonical {
    dual: Frame,
    s: HermitianMatrix,
    lambda: Spectrum,
    basis: ComplexMatrix,
}

fn canonical(f: &Frame) -> Result<Canonical> {
    let dual = canonical_dual(f)?;
    let s = frame_operator(&dual);
    let es = eigh(&s)?;
    Ok(Canonical { dual, s, lambda: es.values, basis: es.vectors })
}

pub fn dual_feasibility(f: &Frame, r: &DualRestriction) -> Result<DualFeasibility> {
    require_frame(f)?;
    let c = canonical(f)?;
    let m = support_parameter(f);
    let t0 = c.lambda.trace();
    Ok(DualFeasibility {
        t0,
        m,
        capacity: support_cap(f.d(), m) as f64 * r.eps_sq(),
        budget: r.t - t0,
        feasible: waterfill::feasible(&c.lambda, r.t, r.eps_sq(), m),
    })
}

/// `0 ≤ t − tr S_{F#} ≤ min(d − m, d)·ε²`, within tolerance.
pub fn feasible_dual(f: &Frame, r: &DualRestriction) -> Result<bool> {
    Ok(dual_feasibility(f, r)?.feasible)
}

fn require_feasible(f: &Frame, r: &DualRestriction) -> Result<DualFeasibility> {
    let info = dual_feasibility(f, r)?;
    if !info.feasible {
        return Err(Error::Infeasible(format!(
            "need tr S_F# = {} ≤ t = {} and t − tr S_F# = {} ≤ min(d − m, d)·eps² = {} (m = {})",
            info.t0, r.t, info.budget, info.capacity, info.m
        )));
    }
    Ok(info)
}

/// Orthonormal basis of `ker T_F* ⊂ C^n`, as columns.
///
/// Taken from the unit eigenvectors of the projector `I − T_F S_F^{-1} T_F*`,
/// in the eigensolver's order.
pub fn kernel_basis(f: &Frame) -> Result<ComplexMatrix> {
    require_frame(f)?;
    let t = analysis(f);
    let sinv = func_calc(&frame_operator(f), ScalarFn::Inverse)?;
    let range = HermitianMatrix::new(&(&t * sinv.matrix()) * &t.adjoint())?;
    let proj = HermitianMatrix::identity(f.n()).sub(&range)?;
    let es = eigh(&proj)?;
    let k = f.n() - f.d();
    Ok(es.vectors.select_columns(&(0..k).collect::<Vec<_>>()))
}

/// Whether `S_cand` lies in the frame-operator model of `D_{(t,ε)}(F)`.
pub fn model_membership(f: &Frame, s_cand: &HermitianMatrix, r: &DualRestriction, tol: f64) -> Result<bool> {
    check_dims("candidate frame operator", s_cand.dim(), f.d())?;
    let c = canonical(f)?;
    let b = s_cand.sub(&c.s)?;
    let vals = eigvalsh(&b)?;
    let top = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let rank = vals.iter().filter(|x| x.abs() > RANK_TOL * top).count();
    let t0 = c.lambda.trace();
    Ok(vals[vals.len() - 1] >= -tol
        && b.trace() >= r.t - t0 - tol
        && top <= r.eps_sq() + tol
        && rank <= support_cap(f.d(), support_parameter(f)))
}

/// `ρ_{(t,ε²)}(λ(S_{F#}), 2d − n)`, sorted nonincreasing.
pub fn optimal_spectrum(f: &Frame, r: &DualRestriction) -> Result<Spectrum> {
    require_feasible(f, r)?;
    let c = canonical(f)?;
    Ok(waterfill::rho(&c.lambda, r.t, r.eps_sq(), support_parameter(f))?.rho.desc())
}

/// The functions reported as lower bounds on `P_h`.
pub const BOUND_FAMILY: [ScalarFn; 4] = [ScalarFn::Identity, ScalarFn::Square, ScalarFn::Exp, ScalarFn::Inverse];

/// `Σ h(ρ_i)` for each member of [`BOUND_FAMILY`] defined on `ρ`.
pub fn bound_table(rho: &Spectrum) -> BTreeMap<String, f64> {
    BOUND_FAMILY
        .iter()
        .filter_map(|&h| rho.iter().map(|&x| h.eval(x)).sum::<Result<f64>>().ok().map(|v| (h.name(), v)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalDualResult {
    /// The optimal dual `G₀`.
    pub dual: Frame,
    /// `K` with `T_K = T_{G₀} − T_{F#}`.
    pub perturbation_frame: Frame,
    /// `B = T_K* T_K = S_{G₀} − S_{F#}`.
    pub bump: HermitianMatrix,
    /// `λ(S_{F#})`.
    pub lambda: Spectrum,
    /// `ρ_{(t,ε²)}(λ, m)`, paired with `lambda` entrywise.
    pub rho: Spectrum,
    pub waterfill: WaterfillResult,
    pub m: i64,
    pub t0: f64,
    pub eps: f64,
    pub eps_sq: f64,
    /// `Σ h(ρ_i)` keyed by function name.
    pub lower_bounds: BTreeMap<String, f64>,
}

/// `T_{F#} + Σ_j √β_j u_j w_j*` as a frame, with the matching `K`.
fn factor_through_kernel(
    fd: &Frame,
    kernel: &ComplexMatrix,
    w: &ComplexMatrix,
    levels: &[f64],
) -> Result<(Frame, Frame)> {
    let (n, d) = (fd.n(), fd.d());
    if levels.len() > kernel.cols() {
        return Err(Error::Rank(format!(
            "bump of rank {} does not fit in a kernel of dimension {}",
            levels.len(),
            kernel.cols()
        )));
    }
    let mut a = ComplexMatrix::zeros(n, d);
    for (j, &beta) in levels.iter().enumerate() {
        let s = beta.max(0.0).sqrt();
        for i in 0..n {
            let ui = kernel[(i, j)] * s;
            for k in 0..d {
                a[(i, k)] += ui * w[(k, j)].conj();
            }
        }
    }
    let tg = analysis(fd).try_add(&a)?;
    Ok((Frame::from_analysis(&tg)?, Frame::from_analysis(&a)?))
}

/// Builds `G₀`: `B₀ = Σ μ_j w_j ⊗ w_j` in the decreasing eigenbasis of
/// `S_{F#}` with `μ = ρ − λ`, factored as `A = Σ √μ_j u_j w_j*` through
/// `ker T_F*`, and `T_{G₀} = T_{F#} + A`.
pub fn construct_optimal_dual(f: &Frame, r: &DualRestriction) -> Result<OptimalDualResult> {
    let info = require_feasible(f, r)?;
    let c = canonical(f)?;
    let wf = waterfill::rho(&c.lambda, r.t, r.eps_sq(), info.m)?;
    let active: Vec<usize> = (0..f.d()).filter(|&j| wf.increments[j] > 0.0).collect();
    let levels: Vec<f64> = active.iter().map(|&j| wf.increments[j]).collect();
    let kernel = kernel_basis(f)?;
    let (dual, k) = factor_through_kernel(&c.dual, &kernel, &c.basis.select_columns(&active), &levels)?;
    Ok(OptimalDualResult {
        bump: frame_operator(&k),
        perturbation_frame: k,
        dual,
        lower_bounds: bound_table(&wf.rho),
        lambda: c.lambda,
        rho: wf.rho.clone(),
        waterfill: wf,
        m: info.m,
        t0: info.t0,
        eps: r.eps,
        eps_sq: r.eps_sq(),
    })
}

/// Converse construction: a dual `G` with `S_G = S_{F#} + B` for a given
/// `B ⪰ 0` of rank at most `n − d`.
pub fn dual_from_bump(f: &Frame, b: &HermitianMatrix) -> Result<Frame> {
    check_dims("bump dimension", b.dim(), f.d())?;
    let c = canonical(f)?;
    let es = eigh(b)?;
    let top = es.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if es.values[es.dim() - 1] < -1e-12 * top.max(1.0) {
        return Err(Error::Input("bump must be positive semidefinite".into()));
    }
    let active: Vec<usize> = (0..f.d()).filter(|&j| es.values[j] > RANK_TOL * top).collect();
    let levels: Vec<f64> = active.iter().map(|&j| es.values[j]).collect();
    let kernel = kernel_basis(f)?;
    Ok(factor_through_kernel(&c.dual, &kernel, &es.vectors.select_columns(&active), &levels)?.0)
}

/// Random member of `D_{(t,ε)}(F)`: a bump with random rank, random levels
/// in `[0, ε²]` lifted onto the trace budget, a random eigenbasis, and a random
/// isometry into `ker T_F*`.
pub fn sample_random_dual(f: &Frame, r: &DualRestriction, seed: u64) -> Result<Frame> {
    let info = require_feasible(f, r)?;
    let c = canonical(f)?;
    let (n, d) = (f.n(), f.d());
    let e2 = r.eps_sq();
    let cap = support_cap(d, info.m).min(n - d);
    let b = info.budget.max(0.0);
    let mut rng = seeded(seed);
    let rmin = ((b / e2).ceil() as usize).min(cap);
    let rank = rng.random_range(rmin..=cap);
    let mut levels: Vec<f64> = (0..rank).map(|_| rng.random_range(0.0..=e2)).collect();
    let tr: f64 = levels.iter().sum();
    if tr < b {
        let room: f64 = levels.iter().map(|x| e2 - x).sum();
        let alpha = ((b - tr) / room).min(1.0);
        levels.iter_mut().for_each(|x| *x += alpha * (e2 - *x));
    }
    let w = random_isometry(d, rank, &mut rng);
    let kernel = &kernel_basis(f)? * &random_isometry(n - d, rank, &mut rng);
    Ok(factor_through_kernel(&c.dual, &kernel, &w, &levels)?.0)
}

/// `Σ h(ρ_i)`, a lower bound for `P_h(G)` over `D_{(t,ε)}(F)`.
pub fn potential_lower_bound(f: &Frame, r: &DualRestriction, h: ScalarFn) -> Result<f64> {
    optimal_spectrum(f, r)?.iter().map(|&x| h.eval(x)).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    pub is_dual: bool,
    pub dual_residual: f64,
    pub norm_sum: f64,
    /// `‖T_G − T_{F#}‖`, to compare with `ε`.
    pub distance: f64,
    pub in_set: bool,
    /// `max_i |λ_i(S_G) − ρ↓_i|`.
    pub spectrum_error: f64,
    pub spectrum_optimal: bool,
    pub commutator: f64,
    pub commutes: bool,
    pub pairing: bool,
    pub structure: bool,
    pub optimal: bool,
}

/// Re-checks optimality of `G` from scratch: membership in `D_{(t,ε)}(F)`,
/// `λ(S_G) = ρ↓`, and the structure `S_G − S_{F#} = Σ (ρ − λ)_j v_j ⊗ v_j`
/// in a common eigenbasis, compared through joint spectra.
pub fn certify_optimal_dual(f: &Frame, g: &Frame, r: &DualRestriction, tol: f64) -> Result<DualCertificate> {
    check_dims("frame dimension", f.d(), g.d())?;
    check_dims("frame length", f.n(), g.n())?;
    let info = require_feasible(f, r)?;
    let c = canonical(f)?;
    let dc = dual_check(f, g, tol)?;
    let norm_sum = g.norm_sum();
    let distance = analysis_distance(&c.dual, g)?;
    let in_set = dc.is_dual && norm_sum >= r.t - tol * r.t.abs().max(1.0) && distance <= r.eps * (1.0 + tol) + tol;

    let wf = waterfill::rho(&c.lambda, r.t, r.eps_sq(), info.m)?;
    let sg = frame_operator(g);
    let lg = eigvalsh(&sg)?;
    let scale = wf.rho.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let spectrum_error = lg.max_abs_diff(&wf.rho.desc())?;
    let spectrum_optimal = spectrum_error <= tol * scale;

    let commutator = commutator_norm(&c.s, &sg)?;
    let commutes = commutator <= tol * op_norm_h(&c.s)? * op_norm_h(&sg)?;
    let pairing = commutes && {
        let bump = sg.sub(&c.s)?;
        let expected: Vec<(f64, f64)> = c.lambda.iter().copied().zip(wf.increments.iter().copied()).collect();
        pairing_matches(&joint_spectrum(&c.s, &bump, tol.sqrt().max(1e-9))?, &expected, tol.sqrt().max(1e-9))
    };
    let structure = commutes && pairing;
    Ok(DualCertificate {
        is_dual: dc.is_dual,
        dual_residual: dc.residual,
        norm_sum,
        distance,
        in_set,
        spectrum_error,
        spectrum_optimal,
        commutator,
        commutes,
        pairing,
        structure,
        optimal: in_set && spectrum_optimal && structure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{convex_potential, frame_potential, random_frame};
    use crate::hermat::{hermitian_rank, op_norm};
    use crate::specvec::{submajorizes, OrderTolerance};

    fn e1e2e1() -> Frame {
        Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn r(t: f64, eps: f64) -> DualRestriction {
        DualRestriction::new(t, eps).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let f = e1e2e1();
        assert!(feasible_dual(&f, &r(2.0, 1.0)).unwrap());
        assert!(!feasible_dual(&f, &r(2.6, 1.0)).unwrap());
        assert!(feasible_dual(&f, &r(1.5, 1.0)).unwrap());
        assert!(!feasible_dual(&f, &r(1.4, 1.0)).unwrap());
        let info = dual_feasibility(&f, &r(2.6, 1.0)).unwrap();
        assert_eq!((info.t0, info.m, info.capacity), (1.5, 1, 1.0));
        let short = Frame::from_real(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(feasible_dual(&short, &r(2.0, 1.0)), Err(Error::Rank(_))));
    }

    #[test]
    fn kernel_of_worked_example() {
        let k = kernel_basis(&e1e2e1()).unwrap();
        assert_eq!((k.rows(), k.cols()), (3, 1));
        let h = 0.5f64.sqrt();
        let u = k.column(0);
        let phase = u[0] / h;
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!((u[1]).norm() < 1e-12);
        assert!((u[2] + phase * h).norm() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let f = e1e2e1();
        let rr = r(2.0, 1.0);
        let sfd = HermitianMatrix::from_real_diag(&[0.5, 1.0]);
        assert!(!model_membership(&f, &sfd, &rr, 1e-9).unwrap());
        assert!(model_membership(&f, &sfd, &r(1.5, 1.0), 1e-9).unwrap());
        assert!(model_membership(&f, &HermitianMatrix::identity(2), &rr, 1e-9).unwrap());
        let two = HermitianMatrix::from_real_diag(&[0.9, 1.4]);
        assert!(!model_membership(&f, &two, &rr, 1e-9).unwrap());
    }

    #[test]
    fn optimal_spectrum_examples() {
        let f = e1e2e1();
        assert_eq!(optimal_spectrum(&f, &r(2.0, 1.0)).unwrap().as_slice(), &[1.0, 1.0]);
        assert_eq!(optimal_spectrum(&f, &r(1.5, 1.0)).unwrap().as_slice(), &[1.0, 0.5]);
        let f4 = Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = optimal_spectrum(&f4, &r(2.0, 1.0)).unwrap();
        assert!(s.max_abs_diff(&Spectrum::from_slice(&[1.0, 1.0]).unwrap()).unwrap() < 1e-15);
        assert!(matches!(optimal_spectrum(&f, &r(2.6, 1.0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn worked_optimal_dual() {
        let f = e1e2e1();
        let rr = r(2.0, 1.0);
        let res = construct_optimal_dual(&f, &rr).unwrap();
        let g = &res.dual;
        assert!(dual_check(&f, g, 1e-12).unwrap().is_dual);
        let sg = frame_operator(g);
        assert!((sg.matrix() - &ComplexMatrix::identity(2)).max_abs() < 1e-14);
        assert!((g.norm_sum() - 2.0).abs() < 1e-14);
        let fd = canonical_dual(&f).unwrap();
        assert!((analysis_distance(&fd, g).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((frame_potential(g).unwrap() - 2.0).abs() < 1e-14);
        // G₀ = {e₁, e₂, 0} or {0, e₂, e₁} depending on the kernel sign
        let zero_count = g.vectors().iter().filter(|v| v.iter().all(|z| z.norm() < 1e-14)).count();
        assert_eq!(zero_count, 1);
        assert!((res.lower_bounds["square"] - 2.0).abs() < 1e-15);
        let cert = certify_optimal_dual(&f, g, &rr, 1e-9).unwrap();
        assert!(cert.optimal, "{cert:?}");
    }

    #[test]
    fn boundary_returns_canonical_dual() {
        let f = e1e2e1();
        let res = construct_optimal_dual(&f, &r(1.5, 1.0)).unwrap();
        assert_eq!(res.dual, canonical_dual(&f).unwrap());
        assert_eq!(res.bump.matrix().max_abs(), 0.0);
    }

    #[test]
    fn canonical_dual_is_not_in_set() {
        let f = e1e2e1();
        let cert = certify_optimal_dual(&f, &canonical_dual(&f).unwrap(), &r(2.0, 1.0), 1e-9).unwrap();
        assert!(!cert.in_set && !cert.optimal);
        assert!((cert.norm_sum - 1.5).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        let f = e1e2e1();
        let rr = r(2.0, 1.0);
        assert!((potential_lower_bound(&f, &rr, ScalarFn::Square).unwrap() - 2.0).abs() < 1e-15);
        assert!((potential_lower_bound(&f, &rr, ScalarFn::Identity).unwrap() - 2.0).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((potential_lower_bound(&f, &rr, ScalarFn::Exp).unwrap() - 2.0 * e).abs() < 1e-14);
    }

    #[test]
    fn random_instances_sweep() {
        let tol = OrderTolerance::new(1e-8).unwrap();
        let mut rng = seeded(17);
        for trial in 0..12u64 {
            let d = rng.random_range(1..=4usize);
            let n = rng.random_range(d + 1..=2 * d + 2);
            let f = random_frame(d, n, &mut rng).unwrap();
            let m = support_parameter(&f);
            let fd = canonical_dual(&f).unwrap();
            let t0 = fd.norm_sum();
            let eps = rng.random_range(0.2..1.5);
            let cap = support_cap(d, m) as f64 * eps * eps;
            let rr = r(t0 + rng.random_range(0.0..=1.0) * cap, eps);
            let res = construct_optimal_dual(&f, &rr).unwrap();
            let cert = certify_optimal_dual(&f, &res.dual, &rr, 1e-9).unwrap();
            assert!(cert.optimal, "trial {trial}: {cert:?}");
            assert!(hermitian_rank(&res.bump, RANK_TOL).unwrap() <= support_cap(d, m));
            assert!(op_norm(res.bump.matrix()) <= rr.eps_sq() * (1.0 + 1e-12));
            let s0 = eigvalsh(&frame_operator(&res.dual)).unwrap();
            for k in 0..50 {
                let g = sample_random_dual(&f, &rr, trial * 1000 + k).unwrap();
                assert!(dual_check(&f, &g, 1e-9).unwrap().is_dual);
                let sg = frame_operator(&g);
                assert!(model_membership(&f, &sg, &rr, 1e-9).unwrap());
                assert!(fd.norm_sum() <= g.norm_sum() + 1e-12);
                let lg = eigvalsh(&sg).unwrap();
                assert!(submajorizes(&s0, &lg, tol).unwrap());
                for h in [ScalarFn::Identity, ScalarFn::Square, ScalarFn::Exp] {
                    let bound = res.lower_bounds[&h.name()];
                    assert!(convex_potential(&g, h).unwrap() >= bound - 1e-8 * bound.abs().max(1.0));
                }
                let back = dual_from_bump(&f, &sg.sub(&frame_operator(&fd)).unwrap()).unwrap();
                assert!(dual_check(&f, &back, 1e-9).unwrap().is_dual);
                let sb = frame_operator(&back);
                assert!((sb.matrix() - sg.matrix()).max_abs() <= 1e-9 * sg.matrix().max_abs());
            }
        }
    }
}
