//! Eigenvalue inequalities around the multiplicative Lidskii theorem and
//! their equality cases.
//!
//! Everything here uses the congruence `V*SV` with `γ = λ(V*V)`; the positive
//! factor that carries equality structure is then `|V*| = (VV*)^{1/2}`. For
//! the frame-operator orientation `V S V*`, pass `V*`.
//!
//! Indices are zero-based. Multiplicative comparisons are made on sums of
//! logarithms; additive ones are scaled by `max(1, ‖A‖ + ‖B‖)`.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::hermat::{
    abs_star, commutator_norm, eigh, eigvalsh, is_invertible, joint_spectrum, op_norm_h, pairing_matches,
    subspace_intersection, ComplexMatrix, HermitianMatrix, ANGLE_TOL, C64,
};
use crate::random::{random_isometry, random_unitary};
use crate::specvec::Spectrum;

/// Largest dimension accepted by the matching search.
pub const UMM_MAX_DIM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub holds: bool,
    /// Minimum of `RHS − LHS` over everything tested.
    pub worst_slack: f64,
    /// Positions whose slack is at most `tol`.
    pub equality_indices: Vec<usize>,
}

impl InequalityReport {
    fn from_slacks(slacks: &[f64], tol: f64) -> Self {
        let worst_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            holds: worst_slack >= -tol,
            worst_slack,
            equality_indices: (0..slacks.len()).filter(|&i| slacks[i] <= tol).collect(),
        }
    }
}

fn require_square(v: &ComplexMatrix, d: usize) -> Result<()> {
    if !v.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", v.rows(), v.cols())));
    }
    check_dims("operator dimension", v.rows(), d)
}

fn require_invertible(v: &ComplexMatrix) -> Result<()> {
    if !is_invertible(v) {
        return Err(Error::Input("V is singular".into()));
    }
    Ok(())
}

/// `λ(V*SV)`.
pub fn congruence_spectrum(s: &HermitianMatrix, v: &ComplexMatrix) -> Result<Spectrum> {
    require_square(v, s.dim())?;
    eigvalsh(&s.congruence(&v.adjoint())?)
}

fn logs(x: &Spectrum, what: &str) -> Result<Vec<f64>> {
    x.iter()
        .map(|&v| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::Domain(format!("{what} has a nonpositive eigenvalue {v}")))
            }
        })
        .collect()
}

fn additive_scale(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    Ok((op_norm_h(a)? + op_norm_h(b)?).max(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub report: InequalityReport,
    /// For each equality index, a common unit eigenvector of `A` (at
    /// `λ_i(A)`) and `B` (at `λ_1(B)`), when one exists.
    #[serde(skip)]
    pub witnesses: Vec<(usize, Option<Vec<C64>>)>,
    pub all_witnessed: bool,
}

/// `λ_i(A + B) ≤ λ_i(A) + λ_1(B)` for every `i`.
pub fn weyl_check(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<WeylReport> {
    check_dims("Weyl", a.dim(), b.dim())?;
    let scale = additive_scale(a, b)?;
    let ea = eigh(a)?;
    let eb = eigh(b)?;
    let sum = eigvalsh(&a.add(b)?)?;
    let top_b = eb.values[0];
    let slacks: Vec<f64> = (0..a.dim()).map(|i| (ea.values[i] + top_b - sum[i]) / scale).collect();
    let report = InequalityReport::from_slacks(&slacks, tol);
    let space_tol = tol.sqrt().max(1e-9) * scale;
    let qb = eb.eigenspace(top_b, space_tol);
    let mut witnesses = Vec::with_capacity(report.equality_indices.len());
    for &i in &report.equality_indices {
        let qa = ea.eigenspace(ea.values[i], space_tol);
        let common = subspace_intersection(&qa, &qb, ANGLE_TOL)?;
        witnesses.push((i, (common.cols() > 0).then(|| common.column(0))));
    }
    let all_witnessed = witnesses.iter().all(|w| w.1.is_some());
    Ok(WeylReport { report, witnesses, all_witnessed })
}

#[derive(Debug, Clone, Serialize)]
pub struct OstrowskiReport {
    pub report: InequalityReport,
    /// Orthonormal columns fixed by `|V*|` and eigen for `S` at the equality
    /// eigenvalues.
    #[serde(skip)]
    pub witness: ComplexMatrix,
    /// The witness system has as many vectors as there are equality indices.
    pub witnessed: bool,
}

/// `λ_i(S) ≤ λ_i(V*SV)` for `S ⪰ 0` and expansive `V`.
pub fn ostrowski_check(s: &HermitianMatrix, v: &ComplexMatrix, tol: f64) -> Result<OstrowskiReport> {
    require_square(v, s.dim())?;
    let g = eigvalsh(&HermitianMatrix::gram(v))?;
    if g[g.len() - 1] < 1.0 - tol {
        return Err(Error::Precondition(format!("V is not expansive (λ_min(V*V) = {})", g[g.len() - 1])));
    }
    let es = eigh(s)?;
    let lv = congruence_spectrum(s, v)?;
    let scale = es.values[0].abs().max(1.0);
    let slacks: Vec<f64> = (0..s.dim()).map(|i| (lv[i] - es.values[i]) / scale).collect();
    let report = InequalityReport::from_slacks(&slacks, tol);
    let space_tol = tol.sqrt().max(1e-9);
    let fixed = eigh(&abs_star(v)?)?.eigenspace(1.0, space_tol * g[0].sqrt().max(1.0));
    let mut cols: Vec<Vec<C64>> = Vec::new();
    let mut witnessed = true;
    let mut done = vec![false; s.dim()];
    for &i in &report.equality_indices {
        if done[i] {
            continue;
        }
        let value = es.values[i];
        let same: Vec<usize> =
            report.equality_indices.iter().copied().filter(|&j| (es.values[j] - value).abs() <= space_tol * scale).collect();
        same.iter().for_each(|&j| done[j] = true);
        let common = subspace_intersection(&es.eigenspace(value, space_tol * scale), &fixed, ANGLE_TOL)?;
        witnessed &= common.cols() >= same.len();
        cols.extend((0..common.cols().min(same.len())).map(|c| common.column(c)));
    }
    let witness = if cols.is_empty() {
        ComplexMatrix::zeros(s.dim(), 0)
    } else {
        ComplexMatrix::from_columns(s.dim(), &cols)?
    };
    Ok(OstrowskiReport { report, witness, witnessed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiMathiasReport {
    pub holds: bool,
    /// `Σ_{i∈J} log(λ_i(V*SV)/λ_i(S))`.
    pub log_ratio: f64,
    /// `log_ratio − Σ_{i≤k} log λ_{d+1−i}(V*V)`.
    pub lower_slack: f64,
    /// `Σ_{i≤k} log λ_i(V*V) − log_ratio`.
    pub upper_slack: f64,
    pub lower_equality: bool,
    pub upper_equality: bool,
}

/// `Π_{i≤k} λ_{d+1−i}(V*V) ≤ Π_{i∈J} λ_i(V*SV)/λ_i(S) ≤ Π_{i≤k} λ_i(V*V)` with `k = |J|`.
pub fn li_mathias_check(s: &HermitianMatrix, v: &ComplexMatrix, j: &[usize], tol: f64) -> Result<LiMathiasReport> {
    let lam = eigvalsh(s)?;
    let lv = congruence_spectrum(s, v)?;
    require_invertible(v)?;
    let g = logs(&eigvalsh(&HermitianMatrix::gram(v))?, "V*V")?;
    li_mathias_from(&lam, &lv, &g, j, tol)
}

fn li_mathias_from(lam: &Spectrum, lv: &Spectrum, log_gamma: &[f64], j: &[usize], tol: f64) -> Result<LiMathiasReport> {
    let d = lam.len();
    let mut seen = vec![false; d];
    for &i in j {
        if i >= d || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parameter(format!("index set must hold distinct indices below {d}")));
        }
        if !(lam[i] > 0.0) {
            return Err(Error::Domain(format!("λ_{i}(S) = {} is not positive", lam[i])));
        }
    }
    let k = j.len();
    let log_ratio: f64 = j.iter().map(|&i| lv[i].ln() - lam[i].ln()).sum();
    let lower: f64 = log_gamma[d - k..].iter().sum();
    let upper: f64 = log_gamma[..k].iter().sum();
    let (lower_slack, upper_slack) = (log_ratio - lower, upper - log_ratio);
    Ok(LiMathiasReport {
        holds: lower_slack >= -tol && upper_slack >= -tol,
        log_ratio,
        lower_slack,
        upper_slack,
        lower_equality: lower_slack.abs() <= tol,
        upper_equality: upper_slack.abs() <= tol,
    })
}

/// All subsets of `0..d` with `1 ≤ |J| ≤ max_size`, in lexicographic order.
pub fn subsets_up_to(d: usize, max_size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, d: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..d {
            cur.push(i);
            out.push(cur.clone());
            if cur.len() < max {
                go(i + 1, d, max, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, d, max_size, &mut Vec::new(), &mut out);
    out
}

/// Li–Mathias over every `J` with `|J| ≤ max_size`; slacks are the smaller of
/// the two sides per subset, reported in the order of [`subsets_up_to`].
pub fn li_mathias_all(s: &HermitianMatrix, v: &ComplexMatrix, max_size: usize, tol: f64) -> Result<InequalityReport> {
    let lam = eigvalsh(s)?;
    let lv = congruence_spectrum(s, v)?;
    require_invertible(v)?;
    let g = logs(&eigvalsh(&HermitianMatrix::gram(v))?, "V*V")?;
    let slacks = subsets_up_to(s.dim(), max_size)
        .iter()
        .map(|j| li_mathias_from(&lam, &lv, &g, j, tol).map(|r| r.lower_slack.min(r.upper_slack)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(InequalityReport::from_slacks(&slacks, tol))
}

/// Slacks of `x ≺_log y`: `L_k(y) − L_k(x)` for `k < d`, then `−|L_d(y) − L_d(x)|`.
fn log_majorization_slacks(x: &[f64], y: &[f64]) -> Vec<f64> {
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (x, y) = (sorted(x), sorted(y));
    let d = x.len();
    let (mut lx, mut ly) = (0.0, 0.0);
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        lx += x[k];
        ly += y[k];
        out.push(if k + 1 < d { ly - lx } else { -(ly - lx).abs() });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub holds: bool,
    /// `λ(S)∘γ↑ ≺_log λ(V*SV)`.
    pub lower: InequalityReport,
    /// `λ(V*SV) ≺_log λ(S)∘γ`.
    pub upper: InequalityReport,
}

/// `λ(S)∘γ↑ ≺_log λ(V*SV) ≺_log λ(S)∘γ`, `γ = λ(V*V)`.
pub fn mult_lidskii_sandwich(s: &HermitianMatrix, v: &ComplexMatrix, tol: f64) -> Result<SandwichReport> {
    require_square(v, s.dim())?;
    require_invertible(v)?;
    let lam = logs(&eigvalsh(s)?, "S")?;
    let g = logs(&eigvalsh(&HermitianMatrix::gram(v))?, "V*V")?;
    let lv = logs(&congruence_spectrum(s, v)?, "V*SV")?;
    let low: Vec<f64> = lam.iter().zip(g.iter().rev()).map(|(a, b)| a + b).collect();
    let high: Vec<f64> = lam.iter().zip(&g).map(|(a, b)| a + b).collect();
    let lower = InequalityReport::from_slacks(&log_majorization_slacks(&low, &lv), tol);
    let upper = InequalityReport::from_slacks(&log_majorization_slacks(&lv, &high), tol);
    Ok(SandwichReport { holds: lower.holds && upper.holds, lower, upper })
}

/// `λ(A) + λ↑(B) ≺ λ(A + B)`.
pub fn additive_lidskii_check(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<InequalityReport> {
    check_dims("Lidskii", a.dim(), b.dim())?;
    let scale = additive_scale(a, b)?;
    let la = eigvalsh(a)?;
    let lb = eigvalsh(b)?;
    let lab = eigvalsh(&a.add(b)?)?;
    let mut x: Vec<f64> = la.iter().zip(lb.iter().rev()).map(|(p, q)| p + q).collect();
    x.sort_by(|p, q| q.total_cmp(p));
    let d = x.len();
    let (mut px, mut py) = (0.0, 0.0);
    let slacks: Vec<f64> = (0..d)
        .map(|k| {
            px += x[k];
            py += lab[k];
            let s = (py - px) / scale;
            if k + 1 < d {
                s
            } else {
                -s.abs()
            }
        })
        .collect();
    Ok(InequalityReport::from_slacks(&slacks, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualityCertificate {
    pub side: Side,
    /// `max_i |log λ_i(V*SV) − log e_i|` against the extreme `e` of this side.
    pub extreme_error: f64,
    pub attains: bool,
    /// Largest partial log-sum gap to the extreme over `k < d`.
    pub max_partial_slack: f64,
    pub commutator: f64,
    pub commutes: bool,
    pub pairing: bool,
    /// `S` and `|V*|` admit a common eigenbasis with the side's pairing.
    pub certified: bool,
}

/// Whether `λ(V*SV)` sits at the lower or upper end of the sandwich, and if
/// so, whether `S` and `|V*|` are jointly diagonal with `γ^{1/2}` paired
/// against `λ(S)` in reverse (lower) or in order (upper).
pub fn equality_case_check(s: &HermitianMatrix, v: &ComplexMatrix, side: Side, tol: f64) -> Result<EqualityCertificate> {
    require_square(v, s.dim())?;
    require_invertible(v)?;
    let lam_s = eigvalsh(s)?;
    let lam = logs(&lam_s, "S")?;
    let gamma = eigvalsh(&HermitianMatrix::gram(v))?;
    let g = logs(&gamma, "V*V")?;
    let lv = logs(&congruence_spectrum(s, v)?, "V*SV")?;
    let d = lam.len();
    let paired: Vec<usize> = match side {
        Side::Lower => (0..d).rev().collect(),
        Side::Upper => (0..d).collect(),
    };
    let mut extreme: Vec<f64> = (0..d).map(|i| lam[i] + g[paired[i]]).collect();
    extreme.sort_by(|a, b| b.total_cmp(a));
    let extreme_error = lv.iter().zip(&extreme).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let attains = extreme_error <= tol;
    let slacks = match side {
        Side::Lower => log_majorization_slacks(&extreme, &lv),
        Side::Upper => log_majorization_slacks(&lv, &extreme),
    };
    let max_partial_slack = slacks[..d - 1].iter().copied().fold(0.0, f64::max);
    let p = abs_star(v)?;
    let commutator = commutator_norm(s, &p)?;
    let commutes = commutator <= tol * op_norm_h(s)? * op_norm_h(&p)?;
    let ctol = tol.sqrt().max(1e-9);
    let expected: Vec<(f64, f64)> = (0..d).map(|i| (lam_s[i], gamma[paired[i]].sqrt())).collect();
    let pairing = commutes && pairing_matches(&joint_spectrum(s, &p, ctol)?, &expected, ctol);
    Ok(EqualityCertificate {
        side,
        extreme_error,
        attains,
        max_partial_slack,
        commutator,
        commutes,
        pairing,
        certified: attains && commutes && pairing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingReport {
    pub is_umm: bool,
    pub is_lmm: bool,
    /// Indices in the order they enter `J_1 ⊂ J_2 ⊂ …`.
    pub umm_chain: Option<Vec<usize>>,
    pub lmm_chain: Option<Vec<usize>>,
}

/// Nested chain `J_1 ⊂ … ⊂ J_d` with `Σ_{i∈J_k} r_i = Σ_{i≤k} t_i` at every level.
fn find_chain(r: &[f64], t: &[f64], tol: f64) -> Option<Vec<usize>> {
    fn dfs(mask: u32, cum: f64, target: f64, r: &[f64], t: &[f64], tol: f64, dead: &mut [bool], path: &mut Vec<usize>) -> bool {
        let k = path.len();
        if k == r.len() {
            return true;
        }
        if dead[mask as usize] {
            return false;
        }
        let next = target + t[k];
        for i in 0..r.len() {
            if mask & (1 << i) != 0 || (cum + r[i] - next).abs() > tol {
                continue;
            }
            path.push(i);
            if dfs(mask | (1 << i), cum + r[i], next, r, t, tol, dead, path) {
                return true;
            }
            path.pop();
        }
        dead[mask as usize] = true;
        false
    }
    let mut dead = vec![false; 1 << r.len()];
    let mut path = Vec::with_capacity(r.len());
    dfs(0, 0.0, 0.0, r, t, tol, &mut dead, &mut path).then_some(path)
}

/// Exhaustive search for upper and lower multiplicative matchings.
pub fn umm_detect(s: &HermitianMatrix, v: &ComplexMatrix, tol: f64) -> Result<MatchingReport> {
    let d = s.dim();
    if d > UMM_MAX_DIM {
        return Err(Error::Parameter(format!("matching search is limited to d ≤ {UMM_MAX_DIM}, got {d}")));
    }
    require_square(v, d)?;
    require_invertible(v)?;
    let lam = logs(&eigvalsh(s)?, "S")?;
    let lv = logs(&congruence_spectrum(s, v)?, "V*SV")?;
    let g = logs(&eigvalsh(&HermitianMatrix::gram(v))?, "V*V")?;
    let r: Vec<f64> = lv.iter().zip(&lam).map(|(a, b)| a - b).collect();
    let g_up: Vec<f64> = g.iter().rev().copied().collect();
    let umm_chain = find_chain(&r, &g, tol);
    let lmm_chain = find_chain(&r, &g_up, tol);
    Ok(MatchingReport { is_umm: umm_chain.is_some(), is_lmm: lmm_chain.is_some(), umm_chain, lmm_chain })
}

/// The implication "UMM or LMM ⇒ `S` and `|V*|` commute" on this input.
///
/// Commutation is judged with relative tolerance `√tol`, since a matching
/// detected to within `tol` on log-sums only pins the eigenvectors to `√tol`.
pub fn umm_implies_commute(s: &HermitianMatrix, v: &ComplexMatrix, tol: f64) -> Result<bool> {
    let m = umm_detect(s, v, tol)?;
    if !(m.is_umm || m.is_lmm) {
        return Ok(true);
    }
    let p = abs_star(v)?;
    Ok(commutator_norm(s, &p)? <= tol.sqrt() * op_norm_h(s)? * op_norm_h(&p)?)
}

/// Rotation by `θ` in the plane of orthonormal `x, y`:
/// `R = I + (cos θ − 1)(xx* + yy*) + sin θ (yx* − xy*)`.
pub fn plane_rotation(x: &[C64], y: &[C64], theta: f64) -> Result<ComplexMatrix> {
    check_dims("rotation plane", x.len(), y.len())?;
    let (c, s) = (theta.cos(), theta.sin());
    Ok(ComplexMatrix::from_fn(x.len(), x.len(), |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        let proj = x[i] * x[j].conj() + y[i] * y[j].conj();
        let skew = y[i] * x[j].conj() - x[i] * y[j].conj();
        C64::new(id, 0.0) + proj * (c - 1.0) + skew * s
    }))
}

/// `R V R*` for a rotation by `θ ~ U[lo, hi]` in a random 2-plane.
pub fn random_twist<R: Rng + ?Sized>(v: &ComplexMatrix, lo: f64, hi: f64, rng: &mut R) -> Result<ComplexMatrix> {
    if v.rows() < 2 {
        return Err(Error::Dimension("a twist needs d ≥ 2".into()));
    }
    let q = random_isometry(v.rows(), 2, rng);
    let theta = rng.random_range(lo..=hi);
    let r = plane_rotation(&q.column(0), &q.column(1), theta)?;
    Ok(&(&r * v) * &r.adjoint())
}

/// `V = |V*| U` with `|V*| = Σ γ'^{1/2}_i v_i ⊗ v_i` in the eigenbasis of `S`
/// (`γ'` reversed for the lower side) and a Haar unitary `U`, so `λ(V*SV)`
/// sits at the chosen end of the sandwich.
pub fn extreme_pair_operator<R: Rng + ?Sized>(
    s: &HermitianMatrix,
    gamma: &Spectrum,
    side: Side,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let p = crate::perturbopt::gamma_operator(s, gamma, side == Side::Lower)?;
    Ok(&p * &random_unitary(s.dim(), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_invertible, random_pd, seeded};

    fn diag(x: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diag(x)
    }

    fn rdiag(x: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(x)
    }

    #[test]
    fn weyl_examples() {
        let a = diag(&[2.0, 0.0]);
        let rep = weyl_check(&a, &diag(&[1.0, 0.0]), 1e-10).unwrap();
        assert!(rep.report.holds);
        assert_eq!(rep.report.equality_indices, vec![0]);
        let w = rep.witnesses[0].1.as_ref().unwrap();
        assert!((w[0].norm() - 1.0).abs() < 1e-12 && w[1].norm() < 1e-12);
        let zero = weyl_check(&a, &diag(&[0.0, 0.0]), 1e-10).unwrap();
        assert_eq!(zero.report.equality_indices, vec![0, 1]);
        assert!(zero.all_witnessed);
    }

    #[test]
    fn ostrowski_examples() {
        let s = diag(&[4.0, 1.0]);
        let rep = ostrowski_check(&s, &rdiag(&[1.0, 2f64.sqrt()]), 1e-10).unwrap();
        assert!(rep.report.holds);
        assert_eq!(rep.report.equality_indices, vec![0]);
        assert!(rep.witnessed && rep.witness.cols() == 1);
        assert!((rep.witness[(0, 0)].norm() - 1.0).abs() < 1e-12);
        let mut rng = seeded(1);
        let u = random_unitary(3, &mut rng);
        let s3 = diag(&[3.0, 2.0, 1.0]);
        let rep = ostrowski_check(&s3, &u, 1e-10).unwrap();
        assert_eq!(rep.report.equality_indices, vec![0, 1, 2]);
        assert!(rep.witnessed);
        assert!(matches!(ostrowski_check(&s, &rdiag(&[0.5, 1.0]), 1e-10), Err(Error::Precondition(_))));
    }

    #[test]
    fn li_mathias_examples() {
        let s = diag(&[4.0, 1.0]);
        let v = rdiag(&[2f64.sqrt(), 1.0]);
        let rep = li_mathias_check(&s, &v, &[0], 1e-12).unwrap();
        assert!(rep.holds && rep.upper_equality && !rep.lower_equality);
        assert!((rep.log_ratio - 2f64.ln()).abs() < 1e-14);
        let full = li_mathias_check(&s, &v, &[0, 1], 1e-12).unwrap();
        assert!(full.lower_equality && full.upper_equality);
        assert!(matches!(li_mathias_check(&diag(&[1.0, 0.0]), &v, &[1], 1e-12), Err(Error::Domain(_))));
        assert!(matches!(li_mathias_check(&s, &v, &[0, 0], 1e-12), Err(Error::Parameter(_))));
    }

    #[test]
    fn sandwich_examples() {
        let s = diag(&[4.0, 1.0]);
        let rep = mult_lidskii_sandwich(&s, &rdiag(&[1.0, 2f64.sqrt()]), 1e-12).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.lower.equality_indices, vec![0, 1]);
        let mut rng = seeded(5);
        let u = random_unitary(2, &mut rng);
        let rep = mult_lidskii_sandwich(&s, &u, 1e-10).unwrap();
        assert_eq!(rep.lower.equality_indices, vec![0, 1]);
        assert_eq!(rep.upper.equality_indices, vec![0, 1]);
        assert!(matches!(mult_lidskii_sandwich(&s, &rdiag(&[1.0, 0.0]), 1e-10), Err(Error::Input(_))));
    }

    #[test]
    fn additive_examples() {
        let rep = additive_lidskii_check(&diag(&[3.0, 1.0]), &diag(&[1.0, 0.0]), 1e-12).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.equality_indices, vec![1]);
        let b0 = additive_lidskii_check(&diag(&[3.0, 1.0]), &diag(&[0.0, 0.0]), 1e-12).unwrap();
        assert_eq!(b0.equality_indices, vec![0, 1]);
    }

    #[test]
    fn equality_cases_and_twists() {
        let mut rng = seeded(9);
        let mut ties = 0;
        for trial in 0..60 {
            let d = 2 + trial % 4;
            let s = random_pd(d, 0.5, 4.0, &mut rng);
            let gamma = Spectrum::new((0..d).map(|_| rng.random_range(0.3..3.0)).collect()).unwrap().desc();
            for side in [Side::Lower, Side::Upper] {
                let v = extreme_pair_operator(&s, &gamma, side, &mut rng).unwrap();
                let cert = equality_case_check(&s, &v, side, 1e-9).unwrap();
                assert!(cert.certified, "{cert:?}");
                let twisted = random_twist(&v, 0.1, 1.0, &mut rng).unwrap();
                let cert = equality_case_check(&s, &twisted, side, 1e-9).unwrap();
                if cert.certified || cert.max_partial_slack <= 1e-6 {
                    ties += 1;
                }
            }
        }
        assert!(ties <= 1, "{ties} ties");
    }

    #[test]
    fn matching_examples() {
        let s = diag(&[4.0, 1.0]);
        let m = umm_detect(&s, &rdiag(&[2f64.sqrt(), 1.0]), 1e-10).unwrap();
        assert!(m.is_umm);
        assert_eq!(m.umm_chain, Some(vec![0, 1]));
        let mut rng = seeded(2);
        let u = random_unitary(4, &mut rng);
        let m = umm_detect(&diag(&[4.0, 3.0, 2.0, 1.0]), &u, 1e-10).unwrap();
        assert!(m.is_umm && m.is_lmm);
        let big = HermitianMatrix::identity(11);
        assert!(matches!(umm_detect(&big, &ComplexMatrix::identity(11), 1e-10), Err(Error::Parameter(_))));
    }

    #[test]
    fn generic_pairs_are_not_matchings() {
        let mut rng = seeded(21);
        for trial in 0..50 {
            let d = 2 + trial % 4;
            let s = random_pd(d, 0.5, 4.0, &mut rng);
            let v = random_invertible(d, 0.5, 2.0, &mut rng);
            let m = umm_detect(&s, &v, 1e-8).unwrap();
            assert!(!m.is_umm && !m.is_lmm);
            assert!(umm_implies_commute(&s, &v, 1e-8).unwrap());
        }
    }

    #[test]
    fn constructed_matchings_commute() {
        let mut rng = seeded(22);
        for trial in 0..50 {
            let d = 1 + trial % 5;
            let s = random_pd(d, 0.5, 4.0, &mut rng);
            let gamma = Spectrum::new((0..d).map(|_| rng.random_range(0.3..3.0)).collect()).unwrap().desc();
            let up = extreme_pair_operator(&s, &gamma, Side::Upper, &mut rng).unwrap();
            assert!(umm_detect(&s, &up, 1e-9).unwrap().is_umm);
            assert!(umm_implies_commute(&s, &up, 1e-9).unwrap());
            // anti-aligned products stay sorted when λ(S) is spread wider than γ
            let u = random_unitary(d, &mut rng);
            let lam: Vec<f64> = (0..d).map(|i| 5f64.powi(-(i as i32)) * rng.random_range(1.0..1.2)).collect();
            let spread = HermitianMatrix::from_real_diag(&lam).congruence(&u).unwrap();
            let g = Spectrum::new((0..d).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap().desc();
            let low = extreme_pair_operator(&spread, &g, Side::Lower, &mut rng).unwrap();
            assert!(umm_detect(&spread, &low, 1e-9).unwrap().is_lmm);
            assert!(umm_implies_commute(&spread, &low, 1e-9).unwrap());
        }
    }

    #[test]
    fn random_sweep() {
        let mut rng = seeded(31);
        for trial in 0..200 {
            let d = 1 + trial % 6;
            let s = random_pd(d, 0.1, 5.0, &mut rng);
            let v = random_invertible(d, 0.3, 3.0, &mut rng);
            assert!(mult_lidskii_sandwich(&s, &v, 1e-8).unwrap().holds);
            assert!(li_mathias_all(&s, &v, 3, 1e-8).unwrap().holds);
            assert!(mult_lidskii_sandwich(&s, &v.adjoint(), 1e-8).unwrap().holds);
            let a = random_hermitian(d, &mut rng);
            let b = random_hermitian(d, &mut rng);
            assert!(weyl_check(&a, &b, 1e-8).unwrap().report.holds);
            assert!(additive_lidskii_check(&a, &b, 1e-8).unwrap().holds);
            let sv = eigvalsh(&HermitianMatrix::gram(&v)).unwrap();
            let expand = v.scale_real(1.0 / sv[d - 1].sqrt());
            assert!(ostrowski_check(&s, &expand, 1e-8).unwrap().report.holds);
        }
    }

    #[test]
    fn sandwich_agrees_with_li_mathias() {
        // lower end: Li–Mathias on (S⁻¹, S^{1/2}V), minimized over |J| = k;
        // upper end: Li–Mathias on (S, V) with J = {1..k}
        use crate::hermat::{func_calc, ScalarFn};
        let mut rng = seeded(41);
        for trial in 0..40 {
            let d = 1 + trial % 5;
            let s = random_pd(d, 0.2, 4.0, &mut rng);
            let v = random_invertible(d, 0.5, 2.0, &mut rng);
            let inv = func_calc(&s, ScalarFn::Inverse).unwrap();
            let w = func_calc(&s, ScalarFn::Sqrt).unwrap().matrix() * &v;
            let rep = mult_lidskii_sandwich(&s, &v, 1e-9).unwrap();
            let low = log_majorization_slacks(
                &{
                    let lam = eigvalsh(&s).unwrap();
                    let g = eigvalsh(&HermitianMatrix::gram(&v)).unwrap();
                    lam.iter().zip(g.iter().rev()).map(|(a, b)| (a * b).ln()).collect::<Vec<_>>()
                },
                &congruence_spectrum(&s, &v).unwrap().iter().map(|x| x.ln()).collect::<Vec<_>>(),
            );
            for k in 1..d {
                let via_lm = subsets_up_to(d, k)
                    .into_iter()
                    .filter(|j| j.len() == k)
                    .map(|j| li_mathias_check(&inv, &w, &j, 1e-9).unwrap().upper_slack)
                    .fold(f64::INFINITY, f64::min);
                assert!((via_lm - low[k - 1]).abs() < 1e-9, "{via_lm} vs {}", low[k - 1]);
                let j: Vec<usize> = (0..k).collect();
                let up = li_mathias_check(&s, &v, &j, 1e-9).unwrap().upper_slack;
                assert!(up >= -1e-9);
            }
            assert!(rep.holds);
        }
    }
}
