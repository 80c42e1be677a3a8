//! Finite frames in `C^d`: analysis and frame operators, bounds, canonical
//! dual, duality test, equivalence action and convex potentials.
//!
//! Inner products are linear in the first argument, so the analysis operator
//! has rows `f_i*` and `(T_F x)_i = ⟨x, f_i⟩`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::hermat::{
    eigvalsh, func_calc, is_invertible, numerical_rank, op_norm, ComplexMatrix, HermitianMatrix, ScalarFn, C64,
    RANK_TOL,
};
use crate::random::complex_normal;

/// A sequence of `n` vectors in `C^d`; it is a frame when the vectors span.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    d: usize,
    vectors: Vec<Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    d: usize,
    n: usize,
    vectors: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Frame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson {
            d: self.d,
            n: self.n(),
            vectors: self.vectors.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = FrameJson::deserialize(d)?;
        if raw.vectors.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but found {} vectors",
                raw.n,
                raw.vectors.len()
            )));
        }
        let vectors = raw.vectors.iter().map(|v| v.iter().map(|p| C64::new(p[0], p[1])).collect()).collect();
        Frame::new(raw.d, vectors).map_err(serde::de::Error::custom)
    }
}

impl Frame {
    pub fn new(d: usize, vectors: Vec<Vec<C64>>) -> Result<Self> {
        if d == 0 || vectors.is_empty() {
            return Err(Error::Input("a frame needs d ≥ 1 and at least one vector".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != d {
                return Err(Error::Dimension(format!("vector {i} has length {}, expected {d}", v.len())));
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Input(format!("vector {i} has a non-finite entry")));
            }
        }
        Ok(Self { d, vectors })
    }

    pub fn from_real(d: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        Self::new(d, vectors.iter().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
    }

    /// Inverse of [`analysis`]: `f_i` is the conjugate of row `i`.
    pub fn from_analysis(t: &ComplexMatrix) -> Result<Self> {
        Self::new(t.cols(), (0..t.rows()).map(|i| t.row(i).iter().map(|z| z.conj()).collect()).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[C64] {
        &self.vectors[i]
    }

    /// `Σ ‖f_i‖²`.
    pub fn norm_sum(&self) -> f64 {
        self.vectors.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Input(format!("frame JSON: {e}")))
    }
}

/// `n × d` analysis matrix with row `i` equal to `f_i*`.
pub fn analysis(f: &Frame) -> ComplexMatrix {
    ComplexMatrix::from_fn(f.n(), f.d(), |i, j| f.vectors[i][j].conj())
}

/// `d × n` synthesis matrix `T_F*`, whose columns are the `f_i`.
pub fn synthesis(f: &Frame) -> ComplexMatrix {
    ComplexMatrix::from_fn(f.d(), f.n(), |i, j| f.vectors[j][i])
}

/// `S_F = T_F* T_F = Σ f_i ⊗ f_i`.
pub fn frame_operator(f: &Frame) -> HermitianMatrix {
    HermitianMatrix::gram(&analysis(f))
}

/// Whether the vectors span `C^d` (smallest singular value above `1e-10·σ_max`).
pub fn is_frame(f: &Frame) -> Result<bool> {
    Ok(numerical_rank(&analysis(f), RANK_TOL)? == f.d())
}

pub(crate) fn require_frame(f: &Frame) -> Result<()> {
    let r = numerical_rank(&analysis(f), RANK_TOL)?;
    if r != f.d() {
        return Err(Error::Rank(format!("vectors span a {r}-dimensional subspace of C^{}", f.d())));
    }
    Ok(())
}

/// Optimal frame bounds `(λ_min(S_F), λ_max(S_F))`.
pub fn frame_bounds(f: &Frame) -> Result<(f64, f64)> {
    require_frame(f)?;
    let v = eigvalsh(&frame_operator(f))?;
    Ok((v[v.len() - 1], v[0]))
}

/// `‖S_F − (tr S_F / d)·I‖ ≤ tol · tr S_F`.
pub fn is_tight(f: &Frame, tol: f64) -> Result<bool> {
    let s = frame_operator(f);
    let tr = s.trace();
    let dev = s.sub(&HermitianMatrix::identity(f.d()).scale(tr / f.d() as f64))?;
    Ok(op_norm(dev.matrix()) <= tol * tr)
}

/// `F# = {S_F^{-1} f_i}`.
pub fn canonical_dual(f: &Frame) -> Result<Frame> {
    require_frame(f)?;
    let sinv = func_calc(&frame_operator(f), ScalarFn::Inverse)?;
    Frame::from_analysis(&(&analysis(f) * sinv.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPairReport {
    /// `‖T_F* T_G − I‖_op`.
    pub residual: f64,
    pub is_dual: bool,
}

/// `G` is a dual of `F` when `T_F* T_G = I`.
pub fn dual_check(f: &Frame, g: &Frame, tol: f64) -> Result<DualPairReport> {
    check_dims("frame dimension", f.d(), g.d())?;
    check_dims("frame length", f.n(), g.n())?;
    let prod = &synthesis(f) * &analysis(g);
    let residual = op_norm(&(&prod - &ComplexMatrix::identity(f.d())));
    Ok(DualPairReport { residual, is_dual: residual <= tol })
}

/// `V·F = {V f_i}`; its frame operator is `V S_F V*`.
pub fn apply_operator(v: &ComplexMatrix, f: &Frame) -> Result<Frame> {
    if v.rows() != f.d() || v.cols() != f.d() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, frame lives in C^{}",
            v.rows(),
            v.cols(),
            f.d()
        )));
    }
    if !is_invertible(v) {
        return Err(Error::Input("operator is singular".into()));
    }
    Frame::new(f.d(), f.vectors.iter().map(|x| v.mul_vec(x)).collect::<Result<_>>()?)
}

/// `‖T_G − T_F‖_op`.
pub fn analysis_distance(f: &Frame, g: &Frame) -> Result<f64> {
    Ok(op_norm(&analysis(g).try_sub(&analysis(f))?))
}

/// Relative agreement required between the two frame-potential evaluations.
pub const FP_CONSISTENCY_TOL: f64 = 1e-9;

/// `FP(F) = Σ_{i,j} |⟨f_i, f_j⟩|²`, cross-checked against `tr S_F²`.
pub fn frame_potential(f: &Frame) -> Result<f64> {
    let n = f.n();
    let mut double = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ip: C64 = f.vectors[i].iter().zip(&f.vectors[j]).map(|(a, b)| a * b.conj()).sum();
            double += ip.norm_sqr();
        }
    }
    let s = frame_operator(f);
    let trace_sq = s.matrix().frobenius_norm().powi(2);
    if (double - trace_sq).abs() > FP_CONSISTENCY_TOL * double.max(trace_sq).max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "frame potential mismatch: double sum {double} vs tr S² {trace_sq}"
        )));
    }
    Ok(double)
}

/// `P_h(F) = Σ h(λ_i(S_F))`.
pub fn convex_potential(f: &Frame, h: ScalarFn) -> Result<f64> {
    if matches!(h, ScalarFn::Inverse | ScalarFn::Log) {
        require_frame(f)?;
    }
    let v = eigvalsh(&frame_operator(f))?;
    let floor = 1e-12 * v[0].abs();
    v.iter().map(|&x| h.eval(if x < 0.0 && x >= -floor { 0.0 } else { x })).sum()
}

/// Mean squared error `tr S_F^{-1}`.
pub fn mse(f: &Frame) -> Result<f64> {
    convex_potential(f, ScalarFn::Inverse)
}

/// Gaussian frame of `n` vectors in `C^d`, resampled until it spans.
pub fn random_frame<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Frame> {
    if d == 0 || n < d {
        return Err(Error::Parameter(format!("need n ≥ d ≥ 1, got d = {d}, n = {n}")));
    }
    for _ in 0..1000 {
        let vectors = (0..n).map(|_| (0..d).map(|_| complex_normal(rng)).collect()).collect();
        let f = Frame::new(d, vectors)?;
        if is_frame(&f)? {
            return Ok(f);
        }
    }
    Err(Error::Numeric("could not sample a spanning family".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermat::{eigvalsh, op_norm};
    use crate::random::{random_invertible, random_unitary, seeded};

    fn e1e2e1() -> Frame {
        Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn basis(d: usize) -> Frame {
        Frame::from_real(d, &(0..d).map(|i| (0..d).map(|j| f64::from(i == j)).collect()).collect::<Vec<_>>())
            .unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn analysis_examples() {
        let t = analysis(&e1e2e1());
        let want = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(t, want);
        let single = Frame::from_real(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!((analysis(&single).rows(), analysis(&single).cols()), (1, 3));

        let mut rng = seeded(4);
        let f = random_frame(3, 5, &mut rng).unwrap();
        let syn = synthesis(&f);
        for i in 0..5 {
            let e: Vec<C64> = (0..5).map(|k| C64::new(f64::from(k == i), 0.0)).collect();
            let back = syn.mul_vec(&e).unwrap();
            assert!(back.iter().zip(f.vector(i)).all(|(a, b)| (a - b).norm() < 1e-15));
        }
        // ⟨x, f_i⟩ is linear in x
        let x = vec![C64::new(0.3, -1.0), C64::new(2.0, 0.5), C64::new(-0.1, 0.0)];
        let tx = analysis(&f).mul_vec(&x).unwrap();
        for i in 0..5 {
            let ip = crate::hermat::inner(&x, f.vector(i));
            assert!((tx[i] - ip).norm() < 1e-14);
        }
    }

    #[test]
    fn frame_operator_examples() {
        let s = frame_operator(&e1e2e1());
        assert_eq!(s.matrix(), &ComplexMatrix::from_real_diag(&[2.0, 1.0]));
        assert_eq!(frame_operator(&basis(2)).matrix(), &ComplexMatrix::identity(2));
        let short = Frame::from_real(2, &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(frame_operator(&short).matrix(), &ComplexMatrix::from_real_diag(&[1.0, 0.0]));
        assert!(!is_frame(&short).unwrap());
        assert!(matches!(frame_bounds(&short), Err(Error::Rank(_))));
    }

    #[test]
    fn frame_bounds_examples() {
        assert_eq!(frame_bounds(&e1e2e1()).unwrap(), (1.0, 2.0));
        assert_eq!(frame_bounds(&basis(3)).unwrap(), (1.0, 1.0));
        let scaled = Frame::from_real(2, &[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(frame_bounds(&scaled).unwrap(), (4.0, 4.0));
    }

    #[test]
    fn tightness_examples() {
        assert!(is_tight(&basis(2), 1e-12).unwrap());
        assert!(!is_tight(&e1e2e1(), 1e-12).unwrap());
        let h = 0.5f64.sqrt();
        let four = Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h], vec![h, -h]]).unwrap();
        assert!(is_tight(&four, 1e-12).unwrap());
        assert!(close(frame_operator(&four).matrix(), &ComplexMatrix::from_real_diag(&[2.0, 2.0]), 1e-14));
    }

    #[test]
    fn canonical_dual_examples() {
        let fd = canonical_dual(&e1e2e1()).unwrap();
        let want = Frame::from_real(2, &[vec![0.5, 0.0], vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(fd, want);
        assert_eq!(canonical_dual(&basis(3)).unwrap(), basis(3));
    }

    #[test]
    fn dual_check_examples() {
        let f = e1e2e1();
        let r = dual_check(&f, &canonical_dual(&f).unwrap(), 1e-12).unwrap();
        assert!(r.is_dual && r.residual < 1e-15);
        let g = Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(dual_check(&f, &g, 1e-12).unwrap().is_dual);
        let r = dual_check(&f, &f, 1e-12).unwrap();
        assert!(!r.is_dual);
        assert!((r.residual - 1.0).abs() < 1e-14);
        assert!(matches!(dual_check(&f, &basis(2), 1e-9), Err(Error::Dimension(_))));
    }

    #[test]
    fn apply_operator_examples() {
        let f = e1e2e1();
        assert_eq!(apply_operator(&ComplexMatrix::identity(2), &f).unwrap(), f);
        let v = ComplexMatrix::from_real_diag(&[1.0, 2f64.sqrt()]);
        let s = frame_operator(&apply_operator(&v, &f).unwrap());
        assert!(close(s.matrix(), &ComplexMatrix::from_real_diag(&[2.0, 2.0]), 1e-15));
        assert!(apply_operator(&ComplexMatrix::from_real_diag(&[1.0, 0.0]), &f).is_err());
    }

    #[test]
    fn potential_examples() {
        assert!((frame_potential(&e1e2e1()).unwrap() - 5.0).abs() < 1e-14);
        assert!((frame_potential(&basis(4)).unwrap() - 4.0).abs() < 1e-14);
        let g = Frame::from_real(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!((frame_potential(&g).unwrap() - 2.0).abs() < 1e-14);
        assert!((mse(&e1e2e1()).unwrap() - 1.5).abs() < 1e-14);
        assert!((convex_potential(&basis(3), ScalarFn::Square).unwrap() - 3.0).abs() < 1e-14);
        assert!((convex_potential(&e1e2e1(), ScalarFn::Square).unwrap() - 5.0).abs() < 1e-14);
        let short = Frame::from_real(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(mse(&short), Err(Error::Rank(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = seeded(8);
        let f = random_frame(3, 4, &mut rng).unwrap();
        assert_eq!(Frame::from_json(&f.to_json()).unwrap(), f);
        assert!(Frame::from_json(r#"{"d":2,"n":2,"vectors":[[[1,0],[0,0]]]}"#).is_err());
        assert!(Frame::from_json(r#"{"d":2,"n":1,"vectors":[[[1,0]]]}"#).is_err());
        assert!(Frame::from_json("not json").is_err());
    }

    #[test]
    fn random_frame_sweeps() {
        let mut rng = seeded(21);
        for trial in 0..100 {
            let d = 1 + trial % 8;
            let n = d + rng.random_range(0..=(16 - d));
            let f = random_frame(d, n, &mut rng).unwrap();
            let s = frame_operator(&f);
            let lam = eigvalsh(&s).unwrap();
            assert!(lam[d - 1] > 0.0);
            assert!((s.trace() - f.norm_sum()).abs() <= 1e-12 * f.norm_sum());

            let fd = canonical_dual(&f).unwrap();
            assert!(dual_check(&f, &fd, 1e-9).unwrap().is_dual);
            let sinv = func_calc(&s, ScalarFn::Inverse).unwrap();
            let sd = frame_operator(&fd);
            assert!(op_norm(&(sd.matrix() - sinv.matrix())) <= 1e-9 * op_norm(sinv.matrix()));

            let fp = frame_potential(&f).unwrap();
            let sq = convex_potential(&f, ScalarFn::Square).unwrap();
            assert!((fp - sq).abs() <= 1e-9 * fp);

            let v1 = random_invertible(d, 0.5, 2.0, &mut rng);
            let v2 = random_invertible(d, 0.5, 2.0, &mut rng);
            let lhs = apply_operator(&v2, &apply_operator(&v1, &f).unwrap()).unwrap();
            let rhs = apply_operator(&(&v2 * &v1), &f).unwrap();
            assert!(close(&analysis(&lhs), &analysis(&rhs), 1e-12 * f.norm_sum().max(1.0)));
            let svf = frame_operator(&lhs);
            let expect = s.congruence(&(&v2 * &v1)).unwrap();
            assert!(op_norm(&(svf.matrix() - expect.matrix())) <= 1e-10 * op_norm(expect.matrix()));

            let u = random_unitary(d, &mut rng);
            let lu = eigvalsh(&frame_operator(&apply_operator(&u, &f).unwrap())).unwrap();
            assert!(lu.max_abs_diff(&lam).unwrap() <= 1e-10 * lam[0]);
        }
    }
}
