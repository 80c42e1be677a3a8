//! Dense complex matrices, Hermitian matrices and their decreasing-order
//! eigendecomposition.
//!
//! The eigensolver is a cyclic complex Jacobi method with a fixed sweep order,
//! so results are deterministic for a given input. It targets the small
//! dimensions used throughout the crate (d ≲ 64).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dims, Error, Result};
use crate::specvec::Spectrum;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Relative tolerance on `‖A − A*‖_max` accepted when building a Hermitian matrix.
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Relative off-diagonal threshold at which Jacobi sweeps stop.
pub const EIG_TOL: f64 = 1e-14;
/// Relative off-diagonal norm still accepted if the sweep cap is reached.
pub const EIG_ACCEPT_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Principal-angle threshold (radians) for accepting a subspace intersection.
pub const ANGLE_TOL: f64 = 1e-6;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension(format!("columns must have length {rows}")));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    /// Sub-matrix made of the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.scale(C64::new(a, 0.0))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        check_dims("matrix product", self.cols, rhs.rows)?;
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_dims("matrix-vector product", self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Nested rows of `[re, im]` pairs.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().map(|p| C64::new(p[0], p[1])).collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on a shape mismatch; use [`ComplexMatrix::try_mul`] to get an error instead.
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Self::from_nested(&rows).map_err(serde::de::Error::custom)
    }
}

/// Self-adjoint square matrix, stored symmetrized.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `m` if `‖m − m*‖_max ≤ HERMITICITY_TOL · max(1, ‖m‖_max)` and
    /// stores `(m + m*)/2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)));
        }
        let skew = (&m - &m.adjoint()).max_abs();
        if skew > HERMITICITY_TOL * m.max_abs().max(1.0) {
            return Err(Error::Input(format!("matrix is not Hermitian (‖A − A*‖_max = {skew:.3e})")));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: ComplexMatrix) -> Self {
        let n = m.rows;
        Self(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(m[(i, i)].re, 0.0)
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        }))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diag(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows)?)
    }

    /// `A* A`, Hermitian by construction.
    pub fn gram(a: &ComplexMatrix) -> Self {
        Self::symmetrized(&a.adjoint() * a)
    }

    /// `A A*`.
    pub fn outer_gram(a: &ComplexMatrix) -> Self {
        Self::symmetrized(a * &a.adjoint())
    }

    /// `X A X*` for a square or rectangular `X`.
    pub fn congruence(&self, x: &ComplexMatrix) -> Result<Self> {
        let m = x.try_mul(&self.0)?.try_mul(&x.adjoint())?;
        Ok(Self::symmetrized(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrized(self.0.try_add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrized(self.0.try_sub(&other.0)?))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.scale_real(a))
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        Self::new(m).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues in nonincreasing order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Spectrum,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Columns whose eigenvalue lies within `tol` of `value`.
    pub fn eigenspace(&self, value: f64, tol: f64) -> ComplexMatrix {
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| (self.values[j] - value).abs() <= tol).collect();
        self.vectors.select_columns(&idx)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(a: &HermitianMatrix) -> Result<EigenSystem> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut m = a.0.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += m[(p, q)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        if off(&m) <= EIG_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        let residual = off(&m);
        if residual > EIG_ACCEPT_TOL * scale {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {residual:.3e})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = Spectrum::new(order.iter().map(|&i| m[(i, i)].re).collect())?;
    let vectors = v.select_columns(&order);
    Ok(EigenSystem { values, vectors })
}

/// Eigenvalues only, nonincreasing.
pub fn eigvalsh(a: &HermitianMatrix) -> Result<Spectrum> {
    Ok(eigh(a)?.values)
}

fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = m.rows;
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let a = m[(p, p)].re;
    let b = m[(q, q)].re;
    // skip rotations that can no longer change the diagonal in floating point
    if r <= f64::EPSILON * 1e-3 * (a.abs() + b.abs()) {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    // D = diag(1, w) makes the (p, q) entry real and equal to r
    let w = apq.conj() / r;
    let theta = (b - a) / (2.0 * r);
    let t = if theta.is_finite() {
        let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
        sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        0.0
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // U = D·[[c, s], [−s, c]]
    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = w * (-s);
    let uqq = w * c;

    for i in 0..n {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = x * upp + y * uqp;
        m[(i, q)] = x * upq + y * uqq;
    }
    for k in 0..n {
        let x = m[(p, k)];
        let y = m[(q, k)];
        m[(p, k)] = upp.conj() * x + uqp.conj() * y;
        m[(q, k)] = upq.conj() * x + uqq.conj() * y;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(a - t * r, 0.0);
    m[(q, q)] = C64::new(b + t * r, 0.0);
    for i in 0..n {
        let x = v[(i, p)];
        let y = v[(i, q)];
        v[(i, p)] = x * upp + y * uqp;
        v[(i, q)] = x * upq + y * uqq;
    }
}

/// Scalar functions available to the functional calculus and the convex potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFn {
    Identity,
    Square,
    Sqrt,
    Inverse,
    Log,
    Exp,
    Power(f64),
}

impl ScalarFn {
    pub fn eval(self, x: f64) -> Result<f64> {
        let out = match self {
            ScalarFn::Identity => x,
            ScalarFn::Square => x * x,
            ScalarFn::Sqrt if x >= 0.0 => x.sqrt(),
            ScalarFn::Inverse | ScalarFn::Log if x > 0.0 => {
                if self == ScalarFn::Inverse {
                    x.recip()
                } else {
                    x.ln()
                }
            }
            ScalarFn::Exp => x.exp(),
            ScalarFn::Power(p) if x > 0.0 || (x == 0.0 && p > 0.0) => x.powf(p),
            _ => return Err(Error::Domain(format!("{self:?} is undefined at {x}"))),
        };
        if !out.is_finite() {
            return Err(Error::Domain(format!("{self:?}({x}) is not finite")));
        }
        Ok(out)
    }

    pub fn name(self) -> String {
        match self {
            ScalarFn::Power(p) => format!("power({p})"),
            other => format!("{other:?}").to_lowercase(),
        }
    }
}

/// `h(S) = Σ h(λ_i) v_i ⊗ v_i`.
///
/// Eigenvalues within `1e-12·‖S‖` below zero are clamped to zero for `Sqrt`,
/// so that numerically PSD inputs are accepted.
pub fn func_calc(s: &HermitianMatrix, h: ScalarFn) -> Result<HermitianMatrix> {
    let es = eigh(s)?;
    let floor = 1e-12 * es.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mapped: Vec<f64> = es
        .values
        .iter()
        .map(|&x| {
            let x = if h == ScalarFn::Sqrt && x < 0.0 && x >= -floor { 0.0 } else { x };
            h.eval(x)
        })
        .collect::<Result<_>>()?;
    rank_one_sum_unchecked(&mapped, &es.vectors)
}

fn rank_one_sum_unchecked(values: &[f64], vectors: &ComplexMatrix) -> Result<HermitianMatrix> {
    check_dims("rank-one sum", values.len(), vectors.cols())?;
    let n = vectors.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vectors[(i, k)] * lam;
            for j in 0..n {
                out[(i, j)] += vi * vectors[(j, k)].conj();
            }
        }
    }
    Ok(HermitianMatrix::symmetrized(out))
}

/// Maximum deviation of `Q*Q` from the identity.
pub fn orthonormality_defect(q: &ComplexMatrix) -> f64 {
    (&HermitianMatrix::gram(q).0 - &ComplexMatrix::identity(q.cols())).max_abs()
}

/// `Σ values_i · v_i ⊗ v_i` for orthonormal columns `v_i`.
pub fn rank_one_sum(values: &Spectrum, vectors: &ComplexMatrix) -> Result<HermitianMatrix> {
    check_dims("rank-one sum", values.len(), vectors.cols())?;
    let defect = orthonormality_defect(vectors);
    if defect > 1e-8 {
        return Err(Error::Input(format!("columns are not orthonormal (defect {defect:.3e})")));
    }
    rank_one_sum_unchecked(values.as_slice(), vectors)
}

/// Largest singular value.
pub fn op_norm(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = if a.rows() <= a.cols() { HermitianMatrix::outer_gram(a) } else { HermitianMatrix::gram(a) };
    match eigvalsh(&g) {
        Ok(v) => v[0].max(0.0).sqrt(),
        Err(_) => a.frobenius_norm(),
    }
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn op_norm_h(a: &HermitianMatrix) -> Result<f64> {
    let v = eigvalsh(a)?;
    Ok(v[0].abs().max(v[v.len() - 1].abs()))
}

/// Product of the eigenvalues.
pub fn det_h(a: &HermitianMatrix) -> Result<f64> {
    Ok(eigvalsh(a)?.iter().product())
}

/// `Σ log λ_i(A)` for positive definite `A`.
pub fn log_det_pd(a: &HermitianMatrix) -> Result<f64> {
    eigvalsh(a)?
        .iter()
        .map(|&x| {
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::Domain(format!("matrix is not positive definite (eigenvalue {x})")))
            }
        })
        .sum()
}

/// Singular values in nonincreasing order, `min(rows, cols)` of them.
///
/// Computed from the Hermitian dilation `[[0, A], [A*, 0]]`, whose spectrum is
/// `±σ_i` padded with zeros; this keeps small singular values accurate to
/// roughly machine precision times `σ_max`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let p = m.min(n);
    if p == 0 {
        return Ok(Vec::new());
    }
    let dil = ComplexMatrix::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
        (true, false) => a[(i, j - m)],
        (false, true) => a[(j, i - m)].conj(),
        _ => ZERO,
    });
    let vals = eigvalsh(&HermitianMatrix(dil))?;
    Ok(vals.iter().take(p).map(|x| x.max(0.0)).collect())
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(a: &ComplexMatrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(a)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * top).count())
}

/// Rank of a Hermitian matrix from its eigenvalues.
pub fn hermitian_rank(a: &HermitianMatrix, rel_tol: f64) -> Result<usize> {
    let v = eigvalsh(a)?;
    let top = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(v.iter().filter(|x| x.abs() > rel_tol * top).count())
}

/// `‖AB − BA‖_op`.
pub fn commutator_norm(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_dims("commutator", a.dim(), b.dim())?;
    let ab = &a.0 * &b.0;
    let ba = &b.0 * &a.0;
    Ok(op_norm(&(&ab - &ba)))
}

/// `‖AB − BA‖_op ≤ tol · ‖A‖ · ‖B‖`.
pub fn commutes(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    let c = commutator_norm(a, b)?;
    Ok(c <= tol * op_norm_h(a)? * op_norm_h(b)?)
}

fn require_invertible(v: &ComplexMatrix) -> Result<()> {
    if !v.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", v.rows(), v.cols())));
    }
    let sv = singular_values(v)?;
    let (top, low) = (sv[0], sv[sv.len() - 1]);
    if !(low > RANK_TOL * top) {
        return Err(Error::Input(format!("matrix is singular (σ_min = {low:.3e}, σ_max = {top:.3e})")));
    }
    Ok(())
}

/// `|V*| = (V V*)^{1/2}` for invertible `V`.
pub fn abs_star(v: &ComplexMatrix) -> Result<HermitianMatrix> {
    require_invertible(v)?;
    func_calc(&HermitianMatrix::outer_gram(v), ScalarFn::Sqrt)
}

/// `|V| = (V* V)^{1/2}` for invertible `V`.
pub fn abs(v: &ComplexMatrix) -> Result<HermitianMatrix> {
    require_invertible(v)?;
    func_calc(&HermitianMatrix::gram(v), ScalarFn::Sqrt)
}

/// Whether `v` is square with `σ_min > RANK_TOL · σ_max`.
pub fn is_invertible(v: &ComplexMatrix) -> bool {
    require_invertible(v).is_ok()
}

/// Orthonormal basis of `span(Q1) ∩ span(Q2)` for orthonormal column sets,
/// keeping the directions whose principal angle is below `angle_tol`.
pub fn subspace_intersection(q1: &ComplexMatrix, q2: &ComplexMatrix, angle_tol: f64) -> Result<ComplexMatrix> {
    check_dims("subspace ambient dimension", q1.rows(), q2.rows())?;
    if q1.cols() == 0 || q2.cols() == 0 {
        return Ok(ComplexMatrix::zeros(q1.rows(), 0));
    }
    let cross = &q1.adjoint() * q2;
    let es = eigh(&HermitianMatrix::outer_gram(&cross))?;
    let cos2 = angle_tol.cos().powi(2);
    let keep: Vec<usize> = (0..es.dim()).filter(|&j| es.values[j] >= cos2).collect();
    Ok(q1 * &es.vectors.select_columns(&keep))
}

/// Joint spectrum of two (presumed commuting) Hermitian matrices.
///
/// Diagonalizes `A`, groups eigenvalues lying within `cluster_tol · max(1, ‖A‖)`
/// of the first value of the group, and diagonalizes the compression of `B`
/// to each group. Returns `(a, b)` pairs ordered by `a` descending, then `b`
/// descending within a group. Independent of the eigenbasis chosen for `A`.
pub fn joint_spectrum(a: &HermitianMatrix, b: &HermitianMatrix, cluster_tol: f64) -> Result<Vec<(f64, f64)>> {
    check_dims("joint spectrum", a.dim(), b.dim())?;
    let es = eigh(a)?;
    let scale = es.values.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut out = Vec::with_capacity(a.dim());
    for group in cluster_indices(es.values.as_slice(), cluster_tol * scale) {
        let q = es.vectors.select_columns(&group);
        let mean = group.iter().map(|&i| es.values[i]).sum::<f64>() / group.len() as f64;
        let comp = HermitianMatrix::symmetrized(&(&q.adjoint() * &b.0) * &q);
        for &bv in eigvalsh(&comp)?.iter() {
            out.push((mean, bv));
        }
    }
    Ok(out)
}

/// Groups consecutive entries of a nonincreasing slice lying within `tol` of
/// the group's first entry.
pub(crate) fn cluster_indices(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut start = f64::NAN;
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (start - v).abs() <= tol => g.push(i),
            _ => {
                groups.push(vec![i]);
                start = v;
            }
        }
    }
    groups
}

/// Compares a joint spectrum against expected `(a, b)` pairs, as multisets.
///
/// Both lists are canonicalized the same way (sort by `a`, cluster equal
/// `a`'s, sort `b` inside each cluster) and compared entrywise with relative
/// tolerance `tol`.
pub fn pairing_matches(joint: &[(f64, f64)], expected: &[(f64, f64)], tol: f64) -> bool {
    if joint.len() != expected.len() {
        return false;
    }
    let scale_a = expected.iter().chain(joint).fold(1.0_f64, |m, p| m.max(p.0.abs()));
    let scale_b = expected.iter().chain(joint).fold(1.0_f64, |m, p| m.max(p.1.abs()));
    let canon = |pairs: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let mut v = pairs.to_vec();
        v.sort_by(|x, y| y.0.total_cmp(&x.0));
        let a: Vec<f64> = v.iter().map(|p| p.0).collect();
        let mut out = Vec::with_capacity(v.len());
        for g in cluster_indices(&a, tol * scale_a) {
            let mut bs: Vec<f64> = g.iter().map(|&i| v[i].1).collect();
            bs.sort_by(|x, y| y.total_cmp(x));
            out.extend(g.iter().zip(bs).map(|(&i, b)| (v[i].0, b)));
        }
        out
    };
    canon(joint)
        .iter()
        .zip(canon(expected))
        .all(|(x, y)| (x.0 - y.0).abs() <= tol * scale_a && (x.1 - y.1).abs() <= tol * scale_b)
}

pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_unitary, seeded};

    fn herm(rows: &[Vec<f64>]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(rows).unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn eigh_diagonal_orders_decreasing() {
        let es = eigh(&HermitianMatrix::from_real_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(es.values.as_slice(), &[4.0, 1.0]);
        assert!((es.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((es.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_two_by_two() {
        let es = eigh(&herm(&[vec![2.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert!((es.values[0] - 3.0).abs() < 1e-14);
        assert!((es.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_identity_and_zero() {
        let es = eigh(&HermitianMatrix::identity(3)).unwrap();
        assert!(es.values.iter().all(|&v| v == 1.0));
        assert!(orthonormality_defect(&es.vectors) < 1e-15);
        let z = eigh(&HermitianMatrix::from_real_diag(&[0.0, 0.0])).unwrap();
        assert_eq!(z.values.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn eigh_complex_entries() {
        // [[1, i], [-i, 1]] has eigenvalues 2 and 0
        let m = ComplexMatrix::new(
            2,
            2,
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        let es = eigh(&HermitianMatrix::new(m).unwrap()).unwrap();
        assert!((es.values[0] - 2.0).abs() < 1e-14 && es.values[1].abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::Input(_))));
    }

    #[test]
    fn func_calc_examples() {
        let d = HermitianMatrix::from_real_diag(&[4.0, 1.0]);
        let r = func_calc(&d, ScalarFn::Sqrt).unwrap();
        assert!(close(r.matrix(), &ComplexMatrix::from_real_diag(&[2.0, 1.0]), 1e-14));
        let inv = func_calc(&d, ScalarFn::Inverse).unwrap();
        assert!(close(inv.matrix(), &ComplexMatrix::from_real_diag(&[0.25, 1.0]), 1e-14));
        let sq = func_calc(&herm(&[vec![2.0, 1.0], vec![1.0, 2.0]]), ScalarFn::Square).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[vec![5.0, 4.0], vec![4.0, 5.0]]).unwrap();
        assert!(close(sq.matrix(), &expected, 1e-13));
        let neg = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(func_calc(&neg, ScalarFn::Log), Err(Error::Domain(_))));
        assert!(matches!(func_calc(&neg, ScalarFn::Inverse), Err(Error::Domain(_))));
    }

    #[test]
    fn rank_one_sum_examples() {
        let e = ComplexMatrix::identity(2);
        let id = rank_one_sum(&Spectrum::from_slice(&[1.0, 1.0]).unwrap(), &e).unwrap();
        assert!(close(id.matrix(), &e, 0.0));
        let p = rank_one_sum(&Spectrum::from_slice(&[0.5, 0.0]).unwrap(), &e).unwrap();
        assert!(close(p.matrix(), &ComplexMatrix::from_real_diag(&[0.5, 0.0]), 0.0));
        let bad = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(rank_one_sum(&Spectrum::from_slice(&[1.0, 1.0]).unwrap(), &bad).is_err());
    }

    #[test]
    fn commutes_examples() {
        let a = HermitianMatrix::from_real_diag(&[1.0, 2.0]);
        let b = HermitianMatrix::from_real_diag(&[5.0, -3.0]);
        assert!(commutes(&a, &b, 1e-12).unwrap());
        let x = herm(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(!commutes(&a, &x, 1e-12).unwrap());
        assert!((commutator_norm(&a, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!(commutes(&x, &x, 1e-12).unwrap());
    }

    #[test]
    fn abs_star_examples() {
        let v = ComplexMatrix::from_real_diag(&[1.0, 2f64.sqrt()]);
        assert!(close(abs_star(&v).unwrap().matrix(), &v, 1e-14));
        let mut rng = seeded(3);
        let u = random_unitary(3, &mut rng);
        assert!(close(abs_star(&u).unwrap().matrix(), &ComplexMatrix::identity(3), 1e-12));
        // V = diag(2,1)·R: VV* = diag(4,1) exactly
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = ComplexMatrix::from_real_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        let v = &ComplexMatrix::from_real_diag(&[2.0, 1.0]) * &rot;
        assert!(close(abs_star(&v).unwrap().matrix(), &ComplexMatrix::from_real_diag(&[2.0, 1.0]), 1e-13));
        let sing = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(abs_star(&sing), Err(Error::Input(_))));
    }

    #[test]
    fn norm_and_det_examples() {
        assert_eq!(op_norm(&ComplexMatrix::identity(3)), 1.0);
        assert_eq!(det_h(&HermitianMatrix::identity(3)).unwrap(), 1.0);
        let d = HermitianMatrix::from_real_diag(&[4.0, 1.0]);
        assert!((op_norm(d.matrix()) - 4.0).abs() < 1e-14);
        assert!((det_h(&d).unwrap() - 4.0).abs() < 1e-14);
        let m = herm(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((op_norm(m.matrix()) - 3.0).abs() < 1e-14);
        assert!((det_h(&m).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn singular_values_of_rectangular() {
        let a = ComplexMatrix::from_real_rows(&[vec![3.0, 0.0], vec![0.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
        assert_eq!(numerical_rank(&a, RANK_TOL).unwrap(), 2);
        let r1 = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(numerical_rank(&r1, RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn subspace_intersection_of_planes() {
        let e = ComplexMatrix::identity(3);
        let q1 = e.select_columns(&[0, 1]);
        let h = 0.5f64.sqrt();
        let q2 = ComplexMatrix::from_real_rows(&[vec![0.0, 0.0], vec![h, h], vec![h, -h]]).unwrap();
        // span(q2) = span(e2, e3); intersection with span(e1, e2) is e2
        let x = subspace_intersection(&q1, &q2, ANGLE_TOL).unwrap();
        assert_eq!(x.cols(), 1);
        assert!((x[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_spectrum_pairs_degenerate_blocks() {
        let a = HermitianMatrix::from_real_diag(&[2.0, 2.0, 1.0]);
        let b = herm(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 5.0]]);
        let js = joint_spectrum(&a, &b, 1e-9).unwrap();
        assert!(pairing_matches(&js, &[(2.0, 1.0), (2.0, -1.0), (1.0, 5.0)], 1e-12));
        assert!(!pairing_matches(&js, &[(2.0, 5.0), (2.0, -1.0), (1.0, 1.0)], 1e-12));
    }

    #[test]
    fn random_reconstruction_and_unitary_invariance() {
        let mut rng = seeded(11);
        for d in 1..=16 {
            let a = random_hermitian(d, &mut rng);
            let es = eigh(&a).unwrap();
            assert!(es.values.is_nonincreasing());
            assert!(orthonormality_defect(&es.vectors) < 1e-12);
            let back = rank_one_sum(&es.values, &es.vectors).unwrap();
            let na = op_norm(a.matrix());
            assert!(op_norm(&(back.matrix() - a.matrix())) <= 1e-9 * na);
            for i in 0..d {
                let v = es.vectors.column(i);
                let av = a.matrix().mul_vec(&v).unwrap();
                let r: Vec<C64> = av.iter().zip(&v).map(|(x, y)| x - y * es.values[i]).collect();
                assert!(norm(&r) <= 1e-11 * na.max(1.0));
            }
            let u = random_unitary(d, &mut rng);
            let b = a.congruence(&u.adjoint()).unwrap();
            let vb = eigvalsh(&b).unwrap();
            assert!(vb.max_abs_diff(&es.values).unwrap() <= 1e-11 * na.max(1.0));
        }
    }

    #[test]
    fn sqrt_of_square_and_det_identity() {
        let mut rng = seeded(5);
        for d in 1..=8 {
            let a = crate::random::random_pd(d, 0.2, 5.0, &mut rng);
            let sq = func_calc(&a, ScalarFn::Square).unwrap();
            let back = func_calc(&sq, ScalarFn::Sqrt).unwrap();
            assert!(op_norm(&(back.matrix() - a.matrix())) <= 1e-10 * op_norm(a.matrix()));
            let det = det_h(&a).unwrap();
            let via_log = log_det_pd(&a).unwrap().exp();
            assert!((det - via_log).abs() <= 1e-9 * det);
        }
    }
}
