//! Real spectra and the three order relations on them: submajorization,
//! majorization and log-majorization.
//!
//! Spectra are stored in input order. `desc()` / `asc()` produce the
//! rearrangements with a stable sort, so equal entries keep their relative
//! position.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

/// A finite real vector (eigenvalues, water levels, increments, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("spectrum must have at least one entry".into()));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("spectrum entry {i} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// The constant vector `value * 1_d`.
    pub fn constant(value: f64, d: usize) -> Result<Self> {
        Self::new(vec![value; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn trace(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Nonincreasing rearrangement.
    pub fn desc(&self) -> Spectrum {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        Spectrum(v)
    }

    /// Nondecreasing rearrangement.
    pub fn asc(&self) -> Spectrum {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        Spectrum(v)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    /// Entrywise map, rejecting non-finite results.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Spectrum> {
        Spectrum::new(self.0.iter().map(|&x| f(x)).collect())
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Spectrum) -> Result<Spectrum> {
        check_dims("hadamard product", self.len(), other.len())?;
        Spectrum::new(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> Result<f64> {
        check_dims("spectrum comparison", self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl std::ops::Index<usize> for Spectrum {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for Spectrum {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Absolute slack allowed in partial-sum (or log partial-sum) comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderTolerance {
    pub abs_tol: f64,
}

impl OrderTolerance {
    pub const DEFAULT_ABS: f64 = 1e-9;

    pub fn new(abs_tol: f64) -> Result<Self> {
        if !(abs_tol >= 0.0) || !abs_tol.is_finite() {
            return Err(Error::Parameter(format!("tolerance must be finite and >= 0, got {abs_tol}")));
        }
        Ok(Self { abs_tol })
    }
}

impl Default for OrderTolerance {
    fn default() -> Self {
        Self { abs_tol: Self::DEFAULT_ABS }
    }
}

/// Partial sums of the nonincreasing rearrangement.
pub fn partial_sums_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter()
        .scan(0.0, |acc, &a| {
            *acc += a;
            Some(*acc)
        })
        .collect()
}

/// `min_k (sum_{i<=k} y_desc - sum_{i<=k} x_desc)`; nonnegative iff `x` is
/// submajorized by `y` (exactly).
pub fn submajorization_slack(x: &Spectrum, y: &Spectrum) -> Result<f64> {
    check_dims("submajorization", x.len(), y.len())?;
    let px = partial_sums_desc(x.as_slice());
    let py = partial_sums_desc(y.as_slice());
    Ok(px.iter().zip(&py).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min))
}

/// `x ≺_w y`: every partial sum of `x↓` is at most the one of `y↓` (+ tol).
pub fn submajorizes(x: &Spectrum, y: &Spectrum, tol: OrderTolerance) -> Result<bool> {
    Ok(submajorization_slack(x, y)? >= -tol.abs_tol)
}

/// `x ≺ y`: submajorization plus equal traces.
pub fn majorizes(x: &Spectrum, y: &Spectrum, tol: OrderTolerance) -> Result<bool> {
    Ok(submajorizes(x, y, tol)? && (x.trace() - y.trace()).abs() <= tol.abs_tol)
}

fn logs_of_positive(x: &Spectrum) -> Result<Vec<f64>> {
    x.iter()
        .map(|&v| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::Domain(format!("log-majorization needs positive entries, got {v}")))
            }
        })
        .collect()
}

/// Slack of `x ≺_log y` in the log domain.
///
/// Returns `(partial, full)` where `partial = min_{k<d} (L_k(y) - L_k(x))`
/// (`+inf` when `d = 1`) and `full = |L_d(y) - L_d(x)|`, with `L_k` the
/// partial sums of the decreasing logarithms.
pub fn log_majorization_slack(x: &Spectrum, y: &Spectrum) -> Result<(f64, f64)> {
    check_dims("log-majorization", x.len(), y.len())?;
    let lx = partial_sums_desc(&logs_of_positive(x)?);
    let ly = partial_sums_desc(&logs_of_positive(y)?);
    let d = lx.len();
    let partial = (0..d - 1).map(|k| ly[k] - lx[k]).fold(f64::INFINITY, f64::min);
    Ok((partial, (ly[d - 1] - lx[d - 1]).abs()))
}

/// `x ≺_log y` with the slack applied to sums of logarithms.
pub fn log_majorizes(x: &Spectrum, y: &Spectrum, tol: OrderTolerance) -> Result<bool> {
    let (partial, full) = log_majorization_slack(x, y)?;
    Ok(partial >= -tol.abs_tol && full <= tol.abs_tol)
}

/// Checks the implication `x ≺_log y ⇒ x ≺_w y` on the given pair.
///
/// Returns `true` when the premise fails (vacuous) or when both hold.
pub fn log_to_weak_check(x: &Spectrum, y: &Spectrum) -> Result<bool> {
    let tol = OrderTolerance::default();
    if !log_majorizes(x, y, tol)? {
        return Ok(true);
    }
    // the premise holds up to `tol` on log sums, i.e. a relative slack on products
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    submajorizes(x, y, OrderTolerance { abs_tol: tol.abs_tol * scale * y.len() as f64 })
}

/// Built-in families of increasing convex test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexFamily {
    /// `x ↦ max(x, 0)^p` for p ∈ {1, 2, 3, 4}.
    Powers,
    Exp,
    /// `x ↦ max(x − c, 0)` with `c` ranging over the entries of both inputs.
    Hinge,
}

/// `Σ f(x_i) ≤ Σ f(y_i)` for every `f` of the family, with a relative slack.
///
/// The powers are applied to positive parts so that they stay increasing on
/// the whole real line.
pub fn tracial_convex_check(
    x: &Spectrum,
    y: &Spectrum,
    fam: ConvexFamily,
    tol: OrderTolerance,
) -> Result<bool> {
    check_dims("tracial check", x.len(), y.len())?;
    let holds = |f: &dyn Fn(f64) -> f64| {
        let fx: f64 = x.iter().map(|&v| f(v)).sum();
        let fy: f64 = y.iter().map(|&v| f(v)).sum();
        fx <= fy + tol.abs_tol * fy.abs().max(1.0)
    };
    Ok(match fam {
        ConvexFamily::Powers => (1..=4).all(|p| holds(&|v: f64| v.max(0.0).powi(p))),
        ConvexFamily::Exp => holds(&f64::exp),
        ConvexFamily::Hinge => x
            .iter()
            .chain(y.iter())
            .all(|&c| holds(&|v: f64| (v - c).max(0.0))),
    })
}
