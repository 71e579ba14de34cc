//! Scalar primitives shared by the whole crate: signed fractional powers,
//! sign selections for the set-valued zero-exponent case, saturation, and
//! weighted dilations.
//!
//! The signed power `spw(a, b) = sign(a) * |a|^b` is the basic building
//! block of every homogeneous correction term. For `b > 0` it is single
//! valued and continuous with `spw(0, b) = 0`. The limit `b = 0` is the
//! set-valued sign map `S(a)` (`{1}` for `a > 0`, `[-1, 1]` for `a = 0`,
//! `{-1}` for `a < 0`); a [`SignRule`] picks one selection out of it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from constructing weight vectors or applying dilations.
#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("state dimension must be at least 1, got {0}")]
    InvalidDim(usize),
    #[error("homogeneity degree must lie in [-1, 0], got {0}")]
    InvalidDegree(f64),
}

/// `sign(a) * |a|^b` for `b >= 0`, with an exact-zero shortcut so that
/// `signed_power(0.0, b) == 0.0` and no NaN can leak out of `0^0`.
///
/// Panics if `b < 0` (the map would be unbounded near 0; exponents in this
/// crate always come from weight ratios, which are nonnegative).
#[inline]
pub fn signed_power(a: f64, b: f64) -> f64 {
    assert!(b >= 0.0, "signed_power: negative exponent {b}");
    if a == 0.0 {
        return 0.0;
    }
    a.signum() * a.abs().powf(b)
}

/// Selection rule for the set-valued sign map `S(a)` at `a = 0`.
///
/// Away from zero all rules agree with `sign(a)`. `ZeroAtZero` is the
/// default used by every simulation preset; the upper/lower selections
/// exist so certification code can evaluate both extremes of the
/// differential inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRule {
    #[default]
    ZeroAtZero,
    UpperSelect,
    LowerSelect,
}

impl SignRule {
    /// The selected value of `S(a)` under this rule.
    #[inline]
    pub fn select(self, a: f64) -> f64 {
        if a > 0.0 {
            1.0
        } else if a < 0.0 {
            -1.0
        } else {
            match self {
                SignRule::ZeroAtZero => 0.0,
                SignRule::UpperSelect => 1.0,
                SignRule::LowerSelect => -1.0,
            }
        }
    }
}

/// One selection out of `S(a)` under `rule`; see [`SignRule::select`].
#[inline]
pub fn sign_select(a: f64, rule: SignRule) -> f64 {
    rule.select(a)
}

/// Clamp `x` to `[-m, m]`. Panics if `m < 0`.
#[inline]
pub fn saturate(x: f64, m: f64) -> f64 {
    assert!(m >= 0.0, "saturate: negative level {m}");
    x.clamp(-m, m)
}

/// Homogeneity weights `r_i = 1 - d0 * (m - i)` for `i = 1..=m+1`.
///
/// `d0` in `[-1, 0]` is the homogeneity degree of the error dynamics:
/// `d0 = 0` gives uniform weights (the linear high-gain case) and
/// `d0 = -1` the finite-time case with `r = (m, m-1, ..., 1, 0)`.
/// `r_m = 1` always, and the virtual weight `r_{m+1} = 1 + d0` drives the
/// exponent of the last correction line (zero exactly when `d0 = -1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub m: usize,
    pub d0: f64,
    /// `r[i]` is the weight of coordinate `i + 1`; length `m + 1`.
    pub r: Vec<f64>,
}

impl WeightVector {
    pub fn new(m: usize, d0: f64) -> Result<Self, NumericsError> {
        if m < 1 {
            return Err(NumericsError::InvalidDim(m));
        }
        if !(-1.0..=0.0).contains(&d0) {
            return Err(NumericsError::InvalidDegree(d0));
        }
        let r = (1..=m + 1)
            .map(|i| 1.0 - d0 * (m as f64 - i as f64))
            .collect();
        Ok(WeightVector { m, d0, r })
    }

    /// Weight of the `i`-th coordinate, `i` in `1..=m+1`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.r[i - 1]
    }
}

/// Component-wise dilation `e_i * lambda^{w_i}` using the first
/// `e.len()` entries of `weights`. Panics if `lambda <= 0` or if fewer
/// weights than components are supplied.
pub fn dilation(e: &[f64], lambda: f64, weights: &[f64]) -> Vec<f64> {
    assert!(lambda > 0.0, "dilation: scale must be positive, got {lambda}");
    assert!(
        weights.len() >= e.len(),
        "dilation: {} weights for {} components",
        weights.len(),
        e.len()
    );
    e.iter()
        .zip(weights)
        .map(|(ei, ri)| ei * lambda.powf(*ri))
        .collect()
}
