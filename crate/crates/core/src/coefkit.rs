//! Coefficient-vector algebra: p-norms, the (l1, p, s) decomposition and
//! the exact positive/negative split of the weighted kernel sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `l1 * p_i * s_i == alpha_i` and on `sum(p) == 1`.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance on identities between derived sums, e.g. `l1 * (f+ - f-) == sum alpha_i k_i`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Slack allowed on kernel values outside `[0, 1]`.
pub const KERNEL_RANGE_TOL: f64 = 1e-9;

/// Trained weights of a kernel model. Never empty, never all zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        if let Some(i) = entries.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if entries.iter().all(|&a| a == 0.0) {
            return Err(Error::ZeroCoefficients);
        }
        Ok(CoefficientVector(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn norm(&self, order: NormOrder) -> f64 {
        norm_of(&self.0, order)
    }
}

impl TryFrom<Vec<f64>> for CoefficientVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CoefficientVector::new(v)
    }
}

impl From<CoefficientVector> for Vec<f64> {
    fn from(c: CoefficientVector) -> Self {
        c.0
    }
}

/// The three exponents used throughout the cost analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormOrder {
    TwoThirds,
    One,
    Two,
}

impl NormOrder {
    pub fn exponent(self) -> f64 {
        match self {
            NormOrder::TwoThirds => 2.0 / 3.0,
            NormOrder::One => 1.0,
            NormOrder::Two => 2.0,
        }
    }
}

impl TryFrom<f64> for NormOrder {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        if (p - 2.0 / 3.0).abs() < 1e-12 {
            Ok(NormOrder::TwoThirds)
        } else if p == 1.0 {
            Ok(NormOrder::One)
        } else if p == 2.0 {
            Ok(NormOrder::Two)
        } else {
            Err(Error::invalid(format!("unsupported norm order {p}")))
        }
    }
}

/// `(sum |a_i|^p)^(1/p)` for one of the supported orders.
pub fn pnorm(alpha: &CoefficientVector, order: NormOrder) -> f64 {
    norm_of(alpha.entries(), order)
}

/// Same as [`pnorm`] but with a raw exponent, rejecting unsupported ones.
pub fn pnorm_with_exponent(alpha: &CoefficientVector, p: f64) -> Result<f64> {
    Ok(pnorm(alpha, NormOrder::try_from(p)?))
}

/// p-norm of an arbitrary slice (zeros allowed).
pub fn norm_of(values: &[f64], order: NormOrder) -> f64 {
    match order {
        NormOrder::One => values.iter().map(|a| a.abs()).sum(),
        NormOrder::Two => values.iter().map(|a| a * a).sum::<f64>().sqrt(),
        NormOrder::TwoThirds => {
            let s: f64 = values.iter().map(|a| a.abs().powf(2.0 / 3.0)).sum();
            s * s.sqrt()
        }
    }
}

/// Generalized quasi-norm `(sum |a_i|^q)^(1/q)` for any `q > 0`.
pub fn general_norm(values: &[f64], q: f64) -> f64 {
    values.iter().map(|a| a.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Sign of one coefficient. Zero coefficients are `Plus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Computational-basis encoding on the sign qubit: `+1 -> 0`, `-1 -> 1`.
    pub fn bit(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// `alpha_i = l1_norm * probs[i] * signs[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefDecomposition {
    pub l1_norm: f64,
    pub probs: Vec<f64>,
    pub signs: Vec<Sign>,
}

impl CoefDecomposition {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices with nonzero weight, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn support_len(&self) -> usize {
        self.support().count()
    }

    /// `l1 * p_i * s_i` for every index.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.probs
            .iter()
            .zip(&self.signs)
            .map(|(p, s)| self.l1_norm * p * s.value())
            .collect()
    }

    /// Absolute values `|alpha_i|`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.probs.iter().map(|p| self.l1_norm * p).collect()
    }

    pub fn norm(&self, order: NormOrder) -> f64 {
        match order {
            NormOrder::One => self.l1_norm,
            _ => norm_of(&self.magnitudes(), order),
        }
    }
}

pub fn decompose(alpha: &CoefficientVector) -> CoefDecomposition {
    let l1_norm = pnorm(alpha, NormOrder::One);
    let probs = alpha.entries().iter().map(|a| a.abs() / l1_norm).collect();
    let signs = alpha
        .entries()
        .iter()
        .map(|&a| if a < 0.0 { Sign::Minus } else { Sign::Plus })
        .collect();
    CoefDecomposition { l1_norm, probs, signs }
}

/// `(f+, f-)` with `f+- = sum over matching signs of p_i k_i`.
pub fn f_plus_minus_exact(decomp: &CoefDecomposition, kernels: &[f64]) -> Result<(f64, f64)> {
    if kernels.len() != decomp.len() {
        return Err(Error::LengthMismatch { expected: decomp.len(), got: kernels.len() });
    }
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (i, &k) in kernels.iter().enumerate() {
        if !(-KERNEL_RANGE_TOL..=1.0 + KERNEL_RANGE_TOL).contains(&k) {
            return Err(Error::invalid(format!("kernel value {k} at index {i} outside [0, 1]")));
        }
        match decomp.signs[i] {
            Sign::Plus => plus += decomp.probs[i] * k,
            Sign::Minus => minus += decomp.probs[i] * k,
        }
    }
    Ok((plus, minus))
}
