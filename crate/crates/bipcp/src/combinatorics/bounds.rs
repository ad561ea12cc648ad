//! Counting bounds: `M(λ, k, ℓ)`, the series bound on it, and the path-class bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{strategy_exponents, AsymptoticScale};

fn ln_binom(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

fn binom(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// `C(ℓ+1, k) · k^{ℓ+1−k}`, exact.
pub fn count_bound(len: usize, k: usize) -> Result<u128> {
    if k < 1 || k > len + 1 {
        return Err(Error::BadRange(format!(
            "count bound needs 1 <= k <= ℓ+1, got k = {k}, ℓ = {len}"
        )));
    }
    let b = binom(len as u128 + 1, k as u128);
    let p = (k as u128).checked_pow((len + 1 - k) as u32);
    b.zip(p)
        .and_then(|(b, p)| b.checked_mul(p))
        .ok_or_else(|| Error::BadRange(format!("count bound overflows at ℓ = {len}, k = {k}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MFactor {
    /// `ln(C(ℓ+1,k) k^{ℓ+1−k} 2^{(ℓ−2k)∨0})`.
    pub ln_constant: f64,
    /// `λ^{(a∧1)((ℓ−2k)∨0)} (log 1/λ)^{−16⌊(k−3)/2⌋}`.
    pub scale: AsymptoticScale,
    /// `ln M` at the given λ.
    pub ln_value: f64,
}

impl MFactor {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

fn check_kl(k: usize, len: usize) -> Result<()> {
    if k < 2 || len + 1 < k {
        return Err(Error::BadRange(format!(
            "need k >= 2 and ℓ >= k − 1, got k = {k}, ℓ = {len}"
        )));
    }
    Ok(())
}

/// `M(λ,k,ℓ) = C(ℓ+1,k) k^{ℓ+1−k} (2λ^{a∧1})^{(ℓ−2k)∨0} (log 1/λ)^{−16⌊(k−3)/2⌋}`.
pub fn m_factor(lambda: f64, a: f64, k: usize, len: usize) -> Result<MFactor> {
    check_kl(k, len)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let e = len.saturating_sub(2 * k) as f64;
    let fl = (k as i64 - 3).div_euclid(2) as f64;
    let ln_constant =
        ln_binom(len as u64 + 1, k as u64) + (len + 1 - k) as f64 * (k as f64).ln() + e * 2f64.ln();
    let scale = AsymptoticScale::new(a.min(1.0) * e, -16.0 * fl);
    Ok(MFactor {
        ln_constant,
        scale,
        ln_value: ln_constant + scale.ln_eval(lambda),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumBoundCheck {
    pub k: usize,
    pub lambda: f64,
    pub a: f64,
    pub ln_sum: f64,
    /// `ln (4k)^{3k}`.
    pub ln_bound: f64,
    pub sum: f64,
    pub bound: f64,
    pub terms: usize,
    /// `2k λ^{a∧1}`: the limiting ratio of consecutive terms; the series converges iff < 1.
    pub ratio_limit: f64,
    pub converged: bool,
    pub pass: bool,
}

/// Truncated `Σ_{ℓ≥k−1} C(ℓ+1,k) k^{ℓ+1−k} (2λ^{a∧1})^{(ℓ−2k)∨0}` against `(4k)^{3k}`.
/// Summation stops once a term in the decaying tail falls below 1e−300 of the running sum.
pub fn sum_bound_check(k: usize, lambda: f64, a: f64) -> Result<SumBoundCheck> {
    if k < 3 {
        return Err(Error::BadRange(format!("sum bound needs k >= 3, got {k}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let x = 2.0 * lambda.powf(a.min(1.0));
    let ratio_limit = k as f64 * x;
    let cut = 1e-300f64.ln();
    let mut ln_sum = f64::NEG_INFINITY;
    let mut terms = 0;
    let mut converged = false;
    let mut prev = f64::NEG_INFINITY;
    for len in (k - 1)..(k - 1 + 1_000_000) {
        let e = len.saturating_sub(2 * k) as f64;
        let t = ln_binom(len as u64 + 1, k as u64)
            + (len + 1 - k) as f64 * (k as f64).ln()
            + e * x.ln();
        ln_sum = if ln_sum == f64::NEG_INFINITY {
            t
        } else {
            ln_sum.max(t) + (-(ln_sum - t).abs()).exp().ln_1p()
        };
        terms += 1;
        if len > 2 * k && t < prev && t - ln_sum < cut {
            converged = true;
            break;
        }
        prev = t;
    }
    let ln_bound = 3.0 * k as f64 * (4.0 * k as f64).ln();
    Ok(SumBoundCheck {
        k,
        lambda,
        a,
        ln_sum,
        ln_bound,
        sum: ln_sum.exp(),
        bound: ln_bound.exp(),
        terms,
        ratio_limit,
        converged,
        pass: converged && ln_sum <= ln_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathVariant {
    /// All blue except a red last vertex.
    P,
    /// All blue, last vertex new.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathClassBound {
    pub scale: AsymptoticScale,
    /// Log of the constant carried by `M`.
    pub ln_constant: f64,
}

/// The constant-free bound on the probability of the `(k, ℓ)` path class.
pub fn path_class_bound(
    k: usize,
    len: usize,
    variant: PathVariant,
    g1: f64,
    g2: f64,
    a: f64,
) -> Result<PathClassBound> {
    check_kl(k, len)?;
    let e = strategy_exponents(g1, g2, a)?;
    let m = m_factor(0.5, a, k, len)?;
    let d2 = (2.0 * g2 - 1.0).max(0.0);
    let even = len % 2 == 0;
    let p = match (variant, even) {
        (PathVariant::P, true) => 1.0 + a - d2 * e.nu_star + (1.0 - g1) * e.mu_star,
        (PathVariant::P, false) => 1.0 + (1.0 - g2) * e.nu_star,
        (PathVariant::Q, true) => 1.0 + a,
        (PathVariant::Q, false) => 1.0,
    };
    Ok(PathClassBound {
        scale: m.scale * AsymptoticScale::lambda_pow(p),
        ln_constant: m.ln_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_bound_examples() {
        assert_eq!(count_bound(3, 3).unwrap(), 12);
        assert_eq!(count_bound(1, 2).unwrap(), 1);
        assert_eq!(count_bound(2, 2).unwrap(), 6);
        assert!(count_bound(2, 4).is_err());
        assert!(count_bound(2, 0).is_err());
    }

    #[test]
    fn m_examples() {
        let m = m_factor(1e-3, 1.0, 3, 2).unwrap();
        assert_eq!(m.scale, AsymptoticScale::ONE);
        assert!(m.ln_value.abs() < 1e-12);
        let m = m_factor(1e-3, 1.0, 2, 3).unwrap();
        assert_eq!(m.scale, AsymptoticScale::log_pow(16.0));
        let want = 24.0f64.ln() + 16.0 * (1e3f64).ln().ln();
        assert!((m.ln_value - want).abs() < 1e-12);
    }

    #[test]
    fn sum_bound_example() {
        let c = sum_bound_check(3, 1e-3, 1.0).unwrap();
        assert!(c.pass && c.converged);
        assert_eq!(c.bound.round() as u64, 5_159_780_352);
    }

    #[test]
    fn class_examples() {
        let (g1, g2, a) = (0.8, 0.8, 1.0);
        let e = strategy_exponents(g1, g2, a).unwrap();
        let b = path_class_bound(2, 1, PathVariant::P, g1, g2, a).unwrap();
        assert!((b.scale.p - (1.0 + 0.2 * e.nu_star)).abs() < 1e-12 && b.scale.q == 16.0);
        let b = path_class_bound(3, 2, PathVariant::P, g1, g2, a).unwrap();
        assert!(
            (b.scale.p - (2.0 - 0.6 * e.nu_star + 0.2 * e.mu_star)).abs() < 1e-12
                && b.scale.q == 0.0
        );
        let b = path_class_bound(3, 3, PathVariant::Q, g1, g2, a).unwrap();
        assert_eq!(b.scale, AsymptoticScale::lambda_pow(1.0));
        assert!((b.ln_constant - 12f64.ln()).abs() < 1e-12);
    }
}
