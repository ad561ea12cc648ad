//! Mark integrals, their envelopes, and the tree weight `F`.

use serde::{Deserialize, Serialize};

use super::tree::{check_reduction, Reduction, Tree};
use crate::error::{Error, Result};
use crate::phase::{default_b, strategy_exponents, AsymptoticScale, DerivedScales};

/// Below this distance from 1, `γn` is treated as exactly 1 (logarithmic branch).
const LOG_BRANCH_TOL: f64 = 1e-9;

/// Blue thresholds together with the model constants the weights need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub lambda: f64,
    pub u1: f64,
    pub u2: f64,
    /// Exponents of the formal thresholds `𝔲1 = λ^{μ⋆}(log)^b`, `𝔲2 = λ^{ν⋆}(log)^b`.
    pub mu_star: f64,
    pub nu_star: f64,
    pub b: f64,
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadThreshold(u))
    }
}

impl Thresholds {
    /// Numeric thresholds chosen by hand; the formal ones use `b = 17/δ + 1`.
    pub fn explicit(
        gamma1: f64,
        gamma2: f64,
        a: f64,
        lambda: f64,
        u1: f64,
        u2: f64,
    ) -> Result<Self> {
        check_u(u1)?;
        check_u(u2)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        let e = strategy_exponents(gamma1, gamma2, a)?;
        Ok(Thresholds {
            gamma1,
            gamma2,
            a,
            lambda,
            u1,
            u2,
            mu_star: e.mu_star,
            nu_star: e.nu_star,
            b: default_b(gamma1, gamma2),
        })
    }

    /// The blue thresholds of `s` (possibly clamped to 1).
    pub fn from_scales(s: &DerivedScales) -> Result<Self> {
        let p = s.params;
        let mut t = Thresholds::explicit(p.gamma1, p.gamma2, p.a, p.lambda, s.u_blue, s.v_blue)?;
        t.b = s.b;
        Ok(t)
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    fn lambda_of(&self, even: bool) -> f64 {
        if even {
            self.lambda
        } else {
            self.lambda.powf(self.a)
        }
    }

    /// λ-exponent of the rate at this parity.
    fn rate_power(&self, even: bool) -> f64 {
        if even {
            1.0
        } else {
            self.a
        }
    }

    /// `𝒰_n` for even parity, `𝒱_n` for odd.
    pub fn integral(&self, even: bool, n: usize) -> Result<f64> {
        if even {
            script_u(n, self)
        } else {
            script_v(n, self)
        }
    }

    pub fn envelope(&self, even: bool, n: usize) -> AsymptoticScale {
        if even {
            script_u_scale(n, self)
        } else {
            script_v_scale(n, self)
        }
    }
}

/// `∫_u^1 x^{−γn} dx`.
pub fn mark_integral(gamma: f64, n: usize, u: f64) -> Result<f64> {
    check_u(u)?;
    if n == 0 {
        return Err(Error::BadRange("mark integral needs n >= 1".into()));
    }
    let s = 1.0 - gamma * n as f64;
    if s.abs() < LOG_BRANCH_TOL {
        Ok(-u.ln())
    } else {
        Ok(-(s * u.ln()).exp_m1() / s)
    }
}

/// `∫_0^u x^{−γ} dx = u^{1−γ}/(1−γ)`.
pub fn red_integral(gamma: f64, u: f64) -> Result<f64> {
    check_u(u)?;
    Ok(u.powf(1.0 - gamma) / (1.0 - gamma))
}

pub fn script_u(n: usize, t: &Thresholds) -> Result<f64> {
    mark_integral(t.gamma1, n, t.u1)
}

pub fn script_v(n: usize, t: &Thresholds) -> Result<f64> {
    mark_integral(t.gamma2, n, t.u2)
}

/// Envelope `𝔲1^{(1−γ1 n)∧0}` of `𝒰_n`, up to one log on the upper side.
pub fn script_u_scale(n: usize, t: &Thresholds) -> AsymptoticScale {
    let e = (1.0 - t.gamma1 * n as f64).min(0.0);
    AsymptoticScale::new(t.mu_star, t.b).powf(e)
}

pub fn script_v_scale(n: usize, t: &Thresholds) -> AsymptoticScale {
    let e = (1.0 - t.gamma2 * n as f64).min(0.0);
    AsymptoticScale::new(t.nu_star, t.b).powf(e)
}

/// How the rate exponent is taken at the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightConvention {
    /// `(deg − 1) ∨ 1` at every vertex, the root included.
    AsWritten,
    /// `deg` at the root: every edge out of the root carries one transmission.
    RootExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    Numeric,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightValue {
    pub mode: WeightMode,
    /// `ln F` at the thresholds' λ and `u1, u2`.
    pub ln_value: f64,
    /// Envelope scale (lower side; the upper side carries one more log).
    pub scale: AsymptoticScale,
    /// Number of mark-integral factors in the product.
    pub factors: usize,
}

impl WeightValue {
    /// The envelope with its one log of upper slack.
    pub fn upper_scale(&self) -> AsymptoticScale {
        self.scale * AsymptoticScale::log_pow(1.0)
    }
}

fn rate_exponent(t: &Tree, v: usize, conv: WeightConvention) -> usize {
    let d = t.degree(v);
    if v == t.root && conv == WeightConvention::RootExact {
        d
    } else {
        d.saturating_sub(1).max(1)
    }
}

/// `F(T, o, m*)`: product over `T ∖ {m*}` of `(2λ_i)^{e(m)} · W_i(deg m)` where the parity of
/// the distance to the root picks type 1 (`λ`, `𝒰`) or type 2 (`λ^a`, `𝒱`).
pub fn tree_weight_f(
    t: &Tree,
    th: &Thresholds,
    conv: WeightConvention,
    mode: WeightMode,
) -> Result<WeightValue> {
    let m = t.m_star.ok_or(Error::BadDistinguishedLeaf(usize::MAX))?;
    if m == t.root || !t.is_leaf(m) {
        return Err(Error::BadDistinguishedLeaf(m));
    }
    let parity = t.parity_even();
    let mut ln = 0.0;
    let mut scale = AsymptoticScale::ONE;
    let mut factors = 0;
    for v in t.vertices().filter(|&v| v != m) {
        let even = parity[&v];
        let e = rate_exponent(t, v, conv) as f64;
        let d = t.degree(v);
        ln += e * (2.0 * th.lambda_of(even)).ln() + th.integral(even, d)?.ln();
        scale = scale * AsymptoticScale::lambda_pow(e * th.rate_power(even)) * th.envelope(even, d);
        factors += 1;
    }
    Ok(WeightValue {
        mode,
        ln_value: ln,
        scale,
        factors,
    })
}

struct RatioParts {
    /// (parity, index, sign) of every mark-integral factor in `F(T)/F(T')`.
    integrals: Vec<(bool, usize, f64)>,
    /// (parity, count) of every rate factor.
    rates: Vec<(bool, f64)>,
}

fn ratio_parts(t: &Tree, op: Reduction) -> Result<RatioParts> {
    check_reduction(t, op)?;
    let parity = t.parity_even();
    let p = parity[&op.anchor()];
    let q = !p;
    Ok(match op {
        Reduction::Op1 { x, .. } => {
            let dx = t.degree(x);
            RatioParts {
                integrals: vec![(p, dx, 1.0), (p, dx - 1, -1.0), (q, 1, 1.0)],
                rates: vec![(p, 1.0), (q, 1.0)],
            }
        }
        Reduction::Op2 { x, .. } => {
            let dx = t.degree(x);
            RatioParts {
                integrals: vec![(p, dx, 1.0), (p, dx - 1, -1.0), (q, 2, 1.0), (p, 1, 1.0)],
                rates: vec![(p, 2.0), (q, 1.0)],
            }
        }
        Reduction::Op3 { x, z, .. } => {
            let (dx, dz) = (t.degree(x), t.degree(z));
            RatioParts {
                integrals: vec![
                    (p, dx, 1.0),
                    (p, dz, 1.0),
                    (p, dx + dz - 2, -1.0),
                    (q, 2, 1.0),
                ],
                rates: vec![(p, 1.0), (q, 1.0)],
            }
        }
    })
}

/// `ln(F(T)/F(T'))` for `T' = op(T)` from the closed-form ratio, under
/// [`WeightConvention::RootExact`].
pub fn reduction_ratio_ln(t: &Tree, op: Reduction, th: &Thresholds) -> Result<f64> {
    let r = ratio_parts(t, op)?;
    let mut ln = 0.0;
    for (even, n, s) in r.integrals {
        ln += s * th.integral(even, n)?.ln();
    }
    for (even, c) in r.rates {
        ln += c * (2.0 * th.lambda_of(even)).ln();
    }
    Ok(ln)
}

/// Envelope scale of `F(T)/F(T')`.
pub fn reduction_ratio_scale(t: &Tree, op: Reduction, th: &Thresholds) -> Result<AsymptoticScale> {
    let r = ratio_parts(t, op)?;
    let mut s = AsymptoticScale::ONE;
    for (even, n, sign) in r.integrals {
        s = s * th.envelope(even, n).powf(sign);
    }
    for (even, c) in r.rates {
        s = s * AsymptoticScale::lambda_pow(c * th.rate_power(even));
    }
    Ok(s)
}

/// `(log)^{−16⌊(k−3)/2⌋} · ((𝒱2 λ^{1+a}) ∨ λ)` as a scale.
pub fn f_bound_scale(k: usize, th: &Thresholds) -> AsymptoticScale {
    let fl = (k as i64 - 3).div_euclid(2) as f64;
    let seg2 = th.envelope(false, 2) * AsymptoticScale::lambda_pow(1.0 + th.a);
    AsymptoticScale::log_pow(-16.0 * fl) * seg2.max(AsymptoticScale::lambda_pow(1.0))
}
