//! Model parameters, strategy exponents, the explicit phase classification and
//! the scale inequalities behind the upper bound.

mod scale;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use scale::{scale_compare, AsymptoticScale, P_TOL};

/// Absolute tolerance for exact algebra.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for tie and boundary detection.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub lambda: f64,
    pub allow_subcritical: bool,
}

impl ModelParams {
    pub fn new(gamma1: f64, gamma2: f64, a: f64, lambda: f64) -> Self {
        ModelParams {
            gamma1,
            gamma2,
            a,
            lambda,
            allow_subcritical: false,
        }
    }

    pub fn subcritical(mut self) -> Self {
        self.allow_subcritical = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_gammas(self.gamma1, self.gamma2, self.allow_subcritical)?;
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::NonpositiveA(self.a));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        Ok(())
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda.powf(self.a)
    }
}

fn check_gammas(g1: f64, g2: f64, allow_subcritical: bool) -> Result<()> {
    for g in [g1, g2] {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::GammaOutOfRange(g));
        }
    }
    if !allow_subcritical && g1 + g2 <= 1.0 {
        return Err(Error::SubcriticalPair(g1 + g2));
    }
    Ok(())
}

fn check_point(g1: f64, g2: f64, a: f64) -> Result<()> {
    check_gammas(g1, g2, false)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonpositiveA(a));
    }
    Ok(())
}

/// `δ = γ1 ∧ γ2 ∧ (Δ1 + Δ2)`.
pub fn delta(g1: f64, g2: f64) -> f64 {
    let d1 = (2.0 * g1 - 1.0).max(0.0);
    let d2 = (2.0 * g2 - 1.0).max(0.0);
    g1.min(g2).min(d1 + d2)
}

pub fn default_b(g1: f64, g2: f64) -> f64 {
    17.0 / delta(g1, g2) + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub params: ModelParams,
    pub bar_gamma1: f64,
    pub bar_gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `Δ = γ1 + γ2 − 1`.
    pub delta_sum: f64,
    pub delta: f64,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub u_blue: f64,
    pub u_blue_clamped: bool,
    pub v_blue: f64,
    pub v_blue_clamped: bool,
    pub u0: f64,
    pub u0_clamped: bool,
    pub v0: f64,
    pub v0_clamped: bool,
}

fn clamp_unit(x: f64) -> (f64, bool) {
    if x > 1.0 || !x.is_finite() {
        (1.0, true)
    } else {
        (x, false)
    }
}

pub fn validate_and_derive(params: ModelParams, b_override: Option<f64>) -> Result<DerivedScales> {
    params.validate()?;
    let (g1, g2, a, lam) = (params.gamma1, params.gamma2, params.a, params.lambda);
    let delta1 = (2.0 * g1 - 1.0).max(0.0);
    let delta2 = (2.0 * g2 - 1.0).max(0.0);
    let d = delta(g1, g2);
    let b = match b_override {
        Some(b) => {
            if !(b * d > 17.0) {
                return Err(Error::BadB { b, min: 17.0 / d });
            }
            b
        }
        None => 17.0 / d + 1.0,
    };
    let log = (1.0 / lam).ln();
    // Subcritical pairs have no targets; only the star thresholds make sense there.
    let (mu_star, nu_star) = if g1 + g2 > 1.0 {
        let e = strategy_exponents(g1, g2, a)?;
        (e.mu_star, e.nu_star)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let (u_blue, u_blue_clamped) = clamp_unit(lam.powf(mu_star) * log.powf(b));
    let (v_blue, v_blue_clamped) = clamp_unit(lam.powf(nu_star) * log.powf(b));
    let (u0, u0_clamped) = clamp_unit(lam.powf((1.0 + a) / g1) * log.powf(-2.0 / g1));
    let (v0, v0_clamped) = clamp_unit(lam.powf((1.0 + a) / g2) * log.powf(-2.0 / g2));
    Ok(DerivedScales {
        params,
        bar_gamma1: 1.0 - g1,
        bar_gamma2: 1.0 - g2,
        delta1,
        delta2,
        delta_sum: g1 + g2 - 1.0,
        delta: d,
        b,
        lambda1: lam,
        lambda2: lam.powf(a),
        u_blue,
        u_blue_clamped,
        v_blue,
        v_blue_clamped,
        u0,
        u0_clamped,
        v0,
        v0_clamped,
    })
}

impl DerivedScales {
    pub fn any_clamped(&self) -> bool {
        self.u_blue_clamped || self.v_blue_clamped || self.u0_clamped || self.v0_clamped
    }
}

/// Target archetype: star, bridge or direct spreader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    S,
    B,
    D,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::S, Strategy::B, Strategy::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::S => "S",
            Strategy::B => "B",
            Strategy::D => "D",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyExponents {
    pub mu_s: f64,
    pub mu_b: f64,
    pub mu_d: f64,
    pub nu_s: f64,
    pub nu_b: f64,
    pub nu_d: f64,
    pub mu_star: f64,
    pub nu_star: f64,
    pub mu_label: Strategy,
    pub nu_label: Strategy,
    /// All labels within [`TIE_TOL`] of the minimum, in priority order S, B, D.
    pub mu_ties: Vec<Strategy>,
    pub nu_ties: Vec<Strategy>,
}

impl StrategyExponents {
    pub fn mu(&self, s: Strategy) -> f64 {
        match s {
            Strategy::S => self.mu_s,
            Strategy::B => self.mu_b,
            Strategy::D => self.mu_d,
        }
    }

    pub fn nu(&self, s: Strategy) -> f64 {
        match s {
            Strategy::S => self.nu_s,
            Strategy::B => self.nu_b,
            Strategy::D => self.nu_d,
        }
    }
}

fn argmin3(vals: [f64; 3]) -> (f64, Strategy, Vec<Strategy>) {
    let m = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let ties: Vec<Strategy> = Strategy::ALL
        .iter()
        .zip(vals)
        .filter(|(_, v)| *v - m <= TIE_TOL)
        .map(|(s, _)| *s)
        .collect();
    (m, ties[0], ties)
}

pub fn strategy_exponents(g1: f64, g2: f64, a: f64) -> Result<StrategyExponents> {
    check_point(g1, g2, a)?;
    let (b1, b2) = (1.0 - g1, 1.0 - g2);
    let d = g1 + g2 - 1.0;
    let g12 = g1 * g2;
    let mu_s = (1.0 + a) / g1;
    let mu_b = 1.0 / g12 + b2 / g12 * a;
    let mu_d = g2 / d + b2 / d * a;
    let nu_s = (1.0 + a) / g2;
    let nu_b = b1 / g12 + a / g12;
    let nu_d = b1 / d + g1 / d * a;
    let (mu_star, mu_label, mu_ties) = argmin3([mu_s, mu_b, mu_d]);
    let (nu_star, nu_label, nu_ties) = argmin3([nu_s, nu_b, nu_d]);
    Ok(StrategyExponents {
        mu_s,
        mu_b,
        mu_d,
        nu_s,
        nu_b,
        nu_d,
        mu_star,
        nu_star,
        mu_label,
        nu_label,
        mu_ties,
        nu_ties,
    })
}

/// `a₁* = γ̄1γ̄2 / (γ2 + γ1γ2 − 1)`.
pub fn a1_star(g1: f64, g2: f64) -> f64 {
    (1.0 - g1) * (1.0 - g2) / (g2 + g1 * g2 - 1.0)
}

/// `a₂* = (γ1 + γ1γ2 − 1) / (γ̄1γ̄2)`.
pub fn a2_star(g1: f64, g2: f64) -> f64 {
    (g1 + g1 * g2 - 1.0) / ((1.0 - g1) * (1.0 - g2))
}

/// `κ(γ) = γ / (3γ − 1)`: the curve `1/γ1 + 1/γ2 = 3`.
pub fn kappa(g: f64) -> f64 {
    g / (3.0 * g - 1.0)
}

/// `γ̄2/Δ2`, `+∞` when `Δ2 = 0`.
pub fn threshold_bar_g2_over_d2(g2: f64) -> f64 {
    let d2 = (2.0 * g2 - 1.0).max(0.0);
    if d2 == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - g2) / d2
    }
}

/// `Δ1/γ̄1`, `0` when `Δ1 = 0`.
pub fn threshold_d1_over_bar_g1(g1: f64) -> f64 {
    let d1 = (2.0 * g1 - 1.0).max(0.0);
    d1 / (1.0 - g1)
}

/// `(γ1 − γ2)/(γ2 − γ1 + γ1γ2)`, the split inside region Ib.
pub fn threshold_ib(g1: f64, g2: f64) -> f64 {
    (g1 - g2) / (g2 - g1 + g1 * g2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetRegion {
    I,
    II,
    III,
    IV,
}

impl TargetRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetRegion::I => "I",
            TargetRegion::II => "II",
            TargetRegion::III => "III",
            TargetRegion::IV => "IV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Ia,
    Ib,
    II,
    III,
    IV,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Ia => "Ia",
            Region::Ib => "Ib",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DominantStrategy {
    RootIsS,
    OneStepToS,
    OneStepToB,
    OneStepToD,
}

impl DominantStrategy {
    pub const ALL: [DominantStrategy; 4] = [
        DominantStrategy::RootIsS,
        DominantStrategy::OneStepToS,
        DominantStrategy::OneStepToB,
        DominantStrategy::OneStepToD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DominantStrategy::RootIsS => "root-is-S",
            DominantStrategy::OneStepToS => "one-step-to-S",
            DominantStrategy::OneStepToB => "one-step-to-B",
            DominantStrategy::OneStepToD => "one-step-to-D",
        }
    }

    /// The region formula for A⋆ belonging to this strategy.
    pub fn exponent(self, e: &StrategyExponents, g2: f64) -> f64 {
        let b2 = 1.0 - g2;
        match self {
            DominantStrategy::RootIsS => e.mu_s,
            DominantStrategy::OneStepToS => 1.0 + b2 * e.nu_s,
            DominantStrategy::OneStepToB => 1.0 + b2 * e.nu_b,
            DominantStrategy::OneStepToD => 1.0 + b2 * e.nu_d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMinimizers {
    pub mu_star: f64,
    pub nu_star: f64,
    pub mu_label: Strategy,
    pub nu_label: Strategy,
    pub target_region: TargetRegion,
}

/// Minimizer pair by explicit case analysis.
pub fn target_minimizers(g1: f64, g2: f64, a: f64) -> Result<TargetMinimizers> {
    let e = strategy_exponents(g1, g2, a)?;
    let t1 = threshold_d1_over_bar_g1(g1);
    let t2 = threshold_bar_g2_over_d2(g2);
    use Strategy::*;
    let (region, (ml, nl)) = if g2 <= 0.5 {
        (TargetRegion::I, if a <= t1 { (S, B) } else { (S, S) })
    } else if g1 <= 0.5 {
        (TargetRegion::II, if a <= t2 { (S, S) } else { (B, S) })
    } else if 1.0 / g1 + 1.0 / g2 > 3.0 {
        let p = if a <= t1 {
            (S, B)
        } else if a <= t2 {
            (S, S)
        } else {
            (B, S)
        };
        (TargetRegion::III, p)
    } else {
        let p = if a <= a1_star(g1, g2) {
            (S, B)
        } else if a <= a2_star(g1, g2) {
            (D, D)
        } else {
            (B, S)
        };
        (TargetRegion::IV, p)
    };
    Ok(TargetMinimizers {
        mu_star: e.mu(ml),
        nu_star: e.nu(nl),
        mu_label: ml,
        nu_label: nl,
        target_region: region,
    })
}

/// The three candidates whose minimum is A⋆.
pub fn a_star_candidates(g1: f64, g2: f64, a: f64) -> Result<[f64; 3]> {
    let e = strategy_exponents(g1, g2, a)?;
    let (b1, b2) = (1.0 - g1, 1.0 - g2);
    let d2 = (2.0 * g2 - 1.0).max(0.0);
    Ok([
        e.mu_star,
        1.0 + b2 * e.nu_star,
        1.0 + a - d2 * e.nu_star + b1 * e.mu_star,
    ])
}

/// `A⋆ = μ⋆ ∧ (1 + γ̄2ν⋆) ∧ (1 + a − Δ2ν⋆ + γ̄1μ⋆)`.
pub fn a_star(g1: f64, g2: f64, a: f64) -> Result<f64> {
    let c = a_star_candidates(g1, g2, a)?;
    Ok(c[0].min(c[1]).min(c[2]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseClassification {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub region: Region,
    pub target_region: TargetRegion,
    pub a_star_value: f64,
    pub dominant_strategy: DominantStrategy,
    pub mu_label: Strategy,
    pub nu_label: Strategy,
    pub thresholds: BTreeMap<String, f64>,
    pub tie: bool,
}

fn near(x: f64, y: f64) -> bool {
    x.is_finite() && y.is_finite() && (x - y).abs() <= TIE_TOL
}

pub fn classify(g1: f64, g2: f64, a: f64) -> Result<PhaseClassification> {
    let e = strategy_exponents(g1, g2, a)?;
    let tm = target_minimizers(g1, g2, a)?;
    let t1 = threshold_d1_over_bar_g1(g1);
    let t2 = threshold_bar_g2_over_d2(g2);
    let mut thresholds = BTreeMap::new();
    thresholds.insert("bar_g2_over_D2".to_string(), t2);
    thresholds.insert("D1_over_bar_g1".to_string(), t1);

    let mut tie = near(g1, 0.5) || near(g2, 0.5);
    use DominantStrategy::*;
    let (region, strategy) = if g1 > 0.5 && g2 <= g1 / (1.0 + g1) {
        tie |= near(g2, g1 / (1.0 + g1));
        (Region::Ia, RootIsS)
    } else if g1 > 0.5 && g2 <= 0.5 {
        let t = threshold_ib(g1, g2);
        thresholds.insert("ib_threshold".to_string(), t);
        tie |= near(g2, g1 / (1.0 + g1)) || near(a, t);
        (Region::Ib, if a <= t { RootIsS } else { OneStepToS })
    } else if g1 <= 0.5 {
        (Region::II, OneStepToS)
    } else if 1.0 / g1 + 1.0 / g2 > 3.0 {
        thresholds.insert("kappa".to_string(), kappa(g1));
        tie |= near(1.0 / g1 + 1.0 / g2, 3.0) || near(a, t1);
        (Region::III, if a <= t1 { OneStepToB } else { OneStepToS })
    } else {
        let (s1, s2) = (a1_star(g1, g2), a2_star(g1, g2));
        thresholds.insert("a1_star".to_string(), s1);
        thresholds.insert("a2_star".to_string(), s2);
        thresholds.insert("kappa".to_string(), kappa(g1));
        tie |= near(1.0 / g1 + 1.0 / g2, 3.0) || near(a, s1) || near(a, s2);
        let s = if a <= s1 {
            OneStepToB
        } else if a <= s2 {
            OneStepToD
        } else {
            OneStepToS
        };
        (Region::IV, s)
    };
    // Target-region boundaries count as ties too.
    match tm.target_region {
        TargetRegion::I => tie |= near(a, t1),
        TargetRegion::II => tie |= near(a, t2),
        TargetRegion::III => tie |= near(a, t1) || near(a, t2),
        TargetRegion::IV => {}
    }
    Ok(PhaseClassification {
        gamma1: g1,
        gamma2: g2,
        a,
        region,
        target_region: tm.target_region,
        a_star_value: strategy.exponent(&e, g2),
        dominant_strategy: strategy,
        mu_label: tm.mu_label,
        nu_label: tm.nu_label,
        thresholds,
        tie,
    })
}

/// An affine map `x ↦ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn inverse(&self) -> Affine {
        Affine {
            slope: 1.0 / self.slope,
            intercept: -self.intercept / self.slope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMaps {
    pub phi: Affine,
    pub psi: Affine,
    pub phi_inv: Affine,
    pub psi_inv: Affine,
}

/// `φ(μ) = (γ1/γ̄2)μ − 1/γ̄2` and `ψ(ν) = (γ2/γ̄1)ν − a/γ̄1`.
pub fn transmission_maps(g1: f64, g2: f64, a: f64) -> Result<TransmissionMaps> {
    check_point(g1, g2, a)?;
    let (b1, b2) = (1.0 - g1, 1.0 - g2);
    let phi = Affine {
        slope: g1 / b2,
        intercept: -1.0 / b2,
    };
    let psi = Affine {
        slope: g2 / b1,
        intercept: -a / b1,
    };
    Ok(TransmissionMaps {
        phi,
        psi,
        phi_inv: phi.inverse(),
        psi_inv: psi.inverse(),
    })
}

/// `Φ(μ,ν) = −γ1μ + γ̄2ν + 1`.
pub fn big_phi(g1: f64, g2: f64, mu: f64, nu: f64) -> f64 {
    -g1 * mu + (1.0 - g2) * nu + 1.0
}

/// `Ψ(μ,ν) = γ̄1μ − γ2ν + a`.
pub fn big_psi(g1: f64, g2: f64, a: f64, mu: f64, nu: f64) -> f64 {
    (1.0 - g1) * mu - g2 * nu + a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCheck {
    pub name: String,
    pub pass: bool,
    pub lhs: AsymptoticScale,
    pub rhs: AsymptoticScale,
    /// `rhs.p − lhs.p`; positive means strict polynomial room.
    pub slack_p: f64,
    /// `lhs.q − rhs.q`; decides the comparison when `slack_p` is zero.
    pub slack_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub b: f64,
    pub checks: Vec<ScaleCheck>,
    pub big_phi: f64,
    pub big_psi: f64,
    pub third_candidate_slack: f64,
}

impl ScaleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn ge_check(name: &str, lhs: AsymptoticScale, rhs: AsymptoticScale) -> ScaleCheck {
    ScaleCheck {
        name: name.to_string(),
        pass: rhs.eventually_le(lhs),
        lhs,
        rhs,
        slack_p: rhs.p - lhs.p,
        slack_q: lhs.q - rhs.q,
    }
}

/// Blue thresholds as formal scales: `𝔲1 = λ^{μ⋆}(log)^b`, `𝔲2 = λ^{ν⋆}(log)^b`.
pub fn blue_scales(g1: f64, g2: f64, a: f64, b: f64) -> Result<(AsymptoticScale, AsymptoticScale)> {
    let e = strategy_exponents(g1, g2, a)?;
    Ok((
        AsymptoticScale::new(e.mu_star, b),
        AsymptoticScale::new(e.nu_star, b),
    ))
}

pub fn verify_scale_inequalities(g1: f64, g2: f64, a: f64, b: f64) -> Result<ScaleReport> {
    let e = strategy_exponents(g1, g2, a)?;
    let d = delta(g1, g2);
    if !(b * d > 17.0) {
        return Err(Error::BadB { b, min: 17.0 / d });
    }
    let (u1, u2) = blue_scales(g1, g2, a, b)?;
    let d1 = (2.0 * g1 - 1.0).max(0.0);
    let d2 = (2.0 * g2 - 1.0).max(0.0);
    let logs = AsymptoticScale::log_pow(d * b);
    let lam = AsymptoticScale::lambda_pow;
    let checks = vec![
        ge_check(
            "just_stars",
            u1.powf(g1).min(u2.powf(g2)),
            logs * lam(1.0 + a),
        ),
        ge_check(
            "just_one_and_twoa",
            u1.powf(d1) * u2.powf(g2),
            logs * lam(1.0 + 2.0 * a),
        ),
        ge_check(
            "just_two_and_a",
            u1.powf(g1) * u2.powf(d2),
            logs * lam(2.0 + a),
        ),
        ge_check(
            "just_directs",
            u1.powf(d1) * u2.powf(d2),
            logs * lam(1.0 + a),
        ),
    ];
    let phi = big_phi(g1, g2, e.mu_star, e.nu_star);
    let psi = big_psi(g1, g2, a, e.mu_star, e.nu_star);
    let c = a_star_candidates(g1, g2, a)?;
    let third = c[2] - c[0].min(c[1]);
    let mut checks = checks;
    checks.push(ScaleCheck {
        name: "phi_psi_nonnegative".to_string(),
        pass: phi >= -EXACT_TOL && psi >= -EXACT_TOL,
        lhs: AsymptoticScale::ONE,
        rhs: AsymptoticScale::ONE,
        slack_p: phi.min(psi),
        slack_q: 0.0,
    });
    checks.push(ScaleCheck {
        name: "third_candidate_redundant".to_string(),
        pass: third >= -EXACT_TOL,
        lhs: AsymptoticScale::ONE,
        rhs: AsymptoticScale::ONE,
        slack_p: third,
        slack_q: 0.0,
    });
    Ok(ScaleReport {
        gamma1: g1,
        gamma2: g2,
        a,
        b,
        checks,
        big_phi: phi,
        big_psi: psi,
        third_candidate_slack: third,
    })
}

/// Evenly spaced values over `[lo, hi]`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        AxisRange { lo, hi, n }
    }

    pub fn single(x: f64) -> Self {
        AxisRange { lo: x, hi: x, n: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gamma1: AxisRange,
    pub gamma2: AxisRange,
    pub a: AxisRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    /// `None` for subcritical points.
    pub class: Option<PhaseClassification>,
}

impl PhaseRow {
    pub fn region_str(&self) -> &'static str {
        self.class
            .as_ref()
            .map_or("subcritical", |c| c.region.as_str())
    }
}

pub fn phase_grid(spec: &GridSpec) -> Result<Vec<PhaseRow>> {
    if spec.gamma1.n == 0 || spec.gamma2.n == 0 || spec.a.n == 0 {
        return Err(Error::EmptyGrid);
    }
    let (g1s, g2s, avs) = (spec.gamma1.values(), spec.gamma2.values(), spec.a.values());
    for &g in g1s.iter().chain(&g2s) {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::GammaOutOfRange(g));
        }
    }
    for &a in &avs {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonpositiveA(a));
        }
    }
    let mut rows = Vec::with_capacity(g1s.len() * g2s.len() * avs.len());
    for &g1 in &g1s {
        for &g2 in &g2s {
            for &a in &avs {
                let class = if g1 + g2 > 1.0 {
                    Some(classify(g1, g2, a)?)
                } else {
                    None
                };
                rows.push(PhaseRow {
                    gamma1: g1,
                    gamma2: g2,
                    a,
                    class,
                });
            }
        }
    }
    Ok(rows)
}

pub const PHASE_CSV_HEADER: &str =
    "gamma1,gamma2,a,region,target_region,a_star,mu_label,nu_label,strategy,tie";

pub fn write_phase_csv<W: Write>(rows: &[PhaseRow], mut w: W) -> Result<()> {
    writeln!(w, "{PHASE_CSV_HEADER}")?;
    for r in rows {
        match &r.class {
            Some(c) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.gamma1,
                r.gamma2,
                r.a,
                c.region.as_str(),
                c.target_region.as_str(),
                c.a_star_value,
                c.mu_label,
                c.nu_label,
                c.dominant_strategy.as_str(),
                c.tie
            )?,
            None => writeln!(
                w,
                "{},{},{},subcritical,,,,,,false",
                r.gamma1, r.gamma2, r.a
            )?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derive_examples() {
        let s = validate_and_derive(ModelParams::new(0.8, 0.8, 1.0, 0.2), None).unwrap();
        assert_abs_diff_eq!(s.delta_sum, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta1, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta2, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta, 0.8, epsilon = 1e-12);
        assert_eq!((s.lambda1, s.lambda2), (0.2, 0.2));
        assert!(s.b * s.delta > 17.0);

        let s = validate_and_derive(ModelParams::new(0.4, 0.9, 2.0, 0.1), None).unwrap();
        assert_eq!(s.delta1, 0.0);
        assert_abs_diff_eq!(s.delta2, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta_sum, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lambda2, 0.01, epsilon = 1e-15);

        let e = validate_and_derive(ModelParams::new(0.4, 0.4, 1.0, 0.1), None).unwrap_err();
        assert!(matches!(e, Error::SubcriticalPair(_)));
    }

    #[test]
    fn derive_errors() {
        let p = ModelParams::new(0.8, 0.8, 1.0, 0.2);
        assert!(matches!(
            validate_and_derive(p, Some(21.0)),
            Err(Error::BadB { .. })
        ));
        assert!(validate_and_derive(p, Some(22.0)).is_ok());
        let bad = ModelParams { gamma1: 1.0, ..p };
        assert!(matches!(
            validate_and_derive(bad, None),
            Err(Error::GammaOutOfRange(_))
        ));
        let bad = ModelParams { a: 0.0, ..p };
        assert!(matches!(
            validate_and_derive(bad, None),
            Err(Error::NonpositiveA(_))
        ));
        let bad = ModelParams { lambda: 1.0, ..p };
        assert!(matches!(
            validate_and_derive(bad, None),
            Err(Error::LambdaOutOfRange(_))
        ));
        // Desk-scale lambda: the blue thresholds exceed one.
        let s = validate_and_derive(p, None).unwrap();
        assert!(s.u_blue_clamped && s.u_blue == 1.0);
    }

    #[test]
    fn exponent_examples() {
        let e = strategy_exponents(0.8, 0.8, 1.0).unwrap();
        assert_abs_diff_eq!(e.mu_s, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.mu_b, 1.875, epsilon = 1e-12);
        assert_abs_diff_eq!(e.mu_d, 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_s, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_b, 1.875, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_d, 5.0 / 3.0, epsilon = 1e-12);
        assert_eq!((e.mu_label, e.nu_label), (Strategy::D, Strategy::D));

        let e = strategy_exponents(0.9, 0.3, 0.5).unwrap();
        assert_abs_diff_eq!(e.mu_s, 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.mu_b, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.mu_d, 3.25, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_s, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_b, 20.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nu_d, 2.75, epsilon = 1e-12);
        assert_eq!((e.mu_label, e.nu_label), (Strategy::S, Strategy::B));
    }

    #[test]
    fn target_examples() {
        let t = target_minimizers(0.8, 0.8, 1.0).unwrap();
        assert_eq!(
            (t.mu_label, t.nu_label, t.target_region),
            (Strategy::D, Strategy::D, TargetRegion::IV)
        );
        let t = target_minimizers(0.9, 0.3, 0.5).unwrap();
        assert_eq!(
            (t.mu_label, t.nu_label, t.target_region),
            (Strategy::S, Strategy::B, TargetRegion::I)
        );
        let t = target_minimizers(0.4, 0.9, 2.0).unwrap();
        assert_eq!(
            (t.mu_label, t.nu_label, t.target_region),
            (Strategy::B, Strategy::S, TargetRegion::II)
        );
        assert_eq!(threshold_bar_g2_over_d2(0.3), f64::INFINITY);
        assert_eq!(threshold_d1_over_bar_g1(0.4), 0.0);
    }

    #[test]
    fn a_star_examples() {
        let c = a_star_candidates(0.8, 0.8, 1.0).unwrap();
        assert_abs_diff_eq!(c[0], 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 4.0 / 3.0, epsilon = 1e-12);
        let c = a_star_candidates(0.9, 0.3, 0.5).unwrap();
        assert_abs_diff_eq!(c[0], 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 1.0 + 0.7 * 20.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 1.5 + 0.1 * 5.0 / 3.0, epsilon = 1e-12);
        let c = a_star_candidates(0.4, 0.9, 2.0).unwrap();
        assert_abs_diff_eq!(c[0], 10.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 7.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn classify_examples() {
        let c = classify(0.9, 0.3, 0.5).unwrap();
        assert_eq!(c.region, Region::Ia);
        assert_eq!(c.dominant_strategy, DominantStrategy::RootIsS);
        assert_abs_diff_eq!(c.a_star_value, 5.0 / 3.0, epsilon = 1e-12);
        let c = classify(0.4, 0.9, 2.0).unwrap();
        assert_eq!(c.region, Region::II);
        assert_eq!(c.dominant_strategy, DominantStrategy::OneStepToS);
        assert_abs_diff_eq!(c.a_star_value, 4.0 / 3.0, epsilon = 1e-12);
        let c = classify(0.8, 0.8, 1.0).unwrap();
        assert_eq!(c.region, Region::IV);
        assert_eq!(c.dominant_strategy, DominantStrategy::OneStepToD);
        assert_abs_diff_eq!(c.a_star_value, 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.thresholds["a1_star"], 1.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.thresholds["a2_star"], 11.0, epsilon = 1e-12);
        assert!(!c.tie);
        let c = classify(0.6, 0.45, 1.0).unwrap();
        assert_eq!(c.region, Region::Ib);
        assert_abs_diff_eq!(c.thresholds["ib_threshold"], 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c.a_star_value, 10.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn maps_examples() {
        let m = transmission_maps(0.8, 0.8, 1.0).unwrap();
        assert_abs_diff_eq!(m.phi.eval(5.0 / 3.0), 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.phi_inv.eval(2.5), 1.875, epsilon = 1e-12);
        for mu in [0.3, 1.0, 7.5] {
            assert_abs_diff_eq!(m.phi_inv.eval(m.phi.eval(mu)), mu, epsilon = 1e-12);
        }
    }

    #[test]
    fn scale_report_examples() {
        let r = verify_scale_inequalities(0.8, 0.8, 1.0, 22.0).unwrap();
        assert!(r.all_pass());
        let stars = &r.checks[0];
        assert_abs_diff_eq!(stars.lhs.p, 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stars.lhs.q, 17.6, epsilon = 1e-12);
        assert_abs_diff_eq!(r.big_phi, 0.0, epsilon = 1e-12);
        let r = verify_scale_inequalities(0.9, 0.3, 0.5, default_b(0.9, 0.3)).unwrap();
        assert!(r.all_pass());
        assert_abs_diff_eq!(r.big_psi, 0.0, epsilon = 1e-12);
        assert!(matches!(
            verify_scale_inequalities(0.8, 0.8, 1.0, 20.0),
            Err(Error::BadB { .. })
        ));
    }

    #[test]
    fn grid_examples() {
        let spec = GridSpec {
            gamma1: AxisRange::new(0.7, 0.9, 3),
            gamma2: AxisRange::new(0.7, 0.9, 3),
            a: AxisRange::single(1.0),
        };
        let rows = phase_grid(&spec).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            let direct = a_star(r.gamma1, r.gamma2, r.a).unwrap();
            assert_abs_diff_eq!(
                r.class.as_ref().unwrap().a_star_value,
                direct,
                epsilon = 1e-12
            );
        }
        let spec = GridSpec {
            gamma1: AxisRange::single(0.8),
            gamma2: AxisRange::single(0.8),
            a: AxisRange::single(a1_star(0.8, 0.8)),
        };
        assert!(phase_grid(&spec).unwrap()[0].class.as_ref().unwrap().tie);
        let empty = GridSpec {
            a: AxisRange::new(1.0, 2.0, 0),
            ..spec
        };
        assert_eq!(phase_grid(&empty), Err(Error::EmptyGrid));
    }

    #[test]
    fn csv_layout() {
        let spec = GridSpec {
            gamma1: AxisRange::new(0.3, 0.8, 2),
            gamma2: AxisRange::new(0.3, 0.8, 2),
            a: AxisRange::single(1.0),
        };
        let rows = phase_grid(&spec).unwrap();
        let mut buf = Vec::new();
        write_phase_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], PHASE_CSV_HEADER);
        assert_eq!(lines[1], "0.3,0.3,1,subcritical,,,,,,false");
        assert!(lines[4].starts_with("0.8,0.8,1,IV,IV,1.33333333333333"));
    }
}
