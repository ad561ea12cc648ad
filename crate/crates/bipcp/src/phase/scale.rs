//! Formal quantities `λ^p (log 1/λ)^q` compared by their behaviour as λ → 0.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

/// Exponent ties closer than this are treated as equal by [`AsymptoticScale::cmp_tol`].
pub const P_TOL: f64 = 1e-12;

/// `λ^p · (log 1/λ)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticScale {
    pub p: f64,
    pub q: f64,
}

impl AsymptoticScale {
    pub const ONE: AsymptoticScale = AsymptoticScale { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        AsymptoticScale { p, q }
    }

    pub fn lambda_pow(p: f64) -> Self {
        AsymptoticScale { p, q: 0.0 }
    }

    pub fn log_pow(q: f64) -> Self {
        AsymptoticScale { p: 0.0, q }
    }

    pub fn powf(self, e: f64) -> Self {
        AsymptoticScale {
            p: self.p * e,
            q: self.q * e,
        }
    }

    /// The eventually smaller of the two.
    pub fn min(self, other: Self) -> Self {
        if scale_compare(self, other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if scale_compare(self, other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// Same order as [`scale_compare`], but λ-exponents within `tol` count as equal.
    pub fn cmp_tol(self, other: Self, tol: f64) -> Ordering {
        if (self.p - other.p).abs() <= tol {
            self.q.total_cmp(&other.q)
        } else if self.p > other.p {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    /// `self ⪯ other` with the default exponent tolerance.
    pub fn eventually_le(self, other: Self) -> bool {
        self.cmp_tol(other, P_TOL) != Ordering::Greater
    }

    pub fn eval(self, lambda: f64) -> f64 {
        let l = (1.0 / lambda).ln();
        lambda.powf(self.p) * l.powf(self.q)
    }

    pub fn ln_eval(self, lambda: f64) -> f64 {
        let l = (1.0 / lambda).ln();
        self.p * lambda.ln() + self.q * l.ln()
    }
}

/// Exact eventual order: `s1 ⪯ s2` iff `p1 > p2`, or `p1 = p2` and `q1 ≤ q2`.
pub fn scale_compare(s1: AsymptoticScale, s2: AsymptoticScale) -> Ordering {
    match s1.p.total_cmp(&s2.p) {
        Ordering::Equal => s1.q.total_cmp(&s2.q),
        o => o.reverse(),
    }
}

impl Mul for AsymptoticScale {
    type Output = AsymptoticScale;
    fn mul(self, rhs: Self) -> Self {
        AsymptoticScale {
            p: self.p + rhs.p,
            q: self.q + rhs.q,
        }
    }
}

impl Div for AsymptoticScale {
    type Output = AsymptoticScale;
    fn div(self, rhs: Self) -> Self {
        AsymptoticScale {
            p: self.p - rhs.p,
            q: self.q - rhs.q,
        }
    }
}

impl fmt::Display for AsymptoticScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ^{} (log 1/λ)^{}", self.p, self.q)
    }
}
