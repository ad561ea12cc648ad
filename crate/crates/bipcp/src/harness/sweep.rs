use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::with_workers;
use crate::contact::{estimate_theta, SimConfig, TrialRecord};
use crate::error::{Error, Result};
use crate::hypergraph::{RootSpec, Window};
use crate::phase::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    /// Strictly monotone, all in (0, 1).
    pub lambdas: Vec<f64>,
    pub half_length: f64,
    pub trials: usize,
    pub sim: SimConfig,
    pub root: RootSpec,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(gamma1: f64, gamma2: f64, a: f64, lambdas: Vec<f64>) -> Self {
        ExperimentConfig {
            gamma1,
            gamma2,
            a,
            lambdas,
            half_length: 1e3,
            trials: 1000,
            sim: SimConfig::default(),
            root: RootSpec::UniformMark { vtype: 1 },
            master_seed: 0,
            out: None,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::BadRange("empty λ list".into()));
        }
        for &l in &self.lambdas {
            ModelParams::new(self.gamma1, self.gamma2, self.a, l).validate()?;
        }
        let up = self.lambdas.windows(2).all(|w| w[0] < w[1]);
        let down = self.lambdas.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::BadRange("λ list must be strictly monotone".into()));
        }
        if self.trials == 0 {
            return Err(Error::BadRange("trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::BadRange("worker count must be at least 1".into()));
        }
        Window::new(self.half_length)?;
        self.sim.validate()
    }

    pub fn params(&self, lambda: f64) -> ModelParams {
        ModelParams::new(self.gamma1, self.gamma2, self.a, lambda)
    }
}

/// One aggregate row per λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub lambda: f64,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub successes: usize,
    pub proxy: String,
    pub alive_frac: f64,
    pub target_frac: f64,
    pub either_frac: f64,
    pub boundary_reach: usize,
    pub capped: usize,
}

pub const SWEEP_CSV_HEADER: &str = "gamma1,gamma2,a,lambda,theta_hat,ci_lo,ci_hi,trials,successes,proxy,alive_frac,target_frac,either_frac,boundary_reach,capped";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.gamma1,
            self.gamma2,
            self.a,
            self.lambda,
            self.theta_hat,
            self.ci_lo,
            self.ci_hi,
            self.trials,
            self.successes,
            self.proxy,
            self.alive_frac,
            self.target_frac,
            self.either_frac,
            self.boundary_reach,
            self.capped
        )
    }
}

/// [`sweep_theta_with`] without a per-row callback.
pub fn sweep_theta(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    sweep_theta_with(config, |_, _| Ok(()))
}

/// Estimate θ at every λ. All λ share the master seed, so trial `i` sees the same graph
/// at every rate. `on_row` runs as soon as a row is complete, letting callers flush
/// partial results.
pub fn sweep_theta_with(
    config: &ExperimentConfig,
    mut on_row: impl FnMut(&SweepRow, &[TrialRecord]) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let window = Window::new(config.half_length)?;
    let mut rows = Vec::with_capacity(config.lambdas.len());
    for &l in &config.lambdas {
        let params = config.params(l);
        let (est, records) = with_workers(config.workers, || {
            estimate_theta(
                &params,
                window,
                config.root,
                config.trials,
                &config.sim,
                config.master_seed,
            )
        })??;
        let n = est.trials.max(1) as f64;
        let d = &est.diagnostics;
        let row = SweepRow {
            gamma1: config.gamma1,
            gamma2: config.gamma2,
            a: config.a,
            lambda: l,
            theta_hat: est.theta_hat,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            trials: est.trials,
            successes: est.successes,
            proxy: est.proxy,
            alive_frac: d.alive_at_horizon as f64 / n,
            target_frac: d.target_hits as f64 / n,
            either_frac: d.either as f64 / n,
            boundary_reach: d.boundary_reach,
            capped: d.capped,
        };
        on_row(&row, &records)?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub lambda: f64,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl From<&SweepRow> for FitPoint {
    fn from(r: &SweepRow) -> Self {
        FitPoint {
            lambda: r.lambda,
            theta_hat: r.theta_hat,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
        }
    }
}

/// Accepted slope interval `[lo, hi]` around the predicted exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBand {
    pub a_star: f64,
    pub lo: f64,
    pub hi: f64,
}

impl FitBand {
    pub fn around(a_star: f64, tol: f64) -> Self {
        FitBand {
            a_star,
            lo: a_star - tol,
            hi: a_star + tol,
        }
    }

    /// Band around the classified exponent at `(γ1, γ2, a)`.
    pub fn for_params(g1: f64, g2: f64, a: f64, lo: f64, hi: f64) -> Result<Self> {
        Ok(FitBand {
            a_star: crate::phase::a_star(g1, g2, a)?,
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Rows in range left out because θ̂ = 0.
    pub excluded_zero: usize,
    pub target: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub within_band: bool,
}

/// Weighted least squares of `ln θ̂` on `ln λ` over rows with λ in `range`. Weights are the
/// inverse squared relative CI widths (uniform if any width is zero).
pub fn fit_slope(points: &[FitPoint], range: (f64, f64), band: FitBand) -> Result<SlopeFit> {
    let in_range: Vec<&FitPoint> = points
        .iter()
        .filter(|p| p.lambda >= range.0 && p.lambda <= range.1)
        .collect();
    let excluded_zero = in_range.iter().filter(|p| !(p.theta_hat > 0.0)).count();
    let used: Vec<&FitPoint> = in_range.into_iter().filter(|p| p.theta_hat > 0.0).collect();
    if used.len() < 2 {
        return Err(if excluded_zero > 0 {
            Error::ZeroTheta(excluded_zero)
        } else {
            Error::TooFewPoints(used.len())
        });
    }
    let rel: Vec<f64> = used
        .iter()
        .map(|p| (p.ci_hi - p.ci_lo) / p.theta_hat)
        .collect();
    let w: Vec<f64> = if rel.iter().all(|&r| r > 0.0 && r.is_finite()) {
        rel.iter().map(|r| 1.0 / (r * r)).collect()
    } else {
        vec![1.0; used.len()]
    };
    let xs: Vec<f64> = used.iter().map(|p| p.lambda.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.theta_hat.ln()).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&xs).map(|(w, x)| w * (x - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::TooFewPoints(1));
    }
    let sxy: f64 = (0..xs.len())
        .map(|i| w[i] * (xs[i] - xm) * (ys[i] - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let n = xs.len();
    let stderr = if n > 2 {
        let rss: f64 = (0..n)
            .map(|i| w[i] * (ys[i] - intercept - slope * xs[i]).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let lams = used.iter().map(|p| p.lambda);
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        lambda_min: lams.clone().fold(f64::INFINITY, f64::min),
        lambda_max: lams.fold(f64::NEG_INFINITY, f64::max),
        points: n,
        excluded_zero,
        target: band.a_star,
        band_lo: band.lo,
        band_hi: band.hi,
        within_band: slope >= band.lo && slope <= band.hi,
    })
}
