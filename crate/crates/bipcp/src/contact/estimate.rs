//! Annealed survival estimates: a fresh graph and a fresh run per trial.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_with_rng, Rates, SimConfig, SimOutcome, SurvivalProxy};
use crate::error::Result;
use crate::hypergraph::{Hypergraph, RootSpec, Window};
use crate::phase::ModelParams;
use crate::stats::wilson;

/// Stream `trial` of the ChaCha8 generator keyed by `master`.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThetaDiagnostics {
    /// Trials in which some infected vertex came within 10% of the window edge.
    pub boundary_reach: usize,
    /// Trials stopped by the event cap while still infected.
    pub capped: usize,
    pub alive_at_horizon: usize,
    pub target_hits: usize,
    pub either: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub lambda: f64,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub successes: usize,
    pub proxy: String,
    pub diagnostics: ThetaDiagnostics,
}

/// Per-trial record as written to JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub survived: bool,
    pub extinction_time: f64,
    pub peak: usize,
    pub target_hit: Option<usize>,
}

pub fn run_trial(
    params: &ModelParams,
    window: Window,
    root: RootSpec,
    config: &SimConfig,
    master_seed: u64,
    trial: u64,
) -> Option<SimOutcome> {
    let mut rng = trial_rng(master_seed, trial);
    let g = Hypergraph::sample_with(params.gamma1, params.gamma2, window, trial, root, &mut rng);
    let root_id = g.root()?;
    let rates = Rates::from_lambda(params.lambda, params.a);
    Some(run_with_rng(&g, rates, &[root_id], config, &mut rng).expect("root is a valid id"))
}

/// Estimate θ(λ) with a Wilson 95% interval. Results do not depend on the thread count.
pub fn estimate_theta(
    params: &ModelParams,
    window: Window,
    root: RootSpec,
    n_trials: usize,
    config: &SimConfig,
    master_seed: u64,
) -> Result<(ThetaEstimate, Vec<TrialRecord>)> {
    params.validate()?;
    Window::new(window.half_length)?;
    config.validate()?;
    let outcomes: Vec<Option<SimOutcome>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(params, window, root, config, master_seed, i))
        .collect();
    let mut d = ThetaDiagnostics::default();
    let mut successes = 0;
    let mut records = Vec::with_capacity(n_trials);
    for (i, o) in outcomes.iter().enumerate() {
        let Some(o) = o else {
            records.push(TrialRecord {
                trial: i as u64,
                survived: false,
                extinction_time: 0.0,
                peak: 0,
                target_hit: None,
            });
            continue;
        };
        if o.survived {
            successes += 1;
        }
        d.boundary_reach += (o.max_reach >= 0.9 * window.half_length) as usize;
        d.capped += (o.capped && o.alive_at_end) as usize;
        d.alive_at_horizon += o.alive_at_end as usize;
        d.target_hits += o.target_hit.is_some() as usize;
        d.either += (o.alive_at_end || o.target_hit.is_some()) as usize;
        records.push(TrialRecord {
            trial: i as u64,
            survived: o.survived,
            extinction_time: o.extinction_time,
            peak: o.peak_infected,
            target_hit: o.target_hit,
        });
    }
    let (lo, hi) = wilson(successes, n_trials);
    let est = ThetaEstimate {
        lambda: params.lambda,
        theta_hat: if n_trials == 0 {
            0.0
        } else {
            successes as f64 / n_trials as f64
        },
        ci_lo: lo,
        ci_hi: hi,
        trials: n_trials,
        successes,
        proxy: config.survival_proxy.label().to_string(),
        diagnostics: d,
    };
    Ok((est, records))
}

impl SurvivalProxy {
    /// Parse `alive`, `target` or `either`; the target variants use the given thresholds.
    pub fn parse(s: &str, u1: f64, u2: f64) -> Option<SurvivalProxy> {
        match s {
            "alive" | "alive-at-horizon" => Some(SurvivalProxy::AliveAtHorizon),
            "target" | "target-hit" => Some(SurvivalProxy::TargetHit { u1, u2 }),
            "either" => Some(SurvivalProxy::Either { u1, u2 }),
            _ => None,
        }
    }
}
