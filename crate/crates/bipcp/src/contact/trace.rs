//! Ordered traces and the probability that an infection path realizes one.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_rng, InfectionEvent, Network, Rates};
use crate::error::{Error, Result};
use crate::stats::{proportion_se, wilson};

/// Vertex ids visited in order; consecutive entries distinct and adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace(pub Vec<usize>);

impl Trace {
    /// Number of steps.
    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() <= 1
    }

    pub fn validate<N: Network + ?Sized>(&self, net: &N) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidTrace("no vertices".into()));
        }
        for &v in &self.0 {
            if v >= net.len() {
                return Err(Error::UnknownId(v));
            }
        }
        for w in self.0.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidTrace(format!(
                    "consecutive repeat of {}",
                    w[0]
                )));
            }
            if net.neighbors(w[0]).binary_search(&w[1]).is_err() {
                return Err(Error::InvalidTrace(format!(
                    "{} and {} are not adjacent",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// `(2λ_s)^{⌈ℓ/2⌉} (2λ_o)^{⌊ℓ/2⌋}` where `s` is the starting type and `o` the other.
/// `None` when a rate is at least 1/4.
pub fn martingale_bound(rates: Rates, start_type: u8, len: usize) -> Option<f64> {
    if rates.warning() {
        return None;
    }
    let (ls, lo) = if start_type == 1 {
        (rates.lambda1, rates.lambda2)
    } else {
        (rates.lambda2, rates.lambda1)
    };
    Some((2.0 * ls).powi(len.div_ceil(2) as i32) * (2.0 * lo).powi((len / 2) as i32))
}

/// One draw of the graphical construction restricted to the trace: does an infection
/// path started at `trace[0]` at time 0 follow the whole trace?
///
/// Tracks the set of prefix indices `i` such that some infection path following
/// `trace[..=i]` currently sits at `trace[i]`.
pub fn trace_success<N: Network + ?Sized, R: Rng + ?Sized>(
    net: &N,
    trace: &Trace,
    rates: Rates,
    rng: &mut R,
) -> bool {
    let g = &trace.0;
    let ell = g.len() - 1;
    if ell == 0 {
        return true;
    }
    let mut verts: Vec<usize> = g.clone();
    verts.sort_unstable();
    verts.dedup();
    let mut edges: Vec<(usize, usize)> = g.windows(2).map(|w| (w[0], w[1])).collect();
    edges.sort_unstable();
    edges.dedup();
    let mut active = vec![false; ell + 1];
    active[0] = true;
    loop {
        // Only clocks that can change the active set matter.
        let hosts: Vec<usize> = verts
            .iter()
            .copied()
            .filter(|&v| (0..=ell).any(|i| active[i] && g[i] == v))
            .collect();
        if hosts.is_empty() {
            return false;
        }
        let live: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(x, y)| (0..ell).any(|i| active[i] && g[i] == x && g[i + 1] == y))
            .collect();
        let rec = hosts.len() as f64;
        let arrow: Vec<f64> = live
            .iter()
            .map(|&(x, _)| rates.of_type(net.vtype(x)))
            .collect();
        let total = rec + arrow.iter().sum::<f64>();
        let mut x = rng.gen::<f64>() * total;
        if x < rec {
            let v = hosts[(x as usize).min(hosts.len() - 1)];
            for i in 0..=ell {
                if g[i] == v {
                    active[i] = false;
                }
            }
            continue;
        }
        x -= rec;
        let mut pick = live.len() - 1;
        for (j, r) in arrow.iter().enumerate() {
            if x < *r {
                pick = j;
                break;
            }
            x -= r;
        }
        let (a, b) = live[pick];
        let newly: Vec<usize> = (0..ell)
            .filter(|&i| active[i] && g[i] == a && g[i + 1] == b)
            .map(|i| i + 1)
            .collect();
        for i in newly {
            active[i] = true;
        }
        if active[ell] {
            return true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub bound: Option<f64>,
}

pub fn trace_probability<N: Network + ?Sized>(
    net: &N,
    trace: &Trace,
    rates: Rates,
    n_trials: usize,
    seed: u64,
) -> Result<TraceEstimate> {
    trace.validate(net)?;
    let bound = martingale_bound(rates, net.vtype(trace.0[0]), trace.len());
    if trace.len() == 0 {
        return Ok(TraceEstimate {
            p_hat: 1.0,
            se: 0.0,
            ci_lo: 1.0,
            ci_hi: 1.0,
            trials: n_trials,
            bound,
        });
    }
    let hits = (0..n_trials as u64)
        .into_par_iter()
        .filter(|&i| trace_success(net, trace, rates, &mut trial_rng(seed, i)))
        .count();
    let p = hits as f64 / n_trials as f64;
    let (lo, hi) = wilson(hits, n_trials);
    Ok(TraceEstimate {
        p_hat: p,
        se: proportion_se(p, n_trials),
        ci_lo: lo,
        ci_hi: hi,
        trials: n_trials,
        bound,
    })
}

/// The chain of first infections leading to `v`, as an ordered trace from an initial vertex.
pub fn ancestry_trace(events: &[InfectionEvent], v: usize) -> Trace {
    let mut chain = vec![v];
    let mut cur = v;
    let mut upto = events.len();
    // Walk back through the latest infection of `cur` before the current point.
    while let Some(pos) = events[..upto].iter().rposition(|e| e.to == cur) {
        cur = events[pos].from;
        chain.push(cur);
        upto = pos;
    }
    chain.reverse();
    Trace(chain)
}
