//! Two copies of the process on one graphical construction.
//!
//! Arrows are laid down at the larger rates `hi`; each carries a uniform mark and is
//! also used by the `lo` process iff the mark is below `lo/hi` for the sender's type.
//! Recovery marks are shared. Both marginals are exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_initial, exp1, InfectedSet, Network, Rates};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledOutcome {
    pub events: u64,
    /// Event times at which the `lo` set was not contained in the `hi` set.
    pub violations: u64,
    pub lo_alive: bool,
    pub hi_alive: bool,
    pub lo_peak: usize,
    pub hi_peak: usize,
}

pub fn run_coupled<N: Network + ?Sized, R: Rng + ?Sized>(
    net: &N,
    lo: Rates,
    hi: Rates,
    initial: &[usize],
    t_max: f64,
    max_events: u64,
    rng: &mut R,
) -> Result<CoupledOutcome> {
    check_initial(net, initial)?;
    if lo.lambda1 > hi.lambda1 || lo.lambda2 > hi.lambda2 {
        return Err(Error::BadRange(
            "coupling needs lo <= hi for both types".into(),
        ));
    }
    let mut high = InfectedSet::new(net.len());
    let mut low = vec![false; net.len()];
    let mut n_low = 0usize;
    for &v in initial {
        high.insert(net, v);
        if !low[v] {
            low[v] = true;
            n_low += 1;
        }
    }
    let (mut lo_peak, mut hi_peak) = (n_low, high.len());
    let mut t = 0.0;
    let mut events = 0;
    let mut violations = 0;
    while high.len() > 0 && events < max_events {
        let n_inf = high.len() as f64;
        let w1 = hi.lambda1 * high.degree_total(1) as f64;
        let w2 = hi.lambda2 * high.degree_total(2) as f64;
        let total = n_inf + w1 + w2;
        t += exp1(rng) / total;
        if t > t_max {
            break;
        }
        events += 1;
        let x = rng.gen::<f64>() * total;
        if x < n_inf {
            let v = high.uniform(rng);
            high.remove(net, v);
            if low[v] {
                low[v] = false;
                n_low -= 1;
            }
        } else {
            let ts = if x - n_inf < w1 { 1 } else { 2 };
            let v = high.by_degree(ts, rng);
            let nb = net.neighbors(v);
            let w = nb[rng.gen_range(0..nb.len())];
            let mark: f64 = rng.gen();
            high.insert(net, w);
            if low[v] && mark * hi.of_type(ts) < lo.of_type(ts) && !low[w] {
                low[w] = true;
                n_low += 1;
            }
        }
        if high.members().len() < n_low
            || low.iter().enumerate().any(|(i, &l)| l && !high.infected[i])
        {
            violations += 1;
        }
        lo_peak = lo_peak.max(n_low);
        hi_peak = hi_peak.max(high.len());
    }
    Ok(CoupledOutcome {
        events,
        violations,
        lo_alive: n_low > 0,
        hi_alive: high.len() > 0,
        lo_peak,
        hi_peak,
    })
}
