//! Exact continuous-time simulation of the two-rate contact process.
//!
//! Infected vertices recover at rate 1; an infected type-`i` vertex transmits along each
//! incident edge at rate `λi`. The engine schedules on the aggregate rate
//! `N_inf + λ1·D1 + λ2·D2`, where `Di` is the total degree of infected type-`i`
//! vertices, and picks the transmitting vertex by degree through a Fenwick tree.

mod coupling;
mod estimate;
mod star;
mod trace;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub use coupling::{run_coupled, CoupledOutcome};
pub use estimate::{
    estimate_theta, run_trial, trial_rng, ThetaDiagnostics, ThetaEstimate, TrialRecord,
};
pub use star::{run_star, run_star_with_rng, star_extinction_means, StarInit};
pub use trace::{
    ancestry_trace, martingale_bound, trace_probability, trace_success, Trace, TraceEstimate,
};

/// Read-only view of a graph the engine can run on.
pub trait Network: Sync {
    fn len(&self) -> usize;
    /// 1 or 2.
    fn vtype(&self, id: usize) -> u8;
    fn neighbors(&self, id: usize) -> &[usize];
    fn mark(&self, _id: usize) -> f64 {
        1.0
    }
    fn position(&self, _id: usize) -> f64 {
        0.0
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Network for Hypergraph {
    fn len(&self) -> usize {
        Hypergraph::len(self)
    }
    fn vtype(&self, id: usize) -> u8 {
        self.vertices()[id].vtype
    }
    fn neighbors(&self, id: usize) -> &[usize] {
        Hypergraph::neighbors(self, id).expect("id checked by caller")
    }
    fn mark(&self, id: usize) -> f64 {
        self.vertices()[id].mark
    }
    fn position(&self, id: usize) -> f64 {
        self.vertices()[id].position
    }
}

/// Explicit adjacency-list graph (stars, paths, hand-built test graphs).
#[derive(Debug, Clone, PartialEq)]
pub struct AdjGraph {
    pub types: Vec<u8>,
    pub adj: Vec<Vec<usize>>,
    pub marks: Vec<f64>,
}

impl AdjGraph {
    pub fn new(types: Vec<u8>, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); types.len()];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        let marks = vec![1.0; types.len()];
        AdjGraph { types, adj, marks }
    }

    /// Type-1 centre `0` with `n` type-2 leaves `1..=n`.
    pub fn star(n: usize) -> Self {
        let mut types = vec![2u8; n + 1];
        types[0] = 1;
        let edges: Vec<(usize, usize)> = (1..=n).map(|i| (0, i)).collect();
        AdjGraph::new(types, &edges)
    }

    /// Path `0 – 1 – … – (n−1)` with alternating types starting at `first`.
    pub fn path(n: usize, first: u8) -> Self {
        let types = (0..n)
            .map(|i| if i % 2 == 0 { first } else { 3 - first })
            .collect();
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        AdjGraph::new(types, &edges)
    }
}

impl Network for AdjGraph {
    fn len(&self) -> usize {
        self.types.len()
    }
    fn vtype(&self, id: usize) -> u8 {
        self.types[id]
    }
    fn neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }
    fn mark(&self, id: usize) -> f64 {
        self.marks[id]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Rates {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        for l in [lambda1, lambda2] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::LambdaOutOfRange(l));
            }
        }
        Ok(Rates { lambda1, lambda2 })
    }

    /// `(λ, λ^a)`.
    pub fn from_lambda(lambda: f64, a: f64) -> Self {
        Rates {
            lambda1: lambda,
            lambda2: lambda.powf(a),
        }
    }

    pub fn of_type(&self, t: u8) -> f64 {
        if t == 1 {
            self.lambda1
        } else {
            self.lambda2
        }
    }

    /// Set when the martingale bound's `< 1/4` assumption fails.
    pub fn warning(&self) -> bool {
        self.lambda1 >= 0.25 || self.lambda2 >= 0.25
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SurvivalProxy {
    AliveAtHorizon,
    /// Reaching a type-`i` vertex with mark at most `ui`.
    TargetHit {
        u1: f64,
        u2: f64,
    },
    Either {
        u1: f64,
        u2: f64,
    },
}

impl SurvivalProxy {
    pub fn label(&self) -> &'static str {
        match self {
            SurvivalProxy::AliveAtHorizon => "alive-at-horizon",
            SurvivalProxy::TargetHit { .. } => "target-hit",
            SurvivalProxy::Either { .. } => "either",
        }
    }

    fn thresholds(&self) -> Option<(f64, f64)> {
        match *self {
            SurvivalProxy::AliveAtHorizon => None,
            SurvivalProxy::TargetHit { u1, u2 } | SurvivalProxy::Either { u1, u2 } => {
                Some((u1, u2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_max: f64,
    pub max_events: u64,
    pub survival_proxy: SurvivalProxy,
    pub record_trace: bool,
    pub seed: u64,
    /// Stop as soon as this many vertices are infected at once.
    pub stop_at_count: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_max: 1e3,
            max_events: 50_000_000,
            survival_proxy: SurvivalProxy::AliveAtHorizon,
            record_trace: false,
            seed: 0,
            stop_at_count: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::BadRange(format!("t_max = {}", self.t_max)));
        }
        if let Some((u1, u2)) = self.survival_proxy.thresholds() {
            for u in [u1, u2] {
                if !(u > 0.0 && u <= 1.0) {
                    return Err(Error::BadThreshold(u));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfectionEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub survived: bool,
    /// Extinction time, or the time the run stopped if still alive.
    pub extinction_time: f64,
    pub peak_infected: usize,
    pub final_infected: usize,
    /// Transmissions that infected a healthy vertex.
    pub total_transmissions: u64,
    pub target_hit: Option<usize>,
    pub events_processed: u64,
    pub alive_at_end: bool,
    /// The event cap stopped the run.
    pub capped: bool,
    /// Largest `|position|` of any vertex ever infected.
    pub max_reach: f64,
    pub infections: Option<Vec<InfectionEvent>>,
}

/// Fenwick tree over `u64` weights.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub(crate) fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
            total: 0,
        }
    }

    pub(crate) fn add(&mut self, i: usize, w: i64) {
        self.total = (self.total as i64 + w) as u64;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] = (self.tree[j] as i64 + w) as u64;
            j += j & j.wrapping_neg();
        }
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }

    /// Smallest index whose prefix sum exceeds `target` (`target < total`).
    pub(crate) fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let nxt = pos + step;
            if nxt < self.tree.len() && self.tree[nxt] <= target {
                pos = nxt;
                target -= self.tree[nxt];
            }
            step >>= 1;
        }
        pos
    }
}

/// Infected set with per-type degree-weighted samplers.
pub(crate) struct InfectedSet {
    pub(crate) infected: Vec<bool>,
    list: Vec<usize>,
    slot: Vec<usize>,
    deg: [Fenwick; 2],
}

impl InfectedSet {
    pub(crate) fn new(n: usize) -> Self {
        InfectedSet {
            infected: vec![false; n],
            list: Vec::new(),
            slot: vec![usize::MAX; n],
            deg: [Fenwick::new(n), Fenwick::new(n)],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.list.len()
    }

    pub(crate) fn insert<N: Network + ?Sized>(&mut self, net: &N, v: usize) -> bool {
        if self.infected[v] {
            return false;
        }
        self.infected[v] = true;
        self.slot[v] = self.list.len();
        self.list.push(v);
        let d = net.neighbors(v).len() as i64;
        self.deg[(net.vtype(v) - 1) as usize].add(v, d);
        true
    }

    pub(crate) fn remove<N: Network + ?Sized>(&mut self, net: &N, v: usize) {
        debug_assert!(self.infected[v]);
        self.infected[v] = false;
        let s = self.slot[v];
        let last = *self.list.last().expect("nonempty");
        self.list.swap_remove(s);
        if last != v {
            self.slot[last] = s;
        }
        self.slot[v] = usize::MAX;
        let d = net.neighbors(v).len() as i64;
        self.deg[(net.vtype(v) - 1) as usize].add(v, -d);
    }

    pub(crate) fn degree_total(&self, t: u8) -> u64 {
        self.deg[(t - 1) as usize].total()
    }

    pub(crate) fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.list[rng.gen_range(0..self.list.len())]
    }

    /// Infected type-`t` vertex chosen proportionally to its degree.
    pub(crate) fn by_degree<R: Rng + ?Sized>(&self, t: u8, rng: &mut R) -> usize {
        let f = &self.deg[(t - 1) as usize];
        f.find(rng.gen_range(0..f.total()))
    }

    pub(crate) fn members(&self) -> &[usize] {
        &self.list
    }
}

pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e
}

pub(crate) fn check_initial<N: Network + ?Sized>(net: &N, initial: &[usize]) -> Result<()> {
    if initial.is_empty() {
        return Err(Error::EmptyInitialSet);
    }
    for &v in initial {
        if v >= net.len() {
            return Err(Error::UnknownId(v));
        }
    }
    Ok(())
}

/// Run with a stream seeded from `config.seed`.
pub fn run<N: Network + ?Sized>(
    net: &N,
    rates: Rates,
    initial: &[usize],
    config: &SimConfig,
) -> Result<SimOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_with_rng(net, rates, initial, config, &mut rng)
}

pub fn run_with_rng<N: Network + ?Sized, R: Rng + ?Sized>(
    net: &N,
    rates: Rates,
    initial: &[usize],
    config: &SimConfig,
    rng: &mut R,
) -> Result<SimOutcome> {
    check_initial(net, initial)?;
    config.validate()?;
    let targets = config.survival_proxy.thresholds();
    let stop_on_target = matches!(config.survival_proxy, SurvivalProxy::TargetHit { .. });
    let is_target = |v: usize| match targets {
        Some((u1, u2)) => net.mark(v) <= if net.vtype(v) == 1 { u1 } else { u2 },
        None => false,
    };

    let mut set = InfectedSet::new(net.len());
    let mut target_hit = None;
    let mut max_reach: f64 = 0.0;
    for &v in initial {
        set.insert(net, v);
        max_reach = max_reach.max(net.position(v).abs());
        if target_hit.is_none() && is_target(v) {
            target_hit = Some(v);
        }
    }
    let mut infections = config.record_trace.then(Vec::new);
    let mut peak = set.len();
    let mut t = 0.0;
    let mut events = 0u64;
    let mut transmissions = 0u64;
    let mut capped = false;
    let stop_count = config.stop_at_count.unwrap_or(usize::MAX);

    while set.len() > 0 && peak < stop_count && !(stop_on_target && target_hit.is_some()) {
        if events >= config.max_events {
            capped = true;
            break;
        }
        let n_inf = set.len() as f64;
        let w1 = rates.lambda1 * set.degree_total(1) as f64;
        let w2 = rates.lambda2 * set.degree_total(2) as f64;
        let total = n_inf + w1 + w2;
        let dt = exp1(rng) / total;
        if t + dt > config.t_max {
            t = config.t_max;
            break;
        }
        t += dt;
        events += 1;
        let x = rng.gen::<f64>() * total;
        if x < n_inf {
            let v = set.uniform(rng);
            set.remove(net, v);
        } else {
            let t_src = if x - n_inf < w1 { 1 } else { 2 };
            let v = set.by_degree(t_src, rng);
            let nb = net.neighbors(v);
            let w = nb[rng.gen_range(0..nb.len())];
            if set.insert(net, w) {
                transmissions += 1;
                peak = peak.max(set.len());
                max_reach = max_reach.max(net.position(w).abs());
                if let Some(rec) = infections.as_mut() {
                    rec.push(InfectionEvent {
                        time: t,
                        from: v,
                        to: w,
                    });
                }
                if target_hit.is_none() && is_target(w) {
                    target_hit = Some(w);
                }
            }
        }
    }
    let alive = set.len() > 0;
    let survived = match config.survival_proxy {
        SurvivalProxy::AliveAtHorizon => alive,
        SurvivalProxy::TargetHit { .. } => target_hit.is_some(),
        SurvivalProxy::Either { .. } => alive || target_hit.is_some(),
    };
    Ok(SimOutcome {
        survived,
        extinction_time: t,
        peak_infected: peak,
        final_infected: set.len(),
        total_transmissions: transmissions,
        target_hit,
        events_processed: events,
        alive_at_end: alive,
        capped,
        max_reach,
        infections,
    })
}
