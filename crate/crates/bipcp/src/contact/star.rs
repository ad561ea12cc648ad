//! The contact process on a star: one type-1 centre and `n` type-2 leaves.
//!
//! The state is (centre infected?, number of infected leaves), so each event is O(1).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{exp1, Rates, SimConfig, SimOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StarInit {
    CentreOnly,
    /// `m` infected leaves, centre healthy.
    Leaves(usize),
}

pub fn run_star(
    n: usize,
    rates: Rates,
    initial: StarInit,
    config: &SimConfig,
) -> Result<SimOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_star_with_rng(n, rates, initial, config, &mut rng)
}

pub fn run_star_with_rng<R: Rng + ?Sized>(
    n: usize,
    rates: Rates,
    initial: StarInit,
    config: &SimConfig,
    rng: &mut R,
) -> Result<SimOutcome> {
    config.validate()?;
    let (mut centre, mut k) = match initial {
        StarInit::CentreOnly => (true, 0usize),
        StarInit::Leaves(m) => {
            if m == 0 || m > n {
                return Err(Error::BadLeafCount { m, n });
            }
            (false, m)
        }
    };
    if n == 0 {
        return Err(Error::BadLeafCount { m: 0, n });
    }
    let count = |c: bool, k: usize| k + c as usize;
    let stop_count = config.stop_at_count.unwrap_or(usize::MAX);
    let mut peak = count(centre, k);
    let mut t = 0.0;
    let mut events = 0u64;
    let mut transmissions = 0u64;
    let mut capped = false;
    while count(centre, k) > 0 && peak < stop_count {
        if events >= config.max_events {
            capped = true;
            break;
        }
        let c = centre as u8 as f64;
        let kf = k as f64;
        let r_centre_rec = c;
        let r_leaf_rec = kf;
        let r_out = c * rates.lambda1 * (n - k) as f64;
        let r_in = (1.0 - c) * rates.lambda2 * kf;
        let total = r_centre_rec + r_leaf_rec + r_out + r_in;
        let dt = exp1(rng) / total;
        if t + dt > config.t_max {
            t = config.t_max;
            break;
        }
        t += dt;
        events += 1;
        let x = rng.gen::<f64>() * total;
        if x < r_centre_rec {
            centre = false;
        } else if x < r_centre_rec + r_leaf_rec {
            k -= 1;
        } else if x < r_centre_rec + r_leaf_rec + r_out {
            k += 1;
            transmissions += 1;
        } else {
            centre = true;
            transmissions += 1;
        }
        peak = peak.max(count(centre, k));
    }
    let alive = count(centre, k) > 0;
    Ok(SimOutcome {
        survived: alive,
        extinction_time: t,
        peak_infected: peak,
        final_infected: count(centre, k),
        total_transmissions: transmissions,
        target_hit: None,
        events_processed: events,
        alive_at_end: alive,
        capped,
        max_reach: 0.0,
        infections: None,
    })
}

/// Exact mean extinction times of the star chain.
///
/// Returns `(from centre-only, from centre plus all leaves)`. Levels are the number of
/// infected leaves; the chain is skip-free upwards, so first-passage quantities are
/// built from the top level down. Every step is a sum of positive terms, which keeps
/// the recursion accurate when the answer is astronomically large.
pub fn star_extinction_means(n: usize, rates: Rates) -> (f64, f64) {
    let (l1, l2) = (rates.lambda1, rates.lambda2);
    // For the level above: probability of returning in phase 0 (centre healthy) when
    // leaving it in phase 1, and the mean return time.
    let mut g_up0 = 0.0;
    let mut tau_up1 = 0.0;
    // Per level k (from n down to 1): (G(1,0), G(1,1), G(0,0), G(0,1), τ1, τ0).
    let mut levels = vec![[0.0f64; 6]; n + 1];
    for k in (1..=n).rev() {
        let kf = k as f64;
        let alpha = l1 * (n - k) as f64;
        let beta = l2 * kf;
        // Unknowns (x1, x0) for phase 1 and phase 0 at this level:
        //   (k+1+α g0) x1 − (1+α g0) x0 = r1
        //   −β x1 + (k+β) x0 = r0
        let a11 = kf + 1.0 + alpha * g_up0;
        let a12 = 1.0 + alpha * g_up0;
        let det = kf * (kf + 1.0 + alpha * g_up0) + beta * kf;
        let solve = |r1: f64, r0: f64| {
            let x1 = (r1 * (kf + beta) + a12 * r0) / det;
            let x0 = (a11 * r0 + beta * r1) / det;
            (x1, x0)
        };
        // Exit phase distribution: column "exit in phase 0" has r = (0, k); phase 1 has (k, 0).
        let (g10, g00) = solve(0.0, kf);
        let (g11, g01) = solve(kf, 0.0);
        let (tau1, tau0) = solve(1.0 + alpha * tau_up1, 1.0);
        levels[k] = [g10, g11, g00, g01, tau1, tau0];
        g_up0 = g10;
        tau_up1 = tau1;
    }
    // Level 0, centre infected: recovery ends the process; an upward jump returns to
    // level 0 after τ, landing in phase 0 (extinct) or phase 1 (here again).
    let alpha0 = l1 * n as f64;
    let (g10, tau1) = if n > 0 {
        (levels[1][0], levels[1][4])
    } else {
        (0.0, 0.0)
    };
    let e_centre = (1.0 + alpha0 * tau1) / (1.0 + alpha0 * g10);
    // From (1, n): descend level by level, tracking the phase distribution.
    let mut p1 = 1.0;
    let mut p0 = 0.0;
    let mut total = 0.0;
    for lv in levels.iter().skip(1).rev() {
        let [g10, g11, g00, g01, t1, t0] = *lv;
        total += p1 * t1 + p0 * t0;
        let (n1, n0) = (p1 * g11 + p0 * g01, p1 * g10 + p0 * g00);
        p1 = n1;
        p0 = n0;
    }
    total += p1 * e_centre;
    (e_centre, total)
}
