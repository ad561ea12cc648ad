//! Expected path counts on the infinite line and the matching exact counts on a graph.

use serde::{Deserialize, Serialize};

use super::tree::discovery_tree;
use super::weight::{red_integral, Thresholds};
use super::{CombinatorialPath, DEFAULT_LENGTH_CAP};
use crate::contact::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Colouring {
    AllBlue,
    /// Every vertex blue except the last, which is red and visited only at the end.
    RedLast,
}

fn check_colouring(path: &CombinatorialPath, c: Colouring) -> Result<()> {
    if c == Colouring::RedLast && !path.last_is_new() {
        return Err(Error::InvalidColouringForPath(format!(
            "{path}: the last entry must be a first visit for a red-last colouring"
        )));
    }
    Ok(())
}

/// Expected number of root-started paths with combinatorial path `path` and colouring `c`,
/// for a type-1 root at the origin. One factor 2 per discovery-tree edge accounts for the
/// two sides of each connection interval.
pub fn mecke_expected_count(
    path: &CombinatorialPath,
    c: Colouring,
    th: &Thresholds,
) -> Result<f64> {
    check_colouring(path, c)?;
    let t = discovery_tree(path);
    let parity = t.parity_even();
    let last = path.last();
    let mut v = 2f64.powi(t.len() as i32 - 1);
    for m in t.vertices() {
        if c == Colouring::RedLast && m == last {
            continue;
        }
        v *= th.integral(parity[&m], t.degree(m))?;
    }
    if c == Colouring::RedLast {
        v *= if path.len() % 2 == 0 {
            red_integral(th.gamma1, th.u1)?
        } else {
            red_integral(th.gamma2, th.u2)?
        };
    }
    Ok(v)
}

/// Exact number of vertex paths from `root` realizing `path` with colouring `c`, where a
/// type-`i` vertex is blue iff its mark exceeds `u_i`.
pub fn count_realized_paths<N: Network + ?Sized>(
    net: &N,
    root: usize,
    path: &CombinatorialPath,
    c: Colouring,
    th: &Thresholds,
) -> Result<u64> {
    if path.len() > DEFAULT_LENGTH_CAP {
        return Err(Error::LengthTooLarge {
            len: path.len(),
            cap: DEFAULT_LENGTH_CAP,
        });
    }
    check_colouring(path, c)?;
    if root >= net.len() {
        return Err(Error::UnknownId(root));
    }
    let blue = |v: usize| net.mark(v) > if net.vtype(v) == 1 { th.u1 } else { th.u2 };
    let e = path.entries();
    let ell = path.len();
    let want = |step: usize, v: usize| {
        if c == Colouring::RedLast && step == ell {
            !blue(v)
        } else {
            blue(v)
        }
    };
    if !want(0, root) {
        return Ok(0);
    }
    let mut assigned = vec![usize::MAX; path.distinct()];
    assigned[0] = root;

    fn rec<N: Network + ?Sized>(
        net: &N,
        e: &[usize],
        step: usize,
        assigned: &mut Vec<usize>,
        want: &dyn Fn(usize, usize) -> bool,
    ) -> u64 {
        if step == e.len() {
            return 1;
        }
        let cur = assigned[e[step - 1]];
        let label = e[step];
        if assigned[label] != usize::MAX {
            let v = assigned[label];
            return if net.neighbors(cur).binary_search(&v).is_ok() {
                rec(net, e, step + 1, assigned, want)
            } else {
                0
            };
        }
        let mut total = 0;
        for &w in net.neighbors(cur) {
            if assigned.contains(&w) || !want(step, w) {
                continue;
            }
            assigned[label] = w;
            total += rec(net, e, step + 1, assigned, want);
            assigned[label] = usize::MAX;
        }
        total
    }

    if ell == 0 {
        return Ok(1);
    }
    Ok(rec(net, e, 1, &mut assigned, &want))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::weight::{script_u, script_v};
    use crate::contact::AdjGraph;

    fn th() -> Thresholds {
        Thresholds::explicit(0.6, 0.7, 1.0, 0.1, 0.3, 0.4).unwrap()
    }

    fn p(v: &[usize]) -> CombinatorialPath {
        CombinatorialPath::new(v.to_vec()).unwrap()
    }

    #[test]
    fn formula_examples() {
        let t = th();
        let u = |n| script_u(n, &t).unwrap();
        let v = |n| script_v(n, &t).unwrap();
        let got = mecke_expected_count(&p(&[0, 1]), Colouring::AllBlue, &t).unwrap();
        assert!((got - 2.0 * u(1) * v(1)).abs() < 1e-12);
        let got = mecke_expected_count(&p(&[0, 1, 2]), Colouring::AllBlue, &t).unwrap();
        assert!((got - 4.0 * u(1) * v(2) * u(1)).abs() < 1e-12);
        let got = mecke_expected_count(&p(&[0, 1]), Colouring::RedLast, &t).unwrap();
        let want = 2.0 * u(1) * t.u2.powf(1.0 - t.gamma2) / (1.0 - t.gamma2);
        assert!((got - want).abs() < 1e-12);
        assert!(matches!(
            mecke_expected_count(&p(&[0, 1, 0]), Colouring::RedLast, &t),
            Err(Error::InvalidColouringForPath(_))
        ));
    }

    #[test]
    fn hand_counts() {
        let t = th();
        let lone = AdjGraph::new(vec![1], &[]);
        assert_eq!(
            count_realized_paths(&lone, 0, &p(&[0, 1]), Colouring::AllBlue, &t).unwrap(),
            0
        );
        let mut g = AdjGraph::new(vec![1, 2, 2], &[(0, 1), (0, 2)]);
        g.marks = vec![0.9, 0.8, 0.7];
        assert_eq!(
            count_realized_paths(&g, 0, &p(&[0, 1]), Colouring::AllBlue, &t).unwrap(),
            2
        );
        assert_eq!(
            count_realized_paths(&g, 0, &p(&[0, 1, 0, 2]), Colouring::AllBlue, &t).unwrap(),
            2
        );
        g.marks[2] = 0.1;
        assert_eq!(
            count_realized_paths(&g, 0, &p(&[0, 1]), Colouring::RedLast, &t).unwrap(),
            1
        );
    }
}
