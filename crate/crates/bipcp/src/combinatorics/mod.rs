//! Combinatorial paths, discovery trees, tree weights and their reductions, and the
//! counting bounds for infection-path classes.

mod bounds;
mod mecke;
mod tree;
mod weight;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bounds::{
    count_bound, m_factor, path_class_bound, sum_bound_check, MFactor, PathClassBound, PathVariant,
    SumBoundCheck,
};
pub use mecke::{count_realized_paths, mecke_expected_count, Colouring};
pub use tree::{apply_reduction, discovery_tree, reduce_to_segment, Reduction, Tree};
pub use weight::{
    f_bound_scale, mark_integral, red_integral, reduction_ratio_ln, reduction_ratio_scale,
    script_u, script_u_scale, script_v, script_v_scale, tree_weight_f, Thresholds,
    WeightConvention, WeightMode, WeightValue,
};

/// Longest path [`enumerate_paths`] accepts by default.
pub const DEFAULT_LENGTH_CAP: usize = 14;

/// First-visit relabelling of a vertex path: starts `0, 1`, new values appear in
/// increasing order, no value repeats consecutively.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CombinatorialPath(Vec<usize>);

impl CombinatorialPath {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.first() != Some(&0) {
            return Err(Error::InvalidPath("must start at 0".into()));
        }
        let mut max = 0;
        for (i, &e) in entries.iter().enumerate().skip(1) {
            if e == entries[i - 1] {
                return Err(Error::InvalidPath(format!(
                    "consecutive repeat at position {i}"
                )));
            }
            if e > max + 1 {
                return Err(Error::InvalidPath(format!(
                    "{e} at position {i} skips a label"
                )));
            }
            max = max.max(e);
        }
        Ok(CombinatorialPath(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Number of steps ℓ.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 1
    }

    /// Number of distinct values k.
    pub fn distinct(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("nonempty")
    }

    /// Whether the final entry is visited for the first time at the last step.
    pub fn last_is_new(&self) -> bool {
        let l = self.len();
        l > 0 && !self.0[..l].contains(&self.0[l])
    }
}

impl fmt::Display for CombinatorialPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&s.join(","))
    }
}

impl FromStr for CombinatorialPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CombinatorialPath::new(v)
    }
}

/// Relabel a vertex sequence by first-visit order.
pub fn to_combinatorial<T: PartialEq + Copy>(path: &[T]) -> Result<CombinatorialPath> {
    if path.is_empty() {
        return Err(Error::InvalidPath("empty".into()));
    }
    let mut seen: Vec<T> = Vec::new();
    let mut out = Vec::with_capacity(path.len());
    for (i, &v) in path.iter().enumerate() {
        if i > 0 && path[i - 1] == v {
            return Err(Error::InvalidPath(format!(
                "consecutive repeat at position {i}"
            )));
        }
        let label = match seen.iter().position(|&s| s == v) {
            Some(p) => p,
            None => {
                seen.push(v);
                seen.len() - 1
            }
        };
        out.push(label);
    }
    Ok(CombinatorialPath(out))
}

/// Visit every combinatorial path of length `len` in lexicographic order.
pub fn for_each_path(len: usize, mut f: impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, max: usize, len: usize, f: &mut impl FnMut(&[usize])) {
        if buf.len() == len + 1 {
            f(buf);
            return;
        }
        let prev = *buf.last().expect("nonempty");
        for next in 0..=max + 1 {
            if next == prev {
                continue;
            }
            buf.push(next);
            rec(buf, max.max(next), len, f);
            buf.pop();
        }
    }
    let mut buf = vec![0];
    if len == 0 {
        f(&buf);
        return;
    }
    buf.push(1);
    rec(&mut buf, 1, len, &mut f);
}

/// All combinatorial paths of length `len`, optionally only those with `k` distinct values.
pub fn enumerate_paths(len: usize, k: Option<usize>) -> Result<Vec<CombinatorialPath>> {
    enumerate_paths_capped(len, k, DEFAULT_LENGTH_CAP)
}

pub fn enumerate_paths_capped(
    len: usize,
    k: Option<usize>,
    cap: usize,
) -> Result<Vec<CombinatorialPath>> {
    if len > cap {
        return Err(Error::LengthTooLarge { len, cap });
    }
    if let Some(k) = k {
        if k > len + 1 {
            return Err(Error::BadRange(format!(
                "k = {k} exceeds ℓ + 1 = {}",
                len + 1
            )));
        }
    }
    let mut out = Vec::new();
    for_each_path(len, |p| {
        let d = p.iter().max().map_or(0, |m| m + 1);
        if k.map_or(true, |k| k == d) {
            out.push(CombinatorialPath(p.to_vec()));
        }
    });
    Ok(out)
}
