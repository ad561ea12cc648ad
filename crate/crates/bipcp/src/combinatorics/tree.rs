//! Rooted trees with a distinguished leaf, discovery trees of paths, and the three
//! reduction operations.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CombinatorialPath;
use crate::error::{Error, Result};

/// Finite tree with root `root` and optional distinguished leaf `m_star`. Vertex ids are
/// arbitrary (reductions create fresh ids).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub root: usize,
    pub m_star: Option<usize>,
    adj: BTreeMap<usize, Vec<usize>>,
}

impl Tree {
    /// Build from an edge list; fails unless the edges form a tree containing `root`.
    pub fn from_edges(root: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        adj.entry(root).or_default();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidPath(format!("self-loop at {a}")));
            }
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for l in adj.values_mut() {
            l.sort_unstable();
        }
        let t = Tree {
            root,
            m_star: None,
            adj,
        };
        if edges.len() + 1 != t.len() || t.distances().len() != t.len() {
            return Err(Error::InvalidPath("edges do not form a tree".into()));
        }
        Ok(t)
    }

    /// Tree from a parent array (`parents[root] = None`).
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let root = parents
            .iter()
            .position(|p| p.is_none())
            .ok_or_else(|| Error::InvalidPath("no root in parent array".into()))?;
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i)))
            .collect();
        Tree::from_edges(root, &edges)
    }

    /// Set the distinguished leaf; it must be a leaf other than the root.
    pub fn with_distinguished(mut self, m: usize) -> Result<Self> {
        if m == self.root || !self.is_leaf(m) {
            return Err(Error::BadDistinguishedLeaf(m));
        }
        self.m_star = Some(m);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.adj.keys().copied()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adj.get(&v).map_or(&[], |l| l.as_slice())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (&a, l) in &self.adj {
            for &b in l {
                if a < b {
                    e.push((a, b));
                }
            }
        }
        e
    }

    /// A non-root vertex of degree 1.
    pub fn is_leaf(&self, v: usize) -> bool {
        v != self.root && self.degree(v) == 1
    }

    pub fn distances(&self) -> BTreeMap<usize, usize> {
        let mut d = BTreeMap::new();
        let mut q = VecDeque::from([self.root]);
        d.insert(self.root, 0);
        while let Some(v) = q.pop_front() {
            let dv = d[&v];
            for &w in self.neighbors(v) {
                if let std::collections::btree_map::Entry::Vacant(e) = d.entry(w) {
                    e.insert(dv + 1);
                    q.push_back(w);
                }
            }
        }
        d
    }

    pub fn parents(&self) -> BTreeMap<usize, Option<usize>> {
        let d = self.distances();
        self.adj
            .iter()
            .map(|(&v, l)| {
                (
                    v,
                    if v == self.root {
                        None
                    } else {
                        l.iter().copied().find(|w| d[w] + 1 == d[&v])
                    },
                )
            })
            .collect()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parents().get(&v).copied().flatten()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        let p = self.parent(v);
        self.neighbors(v)
            .iter()
            .copied()
            .filter(|&w| Some(w) != p)
            .collect()
    }

    /// `true` for even distance from the root.
    pub fn parity_even(&self) -> BTreeMap<usize, bool> {
        self.distances()
            .into_iter()
            .map(|(v, d)| (v, d % 2 == 0))
            .collect()
    }

    /// Whether the tree is the path `root – m*` or `root – w – m*`.
    pub fn is_final_segment(&self) -> bool {
        let Some(m) = self.m_star else { return false };
        match self.len() {
            2 => self.neighbors(self.root) == [m],
            3 => self.degree(self.root) == 1 && self.degree(m) == 1 && self.distances()[&m] == 2,
            _ => false,
        }
    }

    /// Parent array over the vertices in ascending id order, e.g. `-,0,1,1`.
    pub fn parent_line(&self) -> String {
        let idx: BTreeMap<usize, usize> =
            self.adj.keys().enumerate().map(|(i, &v)| (v, i)).collect();
        self.parents()
            .values()
            .map(|p| p.map_or("-".to_string(), |p| idx[&p].to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn fresh_id(&self) -> usize {
        self.adj.keys().next_back().map_or(0, |m| m + 1)
    }

    fn remove_vertex(&mut self, v: usize) {
        if let Some(l) = self.adj.remove(&v) {
            for w in l {
                if let Some(lw) = self.adj.get_mut(&w) {
                    lw.retain(|&x| x != v);
                }
            }
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.parent_line())
    }
}

/// Tree on `0..k` whose edges are the first-visit jumps of `path`. The distinguished leaf
/// is set to the last entry when that entry is a first visit and a leaf.
pub fn discovery_tree(path: &CombinatorialPath) -> Tree {
    let e = path.entries();
    let mut edges = Vec::new();
    let mut max = 0;
    for w in e.windows(2) {
        if w[1] > max {
            edges.push((w[0], w[1]));
            max = w[1];
        }
    }
    let t = Tree::from_edges(0, &edges).expect("first-visit jumps form a tree");
    let last = path.last();
    if path.last_is_new() && t.is_leaf(last) {
        t.with_distinguished(last).expect("checked leaf")
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    /// Remove the spare leaf `y`, a child of `x`.
    Op1 { x: usize, y: usize },
    /// Remove the pendant segment `x – y – z`, keeping `x`.
    Op2 { x: usize, y: usize, z: usize },
    /// Remove `y` and merge `x` and `z` into a fresh vertex.
    Op3 { x: usize, y: usize, z: usize },
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Reduction::Op1 { .. } => "Op1",
            Reduction::Op2 { .. } => "Op2",
            Reduction::Op3 { .. } => "Op3",
        }
    }

    /// The vertex whose parity selects the ratio branch.
    pub fn anchor(&self) -> usize {
        match *self {
            Reduction::Op1 { x, .. } | Reduction::Op2 { x, .. } | Reduction::Op3 { x, .. } => x,
        }
    }
}

fn fail(clause: &str) -> Error {
    Error::PreconditionViolated(clause.to_string())
}

/// Check an operation's conditions, returning the clause that fails.
pub(crate) fn check_reduction(t: &Tree, op: Reduction) -> Result<()> {
    let m = t.m_star.ok_or(Error::BadDistinguishedLeaf(usize::MAX))?;
    let named: Vec<usize> = match op {
        Reduction::Op1 { x, y } => vec![x, y],
        Reduction::Op2 { x, y, z } | Reduction::Op3 { x, y, z } => vec![x, y, z],
    };
    for &v in &named {
        if !t.contains(v) {
            return Err(Error::UnknownId(v));
        }
        if v == m {
            return Err(fail("named vertices must avoid the distinguished leaf"));
        }
    }
    match op {
        Reduction::Op1 { x, y } => {
            if !t.is_leaf(y) {
                return Err(fail("y is a leaf"));
            }
            if t.parent(y) != Some(x) {
                return Err(fail("y is a child of x"));
            }
            if t.children(x).len() < 2 {
                return Err(fail("y is not the only child of x"));
            }
        }
        Reduction::Op2 { x, y, z } => {
            if !t.is_leaf(z) {
                return Err(fail("z is a leaf"));
            }
            if t.parent(z) != Some(y) || t.children(y).len() != 1 {
                return Err(fail("z is the only child of y"));
            }
            if t.parent(y) != Some(x) {
                return Err(fail("y is a child of x"));
            }
            if t.children(x).len() < 2 {
                return Err(fail("y is not the only child of x"));
            }
        }
        Reduction::Op3 { x, y, z } => {
            if x == z {
                return Err(fail("x and z are distinct"));
            }
            if y == t.root {
                return Err(fail("y is not the root"));
            }
            if t.is_leaf(x) || t.is_leaf(z) {
                return Err(fail("x and z are not leaves"));
            }
            let mut nb = t.neighbors(y).to_vec();
            nb.sort_unstable();
            let mut want = vec![x, z];
            want.sort_unstable();
            if nb != want {
                return Err(fail("x and z are the only neighbours of y"));
            }
        }
    }
    Ok(())
}

/// Apply one reduction. Root and distinguished leaf are preserved; when Op3 merges the
/// root, the merged vertex becomes the root.
pub fn apply_reduction(t: &Tree, op: Reduction) -> Result<Tree> {
    check_reduction(t, op)?;
    let mut out = t.clone();
    match op {
        Reduction::Op1 { y, .. } => out.remove_vertex(y),
        Reduction::Op2 { y, z, .. } => {
            out.remove_vertex(z);
            out.remove_vertex(y);
        }
        Reduction::Op3 { x, y, z } => {
            let w = out.fresh_id();
            let mut nb: Vec<usize> = t
                .neighbors(x)
                .iter()
                .chain(t.neighbors(z))
                .copied()
                .filter(|&v| v != y)
                .collect();
            nb.sort_unstable();
            out.remove_vertex(y);
            out.remove_vertex(x);
            out.remove_vertex(z);
            for &v in &nb {
                out.adj.get_mut(&v).expect("neighbour present").push(w);
                out.adj
                    .get_mut(&v)
                    .expect("neighbour present")
                    .sort_unstable();
            }
            out.adj.insert(w, nb);
            if t.root == x || t.root == z {
                out.root = w;
            }
        }
    }
    Ok(out)
}

/// Some applicable operation, trying Op1, then Op2, then Op3.
pub(crate) fn find_reduction(t: &Tree) -> Option<Reduction> {
    let verts: Vec<usize> = t.vertices().collect();
    let parents = t.parents();
    let m = t.m_star?;
    let n_children = |v: usize| t.degree(v) - usize::from(parents[&v].is_some());
    for &y in &verts {
        if y == m || !t.is_leaf(y) {
            continue;
        }
        let x = parents[&y].expect("leaf is not the root");
        if x != m && n_children(x) >= 2 {
            return Some(Reduction::Op1 { x, y });
        }
    }
    for &z in &verts {
        if z == m || !t.is_leaf(z) {
            continue;
        }
        let y = parents[&z].expect("leaf is not the root");
        if y == m || n_children(y) != 1 {
            continue;
        }
        if let Some(x) = parents[&y] {
            if x != m && n_children(x) >= 2 {
                return Some(Reduction::Op2 { x, y, z });
            }
        }
    }
    // Collapsing a degree-1 root into a vertex of degree >= 3 gains less than the other
    // collapses; such a site is only used when nothing else applies.
    let weak = |x: usize, z: usize| {
        let lone_root = |v: usize| v == t.root && t.degree(v) == 1;
        (lone_root(x) && t.degree(z) >= 3) || (lone_root(z) && t.degree(x) >= 3)
    };
    let mut fallback = None;
    for &y in &verts {
        if y == m || y == t.root || t.degree(y) != 2 {
            continue;
        }
        let (x, z) = (t.neighbors(y)[0], t.neighbors(y)[1]);
        let op = Reduction::Op3 { x, y, z };
        if check_reduction(t, op).is_ok() {
            if !weak(x, z) {
                return Some(op);
            }
            fallback.get_or_insert(op);
        }
    }
    fallback
}

/// Greedily reduce to the segment `o – m*` or `o – w – m*`.
pub fn reduce_to_segment(t: &Tree) -> Result<(Tree, Vec<Reduction>)> {
    let m = t.m_star.ok_or(Error::BadDistinguishedLeaf(usize::MAX))?;
    if m == t.root || !t.is_leaf(m) {
        return Err(Error::BadDistinguishedLeaf(m));
    }
    let mut cur = t.clone();
    let mut log = Vec::new();
    while !cur.is_final_segment() {
        let op = find_reduction(&cur).ok_or(Error::StuckTree)?;
        cur = apply_reduction(&cur, op)?;
        log.push(op);
    }
    Ok((cur, log))
}
