//! The bipartite random connection hypergraph on a finite window.
//!
//! Type-1 and type-2 vertices are independent unit-intensity Poisson processes on
//! `[−L, L] × (0, 1]`. A type-1 vertex `(x, u)` and a type-2 vertex `(y, v)` are
//! adjacent iff `|x − y| ≤ u^{−γ1} v^{−γ2}`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{validate_and_derive, DerivedScales, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    /// 1 or 2.
    pub vtype: u8,
    pub position: f64,
    pub mark: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub half_length: f64,
}

impl Window {
    pub fn new(half_length: f64) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::WindowTooSmall(half_length));
        }
        Ok(Window { half_length })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RootSpec {
    None,
    UniformMark { vtype: u8 },
    FixedMark { h: f64, vtype: u8 },
}

impl RootSpec {
    fn check(&self) -> Result<()> {
        match *self {
            RootSpec::None => Ok(()),
            RootSpec::UniformMark { vtype } => check_type(vtype),
            RootSpec::FixedMark { h, vtype } => {
                check_type(vtype)?;
                if !(h > 0.0 && h <= 1.0) {
                    return Err(Error::BadRootSpec(format!("mark {h} outside (0,1]")));
                }
                Ok(())
            }
        }
    }
}

fn check_type(t: u8) -> Result<()> {
    if t == 1 || t == 2 {
        Ok(())
    } else {
        Err(Error::BadRootSpec(format!("vertex type {t}")))
    }
}

/// Uniform on (0, 1].
pub fn unit_mark<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Reach of the pair; `+∞` on overflow, which compares correctly.
#[inline]
pub fn reach(gamma1: f64, gamma2: f64, u: f64, v: f64) -> f64 {
    u.powf(-gamma1) * v.powf(-gamma2)
}

/// Vertices of one type whose marks lie in `(2^{−j−1}, 2^{−j}]`, sorted by position.
#[derive(Debug, Clone)]
struct Layer {
    /// Lower end of the mark range; the largest reach in the layer uses it.
    mark_lo: f64,
    positions: Vec<f64>,
    ids: Vec<usize>,
}

#[derive(Debug)]
pub struct Hypergraph {
    pub gamma1: f64,
    pub gamma2: f64,
    pub window: Window,
    pub seed: u64,
    vertices: Vec<Vertex>,
    by_type: [Vec<usize>; 2],
    layers: [Vec<Layer>; 2],
    root: Option<usize>,
    nbr_cache: Vec<OnceLock<Vec<usize>>>,
}

fn layer_of(mark: f64) -> usize {
    // mark in (2^{-j-1}, 2^{-j}]  <=>  j = ceil(-log2(mark)) - 1, with j = 0 for mark = 1.
    let j = (-mark.log2()).ceil() as i64 - 1;
    let mut j = j.max(0) as usize;
    // Guard against rounding in log2 at exact powers of two.
    while mark <= 0.5f64.powi(j as i32 + 1) {
        j += 1;
    }
    while j > 0 && mark > 0.5f64.powi(j as i32) {
        j -= 1;
    }
    j
}

impl Hypergraph {
    /// Build from explicit vertices; ids are assigned in input order.
    pub fn from_vertices(
        gamma1: f64,
        gamma2: f64,
        window: Window,
        verts: &[(u8, f64, f64)],
        root: Option<usize>,
    ) -> Result<Self> {
        for &g in &[gamma1, gamma2] {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::GammaOutOfRange(g));
            }
        }
        let mut vertices = Vec::with_capacity(verts.len());
        for (id, &(t, x, m)) in verts.iter().enumerate() {
            check_type(t)?;
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::BadRootSpec(format!(
                    "vertex {id} has mark {m} outside (0,1]"
                )));
            }
            vertices.push(Vertex {
                id,
                vtype: t,
                position: x,
                mark: m,
            });
        }
        if let Some(r) = root {
            if r >= vertices.len() {
                return Err(Error::UnknownId(r));
            }
        }
        Ok(Self::index(gamma1, gamma2, window, 0, vertices, root))
    }

    fn index(
        gamma1: f64,
        gamma2: f64,
        window: Window,
        seed: u64,
        vertices: Vec<Vertex>,
        root: Option<usize>,
    ) -> Self {
        let mut by_type = [Vec::new(), Vec::new()];
        let mut buckets: [BTreeMap<usize, Vec<(f64, usize)>>; 2] =
            [BTreeMap::new(), BTreeMap::new()];
        for v in &vertices {
            let t = (v.vtype - 1) as usize;
            by_type[t].push(v.id);
            buckets[t]
                .entry(layer_of(v.mark))
                .or_default()
                .push((v.position, v.id));
        }
        for t in 0..2 {
            by_type[t].sort_by(|&a, &b| vertices[a].position.total_cmp(&vertices[b].position));
        }
        let layers = buckets.map(|b| {
            b.into_iter()
                .map(|(j, mut pts)| {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Layer {
                        mark_lo: 0.5f64.powi(j as i32 + 1),
                        positions: pts.iter().map(|p| p.0).collect(),
                        ids: pts.iter().map(|p| p.1).collect(),
                    }
                })
                .collect()
        });
        let nbr_cache = (0..vertices.len()).map(|_| OnceLock::new()).collect();
        Hypergraph {
            gamma1,
            gamma2,
            window,
            seed,
            vertices,
            by_type,
            layers,
            root,
            nbr_cache,
        }
    }

    /// Sample on `[−L, L]`. Only the geometry (`γ1`, `γ2`) of `params` is used.
    pub fn sample(params: &ModelParams, window: Window, seed: u64, root: RootSpec) -> Result<Self> {
        Window::new(window.half_length)?;
        root.check()?;
        for &g in &[params.gamma1, params.gamma2] {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::GammaOutOfRange(g));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::sample_with(
            params.gamma1,
            params.gamma2,
            window,
            seed,
            root,
            &mut rng,
        ))
    }

    /// Sample with a caller-provided stream (used for per-trial graphs).
    pub fn sample_with<R: Rng + ?Sized>(
        gamma1: f64,
        gamma2: f64,
        window: Window,
        seed: u64,
        root: RootSpec,
        rng: &mut R,
    ) -> Self {
        let l = window.half_length;
        let pois = Poisson::new(2.0 * l).expect("positive mean");
        let mut raw: Vec<(u8, f64, f64)> = Vec::new();
        let root_pt = match root {
            RootSpec::None => None,
            RootSpec::UniformMark { vtype } => Some((vtype, 0.0, unit_mark(rng))),
            RootSpec::FixedMark { h, vtype } => Some((vtype, 0.0, h)),
        };
        if let Some(r) = root_pt {
            raw.push(r);
        }
        for t in [1u8, 2] {
            let n = pois.sample(rng) as usize;
            let start = raw.len();
            for _ in 0..n {
                let x = rng.gen_range(-l..=l);
                let m = unit_mark(rng);
                raw.push((t, x, m));
            }
            raw[start..].sort_by(|a, b| a.1.total_cmp(&b.1));
        }
        let vertices = raw
            .into_iter()
            .enumerate()
            .map(|(id, (t, x, m))| Vertex {
                id,
                vtype: t,
                position: x,
                mark: m,
            })
            .collect();
        Self::index(gamma1, gamma2, window, seed, vertices, root_pt.map(|_| 0))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> Result<&Vertex> {
        self.vertices.get(id).ok_or(Error::UnknownId(id))
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// Position-sorted ids of one type.
    pub fn ids_of_type(&self, vtype: u8) -> &[usize] {
        &self.by_type[(vtype - 1) as usize]
    }

    pub fn count_type(&self, vtype: u8, include_root: bool) -> usize {
        let n = self.by_type[(vtype - 1) as usize].len();
        match self.root {
            Some(r) if !include_root && self.vertices[r].vtype == vtype => n - 1,
            _ => n,
        }
    }

    pub fn edge_exists(&self, a: &Vertex, b: &Vertex) -> Result<bool> {
        edge_exists(self.gamma1, self.gamma2, a, b)
    }

    /// Sorted neighbour ids; computed on first request and cached.
    pub fn neighbors(&self, id: usize) -> Result<&[usize]> {
        let v = *self.vertex(id)?;
        Ok(self.nbr_cache[id].get_or_init(|| self.compute_neighbors(&v)))
    }

    pub fn degree(&self, id: usize) -> Result<usize> {
        Ok(self.neighbors(id)?.len())
    }

    fn compute_neighbors(&self, v: &Vertex) -> Vec<usize> {
        let other = if v.vtype == 1 { 1 } else { 0 };
        let mut out = Vec::new();
        for layer in &self.layers[other] {
            let r = if v.vtype == 1 {
                reach(self.gamma1, self.gamma2, v.mark, layer.mark_lo)
            } else {
                reach(self.gamma1, self.gamma2, layer.mark_lo, v.mark)
            };
            let (lo, hi) = if r.is_finite() {
                (
                    layer.positions.partition_point(|&p| p < v.position - r),
                    layer.positions.partition_point(|&p| p <= v.position + r),
                )
            } else {
                (0, layer.positions.len())
            };
            for &w in &layer.ids[lo..hi] {
                let u = &self.vertices[w];
                let (a, b) = if v.vtype == 1 { (v, u) } else { (u, v) };
                if (a.position - b.position).abs()
                    <= reach(self.gamma1, self.gamma2, a.mark, b.mark)
                {
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Connected component sizes, largest first.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s);
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in self.neighbors(v).expect("valid id") {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Blue/red labels from explicit per-type thresholds: blue iff mark > threshold.
    pub fn colour_with(&self, u1: f64, u2: f64) -> Vec<Colour> {
        self.vertices
            .iter()
            .map(|v| {
                let t = if v.vtype == 1 { u1 } else { u2 };
                if v.mark > t {
                    Colour::Blue
                } else {
                    Colour::Red
                }
            })
            .collect()
    }

    pub fn colour(&self, scales: &DerivedScales) -> Vec<Colour> {
        self.colour_with(scales.u_blue, scales.v_blue)
    }

    /// Drop vertices failing `keep`; the root is always kept and ids are reassigned.
    pub fn filtered(&self, mut keep: impl FnMut(&Vertex) -> bool) -> Hypergraph {
        let mut verts = Vec::new();
        let mut root = None;
        for v in &self.vertices {
            if Some(v.id) == self.root {
                root = Some(verts.len());
            } else if !keep(v) {
                continue;
            }
            verts.push(Vertex {
                id: verts.len(),
                ..*v
            });
        }
        Self::index(
            self.gamma1,
            self.gamma2,
            self.window,
            self.seed,
            verts,
            root,
        )
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "bipcp-graph v1 {} {} {} {}",
            self.gamma1, self.gamma2, self.window.half_length, self.seed
        )?;
        for v in &self.vertices {
            writeln!(w, "{} {} {} {}", v.id, v.vtype, v.position, v.mark)?;
        }
        Ok(())
    }

    /// Inverse of [`Hypergraph::write_dump`]. A vertex at position exactly 0 is the root.
    pub fn read_dump<R: BufRead>(r: R) -> Result<Hypergraph> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))??;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "bipcp-graph" || h[1] != "v1" {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{s}: {e}")))
        };
        let (g1, g2, l) = (num(h[2])?, num(h[3])?, num(h[4])?);
        let seed: u64 = h[5]
            .parse()
            .map_err(|e| Error::Parse(format!("seed: {e}")))?;
        let mut verts = Vec::new();
        let mut root = None;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad vertex line: {line}")));
            }
            let id: usize = f[0].parse().map_err(|e| Error::Parse(format!("id: {e}")))?;
            if id != verts.len() {
                return Err(Error::Parse(format!("ids must be consecutive, got {id}")));
            }
            let t: u8 = f[1]
                .parse()
                .map_err(|e| Error::Parse(format!("type: {e}")))?;
            let (x, m) = (num(f[2])?, num(f[3])?);
            if x == 0.0 && root.is_none() {
                root = Some(id);
            }
            verts.push((t, x, m));
        }
        let mut g = Hypergraph::from_vertices(g1, g2, Window::new(l)?, &verts, root)?;
        g.seed = seed;
        Ok(g)
    }
}

/// Exact edge rule; symmetric, bipartite only.
pub fn edge_exists(gamma1: f64, gamma2: f64, a: &Vertex, b: &Vertex) -> Result<bool> {
    let (v1, v2) = match (a.vtype, b.vtype) {
        (1, 2) => (a, b),
        (2, 1) => (b, a),
        _ => return Err(Error::SameTypePair),
    };
    Ok((v1.position - v2.position).abs() <= reach(gamma1, gamma2, v1.mark, v2.mark))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Colour {
    Blue,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Restriction {
    /// Type-1 root at `(0, h)`, `h ∈ [u0, 2u0]`.
    G1Plus(f64),
    /// Type-2 root at `(0, h)`, `h ∈ [v0, 2v0]`.
    G2Plus(f64),
}

#[derive(Debug)]
pub struct RestrictedGraph {
    pub graph: Hypergraph,
    /// The band used the clamped `u0`/`v0`.
    pub clamped: bool,
    pub band: (f64, f64),
}

/// Sample, then empty the left half-line and the same-type mark band around the root.
pub fn sample_restricted(
    params: &ModelParams,
    window: Window,
    seed: u64,
    variant: Restriction,
) -> Result<RestrictedGraph> {
    let s = validate_and_derive(*params, None)?;
    let (h, vtype, base, clamped) = match variant {
        Restriction::G1Plus(h) => (h, 1u8, s.u0, s.u0_clamped),
        Restriction::G2Plus(h) => (h, 2u8, s.v0, s.v0_clamped),
    };
    let (lo, hi) = (base, 2.0 * base);
    if !(h >= lo && h <= hi && h <= 1.0) {
        return Err(Error::BadBand { h, lo, hi });
    }
    let full = Hypergraph::sample(params, window, seed, RootSpec::FixedMark { h, vtype })?;
    let graph =
        full.filtered(|v| v.position >= 0.0 && !(v.vtype == vtype && v.mark >= lo && v.mark <= hi));
    Ok(RestrictedGraph {
        graph,
        clamped,
        band: (lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeTail {
    /// `(m, P(D > m))` at the evaluation points.
    pub table: Vec<(f64, f64)>,
    pub slope: f64,
    pub stderr: f64,
    pub pooled: usize,
}

/// Empirical tail `P(D > m)` at `points` log-spaced values in `[m_lo, m_hi]` with an OLS
/// fit of `log P` on `log m`.
pub fn degree_tail_from_degrees(
    degrees: &[usize],
    m_lo: f64,
    m_hi: f64,
    points: usize,
) -> Result<DegreeTail> {
    if degrees.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "{} pooled vertices, need 1000",
            degrees.len()
        )));
    }
    if !(m_lo > 0.0 && m_hi > m_lo) || points < 3 {
        return Err(Error::BadRange(format!(
            "m range [{m_lo}, {m_hi}] with {points} points"
        )));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut table = Vec::new();
    for i in 0..points {
        let m = m_lo * (m_hi / m_lo).powf(i as f64 / (points - 1) as f64);
        let above = sorted.len() - sorted.partition_point(|&d| (d as f64) <= m);
        table.push((m, above as f64 / n));
    }
    let usable: Vec<(f64, f64)> = table
        .iter()
        .filter(|(_, p)| *p > 0.0 && *p < 1.0)
        .map(|&(m, p)| (m.ln(), p.ln()))
        .collect();
    let distinct = {
        let mut ps: Vec<f64> = usable.iter().map(|u| u.1).collect();
        ps.dedup();
        ps.len()
    };
    if usable.len() < 3 || distinct < 2 {
        return Err(Error::InsufficientData("degenerate tail".into()));
    }
    let (slope, _, stderr) = ols(&usable);
    Ok(DegreeTail {
        table,
        slope,
        stderr,
        pooled: degrees.len(),
    })
}

/// Degrees of type-`vtype` non-root vertices with `|x| ≤ inner_frac·L`, pooled over graphs.
pub fn pooled_degrees(graphs: &[Hypergraph], vtype: u8, inner_frac: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for g in graphs {
        let lim = inner_frac * g.window.half_length;
        for &id in g.ids_of_type(vtype) {
            let v = &g.vertices[id];
            if Some(id) != g.root && v.position.abs() <= lim {
                out.push(g.degree(id).expect("valid id"));
            }
        }
    }
    out
}

pub fn degree_tail_stats(
    graphs: &[Hypergraph],
    vtype: u8,
    m_lo: f64,
    m_hi: f64,
    points: usize,
) -> Result<DegreeTail> {
    degree_tail_from_degrees(&pooled_degrees(graphs, vtype, 0.5), m_lo, m_hi, points)
}

/// Ordinary least squares; returns `(slope, intercept, slope stderr)`.
pub fn ols(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if pts.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}
