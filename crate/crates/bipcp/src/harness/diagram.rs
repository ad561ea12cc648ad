use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{
    a1_star, a2_star, classify, threshold_bar_g2_over_d2, threshold_d1_over_bar_g1,
    write_phase_csv, AxisRange, DominantStrategy, PhaseRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramFormat {
    Csv,
    Svg,
}

impl FromStr for DiagramFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DiagramFormat::Csv),
            "svg" => Ok(DiagramFormat::Svg),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// A two-dimensional slice of parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiagramSlice {
    /// `(γ1, γ2)` plane at fixed `a`.
    Gammas {
        gamma1: AxisRange,
        gamma2: AxisRange,
        a: f64,
    },
    /// `(γ, a)` plane with `γ1 = γ2 = γ`.
    OneType { gamma: AxisRange, a: AxisRange },
}

impl DiagramSlice {
    fn axes(&self) -> (AxisRange, AxisRange) {
        match *self {
            DiagramSlice::Gammas { gamma1, gamma2, .. } => (gamma1, gamma2),
            DiagramSlice::OneType { gamma, a } => (gamma, a),
        }
    }

    fn point(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match *self {
            DiagramSlice::Gammas { a, .. } => (x, y, a),
            DiagramSlice::OneType { .. } => (x, x, y),
        }
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            DiagramSlice::Gammas { .. } => ("γ1", "γ2"),
            DiagramSlice::OneType { .. } => ("γ", "a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCell {
    pub ix: usize,
    pub iy: usize,
    pub row: PhaseRow,
}

/// Classified grid points of the slice, x-major.
pub fn slice_rows(slice: &DiagramSlice) -> Result<Vec<SliceCell>> {
    let (xa, ya) = slice.axes();
    if xa.n == 0 || ya.n == 0 {
        return Err(Error::EmptyGrid);
    }
    let (xs, ys) = (xa.values(), ya.values());
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            let (g1, g2, a) = slice.point(x, y);
            for g in [g1, g2] {
                if !(g > 0.0 && g < 1.0) {
                    return Err(Error::GammaOutOfRange(g));
                }
            }
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::NonpositiveA(a));
            }
            let class = if g1 + g2 > 1.0 {
                Some(classify(g1, g2, a)?)
            } else {
                None
            };
            out.push(SliceCell {
                ix,
                iy,
                row: PhaseRow {
                    gamma1: g1,
                    gamma2: g2,
                    a,
                    class,
                },
            });
        }
    }
    Ok(out)
}

/// Number of 4-connected components per dominant strategy among supercritical cells.
pub fn region_components(cells: &[SliceCell]) -> BTreeMap<DominantStrategy, usize> {
    let label: BTreeMap<(usize, usize), DominantStrategy> = cells
        .iter()
        .filter_map(|c| {
            c.row
                .class
                .as_ref()
                .map(|k| ((c.ix, c.iy), k.dominant_strategy))
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut count = BTreeMap::new();
    for (&start, &s) in &label {
        if !seen.insert(start) {
            continue;
        }
        *count.entry(s).or_insert(0) += 1;
        let mut q = VecDeque::from([start]);
        while let Some((x, y)) = q.pop_front() {
            let nbrs = [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ];
            for n in nbrs {
                if label.get(&n) == Some(&s) && seen.insert(n) {
                    q.push_back(n);
                }
            }
        }
    }
    count
}

fn colour(s: DominantStrategy) -> &'static str {
    match s {
        DominantStrategy::RootIsS => "#d95f02",
        DominantStrategy::OneStepToS => "#1b9e77",
        DominantStrategy::OneStepToB => "#7570b3",
        DominantStrategy::OneStepToD => "#e7298a",
    }
}

type Locus = (&'static str, &'static str, fn(f64, f64, f64) -> f64);

fn finite_or_nan(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NAN
    }
}

/// Boundary curves as zero sets of functions of `(γ1, γ2, a)`.
const LOCI: [Locus; 5] = [
    ("kappa", "#000000", |g1, g2, _| 1.0 / g1 + 1.0 / g2 - 3.0),
    ("a1*", "#444444", |g1, g2, a| {
        if g2 + g1 * g2 - 1.0 > 0.0 {
            a - a1_star(g1, g2)
        } else {
            f64::NAN
        }
    }),
    ("a2*", "#666666", |g1, g2, a| {
        if g1 + g1 * g2 - 1.0 > 0.0 {
            a - a2_star(g1, g2)
        } else {
            f64::NAN
        }
    }),
    ("bar-g2/D2", "#1f78b4", |_, g2, a| {
        finite_or_nan(a - threshold_bar_g2_over_d2(g2))
    }),
    ("D1/bar-g1", "#e31a1c", |g1, _, a| {
        finite_or_nan(a - threshold_d1_over_bar_g1(g1))
    }),
];

/// Marching squares on the grid in index coordinates, restricted to supercritical squares.
fn locus_segments(slice: &DiagramSlice, f: fn(f64, f64, f64) -> f64) -> Vec<[(f64, f64); 2]> {
    let (xa, ya) = slice.axes();
    let (xs, ys) = (xa.values(), ya.values());
    let val = |i: usize, j: usize| {
        let (g1, g2, a) = slice.point(xs[i], ys[j]);
        if g1 + g2 > 1.0 {
            f(g1, g2, a)
        } else {
            f64::NAN
        }
    };
    let mut segs = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| val(a, b)).collect();
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let mut pts = Vec::new();
            for e in 0..4 {
                let (p, q) = (e, (e + 1) % 4);
                if (v[p] < 0.0) != (v[q] < 0.0) {
                    let t = v[p] / (v[p] - v[q]);
                    let (x0, y0) = (c[p].0 as f64, c[p].1 as f64);
                    let (x1, y1) = (c[q].0 as f64, c[q].1 as f64);
                    pts.push((x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
                }
            }
            for pair in pts.chunks_exact(2) {
                segs.push([pair[0], pair[1]]);
            }
        }
    }
    segs
}

fn write_svg(slice: &DiagramSlice, cells: &[SliceCell], out: &mut String) {
    let (xa, ya) = slice.axes();
    let (nx, ny) = (xa.n, ya.n);
    let (plot, m) = (600.0, 60.0);
    let (cw, ch) = (plot / nx as f64, plot / ny as f64);
    let px = |i: f64| m + (i + 0.5) * cw;
    let py = |j: f64| m + plot - (j + 0.5) * ch;
    let (w, h) = (m + plot + 260.0, 2.0 * m + plot);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<g id="cells">"#);
    for c in cells {
        let Some(k) = &c.row.class else { continue };
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            px(c.ix as f64) - cw / 2.0,
            py(c.iy as f64) - ch / 2.0,
            cw,
            ch,
            colour(k.dominant_strategy)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g id="boundaries" fill="none" stroke-width="1.5">"#);
    for (name, stroke, f) in LOCI {
        let segs = locus_segments(slice, f);
        if segs.is_empty() {
            continue;
        }
        let mut d = String::new();
        for [(x0, y0), (x1, y1)] in segs {
            let _ = write!(
                d,
                "M{:.2} {:.2}L{:.2} {:.2}",
                px(x0),
                py(y0),
                px(x1),
                py(y1)
            );
        }
        let _ = writeln!(
            out,
            r#"<path class="locus" data-locus="{name}" stroke="{stroke}" d="{d}"/>"#
        );
    }
    let _ = writeln!(out, "</g>");
    let (xl, yl) = slice.labels();
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{xl}: {} to {}</text>"#,
        m + plot / 2.0,
        h - 20.0,
        xa.lo,
        xa.hi
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{yl}: {} to {}</text>"#,
        m + plot / 2.0,
        m + plot / 2.0,
        ya.lo,
        ya.hi
    );
    let _ = writeln!(out, r#"<g id="legend">"#);
    let lx = m + plot + 20.0;
    for (i, s) in DominantStrategy::ALL.iter().enumerate() {
        let y = m + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<path d="M{lx} {y}h12v12h-12z" fill="{}"/>"#,
            colour(*s)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            y + 11.0,
            s.as_str()
        );
    }
    for (i, (name, stroke, _)) in LOCI.iter().enumerate() {
        let y = m + 100.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<path d="M{lx} {}h12" stroke="{stroke}" stroke-width="1.5"/>"#,
            y + 6.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{name}</text>"#,
            lx + 18.0,
            y + 11.0
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
}

/// Write the slice as phase-schema CSV or as an SVG raster with boundary loci.
pub fn emit_phase_diagram<W: Write>(
    slice: &DiagramSlice,
    format: DiagramFormat,
    mut w: W,
) -> Result<()> {
    let cells = slice_rows(slice)?;
    match format {
        DiagramFormat::Csv => {
            let rows: Vec<PhaseRow> = cells.into_iter().map(|c| c.row).collect();
            write_phase_csv(&rows, w)
        }
        DiagramFormat::Svg => {
            let mut s = String::new();
            write_svg(slice, &cells, &mut s);
            w.write_all(s.as_bytes())?;
            Ok(())
        }
    }
}
