//! Five-point Laplace solver on rectangles slit along the real axis, the
//! harmonic measure `β_x` of the outer boundary of a square window, and the
//! scan of `∫ β_x(x) dx / |x|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Network;
use crate::json::fmt_f64;
use crate::realsets::{GapSystem, IntervalSet};

/// Smallest node count per side.
pub const MIN_NODES: usize = 33;
const TOL: f64 = 1e-10;
/// Partial edges shorter than this fraction of a cell are lengthened to it.
const MIN_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    /// `R(x, r) = {|Re z - x| < r/2, |Im z| < r/2}`.
    pub fn square(x: f64, r: f64) -> Self {
        Rect { x0: x - r / 2.0, x1: x + r / 2.0, y0: -r / 2.0, y1: r / 2.0 }
    }
}

/// Discrete harmonic function on a node grid; `values[j * nx + i]` sits at
/// `(x0 + i hx, y0 + j hy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub values: Vec<f64>,
    pub dirichlet: Vec<bool>,
    pub iterations: usize,
    /// Largest correction applied when projecting onto the range of the
    /// Dirichlet data; of the order of the solver tolerance.
    pub projection: f64,
}

impl GridField {
    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (self.rect.x0 + i as f64 * self.hx, self.rect.y0 + j as f64 * self.hy)
    }

    /// Bilinear interpolation inside the rectangle.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.rect.x0) / self.hx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y - self.rect.y0) / self.hy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (s, t) = (fx - i as f64, fy - j as f64);
        (1.0 - s) * (1.0 - t) * self.node(i, j)
            + s * (1.0 - t) * self.node(i + 1, j)
            + (1.0 - s) * t * self.node(i, j + 1)
            + s * t * self.node(i + 1, j + 1)
    }

    /// Largest deviation of a free node from the weighted mean of its four
    /// neighbours, ignoring nodes next to partial edges.
    pub fn mean_value_defect(&self) -> f64 {
        let (wx, wy) = (1.0 / (self.hx * self.hx), 1.0 / (self.hy * self.hy));
        let mut worst = 0.0f64;
        for j in 1..self.ny - 1 {
            for i in 1..self.nx - 1 {
                let k = j * self.nx + i;
                if self.dirichlet[k] || [k - 1, k + 1, k - self.nx, k + self.nx].iter().any(|&m| self.dirichlet[m]) {
                    continue;
                }
                let mean = (wx * (self.values[k - 1] + self.values[k + 1])
                    + wy * (self.values[k - self.nx] + self.values[k + self.nx]))
                    / (2.0 * (wx + wy));
                worst = worst.max((self.values[k] - mean).abs());
            }
        }
        worst
    }
}

fn first_in(set: &IntervalSet, lo: f64, hi: f64) -> Option<f64> {
    set.intervals().iter().find(|iv| iv.1 >= lo).map(|iv| iv.0.max(lo)).filter(|&p| p <= hi)
}

fn last_in(set: &IntervalSet, lo: f64, hi: f64) -> Option<f64> {
    set.intervals().iter().rev().find(|iv| iv.0 <= hi).map(|iv| iv.1.min(hi)).filter(|&p| p >= lo)
}

/// Harmonic function on `rect` minus `slits ⊂ ℝ`, equal to `outer` on the
/// boundary of the rectangle and to `slit_value` on the slits.
///
/// The slit row must be a grid row. Slit endpoints between nodes are resolved
/// by shortened edges to the slit, so slits thinner than a cell are kept.
pub fn solve_laplace<F>(rect: Rect, slits: Option<&IntervalSet>, outer: F, slit_value: f64, n: usize) -> Result<GridField>
where
    F: Fn(f64, f64) -> f64,
{
    if n < MIN_NODES || n % 2 == 0 {
        return Err(Error::Grid(format!("node count {n} must be odd and at least {MIN_NODES}")));
    }
    if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
        return Err(Error::Grid("empty rectangle".into()));
    }
    let (nx, ny) = (n, n);
    let hx = (rect.x1 - rect.x0) / (nx - 1) as f64;
    let hy = (rect.y1 - rect.y0) / (ny - 1) as f64;
    let slits = slits.filter(|s| !s.is_empty());
    let slit_row = match slits {
        None => None,
        Some(_) => {
            let fj = -rect.y0 / hy;
            let j = fj.round();
            if !(j >= 1.0 && j <= (ny - 2) as f64) || (fj - j).abs() > 1e-9 {
                return Err(Error::Grid("the real axis is not an interior grid row".into()));
            }
            Some(j as usize)
        }
    };
    let virt = nx * ny;
    let mut fixed = vec![None; virt + 1];
    fixed[virt] = Some(slit_value);
    let at = |i: usize, j: usize| (rect.x0 + i as f64 * hx, rect.y0 + j as f64 * hy);
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                let (x, y) = at(i, j);
                fixed[j * nx + i] = Some(outer(x, y));
            }
        }
    }
    if let (Some(set), Some(j)) = (slits, slit_row) {
        for i in 1..nx - 1 {
            if set.contains(at(i, j).0) {
                fixed[j * nx + i] = Some(slit_value);
            }
        }
    }
    let (gx, gy) = (hy / hx, hx / hy);
    let mut net = Network::new(virt + 1);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if j + 1 < ny {
                net.add_edge(k, k + nx, gy);
            }
            if i + 1 >= nx {
                continue;
            }
            match (slits, slit_row) {
                (Some(set), Some(row)) if row == j && (fixed[k].is_none() || fixed[k + 1].is_none()) => {
                    let (xa, xb) = (at(i, j).0, at(i + 1, j).0);
                    let (l, r) = (first_in(set, xa, xb), last_in(set, xa, xb));
                    match (l, r) {
                        (Some(l), Some(r)) => {
                            if fixed[k].is_none() {
                                net.add_edge(k, virt, gx * hx / (l - xa).max(MIN_FRACTION * hx));
                            }
                            if fixed[k + 1].is_none() {
                                net.add_edge(k + 1, virt, gx * hx / (xb - r).max(MIN_FRACTION * hx));
                            }
                        }
                        _ => net.add_edge(k, k + 1, gx),
                    }
                }
                _ => net.add_edge(k, k + 1, gx),
            }
        }
    }
    let used = if slit_row.is_some() { virt + 1 } else { virt };
    let data: Vec<f64> = fixed[..used].iter().flatten().copied().collect();
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let guess = vec![0.5 * (lo + hi); virt + 1];
    let sol = net.solve(&fixed, Some(&guess), TOL, 20 * (nx + ny) + 2000)?;
    let mut projection = 0.0f64;
    let mut values = sol.values;
    values.truncate(virt);
    for v in &mut values {
        let c = v.clamp(lo, hi);
        projection = projection.max((c - *v).abs());
        *v = c;
    }
    let dirichlet = fixed[..virt].iter().map(Option::is_some).collect();
    Ok(GridField { rect, nx, ny, hx, hy, values, dirichlet, iterations: sol.iterations, projection })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaValue {
    pub value: f64,
    /// `|β(n) - β(2n - 1)|`.
    pub error: f64,
    /// `x ∈ E`, so the centre is a Dirichlet node and the value is 0.
    pub on_set: bool,
}

fn check_alpha(x: f64, alpha: f64) -> Result<()> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain { family: "beta", reason: format!("x = {x} must be finite and nonzero") });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain { family: "beta", reason: format!("alpha = {alpha} outside (0, 1)") });
    }
    Ok(())
}

/// `β_x(x)` on an `n × n` grid.
pub fn beta_at(e: &GapSystem, x: f64, alpha: f64, n: usize) -> Result<f64> {
    check_alpha(x, alpha)?;
    if e.contains(x) {
        return Ok(0.0);
    }
    let rect = Rect::square(x, alpha * x.abs());
    let slits = e.restrict(rect.x0, rect.x1);
    let field = solve_laplace(rect, slits.as_ref(), |_, _| 1.0, 0.0, n)?;
    Ok(field.node(n / 2, n / 2))
}

/// `β_x(x)`: harmonic measure of `∂R(x, α|x|)` at `x` in `R(x, α|x|) \ E`,
/// with the difference to the `2n - 1` grid as error estimate.
pub fn beta_x(e: &GapSystem, x: f64, alpha: f64, n: usize) -> Result<BetaValue> {
    check_alpha(x, alpha)?;
    if e.contains(x) {
        return Ok(BetaValue { value: 0.0, error: 0.0, on_set: true });
    }
    let coarse = beta_at(e, x, alpha, n)?;
    let fine = beta_at(e, x, alpha, 2 * n - 1)?;
    Ok(BetaValue { value: fine, error: (fine - coarse).abs(), on_set: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenedicksSample {
    pub x: f64,
    pub beta: f64,
    /// Integral of `β_x(x)/|x|` over `1 ≤ |x| ≤ |this x|`.
    pub partial_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenedicksScan {
    pub alpha: f64,
    pub grid: usize,
    pub samples: Vec<BenedicksSample>,
    /// `(R, I(R))` at the requested radii.
    pub ladder: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub alpha: f64,
    pub grid: usize,
    /// Largest ratio of consecutive sample abscissae inside a gap.
    pub ratio: f64,
    /// Minimal number of interior samples per gap.
    pub min_samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { alpha: 0.5, grid: 129, ratio: 1.25, min_samples: 5 }
    }
}

/// Sample points `|x|` in `[lo, hi]`, geometric with at most `ratio` between
/// neighbours and at least `min` interior points, endpoints included.
fn log_points(lo: f64, hi: f64, ratio: f64, min: usize) -> Vec<f64> {
    let steps = ((hi / lo).ln() / ratio.ln()).ceil().max((min + 1) as f64) as usize;
    let q = (hi / lo).ln() / steps as f64;
    (0..=steps).map(|k| if k == steps { hi } else { lo * (q * k as f64).exp() }).collect()
}

/// `I(R) = ∫_{1 ≤ |x| ≤ R} β_x(x) dx/|x|` for each `R` in `radii`.
///
/// `β_x` vanishes on `E`, so only gaps are sampled: each gap within
/// `1 ≤ |x| ≤ R_max` gets a geometric grid (ratio `opts.ratio`), the
/// requested radii are added as nodes, and the trapezoid rule in `log |x|`
/// is accumulated in order of `|x|`.
pub fn benedicks_scan(e: &GapSystem, radii: &[f64], opts: &ScanOptions) -> Result<BenedicksScan> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] >= 1.0) {
        return Err(Error::Domain { family: "benedicks", reason: "radii must be increasing and at least 1".into() });
    }
    if !(opts.ratio > 1.0) {
        return Err(Error::Domain { family: "benedicks", reason: "sampling ratio must exceed 1".into() });
    }
    check_alpha(1.0, opts.alpha)?;
    let r_max = *radii.last().unwrap();
    // Pieces (sign, lo, hi) of gaps in |x| ∈ [1, R_max].
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    for &(c, d) in e.gaps() {
        for sign in [1.0, -1.0] {
            let (a, b) = if sign > 0.0 { (c, d) } else { (-d, -c) };
            let (lo, hi) = (a.max(1.0), b.min(r_max));
            if lo < hi {
                pieces.push((sign, lo, hi));
            }
        }
    }
    let mut segments: Vec<(f64, Vec<f64>)> = pieces
        .iter()
        .map(|&(sign, lo, hi)| {
            let mut pts = log_points(lo, hi, opts.ratio, opts.min_samples);
            pts.extend(radii.iter().copied().filter(|&r| r > lo && r < hi));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            (sign, pts)
        })
        .collect();
    segments.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]).then(b.0.total_cmp(&a.0)));
    let jobs: Vec<f64> = segments.iter().flat_map(|(s, pts)| pts.iter().map(move |p| s * p)).collect();
    let betas: Vec<f64> =
        jobs.par_iter().map(|&x| beta_at(e, x, opts.alpha, opts.grid)).collect::<Result<Vec<_>>>()?;
    // Trapezoid pieces (|x_left|, |x_right|, contribution) per segment.
    let mut pieces_out: Vec<(f64, f64, f64)> = Vec::new();
    let mut k = 0;
    let mut per_point = Vec::with_capacity(jobs.len());
    for (_, pts) in &segments {
        let b = &betas[k..k + pts.len()];
        for m in 1..pts.len() {
            let area = 0.5 * (b[m - 1] + b[m]) * (pts[m] / pts[m - 1]).ln();
            pieces_out.push((pts[m - 1], pts[m], area));
        }
        per_point.extend(pts.iter().copied());
        k += pts.len();
    }
    let integral_to = |r: f64| -> f64 { pieces_out.iter().filter(|p| p.1 <= r).fold(0.0, |s, p| s + p.2) };
    let mut samples: Vec<BenedicksSample> = jobs
        .iter()
        .zip(&betas)
        .zip(&per_point)
        .map(|((&x, &beta), &ax)| BenedicksSample { x, beta, partial_integral: integral_to(ax) })
        .collect();
    samples.sort_by(|a, b| a.x.abs().total_cmp(&b.x.abs()).then(b.x.total_cmp(&a.x)));
    let ladder = radii.iter().map(|&r| (r, integral_to(r))).collect();
    Ok(BenedicksScan { alpha: opts.alpha, grid: opts.grid, samples, ladder })
}

/// Writes `x,beta,R,partial_integral` rows, `R = |x|`.
pub fn write_scan_csv<W: std::io::Write>(out: W, scan: &BenedicksScan) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "beta", "R", "partial_integral"])?;
    for s in &scan.samples {
        w.write_record([fmt_f64(s.x), fmt_f64(s.beta), fmt_f64(s.x.abs()), fmt_f64(s.partial_integral)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
