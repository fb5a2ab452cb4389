//! The comb map `ψ` of the upper half-plane onto a slit half-strip, the Green
//! function `g = Im ψ` of `C̄ ∖ F`, and functionals built on them.
//!
//! `ψ(z) = π + i(∫ log(z - ζ) dμ_F(ζ) - log cap F)` sends `F` onto the base
//! `[0, π]`, the outer rays onto the sides `Re w = 0, π`, and every interior
//! gap `(c_j, d_j)` onto a vertical slit `[ũ_j, ũ_j + i ṽ_j]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumConfig, EquilibriumMeasure, PoleMeasure, PotentialSolver};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::realsets::{gaps_to_compact, normalize, GapSystem, IntervalSet};

/// One slit of the comb domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    /// Index of the gap in `IntervalSet::gaps()`.
    pub gap: usize,
    /// Foot `ũ_j ∈ (0, π)`.
    pub u: f64,
    /// Height `ṽ_j > 0`.
    pub v: f64,
}

/// Slit data of the comb domain `Σ_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombData {
    pub slits: Vec<Slit>,
    /// `Re ψ(0)` when `0 ∈ F`.
    #[serde(default)]
    pub u0: Option<f64>,
    /// Location on the real axis of each slit tip.
    #[serde(skip)]
    pub tips: Vec<f64>,
}

impl CombData {
    /// Build directly from slit records, e.g. for synthetic combs.
    pub fn from_slits(slits: Vec<Slit>, u0: Option<f64>) -> Self {
        CombData { slits, u0, tips: Vec::new() }
    }

    /// The tallest slit `ṽ_{j'}`.
    pub fn tallest(&self) -> Option<&Slit> {
        self.slits.iter().max_by(|a, b| a.v.total_cmp(&b.v))
    }
}

/// Which boundary value `ψ` returned for a point on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// `z` is in the open upper half-plane.
    Interior,
    /// `z` is real; the limit from the upper half-plane was taken.
    FromAbove,
}

#[derive(Debug, Clone, Copy)]
pub struct PsiValue {
    pub value: Complex64,
    pub approach: Approach,
}

/// Location of a Green-function pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pole {
    Infinity,
    At(Complex64),
}

/// Equilibrium data of one compact set, ready for repeated `ψ` and Green
/// evaluations.
#[derive(Debug, Clone)]
pub struct CombMap {
    solver: PotentialSolver,
    eq: EquilibriumMeasure,
}

impl CombMap {
    pub fn new(f: &IntervalSet, cfg: &EquilibriumConfig) -> Result<Self> {
        let solver = PotentialSolver::new(f, cfg)?;
        let eq = solver.equilibrium()?;
        Ok(CombMap { solver, eq })
    }

    pub fn set(&self) -> &IntervalSet {
        self.solver.set()
    }

    pub fn equilibrium(&self) -> &EquilibriumMeasure {
        &self.eq
    }

    pub fn capacity(&self) -> f64 {
        self.eq.capacity()
    }

    /// `cap(K_F) = 1 / (2 cap F)`.
    pub fn cap_kf(&self) -> f64 {
        cap_kf_from(self.eq.capacity())
    }

    /// `ψ(z)` for `Im z ≥ 0`.
    pub fn psi(&self, z: Complex64) -> Result<PsiValue> {
        if z.im < 0.0 {
            return Err(Error::Domain { family: "psi", reason: format!("Im z = {} < 0", z.im) });
        }
        let l = self.eq.measure().complex_log_potential(z);
        let value = Complex64::new(PI - l.im, (l.re - self.eq.log_capacity()).max(0.0));
        let approach = if z.im == 0.0 { Approach::FromAbove } else { Approach::Interior };
        Ok(PsiValue { value, approach })
    }

    /// `g(z) = g_{C̄∖F}(z, ∞)`; symmetric in the real axis.
    pub fn green(&self, z: Complex64) -> f64 {
        (self.eq.potential(z) - self.eq.log_capacity()).max(0.0)
    }

    /// `Ψ(z) = exp(i(π - ψ(z)))`, extended to the lower half-plane by
    /// reflection. On a gap the upper-side limit is returned.
    pub fn big_psi(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 && self.set().contains(z.re) {
            return Err(Error::OnSet(z.re));
        }
        let upper = Complex64::new(z.re, z.im.abs());
        let w = self.psi(upper)?.value;
        let val = (Complex64::i() * (Complex64::new(PI, 0.0) - w)).exp();
        Ok(if z.im < 0.0 { val.conj() } else { val })
    }

    /// Maximiser and maximum of `g` on interior gap `j`, by golden-section
    /// search to `1e-12` of the gap length.
    pub fn gap_maximum(&self, j: usize) -> Result<(f64, f64)> {
        let gaps = self.set().gaps();
        let &(c, d) = gaps.get(j).ok_or(Error::NoGap)?;
        if d - c < 1e-14 * self.set().diameter() {
            return Err(Error::GapBelowResolution(j));
        }
        let g = |x: f64| self.green(Complex64::new(x, 0.0));
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (c, d);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut g1, mut g2) = (g(x1), g(x2));
        let tol = 1e-12 * (d - c);
        while hi - lo > tol {
            if g1 < g2 {
                lo = x1;
                x1 = x2;
                g1 = g2;
                x2 = lo + ratio * (hi - lo);
                g2 = g(x2);
            } else {
                hi = x2;
                x2 = x1;
                g2 = g1;
                x1 = hi - ratio * (hi - lo);
                g1 = g(x1);
            }
        }
        let x = 0.5 * (lo + hi);
        let v = g(x);
        if !(v > 0.0) {
            return Err(Error::GapBelowResolution(j));
        }
        Ok((x, v))
    }

    /// Slit records for every interior gap.
    pub fn comb_data(&self) -> Result<CombData> {
        let n_gaps = self.set().gaps().len();
        if n_gaps == 0 {
            return Err(Error::NoGap);
        }
        let found: Vec<(f64, Slit)> = (0..n_gaps)
            .into_par_iter()
            .map(|j| {
                let (x, v) = self.gap_maximum(j)?;
                let u = self.psi(Complex64::new(x, 0.0))?.value.re;
                Ok((x, Slit { gap: j, u, v }))
            })
            .collect::<Result<_>>()?;
        let u0 = if self.set().contains(0.0) { Some(self.psi(Complex64::new(0.0, 0.0))?.value.re) } else { None };
        let (tips, slits) = found.into_iter().unzip();
        Ok(CombData { slits, u0, tips })
    }

    /// Like [`CombMap::comb_data`], but a gap whose Green maximum is below
    /// the potential resolution gets a slit of height 0 at `u = π μ((-∞, c])`
    /// instead of an error. Returns the indices of such gaps.
    pub fn comb_data_resolved(&self) -> Result<(CombData, Vec<usize>)> {
        let gaps = self.set().gaps();
        if gaps.is_empty() {
            return Err(Error::NoGap);
        }
        let found: Vec<(f64, Slit, bool)> = (0..gaps.len())
            .into_par_iter()
            .map(|j| match self.gap_maximum(j) {
                Ok((x, v)) => Ok((x, Slit { gap: j, u: self.psi(Complex64::new(x, 0.0))?.value.re, v }, false)),
                Err(Error::GapBelowResolution(_)) => {
                    let x = 0.5 * (gaps[j].0 + gaps[j].1);
                    Ok((x, Slit { gap: j, u: PI * self.eq.measure().cdf(gaps[j].0), v: 0.0 }, true))
                }
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let u0 = if self.set().contains(0.0) { Some(self.psi(Complex64::new(0.0, 0.0))?.value.re) } else { None };
        let unresolved = found.iter().filter(|f| f.2).map(|f| f.1.gap).collect();
        let (tips, slits) = found.into_iter().map(|(x, s, _)| (x, s)).unzip();
        Ok((CombData { slits, u0, tips }, unresolved))
    }

    /// The point `x ∈ F` with `Re ψ(x) = u`, for `u` off the slit feet.
    pub fn base_preimage(&self, u: f64) -> f64 {
        let target = (u / PI).clamp(0.0, 1.0);
        let mu = self.eq.measure();
        let (mut lo, mut hi) = self.set().hull();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mu.cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Harmonic measure for a finite pole, sharing this set's factorisation.
    pub fn pole_measure(&self, pole: Complex64) -> Result<PoleMeasure> {
        self.solver.balayage(pole)
    }

    /// `g(z, p)` through the balayage of `δ_p`; any pole off `F`.
    pub fn green_with_pole_balayage(&self, z: Complex64, pole: Complex64) -> Result<f64> {
        Ok(self.pole_measure(pole)?.green(z))
    }

    /// `g(z, p)`. Real poles go through the conjugation `x ↦ 1/(x - p)` to
    /// the pole-at-infinity case; a non-real pole with real `z` uses the
    /// symmetry `g(z, p) = g(p, z)`; two non-real points use the balayage.
    pub fn green_with_pole(&self, z: Complex64, pole: Pole, cfg: &EquilibriumConfig) -> Result<f64> {
        let p = match pole {
            Pole::Infinity => return Ok(self.green(z)),
            Pole::At(p) => p,
        };
        if p.im == 0.0 && self.set().contains(p.re) {
            return Err(Error::OnSet(p.re));
        }
        if z == p {
            return Ok(f64::INFINITY);
        }
        if p.im == 0.0 {
            green_real_pole(self.set(), z, p.re, cfg)
        } else if z.im == 0.0 {
            if self.set().contains(z.re) {
                return Ok(0.0);
            }
            green_real_pole(self.set(), p, z.re, cfg)
        } else {
            self.green_with_pole_balayage(z, p)
        }
    }

    /// `g(iy) / y` along the imaginary axis; needs `0 ∈ F`.
    pub fn smoothness_ratio(&self, ys: &[f64]) -> Result<Vec<f64>> {
        if !self.set().contains(0.0) {
            return Err(Error::Hypothesis("smoothness ratio needs 0 in F".into()));
        }
        if ys.windows(2).any(|w| !(w[1] < w[0])) || ys.iter().any(|&y| !(y > 0.0)) {
            return Err(Error::Domain { family: "smoothness", reason: "y values must be positive and decreasing".into() });
        }
        let floor = 1e-10 * self.set().diameter();
        if let Some(&y) = ys.iter().find(|&&y| y < floor) {
            return Err(Error::Domain { family: "smoothness", reason: format!("y = {y:e} below resolution {floor:e}") });
        }
        Ok(ys.iter().map(|&y| self.green(Complex64::new(0.0, y)) / y).collect())
    }
}

/// `cap(K_F) = 1 / (2 cap(F))`.
pub fn cap_kf_from(cap_f: f64) -> f64 {
    1.0 / (2.0 * cap_f)
}

fn green_real_pole(f: &IntervalSet, z: Complex64, p: f64, cfg: &EquilibriumConfig) -> Result<f64> {
    let dist = f
        .intervals()
        .iter()
        .map(|&(a, b)| (p - p.clamp(a, b)).abs())
        .fold(f64::INFINITY, f64::min);
    if !(dist > 1e-12 * f.diameter()) {
        return Err(Error::PoleTooClose(dist));
    }
    let image = normalize(f.intervals().iter().map(|&(a, b)| {
        let (u, v) = (1.0 / (b - p), 1.0 / (a - p));
        (u.min(v), u.max(v))
    }))?;
    let map = CombMap::new(&image, cfg)?;
    Ok(map.green((z - p).inv()))
}

/// `ψ(z)` for a fresh set at the default resolution.
pub fn psi(f: &IntervalSet, z: Complex64) -> Result<PsiValue> {
    CombMap::new(f, &EquilibriumConfig::default())?.psi(z)
}

pub fn comb_data(f: &IntervalSet) -> Result<CombData> {
    CombMap::new(f, &EquilibriumConfig::default())?.comb_data()
}

pub fn big_psi(f: &IntervalSet, z: Complex64) -> Result<Complex64> {
    CombMap::new(f, &EquilibriumConfig::default())?.big_psi(z)
}

pub fn green(f: &IntervalSet, z: Complex64) -> Result<f64> {
    Ok(CombMap::new(f, &EquilibriumConfig::default())?.green(z))
}

pub fn cap_kf(f: &IntervalSet) -> Result<f64> {
    Ok(CombMap::new(f, &EquilibriumConfig::default())?.cap_kf())
}

pub fn smoothness_ratio(f: &IntervalSet, ys: &[f64]) -> Result<Vec<f64>> {
    CombMap::new(f, &EquilibriumConfig::default())?.smoothness_ratio(ys)
}

/// Write `(y, g(iy)/y)` pairs as CSV with a header row.
pub fn write_smoothness_csv<W: std::io::Write>(out: W, ys: &[f64], ratios: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y", "ratio"])?;
    for (y, r) in ys.iter().zip(ratios) {
        w.write_record([crate::json::fmt_f64(*y), crate::json::fmt_f64(*r)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Settings for [`theorem_b_integral`].
#[derive(Debug, Clone, Copy)]
pub struct GapQuadrature {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for GapQuadrature {
    fn default() -> Self {
        GapQuadrature { initial_nodes: 64, max_nodes: 4096, rel_tol: 1e-6 }
    }
}

/// `U(z, E_R) = ∫_{E_R*} g_Ω(t, z) dt` for the truncation `E_R = E ∪ {|x| ≥ R}`.
///
/// The Green function with finite pole is evaluated after the reduction to a
/// compact set, where the pole becomes `M(z)` and a single balayage solve
/// serves every quadrature node.
pub fn theorem_b_integral(
    e: &GapSystem,
    z: Complex64,
    radius: f64,
    cfg: &EquilibriumConfig,
    quad: &GapQuadrature,
) -> Result<f64> {
    let er = e.truncate(radius);
    if er.gaps().is_empty() {
        return Ok(0.0);
    }
    if z.im == 0.0 && er.contains(z.re) {
        return Err(Error::OnSet(z.re));
    }
    let (f, map) = gaps_to_compact(&er, None)?;
    let solver = PotentialSolver::new(&f, cfg)?;
    let nu = solver.balayage(map.apply(z))?;
    let integrand = |t: f64| nu.green(Complex64::new(map.apply_real(t), 0.0));

    let mut pieces = Vec::new();
    for &(c, d) in er.gaps() {
        if z.im == 0.0 && c < z.re && z.re < d {
            pieces.push((c, z.re));
            pieces.push((z.re, d));
        } else {
            pieces.push((c, d));
        }
    }
    let parts: Vec<f64> = pieces
        .par_iter()
        .map(|&(c, d)| integrate_gap(&integrand, c, d, quad))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Ladder of [`theorem_b_integral`] values over increasing radii.
pub fn theorem_b_ladder(
    e: &GapSystem,
    z: Complex64,
    radii: &[f64],
    cfg: &EquilibriumConfig,
) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| theorem_b_integral(e, z, r, cfg, &GapQuadrature::default()))
        .collect()
}

// Gauss–Legendre in θ after t = c + (d - c)(1 - cos θ)/2, which absorbs the
// square-root vanishing of g at the gap ends.
fn integrate_gap<G: Fn(f64) -> f64>(g: &G, c: f64, d: f64, quad: &GapQuadrature) -> Result<f64> {
    let half = 0.5 * (d - c);
    let rule = |n: usize| {
        let (x, w) = gauss_legendre(n);
        x.iter()
            .zip(&w)
            .map(|(&s, &wt)| {
                let theta = 0.5 * PI * (s + 1.0);
                let t = c + half * (1.0 - theta.cos());
                wt * g(t) * half * theta.sin() * 0.5 * PI
            })
            .sum::<f64>()
    };
    let mut n = quad.initial_nodes;
    let mut prev = rule(n);
    while n < quad.max_nodes {
        n *= 2;
        let next = rule(n);
        if (next - prev).abs() <= quad.rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence { what: "gap quadrature", iterations: n, residual: prev })
}

/// Outcome of [`capacity_regularize_report`].
#[derive(Debug, Clone, Serialize)]
pub struct Regularization {
    pub set: IntervalSet,
    pub tallest_slit: f64,
    pub level: f64,
    pub ratio_before: f64,
    pub ratio_after: f64,
}

/// The sublevel set `F* = {x ∈ [a, b] : g(x) ≤ ṽ_{j'} - 2π}` of a set with
/// `cap(F) / cap([a, b]) ≤ e^{-3π}`.
pub fn capacity_regularize(f: &IntervalSet, cfg: &EquilibriumConfig) -> Result<IntervalSet> {
    capacity_regularize_report(f, cfg).map(|r| r.set)
}

pub fn capacity_regularize_report(f: &IntervalSet, cfg: &EquilibriumConfig) -> Result<Regularization> {
    let (scale, shift) = f.to_unit_hull();
    let unit = f.affine(scale, shift)?;
    let map = CombMap::new(&unit, cfg)?;
    let ratio_before = map.capacity() / 0.5;
    let bound = (-3.0 * PI).exp();
    if ratio_before > bound {
        return Err(Error::Hypothesis(format!("capacity ratio {ratio_before:e} exceeds e^(-3π) = {bound:e}")));
    }
    let cd = map.comb_data()?;
    let tallest = cd.tallest().map(|s| s.v).ok_or(Error::NoGap)?;
    let level = tallest - 2.0 * PI;
    let g = |x: f64| map.green(Complex64::new(x, 0.0));
    let gaps = unit.gaps();
    let mut pieces: Vec<(f64, f64)> = unit.intervals().to_vec();
    for (slit, &tip) in cd.slits.iter().zip(&cd.tips) {
        let (c, d) = gaps[slit.gap];
        if slit.v <= level {
            pieces.push((c, d));
            continue;
        }
        let left = bisect_level(&g, c, tip, level);
        let right = bisect_level(&g, d, tip, level);
        if left > c {
            pieces.push((c, left));
        }
        if right < d {
            pieces.push((right, d));
        }
    }
    let star_unit = normalize(pieces)?;
    let ratio_after = CombMap::new(&star_unit, cfg)?.capacity() / 0.5;
    let set = star_unit.affine(1.0 / scale, -shift / scale)?;
    Ok(Regularization { set, tallest_slit: tallest, level, ratio_before, ratio_after })
}

// g(from) = 0 < level < g(to); returns the crossing nearest `from`'s side.
fn bisect_level<G: Fn(f64) -> f64>(g: &G, from: f64, to: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (from, to);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-15 * from.abs().max(to.abs()).max(1e-300) {
            break;
        }
    }
    lo
}
