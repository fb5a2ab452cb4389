//! Equilibrium measures, logarithmic capacity and logarithmic potentials of
//! finite interval unions.
//!
//! On every component `[a, b]` a measure is represented as a Chebyshev
//! series against the arcsine weight,
//!
//! ```text
//! dμ = Σ_m c_m T_m(t) dt / (π √(1 - t²)),   t = (x - mid) / h,
//! ```
//!
//! which carries the inverse-square-root endpoint behaviour of equilibrium
//! densities. The logarithmic potential of each basis measure is known in
//! closed form through the inverse Joukowski map `w = t + √(t² - 1)`:
//!
//! ```text
//! ∫ log(z - ζ) T_0 ... = log h + log(w / 2)
//! ∫ log(z - ζ) T_m ... = -w^{-m} / m        (m ≥ 1)
//! ```
//!
//! so potentials are exact for a given coefficient vector and the unknowns
//! are found by collocation at the Chebyshev points of every component,
//! together with the unit-mass row and the Robin constant.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::realsets::IntervalSet;

/// Smallest admissible number of nodes per component.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumConfig {
    /// Chebyshev nodes (and basis functions) per component.
    pub nodes_per_interval: usize,
    /// Gaps narrower than this fraction of the smaller neighbouring
    /// component are rejected.
    pub min_separation: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig { nodes_per_interval: 256, min_separation: 1e-6 }
    }
}

impl EquilibriumConfig {
    pub fn with_nodes(n: usize) -> Self {
        EquilibriumConfig { nodes_per_interval: n, ..Default::default() }
    }
}

/// Inverse Joukowski map in the closed upper half-plane, `|w| ≥ 1`.
#[inline]
fn joukowski_inverse(t: Complex64) -> Complex64 {
    let w = t + (t - 1.0).sqrt() * (t + 1.0).sqrt();
    if w.norm_sqr() < 1.0 {
        // only reachable through rounding for t on the real segment
        w.inv()
    } else {
        w
    }
}

fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((2 * i + 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

/// A measure on an interval union stored as per-component Chebyshev series.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevMeasure {
    intervals: Vec<(f64, f64)>,
    coeffs: Vec<Vec<f64>>,
}

impl ChebyshevMeasure {
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Chebyshev coefficients of component `k`.
    pub fn coefficients(&self, k: usize) -> &[f64] {
        &self.coeffs[k]
    }

    /// Mass carried by each component.
    pub fn component_masses(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[0]).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c[0]).sum()
    }

    /// `∫ log(z - ζ) dμ(ζ)` with `arg(z - ζ) ∈ [0, π]`; `z` is reflected into
    /// the closed upper half-plane first, so the real part is the logarithmic
    /// potential everywhere and the imaginary part is the upper-side value.
    pub fn complex_log_potential(&self, z: Complex64) -> Complex64 {
        let z = Complex64::new(z.re, z.im.abs());
        let mut acc = Complex64::new(0.0, 0.0);
        for (&(a, b), c) in self.intervals.iter().zip(&self.coeffs) {
            let mid = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            let w = joukowski_inverse((z - mid) / h);
            let mut arg = w.arg();
            if arg < 0.0 {
                // w on the negative real axis seen from below
                arg += 2.0 * PI;
                if arg > PI + 1e-12 {
                    arg = PI;
                }
            }
            let log_w = Complex64::new(w.norm().ln(), arg);
            let mut term = (log_w + h.ln() - LN_2) * c[0];
            let q = w.inv();
            let mut qm = Complex64::new(1.0, 0.0);
            for (m, &cm) in c.iter().enumerate().skip(1) {
                qm *= q;
                if qm.norm_sqr() < 1e-300 {
                    break;
                }
                term -= qm * (cm / m as f64);
            }
            acc += term;
        }
        acc
    }

    /// `U(z) = ∫ log|z - ζ| dμ(ζ)`.
    pub fn log_potential(&self, z: Complex64) -> f64 {
        let z = Complex64::new(z.re, z.im.abs());
        let mut acc = 0.0;
        for (&(a, b), c) in self.intervals.iter().zip(&self.coeffs) {
            let mid = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            let w = joukowski_inverse((z - mid) / h);
            let mut term = c[0] * (w.norm().ln() + h.ln() - LN_2);
            let q = w.inv();
            let mut qm = Complex64::new(1.0, 0.0);
            for (m, &cm) in c.iter().enumerate().skip(1) {
                qm *= q;
                if qm.norm_sqr() < 1e-300 {
                    break;
                }
                term -= qm.re * cm / m as f64;
            }
            acc += term;
        }
        acc
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (&(a, b), c) in self.intervals.iter().zip(&self.coeffs) {
            if x >= b {
                acc += c[0];
            } else if x > a {
                let t = ((x - 0.5 * (a + b)) / (0.5 * (b - a))).clamp(-1.0, 1.0);
                let theta = t.acos();
                // mass of [x, b]
                let right: f64 = c[0] * theta / PI
                    + c.iter()
                        .enumerate()
                        .skip(1)
                        .map(|(m, &cm)| cm * (m as f64 * theta).sin() / (m as f64 * PI))
                        .sum::<f64>();
                acc += c[0] - right;
            }
        }
        acc
    }

    /// Density with respect to Lebesgue measure at an interior point.
    pub fn density(&self, x: f64) -> f64 {
        for (&(a, b), c) in self.intervals.iter().zip(&self.coeffs) {
            if x > a && x < b {
                let h = 0.5 * (b - a);
                let t = (x - 0.5 * (a + b)) / h;
                return clenshaw(c, t) / (PI * (1.0 - t * t).sqrt() * h);
            }
        }
        0.0
    }

    /// Gauss–Chebyshev discretisation: `n` nodes per component with weights
    /// summing to the component mass.
    pub fn nodes_and_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (&(a, b), c) in self.intervals.iter().zip(&self.coeffs) {
            let n = c.len();
            let mid = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            let mut pts = chebyshev_points(n);
            pts.reverse();
            for t in pts {
                nodes.push(mid + h * t);
                weights.push(clenshaw(c, t) / n as f64);
            }
        }
        (nodes, weights)
    }
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

/// Factorised collocation system for one interval set. The same matrix
/// serves the equilibrium problem (pole at infinity) and the balayage of a
/// finite pole, so one factorisation answers many right-hand sides.
#[derive(Debug, Clone)]
pub struct PotentialSolver {
    set: IntervalSet,
    n: usize,
    collocation: Vec<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl PotentialSolver {
    pub fn new(set: &IntervalSet, cfg: &EquilibriumConfig) -> Result<Self> {
        let n = cfg.nodes_per_interval;
        if n < MIN_NODES {
            return Err(Error::ResolutionTooSmall { got: n, min: MIN_NODES });
        }
        let ivs = set.intervals();
        for (k, w) in ivs.windows(2).enumerate() {
            let gap = w[1].0 - w[0].1;
            let scale = (w[0].1 - w[0].0).min(w[1].1 - w[1].0);
            if gap < cfg.min_separation * scale || gap < 1e-15 * set.diameter() {
                return Err(Error::ComponentsTooClose(k, k + 1));
            }
        }
        let k_count = ivs.len();
        let size = k_count * n + 1;
        let t_nodes = chebyshev_points(n);
        let mut collocation = Vec::with_capacity(k_count * n);
        for &(a, b) in ivs {
            let (mid, h) = (0.5 * (a + b), 0.5 * (b - a));
            collocation.extend(t_nodes.iter().map(|t| mid + h * t));
        }

        let mut mat = DMatrix::<f64>::zeros(size, size);
        for (row, &x) in collocation.iter().enumerate() {
            let own = row / n;
            let ti = t_nodes[row % n];
            for (k, &(a, b)) in ivs.iter().enumerate() {
                let (mid, h) = (0.5 * (a + b), 0.5 * (b - a));
                let col0 = k * n;
                if k == own {
                    mat[(row, col0)] = h.ln() - LN_2;
                    // T_m(t_i) by the three-term recurrence
                    let (mut tm1, mut tm) = (1.0, ti);
                    for m in 1..n {
                        mat[(row, col0 + m)] = -tm / m as f64;
                        let next = 2.0 * ti * tm - tm1;
                        tm1 = tm;
                        tm = next;
                    }
                } else {
                    let t = (x - mid) / h;
                    let w = t + t.signum() * ((t - 1.0) * (t + 1.0)).sqrt();
                    mat[(row, col0)] = h.ln() + w.abs().ln() - LN_2;
                    let q = 1.0 / w;
                    let mut qm = 1.0;
                    for m in 1..n {
                        qm *= q;
                        mat[(row, col0 + m)] = -qm / m as f64;
                    }
                }
            }
            mat[(row, size - 1)] = -1.0;
        }
        for k in 0..k_count {
            mat[(size - 1, k * n)] = 1.0;
        }

        let lu = mat.lu();
        let diag = lu.u().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in diag.iter() {
            lo = lo.min(d.abs());
            hi = hi.max(d.abs());
        }
        if !(lo > 0.0) || !(hi / lo).is_finite() || hi / lo > 1e15 {
            return Err(Error::Singular("equilibrium collocation"));
        }
        Ok(PotentialSolver { set: set.clone(), n, collocation, lu, condition: hi / lo })
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn nodes_per_interval(&self) -> usize {
        self.n
    }

    /// Ratio of extreme pivots of the LU factorisation; a cheap conditioning
    /// indicator.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    fn solve(&self, rhs: DVector<f64>) -> Result<(ChebyshevMeasure, f64)> {
        let sol = self.lu.solve(&rhs).ok_or(Error::Singular("equilibrium collocation"))?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("equilibrium collocation"));
        }
        let k_count = self.set.len();
        let coeffs = (0..k_count)
            .map(|k| sol.rows(k * self.n, self.n).iter().copied().collect())
            .collect();
        let measure = ChebyshevMeasure { intervals: self.set.intervals().to_vec(), coeffs };
        Ok((measure, sol[k_count * self.n]))
    }

    pub fn equilibrium(&self) -> Result<EquilibriumMeasure> {
        let size = self.collocation.len() + 1;
        let mut rhs = DVector::zeros(size);
        rhs[size - 1] = 1.0;
        let (measure, robin) = self.solve(rhs)?;
        Ok(EquilibriumMeasure::from_parts(measure, robin, self.condition))
    }

    /// Harmonic measure of `C̄ ∖ F` seen from a finite pole `p ∉ F` (the
    /// balayage of `δ_p` onto `F`).
    pub fn balayage(&self, pole: Complex64) -> Result<PoleMeasure> {
        let dist = self
            .set
            .intervals()
            .iter()
            .map(|&(a, b)| {
                let x = pole.re.clamp(a, b);
                Complex64::new(pole.re - x, pole.im).norm()
            })
            .fold(f64::INFINITY, f64::min);
        if !(dist > 1e-12 * self.set.diameter()) {
            return Err(Error::PoleTooClose(dist));
        }
        let size = self.collocation.len() + 1;
        let mut rhs = DVector::zeros(size);
        for (i, &x) in self.collocation.iter().enumerate() {
            rhs[i] = (Complex64::new(x, 0.0) - pole).norm().ln();
        }
        rhs[size - 1] = 1.0;
        let (measure, constant) = self.solve(rhs)?;
        Ok(PoleMeasure { measure, constant, pole })
    }
}

/// Discretised equilibrium measure of an interval union.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    measure: ChebyshevMeasure,
    robin: f64,
    capacity: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
    node_count: usize,
    condition: f64,
}

impl EquilibriumMeasure {
    fn from_parts(measure: ChebyshevMeasure, robin: f64, condition: f64) -> Self {
        let (nodes, weights) = measure.nodes_and_weights();
        let total_mass = measure.total_mass();
        EquilibriumMeasure {
            node_count: nodes.len(),
            capacity: robin.exp(),
            measure,
            robin,
            nodes,
            weights,
            total_mass,
            condition,
        }
    }

    pub fn measure(&self) -> &ChebyshevMeasure {
        &self.measure
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// `log cap(F)`, the constant value of the potential on `F`.
    pub fn log_capacity(&self) -> f64 {
        self.robin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Logarithmic potential `∫ log|z - ζ| dμ_F(ζ)`.
    pub fn potential(&self, z: Complex64) -> f64 {
        self.measure.log_potential(z)
    }
}

impl Serialize for EquilibriumMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            nodes: &'a [f64],
            weights: &'a [f64],
            capacity: f64,
        }
        View { nodes: &self.nodes, weights: &self.weights, capacity: self.capacity }.serialize(serializer)
    }
}

/// Balayage of a point mass: `g(z, p) = ∫ log|z - ζ| dν(ζ) - log|z - p| - C`.
#[derive(Debug, Clone)]
pub struct PoleMeasure {
    measure: ChebyshevMeasure,
    constant: f64,
    pole: Complex64,
}

impl PoleMeasure {
    pub fn measure(&self) -> &ChebyshevMeasure {
        &self.measure
    }

    pub fn pole(&self) -> Complex64 {
        self.pole
    }

    /// Green function of `C̄ ∖ F` with pole at `self.pole()`.
    pub fn green(&self, z: Complex64) -> f64 {
        let v = self.measure.log_potential(z) - (z - self.pole).norm().ln() - self.constant;
        v.max(0.0)
    }
}

/// Equilibrium measure of `F` with `n` Chebyshev nodes per component.
pub fn equilibrium_measure(f: &IntervalSet, n: usize) -> Result<EquilibriumMeasure> {
    PotentialSolver::new(f, &EquilibriumConfig::with_nodes(n))?.equilibrium()
}

/// Logarithmic capacity at the default resolution.
pub fn capacity(f: &IntervalSet) -> Result<f64> {
    capacity_with(f, &EquilibriumConfig::default())
}

pub fn capacity_with(f: &IntervalSet, cfg: &EquilibriumConfig) -> Result<f64> {
    Ok(PotentialSolver::new(f, cfg)?.equilibrium()?.capacity())
}

/// Logarithmic potential of an equilibrium measure at `z`.
pub fn potential(mu: &EquilibriumMeasure, z: Complex64) -> f64 {
    mu.potential(z)
}

/// `cap(S) / cap(hull(S))`, computed on the affine image with hull `[-1, 1]`.
pub fn capacity_ratio(s: &IntervalSet, cfg: &EquilibriumConfig) -> Result<f64> {
    if s.len() == 1 {
        return Ok(1.0);
    }
    let (scale, shift) = s.to_unit_hull();
    let unit = s.affine(scale, shift)?;
    Ok(capacity_with(&unit, cfg)? / 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realsets::normalize;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_interval_is_arcsine() {
        let mu = equilibrium_measure(&IntervalSet::interval(-1.0, 1.0).unwrap(), 64).unwrap();
        assert!((mu.capacity() - 0.5).abs() < 1e-13);
        assert!((mu.total_mass() - 1.0).abs() < 1e-13);
        for x in [-0.9, -0.3, 0.0, 0.7] {
            let expected = 1.0 / (PI * (1.0f64 - x * x).sqrt());
            assert!((mu.measure().density(x) - expected).abs() < 1e-10);
        }
        assert!((mu.measure().cdf(0.0) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn interval_capacity_is_quarter_length() {
        let f = IntervalSet::interval(0.0, 4.0).unwrap();
        assert!((capacity(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joukowski_potential_outside() {
        let mu = equilibrium_measure(&IntervalSet::interval(-1.0, 1.0).unwrap(), 32).unwrap();
        let expected = 0.5f64.ln() + (2.0 + 3.0f64.sqrt()).ln();
        assert!((mu.potential(c(2.0, 0.0)) - expected).abs() < 1e-12);
    }

    #[test]
    fn far_field_is_log_modulus() {
        let f = normalize([(-1.0, -0.4), (0.1, 0.3), (0.5, 1.0)]).unwrap();
        let mu = equilibrium_measure(&f, 64).unwrap();
        let z = c(1e10, 0.0);
        assert!((mu.potential(z) - z.norm().ln()).abs() < 1e-9);
    }

    #[test]
    fn potential_constant_on_support() {
        let f = normalize([(-1.0, -0.5), (-0.49, 0.2), (0.6, 1.0)]).unwrap();
        let mu = equilibrium_measure(&f, 128).unwrap();
        for i in 0..200 {
            let x = -1.0 + 2.0 * i as f64 / 199.0;
            if f.contains(x) {
                assert!((mu.potential(c(x, 0.0)) - mu.log_capacity()).abs() < 1e-9, "x = {x}");
            }
        }
        assert!(mu.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn errors() {
        let f = IntervalSet::interval(-1.0, 1.0).unwrap();
        assert!(matches!(equilibrium_measure(&f, 4), Err(Error::ResolutionTooSmall { .. })));
        let close = normalize([(0.0, 1.0), (1.0 + 1e-9, 2.0)]).unwrap();
        assert!(matches!(equilibrium_measure(&close, 16), Err(Error::ComponentsTooClose(0, 1))));
    }

    #[test]
    fn balayage_of_far_pole_tends_to_equilibrium() {
        let f = normalize([(-1.0, -0.2), (0.3, 1.0)]).unwrap();
        let solver = PotentialSolver::new(&f, &EquilibriumConfig::with_nodes(48)).unwrap();
        let eq = solver.equilibrium().unwrap();
        let nu = solver.balayage(c(0.0, 1e7)).unwrap();
        let m1 = eq.measure().component_masses();
        let m2 = nu.measure().component_masses();
        assert!((m1[0] - m2[0]).abs() < 1e-6);
    }

    #[test]
    fn serializes_debug_fixture_shape() {
        let mu = equilibrium_measure(&IntervalSet::interval(-1.0, 1.0).unwrap(), 8).unwrap();
        let v = serde_json::to_value(&mu).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 8);
        assert!((v["capacity"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    }
}
