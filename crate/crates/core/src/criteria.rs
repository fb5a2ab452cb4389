//! Series, capacity and density criteria evaluated over a truncation ladder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{CoverBlock, CoverSystem};
use crate::equilibrium::{capacity_ratio, EquilibriumConfig};
use crate::error::{Error, Result};
use crate::realsets::GapSystem;

/// Thresholds that turn finite ladders into evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Fitted series tail below which a series counts as convergent.
    pub eps_tail: f64,
    /// Minimal growth of a partial sum per decade of truncation radius for a
    /// series to count as divergent.
    pub growth_per_decade: f64,
    /// Lower floor for the capacity-ratio and density infima.
    pub ratio_floor: f64,
    /// Upper ceiling `q″ < 1` for the capacity-ratio supremum.
    pub ratio_ceiling: f64,
    /// Largest ratio of consecutive increments accepted as geometric decay.
    pub geometric_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_tail: 1e-3, growth_per_decade: 0.1, ratio_floor: 1e-2, ratio_ceiling: 0.99, geometric_ratio: 0.5 }
    }
}

/// One rung of a truncation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub radius: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub ladder: Vec<LadderPoint>,
    /// Running minimum of the block capacity ratios, per truncation.
    pub ratio_min: Vec<f64>,
    pub tail_estimate: f64,
    pub evidence_dim2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub ladder: Vec<LadderPoint>,
    /// Running maximum of the block capacity ratios, per truncation.
    pub ratio_max: Vec<f64>,
    pub growth_per_decade: f64,
    pub evidence_dim1: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remark1Report {
    pub density_min: f64,
    pub evidence_dim2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remark3Report {
    pub ladder: Vec<LadderPoint>,
    /// Ratio of the last two ladder increments.
    pub increment_ratio: Option<f64>,
    pub evidence_dim2: bool,
}

/// `cap(E ∩ [a, b]) / cap([a, b])`; 0 when `E ∩ [a, b]` has no length.
pub fn block_capacity_ratio(e: &GapSystem, blk: &CoverBlock, cfg: &EquilibriumConfig) -> Result<f64> {
    match e.restrict(blk.a, blk.b) {
        None => Ok(0.0),
        Some(part) => Ok(capacity_ratio(&part, cfg)? * part.diameter() / (blk.b - blk.a)),
    }
}

fn check_ladder(truncations: &[f64]) -> Result<()> {
    if truncations.is_empty() || truncations.windows(2).any(|w| !(w[0] < w[1])) || !(truncations[0] > 0.0) {
        return Err(Error::Domain { family: "ladder", reason: "truncations must be positive and increasing".into() });
    }
    Ok(())
}

/// Partial sums of `term` over the blocks inside each truncation.
pub fn partial_sums<F: Fn(&CoverBlock) -> f64>(cover: &CoverSystem, truncations: &[f64], term: F) -> Vec<LadderPoint> {
    truncations
        .iter()
        .map(|&r| LadderPoint { radius: r, partial_sum: cover.within(r).map(&term).fold(0.0, |s, t| s + t) })
        .collect()
}

/// Term of the convergence series, `((b - a)/(|a| + 1))²`.
pub fn theorem1_term(blk: &CoverBlock) -> f64 {
    ((blk.b - blk.a) / (blk.a.abs() + 1.0)).powi(2)
}

/// Term of the divergence series, `((b - a)/(|a + b| + 1))²`.
pub fn theorem2_term(blk: &CoverBlock) -> f64 {
    ((blk.b - blk.a) / ((blk.a + blk.b).abs() + 1.0)).powi(2)
}

fn ratios_within(
    e: &GapSystem,
    cover: &CoverSystem,
    r_max: f64,
    cfg: &EquilibriumConfig,
) -> Result<Vec<(f64, f64)>> {
    let blocks: Vec<&CoverBlock> = cover.within(r_max).collect();
    blocks
        .par_iter()
        .map(|blk| Ok((blk.a.abs().max(blk.b.abs()), block_capacity_ratio(e, blk, cfg)?)))
        .collect()
}

/// Geometric tail `Δ_n q/(1 - q)` fitted to the last two increments; zero
/// when the last increment vanishes and infinite when increments do not
/// decay.
pub fn geometric_tail(ladder: &[LadderPoint]) -> f64 {
    let n = ladder.len();
    if n < 3 {
        return if n >= 2 && ladder[n - 1].partial_sum == ladder[n - 2].partial_sum && ladder[0].partial_sum == ladder[n - 1].partial_sum {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let d1 = ladder[n - 2].partial_sum - ladder[n - 3].partial_sum;
    let d2 = ladder[n - 1].partial_sum - ladder[n - 2].partial_sum;
    if d2 <= 0.0 {
        return 0.0;
    }
    if d1 <= 0.0 {
        return f64::INFINITY;
    }
    let q = d2 / d1;
    if q >= 1.0 {
        f64::INFINITY
    } else {
        d2 * q / (1.0 - q)
    }
}

/// Growth of the partial sums per decade of radius over the last rung.
pub fn growth_per_decade(ladder: &[LadderPoint]) -> f64 {
    let n = ladder.len();
    if n < 2 {
        return 0.0;
    }
    let (a, b) = (ladder[n - 2], ladder[n - 1]);
    (b.partial_sum - a.partial_sum) / (b.radius / a.radius).log10()
}

/// Convergence side: partial sums of `((b - a)/(|a| + 1))²` and the running
/// minimum of block capacity ratios.
pub fn theorem1_test(
    e: &GapSystem,
    cover: &CoverSystem,
    truncations: &[f64],
    cfg: &EquilibriumConfig,
    th: &Thresholds,
) -> Result<Theorem1Report> {
    check_ladder(truncations)?;
    let r_max = *truncations.last().unwrap();
    cover.validate(&e.truncate(r_max))?;
    let ladder = partial_sums(cover, truncations, theorem1_term);
    let ratios = ratios_within(e, cover, r_max, cfg)?;
    let ratio_min: Vec<f64> = truncations
        .iter()
        .map(|&r| ratios.iter().filter(|x| x.0 <= r).map(|x| x.1).fold(1.0, f64::min))
        .collect();
    let tail_estimate = geometric_tail(&ladder);
    let floor_ok = ratio_min.last().is_some_and(|&m| m >= th.ratio_floor);
    Ok(Theorem1Report { ladder, ratio_min, tail_estimate, evidence_dim2: floor_ok && tail_estimate < th.eps_tail })
}

/// Divergence side: partial sums of `((b - a)/(|a + b| + 1))²` and the
/// running maximum of block capacity ratios.
pub fn theorem2_test(
    e: &GapSystem,
    cover: &CoverSystem,
    truncations: &[f64],
    cfg: &EquilibriumConfig,
    th: &Thresholds,
) -> Result<Theorem2Report> {
    check_ladder(truncations)?;
    if let Some(side) = e.half_line_gap() {
        return Err(Error::Hypothesis(format!("E is bounded on the {side:?} side: half-line gap")));
    }
    let r_max = *truncations.last().unwrap();
    cover.validate(&e.truncate(r_max))?;
    let ladder = partial_sums(cover, truncations, theorem2_term);
    let ratios = ratios_within(e, cover, r_max, cfg)?;
    let ratio_max: Vec<f64> = truncations
        .iter()
        .map(|&r| ratios.iter().filter(|x| x.0 <= r).map(|x| x.1).fold(0.0, f64::max))
        .collect();
    let growth = growth_per_decade(&ladder);
    let sup_ok = ratio_max.last().is_some_and(|&m| m <= th.ratio_ceiling);
    let has_blocks = cover.within(r_max).next().is_some();
    Ok(Theorem2Report {
        ladder,
        ratio_max,
        growth_per_decade: growth,
        evidence_dim1: has_blocks && sup_ok && growth >= th.growth_per_decade,
    })
}

/// Infimum over blocks of the Lebesgue density `|E ∩ [a, b]| / (b - a)`;
/// 1 for an empty cover.
pub fn metric_test_remark1(e: &GapSystem, cover: &CoverSystem, radius: f64) -> f64 {
    cover
        .within(radius)
        .map(|blk| 1.0 - e.gap_measure_in(blk.a, blk.b) / (blk.b - blk.a))
        .fold(1.0, f64::min)
}

/// Density infimum combined with the fitted tail of the convergence series.
pub fn remark1_report(e: &GapSystem, cover: &CoverSystem, radius: f64, tail_estimate: f64, th: &Thresholds) -> Remark1Report {
    let density_min = metric_test_remark1(e, cover, radius);
    Remark1Report { density_min, evidence_dim2: density_min >= th.ratio_floor && tail_estimate < th.eps_tail }
}

/// `∫_1^R θ_E(t)² / t³ dt`, exactly: on each piece where `θ_E(t) = A + s t`
/// the integrand is a combination of `t⁻³`, `t⁻²` and `t⁻¹`.
pub fn remark3_integral(e: &GapSystem, radius: f64) -> f64 {
    if radius <= 1.0 {
        return 0.0;
    }
    let mut breaks: Vec<f64> = vec![1.0, radius];
    for &(c, d) in e.gaps() {
        for x in [c.abs(), d.abs()] {
            if x > 1.0 && x < radius {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let theta = |t: f64| crate::realsets::theta_e(e, t);
    breaks
        .windows(2)
        .map(|w| {
            let (t1, t2) = (w[0], w[1]);
            let (f1, f2) = (theta(t1), theta(t2));
            let s = (f2 - f1) / (t2 - t1);
            let a = f1 - s * t1;
            a * a * (0.5 / (t1 * t1) - 0.5 / (t2 * t2)) + 2.0 * a * s * (1.0 / t1 - 1.0 / t2) + s * s * (t2 / t1).ln()
        })
        .sum()
}

pub fn metric_test_remark3(e: &GapSystem, truncations: &[f64], th: &Thresholds) -> Result<Remark3Report> {
    check_ladder(truncations)?;
    let ladder: Vec<LadderPoint> =
        truncations.iter().map(|&r| LadderPoint { radius: r, partial_sum: remark3_integral(e, r) }).collect();
    let n = ladder.len();
    let increment_ratio = (n >= 3).then(|| {
        let d1 = ladder[n - 2].partial_sum - ladder[n - 3].partial_sum;
        let d2 = ladder[n - 1].partial_sum - ladder[n - 2].partial_sum;
        if d1 > 0.0 {
            d2 / d1
        } else if d2 > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    });
    let evidence_dim2 = increment_ratio.is_some_and(|q| q <= th.geometric_ratio);
    Ok(Remark3Report { ladder, increment_ratio, evidence_dim2 })
}

/// An increasing majorant `θ(t)`, `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThetaSpec {
    /// `θ(t) = c·t^γ` with `0 < γ ≤ 1`.
    Power { c: f64, gamma: f64 },
    /// Piecewise-linear interpolation of `(t, θ(t))` samples.
    Table { samples: Vec<(f64, f64)> },
}

impl ThetaSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Domain { family: "theta", reason });
        match self {
            ThetaSpec::Power { c, gamma } => {
                if !(*c > 0.0 && *gamma > 0.0 && *gamma <= 1.0) {
                    return bad(format!("power law needs c > 0 and 0 < γ ≤ 1, got c = {c}, γ = {gamma}"));
                }
                // c·t^γ ≤ 2t for all t ≥ 1 iff c ≤ 2.
                if *c > 2.0 {
                    return bad(format!("c = {c} violates θ(t) ≤ 2t at t = 1"));
                }
            }
            ThetaSpec::Table { samples } => {
                if samples.len() < 2 || samples[0].0 > 1.0 {
                    return bad("table needs two or more samples starting at t ≤ 1".into());
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return bad("table abscissae must increase".into());
                    }
                    if w[1].1 < w[0].1 {
                        return bad(format!("θ decreases between t = {} and t = {}", w[0].0, w[1].0));
                    }
                }
                for &(t, v) in samples.iter().filter(|s| s.0 >= 1.0) {
                    if !(v > 0.0 && v <= 2.0 * t) {
                        return bad(format!("θ({t}) = {v} outside (0, 2t]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            ThetaSpec::Power { c, gamma } => Ok(c * t.powf(*gamma)),
            ThetaSpec::Table { samples } => {
                let last = samples.last().unwrap();
                if t < samples[0].0 || t > last.0 {
                    return Err(Error::Domain { family: "theta", reason: format!("t = {t} outside the table") });
                }
                let k = samples.partition_point(|s| s.0 <= t).clamp(1, samples.len() - 1);
                let (t0, v0) = samples[k - 1];
                let (t1, v1) = samples[k];
                Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }

    /// Parses `power:γ` or `power:γ:c`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| {
            x.parse::<f64>().map_err(|_| Error::Domain { family: "theta", reason: format!("bad number `{x}`") })
        };
        match parts.as_slice() {
            ["power", g] => Ok(ThetaSpec::Power { c: 1.0, gamma: num(g)? }),
            ["power", g, c] => Ok(ThetaSpec::Power { c: num(c)?, gamma: num(g)? }),
            _ => Err(Error::Domain { family: "theta", reason: format!("expected power:γ[:c], got `{s}`") }),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ThetaSpec::Power { c, gamma } => format!("power:{gamma}:{c}"),
            ThetaSpec::Table { samples } => format!("table:{}", samples.len()),
        }
    }
}

/// Gaps `(2^j, 2^j + (θ(2^j) - θ(2^{j-1}))/4)` for `j = 1..=levels`; empty
/// gaps are dropped. The system is truncated at `2^(levels+1)`.
pub fn construct_remark4(theta: &ThetaSpec, levels: u32) -> Result<GapSystem> {
    if levels < 1 {
        return Err(Error::Domain { family: "remark4", reason: "needs at least one level".into() });
    }
    theta.validate()?;
    let mut gaps = Vec::new();
    for j in 1..=levels {
        let x = 2f64.powi(j as i32);
        let len = 0.25 * (theta.eval(x)? - theta.eval(x / 2.0)?);
        if len < 0.0 {
            return Err(Error::Domain { family: "remark4", reason: format!("θ decreases before t = {x}") });
        }
        if len > 0.0 {
            gaps.push((x, x + len));
        }
    }
    let sys = GapSystem::new(gaps, 1.0, Some(2f64.powi(levels as i32 + 1)))?;
    Ok(sys.with_generator(format!("remark4 {} levels={levels}", theta.label())))
}

/// Checks `θ_E(t) ≤ θ(t)` at every gap endpoint and at `2^j + 1`, for `t > 2`.
pub fn remark4_majorant_holds(e: &GapSystem, theta: &ThetaSpec, levels: u32) -> Result<bool> {
    let mut points: Vec<f64> = e.gaps().iter().flat_map(|&(c, d)| [c, d]).filter(|&t| t > 2.0).collect();
    points.extend((1..=levels).map(|j| 2f64.powi(j as i32) + 1.0));
    for t in points {
        if crate::realsets::theta_e(e, t) > theta.eval(t)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Writes `radius,partial_sum` rows with a header.
pub fn write_ladder_csv<W: std::io::Write>(out: W, ladder: &[LadderPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["R", "partial_sum"])?;
    for p in ladder {
        w.write_record([crate::json::fmt_f64(p.radius), crate::json::fmt_f64(p.partial_sum)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{cover_dyadic_density, cover_from_gaps};

    fn dyadic_unit_gaps(levels: i32) -> GapSystem {
        GapSystem::new((1..=levels).map(|j| (2f64.powi(j), 2f64.powi(j) + 1.0)).collect(), 1.0, None).unwrap()
    }

    fn cfg() -> EquilibriumConfig {
        EquilibriumConfig::with_nodes(32)
    }

    #[test]
    fn whole_line_is_trivially_dim2() {
        let e = GapSystem::whole_line();
        let cover = cover_from_gaps(&e);
        let t1 = theorem1_test(&e, &cover, &[1e2, 1e3, 1e4], &cfg(), &Thresholds::default()).unwrap();
        assert!(t1.ladder.iter().all(|p| p.partial_sum == 0.0));
        assert!(t1.ratio_min.iter().all(|&r| r == 1.0));
        assert!(t1.evidence_dim2);
        let t2 = theorem2_test(&e, &cover, &[1e2, 1e3, 1e4], &cfg(), &Thresholds::default()).unwrap();
        assert!(!t2.evidence_dim1);
        assert_eq!(metric_test_remark1(&e, &cover, 1e4), 1.0);
        assert_eq!(remark3_integral(&e, 1e4), 0.0);
    }

    #[test]
    fn plain_blocks_have_zero_ratio() {
        let e = dyadic_unit_gaps(12);
        let cover = cover_from_gaps(&e);
        let t1 = theorem1_test(&e, &cover, &[1e2, 1e3], &cfg(), &Thresholds::default()).unwrap();
        assert_eq!(*t1.ratio_min.last().unwrap(), 0.0);
        assert!(!t1.evidence_dim2);
        assert_eq!(metric_test_remark1(&e, &cover, 1e3), 0.0);
    }

    #[test]
    fn dense_cover_gives_dim2_evidence_for_unit_gaps() {
        let e = dyadic_unit_gaps(30);
        let ladder = [1e2, 1e3, 1e4, 1e5];
        let cover = cover_dyadic_density(&e, 1e5).unwrap();
        let t1 = theorem1_test(&e, &cover, &ladder, &cfg(), &Thresholds::default()).unwrap();
        assert!(t1.ratio_min.last().unwrap() > &0.1, "{:?}", t1.ratio_min);
        assert!(t1.evidence_dim2, "{t1:?}");
        assert!(metric_test_remark1(&e, &cover, 1e5) >= 0.25 - 1e-12);
        // Partial sums at R match a direct sum over the blocks inside R.
        let direct: f64 = cover.within(1e3).map(theorem1_term).sum();
        assert_eq!(t1.ladder[1].partial_sum, direct);
    }

    #[test]
    fn partial_sums_are_monotone_and_ladder_stable() {
        let e = dyadic_unit_gaps(20);
        let cover = cover_dyadic_density(&e, 1e6).unwrap();
        let long = partial_sums(&cover, &[1e2, 1e3, 1e4, 1e5, 1e6], theorem2_term);
        let short = partial_sums(&cover, &[1e2, 1e6], theorem2_term);
        assert!(long.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum));
        assert_eq!(long[4].partial_sum, short[1].partial_sum);
    }

    #[test]
    fn remark3_exact_pieces() {
        // One gap (2, 3): θ = 0 on [1, 2], t - 2 on [2, 3], 1 on [3, R].
        let e = GapSystem::new(vec![(2.0, 3.0)], 1.0, None).unwrap();
        let r = 10.0f64;
        let middle = (1.5f64).ln() - 2.0 * 2.0 * (0.5 - 1.0 / 3.0) + 4.0 * (1.0 / 8.0 - 1.0 / 18.0);
        let tail = 0.5 / 9.0 - 0.5 / (r * r);
        assert!((remark3_integral(&e, r) - (middle + tail)).abs() < 1e-14);
        let q = metric_test_remark3(&dyadic_unit_gaps(40), &[1e2, 1e3, 1e4, 1e5], &Thresholds::default()).unwrap();
        assert!(q.evidence_dim2, "{q:?}");
    }

    #[test]
    fn remark4_linear_family() {
        let theta = ThetaSpec::Power { c: 1.0, gamma: 1.0 };
        let e = construct_remark4(&theta, 10).unwrap();
        for (j, &(c, d)) in e.gaps().iter().enumerate() {
            let x = 2f64.powi(j as i32 + 1);
            assert_eq!((c, d), (x, x + x / 8.0));
        }
        assert_eq!(e.truncation(), Some(2048.0));
        assert!(remark4_majorant_holds(&e, &theta, 10).unwrap());
        let q = metric_test_remark3(&e, &[1e1, 1e2, 1e3], &Thresholds::default()).unwrap();
        assert!(!q.evidence_dim2);
    }

    #[test]
    fn remark4_constant_theta_is_empty() {
        let theta = ThetaSpec::Table { samples: vec![(1.0, 1.0), (1e6, 1.0)] };
        assert!(construct_remark4(&theta, 5).unwrap().gaps().is_empty());
        let bad = ThetaSpec::Table { samples: vec![(1.0, 1.0), (10.0, 0.5)] };
        assert!(construct_remark4(&bad, 3).is_err());
        assert!(construct_remark4(&ThetaSpec::Power { c: 3.0, gamma: 1.0 }, 3).is_err());
        assert_eq!(ThetaSpec::parse("power:0.5:2").unwrap(), ThetaSpec::Power { c: 2.0, gamma: 0.5 });
        assert!(ThetaSpec::parse("linear").is_err());
    }

    #[test]
    fn remark4_linear_series_diverges() {
        let theta = ThetaSpec::Power { c: 1.0, gamma: 1.0 };
        let e = construct_remark4(&theta, 20).unwrap();
        let cover = cover_dyadic_density(&e, 1e6).unwrap();
        let t2 = theorem2_test(&e, &cover, &[1e2, 1e3, 1e4, 1e5], &cfg(), &Thresholds::default()).unwrap();
        assert!(t2.growth_per_decade >= 0.1, "{t2:?}");
        assert!(t2.evidence_dim1, "{t2:?}");
    }
}
