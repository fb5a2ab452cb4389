//! Merges the cover, metric, comb, Benedicks and smoothness criteria into a
//! verdict on the dimension of the cone of positive harmonic functions
//! vanishing on `E`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comb::CombMap;
use crate::cover::{complete_cover, cover_comb_greedy, cover_dyadic_density, cover_from_gaps, pull_back_comb_cover};
use crate::cover::{BlockTag, CombGreedy, CoverSystem};
use crate::criteria::{
    geometric_tail, growth_per_decade, metric_test_remark3, partial_sums, remark1_report, theorem1_term,
    theorem1_test, theorem2_test, LadderPoint, Remark1Report, Remark3Report, Theorem1Report, Theorem2Report,
    Thresholds,
};
use crate::dirichlet::{benedicks_scan, ScanOptions};
use crate::equilibrium::EquilibriumConfig;
use crate::error::{Error, Result};
use crate::realsets::{gaps_to_compact, GapSystem, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cover,
    Metric,
    Comb,
    Benedicks,
    Smoothness,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Cover, Method::Metric, Method::Comb, Method::Benedicks, Method::Smoothness];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cover => "cover",
            Method::Metric => "metric",
            Method::Comb => "comb",
            Method::Benedicks => "benedicks",
            Method::Smoothness => "smoothness",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Domain { family: "classify", reason: format!("unknown method `{s}`") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Dim1,
    Dim2,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Dim1 => "dim1",
            Verdict::Dim2 => "dim2",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub methods: Vec<Method>,
    pub truncations: Vec<f64>,
    pub thresholds: Thresholds,
    /// Chebyshev nodes per component for capacity and comb solves.
    pub nodes: usize,
    pub scan: ScanOptions,
    /// Growth of the Benedicks integral per decade counted as divergence.
    pub benedicks_growth: f64,
    /// Increment of the Benedicks integral per decade counted as flat.
    pub benedicks_flat: f64,
    /// Grid spacing of the comb greedy on `[0, π]`.
    pub comb_spacing: f64,
    /// Probe height `y = factor · |M(R)|` of the smoothness ratio after
    /// reduction by `M`.
    pub smoothness_factor: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            methods: Method::ALL.to_vec(),
            truncations: vec![1e2, 1e3, 1e4],
            thresholds: Thresholds::default(),
            nodes: 64,
            scan: ScanOptions::default(),
            benedicks_growth: 0.05,
            benedicks_flat: 0.01,
            comb_spacing: std::f64::consts::PI / 32.0,
            smoothness_factor: 10.0,
        }
    }
}

/// One piece of evidence for a dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub method: Method,
    pub criterion: String,
    pub supports: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResults {
    /// `dyadic_density` or `gaps` when the density targets were unreachable.
    pub construction: String,
    pub blocks: usize,
    pub exempt: usize,
    pub theorem1: Theorem1Report,
    pub theorem2: Option<Theorem2Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResults {
    pub remark1: Remark1Report,
    pub remark3: Remark3Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombResults {
    pub slits: usize,
    /// Slits whose height is below the potential resolution, kept at 0.
    pub unresolved: usize,
    pub dense: usize,
    pub comb: usize,
    pub plain: usize,
    pub theorem1: Theorem1Report,
    pub theorem2: Option<Theorem2Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenedicksResults {
    pub ladder: Vec<LadderPoint>,
    pub samples: usize,
    pub growth_per_decade: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessPoint {
    pub radius: f64,
    pub y: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessResults {
    pub ladder: Vec<SmoothnessPoint>,
    pub growth_per_decade: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub generator: Option<String>,
    pub gaps: usize,
    pub options: ClassifyOptions,
    pub half_line_gap: Option<Side>,
    pub cover: Option<CoverResults>,
    pub metric: Option<MetricResults>,
    pub comb: Option<CombResults>,
    pub benedicks: Option<BenedicksResults>,
    pub smoothness: Option<SmoothnessResults>,
    pub evidence: Vec<Evidence>,
    pub verdict: Verdict,
    pub rationale: String,
}

impl ClassificationReport {
    /// Named `(R, partial_sum)` ladders for plotting.
    pub fn ladders(&self) -> Vec<(String, Vec<LadderPoint>)> {
        let mut out = Vec::new();
        if let Some(c) = &self.cover {
            out.push(("cover_theorem1".to_string(), c.theorem1.ladder.clone()));
            if let Some(t2) = &c.theorem2 {
                out.push(("cover_theorem2".to_string(), t2.ladder.clone()));
            }
        }
        if let Some(m) = &self.metric {
            out.push(("metric_remark3".to_string(), m.remark3.ladder.clone()));
        }
        if let Some(c) = &self.comb {
            out.push(("comb_theorem1".to_string(), c.theorem1.ladder.clone()));
            if let Some(t2) = &c.theorem2 {
                out.push(("comb_theorem2".to_string(), t2.ladder.clone()));
            }
        }
        if let Some(b) = &self.benedicks {
            out.push(("benedicks".to_string(), b.ladder.clone()));
        }
        if let Some(s) = &self.smoothness {
            let pts = s.ladder.iter().map(|p| LadderPoint { radius: p.radius, partial_sum: p.ratio }).collect();
            out.push(("smoothness".to_string(), pts));
        }
        out
    }
}

fn evidence(method: Method, criterion: &str, supports: Verdict, detail: String) -> Evidence {
    Evidence { method, criterion: criterion.to_string(), supports, detail }
}

fn dyadic_or_gaps(e: &GapSystem, r_max: f64) -> (CoverSystem, String) {
    match cover_dyadic_density(e, r_max) {
        Ok(c) => (c, "dyadic_density".to_string()),
        Err(_) => (cover_from_gaps(&e.truncate(r_max)), "gaps".to_string()),
    }
}

fn series_evidence(
    method: Method,
    t1: &Theorem1Report,
    t2: Option<&Theorem2Report>,
    out: &mut Vec<Evidence>,
) {
    if t1.evidence_dim2 {
        out.push(evidence(
            method,
            "capacity series converges",
            Verdict::Dim2,
            format!("ratio infimum {:.4e}, fitted tail {:.4e}", t1.ratio_min.last().unwrap_or(&1.0), t1.tail_estimate),
        ));
    }
    if let Some(t2) = t2.filter(|t| t.evidence_dim1) {
        out.push(evidence(
            method,
            "capacity series diverges",
            Verdict::Dim1,
            format!(
                "ratio supremum {:.4e}, growth {:.4e} per decade",
                t2.ratio_max.last().unwrap_or(&0.0),
                t2.growth_per_decade
            ),
        ));
    }
}

fn run_cover(e: &GapSystem, o: &ClassifyOptions, cfg: &EquilibriumConfig, ev: &mut Vec<Evidence>) -> Result<CoverResults> {
    let r_max = *o.truncations.last().unwrap();
    let (cover, construction) = dyadic_or_gaps(e, r_max);
    let theorem1 = theorem1_test(e, &cover, &o.truncations, cfg, &o.thresholds)?;
    let theorem2 = theorem2_test(e, &cover, &o.truncations, cfg, &o.thresholds)?;
    series_evidence(Method::Cover, &theorem1, Some(&theorem2), ev);
    Ok(CoverResults { construction, blocks: cover.len(), exempt: cover.exempt.len(), theorem1, theorem2: Some(theorem2) })
}

fn run_metric(e: &GapSystem, o: &ClassifyOptions, ev: &mut Vec<Evidence>) -> Result<MetricResults> {
    let r_max = *o.truncations.last().unwrap();
    let (cover, _) = dyadic_or_gaps(e, r_max);
    let tail = geometric_tail(&partial_sums(&cover, &o.truncations, theorem1_term));
    let remark1 = remark1_report(e, &cover, r_max, tail, &o.thresholds);
    let remark3 = metric_test_remark3(e, &o.truncations, &o.thresholds)?;
    if remark1.evidence_dim2 {
        ev.push(evidence(
            Method::Metric,
            "density bounded below",
            Verdict::Dim2,
            format!("density infimum {:.4e}, fitted tail {:.4e}", remark1.density_min, tail),
        ));
    }
    if remark3.evidence_dim2 {
        ev.push(evidence(
            Method::Metric,
            "theta integral converges",
            Verdict::Dim2,
            format!("increment ratio {:.4e}", remark3.increment_ratio.unwrap_or(f64::NAN)),
        ));
    }
    Ok(MetricResults { remark1, remark3 })
}

fn run_comb(e: &GapSystem, o: &ClassifyOptions, cfg: &EquilibriumConfig, ev: &mut Vec<Evidence>) -> Result<CombResults> {
    let r_max = *o.truncations.last().unwrap();
    let er = e.truncate(r_max);
    let (f, m) = gaps_to_compact(&er, None)?;
    let map = CombMap::new(&f, cfg)?;
    let (cd, unresolved) = map.comb_data_resolved()?;
    let comb_cover = cover_comb_greedy(&cd, &CombGreedy::new(o.comb_spacing))?;
    let count = |t: BlockTag| comb_cover.blocks.iter().filter(|b| b.tag == t).count();
    let (dense, comb, plain) = (count(BlockTag::Dense), count(BlockTag::Comb), count(BlockTag::Plain));
    let cover = complete_cover(&pull_back_comb_cover(&comb_cover, &map, &m), &er);
    let theorem1 = theorem1_test(e, &cover, &o.truncations, cfg, &o.thresholds)?;
    let theorem2 = theorem2_test(e, &cover, &o.truncations, cfg, &o.thresholds)?;
    series_evidence(Method::Comb, &theorem1, Some(&theorem2), ev);
    Ok(CombResults { slits: cd.slits.len(), unresolved: unresolved.len(), dense, comb, plain, theorem1, theorem2: Some(theorem2) })
}

fn run_benedicks(e: &GapSystem, o: &ClassifyOptions, ev: &mut Vec<Evidence>) -> Result<BenedicksResults> {
    let scan = benedicks_scan(e, &o.truncations, &o.scan)?;
    let ladder: Vec<LadderPoint> =
        scan.ladder.iter().map(|&(radius, partial_sum)| LadderPoint { radius, partial_sum }).collect();
    let growth = growth_per_decade(&ladder);
    let increasing = ladder.windows(2).all(|w| w[1].partial_sum > w[0].partial_sum);
    if ladder.len() >= 2 && increasing && growth >= o.benedicks_growth {
        ev.push(evidence(Method::Benedicks, "integral diverges", Verdict::Dim1, format!("growth {growth:.4e} per decade")));
    } else if ladder.len() >= 2 && growth < o.benedicks_flat {
        ev.push(evidence(Method::Benedicks, "integral flattens", Verdict::Dim2, format!("growth {growth:.4e} per decade")));
    }
    Ok(BenedicksResults { ladder, samples: scan.samples.len(), growth_per_decade: growth })
}

/// Ratio `g(iy)/y` at the image of `{|x| = R}` after the reduction; only
/// unbounded growth is counted as evidence.
fn run_smoothness(
    e: &GapSystem,
    o: &ClassifyOptions,
    cfg: &EquilibriumConfig,
    ev: &mut Vec<Evidence>,
) -> Result<SmoothnessResults> {
    let mut ladder = Vec::new();
    for &r in &o.truncations {
        let er = e.truncate(r);
        if er.gaps().is_empty() {
            continue;
        }
        let (f, m) = gaps_to_compact(&er, None)?;
        let y = o.smoothness_factor * m.apply_real(r).abs();
        let ratio = CombMap::new(&f, cfg)?.smoothness_ratio(&[y])?[0];
        ladder.push(SmoothnessPoint { radius: r, y, ratio });
    }
    let pts: Vec<LadderPoint> = ladder.iter().map(|p| LadderPoint { radius: p.radius, partial_sum: p.ratio }).collect();
    let growth = growth_per_decade(&pts);
    if pts.len() >= 2 && growth >= o.thresholds.growth_per_decade {
        ev.push(evidence(
            Method::Smoothness,
            "ratio unbounded at the image of infinity",
            Verdict::Dim1,
            format!("growth {growth:.4e} per decade"),
        ));
    }
    Ok(SmoothnessResults { ladder, growth_per_decade: growth })
}

fn merge(ev: &[Evidence]) -> (Verdict, String) {
    let d1 = ev.iter().filter(|e| e.supports == Verdict::Dim1).count();
    let d2 = ev.iter().filter(|e| e.supports == Verdict::Dim2).count();
    let lines: Vec<String> = ev.iter().map(|e| format!("{} [{}]: {} ({})", e.supports, e.method, e.criterion, e.detail)).collect();
    let verdict = match (d1 > 0, d2 > 0) {
        (true, false) => Verdict::Dim1,
        (false, true) => Verdict::Dim2,
        _ => Verdict::Inconclusive,
    };
    let head = match (d1 > 0, d2 > 0) {
        (true, true) => "conflicting evidence".to_string(),
        (false, false) => "no criterion reached its threshold".to_string(),
        _ => format!("{d1} criteria support dim1, {d2} support dim2"),
    };
    let rationale = if lines.is_empty() { head } else { format!("{head}; {}", lines.join("; ")) };
    (verdict, rationale)
}

/// Runs the selected criteria on `E` over the truncation ladder and merges
/// their evidence; disagreement gives `inconclusive`.
pub fn classify(e: &GapSystem, options: &ClassifyOptions) -> Result<ClassificationReport> {
    let o = options;
    if o.truncations.is_empty() || o.truncations.windows(2).any(|w| !(w[0] < w[1])) || !(o.truncations[0] > 1.0) {
        return Err(Error::Domain { family: "classify", reason: "truncations must exceed 1 and increase".into() });
    }
    if o.methods.is_empty() {
        return Err(Error::Domain { family: "classify", reason: "no method selected".into() });
    }
    let mut report = ClassificationReport {
        generator: e.generator().map(str::to_string),
        gaps: e.gaps().len(),
        options: o.clone(),
        half_line_gap: e.half_line_gap(),
        cover: None,
        metric: None,
        comb: None,
        benedicks: None,
        smoothness: None,
        evidence: Vec::new(),
        verdict: Verdict::Inconclusive,
        rationale: String::new(),
    };
    if let Some(side) = report.half_line_gap {
        report.verdict = Verdict::Dim1;
        report.rationale = format!("E* contains a half-line on the {side:?} side");
        return Ok(report);
    }
    let cfg = EquilibriumConfig::with_nodes(o.nodes);
    let has = |m: Method| o.methods.contains(&m);
    let mut ev = Vec::new();
    if has(Method::Cover) {
        report.cover = Some(run_cover(e, o, &cfg, &mut ev)?);
    }
    if has(Method::Metric) {
        report.metric = Some(run_metric(e, o, &mut ev)?);
    }
    let has_finite_gaps = !e.truncate(*o.truncations.last().unwrap()).gaps().is_empty();
    if has(Method::Comb) && has_finite_gaps {
        report.comb = Some(run_comb(e, o, &cfg, &mut ev)?);
    }
    if has(Method::Benedicks) {
        report.benedicks = Some(run_benedicks(e, o, &mut ev)?);
    }
    if has(Method::Smoothness) && has_finite_gaps {
        report.smoothness = Some(run_smoothness(e, o, &cfg, &mut ev)?);
    }
    let (verdict, rationale) = merge(&ev);
    report.evidence = ev;
    report.verdict = verdict;
    report.rationale = rationale;
    Ok(report)
}
