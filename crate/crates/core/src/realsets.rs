//! Interval-union compacta, Denjoy gap systems and the Möbius reduction
//! between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How [`IntervalSet::normalize_with`] treats touching and degenerate input.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizeOptions {
    /// Reject intervals that share an endpoint instead of merging them.
    pub strict: bool,
    /// Permit `lo == hi` components.
    pub allow_points: bool,
}

/// A compact subset of the real line given as finitely many disjoint closed
/// intervals, sorted left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalSet", into = "RawIntervalSet")]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawIntervalSet {
    intervals: Vec<[f64; 2]>,
}

impl TryFrom<RawIntervalSet> for IntervalSet {
    type Error = Error;

    fn try_from(raw: RawIntervalSet) -> Result<Self> {
        normalize(raw.intervals.iter().map(|p| (p[0], p[1])))
    }
}

impl From<IntervalSet> for RawIntervalSet {
    fn from(set: IntervalSet) -> Self {
        RawIntervalSet {
            intervals: set.intervals.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// Sort and merge raw intervals into an [`IntervalSet`]. Overlapping and
/// touching intervals are merged.
pub fn normalize<I>(raw: I) -> Result<IntervalSet>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    IntervalSet::normalize_with(raw, NormalizeOptions::default())
}

impl IntervalSet {
    pub fn normalize_with<I>(raw: I, opts: NormalizeOptions) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut items: Vec<(f64, f64)> = raw.into_iter().collect();
        if items.is_empty() {
            return Err(Error::Empty("interval list"));
        }
        for &(lo, hi) in &items {
            if !lo.is_finite() || !hi.is_finite() || lo > hi || (lo == hi && !opts.allow_points) {
                return Err(Error::InvalidInterval { lo, hi });
            }
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(items.len());
        for (lo, hi) in items {
            match out.last_mut() {
                Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                Some(last) if lo == last.1 => {
                    if opts.strict {
                        return Err(Error::Touching(lo));
                    }
                    last.1 = last.1.max(hi);
                }
                _ => out.push((lo, hi)),
            }
        }
        Ok(IntervalSet { intervals: out })
    }

    /// A single closed interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        normalize([(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Convex hull `[min, max]`.
    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals[self.intervals.len() - 1].1)
    }

    pub fn diameter(&self) -> f64 {
        let (a, b) = self.hull();
        b - a
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Bounded open gaps between consecutive components.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// `|F ∩ [a, b]|`.
    pub fn measure_in(&self, a: f64, b: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi.min(b) - lo.max(a)).max(0.0))
            .sum()
    }

    /// `F ∩ [a, b]` with zero-length pieces dropped; `None` when nothing of
    /// positive length remains.
    pub fn restrict(&self, a: f64, b: f64) -> Option<IntervalSet> {
        let pieces: Vec<(f64, f64)> = self
            .intervals
            .iter()
            .filter_map(|&(lo, hi)| {
                let (l, h) = (lo.max(a), hi.min(b));
                (h > l).then_some((l, h))
            })
            .collect();
        (!pieces.is_empty()).then_some(IntervalSet { intervals: pieces })
    }

    /// Image under `x ↦ scale·x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<IntervalSet> {
        normalize(self.intervals.iter().map(|&(a, b)| {
            let (u, v) = (scale * a + shift, scale * b + shift);
            (u.min(v), u.max(v))
        }))
    }

    /// Affine map sending the hull onto `[-1, 1]`, as `(scale, shift)`.
    pub fn to_unit_hull(&self) -> (f64, f64) {
        let (a, b) = self.hull();
        let scale = 2.0 / (b - a);
        (scale, -(a + b) / (b - a))
    }

    /// Smallest gap between consecutive components, with its left index.
    pub fn min_separation(&self) -> Option<(usize, f64)> {
        self.gaps()
            .iter()
            .enumerate()
            .map(|(i, &(c, d))| (i, d - c))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Description of a Denjoy complement `E = R ∖ ∪ (c_j, d_j)` by its open gaps.
///
/// An unbounded `E` is handled through its finite gap list together with an
/// optional truncation radius `R`; beyond `R` everything belongs to `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGapSystem", into = "RawGapSystem")]
pub struct GapSystem {
    gaps: Vec<(f64, f64)>,
    origin_margin: f64,
    truncation: Option<f64>,
    generator: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawGapSystem {
    // `null` endpoints stand for ±∞.
    gaps: Vec<[Option<f64>; 2]>,
    origin_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<String>,
}

impl TryFrom<RawGapSystem> for GapSystem {
    type Error = Error;

    fn try_from(raw: RawGapSystem) -> Result<Self> {
        let mut sys = GapSystem::new(
            raw.gaps
                .iter()
                .map(|g| (g[0].unwrap_or(f64::NEG_INFINITY), g[1].unwrap_or(f64::INFINITY)))
                .collect(),
            raw.origin_margin,
            raw.truncation,
        )?;
        sys.generator = raw.generator;
        Ok(sys)
    }
}

impl From<GapSystem> for RawGapSystem {
    fn from(sys: GapSystem) -> Self {
        RawGapSystem {
            gaps: sys.gaps.iter().map(|&(c, d)| [c.is_finite().then_some(c), d.is_finite().then_some(d)]).collect(),
            origin_margin: sys.origin_margin,
            truncation: sys.truncation,
            generator: sys.generator,
        }
    }
}

impl GapSystem {
    /// Validates ordering, disjointness and the origin margin. Gaps are sorted
    /// first; empty gaps (`c == d`) are dropped.
    pub fn new(mut gaps: Vec<(f64, f64)>, origin_margin: f64, truncation: Option<f64>) -> Result<Self> {
        if !(origin_margin > 0.0) {
            return Err(Error::InvalidGaps(format!("origin margin {origin_margin} must be positive")));
        }
        if let Some(r) = truncation {
            if !(r > origin_margin) {
                return Err(Error::InvalidGaps(format!("truncation {r} must exceed the origin margin")));
            }
        }
        gaps.retain(|&(c, d)| d != c);
        gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(c, d) in &gaps {
            if c.is_nan() || d.is_nan() || c == f64::INFINITY || d == f64::NEG_INFINITY || c > d {
                return Err(Error::InvalidGaps(format!("bad gap ({c}, {d})")));
            }
            if d > -origin_margin && c < origin_margin {
                return Err(Error::InvalidGaps(format!(
                    "gap ({c}, {d}) meets [-{origin_margin}, {origin_margin}]"
                )));
            }
        }
        for w in gaps.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::InvalidGaps(format!(
                    "gaps ({}, {}) and ({}, {}) overlap or touch",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(GapSystem { gaps, origin_margin, truncation, generator: None })
    }

    /// `E = R`.
    pub fn whole_line() -> Self {
        GapSystem { gaps: Vec::new(), origin_margin: 1.0, truncation: None, generator: None }
    }

    pub fn with_generator(mut self, generator: impl Into<String>) -> Self {
        self.generator = Some(generator.into());
        self
    }

    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    pub fn origin_margin(&self) -> f64 {
        self.origin_margin
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn generator(&self) -> Option<&str> {
        self.generator.as_deref()
    }

    /// The system `E_R = E ∪ {|x| ≥ R}`: gaps clipped to `(-R, R)`.
    pub fn truncate(&self, radius: f64) -> GapSystem {
        let r = self.truncation.map_or(radius, |t| t.min(radius));
        let gaps = self
            .gaps
            .iter()
            .filter_map(|&(c, d)| {
                let (c, d) = (c.max(-r), d.min(r));
                (d > c).then_some((c, d))
            })
            .collect();
        GapSystem { gaps, origin_margin: self.origin_margin, truncation: Some(r), generator: self.generator.clone() }
    }

    /// Closures of the gaps as a compact set (the closure of `E*`).
    pub fn complement(&self) -> Option<IntervalSet> {
        (!self.gaps.is_empty()).then(|| IntervalSet { intervals: self.gaps.clone() })
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.gaps.iter().any(|&(c, d)| c < x && x < d)
    }

    /// `|E* ∩ [a, b]|`.
    pub fn gap_measure_in(&self, a: f64, b: f64) -> f64 {
        self.gaps.iter().map(|&(c, d)| (d.min(b) - c.max(a)).max(0.0)).sum()
    }

    /// `E ∩ [a, b]` with zero-length pieces dropped.
    pub fn restrict(&self, a: f64, b: f64) -> Option<IntervalSet> {
        let mut pieces = Vec::new();
        let mut cursor = a;
        for &(c, d) in &self.gaps {
            if d <= a || c >= b {
                continue;
            }
            if c > cursor {
                pieces.push((cursor, c));
            }
            cursor = cursor.max(d);
        }
        if b > cursor {
            pieces.push((cursor, b));
        }
        (!pieces.is_empty()).then_some(IntervalSet { intervals: pieces })
    }

    /// Whether a gap reaches the truncation radius on the right or left,
    /// i.e. the truncated `E` is bounded on that side.
    pub fn half_line_gap(&self) -> Option<Side> {
        let last = self.gaps.last()?;
        let first = self.gaps.first()?;
        if last.1 == f64::INFINITY {
            Some(Side::Right)
        } else if first.0 == f64::NEG_INFINITY {
            Some(Side::Left)
        } else {
            None
        }
    }

    /// Index of the gap closest to the origin.
    pub fn nearest_gap(&self) -> Option<usize> {
        self.gaps
            .iter()
            .enumerate()
            .map(|(i, &(c, d))| (i, if c > 0.0 { c } else { -d }))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Anything that can report its Lebesgue measure inside a window.
pub trait RealSet {
    fn measure_in(&self, a: f64, b: f64) -> f64;
}

impl RealSet for IntervalSet {
    fn measure_in(&self, a: f64, b: f64) -> f64 {
        IntervalSet::measure_in(self, a, b)
    }
}

impl RealSet for GapSystem {
    fn measure_in(&self, a: f64, b: f64) -> f64 {
        (b - a) - self.gap_measure_in(a, b)
    }
}

/// `|S ∩ [a, b]| / (b - a)`, computed exactly from the interval structure.
pub fn lebesgue_density<S: RealSet + ?Sized>(set: &S, a: f64, b: f64) -> f64 {
    assert!(a < b, "lebesgue_density needs a < b");
    (set.measure_in(a, b) / (b - a)).clamp(0.0, 1.0)
}

/// `θ_E(t) = |E* ∩ [-t, t]|`.
pub fn theta_e(e: &GapSystem, t: f64) -> f64 {
    assert!(t > 0.0, "theta_e needs t > 0");
    e.gap_measure_in(-t, t)
}

/// Real Möbius map `w = (p z + q) / (r z + s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl MobiusMap {
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self> {
        let det = p * s - q * r;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::DegenerateReduction(format!("determinant {det}")));
        }
        Ok(MobiusMap { p, q, r, s })
    }

    pub fn determinant(&self) -> f64 {
        self.p * self.s - self.q * self.r
    }

    /// Image of a real point; the pole maps to `±inf`.
    pub fn apply_real(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return if self.r == 0.0 { x * self.p.signum() * self.s.signum() } else { self.p / self.r };
        }
        (self.p * x + self.q) / (self.r * x + self.s)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.p + self.q) / (z * self.r + self.s)
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { p: self.s, q: -self.q, r: -self.r, s: self.p }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            p: self.p * other.p + self.q * other.r,
            q: self.p * other.q + self.q * other.s,
            r: self.r * other.p + self.s * other.r,
            s: self.r * other.q + self.s * other.s,
        }
    }

    /// The reduction `w = (d0 - c0) / (2z - c0 - d0)` for a pivot gap.
    pub fn for_pivot(c0: f64, d0: f64) -> Result<Self> {
        if !(d0 > c0) || !c0.is_finite() || !d0.is_finite() {
            return Err(Error::DegenerateReduction(format!("pivot gap ({c0}, {d0})")));
        }
        MobiusMap::new(0.0, d0 - c0, 2.0, -(c0 + d0))
    }
}

/// Send a (finite) gap system to a compact set `F ⊂ [-1, 1]` with `±1, 0 ∈ F`.
///
/// The pivot gap goes to the outside of `[-1, 1]` and infinity to the origin.
/// Returns `F` and the map used, so results can be pulled back with
/// [`MobiusMap::inverse`].
pub fn gaps_to_compact(e: &GapSystem, pivot: Option<usize>) -> Result<(IntervalSet, MobiusMap)> {
    let idx = match pivot {
        Some(i) => i,
        None => e.nearest_gap().ok_or_else(|| Error::DegenerateReduction("no gaps".into()))?,
    };
    let &(c0, d0) = e
        .gaps()
        .get(idx)
        .ok_or_else(|| Error::DegenerateReduction(format!("pivot index {idx} out of range")))?;
    let map = MobiusMap::for_pivot(c0, d0)?;
    let mut images: Vec<(f64, f64)> = e
        .gaps()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, &(c, d))| {
            // decreasing on each side of the pole
            let (u, v) = (map.apply_real(d), map.apply_real(c));
            (u.min(v), u.max(v))
        })
        .collect();
    images.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pieces = Vec::with_capacity(images.len() + 1);
    let mut cursor = -1.0;
    for (u, v) in images {
        if u > cursor {
            pieces.push((cursor, u));
        }
        cursor = cursor.max(v);
    }
    if cursor < 1.0 {
        pieces.push((cursor, 1.0));
    }
    let set = normalize(pieces).map_err(|_| Error::DegenerateReduction("empty image".into()))?;
    Ok((set, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize([(0.0, 1.0), (0.5, 2.0)]).unwrap().intervals(), &[(0.0, 2.0)]);
        assert_eq!(normalize([(3.0, 4.0), (1.0, 2.0)]).unwrap().intervals(), &[(1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(normalize([(0.0, 1.0), (1.0, 2.0)]).unwrap().intervals(), &[(0.0, 2.0)]);
        assert!(normalize(Vec::<(f64, f64)>::new()).is_err());
        let strict = NormalizeOptions { strict: true, ..Default::default() };
        assert!(matches!(
            IntervalSet::normalize_with([(0.0, 1.0), (1.0, 2.0)], strict),
            Err(Error::Touching(_))
        ));
        assert!(normalize([(1.0, 1.0)]).is_err());
        let pts = NormalizeOptions { allow_points: true, ..Default::default() };
        assert!(IntervalSet::normalize_with([(1.0, 1.0)], pts).is_ok());
    }

    #[test]
    fn single_gap_maps_to_full_interval() {
        let e = GapSystem::new(vec![(-1.0, 1.0)], 0.5, None);
        // the origin lies in this gap, so it is rejected as a Denjoy description
        assert!(e.is_err());
        let e = GapSystem::new(vec![(1.0, 3.0)], 0.5, None).unwrap();
        let (f, _) = gaps_to_compact(&e, None).unwrap();
        assert_eq!(f.intervals(), &[(-1.0, 1.0)]);
    }

    #[test]
    fn two_gaps_give_one_interior_gap() {
        let e = GapSystem::new(vec![(1.0, 2.0), (4.0, 5.0)], 0.5, None).unwrap();
        let (f, map) = gaps_to_compact(&e, Some(0)).unwrap();
        assert_eq!(f.len(), 2);
        // w = 1 / (2z - 3)
        let gap = f.gaps()[0];
        assert!((gap.0 - 1.0 / 7.0).abs() < 1e-15);
        assert!((gap.1 - 1.0 / 5.0).abs() < 1e-15);
        assert_eq!(f.hull(), (-1.0, 1.0));
        assert!(f.contains(0.0));
        assert!((map.apply_real(1.0) + 1.0).abs() < 1e-15);
        assert!((map.apply_real(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_pivot_rejected() {
        assert!(MobiusMap::for_pivot(1.0, 1.0).is_err());
        assert!(MobiusMap::for_pivot(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn density_examples() {
        let whole = GapSystem::whole_line();
        assert_eq!(lebesgue_density(&whole, 0.0, 1.0), 1.0);
        let e = GapSystem::new(vec![(2.0, 3.0)], 1.0, None).unwrap();
        assert_eq!(lebesgue_density(&e, 2.0, 3.0), 0.0);
        assert_eq!(lebesgue_density(&e, 1.0, 3.0), 0.5);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_e(&GapSystem::whole_line(), 5.0), 0.0);
        let e = GapSystem::new(vec![(1.0, 2.0)], 0.5, None).unwrap();
        assert_eq!(theta_e(&e, 3.0), 1.0);
        assert_eq!(theta_e(&e, 1.5), 0.5);
    }

    #[test]
    fn restrict_and_truncate() {
        let e = GapSystem::new(vec![(2.0, 3.0), (5.0, 9.0)], 1.0, None).unwrap();
        let r = e.restrict(0.0, 6.0).unwrap();
        assert_eq!(r.intervals(), &[(0.0, 2.0), (3.0, 5.0)]);
        let t = e.truncate(6.0);
        assert_eq!(t.gaps(), &[(2.0, 3.0), (5.0, 6.0)]);
        assert_eq!(t.half_line_gap(), None);
        let ray = GapSystem::new(vec![(2.0, 3.0), (5.0, f64::INFINITY)], 1.0, None).unwrap();
        assert_eq!(ray.half_line_gap(), Some(Side::Right));
        assert_eq!(ray.truncate(20.0).gaps(), &[(2.0, 3.0), (5.0, 20.0)]);
        let text = serde_json::to_string(&ray).unwrap();
        assert!(text.contains("[5.0,null]"));
        assert_eq!(serde_json::from_str::<GapSystem>(&text).unwrap(), ray);
    }

    #[test]
    fn json_shapes() {
        let s: IntervalSet = serde_json::from_str(r#"{"intervals": [[-1,1]]}"#).unwrap();
        assert_eq!(s.intervals(), &[(-1.0, 1.0)]);
        let g: GapSystem =
            serde_json::from_str(r#"{"gaps": [[2,3]], "origin_margin": 1, "truncation": 100}"#).unwrap();
        assert_eq!(g.truncation(), Some(100.0));
        assert!(serde_json::from_str::<GapSystem>(r#"{"gaps": [[-1,3]], "origin_margin": 0.5}"#).is_err());
    }

    fn raw_intervals() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-50.0f64..50.0, 0.01f64..5.0), 1..8)
            .prop_map(|v| v.into_iter().map(|(a, l)| (a, a + l)).collect())
    }

    fn gap_system() -> impl Strategy<Value = GapSystem> {
        prop::collection::vec((0.05f64..3.0, 0.05f64..3.0, any::<bool>()), 1..8).prop_map(|steps| {
            let (mut right, mut left) = (1.0, -1.0);
            let mut gaps = Vec::new();
            for (space, len, positive) in steps {
                if positive {
                    gaps.push((right + space, right + space + len));
                    right += space + len;
                } else {
                    gaps.push((left - space - len, left - space));
                    left -= space + len;
                }
            }
            GapSystem::new(gaps, 1.0, None).unwrap()
        })
    }

    proptest! {
        #[test]
        fn normalize_idempotent(raw in raw_intervals()) {
            let once = normalize(raw).unwrap();
            let twice = normalize(once.intervals().iter().copied()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn reduction_round_trip(e in gap_system()) {
            let (f, map) = gaps_to_compact(&e, None).unwrap();
            let inv = map.inverse();
            let pivot = e.gaps()[e.nearest_gap().unwrap()];
            for &(c, d) in e.gaps() {
                for x in [c, d] {
                    let back = inv.apply_real(map.apply_real(x));
                    prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
                }
                if (c, d) != pivot {
                    prop_assert!(!f.contains(map.apply_real(0.5 * (c + d))));
                }
            }
            prop_assert!(f.contains(0.0) && f.contains(1.0) && f.contains(-1.0));
        }

        #[test]
        fn theta_monotone_and_bounded(e in gap_system(), ts in prop::collection::vec(0.01f64..40.0, 2..20)) {
            let mut ts = ts;
            ts.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            for t in ts {
                let v = theta_e(&e, t);
                prop_assert!(v >= prev && v <= 2.0 * t);
                prev = v;
            }
        }

        #[test]
        fn densities_complement(e in gap_system(), a in -20.0f64..20.0, len in 0.1f64..20.0) {
            let b = a + len;
            let total = match e.complement() {
                Some(c) => lebesgue_density(&e, a, b) + lebesgue_density(&c, a, b),
                None => lebesgue_density(&e, a, b),
            };
            prop_assert!((total - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
