//! Moduli of curve families: closed-form values and bounds for the standard
//! families, and a finite-volume estimator for quadrilaterals with slits.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comb::CombData;
use crate::equilibrium::{capacity_ratio, capacity_with, EquilibriumConfig};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::realsets::IntervalSet;

/// Named real parameters of a family.
pub type Params = BTreeMap<String, f64>;

/// Curve families with closed-form modulus data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
    Gamma5,
    Gamma6,
    Gamma7,
    Gamma8,
    Gamma9,
    Gamma10,
    Gamma12,
    Gamma13,
    GroetzschMu,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Gamma1,
        Family::Gamma2,
        Family::Gamma3,
        Family::Gamma4,
        Family::Gamma5,
        Family::Gamma6,
        Family::Gamma7,
        Family::Gamma8,
        Family::Gamma9,
        Family::Gamma10,
        Family::Gamma12,
        Family::Gamma13,
        Family::GroetzschMu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gamma1 => "gamma1",
            Family::Gamma2 => "gamma2",
            Family::Gamma3 => "gamma3",
            Family::Gamma4 => "gamma4",
            Family::Gamma5 => "gamma5",
            Family::Gamma6 => "gamma6",
            Family::Gamma7 => "gamma7",
            Family::Gamma8 => "gamma8",
            Family::Gamma9 => "gamma9",
            Family::Gamma10 => "gamma10",
            Family::Gamma12 => "gamma12",
            Family::Gamma13 => "gamma13",
            Family::GroetzschMu => "groetzsch_mu",
        }
    }

    /// The kind of statement available for this family.
    pub fn kind(self) -> BoundKind {
        match self {
            Family::Gamma1 | Family::Gamma2 => BoundKind::Exact,
            Family::Gamma3 | Family::Gamma4 | Family::Gamma7 | Family::Gamma8 | Family::Gamma9 => BoundKind::Lower,
            _ => BoundKind::Upper,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Domain { family: "modulus", reason: format!("unknown family `{s}`") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Lower,
    Upper,
}

/// A modulus value or one-sided bound for a parametrised family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleBound {
    pub family: Family,
    pub params: Params,
    pub value: f64,
    pub kind: BoundKind,
}

fn domain(family: Family, reason: impl Into<String>) -> Error {
    Error::Domain { family: family.name(), reason: reason.into() }
}

fn param(family: Family, params: &Params, key: &str) -> Result<f64> {
    match params.get(key) {
        Some(v) if v.is_finite() => Ok(*v),
        Some(v) => Err(domain(family, format!("parameter {key} = {v} is not finite"))),
        None => Err(domain(family, format!("missing parameter {key}"))),
    }
}

fn require(family: Family, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(domain(family, format!("requires {what}")))
    }
}

fn bound(family: Family, params: &Params, value: f64) -> ModuleBound {
    ModuleBound { family, params: params.clone(), value, kind: family.kind() }
}

/// Upper bound `μ(t) < log(4/t)` for the Grötzsch module.
pub fn groetzsch_mu_upper(t: f64) -> f64 {
    (4.0 / t).ln()
}

/// Exact modulus of the half-ellipse family with foci `a < b` crossing
/// `((a+b)/2, (a+b)/2 + ic)`.
pub fn gamma3_exact(a: f64, b: f64, c: f64) -> Result<f64> {
    require(Family::Gamma3, a < b && c > 0.0, "a < b and c > 0")?;
    let k = 2.0 * c / (b - a);
    Ok((k + (1.0 + k * k).sqrt()).ln() / PI)
}

/// Value or bound for `family` at `params`. Families `gamma12` and `gamma13`
/// carry slit or block lists and go through [`gamma12_upper`] and
/// [`gamma13_upper`].
pub fn module_formula(family: Family, params: &Params) -> Result<ModuleBound> {
    let p = |k: &str| param(family, params, k);
    let value = match family {
        Family::Gamma1 | Family::Gamma2 => {
            let (r1, r2) = (p("r1")?, p("r2")?);
            require(family, 0.0 < r1 && r1 < r2, "0 < r1 < r2")?;
            let l = (r2 / r1).ln();
            if family == Family::Gamma1 {
                l / PI
            } else {
                PI / l
            }
        }
        Family::Gamma3 => {
            let (a, b, c) = (p("a")?, p("b")?, p("c")?);
            require(family, a < b && c > 0.0, "a < b and c > 0")?;
            (1.0 + 4.0 * c * c / ((b - a) * (b - a))).ln() / (2.0 * PI)
        }
        Family::Gamma4 | Family::Gamma5 => {
            let (r, big_r) = (p("r")?, p("R")?);
            require(family, 0.0 < r && r < big_r, "0 < r < R")?;
            let m4 = PI / (4.0 * (4.0 * big_r / r).ln());
            if family == Family::Gamma4 {
                m4
            } else {
                1.0 / (4.0 * m4)
            }
        }
        Family::Gamma6 => {
            let (a, b, c) = (p("a")?, p("b")?, p("c")?);
            require(family, a < b && b < c, "a < b < c")?;
            (16.0 * (c - a) / (c - b)).ln() / PI
        }
        Family::Gamma7 => {
            let a = p("a")?;
            require(family, a > 0.0, "a > 0")?;
            if a >= LN_2 / 2.0 {
                0.5
            } else {
                PI / (2.0 * (12.0 / a).ln())
            }
        }
        Family::Gamma8 => {
            let (b, c) = (p("b")?, p("c")?);
            require(family, 0.0 < b && b < c, "0 < b < c")?;
            let d = c - b;
            if d >= LN_2 / 2.0 {
                0.25
            } else {
                PI / (4.0 * (12.0 / d).ln())
            }
        }
        Family::Gamma9 => {
            let (a, b, c) = (p("a")?, p("b")?, p("c")?);
            require(family, 0.0 < a && a < b && c >= 0.0, "0 < a < b and c >= 0")?;
            ((b * b / (c * c + (b - a) * (b - a))).ln() / (2.0 * PI)).max(0.0)
        }
        Family::Gamma10 => {
            let (a, b, cap_s) = (p("a")?, p("b")?, p("cap_s")?);
            gamma10_value(a, b, cap_s)?
        }
        Family::GroetzschMu => {
            let t = p("t")?;
            require(family, 0.0 < t && t < 1.0, "0 < t < 1")?;
            groetzsch_mu_upper(t)
        }
        Family::Gamma12 | Family::Gamma13 => {
            return Err(domain(family, "takes a slit or block list; use the dedicated bound"));
        }
    };
    Ok(bound(family, params, value))
}

fn gamma10_value(a: f64, b: f64, cap_s: f64) -> Result<f64> {
    let family = Family::Gamma10;
    require(family, 0.0 < a && a < b, "0 < a < b")?;
    require(family, (b / a).ln() < PI / 2.0, "log(b/a) < π/2")?;
    require(family, cap_s > 0.0 && cap_s <= (b - a) / 4.0, "0 < cap(S) <= (b-a)/4")?;
    let c = (PI.exp() + 1.0) / 2.0;
    Ok(2.0 / PI * (c * (b - a) / cap_s).ln())
}

/// Upper bound for the family separating `S ⊂ [a, b]` from the far ray of
/// the sector, with `cap(S)` computed from the equilibrium solver.
pub fn gamma10_upper(a: f64, b: f64, s: &IntervalSet, cfg: &EquilibriumConfig) -> Result<ModuleBound> {
    let family = Family::Gamma10;
    let (lo, hi) = s.hull();
    require(family, a <= lo && hi <= b, "S inside [a, b]")?;
    let cap_s = capacity_with(s, cfg)?;
    let params = Params::from([("a".into(), a), ("b".into(), b), ("cap_s".into(), cap_s)]);
    Ok(bound(family, &params, gamma10_value(a, b, cap_s)?))
}

/// Constant of the slit-annulus bound.
pub const GAMMA12_C: f64 = 1e-5;

/// Upper bound for curves joining `|w| = r` and `|w| = 2R` in the upper
/// half-annulus with vertical slits `[u_j, u_j + i v_j]`.
pub fn gamma12_upper(r: f64, big_r: f64, slits: &[(f64, f64)]) -> Result<ModuleBound> {
    let family = Family::Gamma12;
    require(family, 0.0 < r && r < big_r, "0 < r < R")?;
    let mut feet: Vec<f64> = Vec::with_capacity(slits.len());
    let mut sum = 0.0;
    for &(u, v) in slits {
        if !(r <= u.abs() && u.abs() <= big_r) {
            return Err(domain(family, format!("slit foot {u} outside r <= |u| <= R")));
        }
        if !(0.0 <= v && v <= u.abs()) {
            return Err(domain(family, format!("slit height {v} outside [0, |u|] at u = {u}")));
        }
        feet.push(u);
        sum += (v / u).powi(2);
    }
    feet.sort_by(f64::total_cmp);
    if feet.windows(2).any(|w| w[0] == w[1]) {
        return Err(domain(family, "slit feet must be distinct"));
    }
    let l = (2.0 * big_r / r).ln();
    let mut params = Params::from([("r".into(), r), ("R".into(), big_r)]);
    params.insert("slits".into(), slits.len() as f64);
    Ok(bound(family, &params, (PI * l - GAMMA12_C * sum) / (l * l)))
}

/// Upper bound for the half-annulus family `1 < |z| < T` with blocks
/// `(a_j, b_j)`, given the remaining set `S` and the capacity floor `q`.
pub fn gamma13_upper(
    t: f64,
    s: &IntervalSet,
    blocks: &[(f64, f64)],
    q: f64,
    cfg: &EquilibriumConfig,
) -> Result<ModuleBound> {
    let family = Family::Gamma13;
    require(family, t > 1.0, "T > 1")?;
    require(family, q > 0.0, "q > 0")?;
    let mut sorted = blocks.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut sum = 0.0;
    for (k, &(a, b)) in sorted.iter().enumerate() {
        let inside = (1.0 <= a && b <= t) || (-t <= a && b <= -1.0);
        if !(a < b && inside) {
            return Err(domain(family, format!("block ({a}, {b}) not inside [-T,-1] ∪ [1,T]")));
        }
        if k > 0 && a < sorted[k - 1].1 {
            return Err(domain(family, "blocks overlap"));
        }
        let aspect = (b - a) / a.abs().min(b.abs());
        if aspect >= PI / 2.0 {
            return Err(domain(family, format!("block ({a}, {b}) has aspect {aspect} >= π/2")));
        }
        let ratio = match s.restrict(a, b) {
            Some(part) => capacity_ratio(&part, cfg)? * capacity_ratio_scale(&part, a, b),
            None => 0.0,
        };
        if ratio < q {
            return Err(domain(family, format!("cap(S ∩ [{a}, {b}]) / cap([{a}, {b}]) = {ratio} < q = {q}")));
        }
        sum += aspect * aspect;
    }
    let c = 2.0 / PI * (100.0 / q).ln();
    let l = t.ln();
    let mut params = Params::from([("T".into(), t), ("q".into(), q)]);
    params.insert("blocks".into(), blocks.len() as f64);
    Ok(bound(family, &params, (PI * l + c * sum) / (l * l)))
}

// capacity_ratio compares against the set's own hull; rescale to [a, b].
fn capacity_ratio_scale(part: &IntervalSet, a: f64, b: f64) -> f64 {
    part.diameter() / (b - a)
}

// ---------------------------------------------------------------------------
// Numerical estimator

/// A side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RectSide {
    Bottom,
    Top,
    Left,
    Right,
}

/// Part of a marked arc: a stretch of one rectangle side, or a polyline
/// inside the rectangle acting as an electrode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcPiece {
    /// Omitted bounds extend to the corner.
    Side {
        side: RectSide,
        #[serde(default = "neg_inf", skip_serializing_if = "is_neg_inf")]
        from: f64,
        #[serde(default = "pos_inf", skip_serializing_if = "is_pos_inf")]
        to: f64,
    },
    Curve { curve: Vec<[f64; 2]> },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}
fn pos_inf() -> f64 {
    f64::INFINITY
}
fn is_neg_inf(x: &f64) -> bool {
    *x == f64::NEG_INFINITY
}
fn is_pos_inf(x: &f64) -> bool {
    *x == f64::INFINITY
}

impl ArcPiece {
    pub fn side(side: RectSide, from: f64, to: f64) -> Self {
        ArcPiece::Side { side, from: from.min(to), to: from.max(to) }
    }

    pub fn whole(side: RectSide) -> Self {
        ArcPiece::Side { side, from: f64::NEG_INFINITY, to: f64::INFINITY }
    }
}

/// Rectangle `[x0, x1] × [y0, y1]` with reflecting slits and two marked
/// boundary arcs; the curve family joins `arcs[0]` to `arcs[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuadrilateral")]
pub struct Quadrilateral {
    pub rect: [f64; 4],
    #[serde(default)]
    pub slits: Vec<Vec<[f64; 2]>>,
    pub arcs: [Vec<ArcPiece>; 2],
}

#[derive(Deserialize)]
struct RawQuadrilateral {
    rect: [f64; 4],
    #[serde(default)]
    slits: Vec<Vec<[f64; 2]>>,
    arcs: [Vec<ArcPiece>; 2],
}

impl TryFrom<RawQuadrilateral> for Quadrilateral {
    type Error = Error;

    fn try_from(raw: RawQuadrilateral) -> Result<Self> {
        Quadrilateral::new(raw.rect, raw.slits, raw.arcs)
    }
}

impl Quadrilateral {
    pub fn new(rect: [f64; 4], slits: Vec<Vec<[f64; 2]>>, arcs: [Vec<ArcPiece>; 2]) -> Result<Self> {
        let [x0, x1, y0, y1] = rect;
        if !(x0 < x1 && y0 < y1) || rect.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("bad rectangle {rect:?}")));
        }
        let tol = 1e-9 * (x1 - x0).max(y1 - y0);
        let inside = |p: &[f64; 2]| p[0] >= x0 - tol && p[0] <= x1 + tol && p[1] >= y0 - tol && p[1] <= y1 + tol;
        for s in &slits {
            if s.len() < 2 || !s.iter().all(inside) {
                return Err(Error::Grid("slits need two or more points inside the rectangle".into()));
            }
        }
        for arc in &arcs {
            if arc.is_empty() {
                return Err(Error::Grid("empty marked arc".into()));
            }
            for piece in arc {
                match piece {
                    ArcPiece::Side { from, to, .. } if !(from < to) => {
                        return Err(Error::Grid("arc piece with empty range".into()));
                    }
                    ArcPiece::Curve { curve } if curve.len() < 2 || !curve.iter().all(inside) => {
                        return Err(Error::Grid("arc curves need two or more points inside the rectangle".into()));
                    }
                    _ => {}
                }
            }
        }
        // Side pieces of the two arcs must not overlap.
        for a in &arcs[0] {
            for b in &arcs[1] {
                if let (ArcPiece::Side { side: s1, from: f1, to: t1 }, ArcPiece::Side { side: s2, from: f2, to: t2 }) = (a, b) {
                    if s1 == s2 && f1.max(*f2) < t1.min(*t2) {
                        return Err(Error::Grid("marked arcs overlap".into()));
                    }
                }
            }
        }
        Ok(Quadrilateral { rect, slits, arcs })
    }

    /// Rectangle `[0, w] × [0, h]`; `horizontal` joins the left and right
    /// sides, otherwise the bottom and top.
    pub fn rectangle(w: f64, h: f64, horizontal: bool) -> Result<Self> {
        let arcs = if horizontal {
            [vec![ArcPiece::whole(RectSide::Left)], vec![ArcPiece::whole(RectSide::Right)]]
        } else {
            [vec![ArcPiece::whole(RectSide::Bottom)], vec![ArcPiece::whole(RectSide::Top)]]
        };
        Quadrilateral::new([0.0, w, 0.0, h], Vec::new(), arcs)
    }

    /// The same domain with the complementary pair of sides marked. Only
    /// meaningful when each arc is a whole side.
    pub fn conjugate(&self) -> Result<Self> {
        let flip = |arc: &Vec<ArcPiece>| -> Result<RectSide> {
            match arc.as_slice() {
                [ArcPiece::Side { side, .. }] => Ok(*side),
                _ => Err(Error::Grid("conjugate needs whole-side arcs".into())),
            }
        };
        let (a, b) = (flip(&self.arcs[0])?, flip(&self.arcs[1])?);
        let other = match (a, b) {
            (RectSide::Left, RectSide::Right) | (RectSide::Right, RectSide::Left) => (RectSide::Bottom, RectSide::Top),
            (RectSide::Bottom, RectSide::Top) | (RectSide::Top, RectSide::Bottom) => (RectSide::Left, RectSide::Right),
            _ => return Err(Error::Grid("conjugate needs opposite sides".into())),
        };
        Quadrilateral::new(self.rect, self.slits.clone(), [vec![ArcPiece::whole(other.0)], vec![ArcPiece::whole(other.1)]])
    }

    /// Half-annulus `r1 < |z| < r2` in `H`, as a rectangle in `(log|z|, arg z)`.
    /// `radial` joins the two circular arcs, otherwise the two real segments.
    pub fn half_annulus(r1: f64, r2: f64, radial: bool) -> Result<Self> {
        if !(0.0 < r1 && r1 < r2) {
            return Err(Error::Grid("half annulus needs 0 < r1 < r2".into()));
        }
        let q = Quadrilateral::rectangle(r2.ln() - r1.ln(), PI, radial)?;
        Ok(q.shifted(r1.ln()))
    }

    fn shifted(mut self, dx: f64) -> Self {
        self.rect[0] += dx;
        self.rect[1] += dx;
        self
    }

    /// Crosscuts of `H` joining `(a, b)` to `(c, +∞)`, in log-polar
    /// coordinates centred at `b`.
    pub fn gamma6(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a < b && b < c) {
            return Err(Error::Grid("gamma6 needs a < b < c".into()));
        }
        let (ra, rc) = ((b - a).ln(), (c - b).ln());
        let x0 = ra.min(rc) - LOG_POLAR_PAD;
        let x1 = ra.max(rc) + LOG_POLAR_PAD;
        let arcs = [
            vec![ArcPiece::side(RectSide::Top, x0, ra), ArcPiece::whole(RectSide::Left)],
            vec![ArcPiece::side(RectSide::Bottom, rc, x1), ArcPiece::whole(RectSide::Right)],
        ];
        Quadrilateral::new([x0, x1, 0.0, PI], Vec::new(), arcs)
    }

    /// Crosscuts of `H ∖ ([a, b] × (0, c])` joining `(0, a)` and `(b, +∞)`, in
    /// log-polar coordinates centred at 0.
    pub fn gamma9(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(0.0 < a && a < b && c > 0.0) {
            return Err(Error::Grid("gamma9 needs 0 < a < b and c > 0".into()));
        }
        let (la, lb) = (a.ln(), b.ln());
        let x0 = la - LOG_POLAR_PAD;
        let x1 = 0.5 * (b * b + c * c).ln() + LOG_POLAR_PAD;
        let mut wall = log_polar_segment(a, 0.0, a, c, CURVE_POINTS);
        wall.extend(log_polar_segment(a, c, b, c, CURVE_POINTS).into_iter().skip(1));
        wall.extend(log_polar_segment(b, c, b, 0.0, CURVE_POINTS).into_iter().skip(1));
        let arcs = [
            vec![ArcPiece::side(RectSide::Bottom, x0, la), ArcPiece::whole(RectSide::Left)],
            vec![ArcPiece::side(RectSide::Bottom, lb, x1), ArcPiece::whole(RectSide::Right)],
        ];
        Quadrilateral::new([x0, x1, 0.0, PI], vec![wall], arcs)
    }

    /// Curves joining `|w| = r` and `|w| = 2R` in `H` minus vertical slits
    /// `[u_j, u_j + i v_j]`, in log-polar coordinates.
    pub fn gamma12(r: f64, big_r: f64, slits: &[(f64, f64)]) -> Result<Self> {
        let q = Quadrilateral::half_annulus(r, 2.0 * big_r, true)?;
        let cuts = slits
            .iter()
            .filter(|s| s.1 > 0.0)
            .map(|&(u, v)| log_polar_segment(u, 0.0, u, v, CURVE_POINTS))
            .collect();
        Quadrilateral::new(q.rect, cuts, q.arcs)
    }
}

// Far ends of log-polar strips are held at the limiting boundary value; the
// neglected energy decays like exp(-LOG_POLAR_PAD).
const LOG_POLAR_PAD: f64 = 10.0;
const CURVE_POINTS: usize = 64;

fn log_polar_segment(x0: f64, y0: f64, x1: f64, y1: f64, n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            let (x, y) = (x0 + s * (x1 - x0), y0 + s * (y1 - y0));
            [0.5 * (x * x + y * y).ln(), y.atan2(x)]
        })
        .collect()
}

/// Smallest admissible grid parameter.
pub const MIN_GRID: usize = 65;

/// Diagnostics of a [`numeric_modulus_detail`] run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NumericModulus {
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    pub iterations: usize,
}

/// Modulus of the family joining the marked arcs, Richardson-extrapolated
/// (first order) from grids with `n` and `2n - 1` nodes across the height.
pub fn numeric_modulus(q: &Quadrilateral, n: usize) -> Result<f64> {
    numeric_modulus_detail(q, n).map(|m| m.value)
}

pub fn numeric_modulus_detail(q: &Quadrilateral, n: usize) -> Result<NumericModulus> {
    if n < MIN_GRID {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_GRID });
    }
    let [x0, x1, y0, y1] = q.rect;
    let ny = n;
    let nx = (((x1 - x0) / (y1 - y0)) * (n - 1) as f64).round().max(2.0) as usize + 1;
    let coarse = solve_grid(q, nx, ny, None)?;
    let guess = prolong(&coarse.values, nx, ny);
    let fine = solve_grid(q, 2 * nx - 1, 2 * ny - 1, Some(&guess))?;
    Ok(NumericModulus {
        value: 2.0 * fine.energy - coarse.energy,
        coarse: coarse.energy,
        fine: fine.energy,
        iterations: coarse.iterations + fine.iterations,
    })
}

/// Modulus on a single `nx × ny` grid, without extrapolation.
pub fn grid_modulus(q: &Quadrilateral, nx: usize, ny: usize) -> Result<f64> {
    solve_grid(q, nx, ny, None).map(|s| s.energy)
}

struct GridSolution {
    energy: f64,
    values: Vec<f64>,
    iterations: usize,
}

struct Layout {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
}

impl Layout {
    fn id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy]
    }
    fn col_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = ((a.min(b) - self.x0) / self.hx).floor().max(0.0) as usize;
        let hi = (((a.max(b) - self.x0) / self.hx).ceil().max(0.0) as usize).min(self.nx - 1);
        (lo.min(self.nx - 1), hi)
    }
    fn row_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = ((a.min(b) - self.y0) / self.hy).floor().max(0.0) as usize;
        let hi = (((a.max(b) - self.y0) / self.hy).ceil().max(0.0) as usize).min(self.ny - 1);
        (lo.min(self.ny - 1), hi)
    }
}

// Edge identifiers: horizontal edges from node (i, j) to (i+1, j) get
// 2·id, vertical edges from (i, j) to (i, j+1) get 2·id + 1.
fn edge_id(lay: &Layout, i: usize, j: usize, vertical: bool) -> usize {
    2 * lay.id(i, j) + vertical as usize
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Intersection parameter along `p → q` with segment `a → b`; collinear
/// overlaps report `Some(None)`.
fn hit(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<Option<f64>> {
    let d = sub(q, p);
    let e = sub(b, a);
    let denom = cross(d, e);
    let ap = sub(a, p);
    let scale = (d[0].abs() + d[1].abs()) * (e[0].abs() + e[1].abs());
    let eps = 1e-12;
    if denom.abs() <= 1e-14 * scale {
        if cross(ap, d).abs() > 1e-12 * (d[0].abs() + d[1].abs()) * (ap[0].abs() + ap[1].abs() + scale.sqrt()) {
            return None;
        }
        let dd = d[0] * d[0] + d[1] * d[1];
        let s0 = (ap[0] * d[0] + ap[1] * d[1]) / dd;
        let bp = sub(b, p);
        let s1 = (bp[0] * d[0] + bp[1] * d[1]) / dd;
        return if s0.max(s1) >= -eps && s0.min(s1) <= 1.0 + eps { Some(None) } else { None };
    }
    let s = cross(ap, e) / denom;
    let t = cross(ap, d) / denom;
    if (-eps..=1.0 + eps).contains(&s) && (-eps..=1.0 + eps).contains(&t) {
        Some(Some(s.clamp(0.0, 1.0)))
    } else {
        None
    }
}

// Visit every grid edge near segment a → b.
fn for_edges_near<F: FnMut(usize, usize, bool)>(lay: &Layout, a: [f64; 2], b: [f64; 2], mut f: F) {
    let (i0, i1) = lay.col_range(a[0], b[0]);
    let (j0, j1) = lay.row_range(a[1], b[1]);
    for j in j0..=j1 {
        for i in i0..=i1 {
            if i + 1 < lay.nx {
                f(i, j, false);
            }
            if j + 1 < lay.ny {
                f(i, j, true);
            }
        }
    }
}

fn edge_ends(lay: &Layout, i: usize, j: usize, vertical: bool) -> (usize, usize, [f64; 2], [f64; 2]) {
    let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
    (lay.id(i, j), lay.id(i2, j2), lay.point(i, j), lay.point(i2, j2))
}

fn solve_grid(q: &Quadrilateral, nx: usize, ny: usize, guess: Option<&[f64]>) -> Result<GridSolution> {
    let [x0, x1, y0, y1] = q.rect;
    let lay = Layout { nx, ny, x0, y0, hx: (x1 - x0) / (nx - 1) as f64, hy: (y1 - y0) / (ny - 1) as f64 };
    let nodes = nx * ny;
    let tol = 1e-9 * lay.hx.min(lay.hy);

    let mut fixed: Vec<Option<f64>> = vec![None; nodes + 2];
    fixed[nodes] = Some(0.0);
    fixed[nodes + 1] = Some(1.0);

    // Side pieces of the marked arcs.
    for (value, arc) in q.arcs.iter().enumerate() {
        for piece in arc {
            if let ArcPiece::Side { side, from, to } = piece {
                let (count, along): (usize, Box<dyn Fn(usize) -> (usize, usize, f64)>) = match side {
                    RectSide::Bottom => (nx, Box::new(|k| (k, 0, x0 + k as f64 * lay.hx))),
                    RectSide::Top => (nx, Box::new(|k| (k, ny - 1, x0 + k as f64 * lay.hx))),
                    RectSide::Left => (ny, Box::new(|k| (0, k, y0 + k as f64 * lay.hy))),
                    RectSide::Right => (ny, Box::new(|k| (nx - 1, k, y0 + k as f64 * lay.hy))),
                };
                for k in 0..count {
                    let (i, j, s) = along(k);
                    if s >= from - tol && s <= to + tol {
                        fixed[lay.id(i, j)] = Some(value as f64);
                    }
                }
            }
        }
    }

    // Reflecting slits remove the edges they cross.
    let mut cut = vec![false; 2 * nodes];
    for slit in &q.slits {
        for seg in slit.windows(2) {
            for_edges_near(&lay, seg[0], seg[1], |i, j, v| {
                let (_, _, p, r) = edge_ends(&lay, i, j, v);
                if hit(p, r, seg[0], seg[1]).is_some() {
                    cut[edge_id(&lay, i, j, v)] = true;
                }
            });
        }
    }

    // Interior electrodes: nodes on the curve are fixed, crossed edges are
    // shortened to the crossing point.
    let mut partial: Vec<(usize, f64, usize)> = Vec::new();
    let mut crossing: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for (value, arc) in q.arcs.iter().enumerate() {
        for piece in arc {
            let ArcPiece::Curve { curve } = piece else { continue };
            for seg in curve.windows(2) {
                let (i0, i1) = lay.col_range(seg[0][0], seg[1][0]);
                let (j0, j1) = lay.row_range(seg[0][1], seg[1][1]);
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        if point_segment_distance(lay.point(i, j), seg[0], seg[1]) <= tol {
                            fixed[lay.id(i, j)] = Some(value as f64);
                        }
                    }
                }
                for_edges_near(&lay, seg[0], seg[1], |i, j, v| {
                    let (_, _, p, r) = edge_ends(&lay, i, j, v);
                    if let Some(Some(s)) = hit(p, r, seg[0], seg[1]) {
                        let e = crossing.entry(edge_id(&lay, i, j, v)).or_insert((s, s, value));
                        e.0 = e.0.min(s);
                        e.1 = e.1.max(s);
                    }
                });
            }
        }
    }

    let mut net = Network::new(nodes + 2);
    let wh = lay.hy / lay.hx;
    let wv = lay.hx / lay.hy;
    for j in 0..ny {
        for i in 0..nx {
            for vertical in [false, true] {
                if (!vertical && i + 1 >= nx) || (vertical && j + 1 >= ny) {
                    continue;
                }
                let eid = edge_id(&lay, i, j, vertical);
                if cut[eid] {
                    continue;
                }
                let mut w = if vertical { wv } else { wh };
                let on_boundary = if vertical { i == 0 || i == nx - 1 } else { j == 0 || j == ny - 1 };
                if on_boundary {
                    w *= 0.5;
                }
                let (a, b, _, _) = edge_ends(&lay, i, j, vertical);
                match crossing.get(&eid) {
                    Some(&(s_min, s_max, value)) => {
                        if s_min > 1e-12 {
                            partial.push((a, w / s_min, value));
                        }
                        if s_max < 1.0 - 1e-12 {
                            partial.push((b, w / (1.0 - s_max), value));
                        }
                    }
                    None => net.add_edge(a, b, w),
                }
            }
        }
    }
    for &(node, w, value) in &partial {
        net.add_edge(node, nodes + value, w);
    }

    let has = |v: f64| fixed[..nodes].iter().any(|f| *f == Some(v)) || partial.iter().any(|p| p.2 as f64 == v);
    if !has(0.0) || !has(1.0) {
        return Err(Error::Grid("a marked arc contains no grid node".into()));
    }

    let guess_full = guess.map(|g| {
        let mut v = g.to_vec();
        v.extend([0.0, 1.0]);
        v
    });
    let max_iter = 50 * (nx + ny) + 2000;
    let sol = net.solve(&fixed, guess_full.as_deref(), 1e-10, max_iter)?;
    let energy = net.energy(&sol.values);
    let mut values = sol.values;
    values.truncate(nodes);
    Ok(GridSolution { energy, values, iterations: sol.iterations })
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = sub(b, a);
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / dd).clamp(0.0, 1.0) } else { 0.0 };
    let c = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}

// Bilinear prolongation from an nx × ny grid to (2nx-1) × (2ny-1).
fn prolong(coarse: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let (fx, fy) = (2 * nx - 1, 2 * ny - 1);
    let at = |i: usize, j: usize| coarse[j * nx + i];
    let mut out = vec![0.0; fx * fy];
    for j in 0..fy {
        for i in 0..fx {
            let (ci, cj) = (i / 2, j / 2);
            let (ci2, cj2) = ((i + 1) / 2, (j + 1) / 2);
            out[j * fx + i] = 0.25 * (at(ci, cj) + at(ci2, cj) + at(ci, cj2) + at(ci2, cj2));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Crossing families of comb domains

/// Numerical check of the slit-height inequalities for one gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossingCheck {
    pub gap: usize,
    /// `min(m_left, m_right)`, an upper estimate of the crossing modulus.
    pub modulus: f64,
    pub tallest: f64,
    /// `ṽ_max ≥ π(m - 1)` up to the relative slack.
    pub linear_ok: bool,
    /// `ṽ_max ≥ (π/2) exp(-10π/m)` when `ṽ_max ≤ π/4`, else `None`.
    pub small_ok: Option<bool>,
}

/// Quadrilaterals in the comb half-strip joining slit `j` to the left and to
/// the right side; the strip is cut at height `ṽ_max + 2π`.
pub fn comb_side_quadrilaterals(cd: &CombData, j: usize) -> Result<(Quadrilateral, Quadrilateral)> {
    let target = cd.slits.get(j).ok_or(Error::NoGap)?;
    let tallest = cd.tallest().map(|s| s.v).unwrap_or(0.0);
    let top = tallest + 2.0 * PI;
    let others: Vec<Vec<[f64; 2]>> =
        cd.slits.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, s)| vec![[s.u, 0.0], [s.u, s.v]]).collect();
    let electrode = ArcPiece::Curve { curve: vec![[target.u, 0.0], [target.u, target.v]] };
    let rect = [0.0, PI, 0.0, top];
    let left = Quadrilateral::new(rect, others.clone(), [vec![ArcPiece::whole(RectSide::Left)], vec![electrode.clone()]])?;
    let right = Quadrilateral::new(rect, others, [vec![electrode], vec![ArcPiece::whole(RectSide::Right)]])?;
    Ok((left, right))
}

/// Checks both slit-height inequalities for every slit of the comb with
/// relative slack `slack`.
pub fn crossing_checks(cd: &CombData, n: usize, slack: f64) -> Result<Vec<CrossingCheck>> {
    use rayon::prelude::*;
    let tallest = cd.tallest().ok_or(Error::NoGap)?.v;
    (0..cd.slits.len())
        .into_par_iter()
        .map(|j| {
            let (l, r) = comb_side_quadrilaterals(cd, j)?;
            let m = numeric_modulus(&l, n)?.min(numeric_modulus(&r, n)?);
            let linear_ok = tallest * (1.0 + slack) >= PI * (m * (1.0 - slack) - 1.0);
            let small_ok = (tallest <= PI / 4.0)
                .then(|| tallest * (1.0 + slack) >= PI / 2.0 * (-10.0 * PI / (m * (1.0 - slack))).exp());
            Ok(CrossingCheck { gap: cd.slits[j].gap, modulus: m, tallest, linear_ok, small_ok })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn exact_annulus_values() {
        let p = params(&[("r1", 1.0), ("r2", PI.exp())]);
        let m1 = module_formula(Family::Gamma1, &p).unwrap();
        let m2 = module_formula(Family::Gamma2, &p).unwrap();
        assert!((m1.value - 1.0).abs() < 1e-15 && m1.kind == BoundKind::Exact);
        assert!((m2.value - 1.0).abs() < 1e-15 && m2.kind == BoundKind::Exact);
        assert!(module_formula(Family::Gamma1, &params(&[("r1", 2.0), ("r2", 1.0)])).is_err());
        assert!(module_formula(Family::Gamma1, &params(&[("r1", 2.0)])).is_err());
    }

    #[test]
    fn gamma4_gamma5_reciprocal() {
        let p = params(&[("r", 1.0), ("R", 4.0)]);
        let m4 = module_formula(Family::Gamma4, &p).unwrap();
        assert_eq!(m4.value, PI / (4.0 * 16f64.ln()));
        assert_eq!(m4.kind, BoundKind::Lower);
        let m5 = module_formula(Family::Gamma5, &p).unwrap();
        assert_eq!(m5.kind, BoundKind::Upper);
        assert_eq!(m5.value, 1.0 / (4.0 * m4.value));
        assert!((m5.value - 16f64.ln() / PI).abs() < 1e-15);
    }

    #[test]
    fn gamma3_exact_exceeds_bound() {
        for (a, b, c) in [(0.0, 1.0, 0.1), (-2.0, 3.0, 7.0), (1.0, 1.5, 40.0)] {
            let lower = module_formula(Family::Gamma3, &params(&[("a", a), ("b", b), ("c", c)])).unwrap().value;
            assert!(gamma3_exact(a, b, c).unwrap() > lower);
        }
    }

    #[test]
    fn piecewise_bounds() {
        let g7 = |a: f64| module_formula(Family::Gamma7, &params(&[("a", a)])).unwrap().value;
        assert_eq!(g7(1.0), 0.5);
        assert!((g7(0.1) - PI / (2.0 * 120f64.ln())).abs() < 1e-15);
        // Below the breakpoint the bound is under 1/2.
        assert!(g7(LN_2 / 2.0 - 1e-9) < 0.5);
        let g8 = |b: f64, c: f64| module_formula(Family::Gamma8, &params(&[("a", 0.0), ("b", b), ("c", c)])).unwrap().value;
        assert_eq!(g8(1.0, 3.0), 0.25);
        assert!((g8(1.0, 1.01) - PI / (4.0 * 1200f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn gamma9_with_zero_height() {
        let v = module_formula(Family::Gamma9, &params(&[("a", 1.0), ("b", 2.0), ("c", 0.0)])).unwrap();
        assert!((v.value - 4f64.ln() / (2.0 * PI)).abs() < 1e-15);
        let trivial = module_formula(Family::Gamma9, &params(&[("a", 1.0), ("b", 2.0), ("c", 5.0)])).unwrap();
        assert_eq!(trivial.value, 0.0);
    }

    #[test]
    fn gamma10_and_mu() {
        let s = IntervalSet::interval(1.0, 1.5).unwrap();
        let b = gamma10_upper(1.0, 2.0, &s, &EquilibriumConfig::with_nodes(16)).unwrap();
        let c = (PI.exp() + 1.0) / 2.0;
        assert!((b.value - 2.0 / PI * (c * 1.0 / 0.125).ln()).abs() < 1e-12);
        assert!(gamma10_upper(1.0, 5.0, &s, &EquilibriumConfig::with_nodes(16)).is_err());
        let mu = module_formula(Family::GroetzschMu, &params(&[("t", 0.5)])).unwrap();
        assert_eq!(mu.value, 8f64.ln());
        assert!(module_formula(Family::GroetzschMu, &params(&[("t", 1.0)])).is_err());
    }

    #[test]
    fn gamma12_examples() {
        let l = 100f64.ln();
        assert!((gamma12_upper(1.0, 50.0, &[]).unwrap().value - PI / l).abs() < 1e-15);
        let one = gamma12_upper(1.0, 50.0, &[(10.0, 5.0)]).unwrap().value;
        assert!((one - (PI * l - 1e-5 * 0.25) / (l * l)).abs() < 1e-15);
        assert!(gamma12_upper(1.0, 50.0, &[(10.0, 6.0)]).unwrap().value < one);
        assert!(gamma12_upper(1.0, 50.0, &[(10.0, 11.0)]).is_err());
        assert!(gamma12_upper(1.0, 50.0, &[(0.5, 0.1)]).is_err());
    }

    #[test]
    fn gamma13_examples() {
        let t = 10f64.exp();
        let cfg = EquilibriumConfig::with_nodes(16);
        let s = IntervalSet::interval(1.0, t).unwrap();
        assert!((gamma13_upper(t, &s, &[], 0.25, &cfg).unwrap().value - PI / 10.0).abs() < 1e-15);
        let v = gamma13_upper(t, &s, &[(2.0, 3.0)], 0.25, &cfg).unwrap().value;
        let expected = (PI * 10.0 + 2.0 / PI * 400f64.ln() * 0.25) / 100.0;
        assert!((v - expected).abs() < 1e-13);
        // Aspect (b - a)/a = 2 ≥ π/2.
        assert!(gamma13_upper(t, &s, &[(2.0, 6.0)], 0.25, &cfg).is_err());
        let sparse = crate::realsets::normalize([(1.0, 2.0), (2.999, 3.0), (4.0, t)]).unwrap();
        assert!(gamma13_upper(t, &sparse, &[(2.0, 3.0)], 0.25, &cfg).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("gamma11".parse::<Family>().is_err());
    }

    #[test]
    fn square_and_rectangles() {
        let sq = Quadrilateral::rectangle(1.0, 1.0, false).unwrap();
        assert!((numeric_modulus(&sq, 65).unwrap() - 1.0).abs() < 1e-8);
        let long = Quadrilateral::rectangle(2.0, 1.0, false).unwrap();
        assert!((numeric_modulus(&long, 65).unwrap() - 2.0).abs() < 1e-8);
        let across = Quadrilateral::rectangle(2.0, 1.0, true).unwrap();
        assert!((numeric_modulus(&across, 65).unwrap() - 0.5).abs() < 1e-8);
        assert!(matches!(numeric_modulus(&sq, 33), Err(Error::ResolutionTooSmall { .. })));
    }

    #[test]
    fn half_side_arcs_are_reciprocal() {
        // Arcs on half of the bottom and half of the top side.
        let q = Quadrilateral::new(
            [0.0, 2.0, 0.0, 1.0],
            Vec::new(),
            [vec![ArcPiece::side(RectSide::Bottom, 0.0, 1.0)], vec![ArcPiece::side(RectSide::Top, 1.0, 2.0)]],
        )
        .unwrap();
        let m = numeric_modulus(&q, 65).unwrap();
        // Half the rectangle carries no flux, so the modulus is below 1.
        assert!(m > 0.1 && m < 1.0);
    }

    #[test]
    fn electrode_curve_matches_side() {
        // An interior electrode along x = 1 splits a 2 × 1 rectangle.
        let q = Quadrilateral::new(
            [0.0, 2.0, 0.0, 1.0],
            Vec::new(),
            [vec![ArcPiece::whole(RectSide::Left)], vec![ArcPiece::Curve { curve: vec![[1.0 + 1e-3, 0.0], [1.0 + 1e-3, 1.0]] }]],
        )
        .unwrap();
        let m = numeric_modulus(&q, 65).unwrap();
        assert!((m - 1.0 / 1.001).abs() < 1e-6, "{m}");
    }

    #[test]
    fn quadrilateral_json_shape() {
        let q = Quadrilateral::gamma12(1.0, 5.0, &[(2.0, 1.0)]).unwrap();
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.starts_with("{\"rect\":["));
        let back: Quadrilateral = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);
        let bad = r#"{"rect":[0,1,1,0],"arcs":[[{"side":"left","from":0,"to":1}],[{"side":"right","from":0,"to":1}]]}"#;
        assert!(serde_json::from_str::<Quadrilateral>(bad).is_err());
    }
}
