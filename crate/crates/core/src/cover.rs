//! Covers of the gap set by blocks `[a_j, b_j]` with endpoints in `E`.

use serde::{Deserialize, Serialize};

use crate::comb::{CombData, CombMap};
use crate::error::{Error, Result};
use crate::realsets::{GapSystem, MobiusMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockTag {
    Dense,
    Comb,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverBlock {
    pub a: f64,
    pub b: f64,
    pub tag: BlockTag,
}

/// One decision of the comb greedy: the block `[γ_s, γ_{s+1}]` grown over
/// `cells` grid cells, with the tallest slit `δ` inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub start: f64,
    pub end: f64,
    pub cells: usize,
    pub max_height: f64,
    pub tag: BlockTag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverTrace {
    /// Grid points `α_m` in increasing order.
    pub grid: Vec<f64>,
    pub steps: Vec<TraceStep>,
}

/// Ordered cover blocks. `exempt` lists dyadic blocks whose gap density
/// reaches one half; their gaps are covered with tag `plain`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverSystem {
    pub blocks: Vec<CoverBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exempt: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<CoverTrace>,
}

impl CoverSystem {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Checks ordering `b_{j-1} ≤ a_j < b_j`, endpoints in `E`, and that every
    /// gap of `e` lies in some block.
    pub fn validate(&self, e: &GapSystem) -> Result<()> {
        for (k, blk) in self.blocks.iter().enumerate() {
            if !(blk.a < blk.b) {
                return Err(Error::Cover(format!("block {k} = [{}, {}] is empty", blk.a, blk.b)));
            }
            if k > 0 && self.blocks[k - 1].b > blk.a {
                return Err(Error::Cover(format!("blocks {} and {k} overlap", k - 1)));
            }
            if !e.contains(blk.a) || !e.contains(blk.b) {
                return Err(Error::Cover(format!("block {k} has an endpoint in a gap")));
            }
        }
        for &(c, d) in e.gaps() {
            let covered = self.blocks.iter().any(|blk| blk.a <= c && d <= blk.b);
            if !covered {
                return Err(Error::Cover(format!("gap ({c}, {d}) is not covered")));
            }
        }
        Ok(())
    }

    /// Blocks inside `[-r, r]`.
    pub fn within(&self, r: f64) -> impl Iterator<Item = &CoverBlock> {
        self.blocks.iter().filter(move |b| b.a >= -r && b.b <= r)
    }
}

/// One block per gap, tag `plain`.
pub fn cover_from_gaps(e: &GapSystem) -> CoverSystem {
    let blocks = e.gaps().iter().map(|&(c, d)| CoverBlock { a: c, b: d, tag: BlockTag::Plain }).collect();
    CoverSystem { blocks, exempt: Vec::new(), trace: None }
}

/// Dyadic block `[2^(k-1), 2^k]` containing `x > 0`; `[0, 1]` for `x < 1`.
fn dyadic_block(x: f64) -> (f64, f64) {
    if x < 1.0 {
        (0.0, 1.0)
    } else {
        let k = x.log2().floor();
        (k.exp2(), (k + 1.0).exp2())
    }
}

/// Cover of the truncation `E_R` whose blocks have both gap density and
/// `E`-density at least 1/4. Each gap gets a block of four times its length,
/// centred where the neighbouring gaps allow; when there is no room the gap
/// is merged with the next one.
pub fn cover_dyadic_density(e: &GapSystem, radius: f64) -> Result<CoverSystem> {
    let er = e.truncate(radius);
    let right: Vec<(f64, f64)> = er.gaps().iter().copied().filter(|g| g.0 > 0.0).collect();
    let left: Vec<(f64, f64)> = er.gaps().iter().rev().filter(|g| g.1 < 0.0).map(|&(c, d)| (-d, -c)).collect();
    let margin = er.origin_margin();
    let (mut rblocks, rexempt) = density_side(&er, &right, margin, 1.0)?;
    let (lblocks, lexempt) = density_side(&er, &left, margin, -1.0)?;
    let mut blocks: Vec<CoverBlock> =
        lblocks.into_iter().rev().map(|b| CoverBlock { a: -b.b, b: -b.a, tag: b.tag }).collect();
    blocks.append(&mut rblocks);
    let mut exempt: Vec<(f64, f64)> = lexempt.into_iter().rev().map(|(a, b)| (-b, -a)).collect();
    exempt.extend(rexempt);
    Ok(CoverSystem { blocks, exempt, trace: None })
}

// Greedy on one half-line; `gaps` are mirrored to the positive axis and
// `sign` maps them back for density queries.
fn density_side(
    er: &GapSystem,
    gaps: &[(f64, f64)],
    margin: f64,
    sign: f64,
) -> Result<(Vec<CoverBlock>, Vec<(f64, f64)>)> {
    let gap_measure = |a: f64, b: f64| {
        if sign > 0.0 {
            er.gap_measure_in(a, b)
        } else {
            er.gap_measure_in(-b, -a)
        }
    };
    let mut exempt: Vec<(f64, f64)> = Vec::new();
    let is_exempt = |x: f64, exempt: &mut Vec<(f64, f64)>| {
        let (lo, hi) = dyadic_block(x);
        let heavy = gap_measure(lo, hi) >= 0.5 * (hi - lo);
        if heavy && !exempt.contains(&(lo, hi)) {
            exempt.push((lo, hi));
        }
        heavy
    };
    let mut blocks = Vec::new();
    let mut floor = margin;
    let mut k = 0;
    while k < gaps.len() {
        let (c, mut d) = gaps[k];
        let mut g = d - c;
        let mut last = k;
        let mut heavy = is_exempt(c, &mut exempt);
        loop {
            let ceiling = gaps.get(last + 1).map_or(f64::INFINITY, |n| n.0);
            let span = d - c;
            let want = (4.0 * g).max(span);
            let need = span.max(4.0 * g / 3.0) * (1.0 - 1e-12);
            let pad = 0.5 * (want - span);
            let (mut a, mut b) = (c - pad, d + pad);
            if a < floor {
                b += floor - a;
                a = floor;
            }
            if b > ceiling {
                a = (a - (b - ceiling)).max(floor);
                b = ceiling;
            }
            if b - a >= need || heavy {
                let tag = if heavy { BlockTag::Plain } else { BlockTag::Dense };
                blocks.push(CoverBlock { a, b, tag });
                floor = b;
                break;
            }
            // Merge with the next gap if the group keeps gap density ≥ 1/4.
            match gaps.get(last + 1) {
                Some(&(nc, nd)) if (g + nd - nc) * 4.0 >= nd - c => {
                    last += 1;
                    d = nd;
                    g += nd - nc;
                    heavy |= is_exempt(nc, &mut exempt);
                }
                _ => {
                    let (lo, hi) = if sign > 0.0 { (c, d) } else { (-d, -c) };
                    return Err(Error::DensityUnachievable { lo, hi });
                }
            }
        }
        k = last + 1;
    }
    Ok((blocks, exempt))
}

/// Parameters of the comb-coordinate greedy.
#[derive(Debug, Clone, Copy)]
pub struct CombGreedy {
    pub spacing: f64,
    /// Upper ratio of the tallest slit to the span.
    pub upper: f64,
    /// Lower ratio for the sandwich case.
    pub lower: f64,
}

impl CombGreedy {
    pub fn new(spacing: f64) -> Self {
        CombGreedy { spacing, upper: 0.5, lower: 1.0 / 6.0 }
    }
}

/// Greedy blocks on the comb base `[0, π]` starting from `u0` (or 0), in
/// comb coordinates. A block grows cell by cell until its tallest slit is at
/// most `upper·span`; single-cell blocks are `dense`, grown blocks satisfying
/// `lower·span ≤ height ≤ upper·span` are `comb`, others `plain`.
pub fn cover_comb_greedy(cd: &CombData, params: &CombGreedy) -> Result<CoverSystem> {
    let s = params.spacing;
    if !(s > 0.0) {
        return Err(Error::Cover("spacing must be positive".into()));
    }
    let pi = std::f64::consts::PI;
    let origin = cd.u0.unwrap_or(0.0);
    let feet: Vec<f64> = cd.slits.iter().map(|sl| sl.u).collect();
    let clear = |x: f64| feet.iter().all(|&u| (u - x).abs() > 1e-9 * s);
    let nudge = |x: f64, dir: f64| -> Result<f64> {
        for k in 0..64 {
            let y = x + dir * k as f64 * s / 64.0;
            if clear(y) {
                return Ok(y);
            }
        }
        Err(Error::Cover(format!("every grid point near {x} hits a slit foot")))
    };

    let mut grid = vec![origin];
    let mut x = origin;
    while pi - x >= 2.0 * s {
        x = nudge(x + s, 1.0)?;
        grid.push(x);
    }
    if x < pi {
        grid.push(pi);
    }
    let mut left = Vec::new();
    let mut x = origin;
    while x >= 2.0 * s {
        x = nudge(x - s, -1.0)?;
        left.push(x);
    }
    if x > 0.0 {
        left.push(0.0);
    }
    let origin_index = left.len();
    let grid: Vec<f64> = left.into_iter().rev().chain(grid).collect();

    let tallest_in = |a: f64, b: f64| {
        cd.slits.iter().filter(|sl| a < sl.u && sl.u < b).map(|sl| sl.v).fold(0.0, f64::max)
    };
    let mut steps = Vec::new();
    let grow = |from: usize, dir: isize, steps: &mut Vec<TraceStep>| {
        let mut i = from as isize;
        loop {
            let start = i;
            let mut end = i + dir;
            if end < 0 || end as usize >= grid.len() {
                break;
            }
            let (mut lo, mut hi, mut h);
            loop {
                lo = grid[start.min(end) as usize];
                hi = grid[start.max(end) as usize];
                h = tallest_in(lo, hi);
                let next = end + dir;
                if h <= params.upper * (hi - lo) || next < 0 || next as usize >= grid.len() {
                    break;
                }
                end = next;
            }
            let cells = (end - start).unsigned_abs();
            let span = hi - lo;
            let tag = if h <= params.upper * span {
                if cells == 1 {
                    BlockTag::Dense
                } else if h >= params.lower * span {
                    BlockTag::Comb
                } else {
                    BlockTag::Plain
                }
            } else {
                BlockTag::Plain
            };
            steps.push(TraceStep { start: lo, end: hi, cells, max_height: h, tag });
            i = end;
        }
    };
    grow(origin_index, 1, &mut steps);
    grow(origin_index, -1, &mut steps);
    steps.sort_by(|a, b| a.start.total_cmp(&b.start));
    let blocks = steps.iter().map(|st| CoverBlock { a: st.start, b: st.end, tag: st.tag }).collect();
    Ok(CoverSystem { blocks, exempt: Vec::new(), trace: Some(CoverTrace { grid, steps }) })
}

/// Pulls a comb-coordinate cover back to the line of `E` through `ψ` and the
/// inverse of the reduction map `m`. Blocks on either side of `u0` map to the
/// two half-lines; the block touching the image of infinity is dropped.
pub fn pull_back_comb_cover(comb: &CoverSystem, map: &CombMap, m: &MobiusMap) -> CoverSystem {
    let inv = m.inverse();
    let mut blocks: Vec<CoverBlock> = comb
        .blocks
        .iter()
        .filter_map(|blk| {
            let (xa, xb) = (map.base_preimage(blk.a), map.base_preimage(blk.b));
            if xa <= 0.0 && xb >= 0.0 {
                return None;
            }
            let (ya, yb) = (inv.apply_real(xa), inv.apply_real(xb));
            (ya.is_finite() && yb.is_finite()).then(|| CoverBlock { a: ya.min(yb), b: ya.max(yb), tag: blk.tag })
        })
        .collect();
    blocks.sort_by(|a, b| a.a.total_cmp(&b.a));
    CoverSystem { blocks, exempt: Vec::new(), trace: comb.trace.clone() }
}

/// Adds a `plain` block for every gap of `e` not inside a block, merging
/// overlapping blocks into `plain` hulls, so the result passes
/// [`CoverSystem::validate`] when all block endpoints lie in `E`.
pub fn complete_cover(cover: &CoverSystem, e: &GapSystem) -> CoverSystem {
    let mut items: Vec<CoverBlock> = cover.blocks.clone();
    for &(c, d) in e.gaps() {
        if !items.iter().any(|blk| blk.a <= c && d <= blk.b) {
            items.push(CoverBlock { a: c, b: d, tag: BlockTag::Plain });
        }
    }
    items.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    let mut blocks: Vec<CoverBlock> = Vec::with_capacity(items.len());
    for blk in items {
        match blocks.last_mut() {
            Some(last) if blk.a < last.b => {
                last.b = last.b.max(blk.b);
                last.tag = BlockTag::Plain;
            }
            _ => blocks.push(blk),
        }
    }
    CoverSystem { blocks, exempt: cover.exempt.clone(), trace: cover.trace.clone() }
}
