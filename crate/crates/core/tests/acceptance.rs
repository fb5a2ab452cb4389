//! Acceptance criteria. Runs without the test harness: every criterion runs
//! in sequence (so timings are not distorted by concurrent tests), prints one
//! PASS/FAIL line and the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use denjoy_core::classify::{classify, ClassifyOptions, Verdict};
use denjoy_core::comb::CombMap;
use denjoy_core::cover::cover_dyadic_density;
use denjoy_core::criteria::{construct_remark4, theorem1_term, ThetaSpec};
use denjoy_core::dirichlet::{beta_at, beta_x, solve_laplace, Rect};
use denjoy_core::equilibrium::capacity_with;
use denjoy_core::json::to_string_pretty;
use denjoy_core::modulus::{gamma12_upper, Params};
use denjoy_core::{
    module_formula, normalize, numeric_modulus, BoundKind, EquilibriumConfig, Family, GapSystem, IntervalSet,
    Quadrilateral,
};

type Outcome = (bool, String);

// Tolerances, pinned.
const C1_REL: f64 = 1e-6;
const C1_SECS: f64 = 1.0;
const C2_DEV: f64 = 1e-4;
const C2_SECS: f64 = 5.0;
const C3_ABS: f64 = 1e-4;
const C4_SLACK: f64 = 1e-4;
const C4_SECS: f64 = 60.0;
const C5_ABS: f64 = 1e-4;
const C6_SQUARE: f64 = 0.01;
const C6_ANNULUS: f64 = 0.02;
const C6_RECIPROCITY: f64 = 0.03;
const C7_SLACK: f64 = 0.03;
const C8_GROWTH: f64 = 0.1;
const C8_TAIL: f64 = 1e-3;
const C8_FLAT: f64 = 0.01;
const C8_SECS: f64 = 600.0;
const C9_CONVERGENCE: f64 = 5e-3;
const C9_EMPTY: f64 = 1e-6;

fn c1_single_interval_capacity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let cfg = EquilibriumConfig::with_nodes(256);
    let (mut worst, mut slowest) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let a: f64 = rng.random_range(-10.0..10.0);
        let len = 10f64.powf(rng.random_range(-3.0..1.0));
        let set = IntervalSet::interval(a, a + len).unwrap();
        let t = Instant::now();
        let cap = capacity_with(&set, &cfg).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        worst = worst.max((cap - len / 4.0).abs() / (len / 4.0));
    }
    (worst < C1_REL && slowest < C1_SECS, format!("max rel err {worst:.2e}, slowest solve {slowest:.3}s"))
}

/// Sorted points in `(-1, 1)` pairwise at least `sep` apart and from `±1`.
fn separated_points(rng: &mut StdRng, k: usize, sep: f64) -> Vec<f64> {
    loop {
        let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0 + sep..1.0 - sep)).collect();
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] - w[0] >= sep) {
            return p;
        }
    }
}

/// `k`-component set with hull `[-1, 1]`.
fn random_set(rng: &mut StdRng, k: usize, sep: f64) -> IntervalSet {
    let p = separated_points(rng, 2 * k - 2, sep);
    let mut ends = vec![-1.0];
    ends.extend(p);
    ends.push(1.0);
    normalize(ends.chunks(2).map(|c| (c[0], c[1]))).unwrap()
}

fn c2_potential_constancy() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let cfg = EquilibriumConfig::with_nodes(512);
    let (mut worst, mut slowest) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let set = random_set(&mut rng, 3, 0.01);
        let t = Instant::now();
        let map = CombMap::new(&set, &cfg).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let eq = map.equilibrium();
        for &(a, b) in set.intervals() {
            for k in 0..=200 {
                let x = a + (b - a) * 0.5 * (1.0 - (PI * k as f64 / 200.0).cos());
                worst = worst.max((eq.potential(Complex64::new(x, 0.0)) - eq.log_capacity()).abs());
            }
        }
    }
    (worst < C2_DEV && slowest < C2_SECS, format!("max deviation {worst:.2e}, slowest solve {slowest:.3}s"))
}

fn c3_green_oracle() -> Outcome {
    let map = CombMap::new(&IntervalSet::interval(-1.0, 1.0).unwrap(), &EquilibriumConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for y in [0.01f64, 0.1, 1.0, 10.0] {
        let exact = (y + (1.0 + y * y).sqrt()).ln();
        worst = worst.max((map.green(Complex64::new(0.0, y)) - exact).abs());
    }
    let mut lower_ok = true;
    for y in [0.1, 0.5, 0.9] {
        lower_ok &= map.green(Complex64::new(0.0, y)) > y / 2.0;
    }
    (worst < C3_ABS && lower_ok, format!("max err {worst:.2e}, g(iy) > y/2: {lower_ok}"))
}

/// Maximum of `g` over a gap by dense sampling and local refinement.
fn gap_max_oracle(map: &CombMap, c: f64, d: f64) -> (f64, f64) {
    let g = |x: f64| map.green(Complex64::new(x, 0.0));
    let scan = |lo: f64, hi: f64| {
        (0..=2000)
            .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
            .map(|x| (x, g(x)))
            .fold((lo, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
    };
    let (x, _) = scan(c, d);
    let h = (d - c) / 2000.0;
    scan((x - 2.0 * h).max(c), (x + 2.0 * h).min(d))
}

struct CombCase {
    map: CombMap,
    set: IntervalSet,
    /// `(tip, ṽ)` per gap from the oracle.
    oracle: Vec<(f64, f64)>,
}

fn comb_corpus() -> Vec<CombCase> {
    let mut rng = StdRng::seed_from_u64(4);
    (0..15)
        .map(|i| {
            let set = random_set(&mut rng, 2 + i % 3, 0.02);
            let map = CombMap::new(&set, &EquilibriumConfig::default()).unwrap();
            let oracle = set.gaps().iter().map(|&(c, d)| gap_max_oracle(&map, c, d)).collect();
            CombCase { map, set, oracle }
        })
        .collect()
}

fn c4_bound_chain(corpus: &[CombCase], secs: f64) -> Outcome {
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for case in corpus {
        let v = case.oracle.iter().map(|o| o.1).fold(0.0, f64::max);
        let ratio = case.map.capacity() / 0.5;
        let lower = (-v).exp();
        let upper = 4.0 / (2.0 + v.exp() + (-v).exp());
        ok &= lower <= ratio && ratio <= upper + C4_SLACK;
        worst_margin = worst_margin.min((ratio - lower).min(upper - ratio));
    }
    (ok && secs < C4_SECS, format!("smallest margin {worst_margin:.2e}, corpus built in {secs:.1}s"))
}

fn c5_psi_geometry(corpus: &[CombCase]) -> Outcome {
    let (mut on_set, mut tips) = (0.0f64, 0.0f64);
    for case in corpus {
        for &(a, b) in case.set.intervals() {
            for k in 0..=20 {
                let x = a + (b - a) * k as f64 / 20.0;
                let psi = case.map.psi(Complex64::new(x, 0.0)).unwrap().value;
                let big = (Complex64::i() * (Complex64::new(PI, 0.0) - psi)).exp();
                on_set = on_set.max((big.norm() - 1.0).abs());
            }
        }
        let data = case.map.comb_data().unwrap();
        for (slit, &tip) in data.slits.iter().zip(&data.tips) {
            let v = case.oracle[slit.gap].1;
            let big = case.map.big_psi(Complex64::new(tip, 0.0)).unwrap();
            tips = tips.max((big.norm() - v.exp()).abs()).max((slit.v.exp() - v.exp()).abs());
        }
    }
    (on_set < C5_ABS && tips < C5_ABS, format!("max ||Psi| - 1| on F {on_set:.2e}, max tip error {tips:.2e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c6_modulus_calibration() -> Outcome {
    let square = numeric_modulus(&Quadrilateral::rectangle(1.0, 1.0, true).unwrap(), 129).unwrap();
    let annulus = numeric_modulus(&Quadrilateral::half_annulus(1.0, PI.exp(), true).unwrap(), 513).unwrap();
    let mut recip = 0.0f64;
    for q in [
        Quadrilateral::rectangle(2.0, 1.0, true).unwrap(),
        Quadrilateral::half_annulus(1.0, 3.0, true).unwrap(),
        Quadrilateral::half_annulus(1.0, 5.0, false).unwrap(),
    ] {
        let m = numeric_modulus(&q, 65).unwrap();
        let m_conj = numeric_modulus(&q.conjugate().unwrap(), 65).unwrap();
        recip = recip.max((m * m_conj - 1.0).abs());
    }
    let ok = rel(square, 1.0) < C6_SQUARE && rel(annulus, 1.0) < C6_ANNULUS && recip < C6_RECIPROCITY;
    (ok, format!("square {square:.6}, half annulus {annulus:.6}, reciprocity defect {recip:.2e}"))
}

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Whether `bound` is consistent with `numeric` within the relative slack.
fn consistent(kind: BoundKind, bound: f64, numeric: f64) -> bool {
    match kind {
        BoundKind::Lower => bound <= numeric * (1.0 + C7_SLACK),
        BoundKind::Upper => bound >= numeric * (1.0 - C7_SLACK),
        BoundKind::Exact => (bound - numeric).abs() <= C7_SLACK * numeric,
    }
}

fn c7_inequality_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut count = 0;
    let mut check = |family: Family, kind: BoundKind, bound: f64, q: Quadrilateral| {
        let m = numeric_modulus(&q, 65).unwrap();
        count += 1;
        if !consistent(kind, bound, m) {
            failures.push(format!("{family}: bound {bound:.4} vs numeric {m:.4}"));
        }
    };
    for _ in 0..10 {
        let r2 = rng.random_range(1.2..6.0);
        let p = params(&[("r1", 1.0), ("r2", r2)]);
        let b1 = module_formula(Family::Gamma1, &p).unwrap();
        check(Family::Gamma1, b1.kind, b1.value, Quadrilateral::half_annulus(1.0, r2, false).unwrap());
        let b2 = module_formula(Family::Gamma2, &p).unwrap();
        check(Family::Gamma2, b2.kind, b2.value, Quadrilateral::half_annulus(1.0, r2, true).unwrap());
    }
    for _ in 0..10 {
        let a = rng.random_range(-3.0..0.0);
        let b = a + rng.random_range(0.5..2.0);
        let c = b + rng.random_range(0.3..5.0);
        let bound = module_formula(Family::Gamma6, &params(&[("a", a), ("b", b), ("c", c)])).unwrap();
        check(Family::Gamma6, bound.kind, bound.value, Quadrilateral::gamma6(a, b, c).unwrap());
    }
    for _ in 0..10 {
        let a = rng.random_range(0.2..1.0);
        let b = a + rng.random_range(0.3..2.0);
        let c = rng.random_range(0.05..1.5);
        let bound = module_formula(Family::Gamma9, &params(&[("a", a), ("b", b), ("c", c)])).unwrap();
        check(Family::Gamma9, bound.kind, bound.value, Quadrilateral::gamma9(a, b, c).unwrap());
    }
    for _ in 0..10 {
        let big_r = rng.random_range(3.0..8.0);
        let k = rng.random_range(1..=3);
        let mut slits: Vec<(f64, f64)> = Vec::new();
        while slits.len() < k {
            let u = rng.random_range(1.2..big_r - 0.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            if slits.iter().all(|s| (s.0 - u).abs() > 0.3) {
                slits.push((u, rng.random_range(0.1..0.9) * u.abs()));
            }
        }
        let bound = gamma12_upper(1.0, big_r, &slits).unwrap();
        check(Family::Gamma12, bound.kind, bound.value, Quadrilateral::gamma12(1.0, big_r, &slits).unwrap());
    }
    let mut reciprocal = true;
    for _ in 0..10 {
        let p = params(&[("r", 1.0), ("R", rng.random_range(1.1..50.0))]);
        let m4 = module_formula(Family::Gamma4, &p).unwrap().value;
        let m5 = module_formula(Family::Gamma5, &p).unwrap().value;
        reciprocal &= m5 == 1.0 / (4.0 * m4);
    }
    let ok = failures.is_empty() && reciprocal;
    let detail = if failures.is_empty() {
        format!("{count} draws consistent, gamma4/gamma5 reciprocity exact: {reciprocal}")
    } else {
        format!("{} of {count} draws inconsistent: {}", failures.len(), failures.join("; "))
    };
    (ok, detail)
}

fn dyadic_unit_gaps(levels: i32) -> GapSystem {
    GapSystem::new((1..=levels).map(|j| (2f64.powi(j), 2f64.powi(j) + 1.0)).collect(), 1.0, None).unwrap()
}

fn c8_concordance() -> (Outcome, String) {
    let t = Instant::now();
    let opts = ClassifyOptions::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let a = construct_remark4(&ThetaSpec::Power { c: 1.0, gamma: 1.0 }, 20).unwrap();
    let ra = classify(&a, &opts).unwrap();
    let growth = ra.cover.as_ref().and_then(|c| c.theorem2.as_ref()).map_or(f64::NAN, |t2| t2.growth_per_decade);
    let ben_a = &ra.benedicks.as_ref().unwrap().ladder;
    let increasing = ben_a.windows(2).all(|w| w[1].partial_sum > w[0].partial_sum);
    let a_ok = ra.verdict == Verdict::Dim1 && growth >= C8_GROWTH && increasing;
    ok &= a_ok;
    notes.push(format!("(a) {} growth {growth:.3}/decade, I(R) increasing {increasing}", ra.verdict));

    let b = dyadic_unit_gaps(30);
    let rb = classify(&b, &opts).unwrap();
    let r3 = &rb.metric.as_ref().unwrap().remark3;
    let shrinking = r3.ladder.windows(3).all(|w| {
        let (d1, d2) = (w[1].partial_sum - w[0].partial_sum, w[2].partial_sum - w[1].partial_sum);
        d2 <= 0.5 * d1
    });
    let cover = cover_dyadic_density(&b, 2f64.powi(31)).unwrap();
    let tail: f64 = cover.blocks.iter().filter(|blk| blk.a >= 2f64.powi(20)).map(theorem1_term).sum();
    let ben_b = &rb.benedicks.as_ref().unwrap().ladder;
    let at_1e3 = ben_b.iter().position(|p| p.radius == 1e3).unwrap();
    let step = ben_b[at_1e3].partial_sum - ben_b[at_1e3 - 1].partial_sum;
    let b_ok = rb.verdict == Verdict::Dim2 && shrinking && tail < C8_TAIL && step < C8_FLAT;
    ok &= b_ok;
    notes.push(format!(
        "(b) {} metric integral increments shrinking {shrinking}, tail beyond 2^20 {tail:.2e}, I(1e3) - I(1e2) {step:.2e}",
        rb.verdict
    ));

    let rc = classify(&GapSystem::whole_line(), &opts).unwrap();
    ok &= rc.verdict == Verdict::Dim2;
    notes.push(format!("(c) {}", rc.verdict));

    let secs = t.elapsed().as_secs_f64();
    ok &= secs < C8_SECS;
    notes.push(format!("{secs:.1}s"));
    ((ok, notes.join("; ")), to_string_pretty(&ra).unwrap())
}

fn c9_dirichlet() -> Outcome {
    let mut principle = true;
    let mut projection = 0.0f64;
    let fixtures: Vec<(Rect, Option<IntervalSet>)> = vec![
        (Rect::square(0.0, 2.0), None),
        (Rect::square(0.0, 2.0), Some(IntervalSet::interval(-1.0, 1.0).unwrap())),
        (Rect::square(0.0, 2.0), Some(normalize([(-0.8, -0.3), (0.1, 0.2), (0.5, 0.95)]).unwrap())),
        (Rect::square(3.0, 4.0), Some(IntervalSet::interval(1.0, 2.99).unwrap())),
    ];
    for (rect, slits) in &fixtures {
        let f = solve_laplace(*rect, slits.as_ref(), |_, _| 1.0, 0.0, 65).unwrap();
        principle &= f.values.iter().all(|&v| (0.0..=1.0).contains(&v));
        projection = projection.max(f.projection);
    }
    let a = construct_remark4(&ThetaSpec::Power { c: 1.0, gamma: 1.0 }, 12).unwrap();
    let b = dyadic_unit_gaps(20);
    let mut worst = 0.0f64;
    for (e, x) in [(&a, 67.0), (&a, 17.0), (&a, 1100.0), (&b, 4.5), (&b, 1024.5), (&b, -3.0)] {
        let (coarse, fine) = (beta_at(e, x, 0.5, 129).unwrap(), beta_at(e, x, 0.5, 257).unwrap());
        worst = worst.max((coarse - fine).abs());
    }
    let lone = GapSystem::new(vec![(2.0, 100.0)], 1.0, None).unwrap();
    let empty = beta_x(&lone, 10.0, 0.5, 129).unwrap().value;
    let ok = principle && projection < 1e-8 && worst < C9_CONVERGENCE && (empty - 1.0).abs() < C9_EMPTY;
    (
        ok,
        format!(
            "maximum principle {principle} (projection {projection:.1e}), max |b(129) - b(257)| {worst:.2e}, empty window {empty:.9}"
        ),
    )
}

fn c10_determinism(first: &str) -> Outcome {
    let a = construct_remark4(&ThetaSpec::Power { c: 1.0, gamma: 1.0 }, 20).unwrap();
    let again = to_string_pretty(&classify(&a, &ClassifyOptions::default()).unwrap()).unwrap();
    (again == first, format!("{} bytes, identical: {}", first.len(), again == first))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id: u32, name: &'static str, out: Outcome| {
        println!("C{id} {name}: {} ({})", if out.0 { "PASS" } else { "FAIL" }, out.1);
        results.push((id, name, out));
    };
    record(1, "single-interval capacity", c1_single_interval_capacity());
    record(2, "potential constancy", c2_potential_constancy());
    record(3, "Green oracle", c3_green_oracle());
    let t = Instant::now();
    let corpus = comb_corpus();
    let secs = t.elapsed().as_secs_f64();
    record(4, "capacity bound chain", c4_bound_chain(&corpus, secs));
    record(5, "comb geometry", c5_psi_geometry(&corpus));
    record(6, "modulus calibration", c6_modulus_calibration());
    record(7, "inequality suite", c7_inequality_suite());
    let (c8, report) = c8_concordance();
    record(8, "classifier concordance", c8);
    record(9, "Dirichlet solver", c9_dirichlet());
    record(10, "determinism", c10_determinism(&report));
    let failed: Vec<String> = results.iter().filter(|r| !r.2 .0).map(|r| format!("C{} {}", r.0, r.1)).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
