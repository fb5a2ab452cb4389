//! `denjoy`: capacities, Green functions, comb maps, moduli and the
//! classification of Denjoy domains from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use denjoy_core::classify::{classify, ClassifyOptions, Method};
use denjoy_core::comb::{write_smoothness_csv, CombMap, Pole};
use denjoy_core::cover::{cover_comb_greedy, CombGreedy};
use denjoy_core::criteria::{construct_remark4, remark4_majorant_holds, write_ladder_csv, ThetaSpec};
use denjoy_core::dirichlet::{benedicks_scan, write_scan_csv, ScanOptions};
use denjoy_core::json::{display_f64, to_string_pretty};
use denjoy_core::modulus::{crossing_checks, gamma12_upper, module_formula, numeric_modulus_detail, Params};
use denjoy_core::{gaps_to_compact, EquilibriumConfig, Family, GapSystem, IntervalSet, Quadrilateral};

#[derive(Parser)]
#[command(name = "denjoy", version, about = "Potential theory on subsets of the real line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logarithmic capacity of a finite union of intervals.
    Capacity(CapacityArgs),
    /// Green function of the complement of a compact set.
    Green(GreenArgs),
    /// Slit data of the comb map, optionally with the greedy block cover.
    Comb(CombArgs),
    /// Modulus formulas and numerical moduli of quadrilaterals.
    Modulus(ModulusArgs),
    /// Dimension of the cone of positive harmonic functions vanishing on E.
    Classify(ClassifyArgs),
    /// Scan of the integral of beta_x(x)/|x| over 1 <= |x| <= R.
    Benedicks(BenedicksArgs),
    /// Gap system with prescribed majorant of theta_E.
    Construct(ConstructArgs),
    /// Ratios g(iy)/y near 0 after reduction to a compact set.
    Smoothness(SmoothnessArgs),
}

#[derive(Args)]
struct SetInput {
    /// JSON file with {"intervals": ...} or {"gaps": ...}.
    input: Option<PathBuf>,
    /// Inline JSON document instead of a file.
    #[arg(long, conflicts_with = "input")]
    set: Option<String>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    input: SetInput,
    /// Chebyshev nodes per interval.
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// Write the discretized equilibrium measure as JSON.
    #[arg(long)]
    measure: Option<PathBuf>,
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    input: SetInput,
    /// Evaluation point `re,im`; repeatable.
    #[arg(long = "z", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    /// Pole `re,im`, or `inf`.
    #[arg(long, default_value = "inf", allow_hyphen_values = true)]
    pole: String,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
}

#[derive(Args)]
struct CombArgs {
    #[command(flatten)]
    input: SetInput,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// Output file for the slit data (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the greedy block cover in comb coordinates.
    #[arg(long)]
    cover: Option<PathBuf>,
    /// Grid spacing of the greedy on [0, pi].
    #[arg(long, default_value_t = std::f64::consts::PI / 32.0)]
    spacing: f64,
    /// Write the numerical slit-height checks.
    #[arg(long)]
    checks: Option<PathBuf>,
    /// Grid of the numerical moduli in the checks.
    #[arg(long, default_value_t = 65)]
    grid: usize,
}

#[derive(Args)]
struct ModulusArgs {
    /// Family name, e.g. gamma4.
    #[arg(long, required_unless_present = "quad")]
    family: Option<String>,
    /// Parameter `name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Slit `u,v` of the gamma12 family; repeatable.
    #[arg(long = "slit")]
    slits: Vec<String>,
    /// Quadrilateral JSON for a numerical modulus.
    #[arg(long, conflicts_with = "family")]
    quad: Option<PathBuf>,
    /// Nodes per side of the coarse grid.
    #[arg(long, default_value_t = 129)]
    grid: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Gap system JSON.
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cover,metric,comb,benedicks,smoothness")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4")]
    truncations: Vec<f64>,
    /// Chebyshev nodes per component.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Nodes per side of the Benedicks windows.
    #[arg(long, default_value_t = 129)]
    grid: usize,
    /// Window scale alpha in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for `(R, partial_sum)` CSV ladders.
    #[arg(long)]
    ladders: Option<PathBuf>,
}

#[derive(Args)]
struct BenedicksArgs {
    /// Gap system JSON.
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e4)]
    rmax: f64,
    #[arg(long, default_value_t = 129)]
    grid: usize,
    /// Largest ratio between neighbouring samples inside a gap.
    #[arg(long, default_value_t = 1.25)]
    ratio: f64,
    /// Per-sample CSV (x, beta, R, partial_integral).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Majorant `power:gamma[:c]` for theta(t) = c t^gamma.
    #[arg(long)]
    theta: String,
    #[arg(long)]
    levels: u32,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothnessArgs {
    #[command(flatten)]
    input: SetInput,
    /// Heights y, decreasing.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    ys: Vec<f64>,
    /// Truncation radius applied to a gap system before the reduction.
    #[arg(long, default_value_t = 1e4)]
    truncation: f64,
    /// Index of the pivot gap (default: the gap nearest the origin).
    #[arg(long)]
    pivot: Option<usize>,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// CSV output (default: standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure with its exit code: 1 for domain errors, 2 for usage errors.
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<denjoy_core::Error> for Failure {
    fn from(e: denjoy_core::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

enum Input {
    Set(IntervalSet),
    Gaps(GapSystem),
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_input(text: &str, origin: &str) -> CliResult<Input> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{origin}: malformed JSON: {e}")))?;
    let data = |e: serde_json::Error| Failure::Domain(format!("{origin}: {e}"));
    if value.get("intervals").is_some() {
        Ok(Input::Set(serde_json::from_value(value).map_err(data)?))
    } else if value.get("gaps").is_some() {
        Ok(Input::Gaps(serde_json::from_value(value).map_err(data)?))
    } else {
        Err(Failure::Usage(format!("{origin}: expected an \"intervals\" or \"gaps\" document")))
    }
}

fn load(input: &SetInput) -> CliResult<Input> {
    match (&input.set, &input.input) {
        (Some(text), _) => parse_input(text, "--set"),
        (None, Some(path)) => parse_input(&read_text(path)?, &path.display().to_string()),
        (None, None) => Err(Failure::Usage("an input file or --set is required".into())),
    }
}

fn load_set(input: &SetInput) -> CliResult<IntervalSet> {
    match load(input)? {
        Input::Set(s) => Ok(s),
        Input::Gaps(_) => Err(Failure::Usage("expected an interval set, got a gap system".into())),
    }
}

fn load_gaps(path: &Path) -> CliResult<GapSystem> {
    match parse_input(&read_text(path)?, &path.display().to_string())? {
        Input::Gaps(g) => Ok(g),
        Input::Set(_) => Err(Failure::Usage("expected a gap system, got an interval set".into())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let text = to_string_pretty(value)?;
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let bad = || Failure::Usage(format!("{what}: expected two numbers `a,b`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[derive(Serialize)]
struct MeasureDump {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    capacity: f64,
}

fn run_capacity(a: &CapacityArgs) -> CliResult<()> {
    let set = load_set(&a.input)?;
    let map = CombMap::new(&set, &EquilibriumConfig::with_nodes(a.nodes))?;
    let eq = map.equilibrium();
    if let Some(path) = &a.measure {
        let (nodes, weights) = eq.measure().nodes_and_weights();
        emit_json(Some(path), &MeasureDump { nodes, weights, capacity: eq.capacity() })?;
    }
    println!("{}", display_f64(eq.capacity()));
    Ok(())
}

fn run_green(a: &GreenArgs) -> CliResult<()> {
    let set = load_set(&a.input)?;
    let cfg = EquilibriumConfig::with_nodes(a.nodes);
    let map = CombMap::new(&set, &cfg)?;
    let pole = if a.pole == "inf" {
        Pole::Infinity
    } else {
        let (re, im) = parse_pair(&a.pole, "--pole")?;
        Pole::At(Complex64::new(re, im))
    };
    for p in &a.points {
        let (re, im) = parse_pair(p, "--z")?;
        let g = map.green_with_pole(Complex64::new(re, im), pole, &cfg)?;
        println!("{}", display_f64(g));
    }
    Ok(())
}

fn run_comb(a: &CombArgs) -> CliResult<()> {
    let set = load_set(&a.input)?;
    let map = CombMap::new(&set, &EquilibriumConfig::with_nodes(a.nodes))?;
    let cd = map.comb_data()?;
    if let Some(path) = &a.cover {
        emit_json(Some(path), &cover_comb_greedy(&cd, &CombGreedy::new(a.spacing))?)?;
    }
    if let Some(path) = &a.checks {
        emit_json(Some(path), &crossing_checks(&cd, a.grid, 0.0)?)?;
    }
    emit_json(a.out.as_deref(), &cd)
}

fn run_modulus(a: &ModulusArgs) -> CliResult<()> {
    if let Some(path) = &a.quad {
        let q: Quadrilateral = serde_json::from_str(&read_text(path)?)
            .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
        return emit_json(None, &numeric_modulus_detail(&q, a.grid)?);
    }
    let name = a.family.as_deref().unwrap_or_default();
    let family: Family = name.parse()?;
    let mut params = Params::new();
    for p in &a.params {
        let (k, v) = p.split_once('=').ok_or_else(|| Failure::Usage(format!("--param: expected name=value, got `{p}`")))?;
        let v: f64 = v.parse().map_err(|_| Failure::Usage(format!("--param {k}: bad number `{v}`")))?;
        params.insert(k.to_string(), v);
    }
    let bound = if family == Family::Gamma12 {
        let get = |k: &str| params.get(k).copied().ok_or_else(|| Failure::Usage(format!("gamma12 needs --param {k}=...")));
        let slits = a.slits.iter().map(|s| parse_pair(s, "--slit")).collect::<CliResult<Vec<_>>>()?;
        gamma12_upper(get("r")?, get("R")?, &slits)?
    } else {
        module_formula(family, &params)?
    };
    emit_json(None, &bound)
}

fn run_classify(a: &ClassifyArgs) -> CliResult<()> {
    let e = load_gaps(&a.input)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|err| Failure::Usage(err.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let options = ClassifyOptions {
        methods,
        truncations: a.truncations.clone(),
        nodes: a.nodes,
        scan: ScanOptions { alpha: a.alpha, grid: a.grid, ..ScanOptions::default() },
        ..ClassifyOptions::default()
    };
    let report = classify(&e, &options)?;
    if let Some(dir) = &a.ladders {
        fs::create_dir_all(dir).map_err(|err| Failure::Usage(format!("cannot create {}: {err}", dir.display())))?;
        for (name, ladder) in report.ladders() {
            let mut buf = Vec::new();
            write_ladder_csv(&mut buf, &ladder)?;
            write_file(&dir.join(format!("{name}.csv")), &buf)?;
        }
    }
    emit_json(a.out.as_deref(), &report)
}

/// Decades `10, 100, ...` below `rmax`, then `rmax`.
fn decade_ladder(rmax: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = (1..).map(|k| 10f64.powi(k)).take_while(|&r| r < rmax).collect();
    radii.push(rmax);
    radii
}

#[derive(Serialize)]
struct LadderRow {
    radius: f64,
    partial_integral: f64,
}

fn run_benedicks(a: &BenedicksArgs) -> CliResult<()> {
    let e = load_gaps(&a.input)?;
    if !(a.rmax > 1.0) {
        return Err(Failure::Usage("--rmax must exceed 1".into()));
    }
    let opts = ScanOptions { alpha: a.alpha, grid: a.grid, ratio: a.ratio, ..ScanOptions::default() };
    let scan = benedicks_scan(&e, &decade_ladder(a.rmax), &opts)?;
    if let Some(path) = &a.csv {
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &scan)?;
        write_file(path, &buf)?;
    }
    let rows: Vec<LadderRow> =
        scan.ladder.iter().map(|&(radius, partial_integral)| LadderRow { radius, partial_integral }).collect();
    emit_json(None, &rows)
}

fn run_construct(a: &ConstructArgs) -> CliResult<()> {
    let theta = ThetaSpec::parse(&a.theta).map_err(|e| Failure::Usage(e.to_string()))?;
    let e = construct_remark4(&theta, a.levels)?;
    if !remark4_majorant_holds(&e, &theta, a.levels)? {
        return Err(Failure::Domain("constructed set violates its theta majorant".into()));
    }
    emit_json(a.out.as_deref(), &e)
}

fn run_smoothness(a: &SmoothnessArgs) -> CliResult<()> {
    let cfg = EquilibriumConfig::with_nodes(a.nodes);
    let set = match load(&a.input)? {
        Input::Set(s) => s,
        Input::Gaps(g) => gaps_to_compact(&g.truncate(a.truncation), a.pivot)?.0,
    };
    let ratios = CombMap::new(&set, &cfg)?.smoothness_ratio(&a.ys)?;
    let mut buf = Vec::new();
    write_smoothness_csv(&mut buf, &a.ys, &ratios)?;
    match &a.csv {
        Some(path) => write_file(path, &buf),
        None => {
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Capacity(a) => run_capacity(a),
        Command::Green(a) => run_green(a),
        Command::Comb(a) => run_comb(a),
        Command::Modulus(a) => run_modulus(a),
        Command::Classify(a) => run_classify(a),
        Command::Benedicks(a) => run_benedicks(a),
        Command::Construct(a) => run_construct(a),
        Command::Smoothness(a) => run_smoothness(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("run `denjoy --help` for the synopsis");
            ExitCode::from(2)
        }
    }
}
