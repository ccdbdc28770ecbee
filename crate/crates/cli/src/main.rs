//! `livsic` command-line tool.
//!
//! Exit codes: 0 on success, 2 when a verification residual exceeds its
//! tolerance, 1 on input or validation errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use livsic::charfn::VonNeumannParameter;
use livsic::grid::GridSpec;
use livsic::herglotz::{threshold_classify, WeylEvaluator};
use livsic::homogeneous::{
    cayley_relation_check, extension_type, mn_inversion_check, HalfLine, HomogeneousModel,
};
use livsic::io::{parse_measure, parse_triple};
use livsic::measure::{PointClass, RealMeasure};
use livsic::mobius::MobiusMap;
use livsic::oracle::{
    build_dissipative, char_bounded_trace, check_rank_one_inverse, check_resolvent_identity,
    default_anchor, discretize, DiscreteModel, DissipativeMatrix,
};
use livsic::transform::{
    transform_triple, verify_invariance_with, Branch, InvarianceOptions, ModelTriple, TransformOutcome,
};
use livsic::{Complex, Error};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "livsic", version, about = "Characteristic functions of dissipative triples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here (atomically) instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the timestamp field so reports are byte-identical across runs.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Quantity {
    /// Livšic function s.
    S,
    /// Characteristic function S.
    Char,
    /// Normalized characteristic function.
    Hat,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// A single evaluation point such as `i`, `2i` or `1+2i`; overrides --grid.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    z: Option<Complex>,
    /// `default` or `re_min,re_max,im_min,im_max,re_count,im_count`.
    #[arg(long, default_value = "default", value_parser = parse_grid, allow_hyphen_values = true)]
    grid: GridSpec,
}

impl GridArgs {
    fn points(&self) -> Result<Vec<Complex>, Error> {
        match self.z {
            Some(z) => Ok(vec![z]),
            None => self.grid.points(),
        }
    }

    fn echo(&self) -> Value {
        match self.z {
            Some(z) => json!({"z": cjson(z)}),
            None => json!({"grid": self.grid}),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weyl function of a measure on a grid.
    Weyl {
        #[arg(long)]
        measure: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Livšic or characteristic function of a triple on a grid.
    Charfn {
        #[arg(long)]
        triple: PathBuf,
        #[arg(long, value_enum, default_value_t = Quantity::Char)]
        quantity: Quantity,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Classify real points as core spectrum or quasi-regular.
    Classify {
        #[arg(long)]
        measure: PathBuf,
        /// Comma-separated real points; `inf` classifies infinity.
        #[arg(long, allow_hyphen_values = true)]
        points: String,
    },
    /// Transform a triple by a Möbius map and report the image.
    Transform {
        #[arg(long)]
        triple: PathBuf,
        /// Coefficients `a,b,c,d` of `(az+b)/(cz+d)`.
        #[arg(long, value_parser = parse_map, allow_hyphen_values = true)]
        map: MobiusMap,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check the invariance identity for a triple and a map.
    VerifyInvariance {
        #[arg(long)]
        triple: PathBuf,
        #[arg(long, value_parser = parse_map, allow_hyphen_values = true)]
        map: MobiusMap,
        #[command(flatten)]
        grid: GridArgs,
        /// Residual tolerance; defaults to 1e-6 (regular) or 1e-4 (bounded).
        #[arg(long)]
        tol: Option<f64>,
        /// Nodes of the discretisation used in the bounded case.
        #[arg(long, default_value_t = 4000)]
        nodes: usize,
    },
    /// Homogeneous model on a half-line: M, s and S on a grid plus checks.
    Homogeneous {
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long, value_enum, default_value_t = SideArg::Positive)]
        side: SideArg,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0")]
        kappa: Complex,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Dense linear-algebra checks on a discrete model.
    Oracle {
        /// Discretise this triple instead of drawing a random model.
        #[arg(long)]
        triple: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Friedrichs / Krein-von Neumann signature at the spectral bottom.
    ExtensionType {
        /// Homogeneous model exponent (positive half-line).
        #[arg(long, allow_hyphen_values = true, conflicts_with = "measure")]
        nu: Option<f64>,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        bottom: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Positive,
    Negative,
}

fn parse_real(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

/// Accepts `x`, `yi`, `i`, `-i`, `x+yi`, `x-yi`.
fn parse_point(s: &str) -> Result<Complex, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number {s:?}");
    let Some(body) = t.strip_suffix('i') else {
        return parse_real(&t).map(|x| Complex::new(x, 0.0));
    };
    let split = body
        .char_indices()
        .rev()
        .find(|&(k, ch)| k > 0 && (ch == '+' || ch == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k);
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other).map_err(|_| bad())?,
    };
    let re = parse_real(re).map_err(|_| bad())?;
    Ok(Complex::new(re, im))
}

fn parse_map(s: &str) -> Result<MobiusMap, String> {
    let v: Vec<f64> = s.split(',').map(parse_real).collect::<Result<_, _>>()?;
    let [a, b, c, d] = v[..] else {
        return Err(format!("expected four coefficients a,b,c,d, got {}", v.len()));
    };
    MobiusMap::new(a, b, c, d).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    if s == "default" {
        return Ok(GridSpec::default());
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 6 {
        return Err("expected `default` or re_min,re_max,im_min,im_max,re_count,im_count".into());
    }
    let count = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
    let spec = GridSpec {
        re_min: parse_real(parts[0])?,
        re_max: parse_real(parts[1])?,
        im_min: parse_real(parts[2])?,
        im_max: parse_real(parts[3])?,
        re_count: count(parts[4])?,
        im_count: count(parts[5])?,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Adding zero turns `-0.0` into `0.0` so echoed values read cleanly.
fn clean(x: f64) -> f64 {
    x + 0.0
}

fn cjson(z: Complex) -> Value {
    json!({"re": clean(z.re), "im": clean(z.im)})
}

fn map_json(f: &MobiusMap) -> Value {
    json!(f.coefficients().map(clean))
}

/// One grid cell: point, optional quantity label, and value or failure.
struct Cell {
    z: Complex,
    quantity: Option<&'static str>,
    value: Result<Complex, Error>,
}

struct Report {
    command: &'static str,
    config: Value,
    results: Value,
    residuals: Value,
    pass: bool,
    cells: Vec<Cell>,
    /// Residual above tolerance, as opposed to an outright error.
    failed_check: bool,
}

impl Report {
    fn new(command: &'static str, config: Value) -> Self {
        Report {
            command,
            config,
            results: json!({}),
            residuals: json!({}),
            pass: true,
            cells: vec![],
            failed_check: false,
        }
    }

    fn check(&mut self, name: &str, residual: f64, tol: f64) {
        self.residuals[name] = json!({"value": residual, "tolerance": tol});
        if !(residual <= tol) {
            self.pass = false;
            self.failed_check = true;
        }
    }

    fn grid_json(&self) -> Value {
        Value::Array(
            self.cells
                .iter()
                .map(|c| {
                    let mut row = json!({"z": cjson(c.z)});
                    if let Some(q) = c.quantity {
                        row["quantity"] = json!(q);
                    }
                    match &c.value {
                        Ok(v) => row["value"] = cjson(*v),
                        Err(e) => {
                            row["value"] = Value::Null;
                            row["error"] = json!(e.to_string());
                        }
                    }
                    row
                })
                .collect(),
        )
    }

    fn failures(&self) -> Vec<String> {
        self.cells
            .iter()
            .filter_map(|c| c.value.as_ref().err().map(|e| format!("{}: {e}", c.z)))
            .collect()
    }

    fn to_json(&self, timestamp: bool) -> String {
        let mut results = self.results.clone();
        if !self.cells.is_empty() {
            results["grid"] = self.grid_json();
        }
        let mut v = json!({
            "command": self.command,
            "config_echo": self.config,
            "results": results,
            "residuals": self.residuals,
            "pass": self.pass,
        });
        if timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            v["timestamp"] = json!(secs);
        }
        let mut s = serde_json::to_string_pretty(&v).expect("report is serialisable");
        s.push('\n');
        s
    }

    fn to_csv(&self) -> String {
        let labelled = self.cells.iter().any(|c| c.quantity.is_some());
        let mut s = String::from("re_z,im_z,re_val,im_val,abs_val");
        if labelled {
            s.push_str(",quantity");
        }
        s.push('\n');
        for c in &self.cells {
            let v = c.value.as_ref().copied().unwrap_or(Complex::new(f64::NAN, f64::NAN));
            let abs = if c.value.is_ok() { v.norm() } else { f64::NAN };
            write!(s, "{:e},{:e},{:e},{:e},{:e}", c.z.re, c.z.im, v.re, v.im, abs).unwrap();
            if labelled {
                write!(s, ",{}", c.quantity.unwrap_or("")).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn evaluate<F>(points: &[Complex], quantity: Option<&'static str>, f: F) -> Vec<Cell>
where
    F: Fn(Complex) -> Result<Complex, Error> + Sync,
{
    points
        .par_iter()
        .map(|&z| Cell {
            z,
            quantity,
            value: f(z),
        })
        .collect()
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn load_measure(path: &Path) -> Result<RealMeasure, Error> {
    parse_measure(&read(path)?).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn load_triple(path: &Path) -> Result<ModelTriple, Error> {
    parse_triple(&read(path)?).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn class_json(c: PointClass) -> Value {
    match c {
        PointClass::CoreSpectrum => json!({"class": "core"}),
        PointClass::QuasiRegular { has_atom } => json!({"class": "quasi-regular", "atom": has_atom}),
    }
}

fn run(command: Command) -> Result<Report, Error> {
    match command {
        Command::Weyl { measure, grid } => {
            let w = WeylEvaluator::from_measure(load_measure(&measure)?)?;
            let mut r = Report::new("weyl", json!({"measure": measure, "points": grid.echo()}));
            r.cells = evaluate(&grid.points()?, None, |z| w.weyl_m(z));
            Ok(r)
        }
        Command::Charfn { triple, quantity, grid } => {
            let t = load_triple(&triple)?;
            let ce = t.char_evaluator();
            let mut r = Report::new(
                "charfn",
                json!({"triple": triple, "quantity": format!("{quantity:?}").to_lowercase(), "points": grid.echo()}),
            );
            r.results["kappa"] = cjson(t.kappa().value());
            r.cells = evaluate(&grid.points()?, None, |z| match quantity {
                Quantity::S => ce.livsic_s(z),
                Quantity::Char => ce.char_s(z),
                Quantity::Hat => ce.normalized_s_hat(z),
            });
            Ok(r)
        }
        Command::Classify { measure, points } => {
            let m = load_measure(&measure)?;
            let mut r = Report::new("classify", json!({"measure": measure, "points": points}));
            let mut rows = Vec::new();
            for p in points.split(',') {
                let p = p.trim();
                let class = if p == "inf" || p == "+inf" || p == "-inf" {
                    m.classify_infinity()
                } else {
                    let s = parse_real(p).map_err(Error::InvalidArgument)?;
                    m.classify_point(s)?
                };
                let mut row = class_json(class);
                row["point"] = json!(p);
                rows.push(row);
            }
            r.results["points"] = Value::Array(rows);
            Ok(r)
        }
        Command::Transform { triple, map, grid } => {
            let t = load_triple(&triple)?;
            let mut r = Report::new(
                "transform",
                json!({"triple": triple, "map": map_json(&map), "points": grid.echo()}),
            );
            match transform_triple(&t, &map)? {
                TransformOutcome::Regular(image) => {
                    r.results["branch"] = json!("regular");
                    r.results["kappa"] = cjson(image.kappa().value());
                    let ce = image.char_evaluator();
                    r.cells = evaluate(&grid.points()?, None, |z| ce.normalized_s_hat(z));
                }
                TransformOutcome::Bounded(case) => {
                    r.results["branch"] = json!("bounded");
                    r.results["omega"] = json!(clean(case.omega));
                    r.results["boundary_phase"] = cjson(case.boundary_phase);
                }
            }
            Ok(r)
        }
        Command::VerifyInvariance {
            triple,
            map,
            grid,
            tol,
            nodes,
        } => {
            let t = load_triple(&triple)?;
            if let Some(tol) = tol {
                if !(tol > 0.0) {
                    return Err(Error::InvalidArgument("tolerance must be positive".into()));
                }
            }
            let opts = InvarianceOptions {
                nodes,
                ..InvarianceOptions::default()
            };
            let report = verify_invariance_with(&t, &map, &grid.points()?, opts)?;
            let mut r = Report::new(
                "verify-invariance",
                json!({"triple": triple, "map": map_json(&map), "points": grid.echo(), "nodes": nodes, "tol": tol}),
            );
            let default_tol = match report.branch {
                Branch::I => 1e-6,
                Branch::Ii => 1e-4,
            };
            r.check("invariance", report.residual, tol.unwrap_or(default_tol));
            if let Some(d) = report.kappa_drift {
                r.check("kappa_drift", d, 0.0);
            }
            if let Some(p) = report.pullback_crosscheck {
                r.check("pullback", p, 1e-8);
            }
            r.results = serde_json::to_value(&report).expect("serialisable");
            r.cells = report
                .grid
                .iter()
                .flat_map(|row| {
                    [
                        Cell { z: row.z, quantity: Some("lhs"), value: Ok(row.lhs) },
                        Cell { z: row.z, quantity: Some("rhs"), value: Ok(row.rhs) },
                    ]
                })
                .collect();
            r.results.as_object_mut().expect("object").remove("grid");
            Ok(r)
        }
        Command::Homogeneous { nu, side, kappa, grid } => {
            let side = match side {
                SideArg::Positive => HalfLine::Positive,
                SideArg::Negative => HalfLine::Negative,
            };
            let h = HomogeneousModel::new(nu, side)?;
            let t = ModelTriple::homogeneous(h, VonNeumannParameter::new(kappa)?)?;
            let ce = t.char_evaluator();
            let points = grid.points()?;
            let mut r = Report::new(
                "homogeneous",
                json!({"nu": nu, "side": side, "kappa": cjson(kappa), "points": grid.echo()}),
            );
            r.results["norm_squared"] = json!(h.norm_squared());
            let mut worst: f64 = 0.0;
            for &z in &points {
                let (q, _) = h.ratio_of_integrals_m(z)?;
                worst = worst.max((q - h.closed_form_m(z)).norm());
            }
            r.check("closed_vs_quadrature", worst, 1e-6);
            if side == HalfLine::Positive && nu.abs() < 1.0 {
                if nu != 0.0 {
                    r.check("cayley_relation", cayley_relation_check(nu.abs(), &points)?, 1e-12);
                }
                r.check("mn_inversion", mn_inversion_check(nu, &points)?, 1e-10);
                let e = extension_type(&h)?;
                r.results["extension_type"] = serde_json::to_value(e).expect("serialisable");
                if !e.agrees() {
                    r.pass = false;
                    r.failed_check = true;
                }
            }
            let mut cells = Vec::new();
            cells.extend(evaluate(&points, Some("M"), |z| Ok(h.closed_form_m(z))));
            cells.extend(evaluate(&points, Some("s"), |z| ce.livsic_s(z)));
            cells.extend(evaluate(&points, Some("S"), |z| ce.char_s(z)));
            r.cells = cells;
            Ok(r)
        }
        Command::Oracle { triple, n, seed } => {
            let d = match &triple {
                Some(path) => discretize(&load_triple(path)?, n, InvarianceOptions::default().quantile_cut)?,
                None => DiscreteModel::random(n, seed)?,
            };
            let mut r = Report::new("oracle", json!({"triple": triple, "n": n, "seed": seed}));
            r.results["len"] = json!(d.len());
            r.results["kappa"] = cjson(d.kappa().value());
            let z1 = Complex::new(0.3, 0.7);
            let z2 = Complex::new(-1.2, 0.4);
            r.check("resolvent_identity", check_resolvent_identity(&d, z1, z2)?, 1e-8);
            match check_rank_one_inverse(&d) {
                Ok(v) => r.check("rank_one_inverse", v, 1e-10),
                Err(e) => r.results["rank_one_inverse"] = json!(format!("skipped: {e}")),
            }
            let anchor = default_anchor(&d);
            let a = build_dissipative(&d, anchor)?;
            let b = build_dissipative(&d, anchor + Complex::new(0.5, 1.0))?;
            let diff = (a.matrix() - b.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max);
            r.check("anchor_independence", diff, 1e-8);
            let structured = d.rank_one();
            let dense = DissipativeMatrix::from_matrix(structured.dense())?;
            let probes = [Complex::new(0.0, 1.5), Complex::new(-2.0, 0.5), Complex::new(3.0, 4.0)];
            let mut worst: f64 = 0.0;
            for z in probes {
                worst = worst.max((char_bounded_trace(&dense, z)? - structured.char_fn(z)?).norm());
            }
            r.check("trace_formula", worst, 1e-10);
            Ok(r)
        }
        Command::ExtensionType { nu, measure, bottom } => {
            let (w, config) = match (nu, &measure) {
                (Some(nu), None) => {
                    let h = HomogeneousModel::positive(nu)?;
                    let mut r = Report::new("extension-type", json!({"nu": nu}));
                    let e = extension_type(&h)?;
                    r.results = serde_json::to_value(e).expect("serialisable");
                    if !e.agrees() {
                        r.pass = false;
                        r.failed_check = true;
                    }
                    return Ok(r);
                }
                (None, Some(path)) => (
                    WeylEvaluator::from_measure(load_measure(path)?)?,
                    json!({"measure": path, "bottom": bottom}),
                ),
                _ => return Err(Error::InvalidArgument("give exactly one of --nu or --measure".into())),
            };
            let mut r = Report::new("extension-type", config);
            r.results["sampled"] = serde_json::to_value(threshold_classify(&w, bottom)?).expect("serialisable");
            Ok(r)
        }
    }
}

fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = cli.common.clone();
    let report = match run(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let failures = report.failures();
    if !failures.is_empty() {
        eprintln!("{} grid point(s) failed:", failures.len());
        for f in &failures {
            eprintln!("  {f}");
        }
    }
    let body = match common.format {
        Format::Json => report.to_json(!common.no_timestamp),
        Format::Csv => report.to_csv(),
    };
    let written = match &common.out {
        Some(path) => write_atomic(path, &body),
        None => std::io::stdout().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if report.failed_check {
        for (name, v) in report.residuals.as_object().into_iter().flatten() {
            if !(v["value"].as_f64().unwrap_or(f64::NAN) <= v["tolerance"].as_f64().unwrap_or(0.0)) {
                eprintln!("check {name} failed: {} > {}", v["value"], v["tolerance"]);
            }
        }
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
