//! Command-line front end for `toricq`.
//!
//! Every command returns an [`Outcome`] holding the exit code and the
//! rendered report; nothing is printed until the run is finished. Exit codes
//! are 0 for success, 1 for a domain failure (validation, audit, numerics)
//! and 2 for usage or input errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use toricq::exact::{format_rational, parse_rational, rat, Rational};
use toricq::geodesic::{
    connection_form_limit, connection_form_s, grassmann_distance, polarization_frame_limit,
    polarization_frame_s, MabuchiRay,
};
use toricq::polytope::{DelzantPolytope, FrameChange, SliceMap};
use toricq::potential::SymplecticPotential;
use toricq::quantization::{neville_at_zero, QuantizationModel, LIMIT_RELATIVE_TOLERANCE};
use toricq::reduction::{reduce_affine, reduced_scalar_curvature, reduction_dimension_audit};
use toricq::ToricError;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_NORM_GRID: &str = "10,20,40,80";
pub const DEFAULT_FLOW_GRID: &str = "0,1,2,4,8,16,32,64,128,256";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Points,
    Norms,
    Flow,
    Reduce,
    Curvature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug, Clone)]
#[command(
    name = "toricq",
    version,
    about = "Half-form corrected quantization of toric manifolds along Mabuchi rays"
)]
pub struct Args {
    /// Polytope JSON file: {"dim": n, "facets": [{"normal": [..], "offset": "p/q"}]}.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub command: Command,
    /// Number of coordinates carried by the Hamiltonian; defaults to the dimension
    /// (1 for `reduce`).
    #[arg(long)]
    pub p: Option<usize>,
    /// Frame change in SL(n, Z), rows separated by ';', e.g. "1,1;0,1".
    #[arg(long = "B")]
    pub frame: Option<String>,
    /// Strictly increasing geodesic times, e.g. "10,20,40".
    #[arg(long = "s-grid")]
    pub s_grid: Option<String>,
    /// Lattice point (norms) or level (reduce), entries separated by ';'.
    #[arg(long)]
    pub m: Option<String>,
    /// Slope of the hyperplane x_n = alpha (x_1 + ... + x_{n-1}) + c for `reduce`
    /// and `curvature`.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample points for `flow` and `curvature`: "x1,x2;y1,y2".
    #[arg(long)]
    pub points: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl From<ToricError> for CliError {
    fn from(e: ToricError) -> Self {
        match e {
            ToricError::InvalidInput { .. }
            | ToricError::DimensionMismatch { .. }
            | ToricError::InvalidFrameChange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: PathBuf,
    pub command: Command,
    pub p: Option<usize>,
    pub frame: Option<Vec<Vec<i64>>>,
    pub s_grid: Option<Vec<f64>>,
    pub m: Option<Vec<i64>>,
    pub alpha: Option<Rational>,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub points: Option<Vec<Vec<f64>>>,
}

impl RunConfig {
    pub fn from_args(args: Args) -> CliResult<Self> {
        if !(args.tol.is_finite() && args.tol > 0.0) {
            return Err(CliError::Usage(format!("--tol must be > 0, got {}", args.tol)));
        }
        let s_grid = args.s_grid.as_deref().map(parse_grid).transpose()?;
        Ok(Self {
            input: args.input,
            command: args.command,
            p: args.p,
            frame: args.frame.as_deref().map(parse_matrix).transpose()?,
            s_grid,
            m: args.m.as_deref().map(parse_ints).transpose()?,
            alpha: args
                .alpha
                .as_deref()
                .map(|a| parse_rational(a).map_err(|_| CliError::Usage(format!("--alpha: cannot parse {a:?}"))))
                .transpose()?,
            tol: args.tol,
            format: args.format,
            out: args.out,
            points: args.points.as_deref().map(parse_points).transpose()?,
        })
    }
}

pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--s-grid: cannot parse {t:?}")))
        })
        .collect::<CliResult<_>>()?;
    if grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(CliError::Usage("--s-grid: times must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--s-grid: must be strictly increasing".into()));
    }
    Ok(grid)
}

pub fn parse_matrix(text: &str) -> CliResult<Vec<Vec<i64>>> {
    let rows: Vec<Vec<i64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| CliError::Usage(format!("--B: cannot parse {t:?}")))
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Usage("--B: matrix must be square".into()));
    }
    Ok(rows)
}

fn parse_ints(text: &str) -> CliResult<Vec<i64>> {
    text.split(';')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Usage(format!("--m: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_points(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("--points: cannot parse {t:?}")))
                })
                .collect()
        })
        .collect()
}

/// Result of a command: exit code plus the rendered report.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn join_ints(m: &[i64]) -> String {
    m.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

fn join_f64(x: &[f64]) -> String {
    x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

pub fn load_polytope(path: &Path) -> CliResult<DelzantPolytope> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    DelzantPolytope::from_json_str(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn frame_for(cfg: &RunConfig, n: usize, p: usize) -> CliResult<FrameChange> {
    let frame = match &cfg.frame {
        Some(b) => {
            if b.len() != n {
                return Err(CliError::Usage(format!("--B must be {n}x{n}")));
            }
            FrameChange::new(b.clone(), p)?
        }
        None => FrameChange::identity(n, p)?,
    };
    Ok(frame)
}

fn p_or(cfg: &RunConfig, default: usize) -> usize {
    cfg.p.unwrap_or(default)
}

/// Parses command-line arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match execute(&cfg) {
        Ok(outcome) => {
            if let Err(e) = emit(&cfg, &outcome.report) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cfg: &RunConfig, report: &str) -> CliResult<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, report)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

/// Runs the configured command without touching stdout or the output file.
pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    let poly = load_polytope(&cfg.input)?;
    match cfg.command {
        Command::Validate => cmd_validate(cfg, &poly),
        Command::Points => cmd_points(cfg, &poly),
        Command::Norms => cmd_norms(cfg, &poly),
        Command::Flow => cmd_flow(cfg, &poly),
        Command::Reduce => cmd_reduce(cfg, &poly),
        Command::Curvature => cmd_curvature(cfg, &poly),
    }
}

pub fn cmd_validate(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    let report = poly.validate();
    let text = match cfg.format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["name"] = json!(poly.name);
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => {
            let mut s = String::from("vertex,active,det,ok\n");
            for v in &report.vertices {
                let active: Vec<String> = v.active.iter().map(usize::to_string).collect();
                let det = v.det.map_or(String::new(), |d| d.to_string());
                let _ = writeln!(s, "{},{},{det},{}", v.point.join(";"), active.join(";"), v.ok);
            }
            let verdict = serde_json::to_value(report.verdict).expect("verdict");
            let _ = writeln!(s, "# verdict: {}", verdict.as_str().unwrap_or("?"));
            s
        }
    };
    Ok(Outcome {
        exit_code: if report.ok { 0 } else { 1 },
        report: text,
    })
}

pub fn cmd_points(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    let p = p_or(cfg, poly.dim);
    let frame = frame_for(cfg, poly.dim, p)?;
    let moved = poly.apply_frame_change(&frame)?;
    let basis = toricq::quantization::quantum_basis(&moved, p)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = String::from("index,m,hamiltonian\n");
            for e in &basis {
                let _ = writeln!(s, "{},{},{}", e.index, join_ints(&e.m), fmt_f64(e.hamiltonian));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = basis
                .iter()
                .map(|e| json!({"index": e.index, "m": e.m, "hamiltonian": e.hamiltonian}))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&rows).expect("json"))
        }
    };
    Ok(Outcome {
        exit_code: 0,
        report: text,
    })
}

/// One CSV row of the norm table; `s = None` marks the limit row.
#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub m: Vec<i64>,
    pub s: Option<f64>,
    pub norm2: Option<f64>,
    pub tilde_norm2: f64,
    pub c_m: f64,
    pub limit: f64,
    pub pass: bool,
}

pub fn norm_rows(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Vec<NormRow>> {
    let p = p_or(cfg, poly.dim);
    let frame = frame_for(cfg, poly.dim, p)?;
    let model = QuantizationModel::with_frame(poly, &frame)?;
    let grid = match &cfg.s_grid {
        Some(g) => g.clone(),
        None => parse_grid(DEFAULT_NORM_GRID)?,
    };
    let elements = match &cfg.m {
        Some(m) => vec![model.element(m)?.clone()],
        None => model.basis().to_vec(),
    };
    let mut rows = Vec::new();
    for e in &elements {
        let limit = model.limit_constant(e, cfg.tol)?;
        let values = grid
            .iter()
            .map(|&s| model.norm(e, s, cfg.tol))
            .collect::<toricq::Result<Vec<_>>>()?;
        for v in &values {
            rows.push(NormRow {
                m: e.m.clone(),
                s: Some(v.s),
                norm2: Some(v.norm_squared()),
                tilde_norm2: v.tilde_norm_squared,
                c_m: limit.c_m,
                limit: limit.limit,
                pass: v.converged,
            });
        }
        let usable: Vec<_> = values.iter().filter(|v| v.s > 0.0).collect();
        let extrapolated = if usable.is_empty() {
            f64::NAN
        } else {
            let h: Vec<f64> = usable.iter().map(|v| 1.0 / v.s).collect();
            let t: Vec<f64> = usable.iter().map(|v| v.tilde_norm_squared).collect();
            neville_at_zero(&h, &t)
        };
        let within = (extrapolated - limit.limit).abs()
            <= cfg.tol.max(LIMIT_RELATIVE_TOLERANCE * limit.limit);
        rows.push(NormRow {
            m: e.m.clone(),
            s: None,
            norm2: None,
            tilde_norm2: extrapolated,
            c_m: limit.c_m,
            limit: limit.limit,
            pass: within && limit.converged && values.iter().all(|v| v.converged),
        });
    }
    Ok(rows)
}

/// Norm table: one row per `(m, s)` and a final `s = inf` row per `m` whose
/// `tilde_norm2` is the extrapolated value and whose `pass` compares it
/// with the limit. On data rows `pass` is the quadrature convergence flag.
pub fn cmd_norms(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    let rows = norm_rows(cfg, poly)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = String::from("m,s,norm2,tilde_norm2,c_m,limit,pass\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    join_ints(&r.m),
                    r.s.map_or("inf".into(), fmt_f64),
                    r.norm2.map_or(String::new(), fmt_f64),
                    fmt_f64(r.tilde_norm2),
                    fmt_f64(r.c_m),
                    fmt_f64(r.limit),
                    r.pass
                );
            }
            s
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "m": r.m,
                        "s": r.s.map_or(Value::Null, json_f64),
                        "norm2": r.norm2.map_or(Value::Null, json_f64),
                        "tilde_norm2": json_f64(r.tilde_norm2),
                        "c_m": json_f64(r.c_m),
                        "limit": json_f64(r.limit),
                        "pass": r.pass,
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
    };
    Ok(Outcome {
        exit_code: 0,
        report: text,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRow {
    pub point: Vec<f64>,
    pub s: f64,
    pub distance: Option<f64>,
    pub connection_gap: Option<f64>,
    pub error: Option<String>,
}

/// Frame distance and connection-form gap to the limit at each sample point.
/// Points are given in the input coordinates and mapped through `B`.
pub fn flow_rows(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Vec<FlowRow>> {
    let p = p_or(cfg, poly.dim);
    let frame = frame_for(cfg, poly.dim, p)?;
    poly.require_delzant()?;
    let ray = MabuchiRay::from_polytope(poly, &frame)?;
    let grid = match &cfg.s_grid {
        Some(g) => g.clone(),
        None => parse_grid(DEFAULT_FLOW_GRID)?,
    };
    let points = match &cfg.points {
        Some(pts) => pts.clone(),
        None => vec![poly.barycenter()],
    };
    let mut rows = Vec::new();
    for point in points {
        if point.len() != poly.dim {
            return Err(CliError::Usage(format!(
                "--points: expected {} coordinates, got {}",
                poly.dim,
                point.len()
            )));
        }
        let x = frame.map_point(&point);
        let limit = polarization_frame_limit(&ray, &x)
            .and_then(|f| Ok((f, connection_form_limit(&ray, &x)?)));
        for &s in &grid {
            let row = match &limit {
                Ok((frame_inf, conn_inf)) => {
                    let r = polarization_frame_s(&ray, &x, s).and_then(|fs| {
                        let d = grassmann_distance(&fs, frame_inf)?;
                        let gap = connection_form_s(&ray, &x, s)?.distance(conn_inf);
                        Ok((d, gap))
                    });
                    match r {
                        Ok((d, gap)) => FlowRow {
                            point: point.clone(),
                            s,
                            distance: Some(d),
                            connection_gap: Some(gap),
                            error: None,
                        },
                        Err(e) => error_row(&point, s, e),
                    }
                }
                Err(e) => error_row(&point, s, e.clone()),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn error_row(point: &[f64], s: f64, e: ToricError) -> FlowRow {
    FlowRow {
        point: point.to_vec(),
        s,
        distance: None,
        connection_gap: None,
        error: Some(e.to_string().replace(',', ";")),
    }
}

pub fn cmd_flow(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    let rows = flow_rows(cfg, poly)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = String::from("point,s,distance,connection_gap,error\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    join_f64(&r.point),
                    fmt_f64(r.s),
                    r.distance.map_or(String::new(), fmt_f64),
                    r.connection_gap.map_or(String::new(), fmt_f64),
                    r.error.as_deref().unwrap_or("")
                );
            }
            s
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "point": r.point,
                        "s": r.s,
                        "distance": r.distance.map_or(Value::Null, json_f64),
                        "connection_gap": r.connection_gap.map_or(Value::Null, json_f64),
                        "error": r.error,
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
    };
    Ok(Outcome {
        exit_code: 0,
        report: text,
    })
}

/// Hyperplane `x_n = alpha (x_1 + ... + x_{n-1}) + c`, with `c` from `--m`.
fn hyperplane_map(cfg: &RunConfig, n: usize, alpha: Rational) -> CliResult<SliceMap> {
    if n < 2 {
        return Err(CliError::Usage("--alpha needs dimension >= 2".into()));
    }
    let c = match &cfg.m {
        None => rat(0),
        Some(m) if m.len() == 1 => rat(m[0] as i128),
        Some(_) => return Err(CliError::Usage("--m: the hyperplane level is a single integer".into())),
    };
    Ok(SliceMap::hyperplane(&vec![alpha; n - 1], c))
}

fn default_curvature_points(cfg: &RunConfig, dim: usize) -> Vec<Vec<f64>> {
    cfg.points.clone().unwrap_or_else(|| vec![vec![1.0; dim]])
}

/// With `--alpha`, the hyperplane reduction and its curvature at `--points`
/// (default all ones); otherwise the level-by-level dimension audit.
pub fn cmd_reduce(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    if let Some(alpha) = cfg.alpha {
        let map = hyperplane_map(cfg, poly.dim, alpha)?;
        let red = reduce_affine(poly, &map)?;
        let k = red.dim();
        let curvature: Vec<(Vec<f64>, std::result::Result<f64, String>)> = default_curvature_points(cfg, k)
            .into_iter()
            .map(|y| {
                let s = reduced_scalar_curvature(&red, &y).map_err(|e| e.to_string());
                (y, s)
            })
            .collect();
        let text = match cfg.format {
            Format::Json => {
                let pts: Vec<Value> = curvature
                    .iter()
                    .map(|(y, s)| match s {
                        Ok(v) => json!({"y": y, "scalar_curvature": v}),
                        Err(e) => json!({"y": y, "error": e}),
                    })
                    .collect();
                let v = json!({
                    "alpha": format_rational(&alpha),
                    "dim": k,
                    "class": red.class.as_str(),
                    "over_vertexed": red.over_vertexed,
                    "non_primitive": red.non_primitive,
                    "curvature": pts,
                });
                format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
            }
            Format::Csv => {
                let mut s = format!("# alpha: {}\n# class: {}\ny,scalar_curvature,error\n", format_rational(&alpha), red.class.as_str());
                for (y, v) in &curvature {
                    match v {
                        Ok(v) => {
                            let _ = writeln!(s, "{},{},", join_f64(y), fmt_f64(*v));
                        }
                        Err(e) => {
                            let _ = writeln!(s, "{},,{}", join_f64(y), e.replace(',', ";"));
                        }
                    }
                }
                s
            }
        };
        return Ok(Outcome {
            exit_code: 0,
            report: text,
        });
    }

    let p = p_or(cfg, 1);
    let frame = frame_for(cfg, poly.dim, p)?;
    let moved = poly.apply_frame_change(&frame)?;
    let audit = reduction_dimension_audit(&moved, p)?;
    let text = match cfg.format {
        Format::Json => {
            let levels: Vec<Value> = audit
                .levels
                .iter()
                .map(|l| json!({"c": l.c, "dim": l.dim, "class": l.class.as_str(), "trivial": l.trivial}))
                .collect();
            let v = json!({
                "p": audit.p,
                "levels": levels,
                "total": audit.total,
                "basis_size": audit.basis_size,
                "consistent": audit.consistent,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => {
            let mut s = String::from("c,dim,class,trivial\n");
            for l in &audit.levels {
                let _ = writeln!(s, "{},{},{},{}", join_ints(&l.c), l.dim, l.class.as_str(), l.trivial);
            }
            let _ = writeln!(s, "# total: {} basis: {} consistent: {}", audit.total, audit.basis_size, audit.consistent);
            s
        }
    };
    Ok(Outcome {
        exit_code: if audit.consistent { 0 } else { 1 },
        report: text,
    })
}

/// Abreu scalar curvature of the Guillemin potential, or of the reduced
/// potential when `--alpha` is given, at each sample point.
pub fn cmd_curvature(cfg: &RunConfig, poly: &DelzantPolytope) -> CliResult<Outcome> {
    let values: Vec<(Vec<f64>, std::result::Result<f64, String>)> = match cfg.alpha {
        Some(alpha) => {
            let red = reduce_affine(poly, &hyperplane_map(cfg, poly.dim, alpha)?)?;
            default_curvature_points(cfg, red.dim())
                .into_iter()
                .map(|y| {
                    let s = reduced_scalar_curvature(&red, &y).map_err(|e| e.to_string());
                    (y, s)
                })
                .collect()
        }
        None => {
            let g = SymplecticPotential::guillemin(poly)?;
            let pts = cfg.points.clone().unwrap_or_else(|| vec![poly.barycenter()]);
            pts.into_iter()
                .map(|x| {
                    let s = g.abreu_scalar_curvature(&x).map_err(|e| e.to_string());
                    (x, s)
                })
                .collect()
        }
    };
    let any_error = values.iter().any(|(_, v)| v.is_err());
    let text = match cfg.format {
        Format::Json => {
            let v: Vec<Value> = values
                .iter()
                .map(|(x, s)| match s {
                    Ok(v) => json!({"x": x, "scalar_curvature": v}),
                    Err(e) => json!({"x": x, "error": e}),
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => {
            let mut s = String::from("x,scalar_curvature,error\n");
            for (x, v) in &values {
                match v {
                    Ok(v) => {
                        let _ = writeln!(s, "{},{},", join_f64(x), fmt_f64(*v));
                    }
                    Err(e) => {
                        let _ = writeln!(s, "{},,{}", join_f64(x), e.replace(',', ";"));
                    }
                }
            }
            s
        }
    };
    Ok(Outcome {
        exit_code: if any_error { 1 } else { 0 },
        report: text,
    })
}
