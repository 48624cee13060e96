//! Command-line surface. [`run`] does all the work and returns the exit
//! code, so tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 usage error, 2 parse or validation failure,
//! 3 I/O failure, 4 evaluation cap exceeded, 10 traces distinguished,
//! 11 reconstruction failed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::geometry::{self, ManifoldClass, ManifoldDescriptor, ValidationError};
use crate::heat_trace::{self, TraceError, TraceSamples};
use crate::inverse::{self, InverseError};
use crate::isospec::{self, IsospecError, SearchBox};
use crate::lattice::{LatticeError, PlaneLattice, Vec3};
use crate::oracle::{self, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_DISTINGUISHED: i32 = 10;
pub const EXIT_RECONSTRUCT: i32 = 11;

const DEFAULT_EPS: f64 = 1e-13;
const DEFAULT_POINTS: usize = 60;
const DEFAULT_LAMBDA_MAX: f64 = 200.0;
const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_COMPARE_POINTS: usize = 50;

#[derive(Parser, Debug)]
#[command(name = "flatspec", version, about = "Heat traces, spectra and inverse reconstruction for compact flat 3-manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check a descriptor document and print its canonical form.
    Validate { path: PathBuf },
    /// Heat trace on a log-spaced grid as CSV `t,trace,err`.
    Trace {
        path: PathBuf,
        /// Smallest time [default: 1e-4·L², L the geometric-mean length]
        #[arg(long)]
        t_min: Option<f64>,
        /// Largest time [default: 10·L²]
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        /// Absolute error bound per sample.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues up to --lambda-max with multiplicities as CSV `lambda,multiplicity`.
    Spectrum {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_MAX)]
        lambda_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two descriptors' traces on a time grid; exit 10 when distinguished.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Smallest time [default: 0.01·L², L from both descriptors]
        #[arg(long)]
        t_min: Option<f64>,
        /// Largest time [default: 10·L²]
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_COMPARE_POINTS)]
        points: usize,
    },
    /// Recover a descriptor from a `t,trace[,err]` CSV.
    Reconstruct {
        path: PathBuf,
        /// Only try this class.
        #[arg(long)]
        hint: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the isospectral M4/M6 pair for edge length --ell.
    Pair {
        #[arg(long)]
        ell: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Grid search for cross-class pairs with matching traces and spectra.
    Search {
        /// Two class tags (e.g. M4,M6) or `all` for every pair.
        #[arg(long, default_value = "all")]
        classes: String,
        #[arg(long, default_value_t = 0.5)]
        lo: f64,
        #[arg(long, default_value_t = 2.0)]
        hi: f64,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_COMPARE_POINTS)]
        points: usize,
    },
    /// Covering relations among the classes.
    Covering { class: Option<String> },
    /// Default parameters as JSON.
    Defaults,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type Res<T> = Result<T, Failure>;

fn lattice_code(e: &LatticeError) -> i32 {
    match e {
        LatticeError::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_PARSE,
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        let code = match &e {
            TraceError::Lattice(l) => lattice_code(l),
            TraceError::Invalid(_) => EXIT_PARSE,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match &e {
            OracleError::Lattice(l) => lattice_code(l),
            OracleError::Invalid(_) => EXIT_PARSE,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<IsospecError> for Failure {
    fn from(e: IsospecError) -> Self {
        match e {
            IsospecError::Trace(t) => t.into(),
            IsospecError::Oracle(o) => o.into(),
            IsospecError::CapExceeded { .. } => Failure::new(EXIT_CAP, e.to_string()),
            _ => Failure::new(EXIT_USAGE, e.to_string()),
        }
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    match cmd {
        Cmd::Validate { path } => {
            let d = load_descriptor(&path)?;
            emit(out, None, &to_document(&geometry::canonical_form(&d)))?;
            Ok(EXIT_OK)
        }
        Cmd::Trace { path, t_min, t_max, points, eps, out: dest } => {
            if points == 0 {
                return Err(Failure::new(EXIT_USAGE, "--points must be at least 1"));
            }
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Failure::new(EXIT_USAGE, "--eps must be positive"));
            }
            let d = load_descriptor(&path)?;
            let l2 = d.length_scale().powi(2);
            let (lo, hi) = (t_min.unwrap_or(1e-4 * l2), t_max.unwrap_or(10.0 * l2));
            check_range(lo, hi, points)?;
            let times = heat_trace::log_grid(lo, hi, points);
            let s = heat_trace::trace_grid(&d, &times, eps)?;
            let mut csv = String::from("t,trace,err\n");
            for i in 0..s.len() {
                let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", s.times[i], s.values[i], s.err[i]);
            }
            emit(out, dest.as_deref(), &csv)?;
            Ok(EXIT_OK)
        }
        Cmd::Spectrum { path, lambda_max, out: dest } => {
            if !(lambda_max.is_finite() && lambda_max >= 0.0) {
                return Err(Failure::new(EXIT_USAGE, "--lambda-max must be finite and non-negative"));
            }
            let d = load_descriptor(&path)?;
            let s = oracle::spectrum(&d, lambda_max)?;
            let mut csv = String::from("lambda,multiplicity\n");
            for (l, m) in &s.entries {
                let _ = writeln!(csv, "{l:.16e},{m}");
            }
            emit(out, dest.as_deref(), &csv)?;
            Ok(EXIT_OK)
        }
        Cmd::Compare { a, b, tol, t_min, t_max, points } => {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Failure::new(EXIT_USAGE, "--tol must be positive"));
            }
            if points == 0 {
                return Err(Failure::new(EXIT_USAGE, "--points must be at least 1"));
            }
            let (da, db) = (load_descriptor(&a)?, load_descriptor(&b)?);
            let l2 = da.length_scale() * db.length_scale();
            let (lo, hi) = (t_min.unwrap_or(0.01 * l2), t_max.unwrap_or(10.0 * l2));
            check_range(lo, hi, points)?;
            let times = heat_trace::log_grid(lo, hi, points);
            let v = isospec::isospectral(&da, &db, &times, tol)?;
            match v.witness_t {
                None => {
                    write_str(out, &format!("ISOSPECTRAL max_gap={:e}\n", v.max_gap))?;
                    Ok(EXIT_OK)
                }
                Some(t) => {
                    let eps = tol / 4.0;
                    let gap = (heat_trace::trace(&da, t, eps)? - heat_trace::trace(&db, t, eps)?).abs();
                    write_str(out, &format!("DISTINGUISHED t={t:e} gap={gap:e}\n"))?;
                    Ok(EXIT_DISTINGUISHED)
                }
            }
        }
        Cmd::Reconstruct { path, hint, out: dest } => {
            let hint = match hint {
                Some(h) => Some(
                    h.parse::<ManifoldClass>().map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
                ),
                None => None,
            };
            let text = read(&path)?;
            let s = parse_samples(&text)?;
            let r = inverse::reconstruct_detailed(&s, hint).map_err(|e| match e {
                InverseError::Trace(t) => Failure::from(t),
                other => Failure::new(EXIT_RECONSTRUCT, other.to_string()),
            })?;
            for alt in &r.alternatives {
                let _ = writeln!(
                    err,
                    "note: {} fits equally well (residual {:.3e}): {}",
                    alt.class,
                    alt.residual,
                    compact(&to_document(&alt.descriptor))
                );
            }
            emit(out, dest.as_deref(), &to_document(&r.descriptor))?;
            Ok(EXIT_OK)
        }
        Cmd::Pair { ell, out_dir } => {
            let (m4, m6) = isospec::m4_m6_pair(ell).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            fs::create_dir_all(&out_dir)
                .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", out_dir.display())))?;
            for (name, d) in [("m4.json", &m4), ("m6.json", &m6)] {
                let p = out_dir.join(name);
                emit(out, Some(&p), &to_document(d))?;
                write_str(out, &format!("{}\n", p.display()))?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Search { classes, lo, hi, step, tol, points } => {
            let pairs = parse_class_pairs(&classes)?;
            if points == 0 {
                return Err(Failure::new(EXIT_USAGE, "--points must be at least 1"));
            }
            if !(lo > 0.0 && hi >= lo && step > 0.0) {
                return Err(Failure::new(EXIT_USAGE, "need 0 < lo <= hi and step > 0"));
            }
            let b = SearchBox::lengths(lo, hi, step);
            let times = heat_trace::log_grid(0.01 * lo * lo, 10.0 * hi * hi, points);
            let mut total = 0;
            for (c1, c2) in pairs {
                for (d1, d2, v) in isospec::search_pairs((c1, c2), &b, &times, tol)? {
                    total += 1;
                    write_str(
                        out,
                        &format!(
                            "{}\t{}\tmax_gap={:e}\n",
                            compact(&to_document(&d1)),
                            compact(&to_document(&d2)),
                            v.max_gap
                        ),
                    )?;
                }
            }
            write_str(out, &format!("hits={total}\n"))?;
            Ok(EXIT_OK)
        }
        Cmd::Covering { class } => {
            let edges = match class {
                Some(c) => geometry::covering_info(
                    c.parse::<ManifoldClass>().map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
                ),
                None => geometry::covering_edges(),
            };
            let mut s = String::new();
            for e in edges {
                let _ = writeln!(s, "{} -> {} folds={}", e.source, e.target, e.folds);
            }
            write_str(out, &s)?;
            Ok(EXIT_OK)
        }
        Cmd::Defaults => {
            let v = json!({
                "trace": {"t_min": "1e-4*L^2", "t_max": "10*L^2", "points": DEFAULT_POINTS, "eps": DEFAULT_EPS},
                "spectrum": {"lambda_max": DEFAULT_LAMBDA_MAX},
                "compare": {"tol": DEFAULT_TOL, "t_min": "0.01*L^2", "t_max": "10*L^2", "points": DEFAULT_COMPARE_POINTS},
                "search": {"lo": 0.5, "hi": 2.0, "step": 0.25, "tol": DEFAULT_TOL, "points": DEFAULT_COMPARE_POINTS},
                "point_cap": crate::lattice::point_cap(),
            });
            write_str(out, &format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")))?;
            Ok(EXIT_OK)
        }
    }
}

fn check_range(lo: f64, hi: f64, points: usize) -> Res<()> {
    let ok = lo.is_finite() && hi.is_finite() && lo > 0.0 && (lo < hi || (points == 1 && lo <= hi));
    if ok {
        Ok(())
    } else {
        Err(Failure::new(EXIT_USAGE, format!("need 0 < t-min < t-max, got {lo} and {hi}")))
    }
}

fn parse_class_pairs(s: &str) -> Res<Vec<(ManifoldClass, ManifoldClass)>> {
    if s.trim().eq_ignore_ascii_case("all") {
        let all = ManifoldClass::ALL;
        return Ok((0..10).flat_map(|i| (i + 1..10).map(move |j| (all[i], all[j]))).collect());
    }
    let cs: Vec<ManifoldClass> = s
        .split(',')
        .map(|c| c.parse::<ManifoldClass>().map_err(|e| Failure::new(EXIT_USAGE, e.to_string())))
        .collect::<Res<_>>()?;
    match cs[..] {
        [a, b] if a != b => Ok(vec![(a, b)]),
        _ => Err(Failure::new(EXIT_USAGE, "--classes needs two distinct classes or `all`")),
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn write_str(out: &mut dyn Write, s: &str) -> Res<()> {
    out.write_all(s.as_bytes()).map_err(|e| Failure::new(EXIT_IO, e.to_string()))
}

// to the file when given, else to stdout
fn emit(out: &mut dyn Write, dest: Option<&Path>, text: &str) -> Res<()> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => write_str(out, text),
    }
}

fn load_descriptor(path: &Path) -> Res<ManifoldDescriptor> {
    let text = read(path)?;
    parse_descriptor(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
        Failure::new(EXIT_PARSE, format!("{}:\n  {}", path.display(), lines.join("\n  ")))
    })
}

fn field_error(field: &str, message: impl Into<String>) -> ValidationError {
    ValidationError { field: field.to_string(), message: message.into() }
}

fn param_layout(class: ManifoldClass) -> (usize, bool, bool) {
    // (number of lengths, angle_rad, height)
    use ManifoldClass as C;
    match class {
        C::M1 => (0, false, false),
        C::M2 | C::N1 => (3, true, false),
        C::M3 | C::M4 | C::M5 => (2, false, false),
        C::M6 | C::N3 | C::N4 => (3, false, false),
        C::N2 => (2, true, true),
    }
}

/// Parses a descriptor document; every problem is reported with its field
/// path.
pub fn parse_descriptor(text: &str) -> Result<ManifoldDescriptor, Vec<ValidationError>> {
    let root: Value = serde_json::from_str(text).map_err(|e| vec![field_error("$", format!("invalid JSON: {e}"))])?;
    let obj = root.as_object().ok_or_else(|| vec![field_error("$", "expected an object")])?;
    let mut errs = vec![];
    for k in obj.keys().filter(|k| *k != "class" && *k != "params") {
        errs.push(field_error(k, "unknown field"));
    }
    let class = match obj.get("class") {
        None => {
            errs.push(field_error("class", "missing"));
            None
        }
        Some(Value::String(s)) => match s.parse::<ManifoldClass>() {
            Ok(c) => Some(c),
            Err(e) => {
                errs.push(field_error("class", e.to_string()));
                None
            }
        },
        Some(_) => {
            errs.push(field_error("class", "expected a string"));
            None
        }
    };
    let params = match obj.get("params") {
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            errs.push(field_error("params", "expected an object"));
            None
        }
        None => {
            errs.push(field_error("params", "missing"));
            None
        }
    };
    let (Some(class), Some(params)) = (class, params) else { return Err(errs) };

    let (nlen, has_angle, has_height) = param_layout(class);
    let mut allowed = vec![];
    let number = |key: &str, errs: &mut Vec<ValidationError>| -> Option<f64> {
        match params.get(key) {
            Some(v) => match v.as_f64() {
                Some(x) => Some(x),
                None => {
                    errs.push(field_error(&format!("params.{key}"), "expected a number"));
                    None
                }
            },
            None => {
                errs.push(field_error(&format!("params.{key}"), "missing"));
                None
            }
        }
    };
    let array = |key: &str, n: usize, errs: &mut Vec<ValidationError>| -> Option<Vec<f64>> {
        let path = format!("params.{key}");
        let Some(v) = params.get(key) else {
            errs.push(field_error(&path, "missing"));
            return None;
        };
        let Some(a) = v.as_array() else {
            errs.push(field_error(&path, format!("expected an array of {n} numbers")));
            return None;
        };
        if a.len() != n {
            errs.push(field_error(&path, format!("expected {n} numbers, got {}", a.len())));
            return None;
        }
        let mut out = vec![];
        for (i, x) in a.iter().enumerate() {
            match x.as_f64() {
                Some(x) => out.push(x),
                None => errs.push(field_error(&format!("{path}[{i}]"), "expected a number")),
            }
        }
        (out.len() == n).then_some(out)
    };

    let d = if class == ManifoldClass::M1 {
        allowed.push("basis");
        array("basis", 9, &mut errs).map(|b| ManifoldDescriptor::from_params(class, &b))
    } else {
        allowed.push("lengths");
        let l = array("lengths", nlen, &mut errs);
        let a = has_angle.then(|| {
            allowed.push("angle_rad");
            number("angle_rad", &mut errs)
        });
        let h = has_height.then(|| {
            allowed.push("height");
            number("height", &mut errs)
        });
        match (l, a.flatten(), h.flatten()) {
            (Some(l), a, h) if a.is_some() == has_angle && h.is_some() == has_height => Some(match class {
                ManifoldClass::M2 => ManifoldDescriptor::M2 { l1: l[0], plane: PlaneLattice::new(l[1], l[2], a.unwrap()) },
                ManifoldClass::N1 => ManifoldDescriptor::N1 { plane: PlaneLattice::new(l[0], l[1], a.unwrap()), l3: l[2] },
                ManifoldClass::N2 => ManifoldDescriptor::N2 { plane: PlaneLattice::new(l[0], l[1], a.unwrap()), h: h.unwrap() },
                _ => ManifoldDescriptor::from_params(class, &l),
            }),
            _ => None,
        }
    };
    for k in params.keys().filter(|k| !allowed.contains(&k.as_str())) {
        errs.push(field_error(&format!("params.{k}"), format!("unknown field for {class}")));
    }
    let Some(d) = d else { return Err(errs) };
    if !errs.is_empty() {
        return Err(errs);
    }
    geometry::validate(&d).map_err(|v| v.into_iter().map(|e| relabel(class, e)).collect())
}

// validation field names to document paths
fn relabel(class: ManifoldClass, e: ValidationError) -> ValidationError {
    let idx = |i: usize| format!("params.lengths[{i}]");
    let field = match (class, e.field.as_str()) {
        (_, "angle_rad") => "params.angle_rad".to_string(),
        (_, "height") => "params.height".to_string(),
        (_, "basis") => "params.basis".to_string(),
        (_, "lengths") => "params.lengths".to_string(),
        (ManifoldClass::M3 | ManifoldClass::M4 | ManifoldClass::M5, "l") => idx(1),
        (_, "l1") => idx(0),
        (_, "l2") => idx(1),
        (_, "l3") => idx(2),
        (_, other) => format!("params.{other}"),
    };
    ValidationError { field, message: e.message }
}

/// Descriptor document, pretty-printed with a trailing newline.
pub fn to_document(d: &ManifoldDescriptor) -> String {
    let mut params = Map::new();
    match d {
        ManifoldDescriptor::M1 { basis } => {
            let b: Vec<f64> = basis.iter().flat_map(|v: &Vec3| v.iter().copied()).collect();
            params.insert("basis".into(), json!(b));
        }
        ManifoldDescriptor::M2 { l1, plane } => {
            params.insert("lengths".into(), json!([l1, plane.s1, plane.s2]));
            params.insert("angle_rad".into(), json!(plane.angle));
        }
        ManifoldDescriptor::N1 { plane, l3 } => {
            params.insert("lengths".into(), json!([plane.s1, plane.s2, l3]));
            params.insert("angle_rad".into(), json!(plane.angle));
        }
        ManifoldDescriptor::N2 { plane, h } => {
            params.insert("lengths".into(), json!([plane.s1, plane.s2]));
            params.insert("angle_rad".into(), json!(plane.angle));
            params.insert("height".into(), json!(h));
        }
        other => {
            params.insert("lengths".into(), json!(other.params()));
        }
    }
    let doc = json!({"class": d.class().tag(), "params": Value::Object(params)});
    format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
}

fn compact(doc: &str) -> String {
    let v: Value = serde_json::from_str(doc).expect("own output");
    v.to_string()
}

/// Reads `t,trace[,err]` rows; a non-numeric first line is taken as the
/// header. Missing errors default to 1e-13 relative.
fn parse_samples(text: &str) -> Res<TraceSamples> {
    let (mut t, mut v, mut e) = (vec![], vec![], vec![]);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        let nums = match nums {
            Ok(x) => x,
            Err(_) if n == 0 => continue,
            Err(_) => return Err(Failure::new(EXIT_PARSE, format!("line {}: not a number", n + 1))),
        };
        match nums[..] {
            [a, b] => {
                t.push(a);
                v.push(b);
                e.push(1e-13 * b.abs());
            }
            [a, b, c] => {
                t.push(a);
                v.push(b);
                e.push(c);
            }
            _ => return Err(Failure::new(EXIT_PARSE, format!("line {}: expected 2 or 3 columns", n + 1))),
        }
    }
    TraceSamples::new(t, v, e).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))
}
