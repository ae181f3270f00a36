//! JSON schemas and signal file formats.
//!
//! Every reader validates structure and reports the offending field path;
//! domain invariants are then checked by the type constructors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fit::{FitProblem, FitResult, SolverConfig};
use crate::potential::{Convexity, PwQuadPotential, QuadPiece};
use crate::pwl::{Grid, NodalSpline, PwlCurve};
use crate::recon::{Boundary, ChannelNonlinearity, FilterBank, Image, Kernel, Mode};
use crate::slope::SlopeBounds;

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(format!("`{path}` must be an object")))
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| schema(format!("missing field `{}`", join(path, key))))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| schema(format!("`{path}` must be a number")))
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| schema(format!("`{path}` must be a nonnegative integer")))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(format!("`{path}` must be an array of numbers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn pairs(v: &Value, path: &str) -> Result<Vec<(f64, f64)>> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(format!("`{path}` must be an array of [x, y] pairs")))?;
    arr.iter()
        .enumerate()
        .map(|(i, p)| {
            let q = numbers(p, &format!("{path}[{i}]"))?;
            if q.len() != 2 {
                return Err(schema(format!("`{path}[{i}]` must have 2 entries")));
            }
            Ok((q[0], q[1]))
        })
        .collect()
}

/// Finite numbers as JSON numbers, anything else as `null`.
fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema(format!("malformed JSON: {e}")))
}

pub fn read_json(path: &Path) -> Result<Value> {
    parse_json(&read_text(path)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("values are serializable");
    text.push('\n');
    write_text(path, &text)
}

/// 17 significant digits, `inf`/`-inf`/`nan` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

// splines and curves

pub fn spline_to_json(sp: &NodalSpline) -> Value {
    json!({
        "t": sp.grid().nodes(),
        "f": sp.values(),
        "meta": sp.meta,
    })
}

pub fn spline_from_json(v: &Value) -> Result<NodalSpline> {
    spline_at(v, "")
}

fn spline_at(v: &Value, path: &str) -> Result<NodalSpline> {
    let m = as_object(v, if path.is_empty() { "spline" } else { path })?;
    let t = numbers(field(m, "t", path)?, &join(path, "t"))?;
    let f = numbers(field(m, "f", path)?, &join(path, "f"))?;
    let mut sp = NodalSpline::new(Grid::new(t)?, f)?;
    if let Some(meta) = m.get("meta") {
        let mp = join(path, "meta");
        if !meta.is_null() {
            let obj = as_object(meta, &mp)?;
            let mut out = BTreeMap::new();
            for (k, val) in obj {
                let s = val
                    .as_str()
                    .ok_or_else(|| schema(format!("`{mp}.{k}` must be a string")))?;
                out.insert(k.clone(), s.to_string());
            }
            sp.meta = out;
        }
    }
    Ok(sp)
}

pub fn curve_to_json(c: &PwlCurve) -> Value {
    let pts: Vec<[f64; 2]> = c.points().iter().map(|&(x, y)| [x, y]).collect();
    json!({ "points": pts })
}

pub fn curve_from_json(v: &Value) -> Result<PwlCurve> {
    let m = as_object(v, "curve")?;
    PwlCurve::new(pairs(field(m, "points", "")?, "points")?)
}

// bounds

fn bound_to_json(x: f64) -> Value {
    if x == f64::NEG_INFINITY {
        json!("-inf")
    } else if x == f64::INFINITY {
        json!("+inf")
    } else {
        json!(x)
    }
}

pub fn bounds_to_json(b: &SlopeBounds) -> Value {
    json!({ "s_min": bound_to_json(b.s_min()), "s_max": bound_to_json(b.s_max()) })
}

/// Parses a bound given as a number or one of `-inf`, `+inf`, `inf`.
pub fn parse_bound(s: &str) -> Result<f64> {
    match s.trim() {
        "-inf" => Ok(f64::NEG_INFINITY),
        "+inf" | "inf" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| schema(format!("invalid bound `{t}`"))),
    }
}

fn bound_at(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::String(s) if s == "-inf" || s == "+inf" => parse_bound(s),
        Value::Number(_) => number(v, path),
        _ => Err(schema(format!("`{path}` must be a number, \"-inf\" or \"+inf\""))),
    }
}

pub fn bounds_from_json(v: &Value) -> Result<SlopeBounds> {
    bounds_at(v, "")
}

fn bounds_at(v: &Value, path: &str) -> Result<SlopeBounds> {
    let m = as_object(v, if path.is_empty() { "bounds" } else { path })?;
    let lo = bound_at(field(m, "s_min", path)?, &join(path, "s_min"))?;
    let hi = bound_at(field(m, "s_max", path)?, &join(path, "s_max"))?;
    SlopeBounds::new(lo, hi)
}

// potentials

pub fn potential_to_json(p: &PwQuadPotential) -> Value {
    let pieces: Vec<[f64; 3]> = p.pieces().iter().map(|q| [q.c, q.b, q.a]).collect();
    let (kind, rho) = match p.convexity() {
        Convexity::Convex => ("convex", 0.0),
        Convexity::Weak(r) => ("weak", r),
        Convexity::Strong(r) => ("strong", r),
    };
    json!({
        "breakpoints": p.breakpoints(),
        "pieces": pieces,
        "convexity": { "kind": kind, "rho": rho },
    })
}

pub fn potential_from_json(v: &Value) -> Result<PwQuadPotential> {
    let m = as_object(v, "potential")?;
    let breakpoints = numbers(field(m, "breakpoints", "")?, "breakpoints")?;
    let raw = field(m, "pieces", "")?
        .as_array()
        .ok_or_else(|| schema("`pieces` must be an array of [c, b, a] triples"))?;
    let pieces = raw
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let q = numbers(p, &format!("pieces[{i}]"))?;
            if q.len() != 3 {
                return Err(schema(format!("`pieces[{i}]` must have 3 entries")));
            }
            Ok(QuadPiece {
                c: q[0],
                b: q[1],
                a: q[2],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cm = as_object(field(m, "convexity", "")?, "convexity")?;
    let kind = field(cm, "kind", "convexity")?
        .as_str()
        .ok_or_else(|| schema("`convexity.kind` must be a string"))?;
    let rho = match cm.get("rho") {
        Some(r) => number(r, "convexity.rho")?,
        None => 0.0,
    };
    let convexity = match kind {
        "convex" => Convexity::Convex,
        "weak" => Convexity::Weak(rho),
        "strong" => Convexity::Strong(rho),
        other => {
            return Err(schema(format!(
                "`convexity.kind` must be convex, weak or strong, got `{other}`"
            )))
        }
    };
    PwQuadPotential::from_parts(breakpoints, pieces, convexity)
}

// fitting

pub fn problem_to_json(p: &FitProblem, cfg: &SolverConfig) -> Value {
    let data: Vec<[f64; 2]> = p.data().iter().map(|&(x, y)| [x, y]).collect();
    json!({
        "data": data,
        "grid": p.grid().nodes(),
        "lambda": p.lambda(),
        "bounds": bounds_to_json(&p.bounds()),
        "solver": { "tol": cfg.tol, "max_iters": cfg.max_iters },
    })
}

pub fn problem_from_json(v: &Value) -> Result<(FitProblem, SolverConfig)> {
    let m = as_object(v, "problem")?;
    let data = pairs(field(m, "data", "")?, "data")?;
    let grid = match m.get("grid") {
        None | Some(Value::Null) => None,
        Some(g) => Some(Grid::new(numbers(g, "grid")?)?),
    };
    let lambda = number(field(m, "lambda", "")?, "lambda")?;
    let bounds = match m.get("bounds") {
        None | Some(Value::Null) => SlopeBounds::unbounded(),
        Some(b) => bounds_at(b, "bounds")?,
    };
    let mut cfg = SolverConfig::default();
    if let Some(s) = m.get("solver").filter(|s| !s.is_null()) {
        let sm = as_object(s, "solver")?;
        if let Some(t) = sm.get("tol") {
            cfg.tol = number(t, "solver.tol")?;
        }
        if let Some(n) = sm.get("max_iters") {
            cfg.max_iters = count(n, "solver.max_iters")?;
        }
        if let Some(r) = sm.get("rho") {
            cfg.rho = number(r, "solver.rho")?;
        }
    }
    Ok((FitProblem::new(data, grid, lambda, bounds)?, cfg))
}

pub fn fit_result_to_json(r: &FitResult, converged: bool) -> Value {
    json!({
        "spline": spline_to_json(&r.spline),
        "objective": r.objective,
        "data_term": r.data_term,
        "reg_term": r.reg_term,
        "max_slope_violation": r.max_slope_violation,
        "optimality_residual": finite_or_null(r.optimality_residual),
        "iterations": r.iterations,
        "converged": converged,
    })
}

// reconstruction models

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub bank: FilterBank,
    pub nl: ChannelNonlinearity,
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Circular => "circular",
        Boundary::Reflective => "reflective",
    }
}

pub fn bank_to_json(bank: &FilterBank) -> Value {
    let filters: Vec<Value> = bank
        .filters()
        .iter()
        .map(|k| json!({ "rows": k.rows(), "cols": k.cols(), "taps": k.taps() }))
        .collect();
    json!({
        "filters": filters,
        "boundary": boundary_name(bank.boundary()),
        "spectral_norm_bound": bank.spectral_norm_bound(),
    })
}

/// Accepts either explicit filters or `{"builtin": "fd2" | "fd1" | "dct3" | "identity"}`.
pub fn bank_from_json(v: &Value) -> Result<FilterBank> {
    let m = as_object(v, "bank")?;
    let boundary = match m.get("boundary") {
        None => Boundary::Circular,
        Some(b) => match b.as_str() {
            Some("circular") => Boundary::Circular,
            Some("reflective") => Boundary::Reflective,
            _ => return Err(schema("`bank.boundary` must be \"circular\" or \"reflective\"")),
        },
    };
    if let Some(name) = m.get("builtin") {
        let bank = match name.as_str() {
            Some("fd2") => FilterBank::finite_differences_2d(),
            Some("fd1") => FilterBank::finite_differences_1d(),
            Some("dct3") => FilterBank::dct3x3(),
            Some("identity") => FilterBank::identity(),
            _ => {
                return Err(schema(
                    "`bank.builtin` must be one of fd2, fd1, dct3, identity",
                ))
            }
        };
        return bank.with_boundary(boundary);
    }
    let raw = field(m, "filters", "bank")?
        .as_array()
        .ok_or_else(|| schema("`bank.filters` must be an array"))?;
    let filters = raw
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let p = format!("bank.filters[{i}]");
            let km = as_object(k, &p)?;
            let rows = count(field(km, "rows", &p)?, &join(&p, "rows"))?;
            let cols = count(field(km, "cols", &p)?, &join(&p, "cols"))?;
            let taps = numbers(field(km, "taps", &p)?, &join(&p, "taps"))?;
            Kernel::new(rows, cols, taps)
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = number(
        field(m, "spectral_norm_bound", "bank")?,
        "bank.spectral_norm_bound",
    )?;
    FilterBank::new(filters, boundary, bound)
}

pub fn model_to_json(model: &ModelBundle) -> Value {
    json!({
        "bank": bank_to_json(&model.bank),
        "profile": spline_to_json(model.nl.profile()),
        "alphas": model.nl.alphas(),
        "mode": model.nl.mode().as_str(),
    })
}

pub fn model_from_json(v: &Value) -> Result<ModelBundle> {
    let m = as_object(v, "model")?;
    let bank = bank_from_json(field(m, "bank", "")?)?;
    let profile = spline_at(field(m, "profile", "")?, "profile")?;
    let alphas = numbers(field(m, "alphas", "")?, "alphas")?;
    let mode = match field(m, "mode", "")?.as_str() {
        Some("derivative") => Mode::Derivative,
        Some("prox") => Mode::Prox,
        _ => return Err(schema("`mode` must be \"derivative\" or \"prox\"")),
    };
    let nl = ChannelNonlinearity::new(profile, alphas, mode)?;
    if nl.channels() != bank.len() {
        return Err(schema(format!(
            "`alphas` has {} entries but the bank has {} filters",
            nl.channels(),
            bank.len()
        )));
    }
    Ok(ModelBundle { bank, nl })
}

// signals

/// CSV with a `# shape: rows,cols` header and one line per row.
pub fn signal_to_csv(img: &Image) -> String {
    let mut s = format!("# shape: {},{}\n", img.rows(), img.cols());
    for r in 0..img.rows() {
        let row: Vec<String> = (0..img.cols()).map(|c| fmt_f64(img.get(r, c))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn signal_from_csv(text: &str) -> Result<Image> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| schema("empty signal file"))?
        .trim();
    let shape = header
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|h| h.strip_prefix("shape:"))
        .ok_or_else(|| schema("signal CSV must start with `# shape: rows,cols`"))?;
    let dims: Vec<usize> = shape
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| schema(format!("invalid shape header `{header}`")))?;
    if dims.len() != 2 {
        return Err(schema(format!("invalid shape header `{header}`")));
    }
    let mut data = Vec::with_capacity(dims[0] * dims[1]);
    for (ln, line) in lines.enumerate() {
        for (cn, tok) in line.split(',').enumerate() {
            let v = tok.trim().parse::<f64>().map_err(|_| {
                schema(format!(
                    "invalid number `{}` at data line {}, column {}",
                    tok.trim(),
                    ln + 1,
                    cn + 1
                ))
            })?;
            data.push(v);
        }
    }
    Image::new(dims[0], dims[1], data)
}

/// Little-endian `u64 rows, u64 cols`, then `rows * cols` `f64` values.
pub fn signal_to_bytes(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * img.len());
    out.extend_from_slice(&(img.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(img.cols() as u64).to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn signal_from_bytes(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 16 {
        return Err(schema("binary signal shorter than its 16-byte header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let (rows, cols) = (word(0) as usize, word(8) as usize);
    let body = &bytes[16..];
    if body.len() != rows.saturating_mul(cols).saturating_mul(8) {
        return Err(schema(format!(
            "binary signal {rows}x{cols} needs {} data bytes, got {}",
            rows * cols * 8,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(rows, cols, data)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a `.csv` signal or, for any other extension, the binary format.
pub fn read_signal(path: &Path) -> Result<Image> {
    let err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if is_csv(path) {
        signal_from_csv(&fs::read_to_string(path).map_err(err)?)
    } else {
        signal_from_bytes(&fs::read(path).map_err(err)?)
    }
}

pub fn write_signal(path: &Path, img: &Image) -> Result<()> {
    let res = if is_csv(path) {
        fs::write(path, signal_to_csv(img))
    } else {
        fs::write(path, signal_to_bytes(img))
    };
    res.map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::potential_from_prox;

    #[test]
    fn spline_round_trip() {
        let g = Grid::new(vec![-1.0, 0.1, 2.0]).unwrap();
        let mut sp = NodalSpline::new(g, vec![0.3, -1.0 / 3.0, 1e-300]).unwrap();
        sp.meta.insert("name".into(), "test".into());
        let text = serde_json::to_string(&spline_to_json(&sp)).unwrap();
        assert_eq!(spline_from_json(&parse_json(&text).unwrap()).unwrap(), sp);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let v = parse_json(r#"{"t": [0, 1]}"#).unwrap();
        let e = spline_from_json(&v).unwrap_err().to_string();
        assert!(e.contains("`f`"), "{e}");
        let v = parse_json(r#"{"data": [[0, 1]], "lambda": "x"}"#).unwrap();
        let e = problem_from_json(&v).unwrap_err().to_string();
        assert!(e.contains("lambda"), "{e}");
        let v = parse_json(r#"{"data": [[0, 1], [1]], "lambda": 1}"#).unwrap();
        let e = problem_from_json(&v).unwrap_err().to_string();
        assert!(e.contains("data[1]"), "{e}");
        assert!(parse_json("{").is_err());
    }

    #[test]
    fn bounds_infinities() {
        let b = SlopeBounds::new(f64::NEG_INFINITY, 1.0).unwrap();
        let v = bounds_to_json(&b);
        assert_eq!(v["s_min"], json!("-inf"));
        assert_eq!(bounds_from_json(&v).unwrap(), b);
        let bad = json!({"s_min": 1.0, "s_max": 1.0});
        assert!(matches!(bounds_from_json(&bad), Err(Error::InvalidBounds(..))));
        assert_eq!(parse_bound("+inf").unwrap(), f64::INFINITY);
        assert!(parse_bound("abc").is_err());
    }

    #[test]
    fn potential_round_trip() {
        let g = Grid::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap();
        let soft = NodalSpline::new(g, vec![-1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = potential_from_prox(&soft).unwrap();
        let back = potential_from_json(&potential_to_json(&p)).unwrap();
        assert_eq!(back.breakpoints(), p.breakpoints());
        assert_eq!(back.pieces(), p.pieces());
        assert_eq!(back.convexity(), p.convexity());
    }

    #[test]
    fn problem_round_trip_and_defaults() {
        let v = parse_json(r#"{"data": [[0, 0], [1, 1]], "grid": null, "lambda": 1,
            "bounds": {"s_min": 0, "s_max": "+inf"}, "solver": {"tol": 1e-8, "max_iters": 10}}"#)
        .unwrap();
        let (p, cfg) = problem_from_json(&v).unwrap();
        assert_eq!(p.grid().nodes(), &[-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(cfg.max_iters, 10);
        let (q, cfg2) = problem_from_json(&problem_to_json(&p, &cfg)).unwrap();
        assert_eq!(p, q);
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn model_round_trip() {
        let g = Grid::uniform(-1.0, 1.0, 5).unwrap();
        let nl = ChannelNonlinearity::new(
            NodalSpline::from_fn(g, |x| 0.5 * x).unwrap(),
            vec![1.0, 2.0],
            Mode::Derivative,
        )
        .unwrap();
        let model = ModelBundle {
            bank: FilterBank::finite_differences_2d(),
            nl,
        };
        assert_eq!(model_from_json(&model_to_json(&model)).unwrap(), model);
        let builtin = json!({"bank": {"builtin": "fd2"}, "profile": {"t": [0, 1], "f": [0, 0]},
            "alphas": [1], "mode": "derivative"});
        assert!(model_from_json(&builtin).unwrap_err().to_string().contains("alphas"));
    }

    #[test]
    fn signal_formats() {
        let img = Image::new(2, 3, vec![0.1, -2.5, 1.0 / 3.0, 4e-17, 0.0, 7.0]).unwrap();
        assert_eq!(signal_from_csv(&signal_to_csv(&img)).unwrap(), img);
        assert_eq!(signal_from_bytes(&signal_to_bytes(&img)).unwrap(), img);
        assert!(signal_from_csv("0,1\n").is_err());
        assert!(signal_from_csv("# shape: 2,2\n1,2\n3\n").is_err());
        assert!(signal_from_bytes(&[0u8; 10]).is_err());
    }
}
