//! On-disk JSON model format. One file holds one system: a top-level
//! object with a `class` tag, the state dimension `n`, the class blocks
//! as row-major arrays of arrays, delays as tagged objects, and kernels
//! either as a constant matrix or as exponential-polynomial pieces.
//!
//! Loading is strict: unknown keys, shape mismatches, and non-finite
//! numbers are rejected with a JSON-pointer path to the offending spot.
//! Saving normalizes: optional blocks that defaulted on load (delayed
//! output terms, feedthrough) are written out explicitly, so
//! save(load(x)) is the canonical form of x and load(save(m)) == m.

use std::fmt;

use posdelay_core::model::{
    CoupledIo, CoupledSystem, DelayKernel, DelaySpec, DifferenceIo, DifferenceSystem,
    DiscreteDelayIo, DiscreteDelaySystem, DistKernel, DistributedIo, DistributedSystem,
    KernelPiece, KernelTerm, LtiIo, LtiSystem, NeutralIo, NeutralSystem, SystemModel,
};
use posdelay_core::Matrix;
use serde_json::{Map, Value};

/// A schema violation with the JSON-pointer path where it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub pointer: String,
    pub detail: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "{}", self.detail)
        } else {
            write!(f, "at {}: {}", self.pointer, self.detail)
        }
    }
}

impl std::error::Error for SchemaError {}

type R<T> = Result<T, SchemaError>;

fn err<T>(ptr: &str, detail: impl Into<String>) -> R<T> {
    Err(SchemaError { pointer: String::from(ptr), detail: detail.into() })
}

// ---------------------------------------------------------------------------
// value walking
// ---------------------------------------------------------------------------

fn as_obj<'a>(v: &'a Value, ptr: &str) -> R<&'a Map<String, Value>> {
    v.as_object().map_or_else(|| err(ptr, "expected an object"), Ok)
}

fn get<'a>(m: &'a Map<String, Value>, ptr: &str, key: &str) -> R<&'a Value> {
    m.get(key).map_or_else(|| err(ptr, format!("missing required field '{key}'")), Ok)
}

fn no_unknown_keys(m: &Map<String, Value>, ptr: &str, allowed: &[&str]) -> R<()> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return err(
                &format!("{ptr}/{k}"),
                format!("unknown field '{k}'; expected one of {}", allowed.join(", ")),
            );
        }
    }
    Ok(())
}

fn finite(v: &Value, ptr: &str) -> R<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        Some(_) => err(ptr, "non-finite number"),
        None => err(ptr, "expected a number"),
    }
}

fn as_usize(v: &Value, ptr: &str) -> R<usize> {
    v.as_u64().map(|x| x as usize).map_or_else(|| err(ptr, "expected a nonnegative integer"), Ok)
}

fn matrix(v: &Value, ptr: &str) -> R<Matrix> {
    let rows = v.as_array().map_or_else(|| err(ptr, "expected a matrix (array of arrays)"), Ok)?;
    if rows.is_empty() {
        return err(ptr, "matrix needs at least one row");
    }
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .map_or_else(|| err(&format!("{ptr}/{i}"), "expected an array of numbers"), Ok)?;
        if cells.is_empty() {
            return err(&format!("{ptr}/{i}"), "matrix row is empty");
        }
        let mut out = Vec::with_capacity(cells.len());
        for (j, c) in cells.iter().enumerate() {
            out.push(finite(c, &format!("{ptr}/{i}/{j}"))?);
        }
        data.push(out);
    }
    Matrix::from_rows(&data).map_err(|e| SchemaError {
        pointer: String::from(ptr),
        detail: format!("{e}"),
    })
}

fn matrix_list(v: &Value, ptr: &str) -> R<Vec<Matrix>> {
    let items = v.as_array().map_or_else(|| err(ptr, "expected an array of matrices"), Ok)?;
    items.iter().enumerate().map(|(i, m)| matrix(m, &format!("{ptr}/{i}"))).collect()
}

// ---------------------------------------------------------------------------
// delays and kernels
// ---------------------------------------------------------------------------

fn delay_spec(v: &Value, ptr: &str) -> R<DelaySpec> {
    let m = as_obj(v, ptr)?;
    let kind = get(m, ptr, "type")?
        .as_str()
        .map_or_else(|| err(&format!("{ptr}/type"), "expected a string"), Ok)?;
    match kind {
        "const" => {
            no_unknown_keys(m, ptr, &["type", "h"])?;
            Ok(DelaySpec::Const { h: finite(get(m, ptr, "h")?, &format!("{ptr}/h"))? })
        }
        "tv" => {
            no_unknown_keys(m, ptr, &["type", "h_bar", "rate_bound"])?;
            let h_bar = finite(get(m, ptr, "h_bar")?, &format!("{ptr}/h_bar"))?;
            let rate_bound = finite(get(m, ptr, "rate_bound")?, &format!("{ptr}/rate_bound"))?;
            if rate_bound >= 1.0 {
                return err(
                    &format!("{ptr}/rate_bound"),
                    "rate bound must be < 1 for L1/L2 analyses; use type 'tv_unbounded_rate'",
                );
            }
            Ok(DelaySpec::TimeVarying { h_bar, rate_bound })
        }
        "tv_unbounded_rate" => {
            no_unknown_keys(m, ptr, &["type", "h_bar"])?;
            Ok(DelaySpec::TimeVaryingUnboundedRate {
                h_bar: finite(get(m, ptr, "h_bar")?, &format!("{ptr}/h_bar"))?,
            })
        }
        other => err(
            &format!("{ptr}/type"),
            format!("unknown delay type '{other}'; expected const, tv, or tv_unbounded_rate"),
        ),
    }
}

fn delay_list(v: &Value, ptr: &str) -> R<Vec<DelaySpec>> {
    let items = v.as_array().map_or_else(|| err(ptr, "expected an array of delay specs"), Ok)?;
    items.iter().enumerate().map(|(i, d)| delay_spec(d, &format!("{ptr}/{i}"))).collect()
}

fn kernel(v: &Value, ptr: &str) -> R<DistKernel> {
    let m = as_obj(v, ptr)?;
    if m.contains_key("constant") {
        no_unknown_keys(m, ptr, &["constant"])?;
        return Ok(DistKernel::Constant(matrix(get(m, ptr, "constant")?, &format!("{ptr}/constant"))?));
    }
    no_unknown_keys(m, ptr, &["pieces"])?;
    let pieces_v = get(m, ptr, "pieces")?;
    let items = pieces_v
        .as_array()
        .map_or_else(|| err(&format!("{ptr}/pieces"), "expected an array of kernel pieces"), Ok)?;
    let mut pieces = Vec::with_capacity(items.len());
    for (i, piece) in items.iter().enumerate() {
        let pptr = format!("{ptr}/pieces/{i}");
        let pm = as_obj(piece, &pptr)?;
        no_unknown_keys(pm, &pptr, &["interval", "terms"])?;
        let iv = get(pm, &pptr, "interval")?
            .as_array()
            .map_or_else(|| err(&format!("{pptr}/interval"), "expected [a, b]"), Ok)?;
        if iv.len() != 2 {
            return err(&format!("{pptr}/interval"), "expected exactly two endpoints [a, b]");
        }
        let a = finite(&iv[0], &format!("{pptr}/interval/0"))?;
        let b = finite(&iv[1], &format!("{pptr}/interval/1"))?;
        let terms_v = get(pm, &pptr, "terms")?
            .as_array()
            .map_or_else(|| err(&format!("{pptr}/terms"), "expected an array of terms"), Ok)?;
        let mut terms = Vec::with_capacity(terms_v.len());
        for (j, term) in terms_v.iter().enumerate() {
            let tptr = format!("{pptr}/terms/{j}");
            let tm = as_obj(term, &tptr)?;
            no_unknown_keys(tm, &tptr, &["coeff", "alpha", "power"])?;
            terms.push(KernelTerm {
                coeff: matrix(get(tm, &tptr, "coeff")?, &format!("{tptr}/coeff"))?,
                alpha: finite(get(tm, &tptr, "alpha")?, &format!("{tptr}/alpha"))?,
                power: as_usize(get(tm, &tptr, "power")?, &format!("{tptr}/power"))? as u32,
            });
        }
        pieces.push(KernelPiece { a, b, terms });
    }
    Ok(DistKernel::Explicit(DelayKernel { pieces }))
}

fn kernel_list(v: &Value, ptr: &str) -> R<Vec<DistKernel>> {
    let items = v.as_array().map_or_else(|| err(ptr, "expected an array of kernels"), Ok)?;
    items.iter().enumerate().map(|(i, k)| kernel(k, &format!("{ptr}/{i}"))).collect()
}

// ---------------------------------------------------------------------------
// per-class loaders
// ---------------------------------------------------------------------------

fn zero_list(count: usize, rows: usize, cols: usize) -> Vec<Matrix> {
    (0..count).map(|_| Matrix::zeros(rows, cols)).collect()
}

/// Optional field with a computed default: delayed output terms and
/// feedthrough blocks may be omitted and mean zero.
fn opt_matrix(m: &Map<String, Value>, ptr: &str, key: &str, rows: usize, cols: usize) -> R<Matrix> {
    match m.get(key) {
        Some(v) => matrix(v, &format!("{ptr}/{key}")),
        None => Ok(Matrix::zeros(rows, cols)),
    }
}

fn opt_matrix_list(
    m: &Map<String, Value>,
    ptr: &str,
    key: &str,
    count: usize,
    rows: usize,
    cols: usize,
) -> R<Vec<Matrix>> {
    match m.get(key) {
        Some(v) => matrix_list(v, &format!("{ptr}/{key}")),
        None => Ok(zero_list(count, rows, cols)),
    }
}

fn check_n(m: &Map<String, Value>, key: &str, actual: usize) -> R<()> {
    let declared = as_usize(get(m, "", key)?, &format!("/{key}"))?;
    if declared != actual {
        return err(&format!("/{key}"), format!("declared {key} = {declared} but the state blocks have dimension {actual}"));
    }
    Ok(())
}

fn load_lti(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "a", "io"])?;
    let a = matrix(get(m, "", "a")?, "/a")?;
    check_n(m, "n", a.rows())?;
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e", "c", "f"])?;
            let e = matrix(get(io, "/io", "e")?, "/io/e")?;
            let c = matrix(get(io, "/io", "c")?, "/io/c")?;
            let f = opt_matrix(io, "/io", "f", c.rows(), e.cols())?;
            Some(LtiIo { e, c, f })
        }
    };
    Ok(SystemModel::Lti(LtiSystem { a, io }))
}

fn load_discrete(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "a0", "a", "delays", "io"])?;
    let a0 = matrix(get(m, "", "a0")?, "/a0")?;
    let a = matrix_list(get(m, "", "a")?, "/a")?;
    let delays = delay_list(get(m, "", "delays")?, "/delays")?;
    let n = a0.rows();
    check_n(m, "n", n)?;
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e_u", "c0", "c", "f_u"])?;
            let e_u = matrix(get(io, "/io", "e_u")?, "/io/e_u")?;
            let c0 = matrix(get(io, "/io", "c0")?, "/io/c0")?;
            let c = opt_matrix_list(io, "/io", "c", a.len(), c0.rows(), n)?;
            let f_u = opt_matrix(io, "/io", "f_u", c0.rows(), e_u.cols())?;
            Some(DiscreteDelayIo { e_u, c0, c, f_u })
        }
    };
    Ok(SystemModel::DiscreteDelay(DiscreteDelaySystem { a0, a, delays, io }))
}

fn load_difference(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "a", "delays", "io"])?;
    let a = matrix_list(get(m, "", "a")?, "/a")?;
    let delays = delay_list(get(m, "", "delays")?, "/delays")?;
    if a.is_empty() {
        return err("/a", "needs at least one delayed coefficient");
    }
    let n = a[0].rows();
    check_n(m, "n", n)?;
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e_u", "c", "f_u"])?;
            let e_u = matrix(get(io, "/io", "e_u")?, "/io/e_u")?;
            let c = matrix_list(get(io, "/io", "c")?, "/io/c")?;
            let q = c.first().map_or(0, Matrix::rows);
            let f_u = opt_matrix(io, "/io", "f_u", q, e_u.cols())?;
            Some(DifferenceIo { e_u, c, f_u })
        }
    };
    Ok(SystemModel::Difference(DifferenceSystem { a, delays, io }))
}

fn load_coupled(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "n2", "a0", "a", "c0", "c", "delays", "io"])?;
    let a0 = matrix(get(m, "", "a0")?, "/a0")?;
    let a = matrix_list(get(m, "", "a")?, "/a")?;
    let c0 = matrix(get(m, "", "c0")?, "/c0")?;
    let c = matrix_list(get(m, "", "c")?, "/c")?;
    let delays = delay_list(get(m, "", "delays")?, "/delays")?;
    check_n(m, "n", a0.rows())?;
    check_n(m, "n2", c0.rows())?;
    let n2 = c0.rows();
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e1", "e2", "cy0", "cy", "f_u"])?;
            let e1 = matrix(get(io, "/io", "e1")?, "/io/e1")?;
            let e2 = matrix(get(io, "/io", "e2")?, "/io/e2")?;
            let cy0 = matrix(get(io, "/io", "cy0")?, "/io/cy0")?;
            let cy = opt_matrix_list(io, "/io", "cy", c.len(), cy0.rows(), n2)?;
            let f_u = opt_matrix(io, "/io", "f_u", cy0.rows(), e1.cols())?;
            Some(CoupledIo { e1, e2, cy0, cy, f_u })
        }
    };
    Ok(SystemModel::Coupled(CoupledSystem { a0, a, c0, c, delays, io }))
}

fn load_distributed(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "a0", "kernels", "delays", "io"])?;
    let a0 = matrix(get(m, "", "a0")?, "/a0")?;
    let kernels = kernel_list(get(m, "", "kernels")?, "/kernels")?;
    let delays = delay_list(get(m, "", "delays")?, "/delays")?;
    let n = a0.rows();
    check_n(m, "n", n)?;
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e_u", "c0", "out_kernels", "f_u"])?;
            let e_u = matrix(get(io, "/io", "e_u")?, "/io/e_u")?;
            let c0 = matrix(get(io, "/io", "c0")?, "/io/c0")?;
            let out_kernels = match io.get("out_kernels") {
                Some(v) => kernel_list(v, "/io/out_kernels")?,
                None => (0..kernels.len())
                    .map(|_| DistKernel::Constant(Matrix::zeros(c0.rows(), n)))
                    .collect(),
            };
            let f_u = opt_matrix(io, "/io", "f_u", c0.rows(), e_u.cols())?;
            Some(DistributedIo { e_u, c0, out_kernels, f_u })
        }
    };
    Ok(SystemModel::Distributed(DistributedSystem { a0, kernels, delays, io }))
}

fn load_neutral(m: &Map<String, Value>) -> R<SystemModel> {
    no_unknown_keys(m, "", &["class", "n", "a0", "a_n", "a_r", "delays", "io"])?;
    let a0 = matrix(get(m, "", "a0")?, "/a0")?;
    let a_n = matrix_list(get(m, "", "a_n")?, "/a_n")?;
    let a_r = matrix_list(get(m, "", "a_r")?, "/a_r")?;
    let delays = delay_list(get(m, "", "delays")?, "/delays")?;
    let n = a0.rows();
    check_n(m, "n", n)?;
    let io = match m.get("io") {
        None => None,
        Some(v) => {
            let io = as_obj(v, "/io")?;
            no_unknown_keys(io, "/io", &["e_u", "c0", "c_n", "c_r", "f_u"])?;
            let e_u = matrix(get(io, "/io", "e_u")?, "/io/e_u")?;
            let c0 = matrix(get(io, "/io", "c0")?, "/io/c0")?;
            let c_n = opt_matrix_list(io, "/io", "c_n", a_n.len(), c0.rows(), n)?;
            let c_r = opt_matrix_list(io, "/io", "c_r", a_n.len(), c0.rows(), n)?;
            let f_u = opt_matrix(io, "/io", "f_u", c0.rows(), e_u.cols())?;
            Some(NeutralIo { e_u, c0, c_n, c_r, f_u })
        }
    };
    Ok(SystemModel::Neutral(NeutralSystem { a0, a_n, a_r, delays, io }))
}

/// Parse a model file. Schema violations come back with a JSON-pointer
/// path; the structural rules of the model itself (shape agreement,
/// delay counts, kernel membership) are checked afterwards and reported
/// against the block that broke them.
pub fn load_model(text: &str) -> R<SystemModel> {
    let v: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return err("", format!("invalid JSON: {e}")),
    };
    load_model_value(&v)
}

/// Same as `load_model` but starting from an already parsed value, as
/// when a model definition travels embedded inside a report.
pub fn load_model_value(v: &Value) -> R<SystemModel> {
    let m = as_obj(v, "")?;
    let class = get(m, "", "class")?
        .as_str()
        .map_or_else(|| err("/class", "expected a string"), Ok)?;
    let model = match class {
        "lti" => load_lti(m)?,
        "discrete" => load_discrete(m)?,
        "difference" => load_difference(m)?,
        "coupled" => load_coupled(m)?,
        "distributed" => load_distributed(m)?,
        "neutral" => load_neutral(m)?,
        other => {
            return err(
                "/class",
                format!(
                    "unknown class '{other}'; expected lti, discrete, difference, coupled, distributed, or neutral"
                ),
            )
        }
    };
    model.validate().map_err(|e| SchemaError {
        pointer: block_pointer(&e.block),
        detail: e.detail,
    })?;
    Ok(model)
}

/// "a_n[0]" -> "/a_n/0"; best effort, block names are flat.
fn block_pointer(block: &str) -> String {
    let mut out = String::from("/");
    out.push_str(&block.replace('[', "/").replace(']', ""));
    out
}

// ---------------------------------------------------------------------------
// saving
// ---------------------------------------------------------------------------

fn num(x: f64) -> Value {
    Value::from(x)
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

fn matrix_list_value(ms: &[Matrix]) -> Value {
    Value::Array(ms.iter().map(matrix_value).collect())
}

fn delay_value(d: &DelaySpec) -> Value {
    let mut m = Map::new();
    match *d {
        DelaySpec::Const { h } => {
            m.insert("type".into(), "const".into());
            m.insert("h".into(), num(h));
        }
        DelaySpec::TimeVarying { h_bar, rate_bound } => {
            m.insert("type".into(), "tv".into());
            m.insert("h_bar".into(), num(h_bar));
            m.insert("rate_bound".into(), num(rate_bound));
        }
        DelaySpec::TimeVaryingUnboundedRate { h_bar } => {
            m.insert("type".into(), "tv_unbounded_rate".into());
            m.insert("h_bar".into(), num(h_bar));
        }
    }
    Value::Object(m)
}

fn delay_list_value(ds: &[DelaySpec]) -> Value {
    Value::Array(ds.iter().map(delay_value).collect())
}

fn kernel_value(k: &DistKernel) -> Value {
    let mut m = Map::new();
    match k {
        DistKernel::Constant(c) => {
            m.insert("constant".into(), matrix_value(c));
        }
        DistKernel::Explicit(dk) => {
            let pieces: Vec<Value> = dk
                .pieces
                .iter()
                .map(|p| {
                    let mut pm = Map::new();
                    pm.insert("interval".into(), Value::Array(vec![num(p.a), num(p.b)]));
                    pm.insert(
                        "terms".into(),
                        Value::Array(
                            p.terms
                                .iter()
                                .map(|t| {
                                    let mut tm = Map::new();
                                    tm.insert("coeff".into(), matrix_value(&t.coeff));
                                    tm.insert("alpha".into(), num(t.alpha));
                                    tm.insert("power".into(), Value::from(t.power));
                                    Value::Object(tm)
                                })
                                .collect(),
                        ),
                    );
                    Value::Object(pm)
                })
                .collect();
            m.insert("pieces".into(), Value::Array(pieces));
        }
    }
    Value::Object(m)
}

fn kernel_list_value(ks: &[DistKernel]) -> Value {
    Value::Array(ks.iter().map(kernel_value).collect())
}

/// Canonical JSON form of a model: every optional block written out,
/// keys sorted by the serializer. The digest in reports is the SHA-256
/// of this value's compact encoding.
pub fn save_model(model: &SystemModel) -> Value {
    let mut m = Map::new();
    m.insert("class".into(), model.class_name().into());
    match model {
        SystemModel::Lti(sys) => {
            m.insert("n".into(), Value::from(sys.n()));
            m.insert("a".into(), matrix_value(&sys.a));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e".into(), matrix_value(&io.e));
                o.insert("c".into(), matrix_value(&io.c));
                o.insert("f".into(), matrix_value(&io.f));
                m.insert("io".into(), Value::Object(o));
            }
        }
        SystemModel::DiscreteDelay(sys) => {
            m.insert("n".into(), Value::from(sys.n()));
            m.insert("a0".into(), matrix_value(&sys.a0));
            m.insert("a".into(), matrix_list_value(&sys.a));
            m.insert("delays".into(), delay_list_value(&sys.delays));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e_u".into(), matrix_value(&io.e_u));
                o.insert("c0".into(), matrix_value(&io.c0));
                o.insert("c".into(), matrix_list_value(&io.c));
                o.insert("f_u".into(), matrix_value(&io.f_u));
                m.insert("io".into(), Value::Object(o));
            }
        }
        SystemModel::Difference(sys) => {
            m.insert("n".into(), Value::from(sys.n()));
            m.insert("a".into(), matrix_list_value(&sys.a));
            m.insert("delays".into(), delay_list_value(&sys.delays));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e_u".into(), matrix_value(&io.e_u));
                o.insert("c".into(), matrix_list_value(&io.c));
                o.insert("f_u".into(), matrix_value(&io.f_u));
                m.insert("io".into(), Value::Object(o));
            }
        }
        SystemModel::Coupled(sys) => {
            m.insert("n".into(), Value::from(sys.n1()));
            m.insert("n2".into(), Value::from(sys.n2()));
            m.insert("a0".into(), matrix_value(&sys.a0));
            m.insert("a".into(), matrix_list_value(&sys.a));
            m.insert("c0".into(), matrix_value(&sys.c0));
            m.insert("c".into(), matrix_list_value(&sys.c));
            m.insert("delays".into(), delay_list_value(&sys.delays));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e1".into(), matrix_value(&io.e1));
                o.insert("e2".into(), matrix_value(&io.e2));
                o.insert("cy0".into(), matrix_value(&io.cy0));
                o.insert("cy".into(), matrix_list_value(&io.cy));
                o.insert("f_u".into(), matrix_value(&io.f_u));
                m.insert("io".into(), Value::Object(o));
            }
        }
        SystemModel::Distributed(sys) => {
            m.insert("n".into(), Value::from(sys.n()));
            m.insert("a0".into(), matrix_value(&sys.a0));
            m.insert("kernels".into(), kernel_list_value(&sys.kernels));
            m.insert("delays".into(), delay_list_value(&sys.delays));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e_u".into(), matrix_value(&io.e_u));
                o.insert("c0".into(), matrix_value(&io.c0));
                o.insert("out_kernels".into(), kernel_list_value(&io.out_kernels));
                o.insert("f_u".into(), matrix_value(&io.f_u));
                m.insert("io".into(), Value::Object(o));
            }
        }
        SystemModel::Neutral(sys) => {
            m.insert("n".into(), Value::from(sys.n()));
            m.insert("a0".into(), matrix_value(&sys.a0));
            m.insert("a_n".into(), matrix_list_value(&sys.a_n));
            m.insert("a_r".into(), matrix_list_value(&sys.a_r));
            m.insert("delays".into(), delay_list_value(&sys.delays));
            if let Some(io) = &sys.io {
                let mut o = Map::new();
                o.insert("e_u".into(), matrix_value(&io.e_u));
                o.insert("c0".into(), matrix_value(&io.c0));
                o.insert("c_n".into(), matrix_list_value(&io.c_n));
                o.insert("c_r".into(), matrix_list_value(&io.c_r));
                o.insert("f_u".into(), matrix_value(&io.f_u));
                m.insert("io".into(), Value::Object(o));
            }
        }
    }
    Value::Object(m)
}
