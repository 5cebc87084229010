//! Self-contained analysis reports. A report embeds the canonical model,
//! its digest, the positivity observations, the stability verdict with
//! every evaluated condition, any requested gains, and the certificates
//! behind them. `check_report` re-verifies each certificate by direct
//! substitution against the embedded model, with no re-derivation.

use posdelay_core::analysis::{
    gain_lp_matrix, stability_lp_matrix, stability_witness_form, Certificate, Condition,
    ConditionStatus, GainMethod, GainReport, StabilityReport, Sufficiency, Verdict,
};
use posdelay_core::model::{SystemModel, Violation};
use posdelay_core::witness::{verify_witness, RiccatiWitness};
use posdelay_core::{lp, Lp};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::schema::{load_model_value, save_model, SchemaError};

/// Strictness floor when re-verifying LP certificates: emitted vectors
/// carry slack three orders of magnitude above this, garbage does not.
const CHECK_DELTA: f64 = 1e-12;

/// Tolerance knobs recorded in (and honored by) a report run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Numeric agreement tolerance (gain method cross-checks, crossval).
    pub tol: f64,
    /// Relative margin below which a condition counts as marginal.
    pub margin_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: 1e-6, margin_band: 1e-7 }
    }
}

/// Simulator cross-check summary attached by `crossval` runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub step: f64,
    pub horizon: f64,
    pub terminal_norm_ratio: f64,
    pub min_entry: f64,
    /// Whether the trajectory agrees with the verdict; None when the
    /// horizon was too short to call it.
    pub consistent: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub model: SystemModel,
    pub digest: String,
    pub violations: Vec<Violation>,
    pub stability: StabilityReport,
    pub gains: Vec<GainReport>,
    pub simulation: Option<SimSummary>,
    pub tolerances: Tolerances,
}

impl Report {
    pub fn verdict(&self) -> Verdict {
        self.stability.verdict
    }
}

/// SHA-256 of the canonical compact model encoding.
pub fn model_digest(model: &SystemModel) -> String {
    let bytes = save_model(model).to_string();
    let mut h = Sha256::new();
    h.update(bytes.as_bytes());
    format!("sha256:{:x}", h.finalize())
}

pub fn assemble(
    model: SystemModel,
    stability: StabilityReport,
    gains: Vec<GainReport>,
    simulation: Option<SimSummary>,
    tolerances: Tolerances,
) -> Report {
    let digest = model_digest(&model);
    let violations = model.positivity_violations();
    Report { model, digest, violations, stability, gains, simulation, tolerances }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

fn vec_value(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::from(x)).collect())
}

fn vecs_value(v: &[Vec<f64>]) -> Value {
    Value::Array(v.iter().map(|b| vec_value(b)).collect())
}

fn certificate_value(c: &Certificate) -> Value {
    let mut m = Map::new();
    match c {
        Certificate::LinearFunctional { name, v } => {
            m.insert("type".into(), "linear_functional".into());
            m.insert("name".into(), name.as_str().into());
            m.insert("v".into(), vec_value(v));
        }
        Certificate::LpSolution { gamma, x } => {
            m.insert("type".into(), "lp_solution".into());
            m.insert("gamma".into(), Value::from(*gamma));
            m.insert("x".into(), vec_value(x));
        }
        Certificate::Riccati { gamma, witness } => {
            m.insert("type".into(), "riccati".into());
            m.insert("gamma".into(), gamma.map_or(Value::Null, Value::from));
            m.insert("p".into(), vec_value(&witness.p));
            m.insert("q".into(), vecs_value(&witness.q));
            m.insert("r".into(), vecs_value(&witness.r));
        }
        Certificate::SeparatingPair { pi1, pi2 } => {
            m.insert("type".into(), "separating_pair".into());
            m.insert("pi1".into(), vec_value(pi1));
            m.insert("pi2".into(), vec_value(pi2));
        }
    }
    Value::Object(m)
}

fn condition_value(c: &Condition) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), c.id.as_str().into());
    m.insert("status".into(), c.status.to_string().into());
    // NaN marks "not evaluable"; JSON spells that null.
    m.insert(
        "margin".into(),
        if c.margin.is_finite() { Value::from(c.margin) } else { Value::Null },
    );
    m.insert("detail".into(), c.detail.as_str().into());
    Value::Object(m)
}

fn stability_value(r: &StabilityReport) -> Value {
    let mut m = Map::new();
    m.insert("verdict".into(), r.verdict.to_string().into());
    m.insert("conditions".into(), Value::Array(r.conditions.iter().map(condition_value).collect()));
    m.insert(
        "certificate".into(),
        r.certificate.as_ref().map_or(Value::Null, certificate_value),
    );
    m.insert(
        "assumptions".into(),
        Value::Array(r.assumptions.iter().map(|s| Value::from(s.as_str())).collect()),
    );
    Value::Object(m)
}

fn gain_value(g: &GainReport) -> Value {
    let mut m = Map::new();
    m.insert("p".into(), g.p.to_string().into());
    m.insert("gain".into(), Value::from(g.gain));
    m.insert("method".into(), g.method.to_string().into());
    m.insert("sufficiency".into(), g.sufficiency.to_string().into());
    m.insert("witness".into(), g.witness.as_ref().map_or(Value::Null, certificate_value));
    m.insert(
        "assumptions".into(),
        Value::Array(g.assumptions.iter().map(|s| Value::from(s.as_str())).collect()),
    );
    Value::Object(m)
}

fn violation_value(v: &Violation) -> Value {
    let mut m = Map::new();
    m.insert("block".into(), v.block.as_str().into());
    m.insert("row".into(), Value::from(v.row));
    m.insert("col".into(), Value::from(v.col));
    m.insert("value".into(), Value::from(v.value));
    m.insert("requirement".into(), v.requirement.into());
    Value::Object(m)
}

fn sim_value(s: &SimSummary) -> Value {
    let mut m = Map::new();
    m.insert("step".into(), Value::from(s.step));
    m.insert("horizon".into(), Value::from(s.horizon));
    m.insert("terminal_norm_ratio".into(), Value::from(s.terminal_norm_ratio));
    m.insert("min_entry".into(), Value::from(s.min_entry));
    m.insert("consistent".into(), s.consistent.map_or(Value::Null, Value::from));
    m.insert("note".into(), s.note.as_str().into());
    Value::Object(m)
}

pub fn report_value(r: &Report) -> Value {
    let mut tool = Map::new();
    tool.insert("name".into(), "posdelay".into());
    tool.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let mut tols = Map::new();
    tols.insert("tol".into(), Value::from(r.tolerances.tol));
    tols.insert("margin_band".into(), Value::from(r.tolerances.margin_band));
    tool.insert("tolerances".into(), Value::Object(tols));

    let mut model = Map::new();
    model.insert("class".into(), r.model.class_name().into());
    model.insert("digest".into(), r.digest.as_str().into());
    model.insert("definition".into(), save_model(&r.model));

    let mut pos = Map::new();
    pos.insert("internally_positive".into(), Value::from(r.violations.is_empty()));
    pos.insert(
        "violations".into(),
        Value::Array(r.violations.iter().map(violation_value).collect()),
    );

    let mut m = Map::new();
    m.insert("tool".into(), Value::Object(tool));
    m.insert("model".into(), Value::Object(model));
    m.insert("positivity".into(), Value::Object(pos));
    m.insert("stability".into(), stability_value(&r.stability));
    m.insert("gains".into(), Value::Array(r.gains.iter().map(gain_value).collect()));
    m.insert("simulation".into(), r.simulation.as_ref().map_or(Value::Null, sim_value));
    Value::Object(m)
}

pub fn emit(r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&report_value(r)).expect("report serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// deserialization
// ---------------------------------------------------------------------------

type R<T> = Result<T, SchemaError>;

fn rerr<T>(ptr: &str, detail: impl Into<String>) -> R<T> {
    Err(SchemaError { pointer: String::from(ptr), detail: detail.into() })
}

fn robj<'a>(v: &'a Value, ptr: &str) -> R<&'a Map<String, Value>> {
    v.as_object().map_or_else(|| rerr(ptr, "expected an object"), Ok)
}

fn rget<'a>(m: &'a Map<String, Value>, ptr: &str, key: &str) -> R<&'a Value> {
    m.get(key).map_or_else(|| rerr(ptr, format!("missing required field '{key}'")), Ok)
}

fn rstr<'a>(v: &'a Value, ptr: &str) -> R<&'a str> {
    v.as_str().map_or_else(|| rerr(ptr, "expected a string"), Ok)
}

fn rnum(v: &Value, ptr: &str) -> R<f64> {
    v.as_f64().map_or_else(|| rerr(ptr, "expected a number"), Ok)
}

fn rvec(v: &Value, ptr: &str) -> R<Vec<f64>> {
    let a = v.as_array().map_or_else(|| rerr(ptr, "expected an array of numbers"), Ok)?;
    a.iter().enumerate().map(|(i, x)| rnum(x, &format!("{ptr}/{i}"))).collect()
}

fn rvecs(v: &Value, ptr: &str) -> R<Vec<Vec<f64>>> {
    let a = v.as_array().map_or_else(|| rerr(ptr, "expected an array of arrays"), Ok)?;
    a.iter().enumerate().map(|(i, x)| rvec(x, &format!("{ptr}/{i}"))).collect()
}

fn certificate_from(v: &Value, ptr: &str) -> R<Certificate> {
    let m = robj(v, ptr)?;
    let kind = rstr(rget(m, ptr, "type")?, &format!("{ptr}/type"))?;
    match kind {
        "linear_functional" => Ok(Certificate::LinearFunctional {
            name: rstr(rget(m, ptr, "name")?, &format!("{ptr}/name"))?.to_string(),
            v: rvec(rget(m, ptr, "v")?, &format!("{ptr}/v"))?,
        }),
        "lp_solution" => Ok(Certificate::LpSolution {
            gamma: rnum(rget(m, ptr, "gamma")?, &format!("{ptr}/gamma"))?,
            x: rvec(rget(m, ptr, "x")?, &format!("{ptr}/x"))?,
        }),
        "riccati" => {
            let gamma = match rget(m, ptr, "gamma")? {
                Value::Null => None,
                g => Some(rnum(g, &format!("{ptr}/gamma"))?),
            };
            let w = RiccatiWitness::new(
                rvec(rget(m, ptr, "p")?, &format!("{ptr}/p"))?,
                rvecs(rget(m, ptr, "q")?, &format!("{ptr}/q"))?,
                rvecs(rget(m, ptr, "r")?, &format!("{ptr}/r"))?,
            );
            Ok(Certificate::Riccati { gamma, witness: w })
        }
        "separating_pair" => Ok(Certificate::SeparatingPair {
            pi1: rvec(rget(m, ptr, "pi1")?, &format!("{ptr}/pi1"))?,
            pi2: rvec(rget(m, ptr, "pi2")?, &format!("{ptr}/pi2"))?,
        }),
        other => rerr(&format!("{ptr}/type"), format!("unknown certificate type '{other}'")),
    }
}

fn verdict_from(s: &str, ptr: &str) -> R<Verdict> {
    match s {
        "stable" => Ok(Verdict::Stable),
        "unstable" => Ok(Verdict::Unstable),
        "marginal" => Ok(Verdict::Marginal),
        other => rerr(ptr, format!("unknown verdict '{other}'")),
    }
}

fn status_from(s: &str, ptr: &str) -> R<ConditionStatus> {
    match s {
        "holds" => Ok(ConditionStatus::Holds),
        "fails" => Ok(ConditionStatus::Fails),
        "marginal" => Ok(ConditionStatus::Marginal),
        "not evaluable" => Ok(ConditionStatus::NotEvaluable),
        other => rerr(ptr, format!("unknown condition status '{other}'")),
    }
}

fn strings_from(v: &Value, ptr: &str) -> R<Vec<String>> {
    let a = v.as_array().map_or_else(|| rerr(ptr, "expected an array of strings"), Ok)?;
    a.iter()
        .enumerate()
        .map(|(i, s)| rstr(s, &format!("{ptr}/{i}")).map(String::from))
        .collect()
}

fn stability_from(v: &Value, ptr: &str) -> R<StabilityReport> {
    let m = robj(v, ptr)?;
    let verdict = verdict_from(
        rstr(rget(m, ptr, "verdict")?, &format!("{ptr}/verdict"))?,
        &format!("{ptr}/verdict"),
    )?;
    let conds_v = rget(m, ptr, "conditions")?
        .as_array()
        .map_or_else(|| rerr(&format!("{ptr}/conditions"), "expected an array"), Ok)?;
    let mut conditions = Vec::with_capacity(conds_v.len());
    for (i, cv) in conds_v.iter().enumerate() {
        let cptr = format!("{ptr}/conditions/{i}");
        let cm = robj(cv, &cptr)?;
        let margin = match rget(cm, &cptr, "margin")? {
            Value::Null => f64::NAN,
            x => rnum(x, &format!("{cptr}/margin"))?,
        };
        conditions.push(Condition {
            id: rstr(rget(cm, &cptr, "id")?, &format!("{cptr}/id"))?.to_string(),
            status: status_from(
                rstr(rget(cm, &cptr, "status")?, &format!("{cptr}/status"))?,
                &format!("{cptr}/status"),
            )?,
            margin,
            detail: rstr(rget(cm, &cptr, "detail")?, &format!("{cptr}/detail"))?.to_string(),
        });
    }
    let certificate = match rget(m, ptr, "certificate")? {
        Value::Null => None,
        c => Some(certificate_from(c, &format!("{ptr}/certificate"))?),
    };
    let assumptions = strings_from(rget(m, ptr, "assumptions")?, &format!("{ptr}/assumptions"))?;
    Ok(StabilityReport { verdict, conditions, certificate, assumptions })
}

pub fn lp_from_str(s: &str) -> Option<Lp> {
    match s {
        "1" => Some(Lp::One),
        "2" => Some(Lp::Two),
        "inf" => Some(Lp::Inf),
        _ => None,
    }
}

fn gain_from(v: &Value, ptr: &str) -> R<GainReport> {
    let m = robj(v, ptr)?;
    let p = lp_from_str(rstr(rget(m, ptr, "p")?, &format!("{ptr}/p"))?)
        .map_or_else(|| rerr(&format!("{ptr}/p"), "expected '1', '2', or 'inf'"), Ok)?;
    let method = match rstr(rget(m, ptr, "method")?, &format!("{ptr}/method"))? {
        "closed-form" => GainMethod::ClosedForm,
        "lp-bisection" => GainMethod::LpBisection,
        other => return rerr(&format!("{ptr}/method"), format!("unknown method '{other}'")),
    };
    let sufficiency = match rstr(rget(m, ptr, "sufficiency")?, &format!("{ptr}/sufficiency"))? {
        "exact" => Sufficiency::Exact,
        "sufficient-only" => Sufficiency::SufficientOnly,
        other => return rerr(&format!("{ptr}/sufficiency"), format!("unknown sufficiency '{other}'")),
    };
    let witness = match rget(m, ptr, "witness")? {
        Value::Null => None,
        c => Some(certificate_from(c, &format!("{ptr}/witness"))?),
    };
    Ok(GainReport {
        p,
        gain: rnum(rget(m, ptr, "gain")?, &format!("{ptr}/gain"))?,
        method,
        witness,
        sufficiency,
        assumptions: strings_from(rget(m, ptr, "assumptions")?, &format!("{ptr}/assumptions"))?,
    })
}

pub fn report_from_value(v: &Value) -> R<Report> {
    let m = robj(v, "")?;

    let tool = robj(rget(m, "", "tool")?, "/tool")?;
    let tols = robj(rget(tool, "/tool", "tolerances")?, "/tool/tolerances")?;
    let tolerances = Tolerances {
        tol: rnum(rget(tols, "/tool/tolerances", "tol")?, "/tool/tolerances/tol")?,
        margin_band: rnum(
            rget(tols, "/tool/tolerances", "margin_band")?,
            "/tool/tolerances/margin_band",
        )?,
    };

    let model_m = robj(rget(m, "", "model")?, "/model")?;
    let digest = rstr(rget(model_m, "/model", "digest")?, "/model/digest")?.to_string();
    let model = load_model_value(rget(model_m, "/model", "definition")?)
        .map_err(|e| SchemaError {
            pointer: format!("/model/definition{}", e.pointer),
            detail: e.detail,
        })?;

    let stability = stability_from(rget(m, "", "stability")?, "/stability")?;
    let gains_v = rget(m, "", "gains")?
        .as_array()
        .map_or_else(|| rerr("/gains", "expected an array"), Ok)?;
    let gains = gains_v
        .iter()
        .enumerate()
        .map(|(i, g)| gain_from(g, &format!("/gains/{i}")))
        .collect::<R<Vec<_>>>()?;

    let simulation = match rget(m, "", "simulation")? {
        Value::Null => None,
        sv => {
            let sm = robj(sv, "/simulation")?;
            Some(SimSummary {
                step: rnum(rget(sm, "/simulation", "step")?, "/simulation/step")?,
                horizon: rnum(rget(sm, "/simulation", "horizon")?, "/simulation/horizon")?,
                terminal_norm_ratio: rnum(
                    rget(sm, "/simulation", "terminal_norm_ratio")?,
                    "/simulation/terminal_norm_ratio",
                )?,
                min_entry: rnum(rget(sm, "/simulation", "min_entry")?, "/simulation/min_entry")?,
                consistent: match rget(sm, "/simulation", "consistent")? {
                    Value::Null => None,
                    b => Some(b.as_bool().map_or_else(
                        || rerr("/simulation/consistent", "expected a boolean"),
                        Ok,
                    )?),
                },
                note: rstr(rget(sm, "/simulation", "note")?, "/simulation/note")?.to_string(),
            })
        }
    };

    let violations = model.positivity_violations();
    Ok(Report { model, digest, violations, stability, gains, simulation, tolerances })
}

pub fn load_report(text: &str) -> R<Report> {
    let v: Value = serde_json::from_str(text).map_err(|e| SchemaError {
        pointer: String::new(),
        detail: format!("invalid JSON: {e}"),
    })?;
    report_from_value(&v)
}

// ---------------------------------------------------------------------------
// certificate re-verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct CheckOutcome {
    /// One line per checked item, "ok: ..." or "FAIL: ...".
    pub lines: Vec<String>,
    pub failures: usize,
    pub checked: usize,
}

impl CheckOutcome {
    fn pass(&mut self, what: impl Into<String>) {
        self.checked += 1;
        self.lines.push(format!("ok: {}", what.into()));
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.checked += 1;
        self.failures += 1;
        self.lines.push(format!("FAIL: {}", what.into()));
    }

    pub fn all_passed(&self) -> bool {
        self.failures == 0
    }
}

fn all_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn check_lp_certificate(
    out: &mut CheckOutcome,
    what: &str,
    g: &posdelay_core::Matrix,
    x: &[f64],
) {
    if lp::verify_lp_certificate(g, &all_indices(g.cols()), x, CHECK_DELTA) {
        out.pass(format!("{what}: substituted vector is strictly feasible"));
    } else {
        out.fail(format!("{what}: vector does not satisfy the program"));
    }
}

/// Re-verify everything a report claims, from the embedded model alone:
/// the digest, the stability certificate, and each gain witness. Nothing
/// is re-derived; every check is a direct substitution.
pub fn check_report(rep: &Report) -> CheckOutcome {
    let mut out = CheckOutcome::default();

    let recomputed = model_digest(&rep.model);
    if recomputed == rep.digest {
        out.pass("model digest matches the embedded definition");
    } else {
        out.fail(format!("model digest mismatch: report says {}, model hashes to {recomputed}", rep.digest));
    }

    match &rep.stability.certificate {
        None => out.pass("no stability certificate claimed (none expected for this verdict)"),
        Some(Certificate::LinearFunctional { name, v }) => match stability_lp_matrix(&rep.model) {
            Ok(g) => check_lp_certificate(&mut out, &format!("stability certificate ({name})"), &g, v),
            Err(e) => out.fail(format!("stability certificate ({name}): cannot form the program: {e}")),
        },
        Some(Certificate::Riccati { gamma: None, witness }) => {
            match stability_witness_form(&rep.model) {
                Ok(form) => match verify_witness(&form, witness) {
                    Ok(v) if v.negdef => out.pass(format!(
                        "stability witness: assembled matrix is negative definite (margin {:.3e})",
                        v.relative_margin()
                    )),
                    Ok(_) => out.fail("stability witness: assembled matrix is not negative definite"),
                    Err(e) => out.fail(format!("stability witness: {e}")),
                },
                Err(e) => out.fail(format!("stability witness: cannot form the test matrix: {e}")),
            }
        }
        Some(Certificate::Riccati { gamma: Some(_), .. }) => {
            out.fail("stability certificate carries a gain level; reports store those under gains")
        }
        Some(Certificate::LpSolution { .. }) | Some(Certificate::SeparatingPair { .. }) => {
            out.fail("stability certificate has a type this checker does not accept for verdicts")
        }
    }

    for g in &rep.gains {
        let label = format!("L{} gain witness", g.p);
        match &g.witness {
            None => out.pass(format!("{label}: none attached")),
            Some(Certificate::LpSolution { gamma, x }) => {
                if *gamma < g.gain * (1.0 - 1e-9) {
                    out.fail(format!(
                        "{label}: certified level {gamma} sits below the reported gain {}",
                        g.gain
                    ));
                    continue;
                }
                match gain_lp_matrix(&rep.model, g.p, *gamma) {
                    Ok(m) => check_lp_certificate(
                        &mut out,
                        &format!("{label} (level {gamma:.6e})"),
                        &m,
                        x,
                    ),
                    Err(e) => out.fail(format!("{label}: cannot form the gain program: {e}")),
                }
            }
            Some(Certificate::Riccati { gamma: Some(gamma), witness }) => {
                if g.p != Lp::Two {
                    out.fail(format!("{label}: quadratic witnesses certify L2 only"));
                    continue;
                }
                if *gamma < g.gain * (1.0 - 1e-9) {
                    out.fail(format!(
                        "{label}: certified level {gamma} sits below the reported gain {}",
                        g.gain
                    ));
                    continue;
                }
                match posdelay_core::analysis::gain_witness_form(&rep.model, *gamma) {
                    Ok(form) => match verify_witness(&form, witness) {
                        Ok(v) if v.negdef => out.pass(format!(
                            "{label} (level {gamma:.6e}): witness matrix is negative definite"
                        )),
                        Ok(_) => out.fail(format!("{label}: witness matrix is not negative definite")),
                        Err(e) => out.fail(format!("{label}: {e}")),
                    },
                    Err(e) => out.fail(format!("{label}: cannot form the witness matrix: {e}")),
                }
            }
            Some(_) => out.fail(format!("{label}: unsupported certificate type for a gain")),
        }
    }

    out
}
