//! Stability and gain analysis for the supported system classes.
//!
//! Every analyzer evaluates the full set of equivalent conditions known for
//! its class (spectral tests, linear programs, quadratic witnesses) and
//! reports each one with a signed relative margin. In exact arithmetic the
//! conditions agree on internally positive systems, so the margins double
//! as a numerical cross-check: any margin inside the band around zero, or a
//! disagreement between evaluable conditions, downgrades the verdict to
//! marginal instead of picking a side.
//!
//! Gains are computed against the zero-frequency comparison matrix of the
//! class (worst case for positive systems) and certified either by a
//! feasible point of the class linear program at a level just above the
//! gain or by a diagonal quadratic witness.

pub mod gains;
pub mod stability;

pub use gains::{
    gain, gain_coupled, gain_difference, gain_discrete, gain_distributed, gain_lp_matrix,
    gain_lti, gain_neutral, gain_with_method, gain_witness_form, GainMethod, GainReport,
    Sufficiency,
};
pub use stability::{
    analyze, analyze_coupled, analyze_difference, analyze_discrete, analyze_distributed,
    analyze_interconnection, analyze_lft, analyze_lti, analyze_neutral,
    distributed_critical_span, stability_lp_matrix, stability_witness_form,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::lp::{solve_strict_lp, LpOutcome, StrictLp};
use crate::matrix::{solve_linear, Matrix};
use crate::model::{ModelError, SystemModel};
use crate::spectral::{metzler_spectral_abscissa, spectral_radius_nonneg};
use crate::witness::{construct_witness, verify_witness, ConstructFailure, RiccatiWitness, WitnessForm};

/// Relative half-width of the band around zero inside which a condition is
/// reported marginal. The theorems are strict inequalities, so a margin
/// this close to the boundary is numerical noise either way.
pub const MARGINAL_BAND: f64 = 1e-7;

/// Relative slack demanded of strict LP feasibility in gain bisections and
/// certificate construction, where a sharp feasibility transition matters
/// more than a readable infeasibility margin.
pub(crate) const LP_DELTA: f64 = 1e-9;

/// Positivity floor for the LPs behind stability conditions. Infeasible
/// homogeneous systems park the hurting variables at this floor, so the
/// optimal slack is proportional to it and slack divided by the floor is
/// the scale-free violation. The floor is kept well above simplex rounding
/// noise so that ratio stays inside the marginal band at true boundaries.
pub(crate) const LP_MARGIN_DELTA: f64 = 1e-6;

/// Bracket tolerance handed to the spectral routines, scaled by magnitude.
pub(crate) const SPECTRAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisError {
    pub detail: String,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.detail)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AnalysisError {}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        AnalysisError { detail: format!("{e}") }
    }
}

pub(crate) fn err(detail: String) -> AnalysisError {
    AnalysisError { detail }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Holds,
    Fails,
    Marginal,
    /// Could not be computed (singular inner inverse, search budget, ...).
    /// Ignored by the verdict; the detail says why.
    NotEvaluable,
}

impl fmt::Display for ConditionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionStatus::Holds => "holds",
            ConditionStatus::Fails => "fails",
            ConditionStatus::Marginal => "marginal",
            ConditionStatus::NotEvaluable => "not evaluable",
        })
    }
}

/// One evaluated condition. `margin` is relative (raw margin divided by the
/// condition's natural scale): positive means the condition holds with that
/// much room, negative that it fails. Conjunctions report their weakest
/// part.
#[derive(Debug, Clone)]
pub struct Condition {
    pub id: String,
    pub status: ConditionStatus,
    pub margin: f64,
    pub detail: String,
}

impl Condition {
    pub(crate) fn from_margin(id: &str, margin: f64, detail: String) -> Condition {
        let status = if !margin.is_finite() {
            ConditionStatus::NotEvaluable
        } else if margin <= -MARGINAL_BAND {
            ConditionStatus::Fails
        } else if margin >= MARGINAL_BAND {
            ConditionStatus::Holds
        } else {
            ConditionStatus::Marginal
        };
        Condition { id: String::from(id), status, margin, detail }
    }

    pub(crate) fn not_evaluable(id: &str, detail: String) -> Condition {
        Condition { id: String::from(id), status: ConditionStatus::NotEvaluable, margin: f64::NAN, detail }
    }

    pub fn holds(&self) -> bool {
        self.status == ConditionStatus::Holds
    }
}

/// Machine-checkable evidence attached to a report. Each variant names the
/// object it certifies so it can be re-verified from the model alone.
#[derive(Debug, Clone)]
pub enum Certificate {
    /// Positive vector v with v' G < 0 for the stability LP matrix G of the
    /// class; `name` is the condition id it realizes.
    LinearFunctional { name: String, v: Vec<f64> },
    /// Feasible point of the class gain LP at level `gamma` (homogenizing
    /// variable last), proving gain <= gamma.
    LpSolution { gamma: f64, x: Vec<f64> },
    /// Diagonal quadratic witness; `gamma` is present for gain forms.
    Riccati { gamma: Option<f64>, witness: RiccatiWitness },
    /// Interconnection separating pair: pi1 > 0, pi2 sign-free with
    /// pi1' + pi2' G2 >= 0 and pi1' G1 + pi2' < 0.
    SeparatingPair { pi1: Vec<f64>, pi2: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
    pub certificate: Option<Certificate>,
    pub assumptions: Vec<String>,
}

/// Necessary-only flags that ride along in reports without belonging to
/// the equivalence suite. Their margin is already folded into every
/// equivalent condition, so comparing them against the suite would
/// manufacture disagreements: a strongly stable difference operator says
/// nothing about the reduced dynamics.
pub fn is_gate_condition(id: &str) -> bool {
    id == "strong-stability"
}

impl StabilityReport {
    /// True when no two evaluable, non-marginal equivalent conditions
    /// disagree. Gate flags are skipped; they are one-directional.
    pub fn booleans_agree(&self) -> bool {
        let mut saw_holds = false;
        let mut saw_fails = false;
        for c in &self.conditions {
            if is_gate_condition(&c.id) {
                continue;
            }
            match c.status {
                ConditionStatus::Holds => saw_holds = true,
                ConditionStatus::Fails => saw_fails = true,
                _ => {}
            }
        }
        !(saw_holds && saw_fails)
    }

    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

/// Fold per-condition results into one verdict. Marginal anywhere, or a
/// disagreement between decided conditions, yields a marginal verdict; the
/// second return is a note explaining a disagreement.
pub(crate) fn aggregate(conditions: &[Condition]) -> (Verdict, Option<String>) {
    let mut holds = 0usize;
    let mut fails = 0usize;
    let mut marginal = 0usize;
    for c in conditions {
        match c.status {
            ConditionStatus::Holds => holds += 1,
            ConditionStatus::Fails => fails += 1,
            ConditionStatus::Marginal => marginal += 1,
            ConditionStatus::NotEvaluable => {}
        }
    }
    if holds > 0 && fails > 0 {
        return (
            Verdict::Marginal,
            Some(String::from("equivalent conditions disagree beyond the numerical band; treat as boundary case")),
        );
    }
    if marginal > 0 {
        return (Verdict::Marginal, None);
    }
    if fails > 0 {
        return (Verdict::Unstable, None);
    }
    if holds > 0 {
        return (Verdict::Stable, None);
    }
    (Verdict::Marginal, Some(String::from("no condition could be evaluated")))
}

/// Validation gate shared by all analyzers: structural validity plus
/// internal positivity, which the theorems assume throughout.
pub(crate) fn precheck_model(model: &SystemModel) -> Result<(), AnalysisError> {
    model.validate()?;
    let violations = model.positivity_violations();
    if let Some(v) = violations.first() {
        return Err(err(format!(
            "system is not internally positive ({} violation(s)); first: {v}",
            violations.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// margin primitives
// ---------------------------------------------------------------------------

/// Relative Hurwitz margin of a Metzler matrix: (-abscissa, raw abscissa),
/// margin scaled by 1 + max|entry|.
pub(crate) fn hurwitz_margin(m: &Matrix) -> Result<(f64, f64), String> {
    let scale = 1.0 + m.max_abs_entry();
    match metzler_spectral_abscissa(m, SPECTRAL_TOL * scale) {
        Ok(r) => Ok((-r.value / scale, r.value)),
        Err(e) => Err(format!("{e}")),
    }
}

/// Relative Schur margin of a nonnegative matrix: (1 - rho, rho). Entries
/// that are negative only by solve noise are clamped to zero first.
pub(crate) fn radius_margin(m: &Matrix) -> Result<(f64, f64), String> {
    let clamped = clamp_nonneg(m)?;
    let scale = 1.0 + clamped.max_abs_entry();
    match spectral_radius_nonneg(&clamped, SPECTRAL_TOL * scale) {
        Ok(r) => Ok((1.0 - r.value, r.value)),
        Err(e) => Err(format!("{e}")),
    }
}

/// Zero out tiny negative entries left behind by linear solves; reject
/// anything genuinely negative.
pub(crate) fn clamp_nonneg(m: &Matrix) -> Result<Matrix, String> {
    let tol = 1e-9 * m.max_abs_entry().max(1.0);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m[(i, j)] < -tol {
                return Err(format!("entry ({i},{j}) = {:e} is negative where a nonnegative matrix is required", m[(i, j)]));
            }
        }
    }
    Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].max(0.0)))
}

pub(crate) struct LpCheck {
    pub margin: f64,
    pub x: Option<Vec<f64>>,
    pub detail: String,
}

/// Solve the strict LP G x < 0, x > 0 and report a scale-free margin. The
/// solver normalizes G internally; when feasible the slack per unit of
/// solution size is the margin. When infeasible the optimizer parks the
/// hurting variables at the positivity floor, making the slack proportional
/// to the floor, so slack divided by the floor is the per-unit violation.
pub(crate) fn strict_lp_check(g: Matrix) -> Result<LpCheck, String> {
    let lp = StrictLp::all_positive(g);
    let out = solve_strict_lp(&lp, LP_MARGIN_DELTA).map_err(|e| format!("{e}"))?;
    Ok(match out {
        LpOutcome::Feasible { x, slack } => {
            let norm = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(LP_MARGIN_DELTA);
            let margin = slack / norm;
            LpCheck {
                margin,
                x: Some(x),
                detail: format!("lp feasible with relative slack {margin:.3e}"),
            }
        }
        LpOutcome::Marginal { slack, .. } => LpCheck {
            margin: 0.0,
            x: None,
            detail: format!("lp boundary-degenerate, slack {slack:.3e}"),
        },
        LpOutcome::Infeasible { slack, .. } => {
            let margin = (slack / LP_MARGIN_DELTA).min(0.0);
            LpCheck {
                margin,
                x: None,
                detail: format!("lp infeasible, scaled violation {margin:.3e}"),
            }
        }
    })
}

/// Condition backed by a constructed-and-verified quadratic witness.
/// Construction failing to find a witness never decides anything; a failed
/// sound precheck reports the paired spectral margin instead.
pub(crate) fn witness_condition(
    id: &str,
    form: &WitnessForm,
    fallback_margin: f64,
) -> (Condition, Option<RiccatiWitness>) {
    match construct_witness(form) {
        Ok(w) => match verify_witness(form, &w) {
            Ok(out) => {
                let rel = out.relative_margin();
                let c = Condition::from_margin(id, rel, format!("witness verified, relative margin {rel:.3e}"));
                (c, Some(w))
            }
            Err(e) => (Condition::not_evaluable(id, format!("witness re-verification failed: {e}")), None),
        },
        Err(ConstructFailure::SpectralConditionFails) => {
            let margin = if fallback_margin.is_finite() {
                fallback_margin.min(0.0)
            } else {
                f64::NAN
            };
            (
                Condition::from_margin(
                    id,
                    margin,
                    String::from("necessary spectral condition fails; no witness exists"),
                ),
                None,
            )
        }
        Err(ConstructFailure::NotFound) => (
            Condition::not_evaluable(id, String::from("no witness found within the search budget; verdict unaffected")),
            None,
        ),
    }
}

// ---------------------------------------------------------------------------
// small matrix builders shared by the analyzers
// ---------------------------------------------------------------------------

/// [M_1 ... M_k]
pub(crate) fn row_of(ms: &[Matrix]) -> Matrix {
    let refs: Vec<&Matrix> = ms.iter().collect();
    Matrix::hstack(&refs)
}

/// col(M_1; ...; M_k)
pub(crate) fn col_of(ms: &[Matrix]) -> Matrix {
    let refs: Vec<&Matrix> = ms.iter().collect();
    Matrix::vstack(&refs)
}

/// ones_k (x) M, vertically.
pub(crate) fn stack_copies(m: &Matrix, k: usize) -> Matrix {
    let refs: Vec<&Matrix> = (0..k).map(|_| m).collect();
    Matrix::vstack(&refs)
}

/// M ones-column: row sums as an n x 1 matrix.
pub(crate) fn row_sums(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.rows(), 1, |i, _| (0..m.cols()).map(|j| m[(i, j)]).sum())
}

/// M' ones-column: column sums as a cols x 1 matrix.
pub(crate) fn col_sums(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.cols(), 1, |j, _| (0..m.rows()).map(|i| m[(i, j)]).sum())
}

/// C (-A)^{-1} E + F, the zero-frequency comparison matrix.
pub(crate) fn static_gain(a: &Matrix, e: &Matrix, c: &Matrix, f: &Matrix) -> Result<Matrix, String> {
    let neg_a = a.scale(-1.0);
    match solve_linear(&neg_a, e) {
        Ok(s) => Ok(c.mul(&s.x).add(f)),
        Err(e) => Err(format!("{e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn margins_map_to_statuses() {
        let c = Condition::from_margin("X.i", 0.5, "ok".to_string());
        assert_eq!(c.status, ConditionStatus::Holds);
        let c = Condition::from_margin("X.i", -0.5, "no".to_string());
        assert_eq!(c.status, ConditionStatus::Fails);
        let c = Condition::from_margin("X.i", 1e-9, "edge".to_string());
        assert_eq!(c.status, ConditionStatus::Marginal);
        let c = Condition::from_margin("X.i", f64::NAN, "bad".to_string());
        assert_eq!(c.status, ConditionStatus::NotEvaluable);
    }

    #[test]
    fn aggregate_handles_disagreement_and_gaps() {
        let holds = Condition::from_margin("a", 1.0, String::new());
        let fails = Condition::from_margin("b", -1.0, String::new());
        let skip = Condition::not_evaluable("c", String::new());
        assert_eq!(aggregate(&[holds.clone(), skip.clone()]).0, Verdict::Stable);
        assert_eq!(aggregate(&[fails.clone(), skip.clone()]).0, Verdict::Unstable);
        let (v, note) = aggregate(&[holds, fails]);
        assert_eq!(v, Verdict::Marginal);
        assert!(note.is_some());
        let (v, note) = aggregate(&[skip]);
        assert_eq!(v, Verdict::Marginal);
        assert!(note.is_some());
    }

    #[test]
    fn clamp_rejects_genuine_negativity() {
        let m = Matrix::from_rows(&[vec![1.0, -1e-12], vec![0.0, 2.0]]).unwrap();
        let c = clamp_nonneg(&m).unwrap();
        assert_eq!(c[(0, 1)], 0.0);
        let bad = Matrix::from_rows(&[vec![1.0, -0.5]]).unwrap();
        assert!(clamp_nonneg(&bad).is_err());
    }
}
