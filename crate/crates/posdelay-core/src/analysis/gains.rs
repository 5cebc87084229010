//! Induced L1, L2 and Linf gains of internally positive delay systems.
//!
//! For every supported class the gain equals the matching induced norm of
//! the zero-frequency comparison matrix, so the closed form is a matrix
//! inversion followed by a norm. The lp-bisection method recomputes the
//! same value by bisecting gamma over the feasibility of the class gain
//! program (L1, Linf) or over the definiteness of the gram comparison
//! matrix (L2), which exercises a fully independent numerical route.
//!
//! Time-varying delays with rate bound eta keep a finite guaranteed gain
//! after the delayed channels are scaled by (1 - eta)^(-1/p); for p = inf
//! no scaling is needed. Those scaled bounds are sufficient, not known to
//! be tight, and the reports say so.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lp::{solve_strict_lp, LpOutcome, StrictLp};
use crate::math;
use crate::matrix::{solve_linear, sym_lambda_max, Matrix};
use crate::model::{
    CoupledSystem, DelaySpec, DifferenceSystem, DiscreteDelaySystem, DistributedSystem,
    LtiSystem, NeutralSystem, SystemModel,
};
use crate::spectral::{induced_norm, Lp};
use crate::witness::{construct_witness, WitnessForm};

use super::{
    col_sums, err, hurwitz_margin, precheck_model, radius_margin, row_sums, static_gain,
    AnalysisError, Certificate, LP_DELTA,
};

/// How the reported value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainMethod {
    /// Induced norm of the zero-frequency comparison matrix.
    ClosedForm,
    /// Bisection over the feasibility of the gain program.
    LpBisection,
}

impl fmt::Display for GainMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainMethod::ClosedForm => f.write_str("closed-form"),
            GainMethod::LpBisection => f.write_str("lp-bisection"),
        }
    }
}

/// Whether the reported value is the exact gain or only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sufficiency {
    Exact,
    SufficientOnly,
}

impl fmt::Display for Sufficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sufficiency::Exact => f.write_str("exact"),
            Sufficiency::SufficientOnly => f.write_str("sufficient-only"),
        }
    }
}

/// Result of a gain computation.
#[derive(Clone, Debug)]
pub struct GainReport {
    pub p: Lp,
    pub gain: f64,
    pub method: GainMethod,
    /// Standalone certificate that the gain is at most the recorded level:
    /// a feasible point of the gain program or a quadratic witness.
    pub witness: Option<Certificate>,
    pub sufficiency: Sufficiency,
    pub assumptions: Vec<String>,
}

/// Gain of a model by the closed form.
pub fn gain(model: &SystemModel, p: Lp) -> Result<GainReport, AnalysisError> {
    gain_with_method(model, p, GainMethod::ClosedForm)
}

/// Gain of a model by the requested method.
pub fn gain_with_method(
    model: &SystemModel,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    match model {
        SystemModel::Lti(s) => lti_engine(s, p, method),
        SystemModel::DiscreteDelay(s) => discrete_engine(s, p, method),
        SystemModel::Difference(s) => difference_engine(s, p, method),
        SystemModel::Coupled(s) => coupled_engine(s, p, method),
        SystemModel::Distributed(s) => distributed_engine(s, p, method),
        SystemModel::Neutral(s) => neutral_engine(s, p, method),
    }
}

pub fn gain_lti(sys: &LtiSystem, p: Lp) -> Result<GainReport, AnalysisError> {
    lti_engine(sys, p, GainMethod::ClosedForm)
}

pub fn gain_discrete(sys: &DiscreteDelaySystem, p: Lp) -> Result<GainReport, AnalysisError> {
    discrete_engine(sys, p, GainMethod::ClosedForm)
}

pub fn gain_difference(sys: &DifferenceSystem, p: Lp) -> Result<GainReport, AnalysisError> {
    difference_engine(sys, p, GainMethod::ClosedForm)
}

pub fn gain_coupled(sys: &CoupledSystem, p: Lp) -> Result<GainReport, AnalysisError> {
    coupled_engine(sys, p, GainMethod::ClosedForm)
}

pub fn gain_distributed(sys: &DistributedSystem, p: Lp) -> Result<GainReport, AnalysisError> {
    distributed_engine(sys, p, GainMethod::ClosedForm)
}

pub fn gain_neutral(sys: &NeutralSystem, p: Lp) -> Result<GainReport, AnalysisError> {
    neutral_engine(sys, p, GainMethod::ClosedForm)
}

// ---------------------------------------------------------------------------
// shared plumbing

fn no_io() -> AnalysisError {
    err(String::from(
        "model declares no io block; gain analysis needs input and output channels",
    ))
}

fn not_stable() -> AnalysisError {
    err(String::from("system is not stable: gains are undefined"))
}

/// Per-delay channel scaling (1 - eta)^(-1/p). Constant delays scale by one.
fn rate_scales(delays: &[DelaySpec], p: Lp) -> Result<Vec<f64>, AnalysisError> {
    delays
        .iter()
        .enumerate()
        .map(|(i, d)| match d {
            DelaySpec::Const { .. } => Ok(1.0),
            DelaySpec::TimeVarying { rate_bound, .. } => Ok(match p {
                Lp::One => 1.0 / (1.0 - rate_bound),
                Lp::Two => 1.0 / math::sqrt(1.0 - rate_bound),
                Lp::Inf => 1.0,
            }),
            DelaySpec::TimeVaryingUnboundedRate { .. } => match p {
                Lp::Inf => Ok(1.0),
                _ => Err(err(format!(
                    "delay {i} has unbounded rate variation: the L{p} gain needs a rate bound below one"
                ))),
            },
        })
        .collect()
}

fn rates_or_zero(delays: &[DelaySpec]) -> Vec<f64> {
    delays.iter().map(|d| d.rate_bound().unwrap_or(0.0)).collect()
}

fn zero_frequency_note() -> String {
    String::from("gain evaluated at zero frequency, the worst case for internally positive systems")
}

fn tv_notes(delays: &[DelaySpec], p: Lp, out: &mut Vec<String>) -> bool {
    let tv = delays.iter().any(|d| !d.is_const());
    if tv {
        match p {
            Lp::Inf => out.push(String::from(
                "exact for time-varying delays provided t - h_i(t) tends to infinity",
            )),
            _ => out.push(String::from(
                "time-varying delays handled by rate scaling; the bound is sufficient and necessity is open",
            )),
        }
    }
    tv
}

fn sufficiency_for(tv: bool, p: Lp) -> Sufficiency {
    if tv && !matches!(p, Lp::Inf) {
        Sufficiency::SufficientOnly
    } else {
        Sufficiency::Exact
    }
}

/// Monotone bisection for the least level at which `feasible` holds. The
/// hint (closed-form value when available) seeds the upper bracket.
fn bisect(feasible: impl Fn(f64) -> bool, hint: f64) -> Result<f64, AnalysisError> {
    let mut hi = if hint > 0.0 { 2.0 * hint } else { 1e-9 };
    let mut grow = 0usize;
    while !feasible(hi) {
        hi *= 2.0;
        grow += 1;
        if grow > 80 {
            return Err(err(String::from(
                "gain bisection found no feasible upper level; the gain program never closes",
            )));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn lp_feasible(g: Matrix) -> bool {
    matches!(
        solve_strict_lp(&StrictLp::all_positive(g), LP_DELTA),
        Ok(o) if o.is_feasible()
    )
}

/// Certificate levels tried above the computed gain, tightest first.
const CERT_LADDER: [f64; 4] = [1e-6, 1e-3, 1e-2, 1e-1];

fn lp_certificate(build: &impl Fn(f64) -> Matrix, gain: f64) -> Option<Certificate> {
    for bump in CERT_LADDER {
        let gamma = gain.max(1e-6) * (1.0 + bump);
        if let Ok(LpOutcome::Feasible { x, .. }) =
            solve_strict_lp(&StrictLp::all_positive(build(gamma)), LP_DELTA)
        {
            return Some(Certificate::LpSolution { gamma, x });
        }
    }
    None
}

fn l2_certificate(form_at: &impl Fn(f64) -> WitnessForm, gain: f64) -> Option<Certificate> {
    for bump in CERT_LADDER {
        let gamma = gain.max(1e-6) * (1.0 + bump);
        if let Ok(w) = construct_witness(&form_at(gamma)) {
            return Some(Certificate::Riccati {
                gamma: Some(gamma),
                witness: w,
            });
        }
    }
    None
}

/// Value plus certificate for the L1/Linf route.
fn finish_lp(
    build: impl Fn(f64) -> Matrix,
    method: GainMethod,
    closed: f64,
) -> Result<(f64, Option<Certificate>), AnalysisError> {
    let value = match method {
        GainMethod::ClosedForm => closed,
        GainMethod::LpBisection => bisect(|g| lp_feasible(build(g)), closed)?,
    };
    Ok((value, lp_certificate(&build, value)))
}

/// Value plus certificate for the L2 route. Bisection tests the strict
/// definiteness of H'H - gamma^2 I, a route independent of the norm solver.
fn finish_l2(
    h0: &Matrix,
    form_at: impl Fn(f64) -> WitnessForm,
    method: GainMethod,
    closed: f64,
) -> Result<(f64, Option<Certificate>), AnalysisError> {
    let value = match method {
        GainMethod::ClosedForm => closed,
        GainMethod::LpBisection => {
            let gram = h0.transpose().mul(h0);
            let k = gram.rows();
            let scale = 1.0 + gram.max_abs_entry();
            bisect(
                |g| {
                    let shifted =
                        Matrix::from_fn(k, k, |i, j| gram[(i, j)] - if i == j { g * g } else { 0.0 });
                    sym_lambda_max(&shifted, 1e-13 * scale) < 0.0
                },
                closed,
            )?
        }
    };
    Ok((value, l2_certificate(&form_at, value)))
}

// ---------------------------------------------------------------------------
// gain programs, homogenized with a positive variable tau on the constant
// terms; feasibility at a level gamma is unchanged by the homogenization

/// Columns of [lam' 1'] [[A, E],[C, F]] < [0' gamma 1'] as rows of G, with
/// variables (lam, tau) > 0.
fn retarded_lp_l1(a: &Matrix, e: &Matrix, c: &Matrix, f: &Matrix, gamma: f64) -> Matrix {
    let n = a.rows();
    let nu = e.cols();
    let mut g = Matrix::zeros(n + nu, n + 1);
    g.set_block(0, 0, &a.transpose());
    g.set_block(0, n, &col_sums(c));
    g.set_block(n, 0, &e.transpose());
    let fc = col_sums(f);
    g.set_block(n, n, &Matrix::from_fn(nu, 1, |i, _| fc[(i, 0)] - gamma));
    g
}

/// Rows of [[A, E],[C, F]] [lam; 1] < [0; gamma 1] as rows of G.
fn retarded_lp_linf(a: &Matrix, e: &Matrix, c: &Matrix, f: &Matrix, gamma: f64) -> Matrix {
    let n = a.rows();
    let ny = c.rows();
    let mut g = Matrix::zeros(n + ny, n + 1);
    g.set_block(0, 0, a);
    g.set_block(0, n, &row_sums(e));
    g.set_block(n, 0, c);
    let fr = row_sums(f);
    g.set_block(n, n, &Matrix::from_fn(ny, 1, |i, _| fr[(i, 0)] - gamma));
    g
}

/// Difference-system L1 program with one copy variable per delayed term:
/// column block j reads A_j' (sum_i mu_i) - mu_j + C_j' 1 tau < 0 and the
/// input columns read E_u' (sum_i mu_i) + (F_u' 1 - gamma 1) tau < 0.
fn difference_lp_l1(a: &[Matrix], e_u: &Matrix, c: &[Matrix], f_u: &Matrix, gamma: f64) -> Matrix {
    let nb = a.len();
    let n = a[0].rows();
    let nu = e_u.cols();
    let mut g = Matrix::zeros(nb * n + nu, nb * n + 1);
    for j in 0..nb {
        let at = a[j].transpose();
        for i in 0..nb {
            let mut block = at.clone();
            if i == j {
                block = block.sub(&Matrix::identity(n));
            }
            g.set_block(j * n, i * n, &block);
        }
        g.set_block(j * n, nb * n, &col_sums(&c[j]));
    }
    let et = e_u.transpose();
    for i in 0..nb {
        g.set_block(nb * n, i * n, &et);
    }
    let fc = col_sums(f_u);
    g.set_block(
        nb * n,
        nb * n,
        &Matrix::from_fn(nu, 1, |i, _| fc[(i, 0)] - gamma),
    );
    g
}

/// Difference-system Linf program, the row-wise mirror of the L1 form.
fn difference_lp_linf(a: &[Matrix], e_u: &Matrix, c: &[Matrix], f_u: &Matrix, gamma: f64) -> Matrix {
    let nb = a.len();
    let n = a[0].rows();
    let ny = f_u.rows();
    let mut g = Matrix::zeros(nb * n + ny, nb * n + 1);
    let er = row_sums(e_u);
    for i in 0..nb {
        for j in 0..nb {
            let mut block = a[j].clone();
            if i == j {
                block = block.sub(&Matrix::identity(n));
            }
            g.set_block(i * n, j * n, &block);
        }
        g.set_block(i * n, nb * n, &er);
    }
    for j in 0..nb {
        g.set_block(nb * n, j * n, &c[j]);
    }
    let fr = row_sums(f_u);
    g.set_block(
        nb * n,
        nb * n,
        &Matrix::from_fn(ny, 1, |i, _| fr[(i, 0)] - gamma),
    );
    g
}

/// Coupled-system L1 program over (lam, mu_1..mu_N, tau). The delayed
/// blocks carry the channel scalings.
#[allow(clippy::too_many_arguments)]
fn coupled_lp_l1(
    a0: &Matrix,
    a: &[Matrix],
    c0: &Matrix,
    c: &[Matrix],
    e1: &Matrix,
    e2: &Matrix,
    cy0: &Matrix,
    cy: &[Matrix],
    f_u: &Matrix,
    scales: &[f64],
    gamma: f64,
) -> Matrix {
    let n1 = a0.rows();
    let n2 = c0.rows();
    let nb = a.len();
    let nu = e1.cols();
    let vars = n1 + nb * n2 + 1;
    let mut g = Matrix::zeros(n1 + nb * n2 + nu, vars);
    // instantaneous-state columns
    g.set_block(0, 0, &a0.transpose());
    let c0t = c0.transpose();
    for i in 0..nb {
        g.set_block(0, n1 + i * n2, &c0t);
    }
    g.set_block(0, n1 + nb * n2, &col_sums(cy0));
    // delayed-channel columns, block j
    for j in 0..nb {
        let r = n1 + j * n2;
        g.set_block(r, 0, &a[j].transpose().scale(scales[j]));
        let cjt = c[j].transpose().scale(scales[j]);
        for i in 0..nb {
            let mut block = cjt.clone();
            if i == j {
                block = block.sub(&Matrix::identity(n2));
            }
            g.set_block(r, n1 + i * n2, &block);
        }
        g.set_block(r, n1 + nb * n2, &col_sums(&cy[j]).scale(scales[j]));
    }
    // input columns
    let r = n1 + nb * n2;
    g.set_block(r, 0, &e1.transpose());
    let e2t = e2.transpose();
    for i in 0..nb {
        g.set_block(r, n1 + i * n2, &e2t);
    }
    let fc = col_sums(f_u);
    g.set_block(
        r,
        n1 + nb * n2,
        &Matrix::from_fn(nu, 1, |i, _| fc[(i, 0)] - gamma),
    );
    g
}

/// Coupled-system Linf program, the row-wise mirror.
#[allow(clippy::too_many_arguments)]
fn coupled_lp_linf(
    a0: &Matrix,
    a: &[Matrix],
    c0: &Matrix,
    c: &[Matrix],
    e1: &Matrix,
    e2: &Matrix,
    cy0: &Matrix,
    cy: &[Matrix],
    f_u: &Matrix,
    scales: &[f64],
    gamma: f64,
) -> Matrix {
    let n1 = a0.rows();
    let n2 = c0.rows();
    let nb = a.len();
    let ny = f_u.rows();
    let vars = n1 + nb * n2 + 1;
    let mut g = Matrix::zeros(n1 + nb * n2 + ny, vars);
    // instantaneous-state rows
    g.set_block(0, 0, a0);
    for j in 0..nb {
        g.set_block(0, n1 + j * n2, &a[j].scale(scales[j]));
    }
    g.set_block(0, n1 + nb * n2, &row_sums(e1));
    // copy rows, block i
    let e2r = row_sums(e2);
    for i in 0..nb {
        let r = n1 + i * n2;
        g.set_block(r, 0, c0);
        for j in 0..nb {
            let mut block = c[j].scale(scales[j]);
            if i == j {
                block = block.sub(&Matrix::identity(n2));
            }
            g.set_block(r, n1 + j * n2, &block);
        }
        g.set_block(r, n1 + nb * n2, &e2r);
    }
    // output rows
    let r = n1 + nb * n2;
    g.set_block(r, 0, cy0);
    for j in 0..nb {
        g.set_block(r, n1 + j * n2, &cy[j].scale(scales[j]));
    }
    let fr = row_sums(f_u);
    g.set_block(
        r,
        n1 + nb * n2,
        &Matrix::from_fn(ny, 1, |i, _| fr[(i, 0)] - gamma),
    );
    g
}

// ---------------------------------------------------------------------------
// per-class engines

fn lti_engine(sys: &LtiSystem, p: Lp, method: GainMethod) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::Lti(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let (m0, _) = hurwitz_margin(&sys.a).map_err(err)?;
    if m0 <= 0.0 {
        return Err(not_stable());
    }
    let h0 = static_gain(&sys.a, &io.e, &io.c, &io.f).map_err(err)?;
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(|g| retarded_lp_l1(&sys.a, &io.e, &io.c, &io.f, g), method, closed)?,
        Lp::Inf => finish_lp(|g| retarded_lp_linf(&sys.a, &io.e, &io.c, &io.f, g), method, closed)?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::DiscreteGainL2 {
                a0: sys.a.clone(),
                a: vec![],
                e_u: io.e.clone(),
                c0: io.c.clone(),
                c: vec![],
                f_u: io.f.clone(),
                rate: vec![],
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: Sufficiency::Exact,
        assumptions: vec![zero_frequency_note()],
    })
}

/// Rate-scaled sums of the direct and delayed blocks.
fn discrete_scaled(
    sys: &DiscreteDelaySystem,
    io_c0: &Matrix,
    io_c: &[Matrix],
    scales: &[f64],
) -> (Matrix, Matrix) {
    let mut a_s = sys.a0.clone();
    let mut c_s = io_c0.clone();
    for i in 0..sys.a.len() {
        a_s = a_s.add(&sys.a[i].scale(scales[i]));
        c_s = c_s.add(&io_c[i].scale(scales[i]));
    }
    (a_s, c_s)
}

fn discrete_engine(
    sys: &DiscreteDelaySystem,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::DiscreteDelay(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let scales = rate_scales(&sys.delays, p)?;
    let (a_s, c_s) = discrete_scaled(sys, &io.c0, &io.c, &scales);
    let (m0, _) = hurwitz_margin(&a_s).map_err(err)?;
    if m0 <= 0.0 {
        return Err(not_stable());
    }
    let h0 = static_gain(&a_s, &io.e_u, &c_s, &io.f_u).map_err(err)?;
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(|g| retarded_lp_l1(&a_s, &io.e_u, &c_s, &io.f_u, g), method, closed)?,
        Lp::Inf => finish_lp(
            |g| retarded_lp_linf(&a_s, &io.e_u, &c_s, &io.f_u, g),
            method,
            closed,
        )?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::DiscreteGainL2 {
                a0: sys.a0.clone(),
                a: sys.a.clone(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c: io.c.clone(),
                f_u: io.f_u.clone(),
                rate: rates_or_zero(&sys.delays),
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    let mut assumptions = vec![zero_frequency_note()];
    let tv = tv_notes(&sys.delays, p, &mut assumptions);
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: sufficiency_for(tv, p),
        assumptions,
    })
}

fn difference_engine(
    sys: &DifferenceSystem,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::Difference(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let a_sum = sys.a_sum();
    let (ms, _) = radius_margin(&a_sum).map_err(err)?;
    if ms <= 0.0 {
        return Err(not_stable());
    }
    let n = a_sum.rows();
    let mut c_sum = Matrix::zeros(io.f_u.rows(), n);
    for ci in &io.c {
        c_sum = c_sum.add(ci);
    }
    // H(0) = (sum C_i)(I - sum A_i)^(-1) E_u + F_u
    let resolvent = solve_linear(&Matrix::identity(n).sub(&a_sum), &io.e_u)
        .map_err(|e| err(format!("{e}")))?;
    let h0 = c_sum.mul(&resolvent.x).add(&io.f_u);
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(
            |g| difference_lp_l1(&sys.a, &io.e_u, &io.c, &io.f_u, g),
            method,
            closed,
        )?,
        Lp::Inf => finish_lp(
            |g| difference_lp_linf(&sys.a, &io.e_u, &io.c, &io.f_u, g),
            method,
            closed,
        )?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::DifferenceGainL2 {
                a: sys.a.clone(),
                e_u: io.e_u.clone(),
                c: io.c.clone(),
                f_u: io.f_u.clone(),
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: Sufficiency::Exact,
        assumptions: vec![
            zero_frequency_note(),
            String::from("the value holds for every positive delay pattern"),
        ],
    })
}

fn coupled_engine(
    sys: &CoupledSystem,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::Coupled(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let scales = rate_scales(&sys.delays, p)?;
    let closure = crate::witness::coupled_scaled_closure(
        &sys.a0, &sys.a, &io.e1, &sys.c0, &sys.c, &io.e2, &io.cy0, &io.cy, &io.f_u, &scales,
    )
    .ok_or_else(|| {
        err(String::from(
            "the scaled instantaneous coupling has spectral radius one or larger: no finite gain follows",
        ))
    })?;
    let (acl, ecl, ccl, fcl) = closure;
    let (m0, _) = hurwitz_margin(&acl).map_err(err)?;
    if m0 <= 0.0 {
        return Err(not_stable());
    }
    let h0 = static_gain(&acl, &ecl, &ccl, &fcl).map_err(err)?;
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(
            |g| {
                coupled_lp_l1(
                    &sys.a0, &sys.a, &sys.c0, &sys.c, &io.e1, &io.e2, &io.cy0, &io.cy, &io.f_u,
                    &scales, g,
                )
            },
            method,
            closed,
        )?,
        Lp::Inf => finish_lp(
            |g| {
                coupled_lp_linf(
                    &sys.a0, &sys.a, &sys.c0, &sys.c, &io.e1, &io.e2, &io.cy0, &io.cy, &io.f_u,
                    &scales, g,
                )
            },
            method,
            closed,
        )?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::CoupledGainL2 {
                a0: sys.a0.clone(),
                a: sys.a.clone(),
                e1: io.e1.clone(),
                c0: sys.c0.clone(),
                c: sys.c.clone(),
                e2: io.e2.clone(),
                cy0: io.cy0.clone(),
                cy: io.cy.clone(),
                f_u: io.f_u.clone(),
                rate: rates_or_zero(&sys.delays),
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    let mut assumptions = vec![
        zero_frequency_note(),
        String::from("the instantaneous coupling is eliminated at zero frequency"),
    ];
    let tv = tv_notes(&sys.delays, p, &mut assumptions);
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: sufficiency_for(tv, p),
        assumptions,
    })
}

fn distributed_engine(
    sys: &DistributedSystem,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::Distributed(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let a_dc = sys.a0.add(&sys.moment_sum());
    let (m0, _) = hurwitz_margin(&a_dc).map_err(err)?;
    if m0 <= 0.0 {
        return Err(not_stable());
    }
    let out_moments = sys.out_moments();
    let mut c_dc = io.c0.clone();
    for m in &out_moments {
        c_dc = c_dc.add(m);
    }
    let h0 = static_gain(&a_dc, &io.e_u, &c_dc, &io.f_u).map_err(err)?;
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(
            |g| retarded_lp_l1(&a_dc, &io.e_u, &c_dc, &io.f_u, g),
            method,
            closed,
        )?,
        Lp::Inf => finish_lp(
            |g| retarded_lp_linf(&a_dc, &io.e_u, &c_dc, &io.f_u, g),
            method,
            closed,
        )?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::DistributedGainL2 {
                a0: sys.a0.clone(),
                a_bar: sys.moments(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c_bar: out_moments.clone(),
                f_u: io.f_u.clone(),
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: Sufficiency::Exact,
        assumptions: vec![
            zero_frequency_note(),
            String::from(
                "the value depends on each kernel only through its moment over the delay window",
            ),
        ],
    })
}

/// Matrices of the delay system obtained by solving the neutral terms out
/// through the difference operator s = i - sum(a_n). The reduced output
/// pair may carry negative entries; the gain programs accept that.
fn neutral_reduced(
    sys: &NeutralSystem,
    io_e_u: &Matrix,
    io_c0: &Matrix,
    io_c_n: &[Matrix],
    io_c_r: &[Matrix],
    io_f_u: &Matrix,
) -> Result<(Matrix, Matrix, Matrix, Matrix), AnalysisError> {
    let (ms, _) = radius_margin(&sys.an_sum()).map_err(err)?;
    if ms <= 0.0 {
        return Err(err(String::from(
            "the neutral part is not strongly stable: the difference operator has spectral radius one or larger",
        )));
    }
    let s = sys.s_matrix();
    let a_red = solve_linear(&s, &sys.a0.add(&sys.ar_sum()))
        .map_err(|e| err(format!("{e}")))?
        .x;
    let e_red = solve_linear(&s, io_e_u).map_err(|e| err(format!("{e}")))?.x;
    let n = sys.n();
    let ny = io_f_u.rows();
    let mut cn_sum = Matrix::zeros(ny, n);
    for m in io_c_n {
        cn_sum = cn_sum.add(m);
    }
    let mut cr_sum = Matrix::zeros(ny, n);
    for m in io_c_r {
        cr_sum = cr_sum.add(m);
    }
    let c_red = io_c0.add(&cr_sum).add(&cn_sum.mul(&a_red));
    let f_red = io_f_u.add(&cn_sum.mul(&e_red));
    Ok((a_red, e_red, c_red, f_red))
}

fn neutral_engine(
    sys: &NeutralSystem,
    p: Lp,
    method: GainMethod,
) -> Result<GainReport, AnalysisError> {
    precheck_model(&SystemModel::Neutral(sys.clone()))?;
    let io = sys.io.as_ref().ok_or_else(no_io)?;
    let (a_red, e_red, c_red, f_red) =
        neutral_reduced(sys, &io.e_u, &io.c0, &io.c_n, &io.c_r, &io.f_u)?;
    let (m0, _) = hurwitz_margin(&a_red).map_err(err)?;
    if m0 <= 0.0 {
        return Err(not_stable());
    }
    // the reduction preserves the zero-frequency matrix, so H(0) can be
    // read off the retarded sums directly
    let ny = io.f_u.rows();
    let n = sys.n();
    let mut cr_sum = Matrix::zeros(ny, n);
    for m in &io.c_r {
        cr_sum = cr_sum.add(m);
    }
    let h0 = static_gain(
        &sys.a0.add(&sys.ar_sum()),
        &io.e_u,
        &io.c0.add(&cr_sum),
        &io.f_u,
    )
    .map_err(err)?;
    let closed = induced_norm(&h0, p);
    let (value, witness) = match p {
        Lp::One => finish_lp(
            |g| retarded_lp_l1(&a_red, &e_red, &c_red, &f_red, g),
            method,
            closed,
        )?,
        Lp::Inf => finish_lp(
            |g| retarded_lp_linf(&a_red, &e_red, &c_red, &f_red, g),
            method,
            closed,
        )?,
        Lp::Two => finish_l2(
            &h0,
            |g| WitnessForm::NeutralGainL2 {
                a0: sys.a0.clone(),
                a_n: sys.a_n.clone(),
                a_r: sys.a_r.clone(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c_n: io.c_n.clone(),
                c_r: io.c_r.clone(),
                f_u: io.f_u.clone(),
                gamma: g,
            },
            method,
            closed,
        )?,
    };
    Ok(GainReport {
        p,
        gain: value,
        method,
        witness,
        sufficiency: Sufficiency::Exact,
        assumptions: vec![
            zero_frequency_note(),
            String::from("neutral terms reduced through the difference operator i - sum(a_n)"),
        ],
    })
}

// ---------------------------------------------------------------------------
// re-verification surfaces for stored certificates

/// The exact gain-program matrix whose feasible point certifies `gamma` at
/// the requested norm. Only the L1 and Linf programs are linear; the L2
/// certificate is a quadratic witness, see [`gain_witness_form`].
pub fn gain_lp_matrix(model: &SystemModel, p: Lp, gamma: f64) -> Result<Matrix, AnalysisError> {
    if matches!(p, Lp::Two) {
        return Err(err(String::from(
            "the L2 certificate is a quadratic witness, not an lp point; use gain_witness_form",
        )));
    }
    precheck_model(model)?;
    match model {
        SystemModel::Lti(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(match p {
                Lp::One => retarded_lp_l1(&s.a, &io.e, &io.c, &io.f, gamma),
                _ => retarded_lp_linf(&s.a, &io.e, &io.c, &io.f, gamma),
            })
        }
        SystemModel::DiscreteDelay(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            let scales = rate_scales(&s.delays, p)?;
            let (a_s, c_s) = discrete_scaled(s, &io.c0, &io.c, &scales);
            Ok(match p {
                Lp::One => retarded_lp_l1(&a_s, &io.e_u, &c_s, &io.f_u, gamma),
                _ => retarded_lp_linf(&a_s, &io.e_u, &c_s, &io.f_u, gamma),
            })
        }
        SystemModel::Difference(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(match p {
                Lp::One => difference_lp_l1(&s.a, &io.e_u, &io.c, &io.f_u, gamma),
                _ => difference_lp_linf(&s.a, &io.e_u, &io.c, &io.f_u, gamma),
            })
        }
        SystemModel::Coupled(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            let scales = rate_scales(&s.delays, p)?;
            Ok(match p {
                Lp::One => coupled_lp_l1(
                    &s.a0, &s.a, &s.c0, &s.c, &io.e1, &io.e2, &io.cy0, &io.cy, &io.f_u, &scales,
                    gamma,
                ),
                _ => coupled_lp_linf(
                    &s.a0, &s.a, &s.c0, &s.c, &io.e1, &io.e2, &io.cy0, &io.cy, &io.f_u, &scales,
                    gamma,
                ),
            })
        }
        SystemModel::Distributed(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            let a_dc = s.a0.add(&s.moment_sum());
            let mut c_dc = io.c0.clone();
            for m in &s.out_moments() {
                c_dc = c_dc.add(m);
            }
            Ok(match p {
                Lp::One => retarded_lp_l1(&a_dc, &io.e_u, &c_dc, &io.f_u, gamma),
                _ => retarded_lp_linf(&a_dc, &io.e_u, &c_dc, &io.f_u, gamma),
            })
        }
        SystemModel::Neutral(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            let (a_red, e_red, c_red, f_red) =
                neutral_reduced(s, &io.e_u, &io.c0, &io.c_n, &io.c_r, &io.f_u)?;
            Ok(match p {
                Lp::One => retarded_lp_l1(&a_red, &e_red, &c_red, &f_red, gamma),
                _ => retarded_lp_linf(&a_red, &e_red, &c_red, &f_red, gamma),
            })
        }
    }
}

/// The quadratic witness form that an L2 gain certificate at `gamma` is
/// checked against.
pub fn gain_witness_form(model: &SystemModel, gamma: f64) -> Result<WitnessForm, AnalysisError> {
    precheck_model(model)?;
    match model {
        SystemModel::Lti(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(WitnessForm::DiscreteGainL2 {
                a0: s.a.clone(),
                a: vec![],
                e_u: io.e.clone(),
                c0: io.c.clone(),
                c: vec![],
                f_u: io.f.clone(),
                rate: vec![],
                gamma,
            })
        }
        SystemModel::DiscreteDelay(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            rate_scales(&s.delays, Lp::Two)?;
            Ok(WitnessForm::DiscreteGainL2 {
                a0: s.a0.clone(),
                a: s.a.clone(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c: io.c.clone(),
                f_u: io.f_u.clone(),
                rate: rates_or_zero(&s.delays),
                gamma,
            })
        }
        SystemModel::Difference(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(WitnessForm::DifferenceGainL2 {
                a: s.a.clone(),
                e_u: io.e_u.clone(),
                c: io.c.clone(),
                f_u: io.f_u.clone(),
                gamma,
            })
        }
        SystemModel::Coupled(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            rate_scales(&s.delays, Lp::Two)?;
            Ok(WitnessForm::CoupledGainL2 {
                a0: s.a0.clone(),
                a: s.a.clone(),
                e1: io.e1.clone(),
                c0: s.c0.clone(),
                c: s.c.clone(),
                e2: io.e2.clone(),
                cy0: io.cy0.clone(),
                cy: io.cy.clone(),
                f_u: io.f_u.clone(),
                rate: rates_or_zero(&s.delays),
                gamma,
            })
        }
        SystemModel::Distributed(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(WitnessForm::DistributedGainL2 {
                a0: s.a0.clone(),
                a_bar: s.moments(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c_bar: s.out_moments(),
                f_u: io.f_u.clone(),
                gamma,
            })
        }
        SystemModel::Neutral(s) => {
            let io = s.io.as_ref().ok_or_else(no_io)?;
            Ok(WitnessForm::NeutralGainL2 {
                a0: s.a0.clone(),
                a_n: s.a_n.clone(),
                a_r: s.a_r.clone(),
                e_u: io.e_u.clone(),
                c0: io.c0.clone(),
                c_n: io.c_n.clone(),
                c_r: io.c_r.clone(),
                f_u: io.f_u.clone(),
                gamma,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::verify_lp_certificate;
    use crate::witness::verify_witness;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| data[i * cols + j])
    }

    fn const_delay(h: f64) -> DelaySpec {
        DelaySpec::Const { h }
    }

    fn scalar_discrete(a0: f64, a1: f64, delay: DelaySpec) -> DiscreteDelaySystem {
        DiscreteDelaySystem {
            a0: m(1, 1, &[a0]),
            a: vec![m(1, 1, &[a1])],
            delays: vec![delay],
            io: Some(crate::model::DiscreteDelayIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                c: vec![m(1, 1, &[0.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        }
    }

    #[test]
    fn scalar_delay_feedback_has_unit_gain() {
        // x' = -2x + x(t-h) + u, y = x: H(0) = 1/(2-1) = 1 for every p
        let sys = scalar_discrete(-2.0, 1.0, const_delay(1.0));
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_discrete(&sys, p).unwrap();
            assert!((r.gain - 1.0).abs() < 1e-9, "p={p}: {}", r.gain);
            assert_eq!(r.sufficiency, Sufficiency::Exact);
            assert!(r.witness.is_some(), "p={p}: no certificate");
        }
    }

    #[test]
    fn bisection_matches_closed_form() {
        let sys = scalar_discrete(-2.0, 1.0, const_delay(0.3));
        let model = SystemModel::DiscreteDelay(sys);
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let closed = gain_with_method(&model, p, GainMethod::ClosedForm).unwrap();
            let lp = gain_with_method(&model, p, GainMethod::LpBisection).unwrap();
            let rel = (closed.gain - lp.gain).abs() / closed.gain.max(1e-12);
            assert!(rel < 1e-6, "p={p}: closed {} vs lp {}", closed.gain, lp.gain);
        }
    }

    #[test]
    fn lti_gain_is_static_norm() {
        let sys = LtiSystem {
            a: m(1, 1, &[-2.0]),
            io: Some(crate::model::LtiIo {
                e: m(1, 1, &[1.0]),
                c: m(1, 1, &[1.0]),
                f: m(1, 1, &[0.0]),
            }),
        };
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_lti(&sys, p).unwrap();
            assert!((r.gain - 0.5).abs() < 1e-12, "p={p}: {}", r.gain);
        }
    }

    #[test]
    fn difference_feedback_gain() {
        // x(t) = 0.5 x(t-h) + u, y = x(t-h): H(0) = 1/(1-0.5) = 2
        let sys = DifferenceSystem {
            a: vec![m(1, 1, &[0.5])],
            delays: vec![const_delay(1.0)],
            io: Some(crate::model::DifferenceIo {
                e_u: m(1, 1, &[1.0]),
                c: vec![m(1, 1, &[1.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        };
        let model = SystemModel::Difference(sys.clone());
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_difference(&sys, p).unwrap();
            assert!((r.gain - 2.0).abs() < 1e-9, "p={p}: {}", r.gain);
            let lp = gain_with_method(&model, p, GainMethod::LpBisection).unwrap();
            assert!((lp.gain - 2.0).abs() < 2e-6, "p={p} lp: {}", lp.gain);
        }
    }

    #[test]
    fn feedthrough_only_difference_gain_is_matrix_norm() {
        let f_u = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let sys = DifferenceSystem {
            a: vec![m(2, 2, &[0.0; 4])],
            delays: vec![const_delay(0.5)],
            io: Some(crate::model::DifferenceIo {
                e_u: m(2, 2, &[0.0; 4]),
                c: vec![m(2, 2, &[0.0; 4])],
                f_u: f_u.clone(),
            }),
        };
        assert!((gain_difference(&sys, Lp::One).unwrap().gain - 6.0).abs() < 1e-9);
        assert!((gain_difference(&sys, Lp::Inf).unwrap().gain - 7.0).abs() < 1e-9);
        let two = gain_difference(&sys, Lp::Two).unwrap().gain;
        assert!((two - induced_norm(&f_u, Lp::Two)).abs() < 1e-9);
    }

    fn scalar_coupled(c1: f64) -> CoupledSystem {
        CoupledSystem {
            a0: m(1, 1, &[-1.0]),
            a: vec![m(1, 1, &[0.5])],
            c0: m(1, 1, &[0.5]),
            c: vec![m(1, 1, &[c1])],
            delays: vec![const_delay(1.0)],
            io: Some(crate::model::CoupledIo {
                e1: m(1, 1, &[1.0]),
                e2: m(1, 1, &[0.0]),
                cy0: m(1, 1, &[1.0]),
                cy: vec![m(1, 1, &[0.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        }
    }

    #[test]
    fn coupled_gain_matches_hand_elimination() {
        // x2 = 0.5 x1 / (1 - 0.2) at dc, so the loop pole sits at
        // -1 + 0.5 * 0.625 = -0.6875 and the gain is 16/11
        let sys = scalar_coupled(0.2);
        let model = SystemModel::Coupled(sys.clone());
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_coupled(&sys, p).unwrap();
            assert!((r.gain - 16.0 / 11.0).abs() < 1e-9, "p={p}: {}", r.gain);
            let lp = gain_with_method(&model, p, GainMethod::LpBisection).unwrap();
            let rel = (lp.gain - r.gain).abs() / r.gain;
            assert!(rel < 1e-6, "p={p} lp: {}", lp.gain);
        }
    }

    #[test]
    fn coupled_with_trivial_copy_matches_discrete() {
        // with c = 0 the copy is static: x2 = 0.5 x1, so the system equals
        // x' = -x + 0.25 x(t-h) + u
        let mut sys = scalar_coupled(0.0);
        sys.io.as_mut().unwrap().cy0 = m(1, 1, &[1.0]);
        let reference = scalar_discrete(-1.0, 0.25, const_delay(1.0));
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let a = gain_coupled(&sys, p).unwrap().gain;
            let b = gain_discrete(&reference, p).unwrap().gain;
            assert!((a - b).abs() < 1e-9, "p={p}: coupled {a} vs discrete {b}");
        }
    }

    #[test]
    fn distributed_window_gain() {
        // x' = -x + 0.5 int_{t-1}^t x + u: moment 0.5, H(0) = 1/(1-0.5) = 2
        let sys = DistributedSystem {
            a0: m(1, 1, &[-1.0]),
            kernels: vec![crate::model::DistKernel::Constant(m(1, 1, &[0.5]))],
            delays: vec![const_delay(1.0)],
            io: Some(crate::model::DistributedIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                out_kernels: vec![crate::model::DistKernel::Constant(m(1, 1, &[0.0]))],
                f_u: m(1, 1, &[0.0]),
            }),
        };
        let model = SystemModel::Distributed(sys.clone());
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_distributed(&sys, p).unwrap();
            assert!((r.gain - 2.0).abs() < 1e-9, "p={p}: {}", r.gain);
            let lp = gain_with_method(&model, p, GainMethod::LpBisection).unwrap();
            assert!((lp.gain - 2.0).abs() / 2.0 < 1e-6, "p={p} lp: {}", lp.gain);
        }
    }

    #[test]
    fn shrinking_window_recovers_delay_free_gain() {
        let sys = DistributedSystem {
            a0: m(1, 1, &[-1.0]),
            kernels: vec![crate::model::DistKernel::Constant(m(1, 1, &[0.5]))],
            delays: vec![const_delay(1e-9)],
            io: Some(crate::model::DistributedIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                out_kernels: vec![crate::model::DistKernel::Constant(m(1, 1, &[0.0]))],
                f_u: m(1, 1, &[0.0]),
            }),
        };
        let r = gain_distributed(&sys, Lp::Inf).unwrap();
        assert!((r.gain - 1.0).abs() < 1e-6, "{}", r.gain);
    }

    fn scalar_neutral(a_n: f64, c_n: f64, c_r: f64, c0: f64) -> NeutralSystem {
        NeutralSystem {
            a0: m(1, 1, &[-2.0]),
            a_n: vec![m(1, 1, &[a_n])],
            a_r: vec![m(1, 1, &[0.5])],
            delays: vec![const_delay(1.0)],
            io: Some(crate::model::NeutralIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[c0]),
                c_n: vec![m(1, 1, &[c_n])],
                c_r: vec![m(1, 1, &[c_r])],
                f_u: m(1, 1, &[0.0]),
            }),
        }
    }

    #[test]
    fn neutral_gain_reduces_to_retarded_value() {
        // x' - 0.25 x'(t-h) = -2x + 0.5 x(t-h) + u, y = x:
        // H(0) = 1/(2 - 0.5) = 2/3 regardless of the neutral coefficient
        let sys = scalar_neutral(0.25, 0.0, 0.0, 1.0);
        let model = SystemModel::Neutral(sys.clone());
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_neutral(&sys, p).unwrap();
            assert!((r.gain - 2.0 / 3.0).abs() < 1e-9, "p={p}: {}", r.gain);
            let lp = gain_with_method(&model, p, GainMethod::LpBisection).unwrap();
            let rel = (lp.gain - r.gain).abs() / r.gain;
            assert!(rel < 1e-6, "p={p} lp: {}", lp.gain);
        }
    }

    #[test]
    fn neutral_derivative_output_stays_consistent() {
        // y = x'(t-h) + x(t-h) with x' = -x + u: at dc y = 0*x + u - x + x,
        // so H(0) = (c0 + cr)(-a0-ar)^(-1) e + f with the composite output
        // c_n a0 + c_r = -1 + 1 = 0 keeping the model positive
        let mut sys = scalar_neutral(0.0, 1.0, 1.0, 0.0);
        sys.a0 = m(1, 1, &[-1.0]);
        sys.a_r = vec![m(1, 1, &[0.0])];
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let r = gain_neutral(&sys, p).unwrap();
            assert!((r.gain - 1.0).abs() < 1e-9, "p={p}: {}", r.gain);
            let lp = gain_with_method(
                &SystemModel::Neutral(sys.clone()),
                p,
                GainMethod::LpBisection,
            )
            .unwrap();
            assert!((lp.gain - 1.0).abs() < 2e-6, "p={p} lp: {}", lp.gain);
        }
    }

    #[test]
    fn neutral_without_neutral_terms_matches_discrete() {
        let sys = scalar_neutral(0.0, 0.0, 0.0, 1.0);
        let reference = scalar_discrete(-2.0, 0.5, const_delay(1.0));
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let a = gain_neutral(&sys, p).unwrap().gain;
            let b = gain_discrete(&reference, p).unwrap().gain;
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn rate_bound_scales_the_guaranteed_gain() {
        let tv = scalar_discrete(
            -2.0,
            0.5,
            DelaySpec::TimeVarying {
                h_bar: 1.0,
                rate_bound: 0.5,
            },
        );
        let fixed = scalar_discrete(-2.0, 0.5, const_delay(1.0));
        // p = 1: delayed channel doubles, gain 1/(2 - 1) = 1
        let r1 = gain_discrete(&tv, Lp::One).unwrap();
        assert!((r1.gain - 1.0).abs() < 1e-9, "{}", r1.gain);
        assert_eq!(r1.sufficiency, Sufficiency::SufficientOnly);
        // p = inf: no scaling, exact
        let rinf = gain_discrete(&tv, Lp::Inf).unwrap();
        assert!((rinf.gain - 2.0 / 3.0).abs() < 1e-9, "{}", rinf.gain);
        assert_eq!(rinf.sufficiency, Sufficiency::Exact);
        // p = 2 sits between and dominates the constant-delay gain
        let r2 = gain_discrete(&tv, Lp::Two).unwrap();
        let expected = 1.0 / (2.0 - 0.5 * math::sqrt(2.0));
        assert!((r2.gain - expected).abs() < 1e-9, "{}", r2.gain);
        let base = gain_discrete(&fixed, Lp::Two).unwrap();
        assert!(r2.gain > base.gain);
    }

    #[test]
    fn unbounded_rate_blocks_l1_but_not_linf() {
        let sys = scalar_discrete(
            -2.0,
            0.5,
            DelaySpec::TimeVaryingUnboundedRate { h_bar: 1.0 },
        );
        assert!(gain_discrete(&sys, Lp::One).is_err());
        assert!(gain_discrete(&sys, Lp::Two).is_err());
        let r = gain_discrete(&sys, Lp::Inf).unwrap();
        assert!((r.gain - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_system_has_no_gain() {
        let sys = scalar_discrete(-1.0, 2.0, const_delay(1.0));
        assert!(gain_discrete(&sys, Lp::One).is_err());
    }

    #[test]
    fn lp_certificate_round_trips_through_the_program_matrix() {
        let sys = scalar_discrete(-2.0, 1.0, const_delay(1.0));
        let model = SystemModel::DiscreteDelay(sys);
        for p in [Lp::One, Lp::Inf] {
            let r = gain(&model, p).unwrap();
            let (gamma, x) = match r.witness {
                Some(Certificate::LpSolution { gamma, ref x }) => (gamma, x.clone()),
                ref other => panic!("p={p}: expected an lp certificate, got {other:?}"),
            };
            let g = gain_lp_matrix(&model, p, gamma).unwrap();
            let all: Vec<usize> = (0..g.cols()).collect();
            assert!(verify_lp_certificate(&g, &all, &x, 0.0));
        }
    }

    #[test]
    fn l2_certificate_round_trips_through_the_witness_form() {
        let sys = scalar_discrete(-2.0, 1.0, const_delay(1.0));
        let model = SystemModel::DiscreteDelay(sys);
        let r = gain(&model, Lp::Two).unwrap();
        let (gamma, w) = match r.witness {
            Some(Certificate::Riccati {
                gamma: Some(gamma),
                ref witness,
            }) => (gamma, witness.clone()),
            ref other => panic!("expected a quadratic certificate, got {other:?}"),
        };
        let form = gain_witness_form(&model, gamma).unwrap();
        let check = verify_witness(&form, &w).unwrap();
        assert!(check.negdef, "certificate does not verify");
    }

    #[test]
    fn missing_io_is_reported() {
        let sys = DiscreteDelaySystem {
            a0: m(1, 1, &[-2.0]),
            a: vec![m(1, 1, &[1.0])],
            delays: vec![const_delay(1.0)],
            io: None,
        };
        let e = gain_discrete(&sys, Lp::One).unwrap_err();
        assert!(format!("{e}").contains("io"));
    }
}
