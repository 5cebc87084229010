//! Time-domain oracle: fixed-step method-of-steps integration for every
//! supported class, with positivity and decay observation and settled step
//! responses usable as empirical gain lower bounds.
//!
//! The integrators share nothing with the analyzers beyond the model types.
//! Differential classes are stepped with classic 4th order Runge-Kutta and
//! cubic Hermite interpolation of the stored state history; distributed
//! terms are evaluated by composite trapezoid sums on a per-kernel grid;
//! difference equations are iterated on the delay lattice (delays snapped
//! to the nearest grid multiple); neutral systems store derivative samples
//! alongside the state so the derivative memory is never obtained by
//! numerical differentiation.
//!
//! Accuracy notes, in the spirit of an oracle rather than a production
//! integrator: method-of-steps kinks are not tracked (step <= h/20 keeps
//! their effect below the acceptance tolerances), and when a moving delay
//! dips below one step the lookup falls back to constant extrapolation of
//! the newest node, which costs one order locally but only while the delay
//! is that small.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::matrix::Matrix;
use crate::model::{
    CoupledSystem, DelaySpec, DifferenceSystem, DiscreteDelaySystem, DistKernel,
    DistributedSystem, LtiSystem, NeutralSystem, SystemModel,
};
use crate::spectral::{induced_norm, Lp};

/// Relative output drift below which a step response counts as settled.
const SETTLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimError {
    pub detail: String,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.detail)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

fn err(detail: String) -> SimError {
    SimError { detail }
}

/// State history on (-inf, 0]. Differential classes read it behind the
/// initial time; the value at 0 doubles as the initial state.
#[derive(Debug, Clone)]
pub enum History {
    /// The same vector everywhere in the past.
    Constant(Vec<f64>),
    /// Piecewise-linear samples at increasing times (expected <= 0);
    /// lookups clamp to the first and last sample.
    Sampled { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl History {
    pub fn dim(&self) -> usize {
        match self {
            History::Constant(v) => v.len(),
            History::Sampled { values, .. } => values.first().map(|v| v.len()).unwrap_or(0),
        }
    }

    fn validate(&self, dim: usize) -> Result<(), SimError> {
        match self {
            History::Constant(v) => {
                if v.len() != dim {
                    return Err(err(format!(
                        "history has dimension {}, the model needs {dim}",
                        v.len()
                    )));
                }
            }
            History::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(err(String::from(
                        "sampled history needs matching, nonempty time and value lists",
                    )));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(err(String::from("sampled history times must be increasing")));
                }
                if values.iter().any(|v| v.len() != dim) {
                    return Err(err(format!("every history sample must have dimension {dim}")));
                }
            }
        }
        Ok(())
    }

    fn value_at(&self, t: f64) -> Vec<f64> {
        match self {
            History::Constant(v) => v.clone(),
            History::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let mut k = 0;
                while times[k + 1] < t {
                    k += 1;
                }
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k]
                    .iter()
                    .zip(&values[k + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    }

    /// Slope of the history at t, for derivative memory. Constant history
    /// has slope zero; sampled history uses the segment slope.
    fn slope_at(&self, t: f64) -> Vec<f64> {
        match self {
            History::Constant(v) => vec![0.0; v.len()],
            History::Sampled { times, values } => {
                if t <= times[0] || t >= *times.last().unwrap() || times.len() < 2 {
                    return vec![0.0; self.dim()];
                }
                let mut k = 0;
                while times[k + 1] < t {
                    k += 1;
                }
                let dt = times[k + 1] - times[k];
                values[k]
                    .iter()
                    .zip(&values[k + 1])
                    .map(|(a, b)| (b - a) / dt)
                    .collect()
            }
        }
    }
}

/// Exogenous input over the horizon.
#[derive(Debug, Clone)]
pub enum InputSignal {
    Zero,
    Constant(Vec<f64>),
    /// Piecewise-constant schedule: (start time, value), sorted by start;
    /// zero before the first start.
    Steps(Vec<(f64, Vec<f64>)>),
}

impl InputSignal {
    fn validate(&self, m: usize) -> Result<(), SimError> {
        let bad = |got: usize| {
            err(format!("input signal has dimension {got}, the model has {m} input channels"))
        };
        match self {
            InputSignal::Zero => Ok(()),
            InputSignal::Constant(v) => {
                if v.len() != m {
                    Err(bad(v.len()))
                } else {
                    Ok(())
                }
            }
            InputSignal::Steps(segs) => {
                if let Some(s) = segs.iter().find(|(_, v)| v.len() != m) {
                    return Err(bad(s.1.len()));
                }
                if segs.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(err(String::from("input schedule times must be sorted")));
                }
                Ok(())
            }
        }
    }

    fn value_at(&self, t: f64, m: usize) -> Vec<f64> {
        match self {
            InputSignal::Zero => vec![0.0; m],
            InputSignal::Constant(v) => v.clone(),
            InputSignal::Steps(segs) => segs
                .iter()
                .rev()
                .find(|(start, _)| *start <= t)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| vec![0.0; m]),
        }
    }
}

/// Trajectory of one delay channel over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayMotion {
    /// Constant delays stay put; time-varying specs are frozen at their
    /// bound, the static worst case.
    Nominal,
    /// Triangle wave between 0 and the bound with the given period; the
    /// slope 2 h_bar / period must respect a declared rate bound.
    Sawtooth { period: f64 },
}

/// Everything the integrator needs besides the model itself.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub history: History,
    pub input: InputSignal,
    /// One entry per model delay; empty means all nominal.
    pub delay_motion: Vec<DelayMotion>,
}

impl SimConfig {
    /// Quiescent configuration: zero history of the given dimension, no
    /// input, nominal delays.
    pub fn quiescent(dim: usize, step: f64, horizon: f64) -> Self {
        SimConfig {
            step,
            horizon,
            history: History::Constant(vec![0.0; dim]),
            input: InputSignal::Zero,
            delay_motion: Vec::new(),
        }
    }
}

/// Sampled solution on the uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Empty when the model carries no io blocks.
    pub outputs: Vec<Vec<f64>>,
    /// Smallest entry seen across states and outputs, the positivity
    /// observation.
    pub min_entry: f64,
    /// ||x(T)||_inf / ||x(0)||_inf; plain ||x(T)||_inf when the run starts
    /// from rest.
    pub terminal_norm_ratio: f64,
}

impl Trajectory {
    fn assemble(times: Vec<f64>, states: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Trajectory {
        let min_entry = states
            .iter()
            .chain(outputs.iter())
            .flat_map(|v| v.iter().copied())
            .fold(f64::INFINITY, f64::min);
        let norm = |v: &Vec<f64>| v.iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
        let first = norm(&states[0]);
        let last = norm(states.last().unwrap());
        let terminal_norm_ratio = if first > 0.0 { last / first } else { last };
        Trajectory { times, states, outputs, min_entry, terminal_norm_ratio }
    }
}

// ---------------------------------------------------------------------------
// shared integration plumbing
// ---------------------------------------------------------------------------

/// Stored past of one differential run: node values on the uniform grid
/// plus node derivatives, backed by the user history for t <= 0.
struct Past<'a> {
    step: f64,
    history: &'a History,
    x: Vec<Vec<f64>>,
    dx: Vec<Vec<f64>>,
}

impl Past<'_> {
    /// Cubic Hermite sample of the state. Falls back to linear when the
    /// right node derivative is not stored yet and to constant
    /// extrapolation beyond the newest node (sub-step delays only).
    fn sample(&self, s: f64) -> Vec<f64> {
        if s <= 0.0 {
            return self.history.value_at(s);
        }
        let pos = s / self.step;
        let k = math::floor(pos) as usize;
        if k + 1 < self.x.len() {
            let xi = pos - k as f64;
            if xi == 0.0 {
                return self.x[k].clone();
            }
            if self.dx.len() > k + 1 {
                return hermite(&self.x[k], &self.dx[k], &self.x[k + 1], &self.dx[k + 1], xi, self.step);
            }
            return lerp(&self.x[k], &self.x[k + 1], xi);
        }
        let last = self.x.len() - 1;
        self.x[last].clone()
    }

    /// Derivative memory: node derivatives with linear interpolation, the
    /// history slope behind t = 0.
    fn sample_dx(&self, s: f64) -> Vec<f64> {
        if s <= 0.0 {
            return self.history.slope_at(s);
        }
        let pos = s / self.step;
        let k = math::floor(pos) as usize;
        if k + 1 < self.dx.len() {
            return lerp(&self.dx[k], &self.dx[k + 1], pos - k as f64);
        }
        match self.dx.last() {
            Some(d) => d.clone(),
            None => self.history.slope_at(0.0),
        }
    }
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

fn hermite(x0: &[f64], d0: &[f64], x1: &[f64], d1: &[f64], xi: f64, step: f64) -> Vec<f64> {
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;
    let h00 = 2.0 * xi3 - 3.0 * xi2 + 1.0;
    let h10 = xi3 - 2.0 * xi2 + xi;
    let h01 = -2.0 * xi3 + 3.0 * xi2;
    let h11 = xi3 - xi2;
    (0..x0.len())
        .map(|i| h00 * x0[i] + h10 * step * d0[i] + h01 * x1[i] + h11 * step * d1[i])
        .collect()
}

fn shifted(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(v, k)| v + a * k).collect()
}

/// One classic Runge-Kutta sweep of `nsteps` steps. The derivative closure
/// sees the past and may sample it; dx[k] is pushed before the inner
/// stages so Hermite lookups reach through node k.
fn rk4_run(
    past: &mut Past<'_>,
    nsteps: usize,
    mut f: impl FnMut(f64, &[f64], &Past<'_>) -> Vec<f64>,
) {
    let dt = past.step;
    for k in 0..nsteps {
        let t = k as f64 * dt;
        let x = past.x[k].clone();
        let k1 = f(t, &x, past);
        past.dx.push(k1.clone());
        let k2 = f(t + 0.5 * dt, &shifted(&x, 0.5 * dt, &k1), past);
        let k3 = f(t + 0.5 * dt, &shifted(&x, 0.5 * dt, &k2), past);
        let k4 = f(t + dt, &shifted(&x, dt, &k3), past);
        let xn: Vec<f64> = (0..x.len())
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        past.x.push(xn);
    }
    let t = nsteps as f64 * dt;
    let x = past.x[nsteps].clone();
    let k1 = f(t, &x, past);
    past.dx.push(k1);
}

/// Instantaneous delay of channel i at time t.
fn delay_at(spec: &DelaySpec, motion: &DelayMotion, t: f64) -> f64 {
    let h_bar = spec.h_max();
    match motion {
        DelayMotion::Nominal => h_bar,
        DelayMotion::Sawtooth { period } => {
            let phase = t / period - math::floor(t / period);
            if phase < 0.5 {
                h_bar * 2.0 * phase
            } else {
                h_bar * (2.0 - 2.0 * phase)
            }
        }
    }
}

fn resolve_motion(
    delays: &[DelaySpec],
    requested: &[DelayMotion],
    windows_move: bool,
) -> Result<Vec<DelayMotion>, SimError> {
    if requested.is_empty() {
        return Ok(vec![DelayMotion::Nominal; delays.len()]);
    }
    if requested.len() != delays.len() {
        return Err(err(format!(
            "delay_motion has {} entries for {} delay channels",
            requested.len(),
            delays.len()
        )));
    }
    for (i, (spec, motion)) in delays.iter().zip(requested).enumerate() {
        if let DelayMotion::Sawtooth { period } = motion {
            if !(period.is_finite() && *period > 0.0) {
                return Err(err(format!("sawtooth period for delay {i} must be positive")));
            }
            if !windows_move {
                return Err(err(String::from(
                    "sawtooth motion applies to pointwise delay channels, not kernel windows",
                )));
            }
            match spec {
                DelaySpec::Const { .. } => {
                    return Err(err(format!(
                        "delay {i} is declared constant and cannot follow a sawtooth"
                    )));
                }
                DelaySpec::TimeVarying { h_bar, rate_bound } => {
                    let slope = 2.0 * h_bar / period;
                    if slope > *rate_bound + 1e-12 {
                        return Err(err(format!(
                            "sawtooth slope {slope:.3e} for delay {i} exceeds its rate bound {rate_bound}"
                        )));
                    }
                }
                DelaySpec::TimeVaryingUnboundedRate { .. } => {}
            }
        }
    }
    Ok(requested.to_vec())
}

/// Grid sizing plus the step cap against the smallest delay span.
fn plan_grid(cfg: &SimConfig, delays: &[DelaySpec]) -> Result<(usize, Vec<f64>), SimError> {
    if !(cfg.step.is_finite() && cfg.step > 0.0) {
        return Err(err(format!("step must be positive, got {}", cfg.step)));
    }
    if !(cfg.horizon.is_finite() && cfg.horizon >= cfg.step) {
        return Err(err(format!(
            "horizon must cover at least one step, got {} with step {}",
            cfg.horizon, cfg.step
        )));
    }
    let min_span = delays
        .iter()
        .map(|d| d.h_max())
        .filter(|h| *h > 0.0)
        .fold(f64::INFINITY, f64::min);
    if min_span.is_finite() && cfg.step > min_span / 20.0 {
        return Err(err(format!(
            "step {} exceeds one twentieth of the smallest delay {min_span}",
            cfg.step
        )));
    }
    let nsteps = (math::floor(cfg.horizon / cfg.step - 1e-9) as usize) + 1;
    let times = (0..=nsteps).map(|k| k as f64 * cfg.step).collect();
    Ok((nsteps, times))
}

// ---------------------------------------------------------------------------
// entry points
// ---------------------------------------------------------------------------

/// Integrate the model under the given configuration. The model is
/// validated first; positivity is observed, not required.
pub fn simulate(model: &SystemModel, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    model.validate().map_err(|e| err(format!("{e}")))?;
    if !model.has_io() && !matches!(cfg.input, InputSignal::Zero) {
        return Err(err(String::from(
            "the model has no input channels; only the zero input applies",
        )));
    }
    match model {
        SystemModel::Lti(sys) => sim_lti(sys, cfg),
        SystemModel::DiscreteDelay(sys) => sim_discrete(sys, cfg),
        SystemModel::Difference(sys) => sim_difference(sys, cfg),
        SystemModel::Coupled(sys) => sim_coupled(sys, cfg),
        SystemModel::Distributed(sys) => sim_distributed(sys, cfg),
        SystemModel::Neutral(sys) => sim_neutral(sys, cfg),
    }
}

/// Settled step responses as a lower bound on the L_p gain. For p = inf a
/// single all-ones step suffices (the response tends to the row sums of
/// the zero-frequency matrix); for p in {1, 2} the zero-frequency matrix
/// is reconstructed column by column from per-channel steps. Runs start
/// from rest regardless of cfg.history; cfg contributes step and horizon.
pub fn empirical_gain_lower_bound(
    model: &SystemModel,
    p: Lp,
    cfg: &SimConfig,
) -> Result<f64, SimError> {
    let (m_in, state_dim) = io_dims(model)
        .ok_or_else(|| err(String::from("empirical gain bounds need the model io blocks")))?;
    let run = |input: InputSignal| -> Result<Vec<f64>, SimError> {
        let cfg = SimConfig {
            step: cfg.step,
            horizon: cfg.horizon,
            history: History::Constant(vec![0.0; state_dim]),
            input,
            delay_motion: Vec::new(),
        };
        settled_output(model, &cfg)
    };
    match p {
        Lp::Inf => {
            let y = run(InputSignal::Constant(vec![1.0; m_in]))?;
            Ok(y.iter().fold(0.0f64, |a, v| a.max(math::abs(*v))))
        }
        Lp::One | Lp::Two => {
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m_in);
            for j in 0..m_in {
                let mut e = vec![0.0; m_in];
                e[j] = 1.0;
                cols.push(run(InputSignal::Constant(e))?);
            }
            let q = cols[0].len();
            let h0 = Matrix::from_fn(q, m_in, |i, j| cols[j][i]);
            Ok(induced_norm(&h0, p))
        }
    }
}

/// Input channel count and history dimension for a model with io blocks.
fn io_dims(model: &SystemModel) -> Option<(usize, usize)> {
    match model {
        SystemModel::Lti(s) => s.io.as_ref().map(|io| (io.e.cols(), s.a.rows())),
        SystemModel::DiscreteDelay(s) => s.io.as_ref().map(|io| (io.e_u.cols(), s.n())),
        SystemModel::Difference(s) => s.io.as_ref().map(|io| (io.e_u.cols(), s.n())),
        SystemModel::Coupled(s) => s.io.as_ref().map(|io| (io.e1.cols(), s.n1() + s.n2())),
        SystemModel::Distributed(s) => s.io.as_ref().map(|io| (io.e_u.cols(), s.n())),
        SystemModel::Neutral(s) => s.io.as_ref().map(|io| (io.e_u.cols(), s.n())),
    }
}

fn settled_output(model: &SystemModel, cfg: &SimConfig) -> Result<Vec<f64>, SimError> {
    let traj = simulate(model, cfg)?;
    let y_last = traj
        .outputs
        .last()
        .cloned()
        .ok_or_else(|| err(String::from("settled responses need the model io blocks")))?;
    let n = traj.outputs.len();
    let window = (n / 10).max(2).min(n);
    let scale = 1.0 + y_last.iter().fold(0.0f64, |a, v| a.max(math::abs(*v)));
    let mut drift = 0.0f64;
    for y in &traj.outputs[n - window..] {
        for (a, b) in y.iter().zip(&y_last) {
            drift = drift.max(math::abs(a - b));
        }
    }
    if drift > SETTLE_TOL * scale {
        return Err(err(format!(
            "output did not settle within the horizon: residual drift {drift:.3e}"
        )));
    }
    Ok(y_last)
}

// ---------------------------------------------------------------------------
// per-class integrators
// ---------------------------------------------------------------------------

fn sim_lti(sys: &LtiSystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = sys.a.rows();
    cfg.history.validate(n)?;
    let (nsteps, times) = plan_grid(cfg, &[])?;
    let m_in = sys.io.as_ref().map(|io| io.e.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);

    let mut past = Past {
        step: cfg.step,
        history: &cfg.history,
        x: vec![cfg.history.value_at(0.0)],
        dx: Vec::new(),
    };
    rk4_run(&mut past, nsteps, |t, x, _| {
        let mut v = sys.a.matvec(x);
        if let Some(io) = &sys.io {
            add_assign(&mut v, &io.e.matvec(&u(t)));
        }
        v
    });

    let outputs = match &sys.io {
        Some(io) => (0..=nsteps)
            .map(|k| {
                let mut y = io.c.matvec(&past.x[k]);
                add_assign(&mut y, &io.f.matvec(&u(times[k])));
                y
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Trajectory::assemble(times, past.x, outputs))
}

fn sim_discrete(sys: &DiscreteDelaySystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = sys.n();
    cfg.history.validate(n)?;
    let (nsteps, times) = plan_grid(cfg, &sys.delays)?;
    let motion = resolve_motion(&sys.delays, &cfg.delay_motion, true)?;
    let m_in = sys.io.as_ref().map(|io| io.e_u.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e_u.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);

    let delayed = |past: &Past<'_>, t: f64, x: &[f64], i: usize| -> Vec<f64> {
        let h = delay_at(&sys.delays[i], &motion[i], t);
        if h <= 0.0 {
            x.to_vec()
        } else {
            past.sample(t - h)
        }
    };

    let mut past = Past {
        step: cfg.step,
        history: &cfg.history,
        x: vec![cfg.history.value_at(0.0)],
        dx: Vec::new(),
    };
    rk4_run(&mut past, nsteps, |t, x, past| {
        let mut v = sys.a0.matvec(x);
        for (i, ai) in sys.a.iter().enumerate() {
            add_assign(&mut v, &ai.matvec(&delayed(past, t, x, i)));
        }
        if let Some(io) = &sys.io {
            add_assign(&mut v, &io.e_u.matvec(&u(t)));
        }
        v
    });

    let outputs = match &sys.io {
        Some(io) => (0..=nsteps)
            .map(|k| {
                let t = times[k];
                let mut y = io.c0.matvec(&past.x[k]);
                for (i, ci) in io.c.iter().enumerate() {
                    add_assign(&mut y, &ci.matvec(&delayed(&past, t, &past.x[k], i)));
                }
                add_assign(&mut y, &io.f_u.matvec(&u(t)));
                y
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Trajectory::assemble(times, past.x, outputs))
}

fn sim_difference(sys: &DifferenceSystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = sys.n();
    cfg.history.validate(n)?;
    let (nsteps, times) = plan_grid(cfg, &sys.delays)?;
    resolve_motion(&sys.delays, &cfg.delay_motion, false)?;
    let m_in = sys.io.as_ref().map(|io| io.e_u.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e_u.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);

    // delays snapped to the grid; the step cap keeps the snap below 2.5%
    let lags: Vec<usize> = sys
        .delays
        .iter()
        .map(|d| (math::floor(d.h_max() / cfg.step + 0.5) as usize).max(1))
        .collect();
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(nsteps + 1);
    let look = |states: &Vec<Vec<f64>>, k: usize, lag: usize| -> Vec<f64> {
        if k >= lag {
            states[k - lag].clone()
        } else {
            cfg.history.value_at((k as f64 - lag as f64) * cfg.step)
        }
    };
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    for k in 0..=nsteps {
        let t = times[k];
        let mut x = vec![0.0; n];
        for (ai, lag) in sys.a.iter().zip(&lags) {
            add_assign(&mut x, &ai.matvec(&look(&states, k, *lag)));
        }
        if let Some(io) = &sys.io {
            add_assign(&mut x, &io.e_u.matvec(&u(t)));
            let mut y = vec![0.0; io.f_u.rows()];
            for (ci, lag) in io.c.iter().zip(&lags) {
                add_assign(&mut y, &ci.matvec(&look(&states, k, *lag)));
            }
            add_assign(&mut y, &io.f_u.matvec(&u(t)));
            outputs.push(y);
        }
        states.push(x);
    }
    Ok(Trajectory::assemble(times, states, outputs))
}

fn sim_coupled(sys: &CoupledSystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n1 = sys.n1();
    let n2 = sys.n2();
    cfg.history.validate(n1 + n2)?;
    let (nsteps, times) = plan_grid(cfg, &sys.delays)?;
    let motion = resolve_motion(&sys.delays, &cfg.delay_motion, true)?;
    let m_in = sys.io.as_ref().map(|io| io.e1.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e1.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);
    let dt = cfg.step;

    // x2 lives on the grid with linear interpolation; its past comes from
    // the last n2 components of the shared history vector
    let x2_hist = |t: f64| -> Vec<f64> { cfg.history.value_at(t)[n1..].to_vec() };
    let mut x2: Vec<Vec<f64>> = Vec::with_capacity(nsteps + 1);
    let x2_sample = |x2: &Vec<Vec<f64>>, s: f64| -> Vec<f64> {
        if s <= 0.0 {
            return x2_hist(s);
        }
        let pos = s / dt;
        let k = math::floor(pos) as usize;
        if k + 1 < x2.len() {
            lerp(&x2[k], &x2[k + 1], pos - k as f64)
        } else {
            x2.last().cloned().unwrap_or_else(|| x2_hist(0.0))
        }
    };
    let x2_at = |x2: &Vec<Vec<f64>>, t: f64, x1: &[f64]| -> Vec<f64> {
        let mut v = sys.c0.matvec(x1);
        for (i, ci) in sys.c.iter().enumerate() {
            let h = delay_at(&sys.delays[i], &motion[i], t);
            add_assign(&mut v, &ci.matvec(&x2_sample(x2, t - h)));
        }
        if let Some(io) = &sys.io {
            add_assign(&mut v, &io.e2.matvec(&u(t)));
        }
        v
    };

    let x1_0 = cfg.history.value_at(0.0)[..n1].to_vec();
    x2.push(x2_at(&x2, 0.0, &x1_0));
    let hist_dummy = History::Constant(vec![0.0; n1]);
    let mut past = Past { step: dt, history: &hist_dummy, x: vec![x1_0], dx: Vec::new() };

    for k in 0..nsteps {
        let t = k as f64 * dt;
        let x = past.x[k].clone();
        let f = |t: f64, x1: &[f64]| -> Vec<f64> {
            let mut v = sys.a0.matvec(x1);
            for (i, ai) in sys.a.iter().enumerate() {
                let h = delay_at(&sys.delays[i], &motion[i], t);
                add_assign(&mut v, &ai.matvec(&x2_sample(&x2, t - h)));
            }
            if let Some(io) = &sys.io {
                add_assign(&mut v, &io.e1.matvec(&u(t)));
            }
            v
        };
        let k1 = f(t, &x);
        let k2 = f(t + 0.5 * dt, &shifted(&x, 0.5 * dt, &k1));
        let k3 = f(t + 0.5 * dt, &shifted(&x, 0.5 * dt, &k2));
        let k4 = f(t + dt, &shifted(&x, dt, &k3));
        let xn: Vec<f64> = (0..n1)
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        past.dx.push(k1);
        x2.push(x2_at(&x2, t + dt, &xn));
        past.x.push(xn);
    }

    let states: Vec<Vec<f64>> = (0..=nsteps)
        .map(|k| {
            let mut s = past.x[k].clone();
            s.extend_from_slice(&x2[k]);
            s
        })
        .collect();
    let outputs = match &sys.io {
        Some(io) => (0..=nsteps)
            .map(|k| {
                let t = times[k];
                let mut y = io.cy0.matvec(&past.x[k]);
                for (i, cyi) in io.cy.iter().enumerate() {
                    let h = delay_at(&sys.delays[i], &motion[i], t);
                    add_assign(&mut y, &cyi.matvec(&x2_sample(&x2, t - h)));
                }
                add_assign(&mut y, &io.f_u.matvec(&u(t)));
                y
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Trajectory::assemble(times, states, outputs))
}

fn sim_distributed(sys: &DistributedSystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = sys.n();
    cfg.history.validate(n)?;
    let (nsteps, times) = plan_grid(cfg, &sys.delays)?;
    resolve_motion(&sys.delays, &cfg.delay_motion, false)?;
    let m_in = sys.io.as_ref().map(|io| io.e_u.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e_u.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);

    // trapezoid rule per kernel: nodes theta_j on [-h, 0], weights cached
    // together with the kernel values
    let quad = |kernel: &DistKernel, h: f64| -> Vec<(f64, Matrix)> {
        let segs = (math::floor(h / cfg.step - 1e-9) as usize + 1).max(1);
        let dtheta = h / segs as f64;
        (0..=segs)
            .map(|j| {
                let theta = -h + j as f64 * dtheta;
                let w = if j == 0 || j == segs { 0.5 * dtheta } else { dtheta };
                let k = kernel
                    .eval(theta, h)
                    .unwrap_or_else(|| Matrix::zeros(n, n))
                    .scale(w);
                (theta, k)
            })
            .collect()
    };
    let state_quads: Vec<Vec<(f64, Matrix)>> = sys
        .kernels
        .iter()
        .zip(&sys.delays)
        .map(|(k, d)| quad(k, d.h_max()))
        .collect();
    let out_quads: Vec<Vec<(f64, Matrix)>> = match &sys.io {
        Some(io) => io
            .out_kernels
            .iter()
            .zip(&sys.delays)
            .map(|(k, d)| quad(k, d.h_max()))
            .collect(),
        None => Vec::new(),
    };

    // theta = 0 hits the stage state exactly, so pass it alongside
    let convolve = |past: &Past<'_>, nodes: &[(f64, Matrix)], t: f64, x: &[f64]| -> Vec<f64> {
        let rows = nodes[0].1.rows();
        let mut acc = vec![0.0; rows];
        for (theta, wk) in nodes {
            let xs = if *theta == 0.0 { x.to_vec() } else { past.sample(t + theta) };
            add_assign(&mut acc, &wk.matvec(&xs));
        }
        acc
    };

    let mut past = Past {
        step: cfg.step,
        history: &cfg.history,
        x: vec![cfg.history.value_at(0.0)],
        dx: Vec::new(),
    };
    rk4_run(&mut past, nsteps, |t, x, past| {
        let mut v = sys.a0.matvec(x);
        for nodes in &state_quads {
            add_assign(&mut v, &convolve(past, nodes, t, x));
        }
        if let Some(io) = &sys.io {
            add_assign(&mut v, &io.e_u.matvec(&u(t)));
        }
        v
    });

    let outputs = match &sys.io {
        Some(io) => (0..=nsteps)
            .map(|k| {
                let t = times[k];
                let mut y = io.c0.matvec(&past.x[k]);
                for nodes in &out_quads {
                    add_assign(&mut y, &convolve(&past, nodes, t, &past.x[k]));
                }
                add_assign(&mut y, &io.f_u.matvec(&u(t)));
                y
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Trajectory::assemble(times, past.x, outputs))
}

fn sim_neutral(sys: &NeutralSystem, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = sys.n();
    cfg.history.validate(n)?;
    let (nsteps, times) = plan_grid(cfg, &sys.delays)?;
    resolve_motion(&sys.delays, &cfg.delay_motion, false)?;
    let m_in = sys.io.as_ref().map(|io| io.e_u.cols()).unwrap_or(0);
    if let Some(io) = &sys.io {
        cfg.input.validate(io.e_u.cols())?;
    }
    let u = |t: f64| cfg.input.value_at(t, m_in);

    let mut past = Past {
        step: cfg.step,
        history: &cfg.history,
        x: vec![cfg.history.value_at(0.0)],
        dx: Vec::new(),
    };
    rk4_run(&mut past, nsteps, |t, x, past| {
        let mut v = sys.a0.matvec(x);
        for (i, d) in sys.delays.iter().enumerate() {
            let h = d.h_max();
            add_assign(&mut v, &sys.a_r[i].matvec(&past.sample(t - h)));
            add_assign(&mut v, &sys.a_n[i].matvec(&past.sample_dx(t - h)));
        }
        if let Some(io) = &sys.io {
            add_assign(&mut v, &io.e_u.matvec(&u(t)));
        }
        v
    });

    let outputs = match &sys.io {
        Some(io) => (0..=nsteps)
            .map(|k| {
                let t = times[k];
                let mut y = io.c0.matvec(&past.x[k]);
                for (i, d) in sys.delays.iter().enumerate() {
                    let h = d.h_max();
                    add_assign(&mut y, &io.c_r[i].matvec(&past.sample(t - h)));
                    add_assign(&mut y, &io.c_n[i].matvec(&past.sample_dx(t - h)));
                }
                add_assign(&mut y, &io.f_u.matvec(&u(t)));
                y
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Trajectory::assemble(times, past.x, outputs))
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        CoupledIo, DelaySpec, DifferenceIo, DiscreteDelayIo, DistributedIo, LtiIo, NeutralIo,
    };

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| data[i * cols + j])
    }

    fn cfg(step: f64, horizon: f64, hist: &[f64]) -> SimConfig {
        SimConfig {
            step,
            horizon,
            history: History::Constant(hist.to_vec()),
            input: InputSignal::Zero,
            delay_motion: Vec::new(),
        }
    }

    fn scalar_delay_model(a0: f64, a1: f64, with_io: bool) -> SystemModel {
        SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(1, 1, &[a0]),
            a: vec![m(1, 1, &[a1])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: with_io.then(|| DiscreteDelayIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                c: vec![m(1, 1, &[0.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        })
    }

    #[test]
    fn pure_exponential_decay_is_fourth_order_accurate() {
        let model = SystemModel::Lti(LtiSystem { a: m(1, 1, &[-1.0]), io: None });
        let traj = simulate(&model, &cfg(1e-3, 10.0, &[1.0])).unwrap();
        let expected = (-10.0f64).exp();
        let got = traj.terminal_norm_ratio;
        assert!(
            ((got - expected) / expected).abs() < 1e-6,
            "ratio {got} vs e^-10 {expected}"
        );
        assert!(traj.min_entry >= 0.0);
    }

    #[test]
    fn stable_delay_decays_and_stays_positive() {
        let model = scalar_delay_model(-2.0, 1.0, false);
        let traj = simulate(&model, &cfg(0.05, 40.0, &[1.0])).unwrap();
        assert!(traj.terminal_norm_ratio < 1e-6, "ratio {}", traj.terminal_norm_ratio);
        assert!(traj.min_entry >= 0.0, "min entry {}", traj.min_entry);
    }

    #[test]
    fn unstable_delay_grows_past_ten() {
        let model = scalar_delay_model(-1.0, 2.0, false);
        let traj = simulate(&model, &cfg(0.05, 20.0, &[1.0])).unwrap();
        assert!(traj.terminal_norm_ratio > 10.0, "ratio {}", traj.terminal_norm_ratio);
    }

    #[test]
    fn settled_step_response_equals_static_gain() {
        // x' = -2x + x(t-1) + u settles at u / (2 - 1)
        let model = scalar_delay_model(-2.0, 1.0, true);
        let g = empirical_gain_lower_bound(&model, Lp::Inf, &cfg(0.05, 60.0, &[0.0])).unwrap();
        assert!((g - 1.0).abs() < 1e-5, "settled gain {g}");

        let lti = SystemModel::Lti(LtiSystem {
            a: m(1, 1, &[-2.0]),
            io: Some(LtiIo { e: m(1, 1, &[1.0]), c: m(1, 1, &[1.0]), f: m(1, 1, &[0.0]) }),
        });
        let g = empirical_gain_lower_bound(&lti, Lp::Inf, &cfg(0.01, 20.0, &[0.0])).unwrap();
        assert!((g - 0.5).abs() < 1e-6, "settled gain {g}");
    }

    #[test]
    fn per_channel_steps_recover_the_analyzer_gain() {
        let model = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(2, 2, &[-2.0, 0.0, 0.0, -1.0]),
            a: vec![m(2, 2, &[0.0, 0.5, 0.0, 0.0])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: Some(DiscreteDelayIo {
                e_u: Matrix::identity(2),
                c0: Matrix::identity(2),
                c: vec![Matrix::zeros(2, 2)],
                f_u: Matrix::zeros(2, 2),
            }),
        });
        let c = cfg(0.05, 60.0, &[0.0, 0.0]);
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let emp = empirical_gain_lower_bound(&model, p, &c).unwrap();
            let report = crate::analysis::gains::gain(&model, p).unwrap();
            assert!(
                (emp - report.gain).abs() <= 1e-5 * report.gain,
                "p {p}: empirical {emp} vs analyzer {}",
                report.gain
            );
        }
    }

    #[test]
    fn difference_lattice_settles_at_the_static_gain() {
        let model = SystemModel::Difference(DifferenceSystem {
            a: vec![m(1, 1, &[0.5])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: Some(DifferenceIo {
                e_u: m(1, 1, &[1.0]),
                c: vec![m(1, 1, &[1.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        });
        let g = empirical_gain_lower_bound(&model, Lp::Inf, &cfg(0.05, 60.0, &[0.0])).unwrap();
        assert!((g - 2.0).abs() < 1e-9, "settled gain {g}");

        let traj = simulate(
            &model,
            &SimConfig {
                input: InputSignal::Constant(vec![1.0]),
                ..cfg(0.05, 30.0, &[0.0])
            },
        )
        .unwrap();
        assert!(traj.min_entry >= 0.0);
    }

    #[test]
    fn coupled_copy_of_a_discrete_model_settles_identically() {
        // c0 = I, c = 0 makes x2 a live copy of x1, so the coupled system
        // is the discrete one with an extra bookkeeping block
        let discrete = scalar_delay_model(-2.0, 1.0, true);
        let coupled = SystemModel::Coupled(CoupledSystem {
            a0: m(1, 1, &[-2.0]),
            a: vec![m(1, 1, &[1.0])],
            c0: m(1, 1, &[1.0]),
            c: vec![m(1, 1, &[0.0])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: Some(CoupledIo {
                e1: m(1, 1, &[1.0]),
                e2: m(1, 1, &[0.0]),
                cy0: m(1, 1, &[1.0]),
                cy: vec![m(1, 1, &[0.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        });
        let gd = empirical_gain_lower_bound(&discrete, Lp::Inf, &cfg(0.05, 60.0, &[0.0])).unwrap();
        let gc = empirical_gain_lower_bound(&coupled, Lp::Inf, &cfg(0.05, 60.0, &[0.0])).unwrap();
        assert!((gd - gc).abs() < 1e-9, "discrete {gd} vs coupled {gc}");
    }

    #[test]
    fn constant_kernel_distributed_settles_exactly() {
        // x' = -x + integral of 0.5 x over the last unit + u settles at 2u
        let model = SystemModel::Distributed(DistributedSystem {
            a0: m(1, 1, &[-1.0]),
            kernels: vec![DistKernel::Constant(m(1, 1, &[0.5]))],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: Some(DistributedIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                out_kernels: vec![DistKernel::Constant(m(1, 1, &[0.0]))],
                f_u: m(1, 1, &[0.0]),
            }),
        });
        let g = empirical_gain_lower_bound(&model, Lp::Inf, &cfg(0.05, 80.0, &[0.0])).unwrap();
        assert!((g - 2.0).abs() < 1e-6, "settled gain {g}");
    }

    #[test]
    fn neutral_decay_and_settled_gain() {
        let sys = NeutralSystem {
            a0: m(1, 1, &[-2.0]),
            a_n: vec![m(1, 1, &[0.25])],
            a_r: vec![m(1, 1, &[0.5])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: Some(NeutralIo {
                e_u: m(1, 1, &[1.0]),
                c0: m(1, 1, &[1.0]),
                c_n: vec![m(1, 1, &[0.0])],
                c_r: vec![m(1, 1, &[0.0])],
                f_u: m(1, 1, &[0.0]),
            }),
        };
        let model = SystemModel::Neutral(sys);
        let traj = simulate(&model, &cfg(0.05, 30.0, &[1.0])).unwrap();
        assert!(traj.terminal_norm_ratio < 1e-6, "ratio {}", traj.terminal_norm_ratio);
        assert!(traj.min_entry >= -1e-9, "min entry {}", traj.min_entry);

        // equilibrium of the reduced dynamics: u / (2 - 0.5)
        let g = empirical_gain_lower_bound(&model, Lp::Inf, &cfg(0.05, 60.0, &[0.0])).unwrap();
        assert!((g - 2.0 / 3.0).abs() < 1e-5, "settled gain {g}");
    }

    #[test]
    fn sawtooth_delay_keeps_a_certified_model_decaying() {
        let model = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(1, 1, &[-2.0]),
            a: vec![m(1, 1, &[1.0])],
            delays: vec![DelaySpec::TimeVarying { h_bar: 1.0, rate_bound: 0.5 }],
            io: None,
        });
        let mut c = cfg(0.05, 30.0, &[1.0]);
        c.delay_motion = vec![DelayMotion::Sawtooth { period: 4.0 }];
        let traj = simulate(&model, &c).unwrap();
        assert!(traj.terminal_norm_ratio < 1e-3, "ratio {}", traj.terminal_norm_ratio);
        assert!(traj.min_entry >= 0.0);
    }

    #[test]
    fn halving_the_step_shrinks_the_error_fourth_order() {
        let model = SystemModel::Lti(LtiSystem {
            a: m(2, 2, &[-1.0, 0.5, 0.3, -2.0]),
            io: None,
        });
        let terminal = |step: f64| {
            simulate(&model, &cfg(step, 5.0, &[1.0, 1.0])).unwrap().states.last().unwrap().clone()
        };
        let a = terminal(0.1);
        let b = terminal(0.05);
        let c = terminal(0.025);
        let e1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
        let e2 = b.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
        let order = e1 / e2;
        assert!(order > 10.0 && order < 30.0, "refinement ratio {order}");
    }

    #[test]
    fn configuration_errors_are_reported() {
        let model = scalar_delay_model(-2.0, 1.0, false);
        // step above h/20
        let e = simulate(&model, &cfg(0.1, 10.0, &[1.0])).unwrap_err();
        assert!(e.detail.contains("one twentieth"), "{e}");
        // wrong history dimension
        let e = simulate(&model, &cfg(0.05, 10.0, &[1.0, 1.0])).unwrap_err();
        assert!(e.detail.contains("dimension"), "{e}");
        // input on a model without io
        let mut c = cfg(0.05, 10.0, &[1.0]);
        c.input = InputSignal::Constant(vec![1.0]);
        let e = simulate(&model, &c).unwrap_err();
        assert!(e.detail.contains("no input channels"), "{e}");
        // sawtooth on a constant delay
        let mut c = cfg(0.05, 10.0, &[1.0]);
        c.delay_motion = vec![DelayMotion::Sawtooth { period: 4.0 }];
        let e = simulate(&model, &c).unwrap_err();
        assert!(e.detail.contains("constant"), "{e}");
        // sawtooth too fast for the declared rate bound
        let tv = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(1, 1, &[-2.0]),
            a: vec![m(1, 1, &[1.0])],
            delays: vec![DelaySpec::TimeVarying { h_bar: 1.0, rate_bound: 0.1 }],
            io: None,
        });
        let mut c = cfg(0.05, 10.0, &[1.0]);
        c.delay_motion = vec![DelayMotion::Sawtooth { period: 4.0 }];
        let e = simulate(&tv, &c).unwrap_err();
        assert!(e.detail.contains("rate bound"), "{e}");
    }

    #[test]
    fn unsettled_growth_is_reported_with_drift() {
        let model = scalar_delay_model(-1.0, 2.0, true);
        let e = empirical_gain_lower_bound(&model, Lp::Inf, &cfg(0.05, 20.0, &[0.0])).unwrap_err();
        assert!(e.detail.contains("did not settle"), "{e}");
    }
}
