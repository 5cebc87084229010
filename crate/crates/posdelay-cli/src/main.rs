//! posdelay: decide stability of positive time-delay systems, compute
//! exact induced gains, emit and re-verify certificates, and cross-check
//! everything against trajectories.
//!
//! Exit codes: 0 stable / 1 unstable / 2 marginal / 3 cross-validation
//! or certificate disagreement / 64 input error. The code is a function
//! of the produced verdict alone and is deterministic for a given seed
//! and tolerance settings.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use posdelay_cli::crossval::{condition_disagreement, default_sim_step, run_campaign, sim_cross_check};
use posdelay_cli::csvout::trajectory_csv;
use posdelay_cli::report::{assemble, check_report, emit, load_report, lp_from_str, Tolerances};
use posdelay_cli::schema::load_model;
use posdelay_core::analysis::{analyze, gain_with_method, GainMethod, GainReport, Verdict};
use posdelay_core::model::{DelaySpec, SystemModel};
use posdelay_core::sim::{simulate, History, InputSignal, SimConfig};
use posdelay_core::Lp;
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(
    name = "posdelay",
    version,
    about = "Stability, induced L1/L2/Linf gains, and machine-checkable certificates for linear positive time-delay systems",
    after_help = "Exit codes: 0 stable, 1 unstable, 2 marginal, 3 disagreement, 64 input error.\n\
        POSDELAY_TOL sets the default numeric agreement tolerance (same as --tol)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Write the report (or CSV) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Numeric agreement tolerance for cross-checks (default 1e-6, or
    /// POSDELAY_TOL when set).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Relative margin below which a condition counts as marginal in
    /// disagreement checks (default 1e-7).
    #[arg(long, global = true)]
    margin: Option<f64>,

    /// Seed for random campaigns (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate positivity, run every equivalent stability condition,
    /// and emit a report with a substitution-checkable certificate.
    Analyze {
        /// Model file (JSON).
        model: PathBuf,
    },
    /// Compute the induced L_p gain of a stable model.
    Gain {
        /// Model file (JSON).
        model: PathBuf,
        /// Which norm: 1, 2, or inf.
        #[arg(long)]
        p: String,
        /// closed | bisect | both ("both" cross-checks the two answers).
        #[arg(long, default_value = "closed")]
        method: String,
    },
    /// Re-verify every certificate inside a previously emitted report by
    /// direct substitution against the embedded model.
    Certify {
        /// Report file produced by analyze/gain/crossval.
        report: PathBuf,
        /// Perform the check (the only mode there is).
        #[arg(long)]
        check: bool,
    },
    /// Integrate the model and write the trajectory as CSV.
    Simulate {
        /// Model file (JSON).
        model: PathBuf,
        /// zero | const:<v>[,<v>...]  (constant input, broadcast when a
        /// single value is given). Zero input starts from an all-ones
        /// history; a driven run starts from rest.
        #[arg(long, default_value = "zero")]
        input: String,
        /// Grid step (default: min delay / 25, capped at 0.02).
        #[arg(long)]
        step: Option<f64>,
        /// Final time (default 80).
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Cross-validate conditions against each other and the simulator:
    /// a single model file, or a seeded random campaign with --random.
    Crossval {
        /// Model file (JSON); omit when using --random.
        model: Option<PathBuf>,
        /// Draw random instances of this class instead of reading a file
        /// (lti, discrete, difference, coupled, distributed, neutral).
        #[arg(long)]
        random: Option<String>,
        /// Number of random instances.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

const EXIT_DISAGREE: u8 = 3;
const EXIT_INPUT: u8 = 64;

/// First 20 campaign instances get a trajectory cross-check; the rest
/// rely on condition agreement alone. Fixed so campaigns stay cheap and
/// reproducible.
const CAMPAIGN_SIM_BUDGET: usize = 20;

fn fail(msg: impl AsRef<str>) -> u8 {
    eprintln!("error: {}", msg.as_ref());
    EXIT_INPUT
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Stable => 0,
        Verdict::Unstable => 1,
        Verdict::Marginal => 2,
    }
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_model(path: &Path) -> Result<SystemModel, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    load_model(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// The analyzers assume internal positivity; refuse anything else with
/// the full violation listing.
fn require_positive(model: &SystemModel) -> Result<(), String> {
    let violations = model.positivity_violations();
    if violations.is_empty() {
        return Ok(());
    }
    let mut msg = format!(
        "model is not internally positive ({} violation(s)); the analysis applies to positive systems only",
        violations.len()
    );
    for v in violations.iter().take(8) {
        msg.push_str(&format!("\n  {v}"));
    }
    Err(msg)
}

fn resolve_tolerances(cli: &Cli) -> Result<Tolerances, String> {
    let mut t = Tolerances::default();
    if let Some(tol) = cli.tol {
        t.tol = tol;
    } else if let Ok(s) = std::env::var("POSDELAY_TOL") {
        t.tol = s.parse::<f64>().map_err(|_| format!("POSDELAY_TOL must be a number, got '{s}'"))?;
    }
    if let Some(m) = cli.margin {
        t.margin_band = m;
    }
    if !(t.tol > 0.0 && t.tol.is_finite()) {
        return Err(format!("--tol must be a positive number, got {}", t.tol));
    }
    if !(t.margin_band >= 0.0 && t.margin_band.is_finite()) {
        return Err(format!("--margin must be nonnegative, got {}", t.margin_band));
    }
    Ok(t)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tols = match resolve_tolerances(&cli) {
        Ok(t) => t,
        Err(e) => return ExitCode::from(fail(e)),
    };
    let code = match &cli.cmd {
        Cmd::Analyze { model } => cmd_analyze(&cli, tols, model),
        Cmd::Gain { model, p, method } => cmd_gain(&cli, tols, model, p, method),
        Cmd::Certify { report, check } => cmd_certify(&cli, report, *check),
        Cmd::Simulate { model, input, step, horizon } => {
            cmd_simulate(&cli, model, input, *step, *horizon)
        }
        Cmd::Crossval { model, random, count } => cmd_crossval(&cli, tols, model, random, *count),
    };
    ExitCode::from(code)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_analyze(cli: &Cli, tols: Tolerances, path: &Path) -> u8 {
    let model = match read_model(path) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if let Err(e) = require_positive(&model) {
        return fail(e);
    }
    let stability = match analyze(&model) {
        Ok(r) => r,
        Err(e) => return fail(format!("analysis failed: {e}")),
    };
    let verdict = stability.verdict;
    let report = assemble(model, stability, Vec::new(), None, tols);
    if let Err(e) = write_text(&cli.out, &emit(&report)) {
        return fail(e);
    }
    verdict_code(verdict)
}

// ---------------------------------------------------------------------------
// gain
// ---------------------------------------------------------------------------

fn unbounded_rate_delay(model: &SystemModel) -> bool {
    model
        .delays()
        .iter()
        .any(|d| matches!(d, DelaySpec::TimeVaryingUnboundedRate { .. }))
}

fn cmd_gain(cli: &Cli, tols: Tolerances, path: &Path, p_str: &str, method: &str) -> u8 {
    let model = match read_model(path) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if let Err(e) = require_positive(&model) {
        return fail(e);
    }
    let p = match lp_from_str(p_str) {
        Some(p) => p,
        None => return fail(format!("--p must be 1, 2, or inf, got '{p_str}'")),
    };
    if !model.has_io() {
        return fail("model carries no io blocks, so it has no input-output gain");
    }
    if p != Lp::Inf && unbounded_rate_delay(&model) {
        return fail(format!(
            "rate bound required for p={p_str}: delays tagged tv_unbounded_rate support the Linf gain only"
        ));
    }
    let stability = match analyze(&model) {
        Ok(r) => r,
        Err(e) => return fail(format!("analysis failed: {e}")),
    };
    let verdict = stability.verdict;
    if verdict != Verdict::Stable {
        eprintln!(
            "gain undefined: the model is {verdict}, and induced gains exist for stable systems only"
        );
        let report = assemble(model, stability, Vec::new(), None, tols);
        if let Err(e) = write_text(&cli.out, &emit(&report)) {
            return fail(e);
        }
        return verdict_code(verdict);
    }

    let mut gains: Vec<GainReport> = Vec::new();
    let mut disagree = false;
    match method {
        "closed" | "bisect" => {
            let m = if method == "closed" { GainMethod::ClosedForm } else { GainMethod::LpBisection };
            match gain_with_method(&model, p, m) {
                Ok(g) => gains.push(g),
                Err(e) => return fail(format!("gain computation failed: {e}")),
            }
        }
        "both" => {
            let g1 = match gain_with_method(&model, p, GainMethod::ClosedForm) {
                Ok(g) => g,
                Err(e) => return fail(format!("gain computation failed: {e}")),
            };
            let g2 = match gain_with_method(&model, p, GainMethod::LpBisection) {
                Ok(g) => g,
                Err(e) => return fail(format!("gain bisection failed: {e}")),
            };
            let gap = (g1.gain - g2.gain).abs();
            if gap > tols.tol * g1.gain.abs().max(1.0) {
                eprintln!(
                    "gain methods disagree: closed form {:.12e} vs bisection {:.12e} (gap {gap:.3e} above tolerance {:.1e})",
                    g1.gain, g2.gain, tols.tol
                );
                disagree = true;
            }
            gains.push(g1);
            gains.push(g2);
        }
        other => return fail(format!("--method must be closed, bisect, or both, got '{other}'")),
    }
    let report = assemble(model, stability, gains, None, tols);
    if let Err(e) = write_text(&cli.out, &emit(&report)) {
        return fail(e);
    }
    if disagree {
        EXIT_DISAGREE
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// certify --check
// ---------------------------------------------------------------------------

fn cmd_certify(cli: &Cli, path: &Path, _check: bool) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", path.display())),
    };
    let rep = match load_report(&text) {
        Ok(r) => r,
        Err(e) => return fail(format!("{}: {e}", path.display())),
    };
    let outcome = check_report(&rep);
    let mut m = Map::new();
    m.insert("digest".into(), rep.digest.as_str().into());
    m.insert("checked".into(), Value::from(outcome.checked));
    m.insert("failures".into(), Value::from(outcome.failures));
    m.insert(
        "results".into(),
        Value::Array(outcome.lines.iter().map(|s| Value::from(s.as_str())).collect()),
    );
    let mut text = serde_json::to_string_pretty(&Value::Object(m)).expect("summary serializes");
    text.push('\n');
    if let Err(e) = write_text(&cli.out, &text) {
        return fail(e);
    }
    if outcome.all_passed() {
        0
    } else {
        eprintln!("certificate check failed: {} of {} checks", outcome.failures, outcome.checked);
        EXIT_DISAGREE
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn input_dim(model: &SystemModel) -> Option<usize> {
    match model {
        SystemModel::Lti(s) => s.io.as_ref().map(|io| io.e.cols()),
        SystemModel::DiscreteDelay(s) => s.io.as_ref().map(|io| io.e_u.cols()),
        SystemModel::Difference(s) => s.io.as_ref().map(|io| io.e_u.cols()),
        SystemModel::Coupled(s) => s.io.as_ref().map(|io| io.e1.cols()),
        SystemModel::Distributed(s) => s.io.as_ref().map(|io| io.e_u.cols()),
        SystemModel::Neutral(s) => s.io.as_ref().map(|io| io.e_u.cols()),
    }
}

fn state_dim(model: &SystemModel) -> usize {
    match model {
        SystemModel::Lti(s) => s.n(),
        SystemModel::DiscreteDelay(s) => s.n(),
        SystemModel::Difference(s) => s.n(),
        SystemModel::Coupled(s) => s.n1() + s.n2(),
        SystemModel::Distributed(s) => s.n(),
        SystemModel::Neutral(s) => s.n(),
    }
}

fn parse_input(spec: &str, model: &SystemModel) -> Result<InputSignal, String> {
    if spec == "zero" {
        return Ok(InputSignal::Zero);
    }
    let Some(rest) = spec.strip_prefix("const:") else {
        return Err(format!("--input must be zero or const:<v>[,<v>...], got '{spec}'"));
    };
    let m = input_dim(model).ok_or("model has no io blocks, so only --input zero applies")?;
    let vals: Result<Vec<f64>, _> = rest.split(',').map(str::trim).map(str::parse::<f64>).collect();
    let vals = vals.map_err(|_| format!("cannot parse input values '{rest}'"))?;
    let u = if vals.len() == 1 { vec![vals[0]; m] } else { vals };
    if u.len() != m {
        return Err(format!("input has {} values but the model takes {m}", u.len()));
    }
    Ok(InputSignal::Constant(u))
}

fn cmd_simulate(cli: &Cli, path: &Path, input: &str, step: Option<f64>, horizon: Option<f64>) -> u8 {
    let model = match read_model(path) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let signal = match parse_input(input, &model) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let dim = state_dim(&model);
    // driven runs start from rest so the settled output is the static
    // gain response; free runs start from ones so decay is visible
    let history = match signal {
        InputSignal::Zero => History::Constant(vec![1.0; dim]),
        _ => History::Constant(vec![0.0; dim]),
    };
    let cfg = SimConfig {
        step: step.unwrap_or_else(|| default_sim_step(&model)),
        horizon: horizon.unwrap_or(80.0),
        history,
        input: signal,
        delay_motion: Vec::new(),
    };
    let traj = match simulate(&model, &cfg) {
        Ok(t) => t,
        Err(e) => return fail(format!("simulation failed: {e}")),
    };
    if let Err(e) = write_text(&cli.out, &trajectory_csv(&traj)) {
        return fail(e);
    }
    let last_y = traj.outputs.last();
    eprintln!(
        "simulated {} steps to t = {:.3}; terminal norm ratio {:.6e}; min entry {:.3e}{}",
        traj.times.len() - 1,
        traj.times.last().copied().unwrap_or(0.0),
        traj.terminal_norm_ratio,
        traj.min_entry,
        match last_y {
            Some(y) if !y.is_empty() =>
                format!("; terminal output [{}]", y.iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(", ")),
            _ => String::new(),
        }
    );
    0
}

// ---------------------------------------------------------------------------
// crossval
// ---------------------------------------------------------------------------

fn cmd_crossval(
    cli: &Cli,
    tols: Tolerances,
    model: &Option<PathBuf>,
    random: &Option<String>,
    count: usize,
) -> u8 {
    match (model, random) {
        (Some(_), Some(_)) => fail("pass a model file or --random <class>, not both"),
        (None, None) => fail("pass a model file or --random <class>"),
        (None, Some(class)) => {
            let seed = cli.seed.unwrap_or(0);
            let Some(outcome) = run_campaign(class, seed, count, tols.margin_band, CAMPAIGN_SIM_BUDGET)
            else {
                return fail(format!(
                    "unknown class '{class}'; expected lti, discrete, difference, coupled, distributed, or neutral"
                ));
            };
            let mut m = Map::new();
            m.insert("class".into(), class.as_str().into());
            m.insert("seed".into(), Value::from(seed));
            m.insert("count".into(), Value::from(outcome.count));
            let mut verdicts = Map::new();
            verdicts.insert("stable".into(), Value::from(outcome.stable));
            verdicts.insert("unstable".into(), Value::from(outcome.unstable));
            verdicts.insert("marginal".into(), Value::from(outcome.marginal));
            m.insert("verdicts".into(), Value::Object(verdicts));
            let strings =
                |v: &Vec<String>| Value::Array(v.iter().map(|s| Value::from(s.as_str())).collect());
            m.insert("disagreements".into(), strings(&outcome.disagreements));
            m.insert("sim_contradictions".into(), strings(&outcome.contradictions));
            m.insert("errors".into(), strings(&outcome.errors));
            let mut sim = Map::new();
            sim.insert("run".into(), Value::from(outcome.sims_run));
            sim.insert("confirmed".into(), Value::from(outcome.sims_confirmed));
            sim.insert("inconclusive".into(), Value::from(outcome.sims_inconclusive));
            m.insert("sim".into(), Value::Object(sim));
            let mut text = serde_json::to_string_pretty(&Value::Object(m)).expect("summary serializes");
            text.push('\n');
            if let Err(e) = write_text(&cli.out, &text) {
                return fail(e);
            }
            if outcome.clean() {
                0
            } else {
                eprintln!(
                    "cross-validation found {} disagreement(s), {} sim contradiction(s), {} error(s)",
                    outcome.disagreements.len(),
                    outcome.contradictions.len(),
                    outcome.errors.len()
                );
                EXIT_DISAGREE
            }
        }
        (Some(path), None) => {
            let model = match read_model(path) {
                Ok(m) => m,
                Err(e) => return fail(e),
            };
            if let Err(e) = require_positive(&model) {
                return fail(e);
            }
            let stability = match analyze(&model) {
                Ok(r) => r,
                Err(e) => return fail(format!("analysis failed: {e}")),
            };
            let verdict = stability.verdict;
            let disagreement = condition_disagreement(&stability, tols.margin_band);
            let sim = sim_cross_check(&model, verdict);
            let contradiction = sim.consistent == Some(false);
            let report = assemble(model, stability, Vec::new(), Some(sim), tols);
            if let Err(e) = write_text(&cli.out, &emit(&report)) {
                return fail(e);
            }
            if let Some(d) = disagreement {
                eprintln!("condition disagreement: {d}");
                return EXIT_DISAGREE;
            }
            if contradiction {
                eprintln!("simulator contradicts the {verdict} verdict");
                return EXIT_DISAGREE;
            }
            verdict_code(verdict)
        }
    }
}
