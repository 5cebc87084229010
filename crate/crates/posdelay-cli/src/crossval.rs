//! Cross-validation: every equivalent condition of an analysis must land
//! on the same side of the boundary, and trajectories must move the way
//! the verdict says. Campaigns draw seeded random instances; single
//! models get the same treatment one at a time.

use posdelay_core::analysis::{analyze, Condition, ConditionStatus, StabilityReport, Verdict};
use posdelay_core::model::SystemModel;
use posdelay_core::sim::{simulate, History, SimConfig};

use crate::report::SimSummary;
use crate::sampler::{Mode, Sampler};

/// Which way a condition votes once margins inside the band are set
/// aside. None for marginal, not-evaluable, or inside-band conditions.
fn decided(c: &Condition, band: f64) -> Option<bool> {
    match c.status {
        ConditionStatus::Holds if c.margin >= band => Some(true),
        ConditionStatus::Fails if c.margin <= -band => Some(false),
        _ => None,
    }
}

/// First pair of decided conditions that vote opposite ways, if any.
pub fn condition_disagreement(r: &StabilityReport, band: f64) -> Option<String> {
    let mut yes: Option<&Condition> = None;
    let mut no: Option<&Condition> = None;
    for c in &r.conditions {
        match decided(c, band) {
            Some(true) if yes.is_none() => yes = Some(c),
            Some(false) if no.is_none() => no = Some(c),
            _ => {}
        }
    }
    match (yes, no) {
        (Some(y), Some(n)) => Some(format!(
            "{} holds (margin {:.3e}) but {} fails (margin {:.3e})",
            y.id, y.margin, n.id, n.margin
        )),
        _ => None,
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

/// A conservative grid: fine enough for the shortest delay, never so
/// coarse that a delay-free model integrates sloppily.
pub fn default_sim_step(model: &SystemModel) -> f64 {
    let h_min = model
        .delays()
        .iter()
        .map(|d| d.h_max())
        .filter(|&h| h > 0.0)
        .fold(f64::INFINITY, f64::min);
    if h_min.is_finite() {
        (h_min / 25.0).min(0.02)
    } else {
        0.02
    }
}

/// Integrate from an all-ones history with no input and compare the
/// terminal norm ratio against the verdict. Horizons double until the
/// trajectory is decisive or the budget runs out; staying undecided is
/// reported as inconclusive, never as a failure.
pub fn sim_cross_check(model: &SystemModel, verdict: Verdict) -> SimSummary {
    let dim = state_dim(model);
    let step = default_sim_step(model);
    if verdict == Verdict::Marginal {
        return SimSummary {
            step,
            horizon: 0.0,
            terminal_norm_ratio: 1.0,
            min_entry: 0.0,
            consistent: None,
            note: String::from("marginal verdict: trajectory check not decisive by design"),
        };
    }
    let mut horizon = 60.0;
    let mut last: Option<SimSummary> = None;
    while horizon <= 240.0 {
        let cfg = SimConfig {
            step,
            horizon,
            history: History::Constant(vec![1.0; dim]),
            input: posdelay_core::sim::InputSignal::Zero,
            delay_motion: Vec::new(),
        };
        let traj = match simulate(model, &cfg) {
            Ok(t) => t,
            Err(e) => {
                return SimSummary {
                    step,
                    horizon,
                    terminal_norm_ratio: f64::NAN,
                    min_entry: f64::NAN,
                    consistent: None,
                    note: format!("simulation failed: {e}"),
                }
            }
        };
        let ratio = traj.terminal_norm_ratio;
        let positivity_broken = traj.min_entry < -1e-3;
        let consistent = match verdict {
            Verdict::Stable => {
                if ratio < 0.5 {
                    Some(true)
                } else if ratio > 100.0 {
                    Some(false)
                } else {
                    None
                }
            }
            Verdict::Unstable => {
                if ratio > 2.0 {
                    Some(true)
                } else if ratio < 1e-6 {
                    Some(false)
                } else {
                    None
                }
            }
            Verdict::Marginal => None,
        };
        let note = if positivity_broken {
            format!("trajectory left the positive orthant (min entry {:.3e})", traj.min_entry)
        } else {
            match consistent {
                Some(true) => format!("trajectory confirms the {verdict} verdict"),
                Some(false) => format!("trajectory contradicts the {verdict} verdict"),
                None => String::from("trajectory not decisive within the horizon"),
            }
        };
        let summary = SimSummary {
            step,
            horizon,
            terminal_norm_ratio: ratio,
            min_entry: traj.min_entry,
            consistent: if positivity_broken { Some(false) } else { consistent },
            note,
        };
        if summary.consistent.is_some() {
            return summary;
        }
        last = Some(summary);
        horizon *= 2.0;
    }
    last.expect("at least one horizon ran")
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOutcome {
    pub count: usize,
    pub stable: usize,
    pub unstable: usize,
    pub marginal: usize,
    /// Condition-level disagreements, one line per offending instance.
    pub disagreements: Vec<String>,
    /// Simulator contradictions, one line per offending instance.
    pub contradictions: Vec<String>,
    pub sims_run: usize,
    pub sims_confirmed: usize,
    pub sims_inconclusive: usize,
    /// Analyzer errors on sampled instances (would indicate a sampler or
    /// analyzer defect; always reported).
    pub errors: Vec<String>,
}

impl CampaignOutcome {
    pub fn clean(&self) -> bool {
        self.disagreements.is_empty() && self.contradictions.is_empty() && self.errors.is_empty()
    }
}

/// Run a seeded campaign: `count` instances of the class, every
/// equivalent condition checked for agreement outside the band, and the
/// first `sim_budget` instances integrated against their verdicts.
pub fn run_campaign(
    class: &str,
    seed: u64,
    count: usize,
    band: f64,
    sim_budget: usize,
) -> Option<CampaignOutcome> {
    let mut sampler = Sampler::new(seed);
    let mut out = CampaignOutcome { count, ..CampaignOutcome::default() };
    for i in 0..count {
        let model = sampler.instance(class, Mode::Mixed)?;
        let report = match analyze(&model) {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(format!("instance {i}: analyzer error: {e}"));
                continue;
            }
        };
        match report.verdict {
            Verdict::Stable => out.stable += 1,
            Verdict::Unstable => out.unstable += 1,
            Verdict::Marginal => out.marginal += 1,
        }
        if let Some(d) = condition_disagreement(&report, band) {
            out.disagreements.push(format!("instance {i}: {d}"));
        }
        if i < sim_budget {
            let sim = sim_cross_check(&model, report.verdict);
            out.sims_run += 1;
            match sim.consistent {
                Some(true) => out.sims_confirmed += 1,
                Some(false) => out.contradictions.push(format!("instance {i}: {}", sim.note)),
                None => out.sims_inconclusive += 1,
            }
        }
    }
    Some(out)
}
