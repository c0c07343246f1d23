//! Counterfactual shooting policies and their season-level effect.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{expected_goals, expected_shots_solve, InducedChain, SolverError};
use crate::events::{start_state_counts, Possession};
use crate::grid::{GridError, RegionMask, ZoneId};
use crate::model::{shot_quality_stats, TeamModel};
use crate::scenario::{eval_k_moves_then_shoot, ScenarioError};

/// Largest accepted relative increase.
pub const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("adjustment {0} must lie in (-1, {MAX_FACTOR}]")]
    BadFactor(f64),
    #[error("zone {0} is not a field state of the model")]
    UnknownZone(ZoneId),
    #[error("start counts cover {got} zones, the model has {expected}")]
    StartCounts { got: usize, expected: usize },
    #[error("team {0} scored no goals; relative error is undefined")]
    NoGoals(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAdjustment {
    pub zones: BTreeSet<ZoneId>,
    /// Signed relative change of the shooting probability; +0.1 shoots 10%
    /// more often.
    pub x: f64,
}

impl PolicyAdjustment {
    pub fn new(zones: impl IntoIterator<Item = ZoneId>, x: f64) -> Result<Self, PolicyError> {
        if !(x > -1.0 && x <= MAX_FACTOR) {
            return Err(PolicyError::BadFactor(x));
        }
        Ok(Self {
            zones: zones.into_iter().collect(),
            x,
        })
    }

    pub fn from_mask(mask: &RegionMask, x: f64) -> Result<Self, PolicyError> {
        Self::new(mask.iter(), x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustWarning {
    pub zone: ZoneId,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedPolicy {
    pub model: TeamModel,
    /// Zones whose policy actually changed.
    pub changed: BTreeSet<ZoneId>,
    pub warnings: Vec<AdjustWarning>,
}

/// `π'(shoot) = clamp((1 + x) π(shoot))`; moves are rescaled by
/// `(1 − π'(shoot)) / (1 − π(shoot))`. Transitions are untouched.
///
/// Two other forms circulate for this update and are deliberately not
/// used: `π + (1 − x) π` for increases, which agrees with relative
/// scaling only at x = 0.5, and a `1 − x π(shoot)` move denominator for
/// decreases, which leaves rows off the simplex.
pub fn adjust_policy(model: &TeamModel, adj: &PolicyAdjustment) -> Result<AdjustedPolicy, PolicyError> {
    if !(adj.x > -1.0 && adj.x <= MAX_FACTOR) {
        return Err(PolicyError::BadFactor(adj.x));
    }
    let mut out = model.clone();
    let mut changed = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut warn = |zone, message: &str| {
        warnings.push(AdjustWarning {
            zone,
            message: message.to_string(),
        })
    };
    for &s in &adj.zones {
        if s.0 >= model.field_count() {
            return Err(PolicyError::UnknownZone(s));
        }
        if adj.x == 0.0 {
            continue;
        }
        let z = out.zone_mut(s);
        let p = z.shoot;
        if p <= 0.0 {
            warn(s, "zone never shoots; scaling has no effect");
            continue;
        }
        if p >= 1.0 && adj.x > 0.0 {
            warn(s, "zone always shoots; cannot shoot more often");
            continue;
        }
        if z.move_mass() <= 0.0 {
            warn(s, "zone has no move actions to take the freed probability");
            continue;
        }
        let p_new = ((1.0 + adj.x) * p).clamp(0.0, 1.0);
        let factor = (1.0 - p_new) / (1.0 - p);
        z.shoot = p_new;
        for m in &mut z.moves {
            m.prob *= factor;
        }
        changed.insert(s);
    }
    Ok(AdjustedPolicy {
        model: out,
        changed,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneXg {
    pub zone: ZoneId,
    pub goal_prob: f64,
    pub effective: f64,
    /// The zone had too few shot samples; no quality shift was applied.
    pub fallback: bool,
}

/// Per-zone goal probability of the counterfactual shots. With `quality`
/// off every zone keeps its xG.
pub fn adjusted_xg(
    model: &TeamModel,
    adjusted: &BTreeSet<ZoneId>,
    x: f64,
    baseline_shots: &[f64],
    counterfactual_shots: &[f64],
    quality: bool,
) -> Vec<ZoneXg> {
    model
        .zones
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let s = ZoneId(i);
            let g = z.shot_goal;
            let keep = ZoneXg {
                zone: s,
                goal_prob: g,
                effective: g,
                fallback: false,
            };
            if !quality || x == 0.0 || !adjusted.contains(&s) {
                return keep;
            }
            let q = shot_quality_stats(model, s, x.abs());
            let effective = if x > 0.0 {
                let (base, counter) = (baseline_shots[i], counterfactual_shots[i]);
                let extra = counter - base;
                if extra <= 0.0 || counter <= 0.0 {
                    g
                } else {
                    let extra_xg = (g - (q.mean - q.low)).clamp(0.0, 1.0);
                    (base * g + extra * extra_xg) / counter
                }
            } else {
                (g + (q.high - q.mean)).clamp(0.0, 1.0)
            };
            ZoneXg {
                effective,
                fallback: q.fallback,
                ..keep
            }
        })
        .collect()
}

/// Expected shots and goals of a model over a season's start counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub shots: Vec<f64>,
    pub goals: f64,
}

impl Baseline {
    pub fn compute(model: &TeamModel, start_counts: &[f64]) -> Result<Self, PolicyError> {
        if start_counts.len() != model.field_count() {
            return Err(PolicyError::StartCounts {
                got: start_counts.len(),
                expected: model.field_count(),
            });
        }
        let chain = InducedChain::from_model(model);
        let shots = expected_shots_solve(&chain, start_counts)?;
        let goals = expected_goals(&shots, chain.goal_prob.as_slice());
        Ok(Self { shots, goals })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneShotDelta {
    pub zone: ZoneId,
    pub baseline: f64,
    pub counterfactual: f64,
    pub delta: f64,
    pub goal_prob: f64,
    pub effective_xg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonReport {
    pub team_id: String,
    pub x: f64,
    pub zones: Vec<ZoneId>,
    pub quality_adjust: bool,
    pub baseline_goals: f64,
    pub counterfactual_goals: f64,
    pub delta_goals: f64,
    /// Zones where either policy expects shots.
    pub zone_shots: Vec<ZoneShotDelta>,
    pub warnings: Vec<AdjustWarning>,
    pub actual_goals: u64,
    /// `|baseline − actual| / actual`, absent without goals.
    pub baseline_relative_error: Option<f64>,
}

pub fn season_whatif(
    model: &TeamModel,
    adj: &PolicyAdjustment,
    start_counts: &[f64],
    quality: bool,
) -> Result<SeasonReport, PolicyError> {
    let baseline = Baseline::compute(model, start_counts)?;
    season_whatif_from(model, &baseline, adj, start_counts, quality)
}

/// [`season_whatif`] against a precomputed baseline.
pub fn season_whatif_from(
    model: &TeamModel,
    baseline: &Baseline,
    adj: &PolicyAdjustment,
    start_counts: &[f64],
    quality: bool,
) -> Result<SeasonReport, PolicyError> {
    let adjusted = adjust_policy(model, adj)?;
    let counter_shots = if adjusted.changed.is_empty() {
        baseline.shots.clone()
    } else {
        Baseline::compute(&adjusted.model, start_counts)?.shots
    };
    let xg = adjusted_xg(
        model,
        &adjusted.changed,
        adj.x,
        &baseline.shots,
        &counter_shots,
        quality,
    );
    let effective: Vec<f64> = xg.iter().map(|z| z.effective).collect();
    let counterfactual_goals = if adjusted.changed.is_empty() {
        baseline.goals
    } else {
        expected_goals(&counter_shots, &effective)
    };
    let zone_shots = xg
        .iter()
        .zip(baseline.shots.iter().zip(&counter_shots))
        .filter(|(_, (b, c))| **b > 0.0 || **c > 0.0)
        .map(|(z, (b, c))| ZoneShotDelta {
            zone: z.zone,
            baseline: *b,
            counterfactual: *c,
            delta: c - b,
            goal_prob: z.goal_prob,
            effective_xg: z.effective,
        })
        .collect();
    let actual = model.goal_count;
    Ok(SeasonReport {
        team_id: model.team_id.clone(),
        x: adj.x,
        zones: adj.zones.iter().copied().collect(),
        quality_adjust: quality,
        baseline_goals: baseline.goals,
        counterfactual_goals,
        delta_goals: counterfactual_goals - baseline.goals,
        zone_shots,
        warnings: adjusted.warnings,
        actual_goals: actual,
        baseline_relative_error: (actual > 0).then(|| (baseline.goals - actual as f64).abs() / actual as f64),
    })
}

/// Zones of `candidates` that shoot and where shooting now beats the
/// `k`-move scenario.
pub fn targeted_zone_selection(
    model: &TeamModel,
    candidates: &RegionMask,
    k: usize,
) -> Result<RegionMask, PolicyError> {
    let mut chosen = Vec::new();
    for s in candidates.iter() {
        if s.0 >= model.field_count() {
            return Err(PolicyError::UnknownZone(s));
        }
        if model.zone(s).shoot <= 0.0 {
            continue;
        }
        let r = eval_k_moves_then_shoot(model, s, k, None)?;
        if r.direct_shot > r.probability {
            chosen.push(s);
        }
    }
    Ok(RegionMask::new(format!("{}_shoot_better", candidates.name), chosen))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCheck {
    pub team_id: String,
    pub expected_goals: f64,
    pub actual_goals: u64,
    pub relative_error: f64,
}

/// Compares the model's expected goals over the possessions' start states
/// with the goals actually scored in them.
pub fn validate_baseline(model: &TeamModel, possessions: &[Possession]) -> Result<BaselineCheck, PolicyError> {
    let starts = start_state_counts(possessions, &model.grid)?;
    let mut counts = vec![0.0; model.field_count()];
    for (z, c) in starts {
        counts[z.0] = c as f64;
    }
    let actual = possessions.iter().filter(|p| p.is_goal()).count() as u64;
    if actual == 0 {
        return Err(PolicyError::NoGoals(model.team_id.clone()));
    }
    let expected = Baseline::compute(model, &counts)?.goals;
    Ok(BaselineCheck {
        team_id: model.team_id.clone(),
        expected_goals: expected,
        actual_goals: actual,
        relative_error: (expected - actual as f64).abs() / actual as f64,
    })
}

pub fn league_relative_error(checks: &[BaselineCheck]) -> Option<f64> {
    (!checks.is_empty()).then(|| checks.iter().map(|c| c.relative_error).sum::<f64>() / checks.len() as f64)
}
