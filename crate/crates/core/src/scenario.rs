//! Exact probabilities for constrained action sequences.
//!
//! Move scenarios propagate a distribution forward: at each forced move the
//! policy is renormalized over the admissible move actions (shooting is not
//! admissible), and after the last move the shot is taken for sure.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Factored, InducedChain, SolverError};
use crate::grid::{RegionMask, ZoneId};
use crate::model::TeamModel;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("move scenarios need k >= 1")]
    ZeroMoves,
    #[error("zone {0} is not a field state of the model")]
    UnknownZone(ZoneId),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenarioKind {
    DirectShot,
    /// Exactly `k` moves, then a shot. The first move may be restricted.
    KMovesThenShoot {
        k: usize,
        first_move_mask: Option<RegionMask>,
    },
    /// The possession's shot is taken from a zone with xG above the threshold
    /// (default: the start zone's xG).
    BetterShotEver {
        threshold: Option<f64>,
    },
}

impl ScenarioKind {
    pub fn k_moves(k: usize) -> Self {
        ScenarioKind::KMovesThenShoot {
            k,
            first_move_mask: None,
        }
    }

    /// Two moves, the first into the flank, then a shot.
    pub fn flank_first_then_shoot(flank: RegionMask) -> Self {
        ScenarioKind::KMovesThenShoot {
            k: 2,
            first_move_mask: Some(flank),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub zone: ZoneId,
    /// Scoring probability, or the better-shot probability.
    pub probability: f64,
    /// xG of shooting immediately from `zone`.
    pub direct_shot: f64,
    /// `probability − direct_shot`; negative means shooting now is better.
    /// Absent for the better-shot event, which is not a scoring probability.
    pub delta: Option<f64>,
    pub no_admissible_action: bool,
}

fn check_zone(model: &TeamModel, z: ZoneId) -> Result<(), ScenarioError> {
    if z.0 < model.field_count() {
        Ok(())
    } else {
        Err(ScenarioError::UnknownZone(z))
    }
}

pub fn eval_direct_shot(model: &TeamModel, start: ZoneId) -> Result<ScenarioResult, ScenarioError> {
    check_zone(model, start)?;
    let g = model.goal_prob(start);
    Ok(ScenarioResult {
        zone: start,
        probability: g,
        direct_shot: g,
        delta: Some(0.0),
        no_admissible_action: false,
    })
}

/// One forced move from every zone of `dist`, with the policy renormalized
/// over moves whose target passes `mask`. Returns the distribution after
/// successful moves and whether any mass had nowhere to go.
fn forced_move(model: &TeamModel, dist: &[f64], mask: Option<&RegionMask>) -> (Vec<f64>, bool) {
    let mut next = vec![0.0; dist.len()];
    let mut stuck = false;
    for (s, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let admissible = || {
            model.zones[s]
                .moves
                .iter()
                .filter(|m| m.prob > 0.0 && mask.is_none_or(|mask| mask.contains(m.to)))
        };
        let total: f64 = admissible().map(|m| m.prob).sum();
        if total <= 0.0 {
            stuck = true;
            continue;
        }
        for m in admissible() {
            next[m.to.0] += mass * (m.prob / total) * m.success;
        }
    }
    (next, stuck)
}

pub fn eval_k_moves_then_shoot(
    model: &TeamModel,
    start: ZoneId,
    k: usize,
    first_move_mask: Option<&RegionMask>,
) -> Result<ScenarioResult, ScenarioError> {
    check_zone(model, start)?;
    if k == 0 {
        return Err(ScenarioError::ZeroMoves);
    }
    let mut dist = vec![0.0; model.field_count()];
    dist[start.0] = 1.0;
    let (first, stuck) = forced_move(model, &dist, first_move_mask);
    dist = first;
    for _ in 1..k {
        dist = forced_move(model, &dist, None).0;
    }
    let probability = if stuck {
        0.0
    } else {
        dist.iter()
            .zip(&model.zones)
            .map(|(v, z)| v * z.shot_goal)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    };
    let direct = model.goal_prob(start);
    Ok(ScenarioResult {
        zone: start,
        probability,
        direct_shot: direct,
        delta: Some(probability - direct),
        no_admissible_action: stuck,
    })
}

/// `x = b + Q x` with `b(s) = π(shoot|s) · 1[goal_prob(s) > threshold]`.
pub fn better_shot_values(chain: &InducedChain, factored: &Factored, threshold: f64) -> Vec<f64> {
    let b = DVector::from_iterator(
        chain.len(),
        chain
            .shoot_prob
            .iter()
            .zip(chain.goal_prob.iter())
            .map(|(p, g)| if *g > threshold { *p } else { 0.0 }),
    );
    factored.solve(&b).iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

pub fn eval_better_shot_ever(
    model: &TeamModel,
    start: ZoneId,
    threshold: Option<f64>,
) -> Result<ScenarioResult, ScenarioError> {
    check_zone(model, start)?;
    let chain = InducedChain::from_model(model);
    let factored = Factored::new(&chain)?;
    let t = threshold.unwrap_or_else(|| model.goal_prob(start));
    Ok(better_shot_result(
        model,
        start,
        better_shot_values(&chain, &factored, t)[start.0],
    ))
}

fn better_shot_result(model: &TeamModel, start: ZoneId, p: f64) -> ScenarioResult {
    ScenarioResult {
        zone: start,
        probability: p,
        direct_shot: model.goal_prob(start),
        delta: None,
        no_admissible_action: false,
    }
}

pub fn evaluate(model: &TeamModel, kind: &ScenarioKind, start: ZoneId) -> Result<ScenarioResult, ScenarioError> {
    match kind {
        ScenarioKind::DirectShot => eval_direct_shot(model, start),
        ScenarioKind::KMovesThenShoot { k, first_move_mask } => {
            eval_k_moves_then_shoot(model, start, *k, first_move_mask.as_ref())
        }
        ScenarioKind::BetterShotEver { threshold } => eval_better_shot_ever(model, start, *threshold),
    }
}

/// Evaluates `kind` from every zone of `region`, in zone order.
pub fn batch_heatmap(
    model: &TeamModel,
    kind: &ScenarioKind,
    region: &RegionMask,
) -> Result<Vec<ScenarioResult>, ScenarioError> {
    for z in region.iter() {
        check_zone(model, z)?;
    }
    let zones: Vec<ZoneId> = region.iter().collect();
    match kind {
        ScenarioKind::BetterShotEver { threshold } => {
            // one factorization, one solve per distinct threshold
            let chain = InducedChain::from_model(model);
            let factored = Factored::new(&chain)?;
            let mut by_threshold: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            Ok(zones
                .iter()
                .map(|&z| {
                    let t = threshold.unwrap_or_else(|| model.goal_prob(z));
                    let values = by_threshold
                        .entry(t.to_bits())
                        .or_insert_with(|| better_shot_values(&chain, &factored, t));
                    better_shot_result(model, z, values[z.0])
                })
                .collect())
        }
        _ => zones.par_iter().map(|&z| evaluate(model, kind, z)).collect(),
    }
}
