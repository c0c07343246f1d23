//! One team's MDP: policy, move/shot success probabilities and per-zone
//! shot-quality samples, estimated from possessions by counting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{start_state_counts, Possession};
use crate::grid::{zone_of, Absorbing, GridError, GridSpec, State, ZoneId};
use crate::intent::{resolve_intent, DestinationHistogram, IntentError, IntentMode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("team {0} has no events")]
    NoEvents(String),
    #[error("pool grid {pool:?} does not match model grid {model:?}")]
    PoolMismatch { pool: GridSpec, model: GridSpec },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("model artifact: {0}")]
    Artifact(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "to")]
pub enum Action {
    Shoot,
    MoveTo(ZoneId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveEntry {
    pub to: ZoneId,
    /// π(move_to(to) | s)
    pub prob: f64,
    /// P(s, move_to(to), to)
    pub success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneModel {
    pub zone: ZoneId,
    /// π(shoot | s)
    pub shoot: f64,
    /// P(s, shoot, goal): the location-based xG of the zone.
    pub shot_goal: f64,
    /// Sorted by target zone.
    pub moves: Vec<MoveEntry>,
    /// Provider shot-quality values of shots taken here.
    pub shot_samples: Vec<f64>,
    /// c_s, the number of observed actions starting here.
    pub action_count: f64,
    pub start_count: u64,
}

impl ZoneModel {
    pub fn empty(zone: ZoneId) -> Self {
        Self {
            zone,
            shoot: 0.0,
            shot_goal: 0.0,
            moves: Vec::new(),
            shot_samples: Vec::new(),
            action_count: 0.0,
            start_count: 0,
        }
    }

    pub fn move_mass(&self) -> f64 {
        self.moves.iter().map(|m| m.prob).sum()
    }

    /// No behavioural evidence: the zone acts as an immediate loss.
    pub fn is_inert(&self) -> bool {
        self.shoot <= 0.0 && self.moves.iter().all(|m| m.prob <= 0.0)
    }

    pub fn move_to(&self, to: ZoneId) -> Option<&MoveEntry> {
        self.moves
            .binary_search_by_key(&to, |m| m.to)
            .ok()
            .map(|i| &self.moves[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamModel {
    pub version: u32,
    pub team_id: String,
    pub grid: GridSpec,
    pub possession_count: u64,
    pub goal_count: u64,
    pub zones: Vec<ZoneModel>,
}

impl TeamModel {
    /// A model with every zone inert, for hand construction.
    pub fn blank(team_id: impl Into<String>, grid: GridSpec) -> Self {
        Self {
            version: MODEL_FORMAT_VERSION,
            team_id: team_id.into(),
            grid,
            possession_count: 0,
            goal_count: 0,
            zones: grid.zones().map(ZoneModel::empty).collect(),
        }
    }

    pub fn zone(&self, z: ZoneId) -> &ZoneModel {
        &self.zones[z.0]
    }

    pub fn zone_mut(&mut self, z: ZoneId) -> &mut ZoneModel {
        &mut self.zones[z.0]
    }

    pub fn field_count(&self) -> usize {
        self.zones.len()
    }

    pub fn goal_prob(&self, z: ZoneId) -> f64 {
        self.zones[z.0].shot_goal
    }

    pub fn start_counts(&self) -> Vec<f64> {
        self.zones.iter().map(|z| z.start_count as f64).collect()
    }

    /// Actions available in a field state with their policy probabilities.
    pub fn actions(&self, s: ZoneId) -> Vec<(Action, f64)> {
        let z = self.zone(s);
        let mut out = Vec::with_capacity(z.moves.len() + 1);
        if z.shoot > 0.0 {
            out.push((Action::Shoot, z.shoot));
        }
        out.extend(
            z.moves
                .iter()
                .filter(|m| m.prob > 0.0)
                .map(|m| (Action::MoveTo(m.to), m.prob)),
        );
        out
    }

    /// Outcome distribution P(s, a, ·). Absorbing states only self-loop.
    pub fn transitions(&self, s: State, a: Action) -> Vec<(State, f64)> {
        let zone = match s {
            State::Absorbing(_) => return vec![(s, 1.0)],
            State::Field(z) => self.zone(z),
        };
        match a {
            Action::Shoot => vec![
                (State::Absorbing(Absorbing::Goal), zone.shot_goal),
                (State::Absorbing(Absorbing::NoGoal), 1.0 - zone.shot_goal),
            ],
            Action::MoveTo(to) => {
                let p = zone.move_to(to).map_or(0.0, |m| m.success);
                vec![(State::Field(to), p), (State::Absorbing(Absorbing::Loss), 1.0 - p)]
            }
        }
    }

    /// Reward of a transition: one for scoring from a field state.
    pub fn reward(from: State, to: State) -> f64 {
        match (from, to) {
            (State::Field(_), State::Absorbing(Absorbing::Goal)) => 1.0,
            _ => 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(|e| ModelError::Artifact(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let model: TeamModel = serde_json::from_str(text).map_err(|e| ModelError::Artifact(e.to_string()))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Artifact(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        if model.zones.len() != model.grid.field_count() {
            return Err(ModelError::Artifact(format!(
                "{} zones for a grid with {} field states",
                model.zones.len(),
                model.grid.field_count()
            )));
        }
        Ok(model)
    }
}

/// Raw (possibly fractional) action counts for one zone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZoneCounts {
    pub actions: f64,
    pub shots: f64,
    pub goals: f64,
    /// target → (attempts, successes)
    pub moves: BTreeMap<ZoneId, (f64, f64)>,
    pub shot_xg: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamCounts {
    pub grid: GridSpec,
    pub zones: Vec<ZoneCounts>,
    pub start: BTreeMap<ZoneId, u64>,
    pub possessions: u64,
    pub goals: u64,
    /// Failed moves whose destination prior was unavailable.
    pub intent_fallbacks: usize,
}

impl TeamCounts {
    pub fn empty(grid: GridSpec) -> Self {
        Self {
            grid,
            zones: vec![ZoneCounts::default(); grid.field_count()],
            start: BTreeMap::new(),
            possessions: 0,
            goals: 0,
            intent_fallbacks: 0,
        }
    }

    pub fn tally(possessions: &[Possession], grid: &GridSpec, intent: IntentMode) -> Result<Self, ModelError> {
        let mut counts = Self::empty(*grid);
        let events = possessions.iter().flat_map(|p| p.events.iter());
        let histogram = DestinationHistogram::from_events(events.clone(), grid)?;
        for e in events {
            let s = zone_of(e.start, grid)?;
            let zc = &mut counts.zones[s.0];
            zc.actions += 1.0;
            if e.is_shot() {
                zc.shots += 1.0;
                if e.success {
                    zc.goals += 1.0;
                }
                zc.shot_xg.push(e.shot_xg);
            } else if e.success {
                let to = zone_of(e.end.expect("moves carry an end"), grid)?;
                let entry = zc.moves.entry(to).or_insert((0.0, 0.0));
                entry.0 += 1.0;
                entry.1 += 1.0;
            } else {
                let attribution = resolve_intent(e, &histogram, intent, grid)?;
                if attribution.fallback {
                    counts.intent_fallbacks += 1;
                }
                let zc = &mut counts.zones[s.0];
                for (to, w) in attribution.weights {
                    zc.moves.entry(to).or_insert((0.0, 0.0)).0 += w;
                }
            }
        }
        counts.start = start_state_counts(possessions, grid)?;
        counts.possessions = possessions.len() as u64;
        counts.goals = possessions.iter().filter(|p| p.is_goal()).count() as u64;
        Ok(counts)
    }

    /// Adds another team's counts (league pooling).
    pub fn absorb(&mut self, other: &TeamCounts) {
        for (mine, theirs) in self.zones.iter_mut().zip(&other.zones) {
            mine.actions += theirs.actions;
            mine.shots += theirs.shots;
            mine.goals += theirs.goals;
            for (to, (a, s)) in &theirs.moves {
                let e = mine.moves.entry(*to).or_insert((0.0, 0.0));
                e.0 += a;
                e.1 += s;
            }
        }
        for (z, c) in &other.start {
            *self.start.entry(*z).or_insert(0) += c;
        }
        self.possessions += other.possessions;
        self.goals += other.goals;
    }

    pub fn pooled<'a>(grid: GridSpec, teams: impl IntoIterator<Item = &'a TeamCounts>) -> Self {
        let mut pool = Self::empty(grid);
        for t in teams {
            pool.absorb(t);
        }
        pool
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub intent: IntentMode,
    /// Additive smoothing on action selection and success rates.
    pub alpha: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            intent: IntentMode::default(),
            alpha: 0.5,
        }
    }
}

/// Fits one team's model. Smoothing only spreads mass over actions seen
/// somewhere in `pool` (the league); success rates shrink towards the
/// pooled rate. Without a pool the team is its own pool.
pub fn fit_team_model(
    team_id: &str,
    possessions: &[Possession],
    grid: &GridSpec,
    options: &FitOptions,
    pool: Option<&TeamCounts>,
) -> Result<TeamModel, ModelError> {
    if possessions.iter().all(|p| p.events.is_empty()) {
        return Err(ModelError::NoEvents(team_id.to_string()));
    }
    let counts = TeamCounts::tally(possessions, grid, options.intent)?;
    fit_from_counts(team_id, &counts, options.alpha, pool.unwrap_or(&counts))
}

pub fn fit_from_counts(
    team_id: &str,
    counts: &TeamCounts,
    alpha: f64,
    pool: &TeamCounts,
) -> Result<TeamModel, ModelError> {
    if pool.grid != counts.grid {
        return Err(ModelError::PoolMismatch {
            pool: pool.grid,
            model: counts.grid,
        });
    }
    let grid = counts.grid;
    let mut model = TeamModel::blank(team_id, grid);
    model.possession_count = counts.possessions;
    model.goal_count = counts.goals;

    for (i, (team, league)) in counts.zones.iter().zip(&pool.zones).enumerate() {
        let zm = &mut model.zones[i];
        zm.action_count = team.actions;
        zm.start_count = counts.start.get(&ZoneId(i)).copied().unwrap_or(0);

        let pooled_goal = ratio(league.goals, league.shots);
        zm.shot_goal = match smoothed(team.goals, team.shots, alpha, pooled_goal) {
            Some(p) => p,
            None => pooled_goal.unwrap_or(0.0),
        };

        if team.actions > 0.0 {
            let shoot_known = league.shots > 0.0;
            let known_moves = league.moves.iter().filter(|(_, (a, _))| *a > 0.0);
            let n_actions = shoot_known as usize as f64 + known_moves.clone().count() as f64;
            let denom = team.actions + alpha * n_actions;
            if shoot_known {
                zm.shoot = (team.shots + alpha) / denom;
            }
            for (&to, &(league_att, league_succ)) in known_moves {
                let (att, succ) = team.moves.get(&to).copied().unwrap_or((0.0, 0.0));
                let prob = (att + alpha) / denom;
                let pooled = league_succ / league_att;
                let success = smoothed(succ, att, alpha, Some(pooled)).unwrap_or(pooled);
                if prob > 0.0 {
                    zm.moves.push(MoveEntry { to, prob, success });
                }
            }
        }

        let fallback_xg = zm.shot_goal;
        zm.shot_samples = team.shot_xg.iter().map(|x| x.unwrap_or(fallback_xg)).collect();
    }
    Ok(model)
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn smoothed(hits: f64, trials: f64, alpha: f64, prior: Option<f64>) -> Option<f64> {
    let prior = prior.unwrap_or(0.0);
    let den = trials + alpha;
    (den > 0.0).then(|| ((hits + alpha * prior) / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub zone: Option<ZoneId>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub team_id: String,
    pub violations: Vec<Violation>,
    /// c_s per zone.
    pub support: Vec<f64>,
    pub inert_zones: usize,
    pub inert_fraction: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const SIMPLEX_TOL: f64 = 1e-9;

pub fn validate_model(model: &TeamModel) -> ValidationReport {
    let mut violations = Vec::new();
    let mut flag = |zone: Option<ZoneId>, message: String| violations.push(Violation { zone, message });
    let unit = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);

    if let Err(e) = model.grid.check() {
        flag(None, e.to_string());
    }
    if model.zones.len() != model.grid.field_count() {
        flag(
            None,
            format!(
                "{} zones for {} field states",
                model.zones.len(),
                model.grid.field_count()
            ),
        );
    }
    for (i, z) in model.zones.iter().enumerate() {
        let id = Some(ZoneId(i));
        if z.zone != ZoneId(i) {
            flag(id, format!("zone entry labelled {}", z.zone));
        }
        if !unit(z.shoot) {
            flag(id, format!("shoot probability {} outside [0, 1]", z.shoot));
        }
        if !unit(z.shot_goal) {
            flag(id, format!("shot goal probability {} outside [0, 1]", z.shot_goal));
        }
        for m in &z.moves {
            if !model.grid.contains(m.to) {
                flag(id, format!("move to {} is not a field state", m.to));
            }
            if !unit(m.prob) || !unit(m.success) {
                flag(
                    id,
                    format!(
                        "move to {}: probabilities ({}, {}) outside [0, 1]",
                        m.to, m.prob, m.success
                    ),
                );
            }
        }
        if z.moves.windows(2).any(|w| w[0].to >= w[1].to) {
            flag(id, "move targets not strictly sorted".into());
        }
        if let Some(x) = z.shot_samples.iter().find(|x| !unit(**x)) {
            flag(id, format!("shot sample {x} outside [0, 1]"));
        }
        if !z.is_inert() {
            let total = z.shoot + z.move_mass();
            if (total - 1.0).abs() > SIMPLEX_TOL {
                flag(id, format!("policy sums to {total}"));
            }
            for (a, _) in model.actions(ZoneId(i)) {
                let out: f64 = model
                    .transitions(State::Field(ZoneId(i)), a)
                    .iter()
                    .map(|(_, p)| p)
                    .sum();
                if (out - 1.0).abs() > SIMPLEX_TOL {
                    flag(id, format!("{a:?} outcomes sum to {out}"));
                }
            }
        }
    }
    let inert_zones = model.zones.iter().filter(|z| z.is_inert()).count();
    ValidationReport {
        team_id: model.team_id.clone(),
        violations,
        support: model.zones.iter().map(|z| z.action_count).collect(),
        inert_zones,
        inert_fraction: inert_zones as f64 / model.zones.len().max(1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotQuality {
    /// μ_s, mean of the zone's shot-quality samples.
    pub mean: f64,
    /// μ_s^low, mean of the samples strictly below `mean`.
    pub low: f64,
    /// μ_s^high, mean after dropping the lowest ⌊x·n⌋ samples.
    pub high: f64,
    /// Too few samples; all three equal the zone xG.
    pub fallback: bool,
}

/// Shot-quality summary of a zone for a shooting decrease of `x` (0 ≤ x < 1).
pub fn shot_quality_stats(model: &TeamModel, s: ZoneId, x: f64) -> ShotQuality {
    let zone = model.zone(s);
    if zone.shot_samples.len() < 2 {
        let g = zone.shot_goal;
        return ShotQuality {
            mean: g,
            low: g,
            high: g,
            fallback: true,
        };
    }
    let mut sorted = zone.shot_samples.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let below: Vec<f64> = sorted.iter().copied().filter(|v| *v < mean).collect();
    let low = if below.is_empty() {
        mean
    } else {
        below.iter().sum::<f64>() / below.len() as f64
    };
    // the tiny slack keeps e.g. 0.1 * 10 from flooring to 0
    let drop = ((x.clamp(0.0, 1.0) * n as f64 + 1e-9).floor() as usize).min(n - 1);
    let kept = &sorted[drop..];
    let high = kept.iter().sum::<f64>() / kept.len() as f64;
    ShotQuality {
        mean,
        low,
        high,
        fallback: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{segment_possessions, Event, EventKind};
    use crate::grid::zone_center;

    fn grid() -> GridSpec {
        GridSpec::with_cells(4, 3).unwrap()
    }

    fn event(seq: u64, kind: EventKind, from: ZoneId, to: ZoneId, success: bool) -> Event {
        let g = grid();
        Event {
            match_id: "m".into(),
            team_id: "t".into(),
            seq,
            kind,
            start: zone_center(from, &g),
            end: Some(zone_center(to, &g)),
            success,
            shot_xg: None,
            restart: true,
        }
    }

    /// 10 actions from zone 5: 2 shots (1 goal) and 8 moves to zone 9 (6 ok).
    fn ten_action_zone() -> Vec<Possession> {
        let (s, z) = (ZoneId(5), ZoneId(9));
        let mut ev = Vec::new();
        let mut seq = 0;
        let mut push = |kind, to, ok| {
            seq += 1;
            ev.push(event(seq, kind, s, to, ok));
        };
        push(EventKind::Shot, s, true);
        push(EventKind::Shot, s, false);
        for i in 0..8 {
            push(EventKind::MoveAttempt, z, i < 6);
        }
        segment_possessions(&ev)
    }

    #[test]
    fn direct_ratios_without_smoothing() {
        let opts = FitOptions {
            intent: IntentMode::ObservedEnd,
            alpha: 0.0,
        };
        let m = fit_team_model("t", &ten_action_zone(), &grid(), &opts, None).unwrap();
        let z = m.zone(ZoneId(5));
        assert_eq!(z.action_count, 10.0);
        assert!((z.shoot - 0.2).abs() < 1e-12);
        assert!((z.shot_goal - 0.5).abs() < 1e-12);
        let mv = z.move_to(ZoneId(9)).unwrap();
        assert!((mv.prob - 0.8).abs() < 1e-12);
        assert!((mv.success - 0.75).abs() < 1e-12);
        assert_eq!(m.possession_count, 10);
        assert_eq!(m.goal_count, 1);
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn all_failed_moves_go_to_loss() {
        let ev: Vec<Event> = (0..4)
            .map(|i| event(i, EventKind::MoveAttempt, ZoneId(3), ZoneId(7), false))
            .collect();
        let opts = FitOptions {
            intent: IntentMode::ObservedEnd,
            alpha: 0.0,
        };
        let m = fit_team_model("t", &segment_possessions(&ev), &grid(), &opts, None).unwrap();
        let out = m.transitions(State::Field(ZoneId(3)), Action::MoveTo(ZoneId(7)));
        assert_eq!(out[1], (State::Absorbing(Absorbing::Loss), 1.0));
        assert_eq!(out[0].1, 0.0);
    }

    #[test]
    fn counts_are_conserved_with_observed_end() {
        let counts = TeamCounts::tally(&ten_action_zone(), &grid(), IntentMode::ObservedEnd).unwrap();
        for z in &counts.zones {
            let moves: f64 = z.moves.values().map(|(a, _)| a).sum();
            assert_eq!(moves + z.shots, z.actions);
        }
    }

    #[test]
    fn smoothing_keeps_simplex_and_only_known_actions() {
        let opts = FitOptions {
            intent: IntentMode::Blended(0.5),
            alpha: 0.5,
        };
        let m = fit_team_model("t", &ten_action_zone(), &grid(), &opts, None).unwrap();
        let z = m.zone(ZoneId(5));
        assert_eq!(z.moves.len(), 1);
        assert!((z.shoot + z.move_mass() - 1.0).abs() < 1e-12);
        // (2 + 0.5) / (10 + 1)
        assert!((z.shoot - 2.5 / 11.0).abs() < 1e-12);
        assert!(validate_model(&m).is_valid());
        assert!(m.zone(ZoneId(0)).is_inert());
    }

    #[test]
    fn pooled_smoothing_borrows_league_actions() {
        let g = grid();
        let mine = TeamCounts::tally(&ten_action_zone(), &g, IntentMode::ObservedEnd).unwrap();
        let other_events = vec![event(1, EventKind::MoveAttempt, ZoneId(5), ZoneId(2), true)];
        let other = TeamCounts::tally(&segment_possessions(&other_events), &g, IntentMode::ObservedEnd).unwrap();
        let pool = TeamCounts::pooled(g, [&mine, &other]);
        let m = fit_from_counts("t", &mine, 1.0, &pool).unwrap();
        let z = m.zone(ZoneId(5));
        let borrowed = z.move_to(ZoneId(2)).unwrap();
        assert!((borrowed.prob - 1.0 / 13.0).abs() < 1e-12);
        assert!((borrowed.success - 1.0).abs() < 1e-12);
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn empty_team_is_an_error() {
        assert!(matches!(
            fit_team_model("t", &[], &grid(), &FitOptions::default(), None),
            Err(ModelError::NoEvents(_))
        ));
    }

    #[test]
    fn missing_xg_uses_zone_xg() {
        let opts = FitOptions {
            intent: IntentMode::ObservedEnd,
            alpha: 0.0,
        };
        let m = fit_team_model("t", &ten_action_zone(), &grid(), &opts, None).unwrap();
        assert_eq!(m.zone(ZoneId(5)).shot_samples, vec![0.5, 0.5]);
    }

    #[test]
    fn validation_flags_bad_rows() {
        let mut m = TeamModel::blank("t", grid());
        m.zone_mut(ZoneId(1)).shoot = 0.4;
        m.zone_mut(ZoneId(1)).moves.push(MoveEntry {
            to: ZoneId(2),
            prob: 0.5,
            success: 0.5,
        });
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].zone, Some(ZoneId(1)));

        m.zone_mut(ZoneId(1)).moves[0].prob = 0.6;
        m.zone_mut(ZoneId(2)).shot_goal = 1.2;
        m.zone_mut(ZoneId(2)).shoot = 1.0;
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.inert_zones, m.field_count() - 2);
    }

    #[test]
    fn absorbing_states_self_loop() {
        let m = TeamModel::blank("t", grid());
        for a in [Absorbing::Goal, Absorbing::NoGoal, Absorbing::Loss] {
            let s = State::Absorbing(a);
            assert_eq!(m.transitions(s, Action::Shoot), vec![(s, 1.0)]);
        }
        assert_eq!(
            TeamModel::reward(State::Field(ZoneId(1)), State::Absorbing(Absorbing::Goal)),
            1.0
        );
        assert_eq!(
            TeamModel::reward(State::Absorbing(Absorbing::Goal), State::Absorbing(Absorbing::Goal)),
            0.0
        );
    }

    #[test]
    fn quality_stats_examples() {
        let mut m = TeamModel::blank("t", grid());
        m.zone_mut(ZoneId(4)).shot_samples = vec![0.30, 0.02, 0.08, 0.04, 0.06];
        let q = shot_quality_stats(&m, ZoneId(4), 0.2);
        assert!((q.mean - 0.10).abs() < 1e-12);
        assert!((q.low - 0.05).abs() < 1e-12);
        assert!((q.high - 0.12).abs() < 1e-12);
        assert!(!q.fallback);
        assert!(q.low <= q.mean && q.mean <= q.high);

        let q0 = shot_quality_stats(&m, ZoneId(4), 0.0);
        assert!((q0.high - q0.mean).abs() < 1e-12);
    }

    #[test]
    fn quality_stats_fallback() {
        let mut m = TeamModel::blank("t", grid());
        let z = m.zone_mut(ZoneId(4));
        z.shot_goal = 0.07;
        z.shot_samples = vec![0.5];
        let q = shot_quality_stats(&m, ZoneId(4), 0.3);
        assert_eq!((q.mean, q.low, q.high, q.fallback), (0.07, 0.07, 0.07, true));
    }

    #[test]
    fn artifact_round_trip_and_version_check() {
        let m = fit_team_model("t", &ten_action_zone(), &grid(), &FitOptions::default(), None).unwrap();
        let text = m.to_json().unwrap();
        assert_eq!(TeamModel::from_json(&text).unwrap(), m);
        let bumped = text.replacen("\"version\": 1", "\"version\": 9", 1);
        assert!(TeamModel::from_json(&bumped).is_err());
    }
}
