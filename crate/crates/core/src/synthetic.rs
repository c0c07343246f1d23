//! Ground-truth models and Monte Carlo possessions.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Parallel rollouts run in fixed chunks of
//! [`ROLLOUT_CHUNK`]; chunk `i` uses stream `i` of the seeded generator, so
//! results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{segment_possessions, Event, EventKind, Possession};
use crate::grid::{cell_bounds, zone_center, GridSpec, ZoneId, PENALTY_BOX_DEPTH_M};
use crate::model::{MoveEntry, TeamModel};

pub const MAX_POSSESSION_STEPS: usize = 10_000;
pub const ROLLOUT_CHUNK: usize = 4096;
/// Possessions per synthetic match when writing corpora.
pub const POSSESSIONS_PER_MATCH: usize = 120;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("possession did not reach an absorbing state within {0} steps")]
    NoAbsorption(usize),
    #[error("no zone with behaviour has a positive start weight")]
    NoStartZone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthModel {
    pub model: TeamModel,
    pub seed: u64,
}

impl GroundTruthModel {
    pub fn new(model: TeamModel, seed: u64) -> Self {
        Self { model, seed }
    }

    pub fn sample(&self, n: usize) -> Result<Vec<Possession>, SimError> {
        sample_possessions(self, n, self.seed)
    }
}

/// The two-zone chain used throughout the docs and tests. F1 is zone 0
/// (shoot 0.2 at xG 0.1, else move to F2 with success 0.75); F2 is zone 1
/// (shoot 0.5 at xG 0.3, else move to F1 with success 0.8). One possession
/// starts in F1.
pub fn toy_chain_model() -> TeamModel {
    let grid = GridSpec::with_cells(1, 1).expect("1x1 grid");
    let mut m = TeamModel::blank("toy", grid);
    let f1 = m.zone_mut(ZoneId(0));
    f1.shoot = 0.2;
    f1.shot_goal = 0.1;
    f1.moves = vec![MoveEntry {
        to: ZoneId(1),
        prob: 0.8,
        success: 0.75,
    }];
    f1.action_count = 10.0;
    f1.start_count = 1;
    let f2 = m.zone_mut(ZoneId(1));
    f2.shoot = 0.5;
    f2.shot_goal = 0.3;
    f2.moves = vec![MoveEntry {
        to: ZoneId(0),
        prob: 0.5,
        success: 0.8,
    }];
    f2.action_count = 10.0;
    m.possession_count = 1;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomModelOptions {
    pub max_moves: usize,
    pub shoot_range: (f64, f64),
    pub success_range: (f64, f64),
    pub goal_range: (f64, f64),
    pub max_samples: usize,
    pub max_start: u64,
}

impl Default for RandomModelOptions {
    fn default() -> Self {
        Self {
            max_moves: 4,
            shoot_range: (0.05, 0.6),
            success_range: (0.3, 0.95),
            goal_range: (0.01, 0.6),
            max_samples: 8,
            max_start: 20,
        }
    }
}

/// A valid model with random behaviour in every zone.
pub fn random_model<R: Rng>(grid: GridSpec, rng: &mut R, opts: &RandomModelOptions) -> TeamModel {
    let mut m = TeamModel::blank("random", grid);
    let n = grid.field_count();
    for i in 0..n {
        let shoot = rng.random_range(opts.shoot_range.0..=opts.shoot_range.1);
        let k = rng.random_range(1..=opts.max_moves.min(n).max(1));
        let mut targets: Vec<usize> = (0..n).collect();
        for j in 0..k {
            let pick = rng.random_range(j..n);
            targets.swap(j, pick);
        }
        targets.truncate(k);
        targets.sort_unstable();
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let goal = rng.random_range(opts.goal_range.0..=opts.goal_range.1);
        let n_samples = rng.random_range(0..=opts.max_samples);
        let z = m.zone_mut(ZoneId(i));
        z.shoot = shoot;
        z.shot_goal = goal;
        z.moves = targets
            .iter()
            .zip(&weights)
            .map(|(&to, w)| MoveEntry {
                to: ZoneId(to),
                prob: (1.0 - shoot) * w / total,
                success: rng.random_range(opts.success_range.0..=opts.success_range.1),
            })
            .collect();
        z.shot_samples = (0..n_samples)
            .map(|_| rng.random_range(0.0..=(2.0 * goal).min(1.0)))
            .collect();
        z.action_count = 100.0;
        z.start_count = rng.random_range(0..=opts.max_start);
    }
    m
}

/// A soccer-shaped model on any grid: shooting and scoring rise towards
/// the goal, moves mostly go forward to nearby cells, and most possessions
/// start in the defensive half.
pub fn league_model(grid: GridSpec, team_id: &str, seed: u64) -> TeamModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = TeamModel::blank(team_id, grid);
    let (length, width) = (grid.pitch_length, grid.pitch_width);
    let goal = (length, width / 2.0);
    let n = grid.field_count();
    let centers: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let c = zone_center(ZoneId(i), &grid);
            (c.x, c.y)
        })
        .collect();
    let flair = rng.random_range(0.8..1.2);

    for i in 0..n {
        let (x, y) = centers[i];
        let dist = ((goal.0 - x).powi(2) + (goal.1 - y).powi(2)).sqrt();
        let angle = ((y - goal.1).abs() / dist.max(1.0)).min(1.0);
        let xg = if i == 0 {
            0.0
        } else {
            (0.55 * (-dist / 7.5).exp() * (1.0 - 0.6 * angle) * flair).clamp(0.005, 0.7)
        };
        let shoot = if i == 0 || dist > 35.0 {
            0.0
        } else {
            (0.45 * (-dist / 9.0).exp() + 0.01).min(0.6)
        };

        // candidate targets: forward-biased neighbourhood
        let mut cands: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i || i == 0)
            .filter_map(|j| {
                let (tx, ty) = centers[j];
                let d = ((tx - x).powi(2) + (ty - y).powi(2)).sqrt();
                let forward = tx - x;
                let reach = if i == 0 { 40.0 } else { 18.0 };
                (d <= reach && (j != 0 || x < length / 2.0 + 12.0)).then(|| {
                    let w = (-(d / 10.0)).exp() * (1.0 + 0.08 * forward).max(0.2);
                    (j, w * rng.random_range(0.5..1.5))
                })
            })
            .collect();
        cands.sort_by(|a, b| b.1.total_cmp(&a.1));
        cands.truncate(if i == 0 { 24 } else { 10 });
        cands.sort_by_key(|c| c.0);
        if cands.is_empty() {
            cands.push((0, 1.0));
        }
        let total: f64 = cands.iter().map(|c| c.1).sum();
        let near_box = x >= length - PENALTY_BOX_DEPTH_M - 6.0;

        let z = m.zone_mut(ZoneId(i));
        z.shoot = shoot;
        z.shot_goal = xg;
        z.moves = cands
            .iter()
            .map(|&(to, w)| MoveEntry {
                to: ZoneId(to),
                prob: (1.0 - shoot) * w / total,
                success: if near_box {
                    rng.random_range(0.45..0.75)
                } else {
                    rng.random_range(0.7..0.92)
                },
            })
            .collect();
        z.shot_samples = if shoot > 0.0 {
            (0..12)
                .map(|_| (xg * rng.random_range(0.2..2.2)).clamp(0.0, 1.0))
                .collect()
        } else {
            Vec::new()
        };
        z.action_count = 100.0;
        z.start_count = if i == 0 {
            60
        } else if cell_bounds(ZoneId(i), &grid).is_ok_and(|r| r.x0 < length * 0.75) {
            rng.random_range(0..3)
        } else {
            0
        };
    }
    m
}

enum Step {
    Shot { goal: bool },
    Moved { to: ZoneId, ok: bool },
    Stuck,
}

fn draw<R: Rng>(model: &TeamModel, s: ZoneId, rng: &mut R) -> Step {
    let z = model.zone(s);
    let total = z.shoot + z.move_mass();
    if total <= 0.0 {
        return Step::Stuck;
    }
    let mut u = rng.random::<f64>() * total;
    if u < z.shoot {
        return Step::Shot {
            goal: rng.random::<f64>() < z.shot_goal,
        };
    }
    u -= z.shoot;
    let mut chosen = z.moves.last().expect("positive move mass");
    for m in &z.moves {
        if u < m.prob {
            chosen = m;
            break;
        }
        u -= m.prob;
    }
    Step::Moved {
        to: chosen.to,
        ok: rng.random::<f64>() < chosen.success,
    }
}

fn pick_start<R: Rng>(weights: &[f64], total: f64, rng: &mut R) -> ZoneId {
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return ZoneId(i);
        }
        u -= w;
    }
    ZoneId(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
}

/// Plays one possession from `start`; returns goals scored (0 or 1).
fn rollout<R: Rng>(model: &TeamModel, start: ZoneId, rng: &mut R) -> Result<u32, SimError> {
    let mut s = start;
    for _ in 0..MAX_POSSESSION_STEPS {
        match draw(model, s, rng) {
            Step::Shot { goal } => return Ok(goal as u32),
            Step::Moved { to, ok: true } => s = to,
            Step::Moved { ok: false, .. } | Step::Stuck => return Ok(0),
        }
    }
    Err(SimError::NoAbsorption(MAX_POSSESSION_STEPS))
}

/// Samples `n` possessions as neutral events. Start zones are drawn in
/// proportion to the model's start counts (zones without behaviour are
/// skipped); moves end at the target cell centre, failed ones included.
pub fn sample_possessions(gt: &GroundTruthModel, n: usize, seed: u64) -> Result<Vec<Possession>, SimError> {
    Ok(segment_possessions(&sample_events(gt, n, seed)?))
}

pub fn sample_events(gt: &GroundTruthModel, n: usize, seed: u64) -> Result<Vec<Event>, SimError> {
    let model = &gt.model;
    let grid = model.grid;
    let weights: Vec<f64> = model
        .zones
        .iter()
        .map(|z| if z.is_inert() { 0.0 } else { z.start_count as f64 })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SimError::NoStartZone);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut seq = 0u64;
    for p in 0..n {
        if p % POSSESSIONS_PER_MATCH == 0 {
            seq = 0;
        }
        let match_id = format!("sim-{:05}", p / POSSESSIONS_PER_MATCH);
        let mut s = pick_start(&weights, total, &mut rng);
        let mut first = true;
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > MAX_POSSESSION_STEPS {
                return Err(SimError::NoAbsorption(MAX_POSSESSION_STEPS));
            }
            let step = draw(model, s, &mut rng);
            let mut event = Event {
                match_id: match_id.clone(),
                team_id: model.team_id.clone(),
                seq,
                kind: EventKind::MoveAttempt,
                start: zone_center(s, &grid),
                end: None,
                success: false,
                shot_xg: None,
                restart: first,
            };
            seq += 1;
            first = false;
            match step {
                Step::Stuck => break,
                Step::Shot { goal } => {
                    let samples = &model.zone(s).shot_samples;
                    event.kind = EventKind::Shot;
                    event.success = goal;
                    event.shot_xg = (!samples.is_empty()).then(|| samples[rng.random_range(0..samples.len())]);
                    events.push(event);
                    break;
                }
                Step::Moved { to, ok } => {
                    event.end = Some(zone_center(to, &grid));
                    event.success = ok;
                    events.push(event);
                    if !ok {
                        break;
                    }
                    s = to;
                }
            }
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub rollouts: usize,
}

/// Mean and standard error of `trial` over `n` draws, in chunks of
/// [`ROLLOUT_CHUNK`] on independent streams of the seeded generator.
pub fn monte_carlo<F>(n: usize, seed: u64, trial: F) -> Result<Estimate, SimError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64, SimError> + Sync,
{
    if n == 0 {
        return Ok(Estimate {
            mean: 0.0,
            std_error: 0.0,
            rollouts: 0,
        });
    }
    let partial: Vec<Result<(f64, f64), SimError>> = (0..n.div_ceil(ROLLOUT_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = ROLLOUT_CHUNK.min(n - chunk * ROLLOUT_CHUNK);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..len {
                let v = trial(&mut rng)?;
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for p in partial {
        let (s, q) = p?;
        sum += s;
        sum_sq += q;
    }
    let count = n as f64;
    let mean = sum / count;
    let var = if n > 1 {
        ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        std_error: (var / count).sqrt(),
        rollouts: n,
    })
}

/// Monte Carlo goals per season: each rollout replays `start_counts`
/// possessions (rounded to whole numbers) from their start zones.
pub fn simulate_expected_goals(
    model: &TeamModel,
    start_counts: &[f64],
    n_rollouts: usize,
    seed: u64,
) -> Result<Estimate, SimError> {
    let season: Vec<(ZoneId, u64)> = start_counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.round() > 0.0)
        .map(|(i, c)| (ZoneId(i), c.round() as u64))
        .collect();
    monte_carlo(n_rollouts, seed, |rng| {
        let mut goals = 0u64;
        for &(zone, count) in &season {
            for _ in 0..count {
                goals += rollout(model, zone, rng)? as u64;
            }
        }
        Ok(goals as f64)
    })
}

/// Share of possessions from `start` whose shot comes from a zone with xG
/// above `threshold`.
pub fn simulate_better_shot(
    model: &TeamModel,
    start: ZoneId,
    threshold: f64,
    n: usize,
    seed: u64,
) -> Result<Estimate, SimError> {
    monte_carlo(n, seed, |rng| {
        let mut s = start;
        for _ in 0..MAX_POSSESSION_STEPS {
            match draw(model, s, rng) {
                Step::Shot { .. } => return Ok((model.goal_prob(s) > threshold) as u8 as f64),
                Step::Moved { to, ok: true } => s = to,
                Step::Moved { ok: false, .. } | Step::Stuck => return Ok(0.0),
            }
        }
        Err(SimError::NoAbsorption(MAX_POSSESSION_STEPS))
    })
}

/// Goals from `start` when the team is forced through `k` moves (the first
/// restricted to `first_mask`) and then shoots.
pub fn simulate_k_moves(
    model: &TeamModel,
    start: ZoneId,
    k: usize,
    first_mask: Option<&crate::grid::RegionMask>,
    n: usize,
    seed: u64,
) -> Result<Estimate, SimError> {
    monte_carlo(n, seed, |rng| {
        let mut s = start;
        for step in 0..k {
            let mask = if step == 0 { first_mask } else { None };
            let options: Vec<&MoveEntry> = model
                .zone(s)
                .moves
                .iter()
                .filter(|m| m.prob > 0.0 && mask.is_none_or(|mask| mask.contains(m.to)))
                .collect();
            let total: f64 = options.iter().map(|m| m.prob).sum();
            if total <= 0.0 {
                return Ok(0.0);
            }
            let mut u = rng.random::<f64>() * total;
            let mut chosen = options[options.len() - 1];
            for m in &options {
                if u < m.prob {
                    chosen = m;
                    break;
                }
                u -= m.prob;
            }
            if rng.random::<f64>() >= chosen.success {
                return Ok(0.0);
            }
            s = chosen.to;
        }
        Ok((rng.random::<f64>() < model.goal_prob(s)) as u8 as f64)
    })
}

/// One team of a StatsBomb-layout fixture.
pub struct FixtureTeam<'a> {
    pub id: u64,
    pub name: String,
    pub truth: &'a TeamModel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub matches: usize,
    pub on_ball_events: usize,
    pub possessions: usize,
    pub goals: usize,
}

pub const FIXTURE_COMPETITION: u64 = 9001;
pub const FIXTURE_SEASON: u64 = 1;

fn yards(p: crate::grid::Point) -> serde_json::Value {
    use crate::statsbomb::{PROVIDER_LENGTH, PROVIDER_WIDTH};
    serde_json::json!([
        p.x * PROVIDER_LENGTH / crate::events::PITCH_LENGTH_M,
        p.y * PROVIDER_WIDTH / crate::events::PITCH_WIDTH_M
    ])
}

/// Writes a StatsBomb open-data shaped tree (`data/competitions.json`,
/// `data/matches/<competition>/<season>.json`, `data/events/<id>.json`)
/// whose possessions are sampled from each team's model. Every team plays
/// `matches_per_team` matches (rounded up to a round robin) with
/// `possessions_per_match` possessions per side.
pub fn write_statsbomb_fixture(
    root: &std::path::Path,
    teams: &[FixtureTeam<'_>],
    matches_per_team: usize,
    possessions_per_match: usize,
    seed: u64,
) -> std::io::Result<FixtureSummary> {
    use serde_json::json;
    let data = root.join("data");
    let events_dir = data.join("events");
    let matches_dir = data.join("matches").join(FIXTURE_COMPETITION.to_string());
    std::fs::create_dir_all(&events_dir)?;
    std::fs::create_dir_all(&matches_dir)?;
    let write = |path: std::path::PathBuf, v: &serde_json::Value| -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(v).map_err(std::io::Error::other)?)
    };
    write(
        data.join("competitions.json"),
        &json!([{"competition_id": FIXTURE_COMPETITION, "season_id": FIXTURE_SEASON,
                 "competition_name": "Synthetic League", "season_name": "1"}]),
    )?;

    let t = teams.len();
    let mut pairs = Vec::new();
    if t >= 2 {
        let rounds = (matches_per_team * t).div_ceil(2);
        let mut gap = 1;
        while pairs.len() < rounds {
            for home in 0..t {
                pairs.push((home, (home + gap) % t));
            }
            gap = gap % (t - 1) + 1;
        }
        pairs.truncate(rounds.max(1));
    }

    let mut summary = FixtureSummary::default();
    let mut listing = Vec::new();
    for (m, &(home, away)) in pairs.iter().enumerate() {
        let match_id = 100_000 + m as u64;
        let mut sides = Vec::new();
        for (side, &ti) in [home, away].iter().enumerate() {
            let team = &teams[ti];
            let gt = GroundTruthModel::new(team.truth.clone(), seed);
            let stream = seed ^ (match_id << 1 | side as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let evs = sample_events(&gt, possessions_per_match, stream).map_err(std::io::Error::other)?;
            sides.push((team, segment_possessions(&evs)));
        }
        let mut out = vec![json!({"index": 1, "type": {"id": 35, "name": "Starting XI"},
                                   "team": {"id": sides[0].0.id, "name": sides[0].0.name}})];
        let mut index = 2u64;
        let mut push = |v: serde_json::Value, out: &mut Vec<serde_json::Value>| {
            let mut v = v;
            v["index"] = json!(index);
            index += 1;
            out.push(v);
        };
        for p in 0..possessions_per_match {
            for (team, possessions) in &sides {
                let Some(pos) = possessions.get(p) else { continue };
                summary.possessions += 1;
                summary.goals += pos.is_goal() as usize;
                let team_ref = json!({"id": team.id, "name": team.name});
                for (k, e) in pos.events.iter().enumerate() {
                    summary.on_ball_events += 1;
                    let restart = k == 0;
                    let v = match e.kind {
                        EventKind::Shot => {
                            let mut shot = json!({
                                "type": {"name": if restart { "Free Kick" } else { "Open Play" }},
                                "outcome": {"name": if e.success { "Goal" } else { "Saved" }},
                                "end_location": [120.0, 40.0, 1.0],
                            });
                            if let Some(xg) = e.shot_xg {
                                shot["statsbomb_xg"] = json!(xg);
                            }
                            json!({"type": {"id": 16, "name": "Shot"}, "team": team_ref,
                                   "location": yards(e.start), "shot": shot})
                        }
                        EventKind::MoveAttempt => {
                            let mut pass = json!({"end_location": yards(e.end.expect("moves carry an end"))});
                            if !e.success {
                                pass["outcome"] = json!({"id": 9, "name": "Incomplete"});
                            }
                            if restart {
                                pass["type"] = json!({"name": "Throw-in"});
                            }
                            json!({"type": {"id": 30, "name": "Pass"}, "team": team_ref,
                                   "location": yards(e.start), "pass": pass})
                        }
                    };
                    push(v, &mut out);
                    if e.kind == EventKind::MoveAttempt && e.success {
                        push(
                            json!({"type": {"id": 42, "name": "Ball Receipt*"}, "team": team_ref,
                                   "location": yards(e.end.expect("moves carry an end"))}),
                            &mut out,
                        );
                    }
                }
            }
        }
        write(
            events_dir.join(format!("{match_id}.json")),
            &serde_json::Value::Array(out),
        )?;
        listing.push(json!({
            "match_id": match_id,
            "competition": {"competition_id": FIXTURE_COMPETITION},
            "season": {"season_id": FIXTURE_SEASON},
            "home_team": {"home_team_id": sides[0].0.id, "home_team_name": sides[0].0.name},
            "away_team": {"away_team_id": sides[1].0.id, "away_team_name": sides[1].0.name},
        }));
        summary.matches += 1;
    }
    write(
        matches_dir.join(format!("{FIXTURE_SEASON}.json")),
        &serde_json::Value::Array(listing),
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn generated_models_are_valid() {
        assert!(validate_model(&toy_chain_model()).is_valid());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_model(
                GridSpec::with_cells(3, 3).unwrap(),
                &mut rng,
                &RandomModelOptions::default(),
            );
            let r = validate_model(&m);
            assert!(r.is_valid(), "{:?}", r.violations);
        }
        let league = league_model(GridSpec::default(), "L", 1);
        let r = validate_model(&league);
        assert!(r.is_valid(), "{:?}", r.violations);
    }

    #[test]
    fn always_shooting_gives_single_event_possessions() {
        let mut m = toy_chain_model();
        for z in &mut m.zones {
            z.shoot = 1.0;
            z.moves.clear();
        }
        let p = sample_possessions(&GroundTruthModel::new(m, 5), 500, 5).unwrap();
        assert_eq!(p.len(), 500);
        assert!(p.iter().all(|p| p.events.len() == 1 && p.events[0].is_shot()));
    }

    #[test]
    fn same_seed_same_corpus() {
        let gt = GroundTruthModel::new(toy_chain_model(), 11);
        assert_eq!(gt.sample(300).unwrap(), gt.sample(300).unwrap());
        assert_ne!(
            sample_events(&gt, 300, 11).unwrap(),
            sample_events(&gt, 300, 12).unwrap()
        );
    }

    #[test]
    fn possessions_survive_segmentation() {
        let gt = GroundTruthModel::new(league_model(GridSpec::default(), "L", 4), 4);
        let events = sample_events(&gt, 400, 4).unwrap();
        assert_eq!(segment_possessions(&events).len(), 400);
    }

    #[test]
    fn rollouts_zero_start_counts() {
        let e = simulate_expected_goals(&toy_chain_model(), &[0.0, 0.0], 10_000, 1).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
    }

    #[test]
    fn endless_possession_is_an_error() {
        let mut m = toy_chain_model();
        for z in &mut m.zones {
            z.shoot = 0.0;
            z.moves[0].prob = 1.0;
            z.moves[0].success = 1.0;
        }
        assert_eq!(
            simulate_expected_goals(&m, &[1.0, 0.0], 1, 1),
            Err(SimError::NoAbsorption(MAX_POSSESSION_STEPS))
        );
        assert!(GroundTruthModel::new(m, 1).sample(1).is_err());
    }

    #[test]
    fn rollout_is_thread_count_independent() {
        let m = toy_chain_model();
        let a = simulate_expected_goals(&m, &[1.0, 0.0], 20_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_expected_goals(&m, &[1.0, 0.0], 20_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_rollouts_shrinks_error() {
        let m = toy_chain_model();
        let a = simulate_expected_goals(&m, &[1.0, 0.0], 100_000, 2).unwrap();
        let b = simulate_expected_goals(&m, &[1.0, 0.0], 200_000, 3).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio - 2f64.sqrt()).abs() < 0.05, "ratio {ratio}");
    }
}
