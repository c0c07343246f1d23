//! StatsBomb open-data event files.
//!
//! Each match lives in `events/<match_id>.json` as an array of events on a
//! 120 × 80 yard grid, already oriented so the acting team attacks towards
//! increasing x. Passes, carries and failed dribbles become move attempts;
//! dispossessions and miscontrols become failed moves in place.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::events::{
    Event, EventKind, IngestError, IngestStats, ParseOptions, ParsedEvents, PITCH_LENGTH_M, PITCH_WIDTH_M,
};
use crate::grid::Point;

pub const PROVIDER_LENGTH: f64 = 120.0;
pub const PROVIDER_WIDTH: f64 = 80.0;

const RESTART_PASS_TYPES: [&str; 5] = ["Corner", "Free Kick", "Throw-in", "Goal Kick", "Kick Off"];
const RESTART_SHOT_TYPES: [&str; 4] = ["Free Kick", "Corner", "Kick Off", "Penalty"];

#[derive(Debug, Deserialize)]
struct Named {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
struct SbPass {
    end_location: Option<Vec<f64>>,
    outcome: Option<Named>,
    #[serde(rename = "type")]
    kind: Option<Named>,
}

#[derive(Debug, Deserialize)]
struct SbCarry {
    end_location: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct SbDribble {
    outcome: Option<Named>,
}

#[derive(Debug, Deserialize)]
struct SbShot {
    end_location: Option<Vec<f64>>,
    outcome: Option<Named>,
    statsbomb_xg: Option<f64>,
    #[serde(rename = "type")]
    kind: Option<Named>,
}

#[derive(Debug, Deserialize)]
struct SbEvent {
    index: Option<u64>,
    #[serde(rename = "type")]
    kind: Named,
    team: Option<Named>,
    location: Option<Vec<f64>>,
    pass: Option<SbPass>,
    carry: Option<SbCarry>,
    dribble: Option<SbDribble>,
    shot: Option<SbShot>,
}

/// Rescales a provider location to metres, clamping onto the pitch.
pub fn to_metres(loc: &[f64]) -> Option<Point> {
    if loc.len() < 2 || !loc[0].is_finite() || !loc[1].is_finite() {
        return None;
    }
    let x = (loc[0] / PROVIDER_LENGTH * PITCH_LENGTH_M).clamp(0.0, PITCH_LENGTH_M);
    let y = (loc[1] / PROVIDER_WIDTH * PITCH_WIDTH_M).clamp(0.0, PITCH_WIDTH_M);
    Some(Point::new(x, y))
}

fn name_of(n: &Option<Named>) -> Option<&str> {
    n.as_ref().and_then(|n| n.name.as_deref())
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses one match file. `options.match_id` names the match.
pub fn parse_match<R: Read>(source: R, options: &ParseOptions) -> Result<ParsedEvents, IngestError> {
    let records: Vec<serde_json::Value> =
        serde_json::from_reader(source).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let match_id = options.match_id.clone().unwrap_or_default();
    let mut out = ParsedEvents::default();
    for (index, value) in records.into_iter().enumerate() {
        out.stats.records += 1;
        let ev: SbEvent = serde_json::from_value(value).map_err(|e| IngestError::record(index, e.to_string()))?;
        if let Some(event) = convert(index, ev, &match_id, options, &mut out.stats)? {
            out.events.push(event);
        }
    }
    out.events.sort_by_key(|e| e.seq);
    out.stats.events = out.events.len();
    Ok(out)
}

fn convert(
    index: usize,
    ev: SbEvent,
    match_id: &str,
    options: &ParseOptions,
    stats: &mut IngestStats,
) -> Result<Option<Event>, IngestError> {
    let type_name = ev.kind.name.clone().unwrap_or_else(|| "unnamed".into());
    let on_ball = matches!(
        type_name.as_str(),
        "Pass" | "Carry" | "Dribble" | "Shot" | "Dispossessed" | "Miscontrol"
    );
    if !on_ball {
        stats.skip(&type_name);
        return Ok(None);
    }
    let team_id = ev
        .team
        .as_ref()
        .and_then(|t| t.id.as_ref())
        .map(id_string)
        .ok_or_else(|| IngestError::record(index, "on-ball event without team"))?;
    let start = ev
        .location
        .as_deref()
        .and_then(to_metres)
        .ok_or_else(|| IngestError::record(index, format!("{type_name} without location")))?;
    let seq = ev.index.unwrap_or(index as u64);
    let mut event = Event {
        match_id: match_id.to_string(),
        team_id,
        seq,
        kind: EventKind::MoveAttempt,
        start,
        end: Some(start),
        success: false,
        shot_xg: None,
        restart: false,
    };
    let end_of = |loc: &Option<Vec<f64>>, what: &str| {
        loc.as_deref()
            .and_then(to_metres)
            .ok_or_else(|| IngestError::record(index, format!("{what} without end_location")))
    };
    match type_name.as_str() {
        "Pass" => {
            let pass = ev
                .pass
                .ok_or_else(|| IngestError::record(index, "Pass without pass object"))?;
            event.end = Some(end_of(&pass.end_location, "pass")?);
            event.success = pass.outcome.is_none();
            event.restart = name_of(&pass.kind).is_some_and(|k| RESTART_PASS_TYPES.contains(&k));
        }
        "Carry" => {
            let carry = ev
                .carry
                .ok_or_else(|| IngestError::record(index, "Carry without carry object"))?;
            event.end = Some(end_of(&carry.end_location, "carry")?);
            event.success = true;
        }
        "Dribble" => {
            let complete = ev
                .dribble
                .as_ref()
                .and_then(|d| name_of(&d.outcome))
                .is_some_and(|o| o == "Complete");
            if complete {
                // the ball movement is recorded by the surrounding carries
                stats.skip("Dribble (complete)");
                return Ok(None);
            }
        }
        "Dispossessed" | "Miscontrol" => {}
        "Shot" => {
            let shot = ev
                .shot
                .ok_or_else(|| IngestError::record(index, "Shot without shot object"))?;
            let shot_type = name_of(&shot.kind);
            if options.exclude_penalties && shot_type == Some("Penalty") {
                stats.penalties_excluded += 1;
                return Ok(None);
            }
            event.kind = EventKind::Shot;
            event.end = shot.end_location.as_deref().and_then(to_metres);
            event.success = name_of(&shot.outcome) == Some("Goal");
            event.shot_xg = shot.statsbomb_xg.map(|x| x.clamp(0.0, 1.0));
            event.restart = shot_type.is_some_and(|k| RESTART_SHOT_TYPES.contains(&k));
        }
        _ => unreachable!(),
    }
    Ok(Some(event))
}

#[derive(Debug, Deserialize)]
struct SbMatch {
    match_id: serde_json::Value,
}

/// Selects which matches of an open-data tree to read.
#[derive(Debug, Clone, Default)]
pub struct MatchFilter {
    pub competition_id: Option<String>,
    pub season_id: Option<String>,
}

/// Locates the `events/` directory of an open-data tree (accepts the tree
/// root, its `data/` directory or the `events/` directory itself).
pub fn events_dir(root: &Path) -> Option<PathBuf> {
    [
        root.join("data").join("events"),
        root.join("events"),
        root.to_path_buf(),
    ]
    .into_iter()
    .find(|p| p.is_dir() && has_json(p))
}

fn has_json(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .map(|mut it| it.any(|e| e.is_ok_and(|e| e.path().extension().is_some_and(|x| x == "json"))))
        .unwrap_or(false)
}

fn match_ids_for(events: &Path, filter: &MatchFilter) -> Result<Option<Vec<String>>, IngestError> {
    let Some(comp) = &filter.competition_id else {
        return Ok(None);
    };
    let matches_root = events
        .parent()
        .map(|p| p.join("matches").join(comp))
        .ok_or_else(|| IngestError::Malformed("no matches directory next to events".into()))?;
    let mut files: Vec<PathBuf> = match &filter.season_id {
        Some(season) => vec![matches_root.join(format!("{season}.json"))],
        None => std::fs::read_dir(&matches_root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
    };
    files.sort();
    let mut ids = Vec::new();
    for f in files {
        let list: Vec<SbMatch> = serde_json::from_reader(BufReader::new(File::open(&f)?))
            .map_err(|e| IngestError::Malformed(format!("{}: {e}", f.display())))?;
        ids.extend(list.iter().map(|m| id_string(&m.match_id)));
    }
    Ok(Some(ids))
}

fn match_sort_key(id: &str) -> (u64, String) {
    (id.parse().unwrap_or(u64::MAX), id.to_string())
}

/// Reads every match of an open-data tree, in match-id order.
pub fn read_dir(root: &Path, options: &ParseOptions, filter: &MatchFilter) -> Result<ParsedEvents, IngestError> {
    let events = events_dir(root)
        .ok_or_else(|| IngestError::Malformed(format!("{}: no StatsBomb event files found", root.display())))?;
    let mut ids: Vec<String> = match match_ids_for(&events, filter)? {
        Some(ids) => ids,
        None => std::fs::read_dir(&events)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect(),
    };
    ids.sort_by_key(|id| match_sort_key(id));
    ids.dedup();

    let parsed: Vec<Result<ParsedEvents, IngestError>> = ids
        .par_iter()
        .map(|id| {
            let path = events.join(format!("{id}.json"));
            let file = File::open(&path)?;
            let opts = ParseOptions {
                match_id: Some(id.clone()),
                ..options.clone()
            };
            parse_match(BufReader::new(file), &opts).map_err(|e| match e {
                IngestError::Record { index, reason } => IngestError::Record {
                    index,
                    reason: format!("{}: {reason}", path.display()),
                },
                other => other,
            })
        })
        .collect();

    let mut out = ParsedEvents::default();
    for p in parsed {
        let p = p?;
        out.stats.merge(&p.stats);
        out.events.extend(p.events);
    }
    Ok(out)
}

/// Team names found in the match files, keyed by team id.
pub fn team_names(root: &Path) -> Result<BTreeMap<String, String>, IngestError> {
    let mut names = BTreeMap::new();
    let Some(events) = events_dir(root) else {
        return Ok(names);
    };
    let Some(matches) = events.parent().map(|p| p.join("matches")) else {
        return Ok(names);
    };
    if !matches.is_dir() {
        return Ok(names);
    }
    #[derive(Deserialize)]
    struct Side {
        home_team: Option<TeamRef>,
        away_team: Option<TeamRef>,
    }
    #[derive(Deserialize)]
    struct TeamRef {
        home_team_id: Option<serde_json::Value>,
        home_team_name: Option<String>,
        away_team_id: Option<serde_json::Value>,
        away_team_name: Option<String>,
    }
    let mut stack = vec![matches];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "json") {
                let Ok(list) = serde_json::from_reader::<_, Vec<Side>>(BufReader::new(File::open(&path)?)) else {
                    continue;
                };
                for side in list {
                    for t in [side.home_team, side.away_team].into_iter().flatten() {
                        if let (Some(id), Some(name)) = (&t.home_team_id, &t.home_team_name) {
                            names.insert(id_string(id), name.clone());
                        }
                        if let (Some(id), Some(name)) = (&t.away_team_id, &t.away_team_name) {
                            names.insert(id_string(id), name.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(names)
}
