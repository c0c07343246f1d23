//! Neutral on-ball event schema, readers/writers and possession segmentation.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{zone_of, GridError, GridSpec, Point, ZoneId};

/// Event coordinates are always expressed on a pitch of this size.
pub const PITCH_LENGTH_M: f64 = 105.0;
pub const PITCH_WIDTH_M: f64 = 68.0;

pub const NEUTRAL_CSV_HEADER: [&str; 10] = [
    "match_id", "team_id", "seq", "kind", "start_x", "start_y", "end_x", "end_y", "success", "shot_xg",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("record {index}: {reason}")]
    Record { index: usize, reason: String },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub(crate) fn record(index: usize, reason: impl Into<String>) -> Self {
        IngestError::Record {
            index,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MoveAttempt,
    Shot,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::MoveAttempt => "move_attempt",
            EventKind::Shot => "shot",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "move_attempt" => Some(EventKind::MoveAttempt),
            "shot" => Some(EventKind::Shot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub match_id: String,
    pub team_id: String,
    pub seq: u64,
    pub kind: EventKind,
    pub start: Point,
    /// Observed end location of the ball. Required for moves.
    pub end: Option<Point>,
    /// Move: a teammate controlled the ball. Shot: goal.
    pub success: bool,
    pub shot_xg: Option<f64>,
    /// First action after a dead-ball restart.
    pub restart: bool,
}

impl Event {
    pub fn is_shot(&self) -> bool {
        self.kind == EventKind::Shot
    }

    pub fn is_move(&self) -> bool {
        self.kind == EventKind::MoveAttempt
    }

    fn check(&self) -> Result<(), String> {
        let in_pitch = |p: &Point| p.x >= 0.0 && p.x <= PITCH_LENGTH_M && p.y >= 0.0 && p.y <= PITCH_WIDTH_M;
        if !in_pitch(&self.start) {
            return Err(format!("start ({}, {}) off the pitch", self.start.x, self.start.y));
        }
        match (&self.end, self.kind) {
            (None, EventKind::MoveAttempt) => return Err("move_attempt without an end location".into()),
            (Some(e), _) if !in_pitch(e) => return Err(format!("end ({}, {}) off the pitch", e.x, e.y)),
            _ => {}
        }
        if let Some(xg) = self.shot_xg {
            if !(0.0..=1.0).contains(&xg) {
                return Err(format!("shot_xg {xg} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Flat record shared by the neutral CSV and JSON encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NeutralRecord {
    match_id: String,
    team_id: String,
    seq: u64,
    kind: String,
    start_x: f64,
    start_y: f64,
    end_x: Option<f64>,
    end_y: Option<f64>,
    success: bool,
    shot_xg: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    restart: bool,
}

impl From<&Event> for NeutralRecord {
    fn from(e: &Event) -> Self {
        NeutralRecord {
            match_id: e.match_id.clone(),
            team_id: e.team_id.clone(),
            seq: e.seq,
            kind: e.kind.as_str().to_string(),
            start_x: e.start.x,
            start_y: e.start.y,
            end_x: e.end.map(|p| p.x),
            end_y: e.end.map(|p| p.y),
            success: e.success,
            shot_xg: e.shot_xg,
            restart: e.restart,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    NeutralCsv,
    NeutralJson,
    StatsbombOpen,
}

impl std::str::FromStr for InputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "neutral_csv" | "csv" => Ok(InputFormat::NeutralCsv),
            "neutral_json" | "json" => Ok(InputFormat::NeutralJson),
            "statsbomb_open" | "statsbomb" => Ok(InputFormat::StatsbombOpen),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Match id for provider files that do not carry one per event.
    pub match_id: Option<String>,
    pub exclude_penalties: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            match_id: None,
            exclude_penalties: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records: usize,
    pub events: usize,
    /// Records whose kind is not an on-ball move or shot, keyed by kind.
    pub skipped: BTreeMap<String, usize>,
    pub penalties_excluded: usize,
}

impl IngestStats {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.records += other.records;
        self.events += other.events;
        self.penalties_excluded += other.penalties_excluded;
        for (k, v) in &other.skipped {
            *self.skipped.entry(k.clone()).or_default() += v;
        }
    }

    pub(crate) fn skip(&mut self, kind: &str) {
        *self.skipped.entry(kind.to_string()).or_default() += 1;
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedEvents {
    pub events: Vec<Event>,
    pub stats: IngestStats,
}

pub fn parse_events<R: Read>(
    source: R,
    format: InputFormat,
    options: &ParseOptions,
) -> Result<ParsedEvents, IngestError> {
    match format {
        InputFormat::NeutralCsv => parse_neutral_csv(source),
        InputFormat::NeutralJson => parse_neutral_json(source),
        InputFormat::StatsbombOpen => crate::statsbomb::parse_match(source, options),
    }
}

fn record_to_event(index: usize, r: NeutralRecord, stats: &mut IngestStats) -> Result<Option<Event>, IngestError> {
    let Some(kind) = EventKind::parse(&r.kind) else {
        stats.skip(&r.kind);
        return Ok(None);
    };
    let end = match (r.end_x, r.end_y) {
        (Some(x), Some(y)) => Some(Point::new(x, y)),
        (None, None) => None,
        _ => {
            return Err(IngestError::record(
                index,
                "end_x and end_y must both be set or both be blank",
            ))
        }
    };
    let event = Event {
        match_id: r.match_id,
        team_id: r.team_id,
        seq: r.seq,
        kind,
        start: Point::new(r.start_x, r.start_y),
        end,
        success: r.success,
        shot_xg: r.shot_xg,
        restart: r.restart,
    };
    event.check().map_err(|reason| IngestError::record(index, reason))?;
    Ok(Some(event))
}

fn parse_neutral_json<R: Read>(source: R) -> Result<ParsedEvents, IngestError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_reader(source).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let mut out = ParsedEvents::default();
    for (index, value) in values.into_iter().enumerate() {
        out.stats.records += 1;
        let record: NeutralRecord =
            serde_json::from_value(value).map_err(|e| IngestError::record(index, e.to_string()))?;
        if let Some(event) = record_to_event(index, record, &mut out.stats)? {
            out.events.push(event);
        }
    }
    out.stats.events = out.events.len();
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "TRUE" | "True" => Some(true),
        "0" | "false" | "FALSE" | "False" => Some(false),
        _ => None,
    }
}

fn parse_neutral_csv<R: Read>(source: R) -> Result<ParsedEvents, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| IngestError::Malformed(e.to_string()))?
        .clone();
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    let has_restart = header.len() == 11 && header[10] == "restart";
    if header[..header.len().min(10)] != NEUTRAL_CSV_HEADER[..] || !(header.len() == 10 || has_restart) {
        return Err(IngestError::Malformed(format!(
            "expected header `{}`",
            NEUTRAL_CSV_HEADER.join(",")
        )));
    }

    let mut out = ParsedEvents::default();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| IngestError::record(index, e.to_string()))?;
        out.stats.records += 1;
        if row.len() != header.len() {
            return Err(IngestError::record(
                index,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let field = |i: usize| row[i].trim();
        let num = |i: usize| -> Result<f64, IngestError> {
            field(i)
                .parse()
                .map_err(|_| IngestError::record(index, format!("bad number `{}` in {}", field(i), header[i])))
        };
        let opt_num = |i: usize| -> Result<Option<f64>, IngestError> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let record = NeutralRecord {
            match_id: field(0).to_string(),
            team_id: field(1).to_string(),
            seq: field(2)
                .parse()
                .map_err(|_| IngestError::record(index, format!("bad seq `{}`", field(2))))?,
            kind: field(3).to_string(),
            start_x: num(4)?,
            start_y: num(5)?,
            end_x: opt_num(6)?,
            end_y: opt_num(7)?,
            success: parse_bool(field(8))
                .ok_or_else(|| IngestError::record(index, format!("bad success `{}`", field(8))))?,
            shot_xg: opt_num(9)?,
            restart: has_restart && parse_bool(field(10)).unwrap_or(false),
        };
        if let Some(event) = record_to_event(index, record, &mut out.stats)? {
            out.events.push(event);
        }
    }
    out.stats.events = out.events.len();
    Ok(out)
}

pub fn write_neutral_json<W: Write>(events: &[Event], writer: W) -> Result<(), IngestError> {
    let records: Vec<NeutralRecord> = events.iter().map(NeutralRecord::from).collect();
    serde_json::to_writer(writer, &records).map_err(|e| IngestError::Malformed(e.to_string()))
}

/// Writes the ten-column neutral CSV. The restart marker is not part of
/// the CSV layout and is dropped.
pub fn write_neutral_csv<W: Write>(events: &[Event], writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| IngestError::Malformed(e.to_string());
    w.write_record(NEUTRAL_CSV_HEADER).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in events {
        w.write_record([
            e.match_id.clone(),
            e.team_id.clone(),
            e.seq.to_string(),
            e.kind.as_str().to_string(),
            e.start.x.to_string(),
            e.start.y.to_string(),
            opt(e.end.map(|p| p.x)),
            opt(e.end.map(|p| p.y)),
            if e.success { "1" } else { "0" }.to_string(),
            opt(e.shot_xg),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Goal,
    NoGoal,
    Loss,
}

impl Terminal {
    /// Terminal implied by the final event of a possession.
    pub fn of_last(event: &Event) -> Terminal {
        match (event.kind, event.success) {
            (EventKind::Shot, true) => Terminal::Goal,
            (EventKind::Shot, false) => Terminal::NoGoal,
            _ => Terminal::Loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Possession {
    pub team_id: String,
    pub match_id: String,
    pub events: Vec<Event>,
    pub terminal: Terminal,
}

impl Possession {
    fn from_events(events: Vec<Event>) -> Self {
        let last = events.last().expect("possessions are non-empty");
        Possession {
            team_id: last.team_id.clone(),
            match_id: last.match_id.clone(),
            terminal: Terminal::of_last(last),
            events,
        }
    }

    pub fn is_goal(&self) -> bool {
        self.terminal == Terminal::Goal
    }
}

/// Splits match-ordered events into possessions. A possession ends on a
/// shot, a failed move, a change of team or match, or a dead-ball restart.
pub fn segment_possessions(events: &[Event]) -> Vec<Possession> {
    let mut out = Vec::new();
    let mut current: Vec<Event> = Vec::new();
    for e in events {
        if let Some(prev) = current.last() {
            if prev.team_id != e.team_id || prev.match_id != e.match_id || e.restart {
                out.push(Possession::from_events(std::mem::take(&mut current)));
            }
        }
        current.push(e.clone());
        if e.is_shot() || !e.success {
            out.push(Possession::from_events(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        out.push(Possession::from_events(current));
    }
    out
}

/// Number of possessions starting in each zone.
pub fn start_state_counts(possessions: &[Possession], spec: &GridSpec) -> Result<BTreeMap<ZoneId, u64>, GridError> {
    let mut counts = BTreeMap::new();
    for p in possessions {
        let first = &p.events[0];
        *counts.entry(zone_of(first.start, spec)?).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Groups possessions by team, in team-id order.
pub fn by_team(possessions: Vec<Possession>) -> BTreeMap<String, Vec<Possession>> {
    let mut out: BTreeMap<String, Vec<Possession>> = BTreeMap::new();
    for p in possessions {
        out.entry(p.team_id.clone()).or_default().push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(team: &str, seq: u64, kind: EventKind, success: bool) -> Event {
        Event {
            match_id: "m1".into(),
            team_id: team.into(),
            seq,
            kind,
            start: Point::new(60.0, 30.0),
            end: Some(Point::new(70.0, 30.0)),
            success,
            shot_xg: None,
            restart: false,
        }
    }

    use EventKind::{MoveAttempt as Move, Shot};

    #[test]
    fn goal_possession() {
        let events = [ev("A", 1, Move, true), ev("A", 2, Move, true), ev("A", 3, Shot, true)];
        let p = segment_possessions(&events);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].terminal, Terminal::Goal);
        assert_eq!(p[0].events.len(), 3);
    }

    #[test]
    fn rebound_starts_new_possession() {
        let events = [ev("A", 1, Move, true), ev("A", 2, Shot, false), ev("A", 3, Move, true)];
        let p = segment_possessions(&events);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].terminal, Terminal::NoGoal);
        assert_eq!(p[1].events.len(), 1);
    }

    #[test]
    fn failed_move_loses_possession() {
        let events = [ev("A", 1, Move, false), ev("B", 2, Move, true)];
        let p = segment_possessions(&events);
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].team_id.as_str(), p[0].terminal), ("A", Terminal::Loss));
        assert_eq!(p[1].team_id, "B");
    }

    #[test]
    fn team_change_and_restart_split() {
        let mut r = ev("A", 3, Move, true);
        r.restart = true;
        let events = [
            ev("A", 1, Move, true),
            ev("B", 2, Move, true),
            r,
            ev("A", 4, Shot, true),
        ];
        let p = segment_possessions(&events);
        assert_eq!(p.len(), 3);
        assert_eq!(p[0].terminal, Terminal::Loss);
        assert_eq!(p[2].events.len(), 2);
        assert_eq!(p[2].terminal, Terminal::Goal);
    }

    #[test]
    fn empty_input_is_empty_output() {
        assert!(segment_possessions(&[]).is_empty());
    }

    #[test]
    fn start_counts_sum_to_possessions() {
        let mut a = ev("A", 1, Shot, false);
        a.start = Point::new(40.0, 30.0);
        let mut b = ev("A", 2, Shot, true);
        b.start = Point::new(40.0, 30.0);
        let p = segment_possessions(&[a, b]);
        let counts = start_state_counts(&p, &GridSpec::default()).unwrap();
        assert_eq!(counts, BTreeMap::from([(ZoneId(0), 2)]));
    }

    #[test]
    fn csv_shot_row() {
        let csv = "match_id,team_id,seq,kind,start_x,start_y,end_x,end_y,success,shot_xg\n\
                   m,t,1,shot,90,34,,,1,0.3\n\
                   m,t,2,foul,90,34,,,0,\n";
        let parsed = parse_events(csv.as_bytes(), InputFormat::NeutralCsv, &ParseOptions::default()).unwrap();
        assert_eq!(parsed.events.len(), 1);
        let e = &parsed.events[0];
        assert_eq!((e.kind, e.success, e.shot_xg, e.end), (Shot, true, Some(0.3), None));
        assert_eq!(parsed.stats.skipped.get("foul"), Some(&1));
        assert_eq!(parsed.stats.records, 2);
    }

    #[test]
    fn csv_truncated_row_reports_index() {
        let csv = "match_id,team_id,seq,kind,start_x,start_y,end_x,end_y,success,shot_xg\n\
                   m,t,1,shot,90,34,,,1,0.3\n\
                   m,t,2,move_attempt,90\n";
        let err = parse_events(csv.as_bytes(), InputFormat::NeutralCsv, &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::Record { index: 1, .. }), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let hdr = "match_id,team_id,seq,kind,start_x,start_y,end_x,end_y,success,shot_xg\n";
        for row in [
            "m,t,1,shot,90,34,,,1,1.5",
            "m,t,1,move_attempt,90,34,,,1,",
            "m,t,1,shot,190,34,,,1,",
            "m,t,1,shot,90,34,,,maybe,",
        ] {
            let text = format!("{hdr}{row}\n");
            assert!(
                parse_events(text.as_bytes(), InputFormat::NeutralCsv, &ParseOptions::default()).is_err(),
                "{row}"
            );
        }
        assert!(parse_events("a,b\n".as_bytes(), InputFormat::NeutralCsv, &ParseOptions::default()).is_err());
    }

    #[test]
    fn json_truncated_record_reports_index() {
        let json = r#"[{"match_id":"m","team_id":"t","seq":1,"kind":"shot","start_x":90,"start_y":34,"end_x":null,"end_y":null,"success":true,"shot_xg":null},
                      {"match_id":"m","team_id":"t","seq":2}]"#;
        let err = parse_events(json.as_bytes(), InputFormat::NeutralJson, &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::Record { index: 1, .. }));
        assert!(parse_events("[{".as_bytes(), InputFormat::NeutralJson, &ParseOptions::default()).is_err());
    }

    #[test]
    fn csv_writer_matches_reader() {
        let events = vec![ev("A", 1, Move, true), ev("A", 2, Shot, false)];
        let mut buf = Vec::new();
        write_neutral_csv(&events, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(&NEUTRAL_CSV_HEADER.join(",")));
        let back = parse_events(buf.as_slice(), InputFormat::NeutralCsv, &ParseOptions::default()).unwrap();
        assert_eq!(back.events, events);
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (
            0u8..3,
            0u8..2,
            any::<bool>(),
            prop::option::of(0.0f64..=1.0),
            (0.0f64..=105.0, 0.0f64..=68.0, 0.0f64..=105.0, 0.0f64..=68.0),
            any::<bool>(),
            any::<u32>(),
        )
            .prop_map(|(m, t, success, xg, (sx, sy, ex, ey), shot, seq)| Event {
                match_id: format!("m{m}"),
                team_id: format!("t{t}"),
                seq: seq as u64,
                kind: if shot { Shot } else { Move },
                start: Point::new(sx, sy),
                end: if shot && xg.is_some() {
                    None
                } else {
                    Some(Point::new(ex, ey))
                },
                success,
                shot_xg: if shot { xg } else { None },
                restart: seq % 7 == 0,
            })
    }

    proptest! {
        #[test]
        fn neutral_json_round_trip(events in prop::collection::vec(arb_event(), 0..40)) {
            let mut buf = Vec::new();
            write_neutral_json(&events, &mut buf).unwrap();
            let back = parse_events(buf.as_slice(), InputFormat::NeutralJson, &ParseOptions::default()).unwrap();
            prop_assert_eq!(back.events, events);
        }

        #[test]
        fn segmentation_conserves_events_and_terminals(events in prop::collection::vec(arb_event(), 0..60)) {
            let poss = segment_possessions(&events);
            let total: usize = poss.iter().map(|p| p.events.len()).sum();
            prop_assert_eq!(total, events.len());
            for p in &poss {
                prop_assert!(!p.events.is_empty());
                prop_assert_eq!(p.terminal, Terminal::of_last(p.events.last().unwrap()));
                prop_assert!(p.events.iter().all(|e| e.team_id == p.team_id));
                // only the last event may end a possession on its own
                for e in &p.events[..p.events.len() - 1] {
                    prop_assert!(e.is_move() && e.success);
                }
            }
        }
    }
}
