use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use pitchmdp::analysis::{
    heatmap, sweep, sweep_table_csv, validate_team, PreparedModel, SweepResult, TeamValidation, ValidationThresholds,
};
use pitchmdp::chain::EmpiricalMode;
use pitchmdp::config::Config;
use pitchmdp::events::{
    by_team, parse_events, segment_possessions, write_neutral_json, Event, IngestStats, InputFormat, ParseOptions,
    ParsedEvents, Possession,
};
use pitchmdp::export::{fmt_num, season_report_csv, to_report_json};
use pitchmdp::grid::{GridSpec, RegionMask};
use pitchmdp::model::{fit_from_counts, validate_model, TeamCounts};
use pitchmdp::policy::league_relative_error;
use pitchmdp::statsbomb::{self, MatchFilter};
use pitchmdp::{SweepMode, TeamModel, WhatIfRequest};
use rayon::prelude::*;
use serde_json::json;

use crate::{AnalyzeArgs, Format, Global, IngestArgs, ServeArgs, WhatifArgs};

pub enum Outcome {
    Clean,
    Failures(usize),
}

impl Outcome {
    fn from_count(n: usize) -> Self {
        if n == 0 {
            Outcome::Clean
        } else {
            Outcome::Failures(n)
        }
    }
}

pub struct Context {
    cfg: Config,
    /// Directory of the config file; relative config paths resolve here.
    cfg_dir: PathBuf,
    out: PathBuf,
    teams: BTreeSet<String>,
    formats: Vec<Format>,
    grid: GridSpec,
    masks: Vec<RegionMask>,
}

const ARCHIVE: &str = "events.json";
const NAMES: &str = pitchmdp_server::TEAM_NAMES_FILE;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn file_stem(team_id: &str) -> String {
    team_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs `f` for every team in parallel; failures are logged and counted,
/// never fatal for the other teams.
fn per_team<T, F>(teams: &[String], f: F) -> (Vec<T>, usize)
where
    T: Send,
    F: Fn(&str) -> Result<T> + Sync,
{
    let results: Vec<(String, Result<T>)> = teams.par_iter().map(|t| (t.clone(), f(t))).collect();
    let mut ok = Vec::new();
    let mut failed = 0;
    for (team, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::error!("team {team}: {e:#}");
                failed += 1;
            }
        }
    }
    (ok, failed)
}

impl Context {
    pub fn new(g: Global) -> Result<Self> {
        let (cfg, cfg_dir) = match &g.config {
            Some(p) => (
                Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (Config::default(), PathBuf::new()),
        };
        let grid = cfg.grid_spec()?;
        let masks = cfg.masks()?;
        Ok(Self {
            cfg,
            cfg_dir,
            out: g.out,
            teams: g.teams.into_iter().collect(),
            formats: g.formats,
            grid,
            masks,
        })
    }

    fn formats_or(&self, default: &[Format]) -> Vec<Format> {
        if self.formats.is_empty() {
            default.to_vec()
        } else {
            self.formats.clone()
        }
    }

    fn selected(&self, team: &str) -> bool {
        self.teams.is_empty() || self.teams.contains(team)
    }

    fn models_dir(&self) -> PathBuf {
        self.out.join("models")
    }

    fn read_archive(&self) -> Result<Vec<Event>> {
        let path = self.out.join(ARCHIVE);
        let file = File::open(&path).with_context(|| format!("{} (run `ingest` first)", path.display()))?;
        let parsed = parse_events(BufReader::new(file), InputFormat::NeutralJson, &ParseOptions::default())
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(parsed.events)
    }

    fn possessions_by_team(&self) -> Result<BTreeMap<String, Vec<Possession>>> {
        Ok(by_team(segment_possessions(&self.read_archive()?)))
    }

    fn load_models(&self) -> Result<Vec<TeamModel>> {
        let dir = self.models_dir();
        let (models, _) = pitchmdp_server::load_models(&dir).with_context(|| "run `build` first".to_string())?;
        let models: Vec<TeamModel> = models.into_iter().filter(|m| self.selected(&m.team_id)).collect();
        if models.is_empty() {
            bail!("no models selected in {}", dir.display());
        }
        Ok(models)
    }

    pub fn ingest(&self, args: &IngestArgs) -> Result<Outcome> {
        let input = match (&args.input, self.cfg.raw("input.path")) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => self.cfg_dir.join(p),
            (None, None) => bail!("no input: pass --input or set input.path"),
        };
        let format = match (args.input_format, self.cfg.raw("input.format")) {
            (Some(f), _) => f,
            (None, Some(f)) => f.parse().map_err(anyhow::Error::msg)?,
            (None, None) => detect_format(&input),
        };
        let opts = ParseOptions {
            match_id: None,
            exclude_penalties: self.cfg.get_or("input.exclude_penalties", true)?,
        };
        let mut names = BTreeMap::new();
        let parsed = match format {
            InputFormat::StatsbombOpen => {
                let filter = MatchFilter {
                    competition_id: self.cfg.raw("input.competition_id").map(str::to_string),
                    season_id: self.cfg.raw("input.season_id").map(str::to_string),
                };
                names = statsbomb::team_names(&input)?;
                statsbomb::read_dir(&input, &opts, &filter)?
            }
            neutral => read_neutral(&input, neutral, &opts)?,
        };
        if parsed.events.is_empty() {
            bail!("{}: no on-ball events found", input.display());
        }
        let mut archive = Vec::new();
        write_neutral_json(&parsed.events, &mut archive)?;
        write(&self.out.join(ARCHIVE), archive)?;
        write(&self.out.join("ingest_stats.json"), to_report_json(&parsed.stats)?)?;
        write(&self.out.join(NAMES), to_report_json(&names)?)?;
        let IngestStats { records, events, .. } = parsed.stats;
        log::info!(
            "ingested {events} on-ball events from {records} records ({} skipped, {} penalties excluded)",
            parsed.stats.skipped_total(),
            parsed.stats.penalties_excluded
        );
        Ok(Outcome::Clean)
    }

    pub fn build(&self) -> Result<Outcome> {
        let by_team = self.possessions_by_team()?;
        let intent = self.cfg.intent_mode()?;
        let alpha = self.cfg.smoothing_alpha()?;
        let teams: Vec<String> = by_team.keys().cloned().collect();
        // The league pool always covers every team, filtered or not.
        let (counts, failed) = per_team(&teams, |t| {
            Ok((t.to_string(), TeamCounts::tally(&by_team[t], &self.grid, intent)?))
        });
        if failed > 0 {
            bail!("{failed} team(s) could not be tallied");
        }
        let counts: BTreeMap<String, TeamCounts> = counts.into_iter().collect();
        let pool = TeamCounts::pooled(self.grid, counts.values());
        for t in &self.teams {
            if !counts.contains_key(t) {
                log::warn!("team {t} has no events; skipped");
            }
        }
        let selected: Vec<String> = teams.into_iter().filter(|t| self.selected(t)).collect();
        if selected.is_empty() {
            bail!("no selected team has events");
        }

        let dir = self.models_dir();
        if self.teams.is_empty() && dir.is_dir() {
            for entry in std::fs::read_dir(&dir)? {
                let p = entry?.path();
                if p.extension().is_some_and(|x| x == "json") {
                    std::fs::remove_file(&p)?;
                }
            }
        }
        let (reports, mut failures) = per_team(&selected, |t| {
            let model = fit_from_counts(t, &counts[t], alpha, &pool)?;
            let report = validate_model(&model);
            write(&dir.join(format!("{}.json", file_stem(t))), model.to_json()?)?;
            Ok((report, counts[t].intent_fallbacks))
        });
        let mut entries = Vec::new();
        for (report, fallbacks) in &reports {
            if !report.is_valid() {
                for v in &report.violations {
                    log::error!("team {}: {}", report.team_id, v.message);
                }
                failures += 1;
            }
            let c = &counts[&report.team_id];
            entries.push(json!({
                "team_id": report.team_id,
                "possessions": c.possessions,
                "goals": c.goals,
                "intent_fallbacks": fallbacks,
                "validation": report,
            }));
        }
        entries.sort_by(|a, b| a["team_id"].as_str().cmp(&b["team_id"].as_str()));
        let names_path = self.out.join(NAMES);
        if names_path.is_file() {
            std::fs::copy(&names_path, dir.join(NAMES))?;
        }
        let masks: Vec<_> = self
            .masks
            .iter()
            .map(|m| json!({"name": m.name, "zones": m.len()}))
            .collect();
        let options = json!({
            "intent": intent,
            "alpha": alpha,
            "grid": self.grid,
            "masks": masks,
            "mask_note": "default region masks are geometric approximations; override with mask.<name>.zones",
        });
        write(
            &self.out.join("build_report.json"),
            to_report_json(&json!({"options": options, "teams": entries}))?,
        )?;
        log::info!("built {} model(s) in {}", reports.len(), dir.display());
        Ok(Outcome::from_count(failures))
    }

    pub fn analyze(&self, args: &AnalyzeArgs) -> Result<Outcome> {
        let analyses = args.resolve()?;
        let formats = self.formats_or(&[Format::Csv, Format::Json, Format::Svg]);
        let models = self.load_models()?;
        let ids: Vec<String> = models.iter().map(|m| m.team_id.clone()).collect();
        let by_id: BTreeMap<&str, &TeamModel> = models.iter().map(|m| (m.team_id.as_str(), m)).collect();
        let (written, failures) = per_team(&ids, |t| {
            let model = by_id[t];
            let dir = self.out.join("heatmaps").join(file_stem(t));
            let mut n = 0;
            for &a in &analyses {
                let h = heatmap(model, a, &self.masks)?;
                for f in &formats {
                    let body = match f {
                        Format::Csv => h.to_csv(),
                        Format::Json => to_report_json(&h)?,
                        Format::Svg => h.to_svg(),
                    };
                    write(&dir.join(format!("{a}.{}", f.ext())), body)?;
                    n += 1;
                }
            }
            Ok(n)
        });
        log::info!("wrote {} heatmap file(s)", written.iter().sum::<usize>());
        Ok(Outcome::from_count(failures))
    }

    pub fn whatif(&self, args: &WhatifArgs) -> Result<Outcome> {
        let quality = !args.no_quality_adjust && self.cfg.get_or("whatif.quality_adjust", true)?;
        let formats = self.formats_or(&[Format::Csv, Format::Json]);
        let models = self.load_models()?;
        let ids: Vec<String> = models.iter().map(|m| m.team_id.clone()).collect();
        let prepared: BTreeMap<String, PreparedModel> = models
            .into_par_iter()
            .map(|m| Ok((m.team_id.clone(), PreparedModel::new(m)?)))
            .collect::<Result<_>>()?;
        let dir = self.out.join("whatif");

        if let Some(x) = args.x {
            let req = WhatIfRequest {
                zones: args.zone_ids(),
                x,
                quality_adjust: quality,
            };
            let (_, failures) = per_team(&ids, |t| {
                let r = prepared[t].whatif(&req)?;
                for f in &formats {
                    let body = match f {
                        Format::Csv => season_report_csv(&r),
                        Format::Json => to_report_json(&r)?,
                        Format::Svg => continue,
                    };
                    write(&dir.join("custom").join(format!("{}.{}", file_stem(t), f.ext())), body)?;
                }
                println!("{t}\t{}", fmt_num(r.delta_goals));
                Ok(())
            });
            return Ok(Outcome::from_count(failures));
        }

        let xs = if args.sweep.is_empty() {
            self.cfg.sweep()?
        } else {
            let mut cfg = Config::default();
            let joined: Vec<String> = args.sweep.iter().map(|x| x.to_string()).collect();
            cfg.set("whatif.sweep", joined.join(","));
            cfg.sweep()?
        };
        let k: usize = self.cfg.get_or("whatif.targeted_k", 1)?;
        let modes = if args.modes.is_empty() {
            vec![SweepMode::Uniform, SweepMode::Targeted]
        } else {
            args.modes.clone()
        };
        let mut failures = 0;
        for mode in modes {
            let (results, failed): (Vec<SweepResult>, usize) =
                per_team(&ids, |t| Ok(sweep(&prepared[t], mode, &self.masks, &xs, quality, k)?));
            failures += failed;
            for r in &results {
                let warned: usize = r.reports.iter().map(|r| r.warnings.len()).sum();
                if warned > 0 {
                    log::warn!("team {} ({mode}): {warned} zone adjustment(s) were no-ops", r.team_id);
                }
            }
            for f in &formats {
                let body = match f {
                    Format::Csv => sweep_table_csv(&xs, &results),
                    Format::Json => to_report_json(&results)?,
                    Format::Svg => continue,
                };
                write(&dir.join(format!("{mode}.{}", f.ext())), body)?;
            }
            log::info!("{mode} sweep over {} team(s) and {} value(s)", results.len(), xs.len());
        }
        Ok(Outcome::from_count(failures))
    }

    pub fn validate(&self) -> Result<Outcome> {
        let d = ValidationThresholds::default();
        let thresholds = ValidationThresholds {
            min_support: self.cfg.get_or("validate.min_support", d.min_support)?,
            max_residual: self.cfg.get_or("validate.max_residual", d.max_residual)?,
            max_method_gap: self.cfg.get_or("validate.max_method_gap", d.max_method_gap)?,
        };
        let empirical = match self.cfg.raw("validate.empirical").unwrap_or("per_visit") {
            "per_visit" => EmpiricalMode::PerVisit,
            "per_possession" => EmpiricalMode::PerPossession,
            other => bail!("validate.empirical: unknown mode {other:?}"),
        };
        let models = self.load_models()?;
        let possessions = self.possessions_by_team()?;
        let ids: Vec<String> = models.iter().map(|m| m.team_id.clone()).collect();
        let by_id: BTreeMap<&str, &TeamModel> = models.iter().map(|m| (m.team_id.as_str(), m)).collect();
        let (mut results, mut failures): (Vec<TeamValidation>, usize) = per_team(&ids, |t| {
            let own = possessions.get(t).map(Vec::as_slice).unwrap_or_default();
            Ok(validate_team(by_id[t], own, &thresholds, empirical)?)
        });
        results.sort_by(|a, b| a.team_id.cmp(&b.team_id));
        let checks: Vec<_> = results.iter().filter_map(|r| r.baseline.clone()).collect();
        let league = league_relative_error(&checks);

        let mut csv = String::from(
            "team_id,passed,fundamental_residual,value_method_gap,value_mae,expected_goals,actual_goals,relative_error,inert_zones,inert_fraction\n",
        );
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for r in &results {
            let b = r.baseline.as_ref();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.team_id,
                r.passed(),
                fmt_num(r.fundamental_residual),
                fmt_num(r.value_method_gap),
                opt(r.value_mae),
                opt(b.map(|b| b.expected_goals)),
                b.map(|b| b.actual_goals.to_string()).unwrap_or_default(),
                opt(b.map(|b| b.relative_error)),
                r.model.inert_zones,
                fmt_num(r.model.inert_fraction),
            ));
            println!(
                "{}\t{}\tmae={}\trel_err={}",
                r.team_id,
                if r.passed() { "ok" } else { "FAILED" },
                opt(r.value_mae),
                opt(b.map(|b| b.relative_error))
            );
            for f in &r.failures {
                log::error!("team {}: {f}", r.team_id);
            }
            failures += usize::from(!r.passed());
        }
        if let Some(e) = league {
            println!("league\tmean_rel_err={}", fmt_num(e));
        }
        write(&self.out.join("validation.csv"), csv)?;
        let summary = json!({
            "thresholds": thresholds,
            "empirical": empirical,
            "league_relative_error": league,
            "teams": results,
        });
        write(&self.out.join("validation.json"), to_report_json(&summary)?)?;
        Ok(Outcome::from_count(failures))
    }

    pub fn serve(&self, args: &ServeArgs) -> Result<Outcome> {
        let dir = args.models.clone().unwrap_or_else(|| self.models_dir());
        let store = pitchmdp_server::ModelStore::load_dir(&dir, self.masks.clone())
            .with_context(|| format!("loading models from {}", dir.display()))?;
        log::info!(
            "serving {} team(s) from {}",
            store.snapshot().teams.len(),
            dir.display()
        );
        let app = pitchmdp_server::router(std::sync::Arc::new(store), args.static_dir.as_deref());
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(pitchmdp_server::serve(args.bind, app))?;
        Ok(Outcome::Clean)
    }
}

fn detect_format(input: &Path) -> InputFormat {
    match input.extension().and_then(|x| x.to_str()) {
        Some("csv") => InputFormat::NeutralCsv,
        Some("json") => InputFormat::NeutralJson,
        _ => InputFormat::StatsbombOpen,
    }
}

/// A neutral file, or every file of that format in a directory (name order).
fn read_neutral(input: &Path, format: InputFormat, opts: &ParseOptions) -> Result<ParsedEvents> {
    let ext = if format == InputFormat::NeutralCsv {
        "csv"
    } else {
        "json"
    };
    let files = if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == ext))
            .collect();
        files.sort();
        files
    } else {
        vec![input.to_path_buf()]
    };
    let mut out = ParsedEvents::default();
    for f in files {
        let file = File::open(&f).with_context(|| format!("opening {}", f.display()))?;
        let p = parse_events(BufReader::new(file), format, opts).with_context(|| format!("parsing {}", f.display()))?;
        out.stats.merge(&p.stats);
        out.events.extend(p.events);
    }
    Ok(out)
}
