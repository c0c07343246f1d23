//! The analyses offered by the command line and the HTTP API. Both front
//! ends go through these functions, so equal inputs give equal outputs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    empirical_values, fundamental_matrix, inverse_residual, scoring_value, value_mae, EmpiricalMode, InducedChain,
    SolverError, ValueMethod,
};
use crate::events::Possession;
use crate::export::{Heatmap, ValueKind};
use crate::grid::{find_mask, GridError, RegionMask, ZoneId, FLANK, LONG_DISTANCE};
use crate::model::{validate_model, TeamModel, ValidationReport};
use crate::policy::{
    season_whatif_from, targeted_zone_selection, validate_baseline, Baseline, BaselineCheck, PolicyAdjustment,
    PolicyError, SeasonReport,
};
use crate::scenario::{batch_heatmap, ScenarioError, ScenarioKind};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown analysis {0:?}")]
    UnknownAnalysis(String),
    #[error("no {0} mask is configured")]
    MissingMask(&'static str),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    DirectShot,
    /// Move `k` times, then shoot, against shooting now.
    ShootVsMove {
        k: usize,
    },
    /// Move into the flank, move again, shoot.
    FlankFirst,
    BetterShot,
}

impl Analysis {
    /// The four batch analyses.
    pub const STANDARD: [Analysis; 4] = [
        Analysis::ShootVsMove { k: 1 },
        Analysis::ShootVsMove { k: 2 },
        Analysis::FlankFirst,
        Analysis::BetterShot,
    ];

    /// Accepts `shoot_vs_move_k1`, `shoot_vs_move` with a separate `k`
    /// (default 1), `flank_first`, `better_shot` and `direct_shot`.
    pub fn parse(name: &str, k: Option<usize>) -> Result<Self, AnalysisError> {
        let bad = || AnalysisError::UnknownAnalysis(name.to_string());
        let a = match name {
            "direct_shot" => Analysis::DirectShot,
            "flank_first" => Analysis::FlankFirst,
            "better_shot" => Analysis::BetterShot,
            "shoot_vs_move" => Analysis::ShootVsMove { k: k.unwrap_or(1) },
            other => {
                let k = other
                    .strip_prefix("shoot_vs_move_k")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(bad)?;
                Analysis::ShootVsMove { k }
            }
        };
        if a == (Analysis::ShootVsMove { k: 0 }) {
            return Err(bad());
        }
        Ok(a)
    }

    pub fn value_kind(self) -> ValueKind {
        match self {
            Analysis::BetterShot | Analysis::DirectShot => ValueKind::Probability,
            _ => ValueKind::Delta,
        }
    }

    pub fn scenario(self, masks: &[RegionMask]) -> Result<ScenarioKind, AnalysisError> {
        Ok(match self {
            Analysis::DirectShot => ScenarioKind::DirectShot,
            Analysis::ShootVsMove { k } => ScenarioKind::k_moves(k),
            Analysis::FlankFirst => {
                let flank = find_mask(masks, FLANK).ok_or(AnalysisError::MissingMask(FLANK))?;
                ScenarioKind::flank_first_then_shoot(flank.clone())
            }
            Analysis::BetterShot => ScenarioKind::BetterShotEver { threshold: None },
        })
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Analysis::DirectShot => f.write_str("direct_shot"),
            Analysis::ShootVsMove { k } => write!(f, "shoot_vs_move_k{k}"),
            Analysis::FlankFirst => f.write_str("flank_first"),
            Analysis::BetterShot => f.write_str("better_shot"),
        }
    }
}

impl FromStr for Analysis {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Analysis::parse(s, None)
    }
}

/// Evaluates `analysis` from every field state.
pub fn heatmap(model: &TeamModel, analysis: Analysis, masks: &[RegionMask]) -> Result<Heatmap, AnalysisError> {
    let kind = analysis.scenario(masks)?;
    let results = batch_heatmap(model, &kind, &RegionMask::all(&model.grid))?;
    Ok(Heatmap::new(
        &model.team_id,
        &analysis.to_string(),
        model.grid,
        analysis.value_kind(),
        &results,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub zones: Vec<ZoneId>,
    pub x: f64,
    #[serde(default = "default_quality")]
    pub quality_adjust: bool,
}

fn default_quality() -> bool {
    true
}

/// A model together with its baseline season, computed once.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub model: TeamModel,
    pub start_counts: Vec<f64>,
    pub baseline: Baseline,
}

impl PreparedModel {
    pub fn new(model: TeamModel) -> Result<Self, AnalysisError> {
        let start_counts = model.start_counts();
        let baseline = Baseline::compute(&model, &start_counts)?;
        Ok(Self {
            model,
            start_counts,
            baseline,
        })
    }

    pub fn whatif(&self, req: &WhatIfRequest) -> Result<SeasonReport, AnalysisError> {
        let adj = PolicyAdjustment::new(req.zones.iter().copied(), req.x)?;
        Ok(season_whatif_from(
            &self.model,
            &self.baseline,
            &adj,
            &self.start_counts,
            req.quality_adjust,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every long-distance zone.
    Uniform,
    /// Long-distance zones where shooting beats moving first.
    Targeted,
}

impl FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(SweepMode::Uniform),
            "targeted" => Ok(SweepMode::Targeted),
            other => Err(format!("unknown what-if mode {other:?} (uniform or targeted)")),
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::Uniform => "uniform",
            SweepMode::Targeted => "targeted",
        })
    }
}

pub fn sweep_zones(
    model: &TeamModel,
    mode: SweepMode,
    masks: &[RegionMask],
    k: usize,
) -> Result<RegionMask, AnalysisError> {
    let long = find_mask(masks, LONG_DISTANCE).ok_or(AnalysisError::MissingMask(LONG_DISTANCE))?;
    Ok(match mode {
        SweepMode::Uniform => long.clone(),
        SweepMode::Targeted => targeted_zone_selection(model, long, k)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub team_id: String,
    pub mode: SweepMode,
    pub zones: Vec<ZoneId>,
    pub reports: Vec<SeasonReport>,
}

pub fn sweep(
    prepared: &PreparedModel,
    mode: SweepMode,
    masks: &[RegionMask],
    xs: &[f64],
    quality_adjust: bool,
    k: usize,
) -> Result<SweepResult, AnalysisError> {
    let zones: Vec<ZoneId> = sweep_zones(&prepared.model, mode, masks, k)?.iter().collect();
    let reports = xs
        .par_iter()
        .map(|&x| {
            prepared.whatif(&WhatIfRequest {
                zones: zones.clone(),
                x,
                quality_adjust,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        team_id: prepared.model.team_id.clone(),
        mode,
        zones,
        reports,
    })
}

/// Team × x table of ΔE[goals].
pub fn sweep_table_csv(xs: &[f64], results: &[SweepResult]) -> String {
    use crate::export::fmt_num;
    let mut out = String::from("team_id,mode,zones");
    for x in xs {
        out.push_str(&format!(",{}", fmt_num(*x)));
    }
    out.push('\n');
    for r in results {
        out.push_str(&format!("{},{},{}", r.team_id, r.mode, r.zones.len()));
        for rep in &r.reports {
            out.push_str(&format!(",{}", fmt_num(rep.delta_goals)));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationThresholds {
    pub min_support: f64,
    pub max_residual: f64,
    pub max_method_gap: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self {
            min_support: 20.0,
            max_residual: 1e-8,
            max_method_gap: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamValidation {
    pub team_id: String,
    pub model: ValidationReport,
    /// ‖N(I − Q) − I‖∞.
    pub fundamental_residual: f64,
    /// Largest gap between value iteration and the linear solve.
    pub value_method_gap: f64,
    /// Mean absolute error of model values against observed scoring rates.
    pub value_mae: Option<f64>,
    pub baseline: Option<BaselineCheck>,
    pub failures: Vec<String>,
}

impl TeamValidation {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate_team(
    model: &TeamModel,
    possessions: &[Possession],
    thresholds: &ValidationThresholds,
    empirical: EmpiricalMode,
) -> Result<TeamValidation, AnalysisError> {
    let report = validate_model(model);
    let mut failures: Vec<String> = report
        .violations
        .iter()
        .map(|v| match v.zone {
            Some(z) => format!("zone {z}: {}", v.message),
            None => v.message.clone(),
        })
        .collect();
    let chain = InducedChain::from_model(model);
    let n = fundamental_matrix(&chain)?;
    let residual = inverse_residual(&n, &chain);
    if residual > thresholds.max_residual {
        failures.push(format!("fundamental matrix residual {residual:e}"));
    }
    let linear = scoring_value(&chain, ValueMethod::LinearSolve)?;
    let iterated = scoring_value(&chain, ValueMethod::iteration())?;
    let gap = linear
        .values
        .iter()
        .zip(&iterated.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if gap > thresholds.max_method_gap {
        failures.push(format!("value iteration and linear solve differ by {gap:e}"));
    }
    let mae = if possessions.is_empty() {
        None
    } else {
        let emp = empirical_values(possessions, &model.grid, empirical)?;
        value_mae(&emp, &linear.values, thresholds.min_support)
    };
    let baseline = match validate_baseline(model, possessions) {
        Ok(b) => Some(b),
        Err(PolicyError::NoGoals(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(TeamValidation {
        team_id: model.team_id.clone(),
        model: report,
        fundamental_residual: residual,
        value_method_gap: gap,
        value_mae: mae,
        baseline,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{default_masks, GridSpec, MaskParams};
    use crate::synthetic::toy_chain_model;

    #[test]
    fn parse_names() {
        assert_eq!(
            Analysis::parse("shoot_vs_move_k2", None).unwrap(),
            Analysis::ShootVsMove { k: 2 }
        );
        assert_eq!(
            Analysis::parse("shoot_vs_move", Some(3)).unwrap(),
            Analysis::ShootVsMove { k: 3 }
        );
        assert_eq!(
            Analysis::parse("shoot_vs_move", None).unwrap(),
            Analysis::ShootVsMove { k: 1 }
        );
        assert!(Analysis::parse("shoot_vs_move_k0", None).is_err());
        assert!(Analysis::parse("xg", None).is_err());
        for a in Analysis::STANDARD {
            assert_eq!(a.to_string().parse::<Analysis>().unwrap(), a);
        }
    }

    #[test]
    fn toy_k1_heatmap() {
        let h = heatmap(&toy_chain_model(), Analysis::ShootVsMove { k: 1 }, &[]).unwrap();
        assert!((h.cells[0].probability - 0.225).abs() < 1e-15);
        assert!((h.defensive.unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            heatmap(&toy_chain_model(), Analysis::FlankFirst, &[]),
            Err(AnalysisError::MissingMask(_))
        ));
    }

    #[test]
    fn toy_whatif_zero() {
        let p = PreparedModel::new(toy_chain_model()).unwrap();
        let r = p
            .whatif(&WhatIfRequest {
                zones: vec![ZoneId(0), ZoneId(1)],
                x: 0.0,
                quality_adjust: true,
            })
            .unwrap();
        assert_eq!(r.delta_goals, 0.0);
    }

    #[test]
    fn sweep_table_has_one_row_per_team() {
        let grid = GridSpec::default();
        let masks = default_masks(&grid, &MaskParams::default());
        let model = crate::synthetic::league_model(grid, "L", 2);
        let p = PreparedModel::new(model).unwrap();
        let xs = [-0.1, 0.0, 0.1];
        let r = sweep(&p, SweepMode::Uniform, &masks, &xs, true, 1).unwrap();
        assert_eq!(r.reports[1].delta_goals, 0.0);
        let t = sweep(&p, SweepMode::Targeted, &masks, &xs, true, 1).unwrap();
        assert!(t.zones.iter().all(|z| r.zones.contains(z)));
        let csv = sweep_table_csv(&xs, &[r, t]);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("team_id,mode,zones,-0.1,0,0.1\n"));
    }
}
