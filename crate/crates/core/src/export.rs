//! Deterministic text artifacts: 9-significant-digit numbers, grid-shaped
//! heatmaps (CSV, JSON, SVG) and zone value tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::grid::{GridSpec, ZoneId};
use crate::policy::SeasonReport;
use crate::scenario::ScenarioResult;

pub const SIG_DIGITS: usize = 9;

/// Rounds to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text of the rounded value.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        format!("{r}")
    } else {
        String::new()
    }
}

/// Rounds every float inside a JSON tree. Integers are left alone.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON of `value` with rounded floats and a trailing newline.
pub fn to_report_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut text = serde_json::to_string_pretty(&round_json(serde_json::to_value(value)?))?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Signed difference; rendered on a diverging scale around 0.
    Delta,
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub zone: ZoneId,
    /// `None` for the defensive-half state.
    pub column: Option<usize>,
    pub row: Option<usize>,
    pub probability: f64,
    pub direct_shot: f64,
    pub delta: Option<f64>,
    pub no_admissible_action: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub team_id: String,
    pub analysis: String,
    pub grid: GridSpec,
    pub value_kind: ValueKind,
    pub cells: Vec<HeatmapCell>,
    /// `rows × columns` of the displayed value (delta or probability);
    /// `None` outside the evaluated region.
    pub values: Vec<Vec<Option<f64>>>,
    pub defensive: Option<f64>,
}

impl Heatmap {
    pub fn new(team_id: &str, analysis: &str, grid: GridSpec, kind: ValueKind, results: &[ScenarioResult]) -> Self {
        let mut values = vec![vec![None; grid.columns]; grid.rows];
        let mut defensive = None;
        let mut cells = Vec::with_capacity(results.len());
        for r in results {
            let shown = match kind {
                ValueKind::Delta => r.delta,
                ValueKind::Probability => Some(r.probability),
            };
            let coords = grid.cell_coords(r.zone);
            match coords {
                Some((c, row)) => values[row][c] = shown,
                None => defensive = shown,
            }
            cells.push(HeatmapCell {
                zone: r.zone,
                column: coords.map(|c| c.0),
                row: coords.map(|c| c.1),
                probability: r.probability,
                direct_shot: r.direct_shot,
                delta: r.delta,
                no_admissible_action: r.no_admissible_action,
            });
        }
        Self {
            team_id: team_id.to_string(),
            analysis: analysis.to_string(),
            grid,
            value_kind: kind,
            cells,
            values,
            defensive,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("zone_index,column,row,probability,direct_shot,delta,no_admissible_action\n");
        let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.zone.0,
                opt(c.column),
                opt(c.row),
                fmt_num(c.probability),
                fmt_num(c.direct_shot),
                c.delta.map_or(String::new(), fmt_num),
                c.no_admissible_action
            );
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let finite = self.values.iter().flatten().flatten().chain(self.defensive.iter());
        let scale = finite.fold(0.0f64, |m, v| m.max(v.abs()));
        pitch_svg(
            &self.grid,
            &self.values,
            self.defensive,
            self.value_kind,
            scale,
            &format!("{} {}", self.team_id, self.analysis),
        )
    }
}

/// Blue for positive, red for negative, white at zero.
fn diverging(v: f64, scale: f64) -> String {
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |a: f64| (255.0 * (1.0 - a.abs())).round() as u8;
    if t >= 0.0 {
        let f = fade(t);
        format!("#{f:02x}{f:02x}ff")
    } else {
        let f = fade(t);
        format!("#ff{f:02x}{f:02x}")
    }
}

/// White to dark green.
fn sequential(v: f64, scale: f64) -> String {
    let t = if scale > 0.0 { (v / scale).clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 0.0),
        lerp(255.0, 104.0),
        lerp(255.0, 55.0)
    )
}

fn pitch_svg(
    grid: &GridSpec,
    values: &[Vec<Option<f64>>],
    defensive: Option<f64>,
    kind: ValueKind,
    scale: f64,
    title: &str,
) -> String {
    const PX: f64 = 8.0;
    let (w, h) = (grid.pitch_length * PX, grid.pitch_width * PX);
    let colour = |v: f64| match kind {
        ValueKind::Delta => diverging(v, scale),
        ValueKind::Probability => sequential(v, scale),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt_num(w),
        fmt_num(h + 24.0),
        fmt_num(w),
        fmt_num(h + 24.0)
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#f4f4f4\"/>",
        fmt_num(w),
        fmt_num(h)
    );
    if let Some(v) = defensive {
        let _ = writeln!(
            s,
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#999\"><title>zone 0: {}</title></rect>",
            fmt_num(w / 2.0),
            fmt_num(h),
            colour(v),
            fmt_num(v)
        );
    }
    let (cw, ch) = (grid.cell_length() * PX, grid.cell_width() * PX);
    for (row, cells) in values.iter().enumerate() {
        for (col, v) in cells.iter().enumerate() {
            let zone = grid.zone_at(col, row).0;
            let (x, y) = (w / 2.0 + col as f64 * cw, row as f64 * ch);
            let (fill, label) = match v {
                Some(v) => (colour(*v), fmt_num(*v)),
                None => ("none".to_string(), "n/a".to_string()),
            };
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"#ccc\" stroke-width=\"0.5\"><title>zone {zone}: {label}</title></rect>",
                fmt_num(x),
                fmt_num(y),
                fmt_num(cw),
                fmt_num(ch)
            );
        }
    }
    // pitch outline and halfway line
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\" stroke-width=\"2\"/>",
        fmt_num(w),
        fmt_num(h)
    );
    let _ = writeln!(
        s,
        "<line x1=\"{0}\" y1=\"0\" x2=\"{0}\" y2=\"{1}\" stroke=\"#333\" stroke-width=\"2\"/>",
        fmt_num(w / 2.0),
        fmt_num(h)
    );
    let legend = match kind {
        ValueKind::Delta => format!(
            "red: shoot now is better, blue: moving is better (|max| {})",
            fmt_num(scale)
        ),
        ValueKind::Probability => format!("probability, max {}", fmt_num(scale)),
    };
    let _ = writeln!(
        s,
        "<text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        fmt_num(h + 18.0),
        escape(&legend)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `zone_index,value` rows.
pub fn values_csv(values: &[f64]) -> String {
    let mut out = String::from("zone_index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_num(*v));
    }
    out
}

/// Grid-shaped JSON of a per-zone vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneGrid {
    pub grid: GridSpec,
    pub defensive: f64,
    pub values: Vec<Vec<f64>>,
}

impl ZoneGrid {
    pub fn new(grid: GridSpec, per_zone: &[f64]) -> Self {
        let values = (0..grid.rows)
            .map(|r| (0..grid.columns).map(|c| per_zone[grid.zone_at(c, r).0]).collect())
            .collect();
        Self {
            grid,
            defensive: per_zone[0],
            values,
        }
    }
}

/// Two CSV sections: the summary line, then one row per zone with shots.
pub fn season_report_csv(r: &SeasonReport) -> String {
    let mut out = String::from("team_id,x,quality_adjust,baseline_goals,counterfactual_goals,delta_goals\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        r.team_id,
        fmt_num(r.x),
        r.quality_adjust,
        fmt_num(r.baseline_goals),
        fmt_num(r.counterfactual_goals),
        fmt_num(r.delta_goals)
    );
    out.push_str("\nzone_index,baseline_shots,counterfactual_shots,delta_shots,goal_prob,effective_xg\n");
    for z in &r.zone_shots {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            z.zone.0,
            fmt_num(z.baseline),
            fmt_num(z.counterfactual),
            fmt_num(z.delta),
            fmt_num(z.goal_prob),
            fmt_num(z.effective_xg)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(123456.7891234), "123456.789");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5e-12), "-0.0000000000025");
    }

    #[test]
    fn json_rounding_keeps_integers() {
        let v = round_json(json!({"a": 1, "b": [0.1234567891234, 7], "c": "x"}));
        assert_eq!(v, json!({"a": 1, "b": [0.123456789, 7], "c": "x"}));
    }

    #[test]
    fn colour_ramps() {
        assert_eq!(diverging(0.0, 1.0), "#ffffff");
        assert_eq!(diverging(1.0, 1.0), "#0000ff");
        assert_eq!(diverging(-1.0, 1.0), "#ff0000");
        assert_eq!(diverging(0.3, 0.0), "#ffffff");
        assert_eq!(sequential(0.0, 1.0), "#ffffff");
    }

    #[test]
    fn heatmap_layout() {
        let grid = GridSpec::with_cells(2, 1).unwrap();
        let res = |z: usize, p: f64| ScenarioResult {
            zone: ZoneId(z),
            probability: p,
            direct_shot: 0.1,
            delta: Some(p - 0.1),
            no_admissible_action: false,
        };
        let h = Heatmap::new("t", "k1", grid, ValueKind::Delta, &[res(0, 0.1), res(2, 0.3)]);
        assert_eq!(h.values, vec![vec![None, Some(0.3 - 0.1)]]);
        assert_eq!(h.defensive, Some(0.0));
        assert!(h.to_csv().lines().nth(2).unwrap().starts_with("2,1,0,0.3,0.1,0.2,"));
        let svg = h.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg, h.to_svg());
    }

    #[test]
    fn zone_grid_shape() {
        let grid = GridSpec::with_cells(2, 2).unwrap();
        let g = ZoneGrid::new(grid, &[9.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.values, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(values_csv(&[0.5, 0.25]), "zone_index,value\n0,0.5\n1,0.25\n");
    }
}
