//! Pitch geometry and the field-state partition.
//!
//! The attacking team always plays towards `+x`, with the goal line at
//! `x = pitch_length`. The defensive half collapses into a single state
//! (zone 0); the offensive half is a `columns × rows` grid whose cells are
//! numbered `1 + row * columns + column`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Statutory penalty area depth, measured from the goal line.
pub const PENALTY_BOX_DEPTH_M: f64 = 16.5;
/// Statutory penalty area width.
pub const PENALTY_BOX_WIDTH_M: f64 = 40.32;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("point ({x}, {y}) lies outside the {length} x {width} m pitch")]
    OutOfBounds { x: f64, y: f64, length: f64, width: f64 },
    #[error("zone {0} has no cell rectangle")]
    NoRectangle(ZoneId),
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub pitch_length: f64,
    pub pitch_width: f64,
    pub columns: usize,
    pub rows: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            pitch_length: 105.0,
            pitch_width: 68.0,
            columns: 22,
            rows: 17,
        }
    }
}

impl GridSpec {
    pub fn new(pitch_length: f64, pitch_width: f64, columns: usize, rows: usize) -> Result<Self, GridError> {
        let spec = Self {
            pitch_length,
            pitch_width,
            columns,
            rows,
        };
        spec.check()?;
        Ok(spec)
    }

    /// A grid with default pitch dimensions and the given cell counts.
    pub fn with_cells(columns: usize, rows: usize) -> Result<Self, GridError> {
        Self::new(105.0, 68.0, columns, rows)
    }

    pub fn check(&self) -> Result<(), GridError> {
        if self.columns == 0 || self.rows == 0 {
            return Err(GridError::InvalidSpec(format!(
                "columns and rows must be positive, got {}x{}",
                self.columns, self.rows
            )));
        }
        if !(self.pitch_length > 0.0 && self.pitch_width > 0.0)
            || !self.pitch_length.is_finite()
            || !self.pitch_width.is_finite()
        {
            return Err(GridError::InvalidSpec(format!(
                "pitch dimensions must be positive, got {} x {}",
                self.pitch_length, self.pitch_width
            )));
        }
        Ok(())
    }

    /// Number of field states, including the defensive-half state.
    pub fn field_count(&self) -> usize {
        self.columns * self.rows + 1
    }

    pub fn cell_length(&self) -> f64 {
        self.pitch_length / 2.0 / self.columns as f64
    }

    pub fn cell_width(&self) -> f64 {
        self.pitch_width / self.rows as f64
    }

    pub fn zones(&self) -> impl Iterator<Item = ZoneId> {
        (0..self.field_count()).map(ZoneId)
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        zone.0 < self.field_count()
    }

    /// Column and row of an offensive-half cell.
    pub fn cell_coords(&self, zone: ZoneId) -> Option<(usize, usize)> {
        if zone.0 == 0 || !self.contains(zone) {
            return None;
        }
        let i = zone.0 - 1;
        Some((i % self.columns, i / self.columns))
    }

    pub fn zone_at(&self, column: usize, row: usize) -> ZoneId {
        ZoneId(1 + row * self.columns + column)
    }

    pub fn zone_of(&self, p: Point) -> Result<ZoneId, GridError> {
        zone_of(p, self)
    }

    pub fn cell_bounds(&self, zone: ZoneId) -> Result<Rect, GridError> {
        cell_bounds(zone, self)
    }
}

/// Index of a field state. Zone 0 is the defensive half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub usize);

impl ZoneId {
    pub const DEFENSIVE: ZoneId = ZoneId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Terminal states of a possession. Each carries a probability-one self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absorbing {
    Goal,
    NoGoal,
    Loss,
}

/// Any MDP state: a field zone or one of the absorbing terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum State {
    Field(ZoneId),
    Absorbing(Absorbing),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Half-open rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Containment under the grid convention: half-open, except that the
    /// far pitch edges belong to the last cell. Edges get a 1e-9 m slack so
    /// that cell arithmetic rounding does not matter.
    pub fn contains_clamped(&self, p: Point, spec: &GridSpec) -> bool {
        const EPS: f64 = 1e-9;
        let x_hi = p.x < self.x1 + EPS || self.x1 >= spec.pitch_length - EPS;
        let y_hi = p.y < self.y1 + EPS || self.y1 >= spec.pitch_width - EPS;
        p.x >= self.x0 - EPS && p.y >= self.y0 - EPS && x_hi && y_hi
    }
}

pub fn zone_of(p: Point, spec: &GridSpec) -> Result<ZoneId, GridError> {
    let (length, width) = (spec.pitch_length, spec.pitch_width);
    if !(p.x >= 0.0 && p.x <= length && p.y >= 0.0 && p.y <= width) {
        return Err(GridError::OutOfBounds {
            x: p.x,
            y: p.y,
            length,
            width,
        });
    }
    let half = length / 2.0;
    if p.x < half {
        return Ok(ZoneId::DEFENSIVE);
    }
    // slack so that a computed cell edge lands in the cell it starts
    let column = (((p.x - half) / spec.cell_length() + 1e-9).floor() as usize).min(spec.columns - 1);
    let row = ((p.y / spec.cell_width() + 1e-9).floor() as usize).min(spec.rows - 1);
    Ok(spec.zone_at(column, row))
}

pub fn cell_bounds(zone: ZoneId, spec: &GridSpec) -> Result<Rect, GridError> {
    let (column, row) = spec.cell_coords(zone).ok_or(GridError::NoRectangle(zone))?;
    let (dx, dy) = (spec.cell_length(), spec.cell_width());
    let x0 = spec.pitch_length / 2.0 + column as f64 * dx;
    let y0 = row as f64 * dy;
    Ok(Rect {
        x0,
        x1: x0 + dx,
        y0,
        y1: y0 + dy,
    })
}

/// Representative location of a zone: the cell center, or the center of
/// the defensive half for zone 0.
pub fn zone_center(zone: ZoneId, spec: &GridSpec) -> Point {
    match cell_bounds(zone, spec) {
        Ok(r) => r.center(),
        Err(_) => Point::new(spec.pitch_length / 4.0, spec.pitch_width / 2.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMask {
    pub name: String,
    pub members: BTreeSet<ZoneId>,
}

impl RegionMask {
    pub fn new(name: impl Into<String>, members: impl IntoIterator<Item = ZoneId>) -> Self {
        Self {
            name: name.into(),
            members: members.into_iter().collect(),
        }
    }

    /// Every field state of the grid.
    pub fn all(spec: &GridSpec) -> Self {
        Self::new("all", spec.zones())
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        self.members.contains(&zone)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.members.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    /// Long-distance cells lie within this distance of the goal line.
    pub long_distance_max_m: f64,
    /// Width of each outer flank band.
    pub flank_band_m: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            long_distance_max_m: 30.0,
            flank_band_m: 13.84,
        }
    }
}

pub const PENALTY_BOX: &str = "penalty_box";
pub const LONG_DISTANCE: &str = "long_distance";
pub const FLANK: &str = "flank";

/// The named regions used by the analyses: `penalty_box`, `long_distance`
/// and `flank`, in that order.
pub fn default_masks(spec: &GridSpec, params: &MaskParams) -> Vec<RegionMask> {
    let (length, width) = (spec.pitch_length, spec.pitch_width);
    let box_x = length - PENALTY_BOX_DEPTH_M;
    let box_y0 = (width - PENALTY_BOX_WIDTH_M) / 2.0;
    let box_y1 = (width + PENALTY_BOX_WIDTH_M) / 2.0;
    let eps = 1e-9;

    let cells: Vec<(ZoneId, Rect)> = spec
        .zones()
        .filter_map(|z| cell_bounds(z, spec).ok().map(|r| (z, r)))
        .collect();

    let in_box = |r: &Rect| r.x0 >= box_x - eps && r.y0 >= box_y0 - eps && r.y1 <= box_y1 + eps;
    let penalty_box = cells.iter().filter(|(_, r)| in_box(r)).map(|(z, _)| *z);

    let long_distance = cells
        .iter()
        .filter(|(_, r)| {
            let c = r.center();
            let central = c.y >= box_y0 && c.y <= box_y1;
            let center_in_box = c.x >= box_x && central;
            central && !center_in_box && !in_box(r) && c.x >= length - params.long_distance_max_m
        })
        .map(|(z, _)| *z);

    let flank = cells
        .iter()
        .filter(|(_, r)| {
            let c = r.center();
            let wide = c.y < params.flank_band_m || c.y > width - params.flank_band_m;
            wide && c.x >= 2.0 * length / 3.0
        })
        .map(|(z, _)| *z);

    vec![
        RegionMask::new(PENALTY_BOX, penalty_box),
        RegionMask::new(LONG_DISTANCE, long_distance),
        RegionMask::new(FLANK, flank),
    ]
}

pub fn find_mask<'a>(masks: &'a [RegionMask], name: &str) -> Option<&'a RegionMask> {
    masks.iter().find(|m| m.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_has_375_field_states() {
        assert_eq!(GridSpec::default().field_count(), 375);
    }

    #[test]
    fn zone_of_documented_points() {
        let spec = GridSpec::default();
        assert_eq!(zone_of(Point::new(40.0, 30.0), &spec).unwrap(), ZoneId(0));
        assert_eq!(zone_of(Point::new(52.5, 0.0), &spec).unwrap(), ZoneId(1));
        assert_eq!(zone_of(Point::new(105.0, 68.0), &spec).unwrap(), ZoneId(374));
    }

    #[test]
    fn zone_of_rejects_outside_points() {
        let spec = GridSpec::default();
        assert!(matches!(
            zone_of(Point::new(-0.1, 3.0), &spec),
            Err(GridError::OutOfBounds { .. })
        ));
        assert!(zone_of(Point::new(50.0, 68.5), &spec).is_err());
        assert!(zone_of(Point::new(f64::NAN, 1.0), &spec).is_err());
    }

    #[test]
    fn cell_bounds_examples() {
        let spec = GridSpec::default();
        let r = cell_bounds(ZoneId(1), &spec).unwrap();
        assert_eq!(r.x0, 52.5);
        assert!((r.x1 - (52.5 + 52.5 / 22.0)).abs() < 1e-12);
        assert_eq!((r.y0, r.y1), (0.0, 4.0));

        let last = cell_bounds(ZoneId(374), &spec).unwrap();
        assert!((last.x1 - 105.0).abs() < 1e-9);
        assert!((last.y1 - 68.0).abs() < 1e-9);

        assert_eq!(cell_bounds(ZoneId(0), &spec), Err(GridError::NoRectangle(ZoneId(0))));
        assert!(cell_bounds(ZoneId(375), &spec).is_err());
    }

    #[test]
    fn cell_centers_map_back() {
        let spec = GridSpec::default();
        for z in spec.zones().skip(1) {
            let c = cell_bounds(z, &spec).unwrap().center();
            assert_eq!(zone_of(c, &spec).unwrap(), z);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(GridSpec::with_cells(0, 3).is_err());
        assert!(GridSpec::new(-1.0, 68.0, 2, 2).is_err());
    }

    #[test]
    fn masks_are_disjoint_where_required() {
        let spec = GridSpec::default();
        let masks = default_masks(&spec, &MaskParams::default());
        let pb = find_mask(&masks, PENALTY_BOX).unwrap();
        let ld = find_mask(&masks, LONG_DISTANCE).unwrap();
        let fl = find_mask(&masks, FLANK).unwrap();
        assert!(!pb.is_empty() && !ld.is_empty() && !fl.is_empty());
        assert!(pb.members.is_disjoint(&ld.members));
        for m in &masks {
            assert!(m.iter().all(|z| z.0 >= 1 && spec.contains(z)));
        }
    }

    #[test]
    fn long_distance_cells_lie_within_cap_and_outside_box() {
        let spec = GridSpec::default();
        let masks = default_masks(&spec, &MaskParams::default());
        let ld = find_mask(&masks, LONG_DISTANCE).unwrap();
        let box_x = spec.pitch_length - PENALTY_BOX_DEPTH_M;
        let (y0, y1) = (13.84, 54.16);
        for z in ld.iter() {
            let c = cell_bounds(z, &spec).unwrap().center();
            assert!(c.x >= spec.pitch_length - 30.0);
            let inside = c.x >= box_x && c.y >= y0 && c.y <= y1;
            assert!(!inside, "zone {z} center inside the box");
        }
    }

    #[test]
    fn penalty_box_cells_fully_inside() {
        let spec = GridSpec::default();
        let masks = default_masks(&spec, &MaskParams::default());
        let pb = find_mask(&masks, PENALTY_BOX).unwrap();
        // 6 columns from x >= 88.5, rows 4..=12
        assert_eq!(pb.len(), 6 * 9);
    }

    #[test]
    fn tiny_grid_masks_degrade() {
        let spec = GridSpec::with_cells(2, 2).unwrap();
        let masks = default_masks(&spec, &MaskParams::default());
        assert_eq!(masks.len(), 3);
        for m in &masks {
            assert!(m.iter().all(|z| z.0 >= 1 && spec.contains(z)));
        }
        let pb = find_mask(&masks, PENALTY_BOX).unwrap();
        assert!(pb.is_empty());
    }

    #[test]
    fn zone_of_is_surjective_on_default_grid() {
        let spec = GridSpec::default();
        let mut seen = vec![false; spec.field_count()];
        seen[zone_of(Point::new(0.0, 0.0), &spec).unwrap().0] = true;
        for z in spec.zones().skip(1) {
            let r = cell_bounds(z, &spec).unwrap();
            seen[zone_of(Point::new(r.x0, r.y0), &spec).unwrap().0] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn points_fall_inside_their_cell(x in 0.0f64..=105.0, y in 0.0f64..=68.0) {
            let spec = GridSpec::default();
            let p = Point::new(x, y);
            let z = zone_of(p, &spec).unwrap();
            if x < 52.5 {
                prop_assert_eq!(z, ZoneId(0));
            } else {
                let r = cell_bounds(z, &spec).unwrap();
                prop_assert!(r.contains_clamped(p, &spec), "{:?} not in {:?}", p, r);
            }
        }
    }
}
