//! Foothold and body-clearance checks on an elevation map, and the forward
//! obstacle probe used by the planner's penalty term.

use serde::{Deserialize, Serialize};

use crate::actions::FootState;
use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::worldmap::ElevationMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibilityConfig {
    pub traversability_min: f64,
    /// Largest step-up allowed relative to the stance foot.
    pub foothold_height_max_m: f64,
    pub foot_length_m: f64,
    pub foot_width_m: f64,
    /// Short semi-axis of both body ellipses.
    pub body_half_width_m: f64,
    /// Added to the long semi-axis of the stance-to-swing ellipse.
    pub sway_margin_m: f64,
    /// Obstacles taller than this above the walking plane collide with the body.
    pub body_obstacle_height_m: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            traversability_min: 0.5,
            foothold_height_max_m: 0.05,
            foot_length_m: 0.22,
            foot_width_m: 0.12,
            body_half_width_m: 0.15,
            sway_margin_m: 0.05,
            body_obstacle_height_m: 0.30,
        }
    }
}

impl FeasibilityConfig {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("foothold_height_max_m", self.foothold_height_max_m),
            ("foot_length_m", self.foot_length_m),
            ("foot_width_m", self.foot_width_m),
            ("body_half_width_m", self.body_half_width_m),
            ("body_obstacle_height_m", self.body_obstacle_height_m),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sway_margin_m >= 0.0 && self.sway_margin_m.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sway_margin_m must be non-negative, got {}",
                self.sway_margin_m
            )));
        }
        if !(0.0..=1.0).contains(&self.traversability_min) {
            return Err(Error::InvalidConfig(format!(
                "traversability_min must lie in [0, 1], got {}",
                self.traversability_min
            )));
        }
        Ok(())
    }
}

/// Indices of the cells whose centers satisfy `inside(local_x, local_y)`,
/// where local coordinates are taken in `frame`. `reach` bounds the shape's
/// extent around the frame origin.
fn cells_in_shape<F>(map: &ElevationMap, frame: &Pose2, reach: f64, mut inside: F) -> Vec<(i64, i64)>
where
    F: FnMut(f64, f64) -> bool,
{
    let g = &map.grid;
    let (x0, y0) = g.cell_coords(frame.x - reach, frame.y - reach);
    let (x1, y1) = g.cell_coords(frame.x + reach, frame.y + reach);
    let mut out = Vec::new();
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            let (cx, cy) = g.cell_center(ix, iy);
            let (u, v) = frame.inverse_transform_point(cx, cy);
            if inside(u, v) {
                out.push((ix, iy));
            }
        }
    }
    out
}

fn inside_map(map: &ElevationMap, x: f64, y: f64) -> bool {
    let g = &map.grid;
    x >= g.origin_x && y >= g.origin_y && x <= g.origin_x + g.size_x() && y <= g.origin_y + g.size_y()
}

/// Cells covered by the foot rectangle centered at `foot`. When the
/// rectangle contains no cell center, the cell under the foot center is used.
pub fn foot_cells(map: &ElevationMap, foot: &Pose2, cfg: &FeasibilityConfig) -> Vec<(i64, i64)> {
    let (hl, hw) = (cfg.foot_length_m / 2.0, cfg.foot_width_m / 2.0);
    let mut cells = cells_in_shape(map, foot, hl.hypot(hw), |u, v| u.abs() <= hl && v.abs() <= hw);
    if cells.is_empty() {
        cells.push(map.grid.cell_coords(foot.x, foot.y));
    }
    cells
}

/// True iff the whole foot rectangle lies on the map and every covered cell
/// is known, traversable enough and at most `foothold_height_max_m` above
/// `reference_height`.
pub fn foothold_feasible(map: &ElevationMap, foot: &Pose2, reference_height: f64, cfg: &FeasibilityConfig) -> bool {
    let (hl, hw) = (cfg.foot_length_m / 2.0, cfg.foot_width_m / 2.0);
    let corners = [(hl, hw), (hl, -hw), (-hl, hw), (-hl, -hw)];
    if !corners.iter().all(|&(u, v)| {
        let (x, y) = foot.transform_point(u, v);
        inside_map(map, x, y)
    }) {
        return false;
    }
    foot_cells(map, foot, cfg).into_iter().all(|(ix, iy)| {
        let c = map.cell_at(ix, iy);
        c.valid
            && c.traversability >= cfg.traversability_min
            && c.height - reference_height <= cfg.foothold_height_max_m
    })
}

/// Ellipse with foci-style placement between two points: centered at the
/// midpoint, long axis along the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyEllipse {
    pub center: Pose2,
    pub semi_major: f64,
    pub semi_minor: f64,
}

impl BodyEllipse {
    pub fn between(a: (f64, f64), b: (f64, f64), semi_minor: f64, margin: f64) -> Self {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let heading = if dx == 0.0 && dy == 0.0 { 0.0 } else { dy.atan2(dx) };
        Self {
            center: Pose2::new((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0, heading),
            semi_major: dx.hypot(dy) / 2.0 + margin,
            semi_minor,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        if self.semi_major <= 0.0 || self.semi_minor <= 0.0 {
            return false;
        }
        let (u, v) = self.center.inverse_transform_point(x, y);
        (u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2) <= 1.0
    }

    /// Grid cells whose centers lie inside the ellipse.
    pub fn cells(&self, map: &ElevationMap) -> Vec<(i64, i64)> {
        let reach = self.semi_major.max(self.semi_minor);
        let (a, b) = (self.semi_major, self.semi_minor);
        if a <= 0.0 || b <= 0.0 {
            return Vec::new();
        }
        cells_in_shape(map, &self.center, reach, |u, v| {
            (u / a).powi(2) + (v / b).powi(2) <= 1.0
        })
    }
}

/// The stance-to-new-swing ellipse (with sway margin) and the
/// previous-swing-to-new-swing ellipse (without).
pub fn body_ellipses(
    stance: &Pose2,
    prev_swing: &Pose2,
    new_swing: &Pose2,
    cfg: &FeasibilityConfig,
) -> [BodyEllipse; 2] {
    let new = (new_swing.x, new_swing.y);
    [
        BodyEllipse::between((stance.x, stance.y), new, cfg.body_half_width_m, cfg.sway_margin_m),
        BodyEllipse::between((prev_swing.x, prev_swing.y), new, cfg.body_half_width_m, 0.0),
    ]
}

/// False iff a known cell inside either body ellipse rises more than
/// `body_obstacle_height_m` above the walking plane, taken as the stance
/// foot's cell height.
pub fn body_feasible(
    map: &ElevationMap,
    stance: &Pose2,
    prev_swing: &Pose2,
    new_swing: &Pose2,
    cfg: &FeasibilityConfig,
) -> bool {
    let plane = map.height_at(stance.x, stance.y).unwrap_or(0.0);
    body_ellipses(stance, prev_swing, new_swing, cfg).iter().all(|e| {
        e.cells(map).into_iter().all(|(ix, iy)| {
            let c = map.cell_at(ix, iy);
            !c.valid || c.height - plane <= cfg.body_obstacle_height_m
        })
    })
}

/// Distance along `direction` from `origin` to the first body-height obstacle
/// inside a corridor of half-width `body_half_width_m` (at least half a cell),
/// or `None` if the corridor is clear up to `max_dist`. Heights are measured
/// against the origin cell.
pub fn obstacle_ray(
    map: &ElevationMap,
    origin: &Pose2,
    direction: f64,
    max_dist: f64,
    cfg: &FeasibilityConfig,
) -> Option<f64> {
    let plane = map.height_at(origin.x, origin.y).unwrap_or(0.0);
    let half = cfg.body_half_width_m.max(map.grid.resolution / 2.0);
    let frame = Pose2::new(origin.x, origin.y, direction);
    let steps = (max_dist / map.grid.resolution).ceil() as usize;
    let mut best: Option<f64> = None;
    // March in cell-sized slabs so the nearest hit ends the scan early.
    for k in 0..=steps {
        let s0 = k as f64 * map.grid.resolution;
        if s0 > max_dist {
            break;
        }
        let s1 = (s0 + map.grid.resolution).min(max_dist);
        let mid = frame.transform_point((s0 + s1) / 2.0, 0.0);
        let slab = Pose2::new(mid.0, mid.1, direction);
        let reach = ((s1 - s0) / 2.0).hypot(half) + 1e-9;
        for (ix, iy) in cells_in_shape(map, &slab, reach, |_, _| true) {
            let (cx, cy) = map.grid.cell_center(ix, iy);
            let (u, v) = frame.inverse_transform_point(cx, cy);
            if u < s0 || u > s1 || u > max_dist || v.abs() > half {
                continue;
            }
            let c = map.cell_at(ix, iy);
            if c.valid && c.height - plane > cfg.body_obstacle_height_m {
                best = Some(best.map_or(u, |b: f64| b.min(u)));
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// Foothold check for `new` against the stance height, then body check.
pub fn transition_feasible(
    map: &ElevationMap,
    stance: &FootState,
    prev_swing: &FootState,
    new: &FootState,
    cfg: &FeasibilityConfig,
) -> bool {
    let reference = map.height_at(stance.x, stance.y).unwrap_or(0.0);
    foothold_feasible(map, &new.pose(), reference, cfg)
        && body_feasible(map, &stance.pose(), &prev_swing.pose(), &new.pose(), cfg)
}
