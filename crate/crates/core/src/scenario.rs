//! Scenario files: map extents, terrain primitives, start and goal, timed map
//! events and optional configuration overrides, in TOML with explicit units
//! in every key.
//!
//! ```toml
//! name = "demo"
//! seed = 3
//!
//! [map]
//! size_x_m = 4.0
//! size_y_m = 3.0
//!
//! [start]
//! x_m = 0.5
//! y_m = 1.5
//! heading_deg = 0.0
//!
//! [goal]
//! x_m = 3.5
//! y_m = 1.5
//!
//! [[box]]
//! id = "crate"
//! center_x_m = 2.0
//! center_y_m = 1.0
//! size_x_m = 0.4
//! size_y_m = 0.4
//! height_m = 0.5
//!
//! [[event]]
//! step = 4
//! action = "remove"
//! id = "crate"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::actions::ActionProfile;
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::feasibility::FeasibilityConfig;
use crate::geometry::{GoalSpec, Pose2, Side};
use crate::planner::{Planner, PlannerConfig, StartPair};
use crate::replan::SimConfig;
use crate::worldmap::{
    build_map, filter_chain, positive, ElevationMap, GridGeometry, Primitive, PrimitiveShape, RampDirection, Rect,
    Terrain,
};

fn default_resolution() -> f64 {
    0.05
}

fn default_filter_radius() -> f64 {
    0.1
}

fn default_goal_radius() -> f64 {
    0.15
}

fn default_stance() -> Side {
    Side::Left
}

fn default_profile() -> String {
    "sim".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    seed: u64,
    map: RawMap,
    start: RawStart,
    goal: RawGoal,
    #[serde(default, rename = "box")]
    boxes: Vec<Spanned<RawBox>>,
    #[serde(default, rename = "ramp")]
    ramps: Vec<Spanned<RawRamp>>,
    #[serde(default)]
    noise: Vec<Spanned<RawNoise>>,
    #[serde(default)]
    unknown: Vec<Spanned<RawRegion>>,
    #[serde(default, rename = "event")]
    events: Vec<Spanned<RawEvent>>,
    energy: Option<EnergyParams>,
    #[serde(default)]
    feasibility: FeasibilityConfig,
    #[serde(default)]
    actions: RawActions,
    #[serde(default)]
    planner: PlannerConfig,
    #[serde(default)]
    sim: SimConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    size_x_m: f64,
    size_y_m: f64,
    #[serde(default = "default_resolution")]
    resolution_m: f64,
    #[serde(default)]
    origin_x_m: f64,
    #[serde(default)]
    origin_y_m: f64,
    #[serde(default = "default_filter_radius")]
    filter_radius_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStart {
    x_m: f64,
    y_m: f64,
    #[serde(default)]
    heading_deg: f64,
    #[serde(default = "default_stance")]
    stance: Side,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGoal {
    x_m: f64,
    y_m: f64,
    heading_deg: Option<f64>,
    #[serde(default = "default_goal_radius")]
    radius_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    id: Option<String>,
    center_x_m: f64,
    center_y_m: f64,
    size_x_m: f64,
    size_y_m: f64,
    height_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRamp {
    id: Option<String>,
    center_x_m: f64,
    center_y_m: f64,
    size_x_m: f64,
    size_y_m: f64,
    slope_deg: f64,
    rising: RampDirection,
    #[serde(default)]
    base_height_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    id: Option<String>,
    center_x_m: f64,
    center_y_m: f64,
    size_x_m: f64,
    size_y_m: f64,
    amplitude_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    id: Option<String>,
    center_x_m: f64,
    center_y_m: f64,
    size_x_m: f64,
    size_y_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawEventAction {
    Insert,
    Remove,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    step: usize,
    action: RawEventAction,
    #[serde(rename = "box")]
    block: Option<RawBox>,
    id: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActions {
    #[serde(default = "default_profile")]
    profile: String,
}

impl Default for RawActions {
    fn default() -> Self {
        Self {
            profile: default_profile(),
        }
    }
}

impl RawBox {
    fn primitive(&self) -> Primitive {
        Primitive::block(
            self.id.as_deref(),
            Rect::centered(self.center_x_m, self.center_y_m, self.size_x_m, self.size_y_m),
            self.height_m,
        )
    }
}

/// Start pose of the robot center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartSpec {
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub heading: f64,
    pub stance: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapChange {
    Insert(Primitive),
    Remove(String),
}

/// A terrain change applied when the robot's step counter reaches `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEvent {
    pub step: usize,
    pub change: MapChange,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    pub seed: u64,
    pub grid: GridGeometry,
    pub filter_radius: f64,
    pub primitives: Vec<Primitive>,
    pub start: StartSpec,
    pub goal: GoalSpec,
    pub events: Vec<MapEvent>,
    pub energy: EnergyParams,
    pub feasibility: FeasibilityConfig,
    pub profile: ActionProfile,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn parse_error(path: &Path, text: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, column) = line_col(text, offset);
    Error::Parse {
        path: path.to_owned(),
        line,
        column,
        message: message.into(),
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses scenario text. `path` only labels error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            parse_error(path, text, offset, e.message().trim())
        })?;
        let at = |offset: usize, msg: String| parse_error(path, text, offset, msg);

        let m = &raw.map;
        let grid = GridGeometry::new(m.size_x_m, m.size_y_m, m.resolution_m, m.origin_x_m, m.origin_y_m)?;
        if !positive(m.filter_radius_m) {
            return Err(Error::InvalidConfig("map.filter_radius_m must be positive".into()));
        }

        let mut placed: Vec<(usize, Primitive)> = Vec::new();
        for b in &raw.boxes {
            placed.push((b.span().start, b.get_ref().primitive()));
        }
        for r in &raw.ramps {
            let v = r.get_ref();
            let rect = Rect::centered(v.center_x_m, v.center_y_m, v.size_x_m, v.size_y_m);
            let shape = PrimitiveShape::Ramp {
                slope: v.slope_deg.to_radians(),
                rising: v.rising,
                base_height: v.base_height_m,
            };
            placed.push((
                r.span().start,
                Primitive {
                    id: v.id.clone(),
                    rect,
                    shape,
                },
            ));
        }
        for n in &raw.noise {
            let v = n.get_ref();
            let rect = Rect::centered(v.center_x_m, v.center_y_m, v.size_x_m, v.size_y_m);
            let shape = PrimitiveShape::Noise {
                amplitude: v.amplitude_m,
            };
            placed.push((
                n.span().start,
                Primitive {
                    id: v.id.clone(),
                    rect,
                    shape,
                },
            ));
        }
        for u in &raw.unknown {
            let v = u.get_ref();
            let rect = Rect::centered(v.center_x_m, v.center_y_m, v.size_x_m, v.size_y_m);
            placed.push((
                u.span().start,
                Primitive {
                    id: v.id.clone(),
                    rect,
                    shape: PrimitiveShape::Unknown,
                },
            ));
        }
        for (i, (offset, p)) in placed.iter().enumerate() {
            if !grid.contains_rect(&p.rect) {
                return Err(at(
                    *offset,
                    format!("{} does not lie inside the map extents", p.label(i)),
                ));
            }
        }

        let mut events = Vec::new();
        for ev in &raw.events {
            let v = ev.get_ref();
            let change = match (&v.action, &v.block, &v.id) {
                (RawEventAction::Insert, Some(b), None) => {
                    let p = b.primitive();
                    if !grid.contains_rect(&p.rect) {
                        return Err(at(
                            ev.span().start,
                            "inserted box does not lie inside the map extents".into(),
                        ));
                    }
                    MapChange::Insert(p)
                }
                (RawEventAction::Remove, None, Some(id)) => MapChange::Remove(id.clone()),
                (RawEventAction::Insert, _, _) => {
                    return Err(at(
                        ev.span().start,
                        "insert events take a `box` table and no `id`".into(),
                    ))
                }
                (RawEventAction::Remove, _, _) => {
                    return Err(at(ev.span().start, "remove events take an `id` and no `box`".into()))
                }
            };
            events.push(MapEvent { step: v.step, change });
        }
        events.sort_by_key(|e| e.step);

        let profile = ActionProfile::by_name(&raw.actions.profile)?;
        let energy = raw
            .energy
            .unwrap_or_else(|| EnergyParams::default().with_optimal_step(profile.optimal_length));
        energy.validate()?;
        raw.feasibility.validate()?;
        raw.planner.validate()?;
        if !positive(raw.goal.radius_m) {
            return Err(Error::InvalidConfig("goal.radius_m must be positive".into()));
        }
        let mut goal = GoalSpec::new(raw.goal.x_m, raw.goal.y_m, raw.goal.radius_m);
        if let Some(h) = raw.goal.heading_deg {
            goal = goal.with_heading(h.to_radians());
        }

        Ok(Self {
            name: raw.name,
            path: path.to_owned(),
            seed: raw.seed,
            grid,
            filter_radius: m.filter_radius_m,
            primitives: placed.into_iter().map(|(_, p)| p).collect(),
            start: StartSpec {
                x: raw.start.x_m,
                y: raw.start.y_m,
                heading: raw.start.heading_deg.to_radians(),
                stance: raw.start.stance,
            },
            goal,
            events,
            energy,
            feasibility: raw.feasibility,
            profile,
            planner: raw.planner,
            sim: raw.sim,
        })
    }

    pub fn terrain(&self) -> Result<Terrain> {
        Terrain::new(self.grid, self.primitives.clone(), self.seed)
    }

    /// Rasterized and filtered initial map.
    pub fn build_map(&self) -> Result<ElevationMap> {
        Ok(filter_chain(build_map(&self.terrain()?), self.filter_radius))
    }

    pub fn start_pair(&self) -> StartPair {
        let center = Pose2::new(self.start.x, self.start.y, self.start.heading);
        StartPair::from_center(&center, self.start.stance, self.profile.nominal_width)
    }

    pub fn build_planner(&self) -> Result<Planner> {
        Planner::new(
            self.profile.clone(),
            self.energy,
            self.feasibility,
            self.planner.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[map]
size_x_m = 2.0
size_y_m = 1.0
[start]
x_m = 0.3
y_m = 0.5
[goal]
x_m = 1.5
y_m = 0.5
"#;

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::parse(MINIMAL, Path::new("t.toml")).unwrap();
        assert_eq!((s.grid.nx, s.grid.ny), (40, 20));
        assert_eq!(s.goal.radius, 0.15);
        assert_eq!(s.start.stance, Side::Left);
        assert_eq!(s.profile.name, "sim");
        assert!((s.energy.length_scale_m - 1.0).abs() > 1e-3);
        assert!(s.build_map().unwrap().is_filtered());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = format!("{MINIMAL}\n[[box]]\ncenter_x_m = = 1\n");
        match Scenario::parse(&text, Path::new("bad.toml")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 14),
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}[map2]\n");
        assert!(matches!(
            Scenario::parse(&text, Path::new("x")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn out_of_bounds_box_points_at_its_table() {
        let text = format!(
            "{MINIMAL}\n[[box]]\nid = \"far\"\ncenter_x_m = 5.0\ncenter_y_m = 0.5\nsize_x_m = 0.2\nsize_y_m = 0.2\nheight_m = 1.0\n"
        );
        match Scenario::parse(&text, Path::new("oob.toml")) {
            Err(Error::Parse { line, message, .. }) => {
                assert!(message.contains("far"), "{message}");
                assert_eq!(line, 13);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn events_parse_and_sort() {
        let text = format!(
            "{MINIMAL}\n[[event]]\nstep = 5\naction = \"remove\"\nid = \"p\"\n\n[[event]]\nstep = 2\naction = \"insert\"\nbox = {{ id = \"p\", center_x_m = 1.0, center_y_m = 0.5, size_x_m = 0.2, size_y_m = 0.2, height_m = 1.5 }}\n"
        );
        let s = Scenario::parse(&text, Path::new("ev.toml")).unwrap();
        assert_eq!(s.events.len(), 2);
        assert_eq!(s.events[0].step, 2);
        assert!(matches!(s.events[1].change, MapChange::Remove(ref id) if id == "p"));
    }
}
