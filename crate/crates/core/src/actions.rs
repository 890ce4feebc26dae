//! Footstep states and actions, the directional action subsets, and the
//! per-subset adaptive selection of one candidate per expansion.
//!
//! Actions are stored in a canonical frame for a right stance foot: the left
//! swing foot lands at `(dx, dy)` with `dy > 0`, rotated by `dtheta`. For a
//! left stance foot the action is mirrored (`dy` and `dtheta` negated).
//!
//! The robot center of a state is the point half a nominal stance width from
//! the stance foot toward the other foot. Step length for the energy model is
//! the displacement of that center over one step.

use serde::{Deserialize, Serialize};

use crate::energy::{cot, step_energy, EnergyParams, StepGeometry};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2, Side};

/// Stance-foot pose and side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootState {
    pub x: f64,
    pub y: f64,
    /// Yaw, wrapped to `(-PI, PI]`.
    pub theta: f64,
    pub side: Side,
    pub step_index: u32,
}

impl FootState {
    pub fn new(x: f64, y: f64, theta: f64, side: Side) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
            side,
            step_index: 0,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta)
    }

    /// Robot center for a stance width of `nominal_width`.
    pub fn center(&self, nominal_width: f64) -> Pose2 {
        // The other foot sits on the opposite side of the stance foot.
        let lateral = -self.side.sign() * nominal_width / 2.0;
        let (x, y) = self.pose().transform_point(0.0, lateral);
        Pose2::new(x, y, self.theta)
    }

    /// The stance foot of a robot standing at `center` on `side`.
    pub fn from_center(center: &Pose2, side: Side, nominal_width: f64) -> Self {
        let (x, y) = center.transform_point(0.0, side.sign() * nominal_width / 2.0);
        Self::new(x, y, center.theta, side)
    }
}

/// Directional action subset. "Out" is toward the swing foot's side, "in"
/// toward the stance foot's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetId {
    Forward,
    DiagonalOut,
    DiagonalIn,
    SideOut,
    SideIn,
    RotateOut,
    RotateIn,
}

impl SubsetId {
    pub fn is_sidestep(self) -> bool {
        matches!(self, SubsetId::SideOut | SubsetId::SideIn)
    }

    pub fn is_rotate_in_place(self) -> bool {
        matches!(self, SubsetId::RotateOut | SubsetId::RotateIn)
    }
}

/// Relative stance-to-swing displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootstepAction {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
    pub subset: SubsetId,
    pub sidestep: bool,
    pub rotate_in_place: bool,
}

impl FootstepAction {
    pub fn new(dx: f64, dy: f64, dtheta: f64, subset: SubsetId) -> Self {
        Self {
            dx,
            dy,
            dtheta,
            subset,
            sidestep: subset.is_sidestep(),
            rotate_in_place: subset.is_rotate_in_place(),
        }
    }
}

/// Reflects an action to the opposite swing side.
pub fn mirror(action: &FootstepAction) -> FootstepAction {
    FootstepAction {
        dy: -action.dy,
        dtheta: -action.dtheta,
        ..*action
    }
}

/// Expresses a canonical action for the given stance side.
pub fn orient(action: &FootstepAction, stance: Side) -> FootstepAction {
    match stance {
        Side::Right => *action,
        Side::Left => mirror(action),
    }
}

/// Applies an already oriented action: the swing foot lands at the action
/// offset in the stance frame and becomes the new stance foot.
pub fn successor(state: &FootState, action: &FootstepAction) -> FootState {
    let (x, y) = state.pose().transform_point(action.dx, action.dy);
    FootState {
        x,
        y,
        theta: wrap_angle(state.theta + action.dtheta),
        side: state.side.opposite(),
        step_index: state.step_index + 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSubset {
    pub id: SubsetId,
    /// Ordered from most extended to most conservative.
    pub candidates: Vec<FootstepAction>,
}

/// Kinematic limits and candidate tables for one robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile {
    pub name: String,
    pub nominal_width: f64,
    pub max_length: f64,
    pub min_width: f64,
    pub max_width: f64,
    pub max_yaw: f64,
    /// Step length at which straight walking is most economical.
    pub optimal_length: f64,
    pub subsets: Vec<ActionSubset>,
}

fn subset(id: SubsetId, rows: &[(f64, f64, f64)]) -> ActionSubset {
    ActionSubset {
        id,
        candidates: rows
            .iter()
            .map(|&(dx, dy, yaw_deg)| FootstepAction::new(dx, dy, yaw_deg.to_radians(), id))
            .collect(),
    }
}

impl ActionProfile {
    /// Full-size simulated humanoid: 0.40 m max step, 0.30 m optimal step,
    /// 0.18-0.35 m width, 15 deg yaw.
    pub fn sim() -> Self {
        use SubsetId::*;
        Self {
            name: "sim".into(),
            nominal_width: 0.25,
            max_length: 0.40,
            min_width: 0.18,
            max_width: 0.35,
            max_yaw: 15f64.to_radians(),
            optimal_length: 0.30,
            subsets: vec![
                subset(
                    Forward,
                    &[
                        (0.40, 0.25, 0.0),
                        (0.30, 0.25, 0.0),
                        (0.20, 0.25, 0.0),
                        (0.10, 0.25, 0.0),
                    ],
                ),
                subset(
                    DiagonalOut,
                    &[
                        (0.35, 0.30, 15.0),
                        (0.30, 0.28, 10.0),
                        (0.20, 0.27, 10.0),
                        (0.10, 0.26, 5.0),
                    ],
                ),
                subset(
                    DiagonalIn,
                    &[
                        (0.35, 0.20, -15.0),
                        (0.30, 0.21, -10.0),
                        (0.20, 0.22, -10.0),
                        (0.10, 0.23, -5.0),
                    ],
                ),
                subset(SideOut, &[(0.0, 0.35, 0.0), (0.0, 0.32, 0.0), (0.0, 0.29, 0.0)]),
                subset(SideIn, &[(0.0, 0.18, 0.0), (0.0, 0.20, 0.0), (0.0, 0.22, 0.0)]),
                subset(RotateOut, &[(0.0, 0.25, 15.0), (0.0, 0.25, 7.5)]),
                subset(RotateIn, &[(0.0, 0.25, -15.0), (0.0, 0.25, -7.5)]),
            ],
        }
    }

    /// Smaller real robot: 0.30 m max step, 0.20 m optimal step.
    pub fn real() -> Self {
        use SubsetId::*;
        Self {
            name: "real".into(),
            nominal_width: 0.25,
            max_length: 0.30,
            min_width: 0.18,
            max_width: 0.35,
            max_yaw: 15f64.to_radians(),
            optimal_length: 0.20,
            subsets: vec![
                subset(
                    Forward,
                    &[
                        (0.30, 0.25, 0.0),
                        (0.225, 0.25, 0.0),
                        (0.15, 0.25, 0.0),
                        (0.075, 0.25, 0.0),
                    ],
                ),
                subset(
                    DiagonalOut,
                    &[
                        (0.26, 0.29, 15.0),
                        (0.22, 0.28, 10.0),
                        (0.15, 0.27, 10.0),
                        (0.075, 0.26, 5.0),
                    ],
                ),
                subset(
                    DiagonalIn,
                    &[
                        (0.26, 0.20, -15.0),
                        (0.22, 0.21, -10.0),
                        (0.15, 0.22, -10.0),
                        (0.075, 0.23, -5.0),
                    ],
                ),
                subset(SideOut, &[(0.0, 0.35, 0.0), (0.0, 0.32, 0.0), (0.0, 0.29, 0.0)]),
                subset(SideIn, &[(0.0, 0.18, 0.0), (0.0, 0.20, 0.0), (0.0, 0.22, 0.0)]),
                subset(RotateOut, &[(0.0, 0.25, 15.0), (0.0, 0.25, 7.5)]),
                subset(RotateIn, &[(0.0, 0.25, -15.0), (0.0, 0.25, -7.5)]),
            ],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sim" => Ok(Self::sim()),
            "real" => Ok(Self::real()),
            other => Err(Error::InvalidConfig(format!("unknown action profile `{other}`"))),
        }
    }

    /// Step geometry of a canonical or oriented action.
    pub fn step_geometry(&self, action: &FootstepAction) -> StepGeometry {
        let half = self.nominal_width / 2.0;
        let dy = action.dy.abs();
        let yaw = action.dtheta * action.dy.signum();
        // Center displacement in the canonical stance frame.
        let cx = action.dx + half * yaw.sin();
        let cy = dy - half * (1.0 + yaw.cos());
        StepGeometry {
            length: cx.hypot(cy),
            width: dy,
            yaw: action.dtheta,
            sidestep: action.sidestep,
        }
    }

    /// Checks a canonical action against the kinematic limits.
    pub fn admits(&self, action: &FootstepAction) -> bool {
        let tol = 1e-9;
        action.dx >= -tol
            && action.dx <= self.max_length + tol
            && action.dy >= self.min_width - tol
            && action.dy <= self.max_width + tol
            && action.dtheta.abs() <= self.max_yaw + tol
            && self.step_geometry(action).length <= self.max_length + tol
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_width >= self.min_width && self.nominal_width <= self.max_width) {
            return Err(Error::InvalidConfig(format!(
                "profile {}: nominal width outside [min_width, max_width]",
                self.name
            )));
        }
        for s in &self.subsets {
            if s.candidates.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "profile {}: subset {:?} has no candidates",
                    self.name, s.id
                )));
            }
            for c in &s.candidates {
                if !self.admits(c) {
                    return Err(Error::InvalidConfig(format!(
                        "profile {}: candidate {c:?} violates kinematic limits",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Zero-displacement, nominal-width, zero-yaw step.
    pub fn step_in_place(&self) -> FootstepAction {
        FootstepAction {
            dx: 0.0,
            dy: self.nominal_width,
            dtheta: 0.0,
            subset: SubsetId::Forward,
            sidestep: false,
            rotate_in_place: false,
        }
    }

    /// Every canonical candidate across subsets.
    pub fn candidates(&self) -> impl Iterator<Item = &FootstepAction> {
        self.subsets.iter().flat_map(|s| s.candidates.iter())
    }

    pub fn energy(&self, action: &FootstepAction, params: &EnergyParams) -> f64 {
        step_energy(&self.step_geometry(action), params)
    }
}

/// How one candidate is picked from each subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Lowest cost of transport (lowest energy for rotate-in-place subsets).
    MinCot,
    /// Most extended feasible candidate.
    Farthest,
}

impl std::str::FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min-cot" => Ok(Self::MinCot),
            "farthest" => Ok(Self::Farthest),
            other => Err(format!("unknown selection `{other}`")),
        }
    }
}

/// Candidate lists ranked once per profile, parameters and selection rule.
#[derive(Debug, Clone)]
pub struct ActionTable {
    profile: ActionProfile,
    ranked: Vec<ActionSubset>,
}

impl ActionTable {
    pub fn new(profile: ActionProfile, params: &EnergyParams, selection: Selection) -> Self {
        let ranked = profile
            .subsets
            .iter()
            .map(|s| {
                let mut candidates = s.candidates.clone();
                if selection == Selection::MinCot {
                    let key = |a: &FootstepAction| {
                        let geom = profile.step_geometry(a);
                        let score = if a.rotate_in_place {
                            step_energy(&geom, params)
                        } else {
                            cot(&geom, params).unwrap_or_else(|_| step_energy(&geom, params))
                        };
                        (score, -geom.length, a.dtheta.abs())
                    };
                    candidates.sort_by(|a, b| {
                        let (ka, kb) = (key(a), key(b));
                        ka.0.total_cmp(&kb.0)
                            .then(ka.1.total_cmp(&kb.1))
                            .then(ka.2.total_cmp(&kb.2))
                    });
                }
                ActionSubset { id: s.id, candidates }
            })
            .collect();
        Self { profile, ranked }
    }

    pub fn profile(&self) -> &ActionProfile {
        &self.profile
    }

    /// Subsets with candidates in selection order.
    pub fn ranked(&self) -> &[ActionSubset] {
        &self.ranked
    }

    /// At most one oriented action per subset: the first candidate in
    /// selection order for which `feasible(action, successor)` holds.
    pub fn adaptive_set<F>(&self, state: &FootState, mut feasible: F) -> Vec<FootstepAction>
    where
        F: FnMut(&FootstepAction, &FootState) -> bool,
    {
        let mut out = Vec::with_capacity(self.ranked.len());
        for s in &self.ranked {
            for c in &s.candidates {
                let action = orient(c, state.side);
                let next = successor(state, &action);
                if feasible(&action, &next) {
                    out.push(action);
                    break;
                }
            }
        }
        out
    }

    /// Every candidate oriented for the state's stance side.
    pub fn full_set(&self, state: &FootState) -> Vec<FootstepAction> {
        full_set(state, &self.profile)
    }
}

/// Per-subset minimum-COT (or farthest) feasible actions for `state`.
pub fn adaptive_set<F>(
    state: &FootState,
    feasible: F,
    params: &EnergyParams,
    profile: &ActionProfile,
    selection: Selection,
) -> Vec<FootstepAction>
where
    F: FnMut(&FootstepAction, &FootState) -> bool,
{
    ActionTable::new(profile.clone(), params, selection).adaptive_set(state, feasible)
}

/// The complete candidate grid oriented for the state's stance side.
pub fn full_set(state: &FootState, profile: &ActionProfile) -> Vec<FootstepAction> {
    profile.candidates().map(|c| orient(c, state.side)).collect()
}
