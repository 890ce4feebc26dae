//! A* footstep search with adaptive action sets, energy step costs, the
//! distance/angle heuristic and an obstacle-proximity penalty.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::actions::{orient, successor, ActionProfile, ActionTable, FootState, FootstepAction, Selection};
use crate::energy::{step_energy, EnergyParams, Heuristic, HeuristicKind};
use crate::error::{Error, Result};
use crate::feasibility::{obstacle_ray, transition_feasible, FeasibilityConfig};
use crate::geometry::{GoalSpec, Pose2, Side};
use crate::worldmap::ElevationMap;

/// Heuristic inflation near obstacles ahead of the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub enabled: bool,
    /// The ray probe looks this far ahead of the robot center.
    pub check_dist_m: f64,
    /// Penalty per meter of intrusion into `check_dist_m`, in units of `m g C`.
    pub weight: f64,
    /// Scale applied to the penalty of rotate-in-place actions.
    pub rotate_relief: f64,
    /// Added when a rotate-in-place reverses the preceding one, in units of `m g C`.
    pub reverse_rotation_penalty: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            check_dist_m: 0.5,
            weight: 40.0,
            rotate_relief: 0.25,
            reverse_rotation_penalty: 20.0,
        }
    }
}

/// Fixed action tables bypass adaptive selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionMode {
    /// One candidate per subset, the full grid near the goal.
    #[default]
    Adaptive,
    /// The given canonical actions at every expansion.
    Fixed(Vec<FootstepAction>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub max_iterations: usize,
    pub heuristic: HeuristicKind,
    pub selection: Selection,
    pub penalty: PenaltyConfig,
    /// Duplicate-detection bin size in x and y.
    pub xy_bin_m: f64,
    /// Duplicate-detection bin size in heading.
    pub theta_bin_rad: f64,
    /// The full action grid is used within this many max step lengths of the goal.
    pub near_goal_factor: f64,
    #[serde(skip)]
    pub action_mode: ActionMode,
    /// Record every popped node.
    pub trace: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            heuristic: HeuristicKind::DistanceAngle,
            selection: Selection::MinCot,
            penalty: PenaltyConfig::default(),
            xy_bin_m: 0.05,
            theta_bin_rad: 5f64.to_radians(),
            near_goal_factor: 2.0,
            action_mode: ActionMode::Adaptive,
            trace: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.xy_bin_m > 0.0 && self.theta_bin_rad > 0.0) {
            return Err(Error::InvalidConfig("duplicate bins must be positive".into()));
        }
        let p = &self.penalty;
        if !(p.check_dist_m > 0.0 && p.weight >= 0.0 && p.reverse_rotation_penalty >= 0.0) {
            return Err(Error::InvalidConfig(
                "penalty distances and weights must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&p.rotate_relief) {
            return Err(Error::InvalidConfig("rotate_relief must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Both feet at the start of a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPair {
    pub stance: FootState,
    pub swing: FootState,
}

impl StartPair {
    /// Feet placed half a nominal width either side of `center`, with `stance`
    /// on the given side.
    pub fn from_center(center: &Pose2, stance: Side, nominal_width: f64) -> Self {
        Self {
            stance: FootState::from_center(center, stance, nominal_width),
            swing: FootState::from_center(center, stance.opposite(), nominal_width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Success,
    IterationLimit,
    DeadEnd,
    Cancelled,
}

impl std::fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanStatus::Success => "success",
            PlanStatus::IterationLimit => "iteration-limit",
            PlanStatus::DeadEnd => "dead-end",
            PlanStatus::Cancelled => "cancelled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub state: FootState,
    /// The other foot, i.e. the previous stance foot.
    pub swing: FootState,
    pub g: f64,
    pub h: f64,
    pub f: f64,
    pub parent: Option<usize>,
    pub action: Option<FootstepAction>,
    pub penalty: f64,
}

/// One state along a returned plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub state: FootState,
    /// Action that produced this state, absent for the start.
    pub action: Option<FootstepAction>,
    pub g: f64,
    pub h: f64,
}

impl PlanStep {
    pub fn f(&self) -> f64 {
        self.g + self.h
    }
}

/// A popped node, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub node: usize,
    pub state: FootState,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Start state first; empty unless the search succeeded.
    pub steps: Vec<PlanStep>,
    pub total_cost: f64,
    pub iterations: usize,
    pub expansions: usize,
    pub trace: Vec<TraceEntry>,
}

impl PlanResult {
    pub fn footsteps(&self) -> Vec<FootState> {
        self.steps.iter().map(|s| s.state).collect()
    }

    pub fn is_success(&self) -> bool {
        self.status == PlanStatus::Success
    }

    /// Number of footsteps after the start state.
    pub fn step_count(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    seq: u64,
    node: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // Reversed so the max-heap pops the smallest (f, g, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type BinKey = (i64, i64, i64, Side);

/// Footstep planner bound to one robot profile and configuration.
#[derive(Debug, Clone)]
pub struct Planner {
    pub energy: EnergyParams,
    pub feasibility: FeasibilityConfig,
    pub config: PlannerConfig,
    table: ActionTable,
    heuristic: Heuristic,
}

impl Planner {
    pub fn new(
        profile: ActionProfile,
        energy: EnergyParams,
        feasibility: FeasibilityConfig,
        config: PlannerConfig,
    ) -> Result<Self> {
        energy.validate()?;
        feasibility.validate()?;
        config.validate()?;
        profile.validate()?;
        if let ActionMode::Fixed(actions) = &config.action_mode {
            if let Some(bad) = actions.iter().find(|a| !profile.admits(a)) {
                return Err(Error::InvalidConfig(format!(
                    "fixed action {bad:?} violates kinematic limits"
                )));
            }
        }
        let heuristic = Heuristic::new(config.heuristic, energy, profile.max_length, profile.max_yaw);
        let table = ActionTable::new(profile, &energy, config.selection);
        Ok(Self {
            energy,
            feasibility,
            config,
            table,
            heuristic,
        })
    }

    pub fn profile(&self) -> &ActionProfile {
        self.table.profile()
    }

    pub fn heuristic(&self) -> &Heuristic {
        &self.heuristic
    }

    pub fn center(&self, state: &FootState) -> Pose2 {
        state.center(self.profile().nominal_width)
    }

    pub fn step_cost(&self, action: &FootstepAction) -> f64 {
        step_energy(&self.profile().step_geometry(action), &self.energy)
    }

    /// Penalty term added to the heuristic of a freshly generated state.
    pub fn penalty(
        &self,
        map: &ElevationMap,
        state: &FootState,
        action: &FootstepAction,
        previous: Option<&FootstepAction>,
    ) -> f64 {
        let pc = &self.config.penalty;
        if !pc.enabled {
            return 0.0;
        }
        let center = self.center(state);
        let Some(d) = obstacle_ray(map, &center, center.theta, pc.check_dist_m, &self.feasibility) else {
            return 0.0;
        };
        let unit = self.energy.mg() * self.energy.c;
        let mut p = pc.weight * unit * (pc.check_dist_m - d).max(0.0);
        if action.rotate_in_place {
            p *= pc.rotate_relief;
            if previous.is_some_and(|prev| prev.rotate_in_place && prev.dtheta * action.dtheta < 0.0) {
                p += pc.reverse_rotation_penalty * unit;
            }
        }
        p
    }

    /// Heuristic plus penalty. Zero inside the goal region.
    pub fn penalized_h(
        &self,
        map: &ElevationMap,
        state: &FootState,
        action: Option<&FootstepAction>,
        previous: Option<&FootstepAction>,
        goal: &GoalSpec,
    ) -> (f64, f64) {
        let center = self.center(state);
        if goal.contains(&center) {
            return (0.0, 0.0);
        }
        let h = self.heuristic.evaluate(&center, goal);
        let p = action.map_or(0.0, |a| self.penalty(map, state, a, previous));
        (h + p, p)
    }

    fn bin(&self, state: &FootState) -> BinKey {
        let c = &self.config;
        (
            (state.x / c.xy_bin_m).floor() as i64,
            (state.y / c.xy_bin_m).floor() as i64,
            (state.theta / c.theta_bin_rad).round() as i64,
            state.side,
        )
    }

    /// Oriented, feasible successor actions of `node`.
    fn expand(&self, map: &ElevationMap, node: &SearchNode, goal: &GoalSpec) -> Vec<FootstepAction> {
        let feasible = |_: &FootstepAction, next: &FootState| {
            transition_feasible(map, &node.state, &node.swing, next, &self.feasibility)
        };
        match &self.config.action_mode {
            ActionMode::Fixed(actions) => actions
                .iter()
                .map(|a| orient(a, node.state.side))
                .filter(|a| feasible(a, &successor(&node.state, a)))
                .collect(),
            ActionMode::Adaptive => {
                let center = self.center(&node.state);
                let near =
                    center.distance_to(goal.x, goal.y) <= self.config.near_goal_factor * self.profile().max_length;
                if near {
                    self.table
                        .full_set(&node.state)
                        .into_iter()
                        .filter(|a| feasible(a, &successor(&node.state, a)))
                        .collect()
                } else {
                    self.table.adaptive_set(&node.state, feasible)
                }
            }
        }
    }

    pub fn plan(&self, map: &ElevationMap, start: &StartPair, goal: &GoalSpec) -> PlanResult {
        self.plan_cancellable(map, start, goal, &AtomicBool::new(false))
    }

    /// As [`Planner::plan`], checking `cancel` between iterations.
    pub fn plan_cancellable(
        &self,
        map: &ElevationMap,
        start: &StartPair,
        goal: &GoalSpec,
        cancel: &AtomicBool,
    ) -> PlanResult {
        let mut nodes: Vec<SearchNode> = Vec::new();
        let mut best: HashMap<BinKey, usize> = HashMap::new();
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        let mut trace = Vec::new();

        let (h0, _) = self.penalized_h(map, &start.stance, None, None, goal);
        nodes.push(SearchNode {
            state: start.stance,
            swing: start.swing,
            g: 0.0,
            h: h0,
            f: h0,
            parent: None,
            action: None,
            penalty: 0.0,
        });
        best.insert(self.bin(&start.stance), 0);
        open.push(OpenEntry {
            f: h0,
            g: 0.0,
            seq,
            node: 0,
        });

        let mut iterations = 0;
        let mut expansions = 0;
        let finish = |status, steps: Vec<PlanStep>, iterations, expansions, trace| {
            let total_cost = steps.last().map_or(0.0, |s: &PlanStep| s.g);
            PlanResult {
                status,
                steps,
                total_cost,
                iterations,
                expansions,
                trace,
            }
        };

        while let Some(entry) = open.pop() {
            let id = entry.node;
            let key = self.bin(&nodes[id].state);
            if best.get(&key) != Some(&id) {
                continue;
            }
            if cancel.load(AtomicOrdering::Relaxed) {
                return finish(PlanStatus::Cancelled, Vec::new(), iterations, expansions, trace);
            }
            iterations += 1;
            if self.config.trace {
                let n = &nodes[id];
                trace.push(TraceEntry {
                    iteration: iterations,
                    node: id,
                    state: n.state,
                    g: n.g,
                    h: n.h,
                });
            }
            if goal.contains(&self.center(&nodes[id].state)) {
                return finish(
                    PlanStatus::Success,
                    reconstruct(&nodes, id),
                    iterations,
                    expansions,
                    trace,
                );
            }
            if iterations >= self.config.max_iterations {
                return finish(PlanStatus::IterationLimit, Vec::new(), iterations, expansions, trace);
            }

            expansions += 1;
            let parent = nodes[id].clone();
            for action in self.expand(map, &parent, goal) {
                let state = successor(&parent.state, &action);
                let g = parent.g + self.step_cost(&action);
                let key = self.bin(&state);
                if let Some(&other) = best.get(&key) {
                    if nodes[other].g <= g {
                        continue;
                    }
                }
                let (h, penalty) = self.penalized_h(map, &state, Some(&action), parent.action.as_ref(), goal);
                let child = nodes.len();
                nodes.push(SearchNode {
                    state,
                    swing: parent.state,
                    g,
                    h,
                    f: g + h,
                    parent: Some(id),
                    action: Some(action),
                    penalty,
                });
                best.insert(key, child);
                seq += 1;
                open.push(OpenEntry {
                    f: g + h,
                    g,
                    seq,
                    node: child,
                });
            }
        }
        finish(PlanStatus::DeadEnd, Vec::new(), iterations, expansions, trace)
    }
}

/// Walks parent links from `node` back to the root and returns the states in
/// start-to-goal order.
pub fn reconstruct(nodes: &[SearchNode], node: usize) -> Vec<PlanStep> {
    let mut out = Vec::new();
    let mut cur = Some(node);
    while let Some(i) = cur {
        let n = &nodes[i];
        out.push(PlanStep {
            state: n.state,
            action: n.action,
            g: n.g,
            h: n.h,
        });
        cur = n.parent;
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldmap::{build_map, filter_chain, GridGeometry, Terrain};

    fn flat(size: f64) -> ElevationMap {
        let grid = GridGeometry::new(size, size, 0.05, 0.0, 0.0).unwrap();
        filter_chain(build_map(&Terrain::new(grid, vec![], 0).unwrap()), 0.1)
    }

    fn planner(cfg: PlannerConfig) -> Planner {
        let profile = ActionProfile::sim();
        let energy = EnergyParams::default().with_optimal_step(profile.optimal_length);
        Planner::new(profile, energy, FeasibilityConfig::default(), cfg).unwrap()
    }

    #[test]
    fn start_in_goal_terminates_immediately() {
        let map = flat(3.0);
        let p = planner(PlannerConfig::default());
        let start = StartPair::from_center(&Pose2::new(1.0, 1.5, 0.0), Side::Left, 0.25);
        let r = p.plan(&map, &start, &GoalSpec::new(1.05, 1.5, 0.15));
        assert_eq!(r.status, PlanStatus::Success);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn straight_plan_alternates_and_sums_costs() {
        let map = flat(4.0);
        let p = planner(PlannerConfig::default());
        let start = StartPair::from_center(&Pose2::new(0.5, 2.0, 0.0), Side::Left, 0.25);
        let r = p.plan(&map, &start, &GoalSpec::new(3.0, 2.0, 0.15));
        assert_eq!(r.status, PlanStatus::Success);
        let mut g = 0.0;
        for w in r.steps.windows(2) {
            assert_ne!(w[0].state.side, w[1].state.side);
            let step = p.step_cost(w[1].action.as_ref().unwrap());
            assert!(step >= p.energy.mg() * p.energy.c);
            g += step;
            assert!((w[1].g - g).abs() < 1e-9);
        }
        assert!((r.total_cost - g).abs() < 1e-9);
        assert_eq!(r, p.plan(&map, &start, &GoalSpec::new(3.0, 2.0, 0.15)));
    }

    #[test]
    fn reconstruct_depths() {
        let s = FootState::new(0.0, 0.0, 0.0, Side::Left);
        let node = |parent, side| SearchNode {
            state: FootState { side, ..s },
            swing: s,
            g: 0.0,
            h: 0.0,
            f: 0.0,
            parent,
            action: None,
            penalty: 0.0,
        };
        let nodes = vec![
            node(None, Side::Left),
            node(Some(0), Side::Right),
            node(Some(1), Side::Left),
            node(Some(2), Side::Right),
        ];
        assert_eq!(reconstruct(&nodes, 0).len(), 1);
        let path = reconstruct(&nodes, 3);
        assert_eq!(path.len(), 4);
        assert!(path.windows(2).all(|w| w[0].state.side != w[1].state.side));
    }

    #[test]
    fn penalty_rules() {
        use crate::worldmap::{Primitive, Rect};
        let grid = GridGeometry::new(4.0, 4.0, 0.05, 0.0, 0.0).unwrap();
        let wall = Primitive::block(None, Rect::centered(2.55, 2.0, 0.1, 2.0), 1.0);
        let map = filter_chain(build_map(&Terrain::new(grid, vec![wall], 0).unwrap()), 0.1);
        let p = planner(PlannerConfig::default());
        let goal = GoalSpec::new(3.5, 2.0, 0.15);

        let clear = FootState::from_center(&Pose2::new(1.0, 2.0, 0.0), Side::Left, 0.25);
        let fwd = FootstepAction::new(0.3, -0.25, 0.0, crate::actions::SubsetId::Forward);
        let (h, pen) = p.penalized_h(&map, &clear, Some(&fwd), None, &goal);
        assert_eq!(pen, 0.0);
        assert_eq!(h, p.heuristic().evaluate(&p.center(&clear), &goal));

        let near = FootState::from_center(&Pose2::new(2.2, 2.0, 0.0), Side::Left, 0.25);
        let plain = p.penalty(&map, &near, &fwd, None);
        assert!(plain > 0.0);
        let rot = |dtheta| FootstepAction::new(0.0, 0.25, dtheta, crate::actions::SubsetId::RotateOut);
        let relieved = p.penalty(&map, &near, &rot(0.2), Some(&fwd));
        assert!((relieved - 0.25 * plain).abs() < 1e-9);
        let reversed = p.penalty(&map, &near, &rot(0.2), Some(&rot(-0.2)));
        assert!(reversed > plain);

        // Obstacle exactly at the trigger distance contributes nothing.
        let at_edge = p.config.penalty.check_dist_m;
        let far = FootState::from_center(&Pose2::new(2.525 - at_edge, 2.0, 0.0), Side::Left, 0.25);
        assert!(p.penalty(&map, &far, &fwd, None).abs() < 1e-9);
    }
}
