//! Shared fixtures and reference implementations for the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use footstep::actions::{orient, successor, ActionProfile, FootState, FootstepAction};
use footstep::energy::{EnergyParams, HeuristicKind};
use footstep::feasibility::{transition_feasible, FeasibilityConfig};
use footstep::geometry::{GoalSpec, Pose2, Side};
use footstep::planner::{ActionMode, PenaltyConfig, PlanResult, Planner, PlannerConfig, StartPair};
use footstep::worldmap::{build_map, filter_chain, ElevationMap, GridGeometry, Primitive, Rect, Terrain};

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn scenario(name: &str) -> PathBuf {
    scenario_dir().join(name)
}

/// Flat map with optional boxes, filtered like scenario maps.
pub fn map_with(size: f64, boxes: &[(f64, f64, f64, f64, f64)]) -> ElevationMap {
    let grid = GridGeometry::new(size, size, 0.05, 0.0, 0.0).unwrap();
    let prims = boxes
        .iter()
        .map(|&(cx, cy, sx, sy, h)| Primitive::block(None, Rect::centered(cx, cy, sx, sy), h))
        .collect();
    filter_chain(build_map(&Terrain::new(grid, prims, 1).unwrap()), 0.1)
}

/// A small planning problem with a fixed action table.
#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    pub seed: u64,
    pub actions: Vec<FootstepAction>,
    pub start: (f64, f64, f64),
    pub stance: Side,
    pub goal: (f64, f64, f64),
    /// Obstacle boxes as (center x, center y, size x, size y, height).
    pub boxes: Vec<(f64, f64, f64, f64, f64)>,
    /// Length of the random walk the goal was placed at the end of.
    pub walk: usize,
    /// Energy of that walk, an upper bound on the optimum.
    pub walk_cost: f64,
}

pub const MAP_SIZE: f64 = 4.0;

impl Instance {
    /// Random table of up to four actions, a random start, and a goal at the
    /// end of a feasible random walk of at most six steps. Side steps are left
    /// out: their surcharge makes uniform-cost search on these instances
    /// explore millions of states.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = ActionProfile::sim();
        let pool: Vec<FootstepAction> = profile.candidates().filter(|a| !a.sidestep).copied().collect();
        let k = rng.gen_range(2..=4);
        let actions: Vec<FootstepAction> = pool.choose_multiple(&mut rng, k).copied().collect();
        let start = (
            rng.gen_range(1.5..2.5),
            rng.gen_range(1.5..2.5),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let stance = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
        let boxes = if rng.gen_bool(0.3) {
            vec![(rng.gen_range(0.5..3.5), rng.gen_range(0.5..3.5), 0.3, 0.3, 0.6)]
        } else {
            Vec::new()
        };
        let mut inst = Self {
            seed,
            actions,
            start,
            stance,
            goal: (0.0, 0.0, 0.15),
            boxes,
            walk: 0,
            walk_cost: 0.0,
        };
        let map = inst.map();
        let planner = inst.planner(HeuristicKind::Zero);
        let pair = inst.start_pair();
        let (mut stance_s, mut swing) = (pair.stance, pair.swing);
        let depth = rng.gen_range(1..=6);
        for _ in 0..depth {
            let options: Vec<(FootstepAction, FootState)> = inst
                .actions
                .iter()
                .map(|a| (*a, successor(&stance_s, &orient(a, stance_s.side))))
                .filter(|(_, n)| transition_feasible(&map, &stance_s, &swing, n, &FeasibilityConfig::default()))
                .collect();
            let Some(&(a, next)) = options.choose(&mut rng) else {
                break;
            };
            inst.walk_cost += planner.step_cost(&a);
            swing = stance_s;
            stance_s = next;
            inst.walk += 1;
        }
        let c = planner.center(&stance_s);
        let radius = rng.gen_range(0.1..0.2);
        inst.goal = (
            c.x + rng.gen_range(-0.05..0.05),
            c.y + rng.gen_range(-0.05..0.05),
            radius,
        );
        inst
    }

    pub fn map(&self) -> ElevationMap {
        map_with(MAP_SIZE, &self.boxes)
    }

    pub fn goal_spec(&self) -> GoalSpec {
        GoalSpec::new(self.goal.0, self.goal.1, self.goal.2)
    }

    pub fn start_pair(&self) -> StartPair {
        let center = Pose2::new(self.start.0, self.start.1, self.start.2);
        StartPair::from_center(&center, self.stance, ActionProfile::sim().nominal_width)
    }

    /// Planner over the fixed table with duplicate bins small enough that only
    /// identical states merge.
    pub fn planner(&self, heuristic: HeuristicKind) -> Planner {
        let profile = ActionProfile::sim();
        let energy = EnergyParams::default().with_optimal_step(profile.optimal_length);
        let config = PlannerConfig {
            max_iterations: 5_000_000,
            heuristic,
            penalty: PenaltyConfig {
                enabled: false,
                ..PenaltyConfig::default()
            },
            xy_bin_m: 1e-6,
            theta_bin_rad: 1e-6,
            action_mode: ActionMode::Fixed(self.actions.clone()),
            ..PlannerConfig::default()
        };
        Planner::new(profile, energy, FeasibilityConfig::default(), config).unwrap()
    }

    pub fn starts_in_goal(&self) -> bool {
        let c = self.start_pair().stance.center(ActionProfile::sim().nominal_width);
        self.goal_spec().contains(&c)
    }

    pub fn plan(&self, heuristic: HeuristicKind) -> PlanResult {
        self.planner(heuristic)
            .plan(&self.map(), &self.start_pair(), &self.goal_spec())
    }
}

/// Exhaustive depth-first branch and bound over every action sequence.
///
/// Costs are accumulated in path order, as the planner does. Pruning uses only
/// the facts that every step costs at least `m g C` and moves the robot center
/// by at most the longest center displacement in the table, plus a table of
/// the cheapest cost seen for each (stance, swing) pair: feasibility of later
/// steps depends on nothing else, so the result is the true optimum over all
/// sequences.
pub fn exhaustive_optimum(inst: &Instance) -> Option<f64> {
    let planner = inst.planner(HeuristicKind::Zero);
    let map = inst.map();
    let goal = inst.goal_spec();
    let feas = FeasibilityConfig::default();
    let min_step = planner.energy.mg() * planner.energy.c;
    let reach = inst
        .actions
        .iter()
        .map(|a| planner.profile().step_geometry(a).length)
        .fold(0.0, f64::max);
    let costs: Vec<f64> = inst.actions.iter().map(|a| planner.step_cost(a)).collect();

    struct Search<'a> {
        planner: &'a Planner,
        map: &'a ElevationMap,
        goal: GoalSpec,
        feas: FeasibilityConfig,
        actions: &'a [FootstepAction],
        costs: &'a [f64],
        min_step: f64,
        reach: f64,
        best: f64,
        seen: HashMap<Key, f64>,
    }

    impl Search<'_> {
        fn lower_bound(&self, state: &FootState) -> f64 {
            let c = self.planner.center(state);
            let gap = (c.distance_to(self.goal.x, self.goal.y) - self.goal.radius).max(0.0);
            if self.reach <= 0.0 {
                return if gap > 0.0 { f64::INFINITY } else { 0.0 };
            }
            (gap / self.reach - 1e-9).ceil().max(0.0) * self.min_step
        }

        fn visit(&mut self, stance: FootState, swing: FootState, g: f64) {
            if self.goal.contains(&self.planner.center(&stance)) {
                self.best = self.best.min(g);
                return;
            }
            // At least one more step is needed.
            if g + self.lower_bound(&stance).max(self.min_step) > self.best * (1.0 + 1e-12) {
                return;
            }
            let key = (quantize(&stance), quantize(&swing));
            match self.seen.get(&key) {
                Some(&seen) if seen <= g => return,
                _ => {
                    self.seen.insert(key, g);
                }
            }
            for (a, &cost) in self.actions.iter().zip(self.costs) {
                let next = successor(&stance, &orient(a, stance.side));
                if transition_feasible(self.map, &stance, &swing, &next, &self.feas) {
                    self.visit(next, stance, g + cost);
                }
            }
        }
    }

    let pair = inst.start_pair();
    let mut search = Search {
        planner: &planner,
        map: &map,
        goal,
        feas,
        actions: &inst.actions,
        costs: &costs,
        min_step,
        reach,
        best: f64::INFINITY,
        seen: HashMap::new(),
    };
    // Iterative deepening on the cost bound. Each pass is exhaustive below its
    // bound, and the walk that placed the goal caps the last pass.
    let cap = inst.walk_cost * (1.0 + 1e-9) + 1e-6;
    let mut bound = search.lower_bound(&pair.stance).max(min_step);
    loop {
        bound = bound.min(cap);
        search.best = bound;
        search.seen.clear();
        search.visit(pair.stance, pair.swing, 0.0);
        if search.best < bound {
            return Some(search.best);
        }
        if bound >= cap {
            return None;
        }
        bound *= 1.3;
    }
}

type Key = ((i64, i64, i64, bool), (i64, i64, i64, bool));

/// States closer than a nanometer (nanoradian) are the same state.
fn quantize(s: &FootState) -> (i64, i64, i64, bool) {
    let q = |v: f64| (v * 1e9).round() as i64;
    (q(s.x), q(s.y), q(s.theta), s.side == Side::Left)
}

/// Relative comparison for costs summed along the same path in the same order.
pub fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
