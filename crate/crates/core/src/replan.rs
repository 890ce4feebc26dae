//! Step-synchronous replanning simulator.
//!
//! Each tick executes exactly one footstep. Plan requests are stamped with
//! the robot's step counter and run on a worker thread against a snapshot of
//! the map; a plan is only used when its stamp still equals the counter when
//! it arrives. Otherwise, or when no usable plan exists, the robot steps in
//! place. Planner latency is counted in ticks, so runs are deterministic.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::actions::{orient, successor, FootState, FootstepAction};
use crate::error::{Error, Result};
use crate::feasibility::transition_feasible;
use crate::geometry::{GoalSpec, Side};
use crate::planner::{PlanResult, PlanStatus, Planner, StartPair};
use crate::scenario::{MapChange, MapEvent};
use crate::worldmap::{ElevationMap, Terrain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub max_ticks: usize,
    /// Ticks between issuing a request and its plan becoming available.
    pub base_latency_ticks: usize,
    /// Planner iterations that fit in one tick; defaults to the planner's
    /// iteration limit.
    pub iteration_budget_per_tick: Option<usize>,
    /// Requests issued at these ticks arrive one tick late.
    pub slow_requests: Vec<usize>,
    /// Consecutive step-in-place ticks after which the log flags a stall.
    pub stall_threshold: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_ticks: 400,
            base_latency_ticks: 1,
            iteration_budget_per_tick: None,
            slow_requests: Vec::new(),
            stall_threshold: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncDecision {
    UsePlan,
    StepInPlace,
}

/// Why a tick stepped in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    NoPlan,
    Stale,
    Failed,
    SideMismatch,
    /// The plan window was padded because the plan ended.
    Padding,
    /// The planned step became infeasible after a map change.
    Blocked,
}

impl Fallback {
    pub fn as_str(self) -> &'static str {
        match self {
            Fallback::NoPlan => "no-plan",
            Fallback::Stale => "stale",
            Fallback::Failed => "failed",
            Fallback::SideMismatch => "side-mismatch",
            Fallback::Padding => "padding",
            Fallback::Blocked => "blocked",
        }
    }
}

fn sync_reason(robot_step_number: usize, plan_step_number: usize, plan: &PlanResult, stance: Side) -> Option<Fallback> {
    if robot_step_number != plan_step_number {
        return Some(Fallback::Stale);
    }
    if plan.status != PlanStatus::Success {
        return Some(Fallback::Failed);
    }
    match plan.steps.get(1) {
        Some(first) if first.state.side != stance.opposite() => Some(Fallback::SideMismatch),
        _ => None,
    }
}

/// Uses the plan only when it was requested at the robot's current step,
/// succeeded, and its first step swings the foot that is due.
pub fn sync_check(robot_step_number: usize, plan_step_number: usize, plan: &PlanResult, stance: Side) -> SyncDecision {
    match sync_reason(robot_step_number, plan_step_number, plan, stance) {
        None => SyncDecision::UsePlan,
        Some(_) => SyncDecision::StepInPlace,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PreviewStep {
    Planned(FootstepAction),
    InPlace,
}

/// The next three steps of a plan, padded with step-in-place.
pub fn preview_window(plan: &PlanResult) -> [PreviewStep; 3] {
    let mut window = [PreviewStep::InPlace; 3];
    if plan.status == PlanStatus::Success {
        for (slot, step) in window.iter_mut().zip(plan.steps.iter().skip(1)) {
            if let Some(a) = step.action {
                *slot = PreviewStep::Planned(a);
            }
        }
    }
    window
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub clock: usize,
    /// Robot step counter before the step.
    pub step_number: usize,
    pub decision: SyncDecision,
    pub fallback: Option<Fallback>,
    pub action: FootstepAction,
    pub executed: FootState,
    /// Feasibility of the executed step on the map at execution time.
    pub feasible: bool,
    pub plan_stamp: Option<usize>,
    pub plan_status: Option<PlanStatus>,
    pub plan_iterations: usize,
    pub stalled: bool,
}

struct Pending {
    stamp: usize,
    request_tick: i64,
    handle: JoinHandle<PlanResult>,
}

struct Arrived {
    stamp: usize,
    ready_at: i64,
    plan: PlanResult,
}

/// Simulator state: robot feet, counters, the map and the plan pipeline.
pub struct SimState {
    pub stance: FootState,
    pub swing: FootState,
    pub robot_step_number: usize,
    pub clock: usize,
    pub goal: GoalSpec,
    pub config: SimConfig,
    pub log: Vec<TickRecord>,
    pub reached_goal: bool,
    latest: Option<(usize, PlanResult)>,
    pending: Option<Pending>,
    arrived: Option<Arrived>,
    events: VecDeque<MapEvent>,
    map: Arc<ElevationMap>,
    terrain: Terrain,
    planner: Arc<Planner>,
    cancel: Arc<AtomicBool>,
    in_place_run: usize,
}

impl SimState {
    /// Sets up the robot at `start` and issues the first plan request, which
    /// is available at tick 0.
    pub fn new(
        planner: Planner,
        terrain: Terrain,
        map: ElevationMap,
        start: StartPair,
        goal: GoalSpec,
        events: Vec<MapEvent>,
        config: SimConfig,
    ) -> Self {
        let mut events = events;
        events.sort_by_key(|e| e.step);
        let mut sim = Self {
            stance: start.stance,
            swing: start.swing,
            robot_step_number: 0,
            clock: 0,
            goal,
            config,
            log: Vec::new(),
            reached_goal: false,
            latest: None,
            pending: None,
            arrived: None,
            events: events.into(),
            map: Arc::new(map),
            terrain,
            planner: Arc::new(planner),
            cancel: Arc::new(AtomicBool::new(false)),
            in_place_run: 0,
        };
        sim.reached_goal = goal.contains(&sim.planner.center(&sim.stance));
        if !sim.reached_goal {
            sim.request(-1);
        }
        sim
    }

    pub fn map(&self) -> &ElevationMap {
        &self.map
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }

    /// Most recent plan received and its stamp.
    pub fn latest_plan(&self) -> Option<(usize, &PlanResult)> {
        self.latest.as_ref().map(|(s, p)| (*s, p))
    }

    fn request(&mut self, tick: i64) {
        let planner = Arc::clone(&self.planner);
        let map = Arc::clone(&self.map);
        let cancel = Arc::clone(&self.cancel);
        let start = StartPair {
            stance: self.stance,
            swing: self.swing,
        };
        let goal = self.goal;
        let handle = std::thread::spawn(move || planner.plan_cancellable(&map, &start, &goal, &cancel));
        self.pending = Some(Pending {
            stamp: self.robot_step_number,
            request_tick: tick,
            handle,
        });
    }

    fn collect(&mut self) {
        if let Some(p) = self.pending.take() {
            let plan = p.handle.join().expect("planner thread panicked");
            let budget = self
                .config
                .iteration_budget_per_tick
                .unwrap_or(self.planner.config.max_iterations)
                .max(1);
            let compute = plan.iterations.div_ceil(budget).max(1) - 1;
            let slow = p.request_tick >= 0 && self.config.slow_requests.contains(&(p.request_tick as usize));
            let latency = self.config.base_latency_ticks + compute + usize::from(slow);
            self.arrived = Some(Arrived {
                stamp: p.stamp,
                ready_at: p.request_tick + latency as i64,
                plan,
            });
        }
        if self.arrived.as_ref().is_some_and(|a| a.ready_at <= self.clock as i64) {
            let a = self.arrived.take().unwrap();
            self.latest = Some((a.stamp, a.plan));
        }
    }

    fn apply_events(&mut self) {
        while self.events.front().is_some_and(|e| e.step <= self.clock) {
            let event = self.events.pop_front().unwrap();
            let dirty = match event.change {
                MapChange::Insert(p) => {
                    let rect = p.rect;
                    self.terrain.push(p).ok().map(|_| rect)
                }
                MapChange::Remove(id) => self.terrain.remove(&id),
            };
            if let Some(rect) = dirty {
                Arc::make_mut(&mut self.map).rebuild_region(&self.terrain, &rect);
            }
        }
    }

    /// Advances one tick and returns the executed step.
    pub fn tick(&mut self) -> TickRecord {
        self.apply_events();
        self.collect();

        let profile = self.planner.profile();
        let in_place = orient(&profile.step_in_place(), self.stance.side);
        let (mut decision, mut fallback, mut action) = (SyncDecision::StepInPlace, Some(Fallback::NoPlan), in_place);
        if let Some((stamp, plan)) = &self.latest {
            fallback = sync_reason(self.robot_step_number, *stamp, plan, self.stance.side);
            if fallback.is_none() {
                match preview_window(plan)[0] {
                    PreviewStep::Planned(a) => {
                        let next = successor(&self.stance, &a);
                        let f = &self.planner.feasibility;
                        if transition_feasible(&self.map, &self.stance, &self.swing, &next, f) {
                            decision = SyncDecision::UsePlan;
                            action = a;
                        } else {
                            fallback = Some(Fallback::Blocked);
                        }
                    }
                    PreviewStep::InPlace => fallback = Some(Fallback::Padding),
                }
            }
        }

        let next = successor(&self.stance, &action);
        let feasible = transition_feasible(&self.map, &self.stance, &self.swing, &next, &self.planner.feasibility);
        self.in_place_run = if decision == SyncDecision::StepInPlace {
            self.in_place_run + 1
        } else {
            0
        };
        let record = TickRecord {
            clock: self.clock,
            step_number: self.robot_step_number,
            decision,
            fallback,
            action,
            executed: next,
            feasible,
            plan_stamp: self.latest.as_ref().map(|(s, _)| *s),
            plan_status: self.latest.as_ref().map(|(_, p)| p.status),
            plan_iterations: self.latest.as_ref().map_or(0, |(_, p)| p.iterations),
            stalled: self.in_place_run >= self.config.stall_threshold,
        };
        self.swing = self.stance;
        self.stance = next;
        self.robot_step_number += 1;
        self.reached_goal = self.goal.contains(&self.planner.center(&self.stance));
        if !self.reached_goal && self.pending.is_none() && self.arrived.is_none() {
            self.request(self.clock as i64);
        }
        self.clock += 1;
        self.log.push(record.clone());
        record
    }

    /// Ticks until the goal is reached or `max_ticks` have run.
    pub fn run(&mut self) -> &[TickRecord] {
        while !self.reached_goal && self.clock < self.config.max_ticks {
            self.tick();
        }
        &self.log
    }

    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        write_tick_csv(&self.log, path)
    }
}

impl Drop for SimState {
    fn drop(&mut self) {
        self.cancel.store(true, Ordering::Relaxed);
        if let Some(p) = self.pending.take() {
            let _ = p.handle.join();
        }
    }
}

/// Per-tick CSV with a header row.
pub fn write_tick_csv(log: &[TickRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "clock,step_number,decision,fallback,side,x,y,theta,feasible,plan_stamp,plan_status,iterations,stalled"
        )?;
        for r in log {
            writeln!(
                w,
                "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{}",
                r.clock,
                r.step_number,
                match r.decision {
                    SyncDecision::UsePlan => "use-plan",
                    SyncDecision::StepInPlace => "step-in-place",
                },
                r.fallback.map_or("", Fallback::as_str),
                r.executed.side,
                r.executed.x,
                r.executed.y,
                r.executed.theta,
                r.feasible,
                r.plan_stamp.map_or(String::new(), |s| s.to_string()),
                r.plan_status.map_or(String::new(), |s| s.to_string()),
                r.plan_iterations,
                r.stalled
            )?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
