//! Scenario runs, variant comparisons and their artifacts: plan CSV and JSON,
//! per-tick CSV and an SVG top view.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::actions::{FootState, Selection};
use crate::energy::HeuristicKind;
use crate::error::{Error, Result};
use crate::feasibility::FeasibilityConfig;
use crate::planner::{PlanResult, PlanStatus};
use crate::replan::{write_tick_csv, SimState, TickRecord};
use crate::scenario::Scenario;
use crate::worldmap::{ElevationMap, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plan,
    Sim,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plan" => Ok(Mode::Plan),
            "sim" => Ok(Mode::Sim),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Overrides applied on top of a scenario's own configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variant {
    pub selection: Option<Selection>,
    pub heuristic: Option<HeuristicKind>,
    pub penalty: Option<bool>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub trace: bool,
}

impl Default for Variant {
    fn default() -> Self {
        Self {
            selection: None,
            heuristic: None,
            penalty: None,
            max_iterations: None,
            seed: None,
            mode: Mode::Plan,
            trace: false,
        }
    }
}

impl Variant {
    /// Applies `key=value` pairs separated by commas, using the run flag names.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{pair}`")))?;
            let bad = |e: String| Error::InvalidConfig(format!("{key}: {e}"));
            match key {
                "selection" => self.selection = Some(value.parse().map_err(bad)?),
                "heuristic" => self.heuristic = Some(value.parse().map_err(bad)?),
                "penalty" => self.penalty = Some(parse_switch(value).map_err(bad)?),
                "max-iter" => {
                    self.max_iterations = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?)
                }
                "seed" => self.seed = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                "mode" => self.mode = value.parse().map_err(bad)?,
                other => return Err(Error::InvalidConfig(format!("unknown variant key `{other}`"))),
            }
        }
        Ok(self)
    }

    /// Stable label used in reports and file names.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(s) = self.selection {
            parts.push(match s {
                Selection::MinCot => "min-cot".to_string(),
                Selection::Farthest => "farthest".to_string(),
            });
        }
        if let Some(h) = self.heuristic {
            parts.push(h.to_string());
        }
        if let Some(p) = self.penalty {
            parts.push(format!("penalty-{}", if p { "on" } else { "off" }));
        }
        if let Some(n) = self.max_iterations {
            parts.push(format!("iter-{n}"));
        }
        if let Some(s) = self.seed {
            parts.push(format!("seed-{s}"));
        }
        parts.push(
            match self.mode {
                Mode::Plan => "plan",
                Mode::Sim => "sim",
            }
            .to_string(),
        );
        parts.join(".")
    }

    pub fn apply(&self, scenario: &mut Scenario) {
        let cfg = &mut scenario.planner;
        if let Some(s) = self.selection {
            cfg.selection = s;
        }
        if let Some(h) = self.heuristic {
            cfg.heuristic = h;
        }
        if let Some(p) = self.penalty {
            cfg.penalty.enabled = p;
        }
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if let Some(s) = self.seed {
            scenario.seed = s;
        }
        cfg.trace = self.trace;
    }
}

pub fn parse_switch(value: &str) -> Result<bool, String> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub variant: String,
    pub status: PlanStatus,
    /// Plan cost, or the energy of all executed steps in simulation mode.
    pub total_cost: f64,
    pub iterations: usize,
    pub expansions: usize,
    pub steps: usize,
    pub reached_goal: bool,
    pub runtime_s: f64,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn is_success(&self) -> bool {
        self.status == PlanStatus::Success && self.reached_goal
    }
}

/// Everything a run produced, for callers that need more than the summary.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub map: ElevationMap,
    pub plan: Option<PlanResult>,
    pub ticks: Vec<TickRecord>,
}

/// Runs a scenario file; writes artifacts when `out_dir` is given.
pub fn run(scenario_path: &Path, variant: &Variant, out_dir: Option<&Path>) -> Result<RunReport> {
    let scenario = Scenario::load(scenario_path)?;
    Ok(run_scenario(&scenario, variant, out_dir)?.report)
}

pub fn run_scenario(scenario: &Scenario, variant: &Variant, out_dir: Option<&Path>) -> Result<RunOutput> {
    let mut scenario = scenario.clone();
    variant.apply(&mut scenario);
    let planner = scenario.build_planner()?;
    let map = scenario.build_map()?;
    let label = variant.label();
    let clock = Instant::now();

    let mut out = match variant.mode {
        Mode::Plan => {
            let plan = planner.plan(&map, &scenario.start_pair(), &scenario.goal);
            let report = RunReport {
                scenario: scenario.name.clone(),
                variant: label.clone(),
                status: plan.status,
                total_cost: plan.total_cost,
                iterations: plan.iterations,
                expansions: plan.expansions,
                steps: plan.step_count(),
                reached_goal: plan.is_success(),
                runtime_s: 0.0,
                artifacts: Vec::new(),
            };
            RunOutput {
                report,
                map,
                plan: Some(plan),
                ticks: Vec::new(),
            }
        }
        Mode::Sim => {
            let mut sim = SimState::new(
                planner,
                scenario.terrain()?,
                map,
                scenario.start_pair(),
                scenario.goal,
                scenario.events.clone(),
                scenario.sim.clone(),
            );
            sim.run();
            let cost: f64 = sim.log.iter().map(|r| sim.planner().step_cost(&r.action)).sum();
            let iterations = sim.log.iter().map(|r| r.plan_iterations).max().unwrap_or(0);
            let status = if sim.reached_goal {
                PlanStatus::Success
            } else {
                PlanStatus::IterationLimit
            };
            let report = RunReport {
                scenario: scenario.name.clone(),
                variant: label.clone(),
                status,
                total_cost: cost,
                iterations,
                expansions: 0,
                steps: sim.log.len(),
                reached_goal: sim.reached_goal,
                runtime_s: 0.0,
                artifacts: Vec::new(),
            };
            RunOutput {
                report,
                map: sim.map().clone(),
                plan: None,
                ticks: sim.log.clone(),
            }
        }
    };
    out.report.runtime_s = clock.elapsed().as_secs_f64();

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = format!("{}.{}", scenario.name, label);
        let mut artifacts = Vec::new();
        let footprints: Vec<FootState> = match &out.plan {
            Some(plan) => {
                let csv = dir.join(format!("{stem}.plan.csv"));
                write_plan_csv(plan, &csv)?;
                let json = dir.join(format!("{stem}.plan.json"));
                write_json(plan, &json)?;
                artifacts.extend([csv, json]);
                plan.footsteps()
            }
            None => {
                let csv = dir.join(format!("{stem}.ticks.csv"));
                write_tick_csv(&out.ticks, &csv)?;
                artifacts.push(csv);
                std::iter::once(scenario.start_pair().stance)
                    .chain(out.ticks.iter().map(|t| t.executed))
                    .collect()
            }
        };
        let svg = dir.join(format!("{stem}.svg"));
        let text = render_svg(&out.map, &footprints, &scenario, &scenario.feasibility);
        fs::write(&svg, text).map_err(|e| Error::io(&svg, e))?;
        artifacts.push(svg);
        out.report.artifacts = artifacts;
    }
    Ok(out)
}

#[derive(Serialize)]
struct PlanRow {
    step_index: usize,
    side: String,
    x: f64,
    y: f64,
    theta: f64,
    g: f64,
    h: f64,
    f: f64,
}

pub fn write_plan_csv(plan: &PlanResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, s) in plan.steps.iter().enumerate() {
        w.serialize(PlanRow {
            step_index: i,
            side: s.state.side.to_string(),
            x: s.state.x,
            y: s.state.y,
            theta: s.state.theta,
            g: s.g,
            h: s.h,
            f: s.f(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Top view: raw heights in gray, unknown cells hatched red, the goal disc,
/// and one oriented foot rectangle per footstep after the start.
pub fn render_svg(
    map: &ElevationMap,
    footsteps: &[FootState],
    scenario: &Scenario,
    feas: &FeasibilityConfig,
) -> String {
    let g = &map.grid;
    let scale = 100.0;
    let (w, h) = (g.size_x() * scale, g.size_y() * scale);
    let heights = map.layer(Layer::Height);
    let max_h = heights
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    // World y grows upward; SVG y grows downward.
    let sx = |x: f64| (x - g.origin_x) * scale;
    let sy = |y: f64| h - (y - g.origin_y) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let cell = g.resolution * scale;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let i = iy * g.nx + ix;
            let (x0, y1) = (
                g.origin_x + ix as f64 * g.resolution,
                g.origin_y + (iy + 1) as f64 * g.resolution,
            );
            let fill = if !map.is_valid(i) {
                "#d04040".to_string()
            } else if heights[i].abs() > 1e-9 {
                let v = (230.0 - 200.0 * (heights[i] / max_h).clamp(0.0, 1.0)) as u8;
                format!("rgb({v},{v},{v})")
            } else {
                continue;
            };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}"/>"#,
                sx(x0),
                sy(y1)
            );
        }
    }
    let goal = &scenario.goal;
    let _ = writeln!(
        s,
        r#"<circle class="goal" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="green" stroke-width="2"/>"#,
        sx(goal.x),
        sy(goal.y),
        goal.radius * scale
    );
    let (fl, fw) = (feas.foot_length_m * scale, feas.foot_width_m * scale);
    for (i, f) in footsteps.iter().enumerate() {
        let class = if i == 0 { "start" } else { "footprint" };
        let color = match f.side {
            crate::geometry::Side::Left => "#2060c0",
            crate::geometry::Side::Right => "#c06020",
        };
        let _ = writeln!(
            s,
            r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{fl:.2}" height="{fw:.2}" fill="{color}" fill-opacity="0.6" stroke="black" stroke-width="0.5" transform="rotate({:.3} {:.2} {:.2})"/>"#,
            sx(f.x) - fl / 2.0,
            sy(f.y) - fw / 2.0,
            -f.theta.to_degrees(),
            sx(f.x),
            sy(f.y)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub status_a: PlanStatus,
    pub status_b: PlanStatus,
    pub cost_a: f64,
    pub cost_b: f64,
    /// `(b - a) / a` in percent.
    pub cost_delta_pct: f64,
    pub iterations_a: usize,
    pub iterations_b: usize,
    pub iterations_delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub variant_a: String,
    pub variant_b: String,
    pub rows: Vec<ComparisonRow>,
    pub mean_cost_delta_pct: f64,
    pub mean_iterations_delta_pct: f64,
    pub mean_iterations_a: f64,
    pub mean_iterations_b: f64,
}

fn pct(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a) / a * 100.0
    }
}

/// Runs every scenario under both variants in parallel.
pub fn compare(scenarios: &[Scenario], a: &Variant, b: &Variant) -> Result<Comparison> {
    let rows = scenarios
        .par_iter()
        .map(|s| {
            let ra = run_scenario(s, a, None)?.report;
            let rb = run_scenario(s, b, None)?.report;
            Ok(ComparisonRow {
                scenario: s.name.clone(),
                status_a: ra.status,
                status_b: rb.status,
                cost_a: ra.total_cost,
                cost_b: rb.total_cost,
                cost_delta_pct: pct(ra.total_cost, rb.total_cost),
                iterations_a: ra.iterations,
                iterations_b: rb.iterations,
                iterations_delta_pct: pct(ra.iterations as f64, rb.iterations as f64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ComparisonRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(Comparison {
        variant_a: a.label(),
        variant_b: b.label(),
        mean_cost_delta_pct: mean(&|r| r.cost_delta_pct),
        mean_iterations_delta_pct: mean(&|r| r.iterations_delta_pct),
        mean_iterations_a: mean(&|r| r.iterations_a as f64),
        mean_iterations_b: mean(&|r| r.iterations_b as f64),
        rows,
    })
}

impl Comparison {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Aligned text table with a closing mean row.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "A: {}\nB: {}", self.variant_a, self.variant_b);
        let _ = writeln!(
            s,
            "{:<24} {:>16} {:>16} {:>9} {:>8} {:>8} {:>9}",
            "scenario", "cost A [J]", "cost B [J]", "dcost %", "iter A", "iter B", "diter %"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:>16.1} {:>16.1} {:>9.2} {:>8} {:>8} {:>9.2}",
                r.scenario,
                r.cost_a,
                r.cost_b,
                r.cost_delta_pct,
                r.iterations_a,
                r.iterations_b,
                r.iterations_delta_pct
            );
        }
        let _ = writeln!(
            s,
            "{:<24} {:>16} {:>16} {:>9.2} {:>8.1} {:>8.1} {:>9.2}",
            "mean",
            "",
            "",
            self.mean_cost_delta_pct,
            self.mean_iterations_a,
            self.mean_iterations_b,
            self.mean_iterations_delta_pct
        );
        s
    }
}

/// Scenario files named by `paths`; directories contribute their `*.toml`
/// files in name order.
pub fn collect_scenarios(paths: &[PathBuf]) -> Result<Vec<Scenario>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(Scenario::load).collect()
}
