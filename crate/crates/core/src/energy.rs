//! Human-locomotion energy model for footsteps.
//!
//! A step costs `mg(A l^4 + B l + C) + mg D w^2 + mg F theta^2`, plus a fixed
//! `mg * k * C` surcharge for side steps. Dividing by `mg l` gives the cost of
//! transport (COT). The planner heuristic combines the minimum straight-walking
//! COT with the cheapest way of spreading a remaining heading change over the
//! remaining steps.
//!
//! Lengths enter the polynomial after division by [`EnergyParams::length_scale_m`].
//! With the default scale of 1 m the constants are used in plain meters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, GoalSpec, Pose2};

/// Displacements at or below this are treated as stepping on the spot.
pub const DISPLACEMENT_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Carried for completeness of the parameter table. No energy term reads it.
    pub e: f64,
    pub f: f64,
    pub mass_kg: f64,
    pub gravity_mps2: f64,
    /// Side steps pay `side_penalty_multiplier * C` on top of the regular terms.
    pub side_penalty_multiplier: f64,
    pub step_time_s: f64,
    /// Yaw inertia of the swing leg, used only by [`yaw_trajectory_energy`].
    pub yaw_inertia_kgm2: f64,
    /// Step length and width are divided by this before entering the polynomial.
    pub length_scale_m: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            a: 44.0,
            b: 0.2112,
            c: 4.0,
            d: 0.2,
            e: 0.23,
            f: 0.4,
            mass_kg: 80.0,
            gravity_mps2: 9.81,
            side_penalty_multiplier: 10.0,
            step_time_s: 1.0,
            yaw_inertia_kgm2: 0.05,
            length_scale_m: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("c", self.c),
            ("d", self.d),
            ("f", self.f),
            ("mass_kg", self.mass_kg),
            ("gravity_mps2", self.gravity_mps2),
            ("step_time_s", self.step_time_s),
            ("length_scale_m", self.length_scale_m),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "energy parameter {name} must be positive, got {value}"
                )));
            }
        }
        if self.b < 0.0 || self.side_penalty_multiplier < 0.0 || self.yaw_inertia_kgm2 < 0.0 {
            return Err(Error::InvalidConfig(
                "energy parameters b, side_penalty_multiplier and yaw_inertia_kgm2 must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Weight force `m * g`.
    pub fn mg(&self) -> f64 {
        self.mass_kg * self.gravity_mps2
    }

    /// Returns a copy whose length scale puts the COT minimum of straight
    /// walking exactly at `optimal_step_m`.
    ///
    /// The unconstrained minimum of `(A l^4 + B l + C) / l` satisfies
    /// `3 A l^4 = C`, independent of `B`.
    pub fn with_optimal_step(mut self, optimal_step_m: f64) -> Self {
        let natural = (self.c / (3.0 * self.a)).powf(0.25);
        self.length_scale_m = optimal_step_m / natural;
        self
    }

    /// Energy of the constant step term alone, the lower bound of every step.
    pub fn min_step_energy(&self) -> f64 {
        self.mg() * self.c
    }

    fn length_polynomial(&self, l: f64) -> f64 {
        let u = l / self.length_scale_m;
        self.a * u.powi(4) + self.b * u + self.c
    }
}

/// Geometry of a single step as seen by the energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepGeometry {
    /// Step length (m), non-negative.
    pub length: f64,
    /// Lateral foot-to-foot distance (m), non-negative.
    pub width: f64,
    /// Yaw change (rad).
    pub yaw: f64,
    pub sidestep: bool,
}

impl StepGeometry {
    pub fn straight(length: f64) -> Self {
        Self {
            length,
            width: 0.0,
            yaw: 0.0,
            sidestep: false,
        }
    }
}

/// Energy of one step in joules.
pub fn step_energy(geom: &StepGeometry, p: &EnergyParams) -> f64 {
    let mg = p.mg();
    let w = geom.width / p.length_scale_m;
    let length = mg * p.length_polynomial(geom.length);
    let width = mg * p.d * w * w;
    let angle = mg * p.f * geom.yaw * geom.yaw;
    let side = if geom.sidestep {
        mg * p.side_penalty_multiplier * p.c
    } else {
        0.0
    };
    length + width + angle + side
}

/// Cost of transport of one step: energy over `m g l`.
pub fn cot(geom: &StepGeometry, p: &EnergyParams) -> Result<f64> {
    if geom.length <= DISPLACEMENT_EPSILON {
        return Err(Error::UndefinedCot {
            displacement: geom.length,
        });
    }
    Ok(step_energy(geom, p) / (p.mg() * geom.length))
}

/// Minimum-COT straight step within `(0, max_length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightOptimum {
    pub length: f64,
    /// The minimum COT itself.
    pub alpha: f64,
}

/// Minimizes the straight-walking COT `(A l^4 + B l + C) / l` over
/// `(0, max_length]` by golden-section search. The objective is convex for
/// positive lengths.
pub fn optimal_straight_step(p: &EnergyParams, max_length: f64) -> StraightOptimum {
    assert!(max_length > 0.0, "max step length must be positive");
    let objective = |l: f64| p.length_polynomial(l) / l;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (max_length * 1e-6, max_length);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mut length = 0.5 * (lo + hi);
    if objective(max_length) <= objective(length) {
        length = max_length;
    }
    StraightOptimum {
        length,
        alpha: objective(length),
    }
}

/// Which cost-to-go estimate the planner uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    /// Always zero (uniform-cost search).
    Zero,
    /// Minimum COT times distance to the goal region.
    Distance,
    /// Distance term plus the evenly divided heading-change cost.
    #[serde(rename = "distance+angle")]
    DistanceAngle,
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(Self::Zero),
            "distance" => Ok(Self::Distance),
            "distance+angle" | "distance-angle" | "angle" => Ok(Self::DistanceAngle),
            other => Err(format!("unknown heuristic `{other}`")),
        }
    }
}

impl std::fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Zero => "zero",
            Self::Distance => "distance",
            Self::DistanceAngle => "distance+angle",
        })
    }
}

/// Number of steps `N` the heading change is divided over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepCountPolicy {
    /// `max(1, ceil(d / l_max), ceil(|dtheta| / dtheta_max))`.
    MinimumSteps {
        max_length: f64,
        max_yaw: f64,
    },
    Fixed(u32),
}

impl StepCountPolicy {
    pub fn steps(&self, distance: f64, angle: f64) -> f64 {
        match *self {
            StepCountPolicy::MinimumSteps { max_length, max_yaw } => {
                // Guard against 0.30000000000000004 / 0.1 style round-ups.
                let by_length = (distance / max_length - 1e-9).ceil();
                let by_yaw = (angle.abs() / max_yaw - 1e-9).ceil();
                by_length.max(by_yaw).max(1.0)
            }
            StepCountPolicy::Fixed(n) => f64::from(n.max(1)),
        }
    }
}

/// Remaining distance and heading error toward a goal region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalDelta {
    /// Distance from the robot center to the edge of the goal disc, zero inside.
    pub distance: f64,
    /// Wrapped heading error.
    pub angle: f64,
}

/// Heading error is taken toward the goal bearing while outside the goal
/// disc, and toward the goal heading (if any) inside it.
pub fn goal_delta(center: &Pose2, goal: &GoalSpec) -> GoalDelta {
    let dist = center.distance_to(goal.x, goal.y);
    let distance = (dist - goal.radius).max(0.0);
    let angle = if dist >= goal.radius && dist > 0.0 {
        let bearing = (goal.y - center.y).atan2(goal.x - center.x);
        wrap_angle(bearing - center.theta)
    } else if let Some(heading) = goal.heading {
        wrap_angle(heading - center.theta)
    } else {
        0.0
    };
    GoalDelta { distance, angle }
}

/// `alpha m g d + m g F dtheta^2 / N` for the robot center pose.
pub fn heuristic(center: &Pose2, goal: &GoalSpec, p: &EnergyParams, alpha: f64, policy: StepCountPolicy) -> f64 {
    let delta = goal_delta(center, goal);
    let n = policy.steps(delta.distance, delta.angle);
    let mg = p.mg();
    alpha * mg * delta.distance + mg * p.f * delta.angle * delta.angle / n
}

/// Cached heuristic evaluator used by the planner.
#[derive(Debug, Clone, Copy)]
pub struct Heuristic {
    pub kind: HeuristicKind,
    pub params: EnergyParams,
    pub alpha: f64,
    pub policy: StepCountPolicy,
}

impl Heuristic {
    /// `max_length` bounds the step length of every action the planner can
    /// take, `max_yaw` the per-step heading change.
    pub fn new(kind: HeuristicKind, params: EnergyParams, max_length: f64, max_yaw: f64) -> Self {
        let alpha = optimal_straight_step(&params, max_length).alpha;
        Self {
            kind,
            params,
            alpha,
            policy: StepCountPolicy::MinimumSteps { max_length, max_yaw },
        }
    }

    pub fn evaluate(&self, center: &Pose2, goal: &GoalSpec) -> f64 {
        match self.kind {
            HeuristicKind::Zero => 0.0,
            HeuristicKind::Distance => self.alpha * self.params.mg() * goal_delta(center, goal).distance,
            HeuristicKind::DistanceAngle => heuristic(center, goal, &self.params, self.alpha, self.policy),
        }
    }
}

/// Energy an actuator spends moving a yaw inertia along the trigonometric
/// profile `p(t) = V (t - T/(2 pi) sin(2 pi t / T))` with `p(T) = theta_des`.
///
/// Integrates `|I a(t) v(t)|` over one step with composite Simpson quadrature.
pub fn yaw_trajectory_energy(theta_des: f64, step_time: f64, inertia: f64) -> f64 {
    yaw_trajectory_energy_with(theta_des, step_time, inertia, 2000)
}

/// [`yaw_trajectory_energy`] with an explicit number of Simpson intervals
/// (rounded up to a multiple of 4 so the sign change at `T/2` is a node).
pub fn yaw_trajectory_energy_with(theta_des: f64, step_time: f64, inertia: f64, intervals: usize) -> f64 {
    assert!(step_time > 0.0, "step time must be positive");
    let v_max = theta_des / step_time;
    let omega = 2.0 * PI / step_time;
    let integrand = |t: f64| {
        let v = v_max * (1.0 - (omega * t).cos());
        let a = omega * v_max * (omega * t).sin();
        (inertia * a * v).abs()
    };
    let n = intervals.max(4).div_ceil(4) * 4;
    let half = n / 2;
    let h = step_time / n as f64;
    // Simpson on each half separately; |sin| has a kink at T/2.
    let simpson = |start: usize| {
        let mut sum = integrand(start as f64 * h) + integrand((start + half) as f64 * h);
        for i in 1..half {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * integrand((start + i) as f64 * h);
        }
        sum * h / 3.0
    };
    simpson(0) + simpson(half)
}
