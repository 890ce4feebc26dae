//! A person crosses the corridor while the robot walks and replans.

use footstep::replan::SimState;
use footstep::scenario::Scenario;

fn main() -> footstep::Result<()> {
    let s = Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/dynamic-person.toml"))?;
    let mut sim = SimState::new(
        s.build_planner()?,
        s.terrain()?,
        s.build_map()?,
        s.start_pair(),
        s.goal,
        s.events.clone(),
        s.sim.clone(),
    );
    sim.run();
    println!(
        "{:>4} {:>4} {:<12} {:<8} {:>7} {:>7} {:>7}  feasible",
        "tick", "step", "decision", "fallback", "x", "y", "yaw"
    );
    for t in &sim.log {
        println!(
            "{:>4} {:>4} {:<12} {:<8} {:>7.3} {:>7.3} {:>+7.1}  {}",
            t.clock,
            t.step_number,
            format!("{:?}", t.decision),
            t.fallback.map_or("-", |f| f.as_str()),
            t.executed.x,
            t.executed.y,
            t.executed.theta.to_degrees(),
            t.feasible
        );
    }
    println!("goal reached: {}", sim.reached_goal);
    Ok(())
}
