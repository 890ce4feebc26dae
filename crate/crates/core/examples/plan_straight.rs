//! Plans the straight corridor scenario and prints the footsteps.

use footstep::scenario::Scenario;

fn main() -> footstep::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/straight-5m.toml").into());
    let s = Scenario::load(&path)?;
    let planner = s.build_planner()?;
    let plan = planner.plan(&s.build_map()?, &s.start_pair(), &s.goal);
    println!(
        "{}: {} after {} iterations, {} steps, {:.1} J",
        s.name,
        plan.status,
        plan.iterations,
        plan.step_count(),
        plan.total_cost
    );
    for (i, step) in plan.steps.iter().enumerate() {
        let st = step.state;
        println!(
            "{i:>3} {:?}\tx {:6.3} y {:6.3} yaw {:+6.1} deg  g {:9.1}",
            st.side,
            st.x,
            st.y,
            st.theta.to_degrees(),
            step.g
        );
    }
    Ok(())
}
