//! The wall trap with and without the obstacle penalty.

use footstep::report::{self, Variant};
use footstep::scenario::Scenario;

fn main() -> footstep::Result<()> {
    let s = Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/wall.toml"))?;
    for on in [false, true] {
        let v = Variant {
            penalty: Some(on),
            max_iterations: Some(2000),
            ..Variant::default()
        };
        let r = report::run_scenario(&s, &v, None)?.report;
        println!(
            "penalty {:<3}: {} after {} iterations, {} steps, {:.1} J",
            if on { "on" } else { "off" },
            r.status,
            r.iterations,
            r.steps,
            r.total_cost
        );
    }
    Ok(())
}
