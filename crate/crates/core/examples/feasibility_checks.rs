//! Foothold, body and ray checks next to a knee-high box.

use footstep::actions::FootState;
use footstep::feasibility::{foothold_feasible, obstacle_ray, transition_feasible, FeasibilityConfig};
use footstep::geometry::{Pose2, Side};
use footstep::worldmap::{build_map, filter_chain, GridGeometry, Primitive, Rect, Terrain};

fn main() -> footstep::Result<()> {
    let grid = GridGeometry::new(3.0, 2.0, 0.05, 0.0, 0.0)?;
    let prims = vec![
        Primitive::block(Some("curb"), Rect::centered(1.0, 0.5, 0.4, 0.6), 0.04),
        Primitive::block(Some("crate"), Rect::centered(2.0, 1.4, 0.4, 0.4), 0.5),
    ];
    let map = filter_chain(build_map(&Terrain::new(grid, prims, 0)?), 0.1);
    let cfg = FeasibilityConfig::default();

    for (label, x, y, reference) in [
        ("open floor", 0.4, 0.5, 0.0),
        ("on the curb", 1.0, 0.5, 0.0),
        ("curb edge", 0.8, 0.5, 0.0),
        ("on the crate", 2.0, 1.4, 0.0),
    ] {
        let ok = foothold_feasible(&map, &Pose2::new(x, y, 0.0), reference, &cfg);
        println!("foothold {label:<12} ({x:.1}, {y:.1}): {ok}");
    }

    let stance = FootState::new(1.6, 1.25, 0.0, Side::Left);
    let swing = FootState::new(1.4, 1.0, 0.0, Side::Right);
    for dx in [0.1, 0.3] {
        let next = FootState::new(1.6 + dx, 1.0, 0.0, Side::Right);
        println!(
            "step to x = {:.1} beside the crate: {}",
            next.x,
            transition_feasible(&map, &stance, &swing, &next, &cfg)
        );
    }

    for heading in [0.0f64, 20.0, 40.0] {
        let hit = obstacle_ray(&map, &Pose2::new(1.2, 1.2, 0.0), heading.to_radians(), 1.5, &cfg);
        println!(
            "ray at {heading:>4.0} deg: {}",
            hit.map_or("clear".to_string(), |d| format!("obstacle at {d:.2} m"))
        );
    }
    Ok(())
}
