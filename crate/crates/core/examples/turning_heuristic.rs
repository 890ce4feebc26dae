//! Distance-only against distance-plus-heading heuristics on the turning set.

use std::path::PathBuf;

use footstep::energy::HeuristicKind;
use footstep::report::{self, Variant};

fn main() -> footstep::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/turning");
    let set = report::collect_scenarios(&[dir])?;
    let with = |h| Variant {
        heuristic: Some(h),
        ..Variant::default()
    };
    let cmp = report::compare(
        &set,
        &with(HeuristicKind::Distance),
        &with(HeuristicKind::DistanceAngle),
    )?;
    print!("{}", cmp.table());
    Ok(())
}
