//! Min-COT against farthest-step selection on the straight, clutter and small-obstacle scenarios.

use std::path::PathBuf;

use footstep::actions::Selection;
use footstep::report::{self, Variant};

fn main() -> footstep::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let paths: Vec<PathBuf> = ["straight-5m.toml", "clutter.toml", "small-large.toml"]
        .iter()
        .map(|f| root.join(f))
        .collect();
    let set = report::collect_scenarios(&paths)?;
    let with = |s| Variant {
        selection: Some(s),
        ..Variant::default()
    };
    let cmp = report::compare(&set, &with(Selection::MinCot), &with(Selection::Farthest))?;
    print!("{}", cmp.table());
    Ok(())
}
