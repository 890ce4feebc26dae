//! Builds a small terrain, runs the filter chain and writes every layer as PGM.
//!
//! `cargo run --example terrain_filter -- [out_dir]`

use std::path::PathBuf;

use footstep::worldmap::{
    build_map, filter_chain, GridGeometry, Layer, Primitive, PrimitiveShape, RampDirection, Rect, Terrain,
};

fn main() -> footstep::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("terrain_filter"));
    let grid = GridGeometry::new(3.0, 2.0, 0.05, 0.0, 0.0)?;
    let prims = vec![
        Primitive::block(Some("box"), Rect::centered(0.6, 1.0, 0.4, 0.4), 0.5),
        Primitive {
            id: Some("ramp".into()),
            rect: Rect::centered(1.6, 1.0, 0.8, 0.8),
            shape: PrimitiveShape::Ramp {
                slope: 0.3,
                rising: RampDirection::PosX,
                base_height: 0.0,
            },
        },
        Primitive {
            id: Some("gravel".into()),
            rect: Rect::centered(2.6, 1.0, 0.6, 1.6),
            shape: PrimitiveShape::Noise { amplitude: 0.03 },
        },
    ];
    let map = filter_chain(build_map(&Terrain::new(grid, prims, 7)?), 0.1);

    for (name, x, y) in [
        ("flat", 1.0, 0.2),
        ("box", 0.6, 1.0),
        ("box edge", 0.8, 1.0),
        ("ramp", 1.6, 1.0),
        ("gravel", 2.6, 1.0),
    ] {
        let c = map.query(x, y);
        println!(
            "{name:<9} h {:.3} slope {:.3} rough {:.4} trav {:.3}",
            c.height, c.slope, c.roughness, c.traversability
        );
    }

    std::fs::create_dir_all(&out).map_err(|e| footstep::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    for layer in Layer::ALL {
        let path = out.join(format!("{}.pgm", layer.name()));
        map.write_layer_pgm(layer, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
