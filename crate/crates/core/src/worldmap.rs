//! 2.5D elevation grids: synthetic terrain rasterization, the
//! smoothing/normal/slope/roughness/traversability filter chain, point
//! queries and raster export.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope at which the slope half of traversability reaches zero (rad).
pub const SLOPE_LIMIT: f64 = 0.6;
/// Roughness at which the roughness half of traversability reaches zero (m).
pub const ROUGHNESS_LIMIT: f64 = 0.1;

// Cell-index nudge so that points exactly on a boundary land in the upper cell.
const BOUNDARY_EPS: f64 = 1e-9;

/// Combines slope and roughness into a traversability score in `[0, 1]`.
pub fn traversability(slope: f64, roughness: f64) -> f64 {
    let t = 0.5 * (1.0 - slope / SLOPE_LIMIT) + 0.5 * (1.0 - roughness.abs() / ROUGHNESS_LIMIT);
    t.clamp(0.0, 1.0)
}

/// Size and placement of a raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin_x: f64,
    pub origin_y: f64,
}

/// False for zero, negative and NaN.
pub(crate) fn positive(v: f64) -> bool {
    v > 0.0
}

impl GridGeometry {
    pub fn new(size_x: f64, size_y: f64, resolution: f64, origin_x: f64, origin_y: f64) -> Result<Self> {
        if ![resolution, size_x, size_y].into_iter().all(positive) {
            return Err(Error::InvalidConfig(format!(
                "map size ({size_x} x {size_y}) and resolution ({resolution}) must be positive"
            )));
        }
        Ok(Self {
            resolution,
            nx: (size_x / resolution).round() as usize,
            ny: (size_y / resolution).round() as usize,
            origin_x,
            origin_y,
        })
    }

    pub fn size_x(&self) -> f64 {
        self.nx as f64 * self.resolution
    }

    pub fn size_y(&self) -> f64 {
        self.ny as f64 * self.resolution
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed cell coordinates of the cell containing `(x, y)`, lower-inclusive.
    pub fn cell_coords(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin_x) / self.resolution + BOUNDARY_EPS).floor() as i64,
            ((y - self.origin_y) / self.resolution + BOUNDARY_EPS).floor() as i64,
        )
    }

    pub fn index_of(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            None
        } else {
            Some(iy as usize * self.nx + ix as usize)
        }
    }

    pub fn cell_center(&self, ix: i64, iy: i64) -> (f64, f64) {
        (
            self.origin_x + (ix as f64 + 0.5) * self.resolution,
            self.origin_y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains_rect(&self, rect: &Rect) -> bool {
        let tol = 1e-9;
        rect.min_x >= self.origin_x - tol
            && rect.min_y >= self.origin_y - tol
            && rect.max_x <= self.origin_x + self.size_x() + tol
            && rect.max_y <= self.origin_y + self.size_y() + tol
    }

    /// Half-open index ranges `(x0, x1, y0, y1)` of the cells whose centers
    /// fall in `rect`.
    pub fn cell_span(&self, rect: &Rect) -> (usize, usize, usize, usize) {
        let to_range = |min: f64, max: f64, origin: f64, n: usize| {
            let lo = ((min - origin) / self.resolution - 0.5 - 1e-6).ceil().max(0.0) as usize;
            let hi = ((max - origin) / self.resolution - 0.5 - 1e-6).ceil().max(0.0) as usize;
            (lo.min(n), hi.min(n))
        };
        let (x0, x1) = to_range(rect.min_x, rect.max_x, self.origin_x, self.nx);
        let (y0, y1) = to_range(rect.min_y, rect.max_y, self.origin_y, self.ny);
        (x0, x1, y0, y1)
    }
}

/// Axis-aligned rectangle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn centered(cx: f64, cy: f64, size_x: f64, size_y: f64) -> Self {
        Self {
            min_x: cx - size_x / 2.0,
            min_y: cy - size_y / 2.0,
            max_x: cx + size_x / 2.0,
            max_y: cy + size_y / 2.0,
        }
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

/// Direction in which a ramp rises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RampDirection {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PrimitiveShape {
    /// Flat-topped block.
    Block { height: f64 },
    /// Inclined plane starting at `base_height` on its low edge.
    Ramp {
        slope: f64,
        rising: RampDirection,
        base_height: f64,
    },
    /// Uniform height noise in `[-amplitude, amplitude]`, added to the cells beneath.
    Noise { amplitude: f64 },
    /// Cells with no height data.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub id: Option<String>,
    pub rect: Rect,
    pub shape: PrimitiveShape,
}

impl Primitive {
    pub fn block(id: Option<&str>, rect: Rect, height: f64) -> Self {
        Self {
            id: id.map(str::to_owned),
            rect,
            shape: PrimitiveShape::Block { height },
        }
    }

    pub fn label(&self, index: usize) -> String {
        let kind = match self.shape {
            PrimitiveShape::Block { .. } => "box",
            PrimitiveShape::Ramp { .. } => "ramp",
            PrimitiveShape::Noise { .. } => "noise",
            PrimitiveShape::Unknown => "unknown",
        };
        match &self.id {
            Some(id) => format!("{kind} `{id}` (#{index})"),
            None => format!("{kind} #{index}"),
        }
    }
}

/// Terrain description: extents, primitives in rasterization order and the
/// seed for noise patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub grid: GridGeometry,
    pub seed: u64,
    primitives: Vec<Primitive>,
    noise: Vec<Vec<f64>>,
    spans: Vec<(usize, usize, usize, usize)>,
    pushed: u64,
}

impl Terrain {
    /// Validates extents and pre-samples every noise patch from `seed`.
    pub fn new(grid: GridGeometry, primitives: Vec<Primitive>, seed: u64) -> Result<Self> {
        let mut terrain = Self {
            grid,
            primitives: Vec::with_capacity(primitives.len()),
            seed,
            noise: Vec::new(),
            spans: Vec::new(),
            pushed: 0,
        };
        for p in primitives {
            terrain.push(p)?;
        }
        Ok(terrain)
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Appends a primitive, sampling its noise if it is a noise patch.
    pub fn push(&mut self, primitive: Primitive) -> Result<()> {
        let index = self.primitives.len();
        self.pushed += 1;
        if !self.grid.contains_rect(&primitive.rect) {
            return Err(Error::PrimitiveOutOfBounds {
                primitive: primitive.label(index),
            });
        }
        let span = self.grid.cell_span(&primitive.rect);
        let samples = match primitive.shape {
            PrimitiveShape::Noise { amplitude } => {
                let (x0, x1, y0, y1) = span;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(self.pushed);
                (0..(x1 - x0) * (y1 - y0))
                    .map(|_| rng.gen_range(-amplitude..=amplitude))
                    .collect()
            }
            _ => Vec::new(),
        };
        self.primitives.push(primitive);
        self.noise.push(samples);
        self.spans.push(span);
        Ok(())
    }

    /// Removes every primitive with the given id and returns their union bounds.
    pub fn remove(&mut self, id: &str) -> Option<Rect> {
        let mut bounds: Option<Rect> = None;
        let mut i = 0;
        while i < self.primitives.len() {
            if self.primitives[i].id.as_deref() == Some(id) {
                let r = self.primitives.remove(i).rect;
                self.noise.remove(i);
                self.spans.remove(i);
                bounds = Some(match bounds {
                    None => r,
                    Some(b) => b.union(&r),
                });
            } else {
                i += 1;
            }
        }
        bounds
    }

    /// Height at a cell, or `None` when an unknown patch covers it.
    fn cell_height(&self, ix: usize, iy: usize) -> Option<f64> {
        let (x, y) = self.grid.cell_center(ix as i64, iy as i64);
        let mut height = 0.0f64;
        let mut known = true;
        for ((p, samples), &(x0, x1, y0, y1)) in self.primitives.iter().zip(&self.noise).zip(&self.spans) {
            if ix < x0 || ix >= x1 || iy < y0 || iy >= y1 {
                continue;
            }
            match p.shape {
                PrimitiveShape::Block { height: h } => height = height.max(h),
                PrimitiveShape::Ramp {
                    slope,
                    rising,
                    base_height,
                } => {
                    let run = match rising {
                        RampDirection::PosX => x - p.rect.min_x,
                        RampDirection::NegX => p.rect.max_x - x,
                        RampDirection::PosY => y - p.rect.min_y,
                        RampDirection::NegY => p.rect.max_y - y,
                    };
                    height = height.max(base_height + slope.tan() * run);
                }
                PrimitiveShape::Noise { .. } => {
                    let k = (iy - y0) * (x1 - x0) + (ix - x0);
                    height += samples[k];
                }
                PrimitiveShape::Unknown => known = false,
            }
        }
        known.then_some(height)
    }
}

/// Layer values of one cell. Out-of-map queries return [`CellValues::UNKNOWN`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValues {
    pub valid: bool,
    pub height: f64,
    pub smoothed_height: f64,
    pub normal_z: f64,
    pub slope: f64,
    pub roughness: f64,
    pub traversability: f64,
}

impl CellValues {
    pub const UNKNOWN: CellValues = CellValues {
        valid: false,
        height: f64::NAN,
        smoothed_height: f64::NAN,
        normal_z: f64::NAN,
        slope: f64::NAN,
        roughness: f64::NAN,
        traversability: 0.0,
    };
}

/// Named raster layers, for export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Height,
    SmoothedHeight,
    NormalZ,
    Slope,
    Roughness,
    Traversability,
}

impl Layer {
    pub const ALL: [Layer; 6] = [
        Layer::Height,
        Layer::SmoothedHeight,
        Layer::NormalZ,
        Layer::Slope,
        Layer::Roughness,
        Layer::Traversability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Height => "height",
            Layer::SmoothedHeight => "smoothed_height",
            Layer::NormalZ => "normal_z",
            Layer::Slope => "slope",
            Layer::Roughness => "roughness",
            Layer::Traversability => "traversability",
        }
    }
}

/// Elevation raster with derived filter layers.
///
/// Derived layers hold NaN until [`filter_chain`] has run. Invalid cells hold
/// NaN in every layer and zero traversability.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    pub grid: GridGeometry,
    valid: Vec<bool>,
    height: Vec<f64>,
    smoothed_height: Vec<f64>,
    normal_z: Vec<f64>,
    slope: Vec<f64>,
    roughness: Vec<f64>,
    traversability: Vec<f64>,
    filter_radius: Option<f64>,
}

/// Rasterizes the terrain. Heights are zero where no primitive reaches.
pub fn build_map(terrain: &Terrain) -> ElevationMap {
    let grid = terrain.grid;
    let n = grid.len();
    let mut map = ElevationMap {
        grid,
        valid: vec![true; n],
        height: vec![0.0; n],
        smoothed_height: vec![f64::NAN; n],
        normal_z: vec![f64::NAN; n],
        slope: vec![f64::NAN; n],
        roughness: vec![f64::NAN; n],
        traversability: vec![f64::NAN; n],
        filter_radius: None,
    };
    map.rasterize_cells(terrain, 0, grid.nx, 0, grid.ny);
    map
}

/// Runs smoothing, normal estimation, slope, roughness and traversability
/// over the whole map.
pub fn filter_chain(mut map: ElevationMap, avg_radius: f64) -> ElevationMap {
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    map.filter_radius = Some(avg_radius);
    map.filter_cells(avg_radius, 0, nx, 0, ny);
    map
}

impl ElevationMap {
    /// Flat, all-valid, unfiltered map.
    pub fn flat(grid: GridGeometry) -> Self {
        build_map(&Terrain::new(grid, Vec::new(), 0).expect("empty terrain is valid"))
    }

    pub fn is_filtered(&self) -> bool {
        self.filter_radius.is_some()
    }

    pub fn filter_radius(&self) -> Option<f64> {
        self.filter_radius
    }

    pub fn layer(&self, layer: Layer) -> &[f64] {
        match layer {
            Layer::Height => &self.height,
            Layer::SmoothedHeight => &self.smoothed_height,
            Layer::NormalZ => &self.normal_z,
            Layer::Slope => &self.slope,
            Layer::Roughness => &self.roughness,
            Layer::Traversability => &self.traversability,
        }
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    /// Overwrites the raw height of one cell. Derived layers are left stale.
    pub fn set_height(&mut self, ix: usize, iy: usize, height: Option<f64>) {
        let i = iy * self.grid.nx + ix;
        match height {
            Some(h) => {
                self.valid[i] = true;
                self.height[i] = h;
            }
            None => {
                self.valid[i] = false;
                self.height[i] = f64::NAN;
            }
        }
    }

    pub fn cell(&self, index: usize) -> CellValues {
        if !self.valid[index] {
            return CellValues::UNKNOWN;
        }
        CellValues {
            valid: true,
            height: self.height[index],
            smoothed_height: self.smoothed_height[index],
            normal_z: self.normal_z[index],
            slope: self.slope[index],
            roughness: self.roughness[index],
            traversability: self.traversability[index],
        }
    }

    pub fn cell_at(&self, ix: i64, iy: i64) -> CellValues {
        match self.grid.index_of(ix, iy) {
            Some(i) => self.cell(i),
            None => CellValues::UNKNOWN,
        }
    }

    /// Layer values of the cell containing `(x, y)`.
    pub fn query(&self, x: f64, y: f64) -> CellValues {
        let (ix, iy) = self.grid.cell_coords(x, y);
        self.cell_at(ix, iy)
    }

    /// Raw height at `(x, y)`, `None` outside the map or on invalid cells.
    pub fn height_at(&self, x: f64, y: f64) -> Option<f64> {
        let c = self.query(x, y);
        c.valid.then_some(c.height)
    }

    /// Re-rasterizes `rect` from `terrain` and re-filters every cell whose
    /// derived values can depend on it.
    pub fn rebuild_region(&mut self, terrain: &Terrain, rect: &Rect) {
        let (x0, x1, y0, y1) = self.grid.cell_span(rect);
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        self.rasterize_cells(terrain, x0, x1, y0, y1);
        if let Some(r) = self.filter_radius {
            self.filter_dirty(r, x0, x1, y0, y1);
        }
    }

    fn rasterize_cells(&mut self, terrain: &Terrain, x0: usize, x1: usize, y0: usize, y1: usize) {
        for iy in y0..y1 {
            for ix in x0..x1 {
                let h = terrain.cell_height(ix, iy);
                self.set_height(ix, iy, h);
            }
        }
    }

    /// Re-filters after raw heights changed in the given cell block.
    fn filter_dirty(&mut self, radius: f64, x0: usize, x1: usize, y0: usize, y1: usize) {
        let reach = (radius / self.grid.resolution).floor() as usize;
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        // Smoothed heights change within one radius, slopes within two.
        let grow = |lo: usize, hi: usize, k: usize, n: usize| (lo.saturating_sub(k), (hi + k).min(n));
        let (sx0, sx1) = grow(x0, x1, reach, nx);
        let (sy0, sy1) = grow(y0, y1, reach, ny);
        let (tx0, tx1) = grow(x0, x1, 2 * reach, nx);
        let (ty0, ty1) = grow(y0, y1, 2 * reach, ny);
        let disk = disk_offsets(radius, self.grid.resolution);
        self.smooth(&disk, sx0, sx1, sy0, sy1);
        self.derive(&disk, tx0, tx1, ty0, ty1);
    }

    fn filter_cells(&mut self, radius: f64, x0: usize, x1: usize, y0: usize, y1: usize) {
        let disk = disk_offsets(radius, self.grid.resolution);
        self.smooth(&disk, x0, x1, y0, y1);
        self.derive(&disk, x0, x1, y0, y1);
    }

    fn smooth(&mut self, disk: &[(i64, i64)], x0: usize, x1: usize, y0: usize, y1: usize) {
        for iy in y0..y1 {
            for ix in x0..x1 {
                let i = iy * self.grid.nx + ix;
                if !self.valid[i] {
                    self.smoothed_height[i] = f64::NAN;
                    continue;
                }
                let (mut sum, mut count) = (0.0, 0usize);
                for &(dx, dy) in disk {
                    if let Some(j) = self.grid.index_of(ix as i64 + dx, iy as i64 + dy) {
                        if self.valid[j] {
                            sum += self.height[j];
                            count += 1;
                        }
                    }
                }
                self.smoothed_height[i] = sum / count as f64;
            }
        }
    }

    /// Normal, slope, roughness and traversability from the smoothed layer.
    fn derive(&mut self, disk: &[(i64, i64)], x0: usize, x1: usize, y0: usize, y1: usize) {
        let res = self.grid.resolution;
        for iy in y0..y1 {
            for ix in x0..x1 {
                let i = iy * self.grid.nx + ix;
                if !self.valid[i] {
                    self.normal_z[i] = f64::NAN;
                    self.slope[i] = f64::NAN;
                    self.roughness[i] = f64::NAN;
                    self.traversability[i] = 0.0;
                    continue;
                }
                let mut pts = Vec::with_capacity(disk.len());
                for &(dx, dy) in disk {
                    if let Some(j) = self.grid.index_of(ix as i64 + dx, iy as i64 + dy) {
                        if self.valid[j] {
                            pts.push((dx as f64 * res, dy as f64 * res, self.smoothed_height[j]));
                        }
                    }
                }
                let nz = plane_normal_z(&pts);
                let slope = nz.clamp(-1.0, 1.0).acos();
                let roughness = self.height[i] - self.smoothed_height[i];
                self.normal_z[i] = nz;
                self.slope[i] = slope;
                self.roughness[i] = roughness;
                self.traversability[i] = traversability(slope, roughness);
            }
        }
    }

    /// Writes one layer as CSV: a `#` header line with geometry, then one row
    /// per grid row (`iy` ascending), cells in `ix` order. Invalid cells are empty.
    pub fn write_layer_csv(&self, layer: Layer, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!(
            "# layer={},resolution={},origin_x={},origin_y={},nx={},ny={}\n",
            layer.name(),
            self.grid.resolution,
            self.grid.origin_x,
            self.grid.origin_y,
            self.grid.nx,
            self.grid.ny
        ));
        let data = self.layer(layer);
        for iy in 0..self.grid.ny {
            let row: Vec<String> = (0..self.grid.nx)
                .map(|ix| {
                    let v = data[iy * self.grid.nx + ix];
                    if v.is_nan() {
                        String::new()
                    } else {
                        format!("{v}")
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Writes one layer as an 8-bit binary PGM scaled to the layer's range,
    /// top row = highest `y`. Invalid cells are black.
    pub fn write_layer_pgm(&self, layer: Layer, path: &Path) -> Result<()> {
        let data = self.layer(layer);
        let (lo, hi) = data
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut bytes = Vec::with_capacity(nx * ny + 32);
        write!(bytes, "P5\n{nx} {ny}\n255\n").expect("write to vec");
        for iy in (0..ny).rev() {
            for ix in 0..nx {
                let v = data[iy * nx + ix];
                bytes.push(if v.is_finite() {
                    (((v - lo) / span) * 254.0).round() as u8 + 1
                } else {
                    0
                });
            }
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Cell offsets whose centers lie within `radius` of the center cell.
pub fn disk_offsets(radius: f64, resolution: f64) -> Vec<(i64, i64)> {
    let reach = (radius / resolution + 1e-9).floor() as i64;
    let r2 = (radius / resolution).powi(2) + 1e-9;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if (dx * dx + dy * dy) as f64 <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Least-squares plane `z = a x + b y + c` through the points, returned as the
/// z component of its unit normal. Degenerate point sets yield a level plane.
pub fn plane_normal_z(points: &[(f64, f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 3 {
        return 1.0;
    }
    let (mx, my, mz) = points.iter().fold((0.0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.0 / n, acc.1 + p.1 / n, acc.2 + p.2 / n)
    });
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in points {
        let (dx, dy, dz) = (x - mx, y - my, z - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() < 1e-18 {
        return 1.0;
    }
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    1.0 / (1.0 + a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridGeometry {
        GridGeometry::new(3.0, 3.0, 0.05, 0.0, 0.0).unwrap()
    }

    #[test]
    fn empty_scenario_is_flat_60_by_60() {
        let map = build_map(&Terrain::new(grid3(), vec![], 7).unwrap());
        assert_eq!((map.grid.nx, map.grid.ny), (60, 60));
        assert!(map.layer(Layer::Height).iter().all(|&h| h == 0.0));
        assert!(!map.is_filtered());
        assert!(map.layer(Layer::Slope).iter().all(|v| v.is_nan()));
    }

    #[test]
    fn single_box_rasterizes_under_its_footprint() {
        let terrain = Terrain::new(
            grid3(),
            vec![Primitive::block(None, Rect::centered(1.0, 1.0, 0.5, 0.5), 0.3)],
            0,
        )
        .unwrap();
        let map = build_map(&terrain);
        assert_eq!(map.height_at(1.0, 1.0), Some(0.3));
        assert_eq!(map.height_at(0.78, 1.22), Some(0.3));
        assert_eq!(map.height_at(0.72, 1.0), Some(0.0));
        assert_eq!(map.height_at(1.27, 1.0), Some(0.0));
        let covered = map.layer(Layer::Height).iter().filter(|&&h| h == 0.3).count();
        assert_eq!(covered, 100);
    }

    #[test]
    fn overlapping_boxes_keep_the_max() {
        let terrain = Terrain::new(
            grid3(),
            vec![
                Primitive::block(None, Rect::centered(1.0, 1.0, 0.6, 0.6), 0.3),
                Primitive::block(None, Rect::centered(1.2, 1.2, 0.6, 0.6), 0.1),
            ],
            0,
        )
        .unwrap();
        let map = build_map(&terrain);
        assert_eq!(map.height_at(1.1, 1.1), Some(0.3));
        assert_eq!(map.height_at(1.45, 1.45), Some(0.1));
    }

    #[test]
    fn out_of_bounds_primitive_is_named() {
        let err = Terrain::new(
            grid3(),
            vec![
                Primitive::block(Some("ok"), Rect::centered(1.0, 1.0, 0.2, 0.2), 0.1),
                Primitive::block(Some("far"), Rect::centered(2.95, 1.0, 0.2, 0.2), 0.1),
            ],
            0,
        )
        .unwrap_err();
        match err {
            Error::PrimitiveOutOfBounds { primitive } => assert!(primitive.contains("far")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_map_filters_to_full_traversability() {
        let map = filter_chain(ElevationMap::flat(grid3()), 0.1);
        for i in 0..map.grid.len() {
            let c = map.cell(i);
            assert_eq!(c.slope, 0.0);
            assert_eq!(c.roughness, 0.0);
            assert_eq!(c.traversability, 1.0);
        }
    }

    #[test]
    fn traversability_formula() {
        assert_eq!(traversability(0.0, 0.0), 1.0);
        assert_eq!(traversability(0.6, 0.0), 0.5);
        assert_eq!(traversability(0.6, 0.1), 0.0);
        assert_eq!(traversability(0.0, -0.1), 0.5);
        assert_eq!(traversability(2.0, 0.0), 0.0);
    }

    #[test]
    fn query_contract() {
        let map = filter_chain(ElevationMap::flat(grid3()), 0.1);
        let c = map.query(1.5, 1.5);
        assert_eq!((c.height, c.traversability), (0.0, 1.0));
        assert!(!map.query(-10.0, -10.0).valid);
        assert!(!map.query(3.0, 1.0).valid);
        // Exactly on a boundary: the upper cell owns it.
        assert_eq!(map.grid.cell_coords(0.15, 0.1), (3, 2));
        assert_eq!(map.grid.cell_coords(0.0, 0.0), (0, 0));
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let mk = |seed| {
            let t = Terrain::new(
                grid3(),
                vec![Primitive {
                    id: None,
                    rect: Rect::centered(1.5, 1.5, 1.0, 1.0),
                    shape: PrimitiveShape::Noise { amplitude: 0.02 },
                }],
                seed,
            )
            .unwrap();
            build_map(&t)
        };
        assert_eq!(mk(3).layer(Layer::Height), mk(3).layer(Layer::Height));
        assert_ne!(mk(3).layer(Layer::Height), mk(4).layer(Layer::Height));
        assert!(mk(3).layer(Layer::Height).iter().all(|h| h.abs() <= 0.02));
    }

    #[test]
    fn unknown_cells_propagate() {
        let t = Terrain::new(
            grid3(),
            vec![Primitive {
                id: None,
                rect: Rect::centered(1.5, 1.5, 0.3, 0.3),
                shape: PrimitiveShape::Unknown,
            }],
            0,
        )
        .unwrap();
        let map = filter_chain(build_map(&t), 0.1);
        let c = map.query(1.5, 1.5);
        assert!(!c.valid);
        assert_eq!(c.traversability, 0.0);
        assert!(map.query(1.0, 1.0).valid);
    }

    #[test]
    fn region_rebuild_matches_full_rebuild() {
        let mut terrain = Terrain::new(
            grid3(),
            vec![Primitive::block(Some("a"), Rect::centered(1.0, 1.0, 0.4, 0.4), 0.2)],
            0,
        )
        .unwrap();
        let mut map = filter_chain(build_map(&terrain), 0.1);
        let added = Primitive::block(Some("b"), Rect::centered(1.3, 1.6, 0.3, 0.5), 0.5);
        let rect = added.rect;
        terrain.push(added).unwrap();
        map.rebuild_region(&terrain, &rect);
        let full = filter_chain(build_map(&terrain), 0.1);
        for layer in Layer::ALL {
            for (a, b) in map.layer(layer).iter().zip(full.layer(layer)) {
                assert!(a == b || (a.is_nan() && b.is_nan()), "{layer:?}");
            }
        }
        let removed = terrain.remove("a").unwrap();
        map.rebuild_region(&terrain, &removed);
        let full = filter_chain(build_map(&terrain), 0.1);
        assert_eq!(map.layer(Layer::Traversability), full.layer(Layer::Traversability));
    }
}
