//! Segmented maps, rasterized belief grids, and conversions between area-level
//! weight vectors and cell-level beliefs.
//!
//! A cell belongs to an area iff its center lies inside the area polygon
//! (even-odd rule). Cell `(row, col)` has index `row * width + col`; row 0 is the
//! southernmost row (smallest y).

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{heading, segments_cross_properly, Point, Polygon};
use crate::language::normalize_words;

/// Default per-area attribute token cap (`N`).
pub const DEFAULT_TOKEN_CAP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    Malformed(String),
    #[error("map has no areas")]
    NoAreas,
    #[error("duplicate area id {0:?}")]
    DuplicateId(String),
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("map boundary is not a simple polygon with nonzero area")]
    BadBoundary,
    #[error("area {0:?} is not a simple polygon with nonzero area")]
    NotSimple(String),
    #[error("area {0:?} extends outside the map boundary")]
    OutsideBoundary(String),
    #[error("areas {0:?} and {1:?} overlap")]
    Overlap(String, String),
    #[error("area {id:?} has {count} attribute tokens, limit is {limit}")]
    TooManyTokens { id: String, count: usize, limit: usize },
    #[error("unknown area {0:?}")]
    UnknownArea(String),
    #[error("area {0:?} covers no grid cells at this resolution")]
    EmptyArea(String),
    #[error("variance must be positive, got {0}")]
    BadVariance(f64),
    #[error("area weight vector has {got} entries, map has {expected} areas")]
    WeightLength { got: usize, expected: usize },
    #[error("area weights carry no mass on any rasterized area")]
    ZeroWeights,
    #[error("grid is {got:?} cells, map grid is {expected:?}")]
    GridShape { got: (usize, usize), expected: (usize, usize) },
    #[error("invalid belief mass: {0}")]
    InvalidMass(String),
    #[error("half-plane mask removed all belief mass")]
    EmptyMask,
    #[error("invalid PGM data: {0}")]
    Pgm(String),
}

/// Orders area ids numerically when both parse as integers, lexically otherwise.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDocument {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub polygon: Polygon,
}

/// On-disk map document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub boundary: Polygon,
    pub resolution: f64,
    pub areas: Vec<AreaDocument>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: String,
    pub category: String,
    pub subcategory: Option<String>,
    pub name: Option<String>,
    pub polygon: Polygon,
    centroid: Point,
    size: f64,
}

impl Area {
    pub fn centroid(&self) -> Point {
        self.centroid
    }

    /// Polygon area in map units squared.
    pub fn size(&self) -> f64 {
        self.size
    }

    /// Attribute words in a fixed order: id, category, subcategory, name.
    pub fn attribute_tokens(&self) -> Vec<String> {
        let mut out = normalize_words(&self.id);
        out.extend(normalize_words(&self.category));
        if let Some(sub) = &self.subcategory {
            out.extend(normalize_words(sub));
        }
        if let Some(name) = &self.name {
            out.extend(normalize_words(name));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    pub resolution: f64,
}

impl GridGeometry {
    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let row = index / self.width;
        let col = index % self.width;
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }
}

#[derive(Debug, Clone)]
pub struct AreaMap {
    boundary: Polygon,
    areas: Vec<Area>,
    grid: GridGeometry,
    index: HashMap<String, usize>,
    cell_owner: Vec<Option<u32>>,
    area_cells: Vec<Vec<usize>>,
    interior_cells: Vec<usize>,
    frame_scale: f64,
}

pub fn load_map(bytes: &[u8]) -> Result<AreaMap, MapError> {
    let doc: MapDocument =
        serde_json::from_slice(bytes).map_err(|e| MapError::Malformed(e.to_string()))?;
    AreaMap::from_document(doc)
}

impl AreaMap {
    pub fn from_document(doc: MapDocument) -> Result<Self, MapError> {
        Self::with_token_cap(doc, DEFAULT_TOKEN_CAP)
    }

    pub fn with_token_cap(doc: MapDocument, token_cap: usize) -> Result<Self, MapError> {
        if !(doc.resolution > 0.0) || !doc.resolution.is_finite() {
            return Err(MapError::BadResolution(doc.resolution));
        }
        if doc.areas.is_empty() {
            return Err(MapError::NoAreas);
        }
        let mut boundary = doc.boundary;
        if !boundary.is_simple() || boundary.area() == 0.0 {
            return Err(MapError::BadBoundary);
        }
        boundary.make_counter_clockwise();

        let mut index = HashMap::new();
        let mut areas = Vec::with_capacity(doc.areas.len());
        for (i, a) in doc.areas.into_iter().enumerate() {
            if index.insert(a.id.clone(), i).is_some() {
                return Err(MapError::DuplicateId(a.id));
            }
            let mut polygon = a.polygon;
            if !polygon.is_simple() || polygon.area() == 0.0 {
                return Err(MapError::NotSimple(a.id));
            }
            polygon.make_counter_clockwise();
            let inside = polygon
                .vertices()
                .iter()
                .all(|&v| boundary.contains(v) || boundary.on_boundary(v, 1e-9));
            let crosses = polygon.edges().any(|(p, q)| {
                boundary
                    .edges()
                    .any(|(r, s)| segments_cross_properly(p, q, r, s))
            });
            if !inside || crosses {
                return Err(MapError::OutsideBoundary(a.id));
            }
            let area = Area {
                centroid: polygon.centroid(),
                size: polygon.area(),
                id: a.id,
                category: a.category,
                subcategory: a.subcategory,
                name: a.name,
                polygon,
            };
            let count = area.attribute_tokens().len();
            if count > token_cap {
                return Err(MapError::TooManyTokens {
                    id: area.id,
                    count,
                    limit: token_cap,
                });
            }
            areas.push(area);
        }
        check_pairwise_overlap(&areas)?;

        let (lo, hi) = boundary.bounding_box();
        let res = doc.resolution;
        let cells_along = |extent: f64| ((extent / res) - 1e-9).ceil().max(1.0) as usize;
        let grid = GridGeometry {
            width: cells_along(hi.x - lo.x),
            height: cells_along(hi.y - lo.y),
            origin: lo,
            resolution: res,
        };

        let mut cell_owner = vec![None; grid.cell_count()];
        let mut area_cells = vec![Vec::new(); areas.len()];
        for (k, area) in areas.iter().enumerate() {
            let (alo, ahi) = area.polygon.bounding_box();
            let c0 = (((alo.x - lo.x) / res).floor().max(0.0)) as usize;
            let r0 = (((alo.y - lo.y) / res).floor().max(0.0)) as usize;
            let c1 = ((((ahi.x - lo.x) / res).ceil()) as usize).min(grid.width);
            let r1 = ((((ahi.y - lo.y) / res).ceil()) as usize).min(grid.height);
            for row in r0..r1 {
                for col in c0..c1 {
                    let idx = row * grid.width + col;
                    if area.polygon.contains(grid.cell_center(idx)) {
                        if let Some(prev) = cell_owner[idx] {
                            return Err(MapError::Overlap(
                                areas[prev as usize].id.clone(),
                                area.id.clone(),
                            ));
                        }
                        cell_owner[idx] = Some(k as u32);
                        area_cells[k].push(idx);
                    }
                }
            }
        }
        let interior_cells = (0..grid.cell_count())
            .filter(|&i| boundary.contains(grid.cell_center(i)))
            .collect();
        let frame_scale = (hi.x - lo.x).max(hi.y - lo.y);

        Ok(Self {
            boundary,
            areas,
            grid,
            index,
            cell_owner,
            area_cells,
            interior_cells,
            frame_scale,
        })
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            boundary: self.boundary.clone(),
            resolution: self.grid.resolution,
            areas: self
                .areas
                .iter()
                .map(|a| AreaDocument {
                    id: a.id.clone(),
                    category: a.category.clone(),
                    subcategory: a.subcategory.clone(),
                    name: a.name.clone(),
                    polygon: a.polygon.clone(),
                })
                .collect(),
        }
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn area_count(&self) -> usize {
        self.areas.len()
    }

    pub fn grid(&self) -> GridGeometry {
        self.grid
    }

    pub fn area_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn area(&self, id: &str) -> Result<&Area, MapError> {
        self.area_index(id)
            .map(|i| &self.areas[i])
            .ok_or_else(|| MapError::UnknownArea(id.to_string()))
    }

    /// Index of the area owning a cell, if any.
    pub fn cell_owner(&self, cell: usize) -> Option<usize> {
        self.cell_owner[cell].map(|k| k as usize)
    }

    pub fn area_cells(&self, area: usize) -> &[usize] {
        &self.area_cells[area]
    }

    /// Cells whose centers lie inside the map boundary.
    pub fn interior_cells(&self) -> &[usize] {
        &self.interior_cells
    }

    /// Maps a point into the unit frame: translate the boundary's bounding-box corner
    /// to the origin and divide by its larger extent. Angles are preserved.
    pub fn normalize(&self, p: Point) -> Point {
        let o = self.grid.origin;
        Point::new((p.x - o.x) / self.frame_scale, (p.y - o.y) / self.frame_scale)
    }

    pub fn normalized_centroid(&self, area: usize) -> Point {
        self.normalize(self.areas[area].centroid)
    }

    fn check_grid(&self, grid: &BeliefGrid) -> Result<(), MapError> {
        if grid.width != self.grid.width || grid.height != self.grid.height {
            return Err(MapError::GridShape {
                got: (grid.width, grid.height),
                expected: (self.grid.width, self.grid.height),
            });
        }
        Ok(())
    }

    pub fn uniform_over_area(&self, id: &str) -> Result<BeliefGrid, MapError> {
        let k = self
            .area_index(id)
            .ok_or_else(|| MapError::UnknownArea(id.to_string()))?;
        self.uniform_over_area_index(k)
    }

    pub fn uniform_over_area_index(&self, k: usize) -> Result<BeliefGrid, MapError> {
        let cells = &self.area_cells[k];
        if cells.is_empty() {
            return Err(MapError::EmptyArea(self.areas[k].id.clone()));
        }
        let mut mass = vec![0.0; self.grid.cell_count()];
        let share = 1.0 / cells.len() as f64;
        for &c in cells {
            mass[c] = share;
        }
        Ok(BeliefGrid::from_parts(self.grid.width, self.grid.height, mass))
    }

    /// Uniform belief over every cell inside the map boundary.
    pub fn dummy_prior(&self) -> BeliefGrid {
        let mut mass = vec![0.0; self.grid.cell_count()];
        let share = 1.0 / self.interior_cells.len() as f64;
        for &c in &self.interior_cells {
            mass[c] = share;
        }
        BeliefGrid::from_parts(self.grid.width, self.grid.height, mass)
    }

    /// Sums cell mass per area and normalizes the result.
    ///
    /// `cells` may carry any nonnegative scale. When no area holds mass the result
    /// is uniform over areas and `degenerate` is set.
    pub fn gather_area_weights(&self, cells: &[f64]) -> AreaWeights {
        let mut raw: Vec<f64> = self
            .area_cells
            .iter()
            .map(|ids| ids.iter().map(|&c| cells[c]).sum())
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 && total.is_finite() {
            let captured = total;
            raw.iter_mut().for_each(|w| *w /= total);
            AreaWeights {
                weights: raw,
                captured,
                degenerate: false,
            }
        } else {
            let n = self.areas.len() as f64;
            AreaWeights {
                weights: vec![1.0 / n; self.areas.len()],
                captured: 0.0,
                degenerate: true,
            }
        }
    }

    /// Spreads each area's weight uniformly over its cells and normalizes.
    pub fn scatter_area_weights(&self, weights: &[f64]) -> Result<BeliefGrid, MapError> {
        if weights.len() != self.areas.len() {
            return Err(MapError::WeightLength {
                got: weights.len(),
                expected: self.areas.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(MapError::InvalidMass(format!("area weight {w}")));
        }
        let mut mass = vec![0.0; self.grid.cell_count()];
        for (k, &w) in weights.iter().enumerate() {
            let cells = &self.area_cells[k];
            if w == 0.0 || cells.is_empty() {
                continue;
            }
            let share = w / cells.len() as f64;
            for &c in cells {
                mass[c] = share;
            }
        }
        BeliefGrid::from_mass(self.grid.width, self.grid.height, mass)
            .map_err(|_| MapError::ZeroWeights)
    }

    /// Isotropic Gaussian evaluated at cell centers inside the boundary.
    pub fn gaussian_grid(&self, center: Point, variance: f64) -> Result<BeliefGrid, MapError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(MapError::BadVariance(variance));
        }
        let mut log_density = vec![f64::NEG_INFINITY; self.grid.cell_count()];
        let mut peak = f64::NEG_INFINITY;
        for &c in &self.interior_cells {
            let d = self.grid.cell_center(c).sub(center);
            let l = -d.dot(d) / (2.0 * variance);
            log_density[c] = l;
            peak = peak.max(l);
        }
        let mass = log_density
            .into_iter()
            .map(|l| if l.is_finite() { (l - peak).exp() } else { 0.0 })
            .collect();
        BeliefGrid::from_mass(self.grid.width, self.grid.height, mass)
    }

    /// Keeps only cells strictly on the `angle` side of the line through `origin`
    /// perpendicular to that heading, then renormalizes.
    pub fn mask_half_plane(
        &self,
        grid: &BeliefGrid,
        origin: Point,
        angle: f64,
    ) -> Result<BeliefGrid, MapError> {
        self.check_grid(grid)?;
        let dir = heading(angle);
        let mass = grid
            .cells
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                if self.grid.cell_center(i).sub(origin).dot(dir) > 0.0 {
                    m
                } else {
                    0.0
                }
            })
            .collect();
        BeliefGrid::from_mass(grid.width, grid.height, mass).map_err(|_| MapError::EmptyMask)
    }
}

fn check_pairwise_overlap(areas: &[Area]) -> Result<(), MapError> {
    let boxes: Vec<_> = areas.iter().map(|a| a.polygon.bounding_box()).collect();
    for i in 0..areas.len() {
        for j in (i + 1)..areas.len() {
            let (alo, ahi) = boxes[i];
            let (blo, bhi) = boxes[j];
            if alo.x >= bhi.x || blo.x >= ahi.x || alo.y >= bhi.y || blo.y >= ahi.y {
                continue;
            }
            let (a, b) = (&areas[i].polygon, &areas[j].polygon);
            let crossing = a
                .edges()
                .any(|(p, q)| b.edges().any(|(r, s)| segments_cross_properly(p, q, r, s)));
            let strictly_inside = |outer: &Polygon, inner: &Polygon| {
                inner
                    .vertices()
                    .iter()
                    .any(|&v| outer.contains(v) && !outer.on_boundary(v, 1e-9))
                    || outer.contains(inner.centroid())
            };
            if crossing || strictly_inside(a, b) || strictly_inside(b, a) {
                return Err(MapError::Overlap(areas[i].id.clone(), areas[j].id.clone()));
            }
        }
    }
    Ok(())
}

/// Normalized per-area weights gathered from a belief.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaWeights {
    pub weights: Vec<f64>,
    /// Raw mass that fell inside some area before normalization.
    pub captured: f64,
    pub degenerate: bool,
}

impl AreaWeights {
    /// Index of the largest weight; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Normalized nonnegative belief over the map grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefGrid {
    width: usize,
    height: usize,
    cells: Vec<f64>,
}

impl BeliefGrid {
    fn from_parts(width: usize, height: usize, cells: Vec<f64>) -> Self {
        Self {
            width,
            height,
            cells,
        }
    }

    /// Normalizes arbitrary nonnegative mass into a belief.
    pub fn from_mass(width: usize, height: usize, mut mass: Vec<f64>) -> Result<Self, MapError> {
        if mass.len() != width * height {
            return Err(MapError::InvalidMass(format!(
                "{} cells for a {width}x{height} grid",
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(MapError::InvalidMass(format!("cell value {m}")));
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(MapError::InvalidMass("zero total mass".into()));
        }
        mass.iter_mut().for_each(|m| *m /= total);
        Ok(Self::from_parts(width, height, mass))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn sum(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn argmax_cell(&self) -> usize {
        argmax(&self.cells)
    }

    /// Mean cell-center position under the belief.
    pub fn mean(&self, grid: &GridGeometry) -> Point {
        let (mut x, mut y) = (0.0, 0.0);
        for (i, &m) in self.cells.iter().enumerate() {
            if m > 0.0 {
                let c = grid.cell_center(i);
                x += m * c.x;
                y += m * c.y;
            }
        }
        Point::new(x, y)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .cells
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| m * m.ln())
            .sum::<f64>()
    }

    /// Binary PGM (P5), maxval 65535, north row first; values scaled so the
    /// largest cell maps to 65535.
    pub fn to_pgm(&self) -> Vec<u8> {
        let peak = self.cells.iter().cloned().fold(0.0, f64::max);
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.cells.len() * 2);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                let m = self.cells[row * self.width + col];
                let v = if peak > 0.0 {
                    (m / peak * 65535.0).round() as u16
                } else {
                    0
                };
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        out
    }

    /// Inverse of [`BeliefGrid::to_pgm`] up to 16-bit quantization.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, MapError> {
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(MapError::Pgm("truncated header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" {
            return Err(MapError::Pgm(format!("unsupported magic {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| MapError::Pgm(format!("bad header field {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 65535 {
            return Err(MapError::Pgm(format!("expected maxval 65535, got {maxval}")));
        }
        let body = bytes.get(pos..).unwrap_or_default();
        if body.len() != width * height * 2 {
            return Err(MapError::Pgm(format!(
                "expected {} data bytes, found {}",
                width * height * 2,
                body.len()
            )));
        }
        let mut mass = vec![0.0; width * height];
        for (k, chunk) in body.chunks_exact(2).enumerate() {
            let row = height - 1 - k / width;
            let col = k % width;
            mass[row * width + col] = u16::from_be_bytes([chunk[0], chunk[1]]) as f64;
        }
        Self::from_mass(width, height, mass)
    }

    pub fn to_dump(&self) -> GridDump {
        GridDump {
            width: self.width,
            height: self.height,
            row_order: "south-first".into(),
            cells: self.cells.clone(),
        }
    }
}

/// JSON grid dump: row-major, row 0 is the southernmost row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDump {
    pub width: usize,
    pub height: usize,
    pub row_order: String,
    pub cells: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(id: &str, cat: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> AreaDocument {
        AreaDocument {
            id: id.into(),
            category: cat.into(),
            subcategory: None,
            name: None,
            polygon: Polygon::new(vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ]),
        }
    }

    fn doc(areas: Vec<AreaDocument>, w: f64, h: f64) -> MapDocument {
        MapDocument {
            boundary: Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(w, 0.0),
                Point::new(w, h),
                Point::new(0.0, h),
            ]),
            resolution: 1.0,
            areas,
        }
    }

    #[test]
    fn three_area_document_round_trips() {
        let d = doc(
            vec![
                rect("100", "room", 0.0, 0.0, 2.0, 2.0),
                rect("101", "room", 2.0, 0.0, 4.0, 2.0),
                rect("102", "area", 0.0, 2.0, 4.0, 4.0),
            ],
            4.0,
            4.0,
        );
        let map = AreaMap::from_document(d.clone()).unwrap();
        assert_eq!(map.area_count(), 3);
        assert_eq!(map.areas()[0].centroid(), Point::new(1.0, 1.0));
        assert_eq!(map.areas()[2].size(), 8.0);
        let bytes = serde_json::to_vec(&map.to_document()).unwrap();
        let again = load_map(&bytes).unwrap();
        assert_eq!(again.to_document(), d);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let d = doc(
            vec![
                rect("100", "room", 0.0, 0.0, 2.0, 2.0),
                rect("100", "room", 2.0, 0.0, 4.0, 2.0),
            ],
            4.0,
            4.0,
        );
        assert_eq!(
            AreaMap::from_document(d).unwrap_err(),
            MapError::DuplicateId("100".into())
        );
    }

    #[test]
    fn invalid_documents_rejected() {
        let outside = doc(vec![rect("1", "room", 3.0, 3.0, 6.0, 6.0)], 4.0, 4.0);
        assert!(matches!(
            AreaMap::from_document(outside),
            Err(MapError::OutsideBoundary(_))
        ));
        let overlap = doc(
            vec![
                rect("1", "room", 0.0, 0.0, 3.0, 3.0),
                rect("2", "room", 2.0, 2.0, 4.0, 4.0),
            ],
            4.0,
            4.0,
        );
        assert!(matches!(
            AreaMap::from_document(overlap),
            Err(MapError::Overlap(_, _))
        ));
        let same = doc(
            vec![
                rect("1", "room", 0.0, 0.0, 2.0, 2.0),
                rect("2", "room", 0.0, 0.0, 2.0, 2.0),
            ],
            4.0,
            4.0,
        );
        assert!(matches!(
            AreaMap::from_document(same),
            Err(MapError::Overlap(_, _))
        ));
        let mut bow = rect("1", "room", 0.0, 0.0, 2.0, 2.0);
        bow.polygon = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
        ]);
        assert!(matches!(
            AreaMap::from_document(doc(vec![bow], 4.0, 4.0)),
            Err(MapError::NotSimple(_))
        ));
        assert_eq!(
            AreaMap::from_document(doc(vec![], 4.0, 4.0)).unwrap_err(),
            MapError::NoAreas
        );
        let mut chatty = rect("1", "room", 0.0, 0.0, 2.0, 2.0);
        chatty.name = Some("a b c d e f g h".into());
        assert!(matches!(
            AreaMap::from_document(doc(vec![chatty], 4.0, 4.0)),
            Err(MapError::TooManyTokens { count: 10, .. })
        ));
    }

    #[test]
    fn uniform_over_unit_square_of_four_cells() {
        let map = AreaMap::from_document(doc(
            vec![
                rect("1", "room", 0.0, 0.0, 2.0, 2.0),
                rect("2", "room", 2.0, 0.0, 4.0, 4.0),
            ],
            4.0,
            4.0,
        ))
        .unwrap();
        let b = map.uniform_over_area("1").unwrap();
        let nonzero: Vec<_> = b.cells().iter().filter(|&&m| m > 0.0).collect();
        assert_eq!(nonzero.len(), 4);
        assert!(nonzero.iter().all(|&&m| m == 0.25));
        assert_eq!(
            map.uniform_over_area("999").unwrap_err(),
            MapError::UnknownArea("999".into())
        );
    }

    #[test]
    fn tiny_area_covers_no_cells() {
        let map = AreaMap::from_document(doc(
            vec![rect("1", "room", 0.1, 0.1, 0.4, 0.4)],
            4.0,
            4.0,
        ))
        .unwrap();
        assert_eq!(
            map.uniform_over_area("1").unwrap_err(),
            MapError::EmptyArea("1".into())
        );
    }

    #[test]
    fn gather_scatter_examples() {
        // Sizes 30 and 10 cells covering a 10x4 map.
        let map = AreaMap::from_document(doc(
            vec![
                rect("a", "room", 0.0, 0.0, 10.0, 3.0),
                rect("b", "room", 0.0, 3.0, 10.0, 4.0),
            ],
            10.0,
            4.0,
        ))
        .unwrap();
        let w = map.gather_area_weights(map.dummy_prior().cells());
        assert!((w.weights[0] - 0.75).abs() < 1e-12);
        assert!((w.weights[1] - 0.25).abs() < 1e-12);
        assert!(!w.degenerate);

        let w = map.gather_area_weights(map.uniform_over_area("a").unwrap().cells());
        assert_eq!(w.weights, vec![1.0, 0.0]);

        let g = map.scatter_area_weights(&[1.0, 0.0]).unwrap();
        let u = map.uniform_over_area("a").unwrap();
        for (x, y) in g.cells().iter().zip(u.cells()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(
            map.scatter_area_weights(&[0.0, 0.0]).unwrap_err(),
            MapError::ZeroWeights
        );
    }

    #[test]
    fn scatter_split_weights_over_unequal_areas() {
        // Areas of 2 and 8 cells.
        let map = AreaMap::from_document(doc(
            vec![
                rect("a", "room", 0.0, 0.0, 2.0, 1.0),
                rect("b", "room", 2.0, 0.0, 10.0, 1.0),
            ],
            10.0,
            1.0,
        ))
        .unwrap();
        let g = map.scatter_area_weights(&[0.5, 0.5]).unwrap();
        for &c in map.area_cells(0) {
            assert!((g.cells()[c] - 0.25).abs() < 1e-15);
        }
        for &c in map.area_cells(1) {
            assert!((g.cells()[c] - 0.0625).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_gather_falls_back_to_uniform() {
        // Corridor strip [0,4]x[3,4] belongs to no area.
        let map = AreaMap::from_document(doc(
            vec![
                rect("a", "room", 0.0, 0.0, 2.0, 3.0),
                rect("b", "room", 2.0, 0.0, 4.0, 3.0),
            ],
            4.0,
            4.0,
        ))
        .unwrap();
        let mut mass = vec![0.0; 16];
        for c in 12..16 {
            mass[c] = 1.0;
        }
        let w = map.gather_area_weights(&mass);
        assert!(w.degenerate);
        assert_eq!(w.captured, 0.0);
        assert_eq!(w.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn gaussian_peaks_at_nearest_cell_and_rejects_bad_variance() {
        let map = AreaMap::from_document(doc(
            vec![rect("a", "room", 0.0, 0.0, 20.0, 20.0)],
            20.0,
            20.0,
        ))
        .unwrap();
        let g = map.gaussian_grid(Point::new(10.2, 10.3), 9.0).unwrap();
        let grid = map.grid();
        let best = g.argmax_cell();
        assert_eq!(grid.cell_center(best), Point::new(10.5, 10.5));
        assert!((g.sum() - 1.0).abs() < 1e-12);
        assert_eq!(
            map.gaussian_grid(Point::new(1.0, 1.0), 0.0).unwrap_err(),
            MapError::BadVariance(0.0)
        );
        assert!(map.gaussian_grid(Point::new(1.0, 1.0), -2.0).is_err());
    }

    #[test]
    fn gaussian_matches_direct_density() {
        // |B| = 4, rho = 1 -> variance 4.
        let map = AreaMap::from_document(doc(
            vec![rect("a", "room", 0.0, 0.0, 8.0, 8.0)],
            8.0,
            8.0,
        ))
        .unwrap();
        let center = Point::new(3.0, 5.0);
        let g = map.gaussian_grid(center, 4.0).unwrap();
        let grid = map.grid();
        let dens: Vec<f64> = (0..64)
            .map(|i| {
                let d = grid.cell_center(i).sub(center);
                (-(d.x * d.x + d.y * d.y) / 8.0).exp() / (2.0 * std::f64::consts::PI * 4.0)
            })
            .collect();
        let z: f64 = dens.iter().sum();
        for i in 0..64 {
            assert!((g.cells()[i] - dens[i] / z).abs() < 1e-14);
        }
    }

    #[test]
    fn pgm_round_trip_preserves_shape_and_peak() {
        let map = AreaMap::from_document(doc(
            vec![rect("a", "room", 0.0, 0.0, 6.0, 3.0)],
            6.0,
            3.0,
        ))
        .unwrap();
        let g = map.gaussian_grid(Point::new(1.0, 2.0), 2.0).unwrap();
        let bytes = g.to_pgm();
        assert!(bytes.starts_with(b"P5\n6 3\n65535\n"));
        let back = BeliefGrid::from_pgm(&bytes).unwrap();
        assert_eq!(back.argmax_cell(), g.argmax_cell());
        for (a, b) in back.cells().iter().zip(g.cells()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn id_ordering_is_numeric_when_possible() {
        assert_eq!(compare_ids("20", "100"), Ordering::Less);
        assert_eq!(compare_ids("a", "b"), Ordering::Less);
        assert_eq!(compare_ids("100", "100"), Ordering::Equal);
    }
}
