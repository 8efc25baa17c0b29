//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's geometry or weighting code.

#![allow(dead_code)]

use std::path::PathBuf;

use beliefnav::map::MapDocument;
use beliefnav::{AreaMap, BeliefGrid};
use serde::Deserialize;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Debug, Deserialize)]
pub struct PreciseCase {
    pub modifier: String,
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    pub prior: Vec<f64>,
}

#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub map: MapDocument,
    /// Mass placed on cells outside every area before normalizing the prior.
    #[serde(default)]
    pub outside_mass: f64,
    pub cases: Vec<PreciseCase>,
}

pub fn load_fixtures() -> Vec<(String, Fixture)> {
    let mut out: Vec<(String, Fixture)> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).expect("read fixture");
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, serde_json::from_str(&text).expect("fixture parses"))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn rect_doc(id: &str, category: &str, sub: Option<&str>, x0: f64, y0: f64, x1: f64, y1: f64) -> serde_json::Value {
    let mut v = serde_json::json!({
        "id": id,
        "category": category,
        "polygon": [[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
    });
    if let Some(s) = sub {
        v["subcategory"] = serde_json::json!(s);
    }
    v
}

pub fn map_from_json(v: serde_json::Value) -> AreaMap {
    beliefnav::load_map(v.to_string().as_bytes()).expect("valid map")
}

/// Even-odd ray casting.
pub fn inside(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[(i + n - 1) % n];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            c = !c;
        }
    }
    c
}

pub fn vertices(p: &beliefnav::geometry::Polygon) -> Vec<(f64, f64)> {
    p.vertices().iter().map(|v| (v.x, v.y)).collect()
}

pub fn cell_center(map: &AreaMap, i: usize) -> (f64, f64) {
    let g = map.grid();
    let (row, col) = (i / g.width, i % g.width);
    (
        g.origin.x + (col as f64 + 0.5) * g.resolution,
        g.origin.y + (row as f64 + 0.5) * g.resolution,
    )
}

/// Cell indices whose centers fall inside each area.
pub fn area_cells(map: &AreaMap) -> Vec<Vec<usize>> {
    let n = map.grid().cell_count();
    map.areas()
        .iter()
        .map(|a| {
            let poly = vertices(&a.polygon);
            (0..n).filter(|&i| inside(&poly, cell_center(map, i))).collect()
        })
        .collect()
}

pub fn boundary_cells(map: &AreaMap) -> Vec<usize> {
    let poly = vertices(map.boundary());
    (0..map.grid().cell_count())
        .filter(|&i| inside(&poly, cell_center(map, i)))
        .collect()
}

/// Prior grid holding `weights[i]` spread evenly over area i, plus `outside`
/// spread over boundary cells owned by no area.
pub fn prior_grid(map: &AreaMap, weights: &[f64], outside: f64) -> BeliefGrid {
    let g = map.grid();
    let cells = area_cells(map);
    let mut mass = vec![0.0; g.cell_count()];
    for (w, cs) in weights.iter().zip(&cells) {
        for &c in cs {
            mass[c] += w / cs.len() as f64;
        }
    }
    if outside > 0.0 {
        let owned: std::collections::HashSet<usize> = cells.iter().flatten().copied().collect();
        let free: Vec<usize> = boundary_cells(map)
            .into_iter()
            .filter(|c| !owned.contains(c))
            .collect();
        assert!(!free.is_empty(), "fixture has no free cells for outside mass");
        for &c in &free {
            mass[c] += outside / free.len() as f64;
        }
    }
    BeliefGrid::from_mass(g.width, g.height, mass).expect("prior grid")
}

pub fn shoelace_centroid(poly: &[(f64, f64)]) -> (f64, f64) {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    let n = poly.len();
    for i in 0..n {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % n];
        let cross = x0 * y1 - x1 * y0;
        a += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    (cx / (3.0 * a), cy / (3.0 * a))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

pub struct PreciseOracle {
    pub gamma: Vec<f64>,
    pub counts: Vec<usize>,
    pub prior: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Brute-force evaluation of the precise update from the map document alone:
/// shoelace centroids in the unit frame, vertex minimum of the projection,
/// exact-string match counts, and cell-sum priors.
pub fn precise_oracle(map: &AreaMap, prior: &BeliefGrid, modifier: &str, alpha: f64, kappa: f64, beta: f64, eps: f64) -> PreciseOracle {
    let boundary = vertices(map.boundary());
    let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
    for &(x, y) in &boundary {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let scale = (hi.0 - lo.0).max(hi.1 - lo.1);
    let norm = |p: (f64, f64)| ((p.0 - lo.0) / scale, (p.1 - lo.1) / scale);
    let e = (alpha.cos(), alpha.sin());
    let proj = |p: (f64, f64)| p.0 * e.0 + p.1 * e.1;
    let min_proj = boundary
        .iter()
        .map(|&v| proj(norm(v)))
        .fold(f64::INFINITY, f64::min);
    let gamma: Vec<f64> = map
        .areas()
        .iter()
        .map(|a| {
            let c = norm(shoelace_centroid(&vertices(&a.polygon)));
            (sigmoid(proj(c) - min_proj) + 1.0).powf(kappa) - 1.0 + beta * kappa + eps
        })
        .collect();

    let mods = words(modifier);
    let counts: Vec<usize> = map
        .areas()
        .iter()
        .map(|a| {
            let mut attrs = words(&a.id);
            attrs.extend(words(&a.category));
            if let Some(s) = &a.subcategory {
                attrs.extend(words(s));
            }
            if let Some(n) = &a.name {
                attrs.extend(words(n));
            }
            attrs
                .iter()
                .map(|t| mods.iter().filter(|m| *m == t).count())
                .sum()
        })
        .collect();
    let total: usize = counts.iter().sum();
    let attention: Vec<f64> = if total == 0 {
        vec![1.0 / counts.len() as f64; counts.len()]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };

    let cells = area_cells(map);
    let raw: Vec<f64> = cells
        .iter()
        .map(|cs| cs.iter().map(|&c| prior.cells()[c]).sum())
        .collect();
    let eta: f64 = raw.iter().sum();
    let prior_w: Vec<f64> = raw.iter().map(|r| r / eta).collect();

    let unnorm: Vec<f64> = (0..gamma.len())
        .map(|i| gamma[i] * attention[i] * prior_w[i])
        .collect();
    let z: f64 = unnorm.iter().sum();
    PreciseOracle {
        gamma,
        counts,
        prior: prior_w,
        weights: unnorm.iter().map(|u| u / z).collect(),
    }
}

fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Longest stretch of a single edge of `a` lying within `tol` of one edge of
/// `b`, measured by dense sampling.
pub fn sampled_shared_length(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64, samples: usize) -> f64 {
    let edges = |p: &[(f64, f64)]| -> Vec<((f64, f64), (f64, f64))> {
        (0..p.len()).map(|i| (p[i], p[(i + 1) % p.len()])).collect()
    };
    let mut best: f64 = 0.0;
    for (p, q) in edges(a) {
        let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
        for (r, s) in edges(b) {
            let hits = (0..samples)
                .filter(|&k| {
                    let t = (k as f64 + 0.5) / samples as f64;
                    let x = (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1));
                    point_segment(x, r, s) <= tol
                })
                .count();
            best = best.max(len * hits as f64 / samples as f64);
        }
    }
    best
}
