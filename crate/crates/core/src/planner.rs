//! Area adjacency graph and area-level path planning.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::segment_length_within;
use crate::map::{compare_ids, AreaMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("unknown area {0:?}")]
    UnknownArea(String),
    #[error("no path from {start:?} to {goal:?}")]
    Unreachable { start: String, goal: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Search {
    /// Depth-first, first path found.
    #[default]
    Dfs,
    /// Breadth-first, fewest areas.
    Bfs,
}

/// Undirected adjacency between areas; neighbor lists are sorted by area id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaGraph {
    nodes: Vec<String>,
    neighbors: Vec<Vec<usize>>,
}

/// Two areas are adjacent when the length of boundary they share, measured as
/// the part of one polygon's edges lying within `gap_tolerance` of the other's,
/// exceeds `gap_tolerance`.
pub fn build_adjacency(map: &AreaMap, gap_tolerance: f64) -> AreaGraph {
    let areas = map.areas();
    let n = areas.len();
    let boxes: Vec<_> = areas.iter().map(|a| a.polygon.bounding_box()).collect();
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let ((alo, ahi), (blo, bhi)) = (boxes[i], boxes[j]);
            let t = gap_tolerance;
            if alo.x > bhi.x + t || blo.x > ahi.x + t || alo.y > bhi.y + t || blo.y > ahi.y + t {
                continue;
            }
            let shared = areas[i]
                .polygon
                .edges()
                .map(|(p, q)| {
                    areas[j]
                        .polygon
                        .edges()
                        .map(|(r, s)| segment_length_within(p, q, r, s, t))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if shared > t + 1e-9 {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
    }
    let nodes: Vec<String> = areas.iter().map(|a| a.id.clone()).collect();
    let neighbors = sets
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_by(|&a, &b| compare_ids(&nodes[a], &nodes[b]));
            v
        })
        .collect();
    AreaGraph { nodes, neighbors }
}

impl AreaGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn neighbors_of(&self, id: &str) -> Option<Vec<&str>> {
        let k = self.index_of(id)?;
        Some(self.neighbors[k].iter().map(|&j| self.nodes[j].as_str()).collect())
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                if i < j {
                    out.push((self.nodes[i].clone(), self.nodes[j].clone()));
                }
            }
        }
        out
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.neighbors[i].contains(&j),
            _ => false,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            for &j in &self.neighbors[k] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn endpoints(&self, start: &str, goal: &str) -> Result<(usize, usize), PlanError> {
        let s = self
            .index_of(start)
            .ok_or_else(|| PlanError::UnknownArea(start.into()))?;
        let g = self
            .index_of(goal)
            .ok_or_else(|| PlanError::UnknownArea(goal.into()))?;
        Ok((s, g))
    }

    fn unreachable(&self, start: &str, goal: &str) -> PlanError {
        PlanError::Unreachable {
            start: start.into(),
            goal: goal.into(),
        }
    }

    /// Depth-first search visiting neighbors in ascending id order; returns the
    /// first path found.
    pub fn dfs_plan(&self, start: &str, goal: &str) -> Result<Vec<String>, PlanError> {
        let (s, g) = self.endpoints(start, goal)?;
        let mut visited = vec![false; self.nodes.len()];
        let mut path = vec![s];
        let mut cursor = vec![0usize];
        visited[s] = true;
        while let Some(&top) = path.last() {
            if top == g {
                return Ok(path.iter().map(|&k| self.nodes[k].clone()).collect());
            }
            let next = {
                let c = cursor.last_mut().expect("parallel stacks");
                let ns = &self.neighbors[top];
                while *c < ns.len() && visited[ns[*c]] {
                    *c += 1;
                }
                ns.get(*c).copied()
            };
            match next {
                Some(j) => {
                    visited[j] = true;
                    path.push(j);
                    cursor.push(0);
                }
                None => {
                    path.pop();
                    cursor.pop();
                }
            }
        }
        Err(self.unreachable(start, goal))
    }

    /// Breadth-first search: a path with the fewest areas.
    pub fn bfs_plan(&self, start: &str, goal: &str) -> Result<Vec<String>, PlanError> {
        let (s, g) = self.endpoints(start, goal)?;
        let mut parent = vec![usize::MAX; self.nodes.len()];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(k) = queue.pop_front() {
            if k == g {
                let mut path = vec![g];
                while *path.last().expect("nonempty") != s {
                    path.push(parent[*path.last().expect("nonempty")]);
                }
                path.reverse();
                return Ok(path.into_iter().map(|k| self.nodes[k].clone()).collect());
            }
            for &j in &self.neighbors[k] {
                if parent[j] == usize::MAX {
                    parent[j] = k;
                    queue.push_back(j);
                }
            }
        }
        Err(self.unreachable(start, goal))
    }

    pub fn plan(&self, start: &str, goal: &str, search: Search) -> Result<Vec<String>, PlanError> {
        match search {
            Search::Dfs => self.dfs_plan(start, goal),
            Search::Bfs => self.bfs_plan(start, goal),
        }
    }

    /// Checks that `plan` runs from `start` to `goal` through adjacent, distinct areas.
    pub fn validate_plan(&self, plan: &[String], start: &str, goal: &str) -> bool {
        let distinct: BTreeSet<&String> = plan.iter().collect();
        plan.first().map(String::as_str) == Some(start)
            && plan.last().map(String::as_str) == Some(goal)
            && distinct.len() == plan.len()
            && plan.windows(2).all(|w| self.adjacent(&w[0], &w[1]))
    }
}

/// 8-bit PGM of the plan over the map, north row first. Cells outside the
/// boundary are 0, free interior 40, other areas 80, and plan areas ramp from
/// 128 at the start to 255 at the goal. The plan is listed in a header comment.
pub fn plan_overlay_pgm(map: &AreaMap, plan: &[String]) -> Result<Vec<u8>, PlanError> {
    let grid = map.grid();
    let mut shade = vec![0u8; grid.cell_count()];
    for &c in map.interior_cells() {
        shade[c] = match map.cell_owner(c) {
            Some(_) => 80,
            None => 40,
        };
    }
    let steps = plan.len().saturating_sub(1).max(1) as f64;
    for (k, id) in plan.iter().enumerate() {
        let a = map
            .area_index(id)
            .ok_or_else(|| PlanError::UnknownArea(id.clone()))?;
        let v = (128.0 + 127.0 * k as f64 / steps).round() as u8;
        for &c in map.area_cells(a) {
            shade[c] = v;
        }
    }
    let mut out = format!(
        "P5\n# plan {}\n{} {}\n255\n",
        plan.join(" -> "),
        grid.width,
        grid.height
    )
    .into_bytes();
    for row in (0..grid.height).rev() {
        out.extend_from_slice(&shade[row * grid.width..(row + 1) * grid.width]);
    }
    Ok(out)
}
