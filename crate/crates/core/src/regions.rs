//! Contiguous prediction regions grown from detected peaks.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::doa::{Doa, DoaDegrees};
use crate::error::{Error, Result};
use crate::srp::{DoaGrid, LikelihoodMap};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRegion {
    members: Vec<usize>,
    seed: usize,
    lambda: f64,
}

impl PredictionRegion {
    /// Sorted grid indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }
    pub fn seed(&self) -> usize {
        self.seed
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn export(&self, grid: &DoaGrid) -> RegionExport {
        RegionExport {
            seed: grid.doa(self.seed).into(),
            seed_index: self.seed,
            lambda: self.lambda,
            area_fraction: region_area_fraction(self, grid),
            members: self.members.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionExport {
    pub seed: DoaDegrees,
    pub seed_index: usize,
    pub lambda: f64,
    pub area_fraction: f64,
    pub members: Vec<usize>,
}

/// Breadth-first flood fill from `seed` over 4-connected nodes with
/// `Φ(p) >= λ`. The seed is always a member.
pub fn grow_region(map: &LikelihoodMap, grid: &DoaGrid, seed: usize, lambda: f64) -> PredictionRegion {
    let mut inside = vec![false; grid.len()];
    inside[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(p) = queue.pop_front() {
        for q in grid.neighbors(p) {
            if !inside[q] && map.get(q) >= lambda {
                inside[q] = true;
                queue.push_back(q);
            }
        }
    }
    let members = (0..grid.len()).filter(|&i| inside[i]).collect();
    PredictionRegion { members, seed, lambda }
}

/// As [`grow_region`], seeded at a direction that must be a grid node.
pub fn grow_region_at(map: &LikelihoodMap, grid: &DoaGrid, seed: &Doa, lambda: f64) -> Result<PredictionRegion> {
    if map.len() != grid.len() {
        return Err(Error::Shape("map and grid sizes differ".into()));
    }
    let idx = grid.exact_index(seed).ok_or_else(|| Error::Shape("region seed is not a grid node".into()))?;
    Ok(grow_region(map, grid, idx, lambda))
}

pub fn region_area_fraction(region: &PredictionRegion, grid: &DoaGrid) -> f64 {
    region.len() as f64 / grid.len() as f64
}

/// Whether the grid node nearest to `truth` belongs to the region.
pub fn covers(region: &PredictionRegion, grid: &DoaGrid, truth: &Doa) -> bool {
    region.contains(grid.nearest(truth))
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// For every node, the largest λ at which it still joins the seed's region:
/// the best path bottleneck `max_path min Φ` over nodes after the seed.
///
/// `C_λ = {seed} ∪ {p : b(p) >= λ}`, so one field answers every threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckField {
    seed: usize,
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl BottleneckField {
    pub fn new(map: &LikelihoodMap, grid: &DoaGrid, seed: usize) -> Self {
        let mut b = vec![f64::NEG_INFINITY; grid.len()];
        let mut done = vec![false; grid.len()];
        b[seed] = f64::INFINITY;
        let mut heap = BinaryHeap::from([Key(f64::INFINITY, seed)]);
        while let Some(Key(v, p)) = heap.pop() {
            if done[p] {
                continue;
            }
            done[p] = true;
            for q in grid.neighbors(p) {
                let cand = v.min(map.get(q));
                if !done[q] && cand > b[q] {
                    b[q] = cand;
                    heap.push(Key(cand, q));
                }
            }
        }
        let mut sorted: Vec<f64> = b.iter().enumerate().filter(|&(i, _)| i != seed).map(|(_, &v)| v).collect();
        sorted.sort_by(f64::total_cmp);
        BottleneckField { seed, values: b, sorted }
    }

    pub fn seed(&self) -> usize {
        self.seed
    }
    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn region(&self, lambda: f64) -> PredictionRegion {
        let members = (0..self.values.len()).filter(|&i| i == self.seed || self.values[i] >= lambda).collect();
        PredictionRegion { members, seed: self.seed, lambda }
    }

    /// `|C_λ|`.
    pub fn region_size(&self, lambda: f64) -> usize {
        1 + self.sorted.len() - self.sorted.partition_point(|&v| v < lambda)
    }

    /// Largest λ whose region still covers `truth`; +∞ if it snaps to the seed.
    pub fn cover_threshold(&self, grid: &DoaGrid, truth: &Doa) -> f64 {
        self.values[grid.nearest(truth)]
    }
}
