use std::collections::VecDeque;

use super::{ImagingResult, SamplingGrid};
use crate::scene::PermittivityModel;
use crate::Point3;

/// Boolean field on a sampling grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    dims: [usize; 3],
    values: Vec<bool>,
}

impl Mask {
    pub fn new(dims: [usize; 3], values: Vec<bool>) -> Self {
        assert_eq!(values.len(), dims.iter().product::<usize>());
        Self { dims, values }
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn volume_fraction(&self) -> f64 {
        self.count() as f64 / self.values.len() as f64
    }

    /// Face-connected components as lists of flat indices, ordered by their
    /// smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let [n0, n1, n2] = self.dims;
        let mut label = vec![false; self.values.len()];
        let mut out = Vec::new();
        for start in 0..self.values.len() {
            if !self.values[start] || label[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            label[start] = true;
            while let Some(f) = queue.pop_front() {
                comp.push(f);
                let (i, j, l) = (f % n0, (f / n0) % n1, f / (n0 * n1));
                let mut visit = |g: usize| {
                    if self.values[g] && !label[g] {
                        label[g] = true;
                        queue.push_back(g);
                    }
                };
                if i > 0 {
                    visit(f - 1);
                }
                if i + 1 < n0 {
                    visit(f + 1);
                }
                if j > 0 {
                    visit(f - n0);
                }
                if j + 1 < n1 {
                    visit(f + n0);
                }
                if l > 0 {
                    visit(f - n0 * n1);
                }
                if l + 1 < n2 {
                    visit(f + n0 * n1);
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Mean position of the set cells, or `None` for an empty mask.
    pub fn centroid(&self, grid: &SamplingGrid) -> Option<Point3> {
        let cells: Vec<usize> = (0..self.values.len()).filter(|&f| self.values[f]).collect();
        centroid_of(grid, &cells)
    }
}

/// Mean position of the given cells.
pub fn centroid_of(grid: &SamplingGrid, cells: &[usize]) -> Option<Point3> {
    if cells.is_empty() {
        return None;
    }
    let sum: Point3 = cells.iter().map(|&f| grid.point(f)).sum();
    Some(sum / cells.len() as f64)
}

/// Points where the indicator reaches `fraction` of its maximum.
pub fn isosurface_mask(field: &ImagingResult, fraction: f64) -> Mask {
    let max = field.max();
    if max == 0.0 {
        log::warn!("indicator vanishes on the whole grid; mask is empty");
        return Mask::new(field.grid.dims(), vec![false; field.values.len()]);
    }
    let level = fraction * max;
    Mask::new(
        field.grid.dims(),
        field.values.iter().map(|&v| v >= level).collect(),
    )
}

/// Sampling points inside the scatterer.
pub fn rasterize(model: &PermittivityModel, grid: &SamplingGrid) -> Mask {
    Mask::new(
        grid.dims(),
        grid.points().map(|z| model.contains(&z)).collect(),
    )
}

/// `|A ∩ B| / |A ∪ B|`, taken as 1 when both are empty.
pub fn jaccard(a: &Mask, b: &Mask) -> f64 {
    assert_eq!(a.dims, b.dims);
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
