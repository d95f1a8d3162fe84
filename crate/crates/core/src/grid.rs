//! Finite evaluation grids over the normalized parameter box `[0, 1]^d`.

use serde::{Deserialize, Serialize};

/// A point in the normalized parameter domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl AsRef<[f64]> for ParameterPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean distance between two points of equal dimension.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Regular tensor grid on `[0, 1]^d`, stored row-major with the last
/// dimension varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainGrid {
    resolutions: Vec<usize>,
    coords: Vec<f64>,
}

/// Default per-dimension resolution: 101 points in 1D, 31 in 2D, 15 in 3D.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 101,
        2 => 31,
        3 => 15,
        _ => 7,
    }
}

impl DomainGrid {
    /// Builds a grid with `resolutions[k] >= 2` points along axis `k`,
    /// or a single point at 0.5 when the resolution is 1.
    pub fn new(resolutions: Vec<usize>) -> Self {
        assert!(!resolutions.is_empty(), "grid needs at least one dimension");
        assert!(resolutions.iter().all(|&r| r >= 1), "resolution must be >= 1");
        let dim = resolutions.len();
        let total: usize = resolutions.iter().product();
        let mut coords = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for k in 0..dim {
                coords.push(axis_value(idx[k], resolutions[k]));
            }
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < resolutions[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self { resolutions, coords }
    }

    pub fn uniform(dim: usize, resolution: usize) -> Self {
        Self::new(vec![resolution; dim])
    }

    pub fn with_default_resolution(dim: usize) -> Self {
        Self::uniform(dim, default_resolution(dim))
    }

    pub fn dim(&self) -> usize {
        self.resolutions.len()
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[index * d..(index + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.point(i), self.point(j))
    }

    /// Flat index of the grid point equal to `point` (within 1e-12 per
    /// coordinate), if any.
    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        let mut flat = 0usize;
        for (&x, &res) in point.iter().zip(&self.resolutions) {
            if !x.is_finite() {
                return None;
            }
            let i = if res == 1 {
                0.0
            } else {
                (x * (res - 1) as f64).round()
            } as i64;
            if i < 0 || i as usize >= res {
                return None;
            }
            if (axis_value(i as usize, res) - x).abs() > 1e-12 {
                return None;
            }
            flat = flat * res + i as usize;
        }
        Some(flat)
    }

    /// Indices of the grid neighbours of `index` along each axis (`+1` side only).
    pub fn forward_neighbors(&self, index: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        let mut stride = 1usize;
        let mut rem = index;
        let mut sub = vec![0usize; d];
        for k in (0..d).rev() {
            sub[k] = rem % self.resolutions[k];
            rem /= self.resolutions[k];
        }
        for k in (0..d).rev() {
            if sub[k] + 1 < self.resolutions[k] {
                out.push(index + stride);
            }
            stride *= self.resolutions[k];
        }
        out
    }
}

fn axis_value(i: usize, res: usize) -> f64 {
    if res == 1 {
        0.5
    } else {
        i as f64 / (res - 1) as f64
    }
}

/// Boolean mask over the points of a grid.
pub type GridMask = Vec<bool>;

pub fn mask_count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

pub fn mask_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}
