use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Order of the p-norm used as distance between multi-dimensional points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    P(f64),
    Max,
}

impl Norm {
    pub fn euclidean() -> Self {
        Norm::P(2.0)
    }

    fn validate(self) -> Result<Self> {
        match self {
            Norm::P(p) if p == f64::INFINITY => Ok(Norm::Max),
            Norm::P(p) if !(p >= 1.0) => Err(Error::InvalidDataset(format!(
                "norm order must lie in [1, inf], got {p}"
            ))),
            other => Ok(other),
        }
    }

    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Max => a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())),
            Norm::P(p) if p == 1.0 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::P(p) if p == 2.0 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Norm::P(p) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs().powf(p))
                .sum::<f64>()
                .powf(p.recip()),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Max => f.write_str("inf"),
        }
    }
}

// JSON has no infinity, so the max norm travels as the string "inf".
impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Norm::P(p) => s.serialize_f64(*p),
            Norm::Max => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Name(String),
        }
        let norm = match Raw::deserialize(d)? {
            Raw::Num(p) => Norm::P(p),
            Raw::Name(s) if matches!(s.as_str(), "inf" | "max" | "infinity") => Norm::Max,
            Raw::Name(s) => {
                return Err(serde::de::Error::custom(format!("unknown norm {s:?}")));
            }
        };
        norm.validate().map_err(serde::de::Error::custom)
    }
}

/// For every point, all other points sorted by ascending distance.
///
/// Stored flat: row `i` holds `n - 1` entries.
#[derive(Debug)]
pub struct NeighborTable {
    stride: usize,
    dist: Vec<f64>,
    index: Vec<u32>,
}

impl NeighborTable {
    fn build(data: &Dataset) -> Self {
        let n = data.len();
        let stride = n.saturating_sub(1);
        let rows: Vec<Vec<(f64, u32)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row: Vec<(f64, u32)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (data.distance(i, j), j as u32))
                    .collect();
                row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                row
            })
            .collect();
        let mut dist = Vec::with_capacity(n * stride);
        let mut index = Vec::with_capacity(n * stride);
        for row in rows {
            for (d, j) in row {
                dist.push(d);
                index.push(j);
            }
        }
        NeighborTable { stride, dist, index }
    }

    /// Neighbors of `i` as `(distance, index)` pairs, nearest first.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        let span = i * self.stride..(i + 1) * self.stride;
        self.dist[span.clone()]
            .iter()
            .copied()
            .zip(self.index[span].iter().map(|&j| j as usize))
    }
}

/// The point set searched over.
///
/// Points are pairwise distinct. One-dimensional datasets are sorted
/// ascending and use absolute difference as distance.
#[derive(Debug)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
    norm: Norm,
    min_gap: f64,
    neighbors: OnceLock<NeighborTable>,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Dataset {
            coords: self.coords.clone(),
            dim: self.dim,
            norm: self.norm,
            min_gap: self.min_gap,
            neighbors: OnceLock::new(),
        }
    }
}

impl Dataset {
    /// Builds a one-dimensional dataset. Positions must be finite and
    /// strictly increasing.
    pub fn line(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDataset("need at least two points".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite position {p}")));
        }
        let mut min_gap = f64::INFINITY;
        for (i, w) in points.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap <= 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "positions must be strictly increasing (index {} -> {})",
                    i + 1,
                    i + 2
                )));
            }
            min_gap = min_gap.min(gap);
        }
        Ok(Dataset {
            coords: points,
            dim: 1,
            norm: Norm::P(1.0),
            min_gap,
            neighbors: OnceLock::new(),
        })
    }

    /// `n` points at `0, spacing, 2 * spacing, ...`.
    pub fn uniform_grid(n: usize, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidDataset(format!("bad spacing {spacing}")));
        }
        Self::line((0..n).map(|i| i as f64 * spacing).collect())
    }

    /// Builds a `dim`-dimensional dataset from row-major coordinates.
    pub fn space(dim: usize, coords: Vec<f64>, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be positive".into()));
        }
        if dim == 1 {
            // Sort so the 1-D invariants hold; duplicates are rejected below.
            let mut points = coords;
            points.sort_by(f64::total_cmp);
            return Self::line(points);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidDataset(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDataset("non-finite coordinate".into()));
        }
        let norm = norm.validate()?;
        let mut data = Dataset {
            coords,
            dim,
            norm,
            min_gap: 0.0,
            neighbors: OnceLock::new(),
        };
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidDataset("need at least two points".into()));
        }
        let (min_gap, pair) = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| (data.distance(i, j), (i, j)))
                    .fold((f64::INFINITY, (i, i)), |a, b| if b.0 < a.0 { b } else { a })
            })
            .reduce(
                || (f64::INFINITY, (0, 0)),
                |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        if min_gap <= 0.0 {
            return Err(Error::InvalidDataset(format!(
                "points {} and {} coincide",
                pair.0 + 1,
                pair.1 + 1
            )));
        }
        data.min_gap = min_gap;
        Ok(data)
    }

    /// `n` points drawn uniformly from the unit cube `[0, 1]^dim`.
    pub fn random_cube<R: Rng + ?Sized>(n: usize, dim: usize, norm: Norm, rng: &mut R) -> Result<Self> {
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        Self::space(dim, coords, norm)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_line(&self) -> bool {
        self.dim == 1
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Minimal distance between two distinct points.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Position of point `i` on the line. Only meaningful for 1-D data.
    pub fn position(&self, i: usize) -> f64 {
        debug_assert!(self.is_line());
        self.coords[i]
    }

    /// All 1-D positions, ascending.
    pub fn positions(&self) -> Option<&[f64]> {
        self.is_line().then_some(self.coords.as_slice())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if self.dim == 1 {
            (self.coords[i] - self.coords[j]).abs()
        } else {
            self.norm.distance(self.point(i), self.point(j))
        }
    }

    /// Sorted neighbor lists, built on first use (O(n^2) memory).
    pub fn neighbor_table(&self) -> &NeighborTable {
        self.neighbors.get_or_init(|| NeighborTable::build(self))
    }
}
