//! Open-boundary cubic lattices: sites, nearest-neighbour edges and the leg
//! order convention shared by every site tensor.
//!
//! Sites are numbered in row-major coordinate order (last axis fastest). A
//! site tensor carries its physical leg first, then for each axis in
//! increasing order the minus-direction leg (if that neighbour exists)
//! followed by the plus-direction leg (if that neighbour exists).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub extents: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    /// Lower-index endpoint.
    pub a: usize,
    /// Upper-index endpoint, `a` shifted by one along `axis`.
    pub b: usize,
    pub axis: usize,
}

impl Edge {
    /// Unique integer id, `a · dimension + axis`.
    pub fn id(&self, dimension: usize) -> usize {
        self.a * dimension + self.axis
    }

    pub fn other(&self, site: usize) -> usize {
        if site == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Leg {
    pub axis: usize,
    pub dir: Direction,
    pub neighbor: usize,
    pub edge: Edge,
}

/// Engine limit on lattice dimension; the file format admits more.
pub const MAX_ENGINE_DIMENSION: usize = 2;

impl LatticeSpec {
    pub fn new(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.contains(&0) {
            return Err(Error::Argument(format!("lattice extents must be positive, got {extents:?}")));
        }
        Ok(LatticeSpec { dimension: extents.len(), extents })
    }

    pub fn chain(n: usize) -> Result<Self> {
        LatticeSpec::new(vec![n])
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        LatticeSpec::new(vec![rows, cols])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != self.extents.len() {
            return Err(Error::Model(format!(
                "dimension {} disagrees with extents {:?}",
                self.dimension, self.extents
            )));
        }
        if self.extents.is_empty() || self.extents.contains(&0) {
            return Err(Error::Model(format!("lattice extents must be positive, got {:?}", self.extents)));
        }
        Ok(())
    }

    /// Fails for dimensions the contraction engine does not handle.
    pub fn ensure_supported(&self) -> Result<()> {
        self.validate()?;
        if self.dimension > MAX_ENGINE_DIMENSION {
            return Err(Error::Unsupported(format!(
                "lattice dimension {} (engine handles 1 and 2)",
                self.dimension
            )));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn num_edges(&self) -> usize {
        (0..self.dimension)
            .map(|ax| {
                self.extents
                    .iter()
                    .enumerate()
                    .map(|(k, &e)| if k == ax { e - 1 } else { e })
                    .product::<usize>()
            })
            .sum()
    }

    /// Longest shortest path, Σ (extent − 1).
    pub fn diameter(&self) -> usize {
        self.extents.iter().map(|e| e - 1).sum()
    }

    fn stride(&self, axis: usize) -> usize {
        self.extents[axis + 1..].iter().product()
    }

    pub fn coord(&self, site: usize) -> Coord {
        let mut c = vec![0; self.dimension];
        let mut rem = site;
        for k in (0..self.dimension).rev() {
            c[k] = rem % self.extents[k];
            rem /= self.extents[k];
        }
        c
    }

    pub fn index(&self, coord: &[usize]) -> Result<usize> {
        if coord.len() != self.dimension {
            return Err(Error::Argument(format!(
                "coordinate {coord:?} has {} components, lattice dimension is {}",
                coord.len(),
                self.dimension
            )));
        }
        let mut idx = 0;
        for (k, (&c, &e)) in coord.iter().zip(&self.extents).enumerate() {
            if c >= e {
                return Err(Error::Argument(format!(
                    "coordinate {coord:?} is outside the lattice (axis {k} has extent {e})"
                )));
            }
            idx = idx * e + c;
        }
        Ok(idx)
    }

    /// Legs of `site` in the canonical order.
    pub fn legs(&self, site: usize) -> Vec<Leg> {
        let c = self.coord(site);
        let mut out = Vec::with_capacity(2 * self.dimension);
        for axis in 0..self.dimension {
            let s = self.stride(axis);
            if c[axis] > 0 {
                let n = site - s;
                out.push(Leg { axis, dir: Direction::Minus, neighbor: n, edge: Edge { a: n, b: site, axis } });
            }
            if c[axis] + 1 < self.extents[axis] {
                let n = site + s;
                out.push(Leg { axis, dir: Direction::Plus, neighbor: n, edge: Edge { a: site, b: n, axis } });
            }
        }
        out
    }

    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        self.legs(site).into_iter().map(|l| l.neighbor).collect()
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.num_edges());
        for site in 0..self.num_sites() {
            out.extend(self.legs(site).into_iter().filter(|l| l.dir == Direction::Plus).map(|l| l.edge));
        }
        out
    }

    /// Shortest-path distance on the open lattice graph.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coord(a), self.coord(b));
        ca.iter().zip(&cb).map(|(x, y)| x.abs_diff(*y)).sum()
    }
}
