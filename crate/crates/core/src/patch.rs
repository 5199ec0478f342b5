//! Graph-distance balls around an observable's support.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Coord, Edge, LatticeSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub radius: usize,
    /// Site indices of P, ascending.
    pub sites: Vec<usize>,
    #[serde(skip)]
    pub interior_edges: Vec<Edge>,
    #[serde(skip)]
    pub crossing_edges: Vec<Edge>,
    /// The ball was cut by the lattice boundary.
    pub clipped: bool,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn mask(&self, num_sites: usize) -> Vec<bool> {
        let mut m = vec![false; num_sites];
        for &s in &self.sites {
            m[s] = true;
        }
        m
    }

    pub fn covers(&self, lattice: &LatticeSpec) -> bool {
        self.sites.len() == lattice.num_sites()
    }
}

/// Graph distance from every site to the nearest site of `sources`.
pub fn distances(lattice: &LatticeSpec, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; lattice.num_sites()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for n in lattice.neighbors(s) {
            if dist[n] == usize::MAX {
                dist[n] = dist[s] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// P = {v : dist(v, X) ≤ ell}.
pub fn select_patch(lattice: &LatticeSpec, support: &[Coord], ell: usize) -> Result<Patch> {
    if support.is_empty() {
        return Err(Error::Argument("patch support is empty".into()));
    }
    let xs: Vec<usize> = support.iter().map(|c| lattice.index(c)).collect::<Result<_>>()?;
    let dist = distances(lattice, &xs);
    let sites: Vec<usize> = (0..lattice.num_sites()).filter(|&s| dist[s] <= ell).collect();
    let mut interior_edges = Vec::new();
    let mut crossing_edges = Vec::new();
    for e in lattice.edges() {
        match (dist[e.a] <= ell, dist[e.b] <= ell) {
            (true, true) => interior_edges.push(e),
            (true, false) | (false, true) => crossing_edges.push(e),
            _ => {}
        }
    }
    let clipped = support.iter().any(|x| {
        x.iter().zip(&lattice.extents).any(|(&xa, &ext)| xa < ell || xa + ell > ext - 1)
    });
    Ok(Patch { radius: ell, sites, interior_edges, crossing_edges, clipped })
}
