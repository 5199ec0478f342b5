//! Few-site observables and the standard spin-½ / spin-1 presets.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeSpec};
use crate::linalg;
use crate::tensor::{kron, DenseTensor};

/// Largest support accepted by default.
pub const MAX_SUPPORT: usize = 4;

/// Tolerance of the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    sites: Vec<Coord>,
    matrix: DenseTensor,
    hermitian: bool,
    op_norm: f64,
}

impl Observable {
    /// `matrix` acts on the sites in the given order, first site most
    /// significant.
    pub fn new(sites: Vec<Coord>, matrix: DenseTensor) -> Result<Self> {
        Observable::with_max_support(sites, matrix, MAX_SUPPORT)
    }

    pub fn with_max_support(sites: Vec<Coord>, matrix: DenseTensor, max_support: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Argument("observable support is empty".into()));
        }
        if sites.len() > max_support {
            return Err(Error::Argument(format!(
                "observable acts on {} sites, limit is {max_support}",
                sites.len()
            )));
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::Argument(format!("site {s:?} listed twice in the support")));
            }
        }
        let (r, c) = matrix.matrix_dims()?;
        if r != c {
            return Err(Error::Shape(format!("observable matrix must be square, got {r}x{c}")));
        }
        let d = (r as f64).powf(1.0 / sites.len() as f64).round() as usize;
        if d.checked_pow(sites.len() as u32) != Some(r) {
            return Err(Error::Shape(format!(
                "matrix dimension {r} is not a power d^{} of a local dimension",
                sites.len()
            )));
        }
        let hermitian = linalg::is_hermitian(&matrix, HERMITIAN_TOL);
        let op_norm = linalg::operator_norm(&matrix)?;
        Ok(Observable { sites, matrix, hermitian, op_norm })
    }

    pub fn sites(&self) -> &[Coord] {
        &self.sites
    }

    pub fn matrix(&self) -> &DenseTensor {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn local_dim(&self) -> usize {
        (self.dim() as f64).powf(1.0 / self.sites.len() as f64).round() as usize
    }

    /// Checks the support against a lattice and physical dimension and
    /// returns the site indices in support order.
    pub fn indices(&self, lattice: &LatticeSpec, phys_dim: usize) -> Result<Vec<usize>> {
        if self.local_dim() != phys_dim {
            return Err(Error::Argument(format!(
                "observable has local dimension {}, the state has {phys_dim}",
                self.local_dim()
            )));
        }
        self.sites.iter().map(|c| lattice.index(c)).collect()
    }

    /// Identity on the given sites.
    pub fn identity(sites: Vec<Coord>, phys_dim: usize) -> Result<Self> {
        let n = phys_dim.pow(sites.len() as u32);
        Observable::new(sites, DenseTensor::identity(n))
    }

    /// A ⊗ B on the union of two disjoint supports, A's sites first.
    pub fn product(a: &Observable, b: &Observable) -> Result<Self> {
        if a.sites.iter().any(|s| b.sites.contains(s)) {
            return Err(Error::Argument("observable supports overlap".into()));
        }
        let mut sites = a.sites.clone();
        sites.extend(b.sites.iter().cloned());
        Observable::new(sites, kron(&a.matrix, &b.matrix)?)
    }

    /// Named single-site preset: `identity`, `pauli-x`, `pauli-y`,
    /// `pauli-z`, `s_x`, `s_y`, `s_z` (spin-1).
    pub fn preset(name: &str, site: Coord, phys_dim: usize) -> Result<Self> {
        let m = match name {
            "identity" => DenseTensor::identity(phys_dim),
            "pauli-x" | "pauli-y" | "pauli-z" if phys_dim == 2 => pauli(&name[6..])?,
            "s_x" | "s_y" | "s_z" if phys_dim == 3 => spin1(&name[2..])?,
            "pauli-x" | "pauli-y" | "pauli-z" | "s_x" | "s_y" | "s_z" => {
                return Err(Error::Argument(format!(
                    "preset {name} does not fit physical dimension {phys_dim}"
                )))
            }
            _ => return Err(Error::Argument(format!("unknown observable preset {name:?}"))),
        };
        Observable::new(vec![site], m)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `x`, `y` or `z` in the basis |0⟩, |1⟩.
pub fn pauli(axis: &str) -> Result<DenseTensor> {
    let data = match axis {
        "x" => vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        "y" => vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        "z" => vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        _ => return Err(Error::Argument(format!("unknown Pauli axis {axis:?}"))),
    };
    DenseTensor::new(vec![2, 2], data)
}

/// Spin-1 matrix `x`, `y` or `z` in the basis m = +1, 0, −1.
pub fn spin1(axis: &str) -> Result<DenseTensor> {
    let h = 0.5f64.sqrt();
    let z = c(0.0, 0.0);
    let data = match axis {
        "x" => vec![z, c(h, 0.0), z, c(h, 0.0), z, c(h, 0.0), z, c(h, 0.0), z],
        "y" => vec![z, c(0.0, -h), z, c(0.0, h), z, c(0.0, -h), z, c(0.0, h), z],
        "z" => vec![c(1.0, 0.0), z, z, z, z, z, z, z, c(-1.0, 0.0)],
        _ => return Err(Error::Argument(format!("unknown spin axis {axis:?}"))),
    };
    DenseTensor::new(vec![3, 3], data)
}
