//! Deterministic test families: product states, perturbed products and the
//! spin-1 AKLT chain.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::peps::PepsState;
use crate::tensor::DenseTensor;

fn site_shape(lattice: &LatticeSpec, site: usize, phys: usize, bond: usize) -> Vec<usize> {
    let mut shape = vec![phys];
    shape.extend(std::iter::repeat_n(bond, lattice.legs(site).len()));
    shape
}

/// Perturbed product PEPS.
///
/// Every site starts from the tensor |0⟩ ⊗ (D^{1/4}|0⟩)^{⊗legs}, so that at
/// `eta = 0` the state is |0…0⟩ with norm exactly 1. Each entry then receives
/// `eta · z` with z complex Gaussian, E|z|² = 1, drawn in site order and
/// row-major entry order from a ChaCha8 stream seeded with `seed`.
pub fn random_injective_peps(lattice: &LatticeSpec, bond_dim: usize, phys_dim: usize, eta: f64, seed: u64) -> Result<PepsState> {
    if bond_dim == 0 || phys_dim == 0 {
        return Err(Error::Argument("bond and physical dimensions must be at least 1".into()));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Argument(format!("eta must be a nonnegative number, got {eta}")));
    }
    lattice.ensure_supported()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leg_amp = (bond_dim as f64).powf(0.25);
    let half = 0.5f64.sqrt();
    let tensors = (0..lattice.num_sites())
        .map(|s| {
            let shape = site_shape(lattice, s, phys_dim, bond_dim);
            let legs = shape.len() - 1;
            let n: usize = shape.iter().product();
            let mut data = vec![C64::new(0.0, 0.0); n];
            data[0] = C64::new(leg_amp.powi(legs as i32), 0.0);
            if eta > 0.0 {
                for z in data.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z += C64::new(re * half, im * half) * eta;
                }
            }
            DenseTensor::new(shape, data)
        })
        .collect::<Result<Vec<_>>>()?;
    PepsState::new(lattice.clone(), tensors)
}

/// D = 1 PEPS with the same physical vector on every site.
pub fn product_peps(lattice: &LatticeSpec, chi: &[C64]) -> Result<PepsState> {
    if chi.is_empty() {
        return Err(Error::Argument("empty site vector".into()));
    }
    lattice.ensure_supported()?;
    let tensors = (0..lattice.num_sites())
        .map(|s| DenseTensor::new(site_shape(lattice, s, chi.len(), 1), chi.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    PepsState::new(lattice.clone(), tensors)
}

/// Spin-1 AKLT chain with open ends.
///
/// Physical basis m = +1, 0, −1; virtual basis ↑, ↓. Bulk matrices are
/// A⁺¹ = √(2/3) σ⁺, A⁰ = −√(1/3) σ_z, A⁻¹ = −√(2/3) σ⁻. The end tensors map
/// the boundary spin-½ isometrically onto |±1⟩ and are chosen so that the
/// left and right environments are both the identity; two sites then form
/// the spin-singlet of the two spin-1s.
pub fn aklt_chain(n: usize) -> Result<PepsState> {
    if n < 2 {
        return Err(Error::Argument(format!("AKLT chain needs at least 2 sites, got {n}")));
    }
    let lattice = LatticeSpec::chain(n)?;
    let (a, b) = ((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt());
    // t[i, left, right]
    let bulk = DenseTensor::from_real(
        vec![3, 2, 2],
        &[0.0, a, 0.0, 0.0, -b, 0.0, 0.0, b, 0.0, 0.0, -a, 0.0],
    )?;
    let left = DenseTensor::from_real(vec![3, 2], &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0])?;
    let right = DenseTensor::from_real(vec![3, 2], &[0.0, -1.0, 0.0, 0.0, 1.0, 0.0])?;
    let mut tensors = vec![left];
    tensors.extend(std::iter::repeat_n(bulk, n - 2));
    tensors.push(right);
    PepsState::new(lattice, tensors)
}

/// Chain with A^i_{jl,jr} = δ_{i,jl}(−1)^{i·jr} (d = D = 2). Its bulk
/// two-site windows map onto the whole physical space, so the bulk parent
/// terms vanish.
pub fn passthrough_chain(n: usize) -> Result<PepsState> {
    if n < 2 {
        return Err(Error::Argument(format!("chain needs at least 2 sites, got {n}")));
    }
    let lattice = LatticeSpec::chain(n)?;
    let bulk = DenseTensor::from_real(vec![2, 2, 2], &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0])?;
    let left = DenseTensor::from_real(vec![2, 2], &[1.0, 1.0, 1.0, -1.0])?;
    let right = DenseTensor::identity(2);
    let mut tensors = vec![left];
    tensors.extend(std::iter::repeat_n(bulk, n - 2));
    tensors.push(right);
    PepsState::new(lattice, tensors)
}
