//! PEPS states on open lattices: validation, the state vector of the PEPS
//! map, injectivity analysis, blocking and site disentangling.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeSpec};
use crate::linalg::{self, INJECTIVITY_RTOL};
use crate::network::{Label, Network, DEFAULT_BUDGET};
use crate::tensor::{contract, DenseTensor};

/// Default ceiling on d^N for explicit state vectors.
pub const STATE_VECTOR_CUTOFF: usize = 1 << 20;

/// Default ceiling on the number of sites merged by [`block`].
pub const MAX_BLOCK_SITES: usize = 4;

/// One site's tensor: physical leg first, then virtual legs in lattice order.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub site: Coord,
    pub tensor: DenseTensor,
}

impl SiteTensor {
    pub fn phys_dim(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn bond_dims(&self) -> &[usize] {
        &self.tensor.shape()[1..]
    }

    pub fn virtual_dim(&self) -> usize {
        self.bond_dims().iter().product()
    }

    /// The map A_v from the virtual legs (columns) to the physical leg (rows).
    pub fn as_map(&self) -> DenseTensor {
        self.tensor.clone().reshape(vec![self.phys_dim(), self.virtual_dim()]).expect("sizes agree")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PepsState {
    lattice: LatticeSpec,
    tensors: Vec<SiteTensor>,
    phys_dim: usize,
    bond_dim: usize,
}

impl PepsState {
    /// `tensors` are given in row-major site order.
    pub fn new(lattice: LatticeSpec, tensors: Vec<DenseTensor>) -> Result<Self> {
        lattice.ensure_supported()?;
        let n = lattice.num_sites();
        if tensors.len() != n {
            return Err(Error::Model(format!("{} tensors for {n} sites", tensors.len())));
        }
        let phys_dim = tensors[0].shape().first().copied().unwrap_or(0);
        let mut bond_dim = None;
        let mut sites = Vec::with_capacity(n);
        for (s, t) in tensors.into_iter().enumerate() {
            let legs = lattice.legs(s);
            let coord = lattice.coord(s);
            if t.rank() != 1 + legs.len() {
                return Err(Error::Model(format!(
                    "site {coord:?} needs {} legs, tensor has {}",
                    1 + legs.len(),
                    t.rank()
                )));
            }
            if t.shape()[0] != phys_dim {
                return Err(Error::Model(format!(
                    "site {coord:?} has physical dimension {}, expected {phys_dim}",
                    t.shape()[0]
                )));
            }
            for &b in &t.shape()[1..] {
                match bond_dim {
                    None => bond_dim = Some(b),
                    Some(d) if d != b => {
                        return Err(Error::Model(format!(
                            "bond mismatch at site {coord:?}: extent {b}, expected {d}"
                        )))
                    }
                    _ => {}
                }
            }
            sites.push(SiteTensor { site: coord, tensor: t });
        }
        Ok(PepsState { lattice, tensors: sites, phys_dim, bond_dim: bond_dim.unwrap_or(1) })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn num_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    pub fn site(&self, index: usize) -> &SiteTensor {
        &self.tensors[index]
    }

    pub fn site_at(&self, coord: &[usize]) -> Result<&SiteTensor> {
        Ok(&self.tensors[self.lattice.index(coord)?])
    }

    /// Copy with the tensor at `index` replaced; the shape must be unchanged.
    pub fn with_tensor(&self, index: usize, tensor: DenseTensor) -> Result<Self> {
        if tensor.shape() != self.tensors[index].tensor.shape() {
            return Err(Error::Model(format!(
                "replacement tensor has shape {:?}, expected {:?}",
                tensor.shape(),
                self.tensors[index].tensor.shape()
            )));
        }
        let mut out = self.clone();
        out.tensors[index].tensor = tensor;
        Ok(out)
    }

    /// d^N as a float, for size checks that must not overflow.
    pub fn hilbert_dim(&self) -> f64 {
        (self.phys_dim as f64).powi(self.num_sites() as i32)
    }
}

/// ⊗_v A_v ⊗_e |φ_e⟩ with |φ_e⟩ = D^{-1/2} Σ_i |i,i⟩, unnormalised. Legs of the
/// result are the physical legs in row-major site order.
pub fn build_state_vector(peps: &PepsState) -> Result<DenseTensor> {
    build_state_vector_with(peps, STATE_VECTOR_CUTOFF)
}

pub fn build_state_vector_with(peps: &PepsState, cutoff: usize) -> Result<DenseTensor> {
    let required = peps.hilbert_dim();
    if required > cutoff as f64 {
        return Err(Error::SizeLimit { what: "state vector".into(), required, limit: cutoff });
    }
    let lat = peps.lattice();
    let n = peps.num_sites();
    let edge_label = |id: usize| n + id;
    let mut net = Network::new();
    for s in 0..n {
        let mut labels: Vec<Label> = vec![s];
        labels.extend(lat.legs(s).iter().map(|l| edge_label(l.edge.id(lat.dimension))));
        net.add(peps.site(s).tensor.clone(), labels)?;
    }
    let output: Vec<Label> = (0..n).collect();
    let budget = DEFAULT_BUDGET.max(cutoff);
    let psi = net.contract_all(&output, budget)?;
    let weight = (peps.bond_dim() as f64).powf(-0.5 * lat.num_edges() as f64);
    Ok(psi.scale(C64::new(weight, 0.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub site: Coord,
    pub injective: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// σ_max / σ_min, present iff injective.
    pub kappa: Option<f64>,
}

/// Singular-value analysis of A_v as a map from its virtual legs to its
/// physical leg. σ_min runs over all ∏ bond_dims singular values, so a map
/// into a smaller physical space reports σ_min = 0.
pub fn injectivity_check(t: &SiteTensor) -> InjectivityReport {
    injectivity_check_with(t, INJECTIVITY_RTOL)
}

pub fn injectivity_check_with(t: &SiteTensor, rtol: f64) -> InjectivityReport {
    let (d, v) = (t.phys_dim(), t.virtual_dim());
    let svd = linalg::svd_matrix(d, v, t.tensor.data(), None);
    let (sigma_max, sigma_min) = match svd {
        Ok(f) => {
            let smax = f.sigma_max();
            let smin = if d < v { 0.0 } else { f.s.last().copied().unwrap_or(0.0) };
            (smax, smin)
        }
        Err(_) => (f64::NAN, 0.0),
    };
    let injective = sigma_max.is_finite() && sigma_min > rtol * sigma_max;
    InjectivityReport {
        site: t.site.clone(),
        injective,
        sigma_min,
        sigma_max,
        kappa: injective.then(|| sigma_max / sigma_min),
    }
}

fn region_indices(peps: &PepsState, region: &[Coord]) -> Result<Vec<usize>> {
    let lat = peps.lattice();
    let mut idx: Vec<usize> = region.iter().map(|c| lat.index(c)).collect::<Result<_>>()?;
    idx.sort_unstable();
    if idx.is_empty() {
        return Err(Error::Argument("empty region".into()));
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Argument("region lists a site twice".into()));
    }
    // connectivity by flood fill inside the region
    let mut seen = vec![idx[0]];
    let mut stack = vec![idx[0]];
    while let Some(s) = stack.pop() {
        for n in lat.neighbors(s) {
            if idx.binary_search(&n).is_ok() && !seen.contains(&n) {
                seen.push(n);
                stack.push(n);
            }
        }
    }
    if seen.len() != idx.len() {
        return Err(Error::Argument(format!("region {region:?} is not connected")));
    }
    Ok(idx)
}

/// Merge a connected region into one tensor. The physical leg is the merged
/// physical legs in row-major order; the virtual legs are the legs leaving
/// the region, ordered by site (row-major) and then by the site's leg order.
pub fn block(peps: &PepsState, region: &[Coord]) -> Result<SiteTensor> {
    block_with(peps, region, MAX_BLOCK_SITES)
}

pub fn block_with(peps: &PepsState, region: &[Coord], max_sites: usize) -> Result<SiteTensor> {
    let idx = region_indices(peps, region)?;
    if idx.len() > max_sites {
        return Err(Error::Argument(format!(
            "region of {} sites exceeds the blocking limit of {max_sites}",
            idx.len()
        )));
    }
    let lat = peps.lattice();
    let n = peps.num_sites();
    let mut net = Network::new();
    let mut open_virtual = Vec::new();
    let mut open_dims = Vec::new();
    let mut internal = 0usize;
    let mut fresh = 2 * n * lat.dimension + n;
    for &s in &idx {
        let mut labels = vec![s];
        for (k, leg) in lat.legs(s).iter().enumerate() {
            if idx.binary_search(&leg.neighbor).is_ok() {
                labels.push(n + leg.edge.id(lat.dimension));
                if leg.neighbor > s {
                    internal += 1;
                }
            } else {
                labels.push(fresh);
                open_virtual.push(fresh);
                open_dims.push(peps.site(s).bond_dims()[k]);
                fresh += 1;
            }
        }
        net.add(peps.site(s).tensor.clone(), labels)?;
    }
    let mut output: Vec<Label> = idx.clone();
    output.extend(&open_virtual);
    let t = net.contract_all(&output, DEFAULT_BUDGET)?;
    let weight = (peps.bond_dim() as f64).powf(-0.5 * internal as f64);
    let mut shape = vec![peps.phys_dim().pow(idx.len() as u32)];
    shape.extend(open_dims);
    Ok(SiteTensor { site: lat.coord(idx[0]), tensor: t.scale(C64::new(weight, 0.0)).reshape(shape)? })
}

/// Singletons when every site is injective on its own, otherwise 1×2
/// dominoes (1D) or 2×2 squares (2D), truncated at the lattice edge.
pub fn default_blocking(peps: &PepsState) -> Vec<Vec<Coord>> {
    let lat = peps.lattice();
    if peps.tensors().iter().all(|t| injectivity_check(t).injective) {
        return (0..peps.num_sites()).map(|s| vec![lat.coord(s)]).collect();
    }
    let mut out = Vec::new();
    match lat.dimension {
        1 => {
            let n = lat.extents[0];
            for start in (0..n).step_by(2) {
                out.push((start..(start + 2).min(n)).map(|i| vec![i]).collect());
            }
        }
        _ => {
            let (rows, cols) = (lat.extents[0], lat.extents[1]);
            for r in (0..rows).step_by(2) {
                for c in (0..cols).step_by(2) {
                    let mut region = Vec::new();
                    for rr in r..(r + 2).min(rows) {
                        for cc in c..(c + 2).min(cols) {
                            region.push(vec![rr, cc]);
                        }
                    }
                    out.push(region);
                }
            }
        }
    }
    out
}

/// Largest condition number over the blocked tensors of a partition.
pub fn kappa_star(peps: &PepsState, blocking: &[Vec<Coord>]) -> Result<f64> {
    let mut worst: f64 = 1.0;
    for region in blocking {
        let b = block(peps, region)?;
        let report = injectivity_check(&b);
        match report.kappa {
            Some(k) => worst = worst.max(k),
            None => {
                return Err(Error::NotInjective {
                    what: format!("block {region:?}"),
                    sigma_min: report.sigma_min,
                })
            }
        }
    }
    Ok(worst)
}

/// Apply A⁺ to the physical leg at `phys_axis` of `state`, replacing it by the
/// site's virtual legs (appended at the end, in the site's leg order), and
/// renormalise.
pub fn disentangle_site(state: &DenseTensor, t: &SiteTensor, phys_axis: usize) -> Result<DenseTensor> {
    let report = injectivity_check(t);
    if !report.injective {
        return Err(Error::NotInjective { what: format!("site {:?}", t.site), sigma_min: report.sigma_min });
    }
    if phys_axis >= state.rank() {
        return Err(Error::AxisOutOfBounds { axis: phys_axis, rank: state.rank() });
    }
    let map = t.as_map();
    let (d, v) = map.matrix_dims()?;
    let pinv = linalg::pseudo_inverse(&map, linalg::default_rcond(d, v))?;
    let mut shape = t.bond_dims().to_vec();
    shape.push(d);
    let pinv = pinv.reshape(shape)?;
    let last = pinv.rank() - 1;
    let out = contract(state, &pinv, &[(phys_axis, last)])?;
    let norm = out.norm();
    if !(norm > 0.0) {
        return Err(Error::Numerical("disentangled state has zero norm".into()));
    }
    Ok(out.scale(C64::new(1.0 / norm, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{aklt_chain, product_peps, random_injective_peps};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_state_is_tensor_product_of_site_vectors() {
        let lat = LatticeSpec::grid(2, 2).unwrap();
        let chis = [vec![c(0.6), c(0.8)], vec![c(1.0), c(0.0)], vec![c(0.0), C64::new(0.0, 1.0)], vec![c(0.8), c(-0.6)]];
        let tensors: Vec<DenseTensor> = (0..4)
            .map(|s| {
                let legs = lat.legs(s).len();
                let mut shape = vec![2];
                shape.extend(std::iter::repeat_n(1, legs));
                DenseTensor::new(shape, chis[s].clone()).unwrap()
            })
            .collect();
        let peps = PepsState::new(lat, tensors).unwrap();
        let psi = build_state_vector(&peps).unwrap();
        for i in 0..16 {
            let bits = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
            let expect: C64 = (0..4).map(|s| chis[s][bits[s]]).product();
            assert!((psi.data()[i] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_pair_gives_bell_state() {
        let lat = LatticeSpec::grid(1, 2).unwrap();
        let id = DenseTensor::identity(2);
        let peps = PepsState::new(lat, vec![id.clone(), id]).unwrap();
        let psi = build_state_vector(&peps).unwrap();
        let h = 0.5f64.sqrt();
        let expect = DenseTensor::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).unwrap();
        assert!(psi.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn state_vector_cutoff_is_enforced() {
        let peps = random_injective_peps(&LatticeSpec::grid(5, 5).unwrap(), 2, 2, 0.1, 1).unwrap();
        match build_state_vector(&peps) {
            Err(Error::SizeLimit { required, .. }) => assert_eq!(required, 2f64.powi(25)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bond_mismatch() {
        let lat = LatticeSpec::chain(2).unwrap();
        let a = DenseTensor::zeros(vec![2, 2]);
        let b = DenseTensor::zeros(vec![2, 3]);
        assert!(matches!(PepsState::new(lat, vec![a, b]), Err(Error::Model(_))));
    }

    #[test]
    fn injectivity_examples() {
        let iso = SiteTensor { site: vec![0], tensor: DenseTensor::identity(3) };
        let r = injectivity_check(&iso);
        assert!(r.injective);
        assert!((r.kappa.unwrap() - 1.0).abs() < 1e-14);

        let dup = DenseTensor::from_real(vec![3, 2], &[1.0, 1.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
        let r = injectivity_check(&SiteTensor { site: vec![0], tensor: dup });
        assert!(!r.injective);
        assert!(r.sigma_min < 1e-8 * r.sigma_max);
        assert!(r.kappa.is_none());
    }

    #[test]
    fn aklt_needs_two_site_blocks() {
        let chain = aklt_chain(6).unwrap();
        let bulk = chain.site(2);
        assert_eq!(bulk.tensor.shape(), &[3, 2, 2]);
        assert!(!injectivity_check(bulk).injective);
        let b = block(&chain, &[vec![2], vec![3]]).unwrap();
        assert_eq!(b.tensor.shape(), &[9, 2, 2]);
        let f = linalg::svd_matrix(9, 4, b.as_map().data(), None).unwrap();
        assert_eq!(f.rank, 4);
        assert!(injectivity_check(&b).injective);
    }

    #[test]
    fn block_of_one_site_is_the_site() {
        let peps = random_injective_peps(&LatticeSpec::grid(2, 3).unwrap(), 2, 2, 0.3, 4).unwrap();
        let b = block(&peps, &[vec![1, 1]]).unwrap();
        assert_eq!(b.tensor, peps.site_at(&[1, 1]).unwrap().tensor);
    }

    #[test]
    fn block_of_product_sites_is_product_vector() {
        let chi = [c(0.6), c(0.8)];
        let peps = product_peps(&LatticeSpec::chain(3).unwrap(), &chi).unwrap();
        let b = block(&peps, &[vec![0], vec![1]]).unwrap();
        assert_eq!(b.tensor.shape(), &[4, 1]);
        for i in 0..4 {
            assert!((b.tensor.data()[i] - chi[i / 2] * chi[i % 2]).norm() < 1e-15);
        }
    }

    #[test]
    fn block_rejects_disconnected_and_oversized_regions() {
        let peps = random_injective_peps(&LatticeSpec::grid(3, 3).unwrap(), 2, 2, 0.1, 4).unwrap();
        assert!(matches!(block(&peps, &[vec![0, 0], vec![1, 1]]), Err(Error::Argument(_))));
        let big: Vec<Coord> = (0..3).flat_map(|r| (0..2).map(move |c| vec![r, c])).collect();
        assert!(matches!(block(&peps, &big), Err(Error::Argument(_))));
    }

    #[test]
    fn blocked_tensors_rebuild_the_same_state() {
        // Blocking the two ends of a 1×4 chain into dominoes and rebuilding
        // as a 1×2 chain reproduces the state.
        let peps = random_injective_peps(&LatticeSpec::chain(4).unwrap(), 2, 2, 0.4, 17).unwrap();
        let left = block(&peps, &[vec![0], vec![1]]).unwrap();
        let right = block(&peps, &[vec![2], vec![3]]).unwrap();
        let coarse = PepsState::new(LatticeSpec::chain(2).unwrap(), vec![left.tensor, right.tensor]).unwrap();
        let fine_psi = build_state_vector(&peps).unwrap();
        let coarse_psi = build_state_vector(&coarse).unwrap();
        assert!(coarse_psi.max_abs_diff(&fine_psi.reshape(vec![4, 4]).unwrap()) < 1e-10 * coarse_psi.norm());
    }

    #[test]
    fn kappa_star_is_scale_invariant() {
        let lat = LatticeSpec::chain(3).unwrap();
        let peps = random_injective_peps(&lat, 2, 4, 0.5, 3).unwrap();
        let singles: Vec<Vec<Coord>> = (0..3).map(|s| vec![vec![s]]).collect();
        let k0 = kappa_star(&peps, &singles).unwrap();
        let scaled = peps.with_tensor(1, peps.site(1).tensor.scale(c(5.0))).unwrap();
        let k1 = kappa_star(&scaled, &singles).unwrap();
        assert!((k0 - k1).abs() <= 1e-10 * k0);
    }

    #[test]
    fn kappa_star_of_isometries_is_one() {
        // d = 4, D = 2 chain: ends embed C^2, the middle is a unitary on C^4.
        let lat = LatticeSpec::chain(3).unwrap();
        let end = DenseTensor::from_fn_matrix(4, 2, |i, j| if i == 2 * j { c(1.0) } else { c(0.0) });
        let mid = DenseTensor::identity(4).reshape(vec![4, 2, 2]).unwrap();
        let peps = PepsState::new(lat, vec![end.clone(), mid, end]).unwrap();
        let singles: Vec<Vec<Coord>> = (0..3).map(|s| vec![vec![s]]).collect();
        assert!((kappa_star(&peps, &singles).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_star_names_non_injective_block() {
        let peps = random_injective_peps(&LatticeSpec::grid(3, 3).unwrap(), 2, 2, 0.1, 42).unwrap();
        match kappa_star(&peps, &[vec![vec![1, 1]]]) {
            Err(Error::NotInjective { what, .. }) => assert!(what.contains("[1, 1]")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disentangling_identity_site_recovers_pair() {
        let lat = LatticeSpec::grid(1, 2).unwrap();
        let id = DenseTensor::identity(2);
        let peps = PepsState::new(lat, vec![id.clone(), id]).unwrap();
        let psi = build_state_vector(&peps).unwrap();
        let out = disentangle_site(&psi, peps.site(1), 1).unwrap();
        let h = 0.5f64.sqrt();
        let expect = DenseTensor::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).unwrap();
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn disentangling_product_site_drops_trivial_leg() {
        let chi = [c(0.6), C64::new(0.0, 0.8)];
        let peps = product_peps(&LatticeSpec::chain(2).unwrap(), &chi).unwrap();
        let psi = build_state_vector(&peps).unwrap();
        let out = disentangle_site(&psi, peps.site(0), 0).unwrap();
        assert_eq!(out.shape(), &[2, 1]);
        let expect = DenseTensor::new(vec![2, 1], chi.to_vec()).unwrap();
        assert!((out.inner(&expect).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disentangle_rejects_non_injective_site() {
        let chain = aklt_chain(4).unwrap();
        let psi = build_state_vector(&chain).unwrap();
        assert!(matches!(disentangle_site(&psi, chain.site(1), 1), Err(Error::NotInjective { .. })));
    }
}
