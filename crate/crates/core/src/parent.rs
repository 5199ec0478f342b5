//! Frustration-free parent Hamiltonians of open MPS chains and their gaps.
//!
//! Each local term projects onto the complement of the image of a blocked
//! window of the chain. Prefix chains keep their dangling right bond as an
//! extra physical leg, so every prefix state is a ground state of its own
//! parent Hamiltonian.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::lowest_eigenpair;
use crate::linalg::{self, INJECTIVITY_RTOL};
use crate::par;
use crate::peps::PepsState;
use crate::tensor::{contract, DenseTensor};

/// Full spectra are computed densely up to this Hilbert-space dimension.
pub const DENSE_CUTOFF: usize = 512;
/// Largest Hilbert space handled at all (iteratively above the dense cutoff).
pub const ITERATIVE_CUTOFF: usize = 1 << 20;
/// Residual demanded of iterative eigenpairs.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Gaps below this are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// An open chain as tensors t[phys, left, right]; the outer bonds have
/// extent 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    tensors: Vec<DenseTensor>,
}

impl Chain {
    pub fn from_mps(mps: &PepsState) -> Result<Self> {
        let lat = mps.lattice();
        if lat.dimension != 1 {
            return Err(Error::Unsupported("parent Hamiltonians are built for 1D chains only".into()));
        }
        let n = mps.num_sites();
        let tensors = (0..n)
            .map(|s| {
                let t = &mps.site(s).tensor;
                let d = t.shape()[0];
                match (n, s) {
                    (1, _) => t.clone().reshape(vec![d, 1, 1]),
                    (_, 0) => t.clone().reshape(vec![d, 1, t.shape()[1]]),
                    (_, s) if s + 1 == n => t.clone().reshape(vec![d, t.shape()[1], 1]),
                    _ => Ok(t.clone()),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Chain { tensors })
    }

    /// First `t` sites; the last one's right bond becomes part of its
    /// physical leg.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        if t == 0 || t > self.len() {
            return Err(Error::Argument(format!("prefix of length {t} of a {}-site chain", self.len())));
        }
        let mut tensors = self.tensors[..t].to_vec();
        let last = tensors.pop().expect("t ≥ 1");
        let (d, l, r) = (last.shape()[0], last.shape()[1], last.shape()[2]);
        tensors.push(last.permute(&[0, 2, 1])?.reshape(vec![d * r, l, 1])?);
        Ok(Chain { tensors })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.shape()[0]).collect()
    }

    pub fn hilbert_dim(&self) -> f64 {
        self.phys_dims().iter().map(|&d| d as f64).product()
    }

    /// Window `start..start+len` as a map from (left bond, right bond) to the
    /// merged physical space: shape [P, L·R].
    pub fn window_map(&self, start: usize, len: usize) -> Result<DenseTensor> {
        if len == 0 || start + len > self.len() {
            return Err(Error::Argument(format!("window {start}+{len} of a {}-site chain", self.len())));
        }
        let mut acc = self.tensors[start].clone();
        for t in &self.tensors[start + 1..start + len] {
            // [P, l, r] · [d, r, r'] → [P, l, d, r'] → [P·d, l, r']
            let next = contract(&acc, t, &[(2, 1)])?.permute(&[0, 2, 1, 3])?;
            let s = next.shape().to_vec();
            acc = next.reshape(vec![s[0] * s[1], s[2], s[3]])?;
        }
        let s = acc.shape().to_vec();
        acc.reshape(vec![s[0], s[1] * s[2]])
    }

    /// The (unnormalised) state of the whole chain.
    pub fn state(&self) -> Result<Vec<C64>> {
        if self.hilbert_dim() > ITERATIVE_CUTOFF as f64 {
            return Err(Error::SizeLimit {
                what: "chain state".into(),
                required: self.hilbert_dim(),
                limit: ITERATIVE_CUTOFF,
            });
        }
        Ok(self.window_map(0, self.len())?.into_data())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub left_site: usize,
    /// Physical dimensions of the sites the term acts on.
    pub dims: Vec<usize>,
    pub projector: DenseTensor,
}

impl LocalTerm {
    pub fn rank(&self) -> usize {
        let n = self.projector.shape()[0];
        (0..n).map(|i| self.projector.data()[i * n + i].re).sum::<f64>().round() as usize
    }
}

fn window_term(chain: &Chain, start: usize, len: usize) -> Result<LocalTerm> {
    let map = chain.window_map(start, len)?;
    let (p, v) = map.matrix_dims()?;
    let f = linalg::svd_matrix(p, v, map.data(), None)?;
    let smin = if p < v { 0.0 } else { f.s.last().copied().unwrap_or(0.0) };
    if !(smin > INJECTIVITY_RTOL * f.sigma_max()) {
        return Err(Error::NotInjective { what: format!("window of sites {start}..{}", start + len - 1), sigma_min: smin });
    }
    // 1 − U U† over the v image directions
    let u = &f.u;
    let proj = DenseTensor::from_fn_matrix(p, p, |a, b| {
        let img: C64 = (0..v).map(|k| u.get(&[a, k]) * u.get(&[b, k]).conj()).sum();
        let id = if a == b { 1.0 } else { 0.0 };
        C64::new(id, 0.0) - img
    });
    Ok(LocalTerm { left_site: start, dims: chain.phys_dims()[start..start + len].to_vec(), projector: proj })
}

/// Terms of a chain for a fixed window length.
pub fn chain_terms(chain: &Chain, block: usize) -> Result<Vec<LocalTerm>> {
    if block == 0 || block > chain.len() {
        return Err(Error::Argument(format!("window length {block} on a {}-site chain", chain.len())));
    }
    (0..=chain.len() - block).map(|s| window_term(chain, s, block)).collect()
}

/// Window length 2, raised to 3 when some 2-window is not injective.
pub fn chain_terms_auto(chain: &Chain) -> Result<(Vec<LocalTerm>, usize)> {
    match chain_terms(chain, 2.min(chain.len())) {
        Ok(t) => Ok((t, 2)),
        Err(Error::NotInjective { .. }) if chain.len() >= 3 => Ok((chain_terms(chain, 3)?, 3)),
        Err(e) => Err(e),
    }
}

pub fn parent_terms(mps: &PepsState, block: usize) -> Result<Vec<LocalTerm>> {
    chain_terms(&Chain::from_mps(mps)?, block)
}

/// H v for H = Σ terms on a chain with the given physical dimensions.
pub fn apply_hamiltonian(terms: &[LocalTerm], dims: &[usize], v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for t in terms {
        let mid: usize = t.dims.iter().product();
        let right: usize = dims[t.left_site + t.dims.len()..].iter().product();
        let p = t.projector.data();
        // A chunk covers `rows` consecutive (l, m) rows of `right` entries each.
        let rows = (4096 / right).max(1);
        par::for_each_chunk(&mut out, rows * right, v.len() * mid, |ci, dst| {
            for (k, drow) in dst.chunks_mut(right).enumerate() {
                let row = ci * rows + k;
                let (l, m) = (row / mid, row % mid);
                let prow = &p[m * mid..(m + 1) * mid];
                for (mp, &pv) in prow.iter().enumerate() {
                    if pv.re == 0.0 && pv.im == 0.0 {
                        continue;
                    }
                    let src = &v[(l * mid + mp) * right..(l * mid + mp + 1) * right];
                    for (o, s) in drow.iter_mut().zip(src) {
                        *o += pv * s;
                    }
                }
            }
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub chain_length: usize,
    pub ground_energy: f64,
    pub first_excited: f64,
    pub gap: f64,
    pub ground_fidelity: f64,
    /// ⟨ω|H|ω⟩ / ⟨ω|ω⟩.
    pub state_energy: f64,
    pub method: Method,
    pub window: usize,
    /// min_t Δ_t over the scanned prefixes.
    pub uniform_min_gap: Option<f64>,
    pub prefix_gaps: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

fn gap_of_chain(chain: &Chain, terms: &[LocalTerm], window: usize) -> Result<GapReport> {
    let dims = chain.phys_dims();
    let dim = chain.hilbert_dim();
    if dim > ITERATIVE_CUTOFF as f64 {
        return Err(Error::SizeLimit { what: "chain Hilbert space".into(), required: dim, limit: ITERATIVE_CUTOFF });
    }
    let dim = dim as usize;
    let apply = |v: &[C64]| apply_hamiltonian(terms, &dims, v);
    let (e0, e1, ground, method) = if dim <= DENSE_CUTOFF {
        let mut h = DenseTensor::zeros(vec![dim, dim]);
        for j in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[j] = C64::new(1.0, 0.0);
            for (i, x) in apply(&e).into_iter().enumerate() {
                h.data_mut()[i * dim + j] = x;
            }
        }
        let (vals, vecs) = linalg::hermitian_eigen(&h)?;
        let ground: Vec<C64> = (0..dim).map(|i| vecs.get(&[i, 0])).collect();
        let e1 = vals.get(1).copied().unwrap_or(f64::INFINITY);
        (vals[0], e1, ground, Method::Dense)
    } else {
        let (e0, v0) = lowest_eigenpair(apply, dim, &[], RESIDUAL_TOL, 0x5eed)?;
        let (e1, _) = lowest_eigenpair(apply, dim, std::slice::from_ref(&v0), RESIDUAL_TOL, 0x5eed + 1)?;
        (e0, e1, v0, Method::Lanczos)
    };
    let psi = chain.state()?;
    let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if !(norm_sq > 0.0) {
        return Err(Error::Numerical("chain state vanishes".into()));
    }
    let overlap: C64 = ground.iter().zip(&psi).map(|(g, p)| g.conj() * p).sum();
    let h_psi = apply(&psi);
    let state_energy = psi.iter().zip(&h_psi).map(|(p, h)| p.conj() * h).sum::<C64>().re / norm_sq;
    let gap = (e1 - e0).max(0.0);
    let mut warnings = Vec::new();
    if gap < DEGENERACY_TOL {
        warnings.push(format!("degenerate ground space at N = {}: gap {gap:e}", chain.len()));
    }
    Ok(GapReport {
        chain_length: chain.len(),
        ground_energy: e0,
        first_excited: e1,
        gap,
        ground_fidelity: (overlap.norm_sqr() / norm_sq).min(1.0),
        state_energy,
        method,
        window,
        uniform_min_gap: None,
        prefix_gaps: Vec::new(),
        warnings,
    })
}

/// E₀, E₁ and the gap of Σ terms on `n` sites, with the overlap of the
/// ground vector with the chain state.
pub fn assemble_and_gap(terms: &[LocalTerm], n: usize, mps: &PepsState) -> Result<GapReport> {
    let chain = Chain::from_mps(mps)?;
    if chain.len() != n {
        return Err(Error::Argument(format!("chain has {} sites, asked for {n}", chain.len())));
    }
    let dims = chain.phys_dims();
    for t in terms {
        if t.left_site + t.dims.len() > n || t.dims != dims[t.left_site..t.left_site + t.dims.len()] {
            return Err(Error::Argument(format!("term at site {} does not fit the chain", t.left_site)));
        }
    }
    let window = terms.first().map_or(0, |t| t.dims.len());
    gap_of_chain(&chain, terms, window)
}

/// Gap of every prefix Hamiltonian H_t for t = 2..=max_n. The reported
/// fields other than the prefix list describe t = max_n. A positive minimum
/// is numerical evidence of a uniform gap on the scanned range, not a proof.
pub fn uniform_gap_scan(mps: &PepsState, max_n: usize) -> Result<GapReport> {
    let chain = Chain::from_mps(mps)?;
    if max_n < 2 || max_n > chain.len() {
        return Err(Error::Argument(format!(
            "scan length {max_n} must lie in 2..={} for this chain",
            chain.len()
        )));
    }
    let mut prefix_gaps = Vec::new();
    let mut warnings = Vec::new();
    let mut last = None;
    for t in 2..=max_n {
        let pre = chain.prefix(t)?;
        let (terms, window) = chain_terms_auto(&pre)?;
        let r = gap_of_chain(&pre, &terms, window)?;
        prefix_gaps.push((t, r.gap));
        warnings.extend(r.warnings.iter().cloned());
        last = Some(r);
    }
    let mut report = last.expect("at least one prefix");
    report.uniform_min_gap = Some(prefix_gaps.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
    report.prefix_gaps = prefix_gaps;
    report.warnings = warnings;
    Ok(report)
}
