//! Double-layer (ket ⊗ bra) networks over a subset of sites.
//!
//! Every virtual leg between two retained sites is kept, with ket and bra
//! indices fused into one leg of extent D². A leg leaving the subset is closed
//! by the identity between its ket and bra indices. Physical legs are traced
//! except on the requested support, which stays open and yields a reduced
//! density matrix.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::network::{Label, Network};
use crate::peps::PepsState;
use crate::tensor::{contract, DenseTensor};

/// ρ_X of the double layer restricted to `subset`, with rows (kets) and
/// columns (bras) running over the physical legs of `support` in the given
/// order. Each edge with both endpoints in `subset` carries the pair weight
/// 1/D, so with the full lattice the trace is ⟨ω|ω⟩.
pub fn reduced_density(peps: &PepsState, support: &[usize], subset: &[bool], budget: usize) -> Result<DenseTensor> {
    let lat = peps.lattice();
    let n = peps.num_sites();
    if subset.len() != n {
        return Err(Error::Argument(format!("subset mask has {} entries for {n} sites", subset.len())));
    }
    if let Some(&s) = support.iter().find(|&&s| s >= n || !subset[s]) {
        return Err(Error::Argument(format!("support site {s} is outside the retained sites")));
    }
    let phys_label = |p: usize, bra: usize| n * lat.dimension + 2 * p + bra;
    let mut net = Network::new();
    let mut interior = 0usize;
    for s in (0..n).filter(|&s| subset[s]) {
        let legs = lat.legs(s);
        let kept: Vec<usize> = (0..legs.len()).filter(|&k| subset[legs[k].neighbor]).collect();
        let traced: Vec<usize> = (0..legs.len()).filter(|&k| !subset[legs[k].neighbor]).collect();
        interior += kept.iter().filter(|&&k| legs[k].neighbor > s).count();
        let pos = support.iter().position(|&x| x == s);
        let (tensor, mut labels) = doubled_site(&peps.site(s).tensor, &kept, &traced, pos.is_some())?;
        labels.iter_mut().for_each(|k| *k = legs[*k].edge.id(lat.dimension));
        if let Some(p) = pos {
            let mut l = vec![phys_label(p, 0), phys_label(p, 1)];
            l.extend(labels);
            labels = l;
        }
        net.add(tensor, labels)?;
    }
    let k = support.len();
    let mut output: Vec<Label> = (0..k).map(|p| phys_label(p, 0)).collect();
    output.extend((0..k).map(|p| phys_label(p, 1)));
    let rho = net.contract_all(&output, budget)?;
    let d = peps.phys_dim().pow(k as u32);
    let w = (peps.bond_dim() as f64).powi(-(interior as i32));
    rho.scale(C64::new(w, 0.0)).reshape(vec![d, d])
}

/// Doubled tensor of one site. Returns the tensor and, for each of its
/// virtual legs (after the optional two physical legs), the index of the
/// site leg it fuses.
fn doubled_site(m: &DenseTensor, kept: &[usize], traced: &[usize], open_phys: bool) -> Result<(DenseTensor, Vec<usize>)> {
    let conj = m.conj();
    let mut pairs: Vec<(usize, usize)> = traced.iter().map(|&k| (k + 1, k + 1)).collect();
    if !open_phys {
        pairs.push((0, 0));
    }
    // free axes: [phys?, kept (ket)...] then [phys?, kept (bra)...]
    let t = contract(m, &conj, &pairs)?;
    let off = usize::from(open_phys);
    let half = off + kept.len();
    let mut perm = Vec::with_capacity(2 * half);
    if open_phys {
        perm.extend([0, half]);
    }
    for j in 0..kept.len() {
        perm.extend([off + j, half + off + j]);
    }
    let t = t.permute(&perm)?;
    let mut shape = Vec::new();
    if open_phys {
        shape.extend([m.shape()[0], m.shape()[0]]);
    }
    shape.extend(kept.iter().map(|&k| m.shape()[k + 1].pow(2)));
    Ok((t.reshape(shape)?, kept.to_vec()))
}

/// tr(ρ O) and tr(ρ), both summed row by row so that O = 1 reproduces the
/// trace bit for bit.
pub fn trace_pair(rho: &DenseTensor, obs: &DenseTensor) -> Result<(C64, C64)> {
    let (d, d2) = rho.matrix_dims()?;
    if obs.shape() != [d, d2] {
        return Err(Error::Shape(format!(
            "observable of shape {:?} against a {d}x{d2} density",
            obs.shape()
        )));
    }
    let (r, o) = (rho.data(), obs.data());
    let mut num = C64::new(0.0, 0.0);
    let mut den = C64::new(0.0, 0.0);
    for a in 0..d {
        let mut row = C64::new(0.0, 0.0);
        for b in 0..d {
            row += r[a * d + b] * o[b * d + a];
        }
        num += row;
        den += r[a * d + a];
    }
    Ok((num, den))
}
