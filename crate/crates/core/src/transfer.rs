//! Transfer operators on the doubled virtual space, their spectra, and
//! correlation functions built from their powers.
//!
//! Doubled indices are ordered ket-major: the row index of E is J·d_eff + K
//! with J the ket and K the bra multi-index, and likewise for columns.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Direction;
use crate::linalg;
use crate::network::{Label, Network, DEFAULT_BUDGET};
use crate::peps::{PepsState, SiteTensor};
use crate::tensor::{contract, DenseTensor};

/// Largest strip width contracted exactly.
pub const MAX_STRIP_WIDTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    MpsSite,
    StripColumn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferOperator {
    pub matrix: DenseTensor,
    pub d_eff: usize,
    pub origin: Origin,
}

impl TransferOperator {
    pub fn dim(&self) -> usize {
        self.d_eff * self.d_eff
    }

    /// E[(j1,k1),(j2,k2)] = conj E[(k1,j1),(k2,j2)].
    pub fn swap_conj_defect(&self) -> f64 {
        let d = self.d_eff;
        let n = self.dim();
        let m = self.matrix.data();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            let rs = (r % d) * d + r / d;
            for c in 0..n {
                let cs = (c % d) * d + c / d;
                worst = worst.max((m[r * n + c] - m[rs * n + cs].conj()).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda1: C64,
    pub lambda2: C64,
    /// |λ₂| / |λ₁|, or 1 when the top is degenerate.
    pub ratio: f64,
    /// −ln(ratio).
    pub delta_bound: f64,
    pub unique_top: bool,
}

fn mps_legs(t: &SiteTensor) -> Result<(usize, usize, usize)> {
    match t.tensor.shape() {
        [d, l, r] => Ok((*d, *l, *r)),
        s => Err(Error::Argument(format!(
            "an MPS transfer operator needs a tensor with two virtual legs, got shape {s:?}"
        ))),
    }
}

/// E = Σ_{i,i'} w_{i',i} A^i ⊗ conj(A^{i'}) with w the identity or a dressing.
fn doubled_mps(t: &SiteTensor, weight: Option<&DenseTensor>) -> Result<TransferOperator> {
    let (d, l, r) = mps_legs(t)?;
    if l != r {
        return Err(Error::Argument(format!("left and right bond dimensions differ ({l} vs {r})")));
    }
    let ket = match weight {
        None => t.tensor.clone(),
        Some(o) => {
            if o.shape() != [d, d] {
                return Err(Error::Argument(format!(
                    "dressing of shape {:?} on physical dimension {d}",
                    o.shape()
                )));
            }
            // (O t)[i', l, r] = Σ_i O[i', i] t[i, l, r]
            contract(o, &t.tensor, &[(1, 0)])?
        }
    };
    // [j1, j2, k1, k2]
    let e = contract(&ket, &t.tensor.conj(), &[(0, 0)])?;
    let e = e.permute(&[0, 2, 1, 3])?.reshape(vec![l * l, l * l])?;
    Ok(TransferOperator { matrix: e, d_eff: l, origin: Origin::MpsSite })
}

pub fn site_transfer_operator(t: &SiteTensor) -> Result<TransferOperator> {
    doubled_mps(t, None)
}

/// Transfer operator with `o` between the ket and bra physical indices.
pub fn dressed_transfer(t: &SiteTensor, o: &DenseTensor) -> Result<TransferOperator> {
    doubled_mps(t, Some(o))
}

/// Column `column` of a 2D PEPS restricted to rows 0..width, transferring
/// from its left bonds to its right bonds. Vertical bonds to rows outside the
/// strip are closed by the identity. Ket multi-index rows are ordered by
/// increasing row (row 0 most significant), then the same for the bra.
pub fn strip_transfer_operator(peps: &PepsState, column: usize, width: usize) -> Result<TransferOperator> {
    strip_with(peps, column, width, None)
}

/// Strip operator with single-site dressings at the given rows.
pub fn strip_with(peps: &PepsState, column: usize, width: usize, dress: Option<(usize, &DenseTensor)>) -> Result<TransferOperator> {
    let lat = peps.lattice();
    if lat.dimension != 2 {
        return Err(Error::Argument("strip transfer operators need a 2D lattice".into()));
    }
    if width > MAX_STRIP_WIDTH {
        return Err(Error::SizeLimit {
            what: format!("strip of width {width}"),
            required: width as f64,
            limit: MAX_STRIP_WIDTH,
        });
    }
    let (rows, cols) = (lat.extents[0], lat.extents[1]);
    if width == 0 || width > rows {
        return Err(Error::Argument(format!("strip width {width} on a lattice with {rows} rows")));
    }
    if column == 0 || column + 1 >= cols {
        return Err(Error::Argument(format!(
            "column {column} has no left or right neighbour ({cols} columns)"
        )));
    }
    let dim = lat.dimension;
    let n = peps.num_sites();
    let left_label = |r: usize, bra: usize| 2 * n * dim + 4 * r + bra;
    let right_label = |r: usize, bra: usize| 2 * n * dim + 4 * r + 2 + bra;
    let mut net = Network::new();
    for r in 0..width {
        let s = lat.index(&[r, column])?;
        let legs = lat.legs(s);
        let m = &peps.site(s).tensor;
        let ket = match dress {
            Some((row, o)) if row == r => contract(o, m, &[(1, 0)])?,
            _ => m.clone(),
        };
        // Trace out-of-strip vertical legs and the physical leg.
        let mut pairs = vec![(0, 0)];
        let mut ket_labels = Vec::new();
        let mut bra_labels = Vec::new();
        for (k, leg) in legs.iter().enumerate() {
            match (leg.axis, leg.dir) {
                (0, _) if lat.coord(leg.neighbor)[0] >= width => pairs.push((k + 1, k + 1)),
                (0, _) => {
                    let id = leg.edge.id(dim);
                    ket_labels.push(2 * id);
                    bra_labels.push(2 * id + 1);
                }
                (_, Direction::Minus) => {
                    ket_labels.push(left_label(r, 0));
                    bra_labels.push(left_label(r, 1));
                }
                (_, Direction::Plus) => {
                    ket_labels.push(right_label(r, 0));
                    bra_labels.push(right_label(r, 1));
                }
            }
        }
        let t = contract(&ket, &m.conj(), &pairs)?;
        let mut labels = ket_labels;
        labels.extend(bra_labels);
        net.add(t, labels)?;
    }
    let mut output: Vec<Label> = (0..width).map(|r| left_label(r, 0)).collect();
    output.extend((0..width).map(|r| left_label(r, 1)));
    output.extend((0..width).map(|r| right_label(r, 0)));
    output.extend((0..width).map(|r| right_label(r, 1)));
    let e = net.contract_all(&output, DEFAULT_BUDGET)?;
    let d_eff = peps.bond_dim().pow(width as u32);
    let e = e.reshape(vec![d_eff * d_eff, d_eff * d_eff])?;
    let weight = (peps.bond_dim() as f64).powi(-((width - 1) as i32));
    Ok(TransferOperator { matrix: e.scale(C64::new(weight, 0.0)), d_eff, origin: Origin::StripColumn })
}

pub fn spectrum(e: &TransferOperator) -> Result<SpectrumReport> {
    let vals = linalg::eigenvalues(&e.matrix)?;
    let lambda1 = vals[0];
    let lambda2 = vals.get(1).copied().unwrap_or(C64::new(0.0, 0.0));
    let (a1, a2) = (lambda1.norm(), lambda2.norm());
    if a1 == 0.0 {
        return Err(Error::Numerical("transfer operator is nilpotent".into()));
    }
    let unique_top = a1 - a2 > 1e-10 * a1;
    let ratio = if unique_top { a2 / a1 } else { 1.0 };
    Ok(SpectrumReport { lambda1, lambda2, ratio, delta_bound: -ratio.ln(), unique_top })
}

fn check_same(ops: &[&TransferOperator]) -> Result<usize> {
    let n = ops[0].matrix.shape()[0];
    for op in ops {
        if op.matrix.shape() != [n, n] {
            return Err(Error::Argument(format!(
                "transfer operators of shapes {:?} and {:?}",
                ops[0].matrix.shape(),
                op.matrix.shape()
            )));
        }
    }
    Ok(n)
}

fn mat_pow(m: &DenseTensor, mut p: usize) -> Result<DenseTensor> {
    let n = m.shape()[0];
    let mut result = DenseTensor::identity(n);
    let mut base = m.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = result.matmul(&base)?;
        }
        p >>= 1;
        if p > 0 {
            base = base.matmul(&base)?;
        }
    }
    Ok(result)
}

fn trace(m: &DenseTensor) -> C64 {
    let n = m.shape()[0];
    (0..n).map(|i| m.data()[i * n + i]).sum()
}

/// Scale shared by all operators of one evaluation so that powers stay O(1).
fn normaliser(e: &TransferOperator) -> Result<C64> {
    let l1 = linalg::eigenvalues(&e.matrix)?[0].norm();
    if l1 == 0.0 {
        return Err(Error::Numerical("transfer operator is nilpotent".into()));
    }
    Ok(C64::new(1.0 / l1, 0.0))
}

/// tr(e_A e^x e_B e^{L−x−2}) / tr(e^L); x counts the transfer operators
/// strictly between the two dressed ones.
pub fn transfer_correlation(e: &TransferOperator, e_oa: &TransferOperator, e_ob: &TransferOperator, x: usize, length: usize) -> Result<C64> {
    check_same(&[e, e_oa, e_ob])?;
    if length < 2 || x > length - 2 {
        return Err(Error::Argument(format!("need 0 ≤ x ≤ L − 2, got x = {x}, L = {length}")));
    }
    let s = normaliser(e)?;
    let (e, ea, eb) = (e.matrix.scale(s), e_oa.matrix.scale(s), e_ob.matrix.scale(s));
    let (ex, rest) = (mat_pow(&e, x)?, mat_pow(&e, length - x - 2)?);
    // The denominator repeats the numerator's multiplication sequence with
    // plain operators, so identity dressings give exactly 1.
    let num = ea.matmul(&ex)?.matmul(&eb)?.matmul(&rest)?;
    let den = trace(&e.matmul(&ex)?.matmul(&e)?.matmul(&rest)?);
    if den.norm() == 0.0 {
        return Err(Error::Numerical("tr(e^L) vanishes".into()));
    }
    Ok(trace(&num) / den)
}

/// tr(e_O e^{L−1}) / tr(e^L).
pub fn transfer_single(e: &TransferOperator, e_o: &TransferOperator, length: usize) -> Result<C64> {
    check_same(&[e, e_o])?;
    if length < 1 {
        return Err(Error::Argument("chain length must be positive".into()));
    }
    let s = normaliser(e)?;
    let (e, eo) = (e.matrix.scale(s), e_o.matrix.scale(s));
    let den = trace(&mat_pow(&e, length)?);
    if den.norm() == 0.0 {
        return Err(Error::Numerical("tr(e^L) vanishes".into()));
    }
    Ok(trace(&eo.matmul(&mat_pow(&e, length - 1)?)?) / den)
}

/// Connected correlator at separation x: the joint value minus the product
/// of the single-site values.
pub fn connected_correlation(e: &TransferOperator, e_oa: &TransferOperator, e_ob: &TransferOperator, x: usize, length: usize) -> Result<C64> {
    let joint = transfer_correlation(e, e_oa, e_ob, x, length)?;
    Ok(joint - transfer_single(e, e_oa, length)? * transfer_single(e, e_ob, length)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate per site, the negated slope of ln|C(x)|.
    pub rate: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
}

/// Least-squares fit of ln|connected correlator| against x.
pub fn decay_fit(e: &TransferOperator, e_oa: &TransferOperator, e_ob: &TransferOperator, x_range: std::ops::RangeInclusive<usize>, length: usize) -> Result<DecayFit> {
    let mut pts = Vec::new();
    for x in x_range {
        let v = connected_correlation(e, e_oa, e_ob, x, length)?.norm();
        pts.push((x, v));
    }
    let scale = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let usable: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.1 > 1e-14 * scale.max(1.0) && p.1 > 0.0)
        .map(|&(x, v)| (x as f64, v.ln()))
        .collect();
    if usable.len() < 2 || usable.len() < pts.len() {
        return Err(Error::DegenerateFit(format!(
            "{} of {} correlators are zero",
            pts.len() - usable.len(),
            pts.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit { rate: -slope, r_squared, points: pts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{aklt_chain, product_peps, random_injective_peps};
    use crate::lattice::LatticeSpec;
    use crate::observable::{pauli, spin1};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_site_is_one() {
        let p = product_peps(&LatticeSpec::chain(3).unwrap(), &[c(0.6), c(0.8)]).unwrap();
        let e = site_transfer_operator(p.site(1)).unwrap();
        assert_eq!(e.matrix.shape(), &[1, 1]);
        assert!((e.matrix.data()[0] - c(1.0)).norm() < 1e-15);
        let s = spectrum(&e).unwrap();
        assert_eq!(s.ratio, 0.0);
        assert!(s.unique_top);
    }

    #[test]
    fn bond_passthrough_gives_identity() {
        // A^i = u_i · 1 with Σ|u_i|² = 1
        let u = [c(0.6), C64::new(0.0, 0.8)];
        let mut t = DenseTensor::zeros(vec![2, 2, 2]);
        for i in 0..2 {
            for j in 0..2 {
                t.set(&[i, j, j], u[i]);
            }
        }
        let e = site_transfer_operator(&SiteTensor { site: vec![1], tensor: t }).unwrap();
        assert!(e.matrix.max_abs_diff(&DenseTensor::identity(4)) < 1e-15);
    }

    #[test]
    fn aklt_spectrum() {
        let chain = aklt_chain(4).unwrap();
        let e = site_transfer_operator(chain.site(1)).unwrap();
        assert!(e.swap_conj_defect() < 1e-12);
        let mut vals: Vec<f64> = linalg::eigenvalues(&e.matrix).unwrap().iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip([-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 1.0]) {
            assert!((v - w).abs() < 1e-12);
        }
        let s = spectrum(&e).unwrap();
        assert!((s.ratio - 1.0 / 3.0).abs() < 1e-10);
        assert!((s.delta_bound - 3f64.ln()).abs() < 1e-9);
        let sz = dressed_transfer(chain.site(1), &spin1("z").unwrap()).unwrap();
        assert!(trace(&sz.matrix).norm() < 1e-14);
        let id = dressed_transfer(chain.site(1), &DenseTensor::identity(3)).unwrap();
        assert_eq!(id.matrix, e.matrix);
        let zero = dressed_transfer(chain.site(1), &DenseTensor::zeros(vec![3, 3])).unwrap();
        assert!(zero.matrix.norm() == 0.0);
        assert!(dressed_transfer(chain.site(1), &DenseTensor::identity(2)).is_err());
    }

    #[test]
    fn aklt_correlation_ratio_and_decay() {
        let chain = aklt_chain(4).unwrap();
        let e = site_transfer_operator(chain.site(1)).unwrap();
        let sz = dressed_transfer(chain.site(1), &spin1("z").unwrap()).unwrap();
        let c2 = transfer_correlation(&e, &sz, &sz, 2, 64).unwrap();
        let c3 = transfer_correlation(&e, &sz, &sz, 3, 64).unwrap();
        assert!((c3 / c2 + 1.0 / 3.0).norm() < 1e-8);
        assert_eq!(transfer_correlation(&e, &e, &e, 5, 20).unwrap(), c(1.0));
        let fit = decay_fit(&e, &sz, &sz, 1..=8, 64).unwrap();
        assert!((fit.rate - 3f64.ln()).abs() < 0.02 * 3f64.ln());
        assert!(transfer_correlation(&e, &sz, &sz, 63, 64).is_err());
    }

    #[test]
    fn product_correlations_vanish() {
        let p = product_peps(&LatticeSpec::chain(3).unwrap(), &[c(1.0), c(0.0)]).unwrap();
        let e = site_transfer_operator(p.site(1)).unwrap();
        let x = dressed_transfer(p.site(1), &pauli("x").unwrap()).unwrap();
        assert!(transfer_correlation(&e, &x, &x, 3, 10).unwrap().norm() < 1e-12);
        let z = dressed_transfer(p.site(1), &pauli("z").unwrap()).unwrap();
        assert!(matches!(decay_fit(&e, &z, &z, 0..=4, 10), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn strip_of_width_one_matches_site_operator() {
        let lat = LatticeSpec::grid(1, 5).unwrap();
        let p = random_injective_peps(&lat, 2, 2, 0.3, 8).unwrap();
        let strip = strip_transfer_operator(&p, 2, 1).unwrap();
        let site = site_transfer_operator(p.site(2)).unwrap();
        assert!(strip.matrix.max_abs_diff(&site.matrix) < 1e-14);
    }

    #[test]
    fn strip_of_perturbed_product() {
        let lat = LatticeSpec::grid(4, 5).unwrap();
        let p = random_injective_peps(&lat, 2, 2, 0.1, 42).unwrap();
        let e = strip_transfer_operator(&p, 2, 4).unwrap();
        assert_eq!(e.d_eff, 16);
        assert!(e.swap_conj_defect() < 1e-12 * e.matrix.norm());
        let s = spectrum(&e).unwrap();
        assert!(s.unique_top);
        assert!(s.lambda1.re > 0.0 && s.lambda1.im.abs() < 1e-10 * s.lambda1.re);
        assert!(strip_transfer_operator(&p, 2, 5).is_err());
        let prod = product_peps(&lat, &[c(0.6), c(0.8)]).unwrap();
        let e1 = strip_transfer_operator(&prod, 1, 4).unwrap();
        assert!((e1.matrix.data()[0] - c(1.0)).norm() < 1e-14);
    }
}
