//! Exact expectation values by full contraction, at exponential cost.
//!
//! Two independent routes are available: an explicit state vector (for
//! d^N up to the cutoff) and a full double-layer network contraction (up to
//! the intermediate-size budget). When both fit, both run and must agree.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::doubled::{reduced_density, trace_pair};
use crate::error::{Error, Result};
use crate::lattice::Coord;
use crate::linalg;
use crate::network::DEFAULT_BUDGET;
use crate::observable::Observable;
use crate::peps::{build_state_vector_with, PepsState, STATE_VECTOR_CUTOFF};
use crate::tensor::DenseTensor;

/// Relative agreement demanded between the two oracle routes.
pub const CROSS_CHECK_RTOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OraclePath {
    StateVector,
    Network,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest d^N for the state-vector route.
    pub state_vector_cutoff: usize,
    /// Largest intermediate, in entries, for the network route.
    pub budget: usize,
    /// Run both routes when both fit.
    pub cross_check: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { state_vector_cutoff: STATE_VECTOR_CUTOFF, budget: DEFAULT_BUDGET, cross_check: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: C64,
    /// ⟨ω|ω⟩.
    pub norm_sq: f64,
    pub sites_used: usize,
    pub wall_time: Duration,
    pub path: OraclePath,
}

/// Σ x_i conj(y_i) with Neumaier compensation on both parts. Expectation
/// values of long-range observables cancel strongly in these sums.
fn compensated_dot(x: &[C64], y: &[C64]) -> C64 {
    let mut sum = [0.0f64; 2];
    let mut comp = [0.0f64; 2];
    for (a, b) in x.iter().zip(y) {
        let p = a * b.conj();
        for (k, v) in [p.re, p.im].into_iter().enumerate() {
            let t = sum[k] + v;
            comp[k] += if sum[k].abs() >= v.abs() { (sum[k] - t) + v } else { (v - t) + sum[k] };
            sum[k] = t;
        }
    }
    C64::new(sum[0] + comp[0], sum[1] + comp[1])
}

fn density_from_vector(psi: &DenseTensor, support: &[usize]) -> Result<DenseTensor> {
    let rest: Vec<usize> = (0..psi.rank()).filter(|a| !support.contains(a)).collect();
    let (rows, cols, data) = psi.matricize(support, &rest)?;
    let rows_data: Vec<&[C64]> = data.chunks(cols).collect();
    Ok(DenseTensor::from_fn_matrix(rows, rows, |a, b| compensated_dot(rows_data[a], rows_data[b])))
}

fn ratio(num: C64, den: C64) -> Result<(C64, f64)> {
    if !(den.re > 0.0) || !den.re.is_finite() {
        return Err(Error::Numerical(format!("state norm is {den}")));
    }
    Ok((num / den, den.re))
}

pub fn exact_expectation(peps: &PepsState, obs: &Observable) -> Result<OracleResult> {
    exact_expectation_with(peps, obs, &OracleConfig::default())
}

pub fn exact_expectation_with(peps: &PepsState, obs: &Observable, cfg: &OracleConfig) -> Result<OracleResult> {
    let start = Instant::now();
    let support = obs.indices(peps.lattice(), peps.phys_dim())?;
    let n = peps.num_sites();
    let vector_fits = peps.hilbert_dim() <= cfg.state_vector_cutoff as f64;

    let via_vector = || -> Result<(C64, f64)> {
        let psi = build_state_vector_with(peps, cfg.state_vector_cutoff)?;
        let rho = density_from_vector(&psi, &support)?;
        let (num, den) = trace_pair(&rho, obs.matrix())?;
        ratio(num, den)
    };
    let via_network = || -> Result<(C64, f64)> {
        let rho = reduced_density(peps, &support, &vec![true; n], cfg.budget)?;
        let (num, den) = trace_pair(&rho, obs.matrix())?;
        ratio(num, den)
    };

    let ((value, norm_sq), path) = if vector_fits && cfg.cross_check {
        let (a, b) = crate::par::join(via_vector, via_network);
        let a = a?;
        match b {
            Ok(b) => {
                let scale = a.0.norm().max(b.0.norm()).max(f64::MIN_POSITIVE);
                let dv = (a.0 - b.0).norm();
                let dn = (a.1 - b.1).abs() / a.1.max(b.1);
                if dv > CROSS_CHECK_RTOL * scale + 1e-14 || dn > CROSS_CHECK_RTOL {
                    return Err(Error::Numerical(format!(
                        "oracle routes disagree: state vector {} vs network {}",
                        a.0, b.0
                    )));
                }
                (a, OraclePath::Both)
            }
            Err(Error::Budget { .. }) => (a, OraclePath::StateVector),
            Err(e) => return Err(e),
        }
    } else if vector_fits {
        (via_vector()?, OraclePath::StateVector)
    } else {
        (via_network()?, OraclePath::Network)
    };
    Ok(OracleResult { value, norm_sq, sites_used: n, wall_time: start.elapsed(), path })
}

/// Joint and connected two-point function of single-site observables.
pub fn exact_correlation(peps: &PepsState, oa: &Observable, ob: &Observable) -> Result<(C64, C64)> {
    exact_correlation_with(peps, oa, ob, &OracleConfig::default())
}

pub fn exact_correlation_with(peps: &PepsState, oa: &Observable, ob: &Observable, cfg: &OracleConfig) -> Result<(C64, C64)> {
    if oa.sites().len() != 1 || ob.sites().len() != 1 {
        return Err(Error::Argument("correlations take single-site observables".into()));
    }
    let joint_obs = Observable::product(oa, ob)?;
    let joint = exact_expectation_with(peps, &joint_obs, cfg)?.value;
    let a = exact_expectation_with(peps, oa, cfg)?.value;
    let b = exact_expectation_with(peps, ob, cfg)?.value;
    Ok((joint, joint - a * b))
}

/// One removal step of a disentangling trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub site: Coord,
    /// |⟨O⟩_{ω_{i-1}} − ⟨O⟩_{ω_i}|.
    pub deviation: f64,
    /// Condition number of the removed site map on its support.
    pub kappa: f64,
    /// ⟨O⟩_{ω_i} after the removal.
    pub value: C64,
}

/// Expectation values along the sequence ω_0 = ω, ω_i = site order[i-1]
/// disentangled.
///
/// Disentangling site v replaces A_v by the identity from its virtual legs to
/// a copy of them. In the double layer that leaves a bare identity between
/// ket and bra on each of v's legs, which is the same closure used at the
/// boundary of a patch; ω_i is therefore evaluated as the double layer over
/// the sites not yet removed. When A_v is injective this is exactly
/// A_v⁺ applied to the state.
pub fn disentangling_error_trace(peps: &PepsState, obs: &Observable, order: &[Coord]) -> Result<Vec<TraceStep>> {
    disentangling_error_trace_with(peps, obs, order, DEFAULT_BUDGET)
}

pub fn disentangling_error_trace_with(peps: &PepsState, obs: &Observable, order: &[Coord], budget: usize) -> Result<Vec<TraceStep>> {
    let lat = peps.lattice();
    let support = obs.indices(lat, peps.phys_dim())?;
    let n = peps.num_sites();
    let order_idx: Vec<usize> = order.iter().map(|c| lat.index(c)).collect::<Result<_>>()?;
    for (i, s) in order_idx.iter().enumerate() {
        if support.contains(s) {
            return Err(Error::Argument(format!("order removes observable site {:?}", order[i])));
        }
        if order_idx[..i].contains(s) {
            return Err(Error::Argument(format!("order removes site {:?} twice", order[i])));
        }
    }
    let kappas = order_idx
        .iter()
        .map(|&s| {
            let t = peps.site(s);
            linalg::support_condition_number(&t.as_map()).map_err(|_| Error::NotInjective {
                what: format!("site {:?}", t.site),
                sigma_min: 0.0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut mask = vec![true; n];
    let value_of = |mask: &[bool]| -> Result<C64> {
        let rho = reduced_density(peps, &support, mask, budget)?;
        let (num, den) = trace_pair(&rho, obs.matrix())?;
        Ok(ratio(num, den)?.0)
    };
    let mut prev = value_of(&mask)?;
    let mut out = Vec::with_capacity(order.len());
    for (i, &s) in order_idx.iter().enumerate() {
        mask[s] = false;
        let v = value_of(&mask)?;
        out.push(TraceStep { site: order[i].clone(), deviation: (v - prev).norm(), kappa: kappas[i], value: v });
        prev = v;
    }
    Ok(out)
}
