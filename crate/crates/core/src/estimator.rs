//! Patch estimates of local expectation values with their a-priori error
//! bound, at a fixed radius or by an adaptive radius ladder.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::doubled::{reduced_density, trace_pair};
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::DEFAULT_BUDGET;
use crate::observable::Observable;
use crate::patch::{distances, select_patch, Patch};
use crate::peps::PepsState;
use crate::tensor::DenseTensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Clustering-rate constant c in e^{−c·ℓ·Δ}.
    pub c: f64,
    /// Declared uniform gap Δ of the parent-Hamiltonian family.
    pub gap: f64,
    /// Fixed κ_*; when absent it is measured on the ring just outside P.
    pub kappa_star: Option<f64>,
    /// Largest contraction intermediate, in entries.
    pub budget: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { c: 1.0, gap: 1.0, kappa_star: None, budget: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FixedRadius,
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub ell: usize,
    pub value: C64,
    /// |value(ℓ) − value(ℓ−1)|; absent at the first rung.
    pub diff: Option<f64>,
    pub patch_size: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: C64,
    pub radius_used: usize,
    pub bound: f64,
    pub kappa_star: f64,
    pub patch_size: usize,
    pub clipped: bool,
    pub wall_time: Duration,
    pub mode: Mode,
    /// First radius of the two consecutive small differences (adaptive).
    pub converged_at: Option<usize>,
    pub ladder: Vec<LadderStep>,
}

/// max(ℓ,1)^{dim−1} · e^{−c·ℓ·gap} · κ_*² · ‖O‖.
///
/// The boundary count is floored at one so that ℓ = 0 in 2D does not report a
/// zero bound for the single-site patch; for ℓ ≥ 1 this is ℓ^{dim−1}.
pub fn error_bound(ell: usize, lattice_dim: usize, gap: f64, kappa_star: f64, op_norm: f64, c: f64) -> f64 {
    let poly = (ell.max(1) as f64).powi(lattice_dim.max(1) as i32 - 1);
    let k2 = if kappa_star == 0.0 { 0.0 } else { kappa_star * kappa_star };
    poly * (-c * ell as f64 * gap).exp() * k2 * op_norm
}

/// Smallest ℓ ≥ 1 whose [`error_bound`] is at most `epsilon`, capped at `cap`.
pub fn choose_radius(epsilon: f64, kappa_star: f64, gap: f64, op_norm: f64, c: f64, lattice_dim: usize, cap: usize) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::Argument(format!("gap must be positive, got {gap}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Argument(format!("c must be positive, got {c}")));
    }
    if !(kappa_star >= 1.0) || !kappa_star.is_finite() {
        return Err(Error::Argument(format!("kappa_star must be finite and at least 1, got {kappa_star}")));
    }
    if !(op_norm > 0.0) || !op_norm.is_finite() {
        return Err(Error::Argument(format!("operator norm must be positive, got {op_norm}")));
    }
    let mut ell = 1;
    while ell < cap && error_bound(ell, lattice_dim, gap, kappa_star, op_norm, c) > epsilon {
        ell += 1;
    }
    Ok(ell.min(cap))
}

/// Largest support condition number over the sites at distance ℓ + 1 from
/// the support: 0 if there are none, ∞ if one of them is rank deficient.
pub fn ring_kappa(peps: &PepsState, support: &[usize], ell: usize) -> f64 {
    let dist = distances(peps.lattice(), support);
    (0..peps.num_sites())
        .filter(|&s| dist[s] == ell + 1)
        .map(|s| linalg::support_condition_number(&peps.site(s).as_map()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

struct Evaluated {
    value: C64,
    patch: Patch,
    elapsed: Duration,
}

fn evaluate(peps: &PepsState, obs: &Observable, support: &[usize], ell: usize, budget: usize) -> Result<Evaluated> {
    let start = Instant::now();
    let patch = select_patch(peps.lattice(), obs.sites(), ell)?;
    let rho = reduced_density(peps, support, &patch.mask(peps.num_sites()), budget)?;
    let value = value_from_density(&rho, obs.matrix())?;
    Ok(Evaluated { value, patch, elapsed: start.elapsed() })
}

pub(crate) fn value_from_density(rho: &DenseTensor, obs: &DenseTensor) -> Result<C64> {
    let (num, den) = trace_pair(rho, obs)?;
    if !(den.re > 0.0) || !den.re.is_finite() {
        return Err(Error::Numerical(format!("patch normalisation is {den}")));
    }
    Ok(num / den)
}

fn finish(peps: &PepsState, obs: &Observable, support: &[usize], cfg: &EstimatorConfig, ev: Evaluated, mode: Mode) -> Estimate {
    let ell = ev.patch.radius;
    let covered = ev.patch.covers(peps.lattice());
    let kappa = if covered { 0.0 } else { cfg.kappa_star.unwrap_or_else(|| ring_kappa(peps, support, ell)) };
    let bound = if covered {
        0.0
    } else {
        error_bound(ell, peps.lattice().dimension, cfg.gap, kappa, obs.op_norm(), cfg.c)
    };
    Estimate {
        value: ev.value,
        radius_used: ell,
        bound,
        kappa_star: kappa,
        patch_size: ev.patch.len(),
        clipped: ev.patch.clipped,
        wall_time: ev.elapsed,
        mode,
        converged_at: None,
        ladder: Vec::new(),
    }
}

pub fn patch_expectation(peps: &PepsState, obs: &Observable, ell: usize) -> Result<Estimate> {
    patch_expectation_with(peps, obs, ell, &EstimatorConfig::default())
}

/// ⟨O⟩ on the radius-ℓ patch with crossing legs closed by the identity.
pub fn patch_expectation_with(peps: &PepsState, obs: &Observable, ell: usize, cfg: &EstimatorConfig) -> Result<Estimate> {
    let support = obs.indices(peps.lattice(), peps.phys_dim())?;
    let ev = evaluate(peps, obs, &support, ell, cfg.budget)?;
    Ok(finish(peps, obs, &support, cfg, ev, Mode::FixedRadius))
}

/// Reduced density matrix of the patch state on the observable's support,
/// normalised to unit trace.
pub fn patch_density(peps: &PepsState, obs: &Observable, ell: usize, budget: usize) -> Result<DenseTensor> {
    let support = obs.indices(peps.lattice(), peps.phys_dim())?;
    let patch = select_patch(peps.lattice(), obs.sites(), ell)?;
    let rho = reduced_density(peps, &support, &patch.mask(peps.num_sites()), budget)?;
    let (_, tr) = trace_pair(&rho, &DenseTensor::identity(rho.shape()[0]))?;
    if !(tr.re > 0.0) {
        return Err(Error::Numerical(format!("patch normalisation is {tr}")));
    }
    Ok(rho.scale(C64::new(1.0 / tr.re, 0.0)))
}

pub fn adaptive_estimate(peps: &PepsState, obs: &Observable, epsilon: f64) -> Result<Estimate> {
    adaptive_estimate_with(peps, obs, epsilon, &EstimatorConfig::default())
}

/// Radius ladder ℓ = 0, 1, 2, … stopping once two consecutive differences are
/// at most ε/2 or the patch covers the lattice.
pub fn adaptive_estimate_with(peps: &PepsState, obs: &Observable, epsilon: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let support = obs.indices(peps.lattice(), peps.phys_dim())?;
    let mut ladder: Vec<LadderStep> = Vec::new();
    let mut small_run = 0;
    let mut ell = 0;
    loop {
        let ev = match evaluate(peps, obs, &support, ell, cfg.budget) {
            Ok(ev) => ev,
            Err(e) if e.class() == crate::error::ErrorClass::Resource => {
                return Err(Error::LadderExhausted { ladder, source: Box::new(e) })
            }
            Err(e) => return Err(e),
        };
        let diff = ladder.last().map(|p| (ev.value - p.value).norm());
        ladder.push(LadderStep {
            ell,
            value: ev.value,
            diff,
            patch_size: ev.patch.len(),
            wall_time_ms: ev.elapsed.as_secs_f64() * 1e3,
        });
        small_run = match diff {
            Some(d) if d <= epsilon / 2.0 => small_run + 1,
            _ => 0,
        };
        let covered = ev.patch.covers(peps.lattice());
        if small_run >= 2 || covered {
            let converged_at = if small_run >= 2 { ell - 1 } else { ell };
            let mut est = finish(peps, obs, &support, cfg, ev, Mode::Adaptive);
            est.converged_at = Some(converged_at);
            est.wall_time = Duration::from_secs_f64(ladder.iter().map(|s| s.wall_time_ms).sum::<f64>() / 1e3);
            est.ladder = ladder;
            return Ok(est);
        }
        ell += 1;
    }
}
