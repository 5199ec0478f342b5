//! Simulated measurement statistics on the patch state.
//!
//! Outcomes are eigenvalues of the observable, drawn with the Born
//! probabilities of the patch reduced density matrix. The sample count comes
//! from Hoeffding's inequality for variables in [λ_min, λ_max].

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::patch_density;
use crate::linalg;
use crate::network::DEFAULT_BUDGET;
use crate::observable::Observable;
use crate::par;
use crate::peps::PepsState;

/// Samples per RNG stream; batch b uses stream b of the seeded generator.
pub const BATCH: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub mean: f64,
    pub n_samples: usize,
}

/// ⌈ln(2/δ)·range²/(2ε²)⌉.
pub fn hoeffding_samples(range: f64, epsilon: f64, delta: f64) -> usize {
    ((2.0 / delta).ln() * range * range / (2.0 * epsilon * epsilon)).ceil() as usize
}

pub fn sampling_estimate(peps: &PepsState, obs: &Observable, ell: usize, epsilon: f64, delta: f64, seed: u64) -> Result<SampleEstimate> {
    if !obs.is_hermitian() {
        return Err(Error::Argument("sampling needs a Hermitian observable".into()));
    }
    for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Argument(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let rho = patch_density(peps, obs, ell, DEFAULT_BUDGET)?;
    let (lambda, vecs) = linalg::hermitian_eigen(obs.matrix())?;
    let dim = lambda.len();
    let probs: Vec<f64> = (0..dim)
        .map(|k| {
            let mut p = num_complex::Complex64::new(0.0, 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    p += vecs.get(&[a, k]).conj() * rho.get(&[a, b]) * vecs.get(&[b, k]);
                }
            }
            p.re.max(0.0)
        })
        .collect();
    let (lo, hi) = (lambda[0], lambda[dim - 1]);
    let n = hoeffding_samples(hi - lo, epsilon, delta).max(1);
    if hi == lo {
        return Ok(SampleEstimate { mean: lo, n_samples: n });
    }
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Numerical(format!("outcome distribution: {e}")))?;
    let batches = n.div_ceil(BATCH);
    let counts: Vec<Vec<usize>> = par::map_range(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut c = vec![0usize; dim];
        for _ in 0..BATCH.min(n - b * BATCH) {
            c[dist.sample(&mut rng)] += 1;
        }
        c
    });
    let mut total = vec![0usize; dim];
    for c in &counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    let shift: f64 = total.iter().zip(&lambda).map(|(&k, &l)| k as f64 * (l - lo)).sum();
    Ok(SampleEstimate { mean: lo + shift / n as f64, n_samples: n })
}
