//! Restarted Lanczos for the lowest eigenpair of a Hermitian operator given
//! as a matrix-vector product, optionally restricted to the orthogonal
//! complement of known vectors.

use nalgebra as na;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const KRYLOV_DIM: usize = 80;
pub const MAX_RESTARTS: usize = 200;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalise(w: &mut [C64], against: &[Vec<C64>]) {
    for _ in 0..2 {
        for v in against {
            let p = dot(v, w);
            axpy(w, -p, v);
        }
    }
}

/// Lowest eigenvalue and normalised eigenvector of the Hermitian operator
/// `apply` on the complement of `deflate` (orthonormal vectors), converged
/// to residual norm `tol`.
pub fn lowest_eigenpair<F>(apply: F, dim: usize, deflate: &[Vec<C64>], tol: f64, seed: u64) -> Result<(f64, Vec<C64>)>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    if dim <= deflate.len() {
        return Err(Error::Argument(format!(
            "no room for another eigenvector: dimension {dim}, {} deflated",
            deflate.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    orthogonalise(&mut x, deflate);
    let nx = norm(&x);
    x.iter_mut().for_each(|z| *z /= nx);
    let room = dim - deflate.len();

    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut invariant = false;
        loop {
            let j = basis.len() - 1;
            let mut w = apply(&basis[j]);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            orthogonalise(&mut w, &basis);
            orthogonalise(&mut w, deflate);
            let b = norm(&w);
            let scale = alpha.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if b <= 1e-13 * scale {
                invariant = true;
                break;
            }
            if basis.len() >= KRYLOV_DIM.min(room) {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|z| *z /= b);
            basis.push(w);
        }
        let k = alpha.len();
        let t = na::DMatrix::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = na::SymmetricEigen::try_new(t, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("tridiagonal eigensolver did not converge".into()))?;
        let (imin, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let mut y = vec![C64::new(0.0, 0.0); dim];
        for (i, v) in basis.iter().enumerate() {
            axpy(&mut y, C64::new(eig.eigenvectors[(i, imin)], 0.0), v);
        }
        orthogonalise(&mut y, deflate);
        let ny = norm(&y);
        y.iter_mut().for_each(|z| *z /= ny);
        let mut r = apply(&y);
        let rayleigh = dot(&y, &r).re;
        axpy(&mut r, C64::new(-rayleigh, 0.0), &y);
        orthogonalise(&mut r, deflate);
        if norm(&r) < tol {
            return Ok((rayleigh, y));
        }
        if invariant {
            return Err(Error::Numerical(format!(
                "Krylov space closed with residual {:e} at Ritz value {theta}",
                norm(&r)
            )));
        }
        x = y;
    }
    Err(Error::Numerical(format!("Lanczos did not reach residual {tol:e} after {MAX_RESTARTS} restarts")))
}
