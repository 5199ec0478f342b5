//! Matrix factorizations on top of nalgebra: SVD, Moore-Penrose inverse,
//! condition numbers, operator norms and eigen-decompositions.

use nalgebra as na;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Relative cutoff below which a singular value counts as zero when deciding
/// injectivity of a map.
pub const INJECTIVITY_RTOL: f64 = 1e-8;

pub(crate) fn to_na(rows: usize, cols: usize, data: &[C64]) -> na::DMatrix<C64> {
    na::DMatrix::from_row_slice(rows, cols, data)
}

#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseTensor,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    pub v_dag: DenseTensor,
    /// Number of singular values above the cutoff.
    pub rank: usize,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// u · diag(s) · v_dag.
    pub fn reconstruct(&self) -> DenseTensor {
        let (m, k) = self.u.matrix_dims().expect("u is a matrix");
        let (_, n) = self.v_dag.matrix_dims().expect("v_dag is a matrix");
        DenseTensor::from_fn_matrix(m, n, |i, j| {
            (0..k)
                .map(|p| self.u.get(&[i, p]) * self.s[p] * self.v_dag.get(&[p, j]))
                .sum()
        })
    }
}

/// Default relative cutoff max(rows, cols) · machine epsilon.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Thin SVD of a matrix.
pub fn svd_matrix(rows: usize, cols: usize, data: &[C64], rcond: Option<f64>) -> Result<SvdResult> {
    let m = to_na(rows, cols, data);
    let svd = na::linalg::SVD::try_new(m, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD lost U".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD lost V".into()))?;
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].max(0.0)).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite singular values".into()));
    }
    let u = DenseTensor::from_fn_matrix(rows, k, |i, p| u[(i, order[p])]);
    let v_dag = DenseTensor::from_fn_matrix(k, cols, |p, j| v_t[(order[p], j)]);
    let cutoff = rcond.unwrap_or_else(|| default_rcond(rows, cols)) * s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > cutoff).count();
    Ok(SvdResult { u, s, v_dag, rank })
}

/// SVD of `t` viewed as a matrix with `row_axes` as rows and `col_axes` as
/// columns.
pub fn svd(t: &DenseTensor, row_axes: &[usize], col_axes: &[usize], rcond: Option<f64>) -> Result<SvdResult> {
    let (r, c, data) = t.matricize(row_axes, col_axes)?;
    svd_matrix(r, c, &data, rcond)
}

fn svd_of(m: &DenseTensor, rcond: Option<f64>) -> Result<SvdResult> {
    let (r, c) = m.matrix_dims()?;
    svd_matrix(r, c, m.data(), rcond)
}

/// Moore-Penrose inverse; singular values below `rcond · σ_max` are treated
/// as exact zeros.
pub fn pseudo_inverse(m: &DenseTensor, rcond: f64) -> Result<DenseTensor> {
    if rcond < 0.0 || !rcond.is_finite() {
        return Err(Error::Argument(format!("rcond must be a nonnegative number, got {rcond}")));
    }
    let (r, c) = m.matrix_dims()?;
    let f = svd_of(m, Some(rcond))?;
    let cutoff = rcond * f.sigma_max();
    let k = f.s.len();
    // A⁺ = V · diag(1/s) · U†
    Ok(DenseTensor::from_fn_matrix(c, r, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..k {
            if f.s[p] > cutoff && f.s[p] > 0.0 {
                acc += f.v_dag.get(&[p, i]).conj() * f.u.get(&[j, p]).conj() / f.s[p];
            }
        }
        acc
    }))
}

/// σ_max / σ_min over all min(rows, cols) singular values; requires full
/// column rank.
pub fn condition_number(m: &DenseTensor) -> Result<f64> {
    let (r, c) = m.matrix_dims()?;
    let f = svd_of(m, None)?;
    let smax = f.sigma_max();
    let smin = if r < c { 0.0 } else { f.s.last().copied().unwrap_or(0.0) };
    if !(smin > INJECTIVITY_RTOL * smax) {
        return Err(Error::NotInjective { what: format!("{r}x{c} matrix"), sigma_min: smin });
    }
    Ok(smax / smin)
}

/// Condition number of the map restricted to its support: σ_max over the
/// smallest of the leading min(rows, cols) singular values.
///
/// Equals [`condition_number`] for full-column-rank maps. For wide maps it is
/// the condition number of the pseudo-inverse on its range, which is the
/// quantity that controls renormalisation after applying A⁺.
pub fn support_condition_number(m: &DenseTensor) -> Result<f64> {
    let f = svd_of(m, None)?;
    let smax = f.sigma_max();
    let smin = f.s.last().copied().unwrap_or(0.0);
    if !(smin > INJECTIVITY_RTOL * smax) {
        let (r, c) = m.matrix_dims()?;
        return Err(Error::NotInjective {
            what: format!("{r}x{c} matrix on its support"),
            sigma_min: smin,
        });
    }
    Ok(smax / smin)
}

/// Largest singular value of a square matrix.
pub fn operator_norm(m: &DenseTensor) -> Result<f64> {
    let (r, c) = m.matrix_dims()?;
    if r != c {
        return Err(Error::Shape(format!("operator norm needs a square matrix, got {r}x{c}")));
    }
    Ok(svd_of(m, None)?.sigma_max())
}

pub fn is_hermitian(m: &DenseTensor, tol: f64) -> bool {
    let Ok((r, c)) = m.matrix_dims() else { return false };
    if r != c {
        return false;
    }
    let d = m.data();
    (0..r).all(|i| (0..c).all(|j| (d[i * c + j] - d[j * c + i].conj()).norm() <= tol))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending; column
/// `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub fn hermitian_eigen(m: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    let (r, c) = m.matrix_dims()?;
    if r != c {
        return Err(Error::Shape(format!("eigen-decomposition needs a square matrix, got {r}x{c}")));
    }
    let a = to_na(r, c, m.data());
    let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = na::SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let vecs = DenseTensor::from_fn_matrix(r, r, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok((values, vecs))
}

/// All eigenvalues of a general square matrix, sorted by decreasing modulus.
pub fn eigenvalues(m: &DenseTensor) -> Result<Vec<C64>> {
    let (r, c) = m.matrix_dims()?;
    if r != c {
        return Err(Error::Shape(format!("eigenvalues need a square matrix, got {r}x{c}")));
    }
    let schur = na::linalg::Schur::try_new(to_na(r, c, m.data()), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<C64> = (0..r).map(|i| t[(i, i)]).collect();
    if vals.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    vals.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(vals)
}
