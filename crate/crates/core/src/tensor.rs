//! Dense complex tensors in row-major order and the contraction primitives
//! every other module is built on.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Dense complex multi-index array, row-major, last axis fastest.
///
/// A tensor with an empty shape is a scalar holding one entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

pub(crate) fn product(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Shape(format!("extents must be positive, got {shape:?}")));
        }
        if data.len() != product(&shape) {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {} entries, got {}",
                product(&shape),
                data.len()
            )));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::Numerical("tensor entries must be finite".into()));
        }
        Ok(DenseTensor { shape, data })
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), product(&shape));
        DenseTensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = product(&shape);
        DenseTensor::from_parts(shape, vec![C64::new(0.0, 0.0); n])
    }

    pub fn scalar(value: C64) -> Self {
        DenseTensor::from_parts(Vec::new(), vec![value])
    }

    pub fn from_real(shape: Vec<usize>, data: &[f64]) -> Result<Self> {
        DenseTensor::new(shape, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut t = DenseTensor::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    /// Build a matrix from a closure over (row, col).
    pub fn from_fn_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseTensor::from_parts(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        let mut off = 0;
        for (k, (&i, &e)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < e, "index {i} out of range on axis {k} (extent {e})");
            off = off * e + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Value of a rank-0 or single-entry tensor.
    pub fn scalar_value(&self) -> Option<C64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        if product(&shape) != self.data.len() || shape.contains(&0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(DenseTensor::from_parts(shape, self.data))
    }

    pub fn conj(&self) -> Self {
        DenseTensor::from_parts(self.shape.clone(), self.data.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, factor: C64) -> Self {
        DenseTensor::from_parts(self.shape.clone(), self.data.iter().map(|z| z * factor).collect())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`; shapes must agree.
    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ⟨self|other⟩ with `self` conjugated.
    pub fn inner(&self, other: &DenseTensor) -> C64 {
        assert_eq!(self.data.len(), other.data.len(), "size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Reorder axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        if perm.len() != rank {
            return Err(Error::Shape(format!("permutation {perm:?} for rank {rank}")));
        }
        let mut seen = vec![false; rank];
        for &p in perm {
            if p >= rank {
                return Err(Error::AxisOutOfBounds { axis: p, rank });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Shape(format!("repeated axis in permutation {perm:?}")));
            }
        }
        Ok(self.permute_unchecked(perm))
    }

    pub(crate) fn permute_unchecked(&self, perm: &[usize]) -> Self {
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides = strides(&self.shape);
        let gather: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let n = self.data.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        let rank = new_shape.len();
        // Innermost destination axis is walked in a tight loop.
        let inner_len = *new_shape.last().unwrap_or(&1);
        let inner_stride = *gather.last().unwrap_or(&1);
        let outer_shape = &new_shape[..rank.saturating_sub(1)];
        let outer_gather = &gather[..rank.saturating_sub(1)];
        let chunk_rows = (1usize << 14).div_ceil(inner_len).max(1);
        par::for_each_chunk(&mut out, chunk_rows * inner_len, n, |ci, dst| {
            let first_row = ci * chunk_rows;
            let mut idx = vec![0usize; outer_shape.len()];
            let mut rem = first_row;
            for k in (0..outer_shape.len()).rev() {
                idx[k] = rem % outer_shape[k];
                rem /= outer_shape[k];
            }
            let mut base: usize = idx.iter().zip(outer_gather).map(|(i, s)| i * s).sum();
            for row in dst.chunks_mut(inner_len) {
                let mut src = base;
                for d in row.iter_mut() {
                    *d = self.data[src];
                    src += inner_stride;
                }
                for k in (0..outer_shape.len()).rev() {
                    idx[k] += 1;
                    base += outer_gather[k];
                    if idx[k] < outer_shape[k] {
                        break;
                    }
                    base -= outer_gather[k] * outer_shape[k];
                    idx[k] = 0;
                }
            }
        });
        DenseTensor::from_parts(new_shape, out)
    }

    /// View as a matrix whose rows run over `row_axes` and columns over
    /// `col_axes` (each group in the given order). Returns the permuted tensor
    /// data and the matrix dimensions.
    pub fn matricize(&self, row_axes: &[usize], col_axes: &[usize]) -> Result<(usize, usize, Vec<C64>)> {
        let mut perm = row_axes.to_vec();
        perm.extend_from_slice(col_axes);
        let t = self.permute(&perm)?;
        let rows = row_axes.iter().map(|&a| self.shape[a]).product();
        let cols = col_axes.iter().map(|&a| self.shape[a]).product();
        Ok((rows, cols, t.data))
    }

    /// Rows × cols of a rank-2 tensor.
    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::Shape(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn matmul(&self, other: &DenseTensor) -> Result<DenseTensor> {
        contract(self, other, &[(self.rank().saturating_sub(1), 0)])
    }

    /// Conjugate transpose of a matrix.
    pub fn adjoint(&self) -> Result<DenseTensor> {
        let (r, c) = self.matrix_dims()?;
        Ok(DenseTensor::from_fn_matrix(c, r, |i, j| self.data[j * c + i].conj()))
    }
}

/// Row-major complex matrix product `a (m×k) · b (k×n)`.
pub(crate) fn matmul_raw(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 {
        return out;
    }
    let rows_per_chunk = (par::MIN_PARALLEL_WORK / (k * n).max(1)).max(1);
    par::for_each_chunk(&mut out, rows_per_chunk * n, m * k * n, |ci, dst| {
        let row0 = ci * rows_per_chunk;
        for (r, orow) in dst.chunks_mut(n).enumerate() {
            let arow = &a[(row0 + r) * k..(row0 + r + 1) * k];
            for (p, &ap) in arow.iter().enumerate() {
                if ap.re == 0.0 && ap.im == 0.0 {
                    continue;
                }
                let brow = &b[p * n..(p + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += ap * bv;
                }
            }
        }
    });
    out
}

fn validate_pairs(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<()> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() {
            return Err(Error::AxisOutOfBounds { axis: ia, rank: a.rank() });
        }
        if ib >= b.rank() {
            return Err(Error::AxisOutOfBounds { axis: ib, rank: b.rank() });
        }
        if std::mem::replace(&mut used_a[ia], true) || std::mem::replace(&mut used_b[ib], true) {
            return Err(Error::Argument(format!("axis paired twice in {pairs:?}")));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::DimensionMismatch {
                axis_a: ia,
                extent_a: a.shape[ia],
                axis_b: ib,
                extent_b: b.shape[ib],
            });
        }
    }
    Ok(())
}

/// Sum over the paired axes. The result carries the unpaired axes of `a` in
/// order, followed by the unpaired axes of `b` in order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, axis_pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    validate_pairs(a, b, axis_pairs)?;
    let free_a: Vec<usize> = (0..a.rank()).filter(|i| !axis_pairs.iter().any(|p| p.0 == *i)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|i| !axis_pairs.iter().any(|p| p.1 == *i)).collect();
    let con_a: Vec<usize> = axis_pairs.iter().map(|p| p.0).collect();
    let con_b: Vec<usize> = axis_pairs.iter().map(|p| p.1).collect();

    let mut perm_a = free_a.clone();
    perm_a.extend_from_slice(&con_a);
    let mut perm_b = con_b.clone();
    perm_b.extend_from_slice(&free_b);
    let pa = a.permute_unchecked(&perm_a);
    let pb = b.permute_unchecked(&perm_b);

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = con_a.iter().map(|&i| a.shape[i]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();
    let data = matmul_raw(&pa.data, &pb.data, m, k, n);

    let mut shape: Vec<usize> = free_a.iter().map(|&i| a.shape[i]).collect();
    shape.extend(free_b.iter().map(|&i| b.shape[i]));
    let out = DenseTensor::from_parts(shape, data);
    if !out.is_finite() {
        return Err(Error::Numerical("contraction produced non-finite entries".into()));
    }
    Ok(out)
}

/// Outer product; shape is the concatenation of both shapes.
pub fn tensor_product(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &x in &a.data {
        data.extend(b.data.iter().map(|&y| x * y));
    }
    DenseTensor::from_parts(shape, data)
}

/// Kronecker product of two matrices.
pub fn kron(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let (ra, ca) = a.matrix_dims()?;
    let (rb, cb) = b.matrix_dims()?;
    let t = tensor_product(a, b).permute_unchecked(&[0, 2, 1, 3]);
    t.reshape(vec![ra * rb, ca * cb])
}
