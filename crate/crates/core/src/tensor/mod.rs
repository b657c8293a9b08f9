//! Dense complex tensor algebra.
//!
//! All tensors are stored in a single canonical element order: the **first
//! index varies fastest** (generalized column-major). For a tensor with shape
//! `(I_1, ..., I_N)`, element `(i_1, ..., i_N)` lives at linear offset
//! `i_1 + I_1*(i_2 + I_2*(i_3 + ...))`. Every operation in the crate, the
//! matrix flattenings used by the dense solvers, and the serialized payloads
//! all use this order.
//!
//! Indices are 0-based throughout.

mod pseudo;

pub use pseudo::PseudoDiagTensor;

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense N-dimensional complex tensor with an explicit shape.
///
/// Operations never broadcast: shape preconditions are checked and violations
/// return [`Error::ShapeMismatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

/// Cyclic shift along one axis: output index `i` takes the value from input
/// index `(i + shift) mod len` (a left cyclic shift for positive `shift`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicShiftSpec {
    pub axis: usize,
    pub shift: i64,
}

/// Number of elements implied by a shape (empty shape = scalar = 1 element).
pub fn element_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Linear offset of a multi-index in canonical (first-index-fastest) order.
pub fn linear_index(shape: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), idx.len());
    let mut off = 0;
    let mut stride = 1;
    for (&i, &dim) in idx.iter().zip(shape) {
        debug_assert!(i < dim);
        off += i * stride;
        stride *= dim;
    }
    off
}

/// Inverse of [`linear_index`].
pub fn unravel_index(shape: &[usize], mut off: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(shape.len());
    for &dim in shape {
        idx.push(off % dim);
        off /= dim;
    }
    idx
}

impl DenseTensor {
    /// Build a tensor from a shape and data in canonical order.
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if element_count(&shape) != data.len() {
            return Err(Error::ShapeMismatch {
                op: "new",
                detail: format!(
                    "shape {:?} implies {} elements, got {}",
                    shape,
                    element_count(&shape),
                    data.len()
                ),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = element_count(&shape);
        Self {
            shape,
            data: vec![Complex64::ZERO; n],
        }
    }

    /// 0-mode tensor holding a single value.
    pub fn scalar(value: Complex64) -> Self {
        Self {
            shape: vec![],
            data: vec![value],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let n = element_count(&shape);
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for (i, dim) in idx.iter_mut().zip(&shape) {
                *i += 1;
                if *i < *dim {
                    break;
                }
                *i = 0;
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[linear_index(&self.shape, idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let off = linear_index(&self.shape, idx);
        self.data[off] = value;
    }

    /// m-mode product with a matrix `M` of shape `(J, I_m)` along `axis`:
    /// `out[i_1,..,j,..,i_N] = sum_{i_m} M[j, i_m] * self[i_1,..,i_m,..,i_N]`.
    pub fn m_mode_product(&self, matrix: &DenseTensor, axis: usize) -> Result<DenseTensor> {
        if matrix.ndim() != 2 {
            return Err(Error::ShapeMismatch {
                op: "m_mode_product",
                detail: format!("operator must be a matrix, got shape {:?}", matrix.shape),
            });
        }
        if axis >= self.ndim() {
            return Err(Error::AxisOutOfRange {
                axis,
                ndim: self.ndim(),
            });
        }
        let rows = matrix.shape[0];
        let cols = matrix.shape[1];
        let i_m = self.shape[axis];
        if cols != i_m {
            return Err(Error::ShapeMismatch {
                op: "m_mode_product",
                detail: format!(
                    "matrix has {} columns, axis {} has size {}",
                    cols, axis, i_m
                ),
            });
        }

        let pre: usize = self.shape[..axis].iter().product();
        let post: usize = self.shape[axis + 1..].iter().product();
        let mut out_shape = self.shape.clone();
        out_shape[axis] = rows;
        let mut out = vec![Complex64::ZERO; pre * rows * post];

        // self[a + pre*(i + i_m*c)], out[a + pre*(j + rows*c)], M[j + rows*i]
        for c in 0..post {
            for i in 0..i_m {
                let src = &self.data[pre * (i + i_m * c)..pre * (i + i_m * c) + pre];
                for j in 0..rows {
                    let w = matrix.data[j + rows * i];
                    let dst = &mut out[pre * (j + rows * c)..pre * (j + rows * c) + pre];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        DenseTensor::new(out_shape, out)
    }

    /// Einstein product contracting the last `k` modes of `self` with the
    /// first `k` modes of `other`:
    /// `out[i.., p..] = sum_{j..} self[i.., j..] * other[j.., p..]`.
    pub fn einstein_product(&self, other: &DenseTensor, k: usize) -> Result<DenseTensor> {
        if k == 0 || k > self.ndim() || k > other.ndim() {
            return Err(Error::ShapeMismatch {
                op: "einstein_product",
                detail: format!(
                    "cannot contract {} modes between {}-mode and {}-mode tensors",
                    k,
                    self.ndim(),
                    other.ndim()
                ),
            });
        }
        let m = self.ndim() - k;
        if self.shape[m..] != other.shape[..k] {
            return Err(Error::ShapeMismatch {
                op: "einstein_product",
                detail: format!(
                    "contracted modes {:?} vs {:?}",
                    &self.shape[m..],
                    &other.shape[..k]
                ),
            });
        }
        let lead: usize = self.shape[..m].iter().product();
        let contracted: usize = self.shape[m..].iter().product();
        let trail: usize = other.shape[k..].iter().product();

        let mut out_shape = self.shape[..m].to_vec();
        out_shape.extend_from_slice(&other.shape[k..]);
        let mut out = vec![Complex64::ZERO; lead * trail];

        // Column-major GEMM: out[i + lead*p] += self[i + lead*j] * other[j + contracted*p]
        for p in 0..trail {
            for j in 0..contracted {
                let w = other.data[j + contracted * p];
                if w == Complex64::ZERO {
                    continue;
                }
                let src = &self.data[lead * j..lead * j + lead];
                let dst = &mut out[lead * p..lead * p + lead];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        DenseTensor::new(out_shape, out)
    }

    /// Outer product: `out[i.., j..] = self[i..] * other[j..]`.
    pub fn outer_product(&self, other: &DenseTensor) -> DenseTensor {
        let mut out_shape = self.shape.clone();
        out_shape.extend_from_slice(&other.shape);
        let mut out = Vec::with_capacity(self.len() * other.len());
        for y in &other.data {
            for x in &self.data {
                out.push(x * y);
            }
        }
        DenseTensor {
            shape: out_shape,
            data: out,
        }
    }

    /// M-Hermitian: swap the first `m` modes with the remaining modes and
    /// conjugate every entry. Applying it twice (with complementary mode
    /// counts) is the identity.
    pub fn m_hermitian(&self, m: usize) -> Result<DenseTensor> {
        if m >= self.ndim() {
            return Err(Error::AxisOutOfRange {
                axis: m,
                ndim: self.ndim(),
            });
        }
        let lead: usize = self.shape[..m].iter().product();
        let trail: usize = self.shape[m..].iter().product();
        let mut out_shape = self.shape[m..].to_vec();
        out_shape.extend_from_slice(&self.shape[..m]);
        let mut out = vec![Complex64::ZERO; self.len()];
        // self[i + lead*j] -> out[j + trail*i], conjugated
        for j in 0..trail {
            for i in 0..lead {
                out[j + trail * i] = self.data[i + lead * j].conj();
            }
        }
        DenseTensor::new(out_shape, out)
    }

    /// Cyclic shift along one axis; see [`CyclicShiftSpec`].
    pub fn cyclic_shift(&self, spec: CyclicShiftSpec) -> Result<DenseTensor> {
        if spec.axis >= self.ndim() {
            return Err(Error::AxisOutOfRange {
                axis: spec.axis,
                ndim: self.ndim(),
            });
        }
        let len = self.shape[spec.axis];
        let shift = spec.shift.rem_euclid(len as i64) as usize;
        if shift == 0 {
            return Ok(self.clone());
        }
        let pre: usize = self.shape[..spec.axis].iter().product();
        let post: usize = self.shape[spec.axis + 1..].iter().product();
        let mut out = vec![Complex64::ZERO; self.len()];
        for c in 0..post {
            for i in 0..len {
                let src_i = (i + shift) % len;
                let src = &self.data[pre * (src_i + len * c)..pre * (src_i + len * c) + pre];
                let dst = &mut out[pre * (i + len * c)..pre * (i + len * c) + pre];
                dst.copy_from_slice(src);
            }
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: out,
        })
    }

    /// Trace of a square tensor (first half of the modes mirror the second
    /// half): sum of the pseudo-diagonal entries.
    pub fn trace(&self) -> Result<Complex64> {
        if self.ndim() % 2 != 0 || self.ndim() == 0 {
            return Err(Error::NotSquare(format!(
                "trace needs an even positive mode count, got {}",
                self.ndim()
            )));
        }
        let m = self.ndim() / 2;
        if self.shape[..m] != self.shape[m..] {
            return Err(Error::NotSquare(format!(
                "mode sizes {:?} vs {:?}",
                &self.shape[..m],
                &self.shape[m..]
            )));
        }
        let half: usize = self.shape[..m].iter().product();
        let mut acc = Complex64::ZERO;
        for b in 0..half {
            acc += self.data[b * (1 + half)];
        }
        Ok(acc)
    }

    /// Elementwise conjugate.
    pub fn conj(&self) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &DenseTensor,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Squared 2-norm: sum of |x|^2 over all entries.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Scale entries along `axis` by a vector of per-index weights
    /// (multiplication by a diagonal matrix along that mode).
    pub fn scale_axis(&self, axis: usize, weights: &[Complex64]) -> Result<DenseTensor> {
        if axis >= self.ndim() {
            return Err(Error::AxisOutOfRange {
                axis,
                ndim: self.ndim(),
            });
        }
        if weights.len() != self.shape[axis] {
            return Err(Error::ShapeMismatch {
                op: "scale_axis",
                detail: format!(
                    "{} weights for axis of size {}",
                    weights.len(),
                    self.shape[axis]
                ),
            });
        }
        let pre: usize = self.shape[..axis].iter().product();
        let len = self.shape[axis];
        let post: usize = self.shape[axis + 1..].iter().product();
        let mut out = self.data.clone();
        for c in 0..post {
            for (i, &w) in weights.iter().enumerate() {
                let blk = &mut out[pre * (i + len * c)..pre * (i + len * c) + pre];
                for v in blk {
                    *v *= w;
                }
            }
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: out,
        })
    }

    /// Copy a contiguous index range `[start, start+len)` along `axis`.
    pub fn slice_axis(&self, axis: usize, start: usize, len: usize) -> Result<DenseTensor> {
        if axis >= self.ndim() {
            return Err(Error::AxisOutOfRange {
                axis,
                ndim: self.ndim(),
            });
        }
        if start + len > self.shape[axis] {
            return Err(Error::ShapeMismatch {
                op: "slice_axis",
                detail: format!(
                    "range {}..{} exceeds axis size {}",
                    start,
                    start + len,
                    self.shape[axis]
                ),
            });
        }
        let pre: usize = self.shape[..axis].iter().product();
        let full = self.shape[axis];
        let post: usize = self.shape[axis + 1..].iter().product();
        let mut out_shape = self.shape.clone();
        out_shape[axis] = len;
        let mut out = Vec::with_capacity(pre * len * post);
        for c in 0..post {
            for i in start..start + len {
                out.extend_from_slice(&self.data[pre * (i + full * c)..pre * (i + full * c) + pre]);
            }
        }
        DenseTensor::new(out_shape, out)
    }

    /// Linear indices of non-zero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != Complex64::ZERO)
            .map(|(i, _)| i)
            .collect()
    }

    /// Identity tensor of shape `(half.., half..)`: ones on the
    /// pseudo-diagonal, zero elsewhere.
    pub fn identity_tensor(half_shape: &[usize]) -> DenseTensor {
        let half: usize = half_shape.iter().product();
        let mut shape = half_shape.to_vec();
        shape.extend_from_slice(half_shape);
        let mut data = vec![Complex64::ZERO; half * half];
        for b in 0..half {
            data[b * (1 + half)] = Complex64::ONE;
        }
        DenseTensor { shape, data }
    }
}
