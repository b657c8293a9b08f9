//! Pseudo-diagonal square tensors.
//!
//! A pseudo-diagonal tensor of half-shape `(I_1..I_M)` is a square 2M-mode
//! tensor that is non-zero only where the first M indices equal the last M.
//! It is represented by its pseudo-diagonal values alone; products with
//! matching tensors reduce to elementwise scaling and the full square tensor
//! is never materialized.

use super::{element_count, DenseTensor};
use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDiagTensor {
    half_shape: Vec<usize>,
    diag: DenseTensor,
    /// Sorted linear indices of the non-zero pseudo-diagonal positions, when
    /// the caller chooses to track them.
    support: Option<Vec<usize>>,
}

impl PseudoDiagTensor {
    pub fn from_diag(diag: DenseTensor) -> Self {
        Self {
            half_shape: diag.shape().to_vec(),
            diag,
            support: None,
        }
    }

    pub fn with_support(diag: DenseTensor) -> Self {
        let support = diag.support();
        Self {
            half_shape: diag.shape().to_vec(),
            diag,
            support: Some(support),
        }
    }

    pub fn identity(half_shape: &[usize]) -> Self {
        let n = element_count(half_shape);
        let diag = DenseTensor::new(half_shape.to_vec(), vec![Complex64::ONE; n])
            .expect("consistent shape");
        Self::from_diag(diag)
    }

    pub fn half_shape(&self) -> &[usize] {
        &self.half_shape
    }

    pub fn diag(&self) -> &DenseTensor {
        &self.diag
    }

    pub fn support(&self) -> Option<&[usize]> {
        self.support.as_deref()
    }

    /// Elementwise reciprocal on non-zero entries, zero elsewhere.
    pub fn pseudo_inverse(&self) -> PseudoDiagTensor {
        let data: Vec<Complex64> = self
            .diag
            .data()
            .iter()
            .map(|&z| {
                if z == Complex64::ZERO {
                    Complex64::ZERO
                } else {
                    Complex64::ONE / z
                }
            })
            .collect();
        let diag = DenseTensor::new(self.half_shape.clone(), data).expect("consistent shape");
        PseudoDiagTensor::with_support(diag)
    }

    /// Sum of the pseudo-diagonal entries.
    pub fn trace(&self) -> Complex64 {
        self.diag.data().iter().sum()
    }

    /// Einstein product `self *_M x` for `x` whose leading M modes match the
    /// half-shape: scales the leading block of `x` elementwise.
    pub fn left_apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let m = self.half_shape.len();
        if x.ndim() < m || x.shape()[..m] != self.half_shape[..] {
            return Err(Error::ShapeMismatch {
                op: "pseudo_diag left_apply",
                detail: format!("half-shape {:?} vs {:?}", self.half_shape, x.shape()),
            });
        }
        let lead = element_count(&self.half_shape);
        let trail = x.len() / lead;
        let mut out = x.data().to_vec();
        for c in 0..trail {
            for (b, &w) in self.diag.data().iter().enumerate() {
                out[b + lead * c] *= w;
            }
        }
        DenseTensor::new(x.shape().to_vec(), out)
    }

    /// Einstein product `x *_M self` for `x` whose trailing M modes match the
    /// half-shape: scales the trailing block of `x` elementwise.
    pub fn right_apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let m = self.half_shape.len();
        if x.ndim() < m || x.shape()[x.ndim() - m..] != self.half_shape[..] {
            return Err(Error::ShapeMismatch {
                op: "pseudo_diag right_apply",
                detail: format!("half-shape {:?} vs {:?}", self.half_shape, x.shape()),
            });
        }
        let trail = element_count(&self.half_shape);
        let lead = x.len() / trail;
        let mut out = x.data().to_vec();
        for (b, &w) in self.diag.data().iter().enumerate() {
            let blk = &mut out[lead * b..lead * b + lead];
            for v in blk {
                *v *= w;
            }
        }
        DenseTensor::new(x.shape().to_vec(), out)
    }

    /// Einstein product of two pseudo-diagonal tensors (elementwise diagonal
    /// product).
    pub fn compose(&self, other: &PseudoDiagTensor) -> Result<PseudoDiagTensor> {
        let diag = self.diag.hadamard(&other.diag)?;
        Ok(PseudoDiagTensor::from_diag(diag))
    }

    /// Materialize the full square 2M-mode tensor. Intended for small oracle
    /// checks only.
    pub fn to_dense(&self) -> DenseTensor {
        let half = element_count(&self.half_shape);
        let mut shape = self.half_shape.clone();
        shape.extend_from_slice(&self.half_shape);
        let mut data = vec![Complex64::ZERO; half * half];
        for (b, &w) in self.diag.data().iter().enumerate() {
            data[b * (1 + half)] = w;
        }
        DenseTensor::new(shape, data).expect("consistent shape")
    }
}
