//! Dense matrix helpers for the size-capped oracle paths.
//!
//! Tensors flatten to matrices in the canonical element order: a 6-mode
//! square tensor of shape (M,K,N_p | M,K,N_p) becomes an A x A column-major
//! matrix with A = M*K*N_p, which is exactly nalgebra's storage order.

use crate::channel::{triple_beam_vector, BeamOperators, SftWindow};
use crate::error::{Error, Result};
use crate::tensor::{unravel_index, DenseTensor};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Observation dimension of a window: M * K * (N_p or N_s).
pub(crate) fn observation_len(ops: &BeamOperators, which: SftWindow) -> usize {
    let n = match which {
        SftWindow::Full => ops.v_t_full.shape()[0],
        SftWindow::Pilot => ops.v_t_pilot.shape()[0],
    };
    ops.v_s.shape()[0] * ops.v_f.shape()[0] * n
}

/// Flatten a tensor to a column vector in canonical order.
pub(crate) fn to_vector(t: &DenseTensor) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(t.data())
}

/// Beam-matrix columns for a sorted list of TB grid cells: an A x |cells|
/// matrix whose columns are the triple-beam vectors.
pub(crate) fn beam_columns(
    ops: &BeamOperators,
    which: SftWindow,
    grid_shape: &[usize],
    cells: &[usize],
) -> DMatrix<Complex64> {
    let a_total = observation_len(ops, which);
    let mut m = DMatrix::zeros(a_total, cells.len());
    for (j, &cell) in cells.iter().enumerate() {
        let idx = unravel_index(grid_shape, cell);
        let v = triple_beam_vector(ops, which, (idx[0], idx[1], idx[2]));
        m.column_mut(j).copy_from_slice(&v);
    }
    m
}

/// Dense SFT covariance of a TB power distribution `w`, as an A x A matrix:
/// `V diag(w) V^H` over the support of `w`.
pub(crate) fn sft_covariance(
    ops: &BeamOperators,
    which: SftWindow,
    w: &DenseTensor,
) -> DMatrix<Complex64> {
    let cells = w.support();
    let v = beam_columns(ops, which, w.shape(), &cells);
    let mut vw = v.clone();
    for (j, &cell) in cells.iter().enumerate() {
        let weight = Complex64::new(w.data()[cell].re, 0.0);
        for e in vw.column_mut(j).iter_mut() {
            *e *= weight;
        }
    }
    &vw * v.adjoint()
}

/// LU solve A X = B.
pub(crate) fn lu_solve(
    a: DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Divergence("singular linear system in dense solve".into()))
}

/// trace(A * B) without forming the product.
pub(crate) fn product_trace(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
