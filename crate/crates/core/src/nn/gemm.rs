use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};

use crate::scalar::Scalar;

/// `c = alpha * op(a) * op(b) + beta * c` on row-major buffers, where `op`
/// optionally transposes. `a` is stored `rows_a x cols_a` before `op`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<S: Scalar>(
    alpha: S,
    a: &[S],
    a_shape: (usize, usize),
    trans_a: bool,
    b: &[S],
    b_shape: (usize, usize),
    trans_b: bool,
    beta: S,
    c: &mut [S],
) {
    let a = ArrayView2::from_shape(a_shape, a).expect("gemm lhs shape");
    let b = ArrayView2::from_shape(b_shape, b).expect("gemm rhs shape");
    let a = if trans_a { a.reversed_axes() } else { a };
    let b = if trans_b { b.reversed_axes() } else { b };
    let mut c = ArrayViewMut2::from_shape((a.nrows(), b.ncols()), c).expect("gemm output shape");
    general_mat_mul(alpha, &a, &b, beta, &mut c);
}
