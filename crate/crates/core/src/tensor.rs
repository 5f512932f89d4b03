//! Index contractions for small dense 3- and 4-tensors.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};
use num_complex::Complex64;

/// Nonzero entries of each row, in column order.
fn sparse_rows(m: &DMatrix<Complex64>) -> Vec<Vec<(usize, Complex64)>> {
    (0..m.nrows())
        .map(|a| {
            (0..m.ncols())
                .filter_map(|x| {
                    let w = m[(a, x)];
                    (w.re != 0.0 || w.im != 0.0).then_some((x, w))
                })
                .collect()
        })
        .collect()
}

/// `out[.., a, ..] = Σ_x m[(a, x)] t[.., x, ..]` on the given axis.
pub(crate) fn contract3(t: &Array3<Complex64>, m: &DMatrix<Complex64>, axis: usize) -> Array3<Complex64> {
    let (d0, d1, d2) = t.dim();
    let t = t.as_standard_layout();
    let src = t.as_slice().expect("standard layout");
    let strides = [d1 * d2, d2, 1];
    let rows = sparse_rows(m);
    let mut shape = [d0, d1, d2];
    shape[axis] = m.nrows();
    Array3::from_shape_fn((shape[0], shape[1], shape[2]), |(a, b, c)| {
        let idx = [a, b, c];
        let mut base = 0;
        for (ax, (&i, &st)) in idx.iter().zip(&strides).enumerate() {
            if ax != axis {
                base += i * st;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in &rows[idx[axis]] {
            acc += w * src[base + x * strides[axis]];
        }
        acc
    })
}

pub(crate) fn contract4(t: &Array4<Complex64>, m: &DMatrix<Complex64>, axis: usize) -> Array4<Complex64> {
    let (d0, d1, d2, d3) = t.dim();
    let t = t.as_standard_layout();
    let src = t.as_slice().expect("standard layout");
    let strides = [d1 * d2 * d3, d2 * d3, d3, 1];
    let rows = sparse_rows(m);
    let mut shape = [d0, d1, d2, d3];
    shape[axis] = m.nrows();
    Array4::from_shape_fn((shape[0], shape[1], shape[2], shape[3]), |(a, b, c, d)| {
        let idx = [a, b, c, d];
        let mut base = 0;
        for (ax, (&i, &st)) in idx.iter().zip(&strides).enumerate() {
            if ax != axis {
                base += i * st;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in &rows[idx[axis]] {
            acc += w * src[base + x * strides[axis]];
        }
        acc
    })
}

pub(crate) fn to_complex3(t: &Array3<f64>) -> Array3<Complex64> {
    t.mapv(|x| Complex64::new(x, 0.0))
}

pub(crate) fn max_abs3(t: &Array3<Complex64>) -> f64 {
    t.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_abs4(t: &Array4<Complex64>) -> f64 {
    t.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
