//! Dense row-major tensors with one axis per party.
//!
//! The first axis is the slowest-varying one, matching the party-1-major
//! layout used by every serialized tensor and table in this crate.

use std::ops::{AddAssign, Mul};

/// Product of `dims`, the number of stored entries.
pub(crate) fn volume(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Applies the linear map `map` (shape `rows x dims[axis]`, row-major) to one
/// axis of `data`. The returned tensor has `dims[axis]` replaced by `rows`.
pub(crate) fn apply_map<T, M>(data: &[T], dims: &[usize], axis: usize, map: &[M], rows: usize) -> Vec<T>
where
    T: Copy + Default + AddAssign + Mul<M, Output = T>,
    M: Copy,
{
    let cols = dims[axis];
    debug_assert_eq!(map.len(), rows * cols);
    debug_assert_eq!(data.len(), volume(dims));
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = vec![T::default(); outer * rows * inner];
    for o in 0..outer {
        let src = &data[o * cols * inner..(o + 1) * cols * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let drow = &mut dst[r * inner..(r + 1) * inner];
            for c in 0..cols {
                let m = map[r * cols + c];
                let srow = &src[c * inner..(c + 1) * inner];
                for (d, &s) in drow.iter_mut().zip(srow) {
                    *d += s * m;
                }
            }
        }
    }
    out
}

/// Contracts every axis of `data` with the vector of the same position.
pub(crate) fn contract_all(data: &[f64], dims: &[usize], vectors: &[&[f64]]) -> f64 {
    let mut cur = data.to_vec();
    let mut cur_dims = dims.to_vec();
    for axis in (0..dims.len()).rev() {
        cur = apply_map(&cur, &cur_dims, axis, vectors[axis], 1);
        cur_dims[axis] = 1;
    }
    cur[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_on_middle_axis() {
        // 2x2x2 tensor with entry = flat index, summing the middle axis.
        let data: Vec<f64> = (0..8).map(|x| x as f64).collect();
        let out = apply_map(&data, &[2, 2, 2], 1, &[1.0, 1.0], 1);
        assert_eq!(out, vec![0.0 + 2.0, 1.0 + 3.0, 4.0 + 6.0, 5.0 + 7.0]);
    }

    #[test]
    fn full_contraction_matches_sum() {
        let data: Vec<f64> = (0..12).map(|x| x as f64).collect();
        let dims = [3, 4];
        let a = [1.0, -1.0, 2.0];
        let b = [0.5, 0.0, 1.0, -1.0];
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                want += data[i * 4 + j] * a[i] * b[j];
            }
        }
        assert_eq!(contract_all(&data, &dims, &[&a, &b]), want);
    }
}
