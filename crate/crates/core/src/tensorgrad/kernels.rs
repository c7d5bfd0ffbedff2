//! Unfold/fold helpers shared by the convolution ops.
//!
//! For a plane of `channels × len` samples, column `t` of row `c·K + k` holds
//! the sample at position `t·stride + k − pad` (zero outside `[0, len)`).

use super::Scalar;

/// Range of `t` for which `t·stride + k − pad` lands inside `[0, len)`.
#[inline]
fn valid_range(k: usize, stride: usize, pad: usize, len: usize, n_pos: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    let hi = if len + pad > k { (len + pad - k).div_ceil(stride) } else { 0 };
    (lo.min(n_pos), hi.min(n_pos))
}

pub(crate) fn im2col<T: Scalar>(
    plane: &[T],
    channels: usize,
    len: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    n_pos: usize,
    cols: &mut [T],
) {
    debug_assert_eq!(plane.len(), channels * len);
    debug_assert_eq!(cols.len(), channels * kernel * n_pos);
    for c in 0..channels {
        let src = &plane[c * len..(c + 1) * len];
        for k in 0..kernel {
            let row = &mut cols[(c * kernel + k) * n_pos..(c * kernel + k + 1) * n_pos];
            let (lo, hi) = valid_range(k, stride, pad, len, n_pos);
            row[..lo].iter_mut().for_each(|v| *v = T::zero());
            if hi > lo {
                row[hi..].iter_mut().for_each(|v| *v = T::zero());
                let start = lo * stride + k - pad;
                if stride == 1 {
                    row[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                } else {
                    for (dst, s) in row[lo..hi].iter_mut().zip(src[start..].iter().step_by(stride)) {
                        *dst = *s;
                    }
                }
            } else {
                row[lo..].iter_mut().for_each(|v| *v = T::zero());
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters-adds columns back onto the plane.
pub(crate) fn col2im_add<T: Scalar>(
    cols: &[T],
    channels: usize,
    len: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    n_pos: usize,
    plane: &mut [T],
) {
    debug_assert_eq!(plane.len(), channels * len);
    debug_assert_eq!(cols.len(), channels * kernel * n_pos);
    for c in 0..channels {
        let dst = &mut plane[c * len..(c + 1) * len];
        for k in 0..kernel {
            let row = &cols[(c * kernel + k) * n_pos..(c * kernel + k + 1) * n_pos];
            let (lo, hi) = valid_range(k, stride, pad, len, n_pos);
            if hi <= lo {
                continue;
            }
            let start = lo * stride + k - pad;
            for (i, v) in row[lo..hi].iter().enumerate() {
                dst[start + i * stride] += *v;
            }
        }
    }
}
