//! Direct convolutions: the 32-bit naive kernel and the 64-bit oracle every
//! other kernel is checked against.

use crate::error::{ConvError, Result};
use crate::tensor::{ConvShape, CostCounters, Filter2D, Tensor2D};

/// Naive valid cross-correlation in `f32`.
///
/// Taps are accumulated in row-major `(j, i)` order starting from zero, the
/// same order every vector kernel in this crate uses.
pub fn conv2d_reference(x: &Tensor2D, f: &Filter2D) -> Result<(Tensor2D, CostCounters)> {
    let shape = ConvShape::of(x, f)?;
    let mut out = vec![0.0f32; shape.out_len()];
    let mut macs = 0u64;
    for r in 0..shape.out_h {
        let out_row = &mut out[r * shape.out_w..(r + 1) * shape.out_w];
        for (c, o) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0f32;
            for j in 0..shape.kh {
                let xs = &x.row_slice(r + j)[c..c + shape.kw];
                for (&w, &v) in f.tap_row(j).iter().zip(xs) {
                    acc += w * v;
                }
            }
            *o = acc;
            macs += shape.taps() as u64;
        }
    }
    let cost = CostCounters {
        macs,
        ..Default::default()
    };
    Ok((
        Tensor2D::from_parts_unchecked(shape.out_h, shape.out_w, out),
        cost,
    ))
}

/// Naive 1-D valid cross-correlation of a single-row signal.
pub fn conv1d_reference(x: &Tensor2D, f: &Filter2D) -> Result<(Tensor2D, CostCounters)> {
    if x.height() != 1 {
        return Err(ConvError::NotARow(x.height()));
    }
    if f.kh() != 1 {
        return Err(ConvError::NotARow(f.kh()));
    }
    conv2d_reference(x, f)
}

/// Row-major `f64` result of [`oracle_conv2d`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor64 {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor64 {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    pub fn checksum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// The same cross-correlation evaluated entirely in `f64`.
pub fn oracle_conv2d(x: &Tensor2D, f: &Filter2D) -> Result<Tensor64> {
    let shape = ConvShape::of(x, f)?;
    let xd = x.data();
    let fd = f.taps();
    let mut data = Vec::with_capacity(shape.out_len());
    for r in 0..shape.out_h {
        for c in 0..shape.out_w {
            let mut acc = 0.0f64;
            for j in 0..shape.kh {
                for i in 0..shape.kw {
                    acc += fd[j * shape.kw + i] as f64 * xd[(r + j) * shape.in_w + c + i] as f64;
                }
            }
            data.push(acc);
        }
    }
    Ok(Tensor64 {
        height: shape.out_h,
        width: shape.out_w,
        data,
    })
}

/// Multiply-accumulates in one valid convolution of `shape`.
pub fn mac_count(shape: &ConvShape) -> u64 {
    (shape.out_h * shape.out_w * shape.kh * shape.kw) as u64
}

/// Elementwise error bound against the oracle for a `kh x kw` filter with
/// inputs and taps in `[-1, 1]`.
pub fn tolerance(kh: usize, kw: usize) -> f64 {
    1e-5 * f64::max(1.0, (kh * kw) as f64 / 64.0)
}

/// Largest `|got - want| / max(1, |want|)` over all elements. Shape
/// mismatches report infinity.
pub fn max_rel_error(got: &Tensor2D, want: &Tensor64) -> f64 {
    if got.height() != want.height || got.width() != want.width {
        return f64::INFINITY;
    }
    got.data()
        .iter()
        .zip(&want.data)
        .map(|(&g, &w)| {
            let err = (g as f64 - w).abs() / w.abs().max(1.0);
            if err.is_nan() {
                f64::INFINITY
            } else {
                err
            }
        })
        .fold(0.0, f64::max)
}
