//! Dense single-channel tensors, filters and convolution shapes.

use std::ops::AddAssign;

use rand::Rng;

use crate::error::{ConvError, Result};

/// Row-major 2-D array of `f32`. A height-1 tensor is a 1-D signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2D {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor2D {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(ConvError::DataLength {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            data: vec![0.0; height * width],
        })
    }

    /// A 1-D signal stored as a single row.
    pub fn row(data: Vec<f32>) -> Result<Self> {
        let width = data.len();
        Self::new(1, width, data)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(height, width)?;
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Uniform samples in `[-1, 1]`.
    pub fn random(height: usize, width: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::from_fn(height, width, |_, _| rng.random_range(-1.0f32..=1.0))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.width + c]
    }

    pub fn row_slice(&self, r: usize) -> &[f32] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    /// Sum of all elements accumulated in `f64`.
    pub fn checksum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }
}

/// `kh x kw` filter taps in row-major order, applied without flipping.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter2D {
    kh: usize,
    kw: usize,
    taps: Vec<f32>,
}

impl Filter2D {
    pub fn new(kh: usize, kw: usize, taps: Vec<f32>) -> Result<Self> {
        check_dims(kh, kw)?;
        if taps.len() != kh * kw {
            return Err(ConvError::DataLength {
                height: kh,
                width: kw,
                len: taps.len(),
            });
        }
        Ok(Self { kh, kw, taps })
    }

    /// A single-row filter for 1-D convolution.
    pub fn row(taps: Vec<f32>) -> Result<Self> {
        let kw = taps.len();
        Self::new(1, kw, taps)
    }

    pub fn ones(kh: usize, kw: usize) -> Result<Self> {
        check_dims(kh, kw)?;
        Ok(Self {
            kh,
            kw,
            taps: vec![1.0; kh * kw],
        })
    }

    /// All-zero taps except a 1 at the centre. Requires odd dimensions to be
    /// meaningful; even sizes put the tap at `(kh/2, kw/2)`.
    pub fn delta_center(kh: usize, kw: usize) -> Result<Self> {
        check_dims(kh, kw)?;
        let mut taps = vec![0.0; kh * kw];
        taps[(kh / 2) * kw + kw / 2] = 1.0;
        Ok(Self { kh, kw, taps })
    }

    pub fn random(kh: usize, kw: usize, rng: &mut impl Rng) -> Result<Self> {
        check_dims(kh, kw)?;
        let taps = (0..kh * kw)
            .map(|_| rng.random_range(-1.0f32..=1.0))
            .collect();
        Ok(Self { kh, kw, taps })
    }

    pub fn kh(&self) -> usize {
        self.kh
    }

    pub fn kw(&self) -> usize {
        self.kw
    }

    pub fn taps(&self) -> &[f32] {
        &self.taps
    }

    pub fn tap(&self, j: usize, i: usize) -> f32 {
        self.taps[j * self.kw + i]
    }

    pub fn tap_row(&self, j: usize) -> &[f32] {
        &self.taps[j * self.kw..(j + 1) * self.kw]
    }

    pub fn is_square(&self, k: usize) -> bool {
        self.kh == k && self.kw == k
    }
}

/// Geometry of a valid, stride-1 cross-correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvShape {
    pub in_h: usize,
    pub in_w: usize,
    pub kh: usize,
    pub kw: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvShape {
    pub fn new(in_h: usize, in_w: usize, kh: usize, kw: usize) -> Result<Self> {
        check_dims(in_h, in_w)?;
        check_dims(kh, kw)?;
        if kh > in_h || kw > in_w {
            return Err(ConvError::FilterTooLarge { in_h, in_w, kh, kw });
        }
        Ok(Self {
            in_h,
            in_w,
            kh,
            kw,
            out_h: in_h - kh + 1,
            out_w: in_w - kw + 1,
        })
    }

    pub fn of(x: &Tensor2D, f: &Filter2D) -> Result<Self> {
        Self::new(x.height(), x.width(), f.kh(), f.kw())
    }

    pub fn taps(&self) -> usize {
        self.kh * self.kw
    }

    pub fn out_len(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn in_len(&self) -> usize {
        self.in_h * self.in_w
    }
}

/// Exact, deterministic operation counts for one kernel invocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CostCounters {
    /// Multiply-accumulates. FLOPs are twice this.
    pub macs: u64,
    /// Vector slides at an offset other than 0 or V.
    pub slides: u64,
    /// Vector loads, including zero-padded partial loads.
    pub loads: u64,
    /// Elements written into an im2col column matrix.
    pub im2col_elems: u64,
    /// Slide-and-combine passes made by the pooling operations.
    pub stages: u64,
}

impl CostCounters {
    pub fn flops(&self) -> u64 {
        2 * self.macs
    }
}

impl AddAssign for CostCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.macs += rhs.macs;
        self.slides += rhs.slides;
        self.loads += rhs.loads;
        self.im2col_elems += rhs.im2col_elems;
        self.stages += rhs.stages;
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(ConvError::EmptyShape { height, width });
    }
    Ok(())
}
