//! Sliding-window convolution and pooling kernels.
//!
//! The crate provides single-channel, stride-1, valid 2-D cross-correlation
//! through several interchangeable kernels:
//!
//! * [`conv2d_reference`]: the naive loop nest, plus a 64-bit
//!   [`oracle_conv2d`] used for verification.
//! * [`conv2d_im2col`]: im2col expansion followed by a blocked GEMM.
//! * [`conv2d_slide_generic`]: vector-slide kernel for filters up to `V + 1`
//!   wide, reading the input in place.
//! * [`conv2d_slide_compound`]: treats several hardware vectors as one long
//!   compound register for arbitrarily wide filters.
//! * [`conv2d_custom3`] / [`conv2d_custom5`]: 3x3 and 5x5 kernels that slide
//!   every input row once and reuse the result across output rows.
//!
//! [`sliding_window_sum`] and [`sliding_window_max`] implement 1-D pooling in
//! `O(log k)` slide-and-combine passes. Every kernel returns exact
//! [`CostCounters`] alongside its output, and [`bench`] drives the timing and
//! verification harness behind the `slideconv` binary.

pub mod bench;
mod error;
pub mod gemm;
pub mod pool;
pub mod reference;
pub mod simd;
pub mod slide;
pub mod tensor;
mod variant;

pub use error::{ConvError, HarnessError, Result};
pub use gemm::{bloat_ratio, conv2d_im2col, gemm, im2col_2d, ColumnMatrix, Matrix};
pub use pool::{sliding_window_max, sliding_window_sum};
pub use reference::{
    conv1d_reference, conv2d_reference, mac_count, max_rel_error, oracle_conv2d, tolerance,
    Tensor64,
};
pub use simd::{slide, Backend, Isa, VectorModel};
pub use slide::{
    conv1d_slide, conv2d_custom3, conv2d_custom5, conv2d_slide_compound, conv2d_slide_generic,
};
pub use tensor::{ConvShape, CostCounters, Filter2D, Tensor2D};
pub use variant::{
    conv2d, conv2d_auto, select_kernel, select_kernel_with, BoundaryPolicy, KernelVariant,
};
