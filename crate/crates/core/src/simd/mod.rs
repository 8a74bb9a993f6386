//! Lane-width abstraction shared by the slide kernels.
//!
//! Kernels are written once against [`Simd`] and monomorphized for a scalar
//! emulation backend (`[f32; V]`) and, on x86-64, for SSE/AVX2/AVX-512
//! registers. Both backends use the same lane semantics, so with the same
//! contraction setting they produce bit-identical results.

mod scalar;
#[cfg(target_arch = "x86_64")]
mod x86;

use std::fmt;

use crate::error::{ConvError, Result};
use crate::tensor::CostCounters;

pub(crate) use scalar::Scalar;

/// A vector instruction set, as seen by the kernels.
///
/// Implementors are zero-sized tokens; holding one proves the required CPU
/// features are present.
pub trait Simd: Copy {
    const LANES: usize;
    /// Whether `mul_add` rounds once (fused) or twice.
    const FUSED: bool;
    type Reg: Copy;

    fn zero(self) -> Self::Reg;
    fn splat(self, v: f32) -> Self::Reg;
    /// Loads the first `LANES` elements of `src`.
    fn load(self, src: &[f32]) -> Self::Reg;
    /// Stores into the first `LANES` elements of `dst`.
    fn store(self, dst: &mut [f32], v: Self::Reg);
    fn add(self, a: Self::Reg, b: Self::Reg) -> Self::Reg;
    /// Lane-wise `if a > b { a } else { b }`.
    fn max(self, a: Self::Reg, b: Self::Reg) -> Self::Reg;
    /// `acc + a * b`.
    fn mul_add(self, a: Self::Reg, b: Self::Reg, acc: Self::Reg) -> Self::Reg;
    /// Lanes `offset..offset + LANES` of the concatenation `a ‖ b`.
    /// `offset` must be at most `LANES`.
    fn slide(self, a: Self::Reg, b: Self::Reg, offset: usize) -> Self::Reg;

    /// Loads up to `LANES` elements, zero-filling past the end of `src`.
    #[inline(always)]
    fn load_padded(self, src: &[f32]) -> Self::Reg {
        if src.len() >= Self::LANES {
            self.load(src)
        } else {
            let mut buf = [0.0f32; 64];
            buf[..src.len()].copy_from_slice(src);
            self.load(&buf)
        }
    }

    /// Scalar multiply-accumulate with the same contraction as `mul_add`.
    #[inline(always)]
    fn scalar_mul_add(a: f32, b: f32, acc: f32) -> f32 {
        if Self::FUSED {
            a.mul_add(b, acc)
        } else {
            acc + a * b
        }
    }
}

/// Offsets `0` and `LANES` select one input unchanged and cost nothing.
#[inline(always)]
pub(crate) fn slide_is_counted(offset: usize, lanes: usize) -> bool {
    offset != 0 && offset != lanes
}

/// A computation that can run on any [`Simd`] backend.
pub(crate) trait SimdOp {
    type Output;
    fn run<S: Simd>(self, s: S) -> Self::Output;
}

/// Which register implementation executes the kernels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Hardware registers when the CPU supports the lane count, otherwise
    /// scalar emulation.
    #[default]
    Auto,
    /// Always emulate vectors with arrays.
    Scalar,
    /// Hardware registers; falls back to emulation when unavailable.
    Hardware,
}

/// The instruction set a [`VectorModel`] actually resolves to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Isa {
    Scalar,
    Sse,
    Avx2,
    Avx512,
}

impl fmt::Display for Isa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Isa::Scalar => "scalar",
            Isa::Sse => "sse",
            Isa::Avx2 => "avx2",
            Isa::Avx512 => "avx512",
        })
    }
}

/// Lane count `V` of the (possibly emulated) hardware vector, plus how the
/// kernels should execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VectorModel {
    lanes: usize,
    backend: Backend,
    fused: bool,
}

impl Default for VectorModel {
    fn default() -> Self {
        Self {
            lanes: 16,
            backend: Backend::Auto,
            fused: false,
        }
    }
}

impl VectorModel {
    pub const SUPPORTED_LANES: [usize; 4] = [4, 8, 16, 32];

    pub fn new(lanes: usize) -> Result<Self> {
        if !Self::SUPPORTED_LANES.contains(&lanes) {
            return Err(ConvError::InvalidLanes(lanes));
        }
        Ok(Self {
            lanes,
            ..Self::default()
        })
    }

    /// Scalar emulation at `lanes` width.
    pub fn emulated(lanes: usize) -> Result<Self> {
        Ok(Self::new(lanes)?.with_backend(Backend::Scalar))
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Use fused multiply-add in every kernel, scalar tails included.
    pub fn with_fused(mut self, fused: bool) -> Self {
        self.fused = fused;
        self
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn fused(&self) -> bool {
        self.fused
    }

    /// Widest filter the generic slide kernel accepts: `V + 1`.
    pub fn generic_capacity(&self) -> usize {
        self.lanes + 1
    }

    /// The instruction set kernels will run on.
    pub fn isa(&self) -> Isa {
        if self.backend == Backend::Scalar {
            return Isa::Scalar;
        }
        hardware_isa(self.lanes, self.fused).unwrap_or(Isa::Scalar)
    }

    pub(crate) fn dispatch<Op: SimdOp>(&self, op: Op) -> Op::Output {
        match self.isa() {
            Isa::Scalar => run_scalar(self.lanes, self.fused, op),
            #[cfg(target_arch = "x86_64")]
            isa => x86::run(isa, self.fused, op),
            #[cfg(not(target_arch = "x86_64"))]
            _ => run_scalar(self.lanes, self.fused, op),
        }
    }
}

fn run_scalar<Op: SimdOp>(lanes: usize, fused: bool, op: Op) -> Op::Output {
    match (lanes, fused) {
        (4, false) => op.run(Scalar::<4, false>),
        (4, true) => op.run(Scalar::<4, true>),
        (8, false) => op.run(Scalar::<8, false>),
        (8, true) => op.run(Scalar::<8, true>),
        (16, false) => op.run(Scalar::<16, false>),
        (16, true) => op.run(Scalar::<16, true>),
        (32, false) => op.run(Scalar::<32, false>),
        (32, true) => op.run(Scalar::<32, true>),
        _ => unreachable!("lane count validated by VectorModel::new"),
    }
}

#[cfg(target_arch = "x86_64")]
fn hardware_isa(lanes: usize, fused: bool) -> Option<Isa> {
    x86::detect(lanes, fused)
}

#[cfg(not(target_arch = "x86_64"))]
fn hardware_isa(_lanes: usize, _fused: bool) -> Option<Isa> {
    None
}

struct SlideOp<'a> {
    a: &'a [f32],
    b: &'a [f32],
    offset: usize,
}

impl SimdOp for SlideOp<'_> {
    type Output = Vec<f32>;

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Vec<f32> {
        let mut out = vec![0.0; S::LANES];
        let v = s.slide(s.load(self.a), s.load(self.b), self.offset);
        s.store(&mut out, v);
        out
    }
}

/// Lanes `offset..offset + V` of `a ‖ b`, where `a` and `b` hold exactly
/// `V` lanes each.
pub fn slide(
    a: &[f32],
    b: &[f32],
    offset: usize,
    vm: &VectorModel,
) -> Result<(Vec<f32>, CostCounters)> {
    let lanes = vm.lanes();
    for v in [a, b] {
        if v.len() != lanes {
            return Err(ConvError::DataLength {
                height: 1,
                width: lanes,
                len: v.len(),
            });
        }
    }
    if offset > lanes {
        return Err(ConvError::OffsetOutOfRange { offset, lanes });
    }
    let out = vm.dispatch(SlideOp { a, b, offset });
    let cost = CostCounters {
        slides: slide_is_counted(offset, lanes) as u64,
        loads: 2,
        ..Default::default()
    };
    Ok((out, cost))
}
