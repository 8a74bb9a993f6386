use std::fmt;
use std::str::FromStr;

use crate::error::{ConvError, Result};
use crate::gemm::conv2d_im2col;
use crate::reference::conv2d_reference;
use crate::simd::VectorModel;
use crate::slide::{conv2d_custom3, conv2d_custom5, conv2d_slide_compound, conv2d_slide_generic};
use crate::tensor::{CostCounters, Filter2D, Tensor2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelVariant {
    Naive,
    Im2colGemm,
    SlideGeneric,
    SlideCompound,
    Custom3,
    Custom5,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 6] = [
        KernelVariant::Naive,
        KernelVariant::Im2colGemm,
        KernelVariant::SlideGeneric,
        KernelVariant::SlideCompound,
        KernelVariant::Custom3,
        KernelVariant::Custom5,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::Naive => "naive",
            KernelVariant::Im2colGemm => "im2col_gemm",
            KernelVariant::SlideGeneric => "generic",
            KernelVariant::SlideCompound => "compound",
            KernelVariant::Custom3 => "custom3",
            KernelVariant::Custom5 => "custom5",
        }
    }

    /// Whether this kernel accepts a `kh x kw` filter at `vm`'s lane count.
    pub fn supports(&self, kh: usize, kw: usize, vm: &VectorModel) -> bool {
        match self {
            KernelVariant::Naive | KernelVariant::Im2colGemm => true,
            KernelVariant::SlideGeneric => kw <= vm.generic_capacity(),
            KernelVariant::SlideCompound => kw >= 2,
            KernelVariant::Custom3 => kh == 3 && kw == 3,
            KernelVariant::Custom5 => kh == 5 && kw == 5,
        }
    }

    /// Every variant that accepts a `kh x kw` filter, in declaration order.
    pub fn applicable(kh: usize, kw: usize, vm: &VectorModel) -> Vec<KernelVariant> {
        Self::ALL
            .into_iter()
            .filter(|v| v.supports(kh, kw, vm))
            .collect()
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "naive" => KernelVariant::Naive,
            "im2col_gemm" | "im2col" | "gemm" => KernelVariant::Im2colGemm,
            "generic" | "slide_generic" => KernelVariant::SlideGeneric,
            "compound" | "slide_compound" => KernelVariant::SlideCompound,
            "custom3" => KernelVariant::Custom3,
            "custom5" => KernelVariant::Custom5,
            _ => return Err(format!("unknown kernel variant `{s}`")),
        })
    }
}

/// How [`select_kernel_with`] treats a filter exactly `V + 1` wide, the one
/// width both slide kernels accept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryPolicy {
    #[default]
    Compound,
    Generic,
}

/// Kernel choice for a `kh x kw` filter: the custom kernels for 3x3 and 5x5,
/// the generic slide kernel up to `V` wide, the compound kernel beyond.
pub fn select_kernel(kh: usize, kw: usize, vm: &VectorModel) -> KernelVariant {
    select_kernel_with(kh, kw, vm, BoundaryPolicy::default())
}

pub fn select_kernel_with(
    kh: usize,
    kw: usize,
    vm: &VectorModel,
    boundary: BoundaryPolicy,
) -> KernelVariant {
    let lanes = vm.lanes();
    match (kh, kw) {
        (3, 3) => KernelVariant::Custom3,
        (5, 5) => KernelVariant::Custom5,
        (_, kw) if kw <= lanes => KernelVariant::SlideGeneric,
        (_, kw) if kw == lanes + 1 && boundary == BoundaryPolicy::Generic => {
            KernelVariant::SlideGeneric
        }
        _ => KernelVariant::SlideCompound,
    }
}

/// Runs `variant`, rejecting filters it does not support.
pub fn conv2d(
    x: &Tensor2D,
    f: &Filter2D,
    variant: KernelVariant,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    if !variant.supports(f.kh(), f.kw(), vm) {
        return Err(ConvError::UnsupportedVariant {
            variant,
            kh: f.kh(),
            kw: f.kw(),
            lanes: vm.lanes(),
        });
    }
    match variant {
        KernelVariant::Naive => conv2d_reference(x, f),
        KernelVariant::Im2colGemm => conv2d_im2col(x, f),
        KernelVariant::SlideGeneric => conv2d_slide_generic(x, f, vm),
        KernelVariant::SlideCompound => conv2d_slide_compound(x, f, vm),
        KernelVariant::Custom3 => conv2d_custom3(x, f, vm),
        KernelVariant::Custom5 => conv2d_custom5(x, f, vm),
    }
}

/// Runs whichever kernel [`select_kernel`] picks.
pub fn conv2d_auto(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    conv2d(x, f, select_kernel(f.kh(), f.kw(), vm), vm)
}
