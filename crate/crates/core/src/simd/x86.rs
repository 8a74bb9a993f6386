use std::arch::x86_64::*;

use super::{Isa, Simd, SimdOp};

pub(super) fn detect(lanes: usize, fused: bool) -> Option<Isa> {
    let fma = !fused || is_x86_feature_detected!("fma");
    match lanes {
        4 if is_x86_feature_detected!("ssse3") && fma => Some(Isa::Sse),
        8 if is_x86_feature_detected!("avx2") && fma => Some(Isa::Avx2),
        16 if is_x86_feature_detected!("avx512f") => Some(Isa::Avx512),
        _ => None,
    }
}

/// Runs `op` on a backend previously confirmed by [`detect`].
pub(super) fn run<Op: SimdOp>(isa: Isa, fused: bool, op: Op) -> Op::Output {
    // SAFETY: `isa` comes from `detect`, which checked every feature the
    // target-feature entry points enable.
    unsafe {
        match (isa, fused) {
            (Isa::Sse, false) => run_sse(op),
            (Isa::Sse, true) => run_sse_fma(op),
            (Isa::Avx2, false) => run_avx2(op),
            (Isa::Avx2, true) => run_avx2_fma(op),
            (Isa::Avx512, false) => run_avx512::<Op, false>(op),
            (Isa::Avx512, true) => run_avx512::<Op, true>(op),
            (Isa::Scalar, _) => unreachable!("scalar is dispatched by the caller"),
        }
    }
}

#[target_feature(enable = "ssse3")]
unsafe fn run_sse<Op: SimdOp>(op: Op) -> Op::Output {
    op.run(Sse::<false>(()))
}

#[target_feature(enable = "ssse3,fma")]
unsafe fn run_sse_fma<Op: SimdOp>(op: Op) -> Op::Output {
    op.run(Sse::<true>(()))
}

#[target_feature(enable = "avx2")]
unsafe fn run_avx2<Op: SimdOp>(op: Op) -> Op::Output {
    op.run(Avx2::<false>(()))
}

#[target_feature(enable = "avx2,fma")]
unsafe fn run_avx2_fma<Op: SimdOp>(op: Op) -> Op::Output {
    op.run(Avx2::<true>(()))
}

#[target_feature(enable = "avx512f")]
unsafe fn run_avx512<Op: SimdOp, const FMA: bool>(op: Op) -> Op::Output {
    op.run(Avx512::<FMA>(()))
}

/// 4 lanes in an XMM register. Requires SSSE3 (plus FMA when fused).
#[derive(Clone, Copy)]
pub(crate) struct Sse<const FMA: bool>(());

impl<const FMA: bool> Simd for Sse<FMA> {
    const LANES: usize = 4;
    const FUSED: bool = FMA;
    type Reg = __m128;

    #[inline(always)]
    fn zero(self) -> __m128 {
        unsafe { _mm_setzero_ps() }
    }

    #[inline(always)]
    fn splat(self, v: f32) -> __m128 {
        unsafe { _mm_set1_ps(v) }
    }

    #[inline(always)]
    fn load(self, src: &[f32]) -> __m128 {
        assert!(src.len() >= 4);
        unsafe { _mm_loadu_ps(src.as_ptr()) }
    }

    #[inline(always)]
    fn store(self, dst: &mut [f32], v: __m128) {
        assert!(dst.len() >= 4);
        unsafe { _mm_storeu_ps(dst.as_mut_ptr(), v) }
    }

    #[inline(always)]
    fn add(self, a: __m128, b: __m128) -> __m128 {
        unsafe { _mm_add_ps(a, b) }
    }

    #[inline(always)]
    fn max(self, a: __m128, b: __m128) -> __m128 {
        // maxps returns the second operand unless the first is greater.
        unsafe { _mm_max_ps(a, b) }
    }

    #[inline(always)]
    fn mul_add(self, a: __m128, b: __m128, acc: __m128) -> __m128 {
        unsafe {
            if FMA {
                _mm_fmadd_ps(a, b, acc)
            } else {
                _mm_add_ps(acc, _mm_mul_ps(a, b))
            }
        }
    }

    #[inline(always)]
    fn slide(self, a: __m128, b: __m128, offset: usize) -> __m128 {
        unsafe {
            let (ai, bi) = (_mm_castps_si128(a), _mm_castps_si128(b));
            match offset {
                0 => a,
                1 => _mm_castsi128_ps(_mm_alignr_epi8::<4>(bi, ai)),
                2 => _mm_castsi128_ps(_mm_alignr_epi8::<8>(bi, ai)),
                3 => _mm_castsi128_ps(_mm_alignr_epi8::<12>(bi, ai)),
                _ => b,
            }
        }
    }
}

/// 8 lanes in a YMM register. Requires AVX2 (plus FMA when fused).
#[derive(Clone, Copy)]
pub(crate) struct Avx2<const FMA: bool>(());

macro_rules! avx2_align {
    ($hi:expr, $lo:expr, $bytes:literal) => {
        _mm256_castsi256_ps(_mm256_alignr_epi8::<$bytes>(
            _mm256_castps_si256($hi),
            _mm256_castps_si256($lo),
        ))
    };
}

impl<const FMA: bool> Simd for Avx2<FMA> {
    const LANES: usize = 8;
    const FUSED: bool = FMA;
    type Reg = __m256;

    #[inline(always)]
    fn zero(self) -> __m256 {
        unsafe { _mm256_setzero_ps() }
    }

    #[inline(always)]
    fn splat(self, v: f32) -> __m256 {
        unsafe { _mm256_set1_ps(v) }
    }

    #[inline(always)]
    fn load(self, src: &[f32]) -> __m256 {
        assert!(src.len() >= 8);
        unsafe { _mm256_loadu_ps(src.as_ptr()) }
    }

    #[inline(always)]
    fn store(self, dst: &mut [f32], v: __m256) {
        assert!(dst.len() >= 8);
        unsafe { _mm256_storeu_ps(dst.as_mut_ptr(), v) }
    }

    #[inline(always)]
    fn add(self, a: __m256, b: __m256) -> __m256 {
        unsafe { _mm256_add_ps(a, b) }
    }

    #[inline(always)]
    fn max(self, a: __m256, b: __m256) -> __m256 {
        unsafe { _mm256_max_ps(a, b) }
    }

    #[inline(always)]
    fn mul_add(self, a: __m256, b: __m256, acc: __m256) -> __m256 {
        unsafe {
            if FMA {
                _mm256_fmadd_ps(a, b, acc)
            } else {
                _mm256_add_ps(acc, _mm256_mul_ps(a, b))
            }
        }
    }

    #[inline(always)]
    fn slide(self, a: __m256, b: __m256, offset: usize) -> __m256 {
        // `mid` is [a.hi, b.lo]; palignr then shifts within each 128-bit half.
        unsafe {
            let mid = _mm256_permute2f128_ps::<0x21>(a, b);
            match offset {
                0 => a,
                1 => avx2_align!(mid, a, 4),
                2 => avx2_align!(mid, a, 8),
                3 => avx2_align!(mid, a, 12),
                4 => mid,
                5 => avx2_align!(b, mid, 4),
                6 => avx2_align!(b, mid, 8),
                7 => avx2_align!(b, mid, 12),
                _ => b,
            }
        }
    }
}

/// 16 lanes in a ZMM register. Requires AVX-512F.
#[derive(Clone, Copy)]
pub(crate) struct Avx512<const FMA: bool>(());

impl<const FMA: bool> Simd for Avx512<FMA> {
    const LANES: usize = 16;
    const FUSED: bool = FMA;
    type Reg = __m512;

    #[inline(always)]
    fn zero(self) -> __m512 {
        unsafe { _mm512_setzero_ps() }
    }

    #[inline(always)]
    fn splat(self, v: f32) -> __m512 {
        unsafe { _mm512_set1_ps(v) }
    }

    #[inline(always)]
    fn load(self, src: &[f32]) -> __m512 {
        assert!(src.len() >= 16);
        unsafe { _mm512_loadu_ps(src.as_ptr()) }
    }

    #[inline(always)]
    fn store(self, dst: &mut [f32], v: __m512) {
        assert!(dst.len() >= 16);
        unsafe { _mm512_storeu_ps(dst.as_mut_ptr(), v) }
    }

    #[inline(always)]
    fn add(self, a: __m512, b: __m512) -> __m512 {
        unsafe { _mm512_add_ps(a, b) }
    }

    #[inline(always)]
    fn max(self, a: __m512, b: __m512) -> __m512 {
        unsafe { _mm512_max_ps(a, b) }
    }

    #[inline(always)]
    fn mul_add(self, a: __m512, b: __m512, acc: __m512) -> __m512 {
        unsafe {
            if FMA {
                _mm512_fmadd_ps(a, b, acc)
            } else {
                _mm512_add_ps(acc, _mm512_mul_ps(a, b))
            }
        }
    }

    #[inline(always)]
    fn slide(self, a: __m512, b: __m512, offset: usize) -> __m512 {
        unsafe {
            match offset {
                0 => a,
                16.. => b,
                _ => {
                    let iota =
                        _mm512_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15);
                    let idx = _mm512_add_epi32(iota, _mm512_set1_epi32(offset as i32));
                    _mm512_permutex2var_ps(a, idx, b)
                }
            }
        }
    }
}
