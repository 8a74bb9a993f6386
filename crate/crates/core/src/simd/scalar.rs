use super::Simd;

/// Vectors emulated as `[f32; V]`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Scalar<const V: usize, const FMA: bool>;

impl<const V: usize, const FMA: bool> Simd for Scalar<V, FMA> {
    const LANES: usize = V;
    const FUSED: bool = FMA;
    type Reg = [f32; V];

    #[inline(always)]
    fn zero(self) -> [f32; V] {
        [0.0; V]
    }

    #[inline(always)]
    fn splat(self, v: f32) -> [f32; V] {
        [v; V]
    }

    #[inline(always)]
    fn load(self, src: &[f32]) -> [f32; V] {
        src[..V].try_into().unwrap()
    }

    #[inline(always)]
    fn store(self, dst: &mut [f32], v: [f32; V]) {
        dst[..V].copy_from_slice(&v);
    }

    #[inline(always)]
    fn add(self, a: [f32; V], b: [f32; V]) -> [f32; V] {
        std::array::from_fn(|l| a[l] + b[l])
    }

    #[inline(always)]
    fn max(self, a: [f32; V], b: [f32; V]) -> [f32; V] {
        std::array::from_fn(|l| if a[l] > b[l] { a[l] } else { b[l] })
    }

    #[inline(always)]
    fn mul_add(self, a: [f32; V], b: [f32; V], acc: [f32; V]) -> [f32; V] {
        std::array::from_fn(|l| Self::scalar_mul_add(a[l], b[l], acc[l]))
    }

    #[inline(always)]
    fn slide(self, a: [f32; V], b: [f32; V], offset: usize) -> [f32; V] {
        debug_assert!(offset <= V);
        std::array::from_fn(|l| {
            let src = l + offset;
            if src < V {
                a[src]
            } else {
                b[src - V]
            }
        })
    }
}
