//! Vector-slide convolution kernels.
//!
//! All kernels read the input in place. Every output element accumulates its
//! taps in row-major `(j, i)` order starting from zero, so without fused
//! multiply-add they reproduce [`conv2d_reference`](crate::conv2d_reference)
//! bit for bit. Output columns that do not fill a whole vector are finished
//! by a scalar epilogue.

use crate::error::{ConvError, Result};
use crate::simd::{slide_is_counted, Simd, SimdOp, VectorModel};
use crate::tensor::{ConvShape, CostCounters, Filter2D, Tensor2D};
use crate::KernelVariant;

/// Hardware vectors in the compound register for a `kw`-wide filter:
/// enough to hold the `V + kw - 1` input lanes one output vector reads.
pub fn compound_len(kw: usize, lanes: usize) -> usize {
    (lanes + kw - 1).div_ceil(lanes)
}

/// Counted slides the generic kernel spends on one filter row for one
/// output vector: every tap offset except `0` and `V`.
pub fn generic_row_slides(kw: usize, lanes: usize) -> u64 {
    (1..kw).filter(|&t| slide_is_counted(t, lanes)).count() as u64
}

/// Per-hardware-vector slides the compound kernel spends on one filter row
/// for one output vector: `m * (kw - 1)`.
pub fn compound_row_slides(kw: usize, lanes: usize) -> u64 {
    (compound_len(kw, lanes) * (kw - 1)) as u64
}

/// Compound slides relative to an ideally packed compound vector of
/// `(V + kw - 1) / V` hardware vectors. Equals 1 when `kw - 1` is a multiple
/// of `V` and peaks when `kw - 1 ≡ 1 (mod V)`.
pub fn compound_alignment_overhead(kw: usize, lanes: usize) -> f64 {
    (compound_len(kw, lanes) * lanes) as f64 / (lanes + kw - 1) as f64
}

/// 1-D convolution of a single-row signal with the generic slide kernel.
pub fn conv1d_slide(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    if x.height() != 1 {
        return Err(ConvError::NotARow(x.height()));
    }
    if f.kh() != 1 {
        return Err(ConvError::NotARow(f.kh()));
    }
    conv2d_slide_generic(x, f, vm)
}

/// Generic 2-D slide kernel for filters up to `V + 1` wide. Each output
/// vector is built from two adjacent input vectors per filter row.
pub fn conv2d_slide_generic(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    let shape = ConvShape::of(x, f)?;
    if f.kw() > vm.generic_capacity() {
        return Err(ConvError::FilterTooWide {
            kw: f.kw(),
            max: vm.generic_capacity(),
        });
    }
    let (out, cost) = vm.dispatch(Generic { x, f, shape });
    Ok((
        Tensor2D::from_parts_unchecked(shape.out_h, shape.out_w, out),
        cost,
    ))
}

/// Compound-vector kernel for any filter at least 2 wide. Each filter row is
/// applied by shifting an `m`-vector compound register one lane per tap.
pub fn conv2d_slide_compound(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    let shape = ConvShape::of(x, f)?;
    if f.kw() < 2 {
        return Err(ConvError::UnsupportedVariant {
            variant: KernelVariant::SlideCompound,
            kh: f.kh(),
            kw: f.kw(),
            lanes: vm.lanes(),
        });
    }
    let (out, cost) = vm.dispatch(Compound { x, f, shape });
    Ok((
        Tensor2D::from_parts_unchecked(shape.out_h, shape.out_w, out),
        cost,
    ))
}

/// 3x3 kernel that slides each input row once and feeds the slid vectors to
/// all three output rows that read it.
pub fn conv2d_custom3(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    custom::<3>(x, f, vm, KernelVariant::Custom3)
}

/// 5x5 counterpart of [`conv2d_custom3`].
pub fn conv2d_custom5(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    custom::<5>(x, f, vm, KernelVariant::Custom5)
}

fn custom<const K: usize>(
    x: &Tensor2D,
    f: &Filter2D,
    vm: &VectorModel,
    variant: KernelVariant,
) -> Result<(Tensor2D, CostCounters)> {
    if !f.is_square(K) {
        return Err(ConvError::WrongFilterSize {
            variant,
            expected: K,
            kh: f.kh(),
            kw: f.kw(),
        });
    }
    let shape = ConvShape::of(x, f)?;
    let (out, cost) = vm.dispatch(Custom::<K> { x, f, shape });
    Ok((
        Tensor2D::from_parts_unchecked(shape.out_h, shape.out_w, out),
        cost,
    ))
}

struct Generic<'a> {
    x: &'a Tensor2D,
    f: &'a Filter2D,
    shape: ConvShape,
}

impl SimdOp for Generic<'_> {
    type Output = (Vec<f32>, CostCounters);

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Self::Output {
        let Self { x, f, shape } = self;
        let v = S::LANES;
        let full = shape.out_w / v;
        let mut out = vec![0.0f32; shape.out_len()];
        let mut cost = CostCounters::default();
        for (r, out_row) in out.chunks_exact_mut(shape.out_w).enumerate() {
            let mut q = 0;
            while q + 4 <= full {
                generic_block::<S, 4>(s, x, f, r, q * v, out_row, &mut cost);
                q += 4;
            }
            while q < full {
                generic_block::<S, 1>(s, x, f, r, q * v, out_row, &mut cost);
                q += 1;
            }
        }
        scalar_tail::<S>(x, f, &shape, full * v, &mut out, &mut cost);
        (out, cost)
    }
}

/// `NB` adjacent output vectors of row `r` starting at column `base`.
#[inline(always)]
fn generic_block<S: Simd, const NB: usize>(
    s: S,
    x: &Tensor2D,
    f: &Filter2D,
    r: usize,
    base: usize,
    out_row: &mut [f32],
    cost: &mut CostCounters,
) {
    let v = S::LANES;
    let kw = f.kw();
    let mut acc = [s.zero(); NB];
    for j in 0..f.kh() {
        let src = &x.row_slice(r + j)[base..];
        let mut xs = [s.zero(); NB];
        for (b, reg) in xs.iter_mut().enumerate() {
            *reg = s.load(&src[b * v..]);
        }
        let tail = s.load_padded(&src[NB * v..]);
        cost.loads += NB as u64 + 1;

        for (t, &w) in f.tap_row(j).iter().enumerate() {
            let w = s.splat(w);
            for b in 0..NB {
                let next = if b + 1 < NB { xs[b + 1] } else { tail };
                acc[b] = s.mul_add(w, s.slide(xs[b], next, t), acc[b]);
            }
            if slide_is_counted(t, v) {
                cost.slides += NB as u64;
            }
        }
        cost.macs += (NB * v * kw) as u64;
    }
    for (b, a) in acc.iter().enumerate() {
        s.store(&mut out_row[base + b * v..], *a);
    }
}

/// Scalar epilogue for columns `start..out_w` of every output row.
#[inline(always)]
fn scalar_tail<S: Simd>(
    x: &Tensor2D,
    f: &Filter2D,
    shape: &ConvShape,
    start: usize,
    out: &mut [f32],
    cost: &mut CostCounters,
) {
    if start >= shape.out_w {
        return;
    }
    for r in 0..shape.out_h {
        for c in start..shape.out_w {
            let mut acc = 0.0f32;
            for j in 0..shape.kh {
                let xs = &x.row_slice(r + j)[c..c + shape.kw];
                for (&w, &xv) in f.tap_row(j).iter().zip(xs) {
                    acc = S::scalar_mul_add(w, xv, acc);
                }
            }
            out[r * shape.out_w + c] = acc;
        }
    }
    cost.macs += (shape.out_h * (shape.out_w - start) * shape.taps()) as u64;
}

struct Compound<'a> {
    x: &'a Tensor2D,
    f: &'a Filter2D,
    shape: ConvShape,
}

impl SimdOp for Compound<'_> {
    type Output = (Vec<f32>, CostCounters);

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Self::Output {
        match compound_len(self.f.kw(), S::LANES) {
            2 => compound_fixed::<S, 2>(s, self),
            3 => compound_fixed::<S, 3>(s, self),
            4 => compound_fixed::<S, 4>(s, self),
            5 => compound_fixed::<S, 5>(s, self),
            6 => compound_fixed::<S, 6>(s, self),
            7 => compound_fixed::<S, 7>(s, self),
            8 => compound_fixed::<S, 8>(s, self),
            m => {
                let mut regs = vec![s.zero(); m];
                compound_rows(s, self, &mut regs, m)
            }
        }
    }
}

#[inline(always)]
fn compound_fixed<S: Simd, const M: usize>(s: S, op: Compound<'_>) -> (Vec<f32>, CostCounters) {
    let mut regs = [s.zero(); M];
    compound_rows(s, op, &mut regs, M)
}

#[inline(always)]
fn compound_rows<S: Simd>(
    s: S,
    op: Compound<'_>,
    regs: &mut [S::Reg],
    m: usize,
) -> (Vec<f32>, CostCounters) {
    let Compound { x, f, shape } = op;
    let v = S::LANES;
    let full = shape.out_w / v;
    let mut out = vec![0.0f32; shape.out_len()];
    let mut cost = CostCounters::default();
    for (r, out_row) in out.chunks_exact_mut(shape.out_w).enumerate() {
        for q in 0..full {
            let base = q * v;
            let mut acc = s.zero();
            for j in 0..shape.kh {
                let src = &x.row_slice(r + j)[base..];
                let taps = f.tap_row(j);
                for (k, reg) in regs[..m].iter_mut().enumerate() {
                    *reg = s.load_padded(src.get(k * v..).unwrap_or(&[]));
                }
                cost.loads += m as u64;
                acc = s.mul_add(s.splat(taps[0]), regs[0], acc);
                for &w in &taps[1..] {
                    shift_compound(s, &mut regs[..m]);
                    cost.slides += m as u64;
                    acc = s.mul_add(s.splat(w), regs[0], acc);
                }
                cost.macs += (v * shape.kw) as u64;
            }
            s.store(&mut out_row[base..], acc);
        }
    }
    scalar_tail::<S>(x, f, &shape, full * v, &mut out, &mut cost);
    (out, cost)
}

/// Shifts the compound register left by one logical lane: every hardware
/// vector slides by one, taking its new top lane from the next vector.
#[inline(always)]
fn shift_compound<S: Simd>(s: S, regs: &mut [S::Reg]) {
    let m = regs.len();
    for k in 0..m {
        let next = if k + 1 < m { regs[k + 1] } else { s.zero() };
        regs[k] = s.slide(regs[k], next, 1);
    }
}

struct Custom<'a, const K: usize> {
    x: &'a Tensor2D,
    f: &'a Filter2D,
    shape: ConvShape,
}

impl<const K: usize> SimdOp for Custom<'_, K> {
    type Output = (Vec<f32>, CostCounters);

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Self::Output {
        let Self { x, f, shape } = self;
        let v = S::LANES;
        let full = shape.out_w / v;
        let mut out = vec![0.0f32; shape.out_len()];
        let mut cost = CostCounters::default();
        // Keep accumulators plus slid vectors within the register file.
        let nb = if K <= 3 { 4 } else { 2 };
        let mut q = 0;
        while q + nb <= full {
            if K <= 3 {
                custom_block::<S, K, 4>(s, x, f, &shape, q * v, &mut out, &mut cost);
            } else {
                custom_block::<S, K, 2>(s, x, f, &shape, q * v, &mut out, &mut cost);
            }
            q += nb;
        }
        while q < full {
            custom_block::<S, K, 1>(s, x, f, &shape, q * v, &mut out, &mut cost);
            q += 1;
        }
        scalar_tail::<S>(x, f, &shape, full * v, &mut out, &mut cost);
        (out, cost)
    }
}

/// Sweeps every input row once for the `NB` output vectors at `base`.
///
/// `acc[j]` accumulates output row `y - j`, the row for which input row `y`
/// supplies filter row `j`.
#[inline(always)]
fn custom_block<S: Simd, const K: usize, const NB: usize>(
    s: S,
    x: &Tensor2D,
    f: &Filter2D,
    shape: &ConvShape,
    base: usize,
    out: &mut [f32],
    cost: &mut CostCounters,
) {
    let v = S::LANES;
    let out_w = shape.out_w;
    let mut acc = [[s.zero(); NB]; K];
    let counted = (1..K).filter(|&t| slide_is_counted(t, v)).count() as u64;
    for y in 0..shape.in_h {
        let src = &x.row_slice(y)[base..];
        let mut xs = [s.zero(); NB];
        for (b, reg) in xs.iter_mut().enumerate() {
            *reg = s.load(&src[b * v..]);
        }
        let tail = s.load_padded(&src[NB * v..]);

        let mut slid = [[s.zero(); NB]; K];
        for (t, row) in slid.iter_mut().enumerate() {
            for b in 0..NB {
                let next = if b + 1 < NB { xs[b + 1] } else { tail };
                row[b] = s.slide(xs[b], next, t);
            }
        }
        cost.loads += NB as u64 + 1;
        cost.slides += NB as u64 * counted;

        for (j, acc_j) in acc.iter_mut().enumerate() {
            if y < j || y - j >= shape.out_h {
                continue;
            }
            for (t, slid_t) in slid.iter().enumerate() {
                let w = s.splat(f.tap(j, t));
                for b in 0..NB {
                    acc_j[b] = s.mul_add(w, slid_t[b], acc_j[b]);
                }
            }
            cost.macs += (NB * v * K) as u64;
        }
        if y + 1 >= K {
            let row = &mut out[(y + 1 - K) * out_w..][..out_w];
            for (b, a) in acc[K - 1].iter().enumerate() {
                s.store(&mut row[base + b * v..], *a);
            }
        }
        for j in (1..K).rev() {
            acc[j] = acc[j - 1];
        }
        acc[0] = [s.zero(); NB];
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::reference::{conv2d_reference, max_rel_error, oracle_conv2d, tolerance};

    fn grid3() -> Tensor2D {
        Tensor2D::new(3, 3, (1..=9).map(|v| v as f32).collect()).unwrap()
    }

    fn ramp(h: usize, w: usize) -> Tensor2D {
        Tensor2D::from_fn(h, w, |r, c| (r * w + c) as f32).unwrap()
    }

    fn crop(x: &Tensor2D, inset: usize) -> Vec<f32> {
        let mut out = Vec::new();
        for r in inset..x.height() - inset {
            out.extend_from_slice(&x.row_slice(r)[inset..x.width() - inset]);
        }
        out
    }

    fn models() -> Vec<VectorModel> {
        let mut v = Vec::new();
        for lanes in VectorModel::SUPPORTED_LANES {
            v.push(VectorModel::new(lanes).unwrap());
            v.push(VectorModel::emulated(lanes).unwrap());
        }
        v
    }

    #[test]
    fn compound_geometry() {
        assert_eq!(compound_len(51, 16), 5);
        assert_eq!(compound_len(17, 16), 2);
        assert_eq!(compound_len(33, 16), 3);
        assert_eq!(compound_len(2, 4), 2);
        assert_eq!(generic_row_slides(17, 16), 15);
        assert_eq!(generic_row_slides(11, 16), 10);
        assert_eq!(compound_row_slides(37, 16), 4 * 36);
        assert_eq!(compound_alignment_overhead(33, 16), 1.0);
    }

    #[test]
    fn small_window_sums() {
        for vm in models() {
            let ones = Filter2D::ones(2, 2).unwrap();
            assert_eq!(
                conv2d_slide_generic(&grid3(), &ones, &vm).unwrap().0.data(),
                &[12., 16., 24., 28.]
            );
            assert_eq!(
                conv2d_slide_compound(&grid3(), &ones, &vm)
                    .unwrap()
                    .0
                    .data(),
                &[12., 16., 24., 28.]
            );
            let x = Tensor2D::row(vec![1., 2., 3., 4., 5.]).unwrap();
            let y = conv1d_slide(&x, &Filter2D::ones(1, 3).unwrap(), &vm)
                .unwrap()
                .0;
            assert_eq!(y.data(), &[6., 9., 12.]);
            let y = conv1d_slide(&x, &Filter2D::ones(1, 1).unwrap(), &vm)
                .unwrap()
                .0;
            assert_eq!(y, x);
        }
    }

    #[test]
    fn delta_filters_crop() {
        for vm in models() {
            let x = ramp(8, 8);
            let d3 = Filter2D::delta_center(3, 3).unwrap();
            assert_eq!(
                conv2d_slide_generic(&x, &d3, &vm).unwrap().0.data(),
                &crop(&x, 1)[..]
            );
            assert_eq!(
                conv2d_custom3(&x, &d3, &vm).unwrap().0.data(),
                &crop(&x, 1)[..]
            );
            assert_eq!(
                conv2d_slide_compound(&x, &d3, &vm).unwrap().0.data(),
                &crop(&x, 1)[..]
            );
            let x = ramp(40, 40);
            let d5 = Filter2D::delta_center(5, 5).unwrap();
            assert_eq!(
                conv2d_custom5(&x, &d5, &vm).unwrap().0.data(),
                &crop(&x, 2)[..]
            );
        }
    }

    #[test]
    fn error_paths() {
        let vm = VectorModel::new(4).unwrap();
        let x = ramp(10, 10);
        assert!(matches!(
            conv2d_slide_generic(&x, &Filter2D::ones(1, 6).unwrap(), &vm),
            Err(ConvError::FilterTooWide { kw: 6, max: 5 })
        ));
        assert!(conv2d_slide_generic(&x, &Filter2D::ones(1, 5).unwrap(), &vm).is_ok());
        assert!(matches!(
            conv2d_slide_compound(&x, &Filter2D::ones(3, 1).unwrap(), &vm),
            Err(ConvError::UnsupportedVariant { .. })
        ));
        assert!(matches!(
            conv2d_custom3(&x, &Filter2D::ones(3, 4).unwrap(), &vm),
            Err(ConvError::WrongFilterSize { expected: 3, .. })
        ));
        assert!(matches!(
            conv2d_custom5(&x, &Filter2D::ones(3, 3).unwrap(), &vm),
            Err(ConvError::WrongFilterSize { expected: 5, .. })
        ));
        assert!(matches!(
            conv1d_slide(&x, &Filter2D::ones(1, 3).unwrap(), &vm),
            Err(ConvError::NotARow(10))
        ));
        assert!(matches!(
            conv2d_custom3(&ramp(2, 8), &Filter2D::ones(3, 3).unwrap(), &vm),
            Err(ConvError::FilterTooLarge { .. })
        ));
    }

    #[test]
    fn unfused_kernels_match_reference_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for vm in models() {
            for &(h, w, kh, kw) in &[
                (19, 45, 3, 3),
                (23, 70, 5, 5),
                (9, 61, 2, 7),
                (12, 77, 4, 17),
            ] {
                let x = Tensor2D::random(h, w, &mut rng).unwrap();
                let f = Filter2D::random(kh, kw, &mut rng).unwrap();
                let (want, _) = conv2d_reference(&x, &f).unwrap();
                if kw <= vm.generic_capacity() {
                    assert_eq!(conv2d_slide_generic(&x, &f, &vm).unwrap().0, want);
                }
                assert_eq!(
                    conv2d_slide_compound(&x, &f, &vm).unwrap().0,
                    want,
                    "{vm:?} {kh}x{kw}"
                );
                if f.is_square(3) {
                    assert_eq!(conv2d_custom3(&x, &f, &vm).unwrap().0, want);
                }
                if f.is_square(5) {
                    assert_eq!(conv2d_custom5(&x, &f, &vm).unwrap().0, want);
                }
            }
        }
    }

    #[test]
    fn wide_compound_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // m = 5 at V = 16, and a dynamic-length compound at V = 4.
        for (lanes, k) in [(16, 51), (4, 51)] {
            let vm = VectorModel::new(lanes).unwrap();
            let x = Tensor2D::random(120, 140, &mut rng).unwrap();
            let f = Filter2D::random(k, k, &mut rng).unwrap();
            let (y, cost) = conv2d_slide_compound(&x, &f, &vm).unwrap();
            let err = max_rel_error(&y, &oracle_conv2d(&x, &f).unwrap());
            assert!(err <= tolerance(k, k), "V={lanes} err {err}");
            let full = (y.width() / lanes) as u64;
            assert_eq!(
                cost.slides,
                y.height() as u64 * full * k as u64 * compound_row_slides(k, lanes)
            );
        }
    }

    #[test]
    fn fused_mode_stays_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor2D::random(50, 50, &mut rng).unwrap();
        let f = Filter2D::random(5, 5, &mut rng).unwrap();
        let o = oracle_conv2d(&x, &f).unwrap();
        for lanes in [4, 8, 16] {
            let vm = VectorModel::new(lanes).unwrap().with_fused(true);
            for y in [
                conv2d_slide_generic(&x, &f, &vm).unwrap().0,
                conv2d_slide_compound(&x, &f, &vm).unwrap().0,
                conv2d_custom5(&x, &f, &vm).unwrap().0,
            ] {
                assert!(max_rel_error(&y, &o) <= 1e-5);
            }
        }
    }
}
