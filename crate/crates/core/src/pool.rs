//! Sliding-window sum and max over a 1-D signal in a logarithmic number of
//! slide-and-combine passes.
//!
//! A pass computes `out[i] = a[i] ⊕ b[i + off]` for a whole row, reading the
//! shifted operand with vector slides. Window sums double `S_{2t}(i) = S_t(i)
//! + S_t(i + t)` and then join the powers of two in `k` largest first; window
//! maxima double up to the largest power of two `p <= k` and finish with one
//! overlapping pass `max(M_p(i), M_p(i + k - p))`.

use crate::error::{ConvError, Result};
use crate::simd::{slide_is_counted, Simd, SimdOp, VectorModel};
use crate::tensor::{CostCounters, Tensor2D};

#[derive(Clone, Copy)]
enum Combine {
    Sum,
    Max,
}

/// `y[i] = x[i] + ... + x[i + k - 1]` for a single-row `x`.
pub fn sliding_window_sum(
    x: &Tensor2D,
    k: usize,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    check(x, k)?;
    Ok(wrap(vm.dispatch(WindowSum { x: x.data(), k })))
}

/// `y[i] = max(x[i..i + k])` for a single-row `x`.
pub fn sliding_window_max(
    x: &Tensor2D,
    k: usize,
    vm: &VectorModel,
) -> Result<(Tensor2D, CostCounters)> {
    check(x, k)?;
    Ok(wrap(vm.dispatch(WindowMax { x: x.data(), k })))
}

/// Passes made by [`sliding_window_sum`]: doublings up to the top bit of
/// `k`, plus one join per remaining set bit.
pub fn window_sum_stages(k: usize) -> u64 {
    (k.ilog2() + k.count_ones() - 1) as u64
}

/// Passes made by [`sliding_window_max`]: `ceil(log2 k)`.
pub fn window_max_stages(k: usize) -> u64 {
    k.next_power_of_two().ilog2() as u64
}

fn check(x: &Tensor2D, k: usize) -> Result<()> {
    if x.height() != 1 {
        return Err(ConvError::NotARow(x.height()));
    }
    if k == 0 || k > x.width() {
        return Err(ConvError::WindowOutOfRange { k, len: x.width() });
    }
    Ok(())
}

fn wrap((data, cost): (Vec<f32>, CostCounters)) -> (Tensor2D, CostCounters) {
    (Tensor2D::from_parts_unchecked(1, data.len(), data), cost)
}

struct WindowSum<'a> {
    x: &'a [f32],
    k: usize,
}

impl SimdOp for WindowSum<'_> {
    type Output = (Vec<f32>, CostCounters);

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Self::Output {
        let Self { x, k } = self;
        let n = x.len();
        let mut cost = CostCounters::default();
        let top = k.ilog2();

        // Window sums of width 2^b for every set bit b of k except the top
        // one, kept until the join.
        let mut parts: Vec<(usize, Vec<f32>)> = Vec::new();
        let mut cur = x.to_vec();
        for b in 0..top {
            let width = 1usize << b;
            let next = combine(
                s,
                Combine::Sum,
                &cur,
                &cur,
                width,
                n - 2 * width + 1,
                &mut cost,
            );
            if k & width != 0 {
                parts.push((width, std::mem::replace(&mut cur, next)));
            } else {
                cur = next;
            }
        }

        let mut covered = 1usize << top;
        for (width, part) in parts.into_iter().rev() {
            let len = n - (covered + width) + 1;
            cur = combine(s, Combine::Sum, &cur, &part, covered, len, &mut cost);
            covered += width;
        }
        debug_assert_eq!(covered, k);
        (cur, cost)
    }
}

struct WindowMax<'a> {
    x: &'a [f32],
    k: usize,
}

impl SimdOp for WindowMax<'_> {
    type Output = (Vec<f32>, CostCounters);

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> Self::Output {
        let Self { x, k } = self;
        let n = x.len();
        let mut cost = CostCounters::default();
        let mut cur = x.to_vec();
        let mut width = 1usize;
        while 2 * width <= k {
            cur = combine(
                s,
                Combine::Max,
                &cur,
                &cur,
                width,
                n - 2 * width + 1,
                &mut cost,
            );
            width *= 2;
        }
        if width < k {
            cur = combine(s, Combine::Max, &cur, &cur, k - width, n - k + 1, &mut cost);
        }
        (cur, cost)
    }
}

/// One pass: `out[i] = a[i] ⊕ b[i + off]` for `i < len`.
#[inline(always)]
fn combine<S: Simd>(
    s: S,
    op: Combine,
    a: &[f32],
    b: &[f32],
    off: usize,
    len: usize,
    cost: &mut CostCounters,
) -> Vec<f32> {
    let v = S::LANES;
    let (q, lane) = (off / v, off % v);
    let full = len / v;
    let mut out = vec![0.0f32; len];
    let apply = |x: S::Reg, y: S::Reg| match op {
        Combine::Sum => s.add(x, y),
        Combine::Max => s.max(x, y),
    };
    for i in 0..full {
        let base = i * v;
        let lhs = s.load(&a[base..]);
        let start = base + q * v;
        let lo = s.load(&b[start..]);
        let rhs = if lane == 0 {
            lo
        } else {
            let hi = s.load_padded(b.get(start + v..).unwrap_or(&[]));
            cost.loads += 1;
            s.slide(lo, hi, lane)
        };
        cost.loads += 2;
        s.store(&mut out[base..], apply(lhs, rhs));
    }
    if slide_is_counted(lane, v) {
        cost.slides += full as u64;
    }
    for i in full * v..len {
        let (x, y) = (a[i], b[i + off]);
        out[i] = match op {
            Combine::Sum => x + y,
            Combine::Max => {
                if x > y {
                    x
                } else {
                    y
                }
            }
        };
    }
    cost.stages += 1;
    out
}
