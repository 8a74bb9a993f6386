//! The im2col + GEMM convolution baseline.
//!
//! `im2col_2d` materializes the full column matrix, one row per output pixel,
//! so its memory footprint grows with the number of filter taps. The GEMM is a
//! cache-blocked kernel that packs `A` into column panels and keeps a register
//! tile of `C`; it accumulates every output element in ascending `k` order
//! with unfused multiply-adds, so it reproduces the direct loop bit for bit.

use crate::error::{ConvError, Result};
use crate::simd::{Isa, Simd, SimdOp, VectorModel};
use crate::tensor::{ConvShape, CostCounters, Filter2D, Tensor2D};

/// Rows of `A` per cache block.
pub const GEMM_MC: usize = 128;
/// Depth of the shared dimension per cache block.
pub const GEMM_KC: usize = 256;
/// Columns of `B` per cache block.
pub const GEMM_NC: usize = 512;

/// Vector registers of `A` rows per register tile.
const MR_VECS: usize = 2;
const NR: usize = 4;

/// Row-major `f32` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(ConvError::DataLength {
                height: rows,
                width: cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            rows,
            cols,
            data: try_alloc(rows, cols)?,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// The im2col expansion: `out_h * out_w` rows of `kh * kw` patch elements.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMatrix(Matrix);

impl ColumnMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn try_alloc(rows: usize, cols: usize) -> Result<Vec<f32>> {
    let elems = rows
        .checked_mul(cols)
        .ok_or(ConvError::Allocation { elems: usize::MAX })?;
    let mut v = Vec::new();
    v.try_reserve_exact(elems)
        .map_err(|_| ConvError::Allocation { elems })?;
    v.resize(elems, 0.0);
    Ok(v)
}

/// Expands every `kh x kw` patch of `x` into one row of a column matrix.
/// Row `r * out_w + c` holds `x[r..r+kh][c..c+kw]` flattened row-major.
pub fn im2col_2d(x: &Tensor2D, kh: usize, kw: usize) -> Result<(ColumnMatrix, CostCounters)> {
    let shape = ConvShape::new(x.height(), x.width(), kh, kw)?;
    let rows = shape.out_len();
    let cols = shape.taps();
    let elems = rows
        .checked_mul(cols)
        .ok_or(ConvError::Allocation { elems: usize::MAX })?;
    let mut data = Vec::new();
    data.try_reserve_exact(elems)
        .map_err(|_| ConvError::Allocation { elems })?;
    for r in 0..shape.out_h {
        for c in 0..shape.out_w {
            for j in 0..kh {
                data.extend_from_slice(&x.row_slice(r + j)[c..c + kw]);
            }
        }
    }
    let cost = CostCounters {
        im2col_elems: elems as u64,
        ..Default::default()
    };
    Ok((ColumnMatrix(Matrix { rows, cols, data }), cost))
}

/// `C = A * B` with three-level cache blocking, vectorized on the widest
/// vector unit the CPU offers.
pub fn gemm(a: &Matrix, b: &Matrix) -> Result<(Matrix, CostCounters)> {
    if a.cols != b.rows {
        return Err(ConvError::DimensionMismatch {
            a_rows: a.rows,
            a_cols: a.cols,
            b_rows: b.rows,
            b_cols: b.cols,
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols)?;
    let macs = gemm_model().dispatch(Gemm { a, b, c: &mut c });
    let cost = CostCounters {
        macs,
        ..Default::default()
    };
    Ok((c, cost))
}

fn gemm_model() -> VectorModel {
    [16, 8, 4]
        .into_iter()
        .filter_map(|lanes| VectorModel::new(lanes).ok())
        .find(|vm| vm.isa() != Isa::Scalar)
        .unwrap_or_else(|| VectorModel::emulated(8).expect("supported lane count"))
}

struct Gemm<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    c: &'a mut Matrix,
}

impl SimdOp for Gemm<'_> {
    type Output = u64;

    #[inline(always)]
    fn run<S: Simd>(self, s: S) -> u64 {
        let Self { a, b, c } = self;
        let (m, k, n) = (a.rows, a.cols, b.cols);
        let mr = MR_VECS * S::LANES;
        let mut packed = vec![0.0f32; GEMM_MC.div_ceil(mr) * mr * GEMM_KC];
        let mut macs = 0u64;
        for jc in (0..n).step_by(GEMM_NC) {
            let nc = GEMM_NC.min(n - jc);
            for pc in (0..k).step_by(GEMM_KC) {
                let kc = GEMM_KC.min(k - pc);
                for ic in (0..m).step_by(GEMM_MC) {
                    let mc = GEMM_MC.min(m - ic);
                    pack_a(a, &mut packed, ic, mc, pc, kc, mr);
                    for (panel, ir) in (ic..ic + mc).step_by(mr).enumerate() {
                        let rows = mr.min(ic + mc - ir);
                        let pa = &packed[panel * mr * kc..][..mr * kc];
                        for jr in (jc..jc + nc).step_by(NR) {
                            let nr = NR.min(jc + nc - jr);
                            tile(s, pa, b, c, ir, rows, pc, kc, jr, nr);
                        }
                    }
                    macs += (mc * nc * kc) as u64;
                }
            }
        }
        macs
    }
}

/// Copies `A[ic..ic+mc][pc..pc+kc]` into panels of `mr` rows stored
/// column by column, zero-padding the last panel.
fn pack_a(a: &Matrix, packed: &mut [f32], ic: usize, mc: usize, pc: usize, kc: usize, mr: usize) {
    for (panel, ir) in (ic..ic + mc).step_by(mr).enumerate() {
        let dst = &mut packed[panel * mr * kc..][..mr * kc];
        let rows = mr.min(ic + mc - ir);
        for r in 0..mr {
            if r < rows {
                let src = &a.data[(ir + r) * a.cols + pc..][..kc];
                for (p, &v) in src.iter().enumerate() {
                    dst[p * mr + r] = v;
                }
            } else {
                for p in 0..kc {
                    dst[p * mr + r] = 0.0;
                }
            }
        }
    }
}

/// `mr x NR` register tile over one packed panel; accumulators start from
/// the current `C`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn tile<S: Simd>(
    s: S,
    pa: &[f32],
    b: &Matrix,
    c: &mut Matrix,
    ir: usize,
    rows: usize,
    pc: usize,
    kc: usize,
    jr: usize,
    nr: usize,
) {
    let v = S::LANES;
    let mr = MR_VECS * v;
    let mut buf = [0.0f32; MR_VECS * 32];
    let mut acc = [[s.zero(); MR_VECS]; NR];
    for (j, col) in acc.iter_mut().enumerate().take(nr) {
        for (r, slot) in buf[..rows].iter_mut().enumerate() {
            *slot = c.data[(ir + r) * c.cols + jr + j];
        }
        for (q, reg) in col.iter_mut().enumerate() {
            *reg = s.load(&buf[q * v..]);
        }
    }
    for p in 0..kc {
        let col = &pa[p * mr..][..mr];
        let av: [S::Reg; MR_VECS] = std::array::from_fn(|q| s.load(&col[q * v..]));
        let brow = &b.data[(pc + p) * b.cols + jr..][..nr];
        for (j, &bv) in brow.iter().enumerate() {
            let bs = s.splat(bv);
            for q in 0..MR_VECS {
                acc[j][q] = s.mul_add(av[q], bs, acc[j][q]);
            }
        }
    }
    for (j, col) in acc.iter().enumerate().take(nr) {
        for (q, &reg) in col.iter().enumerate() {
            s.store(&mut buf[q * v..], reg);
        }
        for (r, &val) in buf[..rows].iter().enumerate() {
            c.data[(ir + r) * c.cols + jr + j] = val;
        }
    }
}

/// im2col followed by a matrix-vector GEMM against the flattened filter.
///
/// `macs` counts only the GEMM stage; the copy is reported in
/// `im2col_elems`.
pub fn conv2d_im2col(x: &Tensor2D, f: &Filter2D) -> Result<(Tensor2D, CostCounters)> {
    let shape = ConvShape::of(x, f)?;
    let (cols, mut cost) = im2col_2d(x, f.kh(), f.kw())?;
    let filter = Matrix::new(shape.taps(), 1, f.taps().to_vec())?;
    let (y, gemm_cost) = gemm(cols.matrix(), &filter)?;
    cost += gemm_cost;
    Ok((
        Tensor2D::from_parts_unchecked(shape.out_h, shape.out_w, y.data),
        cost,
    ))
}

/// im2col element count over input element count.
pub fn bloat_ratio(shape: &ConvShape) -> f64 {
    (shape.out_len() * shape.taps()) as f64 / shape.in_len() as f64
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::reference::{max_rel_error, oracle_conv2d, tolerance};

    fn grid3() -> Tensor2D {
        Tensor2D::new(3, 3, (1..=9).map(|v| v as f32).collect()).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let t = Tensor2D::random(rows, cols, rng).unwrap();
        Matrix::new(rows, cols, t.into_data()).unwrap()
    }

    #[test]
    fn im2col_rows() {
        let (m, cost) = im2col_2d(&grid3(), 2, 2).unwrap();
        let m = m.into_matrix();
        assert_eq!((m.rows(), m.cols()), (4, 4));
        assert_eq!(m.row(0), &[1., 2., 4., 5.]);
        assert_eq!(m.row(3), &[5., 6., 8., 9.]);
        assert_eq!(cost.im2col_elems, 16);
        assert_eq!(cost.macs, 0);
    }

    #[test]
    fn im2col_unit_filter_is_reshape() {
        let (m, _) = im2col_2d(&grid3(), 1, 1).unwrap();
        assert_eq!((m.matrix().rows(), m.matrix().cols()), (9, 1));
        assert_eq!(m.matrix().data(), grid3().data());
    }

    #[test]
    fn im2col_shape_error() {
        assert!(matches!(
            im2col_2d(&grid3(), 3, 4),
            Err(ConvError::FilterTooLarge { .. })
        ));
    }

    #[test]
    fn gemm_identity_and_dot() {
        let b = Matrix::new(2, 2, vec![1.5, -2.0, 3.0, 4.25]).unwrap();
        let (c, cost) = gemm(&Matrix::identity(2), &b).unwrap();
        assert_eq!(c, b);
        assert_eq!(cost.macs, 8);

        let a = Matrix::new(1, 3, vec![1., 2., 3.]).unwrap();
        let v = Matrix::new(3, 1, vec![4., 5., 6.]).unwrap();
        assert_eq!(gemm(&a, &v).unwrap().0.data(), &[32.0]);
    }

    #[test]
    fn gemm_dimension_mismatch() {
        let a = Matrix::zeros(2, 3).unwrap();
        assert!(matches!(
            gemm(&a, &a),
            Err(ConvError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gemm_matches_f64_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Odd sizes and a K larger than one cache block exercise every edge.
        for &(m, k, n) in &[(37, 23, 41), (9, 300, 5), (130, 7, 1)] {
            let a = random_matrix(m, k, &mut rng);
            let b = random_matrix(k, n, &mut rng);
            let (c, cost) = gemm(&a, &b).unwrap();
            assert_eq!(cost.macs, (m * n * k) as u64);
            for i in 0..m {
                for j in 0..n {
                    let want: f64 = (0..k)
                        .map(|p| a.get(i, p) as f64 * b.get(p, j) as f64)
                        .sum();
                    let err = (c.get(i, j) as f64 - want).abs() / want.abs().max(1.0);
                    assert!(err <= 1e-5, "({i},{j}) err {err}");
                }
            }
        }
    }

    #[test]
    fn conv_im2col_small_cases() {
        let (y, cost) = conv2d_im2col(&grid3(), &Filter2D::ones(2, 2).unwrap()).unwrap();
        assert_eq!(y.data(), &[12., 16., 24., 28.]);
        assert_eq!(cost.macs, 16);
        assert_eq!(cost.im2col_elems, 16);

        let f = Filter2D::new(1, 1, vec![2.5]).unwrap();
        let (y, _) = conv2d_im2col(&grid3(), &f).unwrap();
        let scaled: Vec<f32> = grid3().data().iter().map(|v| v * 2.5).collect();
        assert_eq!(y.data(), &scaled[..]);
    }

    #[test]
    fn conv_im2col_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor2D::random(128, 128, &mut rng).unwrap();
        let f = Filter2D::random(11, 11, &mut rng).unwrap();
        let (y, _) = conv2d_im2col(&x, &f).unwrap();
        let err = max_rel_error(&y, &oracle_conv2d(&x, &f).unwrap());
        assert!(err <= tolerance(11, 11), "{err}");
    }

    #[test]
    fn bloat_ratio_values() {
        let r = bloat_ratio(&ConvShape::new(512, 512, 3, 3).unwrap());
        assert!((r - 260_100.0 * 9.0 / 262_144.0).abs() < 1e-12);
        assert!((r - 8.93).abs() < 0.01);
        assert!(bloat_ratio(&ConvShape::new(7, 9, 1, 1).unwrap()) <= 1.0);
        let long = bloat_ratio(&ConvShape::new(1, 1_000_000, 1, 7).unwrap());
        assert!((long - 7.0).abs() < 1e-4);
    }
}
