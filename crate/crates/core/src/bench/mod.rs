//! Single-core benchmark and verification harness.
//!
//! [`run_benchmark`] times every applicable kernel over a sweep of square
//! filter sizes and reports median/min wall time, exact operation counts,
//! GFLOPS and speedup over a baseline kernel. [`verify_suite`] runs the
//! randomized correctness checks. Results are written by [`emit_csv`] and
//! [`emit_plot_data`].

mod output;
pub mod reference;
mod verify;

use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ConvError, HarnessError};
use crate::simd::VectorModel;
use crate::tensor::{ConvShape, Filter2D, Tensor2D};
use crate::variant::{conv2d, KernelVariant};

pub use output::{emit_csv, emit_metadata, emit_plot_data, read_csv, CSV_HEADER};
pub use verify::{verify_suite, Fault, PropertyResult, VerifyConfig, VerifyReport};

/// Filter sizes on the x-axis of the published speedup and throughput
/// sweeps.
pub const DEFAULT_FILTER_SIZES: [usize; 9] = [3, 5, 11, 17, 21, 29, 33, 37, 51];

/// FMA roofline of the machine the published sweep ran on, in GFLOPS.
pub const REFERENCE_ROOFLINE_GFLOPS: f64 = 170.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    /// Square filter sizes `k`; each runs a `k x k` filter.
    pub filter_sizes: Vec<usize>,
    pub input_h: usize,
    pub input_w: usize,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub vm: VectorModel,
    /// Kernel every speedup is measured against.
    pub baseline: KernelVariant,
    /// Restrict the sweep to these kernels. The baseline always runs.
    pub variants: Option<Vec<KernelVariant>>,
    /// Constant series added to the throughput plot.
    pub roofline_gflops: Option<f64>,
    /// Skip im2col runs whose column matrix would exceed this many bytes.
    pub max_im2col_bytes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            filter_sizes: DEFAULT_FILTER_SIZES.to_vec(),
            input_h: 512,
            input_w: 512,
            reps: 30,
            warmup: 5,
            seed: 0x5eed,
            vm: VectorModel::default(),
            baseline: KernelVariant::Im2colGemm,
            variants: None,
            roofline_gflops: None,
            max_im2col_bytes: 1 << 30,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |msg: String| Err(HarnessError::Config(msg));
        if self.reps < 3 {
            return err(format!("reps must be at least 3, got {}", self.reps));
        }
        if self.filter_sizes.is_empty() {
            return err("no filter sizes given".into());
        }
        let limit = self.input_h.min(self.input_w);
        if let Some(&k) = self.filter_sizes.iter().find(|&&k| k == 0 || k >= limit) {
            return err(format!(
                "filter size {k} must be in 1..{limit} for a {}x{} input",
                self.input_h, self.input_w
            ));
        }
        if let Some(r) = self.roofline_gflops {
            if !(r.is_finite() && r > 0.0) {
                return err(format!("roofline must be positive, got {r}"));
            }
        }
        if let Some(vs) = &self.variants {
            if vs.is_empty() {
                return err("empty variant list".into());
            }
        }
        Ok(())
    }

    /// Kernels benchmarked for a `k x k` filter, baseline included.
    pub fn variants_for(&self, k: usize) -> Vec<KernelVariant> {
        let mut vs: Vec<KernelVariant> = KernelVariant::applicable(k, k, &self.vm)
            .into_iter()
            .filter(|v| {
                *v == self.baseline || self.variants.as_ref().is_none_or(|list| list.contains(v))
            })
            .collect();
        vs.sort();
        vs
    }
}

/// One timed `(variant, shape)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub variant: KernelVariant,
    pub kh: usize,
    pub kw: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub median_ns: u64,
    pub min_ns: u64,
    pub macs: u64,
    pub slides: u64,
    pub im2col_elems: u64,
    /// `2 * macs / median_ns`.
    pub gflops: f64,
    /// Baseline median over this record's median, same shape.
    pub speedup: f64,
    /// Sum of output elements.
    pub checksum: f64,
}

/// Records plus everything about the run that is not a per-cell number.
#[derive(Clone, Debug, Default)]
pub struct BenchRun {
    pub records: Vec<BenchRecord>,
    pub pinned_single_core: bool,
    pub timer_granularity_ns: u64,
    pub warnings: Vec<String>,
}

pub fn gflops(macs: u64, median_ns: u64) -> f64 {
    2.0 * macs as f64 / (median_ns as f64 * 1e-9) / 1e9
}

fn filter_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Seeded input shared by every cell of a run.
pub fn bench_input(cfg: &BenchConfig) -> Result<Tensor2D, ConvError> {
    Tensor2D::random(
        cfg.input_h,
        cfg.input_w,
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    )
}

/// Seeded `k x k` filter; independent of which other sizes are swept.
pub fn bench_filter(cfg: &BenchConfig, k: usize) -> Result<Filter2D, ConvError> {
    Filter2D::random(
        k,
        k,
        &mut ChaCha8Rng::seed_from_u64(filter_seed(cfg.seed, k)),
    )
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchRun, HarnessError> {
    cfg.validate()?;
    let mut run = BenchRun {
        pinned_single_core: pin_to_single_core(),
        timer_granularity_ns: timer_granularity().as_nanos().max(1) as u64,
        ..Default::default()
    };
    if !run.pinned_single_core {
        run.warnings
            .push("could not pin to a single core; timings may include migrations".into());
    }
    let x = bench_input(cfg)?;

    let mut sizes = cfg.filter_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for k in sizes {
        let f = bench_filter(cfg, k)?;
        let shape = ConvShape::of(&x, &f)?;
        let mut cells = Vec::new();
        for variant in cfg.variants_for(k) {
            if variant == KernelVariant::Im2colGemm {
                let bytes = shape.out_len() * shape.taps() * std::mem::size_of::<f32>();
                if bytes > cfg.max_im2col_bytes {
                    run.warnings.push(format!(
                        "k={k}: skipped {variant}, column matrix needs {bytes} bytes (limit {})",
                        cfg.max_im2col_bytes
                    ));
                    continue;
                }
            }
            match time_cell(cfg, variant, &x, &f) {
                Ok(rec) => cells.push(rec),
                Err(ConvError::Allocation { elems }) => run.warnings.push(format!(
                    "k={k}: skipped {variant}, allocation of {elems} elements failed"
                )),
                Err(e) => return Err(e.into()),
            }
        }
        let base = cells
            .iter()
            .find(|r| r.variant == cfg.baseline)
            .map(|r| r.median_ns);
        for rec in &mut cells {
            rec.speedup = match base {
                Some(b) => b as f64 / rec.median_ns as f64,
                None => f64::NAN,
            };
            if rec.median_ns < 1000 * run.timer_granularity_ns {
                run.warnings.push(format!(
                    "k={k} {}: median {} ns is under 1000x the timer granularity ({} ns)",
                    rec.variant, rec.median_ns, run.timer_granularity_ns
                ));
            }
        }
        if base.is_none() {
            run.warnings.push(format!(
                "k={k}: baseline {} did not run; speedups are NaN",
                cfg.baseline
            ));
        }
        run.records.extend(cells);
    }
    Ok(run)
}

fn time_cell(
    cfg: &BenchConfig,
    variant: KernelVariant,
    x: &Tensor2D,
    f: &Filter2D,
) -> Result<BenchRecord, ConvError> {
    let (y, cost) = conv2d(x, f, variant, &cfg.vm)?;
    let checksum = y.checksum();
    drop(y);
    for _ in 1..cfg.warmup {
        black_box(conv2d(black_box(x), black_box(f), variant, &cfg.vm)?);
    }
    let mut times = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let start = Instant::now();
        let out = conv2d(black_box(x), black_box(f), variant, &cfg.vm)?;
        let elapsed = start.elapsed();
        black_box(out);
        times.push(elapsed.as_nanos().max(1) as u64);
    }
    times.sort_unstable();
    let median_ns = median(&times);
    Ok(BenchRecord {
        variant,
        kh: f.kh(),
        kw: f.kw(),
        in_h: x.height(),
        in_w: x.width(),
        median_ns,
        min_ns: times[0],
        macs: cost.macs,
        slides: cost.slides,
        im2col_elems: cost.im2col_elems,
        gflops: gflops(cost.macs, median_ns),
        speedup: f64::NAN,
        checksum,
    })
}

fn median(sorted: &[u64]) -> u64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2
    }
}

/// Smallest nonzero step observed between consecutive clock reads.
pub fn timer_granularity() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

/// Restricts the calling thread to the CPU it is running on. Returns
/// whether that succeeded.
#[cfg(target_os = "linux")]
pub fn pin_to_single_core() -> bool {
    // SAFETY: plain syscalls on a zero-initialized, correctly sized cpu_set_t.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return false;
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
pub fn pin_to_single_core() -> bool {
    false
}
