//! Randomized self-check of every kernel against the oracle and the
//! counter laws.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pool::{sliding_window_max, sliding_window_sum, window_max_stages, window_sum_stages};
use crate::reference::{mac_count, max_rel_error, oracle_conv2d, tolerance};
use crate::simd::VectorModel;
use crate::slide::{compound_row_slides, generic_row_slides};
use crate::tensor::{ConvShape, CostCounters, Filter2D, Tensor2D};
use crate::variant::{conv2d, select_kernel, select_kernel_with, BoundaryPolicy, KernelVariant};

/// Deliberate corruption used to check that the suite notices failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Perturb one output element in the oracle-agreement trials.
    CorruptOutput,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: usize,
    pub vm: VectorModel,
    /// Largest input dimension drawn for random trials.
    pub max_dim: usize,
    pub fault: Option<Fault>,
}

impl VerifyConfig {
    pub fn new(seed: u64, trials: usize, vm: VectorModel) -> Self {
        Self {
            seed,
            trials: trials.max(1),
            vm,
            max_dim: 64,
            fault: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Worst relative error seen, for properties with a tolerance.
    pub worst_error: Option<f64>,
    /// First failure, if any.
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub lanes: usize,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.properties
            .iter()
            .filter(|p| !p.passed)
            .map(|p| p.name)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.properties {
            write!(
                f,
                "{} {:<18} cases={:<6}",
                if p.passed { "PASS" } else { "FAIL" },
                p.name,
                p.cases
            )?;
            if let Some(e) = p.worst_error {
                write!(f, " worst_rel_err={e:.3e}")?;
            }
            if let Some(d) = &p.detail {
                write!(f, "  {d}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Check {
    name: &'static str,
    cases: usize,
    worst: Option<f64>,
    detail: Option<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            worst: None,
            detail: None,
        }
    }

    fn record(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.detail.is_none() {
            self.detail = Some(msg());
        }
    }

    fn error(&mut self, err: f64, bound: f64, msg: impl FnOnce() -> String) {
        self.worst = Some(self.worst.unwrap_or(0.0).max(err));
        self.record(err <= bound, msg);
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            passed: self.detail.is_none(),
            cases: self.cases,
            worst_error: self.worst,
            detail: self.detail,
        }
    }
}

fn ramp(h: usize, w: usize) -> Tensor2D {
    Tensor2D::from_fn(h, w, |r, c| (r * w + c) as f32).unwrap()
}

/// Counted slides a kernel must report for `shape`, when the count has a
/// closed form.
fn expected_slides(variant: KernelVariant, shape: &ConvShape, lanes: usize) -> Option<u64> {
    let vectors = (shape.out_h * (shape.out_w / lanes)) as u64;
    match variant {
        KernelVariant::Naive | KernelVariant::Im2colGemm => Some(0),
        KernelVariant::SlideGeneric => {
            Some(vectors * shape.kh as u64 * generic_row_slides(shape.kw, lanes))
        }
        KernelVariant::SlideCompound => {
            Some(vectors * shape.kh as u64 * compound_row_slides(shape.kw, lanes))
        }
        KernelVariant::Custom3 | KernelVariant::Custom5 => {
            let k = shape.kh;
            let column_vectors = (shape.out_w / lanes) as u64;
            Some(shape.in_h as u64 * column_vectors * generic_row_slides(k, lanes))
        }
    }
}

/// Runs the randomized correctness suite and reports each property.
pub fn verify_suite(cfg: &VerifyConfig) -> VerifyReport {
    let vm = cfg.vm;
    let lanes = vm.lanes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut oracle = Check::new("oracle_agreement");
    let mut parity = Check::new("flop_parity");
    let mut slides = Check::new("slide_counts");
    let mut boundary = Check::new("boundary_shapes");
    let mut injected = false;

    let run_case = |x: &Tensor2D,
                    f: &Filter2D,
                    target: &mut Check,
                    parity: &mut Check,
                    slides: &mut Check,
                    corrupt: bool| {
        let shape = ConvShape::of(x, f).unwrap();
        let want = oracle_conv2d(x, f).unwrap();
        let tol = tolerance(f.kh(), f.kw());
        let mut generic_cost: Option<CostCounters> = None;
        let mut custom_cost: Option<CostCounters> = None;
        for (i, variant) in KernelVariant::applicable(f.kh(), f.kw(), &vm)
            .into_iter()
            .enumerate()
        {
            let label = || {
                format!(
                    "{variant} {}x{} on {}x{}",
                    f.kh(),
                    f.kw(),
                    x.height(),
                    x.width()
                )
            };
            let (mut y, cost) = match conv2d(x, f, variant, &vm) {
                Ok(r) => r,
                Err(e) => {
                    target.record(false, || format!("{}: {e}", label()));
                    continue;
                }
            };
            if corrupt && i == 0 {
                y.data_mut()[0] += 1.0;
            }
            let err = max_rel_error(&y, &want);
            target.error(err, tol, || {
                format!("{}: rel err {err:.3e} > {tol:.1e}", label())
            });
            let macs = mac_count(&shape);
            parity.record(cost.macs == macs, || {
                format!("{}: macs {} != {macs}", label(), cost.macs)
            });
            if let Some(want_slides) = expected_slides(variant, &shape, lanes) {
                slides.record(cost.slides == want_slides, || {
                    format!("{}: slides {} != {want_slides}", label(), cost.slides)
                });
            }
            match variant {
                KernelVariant::SlideGeneric => generic_cost = Some(cost),
                KernelVariant::Custom3 | KernelVariant::Custom5 => custom_cost = Some(cost),
                _ => {}
            }
        }
        if let (Some(g), Some(c)) = (generic_cost, custom_cost) {
            if shape.out_h >= 2 && shape.out_w >= lanes {
                slides.record(c.slides < g.slides, || {
                    format!("custom slides {} not below generic {}", c.slides, g.slides)
                });
            }
        }
    };

    // Random shapes, with custom-sized filters and the V+1 boundary drawn
    // more often than a uniform pick would.
    for _ in 0..cfg.trials {
        let k_max = (lanes + 9).min(cfg.max_dim);
        let (kh, kw) = match rng.random_range(0..6) {
            0 => (3, 3),
            1 => (5, 5),
            2 => {
                let k = (lanes + 1).min(k_max);
                (k, k)
            }
            3 => (rng.random_range(1..=k_max), rng.random_range(1..=k_max)),
            _ => {
                let k = rng.random_range(1..=k_max);
                (k, k)
            }
        };
        let h = rng.random_range(kh..=cfg.max_dim.max(kh));
        let w = rng.random_range(kw..=cfg.max_dim.max(kw));
        let x = Tensor2D::random(h, w, &mut rng).unwrap();
        let f = Filter2D::random(kh, kw, &mut rng).unwrap();
        let corrupt = cfg.fault == Some(Fault::CorruptOutput) && !injected;
        injected |= corrupt;
        run_case(&x, &f, &mut oracle, &mut parity, &mut slides, corrupt);
    }

    // Widths around the generic/compound boundary, on dimensions coprime
    // with the lane count.
    for k in [lanes - 1, lanes, lanes + 1, lanes + 2] {
        for extra in [0, 1, 2 * lanes + 3] {
            let h = (k + 2 + extra) | 1;
            let w = (k + lanes + extra) | 1;
            let x = Tensor2D::random(h, w, &mut rng).unwrap();
            let f = Filter2D::random(k, k, &mut rng).unwrap();
            run_case(&x, &f, &mut boundary, &mut parity, &mut slides, false);
            let chosen = select_kernel(k, k, &vm);
            boundary.record(chosen.supports(k, k, &vm), || {
                format!("select_kernel({k}) chose {chosen}")
            });
        }
    }

    let mut delta = Check::new("delta_crop");
    for k in [1, 3, 5, lanes - 1, lanes + 1] {
        let k = k | 1;
        let inset = k / 2;
        let x = ramp(k + 2 * lanes + 1, k + 3 * lanes + 2);
        let f = Filter2D::delta_center(k, k).unwrap();
        let want: Vec<f32> = (inset..x.height() - inset)
            .flat_map(|r| x.row_slice(r)[inset..x.width() - inset].to_vec())
            .collect();
        for variant in KernelVariant::applicable(k, k, &vm) {
            let ok = conv2d(&x, &f, variant, &vm).is_ok_and(|(y, _)| y.data() == &want[..]);
            delta.record(ok, || {
                format!("{variant} {k}x{k} delta is not an exact crop")
            });
        }
    }

    let mut totality = Check::new("dispatch_totality");
    let width = 2 * lanes + 7;
    for kw in 1..=width {
        for kh in [1, 3, 5] {
            let served = KernelVariant::ALL.iter().any(|v| {
                *v != KernelVariant::Naive
                    && *v != KernelVariant::Im2colGemm
                    && v.supports(kh, kw, &vm)
            });
            totality.record(served, || format!("no slide kernel accepts {kh}x{kw}"));
            for policy in [BoundaryPolicy::Compound, BoundaryPolicy::Generic] {
                let v = select_kernel_with(kh, kw, &vm, policy);
                totality.record(v.supports(kh, kw, &vm), || {
                    format!("select_kernel({kh},{kw}) chose {v}")
                });
            }
        }
    }

    let mut pool_sum = Check::new("pooling_sum");
    let mut pool_max = Check::new("pooling_max");
    for _ in 0..cfg.trials.min(64) {
        let n = rng.random_range(1..=512);
        let k = rng.random_range(1..=n.min(64));
        let x = Tensor2D::random(1, n, &mut rng).unwrap();
        match sliding_window_sum(&x, k, &vm) {
            Ok((y, cost)) => {
                let err = y
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let want: f64 = x.data()[i..i + k].iter().map(|&e| e as f64).sum();
                        (v as f64 - want).abs() / want.abs().max(1.0)
                    })
                    .fold(0.0, f64::max);
                pool_sum.error(err, 1e-5, || format!("sum k={k} n={n}: rel err {err:.3e}"));
                let bound = 2 * (k.next_power_of_two().ilog2() as u64);
                pool_sum.record(
                    cost.stages <= bound && cost.stages == window_sum_stages(k),
                    || format!("sum k={k}: {} stages, bound {bound}", cost.stages),
                );
            }
            Err(e) => pool_sum.record(false, || e.to_string()),
        }
        match sliding_window_max(&x, k, &vm) {
            Ok((y, cost)) => {
                let exact = y.data().iter().enumerate().all(|(i, &v)| {
                    v == x.data()[i..i + k]
                        .iter()
                        .copied()
                        .fold(f32::NEG_INFINITY, f32::max)
                });
                pool_max.record(exact, || format!("max k={k} n={n} differs from direct max"));
                pool_max.record(cost.stages == window_max_stages(k), || {
                    format!("max k={k}: {} stages", cost.stages)
                });
            }
            Err(e) => pool_max.record(false, || e.to_string()),
        }
    }

    VerifyReport {
        lanes,
        properties: vec![
            oracle.finish(),
            parity.finish(),
            slides.finish(),
            boundary.finish(),
            delta.finish(),
            totality.finish(),
            pool_sum.finish(),
            pool_max.finish(),
        ],
    }
}
