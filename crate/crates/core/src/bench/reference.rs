//! Published Xeon Platinum 8272CL measurements, shipped for side-by-side
//! plotting. Speedups there are against ONNX Runtime's MlasConv, not the
//! in-repo im2col baseline, so they are never compared against local runs.

/// The raw CSV (`series,k,speedup,gflops`, `#` comment lines).
pub const REFERENCE_CSV: &str = include_str!("../../data/reference_xeon_8272cl.csv");

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePoint {
    pub series: &'static str,
    pub k: usize,
    pub speedup: Option<f64>,
    pub gflops: Option<f64>,
}

pub fn reference_points() -> Vec<ReferencePoint> {
    REFERENCE_CSV
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|line| {
            let mut f = line.split(',');
            let series = f.next()?;
            let k = f.next()?.parse().ok()?;
            let speedup = f.next()?.parse().ok();
            let gflops = f.next()?.parse().ok();
            Some(ReferencePoint {
                series,
                k,
                speedup,
                gflops,
            })
        })
        .collect()
}
