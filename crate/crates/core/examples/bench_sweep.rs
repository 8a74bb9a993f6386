//! A short benchmark sweep written as CSV plus plot data.
//!
//! cargo run --release --example bench_sweep -- [OUT_DIR]

use std::path::PathBuf;

use slideconv::bench::{
    emit_csv, emit_plot_data, run_benchmark, BenchConfig, REFERENCE_ROOFLINE_GFLOPS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("slideconv-sweep"));
    let cfg = BenchConfig {
        filter_sizes: vec![3, 5, 11, 17],
        input_h: 256,
        input_w: 256,
        reps: 5,
        warmup: 1,
        roofline_gflops: Some(REFERENCE_ROOFLINE_GFLOPS),
        ..Default::default()
    };
    let run = run_benchmark(&cfg)?;
    for r in &run.records {
        println!(
            "{:<12} k={:<3} {:>10} ns {:>8.2} GFLOPS {:>7.2}x",
            r.variant.name(),
            r.kw,
            r.median_ns,
            r.gflops,
            r.speedup
        );
    }
    let csv = dir.join("bench.csv");
    emit_csv(&run.records, &csv)?;
    let (s, t) = emit_plot_data(&run.records, &cfg, &dir)?;
    println!("wrote {}, {}, {}", csv.display(), s.display(), t.display());
    Ok(())
}
