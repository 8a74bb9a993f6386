use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slideconv::bench::{
    emit_csv, emit_metadata, emit_plot_data, run_benchmark, verify_suite, BenchConfig,
    VerifyConfig, DEFAULT_FILTER_SIZES,
};
use slideconv::{KernelVariant, VectorModel};

#[derive(Parser)]
#[command(
    version,
    about = "Sliding-window convolution benchmark and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time every applicable kernel over a sweep of square filter sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FILTER_SIZES)]
        filter_sizes: Vec<usize>,
        /// Input size as HxW.
        #[arg(long, default_value = "512x512", value_parser = parse_dims)]
        input: (usize, usize),
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 5)]
        warmup: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        lanes: usize,
        #[arg(long, default_value = "im2col_gemm")]
        baseline: KernelVariant,
        /// Only run these kernels (repeatable). The baseline always runs.
        #[arg(long = "variant")]
        variants: Vec<KernelVariant>,
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
        /// Directory for speedup.dat and throughput.dat.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        /// Constant roofline series in GFLOPS for throughput.dat.
        #[arg(long)]
        roofline: Option<f64>,
        /// Force scalar emulation of the vector unit.
        #[arg(long)]
        emulate: bool,
    },
    /// Randomized correctness checks against the 64-bit oracle.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        lanes: usize,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(h)?, parse(w)?))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Bench {
            filter_sizes,
            input,
            reps,
            warmup,
            seed,
            lanes,
            baseline,
            variants,
            out,
            plot_dir,
            roofline,
            emulate,
        } => {
            let mut vm = VectorModel::new(lanes)?;
            if emulate {
                vm = vm.with_backend(slideconv::Backend::Scalar);
            }
            let cfg = BenchConfig {
                filter_sizes,
                input_h: input.0,
                input_w: input.1,
                reps,
                warmup,
                seed,
                vm,
                baseline,
                variants: (!variants.is_empty()).then_some(variants),
                roofline_gflops: roofline,
                ..Default::default()
            };
            eprintln!(
                "bench: {}x{} input, {} reps, V={} ({})",
                cfg.input_h,
                cfg.input_w,
                cfg.reps,
                lanes,
                vm.isa()
            );
            let run = run_benchmark(&cfg)?;
            for w in &run.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{:<12} {:>4} {:>12} {:>10} {:>9}",
                "variant", "k", "median_ns", "gflops", "speedup"
            );
            for r in &run.records {
                println!(
                    "{:<12} {:>4} {:>12} {:>10.3} {:>9.2}",
                    r.variant.name(),
                    r.kw,
                    r.median_ns,
                    r.gflops,
                    r.speedup
                );
            }
            emit_csv(&run.records, &out)?;
            let mut meta = out.clone().into_os_string();
            meta.push(".meta");
            emit_metadata(&run, &cfg, &PathBuf::from(meta))?;
            if let Some(dir) = plot_dir {
                let (s, t) = emit_plot_data(&run.records, &cfg, &dir)?;
                eprintln!("wrote {} and {}", s.display(), t.display());
            }
            eprintln!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            trials,
            seed,
            lanes,
        } => {
            let vm = VectorModel::new(lanes)?;
            let report = verify_suite(&VerifyConfig::new(seed, trials, vm));
            print!("{report}");
            println!(
                "V={} ({}) {}",
                lanes,
                vm.isa(),
                if report.passed() { "ok" } else { "FAILED" }
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
