//! CSV and gnuplot-style plot data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{BenchConfig, BenchRecord, BenchRun};
use crate::error::HarnessError;
use crate::variant::KernelVariant;

pub const CSV_HEADER: &str =
    "variant,kh,kw,in_h,in_w,median_ns,min_ns,macs,slides,im2col_elems,gflops,speedup";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes one header line and one row per record.
pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<(), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Config("no records to write".into()));
    }
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?);
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.variant.name().to_string(),
            r.kh.to_string(),
            r.kw.to_string(),
            r.in_h.to_string(),
            r.in_w.to_string(),
            r.median_ns.to_string(),
            r.min_ns.to_string(),
            r.macs.to_string(),
            r.slides.to_string(),
            r.im2col_elems.to_string(),
            r.gflops.to_string(),
            r.speedup.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Parses a file written by [`emit_csv`]. Checksums are not stored and come
/// back as NaN.
pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>, HarnessError> {
    let parse_err = |msg: String| HarnessError::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let header = rdr
        .headers()
        .map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(parse_err(format!("unexpected header `{header}`")));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let int = |i: usize| {
            field(i)
                .parse::<u64>()
                .map_err(|e| parse_err(format!("row {}: column {i}: {e}", line + 1)))
        };
        let real = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {}: column {i}: {e}", line + 1)))
        };
        out.push(BenchRecord {
            variant: field(0)
                .parse::<KernelVariant>()
                .map_err(|e| parse_err(format!("row {}: {e}", line + 1)))?,
            kh: int(1)? as usize,
            kw: int(2)? as usize,
            in_h: int(3)? as usize,
            in_w: int(4)? as usize,
            median_ns: int(5)?,
            min_ns: int(6)?,
            macs: int(7)?,
            slides: int(8)?,
            im2col_elems: int(9)?,
            gflops: real(10)?,
            speedup: real(11)?,
            checksum: f64::NAN,
        });
    }
    Ok(out)
}

/// Writes `speedup.dat` and `throughput.dat` into `dir`: one block per
/// variant (`k value` lines), blocks separated by a blank line, plus a
/// constant roofline block in `throughput.dat` when configured.
pub fn emit_plot_data(
    records: &[BenchRecord],
    cfg: &BenchConfig,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.kw).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(HarnessError::Config(
            "plot data needs records for at least two filter sizes".into(),
        ));
    }
    let mut series: BTreeMap<KernelVariant, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        series.entry(r.variant).or_default().push(r);
    }
    for points in series.values_mut() {
        points.sort_by_key(|r| r.kw);
    }

    let speedup = dir.join("speedup.dat");
    let throughput = dir.join("throughput.dat");

    let mut w = create(&speedup)?;
    write_blocks(&mut w, &series, |r| r.speedup, None).map_err(io_err(&speedup))?;
    w.flush().map_err(io_err(&speedup))?;

    let roofline = cfg.roofline_gflops.map(|g| (g, sizes.as_slice()));
    let mut w = create(&throughput)?;
    write_blocks(&mut w, &series, |r| r.gflops, roofline).map_err(io_err(&throughput))?;
    w.flush().map_err(io_err(&throughput))?;

    Ok((speedup, throughput))
}

fn write_blocks(
    w: &mut impl Write,
    series: &BTreeMap<KernelVariant, Vec<&BenchRecord>>,
    value: impl Fn(&BenchRecord) -> f64,
    roofline: Option<(f64, &[usize])>,
) -> std::io::Result<()> {
    let mut first = true;
    for (variant, points) in series {
        if !first {
            writeln!(w)?;
        }
        first = false;
        writeln!(w, "# {variant}")?;
        for r in points {
            writeln!(w, "{} {}", r.kw, value(r))?;
        }
    }
    if let Some((g, sizes)) = roofline {
        writeln!(w)?;
        writeln!(w, "# roofline")?;
        for k in sizes {
            writeln!(w, "{k} {g}")?;
        }
    }
    Ok(())
}

/// `key=value` lines describing how a run was produced.
pub fn emit_metadata(run: &BenchRun, cfg: &BenchConfig, path: &Path) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    let sizes: Vec<String> = cfg.filter_sizes.iter().map(|k| k.to_string()).collect();
    let lines = [
        format!("input={}x{}", cfg.input_h, cfg.input_w),
        format!("filter_sizes={}", sizes.join(",")),
        format!("reps={}", cfg.reps),
        format!("warmup={}", cfg.warmup),
        format!("seed={}", cfg.seed),
        format!("lanes={}", cfg.vm.lanes()),
        format!("isa={}", cfg.vm.isa()),
        format!("fused={}", cfg.vm.fused()),
        format!("baseline={}", cfg.baseline),
        "timing=median of reps after warmup".to_string(),
        format!("pinned_single_core={}", run.pinned_single_core),
        format!("timer_granularity_ns={}", run.timer_granularity_ns),
    ];
    for line in &lines {
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    for warning in &run.warnings {
        writeln!(w, "warning={warning}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
