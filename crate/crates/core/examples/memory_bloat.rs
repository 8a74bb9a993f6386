//! How much memory the im2col column matrix costs compared with the input.

use slideconv::{bloat_ratio, im2col_2d, ConvShape, Tensor2D};

fn main() -> Result<(), slideconv::ConvError> {
    println!(
        "{:>4} {:>14} {:>10} {:>10}",
        "k", "column floats", "ratio", "MiB"
    );
    for k in [1, 3, 5, 11, 17, 33, 51] {
        let shape = ConvShape::new(512, 512, k, k)?;
        let elems = shape.out_len() * shape.taps();
        println!(
            "{k:>4} {elems:>14} {:>10.3} {:>10.1}",
            bloat_ratio(&shape),
            (elems * 4) as f64 / (1 << 20) as f64
        );
    }

    let signal = Tensor2D::from_fn(1, 4096, |_, c| c as f32)?;
    let (cols, cost) = im2col_2d(&signal, 1, 11)?;
    println!(
        "1-D signal of 4096, k=11: {} rows x {} cols, ratio {:.3}",
        cols.matrix().rows(),
        cols.matrix().cols(),
        cost.im2col_elems as f64 / 4096.0
    );
    Ok(())
}
