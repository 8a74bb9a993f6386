//! Sliding-window sum and max in a logarithmic number of passes.

use slideconv::pool::{window_max_stages, window_sum_stages};
use slideconv::{sliding_window_max, sliding_window_sum, Tensor2D, VectorModel};

fn main() -> Result<(), slideconv::ConvError> {
    let vm = VectorModel::new(8)?;
    let x = Tensor2D::row((0..20).map(|i| ((i * 7) % 10) as f32).collect())?;
    println!("x       = {:?}", x.data());
    let (sum, cost) = sliding_window_sum(&x, 5, &vm)?;
    println!("sum k=5 = {:?}  ({} passes)", sum.data(), cost.stages);
    let (max, cost) = sliding_window_max(&x, 5, &vm)?;
    println!("max k=5 = {:?}  ({} passes)", max.data(), cost.stages);

    println!("\n{:>4} {:>10} {:>10}", "k", "sum passes", "max passes");
    for k in [1, 2, 3, 7, 8, 13, 31, 32, 64] {
        println!(
            "{k:>4} {:>10} {:>10}",
            window_sum_stages(k),
            window_max_stages(k)
        );
    }
    Ok(())
}
