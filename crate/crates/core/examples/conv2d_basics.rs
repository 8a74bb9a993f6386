//! Convolve a random image with every kernel that supports the filter and
//! compare against the 64-bit oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slideconv::{
    conv2d, conv2d_auto, max_rel_error, oracle_conv2d, select_kernel, tolerance, Filter2D,
    KernelVariant, Tensor2D, VectorModel,
};

fn main() -> Result<(), slideconv::ConvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Tensor2D::random(96, 100, &mut rng)?;
    let f = Filter2D::random(7, 7, &mut rng)?;
    let vm = VectorModel::new(16)?;
    let want = oracle_conv2d(&x, &f)?;

    println!("input 96x100, filter 7x7, V=16 on {}", vm.isa());
    println!(
        "{:<12} {:>10} {:>8} {:>12}",
        "variant", "macs", "slides", "rel_error"
    );
    for v in KernelVariant::applicable(f.kh(), f.kw(), &vm) {
        let (y, cost) = conv2d(&x, &f, v, &vm)?;
        println!(
            "{:<12} {:>10} {:>8} {:>12.2e}",
            v.name(),
            cost.macs,
            cost.slides,
            max_rel_error(&y, &want)
        );
    }
    println!("tolerance {:.1e}", tolerance(f.kh(), f.kw()));

    let (y, _) = conv2d_auto(&x, &f, &vm)?;
    println!(
        "auto picks {} -> output {}x{}",
        select_kernel(f.kh(), f.kw(), &vm),
        y.height(),
        y.width()
    );
    Ok(())
}
