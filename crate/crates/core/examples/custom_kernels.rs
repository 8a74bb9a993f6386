//! The 3x3 and 5x5 kernels reuse each slid input vector for every output row
//! that reads it, so they need fewer slides than the generic kernel.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slideconv::{
    conv2d_custom3, conv2d_custom5, conv2d_slide_generic, CostCounters, Filter2D, Result, Tensor2D,
    VectorModel,
};

type Kernel = fn(&Tensor2D, &Filter2D, &VectorModel) -> Result<(Tensor2D, CostCounters)>;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = Tensor2D::random(512, 512, &mut rng)?;
    for lanes in [4, 8, 16] {
        let vm = VectorModel::new(lanes)?;
        for (k, custom) in [(3, conv2d_custom3 as Kernel), (5, conv2d_custom5)] {
            let f = Filter2D::random(k, k, &mut rng)?;
            let t = Instant::now();
            let (a, ca) = custom(&x, &f, &vm)?;
            let custom_time = t.elapsed();
            let t = Instant::now();
            let (b, cb) = conv2d_slide_generic(&x, &f, &vm)?;
            let generic_time = t.elapsed();
            assert_eq!(a, b);
            println!(
                "V={lanes:<2} {k}x{k}: custom {:>8} slides {:>9.2?}   generic {:>8} slides {:>9.2?}",
                ca.slides, custom_time, cb.slides, generic_time
            );
        }
    }
    Ok(())
}
