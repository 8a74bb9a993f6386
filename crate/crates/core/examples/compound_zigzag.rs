//! Slide counts of the compound kernel for wide filters. The number of
//! hardware vectors per compound register jumps whenever `kw - 1` crosses a
//! multiple of `V`, so the overhead over ideal packing is not monotone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slideconv::slide::{compound_alignment_overhead, compound_len, compound_row_slides};
use slideconv::{conv2d_slide_compound, Filter2D, Tensor2D, VectorModel};

fn main() -> Result<(), slideconv::ConvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vm = VectorModel::new(16)?;
    let x = Tensor2D::random(128, 128, &mut rng)?;
    println!(
        "{:>4} {:>3} {:>10} {:>12} {:>9}",
        "k", "m", "row slides", "counted", "overhead"
    );
    for k in [17, 21, 29, 33, 37, 41, 49, 51] {
        let f = Filter2D::random(k, k, &mut rng)?;
        let (_, cost) = conv2d_slide_compound(&x, &f, &vm)?;
        println!(
            "{k:>4} {:>3} {:>10} {:>12} {:>9.4}",
            compound_len(k, 16),
            compound_row_slides(k, 16),
            cost.slides,
            compound_alignment_overhead(k, 16)
        );
    }
    Ok(())
}
