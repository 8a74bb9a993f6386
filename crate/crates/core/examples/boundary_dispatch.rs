//! Which kernel the dispatcher picks for each filter width, and what changes
//! when the `V + 1` width is forced onto the generic kernel.

use slideconv::{select_kernel, select_kernel_with, BoundaryPolicy, KernelVariant, VectorModel};

fn main() -> Result<(), slideconv::ConvError> {
    for lanes in [4, 8, 16] {
        let vm = VectorModel::new(lanes)?;
        let picks: Vec<String> = (1..=lanes + 3)
            .map(|k| format!("{k}:{}", select_kernel(k, k, &vm)))
            .collect();
        println!("V={lanes:<2} {}", picks.join(" "));
        let k = lanes + 1;
        println!(
            "      k={k} with generic boundary policy -> {}, applicable: {:?}",
            select_kernel_with(k, k, &vm, BoundaryPolicy::Generic),
            KernelVariant::applicable(k, k, &vm)
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
