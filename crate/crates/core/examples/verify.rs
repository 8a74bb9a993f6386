//! Run the randomized self-check at every lane width.

use slideconv::bench::{verify_suite, VerifyConfig};
use slideconv::VectorModel;

fn main() -> Result<(), slideconv::ConvError> {
    let mut all = true;
    for lanes in VectorModel::SUPPORTED_LANES {
        let vm = VectorModel::new(lanes)?;
        let report = verify_suite(&VerifyConfig::new(42, 50, vm));
        println!("V={lanes} ({})", vm.isa());
        print!("{report}");
        all &= report.passed();
    }
    if !all {
        std::process::exit(1);
    }
    Ok(())
}
