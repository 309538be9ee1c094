//! Mass-normalized modes of the two-mass benchmark.

use modal_codesign::benchplant::make_two_mass;
use modal_codesign::mechanics::modal_decompose;

fn main() -> modal_codesign::Result<()> {
    let model = make_two_mass();
    let dec = modal_decompose(&model)?;
    println!("rigid-body modes: {}", dec.n_rb);
    for (k, f) in dec.frequencies_hz().iter().enumerate() {
        println!("mode {k}: {f:8.3} Hz");
    }
    let g = model.evaluate_local(&[0.5])?;
    println!("local model at p = 0.5: {} states", g.nx());
    Ok(())
}
