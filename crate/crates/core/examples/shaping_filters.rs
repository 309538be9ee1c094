//! Magnitudes of the 6-block weighting filters.

use modal_codesign::benchplant::two_mass_spec;
use modal_codesign::config::default_shaping;
use modal_codesign::linalg::logspace;
use modal_codesign::shaping::{channel_mag, ShapingFilterSet};

fn main() -> modal_codesign::Result<()> {
    let params = default_shaping(&two_mass_spec());
    let w = ShapingFilterSet::six_block(&params)?;
    let ww3 = w.ww3.as_ref().expect("6-block has a damping weight");
    println!("{:>10} {:>12} {:>12} {:>12}", "Hz", "|Wz1|", "|Wz2|", "|Ww3|");
    for f in logspace(-1.0, 3.0, 17) {
        println!(
            "{f:10.3} {:12.4e} {:12.4e} {:12.4e}",
            channel_mag(&w.wz1, 0, f),
            channel_mag(&w.wz2, 0, f),
            channel_mag(ww3, 0, f)
        );
    }
    Ok(())
}
