//! Additive uncertainty weight covering the position-dependent flexible columns.

use modal_codesign::benchplant::mmpa_lite_spec;
use modal_codesign::linalg::logspace;
use modal_codesign::synthesis::{build_uncertain_plant, weighted_deviation, DesignPlant};

fn main() -> modal_codesign::Result<()> {
    let spec = mmpa_lite_spec();
    let plant = DesignPlant::from_benchmark(&spec)?;
    let locals = plant.locals()?;
    let centre = locals.len() / 2;
    let cols: Vec<usize> = (plant.n_rb()..plant.n_rb() + plant.n_flex()).collect();
    let up = build_uncertain_plant(locals, centre, &cols)?;
    println!("{:>10} {:>12} {:>12}", "Hz", "deviation", "|W|");
    for f in logspace(0.0, 3.0, 13) {
        let w = 2.0 * std::f64::consts::PI * f;
        println!("{f:10.2} {:12.4e} {:12.4e}", up.deviation(w)?, up.weight_mag(w));
    }
    println!("worst deviation / weight: {:.4}", weighted_deviation(&up)?);
    Ok(())
}
