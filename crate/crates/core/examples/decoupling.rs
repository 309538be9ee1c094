//! Rigid-body decoupling of the planar stage at its design point.

use modal_codesign::benchplant::mmpa_lite_spec;
use modal_codesign::decoupling::check_decoupling;
use modal_codesign::synthesis::DesignPlant;

fn main() -> modal_codesign::Result<()> {
    let spec = mmpa_lite_spec();
    let plant = DesignPlant::from_benchmark(&spec)?;
    let chk = check_decoupling(&plant.pm, &plant.p_star, &plant.pair)?;
    println!("design point {:?}", plant.p_star);
    println!("T_u =\n{}", plant.pair.t_u);
    println!("T_y =\n{}", plant.pair.t_y);
    println!("input residual  {:.3e}", chk.input_residual);
    println!("output residual {:.3e}", chk.output_residual);
    println!("flex leakage    {:.3e}", chk.flex_leakage);
    Ok(())
}
