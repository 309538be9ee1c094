//! H-infinity norm of a lightly damped resonance.

use modal_codesign::statespace::{hinf_norm_grid, hinf_norm_with, HinfOptions};
use modal_codesign::StateSpaceModel;
use nalgebra::dmatrix;

fn main() -> modal_codesign::Result<()> {
    let g = StateSpaceModel::new(
        dmatrix![0.0, 1.0; -1.0, -0.2],
        dmatrix![0.0; 1.0],
        dmatrix![1.0, 0.0],
        dmatrix![0.0],
    )?;
    let h = hinf_norm_with(&g, &HinfOptions::default())?;
    println!("bisection: {:.6} at {:.4} rad/s", h.value, h.peak_w);
    println!("dense grid: {:.6}", hinf_norm_grid(&g, 100_000)?);
    Ok(())
}
