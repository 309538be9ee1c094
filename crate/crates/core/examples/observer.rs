//! Output-based and error-based modal observers on the two-mass plant.

use modal_codesign::benchplant::two_mass_spec;
use modal_codesign::observer::{
    build_error_observer, build_output_observer, error_observer_gain, output_observer_gain,
    selection_matrix, ObserverKind,
};
use modal_codesign::synthesis::DesignPlant;

fn main() -> modal_codesign::Result<()> {
    let plant = DesignPlant::from_benchmark(&two_mass_spec())?;
    let controlled = [0];

    let care = output_observer_gain(&plant.truncated, 1.0, 1e-10)?;
    let psi = selection_matrix(&plant.pm, &controlled, ObserverKind::OutputBased)?;
    let out = build_output_observer(&plant.truncated, &care.l, &psi)?;
    println!(
        "output-based: {} states, error abscissa {:.3}",
        out.state_dim(),
        out.error_abscissa
    );

    let care = error_observer_gain(&plant.pm, &plant.p_star, &plant.pair, 1.0, 1e-10)?;
    let psi = selection_matrix(&plant.pm, &controlled, ObserverKind::ErrorBased)?;
    let err = build_error_observer(&plant.pm, &plant.p_star, &plant.pair, &care.l, &psi)?;
    println!(
        "error-based:  {} states, error abscissa {:.3}",
        err.state_dim(),
        err.error_abscissa
    );
    Ok(())
}
