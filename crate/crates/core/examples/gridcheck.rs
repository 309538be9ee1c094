//! Frozen-grid stability of the initial design and its sign-flipped twin.

use modal_codesign::cli::build_problem;
use modal_codesign::config::RunConfig;
use modal_codesign::shaping::BlockLayout;

fn main() -> modal_codesign::Result<()> {
    let cfg = RunConfig::for_model("mmpa_lite");
    let problem = build_problem(&cfg, BlockLayout::Six)?;
    let init = problem.initial_params(1.0, 1e-10)?;
    for (name, p) in [("initial", init.clone()), ("sign-flipped", init.sign_flipped())] {
        let cert = problem.grid_stability_check(&p)?;
        let stable = cert.hurwitz.iter().filter(|h| **h).count();
        println!(
            "{name:>12}: {stable}/{} Hurwitz, worst abscissa {:.4}",
            cert.points.len(),
            cert.worst_abscissa()
        );
    }
    Ok(())
}
