//! Error-observer co-design on the two-mass plant.

use modal_codesign::cli::run_synthesis;
use modal_codesign::config::RunConfig;
use modal_codesign::shaping::BlockLayout;

fn main() -> modal_codesign::Result<()> {
    let mut cfg = RunConfig::for_model("two_mass");
    cfg.set_budget(400);
    let (_, r) = run_synthesis(&cfg, BlockLayout::Four, None)?;
    println!(
        "gamma {:.3} -> {:.3}, flexible peak {:.3} -> {:.3}",
        r.conventional.metrics.gamma,
        r.proposed.metrics.gamma,
        r.conventional.metrics.flex_peak,
        r.proposed.metrics.flex_peak
    );
    println!("observer states: {}", r.observer_state_dim);
    Ok(())
}
