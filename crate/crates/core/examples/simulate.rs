//! Band-disturbance tracking error with and without flexible-mode feedback.

use modal_codesign::analysis::{compare_time_domain, scheduled_simulation};
use modal_codesign::cli::run_synthesis;
use modal_codesign::config::RunConfig;
use modal_codesign::shaping::BlockLayout;
use modal_codesign::synthesis::StructuredControllerParams;

fn main() -> modal_codesign::Result<()> {
    let mut cfg = RunConfig::for_model("two_mass");
    cfg.set_budget(400);
    let (problem, r) = run_synthesis(&cfg, BlockLayout::Six, None)?;
    let on = StructuredControllerParams::from_doc(&r.proposed.result.params)?;
    let off = StructuredControllerParams::from_doc(&r.conventional.result.params)?;
    let opts = cfg.time_domain_options();
    let cmp = compare_time_domain(&problem, &on, &off, &opts)?;
    println!(
        "rms on {:.4e}, off {:.4e}, ratio {:.3}",
        cmp.rms_on, cmp.rms_off, cmp.ratio
    );
    let sched = scheduled_simulation(&problem, &on, &opts, cfg.levels)?;
    println!(
        "scheduled sweep: max |e| {:.4e}, bounded {}",
        sched.max_abs_error, sched.bounded
    );
    Ok(())
}
