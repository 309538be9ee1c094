//! Structured co-design of `diag(K_RB, L, K_FM)` on the 6-block and 4-block
//! interconnections with frozen-grid stability certification.

mod optimize;
mod params;
mod plant;
mod problem;
mod uncertainty;

pub use optimize::{
    synthesize, synthesize_logged, IterateRecord, OptimizerOptions, Phase, SynthesisResult,
};
pub use params::{
    FreeSet, KrbChannel, ParamScaling, ParamsDoc, StructuredControllerParams,
    KRB_PARAMS_PER_CHANNEL,
};
pub use plant::{DesignPlant, PlantSummary};
pub use problem::{ChannelMap, ClosedLoopMap, GridCertificate, SynthesisProblem};
pub use uncertainty::{
    build_uncertain_plant, weighted_deviation, UncertainPlant, VERIFICATION_POINTS,
};
