//! Exact linear degrees-of-freedom analysis for the multi-antenna broadcast
//! channel with heterogeneous (instantaneous, delayed, absent) transmitter
//! channel knowledge.

pub mod channel;
pub mod exactlin;
pub mod lemmalab;
pub mod region;
pub mod schemes;
pub mod strategy;

pub use channel::{csit_view, sample_channel, ChannelError, ChannelRealization, CsitConfig, CsitState, CsitView};
pub use exactlin::{
    conditional_rank, coordinate_intersection_dim, format_rational, hstack, orthogonal_complement, parse_rational,
    rank, vstack, LinalgError, Rational, RationalMatrix,
};
pub use strategy::{
    assemble, random_strategy, run_policy, validate_csit_compliance, CausalPolicy, DecodabilityRecord,
    LinearStrategy, RandomKind, ReceiverSet, StrategyError, Transcript,
};
pub use schemes::{
    achieved_dof, kuser_d1_scheme, pdd_scheme, phase_plan, zero_forcing_scheme, PhasePlan, SchemeError, SchemeKind,
    SchemeSpec,
};
pub use region::{
    averaged_inequality, build_region, outer_bound_sumdof, prop1_bounds, prop2_value, sumdof, table1_golden,
    table1_report, vertices, DofRegion, Inequality, RegionError, SumDofBounds, Table1Row,
};
pub use lemmalab::{run_suite, CheckResult, Counts, LemmaError, LemmaId, SuiteOptions, SuiteReport};
