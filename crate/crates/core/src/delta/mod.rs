//! The δ-model: δ-spacelike configurations, their partitions, and the
//! consistent multi-time Dirac evolution with a range-δ pair potential.

pub mod construct;
pub mod partition;

pub use construct::{
    construct_phi, construct_slice, order_independence, overlap_welldefinedness, spinor_deviation, Construction,
    ConstructionComparison, ConstructionOrder, ConstructionPlan, ConstructOptions, DeltaModel, DeviationReport, Leg,
    LegRecord, MultiTimeSlice,
};
pub use partition::{
    admissible_partitions, coarsest_partition, finest_partition, in_s_delta_p, in_s_delta_p_with_margin,
    is_delta_spacelike, is_delta_spacelike_with_margin, is_spacelike, Partition,
};
