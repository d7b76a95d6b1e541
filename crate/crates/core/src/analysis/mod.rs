//! Closed-form zigzag-cycle predicates and error-floor bounds.

mod bound;
mod zigzag;

pub use bound::{
    epsilon_star, floor_bound_awgn, floor_bound_bsc, floor_bound_general, floor_bound_sampled, sigma_star,
    FloorBound, SampledFloorBound, TAIL_FRACTION,
};
pub use zigzag::{
    aggregate_margin, aggregate_margin_direct, corollary1_check, CyclePredicate, corollary2_predicate, p_zz, theorem1_outcome,
    theorem1_predicate, ChiConvention, PredicateOutcome, Verdict, ZigzagInstance, PREDICATE_TIE_TOLERANCE,
};
