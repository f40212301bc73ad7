//! Couplings of the process: the step-flip map, sampling conditioned on an
//! observed window, the window coupling with eventual agreement, and the
//! coupling that splits off the marker data.

mod conditioned;
mod couple;
mod flip;
mod split;

pub use conditioned::{
    enumerate_conditional_law, sample_conditioned, window_key, ConditionedLaw, WindowHistogram,
};
pub use couple::{couple, marginal_check, CoupleStatus, Coupler, CouplingTranscript};
pub use flip::flip_map;
pub use split::{
    conditional_independence_stat, split_couple, SplitCoupler, SplitStatus, SplitTranscript,
};
