//! Sequential line-search Bayesian optimization.
//!
//! Each iteration shows the crowd one slider: a segment from the current
//! best point `x+` (highest predicted mean among observed points) to the
//! maximizer of expected improvement. The median of the reported slider
//! positions selects `x_chosen`, which is recorded as preferred over the
//! segment's endpoints and two nearby probes on the same segment, and the
//! preference GP is refitted.

mod acquisition;
mod gp;
mod normal;
mod optimizer;
mod simulate;

pub use acquisition::{expected_improvement, expected_improvement_from, maximize_acquisition};
pub use gp::{collect_points, fit_preference_gp, Kernel, PreferenceGP, PreferencePair, PreferencePosterior, JITTER, MERGE_TOL};
pub use optimizer::{
    aggregate_responses, init_session, next_slider_space, write_trace_csv, GpConfig, IterationRecord, OptConfig, OptState,
};
pub use simulate::{run_simulated, SimulatedCrowd};
