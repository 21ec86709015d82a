//! Crowd-in-the-loop design parameter optimization.
//!
//! Two pipelines share the unit-hypercube design space defined in [`space`]:
//!
//! * [`preference_field`] turns pairwise Likert comparisons at sampled
//!   points into absolute goodness values and a continuous RBF field, which
//!   [`guidance`] uses for suggestions, slider profiles and drag-time
//!   co-optimization.
//! * [`linesearch`] maximizes goodness directly with a preference-GP
//!   surrogate, where each query is a single slider between the current best
//!   point and the expected-improvement maximizer.
//!
//! [`sim_crowd`] provides synthetic goodness functions and simulated workers
//! so both pipelines can be exercised offline, and [`photo`] implements the
//! six-parameter color enhancement domain together with the CIEDE2000-based
//! distance used to compare optimization trials.

pub mod error;
pub mod guidance;
pub mod linesearch;
pub mod photo;
pub mod preference_field;
pub mod rng;
mod search;
pub mod sim_crowd;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
pub use rng::Rng;
pub use space::{clamp_to_space, lerp_slider, uniform_sample, DesignPoint, DesignSpace, SliderSpace};

/// Anything that assigns a goodness score to a point of the design space.
pub trait Goodness {
    /// Number of design variables the function expects.
    fn dim(&self) -> usize;

    /// Scores `x`. Callers guarantee `x.len() == self.dim()`.
    fn eval_raw(&self, x: &[f64]) -> f64;

    /// Scores a design point, checking its dimension.
    fn eval(&self, x: &DesignPoint) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::dimension(self.dim(), x.dim()));
        }
        Ok(self.eval_raw(x.coords()))
    }
}

impl<G: Goodness + ?Sized> Goodness for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_raw(&self, x: &[f64]) -> f64 {
        (**self).eval_raw(x)
    }
}
