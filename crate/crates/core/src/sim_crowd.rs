//! Synthetic goodness functions and simulated crowd workers.
//!
//! These stand in for real people: a worker inspects a slider on a uniform
//! grid and reports the best tick with Gaussian jitter, or compares two
//! designs and maps the noisy goodness difference onto the 5-point scale.

use serde::{Deserialize, Serialize};

use crate::search::compass_maximize;
use crate::space::squared_distance;
use crate::{DesignPoint, Error, Goodness, Result, Rng, SliderSpace};

/// Ground-truth goodness functions with known maximizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "SynthSpec")]
pub enum SynthGoodness {
    /// `exp(-|x - center|^2 / (2 width^2))`, peak value 1 at `center`.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// Weighted sum of two Gaussian bumps; has two local maxima when the
    /// bumps are well separated.
    TwoBumps { centers: [Vec<f64>; 2], widths: [f64; 2], weights: [f64; 2] },
    /// `-scale * |x - center|^2`.
    NegValley { center: Vec<f64>, scale: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SynthSpec {
    GaussianBump { center: Vec<f64>, width: f64 },
    TwoBumps { centers: [Vec<f64>; 2], widths: [f64; 2], weights: [f64; 2] },
    NegValley { center: Vec<f64>, scale: f64 },
}

impl TryFrom<SynthSpec> for SynthGoodness {
    type Error = Error;

    fn try_from(s: SynthSpec) -> Result<Self> {
        match s {
            SynthSpec::GaussianBump { center, width } => Self::gaussian_bump(center, width),
            SynthSpec::TwoBumps { centers, widths, weights } => Self::two_bumps(centers, widths, weights),
            SynthSpec::NegValley { center, scale } => Self::neg_valley(center, scale),
        }
    }
}

fn check_center(center: &[f64]) -> Result<()> {
    DesignPoint::new(center.to_vec()).map(|_| ())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!("{name} must be positive, got {v}")))
    }
}

impl SynthGoodness {
    pub fn gaussian_bump(center: Vec<f64>, width: f64) -> Result<Self> {
        check_center(&center)?;
        check_positive("width", width)?;
        Ok(Self::GaussianBump { center, width })
    }

    pub fn two_bumps(centers: [Vec<f64>; 2], widths: [f64; 2], weights: [f64; 2]) -> Result<Self> {
        check_center(&centers[0])?;
        check_center(&centers[1])?;
        if centers[0].len() != centers[1].len() {
            return Err(Error::dimension(centers[0].len(), centers[1].len()));
        }
        check_positive("width", widths[0])?;
        check_positive("width", widths[1])?;
        check_positive("weight", weights[0])?;
        check_positive("weight", weights[1])?;
        Ok(Self::TwoBumps { centers, widths, weights })
    }

    pub fn neg_valley(center: Vec<f64>, scale: f64) -> Result<Self> {
        check_center(&center)?;
        check_positive("scale", scale)?;
        Ok(Self::NegValley { center, scale })
    }

    /// Global maximizer over `[0,1]^n`.
    pub fn argmax(&self) -> DesignPoint {
        match self {
            Self::GaussianBump { center, .. } | Self::NegValley { center, .. } => {
                DesignPoint::from_clamped(center.clone())
            }
            Self::TwoBumps { centers, widths, .. } => {
                // Each bump's tail shifts the other's peak slightly; polish
                // both peaks and keep the higher one.
                let polish = |c: &Vec<f64>, w: f64| {
                    let f0 = self.eval_raw(c);
                    compass_maximize(|x| self.eval_raw(x), c.clone(), f0, 0.1 * w, 1e-10, 100_000)
                };
                let (x0, f0) = polish(&centers[0], widths[0]);
                let (x1, f1) = polish(&centers[1], widths[1]);
                DesignPoint::from_clamped(if f1 > f0 { x1 } else { x0 })
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        self.eval_raw(self.argmax().coords())
    }

    /// Smallest value over the hypercube. Every variant is a decreasing
    /// function of the distance to its center(s) or a positive sum of such,
    /// so the minimum sits at a corner.
    pub fn min_value(&self) -> f64 {
        let n = self.dim();
        if n <= 16 {
            (0..1usize << n)
                .map(|mask| {
                    let corner: Vec<f64> = (0..n).map(|d| ((mask >> d) & 1) as f64).collect();
                    self.eval_raw(&corner)
                })
                .fold(f64::INFINITY, f64::min)
        } else {
            f64::NAN
        }
    }
}

impl Goodness for SynthGoodness {
    fn dim(&self) -> usize {
        match self {
            Self::GaussianBump { center, .. } | Self::NegValley { center, .. } => center.len(),
            Self::TwoBumps { centers, .. } => centers[0].len(),
        }
    }

    fn eval_raw(&self, x: &[f64]) -> f64 {
        let bump = |c: &[f64], w: f64| (-squared_distance(x, c) / (2.0 * w * w)).exp();
        match self {
            Self::GaussianBump { center, width } => bump(center, *width),
            Self::TwoBumps { centers, widths, weights } => {
                weights[0] * bump(&centers[0], widths[0]) + weights[1] * bump(&centers[1], widths[1])
            }
            Self::NegValley { center, scale } => -scale * squared_distance(x, center),
        }
    }
}

/// How a simulated worker perceives and answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkerModel {
    /// Standard deviation of the jitter added to slider answers and to
    /// perceived goodness differences.
    pub noise_sigma: f64,
    /// Number of slider positions the worker inspects.
    pub grid_resolution: usize,
    /// Probability of answering uniformly at random.
    pub cheat_rate: f64,
    /// Likert thresholds `(small, large)` on the perceived difference.
    pub likert_thresholds: (f64, f64),
}

impl Default for WorkerModel {
    fn default() -> Self {
        Self { noise_sigma: 0.05, grid_resolution: 101, cheat_rate: 0.0, likert_thresholds: (0.05, 0.2) }
    }
}

impl WorkerModel {
    pub fn noiseless() -> Self {
        Self { noise_sigma: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::argument("noise_sigma must be non-negative"));
        }
        if self.grid_resolution < 2 {
            return Err(Error::argument("grid_resolution must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.cheat_rate) {
            return Err(Error::argument("cheat_rate must be in [0, 1)"));
        }
        let (small, large) = self.likert_thresholds;
        if !(0.0 <= small && small <= large) {
            return Err(Error::argument("likert thresholds must satisfy 0 <= small <= large"));
        }
        Ok(())
    }
}

fn check_dim<G: Goodness>(g: &G, x: &DesignPoint) -> Result<()> {
    if g.dim() != x.dim() {
        return Err(Error::dimension(g.dim(), x.dim()));
    }
    Ok(())
}

/// Slider position the worker reports for `slider`.
///
/// The worker evaluates `g` on `grid_resolution` evenly spaced ticks, takes
/// the best one (the smallest `t` on ties), adds Gaussian jitter and clamps
/// to `[0,1]`. With probability `cheat_rate` the answer is uniform instead.
pub fn simulate_slider_response<G: Goodness>(
    g: &G,
    slider: &SliderSpace,
    worker: &WorkerModel,
    rng: &mut Rng,
) -> Result<f64> {
    worker.validate()?;
    check_dim(g, slider.a())?;
    if worker.cheat_rate > 0.0 && rng.bernoulli(worker.cheat_rate) {
        return Ok(rng.uniform());
    }
    let t = slider_grid_argmax(g, slider, worker.grid_resolution);
    if worker.noise_sigma == 0.0 {
        return Ok(t);
    }
    Ok((t + worker.noise_sigma * rng.standard_normal()).clamp(0.0, 1.0))
}

/// Noise-free best tick on an `resolution`-point grid along the slider.
pub fn slider_grid_argmax<G: Goodness>(g: &G, slider: &SliderSpace, resolution: usize) -> f64 {
    let last = (resolution - 1) as f64;
    let mut best_t = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..resolution {
        let t = k as f64 / last;
        let v = g.eval_raw(slider.at(t).coords());
        if v > best {
            best = v;
            best_t = t;
        }
    }
    best_t
}

/// 5-point Likert answer comparing `xa` (left) with `xb` (right).
pub fn simulate_pairwise_response<G: Goodness>(
    g: &G,
    xa: &DesignPoint,
    xb: &DesignPoint,
    worker: &WorkerModel,
    rng: &mut Rng,
) -> Result<u8> {
    worker.validate()?;
    check_dim(g, xa)?;
    check_dim(g, xb)?;
    if worker.cheat_rate > 0.0 && rng.bernoulli(worker.cheat_rate) {
        return Ok(1 + rng.index(5) as u8);
    }
    let mut delta = g.eval_raw(xa.coords()) - g.eval_raw(xb.coords());
    if worker.noise_sigma > 0.0 {
        delta += worker.noise_sigma * rng.standard_normal();
    }
    Ok(likert_from_difference(delta, worker.likert_thresholds))
}

/// Maps a perceived difference `g(left) - g(right)` to the 5-point scale.
pub fn likert_from_difference(delta: f64, (small, large): (f64, f64)) -> u8 {
    if delta > large {
        1
    } else if delta > small {
        2
    } else if delta >= -small {
        3
    } else if delta >= -large {
        4
    } else {
        5
    }
}
