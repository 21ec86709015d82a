//! The design space `[0,1]^n`, points in it, and slider segments.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rng};

/// The unit hypercube over `n` normalized design variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct DesignSpace {
    n: usize,
}

#[derive(Deserialize)]
struct RawSpace {
    n: usize,
}

impl TryFrom<RawSpace> for DesignSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        DesignSpace::new(raw.n)
    }
}

impl DesignSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("design space needs at least one variable"));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: &DesignPoint) -> bool {
        x.dim() == self.n
    }


    /// Uniform point in the hypercube.
    pub fn sample(&self, rng: &mut Rng) -> DesignPoint {
        DesignPoint((0..self.n).map(|_| rng.uniform()).collect())
    }
}

/// A point of the design space. Every coordinate lies in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DesignPoint(Vec<f64>);

impl TryFrom<Vec<f64>> for DesignPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DesignPoint::new(v)
    }
}

impl From<DesignPoint> for Vec<f64> {
    fn from(p: DesignPoint) -> Self {
        p.0
    }
}

impl DesignPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::argument("design point has no coordinates"));
        }
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Range(format!("coordinate {i} = {v} is outside [0, 1]")));
        }
        Ok(Self(coords))
    }

    /// Builds a point from coordinates already known to be in range.
    pub(crate) fn from_clamped(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &DesignPoint) -> f64 {
        squared_distance(&self.0, &other.0).sqrt()
    }

    pub fn linf_distance(&self, other: &DesignPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &DesignPoint, tol: f64) -> bool {
        self.dim() == other.dim() && self.distance(other) <= tol
    }
}

impl std::ops::Index<usize> for DesignPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A straight segment of the design space exposed to a worker as one slider.
/// Slider value 0 maps to `a`, 1 maps to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlider")]
pub struct SliderSpace {
    a: DesignPoint,
    b: DesignPoint,
}

#[derive(Deserialize)]
struct RawSlider {
    a: DesignPoint,
    b: DesignPoint,
}

impl TryFrom<RawSlider> for SliderSpace {
    type Error = Error;

    fn try_from(raw: RawSlider) -> Result<Self> {
        SliderSpace::new(raw.a, raw.b)
    }
}

impl SliderSpace {
    pub fn new(a: DesignPoint, b: DesignPoint) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::dimension(a.dim(), b.dim()));
        }
        if a == b {
            return Err(Error::argument("slider endpoints coincide"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DesignPoint {
        &self.a
    }

    pub fn b(&self) -> &DesignPoint {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    /// Point at slider value `t`, assumed in `[0,1]`.
    pub(crate) fn at(&self, t: f64) -> DesignPoint {
        let coords = self
            .a
            .coords()
            .iter()
            .zip(self.b.coords())
            .map(|(a, b)| ((1.0 - t) * a + t * b).clamp(0.0, 1.0))
            .collect();
        DesignPoint::from_clamped(coords)
    }
}

/// `(1 - t) * a + t * b`. Exact at both endpoints.
pub fn lerp_slider(s: &SliderSpace, t: f64) -> Result<DesignPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Range(format!("slider value {t} is outside [0, 1]")));
    }
    Ok(s.at(t))
}

/// `count` i.i.d. uniform points of the space.
pub fn uniform_sample(space: &DesignSpace, count: usize, rng: &mut Rng) -> Result<Vec<DesignPoint>> {
    if count == 0 {
        return Err(Error::argument("sample count must be positive"));
    }
    Ok((0..count).map(|_| space.sample(rng)).collect())
}

/// Clips every coordinate of `x` into `[0,1]`.
pub fn clamp_to_space(space: &DesignSpace, x: &[f64]) -> Result<DesignPoint> {
    if x.len() != space.dim() {
        return Err(Error::dimension(space.dim(), x.len()));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::argument("coordinate is NaN"));
    }
    Ok(DesignPoint::from_clamped(x.iter().map(|v| v.clamp(0.0, 1.0)).collect()))
}
