use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::space::squared_distance;
use crate::{DesignPoint, Error, Goodness, Result};

/// Tikhonov term for fitted fields. Noticeably larger than round-off so the
/// fit does not overshoot between widely spaced samples.
pub const DEFAULT_RIDGE: f64 = 1e-3;

/// Gaussian kernel width used when none is configured: `0.2 * sqrt(n)`.
pub fn default_kernel_width(n: usize) -> f64 {
    0.2 * (n as f64).sqrt()
}

/// Continuous goodness estimate: a weighted sum of Gaussian bumps centred at
/// the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField")]
pub struct GoodnessField {
    n: usize,
    centers: Vec<DesignPoint>,
    weights: Vec<f64>,
    kernel_width: f64,
    ridge: f64,
}

#[derive(Deserialize)]
struct RawField {
    n: usize,
    centers: Vec<DesignPoint>,
    weights: Vec<f64>,
    kernel_width: f64,
    ridge: f64,
}

impl TryFrom<RawField> for GoodnessField {
    type Error = Error;

    fn try_from(r: RawField) -> Result<Self> {
        GoodnessField::from_parts(r.n, r.centers, r.weights, r.kernel_width, r.ridge)
    }
}

impl GoodnessField {
    pub fn from_parts(
        n: usize,
        centers: Vec<DesignPoint>,
        weights: Vec<f64>,
        kernel_width: f64,
        ridge: f64,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::argument("field needs at least one center"));
        }
        if centers.len() != weights.len() {
            return Err(Error::argument(format!(
                "{} centers but {} weights",
                centers.len(),
                weights.len()
            )));
        }
        if let Some(c) = centers.iter().find(|c| c.dim() != n) {
            return Err(Error::dimension(n, c.dim()));
        }
        check_width_ridge(kernel_width, ridge)?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::argument("non-finite RBF weight"));
        }
        Ok(Self { n, centers, weights, kernel_width, ridge })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn centers(&self) -> &[DesignPoint] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel_width(&self) -> f64 {
        self.kernel_width
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn kernel(&self, d2: f64) -> f64 {
        (-d2 / (2.0 * self.kernel_width * self.kernel_width)).exp()
    }

    /// Smallest and largest field value over the centers.
    pub fn center_range(&self) -> (f64, f64) {
        self.centers
            .iter()
            .map(|c| self.eval_raw(c.coords()))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

impl Goodness for GoodnessField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_raw(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * self.kernel(squared_distance(x, c.coords())))
            .sum()
    }
}

fn check_width_ridge(kernel_width: f64, ridge: f64) -> Result<()> {
    if !(kernel_width > 0.0 && kernel_width.is_finite()) {
        return Err(Error::argument(format!("kernel width must be positive, got {kernel_width}")));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::argument(format!("ridge must be non-negative, got {ridge}")));
    }
    Ok(())
}

/// Solves `(K + ridge * I) w = y` for the RBF weights, with
/// `K_ij = exp(-|x_i - x_j|^2 / (2 * width^2))`.
pub fn fit_rbf(points: &[DesignPoint], values: &[f64], kernel_width: f64, ridge: f64) -> Result<GoodnessField> {
    let m = points.len();
    if m == 0 {
        return Err(Error::argument("RBF fit needs at least one point"));
    }
    if values.len() != m {
        return Err(Error::argument(format!("{m} points but {} values", values.len())));
    }
    check_width_ridge(kernel_width, ridge)?;
    let n = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != n) {
        return Err(Error::dimension(n, p.dim()));
    }
    if ridge == 0.0 {
        for i in 0..m {
            for j in i + 1..m {
                if points[i] == points[j] {
                    return Err(Error::Solver(format!(
                        "centers {i} and {j} coincide and the kernel matrix is singular; use a positive ridge"
                    )));
                }
            }
        }
    }

    let two_w2 = 2.0 * kernel_width * kernel_width;
    let k = DMatrix::from_fn(m, m, |i, j| {
        let v = (-squared_distance(points[i].coords(), points[j].coords()) / two_w2).exp();
        if i == j {
            v + ridge
        } else {
            v
        }
    });
    let rhs = DVector::from_column_slice(values);
    let weights = match k.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => k.lu().solve(&rhs).ok_or_else(|| {
            Error::Solver("kernel matrix is singular; use a positive ridge".into())
        })?,
    };
    GoodnessField::from_parts(n, points.to_vec(), weights.iter().copied().collect(), kernel_width, ridge)
}

/// Field value at `x`.
pub fn eval_field(field: &GoodnessField, x: &DesignPoint) -> Result<f64> {
    field.eval(x)
}
