use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PairwiseComparison;
use crate::space::squared_distance;
use crate::{stats, DesignPoint, Error, Result};

/// Weights of the two cost terms and solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    /// Weight of the smoothness term relative to the comparison term.
    pub omega: f64,
    /// Target gap between goodness values for a "somewhat" answer; a
    /// "definitely" answer asks for twice this.
    pub margin: f64,
    /// Neighbours per sample in the smoothness graph.
    pub knn: usize,
    pub max_iters: usize,
    /// Stop once an accepted step decreases the objective by less than this.
    pub tol: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { omega: 1.0, margin: 0.2, knn: 10, max_iters: 2000, tol: 1e-8 }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::argument(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::argument(format!("margin must be positive, got {}", self.margin)));
        }
        if self.knn == 0 {
            return Err(Error::argument("knn must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::argument("max_iters must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::argument("tol must be non-negative"));
        }
        Ok(())
    }
}

/// Absolute goodness per sampled point, normalized to span `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoodnessValues(Vec<f64>);

impl GoodnessValues {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Min-max normalization. Values spanning less than 1e-9 carry no
    /// ordering information and all become 0.5.
    pub fn normalized(raw: &[f64]) -> Self {
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo >= 1e-9) {
            return Self(vec![0.5; raw.len()]);
        }
        Self(raw.iter().map(|v| (v - lo) / (hi - lo)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub values: GoodnessValues,
    /// Minimizer before normalization.
    pub raw: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after initialization and after every accepted step.
    pub objective_trace: Vec<f64>,
}

/// The regularized least-squares problem over the sample values.
///
/// The comparison term penalizes each answer with a squared hinge against
/// its Likert target gap (a plain squared difference for "equal"), and the
/// smoothness term is the graph-Laplacian energy over a symmetrized kNN
/// graph with Gaussian edge weights.
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    len: usize,
    terms: Vec<(usize, usize, f64)>,
    edges: Vec<(usize, usize, f64)>,
    omega: f64,
}

impl EstimationProblem {
    pub fn new(points: &[DesignPoint], comparisons: &[PairwiseComparison], cfg: &EstimationConfig) -> Result<Self> {
        cfg.validate()?;
        let m = points.len();
        if comparisons.is_empty() {
            return Err(Error::argument("at least one comparison is required"));
        }
        if let Some(c) = comparisons.iter().find(|c| c.i >= m || c.j >= m || c.i == c.j) {
            return Err(Error::argument(format!("comparison ({}, {}) is invalid for {m} samples", c.i, c.j)));
        }
        if let Some(c) = comparisons.iter().find(|c| !(1..=5).contains(&c.likert)) {
            return Err(Error::Range(format!("likert value {} is outside 1..=5", c.likert)));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != points[0].dim()) {
            return Err(Error::dimension(points[0].dim(), p.dim()));
        }
        let terms = comparisons
            .iter()
            .map(|c| (c.i, c.j, likert_margin(c.likert, cfg.margin)))
            .collect();
        Ok(Self { len: m, terms, edges: knn_graph(points, cfg.knn), omega: cfg.omega })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Smoothness graph as `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn relative_energy(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(i, j, m)| {
                let r = hinge_residual(y[i] - y[j], m);
                r * r
            })
            .sum()
    }

    pub fn continuous_energy(&self, y: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, w)| w * (y[i] - y[j]) * (y[i] - y[j]))
            .sum()
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        self.relative_energy(y) + self.omega * self.continuous_energy(y)
    }

    pub fn gradient(&self, y: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &(i, j, m) in &self.terms {
            // d/dd of r^2 where r = hinge_residual(d, m), d = y_i - y_j.
            let r = hinge_residual(y[i] - y[j], m);
            let dr = if m > 0.0 { -2.0 * r } else { 2.0 * r };
            grad[i] += dr;
            grad[j] -= dr;
        }
        for &(i, j, w) in &self.edges {
            let g = 2.0 * self.omega * w * (y[i] - y[j]);
            grad[i] += g;
            grad[j] -= g;
        }
    }

    /// Upper bound on the Hessian's largest eigenvalue (Gershgorin).
    fn curvature_bound(&self) -> f64 {
        let mut row = vec![0.0; self.len];
        for &(i, j, _) in &self.terms {
            row[i] += 4.0;
            row[j] += 4.0;
        }
        for &(i, j, w) in &self.edges {
            row[i] += 4.0 * self.omega * w;
            row[j] += 4.0 * self.omega * w;
        }
        row.into_iter().fold(0.0, f64::max)
    }
}

/// Signed target gap `y_i - y_j` for a Likert answer; positive favors `i`.
fn likert_margin(likert: u8, margin: f64) -> f64 {
    match likert {
        1 => 2.0 * margin,
        2 => margin,
        3 => 0.0,
        4 => -margin,
        _ => -2.0 * margin,
    }
}

/// Residual whose square is the comparison penalty: the full difference for
/// an "equal" answer, otherwise how far the gap falls short of its target.
fn hinge_residual(d: f64, m: f64) -> f64 {
    if m > 0.0 {
        (m - d).max(0.0)
    } else if m < 0.0 {
        (d - m).max(0.0)
    } else {
        d
    }
}

fn knn_graph(points: &[DesignPoint], knn: usize) -> Vec<(usize, usize, f64)> {
    let m = points.len();
    if m < 2 {
        return Vec::new();
    }
    let k = knn.min(m - 1);
    let mut neighbours = Vec::with_capacity(m * k);
    for i in 0..m {
        let mut d: Vec<(f64, usize)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(points[i].coords(), points[j].coords()), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        neighbours.extend(d.into_iter().take(k).map(|(d2, j)| (i, j, d2)));
    }
    let dists: Vec<f64> = neighbours.iter().map(|&(_, _, d2)| d2.sqrt()).collect();
    let h = stats::median(&dists).filter(|h| *h > 0.0).unwrap_or(1.0);

    let mut edges = BTreeMap::new();
    for (i, j, d2) in neighbours {
        edges.insert((i.min(j), i.max(j)), (-d2 / (2.0 * h * h)).exp());
    }
    edges.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

/// Solves for the sample goodness values by gradient descent with
/// Barzilai-Borwein step proposals and Armijo backtracking, starting from
/// all values at 0.5. Every accepted step strictly decreases the objective.
pub fn estimate_goodness_values(
    points: &[DesignPoint],
    comparisons: &[PairwiseComparison],
    cfg: &EstimationConfig,
) -> Result<Estimate> {
    let problem = EstimationProblem::new(points, comparisons, cfg)?;
    let m = problem.len();

    let mut y = vec![0.5; m];
    let mut grad = vec![0.0; m];
    let mut f = problem.objective(&y);
    problem.gradient(&y, &mut grad);
    let mut trace = vec![f];
    let mut step = 1.0 / problem.curvature_bound().max(1e-12);
    let mut converged = false;
    let mut iterations = 0;

    let mut trial = vec![0.0; m];
    let mut trial_grad = vec![0.0; m];
    while iterations < cfg.max_iters {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 <= 1e-24 {
            converged = true;
            break;
        }
        iterations += 1;

        let mut accepted = None;
        let mut alpha = step;
        for _ in 0..60 {
            for k in 0..m {
                trial[k] = y[k] - alpha * grad[k];
            }
            let ft = problem.objective(&trial);
            if ft <= f - 1e-4 * alpha * gnorm2 {
                accepted = Some(ft);
                break;
            }
            alpha *= 0.5;
        }
        let Some(f_new) = accepted else {
            // No descent possible at machine precision.
            converged = true;
            break;
        };

        problem.gradient(&trial, &mut trial_grad);
        let (mut ss, mut sg) = (0.0, 0.0);
        for k in 0..m {
            let s = trial[k] - y[k];
            ss += s * s;
            sg += s * (trial_grad[k] - grad[k]);
        }
        if sg > 0.0 {
            step = ss / sg;
        }
        std::mem::swap(&mut y, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        let decrease = f - f_new;
        f = f_new;
        trace.push(f);
        if decrease < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(Estimate {
        values: GoodnessValues::normalized(&y),
        raw: y,
        converged,
        iterations,
        objective_trace: trace,
    })
}
