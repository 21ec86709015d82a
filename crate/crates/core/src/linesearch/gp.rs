//! Gaussian-process surrogate fitted to pairwise preferences.
//!
//! Latent goodness values at the distinct observed points are the MAP
//! estimate under a zero-mean GP prior and a probit likelihood per
//! preference, found by damped Newton iterations. Prediction conditions the
//! prior on those MAP values.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normal;
use crate::space::squared_distance;
use crate::{DesignPoint, Error, Result};

/// Added to the kernel diagonal.
pub const JITTER: f64 = 1e-8;
/// Observed points closer than this are treated as one.
pub const MERGE_TOL: f64 = 1e-9;

const MAX_NEWTON_ITERS: usize = 100;
const GRAD_TOL: f64 = 1e-6;

/// ARD squared-exponential kernel
/// `amplitude * exp(-0.5 * sum_k ((a_k - b_k) / l_k)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub amplitude: f64,
    pub lengthscales: Vec<f64>,
}

impl Kernel {
    pub fn isotropic(n: usize, amplitude: f64, lengthscale: f64) -> Self {
        Self { amplitude, lengthscales: vec![lengthscale; n] }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum();
        self.amplitude * (-0.5 * s).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::argument("kernel amplitude must be positive"));
        }
        if self.lengthscales.is_empty() || self.lengthscales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::argument("kernel lengthscales must be positive"));
        }
        Ok(())
    }
}

/// `winner` was preferred over `loser`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub winner: DesignPoint,
    pub loser: DesignPoint,
}

impl PreferencePair {
    pub fn new(winner: DesignPoint, loser: DesignPoint) -> Result<Self> {
        if winner.dim() != loser.dim() {
            return Err(Error::dimension(winner.dim(), loser.dim()));
        }
        if winner.approx_eq(&loser, MERGE_TOL) {
            return Err(Error::argument("winner and loser coincide"));
        }
        Ok(Self { winner, loser })
    }
}

/// Log-posterior of the latent values for fixed data, up to a constant:
/// `-0.5 f' K^-1 f + sum log Phi((f_w - f_l) / (sqrt(2) sigma))`.
#[derive(Debug, Clone)]
pub struct PreferencePosterior {
    gram: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    pairs: Vec<(usize, usize)>,
    scale: f64,
}

impl PreferencePosterior {
    pub fn new(points: &[DesignPoint], pairs: Vec<(usize, usize)>, kernel: &Kernel, pref_noise: f64) -> Result<Self> {
        let m = points.len();
        let gram = DMatrix::from_fn(m, m, |i, j| {
            kernel.eval(points[i].coords(), points[j].coords()) + if i == j { JITTER } else { 0.0 }
        });
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("kernel matrix is not positive definite even with jitter".into()))?;
        Ok(Self { gram, chol, pairs, scale: std::f64::consts::SQRT_2 * pref_noise })
    }

    pub fn len(&self) -> usize {
        self.gram.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn z(&self, f: &DVector<f64>, (w, l): (usize, usize)) -> f64 {
        (f[w] - f[l]) / self.scale
    }

    pub fn log_posterior(&self, f: &DVector<f64>) -> f64 {
        let alpha = self.chol.solve(f);
        let lik: f64 = self.pairs.iter().map(|&p| normal::log_cdf(self.z(f, p))).sum();
        -0.5 * f.dot(&alpha) + lik
    }

    fn likelihood_gradient(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.len());
        for &(w, l) in &self.pairs {
            let d = normal::inverse_mills(self.z(f, (w, l))) / self.scale;
            g[w] += d;
            g[l] -= d;
        }
        g
    }

    pub fn gradient(&self, f: &DVector<f64>) -> DVector<f64> {
        self.likelihood_gradient(f) - self.chol.solve(f)
    }

    /// Negative Hessian of the log-likelihood; positive semidefinite
    /// because `log Phi` is concave.
    fn likelihood_curvature(&self, f: &DVector<f64>) -> DMatrix<f64> {
        let m = self.len();
        let mut w = DMatrix::zeros(m, m);
        for &(a, b) in &self.pairs {
            let z = self.z(f, (a, b));
            let lam = normal::inverse_mills(z);
            let c = lam * (z + lam) / (self.scale * self.scale);
            w[(a, a)] += c;
            w[(b, b)] += c;
            w[(a, b)] -= c;
            w[(b, a)] -= c;
        }
        w
    }

    /// Log-posterior in the weight parametrization `f = K alpha`, which
    /// needs no inverse of `K`.
    fn log_posterior_weights(&self, alpha: &DVector<f64>) -> (DVector<f64>, f64) {
        let f = &self.gram * alpha;
        let lik: f64 = self.pairs.iter().map(|&p| normal::log_cdf(self.z(&f, p))).sum();
        let psi = -0.5 * f.dot(alpha) + lik;
        (f, psi)
    }

    /// Maximizes the log-posterior by damped Newton steps on the weights
    /// `alpha = K^-1 f`. Returns `(f, alpha, iterations, gradient norm)`,
    /// where the gradient `g(f) - alpha` is measured in the latent space.
    pub fn find_map(&self) -> Result<(DVector<f64>, DVector<f64>, usize, f64)> {
        let m = self.len();
        let eye = DMatrix::<f64>::identity(m, m);
        let mut alpha = DVector::zeros(m);
        let (mut f, mut psi) = self.log_posterior_weights(&alpha);
        for it in 1..=MAX_NEWTON_ITERS {
            let g = self.likelihood_gradient(&f);
            let w = self.likelihood_curvature(&f);
            // Newton target f* = (K^-1 + W)^-1 (W f + g), i.e.
            // alpha* = (I + W K)^-1 (W f + g).
            let rhs = &w * &f + &g;
            let target = (&eye + &w * &self.gram)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solver("singular Newton system".into()))?;
            let delta = target - &alpha;

            let residual = (&g - &alpha).amax();
            let mut eta = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &alpha + eta * &delta;
                let (f_c, psi_c) = self.log_posterior_weights(&cand);
                // Close to the optimum psi changes below its rounding error;
                // a shrinking residual is then the better signal.
                let shrinks = || (self.likelihood_gradient(&f_c) - &cand).amax() < residual;
                if psi_c >= psi || (eta == 1.0 && shrinks()) {
                    alpha = cand;
                    f = f_c;
                    psi = psi_c;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            let grad_norm = (self.likelihood_gradient(&f) - &alpha).amax();
            if grad_norm <= GRAD_TOL {
                return Ok((f, alpha, it, grad_norm));
            }
            if !accepted {
                return Err(Error::NotConverged {
                    iterations: it,
                    detail: format!("Newton stalled with gradient norm {grad_norm:.3e}"),
                });
            }
        }
        let grad_norm = (self.likelihood_gradient(&f) - &alpha).amax();
        Err(Error::NotConverged {
            iterations: MAX_NEWTON_ITERS,
            detail: format!("gradient norm {grad_norm:.3e} after Newton iterations"),
        })
    }
}

/// MAP preference GP over the distinct points of its training pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceGP {
    points: Vec<DesignPoint>,
    pairs: Vec<(usize, usize)>,
    f_map: Vec<f64>,
    kernel: Kernel,
    pref_noise: f64,
    /// Lower Cholesky factor of `K + jitter * I`.
    chol_l: DMatrix<f64>,
    /// Weights with `f_map = (K + jitter * I) alpha`.
    alpha: DVector<f64>,
    /// Predicted mean at each data point.
    data_mean: Vec<f64>,
    best: usize,
    newton_iterations: usize,
    grad_norm: f64,
}

/// Distinct points of `pairs` (merged within [`MERGE_TOL`]) and the index
/// pairs referring to them.
pub fn collect_points(pairs: &[PreferencePair]) -> (Vec<DesignPoint>, Vec<(usize, usize)>) {
    let mut points: Vec<DesignPoint> = Vec::new();
    let mut index_of = |p: &DesignPoint| -> usize {
        if let Some(i) = points.iter().position(|q| squared_distance(q.coords(), p.coords()) <= MERGE_TOL * MERGE_TOL) {
            i
        } else {
            points.push(p.clone());
            points.len() - 1
        }
    };
    let idx = pairs
        .iter()
        .map(|p| (index_of(&p.winner), index_of(&p.loser)))
        .collect();
    (points, idx)
}

/// Fits the MAP preference GP to `pairs`.
pub fn fit_preference_gp(pairs: &[PreferencePair], kernel: &Kernel, pref_noise: f64) -> Result<PreferenceGP> {
    if pairs.is_empty() {
        return Err(Error::argument("preference GP needs at least one pair"));
    }
    kernel.validate()?;
    if !(pref_noise > 0.0 && pref_noise.is_finite()) {
        return Err(Error::argument("preference noise must be positive"));
    }
    if let Some(p) = pairs.iter().find(|p| p.winner.dim() != kernel.dim() || p.loser.dim() != kernel.dim()) {
        return Err(Error::dimension(kernel.dim(), p.winner.dim().max(p.loser.dim())));
    }

    let (points, idx) = collect_points(pairs);
    if let Some(&(w, _)) = idx.iter().find(|(w, l)| w == l) {
        return Err(Error::argument(format!("pair compares point {w} with itself")));
    }
    let posterior = PreferencePosterior::new(&points, idx.clone(), kernel, pref_noise)?;
    let (f, alpha, newton_iterations, grad_norm) = posterior.find_map()?;
    let chol_l = posterior.chol.l();

    let mut gp = PreferenceGP {
        points,
        pairs: idx,
        f_map: f.iter().copied().collect(),
        kernel: kernel.clone(),
        pref_noise,
        chol_l,
        alpha,
        data_mean: Vec::new(),
        best: 0,
        newton_iterations,
        grad_norm,
    };
    gp.data_mean = gp.points.iter().map(|p| gp.mean_raw(p.coords())).collect();
    gp.best = gp
        .data_mean
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > gp.data_mean[best] { i } else { best });
    Ok(gp)
}

impl PreferenceGP {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn data_points(&self) -> &[DesignPoint] {
        &self.points
    }

    /// Index pairs `(winner, loser)` into [`Self::data_points`].
    pub fn index_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn f_map(&self) -> &[f64] {
        &self.f_map
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn pref_noise(&self) -> f64 {
        self.pref_noise
    }

    pub fn newton_iterations(&self) -> usize {
        self.newton_iterations
    }

    /// Infinity norm of the log-posterior gradient at the returned MAP.
    pub fn gradient_norm(&self) -> f64 {
        self.grad_norm
    }

    /// Data point with the highest predicted mean (first on ties).
    pub fn best_point(&self) -> &DesignPoint {
        &self.points[self.best]
    }

    /// Highest predicted mean over the data points; the EI incumbent.
    pub fn incumbent(&self) -> f64 {
        self.data_mean[self.best]
    }

    fn kvec(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.points.len(), self.points.iter().map(|p| self.kernel.eval(x, p.coords())))
    }

    fn mean_raw(&self, x: &[f64]) -> f64 {
        self.kvec(x).dot(&self.alpha)
    }

    pub(crate) fn predict_raw(&self, x: &[f64]) -> (f64, f64) {
        let k = self.kvec(x);
        let mu = k.dot(&self.alpha);
        let v = self
            .chol_l
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        let var = (self.kernel.amplitude - v.norm_squared()).clamp(0.0, self.kernel.amplitude);
        (mu, var)
    }

    /// Predictive mean and variance at `x`.
    pub fn predict(&self, x: &DesignPoint) -> Result<(f64, f64)> {
        if x.dim() != self.dim() {
            return Err(Error::dimension(self.dim(), x.dim()));
        }
        Ok(self.predict_raw(x.coords()))
    }
}
