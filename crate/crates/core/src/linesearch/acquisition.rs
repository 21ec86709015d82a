use super::{normal, PreferenceGP};
use crate::search::compass_maximize;
use crate::{DesignPoint, DesignSpace, Error, Result, Rng};

/// EI of a Gaussian with mean `mu` and standard deviation `sigma` over the
/// incumbent `best`. With zero spread it degenerates to `max(0, mu - best)`.
pub fn expected_improvement_from(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 1e-12 {
        return (mu - best).max(0.0);
    }
    let z = (mu - best) / sigma;
    ((mu - best) * normal::cdf(z) + sigma * normal::pdf(z)).max(0.0)
}

pub(crate) fn ei_raw(gp: &PreferenceGP, x: &[f64]) -> f64 {
    let (mu, var) = gp.predict_raw(x);
    expected_improvement_from(mu, var.sqrt(), gp.incumbent())
}

/// Expected improvement at `x` over the best predicted mean at the data.
pub fn expected_improvement(gp: &PreferenceGP, x: &DesignPoint) -> Result<f64> {
    if x.dim() != gp.dim() {
        return Err(Error::dimension(gp.dim(), x.dim()));
    }
    Ok(ei_raw(gp, x.coords()))
}

/// Global EI maximization: the best of `samples` uniform draws, polished by
/// a compass search limited to `refine_evals` evaluations.
pub fn maximize_acquisition(
    gp: &PreferenceGP,
    space: &DesignSpace,
    samples: usize,
    refine_evals: usize,
    rng: &mut Rng,
) -> Result<DesignPoint> {
    if space.dim() != gp.dim() {
        return Err(Error::dimension(gp.dim(), space.dim()));
    }
    if samples == 0 {
        return Err(Error::argument("acquisition needs at least one sample"));
    }
    let mut best = space.sample(rng).into_coords();
    let mut best_ei = ei_raw(gp, &best);
    for _ in 1..samples {
        let x = space.sample(rng).into_coords();
        let v = ei_raw(gp, &x);
        if v > best_ei {
            best = x;
            best_ei = v;
        }
    }
    let (x, _) = compass_maximize(|x| ei_raw(gp, x), best, best_ei, 0.05, 1e-6, refine_evals);
    Ok(DesignPoint::from_clamped(x))
}
