//! Designer-facing aids computed from a goodness field: top-k suggestions,
//! per-slider goodness profiles, drag-time co-optimization of the other
//! sliders, and weighted combinations of several fields.

use serde::{Deserialize, Serialize};

use crate::{uniform_sample, DesignPoint, DesignSpace, Error, Goodness, Result, Rng};

/// Central-difference step of the drag-time ascent.
const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub params: DesignPoint,
    pub score: f64,
}

/// Scores `sample_count` uniform draws and returns the `k` best, highest
/// first; equal scores keep draw order.
pub fn smart_suggestions<G: Goodness>(
    field: &G,
    space: &DesignSpace,
    sample_count: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<Suggestion>> {
    if field.dim() != space.dim() {
        return Err(Error::dimension(space.dim(), field.dim()));
    }
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    if k > sample_count {
        return Err(Error::argument(format!("k = {k} exceeds sample_count = {sample_count}")));
    }
    let mut scored: Vec<Suggestion> = uniform_sample(space, sample_count, rng)?
        .into_iter()
        .map(|params| Suggestion { score: field.eval_raw(params.coords()), params })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score));
    scored.truncate(k);
    Ok(scored)
}

/// Field values along coordinate `dim` swept over `resolution` evenly
/// spaced values in `[0,1]`, the other coordinates fixed at `current`.
pub fn visopt_profile<G: Goodness>(field: &G, current: &DesignPoint, dim: usize, resolution: usize) -> Result<Vec<f64>> {
    if current.dim() != field.dim() {
        return Err(Error::dimension(field.dim(), current.dim()));
    }
    if dim >= current.dim() {
        return Err(Error::argument(format!("dimension {dim} out of range for {} variables", current.dim())));
    }
    if resolution < 2 {
        return Err(Error::argument("resolution must be at least 2"));
    }
    let mut x = current.coords().to_vec();
    let last = (resolution - 1) as f64;
    Ok((0..resolution)
        .map(|i| {
            x[dim] = i as f64 / last;
            field.eval_raw(&x)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DragConfig {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for DragConfig {
    fn default() -> Self {
        Self { steps: 5, step_size: 0.05 }
    }
}

/// Pins coordinate `dim` at `new_value` and moves the remaining coordinates
/// uphill by projected finite-difference gradient ascent. A step that would
/// lower the field is retried with half the step size.
pub fn drag_co_optimize<G: Goodness>(
    field: &G,
    x: &DesignPoint,
    dim: usize,
    new_value: f64,
    cfg: &DragConfig,
) -> Result<DesignPoint> {
    if x.dim() != field.dim() {
        return Err(Error::dimension(field.dim(), x.dim()));
    }
    if dim >= x.dim() {
        return Err(Error::argument(format!("dimension {dim} out of range for {} variables", x.dim())));
    }
    if !(0.0..=1.0).contains(&new_value) {
        return Err(Error::Range(format!("slider value {new_value} is outside [0, 1]")));
    }
    if !(cfg.step_size > 0.0 && cfg.step_size.is_finite()) {
        return Err(Error::argument("step_size must be positive"));
    }

    let mut cur = x.coords().to_vec();
    cur[dim] = new_value;
    let mut value = field.eval_raw(&cur);
    let mut step = cfg.step_size;
    let mut probe = cur.clone();
    let mut grad = vec![0.0; cur.len()];
    for _ in 0..cfg.steps {
        for d in 0..cur.len() {
            grad[d] = if d == dim {
                0.0
            } else {
                probe.copy_from_slice(&cur);
                probe[d] = cur[d] + FD_STEP;
                let up = field.eval_raw(&probe);
                probe[d] = cur[d] - FD_STEP;
                (up - field.eval_raw(&probe)) / (2.0 * FD_STEP)
            };
        }
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-9 {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            for d in 0..cur.len() {
                probe[d] = (cur[d] + step * grad[d]).clamp(0.0, 1.0);
            }
            let v = field.eval_raw(&probe);
            if v >= value {
                cur.copy_from_slice(&probe);
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(DesignPoint::from_clamped(cur))
}

/// `x -> sum_i weights[i] * fields[i](x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedField<G> {
    fields: Vec<G>,
    weights: Vec<f64>,
}

pub fn combine_fields<G: Goodness>(fields: Vec<G>, weights: Vec<f64>) -> Result<CombinedField<G>> {
    if fields.is_empty() {
        return Err(Error::argument("no fields to combine"));
    }
    if fields.len() != weights.len() {
        return Err(Error::argument(format!("{} fields but {} weights", fields.len(), weights.len())));
    }
    let n = fields[0].dim();
    if let Some(f) = fields.iter().find(|f| f.dim() != n) {
        return Err(Error::dimension(n, f.dim()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::argument("weights must be finite"));
    }
    Ok(CombinedField { fields, weights })
}

impl<G: Goodness> Goodness for CombinedField<G> {
    fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn eval_raw(&self, x: &[f64]) -> f64 {
        self.fields
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.eval_raw(x))
            .sum()
    }
}
