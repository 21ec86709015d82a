//! Derivative-free compass search on the unit hypercube.

/// Maximizes `f` from `start` with coordinate moves of a shrinking step,
/// clamped to `[0,1]`. Only strict improvements are accepted, so the result
/// is never worse than the start. Stops when the step falls below
/// `min_step` or `budget` evaluations are spent.
pub(crate) fn compass_maximize<F>(
    f: F,
    start: Vec<f64>,
    f_start: f64,
    initial_step: f64,
    min_step: f64,
    budget: usize,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = start;
    let mut fx = f_start;
    let mut step = initial_step;
    let mut evals = 0;
    let mut probe = x.clone();
    'outer: while step >= min_step && evals < budget {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                if evals >= budget {
                    break 'outer;
                }
                probe.copy_from_slice(&x);
                probe[d] = (x[d] + sign * step).clamp(0.0, 1.0);
                if probe[d] == x[d] {
                    continue;
                }
                let fp = f(&probe);
                evals += 1;
                if fp > fx {
                    x.copy_from_slice(&probe);
                    fx = fp;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}
