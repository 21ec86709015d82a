//! Simulated crowds answering a session's tasks through the normal
//! submission path, so their answers land in the event log.

use crowdopt_core::sim_crowd::{simulate_pairwise_response, simulate_slider_response, SynthGoodness, WorkerModel};
use crowdopt_core::{Goodness, Rng};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::events::{Answer, ModeConfig};
use crate::session::{Domain, MicroTask, Session};

/// Center of the synthetic goodness used as ground truth for the photo
/// domain, in `[brightness, contrast, saturation, r, g, b]` order.
pub const PHOTO_TRUTH_CENTER: [f64; 6] = [0.6, 0.55, 0.65, 0.45, 0.5, 0.4];
pub const PHOTO_TRUTH_WIDTH: f64 = 0.3;

/// Ground truth used when a request does not bring its own: a single bump,
/// at [`PHOTO_TRUTH_CENTER`] for photos and at `[0.3, 0.7, 0.3, ...]` for
/// synthetic spaces.
pub fn default_truth(domain: Domain, n: usize) -> SynthGoodness {
    let (center, width) = match domain {
        Domain::Photo => (PHOTO_TRUTH_CENTER.to_vec(), PHOTO_TRUTH_WIDTH),
        Domain::Synthetic => ((0..n).map(|k| if k % 2 == 0 { 0.3 } else { 0.7 }).collect(), 0.25),
    };
    SynthGoodness::gaussian_bump(center, width).expect("default truth parameters are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateRequest {
    pub workers: usize,
    pub noise: f64,
    pub cheat_rate: f64,
    pub grid_resolution: usize,
    pub truth: Option<SynthGoodness>,
    /// Seed of the workers' streams; the session seed when absent.
    pub seed: Option<u64>,
}

impl Default for SimulateRequest {
    fn default() -> Self {
        Self { workers: 5, noise: 0.05, cheat_rate: 0.0, grid_resolution: 101, truth: None, seed: None }
    }
}

/// Lets `req.workers` simulated workers (ids `sim-0`, `sim-1`, ...) take
/// turns answering one task each until the session completes.
pub fn simulate(session: &mut Session, req: &SimulateRequest) -> Result<()> {
    let model = WorkerModel {
        noise_sigma: req.noise,
        cheat_rate: req.cheat_rate,
        grid_resolution: req.grid_resolution,
        ..WorkerModel::default()
    };
    model.validate()?;
    if req.workers == 0 {
        return Err(ServiceError::Validation("workers must be at least 1".into()));
    }
    if let ModeConfig::Optimize(cfg) = &session.spec().config {
        if req.workers < cfg.quorum {
            return Err(ServiceError::Validation(format!(
                "{} workers can never reach the quorum of {}",
                req.workers, cfg.quorum
            )));
        }
    }
    let truth = req.truth.clone().unwrap_or_else(|| default_truth(session.spec().domain, session.spec().n));
    if truth.dim() != session.spec().n {
        return Err(ServiceError::Validation(format!(
            "truth has {} dimensions, session has {}",
            truth.dim(),
            session.spec().n
        )));
    }
    let root = Rng::new(req.seed.unwrap_or(session.spec().seed));
    let mut rngs: Vec<Rng> = (0..req.workers).map(|k| root.split(k as u64 + 1)).collect();
    while !session.is_complete() {
        let mut progressed = false;
        for (k, rng) in rngs.iter_mut().enumerate() {
            if session.is_complete() {
                break;
            }
            let worker = format!("sim-{k}");
            let Some(task) = session.next_task(&worker) else { continue };
            let answer = match &task {
                MicroTask::Slider { slider, .. } => Answer::Slider { t: simulate_slider_response(&truth, slider, &model, rng)? },
                MicroTask::Pairwise { pairs, .. } => Answer::Pairwise {
                    likert: pairs
                        .iter()
                        .map(|p| simulate_pairwise_response(&truth, &p.left, &p.right, &model, rng))
                        .collect::<Result<_, _>>()?,
                },
            };
            session.submit(task.id(), &worker, answer)?;
            progressed = true;
        }
        if !progressed {
            return Err(ServiceError::Internal("simulated workers ran out of tasks".into()));
        }
    }
    Ok(())
}
