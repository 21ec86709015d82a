use super::optimizer::{aggregate_responses, init_session, OptConfig, OptState};
use crate::sim_crowd::{simulate_slider_response, WorkerModel};
use crate::{DesignSpace, Goodness, Result, Rng};

/// A fixed panel of simulated workers, each with its own random stream.
#[derive(Debug, Clone)]
pub struct SimulatedCrowd {
    workers: Vec<(WorkerModel, Rng)>,
}

impl SimulatedCrowd {
    /// `models[k]` draws from stream `k + 1` of `rng`.
    pub fn new(models: &[WorkerModel], rng: &Rng) -> Self {
        let workers = models
            .iter()
            .enumerate()
            .map(|(k, m)| (*m, rng.split(k as u64 + 1)))
            .collect();
        Self { workers }
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    /// One slider answer from every worker, in panel order.
    pub fn answer_slider<G: Goodness>(&mut self, truth: &G, state: &OptState) -> Result<Vec<f64>> {
        self.workers
            .iter_mut()
            .map(|(m, rng)| simulate_slider_response(truth, state.slider(), m, rng))
            .collect()
    }
}

/// Runs `config.iterations` iterations against simulated workers; every
/// iteration aggregates one answer per worker. The optimizer draws from
/// stream 0 of `seed`, worker `k` from stream `k + 1`.
pub fn run_simulated<G: Goodness>(
    truth: &G,
    space: DesignSpace,
    config: OptConfig,
    workers: &[WorkerModel],
    seed: u64,
) -> Result<OptState> {
    if workers.is_empty() {
        return Err(crate::Error::argument("at least one simulated worker is required"));
    }
    let root = Rng::new(seed);
    let mut state = init_session(space, config, root.split(0))?;
    let mut crowd = SimulatedCrowd::new(workers, &root);
    while !state.is_complete() {
        let answers = crowd.answer_slider(truth, &state)?;
        state.step(aggregate_responses(&answers)?)?;
    }
    Ok(state)
}
