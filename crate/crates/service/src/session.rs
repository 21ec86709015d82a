//! Session state machine. A session's state is a fold of its event log:
//! `create` produces the header event and every accepted submission appends
//! one response event, so replaying the log rebuilds the same state.

use std::collections::{BTreeMap, BTreeSet};

use crowdopt_core::guidance::{drag_co_optimize, smart_suggestions, visopt_profile, DragConfig, Suggestion};
use crowdopt_core::linesearch::{aggregate_responses, init_session, IterationRecord, OptState};
use crowdopt_core::preference_field::{
    default_kernel_width, estimate_goodness_values, fit_rbf, make_pairwise_tasks, EstimationConfig, GoodnessField,
    PairwiseComparison, PairwiseTask, DEFAULT_RIDGE,
};
use crowdopt_core::{uniform_sample, DesignPoint, DesignSpace, Goodness, Rng, SliderSpace};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::events::{Answer, Event, LogError, ModeConfig, SessionSpec};

/// Random draws for Smart Suggestions.
pub const SUGGESTION_SAMPLES: usize = 2000;
/// Suggestions returned to the designer.
pub const SUGGESTION_COUNT: usize = 9;

const SLIDER_INSTRUCTION: &str = "Please adjust the slider so that the image looks the best.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Estimate,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Photo,
    Synthetic,
}

impl Domain {
    /// Fixed dimension of the domain, if it has one.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            Self::Photo => Some(crowdopt_core::photo::EnhanceParams::DIM),
            Self::Synthetic => None,
        }
    }
}

/// Words filling the pairwise instruction template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Wording {
    pub noun: String,
    pub adjective: String,
    pub clause: String,
}

impl Default for Wording {
    fn default() -> Self {
        Self {
            noun: "a landscape photograph".into(),
            adjective: "beautiful".into(),
            clause: "which one would you rather hang on your wall".into(),
        }
    }
}

impl Wording {
    pub fn instruction(&self) -> String {
        format!(
            "Which of the two images of {} is more {}? For example, {}. Please choose the most appropriate one from the 5 options below.",
            self.noun, self.adjective, self.clause
        )
    }

    /// Option texts for Likert answers 1 through 5.
    pub fn options(&self) -> Vec<String> {
        let a = &self.adjective;
        vec![
            format!("The left image is definitely more {a} than the right image."),
            format!("The left image is slightly more {a} than the right image."),
            format!("These two images are equally {a}, or are equally not {a}."),
            format!("The right image is slightly more {a} than the left image."),
            format!("The right image is definitely more {a} than the left image."),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Sampled parameter sets `M`.
    pub samples: usize,
    pub pairs_per_task: usize,
    pub tasks: usize,
    /// Refit the field after this many new comparisons.
    pub refit_every: usize,
    pub estimation: EstimationConfig,
    /// RBF width; `0.2 * sqrt(n)` when absent.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    pub wording: Wording,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            pairs_per_task: 10,
            tasks: 200,
            refit_every: 50,
            estimation: EstimationConfig::default(),
            kernel_width: None,
            ridge: DEFAULT_RIDGE,
            wording: Wording::default(),
        }
    }
}

impl EstimateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(ServiceError::Validation("samples must be at least 2".into()));
        }
        if self.pairs_per_task == 0 || self.tasks == 0 {
            return Err(ServiceError::Validation("pairs_per_task and tasks must be at least 1".into()));
        }
        if self.refit_every == 0 {
            return Err(ServiceError::Validation("refit_every must be at least 1".into()));
        }
        if let Some(w) = self.kernel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(ServiceError::Validation(format!("kernel_width must be positive, got {w}")));
            }
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(ServiceError::Validation(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        self.estimation.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPair {
    pub left: DesignPoint,
    pub right: DesignPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MicroTask {
    Slider {
        task_id: String,
        iteration: usize,
        slider: SliderSpace,
        instruction: String,
    },
    Pairwise {
        task_id: String,
        pairs: Vec<TaskPair>,
        instruction: String,
        options: Vec<String>,
    },
}

impl MicroTask {
    pub fn id(&self) -> &str {
        match self {
            Self::Slider { task_id, .. } | Self::Pairwise { task_id, .. } => task_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Completed,
}

/// Read-only view of a session. `iteration` counts optimizer iterations in
/// optimize mode and field refits in estimate mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: String,
    pub mode: Mode,
    pub domain: Domain,
    pub n: usize,
    pub status: Status,
    pub iteration: usize,
    /// Accepted responses, late ones included.
    pub responses: usize,
    pub open_tasks: usize,
    pub best: Option<DesignPoint>,
    pub trace: Vec<IterationRecord>,
    pub comparisons: usize,
    pub pending_comparisons: usize,
    pub suggestions_available: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    /// The optimizer moved to a new iteration with this response.
    pub advanced: bool,
    /// The goodness field was refitted with this response.
    pub refitted: bool,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub values: Vec<f64>,
    /// Field range over the sampled points, for color normalization.
    pub min: f64,
    pub max: f64,
}

/// Latest fitted goodness field of an estimate session.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFit {
    pub field: GoodnessField,
    pub values: Vec<f64>,
    pub converged: bool,
    pub solver_iterations: usize,
    /// Comparisons the fit used.
    pub comparisons: usize,
    pub range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
struct OptimizeState {
    opt: OptState,
    answered: BTreeMap<String, BTreeSet<String>>,
    /// `(worker, t)` for the iteration in progress, in arrival order.
    pending: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
struct EstimateState {
    config: EstimateConfig,
    points: Vec<DesignPoint>,
    tasks: Vec<PairwiseTask>,
    answered: Vec<BTreeSet<String>>,
    comparisons: Vec<PairwiseComparison>,
    since_refit: usize,
    refits: usize,
    fit: Option<FieldFit>,
}

#[derive(Debug, Clone, PartialEq)]
enum ModeState {
    Optimize(OptimizeState),
    Estimate(EstimateState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    id: String,
    spec: SessionSpec,
    events: Vec<Event>,
    state: ModeState,
}

fn slider_task_id(iteration: usize, slot: usize) -> String {
    format!("it{iteration}-{slot}")
}

fn parse_slider_task(id: &str) -> Option<(usize, usize)> {
    let (it, slot) = id.strip_prefix("it")?.split_once('-')?;
    Some((it.parse().ok()?, slot.parse().ok()?))
}

fn pairwise_task_id(index: usize) -> String {
    format!("pw{index}")
}

fn parse_pairwise_task(id: &str) -> Option<usize> {
    id.strip_prefix("pw")?.parse().ok()
}

impl Session {
    pub fn create(id: String, spec: SessionSpec) -> Result<Self> {
        if spec.n == 0 {
            return Err(ServiceError::Validation("n must be at least 1".into()));
        }
        if let Some(d) = spec.domain.fixed_dim() {
            if spec.n != d {
                return Err(ServiceError::Validation(format!("domain requires n = {d}, got {}", spec.n)));
            }
        }
        let space = DesignSpace::new(spec.n)?;
        let root = Rng::new(spec.seed);
        let state = match &spec.config {
            ModeConfig::Optimize(cfg) => {
                cfg.validate()?;
                ModeState::Optimize(OptimizeState {
                    opt: init_session(space, cfg.clone(), root.split(0))?,
                    answered: BTreeMap::new(),
                    pending: Vec::new(),
                })
            }
            ModeConfig::Estimate(cfg) => {
                cfg.validate()?;
                let points = uniform_sample(&space, cfg.samples, &mut root.split(1))?;
                let tasks = make_pairwise_tasks(&points, cfg.pairs_per_task, cfg.tasks, &mut root.split(2))?;
                ModeState::Estimate(EstimateState {
                    config: cfg.clone(),
                    answered: vec![BTreeSet::new(); tasks.len()],
                    points,
                    tasks,
                    comparisons: Vec::new(),
                    since_refit: 0,
                    refits: 0,
                    fit: None,
                })
            }
        };
        let header = Event::Created { session: id.clone(), spec: spec.clone() };
        Ok(Self { id, spec, events: vec![header], state })
    }

    /// Rebuilds a session from a parsed log. Errors name the offending line.
    pub fn replay(events: &[(usize, Event)]) -> Result<Self, LogError> {
        let ((first_line, header), rest) = events
            .split_first()
            .ok_or_else(|| LogError { line: 1, message: "log has no events".into() })?;
        let Event::Created { session, spec } = header else {
            return Err(LogError { line: *first_line, message: "log must start with a created event".into() });
        };
        let mut s = Self::create(session.clone(), spec.clone())
            .map_err(|e| LogError { line: *first_line, message: e.to_string() })?;
        for (line, ev) in rest {
            let Event::Response { task, worker, answer } = ev else {
                return Err(LogError { line: *line, message: "duplicate created event".into() });
            };
            s.submit(task, worker, answer.clone())
                .map_err(|e| LogError { line: *line, message: e.to_string() })?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &SessionSpec {
        &self.spec
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn mode(&self) -> Mode {
        self.spec.config.mode()
    }

    pub fn optimizer(&self) -> Option<&OptState> {
        match &self.state {
            ModeState::Optimize(o) => Some(&o.opt),
            ModeState::Estimate(_) => None,
        }
    }

    pub fn field_fit(&self) -> Option<&FieldFit> {
        match &self.state {
            ModeState::Estimate(e) => e.fit.as_ref(),
            ModeState::Optimize(_) => None,
        }
    }

    /// Sampled points of an estimate session.
    pub fn samples(&self) -> Option<&[DesignPoint]> {
        match &self.state {
            ModeState::Estimate(e) => Some(&e.points),
            ModeState::Optimize(_) => None,
        }
    }

    pub fn comparisons(&self) -> &[PairwiseComparison] {
        match &self.state {
            ModeState::Estimate(e) => &e.comparisons,
            ModeState::Optimize(_) => &[],
        }
    }

    pub fn is_complete(&self) -> bool {
        match &self.state {
            ModeState::Optimize(o) => o.opt.is_complete(),
            ModeState::Estimate(e) => e.answered.iter().all(|a| !a.is_empty()),
        }
    }

    /// An open task `worker` has not answered yet, preferring the least
    /// answered one. Never changes the session.
    pub fn next_task(&self, worker: &str) -> Option<MicroTask> {
        if self.is_complete() {
            return None;
        }
        match &self.state {
            ModeState::Optimize(o) => {
                let iteration = o.opt.iteration() + 1;
                let (_, slot) = (0..o.opt.config().tasks_per_iteration)
                    .filter_map(|slot| {
                        let workers = o.answered.get(&slider_task_id(iteration, slot));
                        match workers {
                            Some(w) if w.contains(worker) => None,
                            Some(w) => Some((w.len(), slot)),
                            None => Some((0, slot)),
                        }
                    })
                    .min()?;
                Some(MicroTask::Slider {
                    task_id: slider_task_id(iteration, slot),
                    iteration,
                    slider: o.opt.slider().clone(),
                    instruction: SLIDER_INSTRUCTION.into(),
                })
            }
            ModeState::Estimate(e) => {
                let (_, k) = e
                    .answered
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| !a.contains(worker))
                    .map(|(k, a)| (a.len(), k))
                    .min()?;
                let pairs = e.tasks[k]
                    .pairs
                    .iter()
                    .map(|&(i, j)| TaskPair { left: e.points[i].clone(), right: e.points[j].clone() })
                    .collect();
                Some(MicroTask::Pairwise {
                    task_id: pairwise_task_id(k),
                    pairs,
                    instruction: e.config.wording.instruction(),
                    options: e.config.wording.options(),
                })
            }
        }
    }

    /// Validates and applies one answer, appending it to the log.
    pub fn submit(&mut self, task: &str, worker: &str, answer: Answer) -> Result<Ack> {
        if worker.is_empty() {
            return Err(ServiceError::Validation("worker id must not be empty".into()));
        }
        if self.is_complete() {
            return Err(ServiceError::Gone(format!("session {} is completed", self.id)));
        }
        let (advanced, refitted) = match &mut self.state {
            ModeState::Optimize(o) => (o.submit(task, worker, &answer)?, false),
            ModeState::Estimate(e) => (false, e.submit(task, worker, &answer)?),
        };
        self.events.push(Event::Response { task: task.into(), worker: worker.into(), answer });
        Ok(Ack { advanced, refitted, summary: self.summary() })
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary {
            id: self.id.clone(),
            mode: self.mode(),
            domain: self.spec.domain,
            n: self.spec.n,
            status: if self.is_complete() { Status::Completed } else { Status::Open },
            iteration: 0,
            responses: self.events.len() - 1,
            open_tasks: 0,
            best: None,
            trace: Vec::new(),
            comparisons: 0,
            pending_comparisons: 0,
            suggestions_available: false,
        };
        match &self.state {
            ModeState::Optimize(o) => {
                s.iteration = o.opt.iteration();
                s.best = o.opt.best_design().ok().cloned();
                s.trace = o.opt.history().to_vec();
                if !o.opt.is_complete() {
                    s.open_tasks = o.opt.config().tasks_per_iteration;
                }
            }
            ModeState::Estimate(e) => {
                s.iteration = e.refits;
                s.comparisons = e.comparisons.len();
                let open = e.answered.iter().filter(|a| a.is_empty()).count();
                s.open_tasks = open;
                s.pending_comparisons = open * e.config.pairs_per_task;
                s.suggestions_available = e.fit.is_some();
                s.best = e.fit.as_ref().map(|f| {
                    let best = (0..f.values.len()).max_by(|&a, &b| f.values[a].total_cmp(&f.values[b]).then(b.cmp(&a)));
                    e.points[best.expect("fits have at least two samples")].clone()
                });
            }
        }
        s
    }

    fn field(&self) -> Result<&FieldFit> {
        match &self.state {
            ModeState::Optimize(_) => {
                Err(ServiceError::Conflict("guidance is available for estimate-mode sessions only".into()))
            }
            ModeState::Estimate(e) => e
                .fit
                .as_ref()
                .ok_or_else(|| ServiceError::Conflict("no goodness field yet; still collecting comparisons".into())),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<DesignPoint> {
        if x.len() != self.spec.n {
            return Err(ServiceError::Validation(format!("expected {} parameters, got {}", self.spec.n, x.len())));
        }
        Ok(DesignPoint::new(x.to_vec())?)
    }

    /// Smart Suggestions from the current field; the draw depends only on
    /// the seed and the number of refits so far.
    pub fn suggestions(&self, sample_count: usize, k: usize) -> Result<Vec<Suggestion>> {
        let fit = self.field()?;
        let space = DesignSpace::new(self.spec.n)?;
        let mut rng = Rng::new(self.spec.seed).split(3 + self.summary().iteration as u64);
        Ok(smart_suggestions(&fit.field, &space, sample_count, k, &mut rng)?)
    }

    pub fn visopt(&self, current: &[f64], dim: usize, resolution: usize) -> Result<Profile> {
        let fit = self.field()?;
        let x = self.check_point(current)?;
        let values = visopt_profile(&fit.field, &x, dim, resolution)?;
        Ok(Profile { values, min: fit.range.0, max: fit.range.1 })
    }

    pub fn drag(&self, current: &[f64], dim: usize, value: f64, cfg: &DragConfig) -> Result<Suggestion> {
        let fit = self.field()?;
        let x = self.check_point(current)?;
        let params = drag_co_optimize(&fit.field, &x, dim, value, cfg)?;
        let score = fit.field.eval_raw(params.coords());
        Ok(Suggestion { params, score })
    }
}

impl OptimizeState {
    /// Returns whether the iteration advanced.
    fn submit(&mut self, task: &str, worker: &str, answer: &Answer) -> Result<bool> {
        let current = self.opt.iteration() + 1;
        let known = parse_slider_task(task)
            .filter(|&(it, slot)| it >= 1 && it <= current && slot < self.opt.config().tasks_per_iteration);
        let Some((iteration, _)) = known else {
            return Err(ServiceError::NotFound(format!("task {task}")));
        };
        let &Answer::Slider { t } = answer else {
            return Err(ServiceError::Validation(format!("task {task} expects a slider answer {{\"t\": ...}}")));
        };
        if !(0.0..=1.0).contains(&t) {
            return Err(ServiceError::Validation(format!("slider value {t} is outside [0, 1]")));
        }
        if self.answered.get(task).is_some_and(|w| w.contains(worker)) {
            return Err(ServiceError::Conflict(format!("worker {worker} already answered task {task}")));
        }
        self.answered.entry(task.to_string()).or_default().insert(worker.to_string());
        if iteration < current {
            // Late answer for an iteration that already advanced.
            return Ok(false);
        }
        self.pending.push((worker.to_string(), t));
        let distinct: BTreeSet<&str> = self.pending.iter().map(|(w, _)| w.as_str()).collect();
        if distinct.len() < self.opt.config().quorum {
            return Ok(false);
        }
        let ts: Vec<f64> = self.pending.iter().map(|&(_, t)| t).collect();
        let mut next = self.opt.clone();
        next.step(aggregate_responses(&ts)?)?;
        self.opt = next;
        self.pending.clear();
        Ok(true)
    }
}

impl EstimateState {
    /// Returns whether the field was refitted.
    fn submit(&mut self, task: &str, worker: &str, answer: &Answer) -> Result<bool> {
        let Some(k) = parse_pairwise_task(task).filter(|&k| k < self.tasks.len()) else {
            return Err(ServiceError::NotFound(format!("task {task}")));
        };
        let Answer::Pairwise { likert } = answer else {
            return Err(ServiceError::Validation(format!("task {task} expects a pairwise answer {{\"likert\": [...]}}")));
        };
        let pairs = &self.tasks[k].pairs;
        if likert.len() != pairs.len() {
            return Err(ServiceError::Validation(format!(
                "task {task} has {} pairs but {} answers were given",
                pairs.len(),
                likert.len()
            )));
        }
        if let Some(s) = likert.iter().find(|s| !(1..=5).contains(*s)) {
            return Err(ServiceError::Validation(format!("likert answer {s} is outside 1..5")));
        }
        if self.answered[k].contains(worker) {
            return Err(ServiceError::Conflict(format!("worker {worker} already answered task {task}")));
        }
        let new: Vec<PairwiseComparison> = pairs
            .iter()
            .zip(likert)
            .map(|(&(i, j), &s)| PairwiseComparison::new(i, j, s))
            .collect::<Result<_, _>>()?;
        let mut fit = None;
        let since = self.since_refit + new.len();
        let mut comparisons = self.comparisons.clone();
        comparisons.extend(new);
        let finishing = self.answered.iter().enumerate().all(|(i, a)| i == k || !a.is_empty());
        if since >= self.config.refit_every || finishing {
            fit = Some(self.fit(&comparisons)?);
        }
        self.answered[k].insert(worker.to_string());
        self.comparisons = comparisons;
        let refitted = fit.is_some();
        if let Some(f) = fit {
            self.fit = Some(f);
            self.refits += 1;
            self.since_refit = 0;
        } else {
            self.since_refit = since;
        }
        Ok(refitted)
    }

    fn fit(&self, comparisons: &[PairwiseComparison]) -> Result<FieldFit> {
        let est = estimate_goodness_values(&self.points, comparisons, &self.config.estimation)?;
        let n = self.points[0].dim();
        let width = self.config.kernel_width.unwrap_or_else(|| default_kernel_width(n));
        let values = est.values.as_slice().to_vec();
        let field = fit_rbf(&self.points, &values, width, self.config.ridge)?;
        let range = field.center_range();
        Ok(FieldFit {
            field,
            values,
            converged: est.converged,
            solver_iterations: est.iterations,
            comparisons: comparisons.len(),
            range,
        })
    }
}
